//! Window measures, elementary steps and kernels.

use rayon::prelude::*;

use super::{Codec, SymbolicSystem, Window};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::{sum, Scalar};

/// Probability table over configurations of a window.
#[derive(Clone, Debug, PartialEq)]
pub struct WindowMeasure<S> {
    window: Window,
    alphabet: usize,
    table: Vec<S>,
}

impl<S: Scalar> WindowMeasure<S> {
    pub fn bernoulli(sys: &SymbolicSystem<S>, window: Window) -> Self {
        let codec = Codec::new(window, sys.alphabet());
        let table = (0..codec.size())
            .into_par_iter()
            .map(|code| {
                window
                    .sites()
                    .fold(S::one(), |acc, j| acc * sys.p()[codec.get(code, j)].clone())
            })
            .collect();
        WindowMeasure {
            window,
            alphabet: sys.alphabet(),
            table,
        }
    }

    pub fn window(&self) -> Window {
        self.window
    }

    pub fn table(&self) -> &[S] {
        &self.table
    }

    pub fn mass(&self, code: u64) -> &S {
        &self.table[code as usize]
    }

    pub fn total(&self) -> S {
        sum(&self.table)
    }

    /// Marginal on a sub-window.
    pub fn marginalize(&self, sub: Window) -> Result<Self> {
        self.window.require(sub.lo, sub.hi)?;
        let codec = Codec::new(self.window, self.alphabet);
        let out_codec = Codec::new(sub, self.alphabet);
        let sites: Vec<i32> = sub.sites().collect();
        let mut table = vec![S::zero(); out_codec.size() as usize];
        for (code, m) in self.table.iter().enumerate() {
            let k = codec.project(code as u64, &sites) as usize;
            table[k] = table[k].clone() + m.clone();
        }
        Ok(WindowMeasure {
            window: sub,
            alphabet: self.alphabet,
            table,
        })
    }

    /// Image of the measure under a kernel on the same window.
    pub fn push(&self, kernel: &WindowKernel<S>) -> Result<Self> {
        if kernel.window != self.window {
            return Err(Error::Dimension("kernel and measure live on different windows".into()));
        }
        let mut table = vec![S::zero(); self.table.len()];
        for (x, m) in self.table.iter().enumerate() {
            if m.is_zero() {
                continue;
            }
            for (y, k) in &kernel.rows[x] {
                table[*y as usize] = table[*y as usize].clone() + m.clone() * k.clone();
            }
        }
        Ok(WindowMeasure {
            window: self.window,
            alphabet: self.alphabet,
            table,
        })
    }
}

/// One elementary transformation of window configurations.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Step {
    /// `(Tx)_j = x_{j-1}`; a fresh symbol enters at `lo`.
    Shift,
    /// `(T^{-1}x)_j = x_{j+1}`; a fresh symbol enters at `hi`.
    InverseShift,
    /// Resample one site by `q(.|current symbol)`.
    Phi(i32),
}

/// Finitely supported distribution over codes, kept sorted by code.
pub type Dist<S> = Vec<(u64, S)>;

/// Product measure on a window, as one marginal per site (`lo` first).
pub type Product<S> = Vec<Vec<S>>;

fn normalize<S: Scalar>(mut d: Dist<S>) -> Dist<S> {
    d.sort_unstable_by_key(|e| e.0);
    let mut out: Dist<S> = Vec::with_capacity(d.len());
    for (c, w) in d {
        match out.last_mut() {
            Some((lc, lw)) if *lc == c => *lw = lw.clone() + w,
            _ => out.push((c, w)),
        }
    }
    out.retain(|e| !e.1.is_zero());
    out
}

/// Composition of steps, applied left to right, evaluated lazily one input
/// configuration at a time.
#[derive(Clone, Debug)]
pub struct KernelChain<'a, S> {
    sys: &'a SymbolicSystem<S>,
    codec: Codec,
    steps: Vec<Step>,
}

impl<'a, S: Scalar> KernelChain<'a, S> {
    pub fn new(sys: &'a SymbolicSystem<S>, window: Window, steps: Vec<Step>) -> Result<Self> {
        for s in &steps {
            if let Step::Phi(site) = s {
                window.require_site(*site)?;
            }
        }
        Ok(KernelChain {
            sys,
            codec: Codec::new(window, sys.alphabet()),
            steps,
        })
    }

    pub fn window(&self) -> Window {
        self.codec.window
    }

    pub fn codec(&self) -> Codec {
        self.codec
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    /// Distribution of the output given one input configuration.
    pub fn push(&self, code: u64) -> Dist<S> {
        let mut dist: Dist<S> = vec![(code, S::one())];
        for step in &self.steps {
            let mut next = Vec::with_capacity(dist.len() * self.sys.alphabet());
            for (c, w) in &dist {
                self.apply(*step, *c, w, &mut next);
            }
            dist = normalize(next);
        }
        dist
    }

    /// The same law as [`KernelChain::push`], as a product of site
    /// marginals. Every step maps product measures to product measures.
    pub fn push_product(&self, code: u64) -> Product<S> {
        let a = self.sys.alphabet();
        let point = |s: usize| (0..a).map(|b| if b == s { S::one() } else { S::zero() }).collect::<Vec<S>>();
        let mut sites: Product<S> = self.codec.decode(code).into_iter().map(point).collect();
        let lo = self.codec.window.lo;
        for step in &self.steps {
            match *step {
                Step::Shift => {
                    sites.pop();
                    sites.insert(0, self.sys.p().to_vec());
                }
                Step::InverseShift => {
                    sites.remove(0);
                    sites.push(self.sys.p().to_vec());
                }
                Step::Phi(site) => {
                    let m = &mut sites[(site - lo) as usize];
                    *m = (0..a)
                        .map(|b| {
                            (0..a).fold(S::zero(), |acc, x| acc + m[x].clone() * self.sys.q()[(x, b)].clone())
                        })
                        .collect();
                }
            }
        }
        sites
    }

    fn apply(&self, step: Step, code: u64, w: &S, out: &mut Dist<S>) {
        let a = self.codec.alphabet;
        let size = self.codec.size();
        match step {
            Step::Shift => {
                let base = (code * a) % size;
                for (c, pc) in self.sys.p().iter().enumerate() {
                    out.push((base + c as u64, w.clone() * pc.clone()));
                }
            }
            Step::InverseShift => {
                let base = code / a;
                let top = size / a;
                for (c, pc) in self.sys.p().iter().enumerate() {
                    out.push((base + c as u64 * top, w.clone() * pc.clone()));
                }
            }
            Step::Phi(site) => {
                let cur = self.codec.get(code, site);
                for b in 0..self.sys.alphabet() {
                    let qb = &self.sys.q()[(cur, b)];
                    if !qb.is_zero() {
                        out.push((self.codec.set(code, site, b), w.clone() * qb.clone()));
                    }
                }
            }
        }
    }

    pub fn materialize(&self) -> WindowKernel<S> {
        let rows = (0..self.codec.size()).into_par_iter().map(|x| self.push(x)).collect();
        WindowKernel {
            window: self.codec.window,
            alphabet: self.sys.alphabet(),
            rows,
        }
    }
}

/// Materialised conditional table `K(y | x)` on one window, one sparse row
/// per input configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct WindowKernel<S> {
    window: Window,
    alphabet: usize,
    rows: Vec<Dist<S>>,
}

impl<S: Scalar> WindowKernel<S> {
    pub fn window(&self) -> Window {
        self.window
    }

    pub fn row(&self, code: u64) -> &[(u64, S)] {
        &self.rows[code as usize]
    }

    pub fn prob(&self, x: u64, y: u64) -> S {
        self.rows[x as usize]
            .binary_search_by_key(&y, |e| e.0)
            .map(|i| self.rows[x as usize][i].1.clone())
            .unwrap_or_else(|_| S::zero())
    }

    pub fn rows_sum_to_one(&self) -> bool {
        self.rows
            .iter()
            .all(|r| r.iter().fold(S::zero(), |acc, e| acc + e.1.clone()).is_one())
    }

    /// `self` first, then `next`.
    pub fn then(&self, next: &WindowKernel<S>) -> Result<Self> {
        if self.window != next.window {
            return Err(Error::Dimension("kernels live on different windows".into()));
        }
        let rows = self
            .rows
            .par_iter()
            .map(|r| {
                let mut acc = Vec::new();
                for (mid, w) in r {
                    for (y, k) in &next.rows[*mid as usize] {
                        acc.push((*y, w.clone() * k.clone()));
                    }
                }
                normalize(acc)
            })
            .collect();
        Ok(WindowKernel {
            window: self.window,
            alphabet: self.alphabet,
            rows,
        })
    }

    /// Dense transition matrix (rows = inputs). Only for small windows.
    pub fn to_matrix(&self) -> Matrix<S> {
        let n = self.rows.len();
        let mut m = Matrix::zeros(n, n);
        for (x, r) in self.rows.iter().enumerate() {
            for (y, k) in r {
                m[(x, *y as usize)] = k.clone();
            }
        }
        m
    }
}

pub fn shift_kernel<S: Scalar>(sys: &SymbolicSystem<S>, window: Window) -> WindowKernel<S> {
    KernelChain::new(sys, window, vec![Step::Shift])
        .expect("shift has no site")
        .materialize()
}

pub fn inverse_shift_kernel<S: Scalar>(sys: &SymbolicSystem<S>, window: Window) -> WindowKernel<S> {
    KernelChain::new(sys, window, vec![Step::InverseShift])
        .expect("inverse shift has no site")
        .materialize()
}

pub fn phi_kernel<S: Scalar>(sys: &SymbolicSystem<S>, window: Window, site: i32) -> Result<WindowKernel<S>> {
    Ok(KernelChain::new(sys, window, vec![Step::Phi(site)])?.materialize())
}

/// One step of the perturbed shift: shift, then resample site 0.
pub fn pi_kernel<S: Scalar>(sys: &SymbolicSystem<S>, window: Window) -> Result<WindowKernel<S>> {
    window.require(0, 0)?;
    Ok(KernelChain::new(sys, window, vec![Step::Shift, Step::Phi(0)])?.materialize())
}
