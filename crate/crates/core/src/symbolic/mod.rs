//! Perturbed Bernoulli shifts on finite coordinate windows.
//!
//! A configuration on the window `[lo, hi]` is stored as a base-`A` code
//! whose least significant digit is coordinate `lo`. All kernels map a window
//! to itself. The shift `(Tx)_j = x_{j-1}` needs a symbol entering at `lo`;
//! it is drawn from the Bernoulli weights `p` (the inverse shift refills at
//! `hi` the same way).
//!
//! Kernel chains are written in application order: `[Shift, Phi(0)]` means
//! shift first, then resample site 0. In product notation this is `Φ·T`.

mod kernel;
mod quasisim;

pub use kernel::{
    inverse_shift_kernel, phi_kernel, pi_kernel, shift_kernel, Dist, KernelChain, Step, WindowKernel,
    WindowMeasure,
};
pub use quasisim::{
    chain_forgetting, intertwining_site_profile, lambda_density_check, lambda_truncation,
    quasi_determinism_diagnostic, verify_intertwining, DensityReport, IntertwiningReport,
    LambdaTruncation, QuasiDeterminismReport,
};

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::{from_reprs, sum, to_reprs, Scalar, ScalarRepr, Tolerance};

pub const MAX_ALPHABET: usize = 4;
pub const MAX_WINDOW: usize = 14;

/// Bernoulli weights `p` and a single-site perturbation `q(b|a)` that keeps
/// `p` stationary.
#[derive(Clone, Debug, PartialEq)]
pub struct SymbolicSystem<S> {
    p: Vec<S>,
    q: Matrix<S>,
}

impl<S: Scalar> SymbolicSystem<S> {
    pub fn new(p: Vec<S>, q: Matrix<S>, tol: Tolerance) -> Result<Self> {
        let a = p.len();
        if !(2..=MAX_ALPHABET).contains(&a) {
            return Err(Error::InvalidSystem(format!("alphabet size must be 2..={MAX_ALPHABET}, got {a}")));
        }
        if q.rows() != a || q.cols() != a {
            return Err(Error::InvalidSystem(format!("q is {}x{} for alphabet {a}", q.rows(), q.cols())));
        }
        if p.iter().any(|x| *x <= S::zero()) || !sum(&p).approx_eq(&S::one(), tol) {
            return Err(Error::InvalidSystem("p must be positive and sum to 1".into()));
        }
        if q.entries().iter().any(|x| *x < S::zero()) {
            return Err(Error::InvalidSystem("q has a negative entry".into()));
        }
        for (i, s) in q.row_sums().iter().enumerate() {
            if !s.approx_eq(&S::one(), tol) {
                return Err(Error::InvalidSystem(format!("row {i} of q sums to {}", s.render())));
            }
        }
        for b in 0..a {
            let mass = (0..a).fold(S::zero(), |acc, x| acc + p[x].clone() * q[(x, b)].clone());
            if !mass.approx_eq(&p[b], tol) {
                return Err(Error::InvalidSystem(format!(
                    "p is not stationary for q at symbol {b}: {} != {}",
                    mass.render(),
                    p[b].render()
                )));
            }
        }
        Ok(SymbolicSystem { p, q })
    }

    /// Two symbols, uniform weights, each symbol flipped with probability `eps`.
    pub fn epsilon_flip(eps: S) -> Result<Self> {
        let stay = S::one() - eps.clone();
        let q = Matrix::from_rows(vec![vec![stay.clone(), eps.clone()], vec![eps, stay]])?;
        Self::new(vec![S::from_ratio(1, 2); 2], q, Tolerance::default())
    }

    /// Unperturbed shift over the given weights.
    pub fn unperturbed(p: Vec<S>) -> Result<Self> {
        let a = p.len();
        Self::new(p, Matrix::identity(a), Tolerance::default())
    }

    pub fn alphabet(&self) -> usize {
        self.p.len()
    }

    pub fn p(&self) -> &[S] {
        &self.p
    }

    pub fn q(&self) -> &Matrix<S> {
        &self.q
    }

    /// Joint matrix `p_a q(b|a)`; its determinant is `det(q) prod p_a`.
    pub fn joint(&self) -> Matrix<S> {
        let a = self.alphabet();
        Matrix::from_fn(a, a, |x, y| self.p[x].clone() * self.q[(x, y)].clone())
    }

    pub fn site_determinant(&self) -> S {
        self.q.determinant()
    }

    pub fn is_nonsingular(&self) -> bool {
        !self.site_determinant().is_zero()
    }

    /// Time reversal of the perturbation: `q*(b|a) = p_b q(a|b) / p_a`.
    pub fn conjugate(&self) -> Self {
        let a = self.alphabet();
        let q = Matrix::from_fn(a, a, |x, y| {
            self.p[y].clone() * self.q[(y, x)].clone() / self.p[x].clone()
        });
        SymbolicSystem { p: self.p.clone(), q }
    }

    pub fn convert<T: Scalar>(&self) -> SymbolicSystem<T> {
        SymbolicSystem {
            p: self.p.iter().map(|x| T::from_rational(&x.to_rational())).collect(),
            q: self.q.convert(),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SystemRepr {
    alphabet: usize,
    p: Vec<ScalarRepr>,
    q: Vec<Vec<ScalarRepr>>,
}

impl<S: Scalar> Serialize for SymbolicSystem<S> {
    fn serialize<Z: Serializer>(&self, s: Z) -> std::result::Result<Z::Ok, Z::Error> {
        SystemRepr {
            alphabet: self.alphabet(),
            p: to_reprs(&self.p),
            q: self.q.to_reprs(),
        }
        .serialize(s)
    }
}

impl<'de, S: Scalar> Deserialize<'de> for SymbolicSystem<S> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = SystemRepr::deserialize(d)?;
        if raw.p.len() != raw.alphabet {
            return Err(D::Error::custom(format!(
                "alphabet is {} but p has {} weights",
                raw.alphabet,
                raw.p.len()
            )));
        }
        let p = from_reprs(&raw.p).map_err(D::Error::custom)?;
        let q = Matrix::from_reprs(&raw.q).map_err(D::Error::custom)?;
        SymbolicSystem::new(p, q, Tolerance::default()).map_err(D::Error::custom)
    }
}

/// Inclusive coordinate range `[lo, hi]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Window {
    pub lo: i32,
    pub hi: i32,
}

impl Window {
    pub fn new(lo: i32, hi: i32) -> Result<Self> {
        if hi < lo {
            return Err(Error::InvalidSystem(format!("empty window {lo}..={hi}")));
        }
        if (hi - lo + 1) as usize > MAX_WINDOW {
            return Err(Error::InvalidSystem(format!(
                "window {lo}..={hi} has more than {MAX_WINDOW} sites"
            )));
        }
        Ok(Window { lo, hi })
    }

    pub fn len(&self) -> usize {
        (self.hi - self.lo + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, site: i32) -> bool {
        self.lo <= site && site <= self.hi
    }

    pub fn sites(&self) -> impl Iterator<Item = i32> {
        self.lo..=self.hi
    }

    pub fn require(&self, need_lo: i32, need_hi: i32) -> Result<()> {
        if self.lo <= need_lo && need_hi <= self.hi {
            Ok(())
        } else {
            Err(Error::WindowTooSmall {
                lo: self.lo,
                hi: self.hi,
                need_lo,
                need_hi,
            })
        }
    }

    pub fn require_site(&self, site: i32) -> Result<()> {
        if self.contains(site) {
            Ok(())
        } else {
            Err(Error::SiteOutsideWindow {
                site,
                lo: self.lo,
                hi: self.hi,
            })
        }
    }

    /// Number of configurations, `A^len`.
    pub fn size(&self, alphabet: usize) -> u64 {
        (alphabet as u64).pow(self.len() as u32)
    }
}

/// Digit codec for configurations on a window.
#[derive(Clone, Copy, Debug)]
pub struct Codec {
    pub window: Window,
    pub alphabet: u64,
}

impl Codec {
    pub fn new(window: Window, alphabet: usize) -> Self {
        Codec {
            window,
            alphabet: alphabet as u64,
        }
    }

    pub fn size(&self) -> u64 {
        self.alphabet.pow(self.window.len() as u32)
    }

    fn place(&self, site: i32) -> u64 {
        self.alphabet.pow((site - self.window.lo) as u32)
    }

    pub fn get(&self, code: u64, site: i32) -> usize {
        ((code / self.place(site)) % self.alphabet) as usize
    }

    pub fn set(&self, code: u64, site: i32, symbol: usize) -> u64 {
        let place = self.place(site);
        code - (code / place % self.alphabet) * place + symbol as u64 * place
    }

    pub fn encode(&self, symbols: &[usize]) -> u64 {
        symbols
            .iter()
            .rev()
            .fold(0u64, |acc, &s| acc * self.alphabet + s as u64)
    }

    /// Symbols in window order, `lo` first.
    pub fn decode(&self, code: u64) -> Vec<usize> {
        self.window.sites().map(|j| self.get(code, j)).collect()
    }

    /// Code of the restriction to `sites` (first site least significant).
    pub fn project(&self, code: u64, sites: &[i32]) -> u64 {
        sites
            .iter()
            .rev()
            .fold(0u64, |acc, &j| acc * self.alphabet + self.get(code, j) as u64)
    }
}
