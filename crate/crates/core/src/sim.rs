//! Monte Carlo sampling of the stationary Markov chain of a polymorphism.
//!
//! Replica `r` draws from ChaCha8 seeded with `seed` on stream `r`, so each
//! path is reproducible on its own and independent of the thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::operator::operator_of;
use crate::scalar::Scalar;
use crate::semigroup::Polymorphism;

/// Conditioning states seen fewer times than this are flagged.
pub const MIN_CONDITIONING_COUNT: usize = 30;

/// Inverse-CDF sampler for one discrete distribution.
#[derive(Clone, Debug)]
struct Sampler {
    cdf: Vec<f64>,
    last: usize,
}

impl Sampler {
    fn new(probs: &[f64]) -> Self {
        let mut acc = 0.0;
        let cdf: Vec<f64> = probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        let last = probs.iter().rposition(|&p| p > 0.0).unwrap_or(0);
        Sampler { cdf, last }
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.gen();
        self.cdf.partition_point(|&c| c <= u).min(self.last)
    }
}

/// `R` stationary paths of length `L`, stored row-major.
#[derive(Clone, Debug)]
pub struct TrajectoryEnsemble<S> {
    polymorphism: Polymorphism<S>,
    length: usize,
    count: usize,
    seed: u64,
    states: Vec<u32>,
}

pub fn sample<S: Scalar>(p: &Polymorphism<S>, length: usize, count: usize, seed: u64) -> Result<TrajectoryEnsemble<S>> {
    p.require_square()?;
    if length < 2 {
        return Err(Error::InsufficientLength { length, lag: 1 });
    }
    if count == 0 {
        return Err(Error::Degenerate("ensemble needs at least one path".into()));
    }
    let initial = Sampler::new(&p.source().weights().iter().map(Scalar::to_f64).collect::<Vec<_>>());
    let kernel = p.kernel_matrix().to_f64();
    let rows: Vec<Sampler> = (0..kernel.rows()).map(|i| Sampler::new(kernel.row(i))).collect();
    let mut states = vec![0u32; length * count];
    states.par_chunks_mut(length).enumerate().for_each(|(r, path)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(r as u64);
        let mut x = initial.draw(&mut rng);
        path[0] = x as u32;
        for slot in path.iter_mut().skip(1) {
            x = rows[x].draw(&mut rng);
            *slot = x as u32;
        }
    });
    Ok(TrajectoryEnsemble {
        polymorphism: p.clone(),
        length,
        count,
        seed,
        states,
    })
}

impl<S: Scalar> TrajectoryEnsemble<S> {
    pub fn polymorphism(&self) -> &Polymorphism<S> {
        &self.polymorphism
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn path(&self, r: usize) -> &[u32] {
        &self.states[r * self.length..(r + 1) * self.length]
    }

    pub fn paths(&self) -> impl Iterator<Item = &[u32]> {
        self.states.chunks(self.length)
    }

    pub fn state(&self, r: usize, t: usize) -> usize {
        self.states[r * self.length + t] as usize
    }

    /// Empirical distribution of `ξ_t` across replicas.
    pub fn marginal(&self, t: usize) -> Vec<f64> {
        let mut counts = vec![0usize; self.polymorphism.size()];
        for path in self.paths() {
            counts[path[t] as usize] += 1;
        }
        counts.into_iter().map(|c| c as f64 / self.count as f64).collect()
    }

    /// Largest deviation of any time marginal from `mu`, in units of the
    /// binomial standard error `sqrt(mu_i (1 - mu_i) / R)`.
    pub fn marginal_deviation(&self) -> f64 {
        let mu: Vec<f64> = self.polymorphism.source().weights().iter().map(Scalar::to_f64).collect();
        let r = self.count as f64;
        (0..self.length)
            .flat_map(|t| {
                let emp = self.marginal(t);
                mu.iter()
                    .zip(emp)
                    .map(|(m, e)| {
                        let se = (m * (1.0 - m) / r).sqrt();
                        if se == 0.0 {
                            if (e - m).abs() > 0.0 {
                                f64::INFINITY
                            } else {
                                0.0
                            }
                        } else {
                            (e - m).abs() / se
                        }
                    })
                    .collect::<Vec<_>>()
            })
            .fold(0.0, f64::max)
    }

    /// Counts of observed transitions `i -> j` over all paths and times.
    pub fn transition_counts(&self) -> Vec<Vec<usize>> {
        let m = self.polymorphism.size();
        let mut counts = vec![vec![0usize; m]; m];
        for path in self.paths() {
            for w in path.windows(2) {
                counts[w[0] as usize][w[1] as usize] += 1;
            }
        }
        counts
    }

    /// One path per row, atom indices separated by commas.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.states.len() * 3);
        for path in self.paths() {
            let row: Vec<String> = path.iter().map(u32::to_string).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DilationReport {
    pub lag: usize,
    /// Mean of `f(ξ_n) g(ξ_0)` over the replicas.
    pub empirical: f64,
    /// `<W^n f, g>`.
    pub exact: f64,
    pub standard_error: f64,
    pub passed: bool,
}

/// Compares the empirical correlation `E[f(ξ_n) g(ξ_0)]` with `<W^n f, g>`;
/// passes within four standard errors.
pub fn dilation_check<S: Scalar>(ens: &TrajectoryEnsemble<S>, f: &[f64], g: &[f64], n: usize) -> Result<DilationReport> {
    let m = ens.polymorphism.size();
    if f.len() != m || g.len() != m {
        return Err(Error::Dimension(format!("functions must have {m} values")));
    }
    if n >= ens.length {
        return Err(Error::InsufficientLength {
            length: ens.length,
            lag: n,
        });
    }
    let w = operator_of(&ens.polymorphism)?;
    let mut wf: Vec<S> = f.iter().map(|&v| S::from_f64(v)).collect();
    for _ in 0..n {
        wf = w.apply(&wf);
    }
    let gs: Vec<S> = g.iter().map(|&v| S::from_f64(v)).collect();
    let exact = ens.polymorphism.source().inner(&wf, &gs).to_f64();

    let samples: Vec<f64> = ens.paths().map(|p| f[p[n] as usize] * g[p[0] as usize]).collect();
    let r = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / r;
    let var = if samples.len() > 1 {
        samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (r - 1.0)
    } else {
        0.0
    };
    let standard_error = (var / r).sqrt();
    Ok(DilationReport {
        lag: n,
        empirical: mean,
        exact,
        standard_error,
        passed: (mean - exact).abs() <= 4.0 * standard_error + 1e-12,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TailProbeReport {
    pub lag: usize,
    pub target: Vec<usize>,
    /// Number of paths with `ξ_{L-1-n} = x`, per state `x`.
    pub counts: Vec<usize>,
    /// Empirical `Pr{ξ_{L-1} ∈ a | ξ_{L-1-n} = x}`; `None` for unseen states.
    pub conditional: Vec<Option<f64>>,
    /// States seen fewer than [`MIN_CONDITIONING_COUNT`] times.
    pub undersampled: Vec<usize>,
    /// Largest gap between conditional probabilities of two seen states.
    pub tv: f64,
    /// Standard error of the gap for the maximising pair.
    pub standard_error: f64,
    /// The same gap computed from `P^n`.
    pub exact_tv: f64,
    /// Second-largest eigenvalue modulus of the kernel.
    pub rate: f64,
    pub passed: bool,
}

/// Estimates how much `ξ_{L-1}` still depends on `ξ_{L-1-n}` through the
/// event `ξ_{L-1} ∈ target`.
pub fn empirical_tail_probe<S: Scalar>(ens: &TrajectoryEnsemble<S>, n: usize, target: &[usize]) -> Result<TailProbeReport> {
    let m = ens.polymorphism.size();
    if n >= ens.length {
        return Err(Error::InsufficientLength {
            length: ens.length,
            lag: n,
        });
    }
    if let Some(&bad) = target.iter().find(|&&a| a >= m) {
        return Err(Error::Dimension(format!("target atom {bad} outside 0..{m}")));
    }
    let mut in_target = vec![false; m];
    for &a in target {
        in_target[a] = true;
    }
    let end = ens.length - 1;
    let start = end - n;
    let mut counts = vec![0usize; m];
    let mut hits = vec![0usize; m];
    for path in ens.paths() {
        let x = path[start] as usize;
        counts[x] += 1;
        if in_target[path[end] as usize] {
            hits[x] += 1;
        }
    }
    let conditional: Vec<Option<f64>> = counts
        .iter()
        .zip(&hits)
        .map(|(&c, &h)| (c > 0).then(|| h as f64 / c as f64))
        .collect();
    let undersampled: Vec<usize> = (0..m).filter(|&x| counts[x] < MIN_CONDITIONING_COUNT).collect();

    let seen: Vec<usize> = (0..m).filter(|&x| counts[x] > 0).collect();
    let mut tv = 0.0;
    let mut standard_error = 0.0;
    for (k, &x) in seen.iter().enumerate() {
        for &y in &seen[k + 1..] {
            let (px, py) = (conditional[x].unwrap_or(0.0), conditional[y].unwrap_or(0.0));
            let gap = (px - py).abs();
            if gap >= tv {
                tv = gap;
                standard_error =
                    (px * (1.0 - px) / counts[x] as f64 + py * (1.0 - py) / counts[y] as f64).sqrt();
            }
        }
    }

    let w = operator_of(&ens.polymorphism)?;
    let mut indicator: Vec<S> = in_target.iter().map(|&b| if b { S::one() } else { S::zero() }).collect();
    for _ in 0..n {
        indicator = w.apply(&indicator);
    }
    let exact: Vec<f64> = indicator.iter().map(Scalar::to_f64).collect();
    let mut exact_tv: f64 = 0.0;
    for (k, &x) in seen.iter().enumerate() {
        for &y in &seen[k + 1..] {
            exact_tv = exact_tv.max((exact[x] - exact[y]).abs());
        }
    }

    Ok(TailProbeReport {
        lag: n,
        target: target.to_vec(),
        counts,
        conditional,
        undersampled,
        passed: (tv - exact_tv).abs() <= 4.0 * standard_error + 1e-12,
        tv,
        standard_error,
        exact_tv,
        rate: w.restricted_spectral_radius(),
    })
}
