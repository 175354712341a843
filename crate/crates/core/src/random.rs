//! Random exact instances for tests, benchmarks and property checks.

use num_traits::Zero;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::matrix::Matrix;
use crate::measure::FiniteSpace;
use crate::scalar::{q, Rational, Scalar};
use crate::semigroup::Polymorphism;

/// Weights `w_i / sum w` with integer `w_i` in `1..=9`.
pub fn random_space<R: Rng>(rng: &mut R, m: usize) -> FiniteSpace<Rational> {
    let w: Vec<i64> = (0..m).map(|_| rng.gen_range(1..=9)).collect();
    let total: i64 = w.iter().sum();
    FiniteSpace::new(w.into_iter().map(|x| q(x, total)).collect()).expect("positive weights")
}

/// A rational coupling of `source` and `target`. Each cell is visited with
/// probability `density` and receives a random fraction of the mass both of
/// its marginals still lack; a north-west corner pass settles the rest.
pub fn random_coupling<R: Rng>(
    rng: &mut R,
    source: &FiniteSpace<Rational>,
    target: &FiniteSpace<Rational>,
    density: f64,
) -> Polymorphism<Rational> {
    let (m, n) = (source.len(), target.len());
    let mut rows = source.weights().to_vec();
    let mut cols = target.weights().to_vec();
    let mut nu: Matrix<Rational> = Matrix::zeros(m, n);
    let mut cells: Vec<(usize, usize)> = (0..m).flat_map(|i| (0..n).map(move |j| (i, j))).collect();
    cells.shuffle(rng);
    for (i, j) in cells {
        if !rng.gen_bool(density.clamp(0.0, 1.0)) {
            continue;
        }
        let room = if rows[i] < cols[j] { rows[i].clone() } else { cols[j].clone() };
        let x = room * q(rng.gen_range(1..=4), 4);
        rows[i] -= &x;
        cols[j] -= &x;
        nu[(i, j)] += x;
    }
    let (mut i, mut j) = (0, 0);
    while i < m && j < n {
        let x = if rows[i] < cols[j] { rows[i].clone() } else { cols[j].clone() };
        rows[i] -= &x;
        cols[j] -= &x;
        nu[(i, j)] += x;
        if rows[i].is_zero() {
            i += 1;
        } else {
            j += 1;
        }
    }
    Polymorphism::new(source.clone(), target.clone(), nu).expect("coupling has the requested marginals")
}

/// Random space with `m` atoms and a random self-coupling.
pub fn random_polymorphism<R: Rng>(rng: &mut R, m: usize) -> Polymorphism<Rational> {
    let space = random_space(rng, m);
    let density = rng.gen_range(0.1..1.0);
    random_coupling(rng, &space, &space, density)
}

/// Convex combination of `k` random permutations with random positive
/// weights, on the uniform space.
pub fn random_permutation_mixture<R: Rng>(rng: &mut R, m: usize, k: usize) -> Polymorphism<Rational> {
    let weights: Vec<i64> = (0..k).map(|_| rng.gen_range(1..=5)).collect();
    let total: i64 = weights.iter().sum::<i64>() * m as i64;
    let mut nu: Matrix<Rational> = Matrix::zeros(m, m);
    let mut perm: Vec<usize> = (0..m).collect();
    for w in weights {
        perm.shuffle(rng);
        for (i, &j) in perm.iter().enumerate() {
            nu[(i, j)] += q(w, total);
        }
    }
    let space = FiniteSpace::uniform(m);
    Polymorphism::new(space.clone(), space, nu).expect("mixture of permutations is bistochastic")
}

fn permutations(m: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut perm: Vec<usize> = (0..m).collect();
    fn rec(k: usize, perm: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k == perm.len() {
            out.push(perm.clone());
            return;
        }
        for i in k..perm.len() {
            perm.swap(k, i);
            rec(k + 1, perm, out);
            perm.swap(k, i);
        }
    }
    rec(0, &mut perm, &mut out);
    out
}

/// Every 0/1 pattern on `m x m` cells that is the support of some doubly
/// stochastic matrix, each filled with the uniform average of the
/// permutation matrices it contains. Bits are row-major, cell `(i, j)` at
/// bit `i * m + j`.
pub fn support_patterns(m: usize) -> Vec<(u64, Polymorphism<Rational>)> {
    assert!(m * m < 64, "pattern does not fit in 64 bits");
    let perms = permutations(m);
    let masks: Vec<u64> = perms
        .iter()
        .map(|p| p.iter().enumerate().fold(0u64, |acc, (i, &j)| acc | 1 << (i * m + j)))
        .collect();
    let space = FiniteSpace::uniform(m);
    (1u64..1 << (m * m))
        .filter_map(|pattern| {
            let inside: Vec<usize> = (0..perms.len()).filter(|&k| masks[k] & !pattern == 0).collect();
            let cover = inside.iter().fold(0u64, |acc, &k| acc | masks[k]);
            if inside.is_empty() || cover != pattern {
                return None;
            }
            let share = q(1, (inside.len() * m) as i64);
            let mut nu: Matrix<Rational> = Matrix::zeros(m, m);
            for &k in &inside {
                for (i, &j) in perms[k].iter().enumerate() {
                    nu[(i, j)] += share.clone();
                }
            }
            Some((pattern, Polymorphism::new(space.clone(), space.clone(), nu).expect("bistochastic")))
        })
        .collect()
}

/// Random function with values `k / 8`, `k` in `-8..=8`.
pub fn random_function<R: Rng, S: Scalar>(rng: &mut R, m: usize) -> Vec<S> {
    (0..m).map(|_| S::from_ratio(rng.gen_range(-8..=8), 8)).collect()
}
