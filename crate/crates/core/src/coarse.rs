//! Dyadic coarse-graining of measure-preserving maps and correspondences.
//!
//! A map of the circle `[0, 1)` is given by affine pieces `x -> s x + c mod 1`.
//! At resolution `k` the circle is cut into `N = 2^k` cells
//! `C_i = [i/N, (i+1)/N)` and `nu_ij = Leb(C_i ∩ S^{-1} C_j)` is computed
//! exactly by interval arithmetic. Multivalued maps (correspondences) are
//! weighted sums of branches.

use std::fmt;
use std::str::FromStr;

use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::measure::{FiniteSpace, Partition};
use crate::scalar::{q, Rational, Scalar, Tolerance};
use crate::semigroup::Polymorphism;

/// Largest supported 1D resolution exponent.
pub const MAX_RESOLUTION: u32 = 14;

/// `x -> slope * x + offset (mod 1)` on `[lo, hi)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AffinePiece {
    pub lo: Rational,
    pub hi: Rational,
    pub slope: Rational,
    pub offset: Rational,
}

impl AffinePiece {
    pub fn new(lo: Rational, hi: Rational, slope: Rational, offset: Rational) -> Self {
        AffinePiece { lo, hi, slope, offset }
    }

    /// A piece defined on the whole circle.
    pub fn full(slope: Rational, offset: Rational) -> Self {
        AffinePiece::new(q(0, 1), q(1, 1), slope, offset)
    }
}

/// A branch taken with probability `weight`.
type Branch = (Rational, AffinePiece);

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PiecewiseAffineMap {
    name: String,
    pieces: Vec<AffinePiece>,
}

impl PiecewiseAffineMap {
    /// Pieces must tile `[0, 1)` and the map must preserve Lebesgue measure.
    pub fn new(name: impl Into<String>, mut pieces: Vec<AffinePiece>) -> Result<Self> {
        pieces.sort_by(|a, b| a.lo.cmp(&b.lo));
        let mut at = q(0, 1);
        for p in &pieces {
            if p.lo != at || p.hi <= p.lo {
                return Err(Error::InvalidMap(format!(
                    "pieces must tile [0,1); gap or overlap at {}",
                    at.render()
                )));
            }
            if p.slope.is_zero() {
                return Err(Error::InvalidMap("zero slope".into()));
            }
            at = p.hi.clone();
        }
        if at != q(1, 1) {
            return Err(Error::InvalidMap(format!("pieces end at {}, not 1", at.render())));
        }
        let branches: Vec<Branch> = pieces.iter().map(|p| (q(1, 1), p.clone())).collect();
        check_preserves_lebesgue(&branches)?;
        Ok(PiecewiseAffineMap {
            name: name.into(),
            pieces,
        })
    }

    pub fn doubling() -> Self {
        Self::new("doubling", vec![AffinePiece::full(q(2, 1), q(0, 1))]).expect("doubling map is valid")
    }

    pub fn identity() -> Self {
        Self::new("identity", vec![AffinePiece::full(q(1, 1), q(0, 1))]).expect("identity is valid")
    }

    /// Rotation by the rational angle `p/q`.
    pub fn rotation(angle: Rational) -> Self {
        let name = format!("rotation {}", angle.render());
        Self::new(name, vec![AffinePiece::full(q(1, 1), angle)]).expect("rotations are valid")
    }

    pub fn tent() -> Self {
        Self::new(
            "tent",
            vec![
                AffinePiece::new(q(0, 1), q(1, 2), q(2, 1), q(0, 1)),
                AffinePiece::new(q(1, 2), q(1, 1), q(-2, 1), q(2, 1)),
            ],
        )
        .expect("tent map is valid")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn pieces(&self) -> &[AffinePiece] {
        &self.pieces
    }

    fn branches(&self) -> Vec<Branch> {
        self.pieces.iter().map(|p| (q(1, 1), p.clone())).collect()
    }
}

/// The curve `u^n = v^m` on the torus, read as a multivalued map of the
/// circle with `m` forward branches `(n x + k)/m` of weight `1/m` and `n`
/// inverse branches `(m y + r)/n` of weight `1/n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CircleCorrespondence {
    pub n: u32,
    pub m: u32,
}

impl CircleCorrespondence {
    pub fn new(n: u32, m: u32) -> Result<Self> {
        if n == 0 || m == 0 {
            return Err(Error::InvalidMap("correspondence exponents must be >= 1".into()));
        }
        Ok(CircleCorrespondence { n, m })
    }

    pub fn forward_branches(&self) -> Vec<Branch> {
        let (n, m) = (i64::from(self.n), i64::from(self.m));
        (0..m)
            .map(|k| (q(1, m), AffinePiece::full(q(n, m), q(k, m))))
            .collect()
    }

    pub fn inverse_branches(&self) -> Vec<Branch> {
        CircleCorrespondence { n: self.m, m: self.n }.forward_branches()
    }
}

/// Pushforward density of weighted branches must be identically 1.
fn check_preserves_lebesgue(branches: &[Branch]) -> Result<()> {
    // Densities are piecewise constant; collect all image pieces.
    let mut pieces: Vec<(Rational, Rational, Rational)> = Vec::new();
    for (w, b) in branches {
        let (a, z) = image_interval(b, &b.lo, &b.hi);
        let density = w.clone() / b.slope.abs();
        let first = a.floor().to_integer();
        let last = z.ceil().to_integer();
        let mut n = first;
        while n < last {
            let base = Rational::from_integer(n.clone());
            let lo = a.clone().max(base.clone()) - base.clone();
            let hi = z.clone().min(base.clone() + Rational::one()) - base;
            if lo < hi {
                pieces.push((lo, hi, density.clone()));
            }
            n += 1;
        }
    }
    let mut cuts: Vec<Rational> = vec![q(0, 1), q(1, 1)];
    for (lo, hi, _) in &pieces {
        cuts.push(lo.clone());
        cuts.push(hi.clone());
    }
    cuts.sort();
    cuts.dedup();
    for (idx, pair) in cuts.windows(2).enumerate() {
        let mid = (pair[0].clone() + pair[1].clone()) / q(2, 1);
        let total = pieces
            .iter()
            .filter(|(lo, hi, _)| *lo <= mid && mid < *hi)
            .fold(q(0, 1), |acc, (_, _, d)| acc + d.clone());
        if !total.is_one() {
            return Err(Error::NotMeasurePreserving {
                atom: idx,
                expected: "1/1".into(),
                found: total.render(),
            });
        }
    }
    Ok(())
}

/// Unwrapped image of `[lo, hi)` under the affine part, as `(min, max)`.
fn image_interval(b: &AffinePiece, lo: &Rational, hi: &Rational) -> (Rational, Rational) {
    let a = b.slope.clone() * lo + &b.offset;
    let z = b.slope.clone() * hi + &b.offset;
    if a <= z {
        (a, z)
    } else {
        (z, a)
    }
}

fn check_resolution(k: u32) -> Result<usize> {
    if k == 0 || k > MAX_RESOLUTION {
        return Err(Error::InvalidMap(format!(
            "resolution must be between 1 and {MAX_RESOLUTION}, got {k}"
        )));
    }
    Ok(1usize << k)
}

/// `sum_b w_b Leb(C_i ∩ dom_b ∩ S_b^{-1} C_j)`.
fn discretize_branches(branches: &[Branch], k: u32) -> Result<Matrix<Rational>> {
    let n = check_resolution(k)?;
    let cell = q(1, n as i64);
    let rows: Vec<Vec<Rational>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut row = vec![q(0, 1); n];
            let c_lo = cell.clone() * Rational::from_integer(i.into());
            let c_hi = c_lo.clone() + &cell;
            for (w, b) in branches {
                let lo = c_lo.clone().max(b.lo.clone());
                let hi = c_hi.clone().min(b.hi.clone());
                if lo >= hi {
                    continue;
                }
                let (a, z) = image_interval(b, &lo, &hi);
                let scale = w.clone() / b.slope.abs();
                let nn = Rational::from_integer((n as i64).into());
                let first = (a.clone() * &nn).floor().to_integer();
                let last = (z.clone() * &nn).ceil().to_integer();
                let mut t = first;
                while t < last {
                    let t_lo = Rational::from_integer(t.clone()) / &nn;
                    let t_hi = t_lo.clone() + &cell;
                    let overlap = z.clone().min(t_hi) - a.clone().max(t_lo);
                    if overlap.is_positive() {
                        let j = t.to_i64().expect("cell index fits").rem_euclid(n as i64) as usize;
                        row[j] = row[j].clone() + overlap * &scale;
                    }
                    t += 1;
                }
            }
            row
        })
        .collect();
    Matrix::from_rows(rows)
}

fn dyadic_space(n: usize) -> FiniteSpace<Rational> {
    FiniteSpace::uniform(n)
}

pub fn discretize_map(map: &PiecewiseAffineMap, k: u32) -> Result<Polymorphism<Rational>> {
    let nu = discretize_branches(&map.branches(), k)?;
    let s = dyadic_space(nu.rows());
    Polymorphism::with_tolerance(s.clone(), s, nu, Tolerance::EXACT)
}

/// Discretization of a correspondence together with the per-branch
/// conditional weights, computed from both routes.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrespondenceDiscretization {
    pub polymorphism: Polymorphism<Rational>,
    /// `row_branch_weights[i][k]`: share of row `i` carried by forward branch `k`.
    pub row_branch_weights: Vec<Vec<Rational>>,
    /// `col_branch_weights[j][r]`: share of column `j` carried by inverse branch `r`.
    pub col_branch_weights: Vec<Vec<Rational>>,
    /// Largest entry of `|nu_forward - nu_inverse^T|`; zero when consistent.
    pub route_discrepancy: Rational,
}

pub fn discretize_correspondence(corr: &CircleCorrespondence, k: u32) -> Result<CorrespondenceDiscretization> {
    let n = check_resolution(k)?;
    let forward = corr.forward_branches();
    let inverse = corr.inverse_branches();
    let shares = |branches: &[Branch]| -> Result<(Matrix<Rational>, Vec<Vec<Rational>>)> {
        let mut total = Matrix::zeros(n, n);
        let mut per = vec![Vec::with_capacity(branches.len()); n];
        for b in branches {
            let part = discretize_branches(std::slice::from_ref(b), k)?;
            for (i, s) in part.row_sums().into_iter().enumerate() {
                per[i].push(s * Rational::from_integer((n as i64).into()));
            }
            total = total.add(&part);
        }
        Ok((total, per))
    };
    let (nu, row_branch_weights) = shares(&forward)?;
    let (nu_inv, col_branch_weights) = shares(&inverse)?;
    let route_discrepancy = nu.max_abs_diff(&nu_inv.transpose());
    let s = dyadic_space(n);
    Ok(CorrespondenceDiscretization {
        polymorphism: Polymorphism::with_tolerance(s.clone(), s, nu, Tolerance::EXACT)?,
        row_branch_weights,
        col_branch_weights,
        route_discrepancy,
    })
}

/// Map specification accepted on the command line.
#[derive(Clone, Debug, PartialEq)]
pub enum MapSpec {
    Interval(PiecewiseAffineMap),
    Correspondence(CircleCorrespondence),
    Torus([[i64; 2]; 2]),
}

impl FromStr for MapSpec {
    type Err = Error;

    /// `doubling`, `identity`, `tent`, `rotation p/q`, `corr n m`, `cat`,
    /// `shear`, `torus a b c d`.
    fn from_str(s: &str) -> Result<Self> {
        let words: Vec<&str> = s.split_whitespace().collect();
        let bad = |reason: &str| Error::InvalidMap(format!("{s:?}: {reason}"));
        let int = |w: &str| -> Result<i64> { w.parse().map_err(|_| bad("expected an integer")) };
        match words.as_slice() {
            ["doubling"] => Ok(MapSpec::Interval(PiecewiseAffineMap::doubling())),
            ["identity"] => Ok(MapSpec::Interval(PiecewiseAffineMap::identity())),
            ["tent"] => Ok(MapSpec::Interval(PiecewiseAffineMap::tent())),
            ["rotation", angle] => {
                let a = Rational::parse_str(angle)?;
                let a = a.clone() - a.floor();
                Ok(MapSpec::Interval(PiecewiseAffineMap::rotation(a)))
            }
            ["corr", n, m] => {
                let n = u32::try_from(int(n)?).map_err(|_| bad("negative exponent"))?;
                let m = u32::try_from(int(m)?).map_err(|_| bad("negative exponent"))?;
                Ok(MapSpec::Correspondence(CircleCorrespondence::new(n, m)?))
            }
            ["cat"] => Ok(MapSpec::Torus([[2, 1], [1, 1]])),
            ["shear"] => Ok(MapSpec::Torus([[1, 1], [0, 1]])),
            ["torus", a, b, c, d] => Ok(MapSpec::Torus([[int(a)?, int(b)?], [int(c)?, int(d)?]])),
            _ => Err(bad("unknown map")),
        }
    }
}

impl fmt::Display for MapSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MapSpec::Interval(m) => f.write_str(m.name()),
            MapSpec::Correspondence(c) => write!(f, "corr {} {}", c.n, c.m),
            MapSpec::Torus([[a, b], [c, d]]) => write!(f, "torus {a} {b} {c} {d}"),
        }
    }
}

/// Exact discretization of a one-dimensional spec.
pub fn discretize(spec: &MapSpec, k: u32) -> Result<Polymorphism<Rational>> {
    match spec {
        MapSpec::Interval(m) => discretize_map(m, k),
        MapSpec::Correspondence(c) => Ok(discretize_correspondence(c, k)?.polymorphism),
        MapSpec::Torus(_) => Err(Error::InvalidMap(
            "torus maps are estimated; use discretize_torus_auto".into(),
        )),
    }
}

/// Largest entry of `|factor(disc(k), dyadic pairs) - disc(k-1)|`.
pub fn refinement_consistency(spec: &MapSpec, k: u32) -> Result<Rational> {
    if k < 2 {
        return Err(Error::InvalidMap("refinement check needs k >= 2".into()));
    }
    let fine = discretize(spec, k)?;
    let coarse = discretize(spec, k - 1)?;
    let pairs = Partition::dyadic_pairs(fine.size())?;
    Ok(fine.factor(&pairs)?.nu().max_abs_diff(coarse.nu()))
}

/// Estimated discretization of a toral automorphism.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TorusDiscretization {
    #[serde(skip)]
    pub polymorphism: Polymorphism<f64>,
    pub resolution: u32,
    pub samples_per_cell: usize,
    /// Largest `|column sum - 1/N^2|` of the raw estimate.
    pub pre_fit_marginal_error: f64,
    /// Same quantity relative to the cell mass.
    pub pre_fit_relative_error: f64,
    pub post_fit_marginal_error: f64,
    pub fit_iterations: usize,
    pub estimated: bool,
}

pub const MIN_TORUS_SAMPLES: usize = 10_000;

/// Stratified estimate of `Leb(C_a ∩ A^{-1} C_b)` on `4^k` cells
/// (index `ix * 2^k + iy`), followed by proportional fitting to exact
/// uniform marginals.
///
/// Each cell gets a `g x g` grid with a per-cell random shift drawn from a
/// seeded stream, so the output depends only on the inputs.
pub fn discretize_torus_auto(matrix: [[i64; 2]; 2], k: u32, samples: usize, seed: u64) -> Result<TorusDiscretization> {
    let [[a, b], [c, d]] = matrix;
    let det = a * d - b * c;
    if det.abs() != 1 {
        return Err(Error::Degenerate(format!("toral matrix has determinant {det}, need ±1")));
    }
    if k == 0 || k > 6 {
        return Err(Error::InvalidMap(format!("torus resolution must be between 1 and 6, got {k}")));
    }
    if samples < MIN_TORUS_SAMPLES {
        return Err(Error::InvalidMap(format!(
            "need at least {MIN_TORUS_SAMPLES} samples, got {samples}"
        )));
    }
    let side = 1usize << k;
    let cells = side * side;
    let g = ((samples as f64 / cells as f64).sqrt().ceil() as usize).max(1);
    let per_cell = g * g;
    let mass = 1.0 / (cells as f64 * per_cell as f64);
    let locate = |v: f64| -> usize { ((v.rem_euclid(1.0) * side as f64) as usize).min(side - 1) };

    let rows: Vec<Vec<f64>> = (0..cells)
        .into_par_iter()
        .map(|cell| {
            let (ix, iy) = (cell / side, cell % side);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(cell as u64);
            let (su, sv): (f64, f64) = (rng.gen(), rng.gen());
            let mut row = vec![0.0; cells];
            for gx in 0..g {
                let x = (ix as f64 + (gx as f64 / g as f64 + su).fract()) / side as f64;
                for gy in 0..g {
                    let y = (iy as f64 + (gy as f64 / g as f64 + sv).fract()) / side as f64;
                    let x2 = a as f64 * x + b as f64 * y;
                    let y2 = c as f64 * x + d as f64 * y;
                    row[locate(x2) * side + locate(y2)] += mass;
                }
            }
            row
        })
        .collect();
    let mut nu = Matrix::from_rows(rows)?;
    let target = 1.0 / cells as f64;
    let marginal_error = |m: &Matrix<f64>| -> f64 {
        m.row_sums()
            .iter()
            .chain(m.col_sums().iter())
            .map(|s| (s - target).abs())
            .fold(0.0, f64::max)
    };
    let pre = marginal_error(&nu);
    let mut iterations = 0;
    while marginal_error(&nu) > 1e-15 && iterations < 10_000 {
        for (i, s) in nu.row_sums().into_iter().enumerate() {
            if s > 0.0 {
                for j in 0..cells {
                    nu[(i, j)] *= target / s;
                }
            }
        }
        for (j, s) in nu.col_sums().into_iter().enumerate() {
            if s > 0.0 {
                for i in 0..cells {
                    nu[(i, j)] *= target / s;
                }
            }
        }
        iterations += 1;
    }
    let post = marginal_error(&nu);
    let space = FiniteSpace::<f64>::uniform(cells);
    let polymorphism = Polymorphism::with_tolerance(space.clone(), space, nu, Tolerance(1e-12))?;
    Ok(TorusDiscretization {
        polymorphism,
        resolution: k,
        samples_per_cell: per_cell,
        pre_fit_marginal_error: pre,
        pre_fit_relative_error: pre / target,
        post_fit_marginal_error: post,
        fit_iterations: iterations,
        estimated: true,
    })
}
