//! Truncated intertwiners and quasi-determinism diagnostics.
//!
//! With `Π = Φ_0·T` and `Φ_k` the resampling of site `k`, the products
//! `Λ_N = Φ_0 ⋯ Φ_N` satisfy `Π·Λ_N = Λ_{N+1}·T` exactly, so `Π·Λ_N` and
//! `Λ_N·T` differ only at site `N + 1`.

use rayon::prelude::*;
use serde::{Serialize, Serializer};

use super::kernel::{KernelChain, Product, Step, WindowKernel, WindowMeasure};
use super::{Codec, SymbolicSystem, Window};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::{to_reprs, Scalar};
use crate::semigroup::Polymorphism;

fn ser_scalar<S: Scalar, Z: Serializer>(v: &S, s: Z) -> std::result::Result<Z::Ok, Z::Error> {
    v.to_repr().serialize(s)
}

fn lambda_steps(n: usize) -> Vec<Step> {
    (0..=n as i32).map(Step::Phi).collect()
}

fn pi_power_steps(n: usize) -> Vec<Step> {
    (0..n).flat_map(|_| [Step::Shift, Step::Phi(0)]).collect()
}

/// `sum |a - b|` over configurations of the given positions, for two
/// product measures. Positions where the marginals agree factor out.
fn product_l1<S: Scalar>(a: &Product<S>, b: &Product<S>, positions: &[usize]) -> S {
    let differ: Vec<usize> = positions.iter().copied().filter(|&i| a[i] != b[i]).collect();
    let expand = |m: &Product<S>| {
        differ.iter().fold(vec![S::one()], |acc, &i| {
            acc.iter()
                .flat_map(|w| m[i].iter().map(move |v| w.clone() * v.clone()))
                .collect::<Vec<S>>()
        })
    };
    expand(a)
        .into_iter()
        .zip(expand(b))
        .fold(S::zero(), |acc, (x, y)| acc + (x - y).abs())
}

/// One comparison: chains `left` and `right`, outputs restricted to `sites`.
struct Comparison<'s> {
    left: usize,
    right: usize,
    sites: &'s [i32],
}

/// Total-variation distances between joint laws of (input, restricted
/// output) under the Bernoulli input measure, for several comparisons in one
/// pass over the inputs.
fn joint_tvs<S: Scalar>(
    sys: &SymbolicSystem<S>,
    window: Window,
    chains: &[KernelChain<'_, S>],
    comparisons: &[Comparison<'_>],
) -> Vec<S> {
    let codec = Codec::new(window, sys.alphabet());
    let input = WindowMeasure::bernoulli(sys, window);
    let positions: Vec<Vec<usize>> = comparisons
        .iter()
        .map(|cmp| cmp.sites.iter().map(|&j| (j - window.lo) as usize).collect())
        .collect();
    let per_input: Vec<Vec<S>> = (0..codec.size())
        .into_par_iter()
        .map(|x| {
            let pushed: Vec<Product<S>> = chains.iter().map(|c| c.push_product(x)).collect();
            comparisons
                .iter()
                .zip(&positions)
                .map(|(cmp, pos)| input.mass(x).clone() * product_l1(&pushed[cmp.left], &pushed[cmp.right], pos))
                .collect()
        })
        .collect();
    let half = S::from_ratio(1, 2);
    (0..comparisons.len())
        .map(|k| per_input.iter().fold(S::zero(), |acc, v| acc + v[k].clone()) * half.clone())
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LambdaTruncation<S: Scalar> {
    pub n: usize,
    pub window: Window,
    #[serde(skip)]
    pub kernel: WindowKernel<S>,
    /// Sites where the product form and the `Π^{N+1} T^{-(N+1)}` form are
    /// both determined by the input.
    pub agreement_sites: Vec<i32>,
    /// Total variation between the two forms on `agreement_sites`.
    #[serde(serialize_with = "ser_scalar")]
    pub route_residual: S,
}

/// `Λ_N = Φ_0 ⋯ Φ_N`, cross-checked against `Π^{N+1} T^{-(N+1)}`.
pub fn lambda_truncation<S: Scalar>(sys: &SymbolicSystem<S>, n: usize, window: Window) -> Result<LambdaTruncation<S>> {
    window.require(0, n as i32)?;
    let product = KernelChain::new(sys, window, lambda_steps(n))?;
    let mut steps = vec![Step::InverseShift; n + 1];
    steps.extend(pi_power_steps(n + 1));
    let route = KernelChain::new(sys, window, steps)?;
    let agreement_sites: Vec<i32> = (window.lo + n as i32 + 1..=window.hi).collect();
    let residual = joint_tvs(
        sys,
        window,
        &[product.clone(), route],
        &[Comparison {
            left: 0,
            right: 1,
            sites: &agreement_sites,
        }],
    );
    Ok(LambdaTruncation {
        n,
        window,
        kernel: product.materialize(),
        agreement_sites,
        route_residual: residual[0].clone(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IntertwiningReport<S: Scalar> {
    pub n: usize,
    pub window: Window,
    /// Window sites other than the refilled site `lo` and the moving
    /// boundary `N + 1`.
    pub interior_sites: Vec<i32>,
    /// TV distance of `Π·Λ_N` and `Λ_N·T` on the interior sites.
    #[serde(serialize_with = "ser_scalar")]
    pub interior_residual: S,
    pub boundary_site: i32,
    #[serde(serialize_with = "ser_scalar")]
    pub boundary_discrepancy: S,
    /// `max |q(b|a) - δ_ab|`.
    #[serde(serialize_with = "ser_scalar")]
    pub boundary_bound: S,
    /// TV distance of `Π·Λ_N` and `Λ_{N+1}·T` on the whole window.
    #[serde(serialize_with = "ser_scalar")]
    pub exact_residual: S,
}

impl<S: Scalar> IntertwiningReport<S> {
    pub fn holds(&self) -> bool {
        self.interior_residual.is_zero()
            && self.exact_residual.is_zero()
            && self.boundary_discrepancy <= self.boundary_bound
    }
}

pub fn verify_intertwining<S: Scalar>(sys: &SymbolicSystem<S>, n: usize, window: Window) -> Result<IntertwiningReport<S>> {
    let boundary = n as i32 + 1;
    window.require(-1, boundary)?;
    let mut left = lambda_steps(n);
    left.extend([Step::Shift, Step::Phi(0)]);
    let mut right = vec![Step::Shift];
    right.extend(lambda_steps(n));
    let mut exact = vec![Step::Shift];
    exact.extend(lambda_steps(n + 1));
    let chains = [
        KernelChain::new(sys, window, left)?,
        KernelChain::new(sys, window, right)?,
        KernelChain::new(sys, window, exact)?,
    ];
    let interior_sites: Vec<i32> = window
        .sites()
        .filter(|&j| j != window.lo && j != boundary)
        .collect();
    let all: Vec<i32> = window.sites().collect();
    let tvs = joint_tvs(
        sys,
        window,
        &chains,
        &[
            Comparison {
                left: 0,
                right: 1,
                sites: &interior_sites,
            },
            Comparison {
                left: 0,
                right: 1,
                sites: &[boundary],
            },
            Comparison {
                left: 0,
                right: 2,
                sites: &all,
            },
        ],
    );
    let a = sys.alphabet();
    let boundary_bound = (0..a)
        .flat_map(|x| (0..a).map(move |y| (x, y)))
        .map(|(x, y)| {
            let delta = if x == y { S::one() } else { S::zero() };
            (sys.q()[(x, y)].clone() - delta).abs()
        })
        .fold(S::zero(), |m, v| if v > m { v } else { m });
    let [interior, boundary_tv, exact_tv]: [S; 3] = tvs.try_into().expect("three comparisons");
    Ok(IntertwiningReport {
        n,
        window,
        interior_sites,
        interior_residual: interior,
        boundary_site: boundary,
        boundary_discrepancy: boundary_tv,
        boundary_bound,
        exact_residual: exact_tv,
    })
}

/// Joint law of `(x_{site-1}, (Π·Λ_N x)_site)` under the Bernoulli input, as
/// an `A x A` table. It no longer depends on `N` once `N >= site - 1`.
pub fn intertwining_site_profile<S: Scalar>(
    sys: &SymbolicSystem<S>,
    n: usize,
    site: i32,
    window: Window,
) -> Result<Matrix<S>> {
    window.require((site - 1).min(0), site.max(n as i32))?;
    let mut steps = lambda_steps(n);
    steps.extend([Step::Shift, Step::Phi(0)]);
    let chain = KernelChain::new(sys, window, steps)?;
    let codec = chain.codec();
    let input = WindowMeasure::bernoulli(sys, window);
    let a = sys.alphabet();
    let mut table: Matrix<S> = Matrix::zeros(a, a);
    let at = (site - window.lo) as usize;
    for x in 0..codec.size() {
        let from = codec.get(x, site - 1);
        let out = chain.push_product(x);
        for (to, w) in out[at].iter().enumerate() {
            table[(from, to)] = table[(from, to)].clone() + input.mass(x).clone() * w.clone();
        }
    }
    Ok(table)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DensityReport<S: Scalar> {
    pub n: usize,
    #[serde(serialize_with = "ser_scalar")]
    pub site_determinant: S,
    /// `det(q)^{N+1}`, one factor per resampled site.
    #[serde(serialize_with = "ser_scalar")]
    pub determinant_power: S,
    pub dense: bool,
}

/// `Λ_N` is a tensor product of copies of `q`, so it is nonsingular iff
/// `det(q) != 0`.
pub fn lambda_density_check<S: Scalar>(sys: &SymbolicSystem<S>, n: usize) -> DensityReport<S> {
    let d = sys.site_determinant();
    let power = (0..=n).fold(S::one(), |acc, _| acc * d.clone());
    DensityReport {
        n,
        dense: !d.is_zero(),
        site_determinant: d,
        determinant_power: power,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuasiDeterminismReport<S: Scalar> {
    pub horizon: usize,
    pub window: Window,
    /// The two pasts differ only here.
    pub differing_coordinate: i32,
    /// TV distance of the time-0 laws on sites `0..=hi`.
    #[serde(serialize_with = "ser_scalar")]
    pub joint_tv: S,
    /// Per-site TV distances on `0..=hi`.
    #[serde(serialize_with = "ser_site_tv")]
    pub site_tv: Vec<(i32, S)>,
    /// Sites below 0 recovered deterministically from the past.
    pub reconstructed_sites: Vec<i32>,
    /// Every time-0 configuration in the support satisfies `y_j = x_{j-n}`
    /// on `reconstructed_sites`, for both pasts.
    pub reconstruction_holds: bool,
}

fn ser_site_tv<S: Scalar, Z: Serializer>(v: &[(i32, S)], s: Z) -> std::result::Result<Z::Ok, Z::Error> {
    let sites: Vec<i32> = v.iter().map(|e| e.0).collect();
    let tvs: Vec<S> = v.iter().map(|e| e.1.clone()).collect();
    #[derive(Serialize)]
    struct Row<'a> {
        sites: &'a [i32],
        tv: Vec<crate::scalar::ScalarRepr>,
    }
    Row {
        sites: &sites,
        tv: to_reprs(&tvs),
    }
    .serialize(s)
}

/// Laws of the time-0 state given two time-`(-n)` states that differ only at
/// coordinate `-n` (all zeros versus a single 1).
pub fn quasi_determinism_diagnostic<S: Scalar>(
    sys: &SymbolicSystem<S>,
    n: usize,
    window: Window,
) -> Result<QuasiDeterminismReport<S>> {
    if n == 0 {
        return Err(Error::Degenerate("horizon must be at least 1".into()));
    }
    let coord = -(n as i32);
    window.require(coord, 0)?;
    let chain = KernelChain::new(sys, window, pi_power_steps(n))?;
    let codec = chain.codec();
    let past_a = 0u64;
    let past_b = codec.set(past_a, coord, 1);
    let da = chain.push_product(past_a);
    let db = chain.push_product(past_b);

    let pos = |j: i32| (j - window.lo) as usize;
    let future: Vec<i32> = (0..=window.hi).collect();
    let half = S::from_ratio(1, 2);
    let all: Vec<usize> = future.iter().map(|&j| pos(j)).collect();
    let joint_tv = product_l1(&da, &db, &all) * half.clone();
    let site_tv = future
        .iter()
        .map(|&j| (j, product_l1(&da, &db, &[pos(j)]) * half.clone()))
        .collect();

    let reconstructed_sites: Vec<i32> = (window.lo + n as i32..0).collect();
    let reconstruction_holds = [(past_a, &da), (past_b, &db)].iter().all(|(x, d)| {
        reconstructed_sites
            .iter()
            .all(|&j| d[pos(j)][codec.get(*x, j - n as i32)].is_one())
    });

    Ok(QuasiDeterminismReport {
        horizon: n,
        window,
        differing_coordinate: coord,
        joint_tv,
        site_tv,
        reconstructed_sites,
        reconstruction_holds,
    })
}

/// `max_{a,b} TV(P^n(a, .), P^n(b, .))` for a finite chain: how much of the
/// starting state is still visible after `n` steps.
pub fn chain_forgetting<S: Scalar>(p: &Polymorphism<S>, n: usize) -> Result<S> {
    p.require_square()?;
    let pn = p.kernel_matrix().pow(n);
    let m = p.size();
    let half = S::from_ratio(1, 2);
    let mut worst = S::zero();
    for a in 0..m {
        for b in a + 1..m {
            let tv = pn
                .row(a)
                .iter()
                .zip(pn.row(b))
                .fold(S::zero(), |acc, (x, y)| acc + (x.clone() - y.clone()).abs())
                * half.clone();
            if tv > worst {
                worst = tv;
            }
        }
    }
    Ok(worst)
}
