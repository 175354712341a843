//! Polymorphisms of finite spaces and their semigroup structure.
//!
//! A [`Polymorphism`] is a nonnegative matrix `nu` whose row sums are the
//! source masses and whose column sums are the target masses. Its transition
//! kernel `P[i][j] = nu[i][j] / mu_i` gives the image measure of atom `i`.
//!
//! Composition order: [`compose`]`(a, b)` is the algebraic product `a·b`,
//! which applies `b` first. Prefer [`Polymorphism::then`] and
//! [`Polymorphism::after`] in client code; they name the order explicitly.

use petgraph::unionfind::UnionFind;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::measure::{quotient, FiniteSpace, Partition};
use crate::scalar::{sum, Scalar, ScalarRepr, Tolerance};

#[derive(Clone, Debug, PartialEq)]
pub struct Polymorphism<S> {
    source: FiniteSpace<S>,
    target: FiniteSpace<S>,
    nu: Matrix<S>,
}

impl<S: Scalar> Polymorphism<S> {
    /// Validates nonnegativity and both marginals (default tolerance in
    /// float mode).
    pub fn new(source: FiniteSpace<S>, target: FiniteSpace<S>, nu: Matrix<S>) -> Result<Self> {
        Self::with_tolerance(source, target, nu, Tolerance::default())
    }

    pub fn with_tolerance(
        source: FiniteSpace<S>,
        target: FiniteSpace<S>,
        nu: Matrix<S>,
        tol: Tolerance,
    ) -> Result<Self> {
        if nu.rows() != source.len() || nu.cols() != target.len() {
            return Err(Error::Dimension(format!(
                "nu is {}x{} but spaces have {} and {} atoms",
                nu.rows(),
                nu.cols(),
                source.len(),
                target.len()
            )));
        }
        for i in 0..nu.rows() {
            for j in 0..nu.cols() {
                if nu[(i, j)] < S::zero() && !nu[(i, j)].is_negligible(tol) {
                    return Err(Error::NegativeMass {
                        row: i,
                        col: j,
                        value: nu[(i, j)].render(),
                    });
                }
            }
        }
        check_marginal("source", &nu.row_sums(), source.weights(), tol)?;
        check_marginal("target", &nu.col_sums(), target.weights(), tol)?;
        Ok(Polymorphism { source, target, nu })
    }

    /// Trusted constructor for outputs of operations that preserve the
    /// invariants by construction.
    pub(crate) fn from_parts(source: FiniteSpace<S>, target: FiniteSpace<S>, nu: Matrix<S>) -> Self {
        debug_assert_eq!((nu.rows(), nu.cols()), (source.len(), target.len()));
        Polymorphism { source, target, nu }
    }

    pub fn source(&self) -> &FiniteSpace<S> {
        &self.source
    }

    pub fn target(&self) -> &FiniteSpace<S> {
        &self.target
    }

    pub fn nu(&self) -> &Matrix<S> {
        &self.nu
    }

    pub fn is_square(&self) -> bool {
        self.source.len() == self.target.len()
            && self.source.weights() == self.target.weights()
    }

    pub(crate) fn require_square(&self) -> Result<()> {
        if self.is_square() {
            Ok(())
        } else {
            Err(Error::SpaceMismatch(
                "operation needs a polymorphism of a space to itself".into(),
            ))
        }
    }

    pub fn size(&self) -> usize {
        self.source.len()
    }

    /// Transition kernel `P[i][j] = nu[i][j] / mu_i`.
    pub fn kernel_matrix(&self) -> Matrix<S> {
        Matrix::from_fn(self.nu.rows(), self.nu.cols(), |i, j| {
            self.nu[(i, j)].clone() / self.source.weight(i).clone()
        })
    }

    pub fn kernel(&self) -> TransitionKernel<S> {
        TransitionKernel {
            source: self.source.clone(),
            rows: self.kernel_matrix(),
        }
    }

    /// Cotransition kernel: the kernel of the conjugate.
    pub fn cokernel_matrix(&self) -> Matrix<S> {
        self.involute().kernel_matrix()
    }

    /// The zero polymorphism: product measure `mu x mu`.
    pub fn zero(space: &FiniteSpace<S>) -> Self {
        let w = space.weights();
        Polymorphism::from_parts(
            space.clone(),
            space.clone(),
            Matrix::from_fn(w.len(), w.len(), |i, j| w[i].clone() * w[j].clone()),
        )
    }

    pub fn identity(space: &FiniteSpace<S>) -> Self {
        let w = space.weights();
        Polymorphism::from_parts(
            space.clone(),
            space.clone(),
            Matrix::from_fn(w.len(), w.len(), |i, j| {
                if i == j {
                    w[i].clone()
                } else {
                    S::zero()
                }
            }),
        )
    }

    /// Graph measure of a measure-preserving map between finite spaces.
    pub fn embed_map(
        source: &FiniteSpace<S>,
        target: &FiniteSpace<S>,
        map: &[usize],
        tol: Tolerance,
    ) -> Result<Self> {
        if map.len() != source.len() {
            return Err(Error::Dimension(format!(
                "map has {} entries for {} atoms",
                map.len(),
                source.len()
            )));
        }
        if let Some(&bad) = map.iter().find(|&&j| j >= target.len()) {
            return Err(Error::Dimension(format!("map sends an atom to {bad}, out of range")));
        }
        let mut pre = vec![S::zero(); target.len()];
        for (i, &j) in map.iter().enumerate() {
            pre[j] = pre[j].clone() + source.weight(i).clone();
        }
        for (j, mass) in pre.iter().enumerate() {
            if !mass.approx_eq(target.weight(j), tol) {
                return Err(Error::NotMeasurePreserving {
                    atom: j,
                    expected: target.weight(j).render(),
                    found: mass.render(),
                });
            }
        }
        let nu = Matrix::from_fn(source.len(), target.len(), |i, j| {
            if map[i] == j {
                source.weight(i).clone()
            } else {
                S::zero()
            }
        });
        Ok(Polymorphism::from_parts(source.clone(), target.clone(), nu))
    }

    pub fn embed_endomorphism(space: &FiniteSpace<S>, map: &[usize], tol: Tolerance) -> Result<Self> {
        Self::embed_map(space, space, map, tol)
    }

    /// `self` first, then `next`: the algebraic product `next · self`.
    pub fn then(&self, next: &Polymorphism<S>) -> Result<Self> {
        compose_with(next, self, Tolerance::default())
    }

    /// `prev` first, then `self`: the algebraic product `self · prev`.
    pub fn after(&self, prev: &Polymorphism<S>) -> Result<Self> {
        compose_with(self, prev, Tolerance::default())
    }

    /// The conjugate polymorphism: transposed measure, spaces swapped.
    pub fn involute(&self) -> Self {
        Polymorphism::from_parts(self.target.clone(), self.source.clone(), self.nu.transpose())
    }

    /// `n`-fold power; the zeroth power is the identity.
    pub fn power(&self, n: usize) -> Result<Self> {
        self.require_square()?;
        let p = self.kernel_matrix().pow(n);
        Ok(TransitionKernel {
            source: self.source.clone(),
            rows: p,
        }
        .reweight(&self.target))
    }

    /// Factor by a partition of the common space.
    pub fn factor(&self, part: &Partition) -> Result<Self> {
        self.require_square()?;
        self.factor_rect(part, part)
    }

    /// Factor by separate partitions of source and target.
    pub fn factor_rect(&self, source_part: &Partition, target_part: &Partition) -> Result<Self> {
        let src = quotient(&self.source, source_part)?;
        let tgt = quotient(&self.target, target_part)?;
        let (a, b) = (source_part.block_of(), target_part.block_of());
        let mut nu: Matrix<S> = Matrix::zeros(src.len(), tgt.len());
        for i in 0..self.nu.rows() {
            for j in 0..self.nu.cols() {
                let v = &self.nu[(i, j)];
                if !v.is_zero() {
                    nu[(a[i], b[j])] = nu[(a[i], b[j])].clone() + v.clone();
                }
            }
        }
        Ok(Polymorphism::from_parts(src, tgt, nu))
    }

    /// Support of each kernel row.
    pub fn supports(&self, tol: Tolerance) -> Vec<Vec<usize>> {
        (0..self.nu.rows())
            .map(|i| {
                (0..self.nu.cols())
                    .filter(|&j| self.nu[(i, j)].is_significant(tol))
                    .collect()
            })
            .collect()
    }

    /// Orbit partition: `x ~ y` when some `P^n(x)` and `P^m(y)` (n, m >= 1)
    /// share an atom, closed transitively. Reachable sets are grown until
    /// they stabilise; `horizon` caps the number of expansion rounds.
    pub fn orbit_partition(&self, horizon: usize, tol: Tolerance) -> Result<Partition> {
        self.require_square()?;
        let m = self.size();
        let supp = self.supports(tol);
        let reach: Vec<Vec<bool>> = (0..m)
            .map(|x| {
                let mut seen = vec![false; m];
                let mut frontier: Vec<usize> = supp[x].clone();
                for &y in &frontier {
                    seen[y] = true;
                }
                let mut rounds = 1;
                while !frontier.is_empty() && rounds < horizon.max(1) {
                    let mut next = Vec::new();
                    for &y in &frontier {
                        for &z in &supp[y] {
                            if !seen[z] {
                                seen[z] = true;
                                next.push(z);
                            }
                        }
                    }
                    frontier = next;
                    rounds += 1;
                }
                seen
            })
            .collect();
        let mut uf = UnionFind::<usize>::new(m);
        // Atoms reached from x are all related to x; linking x with each
        // reached atom's first claimant closes overlapping sets.
        let mut owner: Vec<Option<usize>> = vec![None; m];
        for (x, r) in reach.iter().enumerate() {
            for (z, &hit) in r.iter().enumerate() {
                if hit {
                    match owner[z] {
                        Some(o) => {
                            uf.union(o, x);
                        }
                        None => owner[z] = Some(x),
                    }
                }
            }
        }
        let labels: Vec<usize> = (0..m).map(|x| uf.find(x)).collect();
        Ok(Partition::from_labels(&labels))
    }

    /// Structural predicates at finite scale.
    pub fn predicates(&self, tol: Tolerance) -> Result<Predicates<S>> {
        self.require_square()?;
        let m = self.size();
        let kernel = self.kernel_matrix();
        let injective = (0..m).all(|i| {
            (i + 1..m).all(|j| {
                !kernel
                    .row(i)
                    .iter()
                    .zip(kernel.row(j))
                    .all(|(a, b)| a.approx_eq(b, tol))
            })
        });
        let supports = self.supports(tol);
        let orbits = self.orbit_partition(m + 1, tol)?;
        let block_of = orbits.block_of();
        let complete = (0..m).all(|x| {
            let orbit = &orbits.blocks()[block_of[x]];
            supports[x] == *orbit
        });
        let w = self.source.weights();
        let max_density = (0..m)
            .flat_map(|i| (0..m).map(move |j| (i, j)))
            .map(|(i, j)| self.nu[(i, j)].clone() / (w[i].clone() * w[j].clone()))
            .fold(S::zero(), |a, x| if x > a { x } else { a });
        Ok(Predicates {
            injective,
            discrete_rank: true,
            finite_rank: true,
            support_sizes: supports.iter().map(Vec::len).collect(),
            absolutely_continuous: true,
            max_density,
            complete,
            dense: is_nonsingular(&kernel, tol),
        })
    }

    pub fn convert<T: Scalar>(&self) -> Polymorphism<T> {
        Polymorphism {
            source: self.source.convert(),
            target: self.target.convert(),
            nu: self.nu.convert(),
        }
    }

    pub fn nu_csv(&self) -> String {
        self.nu
            .to_csv(&self.source.label_list(), &self.target.label_list())
    }

    pub fn kernel_csv(&self) -> String {
        self.kernel_matrix()
            .to_csv(&self.source.label_list(), &self.target.label_list())
    }
}

fn check_marginal<S: Scalar>(axis: &'static str, got: &[S], want: &[S], tol: Tolerance) -> Result<()> {
    for (i, (g, w)) in got.iter().zip(want).enumerate() {
        if !g.approx_eq(w, tol) {
            return Err(Error::Marginal {
                axis,
                index: i,
                expected: w.render(),
                found: g.render(),
            });
        }
    }
    Ok(())
}

/// Nonsingularity: exact determinant for rationals, smallest singular value
/// above the tolerance for floats.
pub(crate) fn is_nonsingular<S: Scalar>(m: &Matrix<S>, tol: Tolerance) -> bool {
    if S::EXACT {
        !m.determinant().is_zero()
    } else {
        crate::matrix::singular_values(&m.to_f64())
            .last()
            .is_some_and(|s| *s > tol.0)
    }
}

/// Finite-scale versions of the structural predicates.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Predicates<S: Scalar> {
    /// Kernel rows pairwise distinct.
    pub injective: bool,
    pub discrete_rank: bool,
    pub finite_rank: bool,
    pub support_sizes: Vec<usize>,
    /// Always true at finite scale; see `max_density`.
    pub absolutely_continuous: bool,
    /// `max nu_ij / (mu_i mu_j)`: the sup of the density against `mu x mu`.
    #[serde(serialize_with = "serialize_scalar")]
    pub max_density: S,
    /// Every row's support equals the orbit of its atom.
    pub complete: bool,
    /// Kernel matrix nonsingular.
    pub dense: bool,
}

fn serialize_scalar<S: Scalar, Z: Serializer>(v: &S, s: Z) -> std::result::Result<Z::Ok, Z::Error> {
    v.to_repr().serialize(s)
}

/// Algebraic product `p1 · p2`: applies `p2` first, then `p1`.
/// Kernel of the result is `P2 · P1`.
pub fn compose<S: Scalar>(p1: &Polymorphism<S>, p2: &Polymorphism<S>) -> Result<Polymorphism<S>> {
    compose_with(p1, p2, Tolerance::default())
}

pub fn compose_with<S: Scalar>(
    p1: &Polymorphism<S>,
    p2: &Polymorphism<S>,
    tol: Tolerance,
) -> Result<Polymorphism<S>> {
    if !p2.target.same_measure(&p1.source, tol) {
        return Err(Error::SpaceMismatch(format!(
            "cannot compose: inner space has {} atoms on one side and {} on the other, or masses differ",
            p2.target.len(),
            p1.source.len()
        )));
    }
    let mid = p1.source.weights();
    // nu_ik = sum_j nu2_ij nu1_jk / mu_j
    let scaled = Matrix::from_fn(p1.nu.rows(), p1.nu.cols(), |j, k| {
        p1.nu[(j, k)].clone() / mid[j].clone()
    });
    Ok(Polymorphism::from_parts(
        p2.source.clone(),
        p1.target.clone(),
        p2.nu.matmul(&scaled),
    ))
}

/// `sum_k w_k nu_k` over polymorphisms between identical spaces.
pub fn convex_combine<S: Scalar>(terms: &[(S, Polymorphism<S>)], tol: Tolerance) -> Result<Polymorphism<S>> {
    let Some((_, first)) = terms.first() else {
        return Err(Error::ConvexWeights("empty combination".into()));
    };
    let weights: Vec<S> = terms.iter().map(|(w, _)| w.clone()).collect();
    let total = sum(&weights);
    if weights.iter().any(|w| *w <= S::zero()) || !total.approx_eq(&S::one(), tol) {
        return Err(Error::ConvexWeights(total.render()));
    }
    let mut nu = Matrix::zeros(first.nu.rows(), first.nu.cols());
    for (w, p) in terms {
        if !p.source.same_measure(&first.source, tol) || !p.target.same_measure(&first.target, tol) {
            return Err(Error::SpaceMismatch("convex terms live on different spaces".into()));
        }
        nu = nu.add(&p.nu.scale(w));
    }
    Ok(Polymorphism::from_parts(first.source.clone(), first.target.clone(), nu))
}

/// Row-stochastic kernel over a source space. A kernel alone does not
/// determine a polymorphism; the source masses are part of the data.
#[derive(Clone, Debug, PartialEq)]
pub struct TransitionKernel<S> {
    source: FiniteSpace<S>,
    rows: Matrix<S>,
}

impl<S: Scalar> TransitionKernel<S> {
    pub fn new(source: FiniteSpace<S>, rows: Matrix<S>, tol: Tolerance) -> Result<Self> {
        if rows.rows() != source.len() {
            return Err(Error::Dimension(format!(
                "kernel has {} rows for {} atoms",
                rows.rows(),
                source.len()
            )));
        }
        for i in 0..rows.rows() {
            if let Some(j) = rows.row(i).iter().position(|x| *x < S::zero() && !x.is_negligible(tol)) {
                return Err(Error::NegativeMass {
                    row: i,
                    col: j,
                    value: rows[(i, j)].render(),
                });
            }
        }
        check_marginal("kernel row", &rows.row_sums(), &vec![S::one(); rows.rows()], tol)?;
        Ok(TransitionKernel { source, rows })
    }

    pub fn source(&self) -> &FiniteSpace<S> {
        &self.source
    }

    pub fn matrix(&self) -> &Matrix<S> {
        &self.rows
    }

    /// Image of the source measure, `mu P`.
    pub fn pushforward(&self) -> Vec<S> {
        let w = self.source.weights();
        (0..self.rows.cols())
            .map(|j| {
                (0..self.rows.rows()).fold(S::zero(), |acc, i| {
                    acc + w[i].clone() * self.rows[(i, j)].clone()
                })
            })
            .collect()
    }

    /// Pairs the kernel with its source masses. The target space is the
    /// pushforward `mu P` unless one is supplied, in which case it must match.
    pub fn into_polymorphism(self, target: Option<FiniteSpace<S>>, tol: Tolerance) -> Result<Polymorphism<S>> {
        let push = self.pushforward();
        let target = match target {
            Some(t) => {
                check_marginal("target", &push, t.weights(), tol)?;
                t
            }
            None => FiniteSpace::new(push)?,
        };
        Ok(self.reweight(&target))
    }

    fn reweight(self, target: &FiniteSpace<S>) -> Polymorphism<S> {
        let w = self.source.weights().to_vec();
        let nu = Matrix::from_fn(self.rows.rows(), self.rows.cols(), |i, j| {
            w[i].clone() * self.rows[(i, j)].clone()
        });
        Polymorphism::from_parts(self.source, target.clone(), nu)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound = "")]
struct PolymorphismRepr<S: Scalar> {
    source: FiniteSpace<S>,
    #[serde(default = "Option::default")]
    target: Option<FiniteSpace<S>>,
    nu: Vec<Vec<ScalarRepr>>,
}

impl<S: Scalar> Serialize for Polymorphism<S> {
    fn serialize<Z: Serializer>(&self, s: Z) -> std::result::Result<Z::Ok, Z::Error> {
        PolymorphismRepr {
            source: self.source.clone(),
            target: Some(self.target.clone()),
            nu: self.nu.to_reprs(),
        }
        .serialize(s)
    }
}

impl<'de, S: Scalar> Deserialize<'de> for Polymorphism<S> {
    /// `target` may be omitted for polymorphisms of a space to itself.
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = PolymorphismRepr::<S>::deserialize(d)?;
        let nu = Matrix::from_reprs(&raw.nu).map_err(D::Error::custom)?;
        let target = raw.target.unwrap_or_else(|| raw.source.clone());
        Polymorphism::new(raw.source, target, nu).map_err(D::Error::custom)
    }
}
