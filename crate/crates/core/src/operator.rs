//! Markov operators on weighted function spaces.
//!
//! `(Wf)_i = sum_j P_ij f_j` with the inner product `<f, g> = sum_i mu_i f_i g_i`.
//! The map polymorphism -> operator reverses products: the operator of
//! `compose(a, b)` is `W_b · W_a`.

use std::fmt;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::matrix::{singular_values, Matrix};
use crate::measure::FiniteSpace;
use crate::scalar::{Rational, Scalar, Tolerance};
use crate::semigroup::{is_nonsingular, Polymorphism};
use crate::spectral::{eigenvalue_list, eigenvalues, is_positive_semidefinite, Eigenvalue};

#[derive(Clone, Debug, PartialEq)]
pub struct MarkovOperator<S> {
    space: FiniteSpace<S>,
    matrix: Matrix<S>,
}

impl<S: Scalar> MarkovOperator<S> {
    /// Wraps a matrix without checking the axioms; see [`verify_axioms`].
    pub fn new(space: FiniteSpace<S>, matrix: Matrix<S>) -> Result<Self> {
        if matrix.rows() != space.len() || matrix.cols() != space.len() {
            return Err(Error::Dimension(format!(
                "operator is {}x{} on a space of {} atoms",
                matrix.rows(),
                matrix.cols(),
                space.len()
            )));
        }
        Ok(MarkovOperator { space, matrix })
    }

    pub fn space(&self) -> &FiniteSpace<S> {
        &self.space
    }

    pub fn matrix(&self) -> &Matrix<S> {
        &self.matrix
    }

    pub fn size(&self) -> usize {
        self.space.len()
    }

    pub fn apply(&self, f: &[S]) -> Vec<S> {
        self.matrix.mul_vec(f)
    }

    /// Adjoint in the weighted inner product: `W*_ij = mu_j W_ji / mu_i`.
    pub fn adjoint(&self) -> Self {
        let w = self.space.weights();
        let m = self.size();
        MarkovOperator {
            space: self.space.clone(),
            matrix: Matrix::from_fn(m, m, |i, j| {
                w[j].clone() * self.matrix[(j, i)].clone() / w[i].clone()
            }),
        }
    }

    /// Product `self · other` (apply `other` first).
    pub fn mul(&self, other: &Self) -> Self {
        MarkovOperator {
            space: self.space.clone(),
            matrix: self.matrix.matmul(&other.matrix),
        }
    }

    pub fn power(&self, n: usize) -> Self {
        MarkovOperator {
            space: self.space.clone(),
            matrix: self.matrix.pow(n),
        }
    }

    pub fn spectrum(&self) -> Vec<Eigenvalue> {
        eigenvalues(&self.matrix)
    }

    /// Spectral radius on the complement of the constants: the eigenvalue
    /// list with one copy of `1` removed.
    pub fn restricted_spectral_radius(&self) -> f64 {
        let mut ev = eigenvalue_list(&self.matrix);
        if let Some(pos) = ev
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - 1.0).norm().total_cmp(&(b.1 - 1.0).norm()))
            .map(|(i, _)| i)
        {
            ev.remove(pos);
        }
        ev.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn convert<T: Scalar>(&self) -> MarkovOperator<T> {
        MarkovOperator {
            space: self.space.convert(),
            matrix: self.matrix.convert(),
        }
    }
}

/// The Markov operator of a polymorphism of a space to itself.
pub fn operator_of<S: Scalar>(p: &Polymorphism<S>) -> Result<MarkovOperator<S>> {
    p.require_square()?;
    Ok(MarkovOperator {
        space: p.source().clone(),
        matrix: p.kernel_matrix(),
    })
}

/// Inverse of [`operator_of`]; fails naming the first violated axiom.
pub fn polymorphism_of<S: Scalar>(w: &MarkovOperator<S>, tol: Tolerance) -> Result<Polymorphism<S>> {
    let report = verify_axioms(w, tol);
    if let Some(bad) = report.checks().into_iter().find(|c| !c.passed) {
        return Err(Error::AxiomViolation {
            axiom: bad.axiom,
            witness: bad.witness.clone().unwrap_or_default(),
        });
    }
    let mu = w.space.weights();
    let m = w.size();
    let nu = Matrix::from_fn(m, m, |i, j| mu[i].clone() * w.matrix[(i, j)].clone());
    Polymorphism::with_tolerance(w.space.clone(), w.space.clone(), nu, tol)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AxiomCheck {
    pub axiom: &'static str,
    pub passed: bool,
    pub witness: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AxiomReport {
    pub contraction: AxiomCheck,
    pub fixes_constants: AxiomCheck,
    pub adjoint_fixes_constants: AxiomCheck,
    pub positivity: AxiomCheck,
    /// Largest singular value of `D^{1/2} W D^{-1/2}` (float estimate).
    pub operator_norm: f64,
}

impl AxiomReport {
    pub fn all_passed(&self) -> bool {
        self.checks().iter().all(|c| c.passed)
    }

    /// Checks in the order positivity, constants, adjoint constants,
    /// contraction.
    pub fn checks(&self) -> Vec<&AxiomCheck> {
        vec![
            &self.positivity,
            &self.fixes_constants,
            &self.adjoint_fixes_constants,
            &self.contraction,
        ]
    }
}

fn check(axiom: &'static str, witness: Option<String>) -> AxiomCheck {
    AxiomCheck {
        axiom,
        passed: witness.is_none(),
        witness,
    }
}

/// Checks contraction, `W1 = 1`, `W*1 = 1` and positivity.
///
/// Contraction is decided exactly in rational mode (`D - W^T D W` positive
/// semidefinite) and by the largest singular value of the symmetrised matrix
/// in float mode.
pub fn verify_axioms<S: Scalar>(w: &MarkovOperator<S>, tol: Tolerance) -> AxiomReport {
    let m = w.size();
    let mu = w.space.weights();

    let mut negative = None;
    'outer: for i in 0..m {
        for j in 0..m {
            let x = &w.matrix[(i, j)];
            if *x < S::zero() && !x.is_negligible(tol) {
                negative = Some(format!("entry ({i},{j}) = {}", x.render()));
                break 'outer;
            }
        }
    }

    let rows = w.matrix.row_sums();
    let row_bad = rows
        .iter()
        .position(|s| !s.approx_eq(&S::one(), tol))
        .map(|i| format!("(W1)_{i} = {}", rows[i].render()));

    let adj = w.adjoint().matrix.row_sums();
    let col_bad = adj
        .iter()
        .position(|s| !s.approx_eq(&S::one(), tol))
        .map(|i| format!("(W*1)_{i} = {}", adj[i].render()));

    let sym = Matrix::from_fn(m, m, |i, j| {
        w.matrix[(i, j)].to_f64() * (mu[i].to_f64() / mu[j].to_f64()).sqrt()
    });
    let norm = singular_values(&sym).first().copied().unwrap_or(0.0);
    let contraction_bad = if S::EXACT {
        let wq: Matrix<Rational> = w.matrix.map(Scalar::to_rational);
        let d: Vec<Rational> = mu.iter().map(Scalar::to_rational).collect();
        let dw = Matrix::from_fn(m, m, |i, j| d[i].clone() * wq[(i, j)].clone());
        let gram = wq.transpose().matmul(&dw);
        let diff = Matrix::from_fn(m, m, |i, j| {
            let di = if i == j { d[i].clone() } else { Rational::from_ratio(0, 1) };
            di - gram[(i, j)].clone()
        });
        (!is_positive_semidefinite(&diff)).then(|| format!("operator norm {norm} > 1"))
    } else {
        (norm > 1.0 + tol.0.max(1e-12)).then(|| format!("operator norm {norm} > 1"))
    };

    AxiomReport {
        contraction: check("contraction", contraction_bad),
        fixes_constants: check("W1 = 1", row_bad),
        adjoint_fixes_constants: check("W*1 = 1", col_bad),
        positivity: check("positivity", negative),
        operator_norm: norm,
    }
}

/// `W f` computed through the product space: `f` is lifted to a function of
/// the second coordinate on `(X x X, nu)` and conditioned on the first.
pub fn projections_form<S: Scalar>(p: &Polymorphism<S>, f: &[S]) -> Result<Vec<S>> {
    p.require_square()?;
    let m = p.size();
    if f.len() != m {
        return Err(Error::Dimension(format!("function has {} values for {m} atoms", f.len())));
    }
    let nu = p.nu();
    let lifted = Matrix::from_fn(m, m, |_, j| f[j].clone());
    let second = conditional_expectation(nu, &lifted, Axis::Second);
    let first = conditional_expectation(nu, &second, Axis::First);
    Ok((0..m).map(|i| first[(i, 0)].clone()).collect())
}

#[derive(Clone, Copy)]
enum Axis {
    First,
    Second,
}

/// Conditional expectation of `g` (a function on the product) onto functions
/// of one coordinate, under the weights `nu`. Null fibres get zero.
fn conditional_expectation<S: Scalar>(nu: &Matrix<S>, g: &Matrix<S>, axis: Axis) -> Matrix<S> {
    let (m, n) = (nu.rows(), nu.cols());
    let fibre = |k: usize| -> S {
        let (mut mass, mut acc) = (S::zero(), S::zero());
        for l in 0..(if matches!(axis, Axis::First) { n } else { m }) {
            let (i, j) = match axis {
                Axis::First => (k, l),
                Axis::Second => (l, k),
            };
            mass = mass + nu[(i, j)].clone();
            acc = acc + nu[(i, j)].clone() * g[(i, j)].clone();
        }
        if mass.is_zero() {
            S::zero()
        } else {
            acc / mass
        }
    };
    match axis {
        Axis::First => {
            let vals: Vec<S> = (0..m).map(fibre).collect();
            Matrix::from_fn(m, n, |i, _| vals[i].clone())
        }
        Axis::Second => {
            let vals: Vec<S> = (0..n).map(fibre).collect();
            Matrix::from_fn(m, n, |_, j| vals[j].clone())
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CesaroResult<S: Scalar> {
    #[serde(serialize_with = "ser_vec")]
    pub average: Vec<S>,
    /// Projection onto the fixed subspace of `W`.
    #[serde(serialize_with = "ser_vec")]
    pub projection: Vec<S>,
    /// Weighted L2 norm of `average - projection`.
    pub error: f64,
    pub steps: usize,
}

fn ser_vec<S: Scalar, Z: Serializer>(v: &[S], s: Z) -> std::result::Result<Z::Ok, Z::Error> {
    crate::scalar::to_reprs(v).serialize(s)
}

/// `(1/n) sum_{k<n} W^k f` together with the limit projection.
pub fn cesaro_limit<S: Scalar>(w: &MarkovOperator<S>, f: &[S], n: usize, tol: Tolerance) -> Result<CesaroResult<S>> {
    if n == 0 {
        return Err(Error::Degenerate("Cesàro average needs n >= 1".into()));
    }
    if f.len() != w.size() {
        return Err(Error::Dimension(format!("function has {} values for {} atoms", f.len(), w.size())));
    }
    let mut acc = vec![S::zero(); f.len()];
    let mut cur = f.to_vec();
    for k in 0..n {
        for (a, c) in acc.iter_mut().zip(&cur) {
            *a = a.clone() + c.clone();
        }
        if k + 1 < n {
            cur = w.apply(&cur);
        }
    }
    let nn = S::from_usize(n);
    let average: Vec<S> = acc.into_iter().map(|a| a / nn.clone()).collect();
    let projection = fixed_projection(w, f, tol);
    let diff: Vec<S> = average
        .iter()
        .zip(&projection)
        .map(|(a, b)| a.clone() - b.clone())
        .collect();
    Ok(CesaroResult {
        error: w.space.norm(&diff),
        average,
        projection,
        steps: n,
    })
}

/// Weighted-orthogonal projection of `f` onto `ker(W - I)`.
pub fn fixed_projection<S: Scalar>(w: &MarkovOperator<S>, f: &[S], tol: Tolerance) -> Vec<S> {
    let m = w.size();
    let shifted = w.matrix.sub(&Matrix::identity(m));
    let basis = shifted.nullspace(tol);
    project_onto(&w.space, &basis, f, tol)
}

/// Weighted-orthogonal projection onto the span of `basis`.
fn project_onto<S: Scalar>(space: &FiniteSpace<S>, basis: &[Vec<S>], f: &[S], tol: Tolerance) -> Vec<S> {
    let d = basis.len();
    let m = f.len();
    if d == 0 {
        return vec![S::zero(); m];
    }
    // Solve G c = b with G_ab = <e_a, e_b>, b_a = <e_a, f>.
    let aug = Matrix::from_fn(d, d + 1, |a, b| {
        if b < d {
            space.inner(&basis[a], &basis[b])
        } else {
            space.inner(&basis[a], f)
        }
    });
    let (r, _) = aug.rref(tol);
    let coeffs: Vec<S> = (0..d).map(|a| r[(a, d)].clone()).collect();
    (0..m)
        .map(|i| {
            coeffs
                .iter()
                .zip(basis)
                .fold(S::zero(), |acc, (c, e)| acc + c.clone() * e[i].clone())
        })
        .collect()
}

pub fn is_dense<S: Scalar>(w: &MarkovOperator<S>, tol: Tolerance) -> bool {
    is_nonsingular(&w.matrix, tol)
}

/// Basis of the maximal subspace of the complement of constants that is
/// invariant under `W` and on which `W` is isometric.
///
/// `f` belongs to it iff `<W^k f, 1> = 0` and `(I - W*W) W^k f = 0` for all
/// `k`; the constraint rows are stacked until their rank stops growing.
pub fn unitary_part<S: Scalar>(w: &MarkovOperator<S>, tol: Tolerance) -> Vec<Vec<S>> {
    let m = w.size();
    let mu = Matrix::from_fn(1, m, |_, j| w.space.weight(j).clone());
    let defect = Matrix::identity(m).sub(&w.adjoint().matrix.matmul(&w.matrix));
    let mut constraints = mu.vstack(&defect).row_basis(tol);
    let mut rank = constraints.rows();
    for _ in 0..=m {
        let pushed = constraints.matmul(&w.matrix);
        constraints = constraints.vstack(&pushed).row_basis(tol);
        if constraints.rows() == rank {
            break;
        }
        rank = constraints.rows();
    }
    constraints.nullspace(tol)
}

pub fn is_totally_nonisometric<S: Scalar>(w: &MarkovOperator<S>, tol: Tolerance) -> bool {
    unitary_part(w, tol).is_empty()
}

/// Asymptotic class of a contraction restricted to the complement of the
/// constants. At finite dimension the forward and adjoint behaviours agree, so
/// only `C00`, `C11` and `Mixed` occur.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ContractionClass {
    C00,
    C01,
    C10,
    C11,
    Mixed,
}

impl fmt::Display for ContractionClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ContractionClass::C00 => "C_{0,0}",
            ContractionClass::C01 => "C_{0,1}",
            ContractionClass::C10 => "C_{1,0}",
            ContractionClass::C11 => "C_{1,1}",
            ContractionClass::Mixed => "mixed",
        })
    }
}

impl Serialize for ContractionClass {
    fn serialize<Z: Serializer>(&self, s: Z) -> std::result::Result<Z::Ok, Z::Error> {
        s.collect_str(self)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContractionReport<S: Scalar> {
    pub class: ContractionClass,
    /// Dimension of the complement of the constants.
    pub restricted_dim: usize,
    pub unitary_dim: usize,
    pub spectral_radius: f64,
    /// A vector with `W^n f` not tending to zero.
    #[serde(serialize_with = "ser_opt_vec")]
    pub persistent_witness: Option<Vec<S>>,
    /// A nonzero vector with `W^n f -> 0`.
    #[serde(serialize_with = "ser_opt_vec")]
    pub decaying_witness: Option<Vec<S>>,
}

fn ser_opt_vec<S: Scalar, Z: Serializer>(v: &Option<Vec<S>>, s: Z) -> std::result::Result<Z::Ok, Z::Error> {
    v.as_ref().map(|x| crate::scalar::to_reprs(x)).serialize(s)
}

pub fn classify_contraction<S: Scalar>(w: &MarkovOperator<S>, tol: Tolerance) -> ContractionReport<S> {
    let m = w.size();
    let unitary = unitary_part(w, tol);
    let restricted_dim = m.saturating_sub(1);
    let persistent_witness = unitary.first().cloned();
    let decaying_witness = if unitary.len() < restricted_dim {
        // A vector orthogonal to the constants and to the unitary part.
        let mut rows = vec![w.space.weights().to_vec()];
        for e in &unitary {
            rows.push(
                e.iter()
                    .zip(w.space.weights())
                    .map(|(x, mu)| x.clone() * mu.clone())
                    .collect(),
            );
        }
        Matrix::from_rows(rows)
            .ok()
            .and_then(|c| c.nullspace(tol).into_iter().next())
    } else {
        None
    };
    let class = if unitary.is_empty() {
        ContractionClass::C00
    } else if unitary.len() == restricted_dim {
        ContractionClass::C11
    } else {
        ContractionClass::Mixed
    };
    ContractionReport {
        class,
        restricted_dim,
        unitary_dim: unitary.len(),
        spectral_radius: w.restricted_spectral_radius(),
        persistent_witness,
        decaying_witness,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::q;
    use crate::semigroup::compose;

    fn u(m: usize) -> FiniteSpace<Rational> {
        FiniteSpace::uniform(m)
    }

    fn op(rows: Vec<Vec<Rational>>) -> MarkovOperator<Rational> {
        let m = rows.len();
        MarkovOperator::new(u(m), Matrix::from_rows(rows).unwrap()).unwrap()
    }

    fn mix2() -> MarkovOperator<Rational> {
        op(vec![vec![q(3, 4), q(1, 4)], vec![q(1, 4), q(3, 4)]])
    }

    fn swap() -> MarkovOperator<Rational> {
        op(vec![vec![q(0, 1), q(1, 1)], vec![q(1, 1), q(0, 1)]])
    }

    fn theta(m: usize) -> MarkovOperator<Rational> {
        operator_of(&Polymorphism::zero(&u(m))).unwrap()
    }

    #[test]
    fn operator_examples() {
        let nu = Matrix::from_rows(vec![vec![q(3, 8), q(1, 8)], vec![q(1, 8), q(3, 8)]]).unwrap();
        let p = Polymorphism::new(u(2), u(2), nu).unwrap();
        assert_eq!(operator_of(&p).unwrap(), mix2());
        assert_eq!(polymorphism_of(&mix2(), Tolerance::EXACT).unwrap(), p);
        let t = theta(3);
        let f = vec![q(1, 1), q(2, 1), q(6, 1)];
        assert_eq!(t.apply(&f), vec![q(3, 1); 3]);
        assert_eq!(polymorphism_of(&t, Tolerance::EXACT).unwrap(), Polymorphism::zero(&u(3)));
    }

    #[test]
    fn anti_homomorphism_on_permutations() {
        let s = u(3);
        let a = Polymorphism::embed_endomorphism(&s, &[1, 2, 0], Tolerance::EXACT).unwrap();
        let b = Polymorphism::embed_endomorphism(&s, &[1, 0, 2], Tolerance::EXACT).unwrap();
        let wab = operator_of(&compose(&a, &b).unwrap()).unwrap();
        let wa = operator_of(&a).unwrap();
        let wb = operator_of(&b).unwrap();
        assert_eq!(wab, wb.mul(&wa));
    }

    #[test]
    fn adjoint_matches_involution_on_weighted_space() {
        let s = FiniteSpace::new(vec![q(1, 2), q(1, 3), q(1, 6)]).unwrap();
        let nu = Matrix::from_rows(vec![
            vec![q(1, 4), q(1, 6), q(1, 12)],
            vec![q(1, 6), q(1, 12), q(1, 12)],
            vec![q(1, 12), q(1, 12), q(0, 1)],
        ])
        .unwrap();
        let p = Polymorphism::new(s.clone(), s, nu).unwrap();
        let w = operator_of(&p).unwrap();
        assert_eq!(operator_of(&p.involute()).unwrap(), w.adjoint());
        assert!(verify_axioms(&w, Tolerance::EXACT).all_passed());
    }

    #[test]
    fn axiom_failures_have_witnesses() {
        let neg = op(vec![vec![q(5, 4), q(-1, 4)], vec![q(-1, 4), q(5, 4)]]);
        let r = verify_axioms(&neg, Tolerance::EXACT);
        assert!(!r.positivity.passed);
        assert_eq!(r.positivity.witness.as_deref(), Some("entry (0,1) = -1/4"));
        assert!(!r.contraction.passed);
        let err = polymorphism_of(&neg, Tolerance::EXACT).unwrap_err();
        assert!(matches!(err, Error::AxiomViolation { axiom: "positivity", .. }));

        let row_only = op(vec![vec![q(1, 1), q(0, 1)], vec![q(1, 1), q(0, 1)]]);
        let r = verify_axioms(&row_only, Tolerance::EXACT);
        assert!(r.fixes_constants.passed && r.positivity.passed);
        assert!(!r.adjoint_fixes_constants.passed);
    }

    #[test]
    fn contraction_is_weight_aware() {
        let s = FiniteSpace::new(vec![q(1, 4), q(3, 4)]).unwrap();
        let w = MarkovOperator::new(
            s,
            Matrix::from_rows(vec![vec![q(0, 1), q(1, 1)], vec![q(1, 3), q(2, 3)]]).unwrap(),
        )
        .unwrap();
        assert!(verify_axioms(&w, Tolerance::EXACT).all_passed());
        assert!(verify_axioms(&w.convert::<f64>(), Tolerance::default()).all_passed());
    }

    #[test]
    fn projections_form_examples() {
        let nu = Matrix::from_rows(vec![vec![q(3, 8), q(1, 8)], vec![q(1, 8), q(3, 8)]]).unwrap();
        let p = Polymorphism::new(u(2), u(2), nu).unwrap();
        assert_eq!(projections_form(&p, &[q(1, 1), q(-1, 1)]).unwrap(), vec![q(1, 2), q(-1, 2)]);
        assert_eq!(projections_form(&p, &[q(1, 1), q(1, 1)]).unwrap(), vec![q(1, 1), q(1, 1)]);
        let z = Polymorphism::zero(&u(3));
        assert_eq!(
            projections_form(&z, &[q(3, 1), q(0, 1), q(0, 1)]).unwrap(),
            vec![q(1, 1); 3]
        );
    }

    #[test]
    fn cesaro_examples() {
        let r = cesaro_limit(&swap(), &[q(1, 1), q(-1, 1)], 6, Tolerance::EXACT).unwrap();
        assert_eq!(r.average, vec![q(0, 1), q(0, 1)]);
        assert_eq!(r.projection, r.average);
        assert_eq!(r.error, 0.0);
        let ones = cesaro_limit(&mix2(), &[q(1, 1), q(1, 1)], 7, Tolerance::EXACT).unwrap();
        assert_eq!(ones.average, vec![q(1, 1), q(1, 1)]);
        let mixf = mix2().convert::<f64>();
        let r = cesaro_limit(&mixf, &[3.0, -1.0], 10_000, Tolerance::default()).unwrap();
        assert_eq!(r.projection.len(), 2);
        assert!((r.projection[0] - 1.0).abs() < 1e-12);
        // f - Pf = (2,-2) lies in the 1/2-eigenspace, so the error is 4/n.
        assert!((r.error - 4e-4).abs() < 1e-12);
    }

    #[test]
    fn fixed_projection_respects_weights() {
        let s = FiniteSpace::new(vec![q(1, 4), q(1, 4), q(1, 2)]).unwrap();
        let id = MarkovOperator::new(s.clone(), Matrix::identity(3)).unwrap();
        let f = vec![q(1, 1), q(2, 1), q(5, 1)];
        assert_eq!(fixed_projection(&id, &f, Tolerance::EXACT), f);
        let t = operator_of(&Polymorphism::zero(&s)).unwrap();
        assert_eq!(fixed_projection(&t, &f, Tolerance::EXACT), vec![q(13, 4); 3]);
    }

    #[test]
    fn density_examples() {
        assert!(is_dense(&swap(), Tolerance::EXACT));
        assert!(!is_dense(&theta(3), Tolerance::EXACT));
        assert!(is_dense(&mix2(), Tolerance::EXACT));
        assert_eq!(mix2().matrix().determinant(), q(1, 2));
    }

    #[test]
    fn nonisometry_examples() {
        assert!(!is_totally_nonisometric(&swap(), Tolerance::EXACT));
        assert!(is_totally_nonisometric(&mix2(), Tolerance::EXACT));
        assert!(is_totally_nonisometric(&theta(4), Tolerance::EXACT));
        assert!(!is_totally_nonisometric(&swap().convert::<f64>(), Tolerance::default()));
    }

    #[test]
    fn classification_examples() {
        let r = classify_contraction(&mix2(), Tolerance::EXACT);
        assert_eq!(r.class, ContractionClass::C00);
        assert!((r.spectral_radius - 0.5).abs() < 1e-12);
        assert!(r.persistent_witness.is_none());
        let r = classify_contraction(&swap(), Tolerance::EXACT);
        assert_eq!(r.class, ContractionClass::C11);
        assert!((r.spectral_radius - 1.0).abs() < 1e-12);
        assert!(r.decaying_witness.is_none());

        let z = q(0, 1);
        let block = op(vec![
            vec![q(3, 4), q(1, 4), z.clone(), z.clone()],
            vec![q(1, 4), q(3, 4), z.clone(), z.clone()],
            vec![z.clone(), z.clone(), z.clone(), q(1, 1)],
            vec![z.clone(), z.clone(), q(1, 1), z.clone()],
        ]);
        let r = classify_contraction(&block, Tolerance::EXACT);
        assert_eq!(r.class, ContractionClass::Mixed);
        assert_eq!(r.unitary_dim, 2);
        let keep = r.persistent_witness.unwrap();
        let fade = r.decaying_witness.unwrap();
        let far = block.power(64);
        assert!(far.apply(&keep).iter().any(|x| x.to_f64().abs() > 0.1));
        assert!(far.apply(&fade).iter().all(|x| x.to_f64().abs() < 1e-12));
        assert_eq!(ContractionClass::Mixed.to_string(), "mixed");
        assert_eq!(ContractionClass::C11.to_string(), "C_{1,1}");
    }

    #[test]
    fn cycle_is_unitary_lazy_cycle_is_not() {
        let c = op(vec![
            vec![q(0, 1), q(1, 1), q(0, 1)],
            vec![q(0, 1), q(0, 1), q(1, 1)],
            vec![q(1, 1), q(0, 1), q(0, 1)],
        ]);
        assert_eq!(unitary_part(&c, Tolerance::EXACT).len(), 2);
        let half = op(vec![
            vec![q(1, 2), q(1, 2), q(0, 1)],
            vec![q(0, 1), q(1, 2), q(1, 2)],
            vec![q(1, 2), q(0, 1), q(1, 2)],
        ]);
        assert!(unitary_part(&half, Tolerance::EXACT).is_empty());
    }
}
