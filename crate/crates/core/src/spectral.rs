//! Spectra of small matrices.
//!
//! The characteristic polynomial is computed exactly over the rationals
//! (Hessenberg reduction), split into square-free factors with Yun's
//! algorithm, and each factor's simple roots are located with Aberth–Ehrlich
//! iteration. Multiplicities are therefore exact, and clustered unimodular
//! eigenvalues of permutation-like matrices are resolved reliably.

use num_complex::Complex64;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::matrix::Matrix;
use crate::scalar::{Rational, Scalar};

/// Polynomial with rational coefficients, lowest degree first.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly(pub Vec<Rational>);

impl Poly {
    fn trim(mut self) -> Self {
        while self.0.len() > 1 && self.0.last().is_some_and(Zero::is_zero) {
            self.0.pop();
        }
        if self.0.is_empty() {
            self.0.push(Rational::zero());
        }
        self
    }

    pub fn degree(&self) -> usize {
        self.0.len() - 1
    }

    fn is_zero(&self) -> bool {
        self.0.iter().all(Zero::is_zero)
    }

    fn lead(&self) -> &Rational {
        self.0.last().expect("nonempty")
    }

    fn monic(self) -> Self {
        let l = self.lead().clone();
        if l.is_zero() {
            return self;
        }
        Poly(self.0.into_iter().map(|c| c / l.clone()).collect())
    }

    fn derivative(&self) -> Self {
        if self.0.len() <= 1 {
            return Poly(vec![Rational::zero()]);
        }
        Poly(
            self.0
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c.clone() * Rational::from_usize(i))
                .collect(),
        )
        .trim()
    }

    fn sub(&self, other: &Poly) -> Poly {
        let n = self.0.len().max(other.0.len());
        Poly(
            (0..n)
                .map(|i| {
                    let a = self.0.get(i).cloned().unwrap_or_else(Rational::zero);
                    let b = other.0.get(i).cloned().unwrap_or_else(Rational::zero);
                    a - b
                })
                .collect(),
        )
        .trim()
    }

    fn mul(&self, other: &Poly) -> Poly {
        let mut out = vec![Rational::zero(); self.0.len() + other.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in other.0.iter().enumerate() {
                out[i + j] = out[i + j].clone() + a.clone() * b.clone();
            }
        }
        Poly(out).trim()
    }

    fn scale(&self, c: &Rational) -> Poly {
        Poly(self.0.iter().map(|x| x.clone() * c.clone()).collect()).trim()
    }

    fn div_rem(&self, d: &Poly) -> (Poly, Poly) {
        assert!(!d.is_zero(), "polynomial division by zero");
        let mut rem = self.0.clone();
        let dd = d.degree();
        if self.degree() < dd || self.is_zero() {
            return (Poly(vec![Rational::zero()]), self.clone());
        }
        let mut quot = vec![Rational::zero(); self.degree() - dd + 1];
        let lead = d.lead().clone();
        for k in (0..quot.len()).rev() {
            let c = rem[k + dd].clone() / lead.clone();
            if !c.is_zero() {
                for (j, dj) in d.0.iter().enumerate() {
                    rem[k + j] = rem[k + j].clone() - c.clone() * dj.clone();
                }
            }
            quot[k] = c;
        }
        rem.truncate(dd.max(1));
        (Poly(quot).trim(), Poly(rem).trim())
    }

    fn gcd(&self, other: &Poly) -> Poly {
        let mut a = self.clone();
        let mut b = other.clone();
        while !b.is_zero() {
            let (_, r) = a.div_rem(&b);
            a = b;
            b = r;
        }
        a.monic()
    }

    fn is_constant(&self) -> bool {
        self.degree() == 0
    }

    pub fn eval(&self, x: &Rational) -> Rational {
        self.0
            .iter()
            .rev()
            .fold(Rational::zero(), |acc, c| acc * x.clone() + c.clone())
    }
}

/// Exact characteristic polynomial `det(xI - A)` of a square matrix.
pub fn characteristic_polynomial(a: &Matrix<Rational>) -> Poly {
    assert!(a.is_square());
    let n = a.rows();
    let mut h = a.clone();
    // Similarity reduction to upper Hessenberg form.
    for j in 0..n.saturating_sub(2) {
        let Some(p) = (j + 1..n).find(|&i| !h[(i, j)].is_zero()) else {
            continue;
        };
        if p != j + 1 {
            for c in 0..n {
                let t = h[(p, c)].clone();
                h[(p, c)] = h[(j + 1, c)].clone();
                h[(j + 1, c)] = t;
            }
            for r in 0..n {
                let t = h[(r, p)].clone();
                h[(r, p)] = h[(r, j + 1)].clone();
                h[(r, j + 1)] = t;
            }
        }
        let piv = h[(j + 1, j)].clone();
        for i in j + 2..n {
            if h[(i, j)].is_zero() {
                continue;
            }
            let f = h[(i, j)].clone() / piv.clone();
            for c in 0..n {
                let v = h[(i, c)].clone() - f.clone() * h[(j + 1, c)].clone();
                h[(i, c)] = v;
            }
            for r in 0..n {
                let v = h[(r, j + 1)].clone() + f.clone() * h[(r, i)].clone();
                h[(r, j + 1)] = v;
            }
        }
    }
    // p_k(x) = (x - h_kk) p_{k-1} - sum_{i<k} h_ik (prod_{j=i+1..k} h_{j,j-1}) p_{i-1}
    let mut polys: Vec<Poly> = vec![Poly(vec![Rational::one()])];
    for m in 1..=n {
        let x_minus = Poly(vec![-h[(m - 1, m - 1)].clone(), Rational::one()]);
        let mut pm = x_minus.mul(&polys[m - 1]);
        let mut t = Rational::one();
        for i in (1..m).rev() {
            t *= h[(i, i - 1)].clone();
            if t.is_zero() {
                break;
            }
            let coeff = h[(i - 1, m - 1)].clone() * t.clone();
            if !coeff.is_zero() {
                pm = pm.sub(&polys[i - 1].scale(&coeff));
            }
        }
        polys.push(pm);
    }
    polys.pop().expect("at least one polynomial")
}

/// Yun's square-free decomposition: returns `(factor, multiplicity)` pairs
/// whose product (with multiplicities) is the monic input.
pub fn square_free_factors(f: &Poly) -> Vec<(Poly, usize)> {
    let f = f.clone().monic();
    if f.is_constant() {
        return Vec::new();
    }
    let fp = f.derivative();
    let a0 = f.gcd(&fp);
    let mut b = f.div_rem(&a0).0;
    let c = fp.div_rem(&a0).0;
    let mut d = c.sub(&b.derivative());
    let mut out = Vec::new();
    let mut i = 1;
    while !b.is_constant() {
        let a = b.gcd(&d);
        let b_next = b.div_rem(&a).0;
        let c_next = d.div_rem(&a).0;
        d = c_next.sub(&b_next.derivative());
        if !a.is_constant() {
            out.push((a, i));
        }
        b = b_next;
        i += 1;
    }
    out
}

/// Roots of a polynomial with simple roots, by Aberth–Ehrlich iteration.
fn simple_roots(p: &Poly) -> Vec<Complex64> {
    let coeffs: Vec<f64> = p.0.iter().map(Scalar::to_f64).collect();
    let n = coeffs.len() - 1;
    let lead = coeffs[n];
    let c: Vec<f64> = coeffs.iter().map(|x| x / lead).collect();
    match n {
        0 => return Vec::new(),
        1 => return vec![Complex64::new(-c[0], 0.0)],
        2 => {
            let (b, cc) = (c[1], c[0]);
            let disc = Complex64::new(b * b - 4.0 * cc, 0.0).sqrt();
            // Stable form avoids cancellation.
            let sign = if b >= 0.0 { 1.0 } else { -1.0 };
            let q = -0.5 * (Complex64::new(b, 0.0) + sign * disc);
            if q.norm() == 0.0 {
                return vec![Complex64::zero(), Complex64::zero()];
            }
            return vec![q, Complex64::new(cc, 0.0) / q];
        }
        _ => {}
    }
    let eval = |z: Complex64| -> (Complex64, Complex64) {
        let mut v = Complex64::new(1.0, 0.0);
        let mut d = Complex64::zero();
        for k in (0..n).rev() {
            d = d * z + v;
            v = v * z + c[k];
        }
        (v, d)
    };
    let radius = 1.0 + c[..n].iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut z: Vec<Complex64> = (0..n)
        .map(|k| {
            let theta = 2.0 * std::f64::consts::PI * (k as f64 + 0.25) / n as f64 + 0.4;
            Complex64::from_polar(radius * 0.5 + 0.1, theta)
        })
        .collect();
    for _ in 0..2000 {
        let mut max_step = 0.0f64;
        for i in 0..n {
            let (v, d) = eval(z[i]);
            if v.norm() == 0.0 {
                continue;
            }
            let ratio = v / d;
            let sum: Complex64 = (0..n)
                .filter(|&j| j != i)
                .map(|j| Complex64::new(1.0, 0.0) / (z[i] - z[j]))
                .sum();
            let step = ratio / (Complex64::new(1.0, 0.0) - ratio * sum);
            if step.is_finite() {
                z[i] -= step;
                max_step = max_step.max(step.norm() / z[i].norm().max(1.0));
            }
        }
        if max_step < 1e-15 {
            break;
        }
    }
    // Newton polish.
    for zi in &mut z {
        for _ in 0..3 {
            let (v, d) = eval(*zi);
            if d.norm() > 0.0 {
                let step = v / d;
                if step.is_finite() {
                    *zi -= step;
                }
            }
        }
    }
    z
}

/// One eigenvalue with its algebraic multiplicity.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Eigenvalue {
    pub re: f64,
    pub im: f64,
    pub modulus: f64,
    pub multiplicity: usize,
}

/// Eigenvalues of a square matrix, sorted by decreasing modulus, then by
/// real part and imaginary part.
pub fn eigenvalues<S: Scalar>(a: &Matrix<S>) -> Vec<Eigenvalue> {
    let exact: Matrix<Rational> = a.map(Scalar::to_rational);
    let cp = characteristic_polynomial(&exact);
    let mut out = Vec::new();
    for (factor, mult) in square_free_factors(&cp) {
        for z in simple_roots(&factor) {
            let im = if z.im.abs() < 1e-14 { 0.0 } else { z.im };
            out.push(Eigenvalue {
                re: z.re,
                im,
                modulus: z.norm(),
                multiplicity: mult,
            });
        }
    }
    out.sort_by(|x, y| {
        y.modulus
            .total_cmp(&x.modulus)
            .then(y.re.total_cmp(&x.re))
            .then(y.im.total_cmp(&x.im))
    });
    out
}

/// Eigenvalues listed with repetition according to multiplicity.
pub fn eigenvalue_list<S: Scalar>(a: &Matrix<S>) -> Vec<Complex64> {
    eigenvalues(a)
        .into_iter()
        .flat_map(|e| std::iter::repeat_n(Complex64::new(e.re, e.im), e.multiplicity))
        .collect()
}

/// Exact positive-semidefiniteness test for a symmetric rational matrix, by
/// symmetric elimination: each pivot must be nonnegative, and a zero pivot
/// must have a zero row.
pub fn is_positive_semidefinite(sym: &Matrix<Rational>) -> bool {
    let m = sym.rows();
    let mut a = sym.clone();
    for k in 0..m {
        let pivot = a[(k, k)].clone();
        if pivot.is_negative() {
            return false;
        }
        if pivot.is_zero() {
            if (k + 1..m).any(|j| !a[(k, j)].is_zero()) {
                return false;
            }
            continue;
        }
        for i in k + 1..m {
            if a[(i, k)].is_zero() {
                continue;
            }
            let factor = a[(i, k)].clone() / &pivot;
            for j in k + 1..m {
                if !a[(k, j)].is_zero() {
                    let d = &factor * &a[(k, j)];
                    a[(i, j)] -= d;
                }
            }
        }
    }
    true
}
