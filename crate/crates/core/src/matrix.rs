//! Dense row-major matrices over a [`Scalar`] with elimination-based linear
//! algebra. Pivot selection takes the largest magnitude entry; entries within
//! the tolerance count as zero (exactly zero for rationals).

use std::fmt::Write as _;
use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};
use crate::scalar::{Scalar, ScalarRepr, Tolerance};

#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

impl<S> Index<(usize, usize)> for Matrix<S> {
    type Output = S;
    fn index(&self, (i, j): (usize, usize)) -> &S {
        &self.data[i * self.cols + j]
    }
}

impl<S> IndexMut<(usize, usize)> for Matrix<S> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut S {
        &mut self.data[i * self.cols + j]
    }
}

impl<S: Scalar> Matrix<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![S::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { S::one() } else { S::zero() })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> S) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn from_rows(rows: Vec<Vec<S>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        Ok(Matrix {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        })
    }

    /// Column vector (n x 1).
    pub fn column(v: &[S]) -> Self {
        Matrix {
            rows: v.len(),
            cols: 1,
            data: v.to_vec(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, i: usize) -> &[S] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<S> {
        (0..self.rows).map(|i| self[(i, j)].clone()).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<S>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].clone())
    }

    /// Matrix product. Panics on mismatched inner dimensions.
    pub fn matmul(&self, other: &Matrix<S>) -> Matrix<S> {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out: Matrix<S> = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = &other[(k, j)];
                    if b.is_zero() {
                        continue;
                    }
                    let idx = i * other.cols + j;
                    out.data[idx] = out.data[idx].clone() + a.clone() * b.clone();
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[S]) -> Vec<S> {
        assert_eq!(self.cols, v.len(), "mul_vec dimension mismatch");
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .fold(S::zero(), |acc, (a, b)| acc + a.clone() * b.clone())
            })
            .collect()
    }

    pub fn pow(&self, n: usize) -> Matrix<S> {
        assert!(self.is_square());
        let mut result = Matrix::identity(self.rows);
        let mut base = self.clone();
        let mut e = n;
        while e > 0 {
            if e & 1 == 1 {
                result = result.matmul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.matmul(&base);
            }
        }
        result
    }

    pub fn map<T>(&self, f: impl Fn(&S) -> T) -> Matrix<T> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(f).collect(),
        }
    }

    pub fn scale(&self, c: &S) -> Matrix<S> {
        self.map(|x| x.clone() * c.clone())
    }

    pub fn add(&self, other: &Matrix<S>) -> Matrix<S> {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a.clone() + b.clone())
                .collect(),
        }
    }

    pub fn sub(&self, other: &Matrix<S>) -> Matrix<S> {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a.clone() - b.clone())
                .collect(),
        }
    }

    pub fn row_sums(&self) -> Vec<S> {
        (0..self.rows)
            .map(|i| self.row(i).iter().fold(S::zero(), |a, x| a + x.clone()))
            .collect()
    }

    pub fn col_sums(&self) -> Vec<S> {
        let mut sums = vec![S::zero(); self.cols];
        for i in 0..self.rows {
            for (j, s) in sums.iter_mut().enumerate() {
                *s = s.clone() + self[(i, j)].clone();
            }
        }
        sums
    }

    /// Largest absolute entrywise difference.
    pub fn max_abs_diff(&self, other: &Matrix<S>) -> S {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a.clone() - b.clone()).abs())
            .fold(S::zero(), |m, x| if x > m { x } else { m })
    }

    pub fn entries(&self) -> &[S] {
        &self.data
    }

    pub fn vstack(&self, other: &Matrix<S>) -> Matrix<S> {
        assert_eq!(self.cols, other.cols);
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Matrix {
            rows: self.rows + other.rows,
            cols: self.cols,
            data,
        }
    }

    pub fn convert<T: Scalar>(&self) -> Matrix<T> {
        self.map(|x| T::from_rational(&x.to_rational()))
    }

    pub fn to_f64(&self) -> Matrix<f64> {
        self.map(Scalar::to_f64)
    }

    /// Reduced row echelon form. Returns the reduced matrix and pivot columns.
    pub fn rref(&self, tol: Tolerance) -> (Matrix<S>, Vec<usize>) {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..m.cols {
            if r == m.rows {
                break;
            }
            let (best, best_abs) = (r..m.rows)
                .map(|i| (i, m[(i, c)].abs()))
                .fold((r, S::zero()), |acc, x| if x.1 > acc.1 { x } else { acc });
            if best_abs.is_negligible(tol) {
                for i in r..m.rows {
                    m[(i, c)] = S::zero();
                }
                continue;
            }
            m.swap_rows(r, best);
            let piv = m[(r, c)].clone();
            for j in c..m.cols {
                m[(r, j)] = m[(r, j)].clone() / piv.clone();
            }
            for i in 0..m.rows {
                if i == r || m[(i, c)].is_zero() {
                    continue;
                }
                let factor = m[(i, c)].clone();
                for j in c..m.cols {
                    let v = m[(i, j)].clone() - factor.clone() * m[(r, j)].clone();
                    m[(i, j)] = v;
                }
                m[(i, c)] = S::zero();
            }
            pivots.push(c);
            r += 1;
        }
        (m, pivots)
    }

    pub fn rank(&self, tol: Tolerance) -> usize {
        self.rref(tol).1.len()
    }

    /// Basis of the right null space `{x : A x = 0}`.
    pub fn nullspace(&self, tol: Tolerance) -> Vec<Vec<S>> {
        let (r, pivots) = self.rref(tol);
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        free.iter()
            .map(|&f| {
                let mut v = vec![S::zero(); self.cols];
                v[f] = S::one();
                for (row, &pc) in pivots.iter().enumerate() {
                    v[pc] = -r[(row, f)].clone();
                }
                v
            })
            .collect()
    }

    /// Rows of the RREF that are not identically zero: a canonical basis of
    /// the row space.
    pub fn row_basis(&self, tol: Tolerance) -> Matrix<S> {
        let (r, pivots) = self.rref(tol);
        Matrix::from_fn(pivots.len(), self.cols, |i, j| r[(i, j)].clone())
    }

    pub fn determinant(&self) -> S {
        assert!(self.is_square(), "determinant of a non-square matrix");
        let n = self.rows;
        let mut m = self.clone();
        let mut det = S::one();
        for c in 0..n {
            let (best, best_abs) = (c..n)
                .map(|i| (i, m[(i, c)].abs()))
                .fold((c, S::zero()), |acc, x| if x.1 > acc.1 { x } else { acc });
            if best_abs.is_zero() {
                return S::zero();
            }
            if best != c {
                m.swap_rows(best, c);
                det = -det;
            }
            let piv = m[(c, c)].clone();
            det = det * piv.clone();
            for i in c + 1..n {
                if m[(i, c)].is_zero() {
                    continue;
                }
                let factor = m[(i, c)].clone() / piv.clone();
                for j in c..n {
                    let v = m[(i, j)].clone() - factor.clone() * m[(c, j)].clone();
                    m[(i, j)] = v;
                }
            }
        }
        det
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    pub(crate) fn to_reprs(&self) -> Vec<Vec<ScalarRepr>> {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(Scalar::to_repr).collect())
            .collect()
    }

    pub(crate) fn from_reprs(rows: &[Vec<ScalarRepr>]) -> Result<Self> {
        let parsed = rows
            .iter()
            .map(|r| r.iter().map(ScalarRepr::parse).collect::<Result<Vec<S>>>())
            .collect::<Result<Vec<_>>>()?;
        Matrix::from_rows(parsed)
    }

    /// CSV rendering with a header row of column labels and a leading label
    /// column.
    pub fn to_csv(&self, row_labels: &[String], col_labels: &[String]) -> String {
        let mut out = String::from("atom");
        for l in col_labels {
            let _ = write!(out, ",{l}");
        }
        out.push('\n');
        for (i, label) in row_labels.iter().enumerate().take(self.rows) {
            out.push_str(label);
            for x in self.row(i) {
                let _ = write!(out, ",{}", x.render());
            }
            out.push('\n');
        }
        out
    }
}

/// Euclidean dot product.
pub fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    a.iter()
        .zip(b)
        .fold(S::zero(), |acc, (x, y)| acc + x.clone() * y.clone())
}

/// Singular values (descending) of a float matrix.
pub fn singular_values(m: &Matrix<f64>) -> Vec<f64> {
    let nm = nalgebra::DMatrix::from_row_slice(m.rows(), m.cols(), m.entries());
    let mut sv: Vec<f64> = nm.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}
