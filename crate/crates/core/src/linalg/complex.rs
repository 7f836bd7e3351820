use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, Index, IndexMut, Mul, Sub};

#[allow(unused_imports)]
use crate::prelude::*;

use crate::error::{Error, Result};

pub type C64 = num_complex::Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// Absolute entrywise tolerance for the Hermiticity invariant.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Dense complex matrix stored in row-major order.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if rows * cols != data.len() {
            return Err(Error::Dimension(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from separate real and imaginary row lists.
    pub fn from_parts(re: &[Vec<f64>], im: &[Vec<f64>]) -> Result<Self> {
        let rows = re.len();
        if im.len() != rows {
            return Err(Error::Dimension(format!(
                "real part has {rows} rows, imaginary part {}",
                im.len()
            )));
        }
        let cols = re.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows * cols);
        for (r, (rr, ri)) in re.iter().zip(im).enumerate() {
            if rr.len() != cols || ri.len() != cols {
                return Err(Error::Dimension(format!("ragged row {r}")));
            }
            data.extend(rr.iter().zip(ri).map(|(&a, &b)| C64::new(a, b)));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_real(rows: usize, cols: usize, values: &[f64]) -> Result<Self> {
        Self::from_vec(rows, cols, values.iter().map(|&v| C64::new(v, 0.0)).collect())
    }

    /// Outer product `|u><v|`.
    pub fn outer(u: &[C64], v: &[C64]) -> Self {
        Self::from_fn(u.len(), v.len(), |r, c| u[r] * v[c].conj())
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

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn real_part(&self) -> Vec<Vec<f64>> {
        (0..self.rows)
            .map(|r| (0..self.cols).map(|c| self[(r, c)].re).collect())
            .collect()
    }

    pub fn imag_part(&self) -> Vec<Vec<f64>> {
        (0..self.rows)
            .map(|r| (0..self.cols).map(|c| self[(r, c)].im).collect())
            .collect()
    }

    pub fn column(&self, c: usize) -> Vec<C64> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    pub fn set_column(&mut self, c: usize, values: &[C64]) {
        for (r, &v) in values.iter().enumerate() {
            self[(r, c)] = v;
        }
    }

    /// Matrix made of the selected columns, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> Self {
        Self::from_fn(self.rows, cols.len(), |r, k| self[(r, cols[k])])
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// Hilbert-Schmidt inner product `tr[A^dagger B]`.
    pub fn inner(&self, other: &Self) -> C64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// `tr[A B]` without forming the product.
    pub fn trace_product(&self, other: &Self) -> C64 {
        let mut acc = ZERO;
        for i in 0..self.rows {
            for k in 0..self.cols {
                acc += self[(i, k)] * other[(k, i)];
            }
        }
        acc
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Largest entrywise deviation from Hermiticity, with its location.
    pub fn hermiticity_defect(&self) -> (f64, usize, usize) {
        let mut worst = (0.0, 0, 0);
        for r in 0..self.rows {
            for c in r..self.cols {
                let d = (self[(r, c)] - self[(c, r)].conj()).norm();
                if d > worst.0 {
                    worst = (d, r, c);
                }
            }
        }
        worst
    }

    /// `(A + A^dagger) / 2`.
    pub fn hermitian_part(&self) -> Self {
        Self::from_fn(self.rows, self.cols, |r, c| {
            (self[(r, c)] + self[(c, r)].conj()) * 0.5
        })
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == ZERO {
                    continue;
                }
                let row = &other.data[k * other.cols..(k + 1) * other.cols];
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, &b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        out
    }

    pub fn mat_vec(&self, v: &[C64]) -> Vec<C64> {
        (0..self.rows)
            .map(|r| (0..self.cols).map(|c| self[(r, c)] * v[c]).sum())
            .collect()
    }

    /// Largest entrywise distance between two matrices of equal shape.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).norm()))
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;

    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C64 {
        &mut self.data[r * self.cols + c]
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: Self) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: Self) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: Self) -> ComplexMatrix {
        self.matmul(rhs)
    }
}

/// Kronecker product: `out[(i*rB + k, j*cB + l)] = A[i,j] * B[k,l]`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (rb, cb) = (b.rows, b.cols);
    let mut out = ComplexMatrix::zeros(a.rows * rb, a.cols * cb);
    for i in 0..a.rows {
        for j in 0..a.cols {
            let aij = a[(i, j)];
            if aij == ZERO {
                continue;
            }
            for k in 0..rb {
                for l in 0..cb {
                    out[(i * rb + k, j * cb + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Square complex matrix that is Hermitian within [`HERMITIAN_TOL`].
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianOperator {
    matrix: ComplexMatrix,
}

impl HermitianOperator {
    /// Validates squareness, finiteness and Hermiticity.
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::validation(
                "squareness",
                format!("{}x{} matrix", matrix.rows, matrix.cols),
            ));
        }
        if !matrix.is_finite() {
            return Err(Error::validation("finiteness", "matrix has NaN or Inf entries"));
        }
        let (defect, r, c) = matrix.hermiticity_defect();
        if defect > HERMITIAN_TOL {
            return Err(Error::validation(
                "Hermiticity",
                format!("entry ({r},{c}) differs from conj of ({c},{r}) by {defect:e}"),
            ));
        }
        Ok(Self { matrix })
    }

    /// Projects onto the Hermitian part; use for computed results whose
    /// asymmetry is pure rounding noise.
    pub fn hermitize(matrix: &ComplexMatrix) -> Self {
        assert!(matrix.is_square(), "hermitize needs a square matrix");
        Self {
            matrix: matrix.hermitian_part(),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            matrix: ComplexMatrix::zeros(dim, dim),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            matrix: ComplexMatrix::identity(dim),
        }
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Self {
            matrix: ComplexMatrix::from_fn(n, n, |r, c| {
                if r == c {
                    C64::new(diag[r], 0.0)
                } else {
                    ZERO
                }
            }),
        }
    }

    /// Rank-one projector `|v><v|` (not normalised).
    pub fn projector(v: &[C64]) -> Self {
        Self::hermitize(&ComplexMatrix::outer(v, v))
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    /// `Re tr[A B]`, real for a pair of Hermitian operators.
    pub fn trace_with(&self, other: &HermitianOperator) -> f64 {
        self.matrix.trace_product(&other.matrix).re
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            matrix: self.matrix.scale_real(s),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            matrix: &self.matrix + &other.matrix,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            matrix: &self.matrix - &other.matrix,
        }
    }

    /// `self + s * other`.
    pub fn add_scaled(&self, s: f64, other: &Self) -> Self {
        Self {
            matrix: &self.matrix + &other.matrix.scale_real(s),
        }
    }

    pub fn kron(&self, other: &Self) -> Self {
        Self {
            matrix: kron(&self.matrix, &other.matrix),
        }
    }

    /// `V^dagger A V`: the operator seen through the columns of `basis`.
    pub fn sandwich(&self, basis: &ComplexMatrix) -> Self {
        Self::hermitize(&basis.adjoint().matmul(&self.matrix).matmul(basis))
    }

    /// `V A V^dagger`: lifts an operator on the span of `basis` back to the full space.
    pub fn lift(&self, basis: &ComplexMatrix) -> Self {
        Self::hermitize(&basis.matmul(&self.matrix).matmul(&basis.adjoint()))
    }

    /// Anticommutator average `(A B + B A) / 2`.
    pub fn jordan(&self, other: &Self) -> Self {
        let ab = self.matrix.matmul(&other.matrix);
        let ba = other.matrix.matmul(&self.matrix);
        Self::hermitize(&(&ab + &ba).scale_real(0.5))
    }

    pub fn max_abs(&self) -> f64 {
        self.matrix.max_abs()
    }

    /// Largest entrywise distance to another operator.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.matrix.max_abs_diff(&other.matrix)
    }
}

impl Index<(usize, usize)> for HermitianOperator {
    type Output = C64;

    fn index(&self, idx: (usize, usize)) -> &C64 {
        &self.matrix[idx]
    }
}

/// Largest entrywise deviation of `V^dagger V` from the identity.
pub fn orthonormality_defect(basis: &ComplexMatrix) -> f64 {
    let gram = basis.adjoint().matmul(basis);
    gram.max_abs_diff(&ComplexMatrix::identity(basis.cols()))
}

/// Compresses `a` onto the span of the orthonormal columns of `basis`:
/// `B[a,b] = <v_a| A |v_b>`.
pub fn compress(basis: &ComplexMatrix, a: &HermitianOperator) -> Result<HermitianOperator> {
    if basis.rows() != a.dim() {
        return Err(Error::Dimension(format!(
            "basis has {} rows, operator dimension {}",
            basis.rows(),
            a.dim()
        )));
    }
    let defect = orthonormality_defect(basis);
    if defect > 1e-8 {
        return Err(Error::validation(
            "orthonormality",
            format!("basis Gram matrix deviates from identity by {defect:e}"),
        ));
    }
    Ok(a.sandwich(basis))
}
