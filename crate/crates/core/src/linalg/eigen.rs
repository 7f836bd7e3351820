//! Cyclic Jacobi eigensolver for Hermitian matrices.
//!
//! Rotations are applied in a fixed row-major sweep order, so the output is a
//! pure function of the input bits. Eigenvalues come back ascending and each
//! eigenvector is rotated so that its largest-magnitude component is real and
//! positive.

use alloc::vec::Vec;

#[allow(unused_imports)]
use crate::prelude::*;

use super::complex::{ComplexMatrix, HermitianOperator, C64, HERMITIAN_TOL, ZERO};
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 100;

/// Eigenvalues (ascending) and orthonormal eigenvectors stored as columns.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: ComplexMatrix,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvector(&self, k: usize) -> Vec<C64> {
        self.eigenvectors.column(k)
    }

    /// `V diag(lambda) V^dagger`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let n = self.dim();
        let v = &self.eigenvectors;
        ComplexMatrix::from_fn(n, n, |r, c| {
            (0..n)
                .map(|k| v[(r, k)] * self.eigenvalues[k] * v[(c, k)].conj())
                .sum()
        })
    }

    /// Applies `f` to the spectrum: `V diag(f(lambda)) V^dagger`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> HermitianOperator {
        let mapped = SpectralDecomposition {
            eigenvalues: self.eigenvalues.iter().map(|&l| f(l)).collect(),
            eigenvectors: self.eigenvectors.clone(),
        };
        HermitianOperator::hermitize(&mapped.reconstruct())
    }
}

/// Eigendecomposition of a matrix that must be Hermitian within 1e-12.
pub fn eig_hermitian(h: &ComplexMatrix) -> Result<SpectralDecomposition> {
    if !h.is_square() {
        return Err(Error::validation("squareness", alloc::format!("{}x{}", h.rows(), h.cols())));
    }
    let (defect, r, c) = h.hermiticity_defect();
    if defect > HERMITIAN_TOL || !h.is_finite() {
        return Err(Error::validation(
            "Hermiticity",
            alloc::format!("entry ({r},{c}) deviates from Hermitian symmetry by {defect:e}"),
        ));
    }
    Ok(jacobi(h))
}

impl HermitianOperator {
    pub fn eigen(&self) -> SpectralDecomposition {
        jacobi(self.matrix())
    }
}

fn off_diagonal_norm(a: &ComplexMatrix) -> f64 {
    let n = a.rows();
    let mut s = 0.0;
    for p in 0..n {
        for q in p + 1..n {
            s += a[(p, q)].norm_sqr();
        }
    }
    (2.0 * s).sqrt()
}

fn jacobi(h: &ComplexMatrix) -> SpectralDecomposition {
    let n = h.rows();
    let mut a = h.hermitian_part();
    let mut v = ComplexMatrix::identity(n);
    let scale = a.frobenius();

    for sweep in 0..MAX_SWEEPS {
        let off = off_diagonal_norm(&a);
        if off == 0.0 || off <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                let mag = apq.norm();
                if mag == 0.0 {
                    continue;
                }
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                // Late sweeps: drop entries below the resolution of the diagonal.
                let g = 100.0 * mag;
                if sweep > 4 && app.abs() + g == app.abs() && aqq.abs() + g == aqq.abs() {
                    a[(p, q)] = ZERO;
                    a[(q, p)] = ZERO;
                    continue;
                }
                rotate(&mut a, &mut v, p, q, apq / mag, mag, app, aqq);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| a[(i, i)].re).collect();
    let mut eigenvectors = v.select_columns(&order);
    for k in 0..n {
        fix_phase(&mut eigenvectors, k);
    }
    SpectralDecomposition {
        eigenvalues,
        eigenvectors,
    }
}

/// One two-sided rotation zeroing `a[p,q]`.
///
/// The unitary is `diag(1, conj(u))` on the (p,q) plane followed by the real
/// Jacobi rotation for the now-real off-diagonal entry `mag`.
#[allow(clippy::too_many_arguments)]
fn rotate(
    a: &mut ComplexMatrix,
    v: &mut ComplexMatrix,
    p: usize,
    q: usize,
    u: C64,
    mag: f64,
    app: f64,
    aqq: f64,
) {
    let n = a.rows();
    let theta = (aqq - app) / (2.0 * mag);
    let t = if theta.abs() > 1e150 {
        0.5 / theta
    } else {
        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    let ub = u.conj();
    // G = [[c, s], [-s*ub, c*ub]] on (p, q).
    let gpp = C64::new(c, 0.0);
    let gpq = C64::new(s, 0.0);
    let gqp = -ub * s;
    let gqq = ub * c;

    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * gpp + akq * gqp;
        a[(k, q)] = akp * gpq + akq * gqq;
    }
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = gpp.conj() * apk + gqp.conj() * aqk;
        a[(q, k)] = gpq.conj() * apk + gqq.conj() * aqk;
    }
    a[(p, q)] = ZERO;
    a[(q, p)] = ZERO;
    a[(p, p)] = C64::new(app - t * mag, 0.0);
    a[(q, q)] = C64::new(aqq + t * mag, 0.0);

    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * gpp + vkq * gqp;
        v[(k, q)] = vkp * gpq + vkq * gqq;
    }
}

fn fix_phase(v: &mut ComplexMatrix, col: usize) {
    let n = v.rows();
    let max = (0..n).map(|r| v[(r, col)].norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return;
    }
    let pivot = (0..n)
        .find(|&r| v[(r, col)].norm() >= max * (1.0 - 1e-12))
        .unwrap_or(0);
    let z = v[(pivot, col)];
    let phase = z.conj() / z.norm();
    for r in 0..n {
        v[(r, col)] *= phase;
    }
    v[(pivot, col)] = C64::new(v[(pivot, col)].norm(), 0.0);
}
