//! Parametric quantum statistical models.
//!
//! A [`StatisticalModel`] is the local data at one true parameter value: the
//! state `rho` and one derivative operator per parameter. Constructors for the
//! phase-dephasing qubit and the displaced Fock state live here, together with
//! n-copy lifting and the orthogonal reparameterisation used by the
//! prioritised-measurement check.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::fisher;
use crate::linalg::{ComplexMatrix, HermitianOperator, RealMatrix, C64, ZERO};
#[allow(unused_imports)]
use crate::prelude::*;

pub const TRACE_TOL: f64 = 1e-10;
pub const PSD_FLOOR: f64 = -1e-10;
/// Upper bound on the condition number of the derivative Gram matrix.
pub const INDEPENDENCE_COND: f64 = 1e10;
pub const MAX_DIM: usize = 256;
pub const DEFAULT_FD_STEP: f64 = 1e-6;

/// Records that a model is `rho^{(x) copies}` of a `local_dim`-level system,
/// so every operator it carries commutes with permutations of the factors.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TensorPower {
    pub local_dim: usize,
    pub copies: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StatisticalModel {
    theta: Vec<f64>,
    labels: Vec<String>,
    rho: HermitianOperator,
    drho: Vec<HermitianOperator>,
    symmetry: Option<TensorPower>,
}

impl StatisticalModel {
    /// Builds a model after checking trace, positivity, tracelessness of the
    /// derivatives and their linear independence.
    pub fn new(
        theta: Vec<f64>,
        labels: Vec<String>,
        rho: HermitianOperator,
        drho: Vec<HermitianOperator>,
    ) -> Result<Self> {
        let model = Self {
            theta,
            labels,
            rho,
            drho,
            symmetry: None,
        };
        model.validate()?;
        Ok(model)
    }

    fn validate(&self) -> Result<()> {
        let n = self.drho.len();
        if n == 0 {
            return Err(Error::validation("parameters", "model has no derivatives"));
        }
        if self.theta.len() != n || self.labels.len() != n {
            return Err(Error::Dimension(format!(
                "{} derivatives, {} parameter values, {} labels",
                n,
                self.theta.len(),
                self.labels.len()
            )));
        }
        if let Some(bad) = self.theta.iter().position(|t| !t.is_finite()) {
            return Err(Error::validation("finiteness", format!("theta[{bad}] is not finite")));
        }
        let dim = self.rho.dim();
        if dim > MAX_DIM {
            return Err(Error::Resource(format!("dimension {dim} exceeds {MAX_DIM}")));
        }
        for (i, d) in self.drho.iter().enumerate() {
            if d.dim() != dim {
                return Err(Error::Dimension(format!(
                    "derivative {i} has dimension {}, state has {dim}",
                    d.dim()
                )));
            }
        }
        let tr = self.rho.trace();
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::validation("trace", format!("tr(rho) = {tr}")));
        }
        let min_eig = self.rho.eigen().eigenvalues[0];
        if min_eig < PSD_FLOOR {
            return Err(Error::validation("PSD", format!("rho has eigenvalue {min_eig:e}")));
        }
        for (i, d) in self.drho.iter().enumerate() {
            let t = d.trace();
            if t.abs() > TRACE_TOL {
                return Err(Error::validation(
                    "tracelessness",
                    format!("tr(drho[{i}]) = {t:e}"),
                ));
            }
        }
        let gram = RealMatrix::from_fn(n, n, |i, j| self.drho[i].trace_with(&self.drho[j]));
        let ev = gram.symmetric_eigenvalues();
        let (lo, hi) = (ev[0], ev[n - 1]);
        if !(lo > 0.0) || hi / lo > INDEPENDENCE_COND {
            return Err(Error::validation(
                "linear independence",
                format!("derivative Gram matrix has eigenvalues in [{lo:e}, {hi:e}]"),
            ));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.rho.dim()
    }

    pub fn n_params(&self) -> usize {
        self.drho.len()
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn rho(&self) -> &HermitianOperator {
        &self.rho
    }

    pub fn drho(&self, i: usize) -> &HermitianOperator {
        &self.drho[i]
    }

    pub fn derivatives(&self) -> &[HermitianOperator] {
        &self.drho
    }

    /// Permutation symmetry recorded by [`n_copy`], if any.
    pub fn tensor_power(&self) -> Option<TensorPower> {
        self.symmetry
    }

    /// Number of eigenvalues of `rho` above the kernel tolerance.
    pub fn rank(&self) -> usize {
        self.rho
            .eigen()
            .eigenvalues
            .iter()
            .filter(|&&l| l.abs() > fisher::KERNEL_TOL)
            .count()
    }

    pub fn is_full_rank(&self) -> bool {
        self.rank() == self.dim()
    }

    pub(crate) fn check_index(&self, i: usize) -> Result<()> {
        if i < self.n_params() {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "parameter index {i} out of range for {} parameters",
                self.n_params()
            )))
        }
    }
}

/// Photon number and incompatibility coefficient of a displaced Fock state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FockModelInfo {
    pub n: u32,
    pub c: f64,
}

impl FockModelInfo {
    pub fn new(n: u32) -> Result<Self> {
        if n == 0 {
            return Err(fock_zero());
        }
        Ok(Self {
            n,
            c: 1.0 / (2.0 * n as f64 + 1.0),
        })
    }
}

fn fock_zero() -> Error {
    Error::Domain("n = 0 gives a two-dimensional effective model, which is not supported".into())
}

/// Dephased qubit with phase `phi` and dephasing strength `delta`:
/// `rho = 1/2 [[1, (1-delta) e^{-i phi}], [(1-delta) e^{i phi}, 1]]`.
pub fn phase_dephasing(phi: f64, delta: f64) -> Result<StatisticalModel> {
    if !phi.is_finite() {
        return Err(Error::Domain(format!("phi = {phi} is not finite")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Domain(format!(
            "delta = {delta} outside the full-rank range (0, 1)"
        )));
    }
    let e = C64::from_polar(1.0, phi);
    let coh = 1.0 - delta;
    let half = C64::new(0.5, 0.0);
    let i = C64::new(0.0, 1.0);
    let two_by_two = |a: C64, b: C64, c: C64, d: C64| {
        HermitianOperator::hermitize(&ComplexMatrix::from_fn(2, 2, |r, col| {
            [[a, b], [c, d]][r][col]
        }))
    };
    let rho = two_by_two(half, e.conj() * coh * 0.5, e * coh * 0.5, half);
    let d_phi = two_by_two(ZERO, -i * e.conj() * coh * 0.5, i * e * coh * 0.5, ZERO);
    let d_delta = two_by_two(ZERO, -e.conj() * 0.5, -e * 0.5, ZERO);
    StatisticalModel::new(
        vec![phi, delta],
        vec!["phi".to_string(), "delta".to_string()],
        rho,
        vec![d_phi, d_delta],
    )
}

/// Displaced Fock state `|n>` at zero displacement, in the effective basis
/// `{|n-1>, |n>, |n+1>}`.
pub fn fock_displacement(n: u32) -> Result<StatisticalModel> {
    if n == 0 {
        return Err(fock_zero());
    }
    let a = (n as f64).sqrt() * core::f64::consts::FRAC_1_SQRT_2;
    let b = (n as f64 + 1.0).sqrt() * core::f64::consts::FRAC_1_SQRT_2;
    let re = |v: f64| C64::new(v, 0.0);
    let im = |v: f64| C64::new(0.0, v);
    let from = |m: [[C64; 3]; 3]| HermitianOperator::hermitize(&ComplexMatrix::from_fn(3, 3, |r, c| m[r][c]));
    let rho = HermitianOperator::from_real_diagonal(&[0.0, 1.0, 0.0]);
    let dx = from([
        [ZERO, re(-a), ZERO],
        [re(-a), ZERO, re(b)],
        [ZERO, re(b), ZERO],
    ]);
    let dy = from([
        [ZERO, im(a), ZERO],
        [im(-a), ZERO, im(-b)],
        [ZERO, im(b), ZERO],
    ]);
    StatisticalModel::new(
        vec![0.0, 0.0],
        vec!["x".to_string(), "y".to_string()],
        rho,
        vec![dx, dy],
    )
}

/// `copies`-fold tensor power with derivatives from the Leibniz rule.
pub fn n_copy(model: &StatisticalModel, copies: usize) -> Result<StatisticalModel> {
    if copies == 0 {
        return Err(Error::Domain("copies must be at least 1".into()));
    }
    if copies == 1 {
        return Ok(model.clone());
    }
    let d = model.dim();
    let total = (0..copies).try_fold(1usize, |acc, _| acc.checked_mul(d).filter(|&v| v <= MAX_DIM));
    let Some(_) = total else {
        return Err(Error::Resource(format!(
            "{copies} copies of a {d}-dimensional model exceed dimension {MAX_DIM}"
        )));
    };

    // powers[k] = rho^{(x) k}
    let mut powers = vec![HermitianOperator::identity(1)];
    for k in 1..copies {
        let next = powers[k - 1].kron(&model.rho);
        powers.push(next);
    }
    let rho = powers[copies - 1].kron(&model.rho);
    let drho = model
        .drho
        .iter()
        .map(|dr| {
            let mut acc = HermitianOperator::zeros(rho.dim());
            for k in 0..copies {
                let term = powers[k].kron(dr).kron(&powers[copies - 1 - k]);
                acc = acc.add(&term);
            }
            acc
        })
        .collect();
    let symmetry = match model.symmetry {
        Some(s) => TensorPower {
            local_dim: s.local_dim,
            copies: s.copies * copies,
        },
        None => TensorPower {
            local_dim: d,
            copies,
        },
    };
    let out = StatisticalModel {
        theta: model.theta.clone(),
        labels: model.labels.clone(),
        rho,
        drho,
        symmetry: Some(symmetry),
    };
    out.validate()?;
    Ok(out)
}

/// Reparameterises a two-parameter model so that its QFI is diagonal while
/// parameter `p` keeps its meaning.
///
/// The new derivatives are `d_p - (J_po / J_oo) d_o` and `d_o`. The other
/// coordinate's value shifts to `theta_o + (J_po / J_oo) theta_p` so that the
/// two parameterisations describe the same point.
pub fn orthogonalize(model: &StatisticalModel, p: usize) -> Result<StatisticalModel> {
    if model.n_params() != 2 {
        return Err(Error::Domain(format!(
            "orthogonalisation needs two parameters, model has {}",
            model.n_params()
        )));
    }
    model.check_index(p)?;
    let o = 1 - p;
    let j = fisher::qfi(model)?;
    let det = j[(0, 0)] * j[(1, 1)] - j[(0, 1)] * j[(1, 0)];
    let scale = j[(0, 0)].abs().max(j[(1, 1)].abs());
    if !(j[(o, o)] > 0.0) || !(det > 1e-12 * scale * scale) {
        return Err(Error::Singular(format!(
            "quantum Fisher information is singular (det = {det:e})"
        )));
    }
    let k = j[(p, o)] / j[(o, o)];
    let mut out = model.clone();
    if k != 0.0 {
        out.drho[p] = model.drho[p].add_scaled(-k, &model.drho[o]);
        out.theta[o] = model.theta[o] + k * model.theta[p];
    }
    Ok(out)
}

/// Central difference with step `h`, improved by one Richardson step:
/// `(4 D(h) - D(2h)) / 3` from the stencil `rho(theta + s h)` for
/// `s = -2, -1, 1, 2`.
pub fn richardson_derivative(stencil: &[HermitianOperator; 4], h: f64) -> Result<HermitianOperator> {
    if !(h > 0.0) {
        return Err(Error::Domain(format!("step {h} must be positive")));
    }
    let dim = stencil[0].dim();
    if stencil.iter().any(|s| s.dim() != dim) {
        return Err(Error::Dimension("stencil operators differ in dimension".into()));
    }
    let d1 = stencil[2].sub(&stencil[1]).scale(0.5 / h);
    let d2 = stencil[3].sub(&stencil[0]).scale(0.25 / h);
    Ok(d1.scale(4.0 / 3.0).add_scaled(-1.0 / 3.0, &d2))
}

/// Derivative of `f` at `theta` by [`richardson_derivative`].
pub fn finite_difference(
    f: impl Fn(f64) -> Result<HermitianOperator>,
    theta: f64,
    h: f64,
) -> Result<HermitianOperator> {
    let stencil = [f(theta - 2.0 * h)?, f(theta - h)?, f(theta + h)?, f(theta + 2.0 * h)?];
    richardson_derivative(&stencil, h)
}
