//! Symmetric logarithmic derivatives, quantum and classical Fisher information,
//! POVMs and spectral projectors.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{orthonormality_defect, ComplexMatrix, HermitianOperator, RealMatrix, C64};
use crate::model::StatisticalModel;
#[allow(unused_imports)]
use crate::prelude::*;

/// Eigenvalues of `rho` with `|lambda|` at most this are treated as kernel.
pub const KERNEL_TOL: f64 = 1e-10;
/// A derivative entry on the kernel-kernel block above this has no SLD.
pub const KERNEL_CONSISTENCY_TOL: f64 = 1e-9;
pub const DEFAULT_DEGENERACY_TOL: f64 = 1e-8;
pub const DEFAULT_PROB_FLOOR: f64 = 1e-12;
pub const POVM_PSD_FLOOR: f64 = -1e-10;
pub const POVM_COMPLETENESS_TOL: f64 = 1e-9;

/// All solutions of `d rho = (L rho + rho L) / 2`: the minimal-norm
/// `particular` solution plus any real combination of `kernel_basis`.
#[derive(Clone, Debug, PartialEq)]
pub struct SldFamily {
    pub particular: HermitianOperator,
    pub kernel_basis: Vec<HermitianOperator>,
    pub free_dim: usize,
}

impl SldFamily {
    /// `particular + sum_k c_k kernel_basis[k]`.
    pub fn member(&self, coefficients: &[f64]) -> Result<HermitianOperator> {
        if coefficients.len() != self.free_dim {
            return Err(Error::Dimension(format!(
                "{} coefficients for a family with {} free directions",
                coefficients.len(),
                self.free_dim
            )));
        }
        let mut l = self.particular.clone();
        for (c, k) in coefficients.iter().zip(&self.kernel_basis) {
            if *c != 0.0 {
                l = l.add_scaled(*c, k);
            }
        }
        Ok(l)
    }

    /// Same family with the kernel directions reordered by `perm`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        Self {
            particular: self.particular.clone(),
            kernel_basis: perm.iter().map(|&i| self.kernel_basis[i].clone()).collect(),
            free_dim: self.free_dim,
        }
    }
}

/// `max |d rho - (L rho + rho L)/2|`.
pub fn sld_residual(rho: &HermitianOperator, drho: &HermitianOperator, l: &HermitianOperator) -> f64 {
    l.jordan(rho).max_abs_diff(drho)
}

pub fn sld(model: &StatisticalModel, i: usize) -> Result<SldFamily> {
    sld_with_tolerance(model, i, KERNEL_TOL)
}

pub fn sld_with_tolerance(model: &StatisticalModel, i: usize, kernel_tol: f64) -> Result<SldFamily> {
    model.check_index(i)?;
    sld_for(model.rho(), model.drho(i), kernel_tol)
}

/// SLD family for an arbitrary state/derivative pair.
pub fn sld_for(rho: &HermitianOperator, drho: &HermitianOperator, kernel_tol: f64) -> Result<SldFamily> {
    if rho.dim() != drho.dim() {
        return Err(Error::Dimension(format!(
            "state dimension {} vs derivative dimension {}",
            rho.dim(),
            drho.dim()
        )));
    }
    let n = rho.dim();
    let spec = rho.eigen();
    let v = &spec.eigenvectors;
    let lam = &spec.eigenvalues;
    let d = drho.sandwich(v);
    let kernel: Vec<usize> = (0..n).filter(|&a| lam[a].abs() <= kernel_tol).collect();
    let in_kernel = |a: usize| lam[a].abs() <= kernel_tol;

    let mut l = ComplexMatrix::zeros(n, n);
    for a in 0..n {
        for b in 0..n {
            if in_kernel(a) && in_kernel(b) {
                let z = d[(a, b)];
                if z.norm() > KERNEL_CONSISTENCY_TOL {
                    return Err(Error::ModelInconsistency(format!(
                        "derivative has weight {:e} on the kernel of rho (eigen-indices {a},{b}); no SLD exists",
                        z.norm()
                    )));
                }
            } else {
                l[(a, b)] = d[(a, b)] * (2.0 / (lam[a] + lam[b]));
            }
        }
    }
    let particular = HermitianOperator::hermitize(&l).lift(v);

    let r0 = kernel.len();
    let mut kernel_basis = Vec::with_capacity(r0 * r0);
    let unit = |entries: &[(usize, usize, C64)]| {
        let mut m = ComplexMatrix::zeros(n, n);
        for &(r, c, z) in entries {
            m[(r, c)] = z;
        }
        HermitianOperator::hermitize(&m).lift(v)
    };
    for (x, &a) in kernel.iter().enumerate() {
        for &b in &kernel[x..] {
            let one = C64::new(1.0, 0.0);
            if a == b {
                kernel_basis.push(unit(&[(a, a, one)]));
            } else {
                kernel_basis.push(unit(&[(a, b, one), (b, a, one)]));
            }
        }
    }
    for (x, &a) in kernel.iter().enumerate() {
        for &b in &kernel[x + 1..] {
            let i = C64::new(0.0, 1.0);
            kernel_basis.push(unit(&[(a, b, i), (b, a, -i)]));
        }
    }
    Ok(SldFamily {
        particular,
        free_dim: kernel_basis.len(),
        kernel_basis,
    })
}

/// `J_ij = Re tr[rho L_i L_j]` from the particular SLDs.
pub fn qfi(model: &StatisticalModel) -> Result<RealMatrix> {
    let slds = (0..model.n_params())
        .map(|i| sld(model, i).map(|f| f.particular))
        .collect::<Result<Vec<_>>>()?;
    Ok(qfi_from_slds(model.rho(), &slds))
}

pub fn qfi_from_slds(rho: &HermitianOperator, slds: &[HermitianOperator]) -> RealMatrix {
    let n = slds.len();
    let rl: Vec<ComplexMatrix> = slds.iter().map(|l| rho.matrix().matmul(l.matrix())).collect();
    let mut j = RealMatrix::zeros(n, n);
    for a in 0..n {
        for b in a..n {
            let v = rl[a].trace_product(slds[b].matrix()).re;
            j[(a, b)] = v;
            j[(b, a)] = v;
        }
    }
    j
}

/// Finite set of positive operators summing to the identity.
#[derive(Clone, Debug, PartialEq)]
pub struct Povm {
    elements: Vec<HermitianOperator>,
    labels: Vec<String>,
}

impl Povm {
    pub fn new(elements: Vec<HermitianOperator>) -> Result<Self> {
        let labels = (0..elements.len()).map(|k| k.to_string()).collect();
        Self::with_labels(elements, labels)
    }

    pub fn with_labels(elements: Vec<HermitianOperator>, labels: Vec<String>) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::validation("completeness", "POVM has no elements"));
        }
        if labels.len() != elements.len() {
            return Err(Error::Dimension(format!(
                "{} labels for {} outcomes",
                labels.len(),
                elements.len()
            )));
        }
        let dim = elements[0].dim();
        let mut sum = HermitianOperator::zeros(dim);
        for (k, e) in elements.iter().enumerate() {
            if e.dim() != dim {
                return Err(Error::Dimension(format!(
                    "element {k} has dimension {}, expected {dim}",
                    e.dim()
                )));
            }
            let min = e.eigen().eigenvalues[0];
            if min < POVM_PSD_FLOOR {
                return Err(Error::validation(
                    "PSD",
                    format!("element {k} has eigenvalue {min:e}"),
                ));
            }
            sum = sum.add(e);
        }
        let defect = sum.max_abs_diff(&HermitianOperator::identity(dim));
        if defect > POVM_COMPLETENESS_TOL {
            return Err(Error::validation(
                "completeness",
                format!("elements sum to identity only within {defect:e}"),
            ));
        }
        Ok(Self { elements, labels })
    }

    /// Rank-one projective measurement onto the columns of a unitary.
    pub fn projective(basis: &ComplexMatrix) -> Result<Self> {
        if basis.rows() != basis.cols() {
            return Err(Error::Dimension("projective basis must be square".into()));
        }
        let defect = orthonormality_defect(basis);
        if defect > 1e-8 {
            return Err(Error::validation(
                "orthonormality",
                format!("basis deviates from unitary by {defect:e}"),
            ));
        }
        let elements = (0..basis.cols())
            .map(|k| HermitianOperator::projector(&basis.column(k)))
            .collect();
        Self::new(elements)
    }

    pub fn dim(&self) -> usize {
        self.elements[0].dim()
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[HermitianOperator] {
        &self.elements
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// `p_k = tr[Pi_k rho]`.
    pub fn probabilities(&self, rho: &HermitianOperator) -> Vec<f64> {
        self.elements.iter().map(|e| e.trace_with(rho)).collect()
    }
}

/// Classical Fisher information together with the outcome statistics it was
/// built from.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassicalFisher {
    pub matrix: RealMatrix,
    pub probabilities: Vec<f64>,
    /// `derivatives[i][k] = d_i p_k`.
    pub derivatives: Vec<Vec<f64>>,
    /// Some outcome has vanishing probability but nonzero derivative; those
    /// outcomes are left out of `matrix`.
    pub singular: bool,
}

pub fn classical_fisher(model: &StatisticalModel, povm: &Povm) -> Result<ClassicalFisher> {
    classical_fisher_with_floor(model, povm, DEFAULT_PROB_FLOOR)
}

pub fn classical_fisher_with_floor(
    model: &StatisticalModel,
    povm: &Povm,
    prob_floor: f64,
) -> Result<ClassicalFisher> {
    if povm.dim() != model.dim() {
        return Err(Error::Dimension(format!(
            "POVM dimension {} vs model dimension {}",
            povm.dim(),
            model.dim()
        )));
    }
    let n = model.n_params();
    let probabilities = povm.probabilities(model.rho());
    if let Some((k, p)) = probabilities
        .iter()
        .enumerate()
        .find(|(_, &p)| p < -POVM_PSD_FLOOR.abs())
    {
        return Err(Error::validation(
            "probability",
            format!("outcome {k} has probability {p:e}"),
        ));
    }
    let derivatives: Vec<Vec<f64>> = (0..n).map(|i| povm.probabilities(model.drho(i))).collect();
    let mut matrix = RealMatrix::zeros(n, n);
    let mut singular = false;
    for (k, &p) in probabilities.iter().enumerate() {
        if p <= prob_floor {
            if (0..n).any(|i| derivatives[i][k].abs() > 1e-9) {
                singular = true;
            }
            continue;
        }
        for a in 0..n {
            for b in 0..n {
                matrix[(a, b)] += derivatives[a][k] * derivatives[b][k] / p;
            }
        }
    }
    Ok(ClassicalFisher {
        matrix,
        probabilities,
        derivatives,
        singular,
    })
}

/// One eigenspace: eigenvalue, orthonormal basis columns and rank.
#[derive(Clone, Debug, PartialEq)]
pub struct Eigenspace {
    pub eigenvalue: f64,
    pub basis: ComplexMatrix,
    pub rank: usize,
}

impl Eigenspace {
    pub fn projector(&self) -> HermitianOperator {
        HermitianOperator::identity(self.rank).lift(&self.basis)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProjectorSet {
    pub spaces: Vec<Eigenspace>,
}

impl ProjectorSet {
    pub fn len(&self) -> usize {
        self.spaces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spaces.is_empty()
    }

    pub fn iter(&self) -> core::slice::Iter<'_, Eigenspace> {
        self.spaces.iter()
    }

    pub fn ranks(&self) -> Vec<usize> {
        self.spaces.iter().map(|s| s.rank).collect()
    }

    /// Largest `|<u|v>|` between columns of different eigenspaces.
    pub fn cross_overlap(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, a) in self.spaces.iter().enumerate() {
            for b in &self.spaces[i + 1..] {
                worst = worst.max(a.basis.adjoint().matmul(&b.basis).max_abs());
            }
        }
        worst
    }
}

/// Groups the eigenvectors of `l` into eigenspaces. Consecutive eigenvalues
/// closer than `degeneracy_tol * max(1, |lambda|)` share a projector.
pub fn spectral_projectors(l: &HermitianOperator, degeneracy_tol: f64) -> ProjectorSet {
    let spec = l.eigen();
    let lam = &spec.eigenvalues;
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for k in 0..lam.len() {
        let joins = k > 0 && lam[k] - lam[k - 1] <= degeneracy_tol * lam[k].abs().max(1.0);
        match groups.last_mut() {
            Some(g) if joins => g.push(k),
            _ => groups.push(vec![k]),
        }
    }
    let spaces = groups
        .into_iter()
        .map(|g| Eigenspace {
            eigenvalue: g.iter().map(|&k| lam[k]).sum::<f64>() / g.len() as f64,
            basis: spec.eigenvectors.select_columns(&g),
            rank: g.len(),
        })
        .collect();
    ProjectorSet { spaces }
}

/// Projective measurement in the eigenbasis of `l`.
pub fn eigenbasis_povm(l: &HermitianOperator) -> Result<Povm> {
    Povm::projective(&l.eigen().eigenvectors)
}
