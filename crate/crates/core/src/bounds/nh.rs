//! Nagaoka-Hayashi bound for two parameters as a semidefinite program.
//!
//! Variables are Hermitian `L11, L22, L12 (= L21)` and observables `X1, X2`.
//! The program is
//!
//! ```text
//! minimise   sum_jk W_jk tr[rho L_jk]
//! subject to tr[rho X_j] = 0,  tr[d_k rho X_j] = delta_jk,
//!            [[L11, L12, X1], [L12, L22, X2], [X1, X2, I]]  PSD.
//! ```
//!
//! It is posed in the solver's dual form: every free real coordinate becomes
//! one `y_i`, and the slack `S = C - sum_i y_i A_i` is the real embedding of
//! the block matrix above. The linear constraints on `X_j` are eliminated
//! beforehand, so `S` carries only the PSD condition.
//!
//! For n-copy models all operators are restricted to the permutation-invariant
//! subspace. The program is invariant under permuting copies and is convex,
//! so averaging any optimum over the group gives an invariant optimum.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, HermitianOperator, C64};
use crate::model::{StatisticalModel, TensorPower};
use crate::sdp::{self, IterationRecord, SdpProblem, SdpStatus, SolveOptions, SparseSymmetric, SymmetricBuilder};
#[allow(unused_imports)]
use crate::prelude::*;

use super::WeightMatrix;

/// Accepted gap and infeasibility for a point that stopped at the iteration cap.
const ACCEPT_TOL: f64 = 1e-7;

/// Hermitian basis element stored as sparse complex entries (both triangles).
#[derive(Clone, Debug, PartialEq)]
struct BasisElement {
    entries: Vec<(usize, usize, C64)>,
}

impl BasisElement {
    /// `Re tr[A B]` for Hermitian `A`.
    fn trace_with(&self, a: &HermitianOperator) -> f64 {
        self.entries.iter().map(|&(r, c, z)| (z * a[(c, r)]).re).sum()
    }

    fn to_matrix(&self, dim: usize) -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(dim, dim);
        for &(r, c, z) in &self.entries {
            m[(r, c)] += z;
        }
        m
    }
}

/// Orthonormal basis (under `Re tr[A B]`) of the Hermitian operators that
/// commute with permutations of the tensor factors. With no symmetry this is
/// the ordinary basis of `dim x dim` Hermitian matrices.
fn hermitian_basis(dim: usize, symmetry: Option<TensorPower>) -> Vec<BasisElement> {
    let (local, copies) = match symmetry {
        Some(t) => (t.local_dim, t.copies),
        None => (dim, 1),
    };
    debug_assert_eq!(local.pow(copies as u32), dim);
    let key = |a: usize, b: usize| {
        let (mut a, mut b) = (a, b);
        let mut digits: Vec<(usize, usize)> = (0..copies)
            .map(|_| {
                let d = (a % local, b % local);
                a /= local;
                b /= local;
                d
            })
            .collect();
        digits.sort_unstable();
        digits
    };
    let mut orbits: BTreeMap<Vec<(usize, usize)>, Vec<(usize, usize)>> = BTreeMap::new();
    for a in 0..dim {
        for b in 0..dim {
            orbits.entry(key(a, b)).or_default().push((a, b));
        }
    }
    let transpose_key = |k: &Vec<(usize, usize)>| {
        let mut t: Vec<(usize, usize)> = k.iter().map(|&(x, y)| (y, x)).collect();
        t.sort_unstable();
        t
    };
    let mut real = Vec::new();
    let mut imag = Vec::new();
    for (k, pairs) in &orbits {
        let tk = transpose_key(k);
        if tk == *k {
            let norm = (pairs.len() as f64).sqrt();
            real.push(BasisElement {
                entries: pairs.iter().map(|&(a, b)| (a, b, C64::new(1.0 / norm, 0.0))).collect(),
            });
        } else if *k < tk {
            let mirror = &orbits[&tk];
            let norm = (2.0 * pairs.len() as f64).sqrt();
            let re = C64::new(1.0 / norm, 0.0);
            let im = C64::new(0.0, 1.0 / norm);
            real.push(BasisElement {
                entries: pairs
                    .iter()
                    .map(|&(a, b)| (a, b, re))
                    .chain(mirror.iter().map(|&(a, b)| (a, b, re)))
                    .collect(),
            });
            imag.push(BasisElement {
                entries: pairs
                    .iter()
                    .map(|&(a, b)| (a, b, im))
                    .chain(mirror.iter().map(|&(a, b)| (a, b, -im)))
                    .collect(),
            });
        }
    }
    real.extend(imag);
    real
}

/// Solution of `G x = e` for the 3 x K system of linear constraints on one
/// observable: a particular solution plus sparse null-space directions.
struct Elimination {
    particular: Vec<(usize, f64)>,
    null_space: Vec<Vec<(usize, f64)>>,
}

/// Gaussian elimination with full pivoting. Pivot coordinates are expressed in
/// terms of the free ones, so each null direction touches at most four basis
/// elements.
fn eliminate(g: &[Vec<f64>], rhs: &[f64]) -> Result<Elimination> {
    let rows = g.len();
    let k = g[0].len();
    let mut a: Vec<Vec<f64>> = g.to_vec();
    let mut e = rhs.to_vec();
    let scale = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut pivots: Vec<(usize, usize)> = Vec::with_capacity(rows);
    let mut used_rows = vec![false; rows];
    let mut used_cols = vec![false; k];
    for _ in 0..rows {
        let mut best = (0.0, 0, 0);
        for (r, row) in a.iter().enumerate() {
            if used_rows[r] {
                continue;
            }
            for (c, &v) in row.iter().enumerate() {
                if !used_cols[c] && v.abs() > best.0 {
                    best = (v.abs(), r, c);
                }
            }
        }
        let (mag, pr, pc) = best;
        if !(mag > 1e-12 * scale) {
            return Err(Error::Singular(
                "local unbiasedness constraints are linearly dependent".into(),
            ));
        }
        used_rows[pr] = true;
        used_cols[pc] = true;
        let inv = 1.0 / a[pr][pc];
        for v in a[pr].iter_mut() {
            *v *= inv;
        }
        e[pr] *= inv;
        for r in 0..rows {
            if r != pr && a[r][pc] != 0.0 {
                let f = a[r][pc];
                let (src, dst) = if r < pr {
                    let (lo, hi) = a.split_at_mut(pr);
                    (&hi[0], &mut lo[r])
                } else {
                    let (lo, hi) = a.split_at_mut(r);
                    (&lo[pr], &mut hi[0])
                };
                for (d, s) in dst.iter_mut().zip(src.iter()) {
                    *d -= f * s;
                }
                e[r] -= f * e[pr];
            }
        }
        pivots.push((pr, pc));
    }
    let particular = pivots.iter().map(|&(r, c)| (c, e[r])).filter(|&(_, v)| v != 0.0).collect();
    let null_space = (0..k)
        .filter(|c| !used_cols[*c])
        .map(|f| {
            let mut dir = vec![(f, 1.0)];
            for &(r, c) in &pivots {
                let v = -a[r][f];
                if v.abs() > 1e-15 {
                    dir.push((c, v));
                }
            }
            dir
        })
        .collect();
    Ok(Elimination {
        particular,
        null_space,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct NhResult {
    /// The bound `C(W)`.
    pub value: f64,
    /// Optimal locally unbiased observables `X1, X2`.
    pub observables: [HermitianOperator; 2],
    /// `tr[rho L_jk]` at the optimum; its diagonal is the point where the
    /// supporting line touches the bound region.
    pub variance: [[f64; 2]; 2],
    pub gap: f64,
    pub status: SdpStatus,
    pub iterations: usize,
    /// Solver iterations, when requested through the options.
    pub trace: Vec<IterationRecord>,
}

/// Assembled program together with what is needed to read the answer back.
struct Assembly {
    problem: SdpProblem,
    basis: Vec<BasisElement>,
    /// Per observable: particular coordinates and, per null direction, its
    /// index into `y`.
    elim: [Elimination; 2],
    x_offset: [usize; 2],
}

fn assemble(model: &StatisticalModel, w: &WeightMatrix) -> Result<Assembly> {
    if model.n_params() != 2 {
        return Err(Error::Domain(format!(
            "the bound is implemented for two parameters, model has {}",
            model.n_params()
        )));
    }
    let d = model.dim();
    let basis = hermitian_basis(d, model.tensor_power());
    let k = basis.len();
    let rho = model.rho();
    let g: Vec<Vec<f64>> = [rho, model.drho(0), model.drho(1)]
        .iter()
        .map(|op| basis.iter().map(|b| b.trace_with(op)).collect())
        .collect();
    let elim = [eliminate(&g, &[0.0, 1.0, 0.0])?, eliminate(&g, &[0.0, 0.0, 1.0])?];

    let n = 3 * d;
    let dim = 2 * n;
    let place = |blk_r: usize, blk_c: usize, coords: &[(usize, f64)], scale: f64| {
        let mut sb = SymmetricBuilder::new(dim);
        for &(idx, v) in coords {
            for &(r, c, z) in &basis[idx].entries {
                let (gr, gc) = (blk_r * d + r, blk_c * d + c);
                if blk_r == blk_c && gr > gc {
                    continue;
                }
                sb.add_complex(n, gr, gc, z * (v * scale));
            }
        }
        sb.build()
    };

    // C = identity block plus the particular observables.
    let mut cb = SymmetricBuilder::new(dim);
    for i in 0..d {
        cb.add_complex(n, 2 * d + i, 2 * d + i, C64::new(1.0, 0.0));
    }
    for (j, el) in elim.iter().enumerate() {
        for &(idx, v) in &el.particular {
            for &(r, c, z) in &basis[idx].entries {
                cb.add_complex(n, j * d + r, 2 * d + c, z * v);
            }
        }
    }
    let c_mat = cb.build();

    let tr_rho: Vec<f64> = g[0].clone();
    let mut constraints: Vec<(SparseSymmetric, f64)> = Vec::with_capacity(3 * k + 2 * (k - 3));
    let weight = [w.get(0, 0), w.get(1, 1), 2.0 * w.get(0, 1)];
    for (slot, &(br, bc)) in [(0usize, 0usize), (1, 1), (0, 1)].iter().enumerate() {
        for idx in 0..k {
            let a = place(br, bc, &[(idx, 1.0)], -1.0);
            constraints.push((a, -weight[slot] * tr_rho[idx]));
        }
    }
    let mut x_offset = [0; 2];
    for (j, el) in elim.iter().enumerate() {
        x_offset[j] = constraints.len();
        for dir in &el.null_space {
            constraints.push((place(j, 2, dir, -1.0), 0.0));
        }
    }
    let problem = SdpProblem::new(vec![dim], c_mat, constraints)?;
    Ok(Assembly {
        problem,
        basis,
        elim,
        x_offset,
    })
}

/// Nagaoka-Hayashi bound `C(W)` with the default solver tolerance.
pub fn nagaoka_hayashi(model: &StatisticalModel, w: &WeightMatrix) -> Result<NhResult> {
    nagaoka_hayashi_with(model, w, &SolveOptions::default())
}

pub fn nagaoka_hayashi_with(model: &StatisticalModel, w: &WeightMatrix, opts: &SolveOptions) -> Result<NhResult> {
    let asm = assemble(model, w)?;
    let sol = sdp::solve(&asm.problem, opts);
    let accepted = match sol.status {
        SdpStatus::Optimal => true,
        SdpStatus::MaxIter => {
            sol.gap <= ACCEPT_TOL && sol.primal_infeasibility <= ACCEPT_TOL && sol.dual_infeasibility <= ACCEPT_TOL
        }
        SdpStatus::Infeasible => false,
    };
    if !accepted {
        return Err(Error::Solver(format!(
            "bound SDP ended with status {} after {} iterations (gap {:e}, infeasibility {:e}/{:e})",
            sol.status.as_str(),
            sol.iterations,
            sol.gap,
            sol.primal_infeasibility,
            sol.dual_infeasibility
        )));
    }
    let d = model.dim();
    let k = asm.basis.len();
    let rebuild = |coords: &mut dyn Iterator<Item = (usize, f64)>| {
        let mut m = ComplexMatrix::zeros(d, d);
        for (idx, v) in coords {
            m = &m + &asm.basis[idx].to_matrix(d).scale_real(v);
        }
        HermitianOperator::hermitize(&m)
    };
    let observables = [0, 1].map(|j| {
        let el = &asm.elim[j];
        let mut coords: Vec<(usize, f64)> = el.particular.clone();
        for (f, dir) in el.null_space.iter().enumerate() {
            let t = sol.y[asm.x_offset[j] + f];
            coords.extend(dir.iter().map(|&(idx, v)| (idx, v * t)));
        }
        rebuild(&mut coords.into_iter())
    });
    let block = |slot: usize| {
        let y = &sol.y[slot * k..(slot + 1) * k];
        (0..k).map(|idx| y[idx] * asm.basis[idx].trace_with(model.rho())).sum::<f64>()
    };
    let (v11, v22, v12) = (block(0), block(1), block(2));
    Ok(NhResult {
        value: -sol.dual_obj,
        observables,
        variance: [[v11, v12], [v12, v22]],
        gap: sol.gap,
        status: sol.status,
        iterations: sol.iterations,
        trace: sol.trace,
    })
}

/// Number of real SDP variables used for `model`.
pub fn variable_count(model: &StatisticalModel) -> usize {
    let k = hermitian_basis(model.dim(), model.tensor_power()).len();
    3 * k + 2 * (k - 3)
}
