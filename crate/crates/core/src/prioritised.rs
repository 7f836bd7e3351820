//! Prioritised estimation: can one parameter be measured at its quantum
//! Cramer-Rao bound while the measurement still learns the other?
//!
//! For a full-rank state the answer is read off the eigenspaces of the
//! prioritised SLD (after orthogonalising the parameters): it is yes exactly
//! when some eigenspace sees a nonzero compression of the other derivative.
//! The optimal fine-grained measurement then diagonalises, inside each
//! eigenspace, the SLD of the compressed state.
//!
//! Rank-deficient states leave the SLD undetermined on the kernel; there the
//! question becomes a search over the SLD family, see [`sld_family_search`].

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::fisher::{
    self, classical_fisher, sld, sld_for, spectral_projectors, ClassicalFisher, Povm, SldFamily,
    DEFAULT_DEGENERACY_TOL, KERNEL_TOL,
};
use crate::linalg::{compress, ComplexMatrix, HermitianOperator, RealMatrix};
use crate::model::{orthogonalize, StatisticalModel};
use crate::optimize::{nelder_mead, NelderMeadOptions};
#[allow(unused_imports)]
use crate::prelude::*;
use crate::rng;

/// `||P_j d_o rho P_j||_max` above this counts as nonzero.
pub const WITNESS_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct Witness {
    pub eigenvalue: f64,
    pub rank: usize,
    pub norm: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PrioritisedReport {
    pub possible: bool,
    pub p: usize,
    pub witnesses: Vec<Witness>,
    pub fine_povm: Option<Povm>,
    /// Classical Fisher matrix of `fine_povm` in the orthogonalised
    /// parameterisation.
    pub fisher: Option<RealMatrix>,
    /// `(V_p, V_o)`.
    pub mse_point: Option<(f64, f64)>,
}

impl PrioritisedReport {
    /// The witness norm closest to [`WITNESS_TOL`] on a log scale, to show
    /// how clear-cut the decision is.
    pub fn margin(&self) -> Option<f64> {
        let dist = |w: &Witness| (w.norm.max(f64::MIN_POSITIVE) / WITNESS_TOL).ln().abs();
        self.witnesses
            .iter()
            .min_by(|a, b| dist(a).total_cmp(&dist(b)))
            .map(|w| w.norm)
    }
}

/// Measurement built for a feasible prioritised parameter.
#[derive(Clone, Debug, PartialEq)]
pub struct FineMeasurement {
    pub povm: Povm,
    pub fisher: ClassicalFisher,
    /// `([J^-1]_pp, 1 / F_oo)`.
    pub mse_point: (f64, f64),
}

fn full_rank_pair(model: &StatisticalModel, p: usize) -> Result<(StatisticalModel, usize)> {
    if model.n_params() != 2 {
        return Err(Error::Domain(format!(
            "prioritised estimation is defined for two parameters, model has {}",
            model.n_params()
        )));
    }
    model.check_index(p)?;
    if !model.is_full_rank() {
        return Err(Error::RankDeficient(format!(
            "state has rank {} of {}; the eigenspace criterion does not apply, use sld_family_search",
            model.rank(),
            model.dim()
        )));
    }
    Ok((orthogonalize(model, p)?, 1 - p))
}

/// Decides whether parameter `p` can be estimated optimally while keeping
/// information about the other one. When it can, the report carries the fine
/// measurement from [`build_measurement`].
pub fn check(model: &StatisticalModel, p: usize) -> Result<PrioritisedReport> {
    let (m, o) = full_rank_pair(model, p)?;
    let op = sld(&m, p)?.particular;
    let witnesses = witnesses(&m, o, &op)?;
    let possible = witnesses.iter().any(|w| w.norm > WITNESS_TOL);
    let mut report = PrioritisedReport {
        possible,
        p,
        witnesses,
        fine_povm: None,
        fisher: None,
        mse_point: None,
    };
    if possible {
        let fine = fine_measurement(&m, p, o, &op)?;
        report.fine_povm = Some(fine.povm);
        report.fisher = Some(fine.fisher.matrix);
        report.mse_point = Some(fine.mse_point);
    }
    Ok(report)
}

fn witnesses(m: &StatisticalModel, o: usize, op: &HermitianOperator) -> Result<Vec<Witness>> {
    spectral_projectors(op, DEFAULT_DEGENERACY_TOL)
        .iter()
        .map(|s| {
            Ok(Witness {
                eigenvalue: s.eigenvalue,
                rank: s.rank,
                norm: compress(&s.basis, m.drho(o))?.max_abs(),
            })
        })
        .collect()
}

/// Optimal measurement for prioritised parameter `p`: the eigenprojectors of
/// its SLD, each refined by the eigenvectors of the compressed SLD of the
/// other parameter. Fails when prioritised estimation is impossible.
pub fn build_measurement(model: &StatisticalModel, p: usize) -> Result<FineMeasurement> {
    let (m, o) = full_rank_pair(model, p)?;
    let op = sld(&m, p)?.particular;
    let strongest = witnesses(&m, o, &op)?.iter().fold(0.0f64, |a, w| a.max(w.norm));
    if strongest <= WITNESS_TOL {
        return Err(Error::Domain(format!(
            "prioritised estimation of parameter {p} is impossible: every eigenspace witness is at most {strongest:e}"
        )));
    }
    fine_measurement(&m, p, o, &op)
}

fn fine_measurement(m: &StatisticalModel, p: usize, o: usize, op: &HermitianOperator) -> Result<FineMeasurement> {
    let n = m.dim();
    let spaces = spectral_projectors(op, DEFAULT_DEGENERACY_TOL);
    let mut columns: Vec<Vec<crate::linalg::C64>> = Vec::with_capacity(n);
    for (j, s) in spaces.iter().enumerate() {
        if s.rank == 1 {
            columns.push(s.basis.column(0));
            continue;
        }
        let rho_j = compress(&s.basis, m.rho())?;
        let d_j = compress(&s.basis, m.drho(o))?;
        let l_j = sld_for(&rho_j, &d_j, KERNEL_TOL)
            .map_err(|e| {
                Error::ModelInconsistency(format!(
                    "compressed SLD on eigenspace {j} (eigenvalue {:.6}, rank {}): {e}",
                    s.eigenvalue, s.rank
                ))
            })?
            .particular;
        let u = l_j.eigen().eigenvectors;
        let lifted = s.basis.matmul(&u);
        for k in 0..s.rank {
            columns.push(lifted.column(k));
        }
    }
    let mut basis = ComplexMatrix::zeros(n, n);
    for (k, c) in columns.iter().enumerate() {
        basis.set_column(k, c);
    }
    let povm = Povm::projective(&basis)?;
    let fisher = classical_fisher(m, &povm)?;
    let j = fisher::qfi(m)?;
    let f_oo = fisher.matrix[(o, o)];
    let v_o = if f_oo > 0.0 { 1.0 / f_oo } else { f64::INFINITY };
    Ok(FineMeasurement {
        povm,
        mse_point: (1.0 / j[(p, p)], v_o),
        fisher,
    })
}

#[derive(Clone, Debug)]
pub struct SearchOptions {
    /// Random starts in addition to the zero start.
    pub restarts: usize,
    /// Half-width of the start box.
    pub box_half_width: f64,
    /// Allowed relative loss in `F_pp` against `J_pp`.
    pub tol: f64,
    pub seed: u64,
    pub nelder_mead: NelderMeadOptions,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            restarts: 32,
            box_half_width: 3.0,
            tol: 1e-8,
            seed: 0,
            nelder_mead: NelderMeadOptions::default(),
        }
    }
}

/// Outcome of one local search.
#[derive(Clone, Debug, PartialEq)]
pub struct Candidate {
    pub start: Vec<f64>,
    pub coefficients: Vec<f64>,
    /// `F_oo`, or `None` when no admissible point was found.
    pub f_oo: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchResult {
    pub found: bool,
    pub coefficients: Vec<f64>,
    pub f_oo: f64,
    pub f_pp: f64,
    pub j_pp: f64,
    pub povm: Povm,
    /// `F_oo` with all kernel coefficients at zero.
    pub baseline_f_oo: f64,
    /// Largest `|c_k|` at the optimum over the start box half-width.
    pub box_usage: f64,
    pub candidates: Vec<Candidate>,
}

/// Problem data shared by all restarts.
#[derive(Clone, Debug)]
pub struct SearchProblem<'a> {
    model: &'a StatisticalModel,
    family: SldFamily,
    p: usize,
    o: usize,
    j_pp: f64,
    opts: SearchOptions,
}

impl<'a> SearchProblem<'a> {
    pub fn new(model: &'a StatisticalModel, p: usize, o: usize, opts: SearchOptions) -> Result<Self> {
        let family = sld(model, p)?;
        Self::with_family(model, family, p, o, opts)
    }

    /// Uses a given SLD family, e.g. one with reordered kernel directions.
    pub fn with_family(
        model: &'a StatisticalModel,
        family: SldFamily,
        p: usize,
        o: usize,
        opts: SearchOptions,
    ) -> Result<Self> {
        model.check_index(p)?;
        model.check_index(o)?;
        if p == o {
            return Err(Error::Domain("prioritised and other parameter coincide".into()));
        }
        if family.free_dim == 0 {
            return Err(Error::Domain(
                "the SLD is unique (full-rank state); use check instead of a family search".into(),
            ));
        }
        let j = fisher::qfi(model)?;
        Ok(Self {
            model,
            family,
            p,
            o,
            j_pp: j[(p, p)],
            opts,
        })
    }

    pub fn free_dim(&self) -> usize {
        self.family.free_dim
    }

    /// `(F_pp, F_oo, POVM)` for the eigenbasis of the family member at `c`.
    pub fn evaluate(&self, c: &[f64]) -> Result<(f64, f64, Povm)> {
        let l = self.family.member(c)?;
        let povm = fisher::eigenbasis_povm(&l)?;
        let f = classical_fisher(self.model, &povm)?;
        Ok((f.matrix[(self.p, self.p)], f.matrix[(self.o, self.o)], povm))
    }

    /// `F_oo` where the measurement keeps `F_pp = J_pp`, otherwise `None`.
    fn objective(&self, c: &[f64]) -> Option<f64> {
        let (f_pp, f_oo, _) = self.evaluate(c).ok()?;
        let ok = (f_pp - self.j_pp).abs() <= self.opts.tol * self.j_pp.max(1.0) && f_oo.is_finite();
        ok.then_some(f_oo)
    }

    /// Zero start followed by `restarts` uniform draws from the box.
    pub fn starts(&self) -> Vec<Vec<f64>> {
        let d = self.family.free_dim;
        let w = self.opts.box_half_width;
        let mut out = vec![vec![0.0; d]];
        for r in 0..self.opts.restarts {
            let mut g = rng::stream(self.opts.seed, rng::SEARCH, r as u64);
            out.push((0..d).map(|_| g.random_range(-w..=w)).collect());
        }
        out
    }

    /// Local Nelder-Mead ascent of `F_oo` from `start`.
    pub fn local(&self, start: &[f64]) -> Candidate {
        let f = |c: &[f64]| self.objective(c).map_or(f64::INFINITY, |v| -v);
        let m = nelder_mead(f, start, &self.opts.nelder_mead);
        let f_oo = self.objective(&m.x);
        Candidate {
            start: start.to_vec(),
            coefficients: m.x,
            f_oo,
        }
    }

    /// Best candidate: largest `F_oo`, ties (within `1e-10` relative) going to
    /// the lexicographically smallest coefficients. Independent of the order
    /// of `candidates`.
    pub fn reduce(&self, candidates: Vec<Candidate>) -> Result<SearchResult> {
        let baseline = self.evaluate(&vec![0.0; self.family.free_dim])?.1;
        let best_value = candidates.iter().filter_map(|c| c.f_oo).fold(f64::NEG_INFINITY, f64::max);
        let winner = candidates
            .iter()
            .filter(|c| c.f_oo.is_some_and(|v| v >= best_value - 1e-10 * best_value.abs().max(1.0)))
            .min_by(|a, b| lexicographic(&a.coefficients, &b.coefficients));
        let (found, coefficients) = match winner {
            Some(c) => (true, c.coefficients.clone()),
            None => (false, vec![0.0; self.family.free_dim]),
        };
        let (f_pp, f_oo, povm) = self.evaluate(&coefficients)?;
        let box_usage =
            coefficients.iter().fold(0.0f64, |m, c| m.max(c.abs())) / self.opts.box_half_width;
        Ok(SearchResult {
            found,
            coefficients,
            f_oo,
            f_pp,
            j_pp: self.j_pp,
            povm,
            baseline_f_oo: baseline,
            box_usage,
            candidates,
        })
    }
}

fn lexicographic(a: &[f64], b: &[f64]) -> core::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            core::cmp::Ordering::Equal => continue,
            other => return other,
        }
    }
    a.len().cmp(&b.len())
}

/// Maximises `F_oo` over measurements in the eigenbasis of members of the
/// SLD family of `p`, which all keep `F_pp = J_pp`. Sequential multistart;
/// a negative outcome means "not found", not "impossible".
pub fn sld_family_search(model: &StatisticalModel, p: usize, o: usize, opts: SearchOptions) -> Result<SearchResult> {
    let problem = SearchProblem::new(model, p, o, opts)?;
    let candidates = problem.starts().iter().map(|s| problem.local(s)).collect();
    problem.reduce(candidates)
}

/// Human-readable summary line for logs.
pub fn describe(report: &PrioritisedReport) -> String {
    let w: Vec<String> = report
        .witnesses
        .iter()
        .map(|w| format!("{:.6}:{:.3e}", w.eigenvalue, w.norm))
        .collect();
    format!(
        "parameter {} prioritised: {} (witnesses {})",
        report.p,
        if report.possible { "possible" } else { "impossible" },
        w.join(", ")
    )
}
