//! Rayon versions of the embarrassingly parallel loops. Every task owns its
//! random stream and results are collected by index, so the output does not
//! depend on the thread count.

use priorest_core::bounds::{sweep_grid, sweep_point_with, TradeoffCurve};
use priorest_core::fisher::Povm;
use priorest_core::model::StatisticalModel;
use priorest_core::prioritised::{SearchOptions, SearchProblem, SearchResult};
use priorest_core::simulate::{
    bias_row, bootstrap_mse, bootstrap_repeat, fit_offsets, summarize_repeats, BiasScan, BootstrapMse,
    BootstrapOptions, EstimatorCoefficients, ShotRecord,
};
use priorest_core::Result;
use rayon::prelude::*;

/// Runs `f` on a pool of `threads` workers, or on the global pool.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> T {
    match threads {
        Some(n) if n > 0 => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .expect("thread pool")
            .install(f),
        _ => f(),
    }
}

pub fn sweep(model: &StatisticalModel, n_points: usize, endpoint_eps: f64, trace: bool) -> Result<TradeoffCurve> {
    let grid = sweep_grid(n_points, endpoint_eps)?;
    let points = grid
        .par_iter()
        .map(|&(a, b)| sweep_point_with(model, a, b, trace))
        .collect();
    TradeoffCurve::from_points(points)
}

pub fn sld_family_search(model: &StatisticalModel, p: usize, o: usize, opts: SearchOptions) -> Result<SearchResult> {
    let problem = SearchProblem::new(model, p, o, opts)?;
    let candidates = problem.starts().par_iter().map(|s| problem.local(s)).collect();
    problem.reduce(candidates)
}

pub fn bootstrap(coeffs: &EstimatorCoefficients, record: &ShotRecord, opts: &BootstrapOptions) -> Result<BootstrapMse> {
    if opts.repeats < 2 {
        return bootstrap_mse(coeffs, record, opts);
    }
    let per_repeat = (0..opts.repeats)
        .into_par_iter()
        .map(|r| bootstrap_repeat(coeffs, record, opts, r))
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize_repeats(&per_repeat))
}

pub fn bias_scan(
    family: impl Fn(&[f64]) -> Result<StatisticalModel> + Sync,
    povm: &Povm,
    coeffs: &EstimatorCoefficients,
    grid: &[Vec<f64>],
    shots: u64,
    seed: u64,
) -> Result<BiasScan> {
    if shots == 0 || grid.is_empty() {
        return Err(priorest_core::Error::Domain(
            "bias scan needs shots and at least one grid point".into(),
        ));
    }
    let rows = grid
        .par_iter()
        .enumerate()
        .map(|(k, t)| bias_row(&family(t)?, povm, coeffs, shots, seed, k))
        .collect::<Result<Vec<_>>>()?;
    let fits = fit_offsets(&rows);
    Ok(BiasScan { rows, fits })
}
