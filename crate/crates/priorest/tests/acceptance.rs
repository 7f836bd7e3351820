//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs under `cargo test`. The process exits 0 and reports failures on
//! stdout; set `PRIOREST_ACCEPTANCE_STRICT=1` to exit non-zero when any
//! criterion fails.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::time::{Duration, Instant};

use common::*;
use priorest::cli::run_args;
use priorest::{fixtures, parallel};
use priorest_core::bounds::{
    analytic_tradeoff_phase_dephasing, halfplane_intersect, scaled_curve, HalfPlane, TradeoffCurve,
};
use priorest_core::fisher::{classical_fisher, eigenbasis_povm, qfi, qfi_from_slds, sld, sld_residual};
use priorest_core::linalg::{ComplexMatrix, HermitianOperator, RealMatrix, C64};
use priorest_core::model::{fock_displacement, n_copy, phase_dephasing, StatisticalModel};
use priorest_core::prioritised::{build_measurement, check, SearchOptions};
use priorest_core::simulate::score_estimator;
use rand::Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn dephasing(copies: usize) -> StatisticalModel {
    n_copy(&phase_dephasing(0.0, 0.5).unwrap(), copies).unwrap()
}

fn single_copy_qfi() -> RealMatrix {
    qfi(&phase_dephasing(0.0, 0.5).unwrap()).unwrap()
}

/// Curves for one to four copies, raw and scaled, with their sweep times.
struct Curves {
    raw: Vec<TradeoffCurve>,
    scaled: Vec<TradeoffCurve>,
    times: Vec<Duration>,
}

fn curves() -> Curves {
    let j = single_copy_qfi();
    let (mut raw, mut scaled, mut times) = (Vec::new(), Vec::new(), Vec::new());
    for n in 1..=4 {
        let t = Instant::now();
        let c = parallel::sweep(&dephasing(n), 40, 1e-4, false).unwrap();
        times.push(t.elapsed());
        scaled.push(scaled_curve(&c, &j, n).unwrap());
        raw.push(c);
    }
    Curves { raw, scaled, times }
}

/// Bootstrap and bias-fit tables from the command-line pipeline.
struct Simulation {
    bootstrap: Vec<Vec<String>>,
    bias_fit: Vec<Vec<String>>,
    elapsed: Duration,
}

fn rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

fn simulation() -> Simulation {
    let t = Instant::now();
    let out = run_args(["priorest", "simulate", "--seed", "20240601", "--bias-scan", "--scaled"]).unwrap();
    Simulation {
        bootstrap: rows(out.get("bootstrap.csv").unwrap()),
        bias_fit: rows(out.get("bias_fit.csv").unwrap()),
        elapsed: t.elapsed(),
    }
}

fn num(s: &str) -> f64 {
    s.parse().unwrap()
}

fn c1_qfi_golden() -> Outcome {
    let t = Instant::now();
    let j = single_copy_qfi();
    let mut ok = close(j[(0, 0)], 0.25, 1e-9) && close(j[(1, 1)], 4.0 / 3.0, 1e-9) && close(j[(0, 1)], 0.0, 1e-9);
    let mut detail = format!("dephasing diag({:.12}, {:.12})", j[(0, 0)], j[(1, 1)]);
    for n in 1..=3u32 {
        let j = qfi(&fock_displacement(n).unwrap()).unwrap();
        let want = 4.0 * (n as f64 + 0.5);
        ok &= close(j[(0, 0)], want, 1e-9) && close(j[(1, 1)], want, 1e-9) && close(j[(0, 1)], 0.0, 1e-9);
        detail += &format!("; fock n={n} diag({:.9}, {:.9})", j[(0, 0)], j[(1, 1)]);
    }
    let dt = t.elapsed();
    ok &= dt < Duration::from_secs(1);
    outcome(ok, format!("{detail}; {dt:.2?}"))
}

fn c2_sld_golden() -> Outcome {
    let m = phase_dephasing(0.0, 0.5).unwrap();
    let c = |re: f64, im: f64| C64::new(re, im);
    // (1 - D) sigma_y and 1/(D(2-D)) [[1-D, -1], [-1, 1-D]] at D = 1/2.
    let l_phi = [[c(0.0, 0.0), c(0.0, -0.5)], [c(0.0, 0.5), c(0.0, 0.0)]];
    let k = 4.0 / 3.0;
    let l_delta = [[c(0.5 * k, 0.0), c(-k, 0.0)], [c(-k, 0.0), c(0.5 * k, 0.0)]];
    let mut worst: f64 = 0.0;
    let mut residual: f64 = 0.0;
    for (i, want) in [l_phi, l_delta].iter().enumerate() {
        let l = sld(&m, i).unwrap().particular;
        for r in 0..2 {
            for s in 0..2 {
                worst = worst.max((l[(r, s)] - want[r][s]).norm());
            }
        }
        let h = HermitianOperator::new(ComplexMatrix::from_fn(2, 2, |r, s| want[r][s])).unwrap();
        residual = residual.max(sld_residual(m.rho(), m.drho(i), &h));
    }
    let two = sld(&dephasing(2), 0).unwrap().particular;
    let ev = two.eigen().eigenvalues;
    let spectrum_err = ev.iter().zip([-1.0, 0.0, 0.0, 1.0]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    outcome(
        worst <= 1e-10 && residual <= 1e-12 && spectrum_err <= 1e-9,
        format!(
            "entrywise {worst:.1e}, reference SLDs solve the defining equation to {residual:.1e}; \
             two-copy phase spectrum {ev:.12?} (error {spectrum_err:.1e})"
        ),
    )
}

fn c3_single_copy(curves: &Curves) -> Outcome {
    let c = &curves.raw[0];
    let mut worst = (0.0f64, 0.0, 0.0);
    for v in &c.vertices {
        let exact = analytic_tradeoff_phase_dephasing(0.5, v.v1).unwrap();
        let e = rel(v.v2, exact);
        if e > worst.0 {
            worst = (e, v.v1, v.v2);
        }
    }
    let touch = c
        .support
        .iter()
        .map(|&(x, y)| rel(y, analytic_tradeoff_phase_dephasing(0.5, x).unwrap()))
        .fold(0.0, f64::max);
    let gaps: Vec<f64> = c.points.iter().filter_map(|p| p.outcome.as_ref().ok().map(|v| v.gap)).collect();
    let failed = c.points.len() - gaps.len();
    let max_gap = gaps.iter().cloned().fold(0.0, f64::max);
    let dt = curves.times[0];
    outcome(
        worst.0 <= 1e-3 && max_gap <= 1e-7 && failed == 0 && dt < Duration::from_secs(30),
        format!(
            "{} vertices, worst relative error {:.3e} at V1 = {:.6} (V2 = {:.6}); touching points within {touch:.1e}; \
             max gap {max_gap:.1e}, {failed} failed points; {dt:.2?}",
            c.vertices.len(),
            worst.0,
            worst.1,
            worst.2
        ),
    )
}

fn c4_two_copy_intercept(curves: &Curves, sim: &Simulation) -> Outcome {
    let corner = &curves.scaled[1].vertices[0];
    let sweep_ok = corner.limit && rel(corner.v1, 1.0) <= 1e-3 && rel(corner.v2, 5.0) <= 1e-3;
    let m = dephasing(2);
    let (v1, v2) = build_measurement(&m, 0).unwrap().mse_point;
    let build_ok = rel(v1, 2.0) <= 1e-3 && rel(v2, 15.0 / 8.0) <= 1e-3;
    let povm = fixtures::load("phi").unwrap().to_povm().unwrap();
    let f = classical_fisher(&m, &povm).unwrap().matrix;
    let (f1, f2) = (1.0 / f[(0, 0)], 1.0 / f[(1, 1)]);
    let fixture_ok = rel(f1, 2.0) <= 1e-3 && rel(f2, 15.0 / 8.0) <= 1e-3;
    let scaled: Vec<(f64, f64)> = sim.bootstrap.iter().map(|r| (num(&r[5]), num(&r[6]))).collect();
    let sim_ok = scaled.iter().zip([1.0, 5.0]).all(|(&(v, s), want)| (v - want).abs() <= 3.0 * s);
    outcome(
        sweep_ok && build_ok && fixture_ok && sim_ok,
        format!(
            "sweep limit ({:.7}, {:.7}) scaled; construction ({v1:.9}, {v2:.9}); fixture ({f1:.9}, {f2:.9}); \
             simulation ({:.4} +- {:.4}, {:.4} +- {:.4}) scaled",
            corner.v1, corner.v2, scaled[0].0, scaled[0].1, scaled[1].0, scaled[1].1
        ),
    )
}

fn c5_decisions() -> Outcome {
    let cases = [(1, 0, false), (1, 1, false), (2, 0, true), (2, 1, false), (3, 1, false), (4, 1, false)];
    let mut ok = true;
    let mut detail = Vec::new();
    for (n, p, want) in cases {
        let r = check(&dephasing(n), p).unwrap();
        ok &= r.possible == want;
        let name = ["phi", "delta"][p];
        detail.push(format!("N={n} {name}: {}", if r.possible { "possible" } else { "impossible" }));
    }
    outcome(ok, detail.join(", "))
}

fn c6_fock_search() -> Outcome {
    let m = fock_displacement(1).unwrap();
    let t = Instant::now();
    let opts = SearchOptions { restarts: 32, ..SearchOptions::default() };
    let r = parallel::sld_family_search(&m, 0, 1, opts).unwrap();
    let dt = t.elapsed();
    let search_ok = r.found && r.f_oo >= 16.0 / 3.0 - 1e-6 && close(r.f_pp, 6.0, 1e-8) && dt < Duration::from_secs(10);
    // Explicit member with a = b = d = 0, c = 1.
    let s = std::f64::consts::SQRT_2;
    let z = C64::new(0.0, 0.0);
    let lx = HermitianOperator::new(ComplexMatrix::from_fn(3, 3, |r, col| {
        [
            [z, C64::new(-s, 0.0), C64::new(0.0, 1.0)],
            [C64::new(-s, 0.0), z, C64::new(2.0, 0.0)],
            [C64::new(0.0, -1.0), C64::new(2.0, 0.0), z],
        ][r][col]
    }))
    .unwrap();
    let residual = sld_residual(m.rho(), m.drho(0), &lx);
    let f = classical_fisher(&m, &eigenbasis_povm(&lx).unwrap()).unwrap().matrix;
    let explicit_ok = residual < 1e-12 && close(f[(1, 1)], 16.0 / 3.0, 1e-9) && close(f[(0, 0)], 6.0, 1e-9);
    outcome(
        search_ok && explicit_ok,
        format!(
            "search F_yy = {:.10}, F_xx = {:.10} (baseline {:.3e}) in {dt:.2?}; explicit member F = ({:.10}, {:.10})",
            r.f_oo, r.f_pp, r.baseline_f_oo, f[(0, 0)], f[(1, 1)]
        ),
    )
}

fn c7_score_coefficients() -> Outcome {
    let m = dephasing(2);
    let povm = fixtures::load("phi").unwrap().to_povm().unwrap();
    let e = score_estimator(&m, &povm).unwrap();
    let want = [[-2.0, 2.0, 0.0, 0.0], [0.0, 0.0, 2.5, -1.5]];
    let mut worst: f64 = 0.0;
    for i in 0..2 {
        for k in 0..4 {
            worst = worst.max((e.coefficients[i][k] - want[i][k]).abs());
        }
    }
    worst = worst.max(e.offsets[0].abs()).max((e.offsets[1] - 0.5).abs());
    outcome(
        worst <= 1e-8,
        format!("phi {:.10?}, delta {:.10?}, offsets {:?}; worst {worst:.1e}", e.coefficients[0], e.coefficients[1], e.offsets),
    )
}

fn c8_statistics(sim: &Simulation) -> Outcome {
    let mut ok = sim.elapsed < Duration::from_secs(120);
    let mut detail = Vec::new();
    for (row, want) in sim.bootstrap.iter().zip([1.0, 5.0]) {
        let (v, s) = (num(&row[5]), num(&row[6]));
        ok &= (v - want).abs() <= 3.0 * s;
        detail.push(format!("{} scaled {v:.4} +- {s:.4}", row[0]));
    }
    for row in &sim.bias_fit {
        let (o, s) = (num(&row[2]), num(&row[3]));
        ok &= o.abs() <= 3.0 * s;
        detail.push(format!("{} offset {o:.2e} +- {s:.2e}", row[0]));
    }
    outcome(ok, format!("{}; {:.2?}", detail.join(", "), sim.elapsed))
}

/// Boundary of each scaled curve on a V1 grid shared by all of them.
fn shared_grid(curves: &[TradeoffCurve]) -> Vec<(f64, Vec<f64>)> {
    let lo = curves.iter().map(|c| c.vertices[0].v1).fold(f64::NEG_INFINITY, f64::max);
    let hi = curves.iter().map(|c| c.vertices.last().unwrap().v1).fold(f64::INFINITY, f64::min);
    (0..=400)
        .map(|k| lo + (hi - lo) * k as f64 / 400.0)
        .map(|x| (x, curves.iter().map(|c| c.boundary_at(x).unwrap_or(f64::INFINITY)).collect()))
        .collect()
}

fn dominance_defect(curves: &[TradeoffCurve]) -> f64 {
    let mut worst: f64 = 0.0;
    for (_, b) in shared_grid(curves) {
        for n in 0..b.len() {
            for m in n + 1..b.len() {
                worst = worst.max(b[m] - b[n]);
            }
        }
    }
    worst
}

fn halfplane_grid_defect(g: &mut rand_chacha::ChaCha8Rng) -> Option<f64> {
    const GRID: usize = 2000;
    let n = g.random_range(2..12);
    let mut hs: Vec<HalfPlane> = (0..n)
        .map(|_| HalfPlane::new(g.random_range(0.05..1.0), g.random_range(0.05..1.0), g.random_range(0.5..2.0)))
        .collect();
    if g.random_bool(0.3) {
        hs.push(HalfPlane::new(1.0, 0.0, g.random_range(0.2..2.0)));
    }
    let v = halfplane_intersect(&hs).vertices;
    if v.len() < 2 {
        return None;
    }
    let (lo, hi) = (v[0].0, v[v.len() - 1].0);
    let pad = 0.05 * (v[0].1 - v[v.len() - 1].1);
    let (bottom, top) = (v[v.len() - 1].1 - pad, v[0].1 + pad);
    let (dx, dy) = ((hi - lo) / (GRID - 1) as f64, (top - bottom) / (GRID - 1) as f64);
    let mut worst: f64 = 0.0;
    for i in 0..GRID {
        let x = lo + dx * i as f64;
        let k = v.windows(2).position(|w| x <= w[1].0).unwrap_or(v.len() - 2);
        let boundary = v[k].1 + (v[k + 1].1 - v[k].1) * (x - v[k].0) / (v[k + 1].0 - v[k].0);
        let grid = (0..GRID)
            .map(|j| bottom + dy * j as f64)
            .find(|&y| hs.iter().all(|h| h.slack(x, y) >= 0.0))
            .unwrap_or(f64::INFINITY);
        // In cells: 0 <= (grid - boundary) / dy <= 1 when they agree.
        let cells = (grid - boundary) / dy;
        worst = worst.max((-cells).max(cells - 1.0));
    }
    Some(worst)
}

fn c9_properties(curves: &Curves) -> Outcome {
    let mut g = rng(0xACCE);
    let mut residual: f64 = 0.0;
    let mut kernel_change: f64 = 0.0;
    for k in 0..100 {
        let n = g.random_range(2..=4);
        let m = if k % 2 == 0 {
            full_rank_model(&mut g, n, 2)
        } else {
            let kernel = g.random_range(1..n);
            rank_deficient_model(&mut g, n, kernel, 2)
        };
        let fams: Vec<_> = (0..2).map(|i| sld(&m, i).unwrap()).collect();
        let members: Vec<_> = fams
            .iter()
            .map(|f| {
                let c: Vec<f64> = (0..f.free_dim).map(|_| g.random_range(-10.0..10.0)).collect();
                f.member(&c).unwrap()
            })
            .collect();
        for i in 0..2 {
            residual = residual.max(sld_residual(m.rho(), m.drho(i), &fams[i].particular));
            residual = residual.max(sld_residual(m.rho(), m.drho(i), &members[i]));
        }
        kernel_change = kernel_change.max(qfi(&m).unwrap().sub(&qfi_from_slds(m.rho(), &members)).max_abs());
    }
    let mut monotone = f64::INFINITY;
    for _ in 0..100 {
        let n = g.random_range(2..=4);
        let m = full_rank_model(&mut g, n, 2);
        let povm = random_povm(&mut g, n);
        let mut d = qfi(&m).unwrap().sub(&classical_fisher(&m, &povm).unwrap().matrix);
        d.symmetrize();
        monotone = monotone.min(d.symmetric_eigenvalues()[0]);
    }
    let mut grid_worst: f64 = 0.0;
    let mut instances = 0;
    while instances < 20 {
        if let Some(w) = halfplane_grid_defect(&mut g) {
            grid_worst = grid_worst.max(w);
            instances += 1;
        }
    }
    let dominance = dominance_defect(&curves.scaled);
    let again = parallel::sweep(&dephasing(2), 40, 1e-4, false).unwrap();
    let sweep_same = again == curves.raw[1];
    let sim = |threads: &str| {
        run_args(["priorest", "--threads", threads, "simulate", "--seed", "3", "--repeats", "20", "--resamples", "500"])
            .unwrap()
            .get("bootstrap.csv")
            .unwrap()
            .to_string()
    };
    let (a, b, c) = (sim("1"), sim("1"), sim("3"));
    let deterministic = sweep_same && a == b && a == c;
    let ok = residual <= 1e-9
        && kernel_change <= 1e-9
        && monotone >= -1e-8
        && grid_worst <= 1e-9
        && dominance <= 1e-4
        && deterministic;
    outcome(
        ok,
        format!(
            "SLD residual {residual:.1e}; QFI change under kernel freedom {kernel_change:.1e}; \
             min eig(J - F) {monotone:.1e}; half-plane vs grid {grid_worst:.1e} cells beyond one; \
             dominance N=1..4 excess {dominance:.1e}; deterministic {deterministic}"
        ),
    )
}

fn c10_multi_copy(curves: &Curves) -> Outcome {
    let mut convex_worst: f64 = 0.0;
    let mut box_worst = f64::INFINITY;
    for c in &curves.scaled {
        for w in c.vertices.windows(3) {
            let cross = (w[1].v1 - w[0].v1) * (w[2].v2 - w[0].v2) - (w[1].v2 - w[0].v2) * (w[2].v1 - w[0].v1);
            convex_worst = convex_worst.min(cross).min(0.0);
        }
        for v in &c.vertices {
            box_worst = box_worst.min(v.v1 - 1.0).min(v.v2 - 1.0);
        }
    }
    let dominance = dominance_defect(&curves.scaled);
    let times: Vec<String> = curves.times.iter().map(|t| format!("{t:.2?}")).collect();
    outcome(
        convex_worst >= -1e-9 && dominance <= 1e-4 && box_worst >= -1e-6,
        format!(
            "convexity defect {:.1e}; dominance excess {dominance:.1e}; min distance to QCRB box {box_worst:.2e}; sweeps {}",
            -convex_worst,
            times.join(", ")
        ),
    )
}

fn main() {
    let curves = curves();
    let sim = simulation();
    let results = [
        ("QFI golden values", c1_qfi_golden()),
        ("SLD golden values", c2_sld_golden()),
        ("single-copy trade-off", c3_single_copy(&curves)),
        ("two-copy prioritised intercept", c4_two_copy_intercept(&curves, &sim)),
        ("prioritisation decisions", c5_decisions()),
        ("Fock prioritised search", c6_fock_search()),
        ("score-estimator coefficients", c7_score_coefficients()),
        ("statistical pipeline", c8_statistics(&sim)),
        ("property suites", c9_properties(&curves)),
        ("multi-copy self-consistency", c10_multi_copy(&curves)),
    ];
    let mut failed = 0;
    for (k, (name, o)) in results.iter().enumerate() {
        println!("{} {:>2} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, k + 1, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {} of {} criteria pass", results.len() - failed, results.len());
    if failed > 0 && std::env::var_os("PRIOREST_ACCEPTANCE_STRICT").is_some() {
        std::process::exit(1);
    }
}
