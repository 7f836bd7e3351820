//! Argument parsing and the four subcommands.
//!
//! Each command returns its files as `(name, contents)`; `main` either writes
//! them into `--out DIR` or prints the primary one to stdout.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{debug, info, warn};

use priorest_core::bounds::{nagaoka_hayashi, scaled_curve, TradeoffCurve, WeightMatrix, DEFAULT_ENDPOINT_EPS};
use priorest_core::fisher::{classical_fisher, qfi, sld, Povm};
use priorest_core::linalg::RealMatrix;
use priorest_core::model::{fock_displacement, n_copy, phase_dephasing, StatisticalModel};
use priorest_core::prioritised::{check, SearchOptions};
use priorest_core::simulate::{estimate, sample, score_estimator, BootstrapOptions, EstimatorCoefficients, Reference};

use crate::csv::{Cell, Table};
use crate::schema::{parse, to_pretty, ModelJson, PovmJson, QfiJson, ReportJson};
use crate::{fixtures, parallel, CliError};

/// Calibration grids of the experiment: phi scanned at Delta = 1/2, Delta
/// scanned at phi = 0.
pub const PHI_GRID: [f64; 5] = [-0.04, -0.015, 0.01, 0.035, 0.06];
pub const DELTA_GRID: [f64; 5] = [0.46, 0.485, 0.51, 0.535, 0.56];

#[derive(Debug, Parser)]
#[command(name = "priorest", version, about = "Prioritised two-parameter quantum estimation")]
pub struct Cli {
    /// Worker threads for sweeps, searches and bootstraps.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BuiltinModel {
    PhaseDephasing,
    Fock,
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// Built-in model; phase-dephasing when neither this nor --model-file is given.
    #[arg(long, value_enum, conflicts_with = "model_file")]
    pub model: Option<BuiltinModel>,
    #[arg(long)]
    pub model_file: Option<PathBuf>,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub phi: f64,
    #[arg(long, default_value_t = 0.5)]
    pub delta: f64,
    /// Fock number.
    #[arg(long, default_value_t = 1)]
    pub n: u32,
    #[arg(long)]
    pub copies: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct OutArgs {
    /// Output directory; without it the main result goes to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Quantum Fisher information and SLD families.
    Qfi {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Trade-off curve from a sweep of weighted Nagaoka-Hayashi bounds.
    Curve {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 40)]
        points: usize,
        #[arg(long, default_value_t = DEFAULT_ENDPOINT_EPS)]
        endpoint_eps: f64,
        /// Evaluate a single weight `a,b` instead of sweeping.
        #[arg(long, value_parser = parse_weights)]
        weights: Option<(f64, f64)>,
        /// Require scaled columns (fails if the QFI is not diagonal).
        #[arg(long)]
        scaled: bool,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Prioritised-estimation check and optimal measurement.
    Prioritise {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 0, value_parser = clap::value_parser!(u8).range(0..=1))]
        priority: u8,
        /// Seed of the SLD-family search used for rank-deficient states.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 32)]
        restarts: usize,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Sampled experiment, bootstrap MSE and bias scans.
    Simulate {
        #[command(flatten)]
        model: ModelArgs,
        /// POVM JSON file, or `fixture:NAME` for a shipped measurement.
        /// Defaults to `fixture:phi` on two copies.
        #[arg(long)]
        povm_file: Option<String>,
        #[arg(long, default_value_t = 10_000)]
        shots: u64,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 200)]
        resample_shots: u64,
        #[arg(long, default_value_t = 10_000)]
        resamples: usize,
        #[arg(long, default_value_t = 500)]
        repeats: usize,
        /// Measure bootstrap errors against the true value instead of the
        /// full-record estimate.
        #[arg(long)]
        true_reference: bool,
        /// Also run the calibration scans (phase-dephasing only).
        #[arg(long)]
        bias_scan: bool,
        #[arg(long)]
        scaled: bool,
        #[command(flatten)]
        out: OutArgs,
    },
}

fn parse_weights(s: &str) -> Result<(f64, f64), String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(format!("expected `a,b`, got `{s}`"));
    }
    let a = parts[0].trim().parse::<f64>().map_err(|e| e.to_string())?;
    let b = parts[1].trim().parse::<f64>().map_err(|e| e.to_string())?;
    Ok((a, b))
}

/// Files produced by a command; `primary` indexes the one printed to stdout.
#[derive(Debug, Default)]
pub struct Outputs {
    pub files: Vec<(String, String)>,
    pub primary: usize,
}

impl Outputs {
    fn push(&mut self, name: &str, contents: String) {
        self.files.push((name.to_string(), contents));
    }

    pub fn get(&self, name: &str) -> Option<&str> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, c)| c.as_str())
    }

    pub fn write(&self, out: Option<&Path>) -> Result<(), CliError> {
        match out {
            Some(dir) => {
                std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
                for (name, contents) in &self.files {
                    let path = dir.join(name);
                    std::fs::write(&path, contents).map_err(|e| io(&path, e))?;
                    info!("wrote {}", path.display());
                }
            }
            None => {
                if let Some((_, c)) = self.files.get(self.primary) {
                    print!("{c}");
                }
            }
        }
        Ok(())
    }
}

fn io(path: &Path, source: std::io::Error) -> CliError {
    CliError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| io(path, e))
}

/// A resolved model: the single-copy base and its tensor power.
pub struct Resolved {
    pub base: StatisticalModel,
    pub model: StatisticalModel,
    pub copies: usize,
    pub kind: Option<BuiltinModel>,
}

pub fn resolve_model(args: &ModelArgs, default_copies: usize) -> Result<Resolved, CliError> {
    let copies = args.copies.unwrap_or(default_copies);
    let (base, kind) = match (&args.model_file, args.model) {
        (Some(path), _) => {
            let json: ModelJson = parse(&path.display().to_string(), &read(path)?)?;
            (json.to_model()?, None)
        }
        (None, Some(BuiltinModel::Fock)) => (
            fock_displacement(args.n).map_err(|e| CliError::core("fock model", e))?,
            Some(BuiltinModel::Fock),
        ),
        (None, _) => (
            phase_dephasing(args.phi, args.delta).map_err(|e| CliError::core("phase-dephasing model", e))?,
            Some(BuiltinModel::PhaseDephasing),
        ),
    };
    let model = n_copy(&base, copies).map_err(|e| CliError::core("copies", e))?;
    Ok(Resolved {
        base,
        model,
        copies,
        kind,
    })
}

pub fn run(cli: Cli) -> Result<Outputs, CliError> {
    let threads = cli.threads;
    parallel::with_threads(threads, move || match cli.command {
        Command::Qfi { model, .. } => cmd_qfi(&model),
        Command::Curve {
            model,
            points,
            endpoint_eps,
            weights,
            scaled,
            ..
        } => cmd_curve(&model, points, endpoint_eps, weights, scaled),
        Command::Prioritise {
            model,
            priority,
            seed,
            restarts,
            ..
        } => cmd_prioritise(&model, priority as usize, seed, restarts),
        Command::Simulate {
            model,
            povm_file,
            shots,
            seed,
            resample_shots,
            resamples,
            repeats,
            true_reference,
            bias_scan,
            scaled,
            ..
        } => cmd_simulate(SimulateArgs {
            model,
            povm_file,
            shots,
            seed,
            resample_shots,
            resamples,
            repeats,
            true_reference,
            bias_scan,
            scaled,
        }),
    })
}

pub fn out_dir(cli: &Cli) -> Option<&Path> {
    match &cli.command {
        Command::Qfi { out, .. }
        | Command::Curve { out, .. }
        | Command::Prioritise { out, .. }
        | Command::Simulate { out, .. } => out.out.as_deref(),
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_args<I, T>(args: I) -> Result<Outputs, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| CliError::Usage(e.to_string()))?;
    run(cli)
}

fn cmd_qfi(args: &ModelArgs) -> Result<Outputs, CliError> {
    let r = resolve_model(args, 1)?;
    let slds = (0..r.model.n_params())
        .map(|i| sld(&r.model, i))
        .collect::<priorest_core::Result<Vec<_>>>()
        .map_err(|e| CliError::core("SLD", e))?;
    let j = qfi(&r.model).map_err(|e| CliError::core("QFI", e))?;
    info!("QFI {:?}", crate::schema::matrix_rows(&j));
    let mut out = Outputs::default();
    out.push("qfi.json", to_pretty(&QfiJson::new(&r.model, &j, &slds)));
    Ok(out)
}

/// `(copies J11, copies J22)` from the single-copy QFI, if it is diagonal.
fn scaling_qfi(base: &StatisticalModel) -> Result<Option<RealMatrix>, CliError> {
    let j = qfi(base).map_err(|e| CliError::core("QFI", e))?;
    let diagonal = j[(0, 1)].abs() <= 1e-9 * j[(0, 0)].abs().max(j[(1, 1)].abs());
    Ok(diagonal.then_some(j))
}

fn cmd_curve(
    args: &ModelArgs,
    points: usize,
    endpoint_eps: f64,
    weights: Option<(f64, f64)>,
    require_scaled: bool,
) -> Result<Outputs, CliError> {
    let r = resolve_model(args, 1)?;
    if r.model.n_params() != 2 {
        return Err(CliError::Usage("curves need a two-parameter model".into()));
    }
    let mut out = Outputs::default();
    if let Some((a, b)) = weights {
        let w = WeightMatrix::diagonal(a, b).map_err(|e| CliError::core("weights", e))?;
        let nh = nagaoka_hayashi(&r.model, &w).map_err(|e| CliError::core("Nagaoka-Hayashi bound", e))?;
        let mut t = Table::new(&["a", "b", "C", "gap", "V1", "V2", "status"]);
        t.push(vec![
            a.into(),
            b.into(),
            nh.value.into(),
            nh.gap.into(),
            nh.variance[0][0].into(),
            nh.variance[1][1].into(),
            nh.status.as_str().into(),
        ]);
        out.push("bound.csv", t.render());
        return Ok(out);
    }
    let trace = log::log_enabled!(log::Level::Debug);
    let curve = parallel::sweep(&r.model, points, endpoint_eps, trace).map_err(|e| CliError::core("sweep", e))?;
    let j = scaling_qfi(&r.base)?;
    if require_scaled && j.is_none() {
        return Err(CliError::Usage("--scaled needs a diagonal single-copy QFI".into()));
    }
    let scaled = match &j {
        Some(j) => Some(scaled_curve(&curve, j, r.copies).map_err(|e| CliError::core("scaling", e))?),
        None => None,
    };
    for p in &curve.points {
        if let Err(e) = &p.outcome {
            warn!("sweep point a={} failed: {e}", p.a);
        }
    }
    info!(
        "{} half-planes, {} vertices, worst vertex slack {:e}",
        curve.halfplanes.len(),
        curve.vertices.len(),
        curve.worst_vertex_slack()
    );
    out.push("vertices.csv", vertices_csv(&curve, scaled.as_ref()));
    out.push("halfplanes.csv", halfplanes_csv(&curve));
    if trace {
        let mut t = Table::new(&[
            "point", "a", "iteration", "primal_obj", "dual_obj", "gap", "pinf", "dinf", "mu", "step_primal", "step_dual",
        ]);
        for (k, p) in curve.points.iter().enumerate() {
            for it in &p.trace {
                t.push(vec![
                    (k as u64).into(),
                    p.a.into(),
                    (it.iteration as u64).into(),
                    it.primal_obj.into(),
                    it.dual_obj.into(),
                    it.gap.into(),
                    it.primal_infeasibility.into(),
                    it.dual_infeasibility.into(),
                    it.mu.into(),
                    it.step_primal.into(),
                    it.step_dual.into(),
                ]);
            }
        }
        debug!("SDP trace: {} iterations", t.len());
        out.push("sdp_trace.csv", t.render());
    }
    Ok(out)
}

pub fn vertices_csv(curve: &TradeoffCurve, scaled: Option<&TradeoffCurve>) -> String {
    let mut header = vec!["V1", "V2", "limit"];
    if scaled.is_some() {
        header.extend(["V1_scaled", "V2_scaled"]);
    }
    let mut t = Table::new(&header);
    for (k, v) in curve.vertices.iter().enumerate() {
        let mut row: Vec<Cell> = vec![v.v1.into(), v.v2.into(), (v.limit as u64).into()];
        if let Some(s) = scaled {
            row.push(s.vertices[k].v1.into());
            row.push(s.vertices[k].v2.into());
        }
        t.push(row);
    }
    t.render()
}

pub fn halfplanes_csv(curve: &TradeoffCurve) -> String {
    let mut t = Table::new(&["a", "b", "C", "gap", "touch_V1", "touch_V2", "status"]);
    for p in &curve.points {
        let (c, gap, touch) = match &p.outcome {
            Ok(v) => (v.c, v.gap, v.touch),
            Err(_) => (f64::NAN, f64::NAN, (f64::NAN, f64::NAN)),
        };
        t.push(vec![
            p.a.into(),
            p.b.into(),
            c.into(),
            gap.into(),
            touch.0.into(),
            touch.1.into(),
            p.status().into(),
        ]);
    }
    t.render()
}

fn cmd_prioritise(args: &ModelArgs, p: usize, seed: u64, restarts: usize) -> Result<Outputs, CliError> {
    let r = resolve_model(args, 1)?;
    let m = &r.model;
    if m.n_params() != 2 {
        return Err(CliError::Usage("prioritised estimation needs a two-parameter model".into()));
    }
    let mut out = Outputs::default();
    if m.is_full_rank() {
        let report = check(m, p).map_err(|e| CliError::core("prioritised check", e))?;
        info!("{}", priorest_core::prioritised::describe(&report));
        if let Some(w) = report.margin() {
            info!("witness closest to the threshold: {w:e}");
        }
        out.push("report.json", to_pretty(&ReportJson::from_report(&report)));
        if let Some(povm) = &report.fine_povm {
            out.push("povm.json", povm_with_estimator(m, povm));
        }
        return Ok(out);
    }
    info!("state has rank {} of {}: searching the SLD family", m.rank(), m.dim());
    let opts = SearchOptions {
        restarts,
        seed,
        ..SearchOptions::default()
    };
    let s = parallel::sld_family_search(m, p, 1 - p, opts).map_err(|e| CliError::core("SLD family search", e))?;
    if !s.found {
        warn!("no admissible family member found; this is not a proof of impossibility");
    }
    if s.box_usage > 0.9 {
        warn!("optimum at {:.0}% of the start box", 100.0 * s.box_usage);
    }
    let f = classical_fisher(m, &s.povm).map_err(|e| CliError::core("Fisher information", e))?;
    out.push("report.json", to_pretty(&ReportJson::from_search(p, &s, &f.matrix)));
    out.push("povm.json", povm_with_estimator(m, &s.povm));
    Ok(out)
}

fn povm_with_estimator(m: &StatisticalModel, povm: &Povm) -> String {
    let est = score_estimator(m, povm).ok();
    to_pretty(&PovmJson::from_povm(povm, est.as_ref()))
}

struct SimulateArgs {
    model: ModelArgs,
    povm_file: Option<String>,
    shots: u64,
    seed: u64,
    resample_shots: u64,
    resamples: usize,
    repeats: usize,
    true_reference: bool,
    bias_scan: bool,
    scaled: bool,
}

fn load_povm(spec: &str) -> Result<PovmJson, CliError> {
    match spec.strip_prefix("fixture:") {
        Some(name) => fixtures::load(name).ok_or_else(|| {
            CliError::Usage(format!("unknown fixture `{name}`; available: {}", fixtures::NAMES.join(", ")))
        }),
        None => parse(spec, &read(Path::new(spec))?),
    }
}

fn cmd_simulate(a: SimulateArgs) -> Result<Outputs, CliError> {
    let default_copies = if a.povm_file.is_none() { 2 } else { 1 };
    let r = resolve_model(&a.model, default_copies)?;
    let m = &r.model;
    let povm_json = load_povm(a.povm_file.as_deref().unwrap_or("fixture:phi"))?;
    let povm = povm_json.to_povm()?;
    if povm.dim() != m.dim() {
        return Err(CliError::Usage(format!(
            "POVM acts on dimension {}, model on {}",
            povm.dim(),
            m.dim()
        )));
    }
    let coeffs: EstimatorCoefficients = match povm_json.estimator()? {
        Some(e) => e,
        None => score_estimator(m, &povm).map_err(|e| CliError::core("score estimator", e))?,
    };
    if coeffs.n_params() != m.n_params() {
        return Err(CliError::Usage(format!(
            "estimator has {} parameters, model {}",
            coeffs.n_params(),
            m.n_params()
        )));
    }
    let defect = coeffs
        .unbiasedness_defect(m, &povm)
        .map_err(|e| CliError::core("estimator", e))?;
    info!("local unbiasedness defect of the estimator: {defect:e}");

    let record = sample(m, &povm, a.shots, a.seed).map_err(|e| CliError::core("sampling", e))?;
    let probs = povm.probabilities(m.rho());
    let est = estimate(&coeffs, &record).map_err(|e| CliError::core("estimate", e))?;

    let mut out = Outputs::default();
    let mut t = Table::new(&["outcome", "label", "count", "probability"]);
    for (k, (&c, p)) in record.counts.iter().zip(&probs).enumerate() {
        t.push(vec![(k as u64).into(), povm.labels()[k].clone().into(), c.into(), (*p).into()]);
    }
    let record_csv = t.render();

    let mut t = Table::new(&["parameter", "true", "estimate"]);
    for (i, e) in est.iter().enumerate() {
        t.push(vec![m.labels()[i].clone().into(), m.theta()[i].into(), (*e).into()]);
    }
    let estimates_csv = t.render();

    let opts = BootstrapOptions {
        resample_shots: a.resample_shots,
        resamples: a.resamples,
        repeats: a.repeats,
        reference: if a.true_reference {
            Reference::TrueValue(m.theta().to_vec())
        } else {
            Reference::EmpiricalMean
        },
        seed: a.seed,
    };
    let boot = parallel::bootstrap(&coeffs, &record, &opts).map_err(|e| CliError::core("bootstrap", e))?;
    let j = scaling_qfi(&r.base)?;
    if a.scaled && j.is_none() {
        return Err(CliError::Usage("--scaled needs a diagonal single-copy QFI".into()));
    }
    let mut header = vec!["parameter", "mse_mean", "mse_std", "variance", "variance_std"];
    if j.is_some() {
        header.extend(["scaled", "scaled_std"]);
    }
    let mut t = Table::new(&header);
    let n = a.resample_shots as f64;
    for i in 0..m.n_params() {
        let mut row: Vec<Cell> = vec![
            m.labels()[i].clone().into(),
            boot.mean[i].into(),
            boot.std[i].into(),
            (boot.mean[i] * n).into(),
            (boot.std[i] * n).into(),
        ];
        if let Some(j) = &j {
            let s = n * r.copies as f64 * j[(i, i)];
            row.push((boot.mean[i] * s).into());
            row.push((boot.std[i] * s).into());
        }
        t.push(row);
        info!("MSE[{}] = {:e} +- {:e}", m.labels()[i], boot.mean[i], boot.std[i]);
    }
    out.push("bootstrap.csv", t.render());
    out.push("record.csv", record_csv);
    out.push("estimates.csv", estimates_csv);

    if a.bias_scan {
        if r.kind != Some(BuiltinModel::PhaseDephasing) || m.n_params() != 2 {
            return Err(CliError::Usage("--bias-scan is defined for the phase-dephasing model".into()));
        }
        let copies = r.copies;
        let family = move |t: &[f64]| n_copy(&phase_dephasing(t[0], t[1])?, copies);
        let (phi0, delta0) = (a.model.phi, a.model.delta);
        let scans = [
            ("bias_phi.csv", PHI_GRID.iter().map(|&p| vec![p, delta0]).collect::<Vec<_>>(), 0usize),
            ("bias_delta.csv", DELTA_GRID.iter().map(|&d| vec![phi0, d]).collect::<Vec<_>>(), 1usize),
        ];
        let mut fits = Table::new(&["scan", "parameter", "offset", "offset_std"]);
        for (k, (name, grid, param)) in scans.into_iter().enumerate() {
            let scan = parallel::bias_scan(&family, &povm, &coeffs, &grid, a.shots, a.seed.wrapping_add(k as u64 + 1))
                .map_err(|e| CliError::core("bias scan", e))?;
            let mut t = Table::new(&["true_phi", "true_delta", "est_phi", "est_delta", "std_phi", "std_delta"]);
            for row in &scan.rows {
                t.push(vec![
                    row.truth[0].into(),
                    row.truth[1].into(),
                    row.estimate[0].into(),
                    row.estimate[1].into(),
                    row.std[0].into(),
                    row.std[1].into(),
                ]);
            }
            out.push(name, t.render());
            let fit = &scan.fits[param];
            info!("{name}: offset {:e} +- {:e}", fit.offset, fit.std);
            fits.push(vec![
                name.trim_end_matches(".csv").into(),
                m.labels()[param].clone().into(),
                fit.offset.into(),
                fit.std.into(),
            ]);
        }
        out.push("bias_fit.csv", fits.render());
    }
    Ok(out)
}
