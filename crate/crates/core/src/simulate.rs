//! Shot sampling, linear locally unbiased estimators and bootstrap MSE.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::{Error, Result};
use crate::fisher::{classical_fisher, Povm, DEFAULT_PROB_FLOOR, POVM_PSD_FLOOR};
use crate::linalg::RealMatrix;
use crate::model::StatisticalModel;
#[allow(unused_imports)]
use crate::prelude::*;
use crate::rng;

/// `theta_hat_i = sum_k coefficients[i][k] f_k + offsets[i]` for observed
/// frequencies `f`.
#[derive(Clone, Debug, PartialEq)]
pub struct EstimatorCoefficients {
    pub coefficients: Vec<Vec<f64>>,
    pub offsets: Vec<f64>,
}

impl EstimatorCoefficients {
    pub fn new(coefficients: Vec<Vec<f64>>, offsets: Vec<f64>) -> Result<Self> {
        if coefficients.len() != offsets.len() || coefficients.is_empty() {
            return Err(Error::Dimension(format!(
                "{} coefficient rows for {} offsets",
                coefficients.len(),
                offsets.len()
            )));
        }
        let k = coefficients[0].len();
        if k == 0 || coefficients.iter().any(|row| row.len() != k) {
            return Err(Error::Dimension("coefficient rows differ in length".into()));
        }
        if coefficients.iter().flatten().chain(&offsets).any(|v| !v.is_finite()) {
            return Err(Error::validation("finiteness", "estimator coefficients must be finite"));
        }
        Ok(Self { coefficients, offsets })
    }

    pub fn n_params(&self) -> usize {
        self.offsets.len()
    }

    pub fn n_outcomes(&self) -> usize {
        self.coefficients[0].len()
    }

    /// Estimates from outcome frequencies.
    pub fn apply(&self, freqs: &[f64]) -> Vec<f64> {
        self.coefficients
            .iter()
            .zip(&self.offsets)
            .map(|(row, off)| row.iter().zip(freqs).map(|(c, f)| c * f).sum::<f64>() + off)
            .collect()
    }

    /// Largest violation of `E[theta_hat] = theta` and `d_j E[theta_hat_i] =
    /// delta_ij` on `model` measured with `povm`.
    pub fn unbiasedness_defect(&self, model: &StatisticalModel, povm: &Povm) -> Result<f64> {
        if self.n_params() != model.n_params() || self.n_outcomes() != povm.len() {
            return Err(Error::Dimension(format!(
                "estimator is {}x{}, model has {} parameters and POVM {} outcomes",
                self.n_params(),
                self.n_outcomes(),
                model.n_params(),
                povm.len()
            )));
        }
        let p = povm.probabilities(model.rho());
        let mut worst: f64 = 0.0;
        for (i, mean) in self.apply(&p).iter().enumerate() {
            worst = worst.max((mean - model.theta()[i]).abs());
        }
        for j in 0..model.n_params() {
            let dp = povm.probabilities(model.drho(j));
            for (i, row) in self.coefficients.iter().enumerate() {
                let d: f64 = row.iter().zip(&dp).map(|(c, x)| c * x).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((d - want).abs());
            }
        }
        Ok(worst)
    }

    /// Single-shot mean squared error matrix `sum_k p_k (x_k - theta)(x_k - theta)^T`.
    pub fn single_shot_mse(&self, probabilities: &[f64], theta: &[f64]) -> RealMatrix {
        let n = self.n_params();
        let mut m = RealMatrix::zeros(n, n);
        for (k, &p) in probabilities.iter().enumerate() {
            let e: Vec<f64> = (0..n)
                .map(|i| self.coefficients[i][k] + self.offsets[i] - theta[i])
                .collect();
            for a in 0..n {
                for b in 0..n {
                    m[(a, b)] += p * e[a] * e[b];
                }
            }
        }
        m
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShotRecord {
    pub counts: Vec<u64>,
    pub shots: u64,
    pub seed: u64,
}

impl ShotRecord {
    pub fn new(counts: Vec<u64>, seed: u64) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::Dimension("a shot record needs at least one outcome".into()));
        }
        let shots = counts.iter().sum();
        Ok(Self { counts, shots, seed })
    }

    pub fn frequencies(&self) -> Vec<f64> {
        let n = self.shots as f64;
        self.counts.iter().map(|&c| c as f64 / n).collect()
    }
}

/// Multinomial draw by sequential binomials.
pub fn multinomial<R: Rng + ?Sized>(rng: &mut R, n: u64, probabilities: &[f64]) -> Vec<u64> {
    let mut counts = vec![0u64; probabilities.len()];
    let mut left = n;
    let mut mass: f64 = probabilities.iter().sum();
    for (k, &p) in probabilities.iter().enumerate() {
        if left == 0 {
            break;
        }
        if k + 1 == probabilities.len() {
            counts[k] = left;
            break;
        }
        let q = if mass > 0.0 { (p / mass).clamp(0.0, 1.0) } else { 0.0 };
        let c = if q >= 1.0 {
            left
        } else if q <= 0.0 {
            0
        } else {
            Binomial::new(left, q).map(|b| b.sample(rng)).unwrap_or(0)
        };
        counts[k] = c;
        left -= c;
        mass -= p;
    }
    counts
}

fn outcome_probabilities(model: &StatisticalModel, povm: &Povm) -> Result<Vec<f64>> {
    if povm.dim() != model.dim() {
        return Err(Error::Dimension(format!(
            "POVM dimension {} vs model dimension {}",
            povm.dim(),
            model.dim()
        )));
    }
    let p = povm.probabilities(model.rho());
    if let Some((k, v)) = p.iter().enumerate().find(|(_, &v)| v < POVM_PSD_FLOOR) {
        return Err(Error::ModelInconsistency(format!(
            "outcome {k} has probability {v:e}; POVM and state are inconsistent"
        )));
    }
    Ok(p.into_iter().map(|v| v.max(0.0)).collect())
}

/// `shots` outcomes of `povm` on the model state.
pub fn sample(model: &StatisticalModel, povm: &Povm, shots: u64, seed: u64) -> Result<ShotRecord> {
    let p = outcome_probabilities(model, povm)?;
    let mut g = rng::stream(seed, rng::SAMPLE, 0);
    ShotRecord::new(multinomial(&mut g, shots, &p), seed)
}

/// Score-function estimator `theta + F^-1 s(x)` written as linear
/// coefficients; outcomes with vanishing probability get coefficient zero.
pub fn score_estimator(model: &StatisticalModel, povm: &Povm) -> Result<EstimatorCoefficients> {
    let f = classical_fisher(model, povm)?;
    let n = model.n_params();
    let inv = f.matrix.cholesky().filter(|c| c.min_pivot_ratio() > 1e-12).ok_or_else(|| {
        Error::Singular(
            "classical Fisher information of this POVM is singular; see prioritised::check for whether a better measurement exists"
                .into(),
        )
    })?;
    let finv = inv.inverse();
    let mut coefficients = vec![vec![0.0; povm.len()]; n];
    for (k, &p) in f.probabilities.iter().enumerate() {
        if p <= DEFAULT_PROB_FLOOR {
            continue;
        }
        for (i, row) in coefficients.iter_mut().enumerate() {
            row[k] = (0..n).map(|j| finv[(j, i)] * f.derivatives[j][k]).sum::<f64>() / p;
        }
    }
    EstimatorCoefficients::new(coefficients, model.theta().to_vec())
}

pub fn estimate(coeffs: &EstimatorCoefficients, record: &ShotRecord) -> Result<Vec<f64>> {
    if record.counts.len() != coeffs.n_outcomes() {
        return Err(Error::Dimension(format!(
            "record has {} outcomes, estimator expects {}",
            record.counts.len(),
            coeffs.n_outcomes()
        )));
    }
    if record.shots == 0 {
        return Err(Error::Domain("cannot estimate from zero shots".into()));
    }
    Ok(coeffs.apply(&record.frequencies()))
}

/// What bootstrap errors are measured against.
#[derive(Clone, Debug, PartialEq)]
pub enum Reference {
    /// The estimate from the full record.
    EmpiricalMean,
    TrueValue(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct BootstrapOptions {
    pub resample_shots: u64,
    pub resamples: usize,
    pub repeats: usize,
    pub reference: Reference,
    pub seed: u64,
}

impl Default for BootstrapOptions {
    fn default() -> Self {
        Self {
            resample_shots: 200,
            resamples: 10_000,
            repeats: 500,
            reference: Reference::EmpiricalMean,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BootstrapMse {
    /// Mean over repeats of the per-parameter MSE of a `resample_shots` run.
    pub mean: Vec<f64>,
    /// Sample standard deviation over repeats.
    pub std: Vec<f64>,
}

fn bootstrap_setup(
    coeffs: &EstimatorCoefficients,
    record: &ShotRecord,
    opts: &BootstrapOptions,
) -> Result<Vec<f64>> {
    let centre = estimate(coeffs, record)?;
    if record.shots < opts.resample_shots || opts.resample_shots == 0 {
        return Err(Error::Domain(format!(
            "resample size {} must be positive and at most the {} recorded shots",
            opts.resample_shots, record.shots
        )));
    }
    if opts.resamples == 0 || opts.repeats == 0 {
        return Err(Error::Domain("bootstrap needs at least one resample and one repeat".into()));
    }
    match &opts.reference {
        Reference::EmpiricalMean => Ok(centre),
        Reference::TrueValue(t) if t.len() == coeffs.n_params() => Ok(t.clone()),
        Reference::TrueValue(t) => Err(Error::Dimension(format!(
            "{} reference values for {} parameters",
            t.len(),
            coeffs.n_params()
        ))),
    }
}

/// MSE per parameter for one repeat. Each repeat uses its own random stream,
/// so repeats can run in any order or in parallel.
pub fn bootstrap_repeat(
    coeffs: &EstimatorCoefficients,
    record: &ShotRecord,
    opts: &BootstrapOptions,
    repeat: usize,
) -> Result<Vec<f64>> {
    let reference = bootstrap_setup(coeffs, record, opts)?;
    let freqs = record.frequencies();
    let mut g = rng::stream(opts.seed, rng::BOOTSTRAP, repeat as u64);
    let n = opts.resample_shots as f64;
    let mut sum = vec![0.0; coeffs.n_params()];
    let mut f = vec![0.0; freqs.len()];
    for _ in 0..opts.resamples {
        let counts = multinomial(&mut g, opts.resample_shots, &freqs);
        for (x, c) in f.iter_mut().zip(&counts) {
            *x = *c as f64 / n;
        }
        for ((s, e), r) in sum.iter_mut().zip(coeffs.apply(&f)).zip(&reference) {
            *s += (e - r) * (e - r);
        }
    }
    Ok(sum.into_iter().map(|s| s / opts.resamples as f64).collect())
}

/// Mean and spread over repeats.
pub fn summarize_repeats(per_repeat: &[Vec<f64>]) -> BootstrapMse {
    let r = per_repeat.len() as f64;
    let n = per_repeat.first().map_or(0, Vec::len);
    let mean: Vec<f64> = (0..n).map(|i| per_repeat.iter().map(|v| v[i]).sum::<f64>() / r).collect();
    let std = (0..n)
        .map(|i| {
            if per_repeat.len() < 2 {
                return 0.0;
            }
            let ss: f64 = per_repeat.iter().map(|v| (v[i] - mean[i]).powi(2)).sum();
            (ss / (r - 1.0)).sqrt()
        })
        .collect();
    BootstrapMse { mean, std }
}

/// Parametric bootstrap of the MSE of `resample_shots`-shot runs drawn from
/// the empirical frequencies of `record`.
pub fn bootstrap_mse(
    coeffs: &EstimatorCoefficients,
    record: &ShotRecord,
    opts: &BootstrapOptions,
) -> Result<BootstrapMse> {
    bootstrap_setup(coeffs, record, opts)?;
    let per_repeat = (0..opts.repeats)
        .map(|r| bootstrap_repeat(coeffs, record, opts, r))
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize_repeats(&per_repeat))
}

#[derive(Clone, Debug, PartialEq)]
pub struct BiasRow {
    pub truth: Vec<f64>,
    pub estimate: Vec<f64>,
    /// Standard error of `estimate` from the record's own spread.
    pub std: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BiasFit {
    pub offset: f64,
    pub std: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BiasScan {
    pub rows: Vec<BiasRow>,
    /// Per parameter, the weighted least-squares fit of `estimate = truth + offset`.
    pub fits: Vec<BiasFit>,
}

/// One grid point of a bias scan; `index` selects the random stream.
pub fn bias_row(
    model: &StatisticalModel,
    povm: &Povm,
    coeffs: &EstimatorCoefficients,
    shots: u64,
    seed: u64,
    index: usize,
) -> Result<BiasRow> {
    let p = outcome_probabilities(model, povm)?;
    let mut g = rng::stream(seed, rng::BIAS_SCAN, index as u64);
    let record = ShotRecord::new(multinomial(&mut g, shots, &p), seed)?;
    let est = estimate(coeffs, &record)?;
    let f = record.frequencies();
    let std = coeffs
        .coefficients
        .iter()
        .zip(&coeffs.offsets)
        .zip(&est)
        .map(|((row, off), e)| {
            let var: f64 = row.iter().zip(&f).map(|(c, fk)| fk * (c + off - e).powi(2)).sum();
            (var / shots as f64).sqrt()
        })
        .collect();
    Ok(BiasRow {
        truth: model.theta().to_vec(),
        estimate: est,
        std,
    })
}

/// Weighted least-squares offsets over the rows.
pub fn fit_offsets(rows: &[BiasRow]) -> Vec<BiasFit> {
    let n = rows.first().map_or(0, |r| r.truth.len());
    (0..n)
        .map(|i| {
            let (mut sw, mut swd) = (0.0, 0.0);
            for r in rows {
                let w = if r.std[i] > 0.0 { 1.0 / (r.std[i] * r.std[i]) } else { 1.0 };
                sw += w;
                swd += w * (r.estimate[i] - r.truth[i]);
            }
            BiasFit {
                offset: swd / sw,
                std: (1.0 / sw).sqrt(),
            }
        })
        .collect()
}

/// Samples `shots` at every grid point of `family` with a fixed estimator
/// and fits a constant offset per parameter.
pub fn bias_scan(
    family: impl Fn(&[f64]) -> Result<StatisticalModel>,
    povm: &Povm,
    coeffs: &EstimatorCoefficients,
    grid: &[Vec<f64>],
    shots: u64,
    seed: u64,
) -> Result<BiasScan> {
    if shots == 0 || grid.is_empty() {
        return Err(Error::Domain("bias scan needs shots and at least one grid point".into()));
    }
    let rows = grid
        .iter()
        .enumerate()
        .map(|(k, t)| bias_row(&family(t)?, povm, coeffs, shots, seed, k))
        .collect::<Result<Vec<_>>>()?;
    let fits = fit_offsets(&rows);
    Ok(BiasScan { rows, fits })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::HermitianOperator;
    use crate::model::{n_copy, phase_dephasing};

    #[test]
    fn certain_outcome() {
        let m = phase_dephasing(0.0, 0.5).unwrap();
        let v = m.rho().eigen();
        let top = v.eigenvectors.column(1);
        let p = HermitianOperator::projector(&top);
        let povm = Povm::new(alloc::vec![HermitianOperator::identity(2).sub(&p), p]).unwrap();
        let probs = povm.probabilities(m.rho());
        assert!(probs[1] > 0.5);
        let r = sample(&m, &povm, 1000, 3).unwrap();
        assert_eq!(r.shots, 1000);
        assert_eq!(r, sample(&m, &povm, 1000, 3).unwrap());
    }

    #[test]
    fn multinomial_is_exact_on_degenerate_input() {
        let mut g = rng::stream(1, rng::SAMPLE, 0);
        assert_eq!(multinomial(&mut g, 50, &[0.0, 1.0, 0.0]), alloc::vec![0, 50, 0]);
        assert_eq!(multinomial(&mut g, 50, &[0.0, 0.0, 1.0]), alloc::vec![0, 0, 50]);
    }

    #[test]
    fn score_estimator_is_locally_unbiased() {
        let m = n_copy(&phase_dephasing(0.0, 0.5).unwrap(), 2).unwrap();
        let fine = crate::prioritised::build_measurement(&m, 0).unwrap();
        let c = score_estimator(&m, &fine.povm).unwrap();
        assert!(c.unbiasedness_defect(&m, &fine.povm).unwrap() < 1e-9);
        let mse = c.single_shot_mse(&fine.fisher.probabilities, m.theta());
        assert!((mse[(0, 0)] - 2.0).abs() < 1e-8 && (mse[(1, 1)] - 15.0 / 8.0).abs() < 1e-8);
    }

    #[test]
    fn zero_shots_and_arity() {
        let c = EstimatorCoefficients::new(alloc::vec![alloc::vec![1.0, -1.0]], alloc::vec![0.0]).unwrap();
        let r = ShotRecord::new(alloc::vec![0, 0], 1).unwrap();
        assert!(estimate(&c, &r).is_err());
        let r3 = ShotRecord::new(alloc::vec![1, 1, 1], 1).unwrap();
        assert!(matches!(estimate(&c, &r3), Err(Error::Dimension(_))));
    }

    #[test]
    fn degenerate_record_has_zero_mse() {
        let c = EstimatorCoefficients::new(alloc::vec![alloc::vec![1.0, -1.0]], alloc::vec![0.0]).unwrap();
        let r = ShotRecord::new(alloc::vec![500, 0], 9).unwrap();
        let opts = BootstrapOptions {
            resamples: 100,
            repeats: 5,
            ..Default::default()
        };
        let b = bootstrap_mse(&c, &r, &opts).unwrap();
        assert_eq!(b.mean, alloc::vec![0.0]);
        assert_eq!(b.std, alloc::vec![0.0]);
    }
}
