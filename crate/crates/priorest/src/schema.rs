//! JSON schemas for models, POVMs and reports.

use priorest_core::fisher::{Povm, SldFamily};
use priorest_core::linalg::{ComplexMatrix, HermitianOperator, RealMatrix};
use priorest_core::model::{richardson_derivative, StatisticalModel};
use priorest_core::prioritised::{PrioritisedReport, SearchResult};
use priorest_core::simulate::EstimatorCoefficients;
use priorest_core::Error;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct MatrixJson {
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl MatrixJson {
    pub fn from_matrix(m: &ComplexMatrix) -> Self {
        Self {
            re: m.real_part(),
            im: m.imag_part(),
        }
    }

    pub fn from_operator(h: &HermitianOperator) -> Self {
        Self::from_matrix(h.matrix())
    }

    fn to_operator(&self, what: &str, dim: usize) -> Result<HermitianOperator, CliError> {
        let m = ComplexMatrix::from_parts(&self.re, &self.im).map_err(|e| context(what, e))?;
        if m.rows() != dim || m.cols() != dim {
            return Err(context(
                what,
                Error::Dimension(format!("{}x{} matrix, expected {dim}x{dim}", m.rows(), m.cols())),
            ));
        }
        HermitianOperator::new(m).map_err(|e| context(what, e))
    }
}

fn context(what: &str, e: Error) -> CliError {
    CliError::Core {
        context: what.to_string(),
        source: e,
    }
}

/// Four states `rho(theta + s h e_i)` for `s = -2, -1, 1, 2`, per parameter.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct StencilJson {
    pub h: f64,
    pub states: Vec<[MatrixJson; 4]>,
}

/// Model file. Derivatives come either explicitly or from a stencil.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ModelJson {
    pub dim: usize,
    pub theta: Vec<f64>,
    pub labels: Vec<String>,
    pub rho: MatrixJson,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drho: Option<Vec<MatrixJson>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stencil: Option<StencilJson>,
}

impl ModelJson {
    pub fn from_model(m: &StatisticalModel) -> Self {
        Self {
            dim: m.dim(),
            theta: m.theta().to_vec(),
            labels: m.labels().to_vec(),
            rho: MatrixJson::from_operator(m.rho()),
            drho: Some(m.derivatives().iter().map(MatrixJson::from_operator).collect()),
            stencil: None,
        }
    }

    pub fn to_model(&self) -> Result<StatisticalModel, CliError> {
        let rho = self.rho.to_operator("rho", self.dim)?;
        let drho = match (&self.drho, &self.stencil) {
            (Some(d), None) => d
                .iter()
                .enumerate()
                .map(|(i, m)| m.to_operator(&format!("drho[{i}]"), self.dim))
                .collect::<Result<Vec<_>, _>>()?,
            (None, Some(st)) => st
                .states
                .iter()
                .enumerate()
                .map(|(i, four)| {
                    let what = format!("stencil[{i}]");
                    let ops = [
                        four[0].to_operator(&what, self.dim)?,
                        four[1].to_operator(&what, self.dim)?,
                        four[2].to_operator(&what, self.dim)?,
                        four[3].to_operator(&what, self.dim)?,
                    ];
                    richardson_derivative(&ops, st.h).map_err(|e| context(&what, e))
                })
                .collect::<Result<Vec<_>, _>>()?,
            _ => {
                return Err(CliError::Schema(
                    "model file needs exactly one of \"drho\" and \"stencil\"".into(),
                ))
            }
        };
        StatisticalModel::new(self.theta.clone(), self.labels.clone(), rho, drho).map_err(|e| context("model", e))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PovmJson {
    pub dim: usize,
    pub elements: Vec<MatrixJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
    /// One row per parameter, one column per outcome.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimator: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offset: Option<Vec<f64>>,
}

impl PovmJson {
    pub fn from_povm(p: &Povm, estimator: Option<&EstimatorCoefficients>) -> Self {
        Self {
            dim: p.dim(),
            elements: p.elements().iter().map(MatrixJson::from_operator).collect(),
            labels: Some(p.labels().to_vec()),
            estimator: estimator.map(|e| e.coefficients.clone()),
            offset: estimator.map(|e| e.offsets.clone()),
        }
    }

    pub fn to_povm(&self) -> Result<Povm, CliError> {
        let elements = self
            .elements
            .iter()
            .enumerate()
            .map(|(k, m)| m.to_operator(&format!("elements[{k}]"), self.dim))
            .collect::<Result<Vec<_>, _>>()?;
        match &self.labels {
            Some(l) => Povm::with_labels(elements, l.clone()),
            None => Povm::new(elements),
        }
        .map_err(|e| context("POVM", e))
    }

    pub fn estimator(&self) -> Result<Option<EstimatorCoefficients>, CliError> {
        match (&self.estimator, &self.offset) {
            (None, None) => Ok(None),
            (Some(c), o) => {
                let offsets = o.clone().unwrap_or_else(|| vec![0.0; c.len()]);
                let e = EstimatorCoefficients::new(c.clone(), offsets).map_err(|e| context("estimator", e))?;
                if e.n_outcomes() != self.elements.len() {
                    return Err(context(
                        "estimator",
                        Error::Dimension(format!(
                            "{} coefficients per parameter for {} outcomes",
                            e.n_outcomes(),
                            self.elements.len()
                        )),
                    ));
                }
                Ok(Some(e))
            }
            (None, Some(_)) => Err(CliError::Schema("\"offset\" given without \"estimator\"".into())),
        }
    }
}

pub fn matrix_rows(m: &RealMatrix) -> Vec<Vec<f64>> {
    (0..m.rows()).map(|r| m.row(r).to_vec()).collect()
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct WitnessJson {
    pub eigenvalue: f64,
    pub norm: f64,
    pub rank: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ReportJson {
    pub possible: bool,
    pub priority: usize,
    pub witnesses: Vec<WitnessJson>,
    pub fisher: Option<Vec<Vec<f64>>>,
    pub mse_point: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub search: Option<SearchJson>,
}

/// Family-search outcome for rank-deficient models.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SearchJson {
    pub found: bool,
    pub coefficients: Vec<f64>,
    pub f_pp: f64,
    pub f_oo: f64,
    pub j_pp: f64,
    pub baseline_f_oo: f64,
    pub box_usage: f64,
    pub restarts: usize,
}

impl ReportJson {
    pub fn from_report(r: &PrioritisedReport) -> Self {
        Self {
            possible: r.possible,
            priority: r.p,
            witnesses: r
                .witnesses
                .iter()
                .map(|w| WitnessJson {
                    eigenvalue: w.eigenvalue,
                    norm: w.norm,
                    rank: w.rank,
                })
                .collect(),
            fisher: r.fisher.as_ref().map(matrix_rows),
            mse_point: r.mse_point.map(|(a, b)| [a, b]),
            search: None,
        }
    }

    pub fn from_search(p: usize, s: &SearchResult, fisher: &RealMatrix) -> Self {
        let o = 1 - p;
        let possible = s.found && s.f_oo > 1e-9;
        Self {
            possible,
            priority: p,
            witnesses: Vec::new(),
            fisher: Some(matrix_rows(fisher)),
            mse_point: possible.then(|| [1.0 / s.j_pp, 1.0 / fisher[(o, o)]]),
            search: Some(SearchJson {
                found: s.found,
                coefficients: s.coefficients.clone(),
                f_pp: s.f_pp,
                f_oo: s.f_oo,
                j_pp: s.j_pp,
                baseline_f_oo: s.baseline_f_oo,
                box_usage: s.box_usage,
                restarts: s.candidates.len(),
            }),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SldJson {
    pub particular: MatrixJson,
    pub free_dim: usize,
    pub kernel_basis: Vec<MatrixJson>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct QfiJson {
    pub labels: Vec<String>,
    pub qfi: Vec<Vec<f64>>,
    pub slds: Vec<SldJson>,
}

impl QfiJson {
    pub fn new(model: &StatisticalModel, qfi: &RealMatrix, slds: &[SldFamily]) -> Self {
        Self {
            labels: model.labels().to_vec(),
            qfi: matrix_rows(qfi),
            slds: slds
                .iter()
                .map(|f| SldJson {
                    particular: MatrixJson::from_operator(&f.particular),
                    free_dim: f.free_dim,
                    kernel_basis: f.kernel_basis.iter().map(MatrixJson::from_operator).collect(),
                })
                .collect(),
        }
    }
}

pub fn parse<T: for<'de> Deserialize<'de>>(what: &str, text: &str) -> Result<T, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Schema(format!("{what}: {e}")))
}

pub fn to_pretty<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values are always serialisable");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use priorest_core::model::{fock_displacement, phase_dephasing};

    #[test]
    fn model_round_trip() {
        for m in [phase_dephasing(0.1, 0.3).unwrap(), fock_displacement(2).unwrap()] {
            let j = ModelJson::from_model(&m);
            let text = to_pretty(&j);
            let back: ModelJson = parse("model", &text).unwrap();
            assert_eq!(back, j);
            let m2 = back.to_model().unwrap();
            assert_eq!(m2.rho().max_abs_diff(m.rho()), 0.0);
        }
    }

    #[test]
    fn bad_trace_names_invariant() {
        let m = phase_dephasing(0.0, 0.5).unwrap();
        let mut j = ModelJson::from_model(&m);
        j.rho.re[0][0] = 0.9;
        let e = j.to_model().unwrap_err();
        assert!(format!("{e}").contains("trace"), "{e}");
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let e = parse::<PovmJson>("povm", r#"{"dim": 1, "elements": [], "extra": 1}"#).unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }
}
