//! Measurements used on the two-copy phase-dephasing experiment.
//!
//! `phi` is the eigenbasis measurement of the two-copy phase SLD. The `w*`
//! sets are numerically optimised for the weight `diag(w, 2 - w)` and are
//! published to four digits, so their vectors are not exactly orthonormal;
//! they are Lowdin-orthonormalised (`V (V^dagger V)^(-1/2)`, the closest
//! unitary) before being written out. Each file also carries the published
//! estimator coefficients with offsets `(0, 1/2)`.

use priorest_core::linalg::{ComplexMatrix, HermitianOperator, C64};
use priorest_core::simulate::EstimatorCoefficients;

use crate::schema::{parse, to_pretty, PovmJson};

pub const NAMES: [&str; 6] = ["phi", "w1.8", "w1.4", "w1.0", "w0.6", "w0.2"];

/// Weight `w` of each optimised set, in [`NAMES`] order after `phi`.
pub const WEIGHTS: [f64; 5] = [1.8, 1.4, 1.0, 0.6, 0.2];

const FILES: [&str; 6] = [
    include_str!("../fixtures/phi.json"),
    include_str!("../fixtures/w1.8.json"),
    include_str!("../fixtures/w1.4.json"),
    include_str!("../fixtures/w1.0.json"),
    include_str!("../fixtures/w0.6.json"),
    include_str!("../fixtures/w0.2.json"),
];

/// Shipped fixture text by name.
pub fn text(name: &str) -> Option<&'static str> {
    NAMES.iter().position(|n| *n == name).map(|i| FILES[i])
}

pub fn load(name: &str) -> Option<PovmJson> {
    text(name).map(|t| parse(name, t).expect("shipped fixtures parse"))
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Published vectors, one `[psi_1, .., psi_4]` per fixture.
fn published_vectors(name: &str) -> [[C64; 4]; 4] {
    let h = 0.5;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let antisym = [c(0.0, 0.0), c(s, 0.0), c(-s, 0.0), c(0.0, 0.0)];
    // (a, b + ci, d + ei, f) for psi_1; psi_4 is its conjugate; psi_3 = (g, k, k, g).
    let optimised = |a: f64, b: f64, ci: f64, d: f64, e: f64, g: f64, k: f64| {
        [
            [c(a, 0.0), c(b, ci), c(b, ci), c(d, -e)],
            antisym,
            [c(g, 0.0), c(k, 0.0), c(k, 0.0), c(g, 0.0)],
            [c(a, 0.0), c(b, -ci), c(b, -ci), c(d, e)],
        ]
    };
    match name {
        "phi" => [
            [c(h, 0.0), c(0.0, -h), c(0.0, -h), c(-h, 0.0)],
            [c(h, 0.0), c(0.0, h), c(0.0, h), c(-h, 0.0)],
            [c(0.0, 0.0), c(-s, 0.0), c(s, 0.0), c(0.0, 0.0)],
            [c(s, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(s, 0.0)],
        ],
        "w1.8" => optimised(0.5033, -0.0569, 0.4934, -0.4901, 0.1145, 0.7024, 0.0815),
        "w1.4" => optimised(0.5135, -0.1109, 0.4733, -0.4601, 0.2282, 0.6874, 0.1657),
        "w1.0" => optimised(0.5245, -0.1434, 0.4520, -0.4287, 0.3023, 0.6706, 0.2243),
        "w0.6" => optimised(0.5382, -0.1697, 0.4260, -0.3907, 0.3701, 0.6486, 0.2817),
        "w0.2" => optimised(0.5620, -0.1960, 0.3817, -0.3276, 0.4567, 0.6068, 0.3630),
        _ => panic!("unknown fixture {name}"),
    }
}

/// Published coefficient rows `(phi, Delta)`.
fn published_estimator(name: &str) -> [[f64; 4]; 2] {
    let pair = |x: f64, d1: f64, d2: f64, d3: f64| [[x, 0.0, 0.0, -x], [d1, d2, d3, d1]];
    match name {
        "phi" => [[-2.0, 2.0, 0.0, 0.0], [0.0, 0.0, 2.5, -1.5]],
        "w1.8" => pair(2.1375, 0.3581, 1.8459, -1.3648),
        "w1.4" => pair(2.3392, 0.5882, 1.3291, -1.1170),
        "w1.0" => pair(2.5323, 0.6897, 1.0688, -0.9538),
        "w0.6" => pair(2.7856, 0.7582, 0.8777, -0.8181),
        "w0.2" => pair(3.3250, 0.8193, 0.6937, -0.6743),
        _ => panic!("unknown fixture {name}"),
    }
}

/// Closest matrix with orthonormal columns.
pub fn lowdin(v: &ComplexMatrix) -> ComplexMatrix {
    let gram = HermitianOperator::hermitize(&v.adjoint().matmul(v));
    let spec = gram.eigen();
    let inv_sqrt: Vec<f64> = spec.eigenvalues.iter().map(|g| 1.0 / g.sqrt()).collect();
    let s = HermitianOperator::from_real_diagonal(&inv_sqrt).lift(&spec.eigenvectors);
    v.matmul(s.matrix())
}

/// Builds the fixture file contents from the published data.
pub fn generate(name: &str) -> String {
    let vecs = published_vectors(name);
    let v = ComplexMatrix::from_fn(4, 4, |r, k| vecs[k][r]);
    let u = lowdin(&v);
    let elements = (0..4)
        .map(|k| HermitianOperator::projector(&u.column(k)))
        .collect::<Vec<_>>();
    let povm = priorest_core::fisher::Povm::with_labels(
        elements,
        (1..=4).map(|k| format!("psi{k}")).collect(),
    )
    .expect("orthonormalised vectors form a POVM");
    let est = published_estimator(name);
    let coeffs = EstimatorCoefficients::new(est.iter().map(|r| r.to_vec()).collect(), vec![0.0, 0.5])
        .expect("published coefficients are finite");
    to_pretty(&PovmJson::from_povm(&povm, Some(&coeffs)))
}

/// Largest entry of `V^dagger V - I` for the published vectors.
pub fn published_orthonormality_defect(name: &str) -> f64 {
    let vecs = published_vectors(name);
    let v = ComplexMatrix::from_fn(4, 4, |r, k| vecs[k][r]);
    priorest_core::linalg::orthonormality_defect(&v)
}
