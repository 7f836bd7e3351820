//! Random models and operators for property tests.
#![allow(dead_code)]

use priorest_core::linalg::{ComplexMatrix, HermitianOperator, C64};
use priorest_core::model::StatisticalModel;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(g: &mut ChaCha8Rng) -> f64 {
    // Box-Muller; enough for test data.
    let u: f64 = g.random_range(f64::EPSILON..1.0);
    let v: f64 = g.random_range(0.0..1.0);
    (-2.0 * u.ln()).sqrt() * (std::f64::consts::TAU * v).cos()
}

pub fn ginibre(g: &mut ChaCha8Rng, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| C64::new(gaussian(g), gaussian(g)))
}

pub fn hermitian(g: &mut ChaCha8Rng, n: usize) -> HermitianOperator {
    HermitianOperator::hermitize(&ginibre(g, n, n))
}

pub fn unitary(g: &mut ChaCha8Rng, n: usize) -> ComplexMatrix {
    hermitian(g, n).eigen().eigenvectors
}

/// Density matrix with the given spectrum in a random basis.
pub fn state_with_spectrum(g: &mut ChaCha8Rng, spectrum: &[f64]) -> HermitianOperator {
    let u = unitary(g, spectrum.len());
    let total: f64 = spectrum.iter().sum();
    let s: Vec<f64> = spectrum.iter().map(|x| x / total).collect();
    HermitianOperator::from_real_diagonal(&s).lift(&u)
}

pub fn traceless(h: &HermitianOperator) -> HermitianOperator {
    let n = h.dim();
    h.add_scaled(-h.trace() / n as f64, &HermitianOperator::identity(n))
}

/// Full-rank model of dimension `n` with `k` parameters.
pub fn full_rank_model(g: &mut ChaCha8Rng, n: usize, k: usize) -> StatisticalModel {
    let spectrum: Vec<f64> = (0..n).map(|_| g.random_range(0.05..1.0)).collect();
    let rho = state_with_spectrum(g, &spectrum);
    let drho = (0..k).map(|_| traceless(&hermitian(g, n)).scale(0.3)).collect();
    let labels = (0..k).map(|i| format!("t{i}")).collect();
    StatisticalModel::new(vec![0.0; k], labels, rho, drho).expect("random full-rank model")
}

/// Model whose state has a kernel of dimension `kernel`; derivatives vanish on
/// the kernel-kernel block so an SLD exists.
pub fn rank_deficient_model(g: &mut ChaCha8Rng, n: usize, kernel: usize, k: usize) -> StatisticalModel {
    let u = unitary(g, n);
    let mut spectrum = vec![0.0; n];
    for s in spectrum.iter_mut().skip(kernel) {
        *s = g.random_range(0.05..1.0);
    }
    let total: f64 = spectrum.iter().sum();
    spectrum.iter_mut().for_each(|s| *s /= total);
    let rho = HermitianOperator::from_real_diagonal(&spectrum).lift(&u);
    let support: Vec<f64> = (0..n).map(|i| if i < kernel { 0.0 } else { 1.0 }).collect();
    let p_support = HermitianOperator::from_real_diagonal(&support);
    let drho = (0..k)
        .map(|_| {
            let mut d = hermitian(g, n).into_matrix();
            for a in 0..kernel {
                for b in 0..kernel {
                    d[(a, b)] = C64::new(0.0, 0.0);
                }
            }
            let d = HermitianOperator::hermitize(&d);
            let d = d.add_scaled(-d.trace() / (n - kernel) as f64, &p_support);
            d.scale(0.3).lift(&u)
        })
        .collect();
    let labels = (0..k).map(|i| format!("t{i}")).collect();
    StatisticalModel::new(vec![0.0; k], labels, rho, drho).expect("random rank-deficient model")
}

/// Random POVM of `n..=n + 2` rank-one elements.
pub fn random_povm(g: &mut ChaCha8Rng, n: usize) -> priorest_core::fisher::Povm {
    let outcomes = g.random_range(n..=n + 2);
    // Pi_k = S^{-1/2} A_k S^{-1/2} with A_k = B_k B_k^dagger, S = sum A_k.
    let parts: Vec<HermitianOperator> = (0..outcomes)
        .map(|_| {
            let b = ginibre(g, n, 1);
            HermitianOperator::hermitize(&b.matmul(&b.adjoint()))
        })
        .collect();
    let mut s = HermitianOperator::zeros(n);
    for p in &parts {
        s = s.add(p);
    }
    let s_inv_half = s.eigen().map(|x| 1.0 / x.sqrt());
    let elements = parts
        .iter()
        .map(|p| p.lift(s_inv_half.matrix()))
        .map(|p| HermitianOperator::hermitize(p.matrix()))
        .collect();
    priorest_core::fisher::Povm::new(elements).expect("random POVM")
}

/// Fixed-seed proptest configuration without failure files.
pub fn config(cases: u32) -> proptest::test_runner::Config {
    proptest::test_runner::Config {
        cases,
        rng_seed: proptest::test_runner::RngSeed::Fixed(0x5EED_1234),
        failure_persistence: None,
        ..Default::default()
    }
}
