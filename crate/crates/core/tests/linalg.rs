mod common;

use common::*;
use priorest_core::linalg::{kron, ComplexMatrix, HermitianOperator, RealMatrix};
use proptest::prelude::*;

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn eigendecomposition_reconstructs(seed in any::<u64>(), n in 1usize..9) {
        let mut g = rng(seed);
        let h = hermitian(&mut g, n);
        let spec = h.eigen();
        prop_assert!(spec.reconstruct().max_abs_diff(h.matrix()) < 1e-11 * (1.0 + h.max_abs()));
        prop_assert!(priorest_core::linalg::orthonormality_defect(&spec.eigenvectors) < 1e-12);
        prop_assert!(spec.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
        let tr: f64 = spec.eigenvalues.iter().sum();
        prop_assert!((tr - h.trace()).abs() < 1e-10 * (1.0 + h.max_abs()));
    }

    #[test]
    fn kron_mixed_product_and_trace(seed in any::<u64>(), n in 1usize..4, m in 1usize..4) {
        let mut g = rng(seed);
        let (a, c) = (ginibre(&mut g, n, n), ginibre(&mut g, n, n));
        let (b, d) = (ginibre(&mut g, m, m), ginibre(&mut g, m, m));
        let lhs = kron(&a, &b).matmul(&kron(&c, &d));
        let rhs = kron(&a.matmul(&c), &b.matmul(&d));
        prop_assert!(lhs.max_abs_diff(&rhs) < 1e-11 * (1.0 + lhs.max_abs()));
        let t = kron(&a, &b).trace() - a.trace() * b.trace();
        prop_assert!(t.norm() < 1e-11 * (1.0 + a.max_abs() * b.max_abs() * (n * m) as f64));
    }

    #[test]
    fn hermitian_kron_of_states_is_a_state(seed in any::<u64>(), n in 2usize..4) {
        let mut g = rng(seed);
        let spec: Vec<f64> = (0..n).map(|k| 1.0 + k as f64).collect();
        let r = state_with_spectrum(&mut g, &spec);
        let rr = r.kron(&r);
        prop_assert!((rr.trace() - 1.0).abs() < 1e-12);
        prop_assert!(rr.eigen().eigenvalues[0] > -1e-12);
    }

    #[test]
    fn real_symmetric_eigenvalues_match_complex_solver(seed in any::<u64>(), n in 1usize..8) {
        let mut g = rng(seed);
        let mut a = RealMatrix::from_fn(n, n, |_, _| gaussian(&mut g));
        a.symmetrize();
        let ev = a.symmetric_eigenvalues();
        let h = HermitianOperator::hermitize(&ComplexMatrix::from_fn(n, n, |r, c| {
            priorest_core::linalg::C64::new(a[(r, c)], 0.0)
        }));
        for (x, y) in ev.iter().zip(&h.eigen().eigenvalues) {
            prop_assert!((x - y).abs() < 1e-10 * (1.0 + a.max_abs()));
        }
    }

    #[test]
    fn cholesky_solves(seed in any::<u64>(), n in 1usize..8) {
        let mut g = rng(seed);
        let b = RealMatrix::from_fn(n, n, |_, _| gaussian(&mut g));
        let spd = b.transpose().matmul(&b).add_scaled_copy(1.0, &RealMatrix::identity(n));
        let ch = spd.cholesky().unwrap();
        let inv = ch.inverse();
        prop_assert!(spd.matmul(&inv).sub(&RealMatrix::identity(n)).max_abs() < 1e-9);
    }
}

trait AddScaledCopy {
    fn add_scaled_copy(&self, s: f64, other: &Self) -> Self;
}

impl AddScaledCopy for RealMatrix {
    fn add_scaled_copy(&self, s: f64, other: &Self) -> Self {
        let mut m = self.clone();
        m.add_scaled(s, other);
        m
    }
}
