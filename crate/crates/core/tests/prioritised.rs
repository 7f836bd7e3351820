mod common;

use common::*;
use priorest_core::fisher::{qfi, sld};
use priorest_core::model::{fock_displacement, n_copy, orthogonalize, phase_dephasing, StatisticalModel};
use priorest_core::prioritised::{build_measurement, check, SearchOptions, SearchProblem};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// `d_p -> s_p d_p + c d_o`, `d_o -> s_o d_o`.
fn reparameterise(m: &StatisticalModel, p: usize, s_p: f64, c: f64, s_o: f64) -> StatisticalModel {
    let o = 1 - p;
    let mut d = m.derivatives().to_vec();
    d[p] = m.drho(p).scale(s_p).add_scaled(c, m.drho(o));
    d[o] = m.drho(o).scale(s_o);
    StatisticalModel::new(m.theta().to_vec(), m.labels().to_vec(), m.rho().clone(), d).unwrap()
}

fn reference_models(g: &mut ChaCha8Rng) -> Vec<StatisticalModel> {
    let base = phase_dephasing(0.3, 0.4).unwrap();
    let mut out: Vec<_> = (1..=3).map(|n| n_copy(&base, n).unwrap()).collect();
    out.extend((0..4).map(|_| full_rank_model(g, 3, 2)));
    out
}

#[test]
fn decision_is_stable_under_reparameterisation() {
    let mut g = rng(11);
    for (k, m) in reference_models(&mut g).iter().enumerate() {
        for p in 0..2 {
            let base = check(m, p).unwrap();
            for _ in 0..10 {
                let s_p = g.random_range(0.3..3.0) * if g.random_bool(0.5) { -1.0 } else { 1.0 };
                let s_o = g.random_range(0.3..3.0) * if g.random_bool(0.5) { -1.0 } else { 1.0 };
                let c = g.random_range(-2.0..2.0);
                let r = check(&reparameterise(m, p, s_p, c, s_o), p).unwrap();
                assert_eq!(r.possible, base.possible, "model {k}, p {p}");
                if let (Some(a), Some(b)) = (base.mse_point, r.mse_point) {
                    let want = (a.0 / (s_p * s_p), a.1 / (s_o * s_o));
                    assert!((b.0 - want.0).abs() < 1e-8 * want.0, "model {k}: {b:?} vs {want:?}");
                    assert!((b.1 - want.1).abs() < 1e-8 * want.1, "model {k}: {b:?} vs {want:?}");
                }
            }
        }
    }
}

proptest! {
    #![proptest_config(config(50))]

    #[test]
    fn fine_measurement_saturates_and_decouples(seed in any::<u64>(), n in 3usize..6, p in 0usize..2) {
        let mut g = rng(seed);
        let m = full_rank_model(&mut g, n, 2);
        let fine = build_measurement(&m, p).unwrap();
        let j = qfi(&orthogonalize(&m, p).unwrap()).unwrap();
        let f = &fine.fisher.matrix;
        let scale = 1.0 + j.max_abs();
        prop_assert!((f[(p, p)] - j[(p, p)]).abs() < 1e-8 * scale, "F_pp {} vs J_pp {}", f[(p, p)], j[(p, p)]);
        prop_assert!(f[(0, 1)].abs() < 1e-8 * scale);
        prop_assert!((fine.mse_point.0 - 1.0 / j[(p, p)]).abs() < 1e-8 / j[(p, p)]);
    }

    /// On a qubit both witnesses are forced to zero by orthogonality.
    #[test]
    fn qubit_models_never_admit_prioritisation(seed in any::<u64>(), p in 0usize..2) {
        let mut g = rng(seed);
        let m = full_rank_model(&mut g, 2, 2);
        prop_assert!(!check(&m, p).unwrap().possible);
        prop_assert!(build_measurement(&m, p).is_err());
    }
}

#[test]
fn two_copy_fine_measurement_invariants() {
    let m = n_copy(&phase_dephasing(0.0, 0.5).unwrap(), 2).unwrap();
    let fine = build_measurement(&m, 0).unwrap();
    let j = qfi(&m).unwrap();
    assert!((fine.fisher.matrix[(0, 0)] - j[(0, 0)]).abs() < 1e-8);
    assert!(fine.fisher.matrix[(0, 1)].abs() < 1e-8);
}

fn quick_search() -> SearchOptions {
    SearchOptions { restarts: 12, ..SearchOptions::default() }
}

#[test]
fn search_is_invariant_under_kernel_permutation() {
    let mut g = rng(23);
    let mut models = vec![fock_displacement(1).unwrap()];
    models.extend((0..3).map(|_| rank_deficient_model(&mut g, 4, 2, 2)));
    for (k, m) in models.iter().enumerate() {
        let family = sld(m, 0).unwrap();
        let reference = SearchProblem::with_family(m, family.clone(), 0, 1, quick_search())
            .and_then(|s| s.reduce(s.starts().iter().map(|c| s.local(c)).collect()))
            .unwrap();
        for _ in 0..3 {
            let mut perm: Vec<usize> = (0..family.free_dim).collect();
            perm.shuffle(&mut g);
            let problem = SearchProblem::with_family(m, family.permuted(&perm), 0, 1, quick_search()).unwrap();
            let r = problem.reduce(problem.starts().iter().map(|c| problem.local(c)).collect()).unwrap();
            assert_eq!(r.found, reference.found, "model {k}");
            assert!(
                (r.f_oo - reference.f_oo).abs() < 1e-6 * reference.f_oo.abs().max(1.0),
                "model {k}, perm {perm:?}: {} vs {}",
                r.f_oo,
                reference.f_oo
            );
        }
    }
}

#[test]
fn two_copy_mse_point_is_the_curve_intercept() {
    let m = n_copy(&phase_dephasing(0.0, 0.5).unwrap(), 2).unwrap();
    let (v1, v2) = build_measurement(&m, 0).unwrap().mse_point;
    assert!((v1 - 2.0).abs() < 1e-9 && (v2 - 15.0 / 8.0).abs() < 1e-9, "({v1}, {v2})");
    let curve = priorest_core::bounds::sweep(&m, 40, 1e-4).unwrap();
    let boundary = curve.boundary_at(v1 + 1e-9).unwrap();
    assert!(v2 >= boundary - 1e-3 * v2, "point below the curve: {v2} < {boundary}");
    let corner = &curve.vertices[0];
    assert!(corner.limit);
    assert!((corner.v1 - v1).abs() < 1e-3 * v1 && (corner.v2 - v2).abs() < 1e-3 * v2, "{corner:?}");
}
