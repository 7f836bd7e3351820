mod common;

use common::*;
use priorest_core::linalg::RealMatrix;
use priorest_core::sdp::{embed_hermitian, solve, SdpProblem, SdpStatus, SolveOptions, SparseSymmetric};
use proptest::prelude::*;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Random orthogonal matrix by Gram-Schmidt.
fn orthogonal(g: &mut ChaCha8Rng, n: usize) -> RealMatrix {
    let mut cols: Vec<Vec<f64>> = Vec::new();
    while cols.len() < n {
        let mut v: Vec<f64> = (0..n).map(|_| gaussian(g)).collect();
        for _ in 0..2 {
            for c in &cols {
                let d: f64 = v.iter().zip(c).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(c).for_each(|(a, b)| *a -= d * b);
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-3 {
            cols.push(v.into_iter().map(|x| x / norm).collect());
        }
    }
    RealMatrix::from_fn(n, n, |r, c| cols[c][r])
}

/// `Q diag(d) Q^T` placed block-diagonally.
fn block_diagonal(blocks: &[(RealMatrix, Vec<f64>)]) -> RealMatrix {
    let n: usize = blocks.iter().map(|(q, _)| q.rows()).sum();
    let mut m = RealMatrix::zeros(n, n);
    let mut off = 0;
    for (q, d) in blocks {
        let k = q.rows();
        for r in 0..k {
            for c in 0..k {
                m[(off + r, off + c)] = (0..k).map(|j| q[(r, j)] * d[j] * q[(c, j)]).sum();
            }
        }
        off += k;
    }
    m
}

fn random_symmetric_blocks(g: &mut ChaCha8Rng, dims: &[usize]) -> RealMatrix {
    let n: usize = dims.iter().sum();
    let mut m = RealMatrix::zeros(n, n);
    let mut off = 0;
    for &k in dims {
        for r in 0..k {
            for c in r..k {
                let v = gaussian(g);
                m[(off + r, off + c)] = v;
                m[(off + c, off + r)] = v;
            }
        }
        off += k;
    }
    m
}

proptest! {
    #![proptest_config(config(50))]

    /// Strictly complementary `X`, `S` in a random basis fix the optimum. A
    /// trace constraint and a positive definite feasible `X0` keep both sides
    /// strictly feasible.
    #[test]
    fn planted_optimum_is_recovered(seed in any::<u64>()) {
        let mut g = rng(seed);
        let dims: Vec<usize> = (0..g.random_range(1..=2)).map(|_| if g.random_bool(0.2) { g.random_range(5..=40) } else { g.random_range(2..=4) }).collect();
        let mut xs = Vec::new();
        let mut ss = Vec::new();
        let mut x0s = Vec::new();
        for &k in &dims {
            let q = orthogonal(&mut g, k);
            let rank = g.random_range(1..k);
            let x: Vec<f64> = (0..k).map(|j| if j < rank { g.random_range(0.2..2.0) } else { 0.0 }).collect();
            let s: Vec<f64> = (0..k).map(|j| if j < rank { 0.0 } else { g.random_range(0.2..2.0) }).collect();
            let x0: Vec<f64> = (0..k).map(|_| g.random_range(0.2..2.0)).collect();
            x0s.push((orthogonal(&mut g, k), x0));
            xs.push((q.clone(), x));
            ss.push((q, s));
        }
        let x = block_diagonal(&xs);
        let s = block_diagonal(&ss);
        let x0 = block_diagonal(&x0s);
        let x0 = x0.scaled(x.trace() / x0.trace());
        let d = x0.sub(&x);
        let n: usize = dims.iter().sum();
        let room: usize = dims.iter().map(|k| k * (k + 1) / 2).sum::<usize>() - 2;
        let m = g.random_range(1..=n.min(room).min(12));
        let mut c = s.clone();
        c.add_scaled(gaussian(&mut g), &RealMatrix::identity(n));
        let mut constraints = vec![(SparseSymmetric::from_dense(&RealMatrix::identity(n)).unwrap(), x.trace())];
        for _ in 0..m {
            let mut a = random_symmetric_blocks(&mut g, &dims);
            a.add_scaled(-a.dot(&d) / d.dot(&d), &d);
            let y = gaussian(&mut g);
            c.add_scaled(y, &a);
            constraints.push((SparseSymmetric::from_dense(&a).unwrap(), a.dot(&x)));
        }
        let expected = c.dot(&x);
        let problem = SdpProblem::new(dims, SparseSymmetric::from_dense(&c).unwrap(), constraints).unwrap();
        let sol = solve(&problem, &SolveOptions::default());
        prop_assert_eq!(sol.status, SdpStatus::Optimal);
        prop_assert!(sol.gap <= 1e-7);
        let scale = 1.0 + expected.abs();
        prop_assert!((sol.primal_obj - expected).abs() < 1e-6 * scale, "{} vs {}", sol.primal_obj, expected);
        prop_assert!((sol.dual_obj - expected).abs() < 1e-6 * scale);
    }

    #[test]
    fn embedding_doubles_the_spectrum(seed in any::<u64>(), n in 1usize..9) {
        let mut g = rng(seed);
        let h = hermitian(&mut g, n);
        let mut want: Vec<f64> = h.eigen().eigenvalues.iter().flat_map(|&e| [e, e]).collect();
        want.sort_by(f64::total_cmp);
        let got = embed_hermitian(&h).symmetric_eigenvalues();
        for (a, b) in got.iter().zip(&want) {
            prop_assert!((a - b).abs() < 1e-9 * (1.0 + h.max_abs()));
        }
    }

    #[test]
    fn embedding_preserves_inner_products(seed in any::<u64>(), n in 1usize..6) {
        let mut g = rng(seed);
        let (a, b) = (hermitian(&mut g, n), hermitian(&mut g, n));
        let lhs = embed_hermitian(&a).dot(&embed_hermitian(&b));
        prop_assert!((lhs - 2.0 * a.trace_with(&b)).abs() < 1e-9 * (1.0 + lhs.abs()));
    }
}

#[test]
fn dependent_constraints_are_rejected() {
    let a = SparseSymmetric::from_dense(&RealMatrix::identity(2)).unwrap();
    let err = SdpProblem::new(vec![2], a.clone(), vec![(a.clone(), 1.0), (a, 1.0)]).unwrap_err();
    assert!(err.to_string().contains("linear independence"), "{err}");
}

