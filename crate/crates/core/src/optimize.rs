//! Derivative-free minimisation (Nelder-Mead).

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use crate::prelude::*;

#[derive(Clone, Debug)]
pub struct NelderMeadOptions {
    /// Edge length of the initial simplex around the start.
    pub initial_step: f64,
    /// Stop when the spread of function values over the simplex drops below
    /// `f_tol * (1 + |f_best|)` and the simplex diameter below `x_tol`.
    pub f_tol: f64,
    pub x_tol: f64,
    pub max_evals: usize,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            initial_step: 0.5,
            f_tol: 1e-13,
            x_tol: 1e-9,
            max_evals: 4000,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    pub converged: bool,
}

/// Minimises `f` from `start` with the adaptive-parameter Nelder-Mead method.
/// Non-finite function values are treated as `+inf`.
pub fn nelder_mead(f: impl Fn(&[f64]) -> f64, start: &[f64], opts: &NelderMeadOptions) -> Minimum {
    let n = start.len();
    let eval = |x: &[f64]| {
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    if n == 0 {
        return Minimum {
            x: Vec::new(),
            value: eval(start),
            evaluations: 1,
            converged: true,
        };
    }
    let nf = n as f64;
    let (alpha, gamma, rho, sigma) = (1.0, 1.0 + 2.0 / nf, 0.75 - 1.0 / (2.0 * nf), 1.0 - 1.0 / nf);

    let mut simplex: Vec<Vec<f64>> = vec![start.to_vec()];
    for i in 0..n {
        let mut x = start.to_vec();
        x[i] += opts.initial_step;
        simplex.push(x);
    }
    let mut values: Vec<f64> = simplex.iter().map(|x| eval(x)).collect();
    let mut evals = n + 1;
    let mut converged = false;

    let along = |from: &[f64], to: &[f64], t: f64| -> Vec<f64> {
        from.iter().zip(to).map(|(a, b)| a + t * (b - a)).collect()
    };

    while evals < opts.max_evals {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&i, &j| values[i].total_cmp(&values[j]).then(i.cmp(&j)));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let spread = values[n] - values[0];
        let diameter = simplex[1..]
            .iter()
            .map(|x| x.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if spread <= opts.f_tol * (1.0 + values[0].abs()) && diameter <= opts.x_tol {
            converged = true;
            break;
        }

        let mut centroid = vec![0.0; n];
        for x in &simplex[..n] {
            for (c, v) in centroid.iter_mut().zip(x) {
                *c += v / nf;
            }
        }
        let worst = simplex[n].clone();
        let reflected = along(&centroid, &worst, -alpha);
        let fr = eval(&reflected);
        evals += 1;

        if fr < values[0] {
            let expanded = along(&centroid, &worst, -gamma);
            let fe = eval(&expanded);
            evals += 1;
            if fe < fr {
                simplex[n] = expanded;
                values[n] = fe;
            } else {
                simplex[n] = reflected;
                values[n] = fr;
            }
            continue;
        }
        if fr < values[n - 1] {
            simplex[n] = reflected;
            values[n] = fr;
            continue;
        }
        let (contracted, fc) = if fr < values[n] {
            let x = along(&centroid, &worst, -alpha * rho);
            let v = eval(&x);
            (x, v)
        } else {
            let x = along(&centroid, &worst, rho);
            let v = eval(&x);
            (x, v)
        };
        evals += 1;
        if fc < values[n].min(fr) {
            simplex[n] = contracted;
            values[n] = fc;
            continue;
        }
        let best = simplex[0].clone();
        for k in 1..=n {
            simplex[k] = along(&best, &simplex[k], sigma);
            values[k] = eval(&simplex[k]);
        }
        evals += n;
    }

    let best = (0..=n)
        .min_by(|&i, &j| values[i].total_cmp(&values[j]).then(i.cmp(&j)))
        .unwrap_or(0);
    Minimum {
        x: simplex[best].clone(),
        value: values[best],
        evaluations: evals,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let m = nelder_mead(f, &[-1.2, 1.0], &NelderMeadOptions::default());
        assert!(m.converged);
        assert!((m.x[0] - 1.0).abs() < 1e-6 && (m.x[1] - 1.0).abs() < 1e-6, "{m:?}");
    }

    #[test]
    fn quadratic_in_four_dimensions() {
        let f = |x: &[f64]| x.iter().enumerate().map(|(i, v)| (i as f64 + 1.0) * (v - 0.3).powi(2)).sum();
        let m = nelder_mead(f, &[2.0, -1.0, 0.0, 1.0], &NelderMeadOptions::default());
        assert!(m.x.iter().all(|v| (v - 0.3).abs() < 1e-6), "{m:?}");
    }

    #[test]
    fn nan_is_avoided() {
        let f = |x: &[f64]| if x[0] < 0.0 { f64::NAN } else { (x[0] - 1.0).powi(2) };
        let m = nelder_mead(f, &[0.5], &NelderMeadOptions::default());
        assert!((m.x[0] - 1.0).abs() < 1e-6);
    }
}
