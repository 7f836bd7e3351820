//! Weighted Nagaoka-Hayashi bounds, sweeps over weights and trade-off curves.
//!
//! Each weight `W = diag(a, b)` gives a supporting half-plane
//! `a V1 + b V2 >= C(a, b)` for the achievable pair of mean squared errors.
//! The trade-off curve is the boundary of the intersection of these
//! half-planes.

mod halfplane;
mod nh;

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::RealMatrix;
use crate::model::StatisticalModel;
use crate::sdp::{IterationRecord, SolveOptions};
#[allow(unused_imports)]
use crate::prelude::*;

pub use halfplane::{halfplane_intersect, HalfPlane, Intersection};
pub use nh::{nagaoka_hayashi, nagaoka_hayashi_with, variable_count, NhResult};

/// Allowed violation of a stored half-plane by a reported vertex.
pub const VERTEX_SLACK_TOL: f64 = 1e-7;

/// Solver tolerance for sweep points. Tighter than the solver default because
/// vertices are intersections of nearly parallel lines.
pub const SWEEP_TOL: f64 = 1e-10;
pub const DEFAULT_SWEEP_POINTS: usize = 40;
pub const DEFAULT_ENDPOINT_EPS: f64 = 1e-4;

/// Symmetric PSD 2 x 2 weight.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeightMatrix {
    w: [[f64; 2]; 2],
}

impl WeightMatrix {
    pub fn new(w: [[f64; 2]; 2]) -> Result<Self> {
        if w.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::validation("finiteness", "weight has non-finite entries"));
        }
        if (w[0][1] - w[1][0]).abs() > 1e-12 {
            return Err(Error::validation("symmetry", format!("weight off-diagonals {} and {}", w[0][1], w[1][0])));
        }
        let det = w[0][0] * w[1][1] - w[0][1] * w[1][0];
        if w[0][0] < 0.0 || w[1][1] < 0.0 || det < -1e-12 {
            return Err(Error::validation("PSD", format!("weight {w:?} is not positive semidefinite")));
        }
        Ok(Self { w })
    }

    pub fn diagonal(a: f64, b: f64) -> Result<Self> {
        Self::new([[a, 0.0], [0.0, b]])
    }

    pub fn identity() -> Self {
        Self {
            w: [[1.0, 0.0], [0.0, 1.0]],
        }
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.w[r][c]
    }

    pub fn scaled(&self, t: f64) -> Result<Self> {
        Self::new([[t * self.w[0][0], t * self.w[0][1]], [t * self.w[1][0], t * self.w[1][1]]])
    }
}

/// Weights `a` in `[eps, 2 - eps]` with `a + b = 2`, uniform in `ln(a / b)`,
/// so both endpoints are approached geometrically.
pub fn sweep_grid(n_points: usize, endpoint_eps: f64) -> Result<Vec<(f64, f64)>> {
    if n_points < 3 {
        return Err(Error::Domain(format!("a sweep needs at least 3 points, got {n_points}")));
    }
    if !(endpoint_eps > 0.0 && endpoint_eps < 1.0) {
        return Err(Error::Domain(format!("endpoint eps {endpoint_eps} outside (0, 1)")));
    }
    let r_max = ((2.0 - endpoint_eps) / endpoint_eps).ln();
    Ok((0..n_points)
        .map(|k| {
            let r = -r_max + 2.0 * r_max * k as f64 / (n_points - 1) as f64;
            let a = 1.0 + (0.5 * r).tanh();
            (a, 2.0 - a)
        })
        .collect())
}

/// Outcome of one weight in a sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepPoint {
    pub a: f64,
    pub b: f64,
    /// `Ok(C)` with the touching point, or the failure message.
    pub outcome: core::result::Result<SweepValue, String>,
    /// Solver iterations, empty unless requested.
    pub trace: Vec<IterationRecord>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepValue {
    pub c: f64,
    pub gap: f64,
    /// `(tr[rho L11], tr[rho L22])` at the optimum.
    pub touch: (f64, f64),
    pub optimal: bool,
}

impl SweepPoint {
    pub fn status(&self) -> &'static str {
        match &self.outcome {
            Ok(v) if v.optimal => "optimal",
            Ok(_) => "max_iter",
            Err(_) => "failed",
        }
    }
}

/// Evaluates one weight of a sweep.
pub fn sweep_point(model: &StatisticalModel, a: f64, b: f64) -> SweepPoint {
    sweep_point_with(model, a, b, false)
}

/// As [`sweep_point`], optionally keeping the solver trace.
pub fn sweep_point_with(model: &StatisticalModel, a: f64, b: f64, trace: bool) -> SweepPoint {
    let opts = SolveOptions {
        tol: SWEEP_TOL,
        trace,
        ..SolveOptions::default()
    };
    let mut iterations = Vec::new();
    let outcome = WeightMatrix::diagonal(a, b)
        .and_then(|w| nagaoka_hayashi_with(model, &w, &opts))
        .map(|mut r| {
            iterations = core::mem::take(&mut r.trace);
            r
        })
        .map(|r| SweepValue {
            c: r.value,
            gap: r.gap,
            touch: (r.variance[0][0], r.variance[1][1]),
            optimal: r.status == crate::sdp::SdpStatus::Optimal,
        })
        .map_err(|e| format!("weight diag({a}, {b}): {e}"));
    SweepPoint {
        a,
        b,
        outcome,
        trace: iterations,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Vertex {
    pub v1: f64,
    pub v2: f64,
    /// Endpoint of the polyline, standing in for the exactly degenerate weight.
    pub limit: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TradeoffCurve {
    pub halfplanes: Vec<HalfPlane>,
    pub vertices: Vec<Vertex>,
    /// Touching points of the supporting lines, one per successful sweep point.
    pub support: Vec<(f64, f64)>,
    /// Every sweep point, including failures.
    pub points: Vec<SweepPoint>,
    /// `(J11 * copies, J22 * copies)` once the curve has been scaled.
    pub scaling: Option<(f64, f64)>,
}

impl TradeoffCurve {
    /// Builds the curve from evaluated sweep points; needs three successes.
    pub fn from_points(points: Vec<SweepPoint>) -> Result<Self> {
        let mut halfplanes = Vec::new();
        let mut support = Vec::new();
        for p in &points {
            if let Ok(v) = &p.outcome {
                halfplanes.push(HalfPlane::new(p.a, p.b, v.c));
                support.push(v.touch);
            }
        }
        if halfplanes.len() < 3 {
            let first_err = points.iter().find_map(|p| p.outcome.as_ref().err().cloned());
            return Err(Error::Solver(format!(
                "only {} of {} sweep points succeeded{}",
                halfplanes.len(),
                points.len(),
                first_err.map(|e| format!("; first failure: {e}")).unwrap_or_default()
            )));
        }
        let mut vertices = vertices_of(&halfplanes);
        let ok: Vec<(f64, f64, (f64, f64))> = points
            .iter()
            .filter_map(|p| p.outcome.as_ref().ok().map(|v| (p.a, p.b, v.touch)))
            .collect();
        // a -> 2 end: b vanishes, V2 is the coordinate that may diverge.
        let tail: Vec<(f64, (f64, f64))> = ok.iter().rev().take(3).map(|&(_, b, t)| (b, t)).collect();
        if let Some(v) = limiting_intercept(&tail, 1, &halfplanes) {
            if vertices.first().is_some_and(|f| v.0 < f.v1) {
                if let Some(f) = vertices.first_mut() {
                    f.limit = false;
                }
                vertices.insert(0, Vertex { v1: v.0, v2: v.1, limit: true });
            }
        }
        let head: Vec<(f64, (f64, f64))> = ok.iter().take(3).map(|&(a, _, t)| (a, t)).collect();
        if let Some(v) = limiting_intercept(&head, 0, &halfplanes) {
            if vertices.last().is_some_and(|l| v.1 < l.v2) {
                if let Some(l) = vertices.last_mut() {
                    l.limit = false;
                }
                vertices.push(Vertex { v1: v.0, v2: v.1, limit: true });
            }
        }
        Ok(Self {
            halfplanes,
            vertices,
            support,
            points,
            scaling: None,
        })
    }

    /// Minimum over stored half-planes of `a V1 + b V2 - C` at every vertex.
    pub fn worst_vertex_slack(&self) -> f64 {
        self.vertices
            .iter()
            .flat_map(|v| self.halfplanes.iter().map(move |h| h.slack(v.v1, v.v2)))
            .fold(f64::INFINITY, f64::min)
    }

    /// Lower boundary evaluated at `v1`: the smallest `V2` allowed by every
    /// half-plane, or `None` left of the vertical wall.
    pub fn boundary_at(&self, v1: f64) -> Option<f64> {
        let mut lo = f64::NEG_INFINITY;
        for h in &self.halfplanes {
            if h.b > 0.0 {
                lo = lo.max((h.c - h.a * v1) / h.b);
            } else if h.a * v1 < h.c {
                return None;
            }
        }
        Some(lo)
    }
}

fn vertices_of(halfplanes: &[HalfPlane]) -> Vec<Vertex> {
    let inter = halfplane_intersect(halfplanes);
    let last = inter.vertices.len().saturating_sub(1);
    inter
        .vertices
        .iter()
        .enumerate()
        .map(|(k, &(v1, v2))| Vertex {
            v1,
            v2,
            limit: k == 0 || k == last,
        })
        .collect()
}

/// Touching points `(w, (V1, V2))` ordered from the smallest vanishing weight
/// `w`, extrapolated linearly to `w = 0`. Only used when the free coordinate
/// (`free`: 0 for V1, 1 for V2) is visibly converging over the three nearest
/// points, and only if the result respects every half-plane.
fn limiting_intercept(near: &[(f64, (f64, f64))], free: usize, halfplanes: &[HalfPlane]) -> Option<(f64, f64)> {
    let [(w1, p1), (w2, p2), (_, p3)] = *near else {
        return None;
    };
    let pick = |p: (f64, f64)| if free == 0 { p.0 } else { p.1 };
    let (d12, d23) = (pick(p2) - pick(p1), pick(p3) - pick(p2));
    if !(w1 > 0.0 && w2 > w1) || !(d12.abs() < d23.abs()) {
        return None;
    }
    let t = w1 / (w2 - w1);
    let v = (p1.0 - (p2.0 - p1.0) * t, p1.1 - (p2.1 - p1.1) * t);
    let fits = v.0.is_finite()
        && v.1.is_finite()
        && halfplanes.iter().all(|h| h.slack(v.0, v.1) >= -VERTEX_SLACK_TOL);
    fits.then_some(v)
}

/// Sequential sweep over [`sweep_grid`].
pub fn sweep(model: &StatisticalModel, n_points: usize, endpoint_eps: f64) -> Result<TradeoffCurve> {
    let grid = sweep_grid(n_points, endpoint_eps)?;
    let points = grid.iter().map(|&(a, b)| sweep_point(model, a, b)).collect();
    TradeoffCurve::from_points(points)
}

/// Equality branch of the single-copy phase-dephasing trade-off:
/// `V2 = D(2-D) + [D(2-D)/(1-D)^2] / (V1 - 1/(1-D)^2)`.
pub fn analytic_tradeoff_phase_dephasing(delta: f64, v1: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Domain(format!("delta = {delta} outside (0, 1)")));
    }
    let qcrb = 1.0 / ((1.0 - delta) * (1.0 - delta));
    if !(v1 > qcrb) {
        return Err(Error::Domain(format!(
            "V1 = {v1} is not above the quantum Cramer-Rao bound {qcrb}"
        )));
    }
    let s = delta * (2.0 - delta);
    Ok(s + s * qcrb / (v1 - qcrb))
}

/// Maps `(V1, V2)` to `(copies V1 J11, copies V2 J22)`, where `j` is the
/// single-copy QFI. Half-planes are rescaled so they still bound the vertices.
pub fn scaled_curve(curve: &TradeoffCurve, j: &RealMatrix, copies: usize) -> Result<TradeoffCurve> {
    let (j11, j22) = (j[(0, 0)], j[(1, 1)]);
    if !(j11 > 0.0 && j22 > 0.0) || j[(0, 1)].abs() > 1e-9 * j11.max(j22) {
        return Err(Error::Domain("scaling needs a positive diagonal Fisher matrix".into()));
    }
    if copies == 0 {
        return Err(Error::Domain("copies must be at least 1".into()));
    }
    let (s1, s2) = (copies as f64 * j11, copies as f64 * j22);
    Ok(TradeoffCurve {
        halfplanes: curve
            .halfplanes
            .iter()
            .map(|h| HalfPlane::new(h.a / s1, h.b / s2, h.c))
            .collect(),
        vertices: curve
            .vertices
            .iter()
            .map(|v| Vertex {
                v1: v.v1 * s1,
                v2: v.v2 * s2,
                limit: v.limit,
            })
            .collect(),
        support: curve.support.iter().map(|&(x, y)| (x * s1, y * s2)).collect(),
        points: curve.points.clone(),
        scaling: Some((s1, s2)),
    })
}
