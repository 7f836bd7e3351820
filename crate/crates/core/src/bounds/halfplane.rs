//! Lower-left boundary of an intersection of half-planes `a V1 + b V2 >= C`.

use alloc::vec::Vec;

#[allow(unused_imports)]
use crate::prelude::*;

/// The constraint `a V1 + b V2 >= c`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HalfPlane {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl HalfPlane {
    pub fn new(a: f64, b: f64, c: f64) -> Self {
        Self { a, b, c }
    }

    /// `a V1 + b V2 - c`; non-negative inside.
    pub fn slack(&self, v1: f64, v2: f64) -> f64 {
        self.a * v1 + self.b * v2 - self.c
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Intersection {
    /// Boundary vertices, `V1` ascending and `V2` descending.
    pub vertices: Vec<(f64, f64)>,
    /// Indices (into the input) of the lines that carry the boundary, in order
    /// from the steepest.
    pub active: Vec<usize>,
}

impl Intersection {
    /// The single non-dominated line when fewer than two survive.
    pub fn surviving_line(&self, input: &[HalfPlane]) -> Option<HalfPlane> {
        match self.active.as_slice() {
            [only] => Some(input[*only]),
            _ => None,
        }
    }
}

const MERGE_TOL: f64 = 1e-12;

/// Intersects the half-planes and returns the vertices of the boundary.
///
/// Lines with `b = 0` are vertical walls `V1 >= c / a`; the tightest one clips
/// the envelope. The rest form `V2 >= c/b - (a/b) V1` and the boundary is the
/// upper envelope of those lines. Lines that are never strictly active are
/// dropped, so three lines through a common point give a single vertex.
///
/// Panics if any line has a negative coefficient or `a = b = 0`.
pub fn halfplane_intersect(halfplanes: &[HalfPlane]) -> Intersection {
    for h in halfplanes {
        assert!(
            h.a >= 0.0 && h.b >= 0.0 && (h.a > 0.0 || h.b > 0.0),
            "half-plane coefficients must be non-negative and not both zero: {h:?}"
        );
    }
    let wall = halfplanes
        .iter()
        .enumerate()
        .filter(|(_, h)| h.b == 0.0)
        .map(|(i, h)| (i, h.c / h.a))
        .max_by(|x, y| x.1.total_cmp(&y.1).then(y.0.cmp(&x.0)));

    // (slope, intercept, index)
    let mut lines: Vec<(f64, f64, usize)> = halfplanes
        .iter()
        .enumerate()
        .filter(|(_, h)| h.b > 0.0)
        .map(|(i, h)| (-h.a / h.b, h.c / h.b, i))
        .collect();
    lines.sort_by(|x, y| x.0.total_cmp(&y.0).then(y.1.total_cmp(&x.1)).then(x.2.cmp(&y.2)));
    lines.dedup_by(|later, kept| later.0 == kept.0);

    let cross = |l: &(f64, f64, usize), m: &(f64, f64, usize)| (m.1 - l.1) / (l.0 - m.0);
    let mut hull: Vec<(f64, f64, usize)> = Vec::with_capacity(lines.len());
    for line in lines {
        while hull.len() >= 2 {
            let l1 = &hull[hull.len() - 2];
            let l2 = &hull[hull.len() - 1];
            let x12 = cross(l1, l2);
            let x13 = cross(l1, &line);
            if x13 <= x12 + MERGE_TOL * x12.abs().max(1.0) {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(line);
    }

    // Clip at the wall: drop lines only active left of it.
    if let Some((_, x0)) = wall {
        while hull.len() >= 2 && cross(&hull[0], &hull[1]) <= x0 {
            hull.remove(0);
        }
    }

    let mut active: Vec<usize> = Vec::new();
    let mut vertices = Vec::new();
    if let Some((wi, x0)) = wall {
        active.push(wi);
        if let Some(first) = hull.first() {
            vertices.push((x0, first.1 + first.0 * x0));
        }
    }
    for w in hull.windows(2) {
        let x = cross(&w[0], &w[1]);
        vertices.push((x, w[0].1 + w[0].0 * x));
    }
    active.extend(hull.iter().map(|l| l.2));
    if active.len() < 2 {
        vertices.clear();
    }
    Intersection { vertices, active }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_aligned_pair() {
        let hs = [HalfPlane::new(1.0, 0.0, 1.0), HalfPlane::new(0.0, 1.0, 1.0)];
        let r = halfplane_intersect(&hs);
        assert_eq!(r.vertices, alloc::vec![(1.0, 1.0)]);
    }

    #[test]
    fn concurrent_lines_give_one_vertex() {
        let hs = [
            HalfPlane::new(1.0, 1.0, 2.0),
            HalfPlane::new(2.0, 1.0, 3.0),
            HalfPlane::new(1.0, 2.0, 3.0),
        ];
        let r = halfplane_intersect(&hs);
        assert_eq!(r.vertices.len(), 1);
        let (x, y) = r.vertices[0];
        assert!((x - 1.0).abs() < 1e-12 && (y - 1.0).abs() < 1e-12);
        for h in &hs {
            assert!(h.slack(x, y) >= -1e-9);
        }
    }

    #[test]
    fn single_line_has_no_vertices() {
        let hs = [HalfPlane::new(1.0, 1.0, 2.0), HalfPlane::new(1.0, 1.0, 1.0)];
        let r = halfplane_intersect(&hs);
        assert!(r.vertices.is_empty());
        assert_eq!(r.surviving_line(&hs), Some(hs[0]));
    }

    #[test]
    fn wall_clips_envelope() {
        // V2 >= 4 - V1 and V2 >= 2 - V1/4 with wall V1 >= 3
        let hs = [
            HalfPlane::new(1.0, 1.0, 4.0),
            HalfPlane::new(0.25, 1.0, 2.0),
            HalfPlane::new(1.0, 0.0, 3.0),
        ];
        let r = halfplane_intersect(&hs);
        assert_eq!(r.vertices.len(), 1);
        let (x, y) = r.vertices[0];
        assert!((x - 3.0).abs() < 1e-12 && (y - 1.25).abs() < 1e-12);
    }
}
