//! Primal-dual interior-point solver for small semidefinite programs.
//!
//! Primal: minimise `<C, X>` subject to `<A_i, X> = b_i`, `X` PSD.
//! Dual: maximise `b^T y` subject to `S = C - sum_i y_i A_i` PSD.
//!
//! Constraint and objective matrices are sparse and symmetric; iterates are
//! dense. The search direction is HKM with a Mehrotra predictor-corrector.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, HermitianOperator, RealMatrix, C64};
#[allow(unused_imports)]
use crate::prelude::*;

const STEP_FRACTION: f64 = 0.98;
const STALL_LIMIT: usize = 10;
const GRAM_COND_LIMIT: f64 = 1e10;
const SYMMETRY_TOL: f64 = 1e-12;
/// `b^T y` or `-<C, X>` beyond this multiple of the data norm is taken as a ray.
const RAY_THRESHOLD: f64 = 1e8;

/// Symmetric matrix stored as its upper triangle (`r <= c`), sorted.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseSymmetric {
    dim: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl SparseSymmetric {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            entries: Vec::new(),
        }
    }

    pub fn from_dense(m: &RealMatrix) -> Result<Self> {
        if m.rows() != m.cols() {
            return Err(Error::Dimension(format!("{}x{} matrix is not square", m.rows(), m.cols())));
        }
        let defect = m.symmetry_defect();
        if defect > SYMMETRY_TOL {
            return Err(Error::validation("symmetry", format!("asymmetry {defect:e}")));
        }
        let mut b = SymmetricBuilder::new(m.rows());
        for r in 0..m.rows() {
            for c in r..m.cols() {
                b.add(r, c, m[(r, c)]);
            }
        }
        Ok(b.build())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    /// Frobenius inner product with a dense matrix.
    pub fn dot(&self, x: &RealMatrix) -> f64 {
        self.entries
            .iter()
            .map(|&(r, c, v)| if r == c { v * x[(r, c)] } else { v * (x[(r, c)] + x[(c, r)]) })
            .sum()
    }

    pub fn dot_sparse(&self, other: &Self) -> f64 {
        let (mut i, mut j, mut s) = (0, 0, 0.0);
        let (a, b) = (&self.entries, &other.entries);
        while i < a.len() && j < b.len() {
            match (a[i].0, a[i].1).cmp(&(b[j].0, b[j].1)) {
                core::cmp::Ordering::Less => i += 1,
                core::cmp::Ordering::Greater => j += 1,
                core::cmp::Ordering::Equal => {
                    let w = if a[i].0 == a[i].1 { 1.0 } else { 2.0 };
                    s += w * a[i].2 * b[j].2;
                    i += 1;
                    j += 1;
                }
            }
        }
        s
    }

    /// `m += s * self`.
    pub fn add_to(&self, m: &mut RealMatrix, s: f64) {
        for &(r, c, v) in &self.entries {
            m[(r, c)] += s * v;
            if r != c {
                m[(c, r)] += s * v;
            }
        }
    }

    pub fn to_dense(&self) -> RealMatrix {
        let mut m = RealMatrix::zeros(self.dim, self.dim);
        self.add_to(&mut m, 1.0);
        m
    }

    pub fn frobenius(&self) -> f64 {
        self.dot_sparse(self).sqrt()
    }

    /// Sorted distinct column indices of the full (symmetric) pattern.
    fn touched(&self) -> Vec<usize> {
        let mut cols: Vec<usize> = self.entries.iter().flat_map(|&(r, c, _)| [r, c]).collect();
        cols.sort_unstable();
        cols.dedup();
        cols
    }
}

/// Accumulates symmetric contributions: `add(r, c, v)` adds `v` at both
/// `(r, c)` and `(c, r)` (once on the diagonal).
#[derive(Clone, Debug)]
pub struct SymmetricBuilder {
    dim: usize,
    map: BTreeMap<(usize, usize), f64>,
}

impl SymmetricBuilder {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            map: BTreeMap::new(),
        }
    }

    pub fn add(&mut self, r: usize, c: usize, v: f64) {
        assert!(r < self.dim && c < self.dim, "entry ({r},{c}) outside dimension {}", self.dim);
        if v != 0.0 {
            *self.map.entry((r.min(c), r.max(c))).or_insert(0.0) += v;
        }
    }

    /// Adds the real embedding of complex Hermitian-matrix entry `z` at
    /// `(r, c)` together with its mirror `conj(z)` at `(c, r)`, for a complex
    /// matrix of dimension `n` embedded as `[[A, -B], [B, A]]`.
    pub fn add_complex(&mut self, n: usize, r: usize, c: usize, z: C64) {
        self.add(r, c, z.re);
        self.add(r + n, c + n, z.re);
        if r != c && z.im != 0.0 {
            self.add(c, r + n, z.im);
            self.add(r, c + n, -z.im);
        }
    }

    /// Places a Hermitian block `h * scale` at complex offset `(row, col)` of
    /// an `n`-dimensional Hermitian matrix. Off-diagonal placements (`row !=
    /// col`) also fill the mirrored block with `h^dagger`.
    pub fn add_hermitian_block(&mut self, n: usize, row: usize, col: usize, h: &ComplexMatrix, scale: f64) {
        let d = h.rows();
        for r in 0..d {
            let start = if row == col { r } else { 0 };
            for c in start..h.cols() {
                let z = h[(r, c)] * scale;
                if z != C64::new(0.0, 0.0) {
                    self.add_complex(n, row + r, col + c, z);
                }
            }
        }
    }

    pub fn build(self) -> SparseSymmetric {
        SparseSymmetric {
            dim: self.dim,
            entries: self
                .map
                .into_iter()
                .filter(|&(_, v)| v != 0.0)
                .map(|((r, c), v)| (r, c, v))
                .collect(),
        }
    }
}

/// Real symmetric embedding `[[A, -B], [B, A]]` of `H = A + iB`.
///
/// The spectrum is that of `H` with doubled multiplicity, and
/// `<embed(G), embed(H)> = 2 Re tr[G H]`.
pub fn embed_hermitian(h: &HermitianOperator) -> RealMatrix {
    let n = h.dim();
    RealMatrix::from_fn(2 * n, 2 * n, |r, c| {
        let z = h[(r % n, c % n)];
        match (r < n, c < n) {
            (true, true) | (false, false) => z.re,
            (false, true) => z.im,
            (true, false) => -z.im,
        }
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SdpProblem {
    block_dims: Vec<usize>,
    c: SparseSymmetric,
    a: Vec<SparseSymmetric>,
    b: Vec<f64>,
}

impl SdpProblem {
    /// Checks dimensions, block-diagonal structure and linear independence of
    /// the constraint matrices.
    pub fn new(
        block_dims: Vec<usize>,
        c: SparseSymmetric,
        constraints: Vec<(SparseSymmetric, f64)>,
    ) -> Result<Self> {
        let n: usize = block_dims.iter().sum();
        if n == 0 {
            return Err(Error::Dimension("empty SDP".into()));
        }
        let mut block_of = Vec::with_capacity(n);
        for (k, &d) in block_dims.iter().enumerate() {
            block_of.extend(core::iter::repeat(k).take(d));
        }
        let (a, b): (Vec<_>, Vec<_>) = constraints.into_iter().unzip();
        for (name, m) in core::iter::once(("C", &c)).chain(a.iter().map(|m| ("A", m))) {
            if m.dim != n {
                return Err(Error::Dimension(format!(
                    "{name} has dimension {}, blocks total {n}",
                    m.dim
                )));
            }
            if let Some(&(r, col, _)) = m.entries.iter().find(|&&(r, col, _)| block_of[r] != block_of[col]) {
                return Err(Error::validation(
                    "block structure",
                    format!("{name} has an entry at ({r},{col}) outside the diagonal blocks"),
                ));
            }
        }
        if let Some(k) = b.iter().position(|v| !v.is_finite()) {
            return Err(Error::validation("finiteness", format!("b[{k}] is not finite")));
        }
        let m = a.len();
        if m > 0 {
            let gram = RealMatrix::from_fn(m, m, |i, j| a[i].dot_sparse(&a[j]));
            let ev = gram.symmetric_eigenvalues();
            let (lo, hi) = (ev[0], ev[m - 1]);
            if !(lo > 0.0) || hi / lo > GRAM_COND_LIMIT {
                return Err(Error::validation(
                    "linear independence",
                    format!("constraint Gram matrix has eigenvalues in [{lo:e}, {hi:e}]"),
                ));
            }
        }
        Ok(Self { block_dims, c, a, b })
    }

    pub fn dim(&self) -> usize {
        self.c.dim
    }

    pub fn block_dims(&self) -> &[usize] {
        &self.block_dims
    }

    pub fn n_constraints(&self) -> usize {
        self.a.len()
    }

    pub fn objective(&self) -> &SparseSymmetric {
        &self.c
    }

    pub fn constraint(&self, i: usize) -> (&SparseSymmetric, f64) {
        (&self.a[i], self.b[i])
    }

    fn apply(&self, x: &RealMatrix) -> Vec<f64> {
        self.a.iter().map(|a| a.dot(x)).collect()
    }

    fn adjoint(&self, y: &[f64]) -> RealMatrix {
        let n = self.dim();
        let mut m = RealMatrix::zeros(n, n);
        for (a, &yi) in self.a.iter().zip(y) {
            if yi != 0.0 {
                a.add_to(&mut m, yi);
            }
        }
        m
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveOptions {
    pub max_iter: usize,
    pub tol: f64,
    /// Record one [`IterationRecord`] per iteration.
    pub trace: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            max_iter: 200,
            tol: 1e-8,
            trace: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SdpStatus {
    Optimal,
    MaxIter,
    Infeasible,
}

impl SdpStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SdpStatus::Optimal => "optimal",
            SdpStatus::MaxIter => "max_iter",
            SdpStatus::Infeasible => "infeasible",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub primal_obj: f64,
    pub dual_obj: f64,
    pub gap: f64,
    pub primal_infeasibility: f64,
    pub dual_infeasibility: f64,
    pub mu: f64,
    pub step_primal: f64,
    pub step_dual: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SdpSolution {
    pub x: RealMatrix,
    pub y: Vec<f64>,
    pub s: RealMatrix,
    pub primal_obj: f64,
    pub dual_obj: f64,
    /// `|primal - dual| / (1 + |primal|)`.
    pub gap: f64,
    pub primal_infeasibility: f64,
    pub dual_infeasibility: f64,
    pub status: SdpStatus,
    pub iterations: usize,
    pub trace: Vec<IterationRecord>,
}

struct Iterate {
    x: RealMatrix,
    y: Vec<f64>,
    s: RealMatrix,
}

struct Residuals {
    rp: Vec<f64>,
    rd: RealMatrix,
    pobj: f64,
    dobj: f64,
    gap: f64,
    pinf: f64,
    dinf: f64,
    mu: f64,
}

#[derive(Clone, Copy)]
struct Summary {
    pobj: f64,
    dobj: f64,
    gap: f64,
    pinf: f64,
    dinf: f64,
}

impl Residuals {
    fn summary(&self) -> Summary {
        Summary {
            pobj: self.pobj,
            dobj: self.dobj,
            gap: self.gap,
            pinf: self.pinf,
            dinf: self.dinf,
        }
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn residuals(p: &SdpProblem, it: &Iterate, b_norm: f64, c_norm: f64) -> Residuals {
    let ax = p.apply(&it.x);
    let rp: Vec<f64> = p.b.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let mut rd = p.c.to_dense();
    rd.add_scaled(-1.0, &it.s);
    rd.add_scaled(-1.0, &p.adjoint(&it.y));
    let pobj = p.c.dot(&it.x);
    let dobj: f64 = p.b.iter().zip(&it.y).map(|(b, y)| b * y).sum();
    Residuals {
        pinf: norm(&rp) / (1.0 + b_norm),
        dinf: rd.frobenius() / (1.0 + c_norm),
        gap: (pobj - dobj).abs() / (1.0 + pobj.abs()),
        mu: it.x.dot(&it.s) / p.dim() as f64,
        rp,
        rd,
        pobj,
        dobj,
    }
}

/// Largest step `alpha` keeping `X + alpha dX` PSD, given `X = L L^T`.
fn max_step(chol: &crate::linalg::Cholesky, dx: &RealMatrix) -> f64 {
    let ev = chol.congruence(dx).symmetric_eigenvalues();
    let lo = ev[0];
    if lo >= 0.0 {
        f64::INFINITY
    } else {
        -1.0 / lo
    }
}

/// `M_ij = tr(A_i X A_j S^{-1})`, symmetric positive definite.
fn schur_complement(p: &SdpProblem, x: &RealMatrix, sinv: &RealMatrix) -> RealMatrix {
    let n = p.dim();
    let m = p.n_constraints();
    let mut schur = RealMatrix::zeros(m, m);
    for j in 0..m {
        let aj = &p.a[j];
        // G = (X A_j) S^{-1}; X A_j is nonzero only in the touched columns.
        let cols = aj.touched();
        let mut xa = RealMatrix::zeros(n, cols.len());
        let pos = |c: usize| cols.binary_search(&c).unwrap();
        for &(r, c, v) in aj.entries() {
            let (pc, pr) = (pos(c), pos(r));
            for k in 0..n {
                xa[(k, pc)] += v * x[(k, r)];
                if r != c {
                    xa[(k, pr)] += v * x[(k, c)];
                }
            }
        }
        let mut g = RealMatrix::zeros(n, n);
        {
            let gs = g.as_mut_slice();
            for (q, &c) in cols.iter().enumerate() {
                let srow = sinv.row(c);
                for k in 0..n {
                    let w = xa[(k, q)];
                    if w == 0.0 {
                        continue;
                    }
                    let dst = &mut gs[k * n..(k + 1) * n];
                    for (d, &s) in dst.iter_mut().zip(srow) {
                        *d += w * s;
                    }
                }
            }
        }
        for i in 0..=j {
            let v = p.a[i].dot(&g);
            schur[(i, j)] = v;
            schur[(j, i)] = v;
        }
    }
    schur
}

fn solve_schur(schur: &RealMatrix, rhs: &[f64]) -> Option<Vec<f64>> {
    if let Some(ch) = schur.cholesky() {
        return Some(ch.solve(rhs));
    }
    let m = schur.rows();
    let diag_max = (0..m).map(|i| schur[(i, i)].abs()).fold(0.0, f64::max);
    let mut reg = schur.clone();
    for i in 0..m {
        reg[(i, i)] += 1e-13 * diag_max.max(1e-300);
    }
    reg.cholesky().map(|ch| ch.solve(rhs))
}

pub fn solve(p: &SdpProblem, opts: &SolveOptions) -> SdpSolution {
    let n = p.dim();
    let m = p.n_constraints();
    let b_norm = norm(&p.b);
    let c_norm = p.c.frobenius();
    let tau = 1.0 + p.b.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let mut it = Iterate {
        x: RealMatrix::identity(n).scaled(tau),
        y: vec![0.0; m],
        s: RealMatrix::identity(n).scaled(tau),
    };
    let mut trace = Vec::new();
    let mut best: Option<(f64, Iterate, Summary)> = None;
    let mut stall = 0;
    let mut status = SdpStatus::MaxIter;
    let mut iterations = 0;

    for iter in 0..opts.max_iter {
        iterations = iter;
        let res = residuals(p, &it, b_norm, c_norm);
        let merit = res.pinf.max(res.dinf).max(res.gap);
        if !merit.is_finite() {
            break;
        }
        let converged = res.pinf <= opts.tol && res.dinf <= opts.tol && res.gap <= opts.tol;
        let ray = res.dobj > RAY_THRESHOLD * (1.0 + c_norm) || -res.pobj > RAY_THRESHOLD * (1.0 + b_norm);
        if converged || ray || best.as_ref().map_or(true, |(bm, _, _)| merit < *bm) {
            best = Some((merit, clone_iterate(&it), res.summary()));
            stall = 0;
        } else {
            stall += 1;
        }
        if converged {
            status = SdpStatus::Optimal;
            break;
        }
        if ray {
            status = SdpStatus::Infeasible;
            break;
        }
        if stall >= STALL_LIMIT {
            break;
        }

        let (Some(xc), Some(sc)) = (it.x.cholesky(), it.s.cholesky()) else {
            break;
        };
        let sinv = sc.inverse();
        let schur = schur_complement(p, &it.x, &sinv);
        // A(X Rd S^{-1}) is shared by predictor and corrector.
        let x_rd_sinv = it.x.matmul(&res.rd).matmul(&sinv);
        let a_xrds = p.apply(&x_rd_sinv);

        let direction = |r_prime: &RealMatrix| -> Option<(RealMatrix, Vec<f64>, RealMatrix)> {
            let a_r = p.apply(r_prime);
            let rhs: Vec<f64> = (0..m).map(|i| res.rp[i] - a_r[i] + a_xrds[i]).collect();
            let dy = solve_schur(&schur, &rhs)?;
            let mut ds = res.rd.clone();
            ds.add_scaled(-1.0, &p.adjoint(&dy));
            let mut dx = r_prime.sub(&it.x.matmul(&ds).matmul(&sinv));
            dx.symmetrize();
            Some((dx, dy, ds))
        };

        // predictor
        let Some((dxa, _, dsa)) = direction(&it.x.scaled(-1.0)) else {
            break;
        };
        let ap = (STEP_FRACTION * max_step(&xc, &dxa)).min(1.0);
        let ad = (STEP_FRACTION * max_step(&sc, &dsa)).min(1.0);
        let mut xa = it.x.clone();
        xa.add_scaled(ap, &dxa);
        let mut sa = it.s.clone();
        sa.add_scaled(ad, &dsa);
        let mu_aff = xa.dot(&sa) / n as f64;
        let sigma = (mu_aff / res.mu).max(0.0).powi(3).min(1.0);

        // corrector
        let mut r_prime = sinv.scaled(sigma * res.mu);
        r_prime.add_scaled(-1.0, &it.x);
        r_prime.add_scaled(-1.0, &dxa.matmul(&dsa).matmul(&sinv));
        let Some((dx, dy, ds)) = direction(&r_prime) else {
            break;
        };
        let ap = (STEP_FRACTION * max_step(&xc, &dx)).min(1.0);
        let ad = (STEP_FRACTION * max_step(&sc, &ds)).min(1.0);
        it.x.add_scaled(ap, &dx);
        it.x.symmetrize();
        for (y, d) in it.y.iter_mut().zip(&dy) {
            *y += ad * d;
        }
        it.s.add_scaled(ad, &ds);
        it.s.symmetrize();

        if opts.trace {
            trace.push(IterationRecord {
                iteration: iter,
                primal_obj: res.pobj,
                dual_obj: res.dobj,
                gap: res.gap,
                primal_infeasibility: res.pinf,
                dual_infeasibility: res.dinf,
                mu: res.mu,
                step_primal: ap,
                step_dual: ad,
            });
        }
        iterations = iter + 1;
    }

    let (it, res) = match best {
        Some((_, it, res)) => (it, res),
        None => {
            let res = residuals(p, &it, b_norm, c_norm).summary();
            (it, res)
        }
    };
    SdpSolution {
        primal_obj: res.pobj,
        dual_obj: res.dobj,
        gap: res.gap,
        primal_infeasibility: res.pinf,
        dual_infeasibility: res.dinf,
        x: it.x,
        y: it.y,
        s: it.s,
        status,
        iterations,
        trace,
    }
}

fn clone_iterate(it: &Iterate) -> Iterate {
    Iterate {
        x: it.x.clone(),
        y: it.y.clone(),
        s: it.s.clone(),
    }
}
