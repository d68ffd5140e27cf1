//! HSS compression of the Cauchy-like matrix with interpolative nested
//! bases built from one-sided fADI factors.
//!
//! For a vertex `v` with sibling `s`, the off-diagonal block is
//! `C(J_v, J_s) ~ U_v B_v V_s^*` where `B_v = C(rowskel_v, colskel_s)`.
//! Leaves store `U_v`, `V_v` explicitly; parents store transfer matrices
//! `R_v`, `W_v` with `U_v = blkdiag(U_c1, U_c2) R_v`.

use rayon::prelude::*;
use serde::Serialize;

use crate::dense::{cpqr, fro, qr, select_rows, solve_upper_in_place, Mat, C64, ONE, ZERO};
use crate::error::{Error, Result};
use crate::fadi::{fadi_col_factor, fadi_row_factor};
use crate::hierarchy::{ClusterTree, CyclicRange};
use crate::hodlr::{level_tolerance, BaseMatrix};
use crate::spectral::CauchyLikeOperator;
use crate::zolotarev::{clamp_eps, fadi_iteration_count, hss_rank_bound, zolotarev_shifts};

/// Dense expansion guard for [`HssMatrix::to_dense`].
pub const HSS_DENSE_GUARD: usize = 4096;

const BASIS_TOL: f64 = 1e-14;
const SELECT_TOL: f64 = 1e-12;

/// An HSS row `C(J_v, J_v^c)`; the matching HSS column is `C(J_v^c, J_v)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HssRowView {
    pub vertex: usize,
    pub rows: CyclicRange,
    pub cols: CyclicRange,
}

impl HssRowView {
    pub fn new(tree: &ClusterTree, v: usize) -> Self {
        let rows = tree.range(v);
        Self {
            vertex: v,
            rows,
            cols: rows.complement(tree.n()),
        }
    }

    pub fn dense(&self, cop: &CauchyLikeOperator) -> Mat {
        let n = cop.n();
        cop.block(&self.rows.indices(n), &self.cols.indices(n))
    }

    pub fn dense_column(&self, cop: &CauchyLikeOperator) -> Mat {
        let n = cop.n();
        cop.block(&self.cols.indices(n), &self.rows.indices(n))
    }
}

/// Row interpolative decomposition `A ~ coef A(skel, :)`, with
/// `coef(skel, :) = I`.
#[derive(Debug, Clone)]
pub struct RowInterpolation {
    pub coef: Mat,
    /// Local row positions, ascending.
    pub skel: Vec<usize>,
}

impl RowInterpolation {
    fn empty(rows: usize) -> Self {
        Self {
            coef: Mat::zeros(rows, 0),
            skel: Vec::new(),
        }
    }

    pub fn rank(&self) -> usize {
        self.skel.len()
    }
}

/// Row ID of the column space of `z`: orthonormalize the column-equilibrated
/// `z` (rank revealing),
/// then pick rows of the basis by CPQR of its adjoint.
pub fn interpolative_rows(z: &Mat, max_rank: usize) -> RowInterpolation {
    let rows = z.nrows();
    if rows == 0 || z.ncols() == 0 || max_rank == 0 {
        return RowInterpolation::empty(rows);
    }
    // unit columns: fADI factor columns vary wildly in scale, and a small
    // column may still pair with a large one on the other side
    let mut z = z.clone();
    for mut c in z.column_iter_mut() {
        let nrm = c.norm();
        if nrm > 0.0 {
            c /= C64::new(nrm, 0.0);
        }
    }
    let basis = cpqr(&z, max_rank, BASIS_TOL);
    if basis.rank == 0 {
        return RowInterpolation::empty(rows);
    }
    let q = basis.q_thin(basis.rank);
    let sel = cpqr(&q.adjoint(), basis.rank, SELECT_TOL);
    let p = sel.rank;
    if p < basis.rank {
        log::debug!("interpolation rank reduced from {} to {p}", basis.rank);
    }
    let r11 = sel.r.columns(0, p).into_owned();
    let mut t = sel.r.columns(p, rows - p).into_owned();
    solve_upper_in_place(&r11, &mut t);
    // columns ordered by ascending row index
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by_key(|&i| sel.perm[i]);
    let mut coef = Mat::zeros(rows, p);
    for (c, &i) in order.iter().enumerate() {
        coef[(sel.perm[i], c)] = ONE;
        for j in 0..rows - p {
            coef[(sel.perm[p + j], c)] = t[(i, j)].conj();
        }
    }
    RowInterpolation {
        coef,
        skel: order.iter().map(|&i| sel.perm[i]).collect(),
    }
}

#[derive(Debug, Clone)]
pub struct HssVertex {
    /// Leaves: `U_v`; parents: transfer `R_v`.
    pub u: Mat,
    /// Leaves: `V_v`; parents: transfer `W_v`.
    pub v: Mat,
    /// Global row skeleton, ascending.
    pub row_skel: Vec<usize>,
    /// Global column skeleton, ascending.
    pub col_skel: Vec<usize>,
    /// `B_{v, sibling}` (`0 x 0` at the root).
    pub b: Mat,
    pub iterations: usize,
    pub accelerated: bool,
}

impl HssVertex {
    fn root() -> Self {
        Self {
            u: Mat::zeros(0, 0),
            v: Mat::zeros(0, 0),
            row_skel: Vec::new(),
            col_skel: Vec::new(),
            b: Mat::zeros(0, 0),
            iterations: 0,
            accelerated: false,
        }
    }

    pub fn row_rank(&self) -> usize {
        self.u.ncols()
    }

    pub fn col_rank(&self) -> usize {
        self.v.ncols()
    }
}

#[derive(Debug, Clone)]
pub struct HssMatrix {
    pub tree: ClusterTree,
    pub eps: f64,
    pub rho: usize,
    /// Rank cap `hss_rank_bound(rho, n, eps)`.
    pub bound: usize,
    /// `false` once the bases have been orthogonalized.
    pub interpolative: bool,
    pub vertices: Vec<HssVertex>,
    /// Dense diagonal blocks, one per leaf, left to right.
    pub diag: Vec<Mat>,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct VertexStats {
    pub vertex: usize,
    pub level: usize,
    pub size: usize,
    pub row_rank: usize,
    pub col_rank: usize,
    pub bound: usize,
    pub iterations: usize,
    pub accelerated: bool,
}

/// Generators restricted to the columns whose rank-one term is not
/// identically zero.
struct Generators {
    n: usize,
    nodes: Vec<C64>,
    g: Mat,
    h: Mat,
    eps_v: f64,
    cap: usize,
}

fn active_columns(g: &Mat, h: &Mat) -> Vec<usize> {
    let nonzero = |a: &Mat, r: usize| a.column(r).iter().any(|z| *z != ZERO);
    (0..g.ncols()).filter(|&r| nonzero(g, r) && nonzero(h, r)).collect()
}

fn select_columns(a: &Mat, cols: &[usize]) -> Mat {
    Mat::from_fn(a.nrows(), cols.len(), |i, j| a[(i, cols[j])])
}

impl Generators {
    fn new(cop: &CauchyLikeOperator, eps_v: f64, cap: usize) -> Self {
        let active = active_columns(&cop.gt, &cop.ht);
        Self {
            n: cop.n(),
            nodes: cop.ctx.nodes(),
            g: select_columns(&cop.gt, &active),
            h: select_columns(&cop.ht, &active),
            eps_v,
            cap,
        }
    }

    fn iterations(&self, range: CyclicRange) -> Result<usize> {
        fadi_iteration_count(range.len, self.eps_v)
    }

    /// One-sided fADI row factor of `C(cand, J_v^c)` with shifts for the
    /// HSS row of `range`.
    fn row_factor(&self, range: CyclicRange, cand: &[usize], k: usize) -> Result<Mat> {
        if self.g.ncols() == 0 {
            return Ok(Mat::zeros(cand.len(), 0));
        }
        let shifts = zolotarev_shifts(self.n, range, range.complement(self.n), 1, k)?;
        let dj: Vec<C64> = cand.iter().map(|&i| self.nodes[i]).collect();
        fadi_row_factor(&dj, &select_rows(&self.g, cand), &shifts)
    }

    /// One-sided fADI column factor of `C(J_v^c, cand)`.
    fn col_factor(&self, range: CyclicRange, cand: &[usize], k: usize) -> Result<Mat> {
        if self.h.ncols() == 0 {
            return Ok(Mat::zeros(cand.len(), 0));
        }
        let shifts = zolotarev_shifts(self.n, range.complement(self.n), range, 1, k)?;
        let dk: Vec<C64> = cand.iter().map(|&i| self.nodes[i]).collect();
        fadi_col_factor(&dk, &select_rows(&self.h, cand), &shifts)
    }

    fn interpolate(&self, z: &Mat, cand: &[usize]) -> (Mat, Vec<usize>) {
        let id = interpolative_rows(z, self.cap);
        let skel = id.skel.iter().map(|&i| cand[i]).collect();
        (id.coef, skel)
    }
}

/// Row ID of the HSS row of leaf `v`: `C(J_v, :) ~ U_v C(rowskel_v, :)`.
pub fn leaf_row_id(cop: &CauchyLikeOperator, tree: &ClusterTree, v: usize, k: usize) -> Result<(Mat, Vec<usize>)> {
    let gens = Generators::new(cop, 0.5, usize::MAX);
    let range = tree.range(v);
    let cand = range.indices(cop.n());
    let z = gens.row_factor(range, &cand, k.max(1))?;
    Ok(gens.interpolate(&z, &cand))
}

/// Column ID of the HSS column of leaf `v`: `C(:, J_v) ~ C(:, colskel_v) V_v^*`.
pub fn leaf_col_id(cop: &CauchyLikeOperator, tree: &ClusterTree, v: usize, k: usize) -> Result<(Mat, Vec<usize>)> {
    let gens = Generators::new(cop, 0.5, usize::MAX);
    let range = tree.range(v);
    let cand = range.indices(cop.n());
    let w = gens.col_factor(range, &cand, k.max(1))?;
    Ok(gens.interpolate(&w, &cand))
}

/// Which side of the HSS block a merge compresses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Row,
    Col,
}

/// Merge step for parent `v`: an ID of `C(cand, J_v^c)` (or its column
/// analogue) over the children's skeletons `cand`, returning the transfer
/// matrix and the promoted skeleton.
pub fn merge_level(
    cop: &CauchyLikeOperator,
    tree: &ClusterTree,
    v: usize,
    cand: &[usize],
    k: usize,
    side: Side,
) -> Result<(Mat, Vec<usize>)> {
    let gens = Generators::new(cop, 0.5, usize::MAX);
    merge_with(&gens, tree, v, cand, k, side)
}

fn merge_with(
    gens: &Generators,
    tree: &ClusterTree,
    v: usize,
    cand: &[usize],
    k: usize,
    side: Side,
) -> Result<(Mat, Vec<usize>)> {
    let range = tree.range(v);
    let z = match side {
        Side::Row => gens.row_factor(range, cand, k)?,
        Side::Col => gens.col_factor(range, cand, k)?,
    };
    Ok(gens.interpolate(&z, cand))
}

/// Leaf bases from a single fADI on the base matrix, shared by all leaves.
struct LeafAccelerator {
    /// Column basis factor of `B(J_0, J_0^c)`.
    zc: Mat,
    ghat: Mat,
    hhat: Mat,
}

impl LeafAccelerator {
    fn new(cop: &CauchyLikeOperator, tree: &ClusterTree, gens: &Generators, k: usize) -> Result<Self> {
        let base = BaseMatrix::new(cop);
        let active = active_columns(&cop.gt, &cop.ht);
        let first = tree.range(tree.leaves().start);
        let n = cop.n();
        let shifts = zolotarev_shifts(n, first, first.complement(n), 1, k)?;
        let f = Mat::from_fn(first.len, 1, |i, _| base.f[first.at(i, n)]);
        let dj: Vec<C64> = first.indices(n).into_iter().map(|i| gens.nodes[i]).collect();
        Ok(Self {
            zc: fadi_row_factor(&dj, &f, &shifts)?,
            ghat: select_columns(&base.ghat, &active),
            hhat: select_columns(&base.hhat, &active),
        })
    }

    /// `[diag(a_r(J_v)) Zc]_r`: the leaf row (with `ghat`) or column (with
    /// `hhat`) factor. Shifting a leaf only permutes and flips the signs of
    /// the complement side of the base matrix, so `Zc` serves every leaf.
    fn factor(&self, a: &Mat, range: CyclicRange) -> Mat {
        let w = self.zc.ncols();
        Mat::from_fn(range.len, w * a.ncols(), |i, c| a[(range.start + i, c / w)] * self.zc[(i, c % w)])
    }
}

/// Columns used to check an accelerated leaf ID: the nearest neighbours on
/// both sides plus a spread over the complement.
fn probe_indices(range: CyclicRange, n: usize) -> Vec<usize> {
    let comp = range.complement(n);
    let mut idx = Vec::new();
    for d in 0..4.min(comp.len) {
        idx.push(comp.at(d, n));
        idx.push(comp.at(comp.len - 1 - d, n));
    }
    let spread = 8.min(comp.len);
    for s in 0..spread {
        idx.push(comp.at(s * comp.len / spread, n));
    }
    idx.sort_unstable();
    idx.dedup();
    idx
}

fn interpolation_ok(sample: &Mat, coef: &Mat, skel_local: &[usize], tol: f64) -> bool {
    let approx = coef * select_rows(sample, skel_local);
    let scale = fro(sample);
    fro(&(sample - approx)) <= tol * (1.0 + fro(coef)) * scale.max(f64::MIN_POSITIVE)
}

struct LeafResult {
    u: Mat,
    row_skel: Vec<usize>,
    v: Mat,
    col_skel: Vec<usize>,
    k: usize,
    accelerated: bool,
}

fn compress_leaf(
    cop: &CauchyLikeOperator,
    gens: &Generators,
    accel: Option<&LeafAccelerator>,
    range: CyclicRange,
) -> Result<LeafResult> {
    let n = gens.n;
    let k = gens.iterations(range)?;
    let cand = range.indices(n);
    if let Some(acc) = accel {
        let (u, row_skel) = gens.interpolate(&acc.factor(&acc.ghat, range), &cand);
        let (v, col_skel) = gens.interpolate(&acc.factor(&acc.hhat, range), &cand);
        let probes = probe_indices(range, n);
        let tol = 10.0 * gens.eps_v;
        let local = |skel: &[usize]| skel.iter().map(|&j| (j + n - range.start) % n).collect::<Vec<_>>();
        let rows_ok = interpolation_ok(&cop.block(&cand, &probes), &u, &local(&row_skel), tol);
        let cols_ok = interpolation_ok(&cop.block(&probes, &cand).adjoint(), &v, &local(&col_skel), tol);
        if rows_ok && cols_ok {
            return Ok(LeafResult { u, row_skel, v, col_skel, k, accelerated: true });
        }
        log::debug!("leaf {range:?}: accelerated basis failed its residual check, recomputing");
    }
    let (u, row_skel) = gens.interpolate(&gens.row_factor(range, &cand, k)?, &cand);
    let (v, col_skel) = gens.interpolate(&gens.col_factor(range, &cand, k)?, &cand);
    Ok(LeafResult { u, row_skel, v, col_skel, k, accelerated: false })
}

/// HSS compression at tolerance `eps`; every vertex uses `k` fADI steps
/// at `eps / log2 n` and a rank cap of `hss_rank_bound(rho, n, eps)`.
pub fn hss_compress(
    cop: &CauchyLikeOperator,
    tree: &ClusterTree,
    eps: f64,
    accelerate_leaves: bool,
) -> Result<HssMatrix> {
    let n = cop.n();
    if tree.n() != n {
        return Err(Error::InvalidSize(format!("tree over {} indices for an operator of order {n}", tree.n())));
    }
    let eps = clamp_eps(eps)?;
    let rho = cop.rho();
    let bound = hss_rank_bound(rho, n, eps)?;
    let gens = Generators::new(cop, level_tolerance(eps, n), bound);
    let leaf_k = gens.iterations(tree.range(tree.leaves().start))?;
    let accel = if accelerate_leaves && gens.g.ncols() > 0 {
        Some(LeafAccelerator::new(cop, tree, &gens, leaf_k)?)
    } else {
        None
    };

    let mut vertices: Vec<HssVertex> = (0..tree.num_vertices()).map(|_| HssVertex::root()).collect();
    let leaves: Vec<usize> = tree.leaves().collect();
    let leaf_out: Vec<Result<(LeafResult, Mat)>> = leaves
        .par_iter()
        .map(|&v| {
            let r = tree.range(v);
            let res = compress_leaf(cop, &gens, accel.as_ref(), r)?;
            Ok((res, cop.block_range(r.start, r.len, r.start, r.len)))
        })
        .collect();
    let mut diag = Vec::with_capacity(leaves.len());
    for (&v, out) in leaves.iter().zip(leaf_out) {
        let (res, d) = out?;
        let node = &mut vertices[v];
        node.u = res.u;
        node.v = res.v;
        node.row_skel = res.row_skel;
        node.col_skel = res.col_skel;
        node.iterations = res.k;
        node.accelerated = res.accelerated;
        diag.push(d);
    }

    for level in (1..tree.depth()).rev() {
        let merged: Vec<Result<(usize, HssVertex)>> = tree
            .level_vertices(level)
            .collect::<Vec<_>>()
            .par_iter()
            .map(|&v| {
                let (c1, c2) = tree.children(v).unwrap();
                let k = gens.iterations(tree.range(v))?;
                let rows: Vec<usize> = [&vertices[c1].row_skel[..], &vertices[c2].row_skel[..]].concat();
                let cols: Vec<usize> = [&vertices[c1].col_skel[..], &vertices[c2].col_skel[..]].concat();
                let (u, row_skel) = merge_with(&gens, tree, v, &rows, k, Side::Row)?;
                let (w, col_skel) = merge_with(&gens, tree, v, &cols, k, Side::Col)?;
                Ok((
                    v,
                    HssVertex {
                        u,
                        v: w,
                        row_skel,
                        col_skel,
                        b: Mat::zeros(0, 0),
                        iterations: k,
                        accelerated: false,
                    },
                ))
            })
            .collect();
        for m in merged {
            let (v, node) = m?;
            vertices[v] = node;
        }
    }

    let blocks: Vec<Mat> = (1..tree.num_vertices())
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&v| {
            let s = tree.sibling(v).unwrap();
            cop.block(&vertices[v].row_skel, &vertices[s].col_skel)
        })
        .collect();
    for (v, b) in (1..tree.num_vertices()).zip(blocks) {
        vertices[v].b = b;
    }

    Ok(HssMatrix {
        tree: tree.clone(),
        eps,
        rho,
        bound,
        interpolative: true,
        vertices,
        diag,
    })
}

fn stack(a: &[C64], b: &[C64]) -> Vec<C64> {
    [a, b].concat()
}

fn mul_vec(a: &Mat, x: &[C64]) -> Vec<C64> {
    let mut y = vec![ZERO; a.nrows()];
    for (j, &xj) in x.iter().enumerate() {
        if xj == ZERO {
            continue;
        }
        for (i, yi) in y.iter_mut().enumerate() {
            *yi += a[(i, j)] * xj;
        }
    }
    y
}

fn mul_adj_vec(a: &Mat, x: &[C64]) -> Vec<C64> {
    (0..a.ncols())
        .map(|j| a.column(j).iter().zip(x).map(|(p, q)| p.conj() * q).sum())
        .collect()
}

impl HssMatrix {
    pub fn n(&self) -> usize {
        self.tree.n()
    }

    pub fn leaf_index(&self, v: usize) -> usize {
        v - self.tree.leaves().start
    }

    pub fn max_rank(&self) -> usize {
        self.vertices
            .iter()
            .map(|v| v.row_rank().max(v.col_rank()))
            .max()
            .unwrap_or(0)
    }

    pub fn stats(&self) -> Vec<VertexStats> {
        (1..self.tree.num_vertices())
            .map(|v| {
                let node = &self.vertices[v];
                VertexStats {
                    vertex: v,
                    level: self.tree.level(v),
                    size: self.tree.range(v).len,
                    row_rank: node.row_rank(),
                    col_rank: node.col_rank(),
                    bound: self.bound,
                    iterations: node.iterations,
                    accelerated: node.accelerated,
                }
            })
            .collect()
    }

    /// `y = C~ x` by an up-sweep over `V`/`W` and a down-sweep over `U`/`R`.
    pub fn matvec(&self, x: &[C64]) -> Result<Vec<C64>> {
        let n = self.n();
        if x.len() != n {
            return Err(Error::LengthMismatch { expected: n, got: x.len() });
        }
        let tree = &self.tree;
        let nv = tree.num_vertices();
        let mut xh: Vec<Vec<C64>> = vec![Vec::new(); nv];
        for v in tree.leaves() {
            let r = tree.range(v);
            xh[v] = mul_adj_vec(&self.vertices[v].v, &x[r.start..r.start + r.len]);
        }
        for level in (1..tree.depth()).rev() {
            for v in tree.level_vertices(level) {
                let (c1, c2) = tree.children(v).unwrap();
                xh[v] = mul_adj_vec(&self.vertices[v].v, &stack(&xh[c1], &xh[c2]));
            }
        }
        let mut yh: Vec<Vec<C64>> = vec![Vec::new(); nv];
        for v in 1..nv {
            let s = tree.sibling(v).unwrap();
            yh[v] = mul_vec(&self.vertices[v].b, &xh[s]);
        }
        for level in 1..tree.depth() {
            for v in tree.level_vertices(level) {
                let (c1, c2) = tree.children(v).unwrap();
                let down = mul_vec(&self.vertices[v].u, &yh[v]);
                let p1 = yh[c1].len();
                for (i, d) in down.into_iter().enumerate() {
                    if i < p1 {
                        yh[c1][i] += d;
                    } else {
                        yh[c2][i - p1] += d;
                    }
                }
            }
        }
        let mut y = vec![ZERO; n];
        for v in tree.leaves() {
            let r = tree.range(v);
            let local = &x[r.start..r.start + r.len];
            let d = mul_vec(&self.diag[self.leaf_index(v)], local);
            let u = mul_vec(&self.vertices[v].u, &yh[v]);
            for i in 0..r.len {
                y[r.start + i] = d[i] + u[i];
            }
        }
        Ok(y)
    }

    /// Expanded row bases `U_v` for every vertex (`None` at the root).
    pub fn row_bases(&self) -> Vec<Mat> {
        self.expand_bases(|node| &node.u)
    }

    pub fn col_bases(&self) -> Vec<Mat> {
        self.expand_bases(|node| &node.v)
    }

    fn expand_bases(&self, pick: impl Fn(&HssVertex) -> &Mat) -> Vec<Mat> {
        let tree = &self.tree;
        let mut out = vec![Mat::zeros(0, 0); tree.num_vertices()];
        for v in tree.leaves() {
            out[v] = pick(&self.vertices[v]).clone();
        }
        for level in (1..tree.depth()).rev() {
            for v in tree.level_vertices(level) {
                let (c1, c2) = tree.children(v).unwrap();
                out[v] = crate::dense::blkdiag(&out[c1], &out[c2]) * pick(&self.vertices[v]);
            }
        }
        out
    }

    /// Dense `C~`, for `n <= 4096`.
    pub fn to_dense(&self) -> Result<Mat> {
        let n = self.n();
        if n > HSS_DENSE_GUARD {
            return Err(Error::SizeGuard { n, guard: HSS_DENSE_GUARD });
        }
        let tree = &self.tree;
        let ub = self.row_bases();
        let vb = self.col_bases();
        let mut out = Mat::zeros(n, n);
        for v in tree.leaves() {
            let r = tree.range(v);
            out.view_mut((r.start, r.start), (r.len, r.len)).copy_from(&self.diag[self.leaf_index(v)]);
        }
        for v in 1..tree.num_vertices() {
            let s = tree.sibling(v).unwrap();
            let (r, c) = (tree.range(v), tree.range(s));
            let blk = &ub[v] * &self.vertices[v].b * vb[s].adjoint();
            out.view_mut((r.start, c.start), (r.len, c.len)).copy_from(&blk);
        }
        Ok(out)
    }

    /// Equivalent HSS matrix with orthonormal nested bases: each `U_v`
    /// (and `V_v`) is replaced by its `Q` factor and the triangular factor
    /// is pushed into the parent transfer matrix and into `B`.
    pub fn orthogonalize(&self) -> HssMatrix {
        let tree = &self.tree;
        let nv = tree.num_vertices();
        let mut out = self.clone();
        out.interpolative = false;
        let mut su = vec![Mat::zeros(0, 0); nv];
        let mut sv = vec![Mat::zeros(0, 0); nv];
        let thin = |a: &Mat| {
            let f = qr(a);
            let p = a.ncols();
            (f.q_thin(p), f.r.rows(0, p).into_owned())
        };
        for level in (1..=tree.depth()).rev() {
            let updates: Vec<(usize, Mat, Mat, Mat, Mat)> = tree
                .level_vertices(level)
                .collect::<Vec<_>>()
                .par_iter()
                .map(|&v| {
                    let node = &self.vertices[v];
                    let (u, w) = if tree.is_leaf(v) {
                        (node.u.clone(), node.v.clone())
                    } else {
                        let (c1, c2) = tree.children(v).unwrap();
                        (
                            crate::dense::blkdiag(&su[c1], &su[c2]) * &node.u,
                            crate::dense::blkdiag(&sv[c1], &sv[c2]) * &node.v,
                        )
                    };
                    let (qu, ru) = thin(&u);
                    let (qv, rv) = thin(&w);
                    (v, qu, ru, qv, rv)
                })
                .collect();
            for (v, qu, ru, qv, rv) in updates {
                out.vertices[v].u = qu;
                out.vertices[v].v = qv;
                su[v] = ru;
                sv[v] = rv;
            }
        }
        for v in 1..nv {
            let s = tree.sibling(v).unwrap();
            out.vertices[v].b = &su[v] * &self.vertices[v].b * sv[s].adjoint();
        }
        out
    }

    /// Rough `||C~||` scale: the largest Frobenius norm among the dense
    /// diagonal and coupling blocks.
    pub fn norm_estimate(&self) -> f64 {
        let d = self.diag.iter().map(fro).fold(0.0, f64::max);
        let b = self.vertices.iter().map(|v| fro(&v.b)).fold(0.0, f64::max);
        d.max(b)
    }
}

/// `y = C~ x`.
pub fn hss_matvec(h: &HssMatrix, x: &[C64]) -> Result<Vec<C64>> {
    h.matvec(x)
}

pub fn hss_to_dense(h: &HssMatrix) -> Result<Mat> {
    h.to_dense()
}
