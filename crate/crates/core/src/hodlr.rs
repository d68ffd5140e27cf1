//! HODLR compression of the Cauchy-like matrix.
//!
//! Off-diagonal blocks `C(J_v, J_sibling)` are compressed with fADI, either
//! one fADI per block or one fADI per tree level on the generator-free base
//! matrix followed by diagonal scalings.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::dense::{Mat, C64, ZERO};
use crate::error::{Error, Result};
use crate::fadi::{expand_coefficients, fadi_col_coefficients, fadi_row_coefficients};
use crate::hierarchy::{ClusterTree, CyclicRange};
use crate::spectral::CauchyLikeOperator;
use crate::zolotarev::{clamp_eps, epsilon_rank_bound, fadi_iteration_count, zolotarev_shifts};

/// Base matrix `B_{jk} = 1 / (2i sin(pi (j-k)/n))` (zero diagonal) with the
/// rescaled generators `G^ = diag(conj f) G~`, `H^ = diag(f) H~`,
/// `f_j = omega^j`, so that off the diagonal `C = B o (G^ H^^*)`.
#[derive(Debug, Clone)]
pub struct BaseMatrix {
    pub n: usize,
    pub f: Vec<C64>,
    pub ghat: Mat,
    pub hhat: Mat,
}

impl BaseMatrix {
    pub fn new(cop: &CauchyLikeOperator) -> Self {
        let n = cop.n();
        let f: Vec<C64> = (0..n).map(|j| cop.ctx.omega_pow(j as i64)).collect();
        let ghat = Mat::from_fn(n, cop.rho(), |j, r| f[j].conj() * cop.gt[(j, r)]);
        let hhat = Mat::from_fn(n, cop.rho(), |j, r| f[j] * cop.ht[(j, r)]);
        Self { n, f, ghat, hhat }
    }

    pub fn entry(&self, j: usize, k: usize) -> C64 {
        if j == k {
            return ZERO;
        }
        let d = j as f64 - k as f64;
        let s = (std::f64::consts::PI * d / self.n as f64).sin();
        C64::new(0.0, -0.5 / s)
    }

    pub fn dense(&self) -> Mat {
        Mat::from_fn(self.n, self.n, |j, k| self.entry(j, k))
    }
}

/// Factors of one off-diagonal block.
#[derive(Debug, Clone)]
pub enum BlockFactors {
    /// `Z W^*` with explicit factors.
    Explicit { z: Mat, w: Mat },
    /// `sum_r diag(G^(J, r)) Zc Wc^* diag(H^(K, r))^*` kept unevaluated; `Zc`
    /// and `Wc` are shared across a tree level.
    Implicit {
        zc: Arc<Mat>,
        wc: Arc<Mat>,
        active: Vec<usize>,
    },
}

#[derive(Debug, Clone)]
pub struct HodlrBlock {
    pub vertex: usize,
    pub rows: CyclicRange,
    pub cols: CyclicRange,
    pub factors: BlockFactors,
    pub iterations: usize,
    pub rank: usize,
    pub bound_rank: usize,
}

#[derive(Debug, Clone)]
pub struct HodlrMatrix {
    pub tree: ClusterTree,
    pub eps: f64,
    pub rho: usize,
    /// Off-diagonal blocks indexed by vertex (`None` for the root).
    pub blocks: Vec<Option<HodlrBlock>>,
    /// Dense diagonal blocks, one per leaf, left to right.
    pub leaves: Vec<Mat>,
    base: Option<Arc<BaseMatrix>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FastStorage {
    #[default]
    Evaluated,
    Implicit,
}

/// Per-level summary.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct LevelStats {
    pub level: usize,
    pub m: usize,
    pub sep: usize,
    pub iterations: usize,
    pub max_rank: usize,
    pub bound_rank: usize,
}

fn check_tree(cop: &CauchyLikeOperator, tree: &ClusterTree) -> Result<()> {
    if tree.n() != cop.n() {
        return Err(Error::InvalidSize(format!(
            "tree over {} indices for an operator of order {}",
            tree.n(),
            cop.n()
        )));
    }
    Ok(())
}

/// `eps / log2(n)`.
pub fn level_tolerance(eps: f64, n: usize) -> f64 {
    eps / (n as f64).log2()
}

fn leaf_blocks(cop: &CauchyLikeOperator, tree: &ClusterTree) -> Vec<Mat> {
    tree.leaves()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&v| {
            let r = tree.range(v);
            cop.block_range(r.start, r.len, r.start, r.len)
        })
        .collect()
}

fn rows_of(a: &Mat, r: CyclicRange) -> Mat {
    a.rows(r.start, r.len).into_owned()
}

/// Generator columns `r` whose term `g_r h_r^*` is not identically zero.
fn active_columns(gj: &Mat, hk: &Mat) -> Vec<usize> {
    let nonzero = |a: &Mat, r: usize| a.column(r).iter().any(|z| *z != ZERO);
    (0..gj.ncols()).filter(|&r| nonzero(gj, r) && nonzero(hk, r)).collect()
}

fn select_columns(a: &Mat, cols: &[usize]) -> Mat {
    Mat::from_fn(a.nrows(), cols.len(), |i, j| a[(i, cols[j])])
}

fn empty_factors(r: CyclicRange, c: CyclicRange) -> BlockFactors {
    BlockFactors::Explicit {
        z: Mat::zeros(r.len, 0),
        w: Mat::zeros(c.len, 0),
    }
}

/// One fADI per off-diagonal block with `eps_v = eps / log2 n`.
pub fn hodlr_compress(cop: &CauchyLikeOperator, tree: &ClusterTree, eps: f64) -> Result<HodlrMatrix> {
    check_tree(cop, tree)?;
    let eps = clamp_eps(eps)?;
    let n = cop.n();
    let eps_v = level_tolerance(eps, n);
    let rho = cop.rho();
    let nodes = cop.ctx.nodes();
    let blocks: Vec<Result<HodlrBlock>> = (1..tree.num_vertices())
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&v| {
            let rows = tree.range(v);
            let cols = tree.range(tree.sibling(v).unwrap());
            let m = rows.len;
            let k = fadi_iteration_count(m, eps_v)?;
            let bound_rank = epsilon_rank_bound(rho, cols.len, 1, eps_v)?;
            let active = active_columns(&rows_of(&cop.gt, rows), &rows_of(&cop.ht, cols));
            let gj = select_columns(&rows_of(&cop.gt, rows), &active);
            let hk = select_columns(&rows_of(&cop.ht, cols), &active);
            let factors = if active.is_empty() {
                empty_factors(rows, cols)
            } else {
                let shifts = zolotarev_shifts(n, rows, cols, 1, k)?;
                let c = fadi_row_coefficients(&nodes[rows.start..rows.start + m], &shifts)?;
                let e = fadi_col_coefficients(&nodes[cols.start..cols.start + cols.len], &shifts)?;
                BlockFactors::Explicit {
                    z: expand_coefficients(&c, &gj),
                    w: expand_coefficients(&e, &hk),
                }
            };
            let rank = factor_rank(&factors);
            Ok(HodlrBlock {
                vertex: v,
                rows,
                cols,
                factors,
                iterations: k,
                rank,
                bound_rank,
            })
        })
        .collect();
    let mut out = vec![None];
    for b in blocks {
        out.push(Some(b?));
    }
    Ok(HodlrMatrix {
        tree: tree.clone(),
        eps,
        rho,
        blocks: out,
        leaves: leaf_blocks(cop, tree),
        base: None,
    })
}

fn factor_rank(f: &BlockFactors) -> usize {
    match f {
        BlockFactors::Explicit { z, .. } => z.ncols(),
        BlockFactors::Implicit { zc, active, .. } => zc.ncols() * active.len(),
    }
}

/// One fADI per level on the base matrix, reused for every block of the
/// level through diagonal scalings.
pub fn hodlr_compress_fast(cop: &CauchyLikeOperator, tree: &ClusterTree, eps: f64) -> Result<HodlrMatrix> {
    hodlr_compress_fast_with(cop, tree, eps, FastStorage::Evaluated)
}

pub fn hodlr_compress_fast_with(
    cop: &CauchyLikeOperator,
    tree: &ClusterTree,
    eps: f64,
    storage: FastStorage,
) -> Result<HodlrMatrix> {
    check_tree(cop, tree)?;
    let eps = clamp_eps(eps)?;
    let n = cop.n();
    let eps_v = level_tolerance(eps, n);
    let rho = cop.rho();
    let base = Arc::new(BaseMatrix::new(cop));
    let nodes = cop.ctx.nodes();
    let mut blocks = vec![None; tree.num_vertices()];
    for level in 1..=tree.depth() {
        let first = tree.level_vertices(level).start;
        let rows = tree.range(first);
        let cols = tree.range(first + 1);
        let m = rows.len;
        let k = fadi_iteration_count(m, eps_v)?;
        let bound_rank = epsilon_rank_bound(rho, m, 1, eps_v)?;
        // D_J X - X D_K = f_J conj(f_K)^*
        let shifts = zolotarev_shifts(n, rows, cols, 1, k)?;
        let fj = Mat::from_fn(m, 1, |i, _| base.f[rows.start + i]);
        let fk = Mat::from_fn(m, 1, |i, _| base.f[cols.start + i].conj());
        let zc = expand_coefficients(&fadi_row_coefficients(&nodes[rows.start..rows.start + m], &shifts)?, &fj);
        let wc = expand_coefficients(&fadi_col_coefficients(&nodes[cols.start..cols.start + m], &shifts)?, &fk);
        let (zc, wc) = (Arc::new(zc), Arc::new(wc));
        let level_blocks: Vec<HodlrBlock> = tree
            .level_vertices(level)
            .collect::<Vec<_>>()
            .par_iter()
            .map(|&v| {
                let r = tree.range(v);
                let c = tree.range(tree.sibling(v).unwrap());
                // left children reuse the level block, right children its adjoint
                let (zl, wl) = if v % 2 == 1 {
                    (zc.clone(), wc.clone())
                } else {
                    (wc.clone(), zc.clone())
                };
                let gj = rows_of(&base.ghat, r);
                let hk = rows_of(&base.hhat, c);
                let active = active_columns(&gj, &hk);
                let factors = if active.is_empty() {
                    empty_factors(r, c)
                } else {
                    match storage {
                        FastStorage::Evaluated => BlockFactors::Explicit {
                            z: scale_blocks(&select_columns(&gj, &active), &zl),
                            w: scale_blocks(&select_columns(&hk, &active), &wl),
                        },
                        FastStorage::Implicit => BlockFactors::Implicit { zc: zl, wc: wl, active },
                    }
                };
                let rank = factor_rank(&factors);
                HodlrBlock {
                    vertex: v,
                    rows: r,
                    cols: c,
                    factors,
                    iterations: k,
                    rank,
                    bound_rank,
                }
            })
            .collect();
        for b in level_blocks {
            let v = b.vertex;
            blocks[v] = Some(b);
        }
    }
    Ok(HodlrMatrix {
        tree: tree.clone(),
        eps,
        rho,
        blocks,
        leaves: leaf_blocks(cop, tree),
        base: Some(base),
    })
}

/// `[diag(g_0) X, diag(g_1) X, ..]` for the generator columns `g_r`.
fn scale_blocks(g: &Mat, x: &Mat) -> Mat {
    let (m, k) = x.shape();
    let rho = g.ncols();
    Mat::from_fn(m, k * rho, |i, col| g[(i, col / k)] * x[(i, col % k)])
}

impl HodlrMatrix {
    pub fn n(&self) -> usize {
        self.tree.n()
    }

    pub fn max_rank(&self) -> usize {
        self.blocks.iter().flatten().map(|b| b.rank).max().unwrap_or(0)
    }

    /// `C~(J, K) x_K` for one block.
    fn apply_block(&self, b: &HodlrBlock, x: &[C64]) -> Vec<C64> {
        match &b.factors {
            BlockFactors::Explicit { z, w } => {
                let t = w.adjoint() * nalgebra::DVector::from_column_slice(x);
                (z * t).as_slice().to_vec()
            }
            BlockFactors::Implicit { zc, wc, active } => {
                let base = self.base.as_ref().expect("implicit blocks carry the base matrix");
                let mut y = vec![ZERO; b.rows.len];
                for &r in active {
                    let hx: Vec<C64> = (0..b.cols.len)
                        .map(|i| base.hhat[(b.cols.start + i, r)].conj() * x[i])
                        .collect();
                    let t = wc.adjoint() * nalgebra::DVector::from_vec(hx);
                    let u = zc.as_ref() * t;
                    for i in 0..b.rows.len {
                        y[i] += base.ghat[(b.rows.start + i, r)] * u[i];
                    }
                }
                y
            }
        }
    }

    /// `y = C~ x`.
    pub fn matvec(&self, x: &[C64]) -> Result<Vec<C64>> {
        let n = self.n();
        if x.len() != n {
            return Err(Error::LengthMismatch { expected: n, got: x.len() });
        }
        let mut y = vec![ZERO; n];
        for (leaf, v) in self.tree.leaves().enumerate() {
            let r = self.tree.range(v);
            let d = &self.leaves[leaf];
            let t = d * nalgebra::DVector::from_column_slice(&x[r.start..r.start + r.len]);
            for i in 0..r.len {
                y[r.start + i] += t[i];
            }
        }
        for b in self.blocks.iter().flatten() {
            let part = self.apply_block(b, &x[b.cols.start..b.cols.start + b.cols.len]);
            for (i, p) in part.into_iter().enumerate() {
                y[b.rows.start + i] += p;
            }
        }
        Ok(y)
    }

    /// Dense `C~` (reference use).
    pub fn to_dense(&self) -> Result<Mat> {
        let n = self.n();
        if n > crate::toeplitz::DEFAULT_DENSE_GUARD {
            return Err(Error::SizeGuard { n, guard: crate::toeplitz::DEFAULT_DENSE_GUARD });
        }
        let mut out = Mat::zeros(n, n);
        for (leaf, v) in self.tree.leaves().enumerate() {
            let r = self.tree.range(v);
            out.view_mut((r.start, r.start), (r.len, r.len)).copy_from(&self.leaves[leaf]);
        }
        for b in self.blocks.iter().flatten() {
            let blk = self.block_dense(b);
            out.view_mut((b.rows.start, b.cols.start), (b.rows.len, b.cols.len)).copy_from(&blk);
        }
        Ok(out)
    }

    /// Dense value of one stored block.
    pub fn block_dense(&self, b: &HodlrBlock) -> Mat {
        match &b.factors {
            BlockFactors::Explicit { z, w } => z * w.adjoint(),
            BlockFactors::Implicit { zc, wc, active } => {
                let base = self.base.as_ref().unwrap();
                let core = zc.as_ref() * wc.adjoint();
                Mat::from_fn(b.rows.len, b.cols.len, |i, j| {
                    let mut s = ZERO;
                    for &r in active {
                        s += base.ghat[(b.rows.start + i, r)] * base.hhat[(b.cols.start + j, r)].conj();
                    }
                    s * core[(i, j)]
                })
            }
        }
    }

    pub fn level_stats(&self) -> Vec<LevelStats> {
        (1..=self.tree.depth())
            .map(|level| {
                let vs = self.tree.level_vertices(level);
                let blocks: Vec<&HodlrBlock> = vs.filter_map(|v| self.blocks[v].as_ref()).collect();
                LevelStats {
                    level,
                    m: self.tree.n() >> level,
                    sep: 1,
                    iterations: blocks.iter().map(|b| b.iterations).max().unwrap_or(0),
                    max_rank: blocks.iter().map(|b| b.rank).max().unwrap_or(0),
                    bound_rank: blocks.iter().map(|b| b.bound_rank).max().unwrap_or(0),
                }
            })
            .collect()
    }
}

/// `y = C~ x`.
pub fn hodlr_matvec(h: &HodlrMatrix, x: &[C64]) -> Result<Vec<C64>> {
    h.matvec(x)
}
