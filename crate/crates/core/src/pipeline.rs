//! End-to-end Toeplitz solve: transform to Cauchy-like form, compress,
//! factor, solve and transform back.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::dense::{norm2, C64};
use crate::error::{Error, Result};
use crate::hierarchy::{build_tree, ClusterTree, DEFAULT_N_MIN};
use crate::hodlr::{hodlr_compress, hodlr_compress_fast, HodlrMatrix, LevelStats};
use crate::hss::{hss_compress, HssMatrix, VertexStats};
use crate::oracle::{dense_solve, SOLVE_GUARD};
use crate::spectral::{to_cauchy_like_with, CauchyLikeOperator, SpectralContext};
use crate::toeplitz::{dense_toeplitz_guarded, ToeplitzOperator};
use crate::ulv::ulv_factor;
use crate::zolotarev::clamp_eps;

pub const DEFAULT_EPS: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Hodlr,
    #[default]
    Hss,
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Hodlr => "hodlr",
            Format::Hss => "hss",
        })
    }
}

impl FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "hodlr" => Ok(Format::Hodlr),
            "hss" => Ok(Format::Hss),
            other => Err(Error::Parse(format!("unknown format '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    pub format: Format,
    pub n_min: usize,
    /// HODLR: one fADI per level on the base matrix.
    pub fast: bool,
    /// HSS: leaf bases from one base-matrix fADI.
    pub accelerate_leaves: bool,
    /// Compare against a dense solve (only for `n <= 4096`).
    pub verify: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            format: Format::Hss,
            n_min: DEFAULT_N_MIN,
            fast: false,
            accelerate_leaves: false,
            verify: false,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
pub struct StageTimes {
    pub transform_s: f64,
    pub compress_s: f64,
    pub factor_s: f64,
    pub solve_s: f64,
    pub back_transform_s: f64,
}

impl StageTimes {
    pub fn total(&self) -> f64 {
        self.transform_s + self.compress_s + self.factor_s + self.solve_s + self.back_transform_s
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct LevelRank {
    pub level: usize,
    pub m: usize,
    pub max_rank: usize,
    pub bound_rank: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RankStats {
    pub max_rank: usize,
    pub mean_rank: f64,
    pub levels: Vec<LevelRank>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SolveReport {
    pub n: usize,
    pub rho: usize,
    pub eps: f64,
    pub format: Format,
    pub n_min: usize,
    pub times: StageTimes,
    pub ranks: RankStats,
    /// `||T x - b|| / ||b||` (with verification).
    pub residual: Option<f64>,
    /// `||x - x_dense|| / ||x_dense||` (with verification, `n <= 4096`).
    pub dense_error: Option<f64>,
}

/// A compressed Cauchy-like matrix.
#[derive(Debug, Clone)]
pub enum Compressed {
    Hodlr(HodlrMatrix),
    Hss(HssMatrix),
}

impl Compressed {
    pub fn matvec(&self, x: &[C64]) -> Result<Vec<C64>> {
        match self {
            Compressed::Hodlr(h) => h.matvec(x),
            Compressed::Hss(h) => h.matvec(x),
        }
    }

    pub fn rank_stats(&self) -> RankStats {
        match self {
            Compressed::Hodlr(h) => hodlr_rank_stats(&h.level_stats(), h),
            Compressed::Hss(h) => hss_rank_stats(&h.stats(), h),
        }
    }
}

fn hodlr_rank_stats(levels: &[LevelStats], h: &HodlrMatrix) -> RankStats {
    let ranks: Vec<usize> = h.blocks.iter().flatten().map(|b| b.rank).collect();
    RankStats {
        max_rank: ranks.iter().copied().max().unwrap_or(0),
        mean_rank: mean(&ranks),
        levels: levels
            .iter()
            .map(|l| LevelRank {
                level: l.level,
                m: l.m,
                max_rank: l.max_rank,
                bound_rank: l.bound_rank,
            })
            .collect(),
    }
}

fn hss_rank_stats(stats: &[VertexStats], h: &HssMatrix) -> RankStats {
    let ranks: Vec<usize> = stats.iter().map(|s| s.row_rank.max(s.col_rank)).collect();
    let levels = (1..=h.tree.depth())
        .map(|level| LevelRank {
            level,
            m: h.n() >> level,
            max_rank: stats
                .iter()
                .filter(|s| s.level == level)
                .map(|s| s.row_rank.max(s.col_rank))
                .max()
                .unwrap_or(0),
            bound_rank: h.bound,
        })
        .collect();
    RankStats {
        max_rank: ranks.iter().copied().max().unwrap_or(0),
        mean_rank: mean(&ranks),
        levels,
    }
}

fn mean(v: &[usize]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<usize>() as f64 / v.len() as f64
    }
}

/// `n_min` clamped into `[2, n/2]`.
pub fn effective_n_min(n: usize, n_min: usize) -> usize {
    n_min.clamp(2, (n / 2).max(2))
}

pub fn tree_for(n: usize, n_min: usize) -> Result<ClusterTree> {
    build_tree(n, effective_n_min(n, n_min))
}

/// Compresses the Cauchy-like form of `t`.
pub fn compress_cauchy(cop: &CauchyLikeOperator, eps: f64, options: &SolveOptions) -> Result<Compressed> {
    let tree = tree_for(cop.n(), options.n_min)?;
    Ok(match options.format {
        Format::Hodlr if options.fast => Compressed::Hodlr(hodlr_compress_fast(cop, &tree, eps)?),
        Format::Hodlr => Compressed::Hodlr(hodlr_compress(cop, &tree, eps)?),
        Format::Hss => Compressed::Hss(hss_compress(cop, &tree, eps, options.accelerate_leaves)?),
    })
}

fn singular(e: Error) -> Error {
    match e {
        Error::SingularBlock { vertex } => {
            Error::NumericallySingular(format!("reduced block at vertex {vertex} is singular"))
        }
        Error::Singular => Error::NumericallySingular("dense system is singular".into()),
        other => other,
    }
}

/// Solves `T x = b` to tolerance `eps`.
pub fn solve_toeplitz(
    t: &ToeplitzOperator,
    b: &[C64],
    eps: f64,
    options: &SolveOptions,
) -> Result<(Vec<C64>, SolveReport)> {
    let n = t.n();
    if b.len() != n {
        return Err(Error::LengthMismatch { expected: n, got: b.len() });
    }
    let eps = clamp_eps(eps)?;
    if options.format == Format::Hodlr {
        return Err(Error::FormatUnsupported(
            "the HODLR format supports compression and matvec only; solve with HSS".into(),
        ));
    }
    let mut times = StageTimes::default();

    let clock = Instant::now();
    let ctx = Arc::new(SpectralContext::new(n)?);
    let cop = to_cauchy_like_with(ctx.clone(), t)?;
    let bt = ctx.apply_f(b)?;
    times.transform_s = clock.elapsed().as_secs_f64();

    let clock = Instant::now();
    let compressed = compress_cauchy(&cop, eps, options)?;
    times.compress_s = clock.elapsed().as_secs_f64();
    let Compressed::Hss(h) = &compressed else {
        unreachable!("HODLR is rejected above")
    };

    let clock = Instant::now();
    let f = ulv_factor(h).map_err(singular)?;
    times.factor_s = clock.elapsed().as_secs_f64();

    let clock = Instant::now();
    let xt = f.solve(&bt).map_err(singular)?;
    times.solve_s = clock.elapsed().as_secs_f64();

    let clock = Instant::now();
    let x = ctx.apply_f_adjoint(&xt)?;
    times.back_transform_s = clock.elapsed().as_secs_f64();

    let (residual, dense_error) = if options.verify {
        let tx = t.matvec_direct(&x)?;
        let r: Vec<C64> = tx.iter().zip(b).map(|(p, q)| p - q).collect();
        let residual = Some(norm2(&r) / norm2(b).max(f64::MIN_POSITIVE));
        let dense_error = if n <= SOLVE_GUARD {
            let xd = dense_solve(&dense_toeplitz_guarded(t, SOLVE_GUARD)?, b).map_err(singular)?;
            let d: Vec<C64> = x.iter().zip(&xd).map(|(p, q)| p - q).collect();
            Some(norm2(&d) / norm2(&xd).max(f64::MIN_POSITIVE))
        } else {
            None
        };
        (residual, dense_error)
    } else {
        (None, None)
    };

    let report = SolveReport {
        n,
        rho: cop.rho(),
        eps,
        format: options.format,
        n_min: effective_n_min(n, options.n_min),
        times,
        ranks: compressed.rank_stats(),
        residual,
        dense_error,
    };
    Ok((x, report))
}
