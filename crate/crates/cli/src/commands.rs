use std::fmt::Write as _;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use tzsolve_core::dense::{fro, norm2};
use tzsolve_core::hierarchy::CyclicRange;
use tzsolve_core::hodlr::{HodlrMatrix, LevelStats};
use tzsolve_core::hss::{HssMatrix, HssRowView, VertexStats};
use tzsolve_core::oracle::{dense_solve, epsilon_rank, spectral_norm};
use tzsolve_core::pipeline::{compress_cauchy, solve_toeplitz, tree_for, Compressed, Format, SolveOptions, SolveReport};
use tzsolve_core::spectral::{dense_cauchy, to_cauchy_like, CauchyLikeOperator, SpectralContext};
use tzsolve_core::toeplitz::{complex_to_pairs, dense_toeplitz, random_toeplitz, random_vector, ToeplitzOperator};
use tzsolve_core::zolotarev::epsilon_rank_bound;
use tzsolve_core::{Mat, C64};

use crate::args::{BenchArgs, CompressArgs, RanksArgs, SolveArgs, Tuning, VerifyArgs};
use crate::error::{CliError, CliResult};
use crate::io::{emit, emit_json, read_matrix, read_rhs};

/// Largest size for dense measurements in `compress --verify`, `ranks --measure` and `verify`.
pub const VERIFY_GUARD: usize = 2048;

const NORM_ITERS: usize = 60;

fn check_tol(tol: f64) -> CliResult<()> {
    if tol.is_finite() && tol > 0.0 && tol < 1.0 {
        Ok(())
    } else {
        Err(CliError::config(format!("tolerance must lie in (0, 1), got {tol}")))
    }
}

fn options(t: &Tuning, verify: bool) -> SolveOptions {
    SolveOptions {
        format: t.format,
        n_min: t.n_min,
        fast: t.fast,
        accelerate_leaves: t.leaf_accel,
        verify,
    }
}

fn rel_diff(a: &[C64], b: &[C64]) -> f64 {
    let d: Vec<C64> = a.iter().zip(b).map(|(p, q)| p - q).collect();
    norm2(&d) / norm2(b).max(f64::MIN_POSITIVE)
}

fn rel_spectral(a: &Mat, reference: &Mat) -> f64 {
    spectral_norm(&(a - reference), NORM_ITERS) / spectral_norm(reference, NORM_ITERS).max(f64::MIN_POSITIVE)
}

#[derive(Serialize)]
struct SolveOutput {
    x: Vec<[f64; 2]>,
    report: SolveReport,
}

pub fn solve(args: &SolveArgs) -> CliResult<()> {
    check_tol(args.tuning.tol)?;
    let t = read_matrix(&args.matrix)?;
    let b = read_rhs(&args.rhs)?;
    let (x, report) = solve_toeplitz(&t, &b, args.tuning.tol, &options(&args.tuning, args.verify))?;
    emit_json(args.out.as_deref(), &SolveOutput { x: complex_to_pairs(&x), report })
}

#[derive(Serialize)]
struct LevelError {
    level: usize,
    max_block_error: f64,
}

#[derive(Serialize)]
struct VertexError {
    vertex: usize,
    row_error: f64,
    col_error: f64,
}

#[derive(Serialize)]
struct Verification {
    /// `||C - C~||_2 / ||C||_2`.
    error: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    levels: Option<Vec<LevelError>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    vertices: Option<Vec<VertexError>>,
}

#[derive(Serialize)]
struct CompressStats {
    format: Format,
    n: usize,
    rho: usize,
    eps: f64,
    n_min: usize,
    seed: Option<u64>,
    compress_s: f64,
    max_rank: usize,
    mean_rank: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    levels: Option<Vec<LevelStats>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    vertices: Option<Vec<VertexStats>>,
    verification: Option<Verification>,
}

fn verify_hodlr(h: &HodlrMatrix, cop: &CauchyLikeOperator, c: &Mat) -> CliResult<Verification> {
    let error = rel_spectral(&h.to_dense()?, c);
    let n = cop.n();
    let levels = (1..=h.tree.depth())
        .map(|level| {
            let max_block_error = h
                .tree
                .level_vertices(level)
                .into_par_iter()
                .filter_map(|v| h.blocks[v].as_ref())
                .map(|b| rel_spectral(&h.block_dense(b), &cop.block(&b.rows.indices(n), &b.cols.indices(n))))
                .reduce(|| 0.0, f64::max);
            LevelError { level, max_block_error }
        })
        .collect();
    Ok(Verification { error, levels: Some(levels), vertices: None })
}

fn verify_hss(h: &HssMatrix, cop: &CauchyLikeOperator, c: &Mat) -> CliResult<Verification> {
    let error = rel_spectral(&h.to_dense()?, c);
    let n = cop.n();
    let ub = h.row_bases();
    let vb = h.col_bases();
    let vertices = (1..h.tree.num_vertices())
        .into_par_iter()
        .map(|v| {
            let view = HssRowView::new(&h.tree, v);
            let comp = view.cols.indices(n);
            let node = &h.vertices[v];
            let row = view.dense(cop);
            let row_error = rel_spectral(&(&ub[v] * cop.block(&node.row_skel, &comp)), &row);
            let col = view.dense_column(cop);
            let col_error = rel_spectral(&(cop.block(&comp, &node.col_skel) * vb[v].adjoint()), &col);
            VertexError { vertex: v, row_error, col_error }
        })
        .collect();
    Ok(Verification { error, levels: None, vertices: Some(vertices) })
}

pub fn compress(args: &CompressArgs) -> CliResult<()> {
    let tol = args.tuning.tol;
    check_tol(tol)?;
    let (t, seed) = match (&args.matrix, args.n) {
        (Some(path), _) => (read_matrix(path)?, None),
        (None, Some(n)) => (random_toeplitz(n, args.seed)?, Some(args.seed)),
        (None, None) => return Err(CliError::config("either --matrix or --n is required")),
    };
    let opts = options(&args.tuning, false);
    let cop = to_cauchy_like(&t)?;
    let clock = Instant::now();
    let compressed = compress_cauchy(&cop, tol, &opts)?;
    let compress_s = clock.elapsed().as_secs_f64();
    let ranks = compressed.rank_stats();
    let n = cop.n();

    let verification = if !args.verify {
        None
    } else if n > VERIFY_GUARD {
        log::warn!("--verify skipped: n = {n} exceeds {VERIFY_GUARD}");
        None
    } else {
        let c = dense_cauchy(&cop)?;
        Some(match &compressed {
            Compressed::Hodlr(h) => verify_hodlr(h, &cop, &c)?,
            Compressed::Hss(h) => verify_hss(h, &cop, &c)?,
        })
    };
    let (levels, vertices, eps) = match &compressed {
        Compressed::Hodlr(h) => (Some(h.level_stats()), None, h.eps),
        Compressed::Hss(h) => (None, Some(h.stats()), h.eps),
    };
    let stats = CompressStats {
        format: opts.format,
        n,
        rho: cop.rho(),
        eps,
        n_min: tree_for(n, opts.n_min)?.n_min(),
        seed,
        compress_s,
        max_rank: ranks.max_rank,
        mean_rank: ranks.mean_rank,
        levels,
        vertices,
        verification,
    };
    emit_json(args.stats.as_deref(), &stats)
}

/// Seeded random Cauchy-like matrix with `rho` generator columns.
fn random_cauchy_like(n: usize, rho: usize, seed: u64) -> CliResult<CauchyLikeOperator> {
    let ctx = Arc::new(SpectralContext::new(n)?);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut gen = || Mat::from_fn(n, rho, |_, _| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5));
    let g = gen();
    let h = gen();
    Ok(CauchyLikeOperator::from_transformed(ctx, g, h, vec![C64::new(0.0, 0.0); n]))
}

pub fn ranks(args: &RanksArgs) -> CliResult<()> {
    check_tol(args.eps)?;
    if args.rho == 0 || args.sep == 0 {
        return Err(CliError::config("--rho and --sep must be positive"));
    }
    let n = args.n;
    let tree = tree_for(n, args.n_min)?;
    let cop = if args.measure {
        if n > VERIFY_GUARD {
            return Err(CliError::config(format!("--measure needs n <= {VERIFY_GUARD}")));
        }
        Some(random_cauchy_like(n, args.rho, args.seed)?)
    } else {
        None
    };
    let mut csv = String::from("level,m,sep,bound_rank,measured_rank\n");
    for level in 1..=tree.depth() {
        let m = n >> level;
        let bound = epsilon_rank_bound(args.rho, m, args.sep, args.eps)?;
        // rows [0, m), columns m indices further on, `sep` away on both sides
        let fits = 2 * m + 2 * args.sep <= n + 2;
        let measured = match &cop {
            Some(cop) if fits => {
                let rows = CyclicRange::new(0, m).indices(n);
                let cols = CyclicRange::new(m - 1 + args.sep, m).indices(n);
                epsilon_rank(&cop.block(&rows, &cols), args.eps)?.to_string()
            }
            _ => String::new(),
        };
        writeln!(csv, "{level},{m},{},{bound},{measured}", args.sep).unwrap();
    }
    emit(None, &csv)
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

pub fn bench(args: &BenchArgs) -> CliResult<()> {
    check_tol(args.tuning.tol)?;
    if args.reps == 0 {
        return Err(CliError::config("--reps must be positive"));
    }
    let problems: Vec<ToeplitzOperator> = match &args.matrix {
        Some(path) => vec![read_matrix(path)?],
        None => {
            if args.min_log2 > args.max_log2 || args.max_log2 > 30 {
                return Err(CliError::config("need min-log2 <= max-log2 <= 30"));
            }
            (args.min_log2..=args.max_log2)
                .map(|p| random_toeplitz(1usize << p, args.seed))
                .collect::<Result<_, _>>()?
        }
    };
    let opts = options(&args.tuning, false);
    let mut csv = format!("# seed={}\nn,build_s,solve_s,rank_max,resid\n", args.seed);
    for t in &problems {
        let n = t.n();
        let b = random_vector(n, args.seed.wrapping_add(1));
        let mut build = Vec::new();
        let mut solve = Vec::new();
        let mut last: Option<(Vec<C64>, SolveReport)> = None;
        for _ in 0..args.reps {
            let (x, report) = solve_toeplitz(t, &b, args.tuning.tol, &opts)?;
            let s = &report.times;
            build.push(s.transform_s + s.compress_s + s.factor_s);
            solve.push(s.solve_s + s.back_transform_s);
            last = Some((x, report));
        }
        let (x, report) = last.expect("reps > 0");
        let resid = if args.verify {
            format!("{:e}", rel_diff(&t.matvec_direct(&x)?, &b))
        } else {
            String::new()
        };
        writeln!(csv, "{n},{:.6},{:.6},{},{resid}", median(build), median(solve), report.ranks.max_rank).unwrap();
        log::info!("n = {n} done");
    }
    emit(args.out.as_deref(), &csv)
}

#[derive(Serialize)]
struct Check {
    name: &'static str,
    value: f64,
    limit: f64,
    pass: bool,
}

impl Check {
    fn new(name: &'static str, value: f64, limit: f64) -> Self {
        Self { name, value, limit, pass: value <= limit }
    }
}

#[derive(Serialize)]
struct VerifyReport {
    n: usize,
    seed: u64,
    tol: f64,
    checks: Vec<Check>,
    pass: bool,
}

pub fn verify(args: &VerifyArgs) -> CliResult<()> {
    check_tol(args.tol)?;
    let n = args.n;
    if n > VERIFY_GUARD {
        return Err(CliError::config(format!("verify needs n <= {VERIFY_GUARD}")));
    }
    let tol = args.tol;
    let t = random_toeplitz(n, args.seed)?;
    let b = random_vector(n, args.seed.wrapping_add(1));
    let cop = to_cauchy_like(&t)?;
    let c = dense_cauchy(&cop)?;
    let td = dense_toeplitz(&t)?;
    let f = cop.ctx.dense_f();
    let mut checks = vec![
        Check::new("unitarity", fro(&(f.adjoint() * &f - Mat::identity(n, n))), 1e-12),
        Check::new("transform", fro(&(&c - &f * &td * f.adjoint())) / fro(&td), 1e-12),
    ];
    let with = |format, fast| SolveOptions { format, n_min: args.n_min, fast, ..SolveOptions::default() };
    for (name, format, fast, factor) in [
        ("hodlr_error", Format::Hodlr, false, 1.0),
        ("hodlr_fast_error", Format::Hodlr, true, 10.0),
        ("hss_error", Format::Hss, false, 10.0),
    ] {
        let err = match compress_cauchy(&cop, tol, &with(format, fast))? {
            Compressed::Hodlr(h) => rel_spectral(&h.to_dense()?, &c),
            Compressed::Hss(h) => rel_spectral(&h.to_dense()?, &c),
        };
        checks.push(Check::new(name, err, factor * tol));
    }
    let xd = dense_solve(&td, &b)?;
    let (x, _) = solve_toeplitz(&t, &b, tol, &with(Format::Hss, false))?;
    checks.push(Check::new("solve_error", rel_diff(&x, &xd), 100.0 * tol));
    let pass = checks.iter().all(|c| c.pass);
    emit_json(
        args.out.as_deref(),
        &VerifyReport { n, seed: args.seed, tol, checks, pass },
    )?;
    if pass {
        Ok(())
    } else {
        Err(CliError::numerical("dense-oracle verification failed"))
    }
}
