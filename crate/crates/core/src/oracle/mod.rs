//! Dense reference numerics for tests and verification: one-sided Jacobi
//! SVD, LU solves, power iteration and a truncated pivoted QR, generic over
//! the working precision.

pub mod extended;

use std::fmt::Debug;
use std::ops::Neg;

use nalgebra::DVector;
use num_complex::Complex;
use num_traits::Num;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dense::{norm2, Mat, C64};
use crate::error::{Error, Result};

/// Largest `min(rows, cols)` accepted by the SVD.
pub const SVD_GUARD: usize = 2048;
/// Largest order accepted by the LU solve.
pub const SOLVE_GUARD: usize = 4096;

/// Real scalar field for the generic kernels (`f64` or double-double).
pub trait Real:
    Copy + PartialOrd + Debug + Send + Sync + Num + Neg<Output = Self> + 'static
{
    const EPS: f64;
    fn from_f64(x: f64) -> Self;
    fn to_f64(self) -> f64;
    fn sqrt(self) -> Self;
    fn abs(self) -> Self;
}

impl Real for f64 {
    const EPS: f64 = 2.3e-16;
    fn from_f64(x: f64) -> Self {
        x
    }
    fn to_f64(self) -> f64 {
        self
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn abs(self) -> Self {
        f64::abs(self)
    }
}

pub type Col<T> = Vec<Complex<T>>;

fn dot<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> Complex<T> {
    let mut s = Complex::new(T::zero(), T::zero());
    for (x, y) in a.iter().zip(b) {
        s = s + x.conj() * *y;
    }
    s
}

fn nrm2<T: Real>(a: &[Complex<T>]) -> T {
    let mut s = T::zero();
    for x in a {
        s = s + x.norm_sqr();
    }
    s
}

/// One-sided (Hestenes) Jacobi on the columns of `A`. Returns the rotated
/// columns `A V = U Sigma`, the singular values (unsorted, per column) and
/// `V` when requested.
fn hestenes<T: Real>(mut cols: Vec<Col<T>>, want_v: bool) -> (Vec<Col<T>>, Vec<T>, Option<Vec<Col<T>>>) {
    let n = cols.len();
    let zero = Complex::new(T::zero(), T::zero());
    let one = Complex::new(T::one(), T::zero());
    let mut v: Option<Vec<Col<T>>> = want_v.then(|| {
        (0..n)
            .map(|j| (0..n).map(|i| if i == j { one } else { zero }).collect())
            .collect()
    });
    let tol = T::from_f64(T::EPS);
    for _sweep in 0..80 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = nrm2(&cols[p]);
                let beta = nrm2(&cols[q]);
                let g = dot(&cols[p], &cols[q]);
                let gabs = g.norm_sqr().sqrt();
                if gabs.is_zero() || !(gabs > tol * (alpha * beta).sqrt()) {
                    continue;
                }
                rotated = true;
                // a_q' = conj(phase) a_q makes the inner product real
                let phase = Complex::new(g.re / gabs, g.im / gabs);
                let zeta = (beta - alpha) / (T::from_f64(2.0) * gabs);
                let t = {
                    let r = T::one() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                    if zeta < T::zero() {
                        -r
                    } else {
                        r
                    }
                };
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                let rot = |x: &mut Vec<Col<T>>| {
                    let (lo, hi) = x.split_at_mut(q);
                    let (ap, aq) = (&mut lo[p], &mut hi[0]);
                    for (xp, xq) in ap.iter_mut().zip(aq.iter_mut()) {
                        let yq = phase.conj() * *xq;
                        let np = *xp * c - yq * s;
                        let nq = *xp * s + yq * c;
                        *xp = np;
                        *xq = nq;
                    }
                };
                rot(&mut cols);
                if let Some(v) = v.as_mut() {
                    rot(v);
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let sig = cols.iter().map(|c| nrm2(c).sqrt()).collect();
    (cols, sig, v)
}

/// Singular values (descending) of a matrix given by columns.
pub fn singular_values_generic<T: Real>(cols: Vec<Col<T>>) -> Vec<T> {
    let rows = cols.first().map_or(0, |c| c.len());
    let cols = if cols.len() > rows {
        // work on A^* so that the column count is the smaller dimension
        (0..rows)
            .map(|i| cols.iter().map(|c| c[i].conj()).collect())
            .collect()
    } else {
        cols
    };
    let (_, mut s, _) = hestenes(cols, false);
    s.sort_by(|a, b| b.partial_cmp(a).unwrap());
    s
}

fn mat_cols(a: &Mat) -> Vec<Col<f64>> {
    a.column_iter().map(|c| c.iter().copied().collect()).collect()
}

fn svd_guard(a: &Mat) -> Result<()> {
    let k = a.nrows().min(a.ncols());
    if k > SVD_GUARD {
        return Err(Error::SizeGuard { n: k, guard: SVD_GUARD });
    }
    Ok(())
}

/// Singular values of `a`, descending.
pub fn singular_values(a: &Mat) -> Result<Vec<f64>> {
    svd_guard(a)?;
    Ok(singular_values_generic(mat_cols(a)))
}

/// Thin SVD `A = U diag(s) V^*` for `rows >= cols`, descending `s`.
pub fn svd(a: &Mat) -> Result<(Mat, Vec<f64>, Mat)> {
    svd_guard(a)?;
    if a.nrows() < a.ncols() {
        let (u, s, v) = svd(&a.adjoint())?;
        return Ok((v, s, u));
    }
    let (cols, s, v) = hestenes(mat_cols(a), true);
    let v = v.unwrap();
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&i, &j| s[j].partial_cmp(&s[i]).unwrap());
    let m = a.nrows();
    let u = Mat::from_fn(m, order.len(), |i, j| {
        let c = order[j];
        if s[c] > 0.0 {
            cols[c][i] / s[c]
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let vm = Mat::from_fn(a.ncols(), order.len(), |i, j| v[order[j]][i]);
    Ok((u, order.iter().map(|&c| s[c]).collect(), vm))
}

/// Smallest `k` with `sigma_{k+1} <= eps sigma_1`.
pub fn epsilon_rank_from_values(s: &[f64], eps: f64) -> usize {
    match s.first() {
        None => 0,
        Some(&s1) if s1 == 0.0 => 0,
        Some(&s1) => s.iter().take_while(|&&x| x > eps * s1).count(),
    }
}

pub fn epsilon_rank(a: &Mat, eps: f64) -> Result<usize> {
    Ok(epsilon_rank_from_values(&singular_values(a)?, eps))
}

/// Solves `A x = b` by LU with partial pivoting.
pub fn dense_solve(a: &Mat, b: &[C64]) -> Result<Vec<C64>> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::InvalidSize(format!("matrix is {:?}, not square", a.shape())));
    }
    if n > SOLVE_GUARD {
        return Err(Error::SizeGuard { n, guard: SOLVE_GUARD });
    }
    if b.len() != n {
        return Err(Error::LengthMismatch { expected: n, got: b.len() });
    }
    let lu = a.clone().lu();
    let u = lu.u();
    let scale = a.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let tiny = (0..n).map(|i| u[(i, i)].norm()).fold(f64::INFINITY, f64::min);
    if scale == 0.0 || tiny <= 1e-15 * scale {
        return Err(Error::Singular);
    }
    lu.solve(&DVector::from_column_slice(b))
        .map(|x| x.as_slice().to_vec())
        .ok_or(Error::Singular)
}

/// Power iteration on `A^* A` through matvec closures; deterministic seed.
pub fn spectral_norm_op<F, G>(cols: usize, apply: F, apply_adj: G, iters: usize) -> f64
where
    F: Fn(&[C64]) -> Vec<C64>,
    G: Fn(&[C64]) -> Vec<C64>,
{
    if cols == 0 {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut x: Vec<C64> = (0..cols)
        .map(|_| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
        .collect();
    let mut est = 0.0;
    for _ in 0..iters.max(1) {
        let nx = norm2(&x);
        if nx == 0.0 {
            return 0.0;
        }
        x.iter_mut().for_each(|z| *z /= nx);
        let y = apply(&x);
        est = norm2(&y);
        if est == 0.0 {
            return 0.0;
        }
        x = apply_adj(&y);
    }
    est
}

/// `||A||_2` by power iteration.
pub fn spectral_norm(a: &Mat, iters: usize) -> f64 {
    spectral_norm_op(
        a.ncols(),
        |x| (a * DVector::from_column_slice(x)).as_slice().to_vec(),
        |y| (a.adjoint() * DVector::from_column_slice(y)).as_slice().to_vec(),
        iters,
    )
}

/// Outcome of a truncated column-pivoted QR `A P = Q [R11 R12; 0 R22]`.
pub struct TruncatedQr<T: Real> {
    /// The leading `steps` rows `[R11 R12]`, stored by columns.
    pub r_top: Vec<Col<T>>,
    /// `||R22||_F`.
    pub tail_norm: T,
}

/// Runs `steps` Householder CPQR steps in precision `T`.
pub fn truncated_cpqr<T: Real>(mut cols: Vec<Col<T>>, steps: usize) -> TruncatedQr<T> {
    let m = cols.first().map_or(0, |c| c.len());
    let steps = steps.min(m).min(cols.len());
    let zero = Complex::new(T::zero(), T::zero());
    for j in 0..steps {
        let norms: Vec<T> = cols[j..].par_iter().map(|c| nrm2(&c[j..])).collect();
        let mut best = 0;
        for (i, v) in norms.iter().enumerate() {
            if *v > norms[best] {
                best = i;
            }
        }
        cols.swap(j, j + best);
        let x = &cols[j][j..];
        let norm = nrm2(x).sqrt();
        if norm.is_zero() {
            break;
        }
        let x0 = x[0];
        let a0 = x0.norm_sqr().sqrt();
        let phase = if a0.is_zero() {
            Complex::new(T::one(), T::zero())
        } else {
            Complex::new(x0.re / a0, x0.im / a0)
        };
        let alpha = -(phase * norm);
        let mut v: Col<T> = x.to_vec();
        v[0] = v[0] - alpha;
        let vn = nrm2(&v);
        let beta = T::from_f64(2.0) / vn;
        {
            let c = &mut cols[j];
            c[j] = alpha;
            for z in c[j + 1..].iter_mut() {
                *z = zero;
            }
        }
        cols[j + 1..].par_iter_mut().for_each(|c| {
            let seg = &mut c[j..];
            let s = dot(&v, seg);
            let s = Complex::new(s.re * beta, s.im * beta);
            for (vi, ci) in v.iter().zip(seg.iter_mut()) {
                *ci = *ci - *vi * s;
            }
        });
    }
    let tail = cols
        .iter()
        .skip(steps)
        .map(|c| nrm2(&c[steps..]))
        .fold(T::zero(), |a, b| a + b);
    TruncatedQr {
        r_top: cols.into_iter().map(|mut c| {
            c.truncate(steps);
            c
        }).collect(),
        tail_norm: tail.sqrt(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::fro;
    use extended::{cdd, Dd};

    fn random(m: usize, n: usize, seed: u64) -> Mat {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Mat::from_fn(m, n, |_, _| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
    }

    #[test]
    fn trivial_spectra() {
        let s = singular_values(&Mat::identity(6, 6)).unwrap();
        assert!(s.iter().all(|&x| (x - 1.0).abs() < 1e-15));
        let u = random(7, 1, 1);
        let v = random(5, 1, 2);
        let s = singular_values(&(&u * v.adjoint())).unwrap();
        assert!((s[0] - fro(&u) * fro(&v)).abs() < 1e-14);
        assert!(s[1..].iter().all(|&x| x < 1e-15));
    }

    #[test]
    fn frobenius_identity() {
        let a = random(64, 64, 3);
        let s = singular_values(&a).unwrap();
        let sum: f64 = s.iter().map(|x| x * x).sum();
        assert!((sum - fro(&a).powi(2)).abs() <= 1e-12 * sum);
        assert!(s.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn reconstruction() {
        let a = random(128, 128, 4);
        let (u, s, v) = svd(&a).unwrap();
        let rec = &u * Mat::from_diagonal(&DVector::from_vec(s.iter().map(|&x| C64::new(x, 0.0)).collect())) * v.adjoint();
        assert!(fro(&(rec - &a)) <= 1e-11 * fro(&a));
        let wide = random(5, 9, 5);
        let (u, s, v) = svd(&wide).unwrap();
        let rec = &u * Mat::from_diagonal(&DVector::from_vec(s.iter().map(|&x| C64::new(x, 0.0)).collect())) * v.adjoint();
        assert!(fro(&(rec - &wide)) <= 1e-12 * fro(&wide));
    }

    #[test]
    fn epsilon_ranks() {
        assert_eq!(epsilon_rank(&Mat::identity(5, 5), 0.5).unwrap(), 5);
        assert_eq!(epsilon_rank(&Mat::zeros(4, 4), 0.5).unwrap(), 0);
        let d = Mat::from_diagonal(&DVector::from_vec(vec![
            C64::new(1.0, 0.0),
            C64::new(1e-3, 0.0),
            C64::new(1e-9, 0.0),
        ]));
        assert_eq!(epsilon_rank(&d, 1e-6).unwrap(), 2);
    }

    #[test]
    fn lu_solves() {
        let b: Vec<C64> = (0..4).map(|i| C64::new(i as f64, 1.0)).collect();
        assert_eq!(dense_solve(&Mat::identity(4, 4), &b).unwrap(), b);
        let mut p = Mat::zeros(4, 4);
        for (i, j) in [(0, 2), (1, 0), (2, 3), (3, 1)] {
            p[(i, j)] = C64::new(1.0, 0.0);
        }
        let x = dense_solve(&p, &b).unwrap();
        let px = &p * DVector::from_vec(x);
        assert_eq!(px.as_slice(), &b[..]);
        let a = random(128, 128, 6);
        let b: Vec<C64> = random(128, 1, 7).iter().copied().collect();
        let x = dense_solve(&a, &b).unwrap();
        let r = &a * DVector::from_vec(x.clone()) - DVector::from_vec(b.clone());
        assert!(r.norm() <= 1e-12 * (spectral_norm(&a, 50) * norm2(&x) + norm2(&b)));
        assert_eq!(dense_solve(&Mat::zeros(3, 3), &b[..3]), Err(Error::Singular));
    }

    #[test]
    fn power_iteration() {
        assert!((spectral_norm(&Mat::identity(10, 10), 30) - 1.0).abs() < 1e-6);
        let u = random(9, 1, 8);
        let v = random(6, 1, 9);
        assert!((spectral_norm(&(&u * v.adjoint()), 30) - fro(&u) * fro(&v)).abs() < 1e-6 * fro(&u) * fro(&v));
        let a = random(64, 64, 10);
        let s = singular_values(&a).unwrap()[0];
        assert!((spectral_norm(&a, 2000) - s).abs() <= 1e-6 * s);
    }

    #[test]
    fn truncated_qr_brackets_spectrum() {
        let a = random(40, 30, 11);
        let s = singular_values(&a).unwrap();
        let q = truncated_cpqr(mat_cols(&a), 12);
        let top = singular_values_generic(q.r_top);
        for i in 0..12 {
            assert!(top[i] <= s[i] * (1.0 + 1e-12));
            assert!(s[i] <= top[i] + q.tail_norm + 1e-12);
        }
    }

    #[test]
    fn double_double_svd_resolves_tiny_values() {
        // diag(1, 1e-20, 1e-25) hidden by a unitary rotation
        let h = Dd::from_f64(0.5).sqrt();
        let col = |a: Dd, b: Dd| vec![Complex::new(a, Dd::from_f64(0.0)), Complex::new(b, Dd::from_f64(0.0)), cdd(0.0, 0.0)];
        let scale = Dd::from_f64(1e-20);
        let cols = vec![
            col(h, h),
            col(-h * scale, h * scale),
            vec![cdd(0.0, 0.0), cdd(0.0, 0.0), cdd(1e-25, 0.0)],
        ];
        let s = singular_values_generic(cols);
        assert!((s[0] - Dd::from_f64(1.0)).abs().to_f64() < 1e-30);
        assert!(((s[1] - scale).abs() / scale).to_f64() < 1e-12);
        assert!(((s[2].to_f64() - 1e-25) / 1e-25).abs() < 1e-12);
    }
}
