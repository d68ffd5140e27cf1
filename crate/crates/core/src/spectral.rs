//! The unitary Fourier transform `F = (omega^{2jk} / sqrt(n))` that
//! diagonalizes the circulant shift, and the Cauchy-like operator
//! `C = F T F^*` it produces.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::dense::{Mat, C64, ZERO};
use crate::error::{Error, Result};
use crate::toeplitz::{check_size, toeplitz_generators, DisplacementGenerators, ToeplitzOperator};

/// Dimension-dependent tables: `omega = exp(i pi / n)`, nodes `omega^{2j}`
/// and FFT plans.
pub struct SpectralContext {
    n: usize,
    /// `omega^s` for `s = 0..2n`.
    half_powers: Vec<C64>,
    /// `sin(pi d / n)` for `d = 0..n`, evaluated on the reduced angle.
    sines: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for SpectralContext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralContext").field("n", &self.n).finish()
    }
}

impl SpectralContext {
    pub fn new(n: usize) -> Result<Self> {
        check_size(n)?;
        let half_powers = (0..2 * n)
            .map(|s| {
                let (sin, cos) = (PI * s as f64 / n as f64).sin_cos();
                C64::new(cos, sin)
            })
            .collect();
        let sines = (0..n)
            .map(|d| (PI * d.min(n - d) as f64 / n as f64).sin())
            .collect();
        let mut planner = FftPlanner::new();
        Ok(Self {
            n,
            half_powers,
            sines,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `omega = exp(i pi / n)`.
    pub fn omega(&self) -> C64 {
        self.half_powers[1]
    }

    /// `omega^s` for any integer `s`.
    pub fn omega_pow(&self, s: i64) -> C64 {
        let m = 2 * self.n as i64;
        self.half_powers[s.rem_euclid(m) as usize]
    }

    /// Node `omega^{2j}`.
    pub fn node(&self, j: usize) -> C64 {
        self.half_powers[(2 * j) % (2 * self.n)]
    }

    pub fn nodes(&self) -> Vec<C64> {
        (0..self.n).map(|j| self.node(j)).collect()
    }

    /// `sin(pi d / n)` for `-n < d < n`, accurate to full relative precision.
    pub fn sin_pi_over_n(&self, d: i64) -> f64 {
        if d >= 0 {
            self.sines[d as usize]
        } else {
            -self.sines[(-d) as usize]
        }
    }

    /// `1 / (omega^{2j} - omega^{2k})` for `j != k`, using
    /// `omega^{2j} - omega^{2k} = 2i sin(pi (j-k)/n) omega^{j+k}`.
    pub fn inverse_node_gap(&self, j: usize, k: usize) -> C64 {
        let s = self.sin_pi_over_n(j as i64 - k as i64);
        let w = self.omega_pow(-((j + k) as i64));
        // 1/(2i s) = -i/(2s)
        w * C64::new(0.0, -0.5 / s)
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                got: len,
            });
        }
        Ok(())
    }

    /// `y = F x`, i.e. `y_j = n^{-1/2} sum_k omega^{2jk} x_k`.
    pub fn apply_f(&self, x: &[C64]) -> Result<Vec<C64>> {
        self.check_len(x.len())?;
        let mut y = x.to_vec();
        self.inverse.process(&mut y);
        let s = 1.0 / (self.n as f64).sqrt();
        y.iter_mut().for_each(|z| *z *= s);
        Ok(y)
    }

    /// `y = F^* x`.
    pub fn apply_f_adjoint(&self, x: &[C64]) -> Result<Vec<C64>> {
        self.check_len(x.len())?;
        let mut y = x.to_vec();
        self.forward.process(&mut y);
        let s = 1.0 / (self.n as f64).sqrt();
        y.iter_mut().for_each(|z| *z *= s);
        Ok(y)
    }

    /// `F` applied to every column of `a`.
    pub fn apply_f_columns(&self, a: &Mat) -> Result<Mat> {
        self.check_len(a.nrows())?;
        let mut out = a.clone();
        let s = 1.0 / (self.n as f64).sqrt();
        for mut col in out.column_iter_mut() {
            let slice = col.as_mut_slice();
            self.inverse.process(slice);
            slice.iter_mut().for_each(|z| *z *= s);
        }
        Ok(out)
    }

    /// Dense `F` (reference use only).
    pub fn dense_f(&self) -> Mat {
        let s = 1.0 / (self.n as f64).sqrt();
        Mat::from_fn(self.n, self.n, |j, k| self.node((j * k) % self.n) * s)
    }

    /// Diagonal of `F P F^*` for the circulant with first column `c`:
    /// `lambda_j = sum_k c_k omega^{2jk}`.
    pub fn circulant_eigenvalues(&self, c: &[C64]) -> Result<Vec<C64>> {
        self.check_len(c.len())?;
        let mut y = c.to_vec();
        self.inverse.process(&mut y);
        Ok(y)
    }
}

/// `C = F T F^*`, stored through its transformed generators and diagonal.
#[derive(Debug, Clone)]
pub struct CauchyLikeOperator {
    pub ctx: Arc<SpectralContext>,
    /// `F G` (`n x rho`).
    pub gt: Mat,
    /// `F H` (`n x rho`).
    pub ht: Mat,
    /// Diagonal of `C`.
    pub diag: Vec<C64>,
}

/// `diag(F Pi(T) F^*)` where `Pi(T)` is the circulant projection of `T`.
pub fn cauchy_diagonal(ctx: &SpectralContext, t: &ToeplitzOperator) -> Result<Vec<C64>> {
    ctx.circulant_eigenvalues(&t.cyclic_average())
}

/// Transforms `T` into its Cauchy-like counterpart.
pub fn to_cauchy_like(t: &ToeplitzOperator) -> Result<CauchyLikeOperator> {
    let ctx = Arc::new(SpectralContext::new(t.n())?);
    to_cauchy_like_with(ctx, t)
}

pub fn to_cauchy_like_with(ctx: Arc<SpectralContext>, t: &ToeplitzOperator) -> Result<CauchyLikeOperator> {
    let gens = toeplitz_generators(t);
    let diag = cauchy_diagonal(&ctx, t)?;
    CauchyLikeOperator::from_generators(ctx, &gens, diag)
}

impl CauchyLikeOperator {
    /// Toeplitz-like input: generators of `Z T - T Z` plus the diagonal of
    /// `C` (which the generators cannot determine).
    pub fn from_generators(
        ctx: Arc<SpectralContext>,
        gens: &DisplacementGenerators,
        diag: Vec<C64>,
    ) -> Result<Self> {
        let n = ctx.n();
        if gens.g.nrows() != n || gens.h.nrows() != n || gens.g.ncols() != gens.h.ncols() {
            return Err(Error::InvalidSize(format!(
                "generators must both be {n} x rho, got {:?} and {:?}",
                gens.g.shape(),
                gens.h.shape()
            )));
        }
        if diag.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                got: diag.len(),
            });
        }
        Ok(Self {
            gt: ctx.apply_f_columns(&gens.g)?,
            ht: ctx.apply_f_columns(&gens.h)?,
            ctx,
            diag,
        })
    }

    /// Toeplitz-like input where the diagonal information is supplied as the
    /// first column of the circulant projection `Pi(T)`.
    pub fn from_toeplitz_like(
        gens: &DisplacementGenerators,
        cyclic_average: &[C64],
    ) -> Result<Self> {
        let ctx = Arc::new(SpectralContext::new(gens.n())?);
        let diag = ctx.circulant_eigenvalues(cyclic_average)?;
        Self::from_generators(ctx, gens, diag)
    }

    /// Builds directly from transformed generators (already multiplied by `F`).
    pub fn from_transformed(ctx: Arc<SpectralContext>, gt: Mat, ht: Mat, diag: Vec<C64>) -> Self {
        assert_eq!(gt.nrows(), ctx.n());
        assert_eq!(ht.nrows(), ctx.n());
        assert_eq!(diag.len(), ctx.n());
        Self { ctx, gt, ht, diag }
    }

    pub fn n(&self) -> usize {
        self.ctx.n()
    }

    pub fn rho(&self) -> usize {
        self.gt.ncols()
    }

    /// `(G~ H~^*)_{jk}`.
    #[inline]
    pub fn generator_product(&self, j: usize, k: usize) -> C64 {
        let mut s = ZERO;
        for r in 0..self.gt.ncols() {
            s += self.gt[(j, r)] * self.ht[(k, r)].conj();
        }
        s
    }

    /// Entry `c_{jk}`.
    pub fn entry(&self, j: usize, k: usize) -> C64 {
        if j == k {
            self.diag[j]
        } else {
            self.generator_product(j, k) * self.ctx.inverse_node_gap(j, k)
        }
    }

    /// Submatrix `C(rows, cols)` read entrywise.
    pub fn block(&self, rows: &[usize], cols: &[usize]) -> Mat {
        Mat::from_fn(rows.len(), cols.len(), |a, b| self.entry(rows[a], cols[b]))
    }

    /// Contiguous block `C(r0..r0+nr, c0..c0+nc)`.
    pub fn block_range(&self, r0: usize, nr: usize, c0: usize, nc: usize) -> Mat {
        Mat::from_fn(nr, nc, |a, b| self.entry(r0 + a, c0 + b))
    }

    /// Dense `C` under a size guard.
    pub fn dense_guarded(&self, guard: usize) -> Result<Mat> {
        if self.n() > guard {
            return Err(Error::SizeGuard {
                n: self.n(),
                guard,
            });
        }
        Ok(self.block_range(0, self.n(), 0, self.n()))
    }
}

/// Dense `C` (guard 8192).
pub fn dense_cauchy(c: &CauchyLikeOperator) -> Result<Mat> {
    c.dense_guarded(crate::toeplitz::DEFAULT_DENSE_GUARD)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::fro;
    use crate::toeplitz::{dense_toeplitz, make_toeplitz, shift_matrix};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_vec(n: usize, rng: &mut ChaCha8Rng) -> Vec<C64> {
        (0..n)
            .map(|_| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
            .collect()
    }

    fn random_toeplitz(n: usize, rng: &mut ChaCha8Rng) -> ToeplitzOperator {
        let col = random_vec(n, rng);
        let mut row = random_vec(n, rng);
        row[0] = col[0];
        make_toeplitz(col, row).unwrap()
    }

    fn shift_operator(n: usize) -> ToeplitzOperator {
        let mut col = vec![ZERO; n];
        col[1] = C64::new(1.0, 0.0);
        let mut row = vec![ZERO; n];
        row[n - 1] = C64::new(1.0, 0.0);
        make_toeplitz(col, row).unwrap()
    }

    #[test]
    fn first_column_of_f() {
        let ctx = SpectralContext::new(16).unwrap();
        let mut e0 = vec![ZERO; 16];
        e0[0] = C64::new(1.0, 0.0);
        let y = ctx.apply_f(&e0).unwrap();
        for z in y {
            assert!((z - C64::new(0.25, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn ones_map_to_scaled_e0() {
        let ctx = SpectralContext::new(64).unwrap();
        let y = ctx.apply_f(&vec![C64::new(1.0, 0.0); 64]).unwrap();
        assert!((y[0] - C64::new(8.0, 0.0)).norm() < 1e-13);
        assert!(y[1..].iter().all(|z| z.norm() < 1e-13));
    }

    #[test]
    fn matches_naive_dft() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 64;
        let ctx = SpectralContext::new(n).unwrap();
        let x = random_vec(n, &mut rng);
        let y = ctx.apply_f(&x).unwrap();
        let s = 1.0 / (n as f64).sqrt();
        for j in 0..n {
            let direct: C64 = (0..n)
                .map(|k| {
                    let ang = 2.0 * PI * ((j * k) % n) as f64 / n as f64;
                    C64::new(ang.cos(), ang.sin()) * x[k] * s
                })
                .sum();
            assert!((direct - y[j]).norm() < 1e-13);
        }
    }

    #[test]
    fn length_mismatch() {
        let ctx = SpectralContext::new(8).unwrap();
        assert!(matches!(
            ctx.apply_f(&[ZERO; 4]),
            Err(Error::LengthMismatch { expected: 8, got: 4 })
        ));
    }

    #[test]
    fn diagonal_of_identity_and_shift() {
        let n = 16;
        let ctx = SpectralContext::new(n).unwrap();
        let d = cauchy_diagonal(&ctx, &ToeplitzOperator::identity(n).unwrap()).unwrap();
        assert!(d.iter().all(|z| (z - C64::new(1.0, 0.0)).norm() < 1e-14));
        let d = cauchy_diagonal(&ctx, &shift_operator(n)).unwrap();
        for (j, z) in d.iter().enumerate() {
            assert!((z - ctx.node(j)).norm() < 1e-14);
        }
    }

    #[test]
    fn diagonal_matches_dense_transform() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 64;
        let t = random_toeplitz(n, &mut rng);
        let ctx = SpectralContext::new(n).unwrap();
        let f = ctx.dense_f();
        let c = &f * dense_toeplitz(&t).unwrap() * f.adjoint();
        let d = cauchy_diagonal(&ctx, &t).unwrap();
        for j in 0..n {
            assert!((c[(j, j)] - d[j]).norm() < 1e-13);
        }
    }

    #[test]
    fn identity_and_shift_transform() {
        let cop = to_cauchy_like(&ToeplitzOperator::identity(8).unwrap()).unwrap();
        assert!(fro(&(&cop.gt * cop.ht.adjoint())) < 1e-15);
        assert!(fro(&(dense_cauchy(&cop).unwrap() - Mat::identity(8, 8))) < 1e-14);

        let cop = to_cauchy_like(&shift_operator(8)).unwrap();
        let c = dense_cauchy(&cop).unwrap();
        for j in 0..8 {
            for k in 0..8 {
                let expect = if j == k { cop.ctx.node(j) } else { ZERO };
                assert!((c[(j, k)] - expect).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn displacement_residual_of_transform() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 64;
        let t = random_toeplitz(n, &mut rng);
        let cop = to_cauchy_like(&t).unwrap();
        let f = cop.ctx.dense_f();
        let c = &f * dense_toeplitz(&t).unwrap() * f.adjoint();
        let d = Mat::from_diagonal(&nalgebra::DVector::from_vec(cop.ctx.nodes()));
        let res = &d * &c - &c * &d - &cop.gt * cop.ht.adjoint();
        assert!(fro(&res) <= 1e-13 * fro(&c));
        // the shift is diagonalized
        let fzf = &f * shift_matrix(n) * f.adjoint();
        assert!(fro(&(fzf - d)) < 1e-12);
    }

    #[test]
    fn zero_generators_give_diagonal() {
        let ctx = Arc::new(SpectralContext::new(8).unwrap());
        let d: Vec<C64> = (0..8).map(|j| C64::new(j as f64, 1.0)).collect();
        let cop = CauchyLikeOperator::from_transformed(ctx, Mat::zeros(8, 2), Mat::zeros(8, 2), d.clone());
        let c = dense_cauchy(&cop).unwrap();
        assert_eq!(c, Mat::from_diagonal(&nalgebra::DVector::from_vec(d)));
    }
}
