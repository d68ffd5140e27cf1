//! Toeplitz operators and their Sylvester displacement generators with
//! respect to the unit circulant shift `Z`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dense::{Mat, C64, ZERO};
use crate::error::{Error, Result};

/// Largest dimension for which dense reference matrices are materialized.
pub const DEFAULT_DENSE_GUARD: usize = 8192;

/// A Toeplitz matrix given by its first column `t_0..t_{n-1}` and first row
/// `t_0, t_{-1}, .., t_{-n+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ToeplitzOperator {
    n: usize,
    col: Vec<C64>,
    row: Vec<C64>,
}

/// Generators `G`, `H` (both `n x rho`) with `Z T - T Z = G H^*`.
#[derive(Debug, Clone, PartialEq)]
pub struct DisplacementGenerators {
    pub g: Mat,
    pub h: Mat,
}

impl DisplacementGenerators {
    pub fn rho(&self) -> usize {
        self.g.ncols()
    }

    pub fn n(&self) -> usize {
        self.g.nrows()
    }

    /// Dense `G H^*`.
    pub fn product(&self) -> Mat {
        &self.g * self.h.adjoint()
    }
}

/// Checks the power-of-two size rule shared by every structured object.
pub fn check_size(n: usize) -> Result<()> {
    if n < 4 || !n.is_power_of_two() {
        return Err(Error::InvalidSize(format!(
            "n = {n} must be a power of two and at least 4"
        )));
    }
    Ok(())
}

/// Validates and builds a Toeplitz operator.
pub fn make_toeplitz(col: Vec<C64>, row: Vec<C64>) -> Result<ToeplitzOperator> {
    if col.len() != row.len() {
        return Err(Error::InvalidSize(format!(
            "column length {} differs from row length {}",
            col.len(),
            row.len()
        )));
    }
    let n = col.len();
    check_size(n)?;
    if col[0] != row[0] {
        return Err(Error::CornerMismatch {
            col0: format!("{}", col[0]),
            row0: format!("{}", row[0]),
        });
    }
    Ok(ToeplitzOperator { n, col, row })
}

impl ToeplitzOperator {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn col(&self) -> &[C64] {
        &self.col
    }

    pub fn row(&self) -> &[C64] {
        &self.row
    }

    /// `t_k` for `-n < k < n`.
    pub fn t(&self, k: isize) -> C64 {
        if k >= 0 {
            self.col[k as usize]
        } else {
            self.row[(-k) as usize]
        }
    }

    /// Entry `(j, k)` of the matrix.
    pub fn entry(&self, j: usize, k: usize) -> C64 {
        self.t(j as isize - k as isize)
    }

    pub fn identity(n: usize) -> Result<Self> {
        let mut col = vec![ZERO; n];
        if n > 0 {
            col[0] = C64::new(1.0, 0.0);
        }
        make_toeplitz(col.clone(), col)
    }

    /// `y = T x` by direct O(n^2) summation (reference use only).
    pub fn matvec_direct(&self, x: &[C64]) -> Result<Vec<C64>> {
        if x.len() != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                got: x.len(),
            });
        }
        Ok((0..self.n)
            .map(|j| (0..self.n).map(|k| self.entry(j, k) * x[k]).sum())
            .collect())
    }

    /// First column of the circulant projection: the averages along the
    /// cyclic diagonals, `((n-k) t_k + k t_{k-n}) / n`.
    pub fn cyclic_average(&self) -> Vec<C64> {
        let n = self.n as f64;
        (0..self.n)
            .map(|k| {
                let wrap = if k == 0 { ZERO } else { self.row[self.n - k] };
                ((n - k as f64) * self.col[k] + (k as f64) * wrap) / n
            })
            .collect()
    }
}

/// Rank-two generators of `Z T - T Z`.
///
/// The commutator vanishes except on row 0 (entries `t_{n-1-k} - t_{-k-1}`)
/// and column `n-1` (entries `t_{j-n} - t_j`), so
/// `G = [e_0, b]`, `H = [conj(a), e_{n-1}]`.
pub fn toeplitz_generators(t: &ToeplitzOperator) -> DisplacementGenerators {
    let n = t.n();
    let mut g = Mat::zeros(n, 2);
    let mut h = Mat::zeros(n, 2);
    g[(0, 0)] = C64::new(1.0, 0.0);
    for k in 0..n - 1 {
        let a = t.t((n - 1 - k) as isize) - t.t(-(k as isize) - 1);
        h[(k, 0)] = a.conj();
    }
    for j in 1..n {
        g[(j, 1)] = t.t(j as isize - n as isize) - t.t(j as isize);
    }
    h[(n - 1, 1)] = C64::new(1.0, 0.0);
    DisplacementGenerators { g, h }
}

/// Dense matrix with guard `n <= guard`.
pub fn dense_toeplitz_guarded(t: &ToeplitzOperator, guard: usize) -> Result<Mat> {
    if t.n() > guard {
        return Err(Error::SizeGuard { n: t.n(), guard });
    }
    Ok(Mat::from_fn(t.n(), t.n(), |j, k| t.entry(j, k)))
}

pub fn dense_toeplitz(t: &ToeplitzOperator) -> Result<Mat> {
    dense_toeplitz_guarded(t, DEFAULT_DENSE_GUARD)
}

/// Dense unit circulant shift `Z` (ones on the subdiagonal and at `(0, n-1)`).
pub fn shift_matrix(n: usize) -> Mat {
    Mat::from_fn(n, n, |j, k| {
        if j == (k + 1) % n {
            C64::new(1.0, 0.0)
        } else {
            ZERO
        }
    })
}

/// On-disk JSON layout: `{"n": int, "col": [[re, im], ...], "row": [[re, im], ...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ToeplitzJson {
    pub n: usize,
    pub col: Vec<[f64; 2]>,
    pub row: Vec<[f64; 2]>,
}

pub fn pairs_to_complex(v: &[[f64; 2]]) -> Vec<C64> {
    v.iter().map(|p| C64::new(p[0], p[1])).collect()
}

pub fn complex_to_pairs(v: &[C64]) -> Vec<[f64; 2]> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

impl TryFrom<ToeplitzJson> for ToeplitzOperator {
    type Error = Error;

    fn try_from(j: ToeplitzJson) -> Result<Self> {
        if j.col.len() != j.n || j.row.len() != j.n {
            return Err(Error::InvalidSize(format!(
                "declared n = {} but col has {} and row has {} entries",
                j.n,
                j.col.len(),
                j.row.len()
            )));
        }
        make_toeplitz(pairs_to_complex(&j.col), pairs_to_complex(&j.row))
    }
}

impl From<&ToeplitzOperator> for ToeplitzJson {
    fn from(t: &ToeplitzOperator) -> Self {
        ToeplitzJson {
            n: t.n(),
            col: complex_to_pairs(t.col()),
            row: complex_to_pairs(t.row()),
        }
    }
}

/// Toeplitz matrix with entries drawn uniformly from `[0, 1]` (real).
pub fn random_toeplitz(n: usize, seed: u64) -> Result<ToeplitzOperator> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let col: Vec<C64> = (0..n).map(|_| C64::new(rng.gen(), 0.0)).collect();
    let mut row: Vec<C64> = (0..n).map(|_| C64::new(rng.gen(), 0.0)).collect();
    if n > 0 {
        row[0] = col[0];
    }
    make_toeplitz(col, row)
}

/// Vector with entries drawn uniformly from `[0, 1]` (real).
pub fn random_vector(n: usize, seed: u64) -> Vec<C64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| C64::new(rng.gen(), 0.0)).collect()
}
