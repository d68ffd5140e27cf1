//! Small dense kernels shared by the compression and factorization code:
//! Householder QR (optionally column pivoted and truncated), triangular
//! solves and a few matrix helpers. Matrices are column-major `DMatrix`.

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type C64 = Complex64;
pub type Mat = DMatrix<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// Householder QR factorization `A P = Q R`.
///
/// `r` holds the first `rank` rows of `R` with columns in pivoted order
/// (`perm[j]` is the original column sitting at position `j`). Without
/// pivoting `perm` is the identity.
#[derive(Debug, Clone)]
pub struct Qr {
    rows: usize,
    reflectors: Vec<(Vec<C64>, f64)>,
    pub r: Mat,
    pub perm: Vec<usize>,
    pub rank: usize,
}

/// Builds the reflector `H = I - beta v v^*` with `H x = alpha e_0`.
/// Returns `(v, beta, alpha)`; `beta == 0` means `H = I`.
fn make_reflector(x: &[C64]) -> (Vec<C64>, f64, C64) {
    let norm = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 {
        return (vec![ZERO; x.len()], 0.0, ZERO);
    }
    let x0 = x[0];
    let phase = if x0.norm() == 0.0 { ONE } else { x0 / x0.norm() };
    let alpha = -phase * norm;
    let mut v = x.to_vec();
    v[0] -= alpha;
    let vnorm2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
    if vnorm2 == 0.0 {
        return (v, 0.0, x0);
    }
    (v, 2.0 / vnorm2, alpha)
}

/// Applies `I - beta v v^*` to rows `offset..` of column slice `col`.
#[inline]
fn reflect(col: &mut [C64], offset: usize, v: &[C64], beta: f64) {
    if beta == 0.0 {
        return;
    }
    let seg = &mut col[offset..offset + v.len()];
    let mut dot = ZERO;
    for (vi, ci) in v.iter().zip(seg.iter()) {
        dot += vi.conj() * ci;
    }
    let s = dot * beta;
    for (vi, ci) in v.iter().zip(seg.iter_mut()) {
        *ci -= vi * s;
    }
}

fn factor(a: &Mat, pivot: bool, max_steps: usize, rel_tol: f64) -> Qr {
    let (m, n) = a.shape();
    let mut w = a.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    let steps = max_steps.min(m).min(n);
    let mut reflectors = Vec::with_capacity(steps);
    let mut first_norm = None;
    let mut rank = 0;
    for j in 0..steps {
        if pivot {
            let mut best = j;
            let mut best_norm = -1.0;
            for c in j..n {
                let col = w.column(c);
                let nrm: f64 = col.as_slice()[j..].iter().map(|z| z.norm_sqr()).sum();
                if nrm > best_norm {
                    best_norm = nrm;
                    best = c;
                }
            }
            let best_norm = best_norm.sqrt();
            let reference = *first_norm.get_or_insert(best_norm);
            if best_norm == 0.0 || best_norm <= rel_tol * reference {
                break;
            }
            if best != j {
                w.swap_columns(j, best);
                perm.swap(j, best);
            }
        }
        let (v, beta, alpha) = {
            let col = w.column(j);
            make_reflector(&col.as_slice()[j..])
        };
        {
            let slice = w.as_mut_slice();
            let colj = &mut slice[j * m..(j + 1) * m];
            colj[j] = alpha;
            for z in colj[j + 1..].iter_mut() {
                *z = ZERO;
            }
            for c in j + 1..n {
                let col = &mut slice[c * m..(c + 1) * m];
                reflect(col, j, &v, beta);
            }
        }
        reflectors.push((v, beta));
        rank = j + 1;
    }
    let mut r = Mat::zeros(rank, n);
    for c in 0..n {
        for i in 0..rank.min(c + 1) {
            r[(i, c)] = w[(i, c)];
        }
    }
    Qr {
        rows: m,
        reflectors,
        r,
        perm,
        rank,
    }
}

/// Plain Householder QR of `a` (all `min(m, n)` steps).
pub fn qr(a: &Mat) -> Qr {
    factor(a, false, usize::MAX, 0.0)
}

/// Column-pivoted QR, stopping after `max_rank` steps or once the largest
/// remaining column norm drops to `rel_tol` times the first pivot norm.
pub fn cpqr(a: &Mat, max_rank: usize, rel_tol: f64) -> Qr {
    factor(a, true, max_rank, rel_tol)
}

impl Qr {
    /// `b <- Q^* b`.
    pub fn apply_qh(&self, b: &mut Mat) {
        assert_eq!(b.nrows(), self.rows);
        let m = self.rows;
        let k = b.ncols();
        let slice = b.as_mut_slice();
        for (j, (v, beta)) in self.reflectors.iter().enumerate() {
            for c in 0..k {
                reflect(&mut slice[c * m..(c + 1) * m], j, v, *beta);
            }
        }
    }

    /// `b <- Q b`.
    pub fn apply_q(&self, b: &mut Mat) {
        assert_eq!(b.nrows(), self.rows);
        let m = self.rows;
        let k = b.ncols();
        let slice = b.as_mut_slice();
        for (j, (v, beta)) in self.reflectors.iter().enumerate().rev() {
            for c in 0..k {
                reflect(&mut slice[c * m..(c + 1) * m], j, v, *beta);
            }
        }
    }

    /// First `cols` columns of `Q`.
    pub fn q_thin(&self, cols: usize) -> Mat {
        let mut q = Mat::zeros(self.rows, cols);
        for i in 0..cols.min(self.rows) {
            q[(i, i)] = ONE;
        }
        self.apply_q(&mut q);
        q
    }

    /// The full unitary `Q` (`m x m`).
    pub fn q_full(&self) -> Mat {
        self.q_thin(self.rows)
    }
}

/// Solves `U x = b` for upper-triangular `U` (leading `k x k` block), in place.
pub fn solve_upper_in_place(u: &Mat, b: &mut Mat) {
    let k = u.nrows().min(u.ncols());
    for c in 0..b.ncols() {
        for i in (0..k).rev() {
            let mut s = b[(i, c)];
            for j in i + 1..k {
                s -= u[(i, j)] * b[(j, c)];
            }
            b[(i, c)] = s / u[(i, i)];
        }
    }
}

/// Solves `L x = b` for lower-triangular `L` (leading `k x k` block), in place.
pub fn solve_lower_in_place(l: &Mat, b: &mut Mat) {
    let k = l.nrows().min(l.ncols());
    for c in 0..b.ncols() {
        for i in 0..k {
            let mut s = b[(i, c)];
            for j in 0..i {
                s -= l[(i, j)] * b[(j, c)];
            }
            b[(i, c)] = s / l[(i, i)];
        }
    }
}

/// Copies the rows listed in `rows` out of `a`.
pub fn select_rows(a: &Mat, rows: &[usize]) -> Mat {
    Mat::from_fn(rows.len(), a.ncols(), |i, j| a[(rows[i], j)])
}

/// Frobenius norm.
pub fn fro(a: &Mat) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Euclidean norm of a complex slice.
pub fn norm2(x: &[C64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Vertically stacks two matrices with the same column count.
pub fn vstack(top: &Mat, bottom: &Mat) -> Mat {
    assert_eq!(top.ncols(), bottom.ncols());
    let (a, b) = (top.nrows(), bottom.nrows());
    Mat::from_fn(a + b, top.ncols(), |i, j| {
        if i < a {
            top[(i, j)]
        } else {
            bottom[(i - a, j)]
        }
    })
}

/// Block-diagonal matrix `diag(a, b)`.
pub fn blkdiag(a: &Mat, b: &Mat) -> Mat {
    let mut out = Mat::zeros(a.nrows() + b.nrows(), a.ncols() + b.ncols());
    out.view_mut((0, 0), a.shape()).copy_from(a);
    out.view_mut((a.nrows(), a.ncols()), b.shape()).copy_from(b);
    out
}

/// Scales row `i` of `a` by `d[i]`.
pub fn scale_rows(d: &[C64], a: &Mat) -> Mat {
    assert_eq!(d.len(), a.nrows());
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| d[i] * a[(i, j)])
}
