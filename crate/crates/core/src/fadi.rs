//! Factored ADI for `D_J X - X D_K = G_J H_K^*` with diagonal `D_J`, `D_K`.
//!
//! Every fADI factor is a row scaling of the generators:
//! `Z = [diag(c_1) G_J, .., diag(c_k) G_J]` and likewise for `W`, so the
//! recurrences are carried out on the scalar coefficients `c_j`.

use crate::dense::{Mat, C64};
use crate::error::{Error, Result};
use crate::zolotarev::ShiftSchedule;

const COLLISION_TOL: f64 = 1e-14;

/// `D_J X - X D_K = G_J H_K^*`.
#[derive(Debug, Clone)]
pub struct DiagonalSylvester {
    pub dj: Vec<C64>,
    pub dk: Vec<C64>,
    pub gj: Mat,
    pub hk: Mat,
}

/// `X ~ Z W^*`.
#[derive(Debug, Clone)]
pub struct LowRankFactors {
    pub z: Mat,
    pub w: Mat,
}

impl LowRankFactors {
    pub fn rank(&self) -> usize {
        self.z.ncols()
    }

    pub fn to_dense(&self) -> Mat {
        &self.z * self.w.adjoint()
    }
}

fn check_gap(d: C64, s: C64, side: &'static str, index: usize) -> Result<()> {
    if (d - s).norm() <= COLLISION_TOL * (d.norm() + s.norm()).max(1.0) {
        return Err(Error::ShiftCollision { side, index });
    }
    Ok(())
}

/// Row coefficients `c_j(i)`, `|J| x k`:
/// `c_1 = (nu_1 - tau_1) / (d - nu_1)`,
/// `c_{j+1} = c_j (nu_{j+1} - tau_{j+1}) / (nu_j - tau_j) * (d - tau_j) / (d - nu_{j+1})`.
///
/// The factor `1 / (nu_j - tau_j)` keeps each block `Z_j W_j^*` scaled by a
/// single `(nu_j - tau_j)`; without it the blocks accumulate products of
/// shift gaps and the iteration does not converge to `X`.
pub fn fadi_row_coefficients(dj: &[C64], shifts: &ShiftSchedule) -> Result<Mat> {
    let k = shifts.k();
    let (tau, nu) = (&shifts.taus, &shifts.nus);
    let mut c = Mat::zeros(dj.len(), k);
    for (i, &d) in dj.iter().enumerate() {
        for j in 0..k {
            check_gap(d, nu[j], "pole", j)?;
        }
        let mut cur = (nu[0] - tau[0]) / (d - nu[0]);
        c[(i, 0)] = cur;
        for j in 1..k {
            cur *= (nu[j] - tau[j]) / (nu[j - 1] - tau[j - 1]) * (d - tau[j - 1]) / (d - nu[j]);
            c[(i, j)] = cur;
        }
    }
    Ok(c)
}

/// Column coefficients, `|K| x k`:
/// `e_1 = 1 / conj(d - tau_1)`, `e_{j+1} = e_j conj(d - nu_j) / conj(d - tau_{j+1})`.
pub fn fadi_col_coefficients(dk: &[C64], shifts: &ShiftSchedule) -> Result<Mat> {
    let k = shifts.k();
    let (tau, nu) = (&shifts.taus, &shifts.nus);
    let mut e = Mat::zeros(dk.len(), k);
    for (i, &d) in dk.iter().enumerate() {
        for j in 0..k {
            check_gap(d, tau[j], "zero", j)?;
        }
        let mut cur = (d - tau[0]).conj().inv();
        e[(i, 0)] = cur;
        for j in 1..k {
            cur *= ((d - nu[j - 1]) / (d - tau[j])).conj();
            e[(i, j)] = cur;
        }
    }
    Ok(e)
}

/// `[diag(c_1) A, .., diag(c_k) A]`.
pub fn expand_coefficients(coef: &Mat, a: &Mat) -> Mat {
    assert_eq!(coef.nrows(), a.nrows());
    let (rows, rho) = a.shape();
    let k = coef.ncols();
    Mat::from_fn(rows, k * rho, |i, col| coef[(i, col / rho)] * a[(i, col % rho)])
}

/// Row-space factor `Z` alone; cost independent of `|K|`.
pub fn fadi_row_factor(dj: &[C64], gj: &Mat, shifts: &ShiftSchedule) -> Result<Mat> {
    if gj.nrows() != dj.len() {
        return Err(Error::LengthMismatch {
            expected: dj.len(),
            got: gj.nrows(),
        });
    }
    Ok(expand_coefficients(&fadi_row_coefficients(dj, shifts)?, gj))
}

/// Column-space factor `W` alone.
pub fn fadi_col_factor(dk: &[C64], hk: &Mat, shifts: &ShiftSchedule) -> Result<Mat> {
    if hk.nrows() != dk.len() {
        return Err(Error::LengthMismatch {
            expected: dk.len(),
            got: hk.nrows(),
        });
    }
    Ok(expand_coefficients(&fadi_col_coefficients(dk, shifts)?, hk))
}

/// Two-sided fADI: `X^{(k)} = Z W^*`.
pub fn fadi(sys: &DiagonalSylvester, shifts: &ShiftSchedule) -> Result<LowRankFactors> {
    if sys.gj.ncols() != sys.hk.ncols() {
        return Err(Error::InvalidSize(format!(
            "generator widths differ: {} vs {}",
            sys.gj.ncols(),
            sys.hk.ncols()
        )));
    }
    Ok(LowRankFactors {
        z: fadi_row_factor(&sys.dj, &sys.gj, shifts)?,
        w: fadi_col_factor(&sys.dk, &sys.hk, shifts)?,
    })
}

/// Exact solution `x_ij = (G H^*)_ij / (dj_i - dk_j)`.
pub fn sylvester_solution(sys: &DiagonalSylvester) -> Mat {
    let gh = &sys.gj * sys.hk.adjoint();
    Mat::from_fn(sys.dj.len(), sys.dk.len(), |i, j| gh[(i, j)] / (sys.dj[i] - sys.dk[j]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::fro;
    use crate::zolotarev::{fadi_iteration_count, zolotarev_bound, zolotarev_shifts};
    use crate::hierarchy::CyclicRange;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn rand_mat(r: usize, c: usize, rng: &mut ChaCha8Rng) -> Mat {
        Mat::from_fn(r, c, |_, _| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
    }

    fn unit(t: f64) -> C64 {
        C64::cis(t)
    }

    fn node_block(n: usize, rows: CyclicRange, cols: CyclicRange, rho: usize, seed: u64) -> DiagonalSylvester {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let node = |j: usize| unit(2.0 * PI * j as f64 / n as f64);
        DiagonalSylvester {
            dj: rows.indices(n).into_iter().map(node).collect(),
            dk: cols.indices(n).into_iter().map(node).collect(),
            gj: rand_mat(rows.len, rho, &mut rng),
            hk: rand_mat(cols.len, rho, &mut rng),
        }
    }

    #[test]
    fn one_by_one_exact() {
        let (d1, d2) = (unit(0.3), unit(2.0));
        let sys = DiagonalSylvester {
            dj: vec![d1],
            dk: vec![d2],
            gj: Mat::from_element(1, 1, C64::new(0.7, 0.2)),
            hk: Mat::from_element(1, 1, C64::new(-0.1, 1.3)),
        };
        let shifts = ShiftSchedule {
            taus: vec![d1],
            nus: vec![unit(2.5)],
            rotation: C64::new(1.0, 0.0),
        };
        let f = fadi(&sys, &shifts).unwrap();
        let x = sylvester_solution(&sys);
        assert!((f.to_dense()[(0, 0)] - x[(0, 0)]).norm() < 1e-15 * x[(0, 0)].norm());
    }

    #[test]
    fn zeros_on_all_row_nodes_are_exact() {
        let n = 64;
        let sys = node_block(n, CyclicRange::new(8, 12), CyclicRange::new(30, 20), 2, 1);
        let shifts = ShiftSchedule {
            taus: sys.dj.clone(),
            nus: (0..12).map(|j| unit(2.0 * PI * (40.0 + 0.5 * j as f64) / n as f64)).collect(),
            rotation: C64::new(1.0, 0.0),
        };
        let f = fadi(&sys, &shifts).unwrap();
        let x = sylvester_solution(&sys);
        assert!(fro(&(f.to_dense() - &x)) <= 1e-12 * fro(&x));
        assert_eq!(f.rank(), 24);
    }

    #[test]
    fn collision_reported() {
        let sys = node_block(16, CyclicRange::new(0, 4), CyclicRange::new(8, 4), 1, 2);
        let shifts = ShiftSchedule {
            taus: vec![unit(0.1), sys.dk[2]],
            nus: vec![unit(3.0), unit(3.1)],
            rotation: C64::new(1.0, 0.0),
        };
        assert_eq!(
            fadi(&sys, &shifts).unwrap_err(),
            Error::ShiftCollision { side: "zero", index: 1 }
        );
        let shifts = ShiftSchedule {
            taus: vec![unit(3.0)],
            nus: vec![sys.dj[1]],
            rotation: C64::new(1.0, 0.0),
        };
        assert!(matches!(
            fadi_row_factor(&sys.dj, &sys.gj, &shifts),
            Err(Error::ShiftCollision { side: "pole", index: 0 })
        ));
    }

    #[test]
    fn row_factor_matches_full() {
        let n = 256;
        let rows = CyclicRange::new(64, 64);
        let cols = CyclicRange::new(0, 64);
        let sys = node_block(n, rows, cols, 2, 3);
        let shifts = zolotarev_shifts(n, rows, cols, 1, 5).unwrap();
        let f = fadi(&sys, &shifts).unwrap();
        let z = fadi_row_factor(&sys.dj, &sys.gj, &shifts).unwrap();
        assert_eq!(z, f.z);
        assert_eq!(z.ncols(), 10);
        // k = 1 is a single diagonal solve
        let s1 = zolotarev_shifts(n, rows, cols, 1, 1).unwrap();
        let z1 = fadi_row_factor(&sys.dj, &sys.gj, &s1).unwrap();
        for i in 0..64 {
            for r in 0..2 {
                let e = (s1.nus[0] - s1.taus[0]) / (sys.dj[i] - s1.nus[0]) * sys.gj[(i, r)];
                assert_eq!(z1[(i, r)], e);
            }
        }
    }

    #[test]
    fn weak_block_meets_bound() {
        let n = 1024;
        let rows = CyclicRange::new(128, 128);
        let cols = CyclicRange::new(0, 128);
        let sys = node_block(n, rows, cols, 2, 4);
        let x = sylvester_solution(&sys);
        let k = fadi_iteration_count(128, 1e-8).unwrap();
        let shifts = zolotarev_shifts(n, rows, cols, 1, k).unwrap();
        let f = fadi(&sys, &shifts).unwrap();
        let err = crate::oracle::spectral_norm(&(f.to_dense() - &x), 60);
        let nx = crate::oracle::spectral_norm(&x, 60);
        assert!(err <= zolotarev_bound(128, 1, k) * nx);
    }

    #[test]
    fn swapped_roles_give_adjoint() {
        let n = 256;
        let rows = CyclicRange::new(100, 32);
        let cols = CyclicRange::new(40, 32);
        let sys = node_block(n, rows, cols, 2, 5);
        let x = sylvester_solution(&sys);
        let k = 6;
        let f = fadi(&sys, &zolotarev_shifts(n, rows, cols, 1, k).unwrap()).unwrap();
        // X^* solves conj(D_K) Y - Y conj(D_J) = (-H) G^*; the mirrored
        // schedule swaps and conjugates zeros and poles.
        let conj = |v: &[C64]| v.iter().map(|z| z.conj()).collect::<Vec<_>>();
        let adj = DiagonalSylvester {
            dj: conj(&sys.dk),
            dk: conj(&sys.dj),
            gj: -sys.hk.clone(),
            hk: sys.gj.clone(),
        };
        let s = zolotarev_shifts(n, rows, cols, 1, k).unwrap();
        let mirrored = ShiftSchedule {
            taus: conj(&s.nus),
            nus: conj(&s.taus),
            rotation: s.rotation.conj(),
        };
        let g = fadi(&adj, &mirrored).unwrap();
        let e1 = fro(&(f.to_dense() - &x)) / fro(&x);
        let e2 = fro(&(g.to_dense() - x.adjoint())) / fro(&x);
        assert!(e1 < 1e-2);
        assert!((e1 - e2).abs() <= 1e-10);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]
        #[test]
        fn error_operator_identity(
            seed in 0u64..10_000,
            nj in 2usize..48,
            nk in 2usize..48,
            k in 1usize..7,
        ) {
            let n = 128;
            prop_assume!(nj + nk <= n - 2);
            let rows = CyclicRange::new(nk + 1, nj);
            let cols = CyclicRange::new(0, nk);
            let sys = node_block(n, rows, cols, 2, seed);
            let sep = 1;
            let shifts = zolotarev_shifts(n, rows, cols, sep, k).unwrap();
            let f = fadi(&sys, &shifts).unwrap();
            let x = sylvester_solution(&sys);
            let rj: Vec<C64> = sys.dj.iter().map(|&d| shifts.rational(d)).collect();
            // 1 / r(d) evaluated directly; poles may sit on column nodes
            let rk_inv: Vec<C64> = sys
                .dk
                .iter()
                .map(|&d| {
                    shifts.taus.iter().zip(&shifts.nus).fold(C64::new(1.0, 0.0), |a, (t, nu)| a * (d - nu) / (d - t))
                })
                .collect();
            let predicted = Mat::from_fn(nj, nk, |i, j| rj[i] * x[(i, j)] * rk_inv[j]);
            let res = fro(&(&x - f.to_dense() - &predicted));
            prop_assert!(res <= 1e-11 * fro(&x), "{} vs {}", res, fro(&x));
        }
    }
}
