//! Arc geometry of `(m, sep)` blocks, optimal Zolotarev shifts for fADI and
//! the a priori rank and error bounds they certify.

pub mod elliptic;
pub mod mobius;

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use crate::dense::C64;
use crate::error::{Error, Result};
use crate::hierarchy::CyclicRange;

pub use elliptic::{elliptic_k_from_complement, jacobi_dn, jacobi_sncndn};
pub use mobius::MobiusMap;

/// Geometry of the two arcs `A_K = {e^{it} : |t| <= alpha}` and
/// `A_J = {e^{it} : beta <= t <= 2 pi - beta}` in the canonical frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArcGeometry {
    pub n: usize,
    pub m: usize,
    pub sep: usize,
    pub alpha: f64,
    pub beta: f64,
    /// `tan(alpha/2) / tan(beta/2)`.
    pub kappa: f64,
    /// `1 - kappa`, evaluated without cancellation.
    pub one_minus_kappa: f64,
    /// Cross-ratio `((1 + kappa) / (1 - kappa))^2`.
    pub gamma: f64,
    /// `-1 + 2 gamma + 2 sqrt(gamma^2 - gamma)`.
    pub delta: f64,
    /// `1 / gamma^2`.
    pub comp_param: f64,
    /// Complementary modulus `1 / delta` of the interval problem on
    /// `[-delta, -1] u [1, delta]`.
    pub kc: f64,
    /// Relative gap `(1/kappa - 1) / 2`.
    pub rel_gap: f64,
}

pub fn arc_geometry(n: usize, m: usize, sep: usize) -> Result<ArcGeometry> {
    if m < 2 || sep < 1 || n < 2 * (m + sep - 1) {
        return Err(Error::GeometryViolation(format!(
            "need m >= 2, sep >= 1, n >= 2(m + sep - 1); got n = {n}, m = {m}, sep = {sep}"
        )));
    }
    let nf = n as f64;
    let alpha = PI * (m - 1) as f64 / nf;
    let beta = PI * (m - 1 + 2 * sep) as f64 / nf;
    let ca = (0.5 * alpha).cos();
    let sb = (0.5 * beta).sin();
    let s_minus = (0.5 * (beta - alpha)).sin();
    let s_plus = (0.5 * (beta + alpha)).sin();
    let kappa = (0.5 * alpha).tan() / (0.5 * beta).tan();
    let one_minus_kappa = s_minus / (ca * sb);
    let ratio = s_minus / s_plus;
    let gamma = (s_plus / s_minus).powi(2);
    // sqrt(delta) = (s+ + sqrt(sin(alpha) sin(beta))) / s-
    let root = (alpha.sin() * beta.sin()).sqrt();
    let sqrt_delta = (s_plus + root) / s_minus;
    Ok(ArcGeometry {
        n,
        m,
        sep,
        alpha,
        beta,
        kappa,
        one_minus_kappa,
        gamma,
        delta: sqrt_delta * sqrt_delta,
        comp_param: ratio.powi(4),
        kc: (s_minus / (s_plus + root)).powi(2),
        rel_gap: 0.5 * one_minus_kappa / kappa,
    })
}

/// Maps `1 -> e^{i alpha}`, `delta -> e^{-i alpha}`, `-1 -> e^{i beta}`, so
/// that `[1, delta]` lands on `A_K` and `[-delta, -1]` on `A_J`. The fourth
/// correspondence `-delta -> e^{-i beta}` is checked.
pub fn build_t1(g: &ArcGeometry) -> Result<MobiusMap> {
    let d = g.delta;
    let r = |x: f64| C64::new(x, 0.0);
    let m = MobiusMap::from_three_points(
        [r(1.0), r(d), r(-1.0)],
        [C64::cis(g.alpha), C64::cis(-g.alpha), C64::cis(g.beta)],
    )?;
    let residual = (m.apply(r(-d)) - C64::cis(-g.beta)).norm();
    if !(residual <= 1e-10) {
        return Err(Error::MapValidation { residual });
    }
    Ok(m)
}

/// Zeros and poles of the Zolotarev function in the canonical frame:
/// zeros on `A_J`, poles on `A_K`.
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalShifts {
    pub taus: Vec<C64>,
    pub nus: Vec<C64>,
}

fn compute_canonical(g: &ArcGeometry, k: usize, kc: f64) -> Result<CanonicalShifts> {
    let t1 = build_t1(g)?;
    let kk = elliptic_k_from_complement(kc)?;
    let mut taus = Vec::with_capacity(k);
    let mut nus = Vec::with_capacity(k);
    for j in 1..=k {
        let u = (2 * j - 1) as f64 / (2 * k) as f64 * kk;
        let x = g.delta * jacobi_dn(u, kc)?;
        let tau = t1.apply(C64::new(-x, 0.0));
        let nu = t1.apply(C64::new(x, 0.0));
        taus.push(tau / tau.norm());
        nus.push(nu / nu.norm());
    }
    Ok(CanonicalShifts { taus, nus })
}

type ShiftKey = (usize, usize, usize, usize);

fn cache() -> &'static Mutex<HashMap<ShiftKey, Arc<CanonicalShifts>>> {
    static CACHE: OnceLock<Mutex<HashMap<ShiftKey, Arc<CanonicalShifts>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Canonical shifts for `(n, m, sep, k)`, memoized.
pub fn canonical_shifts(n: usize, m: usize, sep: usize, k: usize) -> Result<Arc<CanonicalShifts>> {
    let k = clamp_k(k);
    let key = (n, m, sep, k);
    if let Some(s) = cache().lock().unwrap().get(&key) {
        return Ok(s.clone());
    }
    let g = arc_geometry(n, m, sep)?;
    let s = Arc::new(compute_canonical(&g, k, g.kc)?);
    cache().lock().unwrap().insert(key, s.clone());
    Ok(s)
}

/// Canonical shifts computed with an explicitly supplied complementary
/// modulus (used to compare modulus conventions).
pub fn canonical_shifts_with_modulus(g: &ArcGeometry, k: usize, kc: f64) -> Result<CanonicalShifts> {
    compute_canonical(g, clamp_k(k), kc)
}

/// Shifts for one block, in the block's actual frame.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftSchedule {
    /// Zeros (placed near the row nodes).
    pub taus: Vec<C64>,
    /// Poles (placed near the column nodes).
    pub nus: Vec<C64>,
    /// Unit rotation from the canonical frame.
    pub rotation: C64,
}

impl ShiftSchedule {
    pub fn k(&self) -> usize {
        self.taus.len()
    }

    /// `r_k(z) = prod (z - tau_j) / (z - nu_j)`.
    pub fn rational(&self, z: C64) -> C64 {
        self.taus
            .iter()
            .zip(&self.nus)
            .fold(C64::new(1.0, 0.0), |acc, (t, nu)| acc * (z - t) / (z - nu))
    }
}

fn clamp_k(k: usize) -> usize {
    if k == 0 {
        log::warn!("shift count 0 raised to 1");
    }
    k.max(1)
}

/// Shifts for the block `C(rows, cols)` where the shorter range is treated
/// as the contiguous side of width `m` and the longer one must keep cyclic
/// distance at least `sep` from it. Zeros always sit near the rows and poles
/// near the columns.
pub fn zolotarev_shifts(
    n: usize,
    rows: CyclicRange,
    cols: CyclicRange,
    sep: usize,
    k: usize,
) -> Result<ShiftSchedule> {
    let rows_small = rows.len < cols.len;
    let (small, big) = if rows_small { (rows, cols) } else { (cols, rows) };
    let m = small.len;
    let offset = (big.start + n - small.start % n) % n;
    if big.len == 0 || offset < m + sep - 1 || offset + big.len > n + 1 - sep {
        return Err(Error::GeometryViolation(format!(
            "ranges {rows:?} and {cols:?} are not separated by {sep} on Z_{n}"
        )));
    }
    let canon = canonical_shifts(n, m, sep, k)?;
    let s = ((2 * small.start + m - 1) % (2 * n)) as f64;
    let rotation = C64::cis(PI * s / n as f64);
    let rot = |v: &[C64]| v.iter().map(|z| z * rotation).collect::<Vec<_>>();
    let (taus, nus) = if rows_small {
        (rot(&canon.nus), rot(&canon.taus))
    } else {
        (rot(&canon.taus), rot(&canon.nus))
    };
    Ok(ShiftSchedule {
        taus,
        nus,
        rotation,
    })
}

/// `max_{A_J} |r| / min_{A_K} |r|` sampled at `samples` points per arc in
/// the canonical frame.
pub fn sampled_ratio(g: &ArcGeometry, shifts: &CanonicalShifts, samples: usize) -> f64 {
    let r = |z: C64| {
        shifts
            .taus
            .iter()
            .zip(&shifts.nus)
            .fold(1.0, |acc, (t, nu)| acc * (z - t).norm() / (z - nu).norm())
    };
    let mut sup = 0.0f64;
    let mut inf = f64::INFINITY;
    let steps = samples.max(2) - 1;
    for i in 0..=steps {
        let s = i as f64 / steps as f64;
        let tj = g.beta + s * (2.0 * PI - 2.0 * g.beta);
        let tk = -g.alpha + s * 2.0 * g.alpha;
        sup = sup.max(r(C64::cis(tj)));
        inf = inf.min(r(C64::cis(tk)));
    }
    sup / inf
}

/// Clamps a tolerance into `[1e-15, 0.5]`; values outside `(0, 1)` are errors.
pub fn clamp_eps(eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Domain(format!("tolerance must lie in (0, 1), got {eps}")));
    }
    let c = eps.clamp(1e-15, 0.5);
    if c != eps {
        log::warn!("tolerance {eps:e} clamped to {c:e}");
    }
    Ok(c)
}

/// `xi = exp(pi^2 / (2 log(4 (m + sep - 1) / sep)))`.
pub fn xi(m: usize, sep: usize) -> f64 {
    let frac = (m + sep - 1) as f64 / sep as f64;
    (PI * PI / (2.0 * (4.0 * frac).ln())).exp()
}

/// `4 xi^{-k}`.
pub fn zolotarev_bound(m: usize, sep: usize, k: usize) -> f64 {
    4.0 * xi(m, sep).powi(-(k as i32))
}

/// `4 xi^{-k}` with `(m + sep - 1) / sep` replaced by `(1 + kappa) / (1 - kappa)`.
pub fn zolotarev_bound_refined(g: &ArcGeometry, k: usize) -> f64 {
    let frac = (2.0 - g.one_minus_kappa) / g.one_minus_kappa;
    let xi = (PI * PI / (2.0 * (4.0 * frac).ln())).exp();
    4.0 * xi.powi(-(k as i32))
}

/// `rho * ceil((2/pi^2) log(4 (m + sep - 1) / sep) log(4/eps))`.
pub fn epsilon_rank_bound(rho: usize, m: usize, sep: usize, eps: f64) -> Result<usize> {
    let eps = clamp_eps(eps)?;
    let frac = (m + sep - 1) as f64 / sep as f64;
    let k = (2.0 / (PI * PI) * (4.0 * frac).ln() * (4.0 / eps).ln()).ceil() as usize;
    Ok(rho * k)
}

/// `ceil(2 pi^-2 log(4m) log(4/eps_v))`, at least 1.
pub fn fadi_iteration_count(m: usize, eps_v: f64) -> Result<usize> {
    let eps_v = clamp_eps(eps_v)?;
    let k = (2.0 / (PI * PI) * (4.0 * m as f64).ln() * (4.0 / eps_v).ln()).ceil() as usize;
    Ok(k.max(1))
}

/// `rho * ceil(2 pi^-2 log(2n) log(4/eps))`.
pub fn hss_rank_bound(rho: usize, n: usize, eps: f64) -> Result<usize> {
    let eps = clamp_eps(eps)?;
    let k = (2.0 / (PI * PI) * (2.0 * n as f64).ln() * (4.0 / eps).ln()).ceil() as usize;
    Ok(rho * k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn smallest_geometry() {
        let g = arc_geometry(8, 2, 1).unwrap();
        assert!((g.alpha - PI / 8.0).abs() < 1e-15);
        assert!((g.beta - 3.0 * PI / 8.0).abs() < 1e-15);
        let kappa = (PI / 16.0).tan() / (3.0 * PI / 16.0).tan();
        assert!((g.kappa - kappa).abs() < 1e-15);
    }

    #[test]
    fn boundary_kappa() {
        // beta = pi - alpha exactly when n = 2(m + sep - 1)
        let g = arc_geometry(64, 9, 24).unwrap();
        assert!((g.beta - (PI - g.alpha)).abs() < 1e-14);
        assert!((g.kappa - (0.5 * g.alpha).tan().powi(2)).abs() < 1e-14);
    }

    #[test]
    fn geometry_violations() {
        assert!(arc_geometry(8, 1, 1).is_err());
        assert!(arc_geometry(8, 2, 0).is_err());
        assert!(arc_geometry(8, 4, 2).is_err());
    }

    #[test]
    fn cross_ratio_forms_agree() {
        let g = arc_geometry(2048, 512, 1).unwrap();
        let via_kappa = ((1.0 + g.kappa) / (1.0 - g.kappa)).powi(2);
        assert!((via_kappa - g.gamma).abs() <= 1e-10 * g.gamma);
        let d = -1.0 + 2.0 * g.gamma + 2.0 * (g.gamma * g.gamma - g.gamma).sqrt();
        assert!((d - g.delta).abs() <= 1e-10 * g.delta);
        assert!((g.comp_param - g.gamma.powi(-2)).abs() <= 1e-12 * g.comp_param);
        let sk = g.kappa.sqrt();
        assert!((g.kc - ((1.0 - sk) / (1.0 + sk)).powi(2)).abs() <= 1e-10 * g.kc);
    }

    #[test]
    fn t1_properties() {
        let g = arc_geometry(2048, 128, 1).unwrap();
        let t1 = build_t1(&g).unwrap();
        // the real axis maps onto the unit circle; 0 lands in the gap between the arcs
        let z0 = t1.apply(C64::new(0.0, 0.0));
        assert!((z0.norm() - 1.0).abs() < 1e-12);
        assert!(z0.arg().abs() > g.alpha && z0.arg().abs() < g.beta);
        assert!((t1.apply(C64::new(0.0, 1.0)).norm() - 1.0).abs() > 1e-3);
        let inv = t1.inverse();
        for i in 0..20 {
            let z = C64::new(i as f64 * 0.37 - 3.0, 0.2 * i as f64 - 1.0);
            assert!((t1.apply(inv.apply(z)) - z).norm() < 1e-12 * (1.0 + z.norm()));
        }
    }

    #[test]
    fn shifts_unit_modulus_and_interlaced() {
        let g = arc_geometry(2048, 128, 1).unwrap();
        let s = canonical_shifts(2048, 128, 1, 10).unwrap();
        for (t, nu) in s.taus.iter().zip(&s.nus) {
            assert!((t.norm() - 1.0).abs() < 1e-12);
            assert!((nu.norm() - 1.0).abs() < 1e-12);
            // zeros on A_J, poles on A_K
            assert!(t.arg().abs() >= g.beta - 1e-12);
            assert!(nu.arg().abs() <= g.alpha + 1e-12);
        }
    }

    #[test]
    fn single_shift_pair() {
        let g = arc_geometry(64, 8, 1).unwrap();
        let s = canonical_shifts(64, 8, 1, 1).unwrap();
        let t1 = build_t1(&g).unwrap();
        let kk = elliptic_k_from_complement(g.kc).unwrap();
        let x = g.delta * jacobi_dn(0.5 * kk, g.kc).unwrap();
        let tau = t1.apply(C64::new(-x, 0.0));
        assert!((s.taus[0] - tau / tau.norm()).norm() < 1e-14);
        // symmetric arcs: the single pair sits at the arc centers
        assert!((s.taus[0] + 1.0).norm() < 1e-12);
        assert!((s.nus[0] - 1.0).norm() < 1e-12);
    }

    #[test]
    fn interval_modulus_meets_bound() {
        // The complementary modulus of the symmetric interval problem is
        // 1/delta; using 1/gamma instead misses the bound by orders of magnitude.
        for (n, m, sep, k) in [(2048, 128, 1, 10), (2048, 512, 1, 10), (2048, 128, 129, 5), (1024, 300, 7, 12)] {
            let g = arc_geometry(n, m, sep).unwrap();
            let bound = zolotarev_bound(m, sep, k);
            let good = sampled_ratio(&g, &canonical_shifts_with_modulus(&g, k, g.kc).unwrap(), 4000);
            let bad = sampled_ratio(&g, &canonical_shifts_with_modulus(&g, k, 1.0 / g.gamma).unwrap(), 4000);
            assert!(good <= bound, "{n} {m} {sep} {k}: {good:e} > {bound:e}");
            assert!(bad > 10.0 * bound);
        }
    }

    #[test]
    fn certificate_weak_block() {
        let g = arc_geometry(2048, 128, 1).unwrap();
        let s = canonical_shifts(2048, 128, 1, 10).unwrap();
        assert!(sampled_ratio(&g, &s, 2000) <= zolotarev_bound(128, 1, 10));
    }

    #[test]
    fn rotated_schedule_targets_block() {
        let n = 256;
        let cols = CyclicRange::new(64, 32);
        let rows = CyclicRange::new(96, 32);
        let s = zolotarev_shifts(n, rows, cols, 1, 6).unwrap();
        // |r| small on the row nodes, large on the column nodes
        let node = |j: usize| C64::cis(2.0 * PI * j as f64 / n as f64);
        let sup = rows.indices(n).into_iter().map(|j| s.rational(node(j)).norm()).fold(0.0, f64::max);
        let inf = cols
            .indices(n)
            .into_iter()
            .map(|j| s.rational(node(j)).norm())
            .fold(f64::INFINITY, f64::min);
        assert!(sup / inf <= zolotarev_bound(32, 1, 6));
        // swapped orientation when the rows are the short side
        let rows = CyclicRange::new(200, 16);
        let cols = rows.complement(n);
        let s = zolotarev_shifts(n, rows, cols, 1, 6).unwrap();
        let sup = rows.indices(n).into_iter().map(|j| s.rational(node(j)).norm()).fold(0.0, f64::max);
        let inf = cols
            .indices(n)
            .into_iter()
            .map(|j| s.rational(node(j)).norm())
            .fold(f64::INFINITY, f64::min);
        assert!(sup / inf <= zolotarev_bound(16, 1, 6));
    }

    #[test]
    fn schedule_rejects_overlap() {
        let r = CyclicRange::new(0, 16);
        assert!(zolotarev_shifts(64, r, CyclicRange::new(8, 16), 1, 3).is_err());
        assert!(zolotarev_shifts(64, r, CyclicRange::new(16, 16), 2, 3).is_err());
    }

    #[test]
    fn bound_values() {
        assert_eq!(zolotarev_bound(512, 1, 0), 4.0);
        let expect = 4.0 * (-20.0 * PI * PI / (2.0 * 2048f64.ln())).exp();
        assert!((zolotarev_bound(512, 1, 20) - expect).abs() <= 1e-14 * expect);
        let k = (2.0 / (PI * PI) * 2048f64.ln() * 4e8f64.ln()).ceil() as usize;
        assert_eq!(epsilon_rank_bound(2, 512, 1, 1e-8).unwrap(), 2 * k);
        let k = (2.0 / (PI * PI) * 4096f64.ln() * 4e9f64.ln()).ceil() as usize;
        assert_eq!(fadi_iteration_count(1024, 1e-9).unwrap(), k);
        let k = (2.0 / (PI * PI) * 8192f64.ln() * 4e6f64.ln()).ceil() as usize;
        assert_eq!(hss_rank_bound(2, 4096, 1e-6).unwrap(), 2 * k);
        assert!(hss_rank_bound(2, 4, 0.4).unwrap() >= 2);
        assert!(epsilon_rank_bound(2, 64, 1, 0.999).unwrap() >= 2);
    }

    #[test]
    fn tolerance_domain() {
        assert!(clamp_eps(0.0).is_err());
        assert!(clamp_eps(1.0).is_err());
        assert!(clamp_eps(-1e-3).is_err());
        assert_eq!(clamp_eps(1e-20).unwrap(), 1e-15);
        assert_eq!(clamp_eps(0.7).unwrap(), 0.5);
        assert!(fadi_iteration_count(8, 2.0).is_err());
    }

    proptest! {
        #[test]
        fn refined_bound_is_tighter(lg_n in 4usize..14, mf in 0.01f64..0.49, sf in 0.0f64..1.0, k in 0usize..40) {
            let n = 1usize << lg_n;
            let m = ((mf * n as f64) as usize).max(2);
            let max_sep = n / 2 + 1 - m;
            prop_assume!(max_sep >= 1);
            let sep = 1 + (sf * (max_sep - 1) as f64) as usize;
            let g = arc_geometry(n, m, sep).unwrap();
            prop_assert!(zolotarev_bound_refined(&g, k) <= zolotarev_bound(m, sep, k) * (1.0 + 1e-12));
            let via_sine = g.gamma;
            let via_kappa = ((1.0 + g.kappa) / g.one_minus_kappa).powi(2);
            prop_assert!((via_sine - via_kappa).abs() <= 1e-10 * via_sine);
            prop_assert!(g.delta > 1.0);
        }

        #[test]
        fn rank_bound_monotone(m in 2usize..4096, sep in 1usize..512, le in 1.0f64..14.0) {
            let eps = 10f64.powf(-le);
            let b = epsilon_rank_bound(2, m, sep, eps).unwrap();
            prop_assert!(epsilon_rank_bound(2, m, sep + 1, eps).unwrap() <= b);
            prop_assert!(epsilon_rank_bound(2, m + 1, sep, eps).unwrap() >= b);
            prop_assert!(epsilon_rank_bound(2, m, sep, eps / 2.0).unwrap() >= b);
        }

        #[test]
        fn hss_bound_linear_in_rho(lg_n in 2usize..20, le in 1.0f64..14.0) {
            let n = 1usize << lg_n;
            let eps = 10f64.powf(-le);
            prop_assert_eq!(2 * hss_rank_bound(1, n, eps).unwrap(), hss_rank_bound(2, n, eps).unwrap());
        }
    }
}
