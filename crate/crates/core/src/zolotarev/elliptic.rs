//! Complete elliptic integral `K` and Jacobi functions `sn, cn, dn`,
//! parameterized by the complementary modulus `kc = sqrt(1 - k^2)` so that
//! moduli extremely close to one never cancel.

use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};

fn check_kc(kc: f64) -> Result<()> {
    if !(kc > 0.0 && kc <= 1.0) || !kc.is_finite() {
        return Err(Error::Domain(format!(
            "complementary modulus must lie in (0, 1], got {kc}"
        )));
    }
    Ok(())
}

fn agm(mut a: f64, mut b: f64) -> f64 {
    for _ in 0..64 {
        let an = 0.5 * (a + b);
        let bn = (a * b).sqrt();
        if (an - bn).abs() <= 1e-17 * an {
            return an;
        }
        a = an;
        b = bn;
    }
    0.5 * (a + b)
}

/// `K(k)` from the complementary modulus: `pi / (2 AGM(1, kc))`.
pub fn elliptic_k_from_complement(kc: f64) -> Result<f64> {
    check_kc(kc)?;
    Ok(FRAC_PI_2 / agm(1.0, kc))
}

/// Descending Landen / AGM evaluation, accurate for `0 <= u <= K/2`.
fn sncndn_core(u: f64, kc: f64) -> (f64, f64, f64) {
    const MAX: usize = 16;
    let mut em = [0.0; MAX];
    let mut en = [0.0; MAX];
    let mut emc = kc * kc;
    let mut a = 1.0;
    let mut dn = 1.0;
    let mut c = 1.0;
    let mut l = 0;
    for i in 0..MAX {
        l = i;
        em[i] = a;
        emc = emc.sqrt();
        en[i] = emc;
        c = 0.5 * (a + emc);
        if (a - emc).abs() <= 1e-16 * a {
            break;
        }
        emc *= a;
        a = c;
    }
    let uu = u * c;
    let mut sn = uu.sin();
    let mut cn = uu.cos();
    if sn != 0.0 {
        let mut a = cn / sn;
        c *= a;
        for ii in (0..=l).rev() {
            let b = em[ii];
            a *= c;
            c *= dn;
            dn = (en[ii] + a) / (b + a);
            a = c / b;
        }
        let a = 1.0 / (c * c + 1.0).sqrt();
        sn = if sn >= 0.0 { a } else { -a };
        cn = c * sn;
    }
    (sn, cn, dn)
}

/// `(sn, cn, dn)(u | k)` with `kc = sqrt(1 - k^2)`.
///
/// The argument is reduced to `[0, K]` by periodicity and symmetry; on
/// `(K/2, K]` the quarter-period reflections
/// `dn(K - t) = kc / dn(t)`, `sn(K - t) = cn(t) / dn(t)`,
/// `cn(K - t) = kc sn(t) / dn(t)` keep full relative accuracy of `dn`
/// near `K` even for tiny `kc`.
pub fn jacobi_sncndn(u: f64, kc: f64) -> Result<(f64, f64, f64)> {
    check_kc(kc)?;
    if !u.is_finite() {
        return Err(Error::Domain(format!("argument must be finite, got {u}")));
    }
    if kc == 1.0 {
        return Ok((u.sin(), u.cos(), 1.0));
    }
    let k = elliptic_k_from_complement(kc)?;
    let mut r = u.abs();
    let s_sign = if u < 0.0 { -1.0 } else { 1.0 };
    let mut sign_s = s_sign;
    let mut sign_c = 1.0;
    if r >= 4.0 * k {
        r = r.rem_euclid(4.0 * k);
    }
    if r >= 2.0 * k {
        r -= 2.0 * k;
        sign_s = -sign_s;
        sign_c = -sign_c;
    }
    if r > k {
        r = 2.0 * k - r;
        sign_c = -sign_c;
    }
    let (sn, cn, dn) = if r > 0.5 * k {
        let (s, c, d) = sncndn_core(k - r, kc);
        (c / d, kc * s / d, kc / d)
    } else {
        sncndn_core(r, kc)
    };
    Ok((sign_s * sn, sign_c * cn, dn))
}

/// `dn(u | k)` with `kc = sqrt(1 - k^2)`.
pub fn jacobi_dn(u: f64, kc: f64) -> Result<f64> {
    Ok(jacobi_sncndn(u, kc)?.2)
}
