//! Double-double arithmetic (about 32 significant digits) for reference
//! computations that must resolve quantities far below `f64` round-off.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Rem, Sub, SubAssign};

use num_complex::Complex;
use num_traits::{Num, One, Zero};

use super::Real;

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi) / 2`.
#[derive(Clone, Copy, Default, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

pub type CDd = Complex<Dd>;

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

pub const PI: Dd = Dd {
    hi: std::f64::consts::PI,
    lo: 1.224_646_799_147_353_2e-16,
};

pub const FRAC_PI_2: Dd = Dd {
    hi: std::f64::consts::FRAC_PI_2,
    lo: 6.123_233_995_736_766e-17,
};

impl Dd {
    pub const fn new(hi: f64, lo: f64) -> Self {
        Self { hi, lo }
    }

    pub const fn from_f64(x: f64) -> Self {
        Self { hi: x, lo: 0.0 }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn abs(self) -> Self {
        if self.hi < 0.0 || (self.hi == 0.0 && self.lo < 0.0) {
            -self
        } else {
            self
        }
    }

    pub fn sqrt(self) -> Self {
        if self.hi <= 0.0 {
            return Dd::zero();
        }
        let x = Dd::from_f64(self.hi.sqrt());
        x + (self - x * x) / (x + x)
    }

    pub fn trunc(self) -> Self {
        let t = self.hi.trunc();
        if t != self.hi {
            Dd::from_f64(t)
        } else {
            let (s, e) = quick_two_sum(t, self.lo.trunc());
            Dd::new(s, e)
        }
    }

    pub fn round(self) -> Self {
        (self + Dd::from_f64(0.5 * self.hi.signum())).trunc()
    }

    fn sin_cos_taylor(x: Dd) -> (Dd, Dd) {
        // |x| <= pi/4
        let x2 = x * x;
        let mut term = x;
        let mut s = x;
        let mut k = 1.0;
        while term.hi.abs() > 1e-34 {
            term = -(term * x2) / Dd::from_f64((k + 1.0) * (k + 2.0));
            s += term;
            k += 2.0;
        }
        let mut term = Dd::one();
        let mut c = Dd::one();
        let mut k = 0.0;
        while term.hi.abs() > 1e-34 {
            term = -(term * x2) / Dd::from_f64((k + 1.0) * (k + 2.0));
            c += term;
            k += 2.0;
        }
        (s, c)
    }

    /// `(sin x, cos x)`, for moderate `|x|`.
    pub fn sin_cos(self) -> (Dd, Dd) {
        let q = (self / FRAC_PI_2).round();
        let r = self - q * FRAC_PI_2;
        let (s, c) = Self::sin_cos_taylor(r);
        match (q.to_f64() as i64).rem_euclid(4) {
            0 => (s, c),
            1 => (c, -s),
            2 => (-s, -c),
            _ => (-c, s),
        }
    }

    /// `(sin, cos)(pi p / q)` with exact integer reduction of `p / q`.
    pub fn sin_cos_pi_rational(p: i64, q: i64) -> (Dd, Dd) {
        let p = p.rem_euclid(2 * q);
        (Dd::from_f64(p as f64) / Dd::from_f64(q as f64) * PI).sin_cos()
    }
}

impl fmt::Debug for Dd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Dd({:e} + {:e})", self.hi, self.lo)
    }
}

impl fmt::Display for Dd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:e}", self.to_f64())
    }
}

impl From<f64> for Dd {
    fn from(x: f64) -> Self {
        Dd::from_f64(x)
    }
}

impl Add for Dd {
    type Output = Dd;
    #[inline]
    fn add(self, b: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, b.hi);
        let (t, f) = two_sum(self.lo, b.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (s, e) = quick_two_sum(s, e + f);
        Dd::new(s, e)
    }
}

impl Neg for Dd {
    type Output = Dd;
    #[inline]
    fn neg(self) -> Dd {
        Dd::new(-self.hi, -self.lo)
    }
}

impl Sub for Dd {
    type Output = Dd;
    #[inline]
    fn sub(self, b: Dd) -> Dd {
        self + (-b)
    }
}

impl Mul for Dd {
    type Output = Dd;
    #[inline]
    fn mul(self, b: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, b.hi);
        let e = e + (self.hi * b.lo + self.lo * b.hi);
        let (s, e) = quick_two_sum(p, e);
        Dd::new(s, e)
    }
}

impl Div for Dd {
    type Output = Dd;
    #[inline]
    fn div(self, b: Dd) -> Dd {
        let q1 = self.hi / b.hi;
        let r = self - b * Dd::from_f64(q1);
        let q2 = r.hi / b.hi;
        let r = r - b * Dd::from_f64(q2);
        let q3 = r.hi / b.hi;
        let (s, e) = quick_two_sum(q1, q2);
        Dd::new(s, e) + Dd::from_f64(q3)
    }
}

impl Rem for Dd {
    type Output = Dd;
    fn rem(self, b: Dd) -> Dd {
        self - (self / b).trunc() * b
    }
}

impl AddAssign for Dd {
    fn add_assign(&mut self, b: Dd) {
        *self = *self + b;
    }
}

impl SubAssign for Dd {
    fn sub_assign(&mut self, b: Dd) {
        *self = *self - b;
    }
}

impl MulAssign for Dd {
    fn mul_assign(&mut self, b: Dd) {
        *self = *self * b;
    }
}

impl PartialOrd for Dd {
    fn partial_cmp(&self, other: &Dd) -> Option<Ordering> {
        match self.hi.partial_cmp(&other.hi) {
            Some(Ordering::Equal) => self.lo.partial_cmp(&other.lo),
            o => o,
        }
    }
}

impl Zero for Dd {
    fn zero() -> Self {
        Dd::from_f64(0.0)
    }
    fn is_zero(&self) -> bool {
        self.hi == 0.0 && self.lo == 0.0
    }
}

impl One for Dd {
    fn one() -> Self {
        Dd::from_f64(1.0)
    }
}

impl Num for Dd {
    type FromStrRadixErr = std::num::ParseFloatError;
    fn from_str_radix(s: &str, _radix: u32) -> Result<Self, Self::FromStrRadixErr> {
        s.parse::<f64>().map(Dd::from_f64)
    }
}

impl Real for Dd {
    const EPS: f64 = 1e-31;
    fn from_f64(x: f64) -> Self {
        Dd::from_f64(x)
    }
    fn to_f64(self) -> f64 {
        Dd::to_f64(self)
    }
    fn sqrt(self) -> Self {
        Dd::sqrt(self)
    }
    fn abs(self) -> Self {
        Dd::abs(self)
    }
}

pub fn cdd(re: f64, im: f64) -> CDd {
    Complex::new(Dd::from_f64(re), Dd::from_f64(im))
}

/// Complete elliptic integral from the complementary modulus, in double-double.
pub fn elliptic_k_dd(kc: Dd) -> Dd {
    let mut a = Dd::one();
    let mut b = kc;
    for _ in 0..80 {
        let an = (a + b) * Dd::from_f64(0.5);
        let bn = (a * b).sqrt();
        a = an;
        b = bn;
        if (a - b).abs().hi <= 1e-32 * a.hi {
            break;
        }
    }
    PI / ((a + b) * Dd::from_f64(0.5)) * Dd::from_f64(0.5)
}

fn sncndn_core_dd(u: Dd, kc: Dd) -> (Dd, Dd, Dd) {
    const MAX: usize = 24;
    let mut em = [Dd::zero(); MAX];
    let mut en = [Dd::zero(); MAX];
    let mut emc = kc * kc;
    let mut a = Dd::one();
    let mut dn = Dd::one();
    let mut c = Dd::one();
    let mut l = 0;
    for i in 0..MAX {
        l = i;
        em[i] = a;
        emc = emc.sqrt();
        en[i] = emc;
        c = (a + emc) * Dd::from_f64(0.5);
        if (a - emc).abs().hi <= 1e-32 * a.hi {
            break;
        }
        emc *= a;
        a = c;
    }
    let (mut sn, mut cn) = (u * c).sin_cos();
    if !sn.is_zero() {
        let mut a = cn / sn;
        c *= a;
        for ii in (0..=l).rev() {
            let b = em[ii];
            a *= c;
            c *= dn;
            dn = (en[ii] + a) / (b + a);
            a = c / b;
        }
        let a = Dd::one() / (c * c + Dd::one()).sqrt();
        sn = if sn.hi >= 0.0 { a } else { -a };
        cn = c * sn;
    }
    (sn, cn, dn)
}

/// `dn(u | k)` in double-double, for `0 <= u <= K` and `0 < kc <= 1`.
pub fn jacobi_dn_dd(u: Dd, kc: Dd) -> Dd {
    if kc.hi >= 1.0 {
        return Dd::one();
    }
    let k = elliptic_k_dd(kc);
    let mut r = u.abs();
    let two_k = k + k;
    r = r % two_k;
    if r > k {
        r = two_k - r;
    }
    if r > k * Dd::from_f64(0.5) {
        let (_, _, d) = sncndn_core_dd(k - r, kc);
        kc / d
    } else {
        sncndn_core_dd(r, kc).2
    }
}
