use crate::dense::{C64, ONE, ZERO};
use crate::error::{Error, Result};

/// `z -> (a z + b) / (c z + d)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MobiusMap {
    pub a: C64,
    pub b: C64,
    pub c: C64,
    pub d: C64,
}

impl MobiusMap {
    pub fn new(a: C64, b: C64, c: C64, d: C64) -> Result<Self> {
        let m = Self { a, b, c, d };
        if m.det().norm() == 0.0 {
            return Err(Error::Domain("Moebius map with zero determinant".into()));
        }
        Ok(m)
    }

    pub fn identity() -> Self {
        Self {
            a: ONE,
            b: ZERO,
            c: ZERO,
            d: ONE,
        }
    }

    pub fn det(&self) -> C64 {
        self.a * self.d - self.b * self.c
    }

    pub fn apply(&self, z: C64) -> C64 {
        (self.a * z + self.b) / (self.c * z + self.d)
    }

    pub fn inverse(&self) -> Self {
        Self {
            a: self.d,
            b: -self.b,
            c: -self.c,
            d: self.a,
        }
    }

    /// `self o other`.
    pub fn compose(&self, other: &MobiusMap) -> Self {
        Self {
            a: self.a * other.a + self.b * other.c,
            b: self.a * other.b + self.b * other.d,
            c: self.c * other.a + self.d * other.c,
            d: self.c * other.b + self.d * other.d,
        }
    }

    /// Sends `z1, z2, z3` to `0, inf, 1`.
    fn to_standard(z: [C64; 3]) -> Self {
        let [z1, z2, z3] = z;
        Self {
            a: z3 - z2,
            b: -z1 * (z3 - z2),
            c: z3 - z1,
            d: -z2 * (z3 - z1),
        }
    }

    /// The unique map with `z_i -> w_i` for three distinct finite points.
    pub fn from_three_points(z: [C64; 3], w: [C64; 3]) -> Result<Self> {
        let distinct = |p: &[C64; 3]| {
            (p[0] - p[1]).norm() > 0.0 && (p[1] - p[2]).norm() > 0.0 && (p[0] - p[2]).norm() > 0.0
        };
        if !distinct(&z) || !distinct(&w) {
            return Err(Error::Domain("three-point Moebius map needs distinct points".into()));
        }
        let m = Self::to_standard(w).inverse().compose(&Self::to_standard(z));
        // normalize to unit determinant magnitude for conditioning
        let s = m.det().norm().sqrt().recip();
        Self::new(m.a * s, m.b * s, m.c * s, m.d * s)
    }
}
