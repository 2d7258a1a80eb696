//! Real quaternions with the Hamilton product.
//!
//! Units satisfy `i² = j² = k² = ijk = −1`, so `ij = k = −ji`. Besides the
//! raw `(w, x, y, z)` storage this module provides [`SignedComponents`], the
//! decomposition `q = c0 − i·c1 − j·c2 − k·c3` in which the sign conditions
//! of the periodic-solution theory are stated.

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum QuaternionError {
    #[error("quaternion has zero norm and cannot be inverted")]
    ZeroQuaternion,
}

/// A quaternion `w + x·i + y·j + z·k`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Quaternion {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Quaternion {
    pub const ZERO: Quaternion = Quaternion::new(0.0, 0.0, 0.0, 0.0);
    pub const ONE: Quaternion = Quaternion::new(1.0, 0.0, 0.0, 0.0);
    pub const I: Quaternion = Quaternion::new(0.0, 1.0, 0.0, 0.0);
    pub const J: Quaternion = Quaternion::new(0.0, 0.0, 1.0, 0.0);
    pub const K: Quaternion = Quaternion::new(0.0, 0.0, 0.0, 1.0);

    #[inline]
    pub const fn new(w: f64, x: f64, y: f64, z: f64) -> Self {
        Self { w, x, y, z }
    }

    #[inline]
    pub const fn real(w: f64) -> Self {
        Self::new(w, 0.0, 0.0, 0.0)
    }

    #[inline]
    pub fn from_array(a: [f64; 4]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }

    #[inline]
    pub fn to_array(self) -> [f64; 4] {
        [self.w, self.x, self.y, self.z]
    }

    /// Hamilton product `self · rhs`.
    #[inline]
    pub fn hamilton(self, rhs: Quaternion) -> Quaternion {
        let (a0, a1, a2, a3) = (self.w, self.x, self.y, self.z);
        let (b0, b1, b2, b3) = (rhs.w, rhs.x, rhs.y, rhs.z);
        Quaternion::new(
            a0 * b0 - a1 * b1 - a2 * b2 - a3 * b3,
            a0 * b1 + a1 * b0 + a2 * b3 - a3 * b2,
            a0 * b2 - a1 * b3 + a2 * b0 + a3 * b1,
            a0 * b3 + a1 * b2 - a2 * b1 + a3 * b0,
        )
    }

    #[inline]
    pub fn conjugate(self) -> Quaternion {
        Quaternion::new(self.w, -self.x, -self.y, -self.z)
    }

    #[inline]
    pub fn norm_squared(self) -> f64 {
        self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z
    }

    /// Euclidean norm, computed with `hypot` so that it neither overflows nor
    /// underflows for extreme but finite components.
    #[inline]
    pub fn norm(self) -> f64 {
        self.w.hypot(self.x).hypot(self.y.hypot(self.z))
    }

    /// Norm of the imaginary part `|v_q|`.
    #[inline]
    pub fn vector_norm(self) -> f64 {
        self.x.hypot(self.y).hypot(self.z)
    }

    pub fn inverse(self) -> Result<Quaternion, QuaternionError> {
        let n2 = self.norm_squared();
        if n2 == 0.0 {
            return Err(QuaternionError::ZeroQuaternion);
        }
        Ok(self.conjugate() / n2)
    }

    /// The angle `|Arg(s_q + i·|v_q|)|` in `[0, π]`; zero for the zero quaternion.
    pub fn ark(self) -> f64 {
        let v = self.vector_norm();
        if v == 0.0 && self.w == 0.0 {
            return 0.0;
        }
        // atan2 with a nonnegative first argument already lands in [0, π].
        let angle = v.atan2(self.w);
        angle.clamp(0.0, PI)
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.w.is_finite() && self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    /// Largest absolute componentwise difference.
    pub fn max_abs_diff(self, other: Quaternion) -> f64 {
        (self - other).to_array().iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

impl fmt::Display for Quaternion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {:+}i {:+}j {:+}k", self.w, self.x, self.y, self.z)
    }
}

impl Add for Quaternion {
    type Output = Quaternion;
    #[inline]
    fn add(self, r: Quaternion) -> Quaternion {
        Quaternion::new(self.w + r.w, self.x + r.x, self.y + r.y, self.z + r.z)
    }
}

impl AddAssign for Quaternion {
    #[inline]
    fn add_assign(&mut self, r: Quaternion) {
        *self = *self + r;
    }
}

impl Sub for Quaternion {
    type Output = Quaternion;
    #[inline]
    fn sub(self, r: Quaternion) -> Quaternion {
        Quaternion::new(self.w - r.w, self.x - r.x, self.y - r.y, self.z - r.z)
    }
}

impl SubAssign for Quaternion {
    #[inline]
    fn sub_assign(&mut self, r: Quaternion) {
        *self = *self - r;
    }
}

impl Neg for Quaternion {
    type Output = Quaternion;
    #[inline]
    fn neg(self) -> Quaternion {
        Quaternion::new(-self.w, -self.x, -self.y, -self.z)
    }
}

impl Mul for Quaternion {
    type Output = Quaternion;
    #[inline]
    fn mul(self, r: Quaternion) -> Quaternion {
        self.hamilton(r)
    }
}

impl MulAssign for Quaternion {
    #[inline]
    fn mul_assign(&mut self, r: Quaternion) {
        *self = self.hamilton(r);
    }
}

impl Mul<f64> for Quaternion {
    type Output = Quaternion;
    #[inline]
    fn mul(self, s: f64) -> Quaternion {
        Quaternion::new(self.w * s, self.x * s, self.y * s, self.z * s)
    }
}

impl Mul<Quaternion> for f64 {
    type Output = Quaternion;
    #[inline]
    fn mul(self, q: Quaternion) -> Quaternion {
        q * self
    }
}

impl Div<f64> for Quaternion {
    type Output = Quaternion;
    #[inline]
    fn div(self, s: f64) -> Quaternion {
        Quaternion::new(self.w / s, self.x / s, self.y / s, self.z / s)
    }
}

/// The decomposition `q = c0 − i·c1 − j·c2 − k·c3`.
///
/// Solutions are described in these coordinates; the nonnegativity
/// conditions on `c0` and `c1` refer to this sign convention, not to the raw
/// `x` component.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SignedComponents {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

impl SignedComponents {
    pub const fn new(c0: f64, c1: f64, c2: f64, c3: f64) -> Self {
        Self { c0, c1, c2, c3 }
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.c0, self.c1, self.c2, self.c3]
    }

    pub fn to_quaternion(self) -> Quaternion {
        Quaternion::new(self.c0, -self.c1, -self.c2, -self.c3)
    }

    pub fn from_quaternion(q: Quaternion) -> Self {
        Self::new(q.w, -q.x, -q.y, -q.z)
    }
}

impl From<Quaternion> for SignedComponents {
    fn from(q: Quaternion) -> Self {
        Self::from_quaternion(q)
    }
}

impl From<SignedComponents> for Quaternion {
    fn from(s: SignedComponents) -> Self {
        s.to_quaternion()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const I: Quaternion = Quaternion::I;
    const J: Quaternion = Quaternion::J;
    const K: Quaternion = Quaternion::K;

    #[test]
    fn unit_relations() {
        assert_eq!(I * J, K);
        assert_eq!(J * I, -K);
        assert_eq!(I * I, -Quaternion::ONE);
        assert_eq!(J * J, -Quaternion::ONE);
        assert_eq!(K * K, -Quaternion::ONE);
        assert_eq!(I * J * K, -Quaternion::ONE);
    }

    #[test]
    fn identity_and_expansion() {
        let q = Quaternion::new(0.3, -1.2, 2.5, 7.0);
        assert_eq!(Quaternion::ONE * q, q);
        assert_eq!(q * Quaternion::ONE, q);
        // (1+i)(1+j) = 1 + j + i + ij = 1 + i + j + k
        let p = Quaternion::new(1.0, 1.0, 0.0, 0.0) * Quaternion::new(1.0, 0.0, 1.0, 0.0);
        assert_eq!(p, Quaternion::new(1.0, 1.0, 1.0, 1.0));
    }

    #[test]
    fn conjugation() {
        assert_eq!(Quaternion::new(1.0, 1.0, 1.0, 1.0).conjugate(), Quaternion::new(1.0, -1.0, -1.0, -1.0));
        assert_eq!(Quaternion::real(3.0).conjugate(), Quaternion::real(3.0));
    }

    #[test]
    fn inverse_cases() {
        assert_eq!(I.inverse().unwrap(), -I);
        assert_eq!(Quaternion::real(2.0).inverse().unwrap(), Quaternion::real(0.5));
        assert_eq!(Quaternion::ZERO.inverse(), Err(QuaternionError::ZeroQuaternion));
    }

    #[test]
    fn ark_values() {
        assert_eq!(Quaternion::ZERO.ark(), 0.0);
        assert_eq!(Quaternion::ONE.ark(), 0.0);
        assert!((Quaternion::new(1.0, 1.0, 0.0, 0.0).ark() - PI / 4.0).abs() < 1e-15);
        assert!((J.ark() - PI / 2.0).abs() < 1e-15);
        assert!((Quaternion::real(-2.0).ark() - PI).abs() < 1e-15);
    }

    #[test]
    fn signed_components_convention() {
        let s = SignedComponents::new(1.0, 2.0, 3.0, 4.0);
        assert_eq!(s.to_quaternion(), Quaternion::new(1.0, -2.0, -3.0, -4.0));
        assert_eq!(SignedComponents::from_quaternion(s.to_quaternion()), s);
    }

    fn quat() -> impl Strategy<Value = Quaternion> {
        prop::array::uniform4(-10.0..10.0f64).prop_map(Quaternion::from_array)
    }

    proptest! {
        #[test]
        fn conj_reverses_products(p in quat(), q in quat()) {
            let lhs = (p * q).conjugate();
            let rhs = q.conjugate() * p.conjugate();
            prop_assert!(lhs.max_abs_diff(rhs) <= 1e-12 * (1.0 + p.norm() * q.norm()));
        }

        #[test]
        fn conj_is_involution(q in quat()) {
            prop_assert_eq!(q.conjugate().conjugate(), q);
        }

        #[test]
        fn inverse_is_two_sided(q in quat()) {
            prop_assume!(q.norm() > 1e-3);
            let inv = q.inverse().unwrap();
            prop_assert!((q * inv).max_abs_diff(Quaternion::ONE) <= 1e-12);
            prop_assert!((inv * q).max_abs_diff(Quaternion::ONE) <= 1e-12);
        }

        #[test]
        fn ark_is_scale_invariant(q in quat(), s in 1e-3..1e3f64) {
            prop_assert!((q.ark() - (q * s).ark()).abs() <= 1e-12);
        }

        #[test]
        fn signed_round_trip(a in prop::array::uniform4(-1e6..1e6f64)) {
            let s = SignedComponents::from_array(a);
            prop_assert_eq!(SignedComponents::from_quaternion(s.to_quaternion()), s);
        }
    }
}
