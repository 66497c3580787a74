//! Minimal 3-vector used for world coordinates (millimetres).

use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::scalar::Real;

/// A point or direction in 3D space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vec3<T> {
    pub x: T,
    pub y: T,
    pub z: T,
}

/// Shorthand constructor.
#[inline]
pub fn vec3<T>(x: T, y: T, z: T) -> Vec3<T> {
    Vec3 { x, y, z }
}

impl<T: Real> Vec3<T> {
    pub fn zero() -> Self {
        vec3(T::zero(), T::zero(), T::zero())
    }

    pub fn dot(self, rhs: Self) -> T {
        self.x * rhs.x + self.y * rhs.y + self.z * rhs.z
    }

    pub fn cross(self, rhs: Self) -> Self {
        vec3(
            self.y * rhs.z - self.z * rhs.y,
            self.z * rhs.x - self.x * rhs.z,
            self.x * rhs.y - self.y * rhs.x,
        )
    }

    pub fn norm_squared(self) -> T {
        self.dot(self)
    }

    pub fn norm(self) -> T {
        self.norm_squared().sqrt()
    }

    /// Unit vector, or `None` when the norm is at or below `min_norm`.
    pub fn try_normalized(self, min_norm: T) -> Option<Self> {
        let n = self.norm();
        if n > min_norm {
            Some(self / n)
        } else {
            None
        }
    }

    pub fn scaled(self, s: T) -> Self {
        vec3(self.x * s, self.y * s, self.z * s)
    }

    /// Component-wise division (used for physical-to-voxel coordinates).
    pub fn component_div(self, rhs: Self) -> Self {
        vec3(self.x / rhs.x, self.y / rhs.y, self.z / rhs.z)
    }

    pub fn distance(self, rhs: Self) -> T {
        (self - rhs).norm()
    }

    pub fn to_f64_array(self) -> [f64; 3] {
        [self.x.widen(), self.y.widen(), self.z.widen()]
    }

    pub fn from_f64_array(a: [f64; 3]) -> Self {
        vec3(T::of(a[0]), T::of(a[1]), T::of(a[2]))
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl<T: Real> Add for Vec3<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        vec3(self.x + rhs.x, self.y + rhs.y, self.z + rhs.z)
    }
}

impl<T: Real> Sub for Vec3<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        vec3(self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
    }
}

impl<T: Real> Mul<T> for Vec3<T> {
    type Output = Self;
    fn mul(self, s: T) -> Self {
        self.scaled(s)
    }
}

impl<T: Real> Div<T> for Vec3<T> {
    type Output = Self;
    fn div(self, s: T) -> Self {
        vec3(self.x / s, self.y / s, self.z / s)
    }
}

impl<T: Real> Neg for Vec3<T> {
    type Output = Self;
    fn neg(self) -> Self {
        vec3(-self.x, -self.y, -self.z)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cross_follows_right_hand_rule() {
        let x = vec3(1.0, 0.0, 0.0);
        let y = vec3(0.0, 1.0, 0.0);
        assert_eq!(x.cross(y), vec3(0.0, 0.0, 1.0));
    }

    #[test]
    fn normalization_rejects_null_vector() {
        let v: Vec3<f64> = Vec3::zero();
        assert!(v.try_normalized(1e-12).is_none());
        let u: Vec3<f64> = vec3(3.0, 0.0, 4.0).try_normalized(1e-12).unwrap();
        assert!((u.norm() - 1.0).abs() < 1e-15);
    }
}
