//! Minimal 3D vector, rotation and rigid-transform types.
//!
//! World convention: +y points down (gravity), so "up" is -y. Camera frames
//! use +x right, +y down, +z forward.

use std::ops::{Add, Index, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::numeric::Real;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3<T> {
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Real> Vec3<T> {
    #[inline]
    pub const fn new(x: T, y: T, z: T) -> Self {
        Self { x, y, z }
    }

    #[inline]
    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero(), T::zero())
    }

    #[inline]
    pub fn splat(v: T) -> Self {
        Self::new(v, v, v)
    }

    #[inline]
    pub fn dot(self, o: Self) -> T {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    #[inline]
    pub fn cross(self, o: Self) -> Self {
        Self::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    #[inline]
    pub fn norm_squared(self) -> T {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> T {
        self.norm_squared().sqrt()
    }

    #[inline]
    pub fn normalized(self) -> Self {
        self * (T::one() / self.norm())
    }

    #[inline]
    pub fn scale(self, s: T) -> Self {
        self * s
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    #[inline]
    pub fn min_elem(self, o: Self) -> Self {
        Self::new(self.x.min(o.x), self.y.min(o.y), self.z.min(o.z))
    }

    #[inline]
    pub fn max_elem(self, o: Self) -> Self {
        Self::new(self.x.max(o.x), self.y.max(o.y), self.z.max(o.z))
    }

    #[inline]
    pub fn to_array(self) -> [T; 3] {
        [self.x, self.y, self.z]
    }

    #[inline]
    pub fn from_array(a: [T; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    pub fn cast<U: Real>(self) -> Vec3<U> {
        Vec3::new(U::lit(self.x.as_f64()), U::lit(self.y.as_f64()), U::lit(self.z.as_f64()))
    }
}

impl<T: Real> Add for Vec3<T> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl<T: Real> Sub for Vec3<T> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl<T: Real> Mul<T> for Vec3<T> {
    type Output = Self;
    #[inline]
    fn mul(self, s: T) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }
}

impl<T: Real> Neg for Vec3<T> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y, -self.z)
    }
}

impl<T> Index<usize> for Vec3<T> {
    type Output = T;
    fn index(&self, i: usize) -> &T {
        match i {
            0 => &self.x,
            1 => &self.y,
            2 => &self.z,
            _ => panic!("Vec3 index {i} out of range"),
        }
    }
}

/// Row-major 3x3 matrix, used for rotations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mat3<T> {
    pub m: [[T; 3]; 3],
}

impl<T: Real> Mat3<T> {
    pub fn identity() -> Self {
        let (o, z) = (T::one(), T::zero());
        Self { m: [[o, z, z], [z, o, z], [z, z, o]] }
    }

    pub fn from_rows(m: [[T; 3]; 3]) -> Self {
        Self { m }
    }

    /// Rotation about +y. Positive angles turn +z toward +x.
    pub fn rot_y(a: T) -> Self {
        let (s, c) = a.sin_cos();
        let (o, z) = (T::one(), T::zero());
        Self { m: [[c, z, s], [z, o, z], [-s, z, c]] }
    }

    /// Rotation about +x. Positive angles turn +z toward -y (look up).
    pub fn rot_x(a: T) -> Self {
        let (s, c) = a.sin_cos();
        let (o, z) = (T::one(), T::zero());
        Self { m: [[o, z, z], [z, c, -s], [z, s, c]] }
    }

    pub fn rot_z(a: T) -> Self {
        let (s, c) = a.sin_cos();
        let (o, z) = (T::one(), T::zero());
        Self { m: [[c, -s, z], [s, c, z], [z, z, o]] }
    }

    #[inline]
    pub fn mul_vec(&self, v: Vec3<T>) -> Vec3<T> {
        let m = &self.m;
        Vec3::new(
            m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
            m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
            m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z,
        )
    }

    /// `selfᵀ · v`.
    #[inline]
    pub fn tmul_vec(&self, v: Vec3<T>) -> Vec3<T> {
        let m = &self.m;
        Vec3::new(
            m[0][0] * v.x + m[1][0] * v.y + m[2][0] * v.z,
            m[0][1] * v.x + m[1][1] * v.y + m[2][1] * v.z,
            m[0][2] * v.x + m[1][2] * v.y + m[2][2] * v.z,
        )
    }

    pub fn transpose(&self) -> Self {
        let m = &self.m;
        Self {
            m: [
                [m[0][0], m[1][0], m[2][0]],
                [m[0][1], m[1][1], m[2][1]],
                [m[0][2], m[1][2], m[2][2]],
            ],
        }
    }

    pub fn mul_mat(&self, o: &Self) -> Self {
        let mut r = [[T::zero(); 3]; 3];
        for (i, row) in r.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = (0..3).map(|k| self.m[i][k] * o.m[k][j]).sum();
            }
        }
        Self { m: r }
    }

    pub fn column(&self, j: usize) -> Vec3<T> {
        Vec3::new(self.m[0][j], self.m[1][j], self.m[2][j])
    }

    /// Largest entry of |RᵀR − I|.
    pub fn orthonormality_error(&self) -> T {
        let p = self.transpose().mul_mat(self);
        let mut worst = T::zero();
        for i in 0..3 {
            for j in 0..3 {
                let target = if i == j { T::one() } else { T::zero() };
                worst = worst.max((p.m[i][j] - target).abs());
            }
        }
        worst
    }

    /// Gram-Schmidt on the columns; keeps the first column direction.
    pub fn orthonormalized(&self) -> Self {
        let c0 = self.column(0).normalized();
        let c1 = self.column(1);
        let c1 = (c1 - c0 * c0.dot(c1)).normalized();
        let c2 = c0.cross(c1);
        Self {
            m: [[c0.x, c1.x, c2.x], [c0.y, c1.y, c2.y], [c0.z, c1.z, c2.z]],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.m.iter().flatten().all(|v| v.is_finite())
    }

    pub fn cast<U: Real>(&self) -> Mat3<U> {
        let mut r = [[U::zero(); 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                r[i][j] = U::lit(self.m[i][j].as_f64());
            }
        }
        Mat3 { m: r }
    }
}

/// Camera-to-world rigid transform: `world = rotation · cam + position`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose<T> {
    pub rotation: Mat3<T>,
    pub position: Vec3<T>,
}

impl<T: Real> Pose<T> {
    pub fn identity() -> Self {
        Self { rotation: Mat3::identity(), position: Vec3::zero() }
    }

    pub fn new(rotation: Mat3<T>, position: Vec3<T>) -> Self {
        Self { rotation, position }
    }

    /// Pose looking along yaw (about +y, from +z toward +x) and elevation
    /// (positive looks up) from `position`, with no roll.
    pub fn from_yaw_pitch(position: Vec3<T>, yaw: T, pitch: T) -> Self {
        Self { rotation: Mat3::rot_y(yaw).mul_mat(&Mat3::rot_x(pitch)), position }
    }

    #[inline]
    pub fn transform_point(&self, p: Vec3<T>) -> Vec3<T> {
        self.rotation.mul_vec(p) + self.position
    }

    #[inline]
    pub fn inverse_transform_point(&self, p: Vec3<T>) -> Vec3<T> {
        self.rotation.tmul_vec(p - self.position)
    }

    #[inline]
    pub fn rotate(&self, d: Vec3<T>) -> Vec3<T> {
        self.rotation.mul_vec(d)
    }

    #[inline]
    pub fn inverse_rotate(&self, d: Vec3<T>) -> Vec3<T> {
        self.rotation.tmul_vec(d)
    }

    /// World-frame viewing direction (camera +z).
    pub fn forward(&self) -> Vec3<T> {
        self.rotation.column(2)
    }

    pub fn translated(&self, delta: Vec3<T>) -> Self {
        Self { rotation: self.rotation, position: self.position + delta }
    }

    /// Row-major 4x4 homogeneous matrix.
    pub fn to_matrix(&self) -> [[T; 4]; 4] {
        let r = &self.rotation.m;
        let p = self.position;
        let (o, z) = (T::one(), T::zero());
        [
            [r[0][0], r[0][1], r[0][2], p.x],
            [r[1][0], r[1][1], r[1][2], p.y],
            [r[2][0], r[2][1], r[2][2], p.z],
            [z, z, z, o],
        ]
    }

    pub fn from_matrix(m: [[T; 4]; 4]) -> Self {
        Self {
            rotation: Mat3::from_rows([
                [m[0][0], m[0][1], m[0][2]],
                [m[1][0], m[1][1], m[1][2]],
                [m[2][0], m[2][1], m[2][2]],
            ]),
            position: Vec3::new(m[0][3], m[1][3], m[2][3]),
        }
    }

    pub fn cast<U: Real>(&self) -> Pose<U> {
        Pose { rotation: self.rotation.cast(), position: self.position.cast() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn yaw_turns_forward_toward_plus_x() {
        let p = Pose::from_yaw_pitch(Vec3::zero(), std::f64::consts::FRAC_PI_2, 0.0);
        let f = p.forward();
        assert!((f.x - 1.0).abs() < 1e-12 && f.z.abs() < 1e-12);
    }

    #[test]
    fn positive_pitch_looks_up() {
        let p = Pose::from_yaw_pitch(Vec3::zero(), 0.0, 0.3f64);
        assert!(p.forward().y < 0.0);
    }

    #[test]
    fn inverse_transform_round_trips() {
        let p = Pose::from_yaw_pitch(Vec3::new(1.0, -2.0, 0.5), 0.7f64, -0.2);
        let q = Vec3::new(0.3, 0.1, 4.0);
        let back = p.inverse_transform_point(p.transform_point(q));
        assert!((back - q).norm() < 1e-12);
        assert!(p.rotation.orthonormality_error() < 1e-12);
    }

    #[test]
    fn gram_schmidt_repairs_drift() {
        let mut r = Mat3::<f64>::rot_y(0.4).mul_mat(&Mat3::rot_x(0.1));
        r.m[0][1] += 1e-5;
        assert!(r.orthonormality_error() > 1e-6);
        assert!(r.orthonormalized().orthonormality_error() < 1e-12);
    }
}
