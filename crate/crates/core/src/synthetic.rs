//! Procedural box rooms with known geometry, and RGBD datasets rendered
//! from them along an elliptical camera path.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::camera::CameraIntrinsics;
use crate::error::{Error, Result};
use crate::linalg::{Pose, Vec3};
use crate::mesh::{render_perspective, TriangleMesh};
use crate::numeric::Real;
use crate::scene::{RgbdFrame, SceneDataset};

/// Axis-aligned room, textured with a smooth colour field. World y points
/// down, so the floor is the `max.y` plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxRoom<T> {
    pub min: Vec3<T>,
    pub max: Vec3<T>,
    /// Target edge length of the wall tessellation, metres.
    pub cell: T,
    pub seed: u64,
}

impl<T: Real> Default for BoxRoom<T> {
    fn default() -> Self {
        Self {
            min: Vec3::new(T::lit(-2.5), T::lit(-1.5), T::lit(-2.0)),
            max: Vec3::new(T::lit(2.5), T::lit(1.5), T::lit(2.0)),
            cell: T::lit(0.1),
            seed: 0,
        }
    }
}

impl<T: Real> BoxRoom<T> {
    /// Random extents between 3 and 6 m horizontally and 2.4 to 3.2 m high.
    pub fn random(rng: &mut impl Rng) -> Self {
        let half = |lo: f64, hi: f64, rng: &mut dyn rand::RngCore| T::lit(rng.gen_range(lo..hi) / 2.0);
        let (hx, hy, hz) = (half(3.0, 6.0, rng), half(2.4, 3.2, rng), half(3.0, 6.0, rng));
        Self { min: Vec3::new(-hx, -hy, -hz), max: Vec3::new(hx, hy, hz), cell: T::lit(0.2), seed: rng.gen() }
    }

    pub fn center(&self) -> Vec3<T> {
        (self.min + self.max) * T::half()
    }

    pub fn contains(&self, p: Vec3<T>) -> bool {
        (0..3).all(|i| p[i] > self.min[i] && p[i] < self.max[i])
    }

    /// Smooth RGB in `[0.15, 0.85]`; each wall gets its own tint.
    pub fn color_at(&self, p: Vec3<T>) -> [T; 3] {
        let s = (self.seed % 1000) as f64 * 0.37;
        let (x, y, z) = (p.x.as_f64(), p.y.as_f64(), p.z.as_f64());
        let base = [
            (1.1 * x + 0.6 * z + s).sin() * (0.9 * y + 0.3).cos(),
            (0.8 * z - 0.5 * x + 1.7 * s).sin() * (0.7 * y - 0.4).cos(),
            (0.9 * x + 1.2 * y - 0.7 * z + 2.3 * s).sin(),
        ];
        let tint = self.wall_tint(p);
        let mut out = [T::zero(); 3];
        for c in 0..3 {
            out[c] = T::lit((0.5 + 0.22 * base[c] + 0.13 * tint[c]).clamp(0.15, 0.85));
        }
        out
    }

    fn wall_tint(&self, p: Vec3<T>) -> [f64; 3] {
        let eps = self.cell.as_f64() * 0.25;
        let tints = [
            [0.6, -0.2, -0.4],
            [-0.3, 0.5, -0.2],
            [-0.4, -0.3, 0.6],
            [0.4, 0.4, -0.5],
            [-0.5, 0.3, 0.4],
            [0.2, -0.5, 0.3],
        ];
        for axis in 0..3 {
            if (p[axis] - self.min[axis]).as_f64().abs() < eps {
                return tints[2 * axis];
            }
            if (p[axis] - self.max[axis]).as_f64().abs() < eps {
                return tints[2 * axis + 1];
            }
        }
        [0.0; 3]
    }

    /// Closed, inward-facing triangle mesh of the six walls.
    pub fn mesh(&self) -> Result<TriangleMesh<T>> {
        let (lo, hi) = (self.min, self.max);
        if (0..3).any(|i| hi[i] <= lo[i]) || self.cell <= T::zero() {
            return Err(Error::invalid("room extents must be positive"));
        }
        let ext = hi - lo;
        let ex = Vec3::new(ext.x, T::zero(), T::zero());
        let ey = Vec3::new(T::zero(), ext.y, T::zero());
        let ez = Vec3::new(T::zero(), T::zero(), ext.z);
        let c = self.center();
        // (corner, edge a, edge b) per wall
        let walls = [
            (lo, ey, ez),
            (Vec3::new(hi.x, lo.y, lo.z), ey, ez),
            (lo, ex, ez),
            (Vec3::new(lo.x, hi.y, lo.z), ex, ez),
            (lo, ex, ey),
            (Vec3::new(lo.x, lo.y, hi.z), ex, ey),
        ];
        let mut mesh = TriangleMesh::new();
        for (o, a0, b0) in walls {
            let mid = o + (a0 + b0) * T::half();
            let (a, b) = if a0.cross(b0).dot(c - mid) > T::zero() { (a0, b0) } else { (b0, a0) };
            let steps = |e: Vec3<T>| (e.norm() / self.cell).ceil().to_usize().unwrap_or(1).max(1);
            let (na, nb) = (steps(a), steps(b));
            let base = mesh.num_vertices() as u32;
            for j in 0..=nb {
                for i in 0..=na {
                    let p = o
                        + a * (T::from_usize_lossy(i) / T::from_usize_lossy(na))
                        + b * (T::from_usize_lossy(j) / T::from_usize_lossy(nb));
                    mesh.push_vertex(p, self.color_at(p));
                }
            }
            let id = |i: usize, j: usize| base + (j * (na + 1) + i) as u32;
            for j in 0..nb {
                for i in 0..na {
                    mesh.faces.push([id(i, j), id(i + 1, j), id(i, j + 1)]);
                    mesh.faces.push([id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)]);
                }
            }
        }
        Ok(mesh)
    }
}

/// Camera path and image settings for [`synthetic_dataset`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySpec<T> {
    pub frames: usize,
    pub width: usize,
    pub height: usize,
    pub hfov_deg: T,
    /// Ellipse radii as fractions of the room's half extents.
    pub radius_frac: T,
    /// Peak pitch oscillation, degrees.
    pub pitch_deg: T,
}

impl<T: Real> Default for TrajectorySpec<T> {
    fn default() -> Self {
        Self {
            frames: 100,
            width: 240,
            height: 180,
            hfov_deg: T::lit(70.0),
            radius_frac: T::lit(0.4),
            pitch_deg: T::lit(8.0),
        }
    }
}

/// Camera poses on a horizontal ellipse through the room centre, looking
/// outwards and sweeping a full turn.
pub fn trajectory<T: Real>(room: &BoxRoom<T>, spec: &TrajectorySpec<T>) -> Vec<Pose<T>> {
    let c = room.center();
    let half = (room.max - room.min) * T::half();
    let n = spec.frames.max(1);
    (0..spec.frames)
        .map(|i| {
            let t = T::two() * T::PI() * T::from_usize_lossy(i) / T::from_usize_lossy(n);
            let pos = c + Vec3::new(
                half.x * spec.radius_frac * t.sin(),
                T::zero(),
                half.z * spec.radius_frac * t.cos(),
            );
            let yaw = t + T::lit(0.35) * (T::lit(3.0) * t).sin();
            let pitch = crate::numeric::deg_to_rad(spec.pitch_deg) * (T::two() * t).sin();
            Pose::from_yaw_pitch(pos, yaw, pitch)
        })
        .collect()
}

/// Renders colour and depth of the room along [`trajectory`].
pub fn synthetic_dataset<T: Real>(room: &BoxRoom<T>, spec: &TrajectorySpec<T>) -> Result<SceneDataset<T>> {
    let mesh = room.mesh()?;
    let k = CameraIntrinsics::from_fov(spec.width, spec.height, spec.hfov_deg)?;
    let frames: Vec<_> = trajectory(room, spec)
        .into_iter()
        .enumerate()
        .map(|(i, pose)| {
            let r = render_perspective(&mesh, &k, &pose);
            RgbdFrame { color: r.color, depth: r.depth, pose, intrinsics: k, frame_id: i }
        })
        .collect();
    SceneDataset::new(format!("box-{}", room.seed), frames)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::camera::ViewSpec;
    use crate::mesh::render;
    use rand::SeedableRng;

    #[test]
    fn mesh_is_closed_and_inward() {
        let room = BoxRoom::<f64>::default();
        let m = room.mesh().unwrap();
        m.validate().unwrap();
        let area: f64 = (0..m.num_faces()).map(|f| m.face_area(f)).sum();
        assert!((area - 2.0 * (5.0 * 3.0 + 5.0 * 4.0 + 3.0 * 4.0)).abs() < 1e-9);
        let c = room.center();
        for f in 0..m.num_faces() {
            let [a, b, cc] = m.triangle(f);
            assert!((b - a).cross(cc - a).dot(c - a) > 0.0);
        }
    }

    #[test]
    fn frames_see_only_front_faces() {
        let room = BoxRoom::<f64>::default();
        let spec = TrajectorySpec { frames: 6, width: 48, height: 36, ..TrajectorySpec::default() };
        let ds = synthetic_dataset(&room, &spec).unwrap();
        assert_eq!(ds.len(), 6);
        let m = room.mesh().unwrap();
        for f in &ds.frames {
            f.validate().unwrap();
            assert!(room.contains(f.pose.position));
            let r = render(&m, &ViewSpec::perspective(f.intrinsics, f.pose)).unwrap();
            assert_eq!(r.coverage.count(), 48 * 36);
            assert_eq!(r.backface_ratio, 0.0);
        }
    }

    #[test]
    fn random_rooms_are_valid() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..5 {
            let room = BoxRoom::<f64>::random(&mut rng);
            assert!(room.mesh().unwrap().num_faces() > 0);
            let c = room.color_at(room.min);
            assert!(c.iter().all(|v| (0.15..=0.85).contains(v)));
        }
    }
}
