//! Seeded, smooth colour field on the sphere of view directions.

use crate::linalg::Vec3;
use crate::numeric::Real;

#[inline]
fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[inline]
fn smooth(t: f64) -> f64 {
    t * t * (3.0 - 2.0 * t)
}

/// Two-octave 3D value noise evaluated on unit directions, one independent
/// lattice per colour channel. Values lie in `[0.1, 0.9]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProceduralField {
    pub seed: u64,
}

impl ProceduralField {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    fn lattice(&self, c: u64, octave: u64, i: i64, j: i64, k: i64) -> f64 {
        let mut h = splitmix(self.seed ^ (c << 56) ^ (octave << 48));
        h = splitmix(h ^ i as u64);
        h = splitmix(h ^ (j as u64).rotate_left(21));
        h = splitmix(h ^ (k as u64).rotate_left(42));
        (h >> 11) as f64 / (1u64 << 53) as f64
    }

    fn value(&self, c: u64, octave: u64, p: [f64; 3]) -> f64 {
        let f = [p[0].floor(), p[1].floor(), p[2].floor()];
        let t = [smooth(p[0] - f[0]), smooth(p[1] - f[1]), smooth(p[2] - f[2])];
        let b = [f[0] as i64, f[1] as i64, f[2] as i64];
        let mut acc = 0.0;
        for corner in 0..8 {
            let (dx, dy, dz) = (corner & 1, (corner >> 1) & 1, (corner >> 2) & 1);
            let w = (if dx == 1 { t[0] } else { 1.0 - t[0] })
                * (if dy == 1 { t[1] } else { 1.0 - t[1] })
                * (if dz == 1 { t[2] } else { 1.0 - t[2] });
            acc += w * self.lattice(c, octave, b[0] + dx, b[1] + dy, b[2] + dz);
        }
        acc
    }

    /// RGB at a world direction (need not be normalised).
    pub fn color<T: Real>(&self, dir: Vec3<T>) -> [T; 3] {
        let d = dir.normalized();
        let p = [d.x.as_f64(), d.y.as_f64(), d.z.as_f64()];
        let mut out = [T::zero(); 3];
        for (c, o) in out.iter_mut().enumerate() {
            let lo = self.value(c as u64, 0, [p[0] * 2.0, p[1] * 2.0, p[2] * 2.0]);
            let hi = self.value(c as u64, 1, [p[0] * 5.0 + 17.0, p[1] * 5.0 + 3.0, p[2] * 5.0 + 11.0]);
            *o = T::lit(0.1 + 0.8 * (0.7 * lo + 0.3 * hi));
        }
        out
    }
}
