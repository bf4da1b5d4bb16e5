use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::TriangleMesh;
use crate::error::{Error, Result};
use crate::linalg::Vec3;
use crate::numeric::Real;

/// Draws `n` points uniformly by area over the mesh surface.
pub fn sample_surface_points<T: Real>(mesh: &TriangleMesh<T>, n: usize, seed: u64) -> Result<Vec<Vec3<T>>> {
    if n == 0 {
        return Err(Error::invalid("sample count must be positive"));
    }
    let mut cdf = Vec::with_capacity(mesh.num_faces());
    let mut total = 0.0f64;
    for f in 0..mesh.num_faces() {
        total += mesh.face_area(f).as_f64();
        cdf.push(total);
    }
    if mesh.is_empty() || total <= 0.0 {
        return Err(Error::Empty("cannot sample an empty mesh".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let r = rng.gen::<f64>() * total;
        let f = cdf.partition_point(|&c| c <= r).min(cdf.len() - 1);
        let [a, b, c] = mesh.triangle(f);
        let s = rng.gen::<f64>().sqrt();
        let t = rng.gen::<f64>();
        let (wa, wb, wc) = (T::lit(1.0 - s), T::lit(s * (1.0 - t)), T::lit(s * t));
        out.push(a * wa + b * wb + c * wc);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_triangles() -> TriangleMesh<f64> {
        // areas 0.5 and 1.5
        TriangleMesh {
            vertices: vec![
                Vec3::new(0.0, 0.0, 0.0),
                Vec3::new(1.0, 0.0, 0.0),
                Vec3::new(0.0, 1.0, 0.0),
                Vec3::new(10.0, 0.0, 0.0),
                Vec3::new(13.0, 0.0, 0.0),
                Vec3::new(10.0, 1.0, 0.0),
            ],
            colors: vec![[0.0; 3]; 6],
            faces: vec![[0, 1, 2], [3, 4, 5]],
        }
    }

    #[test]
    fn points_stay_on_triangle() {
        let mut m = two_triangles();
        m.faces.truncate(1);
        let pts = sample_surface_points(&m, 1000, 3).unwrap();
        for p in pts {
            assert!(p.z.abs() < 1e-9);
            assert!(p.x >= -1e-12 && p.y >= -1e-12 && p.x + p.y <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn area_proportional_counts() {
        let n = 20_000;
        let pts = sample_surface_points(&two_triangles(), n, 11).unwrap();
        let big = pts.iter().filter(|p| p.x >= 5.0).count() as f64;
        // binomial p = 0.75, 99% two-sided bound ≈ 2.576 σ
        let sigma = (n as f64 * 0.75 * 0.25).sqrt();
        assert!((big - 0.75 * n as f64).abs() < 2.576 * sigma, "{big}");
    }

    #[test]
    fn deterministic_and_rejects_empty() {
        let m = two_triangles();
        assert_eq!(sample_surface_points(&m, 50, 5).unwrap(), sample_surface_points(&m, 50, 5).unwrap());
        assert!(sample_surface_points(&TriangleMesh::<f64>::new(), 5, 0).is_err());
    }
}
