//! Vertex-coloured triangle meshes: construction from range images, fusion,
//! rasterisation and surface sampling.

mod raster;
mod sample;
mod triangulate;

pub use raster::{render, render_perspective, RenderOutput};
pub use sample::sample_surface_points;
pub use triangulate::{fuse_panorama, mesh_from_rgbd, triangulate_view, TriangulationParams};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Vec3;
use crate::numeric::Real;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TriangleMesh<T> {
    pub vertices: Vec<Vec3<T>>,
    /// Per-vertex RGB in `[0, 1]`.
    pub colors: Vec<[T; 3]>,
    pub faces: Vec<[u32; 3]>,
}

impl<T: Real> TriangleMesh<T> {
    pub fn new() -> Self {
        Self { vertices: Vec::new(), colors: Vec::new(), faces: Vec::new() }
    }

    pub fn is_empty(&self) -> bool {
        self.faces.is_empty()
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.colors.len() != self.vertices.len() {
            return Err(Error::Mesh(format!(
                "{} colours for {} vertices",
                self.colors.len(),
                self.vertices.len()
            )));
        }
        if let Some(i) = self.vertices.iter().position(|v| !v.is_finite()) {
            return Err(Error::Mesh(format!("vertex {i} is not finite")));
        }
        let n = self.vertices.len() as u64;
        if let Some(f) = self.faces.iter().position(|f| f.iter().any(|&i| i as u64 >= n)) {
            return Err(Error::Mesh(format!("face {f} indexes past {n} vertices")));
        }
        Ok(())
    }

    pub fn push_vertex(&mut self, p: Vec3<T>, color: [T; 3]) -> u32 {
        self.vertices.push(p);
        self.colors.push(color);
        (self.vertices.len() - 1) as u32
    }

    /// Axis-aligned bounds of the vertices.
    pub fn bounds(&self) -> Option<(Vec3<T>, Vec3<T>)> {
        let first = *self.vertices.first()?;
        Some(self.vertices.iter().fold((first, first), |(lo, hi), &v| (lo.min_elem(v), hi.max_elem(v))))
    }

    pub fn triangle(&self, f: usize) -> [Vec3<T>; 3] {
        let [a, b, c] = self.faces[f];
        [self.vertices[a as usize], self.vertices[b as usize], self.vertices[c as usize]]
    }

    pub fn face_area(&self, f: usize) -> T {
        let [a, b, c] = self.triangle(f);
        (b - a).cross(c - a).norm() * T::half()
    }

    pub fn cast<U: Real>(&self) -> TriangleMesh<U> {
        TriangleMesh {
            vertices: self.vertices.iter().map(|v| v.cast()).collect(),
            colors: self
                .colors
                .iter()
                .map(|c| [U::lit(c[0].as_f64()), U::lit(c[1].as_f64()), U::lit(c[2].as_f64())])
                .collect(),
            faces: self.faces.clone(),
        }
    }

    pub fn append(&mut self, other: &TriangleMesh<T>) {
        let offset = self.vertices.len() as u32;
        self.vertices.extend_from_slice(&other.vertices);
        self.colors.extend_from_slice(&other.colors);
        self.faces
            .extend(other.faces.iter().map(|f| [f[0] + offset, f[1] + offset, f[2] + offset]));
    }
}

/// Concatenation of `a` and `b`; `b`'s face indices are shifted by `|Va|`.
pub fn fuse<T: Real>(a: &TriangleMesh<T>, b: &TriangleMesh<T>) -> TriangleMesh<T> {
    let mut out = a.clone();
    out.append(b);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tri(offset: f64) -> TriangleMesh<f64> {
        TriangleMesh {
            vertices: vec![
                Vec3::new(offset, 0.0, 1.0),
                Vec3::new(offset + 1.0, 0.0, 1.0),
                Vec3::new(offset, 1.0, 1.0),
            ],
            colors: vec![[0.1, 0.2, 0.3]; 3],
            faces: vec![[0, 1, 2]],
        }
    }

    #[test]
    fn fuse_with_empty_is_identity() {
        let m = tri(0.0);
        assert_eq!(fuse(&m, &TriangleMesh::new()), m);
        assert_eq!(fuse(&TriangleMesh::new(), &m), m);
    }

    #[test]
    fn fuse_reindexes_second_mesh() {
        let f = fuse(&tri(0.0), &tri(5.0));
        assert_eq!(f.num_vertices(), 6);
        assert_eq!(f.faces, vec![[0, 1, 2], [3, 4, 5]]);
        f.validate().unwrap();
    }

    #[test]
    fn validate_catches_bad_index_and_nan() {
        let mut m = tri(0.0);
        m.faces.push([0, 1, 3]);
        assert!(m.validate().is_err());
        let mut m = tri(0.0);
        m.vertices[1].x = f64::NAN;
        assert!(m.validate().is_err());
    }
}
