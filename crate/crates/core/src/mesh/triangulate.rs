use serde::{Deserialize, Serialize};

use super::{fuse, TriangleMesh};
use crate::camera::{ViewKind, ViewSpec};
use crate::error::{Error, Result};
use crate::grid::{Grid, Mask};
use crate::linalg::Vec3;
use crate::numeric::Real;
use crate::panorama::PanoramaRgbd;
use crate::scene::RgbdFrame;

/// Discontinuity filters applied when connecting neighbouring pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TriangulationParams<T> {
    /// Longest allowed triangle edge, metres.
    pub edge_len_max: T,
    /// Largest allowed ratio between the farthest and nearest vertex range.
    pub depth_ratio_max: T,
}

impl<T: Real> Default for TriangulationParams<T> {
    fn default() -> Self {
        Self { edge_len_max: T::lit(0.1), depth_ratio_max: T::lit(1.25) }
    }
}

impl<T: Real> TriangulationParams<T> {
    pub fn validate(&self) -> Result<()> {
        if self.edge_len_max > T::zero() && self.depth_ratio_max > T::zero() {
            Ok(())
        } else {
            Err(Error::invalid("triangulation thresholds must be positive"))
        }
    }

    fn keeps(&self, p: [Vec3<T>; 3], r: [T; 3]) -> bool {
        let e2 = self.edge_len_max * self.edge_len_max;
        if (p[0] - p[1]).norm_squared() > e2
            || (p[1] - p[2]).norm_squared() > e2
            || (p[2] - p[0]).norm_squared() > e2
        {
            return false;
        }
        let lo = r[0].min(r[1]).min(r[2]);
        let hi = r[0].max(r[1]).max(r[2]);
        hi <= self.depth_ratio_max * lo
    }
}

/// Connects neighbouring pixels of a range image into triangles.
///
/// `range` holds camera z for perspective views and ray distance for
/// equirectangular ones (≤ 0 = invalid). Only cells inside `region` take
/// part. Every 2×2 block yields the triangles `(u,v),(u,v+1),(u+1,v)` and
/// `(u+1,v),(u,v+1),(u+1,v+1)`, whose front faces point at the viewer.
/// Equirectangular grids wrap horizontally. Unused cells produce no vertex.
pub fn triangulate_view<T: Real>(
    view: &ViewSpec<T>,
    color: &Grid<T>,
    range: &Grid<T>,
    region: &Mask,
    params: &TriangulationParams<T>,
) -> Result<TriangleMesh<T>> {
    params.validate()?;
    let (w, h) = (range.width(), range.height());
    if range.channels() != 1 || color.channels() != 3 || color.width() != w || color.height() != h {
        return Err(Error::Shape("triangulate: colour must be HxWx3 and range HxWx1".into()));
    }
    if region.width() != w || region.height() != h {
        return Err(Error::Shape("triangulate: region mask dims".into()));
    }
    let view = view.at_resolution(w, h)?;
    let wrap = matches!(view.kind, ViewKind::Equirect { .. });
    let usable = |x: usize, y: usize| {
        let r = range.get(x, y, 0);
        region.get(x, y) && r.is_finite() && r > T::zero()
    };
    let point = |x: usize, y: usize| view.unproject(T::from_usize_lossy(x), T::from_usize_lossy(y), range.get(x, y, 0));

    let mut mesh = TriangleMesh::new();
    let mut index = vec![u32::MAX; w * h];
    let mut vertex = |mesh: &mut TriangleMesh<T>, x: usize, y: usize| -> u32 {
        let slot = &mut index[y * w + x];
        if *slot == u32::MAX {
            let c = color.pixel(x, y);
            *slot = mesh.push_vertex(point(x, y), [c[0], c[1], c[2]]);
        }
        *slot
    };

    let cols = if wrap { w } else { w.saturating_sub(1) };
    for y in 0..h.saturating_sub(1) {
        for x in 0..cols {
            let x1 = (x + 1) % w;
            if wrap && x1 == x {
                continue;
            }
            let corners = [(x, y), (x1, y), (x, y + 1), (x1, y + 1)];
            let ok = corners.map(|(cx, cy)| usable(cx, cy));
            // a=(x,y) b=(x+1,y) c=(x,y+1) d=(x+1,y+1)
            for tri in [[0usize, 2, 1], [1, 2, 3]] {
                if !tri.iter().all(|&i| ok[i]) {
                    continue;
                }
                let pts = tri.map(|i| point(corners[i].0, corners[i].1));
                let rs = tri.map(|i| range.get(corners[i].0, corners[i].1, 0));
                if !params.keeps(pts, rs) {
                    continue;
                }
                let ids = tri.map(|i| vertex(&mut mesh, corners[i].0, corners[i].1));
                mesh.faces.push(ids);
            }
        }
    }
    Ok(mesh)
}

/// Back-projects a posed RGBD frame into a mesh.
pub fn mesh_from_rgbd<T: Real>(frame: &RgbdFrame<T>, params: &TriangulationParams<T>) -> Result<TriangleMesh<T>> {
    let view = frame.view();
    let region = Mask::new(frame.depth.width(), frame.depth.height(), true);
    triangulate_view(&view, &frame.color, &frame.depth, &region, params)
}

/// Adds geometry for the panorama's hole cells to `mesh`.
///
/// Cells inside the hole mask dilated by one cell (with horizontal wrap) are
/// triangulated; the one-cell border carries the rendered distance, so the
/// new patch meets the existing surface. Existing vertices are untouched.
pub fn fuse_panorama<T: Real>(
    mesh: &TriangleMesh<T>,
    pano: &PanoramaRgbd<T>,
    params: &TriangulationParams<T>,
) -> Result<TriangleMesh<T>> {
    pano.validate()?;
    if !pano.hole_mask.any() {
        return Ok(mesh.clone());
    }
    let region = pano.hole_mask.dilate(1, true).and(&pano.distance.valid);
    let patch = triangulate_view(&pano.view, &pano.color, &pano.distance.values, &region, params)?;
    Ok(fuse(mesh, &patch))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::camera::{CameraIntrinsics, DistanceGrid};
    use crate::linalg::Pose;

    fn frame(depths: [f64; 4]) -> RgbdFrame<f64> {
        RgbdFrame {
            color: Grid::filled(2, 2, 3, 0.5),
            depth: Grid::from_vec(2, 2, 1, depths.to_vec()).unwrap(),
            pose: Pose::identity(),
            intrinsics: CameraIntrinsics::new(2.0, 2.0, 0.5, 0.5, 2, 2).unwrap(),
            frame_id: 0,
        }
    }

    fn loose() -> TriangulationParams<f64> {
        TriangulationParams { edge_len_max: 10.0, depth_ratio_max: 1.5 }
    }

    #[test]
    fn uniform_block_gives_two_triangles() {
        let m = mesh_from_rgbd(&frame([1.0; 4]), &loose()).unwrap();
        assert_eq!((m.num_vertices(), m.num_faces()), (4, 2));
    }

    #[test]
    fn far_corner_drops_its_triangles() {
        let m = mesh_from_rgbd(&frame([1.0, 1.0, 1.0, 5.0]), &loose()).unwrap();
        assert_eq!((m.num_vertices(), m.num_faces()), (3, 1));
    }

    #[test]
    fn zero_depth_gives_empty_mesh() {
        let m = mesh_from_rgbd(&frame([0.0; 4]), &loose()).unwrap();
        assert!(m.is_empty() && m.vertices.is_empty());
    }

    #[test]
    fn front_faces_point_at_camera() {
        let m = mesh_from_rgbd(&frame([1.0; 4]), &loose()).unwrap();
        for f in 0..m.num_faces() {
            let [a, b, c] = m.triangle(f);
            let n = (b - a).cross(c - a);
            assert!(n.dot(Vec3::zero() - a) > 0.0);
        }
    }

    fn pano(hole: Mask, dist: f64) -> PanoramaRgbd<f64> {
        let view = ViewSpec::equirect_band(Vec3::new(1.0, 2.0, 3.0), 64, 45.0).unwrap();
        let (w, h) = (view.width(), view.height());
        PanoramaRgbd {
            color: Grid::filled(w, h, 3, 0.25),
            distance: DistanceGrid::from_values(Grid::filled(w, h, 1, dist)),
            hole_mask: hole,
            view,
        }
    }

    #[test]
    fn no_holes_leaves_mesh_untouched() {
        let base = mesh_from_rgbd(&frame([1.0; 4]), &loose()).unwrap();
        let p = pano(Mask::new(64, 16, false), 2.0);
        assert_eq!(fuse_panorama(&base, &p, &loose()).unwrap(), base);
    }

    #[test]
    fn full_hole_is_a_sphere_band() {
        let p = pano(Mask::new(64, 16, true), 2.0);
        let m = fuse_panorama(&TriangleMesh::new(), &p, &loose()).unwrap();
        // wraps horizontally: 64 columns × 15 row pairs × 2
        assert_eq!(m.num_faces(), 64 * 15 * 2);
        let c = Vec3::new(1.0, 2.0, 3.0);
        let err: f64 = m.vertices.iter().map(|v| ((*v - c).norm() - 2.0).abs()).sum::<f64>()
            / m.num_vertices() as f64;
        assert!(err < 1e-3);
    }

    #[test]
    fn small_hole_uses_dilated_neighbourhood() {
        let mut hole = Mask::new(64, 16, false);
        for y in 6..9 {
            for x in 20..23 {
                hole.set(x, y, true);
            }
        }
        let m = fuse_panorama(&TriangleMesh::new(), &pano(hole, 2.0), &loose()).unwrap();
        assert_eq!(m.num_vertices(), 25);
        assert_eq!(m.num_faces(), 4 * 4 * 2);
    }
}
