//! Z-buffered software rasteriser.

use super::TriangleMesh;
use crate::camera::{CameraIntrinsics, FanSpec, ViewKind, ViewSpec};
use crate::error::{Error, Result};
use crate::grid::{Grid, Image, Mask};
use crate::linalg::{Mat3, Pose, Vec3};
use crate::numeric::{deg_to_rad, rad_to_deg, Real};
use crate::warp::WarpMap;

#[derive(Debug, Clone, PartialEq)]
pub struct RenderOutput<T> {
    pub color: Image<T>,
    /// Camera z for perspective views, ray distance for equirectangular
    /// ones; 0 where not covered.
    pub depth: Grid<T>,
    /// Pixels whose nearest front-facing surface exists.
    pub coverage: Mask,
    /// Pixels whose first hit is the back of a triangle.
    pub backface: Mask,
    pub backface_ratio: T,
    /// Smallest depth over covered pixels.
    pub min_depth: Option<T>,
}

impl<T: Real> RenderOutput<T> {
    /// Fraction of pixels not covered by any front face.
    pub fn inpaint_ratio(&self) -> T {
        let total = self.coverage.len();
        if total == 0 {
            return T::zero();
        }
        T::from_usize_lossy(total - self.coverage.count()) / T::from_usize_lossy(total)
    }

    pub fn hole_mask(&self) -> Mask {
        self.coverage.not()
    }
}

/// Renders `mesh` from `view`. Equirectangular views are composed from a
/// rasterised perspective fan (see [`render_equirect`]).
pub fn render<T: Real>(mesh: &TriangleMesh<T>, view: &ViewSpec<T>) -> Result<RenderOutput<T>> {
    match view.kind {
        ViewKind::Perspective(k) => Ok(render_perspective(mesh, &k, &view.pose)),
        ViewKind::Equirect { .. } => render_equirect(mesh, view),
    }
}

const NEAR: f64 = 1e-3;

#[derive(Clone, Copy)]
struct ClipVert<T> {
    p: Vec3<T>,
    c: [T; 3],
}

fn lerp_vert<T: Real>(a: &ClipVert<T>, b: &ClipVert<T>, t: T) -> ClipVert<T> {
    ClipVert {
        p: a.p + (b.p - a.p) * t,
        c: [
            a.c[0] + (b.c[0] - a.c[0]) * t,
            a.c[1] + (b.c[1] - a.c[1]) * t,
            a.c[2] + (b.c[2] - a.c[2]) * t,
        ],
    }
}

/// Sutherland-Hodgman against `z ≥ near`; returns the vertex count.
fn clip_near<T: Real>(tri: [ClipVert<T>; 3], near: T, out: &mut [ClipVert<T>; 4]) -> usize {
    let mut n = 0;
    for i in 0..3 {
        let a = &tri[i];
        let b = &tri[(i + 1) % 3];
        let (ina, inb) = (a.p.z >= near, b.p.z >= near);
        if ina {
            out[n] = *a;
            n += 1;
        }
        if ina != inb {
            let t = (near - a.p.z) / (b.p.z - a.p.z);
            out[n] = lerp_vert(a, b, t);
            n += 1;
        }
    }
    n
}

struct Target<'a, T> {
    width: usize,
    height: usize,
    front_z: &'a mut [T],
    back_z: &'a mut [T],
    color: &'a mut [T],
}

#[derive(Clone, Copy)]
struct ScreenVert<T> {
    x: T,
    y: T,
    inv_z: T,
    c_over_z: [T; 3],
}

fn raster_triangle<T: Real>(s: [ScreenVert<T>; 3], front: bool, tgt: &mut Target<'_, T>) {
    let area = (s[1].x - s[0].x) * (s[2].y - s[0].y) - (s[1].y - s[0].y) * (s[2].x - s[0].x);
    if area.abs() <= T::epsilon() * T::lit(16.0) || !area.is_finite() {
        return;
    }
    // a little slack so vertices that land on pixel centres up to rounding
    // still include them; the edge test decides
    let slack = T::lit(1e-6);
    let min_x = (s[0].x.min(s[1].x).min(s[2].x) - slack).ceil().max(T::zero());
    let max_x = (s[0].x.max(s[1].x).max(s[2].x) + slack).floor().min(T::from_usize_lossy(tgt.width - 1));
    let min_y = (s[0].y.min(s[1].y).min(s[2].y) - slack).ceil().max(T::zero());
    let max_y = (s[0].y.max(s[1].y).max(s[2].y) + slack).floor().min(T::from_usize_lossy(tgt.height - 1));
    if min_x > max_x || min_y > max_y {
        return;
    }
    let (x0, x1) = (min_x.to_usize().unwrap_or(0), max_x.to_usize().unwrap_or(0));
    let (y0, y1) = (min_y.to_usize().unwrap_or(0), max_y.to_usize().unwrap_or(0));
    let inv_area = T::one() / area;
    // barycentric weight of vertex i is the edge function of the opposite edge
    let edge = |a: usize, b: usize| {
        let (ax, ay, bx, by) = (s[a].x, s[a].y, s[b].x, s[b].y);
        // E(p) = (bx−ax)(py−ay) − (by−ay)(px−ax) = A·px + B·py + C
        let ea = -(by - ay) * inv_area;
        let eb = (bx - ax) * inv_area;
        let ec = ((by - ay) * ax - (bx - ax) * ay) * inv_area;
        (ea, eb, ec)
    };
    let e0 = edge(1, 2);
    let e1 = edge(2, 0);
    let e2 = edge(0, 1);
    let tol = -T::lit(1e-7);
    for y in y0..=y1 {
        let py = T::from_usize_lossy(y);
        let row = y * tgt.width;
        for x in x0..=x1 {
            let px = T::from_usize_lossy(x);
            let w0 = e0.0 * px + e0.1 * py + e0.2;
            let w1 = e1.0 * px + e1.1 * py + e1.2;
            let w2 = e2.0 * px + e2.1 * py + e2.2;
            if w0 < tol || w1 < tol || w2 < tol {
                continue;
            }
            let inv_z = w0 * s[0].inv_z + w1 * s[1].inv_z + w2 * s[2].inv_z;
            if inv_z <= T::zero() {
                continue;
            }
            let z = T::one() / inv_z;
            let i = row + x;
            if front {
                if z < tgt.front_z[i] {
                    tgt.front_z[i] = z;
                    for c in 0..3 {
                        let v = (w0 * s[0].c_over_z[c] + w1 * s[1].c_over_z[c] + w2 * s[2].c_over_z[c]) * z;
                        tgt.color[i * 3 + c] = v;
                    }
                }
            } else if z < tgt.back_z[i] {
                tgt.back_z[i] = z;
            }
        }
    }
}

/// Perspective rasterisation with near-plane clipping and
/// perspective-correct colour interpolation. Pixel centres sit at integer
/// coordinates.
pub fn render_perspective<T: Real>(
    mesh: &TriangleMesh<T>,
    k: &CameraIntrinsics<T>,
    pose: &Pose<T>,
) -> RenderOutput<T> {
    let (w, h) = (k.width, k.height);
    let n = w * h;
    let mut front_z = vec![T::infinity(); n];
    let mut back_z = vec![T::infinity(); n];
    let mut color = vec![T::zero(); n * 3];
    let near = T::lit(NEAR);

    let cam: Vec<Vec3<T>> = mesh.vertices.iter().map(|&v| pose.inverse_transform_point(v)).collect();
    // homogeneous side planes: a·x + b·y + c·z ≥ 0 inside
    let half = T::half();
    let (wl, hl) = (T::from_usize_lossy(w) - half, T::from_usize_lossy(h) - half);
    let planes = [
        (k.fx, T::zero(), k.cx + half),
        (-k.fx, T::zero(), wl - k.cx),
        (T::zero(), k.fy, k.cy + half),
        (T::zero(), -k.fy, hl - k.cy),
    ];
    let mut tgt = Target { width: w, height: h, front_z: &mut front_z, back_z: &mut back_z, color: &mut color };
    let mut poly = [ClipVert { p: Vec3::zero(), c: [T::zero(); 3] }; 4];

    for f in &mesh.faces {
        let p = [cam[f[0] as usize], cam[f[1] as usize], cam[f[2] as usize]];
        if p[0].z < near && p[1].z < near && p[2].z < near {
            continue;
        }
        if planes
            .iter()
            .any(|&(a, b, c)| p.iter().all(|q| a * q.x + b * q.y + c * q.z < T::zero()))
        {
            continue;
        }
        let facing = (p[1] - p[0]).cross(p[2] - p[0]).dot(p[0]);
        if facing == T::zero() || !facing.is_finite() {
            continue;
        }
        let front = facing < T::zero();
        let cols = [
            mesh.colors[f[0] as usize],
            mesh.colors[f[1] as usize],
            mesh.colors[f[2] as usize],
        ];
        let tri = [0, 1, 2].map(|i| ClipVert { p: p[i], c: cols[i] });
        let nv = clip_near(tri, near, &mut poly);
        if nv < 3 {
            continue;
        }
        let sv = poly.map(|v| {
            let (x, y) = k.project(v.p);
            let iz = T::one() / v.p.z;
            ScreenVert { x, y, inv_z: iz, c_over_z: [v.c[0] * iz, v.c[1] * iz, v.c[2] * iz] }
        });
        for i in 1..nv - 1 {
            raster_triangle([sv[0], sv[i], sv[i + 1]], front, &mut tgt);
        }
    }

    let coverage = Mask::from_vec(w, h, front_z.iter().map(|z| z.is_finite()).collect()).expect("dims");
    let backface =
        Mask::from_vec(w, h, front_z.iter().zip(&back_z).map(|(f, b)| b.is_finite() && b < f).collect())
            .expect("dims");
    let depth = Grid::from_vec(w, h, 1, front_z.iter().map(|&z| if z.is_finite() { z } else { T::zero() }).collect())
        .expect("dims");
    let min_depth = front_z.iter().copied().filter(|z| z.is_finite()).fold(None, |m: Option<T>, z| {
        Some(m.map_or(z, |m| m.min(z)))
    });
    let backface_ratio = T::from_usize_lossy(backface.count()) / T::from_usize_lossy(n.max(1));
    RenderOutput {
        color: Grid::from_vec(w, h, 3, color).expect("dims"),
        depth,
        coverage,
        backface,
        backface_ratio,
        min_depth,
    }
}

/// Perspective fan used to rasterise an equirectangular band: 8 views whose
/// field of view covers the band's latitude range and whose angular
/// resolution at the image centre is at least the band's.
pub fn equirect_render_fan<T: Real>(view: &ViewSpec<T>) -> Result<Vec<ViewSpec<T>>> {
    let ViewKind::Equirect { width, lat_min, lat_max, .. } = view.kind else {
        return Err(Error::invalid("render fan needs an equirectangular view"));
    };
    let count = 8usize;
    let max_lat = lat_min.abs().max(lat_max.abs());
    let half_gap = T::PI() / T::from_usize_lossy(count);
    let need = (max_lat.tan() / half_gap.cos()).atan().max(half_gap);
    let half_fov = need + deg_to_rad(T::lit(4.0));
    if half_fov >= deg_to_rad(T::lit(80.0)) {
        return Err(Error::Coverage(format!(
            "equirect rendering supports bands up to about ±70°, got ±{}°",
            rad_to_deg(max_lat)
        )));
    }
    let size = (T::from_usize_lossy(width) * half_fov.tan() / T::PI()).ceil().to_usize().unwrap_or(8).max(8);
    let spec = FanSpec { count, fov_deg: rad_to_deg(half_fov * T::two()), size, band_half_deg: rad_to_deg(max_lat) };
    let k = spec.intrinsics()?;
    let step = T::two() * T::PI() / T::from_usize_lossy(count);
    Ok((0..count)
        .map(|i| {
            let rot = view.pose.rotation.mul_mat(&Mat3::rot_y(step * T::from_usize_lossy(i)));
            ViewSpec::perspective(k, Pose::new(rot, view.pose.position))
        })
        .collect())
}

/// Equirectangular rendering by compositing a rasterised perspective fan.
/// Each view's colour, ray distance, coverage and back-face flags are warped
/// into the band; a cell takes the nearest distance among views whose four
/// bilinear taps are all covered.
pub fn render_equirect<T: Real>(mesh: &TriangleMesh<T>, view: &ViewSpec<T>) -> Result<RenderOutput<T>> {
    let (w, h) = (view.width(), view.height());
    let fan = equirect_render_fan(view)?;
    let n = w * h;
    let mut best = vec![T::infinity(); n];
    let mut color = vec![T::zero(); n * 3];
    let mut back_any = vec![false; n];
    let full = T::one() - T::lit(1e-9);
    for v in &fan {
        let k = *v.intrinsics().expect("perspective fan");
        let r = render_perspective(mesh, &k, &v.pose);
        let (vw, vh) = (k.width, k.height);
        let g = Grid::from_fn(vw, vh, 6, |x, y, c| match c {
            0..=2 => r.color.get(x, y, c),
            3 => {
                if r.coverage.get(x, y) {
                    r.depth.get(x, y, 0) * k.ray_z1(T::from_usize_lossy(x), T::from_usize_lossy(y)).norm()
                } else {
                    T::zero()
                }
            }
            4 => {
                if r.coverage.get(x, y) {
                    T::one()
                } else {
                    T::zero()
                }
            }
            _ => {
                if r.backface.get(x, y) {
                    T::one()
                } else {
                    T::zero()
                }
            }
        });
        let map = WarpMap::new(v, (vw, vh), view, (w, h))?;
        let (warped, mask) = map.apply(&g)?;
        for cell in 0..n {
            let (x, y) = (cell % w, cell / w);
            if !mask.get(x, y) {
                continue;
            }
            let px = warped.pixel(x, y);
            if px[4] >= full {
                if px[3] < best[cell] {
                    best[cell] = px[3];
                    color[cell * 3..cell * 3 + 3].copy_from_slice(&px[..3]);
                    back_any[cell] = px[5] >= T::half();
                }
            } else if !best[cell].is_finite() && px[5] >= T::half() {
                back_any[cell] = true;
            }
        }
    }
    let coverage = Mask::from_vec(w, h, best.iter().map(|d| d.is_finite()).collect())?;
    let backface = Mask::from_vec(w, h, back_any)?;
    let min_depth = best.iter().copied().filter(|d| d.is_finite()).fold(None, |m: Option<T>, d| {
        Some(m.map_or(d, |m| m.min(d)))
    });
    let depth = Grid::from_vec(w, h, 1, best.iter().map(|&d| if d.is_finite() { d } else { T::zero() }).collect())?;
    let backface_ratio = T::from_usize_lossy(backface.count()) / T::from_usize_lossy(n.max(1));
    Ok(RenderOutput { color: Grid::from_vec(w, h, 3, color)?, depth, coverage, backface, backface_ratio, min_depth })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{mesh_from_rgbd, TriangulationParams};
    use crate::scene::RgbdFrame;

    fn intr(n: usize) -> CameraIntrinsics<f64> {
        CameraIntrinsics::from_fov(n, n, 90.0).unwrap()
    }

    #[test]
    fn empty_mesh_renders_nothing() {
        let r = render_perspective(&TriangleMesh::<f64>::new(), &intr(16), &Pose::identity());
        assert_eq!(r.coverage.count(), 0);
        assert_eq!(r.backface_ratio, 0.0);
        assert!(r.min_depth.is_none());
    }

    fn big_quad(z: f64, facing_camera: bool) -> TriangleMesh<f64> {
        let s = 100.0;
        let mut m = TriangleMesh {
            vertices: vec![
                Vec3::new(-s, -s, z),
                Vec3::new(s, -s, z),
                Vec3::new(-s, s, z),
                Vec3::new(s, s, z),
            ],
            colors: vec![[0.2, 0.4, 0.6]; 4],
            // (u,v),(u,v+1),(u+1,v) ordering faces the camera
            faces: vec![[0, 2, 1], [1, 2, 3]],
        };
        if !facing_camera {
            for f in &mut m.faces {
                f.swap(1, 2);
            }
        }
        m
    }

    #[test]
    fn facing_quad_covers_frame() {
        let r = render_perspective(&big_quad(2.0, true), &intr(16), &Pose::identity());
        assert_eq!(r.coverage.count(), 256);
        assert_eq!(r.backface_ratio, 0.0);
        assert!(r.depth.data().iter().all(|&d| (d - 2.0).abs() < 1e-9));
        assert!((r.color.get(3, 7, 1) - 0.4).abs() < 1e-9);
    }

    #[test]
    fn backward_quad_counts_as_backface_only() {
        let r = render_perspective(&big_quad(2.0, false), &intr(16), &Pose::identity());
        assert_eq!(r.coverage.count(), 0);
        assert!((r.backface_ratio - 1.0).abs() < 1e-12);
    }

    #[test]
    fn backward_triangle_area_fraction() {
        // single back-facing triangle covering the lower-left half of the image
        let k = intr(64);
        let z = 1.0;
        let corner = |u: f64, v: f64| Vec3::new((u - k.cx) / k.fx * z, (v - k.cy) / k.fy * z, z);
        let mesh = TriangleMesh {
            vertices: vec![corner(-0.5, -0.5), corner(-0.5, 63.5), corner(63.5, 63.5)],
            colors: vec![[1.0; 3]; 3],
            faces: vec![[0, 2, 1]],
        };
        let r = render_perspective(&mesh, &k, &Pose::identity());
        assert_eq!(r.coverage.count(), 0);
        // pixels on or below the diagonal: 64·65/2
        assert!((r.backface_ratio - 0.5).abs() < 0.02, "{}", r.backface_ratio);
    }

    #[test]
    fn near_plane_clipping_keeps_visible_part() {
        // quad passing through the camera plane
        let mesh = TriangleMesh {
            vertices: vec![
                Vec3::new(-1.0, 0.5, -1.0),
                Vec3::new(1.0, 0.5, -1.0),
                Vec3::new(-1.0, 0.5, 3.0),
                Vec3::new(1.0, 0.5, 3.0),
            ],
            colors: vec![[0.5; 3]; 4],
            faces: vec![[0, 1, 2], [1, 3, 2]],
        };
        let r = render_perspective(&mesh, &intr(32), &Pose::identity());
        assert!(r.coverage.count() + r.backface.count() > 0);
        assert!(r.depth.data().iter().all(|d| d.is_finite()));
    }

    #[test]
    fn render_back_reproduces_frame_depth() {
        let k = intr(24);
        let depth = Grid::from_fn(24, 24, 1, |x, y, _| 2.0 + 0.01 * x as f64 + 0.005 * y as f64);
        let color = Grid::from_fn(24, 24, 3, |x, y, c| (x + y + c) as f64 / 60.0);
        let frame = RgbdFrame { color: color.clone(), depth: depth.clone(), pose: Pose::from_yaw_pitch(Vec3::new(0.3, 0.0, 0.1), 0.4, 0.1), intrinsics: k, frame_id: 0 };
        // pixel pitch at 2 m is ~0.17 m, above the default edge limit
        let params = TriangulationParams { edge_len_max: 0.5, ..Default::default() };
        let mesh = mesh_from_rgbd(&frame, &params).unwrap();
        let r = render_perspective(&mesh, &k, &frame.pose);
        assert_eq!(r.coverage.count(), 24 * 24);
        assert!(r.depth.max_abs_diff(&depth) < 1e-9);
        assert!(r.color.max_abs_diff(&color) < 1e-9);
    }

    #[test]
    fn equirect_render_of_sphere() {
        // panorama of a mesh built from a constant-distance sphere band
        let view = ViewSpec::<f64>::equirect_band(Vec3::zero(), 128, 45.0).unwrap();
        let pano = crate::panorama::PanoramaRgbd {
            color: Grid::filled(256, 85, 3, 0.3),
            distance: crate::camera::DistanceGrid::from_values(Grid::filled(256, 85, 1, 3.0)),
            hole_mask: Mask::new(256, 85, true),
            view: ViewSpec::equirect(256, 85, -60f64.to_radians(), 60f64.to_radians(), Pose::identity()).unwrap(),
        };
        let mesh = crate::mesh::fuse_panorama(
            &TriangleMesh::new(),
            &pano,
            &TriangulationParams { edge_len_max: 1.0, depth_ratio_max: 1.25 },
        )
        .unwrap();
        let r = render(&mesh, &view).unwrap();
        assert_eq!(r.coverage.count(), 128 * 32);
        let max_err = r.depth.data().iter().map(|d| (d - 3.0).abs()).fold(0.0, f64::max);
        assert!(max_err < 0.01, "{max_err}");
        assert_eq!(r.backface_ratio, 0.0);
    }
}
