//! Projection math: pinhole and equirectangular views, depth/distance
//! conversion and the shared-center panorama view fan.
//!
//! Pixel coordinates are continuous with pixel `i` centred at `i` for both
//! view kinds. Equirectangular longitude/latitude are measured from the
//! pixel edges, so pixel `i` maps through `i + 0.5`:
//!
//! ```text
//! lon = π (2 (u + 0.5) / W − 1)
//! lat = lat_max − (v + 0.5) / H · (lat_max − lat_min)
//! dir = (cos lat · sin lon, −sin lat, cos lat · cos lon)
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, Mask};
use crate::linalg::{Pose, Vec3};
use crate::numeric::{deg_to_rad, Real};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics<T> {
    pub fx: T,
    pub fy: T,
    pub cx: T,
    pub cy: T,
    pub width: usize,
    pub height: usize,
}

impl<T: Real> CameraIntrinsics<T> {
    pub fn new(fx: T, fy: T, cx: T, cy: T, width: usize, height: usize) -> Result<Self> {
        let k = Self { fx, fy, cx, cy, width, height };
        k.validate()?;
        Ok(k)
    }

    /// Square-pixel camera with the principal point at the image centre and
    /// the given horizontal field of view in degrees.
    pub fn from_fov(width: usize, height: usize, hfov_deg: T) -> Result<Self> {
        let half = deg_to_rad(hfov_deg) * T::half();
        if !(half > T::zero() && half < T::FRAC_PI_2()) {
            return Err(Error::invalid(format!("horizontal fov {hfov_deg} outside (0, 180)")));
        }
        let f = T::from_usize_lossy(width) * T::half() / half.tan();
        Self::new(
            f,
            f,
            T::from_usize_lossy(width - 1) * T::half(),
            T::from_usize_lossy(height - 1) * T::half(),
            width,
            height,
        )
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.fx > T::zero()
            && self.fy > T::zero()
            && self.fx.is_finite()
            && self.fy.is_finite()
            && self.width > 0
            && self.height > 0
            && self.cx >= T::zero()
            && self.cx < T::from_usize_lossy(self.width)
            && self.cy >= T::zero()
            && self.cy < T::from_usize_lossy(self.height);
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("invalid intrinsics {self:?}")))
        }
    }

    /// Geometry of the same camera sampled on a `k`-times coarser grid, where
    /// coarse cell `i` covers fine pixels `[k·i, k·i + k)`.
    pub fn downscaled(&self, k: usize) -> Result<Self> {
        if k == 0 || !self.width.is_multiple_of(k) || !self.height.is_multiple_of(k) {
            return Err(Error::Shape(format!(
                "{}x{} camera not divisible by {k}",
                self.width, self.height
            )));
        }
        let kf = T::from_usize_lossy(k);
        Ok(Self {
            fx: self.fx / kf,
            fy: self.fy / kf,
            cx: (self.cx + T::half()) / kf - T::half(),
            cy: (self.cy + T::half()) / kf - T::half(),
            width: self.width / k,
            height: self.height / k,
        })
    }

    /// Un-normalised camera ray with z = 1.
    #[inline]
    pub fn ray_z1(&self, u: T, v: T) -> Vec3<T> {
        Vec3::new((u - self.cx) / self.fx, (v - self.cy) / self.fy, T::one())
    }

    /// Camera-frame point → continuous pixel coordinate (requires z > 0).
    #[inline]
    pub fn project(&self, p: Vec3<T>) -> (T, T) {
        (self.fx * p.x / p.z + self.cx, self.fy * p.y / p.z + self.cy)
    }

    pub fn cast<U: Real>(&self) -> CameraIntrinsics<U> {
        CameraIntrinsics {
            fx: U::lit(self.fx.as_f64()),
            fy: U::lit(self.fy.as_f64()),
            cx: U::lit(self.cx.as_f64()),
            cy: U::lit(self.cy.as_f64()),
            width: self.width,
            height: self.height,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ViewKind<T> {
    Perspective(CameraIntrinsics<T>),
    /// Equirectangular rows spanning `[lat_min, lat_max]` (radians) and the
    /// full 360° of longitude.
    Equirect { width: usize, height: usize, lat_min: T, lat_max: T },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ViewSpec<T> {
    pub kind: ViewKind<T>,
    pub pose: Pose<T>,
}

impl<T: Real> ViewSpec<T> {
    pub fn perspective(intrinsics: CameraIntrinsics<T>, pose: Pose<T>) -> Self {
        Self { kind: ViewKind::Perspective(intrinsics), pose }
    }

    pub fn equirect(width: usize, height: usize, lat_min: T, lat_max: T, pose: Pose<T>) -> Result<Self> {
        let half_pi = T::FRAC_PI_2();
        if !(lat_min >= -half_pi && lat_max <= half_pi && lat_min < lat_max) || width == 0 || height == 0 {
            return Err(Error::invalid(format!(
                "equirect band [{lat_min}, {lat_max}] with {width}x{height} cells"
            )));
        }
        Ok(Self { kind: ViewKind::Equirect { width, height, lat_min, lat_max }, pose })
    }

    /// Latitude band `±band_half_deg` of a full panorama `width` cells wide,
    /// centred at `center` with identity orientation.
    pub fn equirect_band(center: Vec3<T>, width: usize, band_half_deg: T) -> Result<Self> {
        let half = deg_to_rad(band_half_deg);
        let rows = T::from_usize_lossy(width) * T::half() * (half * T::two()) / T::PI();
        let rows_i = rows.round().to_usize().unwrap_or(0);
        if (rows - T::from_usize_lossy(rows_i)).abs() > T::lit(1e-6) {
            return Err(Error::invalid(format!(
                "band ±{band_half_deg}° of a {width}-wide panorama is not a whole number of rows"
            )));
        }
        Self::equirect(width, rows_i, -half, half, Pose::new(crate::linalg::Mat3::identity(), center))
    }

    pub fn width(&self) -> usize {
        match self.kind {
            ViewKind::Perspective(k) => k.width,
            ViewKind::Equirect { width, .. } => width,
        }
    }

    pub fn height(&self) -> usize {
        match self.kind {
            ViewKind::Perspective(k) => k.height,
            ViewKind::Equirect { height, .. } => height,
        }
    }

    pub fn is_equirect(&self) -> bool {
        matches!(self.kind, ViewKind::Equirect { .. })
    }

    pub fn intrinsics(&self) -> Option<&CameraIntrinsics<T>> {
        match &self.kind {
            ViewKind::Perspective(k) => Some(k),
            ViewKind::Equirect { .. } => None,
        }
    }

    pub fn center(&self) -> Vec3<T> {
        self.pose.position
    }

    /// Same view sampled on a `k`-times coarser grid.
    pub fn downscaled(&self, k: usize) -> Result<Self> {
        let kind = match self.kind {
            ViewKind::Perspective(i) => ViewKind::Perspective(i.downscaled(k)?),
            ViewKind::Equirect { width, height, lat_min, lat_max } => {
                if k == 0 || width % k != 0 || height % k != 0 {
                    return Err(Error::Shape(format!("{width}x{height} panorama not divisible by {k}")));
                }
                ViewKind::Equirect { width: width / k, height: height / k, lat_min, lat_max }
            }
        };
        Ok(Self { kind, pose: self.pose })
    }

    /// The view geometry matching a `w × h` grid, which must be an integer
    /// downscale of the nominal resolution.
    pub fn at_resolution(&self, w: usize, h: usize) -> Result<Self> {
        if w == self.width() && h == self.height() {
            return Ok(*self);
        }
        if w == 0 || !self.width().is_multiple_of(w) {
            return Err(Error::Shape(format!("grid {w}x{h} vs view {}x{}", self.width(), self.height())));
        }
        let k = self.width() / w;
        if self.height() != h * k {
            return Err(Error::Shape(format!("grid {w}x{h} vs view {}x{}", self.width(), self.height())));
        }
        self.downscaled(k)
    }

    /// Camera-frame unit direction of a continuous pixel coordinate, without
    /// bounds checks.
    #[inline]
    pub fn camera_ray(&self, u: T, v: T) -> Vec3<T> {
        match &self.kind {
            ViewKind::Perspective(k) => k.ray_z1(u, v).normalized(),
            ViewKind::Equirect { width, height, lat_min, lat_max } => {
                let lon = T::PI()
                    * (T::two() * (u + T::half()) / T::from_usize_lossy(*width) - T::one());
                let lat = *lat_max
                    - (v + T::half()) / T::from_usize_lossy(*height) * (*lat_max - *lat_min);
                let (sl, cl) = lat.sin_cos();
                let (so, co) = lon.sin_cos();
                Vec3::new(cl * so, -sl, cl * co)
            }
        }
    }

    /// World-frame unit direction, without bounds checks.
    #[inline]
    pub fn world_ray(&self, u: T, v: T) -> Vec3<T> {
        self.pose.rotate(self.camera_ray(u, v))
    }

    fn contains_pixel(&self, u: T, v: T) -> bool {
        let lo = -T::half();
        u >= lo
            && v >= lo
            && u <= T::from_usize_lossy(self.width()) - T::half()
            && v <= T::from_usize_lossy(self.height()) - T::half()
    }

    /// World-frame unit direction through pixel `(u, v)`.
    pub fn pixel_to_ray(&self, u: T, v: T) -> Result<Vec3<T>> {
        if !(u.is_finite() && v.is_finite() && self.contains_pixel(u, v)) {
            return Err(Error::OutOfBounds {
                u: u.as_f64(),
                v: v.as_f64(),
                width: self.width(),
                height: self.height(),
            });
        }
        Ok(self.world_ray(u, v))
    }

    /// Continuous pixel coordinate of a world direction and whether it lies
    /// inside the view.
    #[inline]
    pub fn ray_to_pixel(&self, dir: Vec3<T>) -> (T, T, bool) {
        let d = self.pose.inverse_rotate(dir);
        self.camera_dir_to_pixel(d)
    }

    #[inline]
    pub fn camera_dir_to_pixel(&self, d: Vec3<T>) -> (T, T, bool) {
        match &self.kind {
            ViewKind::Perspective(k) => {
                if d.z <= T::zero() {
                    return (T::nan(), T::nan(), false);
                }
                let (u, v) = k.project(d);
                (u, v, self.contains_pixel(u, v))
            }
            ViewKind::Equirect { width, height, lat_min, lat_max } => {
                let n = d.norm();
                let lon = d.x.atan2(d.z);
                let lat = (-d.y / n).max(-T::one()).min(T::one()).asin();
                let u = (lon / T::PI() + T::one()) * T::from_usize_lossy(*width) * T::half() - T::half();
                let v = (*lat_max - lat) / (*lat_max - *lat_min) * T::from_usize_lossy(*height) - T::half();
                let inside = lat >= *lat_min && lat <= *lat_max;
                (u, v, inside)
            }
        }
    }

    /// Range of a world point along this view's ray: camera-frame z for
    /// perspective views, Euclidean distance for equirectangular ones.
    #[inline]
    pub fn range_of(&self, world: Vec3<T>) -> T {
        let p = self.pose.inverse_transform_point(world);
        match self.kind {
            ViewKind::Perspective(_) => p.z,
            ViewKind::Equirect { .. } => p.norm(),
        }
    }

    /// World point at the given range through pixel `(u, v)`; the inverse of
    /// [`ViewSpec::range_of`].
    #[inline]
    pub fn unproject(&self, u: T, v: T, range: T) -> Vec3<T> {
        let cam = match &self.kind {
            ViewKind::Perspective(k) => k.ray_z1(u, v) * range,
            ViewKind::Equirect { .. } => self.camera_ray(u, v) * range,
        };
        self.pose.transform_point(cam)
    }

    pub fn with_pose(&self, pose: Pose<T>) -> Self {
        Self { kind: self.kind, pose }
    }

    pub fn cast<U: Real>(&self) -> ViewSpec<U> {
        let kind = match self.kind {
            ViewKind::Perspective(k) => ViewKind::Perspective(k.cast()),
            ViewKind::Equirect { width, height, lat_min, lat_max } => ViewKind::Equirect {
                width,
                height,
                lat_min: U::lit(lat_min.as_f64()),
                lat_max: U::lit(lat_max.as_f64()),
            },
        };
        ViewSpec { kind, pose: self.pose.cast() }
    }
}

/// Whether two views share an optical centre (within a tolerance scaled to
/// the scalar precision).
pub fn shared_center<T: Real>(a: &ViewSpec<T>, b: &ViewSpec<T>) -> bool {
    let tol = T::epsilon().sqrt() * (T::one() + a.center().norm());
    (a.center() - b.center()).norm() <= tol
}

pub fn ensure_shared_center<T: Real>(views: &[ViewSpec<T>]) -> Result<()> {
    if let Some(first) = views.first() {
        for (i, v) in views.iter().enumerate().skip(1) {
            if !shared_center(first, v) {
                return Err(Error::NonSharedCenter(format!(
                    "view {i} at {:?} vs view 0 at {:?}",
                    v.center(),
                    first.center()
                )));
            }
        }
    }
    Ok(())
}

/// Per-pixel range along each ray with a validity mask.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceGrid<T> {
    pub values: Grid<T>,
    pub valid: Mask,
}

impl<T: Real> DistanceGrid<T> {
    pub fn new(values: Grid<T>, valid: Mask) -> Result<Self> {
        if values.channels() != 1 || values.width() != valid.width() || values.height() != valid.height() {
            return Err(Error::Shape("distance grid values/mask mismatch".into()));
        }
        Ok(Self { values, valid })
    }

    /// Valid wherever the value is finite and strictly positive.
    pub fn from_values(values: Grid<T>) -> Self {
        let valid = Mask::from_fn(values.width(), values.height(), |x, y| {
            let v = values.get(x, y, 0);
            v.is_finite() && v > T::zero()
        });
        let values = Grid::from_fn(values.width(), values.height(), 1, |x, y, _| {
            if valid.get(x, y) {
                values.get(x, y, 0)
            } else {
                T::zero()
            }
        });
        Self { values, valid }
    }

    pub fn width(&self) -> usize {
        self.values.width()
    }

    pub fn height(&self) -> usize {
        self.values.height()
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> Option<T> {
        self.valid.get(x, y).then(|| self.values.get(x, y, 0))
    }
}

fn perspective_for<T: Real>(view: &ViewSpec<T>, w: usize, h: usize) -> Result<CameraIntrinsics<T>> {
    let scaled = view.at_resolution(w, h)?;
    match scaled.kind {
        ViewKind::Perspective(k) => Ok(k),
        ViewKind::Equirect { .. } => Err(Error::invalid(
            "equirectangular grids store distance natively; no z-depth conversion",
        )),
    }
}

/// Camera-frame z-depth (0 = invalid) → distance along each pixel ray.
pub fn depth_to_distance<T: Real>(depth: &Grid<T>, view: &ViewSpec<T>) -> Result<DistanceGrid<T>> {
    if depth.channels() != 1 {
        return Err(Error::Shape("depth grid must have one channel".into()));
    }
    let k = perspective_for(view, depth.width(), depth.height())?;
    let valid = Mask::from_fn(depth.width(), depth.height(), |x, y| {
        let d = depth.get(x, y, 0);
        d.is_finite() && d > T::zero()
    });
    let values = Grid::from_fn(depth.width(), depth.height(), 1, |x, y, _| {
        if valid.get(x, y) {
            let r = k.ray_z1(T::from_usize_lossy(x), T::from_usize_lossy(y));
            depth.get(x, y, 0) * r.norm()
        } else {
            T::zero()
        }
    });
    Ok(DistanceGrid { values, valid })
}

/// Inverse of [`depth_to_distance`]; invalid cells become depth 0.
pub fn distance_to_depth<T: Real>(dist: &DistanceGrid<T>, view: &ViewSpec<T>) -> Result<Grid<T>> {
    let k = perspective_for(view, dist.width(), dist.height())?;
    Ok(Grid::from_fn(dist.width(), dist.height(), 1, |x, y, _| match dist.get(x, y) {
        Some(d) => {
            let r = k.ray_z1(T::from_usize_lossy(x), T::from_usize_lossy(y));
            d / r.norm()
        }
        None => T::zero(),
    }))
}

/// Layout of the shared-center perspective fan used to decompose a panorama.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FanSpec<T> {
    pub count: usize,
    pub fov_deg: T,
    /// Square view size in pixels.
    pub size: usize,
    pub band_half_deg: T,
}

impl<T: Real> Default for FanSpec<T> {
    fn default() -> Self {
        Self { count: 8, fov_deg: T::lit(98.0), size: 512, band_half_deg: T::lit(45.0) }
    }
}

impl<T: Real> FanSpec<T> {
    /// Checks the overlap and band-coverage conditions. A band cell at
    /// latitude φ and azimuth offset α from the nearest view axis is inside a
    /// view (with a half-pixel bilinear margin) iff
    /// `tan α ≤ t` and `tan φ ≤ t · cos α`, `t = tan(fov/2) · (size − 1)/size`.
    /// The worst cell sits midway between two views at the band edge.
    pub fn validate(&self) -> Result<()> {
        if self.count < 3 {
            return Err(Error::invalid(format!("need at least 3 views, got {}", self.count)));
        }
        if self.size < 2 {
            return Err(Error::invalid("view size must be at least 2 pixels"));
        }
        let fov = self.fov_deg;
        if !(fov > T::zero() && fov < T::lit(180.0)) {
            return Err(Error::invalid(format!("fov {fov} outside (0, 180)")));
        }
        let step = T::lit(360.0) / T::from_usize_lossy(self.count);
        if fov <= step {
            return Err(Error::Coverage(format!(
                "fov {fov}° leaves no horizontal overlap between {} views ({step}° apart)",
                self.count
            )));
        }
        let s = T::from_usize_lossy(self.size);
        let t = (deg_to_rad(fov) * T::half()).tan() * (s - T::one()) / s;
        let half_gap = deg_to_rad(step) * T::half();
        let band = deg_to_rad(self.band_half_deg);
        if half_gap.tan() > t || band.tan() > t * half_gap.cos() {
            return Err(Error::Coverage(format!(
                "{} views of {fov}° do not cover the ±{}° band (vertical half-angle {}°)",
                self.count,
                self.band_half_deg,
                fov * T::half()
            )));
        }
        Ok(())
    }

    pub fn intrinsics(&self) -> Result<CameraIntrinsics<T>> {
        CameraIntrinsics::from_fov(self.size, self.size, self.fov_deg)
    }
}

/// `spec.count` square perspective views at `center`, pitch 0, yaw
/// `k · 360°/count`.
pub fn make_pano_views<T: Real>(center: Vec3<T>, spec: &FanSpec<T>) -> Result<Vec<ViewSpec<T>>> {
    spec.validate()?;
    let k = spec.intrinsics()?;
    let step = T::two() * T::PI() / T::from_usize_lossy(spec.count);
    Ok((0..spec.count)
        .map(|i| {
            let yaw = step * T::from_usize_lossy(i);
            ViewSpec::perspective(k, Pose::from_yaw_pitch(center, yaw, T::zero()))
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cam() -> ViewSpec<f64> {
        ViewSpec::perspective(
            CameraIntrinsics::new(100.0, 100.0, 64.0, 64.0, 200, 128).unwrap(),
            Pose::identity(),
        )
    }

    #[test]
    fn principal_point_looks_forward() {
        let d = cam().pixel_to_ray(64.0, 64.0).unwrap();
        assert_relative_eq!(d.z, 1.0);
        assert_relative_eq!(d.x, 0.0);
    }

    #[test]
    fn off_axis_pixel_normalizes() {
        let d = cam().pixel_to_ray(164.0, 64.0).unwrap();
        assert!((d.x - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12 && (d.z - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12 && d.y.abs() < 1e-12);
    }

    #[test]
    fn equirect_center_and_east() {
        let v = ViewSpec::<f64>::equirect(
            2048,
            1024,
            -std::f64::consts::FRAC_PI_2,
            std::f64::consts::FRAC_PI_2,
            Pose::identity(),
        )
        .unwrap();
        let d = v.pixel_to_ray(1023.5, 511.5).unwrap();
        assert!((d - Vec3::new(0.0, 0.0, 1.0)).norm() < 1e-12);
        let (u, _, inside) = v.ray_to_pixel(Vec3::new(1.0, 0.0, 0.0));
        assert!(inside);
        assert_relative_eq!(u, 1535.5, epsilon = 1e-9);
    }

    #[test]
    fn out_of_bounds_pixel_rejected() {
        assert!(matches!(cam().pixel_to_ray(-1.0, 3.0), Err(Error::OutOfBounds { .. })));
        assert!(cam().pixel_to_ray(199.5, 127.5).is_ok());
    }

    #[test]
    fn behind_camera_is_outside() {
        let (_, _, inside) = cam().ray_to_pixel(Vec3::new(0.0, 0.0, -1.0));
        assert!(!inside);
    }

    #[test]
    fn depth_distance_conversions() {
        let v = cam();
        let mut depth = Grid::zeros(200, 128, 1);
        depth.set(64, 64, 0, 2.0);
        depth.set(164, 64, 0, 2.0);
        let dist = depth_to_distance(&depth, &v).unwrap();
        assert_relative_eq!(dist.get(64, 64).unwrap(), 2.0);
        assert_relative_eq!(dist.get(164, 64).unwrap(), 2.0 * 2f64.sqrt(), epsilon = 1e-12);
        assert!(dist.get(0, 0).is_none());
        let back = distance_to_depth(&dist, &v).unwrap();
        assert!(back.max_abs_diff(&depth) < 1e-12);
    }

    #[test]
    fn equirect_depth_conversion_rejected() {
        let v = ViewSpec::<f64>::equirect_band(Vec3::zero(), 256, 45.0).unwrap();
        assert!(depth_to_distance(&Grid::zeros(256, 64, 1), &v).is_err());
    }

    #[test]
    fn default_band_is_2048_by_512() {
        let v = ViewSpec::<f64>::equirect_band(Vec3::zero(), 2048, 45.0).unwrap();
        assert_eq!((v.width(), v.height()), (2048, 512));
    }

    #[test]
    fn fan_defaults_and_rejections() {
        let views = make_pano_views(Vec3::<f64>::zero(), &FanSpec::default()).unwrap();
        assert_eq!(views.len(), 8);
        for (i, v) in views.iter().enumerate() {
            let f = v.pose.forward();
            let yaw = f.x.atan2(f.z).to_degrees().rem_euclid(360.0);
            assert!((yaw - 45.0 * i as f64).abs() < 1e-9);
        }
        let narrow = FanSpec { fov_deg: 88.0, ..FanSpec::default() };
        assert!(matches!(make_pano_views(Vec3::zero(), &narrow), Err(Error::Coverage(_))));
        let four = FanSpec { count: 4, fov_deg: 90.0, ..FanSpec::default() };
        assert!(matches!(make_pano_views(Vec3::zero(), &four), Err(Error::Coverage(_))));
    }

    #[test]
    fn downscaled_camera_maps_cell_centres() {
        let k = CameraIntrinsics::<f64>::from_fov(512, 512, 98.0).unwrap();
        let c = k.downscaled(8).unwrap();
        // coarse cell 0 centre = fine pixel 3.5
        let fine = k.ray_z1(3.5, 3.5);
        let coarse = c.ray_z1(0.0, 0.0);
        assert!((fine - coarse).norm() < 1e-12);
    }
}
