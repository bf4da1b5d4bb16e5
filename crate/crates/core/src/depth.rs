//! Monocular depth completion for a shared-centre view fan: scale alignment
//! to rendered depth, anchored refinement and cross-view distance fusion.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::camera::{depth_to_distance, distance_to_depth, ensure_shared_center, DistanceGrid, ViewSpec};
use crate::error::{Error, Result};
use crate::grid::{Grid, Image, Mask};
use crate::mesh::{render, TriangleMesh};
use crate::numeric::Real;
use crate::warp::WarpMap;

/// Monocular depth backend. Depth grids hold camera z, 0 = undefined.
pub trait DepthPredictor<T: Real>: Send + Sync {
    fn predict_initial(&self, image: &Image<T>, view: &ViewSpec<T>) -> Result<Grid<T>>;

    /// Improves `depth` so that it agrees with `anchor` where `anchor_mask`
    /// is set.
    fn refine(
        &self,
        image: &Image<T>,
        depth: &Grid<T>,
        anchor: &Grid<T>,
        anchor_mask: &Mask,
        view: &ViewSpec<T>,
    ) -> Result<Grid<T>>;

    fn concurrent(&self) -> bool {
        true
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthFusionConfig<T> {
    /// Refine-and-fuse rounds after the initial fusion.
    pub refine_iters: usize,
    /// Largest deviation from the rendered value an anchored pixel may keep
    /// after a refine round; larger deviations are reset.
    pub anchor_tolerance: T,
}

impl<T: Real> Default for DepthFusionConfig<T> {
    fn default() -> Self {
        Self { refine_iters: 4, anchor_tolerance: T::lit(1e-3) }
    }
}

/// Least-squares scale `s = Σ p·r / Σ p²` over masked pixels where both
/// depths are positive.
pub fn align_scale<T: Real>(pred: &Grid<T>, rendered: &Grid<T>, mask: &Mask) -> Result<T> {
    pred.ensure_same_shape(rendered, "align_scale")?;
    if (mask.width(), mask.height()) != (pred.width(), pred.height()) || pred.channels() != 1 {
        return Err(Error::Shape("align_scale mask / channel mismatch".into()));
    }
    let (mut pr, mut pp, mut n) = (T::zero(), T::zero(), 0usize);
    for (i, (&p, &r)) in pred.data().iter().zip(rendered.data()).enumerate() {
        if mask.data()[i] && p > T::zero() && r > T::zero() {
            pr += p * r;
            pp += p * p;
            n += 1;
        }
    }
    if n == 0 || pp <= T::zero() {
        return Err(Error::Empty("no pixel with both predicted and rendered depth".into()));
    }
    Ok(pr / pp)
}

/// Precomputed pairwise warps for repeated distance fusion.
struct DistanceFuser<T> {
    maps: Vec<Vec<(usize, WarpMap<T>)>>,
}

impl<T: Real> DistanceFuser<T> {
    fn new(views: &[ViewSpec<T>]) -> Result<Self> {
        ensure_shared_center(views)?;
        let mut maps = Vec::with_capacity(views.len());
        for (i, vi) in views.iter().enumerate() {
            let mut row = Vec::new();
            for (j, vj) in views.iter().enumerate() {
                if i != j {
                    let m = WarpMap::new(vj, (vj.width(), vj.height()), vi, (vi.width(), vi.height()))?;
                    if m.coverage() > 0 {
                        row.push((j, m));
                    }
                }
            }
            maps.push(row);
        }
        Ok(Self { maps })
    }

    fn fuse(&self, dists: &[DistanceGrid<T>]) -> Result<Vec<DistanceGrid<T>>> {
        if dists.len() != self.maps.len() {
            return Err(Error::Shape(format!("{} distance grids for {} views", dists.len(), self.maps.len())));
        }
        let stacked: Vec<Grid<T>> = dists
            .iter()
            .map(|d| Grid::stack(&[&d.values, &d.valid.to_grid()]))
            .collect::<Result<_>>()?;
        let full = T::one() - T::lit(1e-9);
        let fused = |i: usize| -> Result<DistanceGrid<T>> {
            let own = &dists[i];
            let (w, h) = (own.width(), own.height());
            let mut sum: Vec<T> = own.values.data().to_vec();
            let mut count: Vec<u32> = own.valid.data().iter().map(|&v| u32::from(v)).collect();
            for (j, map) in &self.maps[i] {
                let mut acc = Grid::zeros(w, h, 2);
                map.accumulate(&stacked[*j], &mut acc, None)?;
                for cell in 0..w * h {
                    // all four taps valid: the value is a proper interpolant
                    if own.valid.data()[cell] && map.covers(cell) && acc.data()[cell * 2 + 1] >= full {
                        sum[cell] += acc.data()[cell * 2];
                        count[cell] += 1;
                    }
                }
            }
            let values = (0..w * h)
                .map(|c| if count[c] > 0 { sum[c] / T::from(count[c]).expect("count") } else { T::zero() })
                .collect();
            DistanceGrid::new(Grid::from_vec(w, h, 1, values)?, own.valid.clone())
        };
        (0..dists.len()).into_par_iter().map(fused).collect()
    }
}

/// Averages each view's valid distances with the valid distances warped in
/// from every other view. Validity is unchanged.
pub fn fuse_distances<T: Real>(views: &[ViewSpec<T>], dists: &[DistanceGrid<T>]) -> Result<Vec<DistanceGrid<T>>> {
    if views.len() != dists.len() {
        return Err(Error::Shape(format!("{} views vs {} distance grids", views.len(), dists.len())));
    }
    for (v, d) in views.iter().zip(dists) {
        if (v.width(), v.height()) != (d.width(), d.height()) {
            return Err(Error::Shape("distance grid does not match its view".into()));
        }
    }
    DistanceFuser::new(views)?.fuse(dists)
}

/// Inputs for one fan view.
#[derive(Debug, Clone)]
pub struct ViewDepthInput<T> {
    pub view: ViewSpec<T>,
    /// Inpainted colour seen by the predictor.
    pub image: Image<T>,
    /// Rendered camera z of the existing geometry, 0 = none.
    pub rendered: Grid<T>,
    /// Pixels whose rendered depth is trusted.
    pub anchor: Mask,
}

#[derive(Debug, Clone)]
pub struct PanoramaDepth<T> {
    /// Fused distance on the equirectangular band.
    pub band: DistanceGrid<T>,
    /// Final fused per-view distances.
    pub views: Vec<DistanceGrid<T>>,
    /// Scale applied to each view's initial prediction.
    pub scales: Vec<T>,
}

fn checked<T: Real>(d: Grid<T>, like: &ViewSpec<T>, view: usize) -> Result<Grid<T>> {
    if d.dims() != (like.width(), like.height(), 1) {
        return Err(Error::Predictor { view, msg: format!("returned {:?}, expected {}x{}x1", d.dims(), like.width(), like.height()) });
    }
    Ok(d.map(|v| if v.is_finite() && v > T::zero() { v } else { T::zero() }))
}

fn reset_anchors<T: Real>(dist: &mut DistanceGrid<T>, anchor_dist: &DistanceGrid<T>, anchor: &Mask) {
    for cell in 0..anchor.len() {
        if anchor.data()[cell] && anchor_dist.valid.data()[cell] {
            dist.values.data_mut()[cell] = anchor_dist.values.data()[cell];
            // anchors always carry a value, even if the prediction did not
            let (x, y) = (cell % anchor.width(), cell / anchor.width());
            dist.valid.set(x, y, true);
        }
    }
}

/// Fan depth completion: predict, align to the rendered depth once, fuse,
/// then `refine_iters` rounds of refine-against-anchors and fuse; the
/// fused distances are stitched into `band`.
///
/// Anchored pixels are reset to their rendered distance after each
/// refinement and each fusion. A view without anchors takes the mean scale
/// of the views that have some (1 when none do).
pub fn inpaint_panorama_depth<T: Real>(
    inputs: &[ViewDepthInput<T>],
    predictor: &dyn DepthPredictor<T>,
    cfg: &DepthFusionConfig<T>,
    band: &ViewSpec<T>,
) -> Result<PanoramaDepth<T>> {
    if inputs.is_empty() {
        return Err(Error::Empty("no views for depth completion".into()));
    }
    let views: Vec<_> = inputs.iter().map(|i| i.view).collect();
    let fuser = DistanceFuser::new(&views)?;
    let anchor_dists: Vec<DistanceGrid<T>> = inputs
        .iter()
        .map(|inp| {
            let masked = Grid::from_fn(inp.rendered.width(), inp.rendered.height(), 1, |x, y, _| {
                if inp.anchor.get(x, y) {
                    inp.rendered.get(x, y, 0)
                } else {
                    T::zero()
                }
            });
            depth_to_distance(&masked, &inp.view)
        })
        .collect::<Result<_>>()?;

    let run = |f: &(dyn Fn(usize) -> Result<Grid<T>> + Sync)| -> Result<Vec<Grid<T>>> {
        if predictor.concurrent() {
            (0..inputs.len()).into_par_iter().map(f).collect()
        } else {
            (0..inputs.len()).map(f).collect()
        }
    };

    let initial = run(&|i| {
        let inp = &inputs[i];
        let d = predictor
            .predict_initial(&inp.image, &inp.view)
            .map_err(|e| e.in_stage(format!("depth prediction, view {i}")))?;
        checked(d, &inp.view, i)
    })?;

    let mut scales: Vec<Option<T>> = Vec::with_capacity(inputs.len());
    for (inp, d) in inputs.iter().zip(&initial) {
        scales.push(align_scale(d, &inp.rendered, &inp.anchor).ok());
    }
    let known: Vec<T> = scales.iter().flatten().copied().collect();
    let fallback = if known.is_empty() {
        T::one()
    } else {
        known.iter().copied().sum::<T>() / T::from_usize_lossy(known.len())
    };
    let scales: Vec<T> = scales.into_iter().map(|s| s.unwrap_or(fallback)).collect();

    let mut dists = Vec::with_capacity(inputs.len());
    for (i, inp) in inputs.iter().enumerate() {
        let s = scales[i];
        dists.push(depth_to_distance(&initial[i].map(|v| v * s), &inp.view)?);
    }
    let mut fused = fuser.fuse(&dists)?;
    for (i, inp) in inputs.iter().enumerate() {
        reset_anchors(&mut fused[i], &anchor_dists[i], &inp.anchor);
    }

    for _ in 0..cfg.refine_iters {
        let refined = run(&|i| {
            let inp = &inputs[i];
            let depth = distance_to_depth(&fused[i], &inp.view)?;
            let r = predictor
                .refine(&inp.image, &depth, &inp.rendered, &inp.anchor, &inp.view)
                .map_err(|e| e.in_stage(format!("depth refinement, view {i}")))?;
            checked(r, &inp.view, i)
        })?;
        let mut dists = Vec::with_capacity(inputs.len());
        for (i, inp) in inputs.iter().enumerate() {
            let mut d = depth_to_distance(&refined[i], &inp.view)?;
            let tol = cfg.anchor_tolerance;
            for cell in 0..inp.anchor.len() {
                if inp.anchor.data()[cell] && anchor_dists[i].valid.data()[cell] {
                    let a = anchor_dists[i].values.data()[cell];
                    if (d.values.data()[cell] - a).abs() > tol || !d.valid.data()[cell] {
                        d.values.data_mut()[cell] = a;
                        let w = inp.anchor.width();
                        d.valid.set(cell % w, cell / w, true);
                    }
                }
            }
            dists.push(d);
        }
        fused = fuser.fuse(&dists)?;
        for (i, inp) in inputs.iter().enumerate() {
            reset_anchors(&mut fused[i], &anchor_dists[i], &inp.anchor);
        }
    }

    let band_dist = stitch_distances(&views, &fused, band)?;
    Ok(PanoramaDepth { band: band_dist, views: fused, scales })
}

/// Depth completion for a lone view: predict, align to the anchors, then
/// `refine_iters` refinements. Anchored pixels keep their rendered depth.
/// Returns camera z and the applied scale.
pub fn complete_view_depth<T: Real>(
    input: &ViewDepthInput<T>,
    predictor: &dyn DepthPredictor<T>,
    cfg: &DepthFusionConfig<T>,
) -> Result<(Grid<T>, T)> {
    let view = &input.view;
    let pin = |d: &mut Grid<T>| {
        for y in 0..d.height() {
            for x in 0..d.width() {
                let a = input.rendered.get(x, y, 0);
                if input.anchor.get(x, y) && a > T::zero() {
                    d.set(x, y, 0, a);
                }
            }
        }
    };
    let d0 = checked(predictor.predict_initial(&input.image, view)?, view, 0)?;
    let s = align_scale(&d0, &input.rendered, &input.anchor).unwrap_or(T::one());
    let mut depth = d0.map(|v| v * s);
    pin(&mut depth);
    for _ in 0..cfg.refine_iters {
        depth = checked(predictor.refine(&input.image, &depth, &input.rendered, &input.anchor, view)?, view, 0)?;
        pin(&mut depth);
    }
    Ok((depth, s))
}

/// Mean of valid warped distances per band cell; a contribution counts only
/// if all of its bilinear taps are valid.
pub fn stitch_distances<T: Real>(
    views: &[ViewSpec<T>],
    dists: &[DistanceGrid<T>],
    band: &ViewSpec<T>,
) -> Result<DistanceGrid<T>> {
    let (w, h) = (band.width(), band.height());
    let mut sum = vec![T::zero(); w * h];
    let mut count = vec![0u32; w * h];
    let full = T::one() - T::lit(1e-9);
    for (v, d) in views.iter().zip(dists) {
        let map = WarpMap::new(v, (d.width(), d.height()), band, (w, h))?;
        let src = Grid::stack(&[&d.values, &d.valid.to_grid()])?;
        let mut acc = Grid::zeros(w, h, 2);
        map.accumulate(&src, &mut acc, None)?;
        for cell in 0..w * h {
            if map.covers(cell) && acc.data()[cell * 2 + 1] >= full {
                sum[cell] += acc.data()[cell * 2];
                count[cell] += 1;
            }
        }
    }
    let values = (0..w * h)
        .map(|c| if count[c] > 0 { sum[c] / T::from(count[c]).expect("count") } else { T::zero() })
        .collect();
    let valid = Mask::from_vec(w, h, count.iter().map(|&n| n > 0).collect())?;
    DistanceGrid::new(Grid::from_vec(w, h, 1, values)?, valid)
}

/// Test double backed by a reference mesh: the initial prediction is the
/// rendered depth times `scale`; refinement returns the rendered depth
/// rescaled onto the anchors, with anchored pixels copied exactly.
pub struct OracleDepth<T> {
    pub mesh: TriangleMesh<T>,
    pub scale: T,
}

impl<T: Real> OracleDepth<T> {
    fn truth(&self, view: &ViewSpec<T>) -> Result<Grid<T>> {
        Ok(render(&self.mesh, view)?.depth)
    }
}

impl<T: Real> DepthPredictor<T> for OracleDepth<T> {
    fn predict_initial(&self, _image: &Image<T>, view: &ViewSpec<T>) -> Result<Grid<T>> {
        let s = self.scale;
        Ok(self.truth(view)?.map(|d| d * s))
    }

    fn refine(
        &self,
        _image: &Image<T>,
        depth: &Grid<T>,
        anchor: &Grid<T>,
        anchor_mask: &Mask,
        view: &ViewSpec<T>,
    ) -> Result<Grid<T>> {
        let truth = self.truth(view)?;
        let s = align_scale(&truth, anchor, anchor_mask).unwrap_or(T::one());
        Ok(Grid::from_fn(truth.width(), truth.height(), 1, |x, y, _| {
            if anchor_mask.get(x, y) && anchor.get(x, y, 0) > T::zero() {
                anchor.get(x, y, 0)
            } else if truth.get(x, y, 0) > T::zero() {
                truth.get(x, y, 0) * s
            } else {
                depth.get(x, y, 0)
            }
        }))
    }
}

/// Geometry-free predictor: a constant initial depth, refined by harmonic
/// interpolation between the anchors.
#[derive(Debug, Clone, Copy)]
pub struct HarmonicDepth<T> {
    pub initial: T,
}

impl<T: Real> Default for HarmonicDepth<T> {
    fn default() -> Self {
        Self { initial: T::lit(2.0) }
    }
}

impl<T: Real> DepthPredictor<T> for HarmonicDepth<T> {
    fn predict_initial(&self, _image: &Image<T>, view: &ViewSpec<T>) -> Result<Grid<T>> {
        Ok(Grid::filled(view.width(), view.height(), 1, self.initial))
    }

    fn refine(
        &self,
        _image: &Image<T>,
        depth: &Grid<T>,
        anchor: &Grid<T>,
        anchor_mask: &Mask,
        _view: &ViewSpec<T>,
    ) -> Result<Grid<T>> {
        let fixed = Mask::from_fn(depth.width(), depth.height(), |x, y| {
            anchor_mask.get(x, y) && anchor.get(x, y, 0) > T::zero()
        });
        if !fixed.any() {
            return Ok(depth.clone());
        }
        let init = Grid::from_fn(depth.width(), depth.height(), 1, |x, y, _| {
            if fixed.get(x, y) {
                anchor.get(x, y, 0)
            } else {
                depth.get(x, y, 0)
            }
        });
        Ok(harmonic_fill(&init, &fixed))
    }
}

/// Solves the discrete Laplace equation on the free cells with the fixed
/// cells as boundary values, coarse-to-fine with SOR sweeps at each level.
pub fn harmonic_fill<T: Real>(values: &Grid<T>, fixed: &Mask) -> Grid<T> {
    let (w, h) = (values.width(), values.height());
    let mut out = values.clone();
    if w > 8 && h > 8 && fixed.any() {
        let (cw, ch) = (w.div_ceil(2), h.div_ceil(2));
        let mut cv = Grid::zeros(cw, ch, 1);
        let mut cf = Mask::new(cw, ch, false);
        for y in 0..ch {
            for x in 0..cw {
                let (mut s, mut n, mut sa, mut na) = (T::zero(), 0, T::zero(), 0);
                for (xx, yy) in [(2 * x, 2 * y), (2 * x + 1, 2 * y), (2 * x, 2 * y + 1), (2 * x + 1, 2 * y + 1)] {
                    if xx < w && yy < h {
                        s += values.get(xx, yy, 0);
                        n += 1;
                        if fixed.get(xx, yy) {
                            sa += values.get(xx, yy, 0);
                            na += 1;
                        }
                    }
                }
                if na > 0 {
                    cv.set(x, y, 0, sa / T::from_usize_lossy(na));
                    cf.set(x, y, true);
                } else {
                    cv.set(x, y, 0, s / T::from_usize_lossy(n));
                }
            }
        }
        let coarse = harmonic_fill(&cv, &cf);
        for y in 0..h {
            for x in 0..w {
                if !fixed.get(x, y) {
                    out.set(x, y, 0, coarse.get(x / 2, y / 2, 0));
                }
            }
        }
    }
    let omega = T::lit(1.6);
    let tol = T::lit(1e-7);
    for _ in 0..400 {
        let mut change = T::zero();
        for y in 0..h {
            for x in 0..w {
                if fixed.get(x, y) {
                    continue;
                }
                let (mut s, mut n) = (T::zero(), 0);
                if x > 0 {
                    s += out.get(x - 1, y, 0);
                    n += 1;
                }
                if x + 1 < w {
                    s += out.get(x + 1, y, 0);
                    n += 1;
                }
                if y > 0 {
                    s += out.get(x, y - 1, 0);
                    n += 1;
                }
                if y + 1 < h {
                    s += out.get(x, y + 1, 0);
                    n += 1;
                }
                let cur = out.get(x, y, 0);
                let target = s / T::from_usize_lossy(n);
                let step = omega * (target - cur);
                change = change.max(step.abs());
                out.set(x, y, 0, cur + step);
            }
        }
        if change < tol {
            break;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::camera::{make_pano_views, CameraIntrinsics, FanSpec};
    use crate::linalg::{Pose, Vec3};

    #[test]
    fn align_scale_examples() {
        let r = Grid::from_fn(4, 4, 1, |x, y, _| 1.0 + (x + y) as f64 * 0.1);
        let m = Mask::new(4, 4, true);
        assert!((align_scale(&r, &r, &m).unwrap() - 1.0).abs() < 1e-15);
        assert!((align_scale(&r.map(|v| 2.0 * v), &r, &m).unwrap() - 0.5).abs() < 1e-15);
        assert!(align_scale(&r, &r, &Mask::new(4, 4, false)).is_err());
    }

    fn spherical_fan(size: usize) -> (Vec<ViewSpec<f64>>, Vec<DistanceGrid<f64>>) {
        let views = make_pano_views(Vec3::new(0.0, 0.0, 0.0), &FanSpec { size, ..FanSpec::default() }).unwrap();
        let field = |d: Vec3<f64>| 2.0 + 0.3 * d.x + 0.2 * d.z * d.z;
        let dists = views
            .iter()
            .map(|v| {
                DistanceGrid::from_values(Grid::from_fn(size, size, 1, |x, y, _| field(v.world_ray(x as f64, y as f64))))
            })
            .collect();
        (views, dists)
    }

    #[test]
    fn fusion_fixed_point_and_identity() {
        let (views, dists) = spherical_fan(64);
        let one = fuse_distances(&views[..1], &dists[..1]).unwrap();
        assert_eq!(one[0], dists[0]);
        let fused = fuse_distances(&views, &dists).unwrap();
        for (a, b) in fused.iter().zip(&dists) {
            assert!(a.values.max_abs_diff(&b.values) < 1e-3);
            assert_eq!(a.valid, b.valid);
        }
    }

    #[test]
    fn coincident_views_take_the_mean() {
        let (views, dists) = spherical_fan(32);
        let shifted = DistanceGrid::from_values(dists[0].values.map(|v| v + 0.2));
        let fused = fuse_distances(&[views[0], views[0]], &[dists[0].clone(), shifted]).unwrap();
        let want = dists[0].values.map(|v| v + 0.1);
        assert!(fused[0].values.max_abs_diff(&want) < 1e-12);
    }

    #[test]
    fn harmonic_fill_reproduces_linear_ramp() {
        let truth = Grid::from_fn(40, 30, 1, |x, y, _| 1.0 + 0.05 * x as f64 + 0.02 * y as f64);
        let fixed = Mask::from_fn(40, 30, |x, y| x == 0 || y == 0 || x == 39 || y == 29);
        let init = Grid::from_fn(40, 30, 1, |x, y, _| if fixed.get(x, y) { truth.get(x, y, 0) } else { 3.0 });
        let out = harmonic_fill(&init, &fixed);
        assert!(out.max_abs_diff(&truth) < 1e-3, "{}", out.max_abs_diff(&truth));
    }

    #[test]
    fn anchorless_views_use_mean_scale() {
        // quad at z = 2 seen by one view, the other view sees nothing
        let k = CameraIntrinsics::<f64>::from_fov(16, 16, 60.0).unwrap();
        let v0 = ViewSpec::perspective(k, Pose::identity());
        let v1 = ViewSpec::perspective(k, Pose::from_yaw_pitch(Vec3::zero(), std::f64::consts::PI, 0.0));
        struct Const;
        impl DepthPredictor<f64> for Const {
            fn predict_initial(&self, _: &Image<f64>, v: &ViewSpec<f64>) -> Result<Grid<f64>> {
                Ok(Grid::filled(v.width(), v.height(), 1, 4.0))
            }
            fn refine(&self, _: &Image<f64>, d: &Grid<f64>, _: &Grid<f64>, _: &Mask, _: &ViewSpec<f64>) -> Result<Grid<f64>> {
                Ok(d.clone())
            }
        }
        let mk = |v: ViewSpec<f64>, depth: f64, anchored: bool| ViewDepthInput {
            view: v,
            image: Grid::zeros(16, 16, 3),
            rendered: Grid::filled(16, 16, 1, depth),
            anchor: Mask::new(16, 16, anchored),
        };
        let band = ViewSpec::equirect_band(Vec3::zero(), 64, 45.0).unwrap();
        let out = inpaint_panorama_depth(
            &[mk(v0, 2.0, true), mk(v1, 0.0, false)],
            &Const,
            &DepthFusionConfig { refine_iters: 0, ..Default::default() },
            &band,
        )
        .unwrap();
        assert_eq!(out.scales, vec![0.5, 0.5]);
    }

    #[test]
    fn predictor_errors_name_the_view() {
        struct Broken;
        impl DepthPredictor<f64> for Broken {
            fn predict_initial(&self, _: &Image<f64>, _: &ViewSpec<f64>) -> Result<Grid<f64>> {
                Ok(Grid::zeros(3, 3, 1))
            }
            fn refine(&self, _: &Image<f64>, d: &Grid<f64>, _: &Grid<f64>, _: &Mask, _: &ViewSpec<f64>) -> Result<Grid<f64>> {
                Ok(d.clone())
            }
        }
        let k = CameraIntrinsics::<f64>::from_fov(8, 8, 60.0).unwrap();
        let inp = ViewDepthInput {
            view: ViewSpec::perspective(k, Pose::identity()),
            image: Grid::zeros(8, 8, 3),
            rendered: Grid::filled(8, 8, 1, 1.0),
            anchor: Mask::new(8, 8, true),
        };
        let band = ViewSpec::equirect_band(Vec3::zero(), 64, 45.0).unwrap();
        let err = inpaint_panorama_depth(&[inp], &Broken, &DepthFusionConfig::default(), &band).unwrap_err();
        assert!(matches!(err, Error::Predictor { view: 0, .. }));
    }
}
