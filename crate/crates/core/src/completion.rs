//! End-to-end scene completion: partial mesh, room-centre panorama,
//! candidate inpainting with active selection, and novel-view hole filling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::camera::{make_pano_views, CameraIntrinsics, DistanceGrid, ViewSpec};
use crate::depth::{complete_view_depth, inpaint_panorama_depth, DepthFusionConfig, DepthPredictor, ViewDepthInput};
use crate::diffusion::{e_diffusion_inpaint, inpaint_view, Denoiser, EDiffusionConfig, LatentCodec};
use crate::error::{Error, Result};
use crate::grid::{Grid, Mask};
use crate::linalg::{Pose, Vec3};
use crate::mesh::{fuse, fuse_panorama, mesh_from_rgbd, render, render_perspective, triangulate_view, TriangleMesh, TriangulationParams};
use crate::numeric::{deg_to_rad, Real};
use crate::panorama::PanoramaRgbd;
use crate::scene::{RgbdFrame, SceneDataset};
use crate::warp::WarpMap;

pub const DEFAULT_PROMPT_TEMPLATE: &str = "a simple and clean room in the style of {S*}.";
const PLACEHOLDER: &str = "{S*}";

/// Substitutes the style token into a template containing `{S*}`.
pub fn build_prompt(template: &str, token: &str) -> Result<String> {
    if !template.contains(PLACEHOLDER) {
        return Err(Error::invalid(format!("prompt template lacks the {PLACEHOLDER} placeholder")));
    }
    Ok(template.replace(PLACEHOLDER, token))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionConfig<T> {
    /// Candidate panoramas generated for active selection.
    pub candidates: usize,
    pub completion_iters: usize,
    pub pose_samples: usize,
    /// Central fraction of the mesh bounds used for horizontal positions.
    pub box_frac_h: T,
    /// Central fraction of the mesh bounds used for height.
    pub box_frac_v: T,
    pub elevation_deg: T,
    pub inpaint_ratio_max: T,
    pub backface_max: T,
    pub min_depth_min: T,
    pub backward_step: T,
    pub max_backward_steps: usize,
    /// Horizontal field of view of sampler and inpainting cameras.
    pub camera_fov_deg: T,
    /// Side of the square camera used to score pose candidates.
    pub sampler_size: usize,
    /// Side of the square camera used for novel-view inpainting.
    pub inpaint_size: usize,
    /// Panorama band width in pixels; the height follows from the band.
    pub band_width: usize,
    pub diffusion: EDiffusionConfig<T>,
    pub depth: DepthFusionConfig<T>,
    pub triangulation: TriangulationParams<T>,
    pub seed: u64,
}

impl<T: Real> Default for CompletionConfig<T> {
    fn default() -> Self {
        Self {
            candidates: 3,
            completion_iters: 30,
            pose_samples: 200,
            box_frac_h: T::lit(0.8),
            box_frac_v: T::lit(0.1),
            elevation_deg: T::lit(15.0),
            inpaint_ratio_max: T::lit(0.5),
            backface_max: T::lit(0.01),
            min_depth_min: T::lit(1.0),
            backward_step: T::lit(0.1),
            max_backward_steps: 100,
            camera_fov_deg: T::lit(90.0),
            sampler_size: 128,
            inpaint_size: 512,
            band_width: 2048,
            diffusion: EDiffusionConfig::default(),
            depth: DepthFusionConfig::default(),
            triangulation: TriangulationParams::default(),
            seed: 0,
        }
    }
}

impl<T: Real> CompletionConfig<T> {
    pub fn validate(&self) -> Result<()> {
        let unit = |v: T, name: &str| {
            if v > T::zero() && v <= T::one() {
                Ok(())
            } else {
                Err(Error::invalid(format!("{name} must lie in (0, 1]")))
            }
        };
        if self.candidates == 0 {
            return Err(Error::invalid("at least one candidate panorama is required"));
        }
        if self.pose_samples == 0 || self.sampler_size == 0 || self.inpaint_size == 0 || self.band_width == 0 {
            return Err(Error::invalid("sample counts and image sizes must be positive"));
        }
        unit(self.box_frac_h, "box_frac_h")?;
        unit(self.box_frac_v, "box_frac_v")?;
        unit(self.inpaint_ratio_max, "inpaint_ratio_max")?;
        unit(self.backface_max, "backface_max")?;
        if !(self.elevation_deg >= T::zero() && self.elevation_deg < T::lit(90.0)) {
            return Err(Error::invalid("elevation range must be within [0, 90)"));
        }
        if !(self.min_depth_min > T::zero() && self.backward_step > T::zero()) {
            return Err(Error::invalid("min depth and backward step must be positive"));
        }
        self.diffusion.validate()?;
        self.triangulation.validate()
    }

    fn camera(&self, size: usize) -> Result<CameraIntrinsics<T>> {
        CameraIntrinsics::from_fov(size, size, self.camera_fov_deg)
    }
}

/// Mean camera position.
pub fn room_center<T: Real>(frames: &[RgbdFrame<T>]) -> Result<Vec3<T>> {
    if frames.is_empty() {
        return Err(Error::Empty("room centre needs at least one frame".into()));
    }
    let sum = frames.iter().fold(Vec3::zero(), |acc, f| acc + f.pose.position);
    Ok(sum * (T::one() / T::from_usize_lossy(frames.len())))
}

/// Squared depth error of `mesh` against the frames, averaged jointly over
/// every pixel that has recorded depth and is covered by the render.
pub fn depth_mse<T: Real>(mesh: &TriangleMesh<T>, frames: &[RgbdFrame<T>]) -> Result<f64> {
    if frames.is_empty() {
        return Err(Error::Empty("depth MSE needs at least one frame".into()));
    }
    let parts: Vec<(f64, usize)> = frames
        .par_iter()
        .map(|f| {
            let r = render_perspective(mesh, &f.intrinsics, &f.pose);
            let (mut s, mut n) = (0.0, 0usize);
            for (i, (&d, &rd)) in f.depth.data().iter().zip(r.depth.data()).enumerate() {
                if d > T::zero() && r.coverage.data()[i] {
                    let e = (d - rd).as_f64();
                    s += e * e;
                    n += 1;
                }
            }
            (s, n)
        })
        .collect();
    let (s, n) = parts.iter().fold((0.0, 0), |(s, n), &(a, b)| (s + a, n + b));
    if n == 0 {
        return Err(Error::Empty("no pixel is both observed and covered by the mesh".into()));
    }
    Ok(s / n as f64)
}

/// Renders the band around `center`; cells the mesh misses are holes.
pub fn render_panorama<T: Real>(
    mesh: &TriangleMesh<T>,
    center: Vec3<T>,
    width: usize,
    band_half_deg: T,
) -> Result<PanoramaRgbd<T>> {
    let view = ViewSpec::equirect_band(center, width, band_half_deg)?;
    let r = render(mesh, &view)?;
    let hole_mask = r.coverage.not();
    Ok(PanoramaRgbd { color: r.color, distance: DistanceGrid::new(r.depth, r.coverage)?, hole_mask, view })
}

/// Fuses each candidate into a copy of `base` and returns the index with the
/// lowest [`depth_mse`] (first on ties) together with all scores.
pub fn active_sample<T: Real>(
    base: &TriangleMesh<T>,
    candidates: &[PanoramaRgbd<T>],
    frames: &[RgbdFrame<T>],
    params: &TriangulationParams<T>,
) -> Result<(usize, Vec<f64>)> {
    if candidates.is_empty() {
        return Err(Error::Empty("no candidate panoramas".into()));
    }
    let mut scores = Vec::with_capacity(candidates.len());
    for (i, c) in candidates.iter().enumerate() {
        let fused = fuse_panorama(base, c, params).map_err(|e| e.in_stage(format!("fuse candidate {i}")))?;
        scores.push(depth_mse(&fused, frames).map_err(|e| e.in_stage(format!("score candidate {i}")))?);
    }
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s < scores[best] {
            best = i;
        }
    }
    Ok((best, scores))
}

/// Render statistics that decide whether a pose is worth inpainting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoseStats<T> {
    pub inpaint_ratio: T,
    pub backface_ratio: T,
    pub min_depth: Option<T>,
}

impl<T: Real> PoseStats<T> {
    pub fn passes(&self, cfg: &CompletionConfig<T>) -> bool {
        self.inpaint_ratio <= cfg.inpaint_ratio_max
            && self.backface_ratio <= cfg.backface_max
            && self.min_depth.is_some_and(|d| d >= cfg.min_depth_min)
    }

    pub fn score(&self) -> T {
        self.inpaint_ratio * self.min_depth.unwrap_or(T::zero())
    }
}

pub fn pose_stats<T: Real>(mesh: &TriangleMesh<T>, pose: &Pose<T>, cfg: &CompletionConfig<T>) -> Result<PoseStats<T>> {
    let r = render_perspective(mesh, &cfg.camera(cfg.sampler_size)?, pose);
    Ok(PoseStats { inpaint_ratio: r.inpaint_ratio(), backface_ratio: r.backface_ratio, min_depth: r.min_depth })
}

/// Random candidate poses inside the central part of the mesh bounds.
pub fn draw_candidate_poses<T: Real>(mesh: &TriangleMesh<T>, rng: &mut impl Rng, cfg: &CompletionConfig<T>) -> Vec<Pose<T>> {
    let Some((lo, hi)) = mesh.bounds() else {
        return Vec::new();
    };
    let c = (lo + hi) * T::half();
    let ext = hi - lo;
    let pick = |rng: &mut dyn rand::RngCore, centre: T, extent: T, frac: T| {
        let half = (extent * frac * T::half()).as_f64();
        centre + T::lit(if half > 0.0 { rng.gen_range(-half..=half) } else { 0.0 })
    };
    let elev = deg_to_rad(cfg.elevation_deg).as_f64();
    (0..cfg.pose_samples)
        .map(|_| {
            let pos = Vec3::new(
                pick(rng, c.x, ext.x, cfg.box_frac_h),
                pick(rng, c.y, ext.y, cfg.box_frac_v),
                pick(rng, c.z, ext.z, cfg.box_frac_h),
            );
            let yaw = T::lit(rng.gen_range(0.0..std::f64::consts::TAU));
            let pitch = T::lit(if elev > 0.0 { rng.gen_range(-elev..=elev) } else { 0.0 });
            Pose::from_yaw_pitch(pos, yaw, pitch)
        })
        .collect()
}

/// Picks the surviving candidate with the highest `inpaint_ratio ×
/// min_depth`, then backs it away along its viewing axis while all filters
/// still hold. `None` when no candidate passes with a positive score.
pub fn select_completion_pose<T: Real>(
    mesh: &TriangleMesh<T>,
    candidates: &[Pose<T>],
    cfg: &CompletionConfig<T>,
) -> Result<Option<Pose<T>>> {
    let stats: Vec<PoseStats<T>> =
        candidates.par_iter().map(|p| pose_stats(mesh, p, cfg)).collect::<Result<_>>()?;
    let mut best: Option<(usize, T)> = None;
    for (i, s) in stats.iter().enumerate() {
        if s.passes(cfg) && s.score() > T::zero() && best.is_none_or(|(_, b)| s.score() > b) {
            best = Some((i, s.score()));
        }
    }
    let Some((i, _)) = best else {
        return Ok(None);
    };
    let mut pose = candidates[i];
    for _ in 0..cfg.max_backward_steps {
        let next = pose.translated(-pose.forward() * cfg.backward_step);
        let s = pose_stats(mesh, &next, cfg)?;
        if !s.passes(cfg) || s.score() <= T::zero() {
            break;
        }
        pose = next;
    }
    Ok(Some(pose))
}

/// Draws `cfg.pose_samples` candidates and applies [`select_completion_pose`].
pub fn sample_completion_pose<T: Real>(
    mesh: &TriangleMesh<T>,
    rng: &mut impl Rng,
    cfg: &CompletionConfig<T>,
) -> Result<Option<Pose<T>>> {
    if mesh.is_empty() {
        return Err(Error::Empty("pose sampling needs a non-empty mesh".into()));
    }
    let candidates = draw_candidate_poses(mesh, rng, cfg);
    select_completion_pose(mesh, &candidates, cfg)
}

/// Neural components shared by the pipeline stages.
#[derive(Clone, Copy)]
pub struct Backends<'a, T: Real> {
    pub denoiser: &'a dyn Denoiser<T>,
    pub codec: &'a dyn LatentCodec<T>,
    pub predictor: &'a dyn DepthPredictor<T>,
}

fn inpaint_pose<T: Real>(
    mesh: &TriangleMesh<T>,
    pose: &Pose<T>,
    b: &Backends<'_, T>,
    cfg: &CompletionConfig<T>,
    seed: u64,
    prompt: &str,
) -> Result<TriangleMesh<T>> {
    let view = ViewSpec::perspective(cfg.camera(cfg.inpaint_size)?, *pose);
    let r = render(mesh, &view)?;
    let hole = r.coverage.not();
    if !hole.any() {
        return Ok(mesh.clone());
    }
    let dcfg = EDiffusionConfig { seed, ..cfg.diffusion.clone() };
    let image = inpaint_view(&view, &r.color, &hole, b.denoiser, b.codec, &dcfg, prompt)?;
    let input = ViewDepthInput { view, image, rendered: r.depth.clone(), anchor: r.coverage.clone() };
    let (depth, _) = complete_view_depth(&input, b.predictor, &cfg.depth)?;
    let region = hole.dilate(1, false);
    let patch = triangulate_view(&view, &input.image, &depth, &region, &cfg.triangulation)?;
    Ok(fuse(mesh, &patch))
}

/// Inpaints along a fixed camera path: every pose with uncovered pixels is
/// inpainted as a single view, given depth aligned to the rendered
/// geometry, and its hole pixels (plus a one-pixel seam) are fused in.
pub fn iterative_inpaint<T: Real>(
    mesh: &TriangleMesh<T>,
    trajectory: &[Pose<T>],
    backends: &Backends<'_, T>,
    cfg: &CompletionConfig<T>,
    prompt: &str,
) -> Result<TriangleMesh<T>> {
    if trajectory.is_empty() {
        return Err(Error::Empty("empty trajectory".into()));
    }
    let mut mesh = mesh.clone();
    for (i, pose) in trajectory.iter().enumerate() {
        let seed = cfg.diffusion.seed.wrapping_add(i as u64);
        mesh = inpaint_pose(&mesh, pose, backends, cfg, seed, prompt).map_err(|e| e.in_stage(format!("pose {i}")))?;
    }
    Ok(mesh)
}

/// Receives intermediate meshes, e.g. to write checkpoints.
pub trait StageObserver<T: Real> {
    fn stage(&mut self, name: &str, mesh: &TriangleMesh<T>) -> Result<()>;
}

impl<T: Real> StageObserver<T> for () {
    fn stage(&mut self, _: &str, _: &TriangleMesh<T>) -> Result<()> {
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct CompletionOutput<T> {
    pub mesh: TriangleMesh<T>,
    /// Rendered panorama of the input mesh (holes marked).
    pub rendered: PanoramaRgbd<T>,
    /// Selected candidate.
    pub panorama: PanoramaRgbd<T>,
    pub selected: usize,
    pub candidate_mse: Vec<f64>,
    /// Poses used by the completion loop, in order.
    pub poses: Vec<Pose<T>>,
}

/// Back-projects and fuses every frame.
pub fn mesh_from_frames<T: Real>(frames: &[RgbdFrame<T>], params: &TriangulationParams<T>) -> Result<TriangleMesh<T>> {
    let parts: Vec<TriangleMesh<T>> = frames.par_iter().map(|f| mesh_from_rgbd(f, params)).collect::<Result<_>>()?;
    let mut mesh = TriangleMesh::new();
    for p in &parts {
        mesh.append(p);
    }
    Ok(mesh)
}

/// Inpaints the panorama colour with the diffusion scheduler and its
/// hole distances with fan depth completion.
pub fn generate_candidate<T: Real>(
    mesh: &TriangleMesh<T>,
    pano: &PanoramaRgbd<T>,
    backends: &Backends<'_, T>,
    cfg: &CompletionConfig<T>,
    seed: u64,
    prompt: &str,
) -> Result<PanoramaRgbd<T>> {
    if !pano.hole_mask.any() {
        return Ok(pano.clone());
    }
    let dcfg = EDiffusionConfig { seed, ..cfg.diffusion.clone() };
    let out = e_diffusion_inpaint(pano, backends.denoiser, backends.codec, &dcfg, prompt)?;
    let color = out.image;
    let views = make_pano_views(pano.center(), &cfg.diffusion.fan)?;
    let (bw, bh) = (pano.width(), pano.height());
    let inputs: Vec<ViewDepthInput<T>> = views
        .par_iter()
        .map(|v| {
            let r = render(mesh, v)?;
            let (image, _) = WarpMap::new(&pano.view, (bw, bh), v, (v.width(), v.height()))?.apply(&color)?;
            Ok(ViewDepthInput { view: *v, image, rendered: r.depth, anchor: r.coverage })
        })
        .collect::<Result<_>>()?;
    let fused = inpaint_panorama_depth(&inputs, backends.predictor, &cfg.depth, &pano.view)
        .map_err(|e| e.in_stage("panorama depth"))?;
    let hole = &pano.hole_mask;
    let values = Grid::from_fn(bw, bh, 1, |x, y, _| {
        if hole.get(x, y) {
            fused.band.values.get(x, y, 0)
        } else {
            pano.distance.values.get(x, y, 0)
        }
    });
    let valid = Mask::from_fn(bw, bh, |x, y| {
        if hole.get(x, y) {
            fused.band.valid.get(x, y)
        } else {
            pano.distance.valid.get(x, y)
        }
    });
    Ok(PanoramaRgbd { color, distance: DistanceGrid::new(values, valid)?, hole_mask: hole.clone(), view: pano.view })
}

/// Full pipeline over the input frames of `ds`.
///
/// Candidate `a` uses diffusion seed `cfg.diffusion.seed + a`; completion
/// iteration `i` uses `cfg.diffusion.seed + cfg.candidates + i`. The loop
/// stops early when no pose passes the sampler's filters.
pub fn complete_scene<T: Real>(
    ds: &SceneDataset<T>,
    backends: &Backends<'_, T>,
    cfg: &CompletionConfig<T>,
    prompt: &str,
    observer: &mut dyn StageObserver<T>,
) -> Result<CompletionOutput<T>> {
    cfg.validate()?;
    ds.validate()?;
    let base = mesh_from_frames(&ds.frames, &cfg.triangulation).map_err(|e| e.in_stage("input mesh"))?;
    observer.stage("input", &base)?;
    let center = room_center(&ds.frames)?;
    let rendered = render_panorama(&base, center, cfg.band_width, cfg.diffusion.fan.band_half_deg)
        .map_err(|e| e.in_stage("render panorama"))?;

    let mut candidates = Vec::with_capacity(cfg.candidates);
    for a in 0..cfg.candidates {
        let seed = cfg.diffusion.seed.wrapping_add(a as u64);
        candidates.push(
            generate_candidate(&base, &rendered, backends, cfg, seed, prompt)
                .map_err(|e| e.in_stage(format!("candidate {a}")))?,
        );
    }
    let (selected, candidate_mse) =
        active_sample(&base, &candidates, &ds.frames, &cfg.triangulation).map_err(|e| e.in_stage("active sampling"))?;
    let panorama = candidates.swap_remove(selected);
    let mut mesh = fuse_panorama(&base, &panorama, &cfg.triangulation)?;
    observer.stage("panorama", &mesh)?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut poses = Vec::new();
    for i in 0..cfg.completion_iters {
        let Some(pose) = sample_completion_pose(&mesh, &mut rng, cfg).map_err(|e| e.in_stage(format!("pose sampling {i}")))?
        else {
            break;
        };
        let seed = cfg.diffusion.seed.wrapping_add((cfg.candidates + i) as u64);
        mesh = inpaint_pose(&mesh, &pose, backends, cfg, seed, prompt).map_err(|e| e.in_stage(format!("completion pose {i}")))?;
        poses.push(pose);
        observer.stage(&format!("completion-{i:02}"), &mesh)?;
    }
    Ok(CompletionOutput { mesh, rendered, panorama, selected, candidate_mse, poses })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::synthetic::{synthetic_dataset, BoxRoom, TrajectorySpec};

    #[test]
    fn prompt_template() {
        assert_eq!(
            build_prompt(DEFAULT_PROMPT_TEMPLATE, "<scn42>").unwrap(),
            "a simple and clean room in the style of <scn42>."
        );
        assert_eq!(build_prompt(DEFAULT_PROMPT_TEMPLATE, "").unwrap(), "a simple and clean room in the style of .");
        assert!(build_prompt("a room", "x").is_err());
    }

    fn frame_at(p: Vec3<f64>) -> RgbdFrame<f64> {
        RgbdFrame {
            color: Grid::zeros(2, 2, 3),
            depth: Grid::filled(2, 2, 1, 1.0),
            pose: Pose::from_yaw_pitch(p, 0.0, 0.0),
            intrinsics: CameraIntrinsics::new(2.0, 2.0, 0.5, 0.5, 2, 2).unwrap(),
            frame_id: 0,
        }
    }

    #[test]
    fn room_center_examples() {
        let c = room_center(&[frame_at(Vec3::zero()), frame_at(Vec3::new(2.0, 0.0, 0.0))]).unwrap();
        assert_eq!(c, Vec3::new(1.0, 0.0, 0.0));
        let one = Vec3::new(0.3, -1.0, 2.0);
        assert_eq!(room_center(&[frame_at(one)]).unwrap(), one);
        let sq: Vec<_> = [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)]
            .iter()
            .map(|&(x, z)| frame_at(Vec3::new(x, 0.0, z)))
            .collect();
        assert_eq!(room_center(&sq).unwrap(), Vec3::new(0.5, 0.0, 0.5));
        assert!(room_center::<f64>(&[]).is_err());
    }

    fn scene() -> (BoxRoom<f64>, SceneDataset<f64>) {
        let room = BoxRoom::default();
        let spec = TrajectorySpec { frames: 6, width: 64, height: 48, ..TrajectorySpec::default() };
        (room, synthetic_dataset(&room, &spec).unwrap())
    }

    #[test]
    fn depth_mse_examples() {
        let (room, ds) = scene();
        let gt = room.mesh().unwrap();
        assert!(depth_mse(&gt, &ds.frames).unwrap() < 1e-20);
        let own = mesh_from_frames(&ds.frames, &TriangulationParams::default()).unwrap();
        assert!(depth_mse(&own, &ds.frames).unwrap() < 1e-4);
        // one pixel off by 0.5 m
        let mut frames = ds.frames.clone();
        let v = frames[2].depth.get(10, 10, 0);
        frames[2].depth.set(10, 10, 0, v + 0.5);
        let p: usize = frames.iter().map(|f| f.depth.data().iter().filter(|&&d| d > 0.0).count()).sum();
        assert!((depth_mse(&gt, &frames).unwrap() - 0.25 / p as f64).abs() < 1e-12);
        let mut rev = frames.clone();
        rev.reverse();
        assert!((depth_mse(&gt, &rev).unwrap() - depth_mse(&gt, &frames).unwrap()).abs() < 1e-15);
        assert!(depth_mse(&TriangleMesh::new(), &frames).is_err());
    }

    #[test]
    fn active_sample_ties_and_argmin() {
        let (room, ds) = scene();
        let gt = room.mesh().unwrap();
        let c = room.center();
        let pano = render_panorama(&gt, c, 64, 45.0).unwrap();
        let same = vec![pano.clone(), pano.clone(), pano.clone()];
        let (i, s) = active_sample(&gt, &same, &ds.frames, &TriangulationParams::default()).unwrap();
        assert_eq!(i, 0);
        assert!(s.iter().all(|&v| v == s[0]));
    }

    #[test]
    fn panorama_of_closed_room_has_no_holes() {
        let room = BoxRoom::<f64>::default();
        let pano = render_panorama(&room.mesh().unwrap(), room.center(), 128, 45.0).unwrap();
        assert!(!pano.hole_mask.any());
        pano.validate().unwrap();
    }

    #[test]
    fn sampler_on_closed_room_returns_none() {
        let room = BoxRoom::<f64>::default();
        let mesh = room.mesh().unwrap();
        let cfg = CompletionConfig { pose_samples: 20, sampler_size: 32, ..CompletionConfig::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(sample_completion_pose(&mesh, &mut rng, &cfg).unwrap().is_none());
    }

    #[test]
    fn sampler_poses_pass_filters() {
        let (_, ds) = scene();
        let mesh = mesh_from_frames(&ds.frames[..2], &TriangulationParams::default()).unwrap();
        let cfg = CompletionConfig { pose_samples: 60, sampler_size: 48, ..CompletionConfig::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut found = 0;
        for _ in 0..3 {
            if let Some(p) = sample_completion_pose(&mesh, &mut rng, &cfg).unwrap() {
                let s = pose_stats(&mesh, &p, &cfg).unwrap();
                assert!(s.passes(&cfg), "{s:?}");
                found += 1;
            }
        }
        assert!(found > 0);
    }
}
