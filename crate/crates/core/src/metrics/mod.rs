//! Image and geometry metrics: PSNR, SSIM, depth MSE and one-directional
//! Chamfer distance, plus the render-and-compare evaluation protocol.

mod kdtree;

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use kdtree::KdTree;

use crate::camera::CameraIntrinsics;
use crate::error::{Error, Result};
use crate::grid::{Grid, Image, Mask};
use crate::linalg::Vec3;
use crate::mesh::{render_perspective, sample_surface_points, TriangleMesh};
use crate::numeric::Real;
use crate::scene::RgbdFrame;

/// Reported when the two images agree exactly.
pub const PSNR_CAP: f64 = 100.0;

fn check_mask<T: Real>(a: &Grid<T>, mask: &Mask) -> Result<()> {
    if (mask.width(), mask.height()) != (a.width(), a.height()) {
        return Err(Error::Shape("mask does not match image".into()));
    }
    Ok(())
}

/// `10·log10(1 / MSE)` over all channels of the masked pixels, for signals
/// with unit peak.
pub fn psnr<T: Real>(a: &Image<T>, b: &Image<T>, mask: &Mask) -> Result<f64> {
    a.ensure_same_shape(b, "psnr")?;
    check_mask(a, mask)?;
    let c = a.channels();
    let (mut sum, mut n) = (0.0f64, 0usize);
    for (cell, _) in mask.data().iter().enumerate().filter(|(_, &m)| m) {
        for ch in 0..c {
            let d = (a.data()[cell * c + ch] - b.data()[cell * c + ch]).as_f64();
            sum += d * d;
        }
        n += c;
    }
    if n == 0 {
        return Err(Error::Empty("psnr mask selects no pixel".into()));
    }
    let mse = sum / n as f64;
    Ok(if mse == 0.0 { PSNR_CAP } else { (10.0 * (1.0 / mse).log10()).min(PSNR_CAP) })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SsimParams {
    /// Odd window side.
    pub window: usize,
    pub sigma: f64,
    pub k1: f64,
    pub k2: f64,
    /// Dynamic range L.
    pub data_range: f64,
}

impl Default for SsimParams {
    fn default() -> Self {
        Self { window: 11, sigma: 1.5, k1: 0.01, k2: 0.03, data_range: 1.0 }
    }
}

fn gaussian_kernel(size: usize, sigma: f64) -> Vec<f64> {
    let r = (size / 2) as f64;
    let w: Vec<f64> = (0..size).map(|i| (-0.5 * ((i as f64 - r) / sigma).powi(2)).exp()).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|v| v / s).collect()
}

/// Separable "valid" correlation: output is `(w - k + 1) × (h - k + 1)`.
fn filter_valid(src: &[f64], w: usize, h: usize, k: &[f64]) -> Vec<f64> {
    let n = k.len();
    let (ow, oh) = (w + 1 - n, h + 1 - n);
    let mut tmp = vec![0.0; ow * h];
    for y in 0..h {
        let row = &src[y * w..(y + 1) * w];
        for x in 0..ow {
            tmp[y * ow + x] = k.iter().zip(&row[x..x + n]).map(|(a, b)| a * b).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = (0..n).map(|i| k[i] * tmp[(y + i) * ow + x]).sum();
        }
    }
    out
}

/// Per-window SSIM of one channel, indexed by window centre over the
/// interior `(w - win + 1) × (h - win + 1)`.
fn ssim_map(a: &[f64], b: &[f64], w: usize, h: usize, p: &SsimParams) -> Vec<f64> {
    let k = gaussian_kernel(p.window, p.sigma);
    let prod = |f: &dyn Fn(f64, f64) -> f64| -> Vec<f64> { a.iter().zip(b).map(|(&x, &y)| f(x, y)).collect() };
    let ux = filter_valid(a, w, h, &k);
    let uy = filter_valid(b, w, h, &k);
    let uxx = filter_valid(&prod(&|x, _| x * x), w, h, &k);
    let uyy = filter_valid(&prod(&|_, y| y * y), w, h, &k);
    let uxy = filter_valid(&prod(&|x, y| x * y), w, h, &k);
    let c1 = (p.k1 * p.data_range).powi(2);
    let c2 = (p.k2 * p.data_range).powi(2);
    (0..ux.len())
        .map(|i| {
            let (mx, my) = (ux[i], uy[i]);
            let vx = uxx[i] - mx * mx;
            let vy = uyy[i] - my * my;
            let vxy = uxy[i] - mx * my;
            ((2.0 * mx * my + c1) * (2.0 * vxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2))
        })
        .collect()
}

fn ssim_checked<T: Real>(a: &Grid<T>, b: &Grid<T>, p: &SsimParams) -> Result<()> {
    a.ensure_same_shape(b, "ssim")?;
    if p.window.is_multiple_of(2) || p.window == 0 {
        return Err(Error::invalid("SSIM window must be odd"));
    }
    if a.width() < p.window || a.height() < p.window {
        return Err(Error::invalid(format!(
            "{}x{} image is smaller than the {} px SSIM window",
            a.width(),
            a.height(),
            p.window
        )));
    }
    Ok(())
}

/// Mean SSIM over windows fully inside the image, averaged over channels.
/// Biased (population) variances, Gaussian weights.
pub fn ssim<T: Real>(a: &Grid<T>, b: &Grid<T>, p: &SsimParams) -> Result<f64> {
    ssim_masked(a, b, &Mask::new(a.width(), a.height(), true), p)
}

/// As [`ssim`], averaging only windows whose centre lies in `mask`.
pub fn ssim_masked<T: Real>(a: &Grid<T>, b: &Grid<T>, mask: &Mask, p: &SsimParams) -> Result<f64> {
    ssim_checked(a, b, p)?;
    check_mask(a, mask)?;
    let (w, h, c) = a.dims();
    let r = p.window / 2;
    let ow = w + 1 - p.window;
    let mut total = 0.0;
    let mut count = 0usize;
    for ch in 0..c {
        let fa: Vec<f64> = a.channel(ch).data().iter().map(|v| v.as_f64()).collect();
        let fb: Vec<f64> = b.channel(ch).data().iter().map(|v| v.as_f64()).collect();
        let map = ssim_map(&fa, &fb, w, h, p);
        for (i, s) in map.iter().enumerate() {
            if mask.get(i % ow + r, i / ow + r) {
                total += s;
                count += 1;
            }
        }
    }
    if count == 0 {
        return Err(Error::Empty("no SSIM window centre inside the mask".into()));
    }
    Ok(total / count as f64)
}

/// Mean over masked pixels of the squared depth difference.
pub fn depth_mse<T: Real>(a: &Grid<T>, b: &Grid<T>, mask: &Mask) -> Result<f64> {
    a.ensure_same_shape(b, "depth_mse")?;
    check_mask(a, mask)?;
    let (mut s, mut n) = (0.0, 0usize);
    for (i, &m) in mask.data().iter().enumerate() {
        if m {
            let d = (a.data()[i] - b.data()[i]).as_f64();
            s += d * d;
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::Empty("depth mask selects no pixel".into()));
    }
    Ok(s / n as f64)
}

/// Mean distance from each ground-truth point to its nearest neighbour
/// among `n_samples` area-uniform samples of `mesh`.
pub fn chamfer_one_directional<T: Real>(gt: &[Vec3<T>], mesh: &TriangleMesh<T>, n_samples: usize, seed: u64) -> Result<f64> {
    let samples = sample_surface_points(mesh, n_samples, seed)?;
    chamfer_to_points(gt, &samples)
}

/// Mean nearest-neighbour distance from `gt` into `points`.
pub fn chamfer_to_points<T: Real>(gt: &[Vec3<T>], points: &[Vec3<T>]) -> Result<f64> {
    if gt.is_empty() || points.is_empty() {
        return Err(Error::Empty("chamfer needs non-empty point sets".into()));
    }
    let tree = KdTree::new(points.to_vec());
    let d: Vec<f64> = gt.par_iter().map(|q| tree.nearest_sq(*q).sqrt().as_f64()).collect();
    // sequential sum keeps the result independent of the thread count
    Ok(d.iter().sum::<f64>() / gt.len() as f64)
}

/// Reference implementation of [`chamfer_to_points`] without the index.
pub fn chamfer_brute_force<T: Real>(gt: &[Vec3<T>], points: &[Vec3<T>]) -> Result<f64> {
    if gt.is_empty() || points.is_empty() {
        return Err(Error::Empty("chamfer needs non-empty point sets".into()));
    }
    let d: Vec<f64> = gt
        .par_iter()
        .map(|q| points.iter().map(|p| (*p - *q).norm_squared()).fold(T::infinity(), T::min).sqrt().as_f64())
        .collect();
    Ok(d.iter().sum::<f64>() / gt.len() as f64)
}

/// Sigma OpenCV derives for a Gaussian kernel of odd size `k`.
pub fn blur_sigma(k: usize) -> f64 {
    0.3 * ((k as f64 - 1.0) / 2.0 - 1.0) + 0.8
}

/// Gaussian blur normalised over `valid` pixels, so uncovered pixels do not
/// bleed into covered ones. Edges use mirror reflection.
pub fn masked_gaussian_blur<T: Real>(img: &Image<T>, valid: &Mask, k: usize) -> Result<Image<T>> {
    if k.is_multiple_of(2) {
        return Err(Error::invalid(format!("blur kernel {k} must be odd")));
    }
    check_mask(img, valid)?;
    let kern = gaussian_kernel(k, blur_sigma(k));
    let r = (k / 2) as isize;
    let (w, h, c) = img.dims();
    let reflect = |i: isize, n: usize| -> usize {
        let n = n as isize;
        if n == 1 {
            return 0;
        }
        let mut i = i;
        while i < 0 || i >= n {
            i = if i < 0 { -i } else { 2 * (n - 1) - i };
        }
        i as usize
    };
    let pass = |src: &[f64], wgt: &[f64], horizontal: bool| -> (Vec<f64>, Vec<f64>) {
        let mut out = vec![0.0; w * h * c];
        let mut ow = vec![0.0; w * h];
        for y in 0..h {
            for x in 0..w {
                let (mut acc_w, mut acc) = (0.0, vec![0.0; c]);
                for (t, kv) in kern.iter().enumerate() {
                    let o = t as isize - r;
                    let (sx, sy) = if horizontal {
                        (reflect(x as isize + o, w), y)
                    } else {
                        (x, reflect(y as isize + o, h))
                    };
                    let cell = sy * w + sx;
                    let wv = kv * wgt[cell];
                    acc_w += wv;
                    for ch in 0..c {
                        acc[ch] += kv * src[cell * c + ch];
                    }
                }
                ow[y * w + x] = acc_w;
                out[(y * w + x) * c..(y * w + x + 1) * c].copy_from_slice(&acc);
            }
        }
        (out, ow)
    };
    let wgt: Vec<f64> = valid.data().iter().map(|&v| if v { 1.0 } else { 0.0 }).collect();
    let src: Vec<f64> =
        img.data().iter().enumerate().map(|(i, v)| v.as_f64() * wgt[i / c]).collect();
    let (s1, w1) = pass(&src, &wgt, true);
    // second pass runs over the already weighted sums
    let ones = vec![1.0; w * h];
    let (s2, _) = pass(&s1, &ones, false);
    let w1c: Vec<f64> = w1.iter().flat_map(|&v| std::iter::repeat_n(v, c)).collect();
    let (w2, _) = pass(&w1c, &ones, false);
    let data = (0..w * h * c)
        .map(|i| {
            if valid.data()[i / c] && w2[i] > 0.0 {
                T::lit(s2[i] / w2[i])
            } else {
                img.data()[i]
            }
        })
        .collect();
    Image::from_vec(w, h, c, data)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    /// Odd Gaussian kernel applied to renders before comparison.
    pub blur_kernel: Option<usize>,
    /// Renders are made at this multiple of the ground-truth resolution and
    /// box-downscaled.
    pub render_scale: usize,
    pub chamfer_samples: usize,
    pub seed: u64,
    pub ssim: SsimParams,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self { blur_kernel: None, render_scale: 1, chamfer_samples: 100_000, seed: 0, ssim: SsimParams::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewMetrics {
    pub frame_id: usize,
    pub psnr: f64,
    pub ssim: f64,
    pub depth_mse: f64,
    /// Pixels covered by the render.
    pub valid_pixels: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub psnr: f64,
    pub ssim: f64,
    pub depth_mse: f64,
    pub chamfer_1d: Option<f64>,
    pub views: Vec<ViewMetrics>,
    /// Frames the mesh did not cover at all.
    pub excluded: Vec<usize>,
}

impl EvalReport {
    /// Flat `key value` lines.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "psnr {:.6}", self.psnr);
        let _ = writeln!(s, "ssim {:.6}", self.ssim);
        let _ = writeln!(s, "depth_mse {:.8}", self.depth_mse);
        match self.chamfer_1d {
            Some(c) => {
                let _ = writeln!(s, "chamfer_1d {c:.6}");
            }
            None => {
                let _ = writeln!(s, "chamfer_1d none");
            }
        }
        let _ = writeln!(s, "views {}", self.views.len());
        let _ = writeln!(s, "excluded {}", self.excluded.len());
        for v in &self.views {
            let _ = writeln!(
                s,
                "view.{:06} psnr={:.6} ssim={:.6} depth_mse={:.8} valid={}",
                v.frame_id, v.psnr, v.ssim, v.depth_mse, v.valid_pixels
            );
        }
        s
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn upscaled<T: Real>(k: &CameraIntrinsics<T>, s: usize) -> Result<CameraIntrinsics<T>> {
    let f = T::from_usize_lossy(s);
    let h = T::half();
    CameraIntrinsics::new(k.fx * f, k.fy * f, (k.cx + h) * f - h, (k.cy + h) * f - h, k.width * s, k.height * s)
}

struct ViewRender<T> {
    color: Image<T>,
    depth: Grid<T>,
    coverage: Mask,
}

fn render_for_eval<T: Real>(mesh: &TriangleMesh<T>, f: &RgbdFrame<T>, cfg: &EvalConfig) -> Result<ViewRender<T>> {
    let s = cfg.render_scale.max(1);
    let k = upscaled(&f.intrinsics, s)?;
    let r = render_perspective(mesh, &k, &f.pose);
    let color = match cfg.blur_kernel {
        Some(kernel) if kernel > 1 => masked_gaussian_blur(&r.color, &r.coverage, kernel)?,
        _ => r.color,
    };
    if s == 1 {
        return Ok(ViewRender { color, depth: r.depth, coverage: r.coverage });
    }
    let (w, h) = (f.intrinsics.width, f.intrinsics.height);
    let area = T::from_usize_lossy(s * s);
    let mut out_c = Grid::zeros(w, h, 3);
    let mut out_d = Grid::zeros(w, h, 1);
    let mut cov = Mask::new(w, h, false);
    for y in 0..h {
        for x in 0..w {
            let full = (0..s * s).all(|i| r.coverage.get(x * s + i % s, y * s + i / s));
            if !full {
                continue;
            }
            cov.set(x, y, true);
            let (mut d, mut c) = (T::zero(), [T::zero(); 3]);
            for i in 0..s * s {
                let (sx, sy) = (x * s + i % s, y * s + i / s);
                d += r.depth.get(sx, sy, 0);
                for (ch, acc) in c.iter_mut().enumerate() {
                    *acc += color.get(sx, sy, ch);
                }
            }
            out_d.set(x, y, 0, d / area);
            for (ch, v) in c.iter().enumerate() {
                out_c.set(x, y, ch, *v / area);
            }
        }
    }
    Ok(ViewRender { color: out_c, depth: out_d, coverage: cov })
}

/// Renders `mesh` along every evaluation pose and compares with the
/// recorded frames. Colour metrics use covered pixels, depth uses pixels
/// covered and with recorded depth. Views without covered pixels are
/// excluded; aggregates are means over the remaining views.
pub fn evaluate<T: Real>(
    mesh: &TriangleMesh<T>,
    frames: &[RgbdFrame<T>],
    gt_points: Option<&[Vec3<T>]>,
    cfg: &EvalConfig,
) -> Result<EvalReport> {
    if frames.is_empty() {
        return Err(Error::Empty("no evaluation frames".into()));
    }
    let per_view: Vec<Option<ViewMetrics>> = frames
        .par_iter()
        .map(|f| -> Result<Option<ViewMetrics>> {
            let r = render_for_eval(mesh, f, cfg)?;
            let depth_mask = Mask::from_fn(r.coverage.width(), r.coverage.height(), |x, y| {
                r.coverage.get(x, y) && f.depth.get(x, y, 0) > T::zero()
            });
            if !r.coverage.any() {
                return Ok(None);
            }
            let depth_mse = if depth_mask.any() { depth_mse(&r.depth, &f.depth, &depth_mask)? } else { f64::NAN };
            Ok(Some(ViewMetrics {
                frame_id: f.frame_id,
                psnr: psnr(&r.color, &f.color, &r.coverage)?,
                ssim: ssim_masked(&r.color, &f.color, &r.coverage, &cfg.ssim).unwrap_or(f64::NAN),
                depth_mse,
                valid_pixels: r.coverage.count(),
            }))
        })
        .collect::<Result<_>>()?;
    let mut views = Vec::new();
    let mut excluded = Vec::new();
    for (f, v) in frames.iter().zip(per_view) {
        match v {
            Some(v) => views.push(v),
            None => excluded.push(f.frame_id),
        }
    }
    if views.is_empty() {
        return Err(Error::Empty("the mesh covers no pixel of any evaluation view".into()));
    }
    let mean = |g: &dyn Fn(&ViewMetrics) -> f64| {
        let vals: Vec<f64> = views.iter().map(g).filter(|v| v.is_finite()).collect();
        if vals.is_empty() {
            f64::NAN
        } else {
            vals.iter().sum::<f64>() / vals.len() as f64
        }
    };
    let chamfer_1d = match gt_points {
        Some(pts) => Some(chamfer_one_directional(pts, mesh, cfg.chamfer_samples, cfg.seed)?),
        None => None,
    };
    Ok(EvalReport {
        psnr: mean(&|v| v.psnr),
        ssim: mean(&|v| v.ssim),
        depth_mse: mean(&|v| v.depth_mse),
        chamfer_1d,
        views,
        excluded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Pose;
    use crate::mesh::{mesh_from_rgbd, TriangulationParams};
    use crate::synthetic::{synthetic_dataset, BoxRoom, TrajectorySpec};
    use rand::{Rng, SeedableRng};

    fn const_img(w: usize, h: usize, v: f64) -> Image<f64> {
        Grid::filled(w, h, 3, v)
    }

    #[test]
    fn psnr_analytic() {
        let m = Mask::new(8, 8, true);
        let a = const_img(8, 8, 0.3);
        assert_eq!(psnr(&a, &a, &m).unwrap(), 100.0);
        let b = const_img(8, 8, 0.3 + 1.0 / 255.0);
        assert!((psnr(&a, &b, &m).unwrap() - 48.1308036).abs() < 1e-6);
        let c = const_img(8, 8, 0.8);
        assert!((psnr(&a, &c, &m).unwrap() - 6.0205999).abs() < 1e-6);
        assert_eq!(psnr(&a, &c, &m).unwrap(), psnr(&c, &a, &m).unwrap());
        assert!(psnr(&a, &c, &Mask::new(8, 8, false)).is_err());
    }

    fn ramp(w: usize, h: usize) -> Grid<f64> {
        Grid::from_fn(w, h, 1, |x, y, _| ((x * 7 + y * 13) % 32) as f64 / 31.0)
    }

    // Reference values from skimage.metrics.structural_similarity(a, b,
    // data_range=1, gaussian_weights=True, sigma=1.5,
    // use_sample_covariance=False) on the same arrays.
    #[test]
    fn ssim_matches_reference_values() {
        let a = ramp(24, 20);
        let b = a.map(|v| v + 0.1);
        let s = ssim(&a, &b, &SsimParams::default()).unwrap();
        assert!((s - SKIMAGE_SHIFT).abs() < 1e-6, "{s}");
        let c = Grid::from_fn(24, 20, 1, |x, y, _| ((x * x + 3 * y) % 17) as f64 / 16.0);
        let s = ssim(&a, &c, &SsimParams::default()).unwrap();
        assert!((s - SKIMAGE_PATTERN).abs() < 1e-6, "{s}");
    }

    const SKIMAGE_SHIFT: f64 = 0.9835919630106146;
    const SKIMAGE_PATTERN: f64 = 0.09235648109543755;

    #[test]
    fn ssim_basics() {
        let a = ramp(16, 16);
        assert!((ssim(&a, &a, &SsimParams::default()).unwrap() - 1.0).abs() < 1e-12);
        assert!(ssim(&ramp(8, 16), &ramp(8, 16), &SsimParams::default()).is_err());
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let x = Grid::from_fn(128, 128, 1, |_, _, _| rng.gen::<f64>());
        let y = Grid::from_fn(128, 128, 1, |_, _, _| rng.gen::<f64>());
        assert!(ssim(&x, &y, &SsimParams::default()).unwrap().abs() < 0.05);
    }

    #[test]
    fn chamfer_examples() {
        let p = vec![Vec3::new(0.3, 0.2, 0.1)];
        assert_eq!(chamfer_to_points(&p, &p).unwrap(), 0.0);
        // plane z = 0 from (-1,-1) to (1,1), densely sampled
        let plane = TriangleMesh {
            vertices: vec![
                Vec3::new(-1.0, -1.0, 0.0),
                Vec3::new(1.0, -1.0, 0.0),
                Vec3::new(1.0, 1.0, 0.0),
                Vec3::new(-1.0, 1.0, 0.0),
            ],
            colors: vec![[0.0; 3]; 4],
            faces: vec![[0, 1, 2], [0, 2, 3]],
        };
        let d = chamfer_one_directional(&[Vec3::new(0.1, -0.2, 0.1)], &plane, 100_000, 0).unwrap();
        assert!((d - 0.1).abs() < 0.005, "{d}");
        assert!(chamfer_to_points::<f64>(&[], &p).is_err());
    }

    #[test]
    fn indexed_chamfer_equals_brute_force() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let mut pts = |n: usize| -> Vec<Vec3<f64>> {
            (0..n).map(|_| Vec3::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0))).collect()
        };
        let (a, b) = (pts(2000), pts(3000));
        assert_eq!(chamfer_to_points(&a, &b).unwrap(), chamfer_brute_force(&a, &b).unwrap());
    }

    #[test]
    fn blur_sigma_for_kernel_five() {
        assert!((blur_sigma(5) - 1.1).abs() < 1e-12);
    }

    #[test]
    fn blur_keeps_constants_and_smooths_noise() {
        let valid = Mask::from_fn(20, 20, |x, _| x < 15);
        let flat = const_img(20, 20, 0.4);
        let b = masked_gaussian_blur(&flat, &valid, 5).unwrap();
        assert!(b.max_abs_diff(&flat) < 1e-12);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let noisy = Grid::from_fn(20, 20, 3, |_, _, _| 0.4 + 0.2 * (rng.gen::<f64>() - 0.5));
        let all = Mask::new(20, 20, true);
        let blurred = masked_gaussian_blur(&noisy, &all, 5).unwrap();
        assert!(psnr(&blurred, &flat, &all).unwrap() > psnr(&noisy, &flat, &all).unwrap());
    }

    fn small_scene() -> (TriangleMesh<f64>, Vec<RgbdFrame<f64>>) {
        let room = BoxRoom::<f64>::default();
        let spec = TrajectorySpec { frames: 4, width: 64, height: 48, ..TrajectorySpec::default() };
        let ds = synthetic_dataset(&room, &spec).unwrap();
        let p = TriangulationParams::default();
        let mut mesh = TriangleMesh::new();
        for f in &ds.frames {
            mesh.append(&mesh_from_rgbd(f, &p).unwrap());
        }
        (mesh, ds.frames)
    }

    #[test]
    fn self_consistent_evaluation() {
        let (mesh, frames) = small_scene();
        let rep = evaluate(&mesh, &frames, None, &EvalConfig::default()).unwrap();
        assert!(rep.psnr > 40.0, "{}", rep.psnr);
        assert!(rep.depth_mse < 1e-4, "{}", rep.depth_mse);
        assert!(rep.excluded.is_empty());
        let mut rev = frames.clone();
        rev.reverse();
        let rep2 = evaluate(&mesh, &rev, None, &EvalConfig::default()).unwrap();
        assert!((rep.psnr - rep2.psnr).abs() < 1e-9);
        let json: EvalReport = serde_json::from_str(&rep.to_json().unwrap()).unwrap();
        assert_eq!(json, rep);
        assert!(rep.to_text().starts_with("psnr "));
    }

    #[test]
    fn empty_mesh_excludes_every_view() {
        let (_, frames) = small_scene();
        assert!(evaluate(&TriangleMesh::new(), &frames, None, &EvalConfig::default()).is_err());
        let mut far = frames[0].clone();
        far.pose = Pose::from_yaw_pitch(Vec3::new(100.0, 0.0, 0.0), 0.0, 0.0);
        far.frame_id = 99;
        let (mesh, _) = small_scene();
        let rep = evaluate(&mesh, &[frames[0].clone(), far], None, &EvalConfig::default()).unwrap();
        assert_eq!(rep.excluded, vec![99]);
        assert_eq!(rep.views.len(), 1);
    }
}
