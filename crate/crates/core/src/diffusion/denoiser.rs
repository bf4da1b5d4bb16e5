use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use super::codec::LatentCodec;
use super::procedural::ProceduralField;
use crate::camera::ViewSpec;
use crate::error::{Error, Result};
use crate::grid::{Grid, Image, Mask};
use crate::mesh::{render, TriangleMesh};
use crate::numeric::Real;
use crate::warp::{axis_taps, warp_grid};

/// Per-view latent values `h × w × C`; the pixel-to-latent factor is the
/// codec's scale.
pub type LatentGrid<T> = Grid<T>;

/// Capabilities a denoiser declares up front.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenoiserInfo {
    pub channels: usize,
    /// Whether `predict_epsilon` may be called from several threads at once.
    pub concurrent: bool,
    /// Backend-preferred `ᾱ_1 … ᾱ_T`, used when the run does not fix one.
    pub schedule: Option<Vec<f64>>,
}

/// Geometry of the latent being denoised.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Frame<T> {
    /// A whole view (perspective fan member or single inpainting camera).
    View(ViewSpec<T>),
    /// Columns `[col_offset, col_offset + width)` (latent cells, cyclic) of
    /// an equirectangular band.
    Window { band: ViewSpec<T>, col_offset: usize, width: usize },
}

#[derive(Debug, Clone)]
pub struct DenoiserInput<'a, T> {
    /// Noisy latent `x_t`.
    pub latents: &'a Grid<T>,
    pub t: usize,
    pub alpha_bar: T,
    /// Encoded conditioning image.
    pub reference: &'a Grid<T>,
    /// Cells to inpaint.
    pub mask: &'a Mask,
    pub prompt: &'a str,
    pub frame: Frame<T>,
}

impl<T: Real> DenoiserInput<'_, T> {
    pub fn validate(&self) -> Result<()> {
        let (w, h, _) = self.latents.dims();
        if !self.latents.same_shape(self.reference) || (self.mask.width(), self.mask.height()) != (w, h) {
            return Err(Error::Shape(format!(
                "denoiser input: latents {:?}, reference {:?}, mask {}x{}",
                self.latents.dims(),
                self.reference.dims(),
                self.mask.width(),
                self.mask.height()
            )));
        }
        Ok(())
    }
}

/// Noise predictor `ε_θ(x_t, t, I, m, prompt)`.
pub trait Denoiser<T: Real>: Send + Sync {
    fn info(&self) -> DenoiserInfo;
    fn predict_epsilon(&self, input: &DenoiserInput<'_, T>) -> Result<Grid<T>>;
}

/// Something that can show what a view should look like.
pub trait TargetSource<T: Real>: Send + Sync {
    /// RGB for the whole view at its nominal pixel resolution.
    fn target_image(&self, view: &ViewSpec<T>) -> Result<Image<T>>;
}

/// Target given as an equirectangular image over `band`.
pub struct PanoramaTarget<T> {
    pub image: Image<T>,
    pub band: ViewSpec<T>,
}

impl<T: Real> TargetSource<T> for PanoramaTarget<T> {
    fn target_image(&self, view: &ViewSpec<T>) -> Result<Image<T>> {
        if view == &self.band {
            return Ok(self.image.clone());
        }
        if !view.is_equirect() {
            return Ok(sample_band_clamped(&self.band, &self.image, view));
        }
        Ok(warp_grid(&self.band, view, &self.image)?.0)
    }
}

/// Bilinear lookup of every pixel of `view` in the band image, wrapping in
/// longitude and clamping latitude to the band's edge rows so the target is
/// defined for rays just outside the band.
fn sample_band_clamped<T: Real>(band: &ViewSpec<T>, image: &Image<T>, view: &ViewSpec<T>) -> Image<T> {
    let (bw, bh) = (band.width(), band.height());
    let hmax = T::from_usize_lossy(bh - 1);
    let mut out = Grid::zeros(view.width(), view.height(), 3);
    for y in 0..view.height() {
        for x in 0..view.width() {
            let (u, v, _) = band.ray_to_pixel(view.world_ray(T::from_usize_lossy(x), T::from_usize_lossy(y)));
            let v = v.max(T::zero()).min(hmax);
            let (Some((x0, x1, fx)), Some((y0, y1, fy))) = (axis_taps(u, bw, true), axis_taps(v, bh, false)) else {
                continue;
            };
            let px = out.pixel_mut(x, y);
            for (c, p) in px.iter_mut().enumerate() {
                let top = image.get(x0, y0, c) * (T::one() - fx) + image.get(x1, y0, c) * fx;
                let bot = image.get(x0, y1, c) * (T::one() - fx) + image.get(x1, y1, c) * fx;
                *p = top * (T::one() - fy) + bot * fy;
            }
        }
    }
    out
}

/// Target rendered from a reference mesh.
pub struct MeshTarget<T> {
    pub mesh: TriangleMesh<T>,
}

impl<T: Real> TargetSource<T> for MeshTarget<T> {
    fn target_image(&self, view: &ViewSpec<T>) -> Result<Image<T>> {
        Ok(render(&self.mesh, view)?.color)
    }
}

/// Target drawn from a seeded procedural colour field over view directions.
pub struct FieldTarget {
    pub field: ProceduralField,
}

impl<T: Real> TargetSource<T> for FieldTarget {
    fn target_image(&self, view: &ViewSpec<T>) -> Result<Image<T>> {
        let mut img = Grid::zeros(view.width(), view.height(), 3);
        for y in 0..view.height() {
            for x in 0..view.width() {
                let c = self.field.color(view.world_ray(T::from_usize_lossy(x), T::from_usize_lossy(y)));
                img.pixel_mut(x, y).copy_from_slice(&c);
            }
        }
        Ok(img)
    }
}

/// Denoiser that steers every step straight at a known clean latent
/// `y = mask ? encode(target) : reference`, returning
/// `ε = (x_t − √ᾱ·y) / √(1 − ᾱ)` so that the x̂₀ prediction equals `y`.
///
/// The oracle and procedural backends are both instances with different
/// target sources. Encoded targets are cached per frame geometry.
pub struct TargetDenoiser<T: Real> {
    source: Box<dyn TargetSource<T>>,
    codec: Arc<dyn LatentCodec<T>>,
    cache: Mutex<HashMap<String, Arc<Grid<T>>>>,
}

impl<T: Real> TargetDenoiser<T> {
    pub fn new(source: Box<dyn TargetSource<T>>, codec: Arc<dyn LatentCodec<T>>) -> Self {
        Self { source, codec, cache: Mutex::new(HashMap::new()) }
    }

    pub fn oracle_panorama(image: Image<T>, band: ViewSpec<T>, codec: Arc<dyn LatentCodec<T>>) -> Result<Self> {
        if !band.is_equirect() || image.dims() != (band.width(), band.height(), 3) {
            return Err(Error::Shape(format!(
                "oracle panorama {:?} does not match its {}x{} band",
                image.dims(),
                band.width(),
                band.height()
            )));
        }
        Ok(Self::new(Box::new(PanoramaTarget { image, band }), codec))
    }

    pub fn oracle_mesh(mesh: TriangleMesh<T>, codec: Arc<dyn LatentCodec<T>>) -> Self {
        Self::new(Box::new(MeshTarget { mesh }), codec)
    }

    pub fn procedural(seed: u64, codec: Arc<dyn LatentCodec<T>>) -> Self {
        Self::new(Box::new(FieldTarget { field: ProceduralField::new(seed) }), codec)
    }

    fn view_latent(&self, view: &ViewSpec<T>) -> Result<Arc<Grid<T>>> {
        let key = format!("{view:?}");
        if let Some(g) = self.cache.lock().expect("cache lock").get(&key) {
            return Ok(g.clone());
        }
        let img = self.source.target_image(view)?;
        let lat = Arc::new(self.codec.encode(&img)?);
        self.cache.lock().expect("cache lock").insert(key, lat.clone());
        Ok(lat)
    }

    /// Encoded target for a frame.
    pub fn target_latent(&self, frame: &Frame<T>) -> Result<Grid<T>> {
        match frame {
            Frame::View(v) => Ok((*self.view_latent(v)?).clone()),
            Frame::Window { band, col_offset, width } => {
                Ok(self.view_latent(band)?.crop_cyclic(*col_offset, *width))
            }
        }
    }
}

impl<T: Real> Denoiser<T> for TargetDenoiser<T> {
    fn info(&self) -> DenoiserInfo {
        DenoiserInfo { channels: self.codec.channels(), concurrent: true, schedule: None }
    }

    fn predict_epsilon(&self, input: &DenoiserInput<'_, T>) -> Result<Grid<T>> {
        input.validate()?;
        let ab = input.alpha_bar;
        if !(ab > T::zero() && ab < T::one()) {
            return Err(Error::Denoiser(format!("ᾱ_{} = {ab}: ε is undefined without noise", input.t)));
        }
        let target = match input.frame {
            Frame::View(v) => self.view_latent(&v)?,
            _ => Arc::new(self.target_latent(&input.frame)?),
        };
        if !target.same_shape(input.latents) {
            return Err(Error::Denoiser(format!(
                "target latent {:?} vs input {:?}",
                target.dims(),
                input.latents.dims()
            )));
        }
        let (sa, sn) = (ab.sqrt(), (T::one() - ab).sqrt());
        let c = input.latents.channels();
        let x = input.latents.data();
        let r = input.reference.data();
        let y = target.data();
        let mask = input.mask.data();
        let eps = (0..x.len())
            .map(|i| {
                let yi = if mask[i / c] { y[i] } else { r[i] };
                (x[i] - sa * yi) / sn
            })
            .collect();
        Grid::from_vec(input.latents.width(), input.latents.height(), c, eps)
    }
}
