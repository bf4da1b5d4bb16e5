//! Multi-view latent diffusion scheduling over an equirectangular band.
//!
//! A panorama is decomposed into a fan of shared-centre perspective views.
//! Each step predicts the clean latent of every view, averages the
//! predictions across views through rotation warps, and re-noises the
//! averaged estimate. The last `F` steps switch to cyclic planar windows of
//! the stitched band. Denoiser and codec are trait objects so the scheduler
//! can be driven by oracles, procedural fields or an external backend.

mod average;
mod codec;
mod denoiser;
mod procedural;
mod schedule;
mod scheduler;

use serde::{Deserialize, Serialize};

pub use average::{
    stitch_views_to_equirect, warp_average, window_average, window_offsets, FanAverager, Stitcher,
};
pub use codec::{AveragePoolCodec, IdentityCodec, LatentCodec};
pub use denoiser::{
    Denoiser, DenoiserInfo, DenoiserInput, FieldTarget, Frame, LatentGrid, MeshTarget, PanoramaTarget,
    TargetDenoiser, TargetSource,
};
pub use procedural::ProceduralField;
pub use schedule::AlphaSchedule;
pub use scheduler::{e_diffusion_inpaint, inpaint_view, EDiffusionOutput};

use crate::camera::FanSpec;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::numeric::Real;

/// Clean-latent estimate `x̂₀ = (x_t − √(1−ᾱ)·ε) / √ᾱ`.
pub fn predict_x0<T: Real>(x_t: &Grid<T>, eps: &Grid<T>, alpha_bar: T) -> Result<Grid<T>> {
    if !(alpha_bar > T::zero() && alpha_bar <= T::one()) {
        return Err(Error::invalid(format!("ᾱ = {alpha_bar} outside (0, 1]")));
    }
    x_t.ensure_same_shape(eps, "x_t vs ε")?;
    let (sa, sn) = (alpha_bar.sqrt(), (T::one() - alpha_bar).sqrt());
    x_t.zip_map(eps, |x, e| (x - sn * e) / sa)
}

/// `x_{t−1} = √ᾱ_{t−1}·x̂₀′ + √(1−ᾱ_{t−1})·ε`.
pub fn renoise<T: Real>(x0: &Grid<T>, alpha_bar_prev: T, noise: &Grid<T>) -> Result<Grid<T>> {
    if !(alpha_bar_prev > T::zero() && alpha_bar_prev <= T::one()) {
        return Err(Error::invalid(format!("ᾱ = {alpha_bar_prev} outside (0, 1]")));
    }
    x0.ensure_same_shape(noise, "x̂₀ vs noise")?;
    let (sa, sn) = (alpha_bar_prev.sqrt(), (T::one() - alpha_bar_prev).sqrt());
    x0.zip_map(noise, |x, e| sa * x + sn * e)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EDiffusionConfig<T> {
    /// Total denoising steps `T`.
    pub steps: usize,
    /// Final steps spent on planar band windows, `F ≤ T`.
    pub refine_steps: usize,
    /// View fan: count, field of view, square size in pixels and the
    /// latitude band it must cover.
    pub fan: FanSpec<T>,
    /// A fresh noise tensor is drawn every this many steps and reused in
    /// between.
    pub noise_refresh_period: usize,
    /// Refinement window width in latent cells.
    pub window_size: usize,
    /// Refinement window stride in latent cells.
    pub window_stride: usize,
    pub seed: u64,
    /// Explicit `ᾱ_1 … ᾱ_T`; otherwise the denoiser's preference, otherwise
    /// the default linear-β schedule.
    pub alpha_bar: Option<Vec<T>>,
}

impl<T: Real> Default for EDiffusionConfig<T> {
    fn default() -> Self {
        Self {
            steps: 50,
            refine_steps: 20,
            fan: FanSpec::default(),
            noise_refresh_period: 2,
            window_size: 64,
            window_stride: 16,
            seed: 0,
            alpha_bar: None,
        }
    }
}

impl<T: Real> EDiffusionConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 || self.refine_steps > self.steps {
            return Err(Error::invalid(format!(
                "need 0 ≤ F ≤ T and T ≥ 1, got F={} T={}",
                self.refine_steps, self.steps
            )));
        }
        if self.noise_refresh_period == 0 {
            return Err(Error::invalid("noise refresh period must be at least 1"));
        }
        if self.window_size == 0 || self.window_stride == 0 || self.window_stride > self.window_size {
            return Err(Error::invalid(format!(
                "window {} / stride {} must be positive with stride ≤ window",
                self.window_size, self.window_stride
            )));
        }
        self.fan.validate()
    }

    pub fn schedule(&self, info: &DenoiserInfo) -> Result<AlphaSchedule<T>> {
        let s = match (&self.alpha_bar, &info.schedule) {
            (Some(a), _) => AlphaSchedule::new(a.clone())?,
            (None, Some(a)) => AlphaSchedule::new(a.iter().map(|&v| T::lit(v)).collect())?,
            (None, None) => AlphaSchedule::default_steps(self.steps)?,
        };
        if s.steps() != self.steps {
            return Err(Error::invalid(format!("schedule has {} steps, config {}", s.steps(), self.steps)));
        }
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn predict_x0_examples() {
        let g = |v: f64| Grid::filled(2, 1, 1, v);
        assert_eq!(predict_x0(&g(0.37), &g(5.0), 1.0).unwrap(), g(0.37));
        assert!((predict_x0(&g(0.8), &g(0.0), 0.64).unwrap().get(0, 0, 0) - 1.0).abs() < 1e-12);
        assert!((predict_x0(&g(1.0), &g(0.5), 0.25).unwrap().get(0, 0, 0) - 1.13397).abs() < 1e-5);
        assert!(predict_x0(&g(1.0), &g(0.5), 0.0).is_err());
    }

    #[test]
    fn renoise_examples() {
        let g = |v: f64| Grid::filled(1, 1, 1, v);
        assert_eq!(renoise(&g(0.123), 1.0, &g(9.0)).unwrap(), g(0.123));
        assert!((renoise(&g(2.0), 0.25, &g(1.0)).unwrap().get(0, 0, 0) - 1.86603).abs() < 1e-5);
        assert!((renoise(&g(3.0), 0.81, &g(0.0)).unwrap().get(0, 0, 0) - 2.7).abs() < 1e-12);
    }

    #[test]
    fn config_defaults_and_validation() {
        let c = EDiffusionConfig::<f64>::default();
        assert_eq!((c.steps, c.refine_steps, c.fan.count, c.window_size, c.window_stride), (50, 20, 8, 64, 16));
        c.validate().unwrap();
        assert!(EDiffusionConfig::<f64> { refine_steps: 51, ..c.clone() }.validate().is_err());
        let info = DenoiserInfo { channels: 3, concurrent: true, schedule: Some(vec![0.9, 0.5]) };
        assert!(c.schedule(&info).is_err());
        let c2 = EDiffusionConfig::<f64> { steps: 2, refine_steps: 0, ..c };
        assert_eq!(c2.schedule(&info).unwrap().values(), &[0.9, 0.5]);
    }
}
