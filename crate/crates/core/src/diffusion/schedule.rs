use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::Real;

/// Cumulative noise-retention coefficients `ᾱ_1 … ᾱ_T` of a sampling
/// trajectory, with `ᾱ_0 = 1` implied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaSchedule<T> {
    alpha_bar: Vec<T>,
}

impl<T: Real> AlphaSchedule<T> {
    /// Validates `ᾱ_1 … ᾱ_T`: all in `(0, 1]` and strictly decreasing.
    pub fn new(alpha_bar: Vec<T>) -> Result<Self> {
        if alpha_bar.is_empty() {
            return Err(Error::invalid("schedule needs at least one step"));
        }
        for (i, &a) in alpha_bar.iter().enumerate() {
            if !(a > T::zero() && a <= T::one()) {
                return Err(Error::invalid(format!("ᾱ_{} = {a} outside (0, 1]", i + 1)));
            }
            if i > 0 && a >= alpha_bar[i - 1] {
                return Err(Error::invalid(format!("schedule not strictly decreasing at step {}", i + 1)));
            }
        }
        Ok(Self { alpha_bar })
    }

    /// Linear β ramp over `train_steps` training steps, subsampled to
    /// `steps` sampling steps at training indices `stride·(k−1) + 1`
    /// (`stride = train_steps / steps`), the usual leading spacing with a
    /// one-step offset.
    pub fn linear_beta(steps: usize, beta_start: f64, beta_end: f64, train_steps: usize) -> Result<Self> {
        if steps == 0 || train_steps < steps {
            return Err(Error::invalid(format!("{steps} sampling steps over {train_steps} training steps")));
        }
        if !(beta_start > 0.0 && beta_end < 1.0 && beta_start <= beta_end) {
            return Err(Error::invalid(format!("β range [{beta_start}, {beta_end}]")));
        }
        let mut cum = Vec::with_capacity(train_steps);
        let mut prod = 1.0f64;
        for i in 0..train_steps {
            let frac = if train_steps == 1 { 0.0 } else { i as f64 / (train_steps - 1) as f64 };
            prod *= 1.0 - (beta_start + (beta_end - beta_start) * frac);
            cum.push(prod);
        }
        let stride = train_steps / steps;
        let picked = (0..steps).map(|k| T::lit(cum[(stride * k + 1).min(train_steps - 1)])).collect();
        Self::new(picked)
    }

    /// Default 50-step schedule: β from 8.5e-4 to 1.2e-2 over 1000
    /// training steps.
    pub fn default_steps(steps: usize) -> Result<Self> {
        Self::linear_beta(steps, 8.5e-4, 1.2e-2, 1000)
    }

    pub fn steps(&self) -> usize {
        self.alpha_bar.len()
    }

    /// `ᾱ_t` for `t ∈ [0, T]`; `ᾱ_0 = 1`.
    pub fn at(&self, t: usize) -> T {
        if t == 0 {
            T::one()
        } else {
            self.alpha_bar[t - 1]
        }
    }

    pub fn values(&self) -> &[T] {
        &self.alpha_bar
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_schedule_shape() {
        let s = AlphaSchedule::<f64>::default_steps(50).unwrap();
        assert_eq!(s.steps(), 50);
        assert_eq!(s.at(0), 1.0);
        assert!(s.at(1) > 0.99);
        assert!(s.at(50) < 0.01, "{}", s.at(50));
    }

    #[test]
    fn subsampling_matches_direct_product() {
        let s = AlphaSchedule::<f64>::linear_beta(4, 1e-3, 2e-2, 8).unwrap();
        let betas: Vec<f64> = (0..8).map(|i| 1e-3 + (2e-2 - 1e-3) * i as f64 / 7.0).collect();
        let cum = |n: usize| betas[..=n].iter().map(|b| 1.0 - b).product::<f64>();
        for (k, idx) in [1, 3, 5, 7].iter().enumerate() {
            assert!((s.at(k + 1) - cum(*idx)).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_bad_schedules() {
        assert!(AlphaSchedule::new(vec![0.9, 0.95]).is_err());
        assert!(AlphaSchedule::new(vec![1.2]).is_err());
        assert!(AlphaSchedule::new(vec![0.5, 0.0]).is_err());
        assert!(AlphaSchedule::<f64>::new(vec![]).is_err());
        assert!(AlphaSchedule::new(vec![1.0, 0.5]).is_ok());
    }
}
