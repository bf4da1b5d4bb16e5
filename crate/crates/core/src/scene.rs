//! Posed RGBD frames and input/evaluation splits.

use serde::{Deserialize, Serialize};

use crate::camera::{CameraIntrinsics, ViewSpec};
use crate::error::{Error, Result};
use crate::grid::{Grid, Image};
use crate::linalg::Pose;
use crate::numeric::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RgbdFrame<T> {
    /// RGB in `[0, 1]`.
    pub color: Image<T>,
    /// Camera z in metres, 0 = invalid.
    pub depth: Grid<T>,
    /// Camera-to-world.
    pub pose: Pose<T>,
    pub intrinsics: CameraIntrinsics<T>,
    pub frame_id: usize,
}

impl<T: Real> RgbdFrame<T> {
    pub fn view(&self) -> ViewSpec<T> {
        ViewSpec::perspective(self.intrinsics, self.pose)
    }

    pub fn validate(&self) -> Result<()> {
        let (w, h) = (self.intrinsics.width, self.intrinsics.height);
        let fail = |msg: String| Err(Error::Load { frame: Some(self.frame_id), msg });
        self.intrinsics.validate()?;
        if self.color.dims() != (w, h, 3) || self.depth.dims() != (w, h, 1) {
            return fail(format!(
                "colour {:?} / depth {:?} do not match {w}x{h} intrinsics",
                self.color.dims(),
                self.depth.dims()
            ));
        }
        if self.depth.data().iter().any(|d| !d.is_finite() || *d < T::zero()) {
            return fail("depth must be finite and non-negative".into());
        }
        if !self.pose.rotation.is_finite() || !self.pose.position.is_finite() {
            return fail("pose is not finite".into());
        }
        if self.pose.rotation.orthonormality_error() > T::lit(1e-6) {
            return fail("pose rotation is not orthonormal".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneDataset<T> {
    pub scene_id: String,
    pub frames: Vec<RgbdFrame<T>>,
}

impl<T: Real> SceneDataset<T> {
    pub fn new(scene_id: impl Into<String>, frames: Vec<RgbdFrame<T>>) -> Result<Self> {
        let ds = Self { scene_id: scene_id.into(), frames };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<()> {
        let first = self.frames.first().ok_or(Error::Load { frame: None, msg: "no frames".into() })?;
        let dims = (first.intrinsics.width, first.intrinsics.height);
        for f in &self.frames {
            f.validate()?;
            if (f.intrinsics.width, f.intrinsics.height) != dims {
                return Err(Error::Load {
                    frame: Some(f.frame_id),
                    msg: format!("resolution differs from the first frame's {dims:?}"),
                });
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

/// Indices of the input views: `n_in = round(N · fraction)` views at
/// positions `⌊i · N / n_in⌋`, so the first frame is always an input.
pub fn input_indices(n: usize, fraction: f64) -> Result<Vec<usize>> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::invalid(format!("fraction {fraction} outside (0, 1]")));
    }
    let n_in = (n as f64 * fraction).round() as usize;
    if n_in == 0 {
        return Err(Error::invalid(format!("fraction {fraction} of {n} frames selects no input views")));
    }
    Ok((0..n_in).map(|i| i * n / n_in).collect())
}

/// Splits into uniformly strided input views and the complementary
/// evaluation views, both in original order.
pub fn split_views<T: Real>(ds: &SceneDataset<T>, fraction: f64) -> Result<(SceneDataset<T>, SceneDataset<T>)> {
    let picked = input_indices(ds.len(), fraction)?;
    let mut is_input = vec![false; ds.len()];
    for &i in &picked {
        is_input[i] = true;
    }
    let (input, eval): (Vec<_>, Vec<_>) =
        ds.frames.iter().cloned().zip(is_input).partition(|(_, inp)| *inp);
    Ok((
        SceneDataset { scene_id: ds.scene_id.clone(), frames: input.into_iter().map(|(f, _)| f).collect() },
        SceneDataset { scene_id: ds.scene_id.clone(), frames: eval.into_iter().map(|(f, _)| f).collect() },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ds(n: usize) -> SceneDataset<f64> {
        let k = CameraIntrinsics::new(2.0, 2.0, 0.5, 0.5, 2, 2).unwrap();
        SceneDataset::new(
            "t",
            (0..n)
                .map(|i| RgbdFrame {
                    color: Grid::zeros(2, 2, 3),
                    depth: Grid::filled(2, 2, 1, 1.0),
                    pose: Pose::identity(),
                    intrinsics: k,
                    frame_id: i,
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn stride_examples() {
        assert_eq!(input_indices(10, 0.2).unwrap(), vec![0, 5]);
        let (i, e) = split_views(&ds(100), 0.05).unwrap();
        assert_eq!((i.len(), e.len()), (5, 95));
        let (i, e) = split_views(&ds(7), 1.0).unwrap();
        assert_eq!((i.len(), e.len()), (7, 0));
        assert!(split_views(&ds(10), 0.01).is_err());
        assert!(split_views(&ds(10), 0.0).is_err());
    }

    #[test]
    fn eval_preserves_order() {
        let (_, e) = split_views(&ds(10), 0.2).unwrap();
        let ids: Vec<_> = e.frames.iter().map(|f| f.frame_id).collect();
        assert_eq!(ids, vec![1, 2, 3, 4, 6, 7, 8, 9]);
    }

    #[test]
    fn empty_dataset_rejected() {
        assert!(matches!(SceneDataset::<f64>::new("x", vec![]), Err(Error::Load { .. })));
    }
}
