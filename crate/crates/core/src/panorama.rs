use serde::{Deserialize, Serialize};

use crate::camera::{DistanceGrid, ViewSpec};
use crate::error::{Error, Result};
use crate::grid::{Image, Mask};
use crate::linalg::Vec3;
use crate::numeric::Real;

/// Equirectangular RGBD band around a room centre.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanoramaRgbd<T> {
    pub color: Image<T>,
    pub distance: DistanceGrid<T>,
    /// Cells the mesh did not cover when the panorama was rendered.
    pub hole_mask: Mask,
    /// Equirectangular band geometry; its position is the room centre.
    pub view: ViewSpec<T>,
}

impl<T: Real> PanoramaRgbd<T> {
    pub fn center(&self) -> Vec3<T> {
        self.view.center()
    }

    pub fn width(&self) -> usize {
        self.view.width()
    }

    pub fn height(&self) -> usize {
        self.view.height()
    }

    pub fn validate(&self) -> Result<()> {
        if !self.view.is_equirect() {
            return Err(Error::invalid("panorama view must be equirectangular"));
        }
        let (w, h) = (self.width(), self.height());
        let ok = self.color.dims() == (w, h, 3)
            && self.distance.width() == w
            && self.distance.height() == h
            && self.hole_mask.width() == w
            && self.hole_mask.height() == h;
        if !ok {
            return Err(Error::Shape(format!("panorama components do not match the {w}x{h} band")));
        }
        Ok(())
    }
}
