//! Dense row-major raster containers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::Real;

/// `height × width × channels` values, row-major, channels interleaved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid<T> {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<T>,
}

/// An RGB image with values in `[0, 1]`.
pub type Image<T> = Grid<T>;

impl<T: Real> Grid<T> {
    pub fn zeros(width: usize, height: usize, channels: usize) -> Self {
        Self::filled(width, height, channels, T::zero())
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: T) -> Self {
        Self { width, height, channels, data: vec![value; width * height * channels] }
    }

    pub fn from_vec(width: usize, height: usize, channels: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != width * height * channels {
            return Err(Error::Shape(format!(
                "grid {width}x{height}x{channels} needs {} values, got {}",
                width * height * channels,
                data.len()
            )));
        }
        Ok(Self { width, height, channels, data })
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> T,
    ) -> Self {
        let mut data = Vec::with_capacity(width * height * channels);
        for y in 0..height {
            for x in 0..width {
                for c in 0..channels {
                    data.push(f(x, y, c));
                }
            }
        }
        Self { width, height, channels, data }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn channels(&self) -> usize {
        self.channels
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.width, self.height, self.channels)
    }

    #[inline]
    pub fn data(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn idx(&self, x: usize, y: usize) -> usize {
        (y * self.width + x) * self.channels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> T {
        self.data[self.idx(x, y) + c]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, c: usize, v: T) {
        let i = self.idx(x, y) + c;
        self.data[i] = v;
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> &[T] {
        let i = self.idx(x, y);
        &self.data[i..i + self.channels]
    }

    #[inline]
    pub fn pixel_mut(&mut self, x: usize, y: usize) -> &mut [T] {
        let i = self.idx(x, y);
        let c = self.channels;
        &mut self.data[i..i + c]
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.dims() == other.dims()
    }

    pub fn ensure_same_shape(&self, other: &Self, what: &str) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::Shape(format!("{what}: {:?} vs {:?}", self.dims(), other.dims())))
        }
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            width: self.width,
            height: self.height,
            channels: self.channels,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(T, T) -> T) -> Result<Self> {
        self.ensure_same_shape(other, "zip_map")?;
        Ok(Self {
            width: self.width,
            height: self.height,
            channels: self.channels,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Single channel extracted as its own grid.
    pub fn channel(&self, c: usize) -> Self {
        Self::from_fn(self.width, self.height, 1, |x, y, _| self.get(x, y, c))
    }

    /// Columns `[x0, x0 + w)` taken modulo the width (cyclic crop).
    pub fn crop_cyclic(&self, x0: usize, w: usize) -> Self {
        Self::from_fn(w, self.height, self.channels, |x, y, c| {
            self.get((x0 + x) % self.width, y, c)
        })
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.data
            .iter()
            .zip(&other.data)
            .fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs()))
    }

    pub fn mean_abs_diff(&self, other: &Self) -> T {
        if self.data.is_empty() {
            return T::zero();
        }
        let s: T = self.data.iter().zip(&other.data).map(|(&a, &b)| (a - b).abs()).sum();
        s / T::from_usize_lossy(self.data.len())
    }

    pub fn cast<U: Real>(&self) -> Grid<U> {
        Grid {
            width: self.width,
            height: self.height,
            channels: self.channels,
            data: self.data.iter().map(|v| U::lit(v.as_f64())).collect(),
        }
    }

    /// Channel-wise concatenation of grids with equal width and height.
    pub fn stack(parts: &[&Self]) -> Result<Self> {
        let first = parts.first().ok_or_else(|| Error::Shape("stack of nothing".into()))?;
        let (w, h) = (first.width, first.height);
        if parts.iter().any(|p| p.width != w || p.height != h) {
            return Err(Error::Shape("stack: mismatched spatial dims".into()));
        }
        let channels = parts.iter().map(|p| p.channels).sum();
        let mut data = Vec::with_capacity(w * h * channels);
        for i in 0..w * h {
            for p in parts {
                data.extend_from_slice(&p.data[i * p.channels..(i + 1) * p.channels]);
            }
        }
        Ok(Self { width: w, height: h, channels, data })
    }
}

/// Binary raster.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mask {
    width: usize,
    height: usize,
    data: Vec<bool>,
}

impl Mask {
    pub fn new(width: usize, height: usize, value: bool) -> Self {
        Self { width, height, data: vec![value; width * height] }
    }

    pub fn from_vec(width: usize, height: usize, data: Vec<bool>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::Shape(format!("mask {width}x{height} got {} values", data.len())));
        }
        Ok(Self { width, height, data })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self { width, height, data }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: bool) {
        self.data[y * self.width + x] = v;
    }

    #[inline]
    pub fn data(&self) -> &[bool] {
        &self.data
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    pub fn any(&self) -> bool {
        self.data.iter().any(|&b| b)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn not(&self) -> Self {
        Self { width: self.width, height: self.height, data: self.data.iter().map(|b| !b).collect() }
    }

    pub fn and(&self, o: &Self) -> Self {
        Self {
            width: self.width,
            height: self.height,
            data: self.data.iter().zip(&o.data).map(|(a, b)| *a && *b).collect(),
        }
    }

    pub fn or(&self, o: &Self) -> Self {
        Self {
            width: self.width,
            height: self.height,
            data: self.data.iter().zip(&o.data).map(|(a, b)| *a || *b).collect(),
        }
    }

    /// 8-neighbourhood dilation by `r` cells. With `wrap_x` the columns are
    /// treated as cyclic.
    pub fn dilate(&self, r: usize, wrap_x: bool) -> Self {
        let (w, h) = (self.width as isize, self.height as isize);
        let r = r as isize;
        Self::from_fn(self.width, self.height, |x, y| {
            for dy in -r..=r {
                let yy = y as isize + dy;
                if yy < 0 || yy >= h {
                    continue;
                }
                for dx in -r..=r {
                    let mut xx = x as isize + dx;
                    if wrap_x {
                        xx = xx.rem_euclid(w);
                    } else if xx < 0 || xx >= w {
                        continue;
                    }
                    if self.data[(yy * w + xx) as usize] {
                        return true;
                    }
                }
            }
            false
        })
    }

    /// A cell of the `k`-times smaller mask is set when any of its `k×k`
    /// source cells is set.
    pub fn downsample_any(&self, k: usize) -> Result<Self> {
        if k == 0 || !self.width.is_multiple_of(k) || !self.height.is_multiple_of(k) {
            return Err(Error::Shape(format!(
                "mask {}x{} not divisible by {k}",
                self.width, self.height
            )));
        }
        Ok(Self::from_fn(self.width / k, self.height / k, |x, y| {
            (0..k).any(|dy| (0..k).any(|dx| self.get(x * k + dx, y * k + dy)))
        }))
    }

    pub fn crop_cyclic(&self, x0: usize, w: usize) -> Self {
        Self::from_fn(w, self.height, |x, y| self.get((x0 + x) % self.width, y))
    }

    pub fn to_grid<T: Real>(&self) -> Grid<T> {
        Grid::from_fn(self.width, self.height, 1, |x, y, _| {
            if self.get(x, y) {
                T::one()
            } else {
                T::zero()
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dilate_wraps_horizontally() {
        let mut m = Mask::new(6, 3, false);
        m.set(0, 1, true);
        let d = m.dilate(1, true);
        assert!(d.get(5, 0) && d.get(5, 2) && d.get(1, 1));
        assert!(!d.get(2, 1));
        let nd = m.dilate(1, false);
        assert!(!nd.get(5, 1));
    }

    #[test]
    fn downsample_any_is_dilation_safe() {
        let mut m = Mask::new(4, 4, false);
        m.set(3, 0, true);
        let d = m.downsample_any(2).unwrap();
        assert_eq!(d.data(), &[false, true, false, false]);
        assert!(m.downsample_any(3).is_err());
    }

    #[test]
    fn stack_interleaves_channels() {
        let a = Grid::<f64>::filled(2, 1, 1, 1.0);
        let b = Grid::<f64>::filled(2, 1, 2, 2.0);
        let s = Grid::stack(&[&a, &b]).unwrap();
        assert_eq!(s.data(), &[1.0, 2.0, 2.0, 1.0, 2.0, 2.0]);
    }

    #[test]
    fn cyclic_crop_wraps() {
        let g = Grid::<f64>::from_fn(4, 1, 1, |x, _, _| x as f64);
        assert_eq!(g.crop_cyclic(3, 3).data(), &[3.0, 0.0, 1.0]);
    }
}
