//! Rotation-only resampling between views that share an optical centre.

use crate::camera::{ensure_shared_center, ViewKind, ViewSpec};
use crate::error::{Error, Result};
use crate::grid::{Grid, Mask};
use crate::numeric::Real;

/// Snaps a sampling coordinate onto the integer lattice when it lies within
/// [`Real::snap_eps`] of it, so that self-warps copy values exactly.
#[inline]
pub fn snap<T: Real>(u: T) -> T {
    let r = u.round();
    if (u - r).abs() < T::snap_eps() {
        r
    } else {
        u
    }
}

/// Bilinear footprint along one axis: `(i0, i1, frac)`. All taps must lie
/// inside `[0, n − 1]`; with `wrap` the axis is cyclic.
#[inline]
pub fn axis_taps<T: Real>(u: T, n: usize, wrap: bool) -> Option<(usize, usize, T)> {
    let u = snap(u);
    let nf = T::from_usize_lossy(n);
    if wrap {
        let mut w = u % nf;
        if w < T::zero() {
            w += nf;
        }
        if w >= nf {
            w = T::zero();
        }
        let i0 = w.floor().to_usize()?.min(n - 1);
        let frac = w - T::from_usize_lossy(i0);
        return Some((i0, (i0 + 1) % n, frac));
    }
    if !(u >= T::zero() && u <= nf - T::one()) {
        return None;
    }
    if n == 1 {
        return Some((0, 0, T::zero()));
    }
    let i0 = u.floor().to_usize()?.min(n - 2);
    Some((i0, i0 + 1, u - T::from_usize_lossy(i0)))
}

#[derive(Debug, Clone, Copy)]
struct Taps<T> {
    idx: [u32; 4],
    w: [T; 4],
}

/// Precomputed bilinear lookup from a source grid into a destination grid.
#[derive(Debug, Clone)]
pub struct WarpMap<T> {
    src_dims: (usize, usize),
    dst_dims: (usize, usize),
    /// Destination cells that sample inside the source, ascending.
    cells: Vec<u32>,
    taps: Vec<Taps<T>>,
    covered: Vec<bool>,
}

impl<T: Real> WarpMap<T> {
    /// Builds the map for grids of `src_dims` / `dst_dims` cells laid over
    /// the two views (each an integer downscale of its view's resolution).
    pub fn new(
        src: &ViewSpec<T>,
        src_dims: (usize, usize),
        dst: &ViewSpec<T>,
        dst_dims: (usize, usize),
    ) -> Result<Self> {
        ensure_shared_center(&[*src, *dst])?;
        let s = src.at_resolution(src_dims.0, src_dims.1)?;
        let d = dst.at_resolution(dst_dims.0, dst_dims.1)?;
        let rel = s.pose.rotation.transpose().mul_mat(&d.pose.rotation);
        let wrap = matches!(s.kind, ViewKind::Equirect { .. });
        let (sw, sh) = src_dims;
        let mut cells = Vec::new();
        let mut taps = Vec::new();
        let mut covered = vec![false; dst_dims.0 * dst_dims.1];
        for y in 0..dst_dims.1 {
            for x in 0..dst_dims.0 {
                let ray = d.camera_ray(T::from_usize_lossy(x), T::from_usize_lossy(y));
                let (u, v, inside) = s.camera_dir_to_pixel(rel.mul_vec(ray));
                let entry = if inside {
                    match (axis_taps(u, sw, wrap), axis_taps(v, sh, false)) {
                        (Some((x0, x1, fx)), Some((y0, y1, fy))) => {
                            let (gx, gy) = (T::one() - fx, T::one() - fy);
                            Some(Taps {
                                idx: [
                                    (y0 * sw + x0) as u32,
                                    (y0 * sw + x1) as u32,
                                    (y1 * sw + x0) as u32,
                                    (y1 * sw + x1) as u32,
                                ],
                                w: [gx * gy, fx * gy, gx * fy, fx * fy],
                            })
                        }
                        _ => None,
                    }
                } else {
                    None
                };
                if let Some(t) = entry {
                    let cell = y * dst_dims.0 + x;
                    cells.push(cell as u32);
                    taps.push(t);
                    covered[cell] = true;
                }
            }
        }
        Ok(Self { src_dims, dst_dims, cells, taps, covered })
    }

    pub fn dst_dims(&self) -> (usize, usize) {
        self.dst_dims
    }

    pub fn mask(&self) -> Mask {
        Mask::from_vec(self.dst_dims.0, self.dst_dims.1, self.covered.clone()).expect("dims consistent")
    }

    pub fn coverage(&self) -> usize {
        self.cells.len()
    }

    #[inline]
    pub fn covers(&self, cell: usize) -> bool {
        self.covered[cell]
    }

    /// Warps `grid`; cells outside the mask are 0.
    pub fn apply(&self, grid: &Grid<T>) -> Result<(Grid<T>, Mask)> {
        let mut out = Grid::zeros(self.dst_dims.0, self.dst_dims.1, grid.channels());
        self.accumulate(grid, &mut out, None)?;
        Ok((out, self.mask()))
    }

    /// Adds the warped values into `acc` and increments `counts` on covered
    /// cells.
    pub fn accumulate(&self, grid: &Grid<T>, acc: &mut Grid<T>, mut counts: Option<&mut [u32]>) -> Result<()> {
        if (grid.width(), grid.height()) != self.src_dims {
            return Err(Error::Shape(format!(
                "warp source {}x{} vs map {:?}",
                grid.width(),
                grid.height(),
                self.src_dims
            )));
        }
        if (acc.width(), acc.height()) != self.dst_dims || acc.channels() != grid.channels() {
            return Err(Error::Shape("warp accumulator shape".into()));
        }
        let c = grid.channels();
        let src = grid.data();
        let dst = acc.data_mut();
        for (&cell, t) in self.cells.iter().zip(&self.taps) {
            let cell = cell as usize;
            let o = cell * c;
            for ch in 0..c {
                let mut v = T::zero();
                for k in 0..4 {
                    if t.w[k] != T::zero() {
                        v += t.w[k] * src[t.idx[k] as usize * c + ch];
                    }
                }
                dst[o + ch] += v;
            }
            if let Some(counts) = counts.as_deref_mut() {
                counts[cell] += 1;
            }
        }
        Ok(())
    }
}

/// Resamples `grid` (laid over `src`, possibly at an integer downscale) into
/// `dst` at the same downscale factor.
pub fn warp_grid<T: Real>(src: &ViewSpec<T>, dst: &ViewSpec<T>, grid: &Grid<T>) -> Result<(Grid<T>, Mask)> {
    if grid.width() == 0 || !src.width().is_multiple_of(grid.width()) {
        return Err(Error::Shape(format!(
            "grid width {} does not divide view width {}",
            grid.width(),
            src.width()
        )));
    }
    let k = src.width() / grid.width();
    if !dst.width().is_multiple_of(k) || !dst.height().is_multiple_of(k) {
        return Err(Error::Shape(format!("destination view not divisible by scale {k}")));
    }
    let map = WarpMap::new(src, (grid.width(), grid.height()), dst, (dst.width() / k, dst.height() / k))?;
    map.apply(grid)
}
