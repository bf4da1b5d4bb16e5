//! Cross-view and cross-window averaging of clean-latent estimates.

use crate::camera::{ensure_shared_center, ViewSpec};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::numeric::Real;
use crate::warp::WarpMap;

fn dims_of<T: Real>(g: &Grid<T>) -> (usize, usize) {
    (g.width(), g.height())
}

/// Precomputed warps between every ordered pair of views in a shared-centre
/// set, at a fixed grid size per view.
pub struct FanAverager<T> {
    dims: Vec<(usize, usize)>,
    /// `maps[i]` lists `(j, W_{j→i})` for every `j ≠ i` that overlaps `i`.
    maps: Vec<Vec<(usize, WarpMap<T>)>>,
}

impl<T: Real> FanAverager<T> {
    pub fn new(views: &[ViewSpec<T>], dims: &[(usize, usize)]) -> Result<Self> {
        if views.len() != dims.len() {
            return Err(Error::Shape(format!("{} views vs {} grid sizes", views.len(), dims.len())));
        }
        ensure_shared_center(views)?;
        let mut maps = Vec::with_capacity(views.len());
        for (i, vi) in views.iter().enumerate() {
            let mut row = Vec::new();
            for (j, vj) in views.iter().enumerate() {
                if i == j {
                    continue;
                }
                let m = WarpMap::new(vj, dims[j], vi, dims[i])?;
                if m.coverage() > 0 {
                    row.push((j, m));
                }
            }
            maps.push(row);
        }
        Ok(Self { dims: dims.to_vec(), maps })
    }

    /// `x̂₀′ᵢ = Σⱼ W_{j→i}(x̂₀ʲ) / Σⱼ m_{j→i}`. The self term contributes with
    /// weight 1 everywhere, so the denominator is at least 1.
    pub fn average(&self, grids: &[Grid<T>]) -> Result<Vec<Grid<T>>> {
        if grids.len() != self.dims.len() {
            return Err(Error::Shape(format!("{} grids for {} views", grids.len(), self.dims.len())));
        }
        for (g, d) in grids.iter().zip(&self.dims) {
            if dims_of(g) != *d {
                return Err(Error::Shape(format!("grid {:?} vs expected {d:?}", g.dims())));
            }
        }
        let mut out = Vec::with_capacity(grids.len());
        for (i, row) in self.maps.iter().enumerate() {
            let mut acc = grids[i].clone();
            let mut counts = vec![1u32; acc.width() * acc.height()];
            for (j, map) in row {
                map.accumulate(&grids[*j], &mut acc, Some(&mut counts))?;
            }
            let c = acc.channels();
            for (cell, &n) in counts.iter().enumerate() {
                debug_assert!(n >= 1);
                if n > 1 {
                    let inv = T::one() / T::from(n).expect("count");
                    for v in &mut acc.data_mut()[cell * c..(cell + 1) * c] {
                        *v *= inv;
                    }
                }
            }
            out.push(acc);
        }
        Ok(out)
    }
}

/// One-shot [`FanAverager`] over grids laid on `views`.
pub fn warp_average<T: Real>(views: &[ViewSpec<T>], grids: &[Grid<T>]) -> Result<Vec<Grid<T>>> {
    let dims: Vec<_> = grids.iter().map(dims_of).collect();
    FanAverager::new(views, &dims)?.average(grids)
}

/// Cyclic window start columns: `0, stride, 2·stride, …` below `width`.
/// A window wider than the panorama is clamped to one full-width window.
pub fn window_offsets(width: usize, window: usize, stride: usize) -> Result<(Vec<usize>, usize)> {
    if width == 0 || window == 0 || stride == 0 {
        return Err(Error::invalid("window layout needs positive width, window and stride"));
    }
    if window >= width {
        return Ok((vec![0], width));
    }
    if stride > window {
        return Err(Error::Coverage(format!("stride {stride} > window {window} leaves gaps")));
    }
    Ok(((0..width).step_by(stride).collect(), window))
}

/// Count-weighted mean of cyclic windows `(col_offset, grid)` over a
/// `width × height × channels` panorama latent.
pub fn window_average<T: Real>(
    width: usize,
    height: usize,
    channels: usize,
    windows: &[(usize, Grid<T>)],
) -> Result<Grid<T>> {
    let mut acc = Grid::zeros(width, height, channels);
    let mut counts = vec![0u32; width];
    for (off, g) in windows {
        if g.height() != height || g.channels() != channels || g.width() > width {
            return Err(Error::Shape(format!("window {:?} on a {width}x{height}x{channels} panorama", g.dims())));
        }
        for x in 0..g.width() {
            let col = (off + x) % width;
            counts[col] += 1;
            for y in 0..height {
                let src = g.pixel(x, y);
                let dst = acc.pixel_mut(col, y);
                for c in 0..channels {
                    dst[c] += src[c];
                }
            }
        }
    }
    if let Some(col) = counts.iter().position(|&n| n == 0) {
        return Err(Error::Coverage(format!("panorama column {col} not covered by any window")));
    }
    for (col, &n) in counts.iter().enumerate() {
        let inv = T::one() / T::from(n).expect("count");
        for y in 0..height {
            for v in acc.pixel_mut(col, y) {
                *v *= inv;
            }
        }
    }
    Ok(acc)
}

/// Precomputed view → band warps for repeated stitching.
pub struct Stitcher<T> {
    band_dims: (usize, usize),
    maps: Vec<WarpMap<T>>,
}

impl<T: Real> Stitcher<T> {
    pub fn new(
        views: &[ViewSpec<T>],
        dims: &[(usize, usize)],
        band: &ViewSpec<T>,
        band_dims: (usize, usize),
    ) -> Result<Self> {
        if views.len() != dims.len() {
            return Err(Error::Shape(format!("{} views vs {} grid sizes", views.len(), dims.len())));
        }
        let maps = views
            .iter()
            .zip(dims)
            .map(|(v, d)| WarpMap::new(v, *d, band, band_dims))
            .collect::<Result<Vec<_>>>()?;
        let mut covered = vec![false; band_dims.0 * band_dims.1];
        for m in &maps {
            for (cell, c) in covered.iter_mut().enumerate() {
                *c |= m.covers(cell);
            }
        }
        if let Some(cell) = covered.iter().position(|c| !c) {
            return Err(Error::Coverage(format!(
                "band cell ({}, {}) is not covered by any view",
                cell % band_dims.0,
                cell / band_dims.0
            )));
        }
        Ok(Self { band_dims, maps })
    }

    /// Coverage-weighted mean of the warped view grids.
    pub fn stitch(&self, grids: &[Grid<T>]) -> Result<Grid<T>> {
        if grids.len() != self.maps.len() {
            return Err(Error::Shape(format!("{} grids for {} views", grids.len(), self.maps.len())));
        }
        let c = grids.first().map_or(1, Grid::channels);
        let (w, h) = self.band_dims;
        let mut acc = Grid::zeros(w, h, c);
        let mut counts = vec![0u32; w * h];
        for (m, g) in self.maps.iter().zip(grids) {
            m.accumulate(g, &mut acc, Some(&mut counts))?;
        }
        for (cell, &n) in counts.iter().enumerate() {
            let inv = T::one() / T::from(n).expect("count");
            for v in &mut acc.data_mut()[cell * c..(cell + 1) * c] {
                *v *= inv;
            }
        }
        Ok(acc)
    }
}

/// Stitches per-view grids into the equirectangular band `band`, sampled on
/// a `band_dims` grid.
pub fn stitch_views_to_equirect<T: Real>(
    views: &[ViewSpec<T>],
    grids: &[Grid<T>],
    band: &ViewSpec<T>,
    band_dims: (usize, usize),
) -> Result<Grid<T>> {
    let dims: Vec<_> = grids.iter().map(dims_of).collect();
    Stitcher::new(views, &dims, band, band_dims)?.stitch(grids)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::camera::{make_pano_views, FanSpec};
    use crate::linalg::{Pose, Vec3};
    use crate::warp::warp_grid;

    fn smooth_field(d: Vec3<f64>) -> f64 {
        0.5 + 0.3 * d.x + 0.2 * d.y * d.z
    }

    fn fan(size: usize) -> Vec<ViewSpec<f64>> {
        make_pano_views(Vec3::new(0.1, 0.2, 0.3), &FanSpec { size, ..FanSpec::default() }).unwrap()
    }

    fn sample(v: &ViewSpec<f64>) -> Grid<f64> {
        Grid::from_fn(v.width(), v.height(), 1, |x, y, _| smooth_field(v.world_ray(x as f64, y as f64)))
    }

    #[test]
    fn single_view_is_identity() {
        let v = fan(24);
        let g = sample(&v[0]);
        assert_eq!(warp_average(&v[..1], std::slice::from_ref(&g)).unwrap()[0], g);
    }

    #[test]
    fn coincident_views_average() {
        let v = fan(24);
        let (a, b) = (Grid::filled(24, 24, 2, 1.0), Grid::filled(24, 24, 2, 3.0));
        let out = warp_average(&[v[0], v[0]], &[a, b]).unwrap();
        assert!(out.iter().all(|g| g.data().iter().all(|&x| (x - 2.0).abs() < 1e-12)));
    }

    #[test]
    fn order_invariance() {
        let v = fan(24);
        let grids: Vec<_> = v.iter().map(sample).collect();
        let fwd = warp_average(&v, &grids).unwrap();
        let rv: Vec<_> = v.iter().rev().copied().collect();
        let rg: Vec<_> = grids.iter().rev().cloned().collect();
        let back = warp_average(&rv, &rg).unwrap();
        for i in 0..v.len() {
            assert!(fwd[i].max_abs_diff(&back[v.len() - 1 - i]) < 1e-14);
        }
    }

    #[test]
    fn consistent_fields_are_fixed_points() {
        let v = fan(48);
        let grids: Vec<_> = v.iter().map(sample).collect();
        let out = warp_average(&v, &grids).unwrap();
        for (a, b) in out.iter().zip(&grids) {
            assert!(a.max_abs_diff(b) < 2e-3, "{}", a.max_abs_diff(b));
        }
    }

    #[test]
    fn window_examples() {
        let full = Grid::from_fn(8, 2, 1, |x, y, _| (x + y) as f64);
        assert_eq!(window_average(8, 2, 1, &[(0, full.clone())]).unwrap(), full);

        let a = Grid::filled(4, 1, 1, 0.0);
        let b = Grid::filled(4, 1, 1, 2.0);
        let out = window_average(6, 1, 1, &[(0, a), (2, b)]).unwrap();
        assert_eq!(out.data(), &[0.0, 0.0, 1.0, 1.0, 2.0, 2.0]);

        let (offs, w) = window_offsets(256, 64, 16).unwrap();
        assert_eq!((offs.len(), w), (16, 64));
        let ones: Vec<_> = offs.iter().map(|&o| (o, Grid::filled(64, 1, 1, 1.0))).collect();
        let mut counts = vec![0; 256];
        for (o, g) in &ones {
            for x in 0..g.width() {
                counts[(o + x) % 256] += 1;
            }
        }
        assert!(counts.iter().all(|&n| n == 4));

        assert!(window_average(8, 1, 1, &[(0, Grid::filled(4, 1, 1, 1.0))]).is_err());
    }

    #[test]
    fn stitch_constant_and_round_trip() {
        let v = fan(32);
        let band = ViewSpec::equirect_band(v[0].center(), 128, 45.0).unwrap();
        assert_eq!((band.width(), band.height()), (128, 32));
        let consts: Vec<_> = v.iter().map(|_| Grid::filled(32, 32, 1, 0.7)).collect();
        let s = stitch_views_to_equirect(&v, &consts, &band, (128, 32)).unwrap();
        assert!(s.data().iter().all(|&x| (x - 0.7).abs() < 1e-12));

        let big: Vec<_> = fan(128);
        let grids: Vec<_> = big.iter().map(sample).collect();
        let band = ViewSpec::equirect_band(big[0].center(), 512, 45.0).unwrap();
        let stitched = stitch_views_to_equirect(&big, &grids, &band, (512, 128)).unwrap();
        for (view, g) in big.iter().zip(&grids) {
            let (back, mask) = warp_grid(&band, view, &stitched).unwrap();
            for y in 0..view.height() {
                for x in 0..view.width() {
                    if mask.get(x, y) {
                        assert!((back.get(x, y, 0) - g.get(x, y, 0)).abs() < 1e-3);
                    }
                }
            }
        }
    }

    #[test]
    fn uncovered_band_is_an_error() {
        let v = fan(24);
        let band = ViewSpec::equirect_band(v[0].center(), 64, 45.0).unwrap();
        let g: Vec<_> = v[..2].iter().map(|_| Grid::filled(24, 24, 1, 1.0)).collect();
        assert!(matches!(
            stitch_views_to_equirect(&v[..2], &g, &band, (64, 16)),
            Err(Error::Coverage(_))
        ));
        let other = v[1].with_pose(Pose::from_yaw_pitch(Vec3::new(5.0, 0.0, 0.0), 0.0, 0.0));
        assert!(warp_average(&[v[0], other], &g).is_err());
    }
}
