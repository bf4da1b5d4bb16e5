use crate::error::{Error, Result};
use crate::grid::{Grid, Image};
use crate::numeric::Real;

/// Maps images to latent grids `k` times coarser and back.
pub trait LatentCodec<T: Real>: Send + Sync {
    /// Pixel-to-latent factor `k`.
    fn scale(&self) -> usize;
    fn channels(&self) -> usize;
    fn encode(&self, image: &Image<T>) -> Result<Grid<T>>;
    fn decode(&self, latent: &Grid<T>) -> Result<Image<T>>;
}

fn check_rgb<T: Real>(image: &Image<T>, k: usize) -> Result<()> {
    if image.channels() != 3 {
        return Err(Error::Codec(format!("expected RGB, got {} channels", image.channels())));
    }
    if !image.width().is_multiple_of(k) || !image.height().is_multiple_of(k) {
        return Err(Error::Codec(format!(
            "{}x{} image not divisible by codec scale {k}",
            image.width(),
            image.height()
        )));
    }
    Ok(())
}

/// `k = 1`, three channels; encode and decode are exact copies.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityCodec;

impl<T: Real> LatentCodec<T> for IdentityCodec {
    fn scale(&self) -> usize {
        1
    }

    fn channels(&self) -> usize {
        3
    }

    fn encode(&self, image: &Image<T>) -> Result<Grid<T>> {
        check_rgb(image, 1)?;
        Ok(image.clone())
    }

    fn decode(&self, latent: &Grid<T>) -> Result<Image<T>> {
        check_rgb(latent, 1)?;
        Ok(latent.clone())
    }
}

/// Box-filter downsampling by `k`; decoding repeats each cell over its block.
#[derive(Debug, Clone, Copy)]
pub struct AveragePoolCodec {
    k: usize,
}

impl AveragePoolCodec {
    pub fn new(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("codec scale must be at least 1"));
        }
        Ok(Self { k })
    }
}

impl<T: Real> LatentCodec<T> for AveragePoolCodec {
    fn scale(&self) -> usize {
        self.k
    }

    fn channels(&self) -> usize {
        3
    }

    fn encode(&self, image: &Image<T>) -> Result<Grid<T>> {
        let k = self.k;
        check_rgb(image, k)?;
        let norm = T::one() / T::from_usize_lossy(k * k);
        Ok(Grid::from_fn(image.width() / k, image.height() / k, 3, |x, y, c| {
            let mut s = T::zero();
            for dy in 0..k {
                for dx in 0..k {
                    s += image.get(x * k + dx, y * k + dy, c);
                }
            }
            s * norm
        }))
    }

    fn decode(&self, latent: &Grid<T>) -> Result<Image<T>> {
        check_rgb(latent, 1)?;
        let k = self.k;
        Ok(Grid::from_fn(latent.width() * k, latent.height() * k, 3, |x, y, c| latent.get(x / k, y / k, c)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_round_trip_is_exact() {
        let img = Grid::from_fn(5, 3, 3, |x, y, c| (x * 7 + y * 3 + c) as f64 / 37.0);
        let c = IdentityCodec;
        assert_eq!(LatentCodec::<f64>::decode(&c, &c.encode(&img).unwrap()).unwrap(), img);
    }

    #[test]
    fn pool_round_trip_on_block_constant_image() {
        let img = Grid::from_fn(8, 4, 3, |x, y, c| ((x / 2) + 10 * (y / 2) + c) as f64);
        let c = AveragePoolCodec::new(2).unwrap();
        let lat = c.encode(&img).unwrap();
        assert_eq!(lat.dims(), (4, 2, 3));
        assert_eq!(c.decode(&lat).unwrap(), img);
        assert!(c.encode(&Grid::<f64>::zeros(3, 4, 3)).is_err());
    }
}
