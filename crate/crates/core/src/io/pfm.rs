use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::numeric::Real;

/// Writes a 1- or 3-channel grid as little-endian PFM (`Pf` / `PF`, scale
/// −1, rows stored bottom-up). Values are narrowed to `f32`.
pub fn write_pfm<T: Real>(grid: &Grid<T>, path: impl AsRef<Path>) -> Result<()> {
    let magic = match grid.channels() {
        1 => "Pf",
        3 => "PF",
        c => return Err(Error::Shape(format!("PFM holds 1 or 3 channels, not {c}"))),
    };
    let (w, h, c) = grid.dims();
    let mut out = format!("{magic}\n{w} {h}\n-1.0\n").into_bytes();
    out.reserve(w * h * c * 4);
    for y in (0..h).rev() {
        for x in 0..w {
            for &v in grid.pixel(x, y) {
                out.extend_from_slice(&(v.as_f64() as f32).to_le_bytes());
            }
        }
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn read_pfm<T: Real>(path: impl AsRef<Path>) -> Result<Grid<T>> {
    let data = fs::read(path)?;
    let bad = |m: &str| Error::invalid(format!("PFM: {m}"));
    // three whitespace-terminated header tokens lines: magic, dims, scale
    let mut fields = Vec::new();
    let mut pos = 0;
    while fields.len() < 4 {
        while pos < data.len() && data[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < data.len() && !data[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(bad("truncated header"));
        }
        fields.push(std::str::from_utf8(&data[start..pos]).map_err(|_| bad("header"))?.to_string());
    }
    pos += 1;
    let c = match fields[0].as_str() {
        "Pf" => 1,
        "PF" => 3,
        _ => return Err(bad("bad magic")),
    };
    let w: usize = fields[1].parse().map_err(|_| bad("width"))?;
    let h: usize = fields[2].parse().map_err(|_| bad("height"))?;
    let scale: f64 = fields[3].parse().map_err(|_| bad("scale"))?;
    let little = scale < 0.0;
    let body = &data[pos.min(data.len())..];
    if body.len() != w * h * c * 4 {
        return Err(bad("payload size does not match dimensions"));
    }
    let mut grid = Grid::zeros(w, h, c);
    for (i, chunk) in body.chunks_exact(4).enumerate() {
        let b: [u8; 4] = chunk.try_into().expect("chunk");
        let v = if little { f32::from_le_bytes(b) } else { f32::from_be_bytes(b) };
        let (cell, ch) = (i / c, i % c);
        let (x, y) = (cell % w, h - 1 - cell / w);
        grid.set(x, y, ch, T::lit(v as f64));
    }
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_and_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.pfm");
        let g = Grid::from_vec(2, 2, 1, vec![1.0f64, 2.0, 3.0, 4.5]).unwrap();
        write_pfm(&g, &path).unwrap();
        let bytes = fs::read(&path).unwrap();
        let mut want = b"Pf\n2 2\n-1.0\n".to_vec();
        for v in [3.0f32, 4.5, 1.0, 2.0] {
            want.extend_from_slice(&v.to_le_bytes());
        }
        assert_eq!(bytes, want);
        assert_eq!(read_pfm::<f64>(&path).unwrap(), g);

        let rgb = Grid::from_fn(3, 2, 3, |x, y, c| (x * 10 + y * 100 + c) as f64);
        write_pfm(&rgb, &path).unwrap();
        assert_eq!(read_pfm::<f64>(&path).unwrap(), rgb);
    }
}
