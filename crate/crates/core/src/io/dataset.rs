use std::fs;
use std::path::{Path, PathBuf};

use image::{ImageBuffer, Luma};

use super::{load_rgb_png, save_rgb_png};
use crate::camera::CameraIntrinsics;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::linalg::Pose;
use crate::numeric::Real;
use crate::scene::{RgbdFrame, SceneDataset};

/// Poses further than this from orthonormal are rejected; closer ones are
/// re-orthonormalised, absorbing the rounding of text files.
const POSE_TOLERANCE: f64 = 1e-4;

fn load_err(frame: Option<usize>, msg: impl Into<String>) -> Error {
    Error::Load { frame, msg: msg.into() }
}

fn frame_ids(dir: &Path) -> Result<Vec<usize>> {
    let entries = fs::read_dir(dir).map_err(|e| load_err(None, format!("{}: {e}", dir.display())))?;
    let mut ids = Vec::new();
    for entry in entries {
        let path = entry?.path();
        if path.extension().and_then(|e| e.to_str()) != Some("png") {
            continue;
        }
        if let Some(id) = path.file_stem().and_then(|s| s.to_str()).and_then(|s| s.parse::<usize>().ok()) {
            ids.push(id);
        }
    }
    ids.sort_unstable();
    Ok(ids)
}

fn parse_numbers<T: Real>(text: &str, what: &str, frame: Option<usize>) -> Result<Vec<T>> {
    text.split_whitespace()
        .map(|tok| {
            tok.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .map(T::lit)
                .ok_or_else(|| load_err(frame, format!("{what}: bad number `{tok}`")))
        })
        .collect()
}

fn read_intrinsics<T: Real>(path: &Path) -> Result<CameraIntrinsics<T>> {
    let text = fs::read_to_string(path).map_err(|e| load_err(None, format!("{}: {e}", path.display())))?;
    let v: Vec<T> = parse_numbers(&text, "intrinsics.txt", None)?;
    if v.len() != 6 {
        return Err(load_err(None, "intrinsics.txt must hold `fx fy cx cy width height`"));
    }
    let dim = |x: T| x.to_usize().filter(|&n| T::from_usize_lossy(n) == x && n > 0);
    let (w, h) = match (dim(v[4]), dim(v[5])) {
        (Some(w), Some(h)) => (w, h),
        _ => return Err(load_err(None, "intrinsics width/height must be positive integers")),
    };
    CameraIntrinsics::new(v[0], v[1], v[2], v[3], w, h).map_err(|e| load_err(None, e.to_string()))
}

fn read_pose<T: Real>(path: &Path, id: usize) -> Result<Pose<T>> {
    let text = fs::read_to_string(path).map_err(|e| load_err(Some(id), format!("{}: {e}", path.display())))?;
    let v: Vec<T> = parse_numbers(&text, "pose", Some(id))?;
    if v.len() != 16 {
        return Err(load_err(Some(id), format!("pose has {} values, expected 16", v.len())));
    }
    let mut m = [[T::zero(); 4]; 4];
    for (i, x) in v.into_iter().enumerate() {
        m[i / 4][i % 4] = x;
    }
    let mut pose = Pose::from_matrix(m);
    let err = pose.rotation.orthonormality_error();
    if err > T::lit(POSE_TOLERANCE) {
        return Err(load_err(Some(id), format!("pose rotation is not orthonormal (error {err})")));
    }
    if err > T::zero() {
        pose.rotation = pose.rotation.orthonormalized();
    }
    Ok(pose)
}

fn read_depth<T: Real>(path: &Path, id: usize) -> Result<Grid<T>> {
    let img = image::open(path).map_err(|e| load_err(Some(id), format!("{}: {e}", path.display())))?;
    let img = match img {
        image::DynamicImage::ImageLuma16(b) => b,
        other => {
            return Err(load_err(Some(id), format!("depth must be 16-bit grayscale, got {:?}", other.color())));
        }
    };
    let (w, h) = img.dimensions();
    let mm = T::lit(1000.0);
    let data = img.into_raw().into_iter().map(|d| T::from_u16(d).expect("u16") / mm).collect();
    Grid::from_vec(w as usize, h as usize, 1, data)
}

/// Loads `color/%06d.png`, `depth/%06d.png` (16-bit millimetres),
/// `pose/%06d.txt` (row-major camera-to-world) and `intrinsics.txt`
/// (`fx fy cx cy width height`). Frames are ordered by numeric id.
pub fn load_scene<T: Real>(root: impl AsRef<Path>) -> Result<SceneDataset<T>> {
    let root = root.as_ref();
    if !root.is_dir() {
        return Err(load_err(None, format!("scene directory {} not found", root.display())));
    }
    let color_dir = root.join("color");
    let ids = if color_dir.is_dir() { frame_ids(&color_dir)? } else { Vec::new() };
    if ids.is_empty() {
        return Err(load_err(None, "no frames"));
    }
    let intrinsics: CameraIntrinsics<T> = read_intrinsics(&root.join("intrinsics.txt"))?;
    let mut frames = Vec::with_capacity(ids.len());
    for id in ids {
        let name = format!("{id:06}");
        let color = load_rgb_png(color_dir.join(format!("{name}.png")))
            .map_err(|e| load_err(Some(id), e.to_string()))?;
        let depth = read_depth(&root.join("depth").join(format!("{name}.png")), id)?;
        let pose = read_pose(&root.join("pose").join(format!("{name}.txt")), id)?;
        let frame = RgbdFrame { color, depth, pose, intrinsics, frame_id: id };
        frame.validate()?;
        frames.push(frame);
    }
    let scene_id = root.file_name().and_then(|n| n.to_str()).unwrap_or("scene").to_string();
    SceneDataset::new(scene_id, frames)
}

/// Writes a dataset in the layout read by [`load_scene`]. Colour is
/// quantised to 8 bits and depth to whole millimetres.
pub fn write_scene<T: Real>(ds: &SceneDataset<T>, root: impl AsRef<Path>) -> Result<()> {
    ds.validate()?;
    let root = root.as_ref();
    let dirs: [PathBuf; 3] = [root.join("color"), root.join("depth"), root.join("pose")];
    for d in &dirs {
        fs::create_dir_all(d)?;
    }
    let k = &ds.frames[0].intrinsics;
    fs::write(
        root.join("intrinsics.txt"),
        format!("{} {} {} {} {} {}\n", k.fx.as_f64(), k.fy.as_f64(), k.cx.as_f64(), k.cy.as_f64(), k.width, k.height),
    )?;
    for f in &ds.frames {
        let name = format!("{:06}", f.frame_id);
        save_rgb_png(&f.color, dirs[0].join(format!("{name}.png")))?;
        let mm: Vec<u16> = f
            .depth
            .data()
            .iter()
            .map(|&d| (d.as_f64() * 1000.0).round().clamp(0.0, u16::MAX as f64) as u16)
            .collect();
        ImageBuffer::<Luma<u16>, _>::from_raw(f.depth.width() as u32, f.depth.height() as u32, mm)
            .ok_or_else(|| Error::Shape("depth buffer size".into()))?
            .save(dirs[1].join(format!("{name}.png")))?;
        let m = f.pose.to_matrix();
        let text: String = m
            .iter()
            .map(|row| row.iter().map(|v| v.as_f64().to_string()).collect::<Vec<_>>().join(" ") + "\n")
            .collect();
        fs::write(dirs[2].join(format!("{name}.txt")), text)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Vec3;

    fn tiny(n: usize) -> SceneDataset<f64> {
        let k = CameraIntrinsics::new(3.0, 3.0, 1.5, 1.0, 4, 3).unwrap();
        let frames = (0..n)
            .map(|i| RgbdFrame {
                color: Grid::from_fn(4, 3, 3, |x, y, c| ((x + 2 * y + c + i) % 5) as f64 / 4.0),
                depth: Grid::from_fn(4, 3, 1, |x, y, _| if x == 0 && y == 0 { 0.0 } else { 1.5 + 0.001 * (x + y) as f64 }),
                pose: Pose::from_yaw_pitch(Vec3::new(i as f64, 0.5, -1.0), 0.3 * i as f64, 0.1),
                intrinsics: k,
                frame_id: i,
            })
            .collect();
        SceneDataset::new("tiny", frames).unwrap()
    }

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let ds = tiny(3);
        write_scene(&ds, dir.path()).unwrap();
        let back: SceneDataset<f64> = load_scene(dir.path()).unwrap();
        assert_eq!(back.len(), 3);
        for (a, b) in ds.frames.iter().zip(&back.frames) {
            assert_eq!(a.frame_id, b.frame_id);
            assert_eq!(a.intrinsics, b.intrinsics);
            assert!(a.color.max_abs_diff(&b.color) < 0.5 / 255.0 + 1e-12);
            assert!(a.depth.max_abs_diff(&b.depth) < 1e-12);
            assert!(a.pose.rotation.orthonormality_error() < 1e-12);
            assert!((a.pose.position - b.pose.position).norm() < 1e-12);
        }
    }

    #[test]
    fn depth_millimetres() {
        let dir = tempfile::tempdir().unwrap();
        write_scene(&tiny(1), dir.path()).unwrap();
        ImageBuffer::<Luma<u16>, _>::from_raw(4, 3, vec![1500u16; 12])
            .unwrap()
            .save(dir.path().join("depth/000000.png"))
            .unwrap();
        let ds: SceneDataset<f64> = load_scene(dir.path()).unwrap();
        assert_eq!(ds.frames[0].depth.get(2, 1, 0), 1.5);
    }

    #[test]
    fn errors_name_the_frame() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(load_scene::<f64>(dir.path()), Err(Error::Load { frame: None, ref msg }) if msg == "no frames"));
        assert!(load_scene::<f64>(dir.path().join("missing")).is_err());
        write_scene(&tiny(3), dir.path()).unwrap();
        fs::write(dir.path().join("pose/000001.txt"), "1 0 0 0 0 1 0 0 0 0 1 0 0 0 0 nan").unwrap();
        assert!(matches!(load_scene::<f64>(dir.path()), Err(Error::Load { frame: Some(1), .. })));
        fs::remove_dir_all(dir.path().join("pose")).unwrap();
        assert!(matches!(load_scene::<f64>(dir.path()), Err(Error::Load { frame: Some(0), .. })));
    }

    #[test]
    fn rejects_skewed_rotation_and_wrong_size() {
        let dir = tempfile::tempdir().unwrap();
        write_scene(&tiny(2), dir.path()).unwrap();
        fs::write(dir.path().join("pose/000000.txt"), "1 0.01 0 0 0 1 0 0 0 0 1 0 0 0 0 1").unwrap();
        assert!(matches!(load_scene::<f64>(dir.path()), Err(Error::Load { frame: Some(0), .. })));
        write_scene(&tiny(2), dir.path()).unwrap();
        ImageBuffer::<Luma<u16>, _>::from_raw(2, 2, vec![1u16; 4]).unwrap().save(dir.path().join("depth/000001.png")).unwrap();
        assert!(matches!(load_scene::<f64>(dir.path()), Err(Error::Load { frame: Some(1), .. })));
    }
}
