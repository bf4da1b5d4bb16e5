//! Room-scale scene completion from sparse posed RGBD frames.
//!
//! The engine turns a handful of RGBD frames into a complete, vertex-coloured
//! triangle mesh:
//!
//! 1. back-project the input frames into a partial mesh;
//! 2. render an equirectangular RGBD panorama at the room centre;
//! 3. inpaint the panorama colour with a multi-view diffusion scheduler that
//!    keeps a fan of perspective views consistent, then fill its depth with a
//!    scale-aligned, cross-view fused depth predictor;
//! 4. keep the candidate panorama that best agrees with the input depth,
//!    fuse it, and patch the remaining holes from sampled novel views.
//!
//! Neural components sit behind [`diffusion::Denoiser`],
//! [`diffusion::LatentCodec`] and [`depth::DepthPredictor`]. Oracle and
//! procedural implementations ship with the crate; [`bridge`] talks to an
//! out-of-process backend.
//!
//! Everything numerical is generic over [`Real`] (`f32` / `f64`); the
//! aliases below fix the scalar to `f64`.

pub mod bridge;
pub mod camera;
pub mod completion;
pub mod depth;
pub mod diffusion;
pub mod error;
pub mod grid;
pub mod io;
pub mod linalg;
pub mod mesh;
pub mod metrics;
pub mod numeric;
pub mod panorama;
pub mod scene;
pub mod synthetic;
pub mod warp;

pub use error::{Error, Result};
pub use numeric::Real;

pub type Vec3 = linalg::Vec3<f64>;
pub type Pose = linalg::Pose<f64>;
pub type CameraIntrinsics = camera::CameraIntrinsics<f64>;
pub type ViewSpec = camera::ViewSpec<f64>;
pub type DistanceGrid = camera::DistanceGrid<f64>;
pub type Grid = grid::Grid<f64>;
pub type Image = grid::Image<f64>;
pub type TriangleMesh = mesh::TriangleMesh<f64>;
pub type RenderOutput = mesh::RenderOutput<f64>;
pub type RgbdFrame = scene::RgbdFrame<f64>;
pub type SceneDataset = scene::SceneDataset<f64>;
pub type PanoramaRgbd = panorama::PanoramaRgbd<f64>;
pub type LatentGrid = diffusion::LatentGrid<f64>;
pub type AlphaSchedule = diffusion::AlphaSchedule<f64>;
pub type EDiffusionConfig = diffusion::EDiffusionConfig<f64>;
pub type DepthFusionConfig = depth::DepthFusionConfig<f64>;
pub type CompletionConfig = completion::CompletionConfig<f64>;
pub use metrics::EvalReport;

pub use grid::Mask;
