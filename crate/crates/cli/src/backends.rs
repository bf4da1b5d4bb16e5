use std::path::Path;
use std::sync::Arc;

use roomweave::bridge::{BridgeClient, BridgeCodec, BridgeDenoiser, BridgeDepth};
use roomweave::camera::ViewSpec;
use roomweave::depth::{DepthPredictor, HarmonicDepth, OracleDepth};
use roomweave::diffusion::{AveragePoolCodec, Denoiser, IdentityCodec, LatentCodec, TargetDenoiser};
use roomweave::io::{import_mesh, load_rgb_png};
use roomweave::{Error, Result, Vec3};

use crate::config::RunConfig;

pub struct Selected {
    pub denoiser: Box<dyn Denoiser<f64>>,
    pub codec: Arc<dyn LatentCodec<f64>>,
    pub depth: Box<dyn DepthPredictor<f64>>,
}

fn split(spec: &str) -> (&str, &str) {
    spec.split_once(':').unwrap_or((spec, ""))
}

pub fn local_codec(spec: &str) -> Result<Arc<dyn LatentCodec<f64>>> {
    match split(spec) {
        ("identity", "") => Ok(Arc::new(IdentityCodec)),
        ("pool", k) => {
            let k = k.parse().map_err(|_| Error::invalid(format!("codec `{spec}`: K must be an integer")))?;
            Ok(Arc::new(AveragePoolCodec::new(k)?))
        }
        _ => Err(Error::invalid(format!("unknown codec `{spec}`"))),
    }
}

fn is_ply(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("ply"))
}

/// Builds the three backends. `center` places an oracle panorama image.
pub fn select(cfg: &RunConfig, center: Vec3) -> Result<Selected> {
    let (kind, arg) = split(&cfg.denoiser);
    let mut bridge = None;
    let (denoiser, codec): (Box<dyn Denoiser<f64>>, Arc<dyn LatentCodec<f64>>) = match kind {
        "procedural" => {
            let seed = arg.parse().map_err(|_| Error::invalid(format!("denoiser `{}`: bad seed", cfg.denoiser)))?;
            let codec = local_codec(&cfg.codec)?;
            (Box::new(TargetDenoiser::procedural(seed, codec.clone())), codec)
        }
        "oracle" => {
            let path = Path::new(arg);
            let codec = local_codec(&cfg.codec)?;
            if is_ply(path) {
                (Box::new(TargetDenoiser::oracle_mesh(import_mesh(path)?, codec.clone())), codec)
            } else {
                let img = load_rgb_png::<f64>(path)?;
                let band = ViewSpec::equirect_band(center, img.width(), cfg.completion.diffusion.fan.band_half_deg)?;
                (Box::new(TargetDenoiser::oracle_panorama(img, band, codec.clone())?), codec)
            }
        }
        "bridge" => {
            let client = Arc::new(BridgeClient::connect(arg)?);
            bridge = Some(client.clone());
            (Box::new(BridgeDenoiser::new(client.clone())), Arc::new(BridgeCodec::new(client)))
        }
        _ => return Err(Error::invalid(format!("unknown denoiser `{}`", cfg.denoiser))),
    };
    let depth: Box<dyn DepthPredictor<f64>> = match split(&cfg.depth) {
        ("auto", "") => match &bridge {
            Some(c) if c.info().depth => Box::new(BridgeDepth::new(c.clone())?),
            _ => Box::new(HarmonicDepth::default()),
        },
        ("harmonic", "") => Box::new(HarmonicDepth::default()),
        ("oracle", p) => Box::new(OracleDepth { mesh: import_mesh(p)?, scale: 1.0 }),
        ("bridge", "") => match &bridge {
            Some(c) => Box::new(BridgeDepth::new(c.clone())?),
            None => return Err(Error::invalid("--depth bridge needs a bridge denoiser")),
        },
        _ => return Err(Error::invalid(format!("unknown depth predictor `{}`", cfg.depth))),
    };
    Ok(Selected { denoiser, codec, depth })
}
