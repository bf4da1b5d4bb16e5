use std::path::PathBuf;

use clap::Args;
use roomweave::completion::DEFAULT_PROMPT_TEMPLATE;
use roomweave::{CompletionConfig, Error, Result};
use serde::{Deserialize, Serialize};

/// Everything a `complete` or `panorama` run depends on. `--print-config`
/// dumps this as JSON; `--config` reads it back.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub scene: Option<PathBuf>,
    pub out: Option<PathBuf>,
    /// `procedural:SEED`, `oracle:FILE` (PLY mesh or panorama PNG) or
    /// `bridge:ADDR`.
    pub denoiser: String,
    /// `identity` or `pool:K`; ignored for bridge denoisers.
    pub codec: String,
    /// `auto`, `harmonic`, `oracle:PLY` or `bridge`.
    pub depth: String,
    pub fraction: f64,
    pub prompt_template: String,
    pub token: String,
    pub completion: CompletionConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            scene: None,
            out: None,
            denoiser: "procedural:0".into(),
            codec: "pool:8".into(),
            depth: "auto".into(),
            fraction: 0.05,
            prompt_template: DEFAULT_PROMPT_TEMPLATE.into(),
            token: "<room>".into(),
            completion: CompletionConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Scene directory (color/, depth/, pose/, intrinsics.txt).
    #[arg(long)]
    pub scene: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON run configuration; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// procedural:SEED | oracle:FILE | bridge:ADDR
    #[arg(long)]
    pub denoiser: Option<String>,
    /// identity | pool:K
    #[arg(long)]
    pub codec: Option<String>,
    /// auto | harmonic | oracle:PLY | bridge
    #[arg(long)]
    pub depth: Option<String>,
    /// Fraction of frames used as input views.
    #[arg(long)]
    pub fraction: Option<f64>,
    /// Seeds both the diffusion noise and the pose sampler.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub completion_iters: Option<usize>,
    #[arg(long)]
    pub candidates: Option<usize>,
    /// Number of perspective views in the panorama fan.
    #[arg(long)]
    pub views: Option<usize>,
    /// Field of view of each fan view, degrees.
    #[arg(long)]
    pub fov: Option<f64>,
    /// Side of each fan view, pixels.
    #[arg(long)]
    pub fan_size: Option<usize>,
    /// Panorama width, pixels.
    #[arg(long)]
    pub band_width: Option<usize>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub refine_steps: Option<usize>,
    /// Refinement window width and stride, latent cells.
    #[arg(long)]
    pub window: Option<usize>,
    #[arg(long)]
    pub window_stride: Option<usize>,
    /// Side of the novel-view inpainting camera, pixels.
    #[arg(long)]
    pub inpaint_size: Option<usize>,
    /// Prompt template containing `{S*}`.
    #[arg(long)]
    pub prompt: Option<String>,
    /// Style token substituted into the prompt.
    #[arg(long)]
    pub token: Option<String>,
    /// Print the effective configuration as JSON and exit.
    #[arg(long)]
    pub print_config: bool,
}

impl RunArgs {
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(p) => serde_json::from_str(&std::fs::read_to_string(p)?)
                .map_err(|e| Error::invalid(format!("{}: {e}", p.display())))?,
            None => RunConfig::default(),
        };
        macro_rules! set {
            ($flag:ident => $($dst:tt)+) => {
                if let Some(v) = &self.$flag {
                    c.$($dst)+ = v.clone().into();
                }
            };
        }
        if let Some(s) = &self.scene {
            c.scene = Some(s.clone());
        }
        if let Some(o) = &self.out {
            c.out = Some(o.clone());
        }
        set!(denoiser => denoiser);
        set!(codec => codec);
        set!(depth => depth);
        set!(fraction => fraction);
        set!(prompt => prompt_template);
        set!(token => token);
        set!(completion_iters => completion.completion_iters);
        set!(candidates => completion.candidates);
        set!(views => completion.diffusion.fan.count);
        set!(fov => completion.diffusion.fan.fov_deg);
        set!(fan_size => completion.diffusion.fan.size);
        set!(band_width => completion.band_width);
        set!(steps => completion.diffusion.steps);
        set!(refine_steps => completion.diffusion.refine_steps);
        set!(window => completion.diffusion.window_size);
        set!(window_stride => completion.diffusion.window_stride);
        set!(inpaint_size => completion.inpaint_size);
        if let Some(s) = self.seed {
            c.completion.seed = s;
            c.completion.diffusion.seed = s;
        }
        if let Ok(addr) = std::env::var("ROOMWEAVE_BRIDGE") {
            if c.denoiser.starts_with("bridge:") && !addr.trim().is_empty() {
                c.denoiser = format!("bridge:{}", addr.trim());
            }
        }
        Ok(c)
    }
}
