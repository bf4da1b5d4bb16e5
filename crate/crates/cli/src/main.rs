//! `roomweave` command-line front end.

mod backends;
mod config;

use std::fs;
use std::io::Write;
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use roomweave::bridge::{serve_stream, serve_tcp, LocalBackend};
use roomweave::completion::{
    build_prompt, complete_scene, generate_candidate, mesh_from_frames, render_panorama, room_center, Backends,
    StageObserver,
};
use roomweave::depth::OracleDepth;
use roomweave::diffusion::{Denoiser, TargetDenoiser};
use roomweave::io::{export_mesh, import_mesh, load_scene, save_mask_png, save_rgb_png, write_pfm, write_scene};
use roomweave::mesh::{sample_surface_points, TriangulationParams};
use roomweave::metrics::{evaluate, EvalConfig};
use roomweave::scene::split_views;
use roomweave::synthetic::{synthetic_dataset, BoxRoom, TrajectorySpec};
use roomweave::{Error, PanoramaRgbd, Result, SceneDataset, TriangleMesh};
use serde::Serialize;

use config::{RunArgs, RunConfig};

#[derive(Parser)]
#[command(name = "roomweave", version, about = "Room-scale scene completion from sparse RGBD frames")]
struct Cli {
    /// Cap on worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Full pipeline: input mesh, panorama candidates, selection, novel-view completion.
    Complete(RunArgs),
    /// Render and inpaint the room-centre panorama only.
    Panorama(RunArgs),
    /// Score a mesh against held-out frames.
    Eval(EvalArgs),
    /// Fuse the input frames into a mesh without completion.
    Fuse(FuseArgs),
    /// Write a synthetic box-room scene with its ground-truth mesh.
    Synth(SynthArgs),
    /// Serve in-process oracle components over the bridge protocol.
    EchoBackend(EchoArgs),
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    mesh: PathBuf,
    #[arg(long)]
    scene: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    fraction: f64,
    /// Gaussian kernel size applied to renders before comparison.
    #[arg(long)]
    blur: Option<usize>,
    /// Frames to score against.
    #[arg(long, value_enum, default_value_t = FrameSet::Eval)]
    on: FrameSet,
    /// Ground-truth mesh for the one-directional Chamfer distance.
    #[arg(long)]
    gt_mesh: Option<PathBuf>,
    /// Points sampled on the ground-truth mesh.
    #[arg(long, default_value_t = 20_000)]
    gt_samples: usize,
    /// Points sampled on the evaluated mesh.
    #[arg(long, default_value_t = 100_000)]
    chamfer_samples: usize,
    #[arg(long, default_value_t = 1)]
    render_scale: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Directory for report.txt and report.json.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FrameSet {
    Eval,
    Input,
    All,
}

#[derive(Args)]
struct FuseArgs {
    #[arg(long)]
    scene: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    fraction: f64,
    /// Output PLY.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 100)]
    frames: usize,
    #[arg(long, default_value_t = 240)]
    width: usize,
    #[arg(long, default_value_t = 180)]
    height: usize,
    /// Draw random room extents from this seed instead of the default room.
    #[arg(long)]
    random_room: Option<u64>,
}

#[derive(Args)]
struct EchoArgs {
    /// Ground-truth PLY for the oracle denoiser (and depth).
    #[arg(long, conflicts_with = "procedural")]
    target: Option<PathBuf>,
    /// Serve the procedural denoiser with this seed instead.
    #[arg(long)]
    procedural: Option<u64>,
    /// identity | pool:K
    #[arg(long, default_value = "identity")]
    codec: String,
    /// TCP address to listen on; prints the bound address.
    #[arg(long, default_value = "127.0.0.1:0", conflicts_with = "stdio")]
    listen: String,
    /// Serve a single session over stdin/stdout.
    #[arg(long)]
    stdio: bool,
}

/// Machine-readable error class printed before the message.
fn code(e: &Error) -> &'static str {
    match e.root() {
        Error::Load { .. } => "E_SCENE",
        Error::Mesh(_) => "E_MESH",
        Error::Coverage(_) => "E_COVERAGE",
        Error::Bridge { .. } => "E_BRIDGE",
        Error::Io(_) | Error::Image(_) => "E_IO",
        Error::InvalidArgument(_) | Error::Json(_) => "E_CONFIG",
        Error::Denoiser(_) | Error::Codec(_) | Error::Predictor { .. } => "E_BACKEND",
        _ => "E_PIPELINE",
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            eprintln!("E_CONFIG: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match &cli.command {
        Command::Complete(a) => cmd_complete(a),
        Command::Panorama(a) => cmd_panorama(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Fuse(a) => cmd_fuse(a),
        Command::Synth(a) => cmd_synth(a),
        Command::EchoBackend(a) => cmd_echo(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            eprintln!("{}: {msg}", code(&e));
            ExitCode::from(2)
        }
    }
}

fn print_config(cfg: &RunConfig) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(cfg)?);
    Ok(())
}

fn required<'a>(p: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path> {
    p.as_deref().ok_or_else(|| Error::invalid(format!("--{flag} is required")))
}

fn load_input(cfg: &RunConfig) -> Result<SceneDataset> {
    let ds = load_scene(required(&cfg.scene, "scene")?)?;
    Ok(split_views(&ds, cfg.fraction)?.0)
}

fn write_panorama(out: &Path, prefix: &str, p: &PanoramaRgbd) -> Result<()> {
    save_rgb_png(&p.color, out.join(format!("{prefix}.png")))?;
    write_pfm(&p.distance.values, out.join(format!("{prefix}_dist.pfm")))?;
    save_mask_png(&p.hole_mask, out.join(format!("{prefix}_holes.png")))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    fs::write(path, s)?;
    Ok(())
}

struct Checkpoints {
    dir: PathBuf,
    stages: Vec<String>,
}

impl StageObserver<f64> for Checkpoints {
    fn stage(&mut self, name: &str, mesh: &TriangleMesh) -> Result<()> {
        export_mesh(mesh, self.dir.join(format!("{name}.ply")))?;
        eprintln!("stage {name}: {} vertices, {} faces", mesh.num_vertices(), mesh.num_faces());
        self.stages.push(name.to_string());
        Ok(())
    }
}

#[derive(Serialize)]
struct CompletionReport<'a> {
    scene_id: &'a str,
    input_frames: Vec<usize>,
    selected_candidate: usize,
    candidate_depth_mse: &'a [f64],
    completion_poses: &'a [roomweave::Pose],
    stages: &'a [String],
    final_vertices: usize,
    final_faces: usize,
}

fn cmd_complete(args: &RunArgs) -> Result<()> {
    let cfg = args.resolve()?;
    if args.print_config {
        return print_config(&cfg);
    }
    cfg.completion.validate()?;
    let prompt = build_prompt(&cfg.prompt_template, &cfg.token)?;
    let out = required(&cfg.out, "out")?.to_path_buf();
    let input = load_input(&cfg)?;
    let sel = backends::select(&cfg, room_center(&input.frames)?)?;
    fs::create_dir_all(out.join("stages"))?;
    write_json(&out.join("config.json"), &cfg)?;
    let b = Backends { denoiser: sel.denoiser.as_ref(), codec: sel.codec.as_ref(), predictor: sel.depth.as_ref() };
    let mut obs = Checkpoints { dir: out.join("stages"), stages: Vec::new() };
    let res = complete_scene(&input, &b, &cfg.completion, &prompt, &mut obs)?;
    export_mesh(&res.mesh, out.join("final.ply"))?;
    write_panorama(&out, "panorama", &res.panorama)?;
    write_panorama(&out, "rendered", &res.rendered)?;
    let report = CompletionReport {
        scene_id: &input.scene_id,
        input_frames: input.frames.iter().map(|f| f.frame_id).collect(),
        selected_candidate: res.selected,
        candidate_depth_mse: &res.candidate_mse,
        completion_poses: &res.poses,
        stages: &obs.stages,
        final_vertices: res.mesh.num_vertices(),
        final_faces: res.mesh.num_faces(),
    };
    write_json(&out.join("report.json"), &report)?;
    println!("{}", out.join("final.ply").display());
    Ok(())
}

fn cmd_panorama(args: &RunArgs) -> Result<()> {
    let cfg = args.resolve()?;
    if args.print_config {
        return print_config(&cfg);
    }
    cfg.completion.validate()?;
    let prompt = build_prompt(&cfg.prompt_template, &cfg.token)?;
    let out = required(&cfg.out, "out")?.to_path_buf();
    let input = load_input(&cfg)?;
    let center = room_center(&input.frames)?;
    let sel = backends::select(&cfg, center)?;
    let c = &cfg.completion;
    let base = mesh_from_frames(&input.frames, &c.triangulation)?;
    let rendered = render_panorama(&base, center, c.band_width, c.diffusion.fan.band_half_deg)?;
    let b = Backends { denoiser: sel.denoiser.as_ref(), codec: sel.codec.as_ref(), predictor: sel.depth.as_ref() };
    let pano = generate_candidate(&base, &rendered, &b, c, c.diffusion.seed, &prompt)?;
    fs::create_dir_all(&out)?;
    write_panorama(&out, "rendered", &rendered)?;
    write_panorama(&out, "panorama", &pano)?;
    println!("{}x{}", pano.width(), pano.color.height());
    Ok(())
}

fn cmd_eval(a: &EvalArgs) -> Result<()> {
    let mesh: TriangleMesh = import_mesh(&a.mesh)?;
    let ds: SceneDataset = load_scene(&a.scene)?;
    let (input, held_out) = split_views(&ds, a.fraction)?;
    let frames = match a.on {
        FrameSet::Eval => held_out.frames,
        FrameSet::Input => input.frames,
        FrameSet::All => ds.frames,
    };
    if frames.is_empty() {
        return Err(Error::invalid("no frames to evaluate on; use --on all or a smaller --fraction"));
    }
    let gt = match &a.gt_mesh {
        Some(p) => Some(sample_surface_points(&import_mesh::<f64>(p)?, a.gt_samples, a.seed)?),
        None => None,
    };
    let cfg = EvalConfig {
        blur_kernel: a.blur,
        render_scale: a.render_scale,
        chamfer_samples: a.chamfer_samples,
        seed: a.seed,
        ..EvalConfig::default()
    };
    let report = evaluate(&mesh, &frames, gt.as_deref(), &cfg)?;
    let text = report.to_text();
    for line in text.lines().take(4) {
        println!("{line}");
    }
    if let Some(out) = &a.out {
        fs::create_dir_all(out)?;
        fs::write(out.join("report.txt"), &text)?;
        fs::write(out.join("report.json"), report.to_json()? + "\n")?;
    }
    Ok(())
}

fn cmd_fuse(a: &FuseArgs) -> Result<()> {
    let ds: SceneDataset = load_scene(&a.scene)?;
    let (input, _) = split_views(&ds, a.fraction)?;
    let mesh = mesh_from_frames(&input.frames, &TriangulationParams::default())?;
    export_mesh(&mesh, &a.out)?;
    println!("{} faces", mesh.num_faces());
    Ok(())
}

fn cmd_synth(a: &SynthArgs) -> Result<()> {
    let room: BoxRoom<f64> = match a.random_room {
        Some(seed) => BoxRoom::random(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed)),
        None => BoxRoom::default(),
    };
    let spec = TrajectorySpec { frames: a.frames, width: a.width, height: a.height, ..TrajectorySpec::default() };
    let ds = synthetic_dataset(&room, &spec)?;
    write_scene(&ds, &a.out)?;
    export_mesh(&room.mesh()?, a.out.join("gt_mesh.ply"))?;
    println!("{}", a.out.display());
    Ok(())
}

fn cmd_echo(a: &EchoArgs) -> Result<()> {
    let codec = backends::local_codec(&a.codec)?;
    let mut depth = None;
    let denoiser: Arc<dyn Denoiser<f64>> = match (&a.target, a.procedural) {
        (Some(p), _) => {
            let mesh: TriangleMesh = import_mesh(p)?;
            depth = Some(Arc::new(OracleDepth { mesh: mesh.clone(), scale: 1.0 }) as _);
            Arc::new(TargetDenoiser::oracle_mesh(mesh, codec.clone()))
        }
        (None, Some(seed)) => Arc::new(TargetDenoiser::procedural(seed, codec.clone())),
        (None, None) => return Err(Error::invalid("echo-backend needs --target or --procedural")),
    };
    let mut backend = LocalBackend::new(denoiser, codec);
    backend.depth = depth;
    if a.stdio {
        return serve_stream(std::io::stdin().lock(), std::io::stdout().lock(), &backend);
    }
    let listener = TcpListener::bind(&a.listen)?;
    println!("listening on {}", listener.local_addr()?);
    std::io::stdout().flush()?;
    serve_tcp(listener, Arc::new(backend))
}
