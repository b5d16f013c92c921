//! The `depthtrack` command line.
//!
//! Exit status: 0 success, 2 usage, 3 I/O, 4 malformed file or mesh,
//! 5 configuration or parameter, 6 dimension mismatch, 7 untrackable initial
//! pose, 8 timestamp mismatch, 9 anything else.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::filter::Tracker;
use crate::geometry::{Pose, TriangleMesh};
use crate::process::ProcessMode;
use crate::simulator::{load_scene, preset, simulate, tracked_object, Preset, Scene};
use crate::{Error, Result};

use super::bench::{bench, widen, BenchOptions};
use super::config::RunConfig;
use super::dataset::Dataset;
use super::metrics::{Metrics, DEFAULT_LOSS_THRESHOLD};
use super::record::TrajectoryRecord;
use super::track::{initial_pose_from_truth, track_dataset};

#[derive(Debug, Parser)]
#[command(name = "depthtrack", version, about = "Occlusion-aware 6-DoF object tracking in depth images")]
pub struct Cli {
    /// Worker threads for the particle loop and frame generation
    /// (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic depth sequence with ground truth.
    Simulate(SimulateArgs),
    /// Track an object through a depth sequence.
    Track(TrackArgs),
    /// Compare an estimated trajectory with ground truth.
    Eval(EvalArgs),
    /// Measure filter throughput on a synthetic sequence.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Bundled scenario.
    #[arg(long, value_enum, conflicts_with = "scene", required_unless_present = "scene")]
    pub preset: Option<Preset>,
    /// TOML scene description.
    #[arg(long)]
    pub scene: Option<PathBuf>,
    /// Noise seed; overrides the scene file's.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Dataset file to write.
    #[arg(long, short)]
    pub output: PathBuf,
    /// Also write the ground-truth trajectory as CSV.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Also write the tracked object's mesh as OBJ.
    #[arg(long)]
    pub mesh_output: Option<PathBuf>,
}

/// Overrides applied on top of the configuration file and environment.
#[derive(Debug, Args)]
pub struct FilterOverrides {
    /// TOML run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub particles: Option<usize>,
    #[arg(long, value_enum)]
    pub mode: Option<ProcessMode>,
}

#[derive(Debug, Args)]
pub struct TrackArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    /// Object model as OBJ.
    #[arg(long)]
    pub mesh: PathBuf,
    #[command(flatten)]
    pub filter: FilterOverrides,
    /// Estimated trajectory CSV.
    #[arg(long, short)]
    pub output: PathBuf,
    /// Per-frame diagnostics CSV.
    #[arg(long)]
    pub diagnostics: Option<PathBuf>,
    /// Starting pose `tx,ty,tz,qw,qx,qy,qz`; defaults to the first frame's
    /// ground truth.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub initial_pose: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Estimated trajectory CSV.
    #[arg(long)]
    pub estimate: PathBuf,
    /// Ground truth as trajectory CSV or dataset file.
    #[arg(long)]
    pub truth: PathBuf,
    /// Translation error in meters above which a frame counts as lost.
    #[arg(long, default_value_t = DEFAULT_LOSS_THRESHOLD)]
    pub threshold: f64,
    /// Per-frame error CSV.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Object model as OBJ; defaults to the bundled L-shaped object.
    #[arg(long)]
    pub mesh: Option<PathBuf>,
    #[command(flatten)]
    pub filter: FilterOverrides,
    /// Timed steps.
    #[arg(long, default_value_t = 300)]
    pub frames: usize,
    /// Discarded steps before timing.
    #[arg(long, default_value_t = 30)]
    pub warmup: usize,
    /// Also measure N = 1 and a doubled image width.
    #[arg(long)]
    pub scaling: bool,
    /// Write the report here as well as to stdout.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

impl FilterOverrides {
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = RunConfig::load(self.config.as_deref())?;
        if let Some(s) = self.seed {
            cfg.filter.seed = s;
        }
        if let Some(n) = self.particles {
            cfg.filter.particles = n;
        }
        if let Some(m) = self.mode {
            cfg.process.mode = m;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Runs a parsed command, writing human-readable output to `out`.
pub fn run(cli: Cli, out: &mut (dyn Write + Send)) -> Result<()> {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Error::InvalidParameter("--threads must be ≥ 1".into()));
        }
        pool = pool.num_threads(n);
    }
    let pool = pool
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {}", e)))?;
    pool.install(|| match cli.command {
        Command::Simulate(a) => cmd_simulate(&a, out),
        Command::Track(a) => cmd_track(&a, out),
        Command::Eval(a) => cmd_eval(&a, out),
        Command::Bench(a) => cmd_bench(&a, out),
    })
}

fn report(out: &mut dyn Write, text: std::fmt::Arguments) -> Result<()> {
    out.write_fmt(text)
        .and_then(|_| out.write_all(b"\n"))
        .map_err(|e| Error::io(Path::new("<stdout>"), e))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

pub fn cmd_simulate(args: &SimulateArgs, out: &mut dyn Write) -> Result<()> {
    let scene: Scene = match (&args.preset, &args.scene) {
        (Some(p), _) => preset(*p, args.seed.unwrap_or(0)),
        (None, Some(path)) => load_scene(path, args.seed)?,
        (None, None) => return Err(Error::Config("either a preset or a scene file is required".into())),
    };
    let dataset = simulate(&scene)?;
    dataset.save(&args.output)?;
    if let Some(path) = &args.truth {
        let mut rec = TrajectoryRecord::default();
        for f in &dataset.frames {
            rec.push(f.image.timestamp, f.pose.expect("simulated frames carry poses"));
        }
        rec.save(path)?;
    }
    if let Some(path) = &args.mesh_output {
        scene.tracked.mesh.save_obj(path)?;
    }
    let s = scene.summary()?;
    report(
        out,
        format_args!(
            "frames {}  duration {:.3} s  occlusion fraction {:.4}  controls {}",
            s.frames,
            s.duration,
            s.occlusion_fraction,
            if dataset.has_controls() { "yes" } else { "no" }
        ),
    )
}

pub fn cmd_track(args: &TrackArgs, out: &mut dyn Write) -> Result<()> {
    let cfg = args.filter.resolve()?;
    let explicit = match &args.initial_pose {
        Some(v) => Some(
            Pose::from_array(v.as_slice().try_into().map_err(|_| Error::Config("--initial-pose takes 7 values".into()))?)
                .map_err(|e| Error::Config(format!("--initial-pose: {}", e)))?,
        ),
        None => None,
    };
    let mesh = TriangleMesh::load_obj(&args.mesh)?;
    let dataset = Dataset::load(&args.dataset)?;
    let initial = match explicit {
        Some(p) => p,
        None => initial_pose_from_truth(&dataset)?,
    };
    let tracker = Tracker::new(mesh, cfg.camera, cfg.observation, cfg.occlusion, cfg.process, cfg.filter)?;
    let run = track_dataset(&tracker, &dataset, initial)?;
    run.estimates.save(&args.output)?;
    if let Some(path) = &args.diagnostics {
        run.write_diagnostics(create(path)?)?;
    }
    let lost = run.diagnostics.iter().filter(|d| d.tracking_lost).count();
    report(
        out,
        format_args!(
            "tracked {} frames with {} particles ({} mode{}), {} without model evidence",
            run.estimates.len(),
            cfg.filter.particles,
            match cfg.process.mode {
                ProcessMode::RandomWalk => "random-walk",
                ProcessMode::Controlled => "controlled",
            },
            if cfg.process.mode == ProcessMode::Controlled && !dataset.has_controls() {
                ", no control channel"
            } else {
                ""
            },
            lost
        ),
    )
}

fn load_truth(path: &Path) -> Result<TrajectoryRecord> {
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("dtrk")) {
        let ds = Dataset::load(path)?;
        let mut rec = TrajectoryRecord::default();
        for f in &ds.frames {
            let pose = f
                .pose
                .ok_or_else(|| Error::Format(format!("{} has no ground-truth poses", path.display())))?;
            rec.push(f.image.timestamp, pose);
        }
        Ok(rec)
    } else {
        TrajectoryRecord::load(path)
    }
}

pub fn cmd_eval(args: &EvalArgs, out: &mut dyn Write) -> Result<()> {
    if !(args.threshold.is_finite() && args.threshold > 0.0) {
        return Err(Error::InvalidParameter("--threshold must be > 0".into()));
    }
    let estimate = TrajectoryRecord::load(&args.estimate)?;
    let truth = load_truth(&args.truth)?;
    let metrics = Metrics::compute(&estimate, &truth, args.threshold)?;
    if let Some(path) = &args.output {
        metrics.write_csv(create(path)?)?;
    }
    report(out, format_args!("{}", metrics))
}

pub fn cmd_bench(args: &BenchArgs, out: &mut dyn Write) -> Result<()> {
    let cfg = args.filter.resolve()?;
    let mesh = match &args.mesh {
        Some(p) => TriangleMesh::load_obj(p)?,
        None => tracked_object(),
    };
    let source = |camera| -> Result<Dataset> {
        let mut scene = preset(Preset::A, cfg.filter.seed);
        scene.camera = camera;
        scene.observation = cfg.observation;
        scene.tracked.mesh = mesh.clone();
        simulate(&scene)
    };
    let base = source(cfg.camera)?;
    let opts = BenchOptions {
        particles: cfg.filter.particles,
        warmup: args.warmup,
        frames: args.frames,
        parallel: false,
    };
    let mut lines = Vec::new();
    lines.push(bench(&cfg, &mesh, &base, &opts)?.to_string());
    lines.push(bench(&cfg, &mesh, &base, &BenchOptions { parallel: true, ..opts })?.to_string());
    if args.scaling {
        lines.push(bench(&cfg, &mesh, &base, &BenchOptions { particles: 1, ..opts })?.to_string());
        let wide = source(widen(&cfg.camera, 2))?;
        lines.push(bench(&cfg, &mesh, &wide, &opts)?.to_string());
    }
    let text = lines.join("\n");
    if let Some(path) = &args.output {
        let mut f = create(path)?;
        writeln!(f, "{}", text).map_err(|e| Error::io(path, e))?;
    }
    report(out, format_args!("{}", text))
}
