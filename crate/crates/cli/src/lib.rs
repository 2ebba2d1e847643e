//! Command-line surface for flowpool: argument parsing, configuration
//! resolution and the subcommands. `main.rs` only maps results to exit codes.

pub mod config;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use flowpool::dynflow::{dynamic_optical_flow, flow_stack, PipelineConfig, PoolMethod};
use flowpool::eval::{
    benchmark, compute_metrics, predict, split, train, FcClassifier, LabeledExample, Metrics,
    TimingReport,
};
use flowpool::io;
use flowpool::rankpool::{FeatureMode, RankPoolParams};
use flowpool::synth::{generate_dataset, Actor, ClipKind, ClipSpec, LightingRamp};
use flowpool::tvl1::FlowParams;
use flowpool::viz;
use flowpool::GrayImage;

pub use config::ConfigFile;

pub const DEFAULT_OUT: &str = "flowpool-out";
pub const MANIFEST: &str = "manifest.csv";
pub const MODEL_FILE: &str = "model.fpm";
pub const METRICS_FILE: &str = "metrics.csv";
pub const PREDICTIONS_FILE: &str = "predictions.csv";
pub const TIMING_FILE: &str = "timing.csv";
pub const INPUTS_FILE: &str = "inputs.csv";
pub const SIDECAR_FILE: &str = "dynamic.raw";
pub const METRICS_HEADER: &str = "tp,fp,tn,fn,sensitivity,specificity,accuracy";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 1,
            CliError::Io(_) => 2,
        }
    }
}

impl From<flowpool::Error> for CliError {
    fn from(e: flowpool::Error) -> Self {
        match e {
            flowpool::Error::Io { .. } => CliError::Io(e.to_string()),
            other => CliError::Input(other.to_string()),
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(
    name = "flowpool",
    version,
    about = "Dynamic optical flow images from frame sequences"
)]
pub struct Cli {
    /// Seed for synthetic data and the train/test split.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// key = value file; flags override its entries.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// TV-L1 flow between consecutive frames, one .flo file per pair.
    Flow {
        /// Directory of frames.
        input: PathBuf,
        #[command(flatten)]
        flow: FlowArgs,
    },
    /// Enhanced dynamic optical flow image of a frame directory.
    Dynimage {
        input: PathBuf,
        #[command(flatten)]
        flow: FlowArgs,
        #[command(flatten)]
        pool: PoolArgs,
    },
    /// Adds a brightness ramp to a frame directory.
    Perturb {
        input: PathBuf,
        #[command(flatten)]
        ramp: RampArgs,
    },
    /// Writes a labeled synthetic dataset and its manifest.
    Gen {
        #[command(flatten)]
        clip: ClipArgs,
        #[command(flatten)]
        ramp: RampArgs,
        /// Apply the lighting ramp to every clip.
        #[arg(long)]
        lighting: Option<bool>,
    },
    /// Trains the classifier on the training part of a dataset.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[command(flatten)]
        flow: FlowArgs,
        #[command(flatten)]
        pool: PoolArgs,
        #[command(flatten)]
        fit: FitArgs,
    },
    /// Scores a trained model on the test part of a dataset.
    Eval {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        flow: FlowArgs,
        #[command(flatten)]
        pool: PoolArgs,
        #[command(flatten)]
        fit: FitArgs,
    },
    /// Per-stage timings of the full pipeline over a dataset.
    Bench {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        model: PathBuf,
        /// Only time the first N clips of the manifest.
        #[arg(long)]
        clips: Option<usize>,
        #[command(flatten)]
        flow: FlowArgs,
        #[command(flatten)]
        pool: PoolArgs,
    },
    /// Colour-codes a .flo file as a PPM image.
    Viz { flow_file: PathBuf },
}

#[derive(Debug, Args, Default)]
pub struct FlowArgs {
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub scales: Option<usize>,
    #[arg(long)]
    pub warps: Option<usize>,
    #[arg(long)]
    pub outer_iters: Option<usize>,
    #[arg(long)]
    pub inner_iters: Option<usize>,
    #[arg(long)]
    pub zoom: Option<f64>,
    #[arg(long)]
    pub median_radius: Option<usize>,
    #[arg(long)]
    pub remove_mean: Option<bool>,
}

#[derive(Debug, Args, Default)]
pub struct PoolArgs {
    /// exact | approx
    #[arg(long)]
    pub method: Option<String>,
    /// raw | time-averaged
    #[arg(long)]
    pub feature_mode: Option<String>,
    #[arg(long)]
    pub flow_threshold: Option<f64>,
    #[arg(long)]
    pub rank_lambda: Option<f64>,
    #[arg(long)]
    pub rank_step: Option<f64>,
    #[arg(long)]
    pub rank_epochs: Option<usize>,
    #[arg(long)]
    pub rank_tol: Option<f64>,
}

#[derive(Debug, Args, Default)]
pub struct RampArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub ramp_len: Option<usize>,
    #[arg(long)]
    pub ramp_start: Option<usize>,
}

#[derive(Debug, Args, Default)]
pub struct ClipArgs {
    #[arg(long)]
    pub fall: Option<usize>,
    #[arg(long)]
    pub adl: Option<usize>,
    #[arg(long)]
    pub width: Option<usize>,
    #[arg(long)]
    pub height: Option<usize>,
    #[arg(long)]
    pub frames: Option<usize>,
    #[arg(long)]
    pub noise_sigma: Option<f64>,
    #[arg(long)]
    pub actor_width: Option<usize>,
    #[arg(long)]
    pub actor_height: Option<usize>,
}

#[derive(Debug, Args, Default)]
pub struct FitArgs {
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub rate: Option<f64>,
    #[arg(long)]
    pub train_fraction: Option<f64>,
    /// Probability at or above which a clip counts as a fall.
    #[arg(long)]
    pub threshold: Option<f64>,
}

impl FlowArgs {
    pub fn resolve(&self, cfg: &ConfigFile) -> CliResult<FlowParams> {
        let d = FlowParams::default();
        let p = FlowParams {
            lambda: cfg.pick("lambda", self.lambda, d.lambda)?,
            theta: cfg.pick("theta", self.theta, d.theta)?,
            tau: cfg.pick("tau", self.tau, d.tau)?,
            epsilon: cfg.pick("epsilon", self.epsilon, d.epsilon)?,
            n_scales: cfg.pick("scales", self.scales, d.n_scales)?,
            n_warps: cfg.pick("warps", self.warps, d.n_warps)?,
            max_outer: cfg.pick("outer-iters", self.outer_iters, d.max_outer)?,
            max_inner: cfg.pick("inner-iters", self.inner_iters, d.max_inner)?,
            zoom: cfg.pick("zoom", self.zoom, d.zoom)?,
            median_radius: cfg.pick("median-radius", self.median_radius, d.median_radius)?,
            remove_mean: cfg.pick("remove-mean", self.remove_mean, d.remove_mean)?,
        };
        p.validate()?;
        Ok(p)
    }
}

impl PoolArgs {
    pub fn resolve(&self, cfg: &ConfigFile, flow: FlowParams) -> CliResult<PipelineConfig> {
        let d = PipelineConfig::default();
        let rd = RankPoolParams::default();
        let method = match cfg.lookup("method", self.method.clone())? {
            Some(s) => s.parse::<PoolMethod>()?,
            None => d.method,
        };
        let feature_mode = match cfg.lookup("feature-mode", self.feature_mode.clone())? {
            Some(s) => s.parse::<FeatureMode>()?,
            None => rd.feature_mode,
        };
        let p = PipelineConfig {
            flow,
            pool: RankPoolParams {
                lambda: cfg.pick("rank-lambda", self.rank_lambda, rd.lambda)?,
                step: cfg.pick("rank-step", self.rank_step, rd.step)?,
                max_epochs: cfg.pick("rank-epochs", self.rank_epochs, rd.max_epochs)?,
                tol: cfg.pick("rank-tol", self.rank_tol, rd.tol)?,
                feature_mode,
            },
            flow_threshold: cfg.pick("flow-threshold", self.flow_threshold, d.flow_threshold)?,
            method,
        };
        p.validate()?;
        Ok(p)
    }
}

impl RampArgs {
    pub fn resolve(&self, cfg: &ConfigFile) -> CliResult<LightingRamp> {
        let d = LightingRamp::default();
        let r = LightingRamp {
            delta: cfg.pick("delta", self.delta, d.delta)?,
            ramp_len: cfg.pick("ramp-len", self.ramp_len, d.ramp_len)?,
            start: cfg.pick("ramp-start", self.ramp_start, d.start)?,
        };
        r.validate()?;
        Ok(r)
    }
}

/// Resolved classifier settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitSettings {
    pub epochs: usize,
    pub rate: f64,
    pub train_fraction: f64,
    pub threshold: f64,
}

impl Default for FitSettings {
    fn default() -> Self {
        Self {
            epochs: 500,
            rate: 1.0,
            train_fraction: 0.7,
            threshold: 0.5,
        }
    }
}

impl FitArgs {
    pub fn resolve(&self, cfg: &ConfigFile) -> CliResult<FitSettings> {
        let d = FitSettings::default();
        let s = FitSettings {
            epochs: cfg.pick("epochs", self.epochs, d.epochs)?,
            rate: cfg.pick("rate", self.rate, d.rate)?,
            train_fraction: cfg.pick("train-fraction", self.train_fraction, d.train_fraction)?,
            threshold: cfg.pick("threshold", self.threshold, d.threshold)?,
        };
        if !(s.rate.is_finite() && s.rate > 0.0) {
            return Err(CliError::Input(format!(
                "rate must be positive, got {}",
                s.rate
            )));
        }
        if !(s.train_fraction > 0.0 && s.train_fraction < 1.0) {
            return Err(CliError::Input(format!(
                "train-fraction must lie in (0, 1), got {}",
                s.train_fraction
            )));
        }
        if !(0.0..=1.0).contains(&s.threshold) {
            return Err(CliError::Input(format!(
                "threshold must lie in [0, 1], got {}",
                s.threshold
            )));
        }
        Ok(s)
    }
}

/// Synthetic dataset request.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenSettings {
    pub n_fall: usize,
    pub n_adl: usize,
    pub spec: ClipSpec,
    pub ramp: Option<LightingRamp>,
}

impl ClipArgs {
    pub fn resolve(
        &self,
        cfg: &ConfigFile,
        ramp: LightingRamp,
        lighting: bool,
    ) -> CliResult<GenSettings> {
        let d = ClipSpec::default();
        let spec = ClipSpec {
            width: cfg.pick("width", self.width, d.width)?,
            height: cfg.pick("height", self.height, d.height)?,
            frames: cfg.pick("frames", self.frames, d.frames)?,
            noise_sigma: cfg.pick("noise-sigma", self.noise_sigma, d.noise_sigma)?,
            actor: Actor {
                width: cfg.pick("actor-width", self.actor_width, d.actor.width)?,
                height: cfg.pick("actor-height", self.actor_height, d.actor.height)?,
                ..d.actor
            },
            ..d
        };
        spec.validate()?;
        let s = GenSettings {
            n_fall: cfg.pick("fall", self.fall, 30)?,
            n_adl: cfg.pick("adl", self.adl, 30)?,
            spec,
            ramp: lighting.then_some(ramp),
        };
        if s.n_fall + s.n_adl == 0 {
            return Err(CliError::Input(
                "dataset must contain at least one clip".into(),
            ));
        }
        Ok(s)
    }
}

/// One row of a dataset manifest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub clip: String,
    pub kind: ClipKind,
    pub label: u8,
    pub frames: usize,
}

pub fn write_manifest(path: &Path, entries: &[ManifestEntry]) -> CliResult<()> {
    let mut text = String::from("clip,kind,label,frames\n");
    for e in entries {
        let _ = writeln!(
            text,
            "{},{},{},{}",
            e.clip,
            e.kind.name(),
            e.label,
            e.frames
        );
    }
    fs::write(path, text).map_err(|e| io_err(path, e))
}

pub fn read_manifest(dir: &Path) -> CliResult<Vec<ManifestEntry>> {
    let path = dir.join(MANIFEST);
    let text = fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
    let bad =
        |n: usize, why: &str| CliError::Input(format!("{} line {}: {why}", path.display(), n + 1));
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, "clip,kind,label,frames")) => {}
        _ => return Err(bad(0, "unexpected header")),
    }
    let mut entries = Vec::new();
    for (n, line) in lines.filter(|(_, l)| !l.trim().is_empty()) {
        let fields: Vec<&str> = line.split(',').collect();
        let [clip, kind, label, frames] = fields[..] else {
            return Err(bad(n, "expected 4 fields"));
        };
        if clip.is_empty() || clip.contains(['/', '\\']) || clip == ".." {
            return Err(bad(n, "bad clip name"));
        }
        let kind: ClipKind = kind.parse().map_err(|_| bad(n, "unknown kind"))?;
        let label: u8 = label.parse().map_err(|_| bad(n, "bad label"))?;
        if label != kind.label() {
            return Err(bad(n, "label does not match kind"));
        }
        entries.push(ManifestEntry {
            clip: clip.to_string(),
            kind,
            label,
            frames: frames.parse().map_err(|_| bad(n, "bad frame count"))?,
        });
    }
    if entries.is_empty() {
        return Err(CliError::Input(format!(
            "{} lists no clips",
            path.display()
        )));
    }
    Ok(entries)
}

/// CSV row matching [`METRICS_HEADER`]; absent ratios are left empty.
pub fn metrics_row(m: &Metrics) -> String {
    let ratio = |r: Option<f64>| r.map(|v| v.to_string()).unwrap_or_default();
    format!(
        "{},{},{},{},{},{},{}",
        m.tp,
        m.fp,
        m.tn,
        m.fn_,
        ratio(m.sensitivity),
        ratio(m.specificity),
        m.accuracy
    )
}

pub fn timing_csv(r: &TimingReport) -> String {
    let mut s = String::from("stage,total_seconds,mean_seconds_per_clip\n");
    for (name, t) in [
        ("flow", r.flow),
        ("pooling", r.pooling),
        ("classification", r.classification),
    ] {
        let _ = writeln!(s, "{name},{},{}", t.total, t.mean);
    }
    let _ = writeln!(s, "total,{},{}", r.total, r.total / r.clips as f64);
    s
}

pub fn inputs_csv(r: &TimingReport) -> String {
    format!(
        "clips,dynamic_inputs,stack_inputs,ratio\n{},{},{},{}\n",
        r.clips,
        r.dynamic_inputs,
        r.stack_inputs,
        r.input_ratio()
    )
}

/// Resolved global options.
struct Context {
    cfg: ConfigFile,
    seed: u64,
    out: PathBuf,
}

impl Context {
    /// Creates the output directory; call only once validation has passed.
    fn out_dir(&self) -> CliResult<&Path> {
        fs::create_dir_all(&self.out).map_err(|e| io_err(&self.out, e))?;
        Ok(&self.out)
    }

    fn write(&self, name: &str, bytes: impl AsRef<[u8]>) -> CliResult<PathBuf> {
        let path = self.out_dir()?.join(name);
        fs::write(&path, bytes).map_err(|e| io_err(&path, e))?;
        Ok(path)
    }
}

/// Runs one parsed invocation, reporting progress on stdout.
pub fn run(cli: Cli) -> CliResult<()> {
    let cfg = match &cli.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    let ctx = Context {
        seed: cfg.pick("seed", cli.seed, 0)?,
        out: cfg.pick("out", cli.out.clone(), PathBuf::from(DEFAULT_OUT))?,
        cfg,
    };
    match &cli.command {
        Command::Flow { input, flow } => cmd_flow(&ctx, input, flow),
        Command::Dynimage { input, flow, pool } => cmd_dynimage(&ctx, input, flow, pool),
        Command::Perturb { input, ramp } => cmd_perturb(&ctx, input, ramp),
        Command::Gen {
            clip,
            ramp,
            lighting,
        } => cmd_gen(&ctx, clip, ramp, *lighting),
        Command::Train {
            data,
            flow,
            pool,
            fit,
        } => cmd_train(&ctx, data, flow, pool, fit),
        Command::Eval {
            data,
            model,
            flow,
            pool,
            fit,
        } => cmd_eval(&ctx, data, model, flow, pool, fit),
        Command::Bench {
            data,
            model,
            clips,
            flow,
            pool,
        } => cmd_bench(&ctx, data, model, *clips, flow, pool),
        Command::Viz { flow_file } => cmd_viz(&ctx, flow_file),
    }
}

fn cmd_flow(ctx: &Context, input: &Path, flow: &FlowArgs) -> CliResult<()> {
    let params = flow.resolve(&ctx.cfg)?;
    let (_, frames) = io::read_frame_dir(input)?;
    if frames.len() < 2 {
        return Err(CliError::Input(format!(
            "{} holds {} frame(s); flow needs at least 2",
            input.display(),
            frames.len()
        )));
    }
    let stack = flow_stack(&frames, &params)?;
    let out = ctx.out_dir()?;
    for (i, f) in stack.fields().iter().enumerate() {
        io::write_flo(&out.join(format!("flow_{i:04}.flo")), f)?;
    }
    println!("wrote {} flow files to {}", stack.len(), out.display());
    Ok(())
}

fn cmd_dynimage(ctx: &Context, input: &Path, flow: &FlowArgs, pool: &PoolArgs) -> CliResult<()> {
    let cfg = pool.resolve(&ctx.cfg, flow.resolve(&ctx.cfg)?)?;
    let (_, frames) = io::read_frame_dir(input)?;
    let img = dynamic_optical_flow(&frames, &cfg)?;
    let out = ctx.out_dir()?;
    for (c, name) in ["dynamic_u1.pgm", "dynamic_u2.pgm"].iter().enumerate() {
        io::write_pgm(&out.join(name), &io::channel_display(&img, c)?)?;
    }
    io::write_sidecar(&out.join(SIDECAR_FILE), &img)?;
    println!(
        "dynamic image {}x{} from {} frames, max |value| {:.4}",
        img.width(),
        img.height(),
        frames.len(),
        img.max_abs()
    );
    Ok(())
}

fn cmd_perturb(ctx: &Context, input: &Path, ramp: &RampArgs) -> CliResult<()> {
    let ramp = ramp.resolve(&ctx.cfg)?;
    let (paths, frames) = io::read_frame_dir(input)?;
    let lit = flowpool::synth::apply_lighting(&frames, &ramp)?;
    let out = ctx.out_dir()?;
    let mut changed = 0;
    for (i, (path, frame)) in paths.iter().zip(&lit).enumerate() {
        let name = path.file_name().expect("frame paths name files");
        let target = out.join(name);
        if ramp.offset(i) == 0.0 {
            fs::copy(path, &target).map_err(|e| io_err(&target, e))?;
        } else {
            io::write_frame(&target, frame)?;
            changed += 1;
        }
    }
    println!(
        "wrote {} frames ({changed} relit) to {}",
        paths.len(),
        out.display()
    );
    Ok(())
}

fn cmd_gen(
    ctx: &Context,
    clip: &ClipArgs,
    ramp: &RampArgs,
    lighting: Option<bool>,
) -> CliResult<()> {
    let ramp = ramp.resolve(&ctx.cfg)?;
    let lighting = ctx.cfg.pick("lighting", lighting, true)?;
    let gen = clip.resolve(&ctx.cfg, ramp, lighting)?;
    let clips = generate_dataset(
        gen.n_fall,
        gen.n_adl,
        &gen.spec,
        gen.ramp.as_ref(),
        ctx.seed,
    )?;
    let out = ctx.out_dir()?;
    let mut entries = Vec::with_capacity(clips.len());
    for (i, c) in clips.iter().enumerate() {
        let name = format!("clip_{i:03}");
        let dir = out.join(&name);
        fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
        for (t, frame) in c.frames.iter().enumerate() {
            io::write_pgm(&dir.join(format!("frame_{t:03}.pgm")), frame)?;
        }
        entries.push(ManifestEntry {
            clip: name,
            kind: c.truth.kind,
            label: c.truth.label,
            frames: c.frames.len(),
        });
    }
    write_manifest(&out.join(MANIFEST), &entries)?;
    println!("wrote {} clips to {}", entries.len(), out.display());
    Ok(())
}

/// The same seeded split for training and evaluation.
fn split_manifest(
    entries: &[ManifestEntry],
    fit: &FitSettings,
    seed: u64,
) -> CliResult<(Vec<ManifestEntry>, Vec<ManifestEntry>)> {
    Ok(split(entries, |e| e.label, fit.train_fraction, seed)?)
}

fn load_clip(data: &Path, entry: &ManifestEntry) -> CliResult<Vec<GrayImage>> {
    let (_, frames) = io::read_frame_dir(&data.join(&entry.clip))?;
    if frames.len() != entry.frames {
        return Err(CliError::Input(format!(
            "{} has {} frames, manifest says {}",
            entry.clip,
            frames.len(),
            entry.frames
        )));
    }
    Ok(frames)
}

fn examples(
    data: &Path,
    entries: &[ManifestEntry],
    cfg: &PipelineConfig,
) -> CliResult<Vec<LabeledExample>> {
    entries
        .iter()
        .map(|e| {
            let frames = load_clip(data, e)?;
            let img = dynamic_optical_flow(&frames, cfg)?;
            Ok(LabeledExample::from_dynamic_image(&img, e.label))
        })
        .collect()
}

fn score(
    clf: &FcClassifier,
    data: &[LabeledExample],
    threshold: f64,
) -> CliResult<(Vec<f64>, Metrics)> {
    let probs = data
        .iter()
        .map(|ex| predict(clf, &ex.features))
        .collect::<flowpool::Result<Vec<_>>>()?;
    let labels: Vec<u8> = data.iter().map(|ex| ex.label).collect();
    let m = compute_metrics(&probs, &labels, threshold)?;
    Ok((probs, m))
}

fn cmd_train(
    ctx: &Context,
    data: &Path,
    flow: &FlowArgs,
    pool: &PoolArgs,
    fit: &FitArgs,
) -> CliResult<()> {
    let cfg = pool.resolve(&ctx.cfg, flow.resolve(&ctx.cfg)?)?;
    let fit = fit.resolve(&ctx.cfg)?;
    let entries = read_manifest(data)?;
    let (train_part, _) = split_manifest(&entries, &fit, ctx.seed)?;
    let ex = examples(data, &train_part, &cfg)?;
    let clf = train(&ex, fit.epochs, fit.rate)?;
    let (_, m) = score(&clf, &ex, fit.threshold)?;
    let out = ctx.out_dir()?;
    io::write_model(&out.join(MODEL_FILE), &clf)?;
    println!(
        "trained on {} clips, training accuracy {:.4}; model in {}",
        ex.len(),
        m.accuracy,
        out.join(MODEL_FILE).display()
    );
    Ok(())
}

fn cmd_eval(
    ctx: &Context,
    data: &Path,
    model: &Path,
    flow: &FlowArgs,
    pool: &PoolArgs,
    fit: &FitArgs,
) -> CliResult<()> {
    let cfg = pool.resolve(&ctx.cfg, flow.resolve(&ctx.cfg)?)?;
    let fit = fit.resolve(&ctx.cfg)?;
    let clf = io::read_model(model)?;
    let entries = read_manifest(data)?;
    let (_, test_part) = split_manifest(&entries, &fit, ctx.seed)?;
    let ex = examples(data, &test_part, &cfg)?;
    if let Some(bad) = ex.iter().find(|e| e.features.len() != clf.feature_len()) {
        return Err(CliError::Input(format!(
            "model expects {} features but clips give {}",
            clf.feature_len(),
            bad.features.len()
        )));
    }
    let (probs, m) = score(&clf, &ex, fit.threshold)?;
    let mut preds = String::from("clip,label,probability\n");
    for ((e, p), x) in test_part.iter().zip(&probs).zip(&ex) {
        let _ = writeln!(preds, "{},{},{p}", e.clip, x.label);
    }
    ctx.write(
        METRICS_FILE,
        format!("{METRICS_HEADER}\n{}\n", metrics_row(&m)),
    )?;
    ctx.write(PREDICTIONS_FILE, preds)?;
    println!("{METRICS_HEADER}\n{}", metrics_row(&m));
    Ok(())
}

fn cmd_bench(
    ctx: &Context,
    data: &Path,
    model: &Path,
    clips: Option<usize>,
    flow: &FlowArgs,
    pool: &PoolArgs,
) -> CliResult<()> {
    let cfg = pool.resolve(&ctx.cfg, flow.resolve(&ctx.cfg)?)?;
    let limit = ctx.cfg.lookup("clips", clips)?;
    if limit == Some(0) {
        return Err(CliError::Input("clips must be at least 1".into()));
    }
    let clf = io::read_model(model)?;
    let mut entries = read_manifest(data)?;
    if let Some(n) = limit {
        entries.truncate(n);
    }
    let sequences = entries
        .iter()
        .map(|e| load_clip(data, e))
        .collect::<CliResult<Vec<_>>>()?;
    let report = benchmark(&sequences, &cfg, &clf)?;
    ctx.write(TIMING_FILE, timing_csv(&report))?;
    ctx.write(INPUTS_FILE, inputs_csv(&report))?;
    print!("{}", timing_csv(&report));
    println!(
        "input ratio (flow stack : dynamic image) {}:1",
        report.input_ratio()
    );
    Ok(())
}

fn cmd_viz(ctx: &Context, flow_file: &Path) -> CliResult<()> {
    let flow = io::read_flo(flow_file)?;
    let stem = flow_file
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "flow".into());
    let path = ctx.out_dir()?.join(format!("{stem}.ppm"));
    viz::write_ppm(&path, &viz::flow_to_rgb(&flow))?;
    println!("wrote {}", path.display());
    Ok(())
}
