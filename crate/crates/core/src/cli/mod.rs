//! The `swi` command line.

mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;
use serde_json::json;

pub use config::{RunConfig, SceneKind};

use crate::error::{Result, SwiError};
use crate::eval::scenes::{feature_mask, feature_scene, flat_scene, relief_scene, subsurface_scene};
use crate::eval::{
    calibrate_with, depth_tracking_experiment, emulate_scanning, scan_comparison, scanning_equivalent_factor,
    tradeoff_sweep, wrapped_medae, wrapped_rmse, CalibrationOptions, TrackingProtocol, TradeoffProtocol,
};
use crate::filter::{FilterKind, FilterSpec};
use crate::forward::{acquire_stack, envelope_squared, IlluminationMode, SceneModel};
use crate::io::{self, scene::read_image, DepthSidecar};
use crate::optics::OpticalConfig;
use crate::retrieve::reconstruct;

#[derive(Debug, Parser)]
#[command(name = "swi", version, about = "Swept-angle synthetic wavelength interferometry")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a procedural scene directory.
    Scene {
        #[arg(long, value_enum)]
        kind: Option<SceneKind>,
        /// WIDTHxHEIGHT in pixels.
        #[arg(long, value_parser = parse_pair)]
        size: Option<(usize, usize)>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Render a frame stack for a scene.
    Simulate {
        #[arg(long)]
        scene: Option<PathBuf>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Reconstruct depth from a frame-stack directory.
    Reconstruct {
        #[arg(long)]
        frames: Option<PathBuf>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Fit the synthetic wavelength to an envelope sweep.
    Calibrate {
        /// CSV with columns `l,e`; a sweep is simulated when omitted.
        #[arg(long)]
        samples: Option<PathBuf>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Depth-tracking accuracy: swept-angle versus coherent illumination.
    Track {
        #[arg(long)]
        scene: Option<PathBuf>,
        /// Comma-separated depth offsets in µm.
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        offsets: Option<Vec<f64>>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Acquisition-time versus quality sweep over {M, N} and coverage.
    Sweep {
        #[arg(long)]
        scene: Option<PathBuf>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Compare the full pipeline with an equal-time point-scanning emulation.
    ScanCompare {
        /// Scanner points per second.
        #[arg(long)]
        rate: Option<f64>,
        #[arg(long)]
        images: Option<usize>,
        /// Total acquisition time in seconds.
        #[arg(long)]
        time: Option<f64>,
        /// Sensor width in pixels.
        #[arg(long)]
        width: Option<usize>,
        #[command(flatten)]
        common: CommonArgs,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Swept,
    Coherent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FilterArg {
    None,
    Gaussian,
    Bilateral,
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// JSON run configuration; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Shift counts as MxN.
    #[arg(long, value_parser = parse_pair)]
    pub mn: Option<(usize, usize)>,
    /// Wavelength in nm.
    #[arg(long)]
    pub lambda1: Option<f64>,
    /// Wavelength in nm.
    #[arg(long)]
    pub lambda2: Option<f64>,
    /// Synthetic wavelength in µm; replaces --lambda2.
    #[arg(long)]
    pub lambda_s: Option<f64>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    #[arg(long, value_enum)]
    pub filter: Option<FilterArg>,
    /// Spatial sigma in µm.
    #[arg(long)]
    pub sigma_s: Option<f64>,
    #[arg(long)]
    pub sigma_i: Option<f64>,
    /// Additive sensor noise standard deviation.
    #[arg(long)]
    pub noise: Option<f64>,
    #[arg(long)]
    pub guide: Option<PathBuf>,
    /// Ground-truth depth PFM.
    #[arg(long)]
    pub gt: Option<PathBuf>,
}

fn parse_pair(s: &str) -> std::result::Result<(usize, usize), String> {
    let (a, b) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected AxB, got {s:?}"))?;
    let p = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("{t:?}: {e}"));
    Ok((p(a)?, p(b)?))
}

impl CommonArgs {
    fn resolve(&self) -> Result<RunConfig> {
        let mut c: RunConfig = match &self.config {
            Some(p) => io::read_json(p).map_err(|e| match e {
                SwiError::Format { path, message } => SwiError::invalid(format!("{}: {message}", path.display())),
                other => other,
            })?,
            None => RunConfig::default(),
        };
        if let Some(v) = self.seed {
            c.acquisition.seed = v;
        }
        if let Some(v) = &self.out {
            c.out = Some(v.clone());
        }
        if let Some((m, n)) = self.mn {
            c.m = m;
            c.n = n;
        }
        if let Some(v) = self.lambda1 {
            c.lambda1 = v;
        }
        if let Some(v) = self.lambda2 {
            c.lambda2 = v;
            c.lambda_s = None;
        }
        if let Some(v) = self.lambda_s {
            c.lambda_s = Some(v);
        }
        if let Some(mode) = self.mode {
            c.acquisition = match mode {
                ModeArg::Swept => c.swept_settings(),
                ModeArg::Coherent => c.coherent_settings(),
            };
        }
        if let Some(f) = self.filter {
            c.filter = match f {
                FilterArg::None => FilterKind::None,
                FilterArg::Gaussian => FilterKind::Gaussian,
                FilterArg::Bilateral => FilterKind::JointBilateral,
            };
        }
        if let Some(v) = self.sigma_s {
            c.sigma_s = v;
        }
        if let Some(v) = self.sigma_i {
            c.sigma_i = v;
        }
        if let Some(v) = self.noise {
            c.acquisition.noise_sigma = v;
        }
        if let Some(v) = &self.guide {
            c.guide = Some(v.clone());
        }
        if let Some(v) = &self.gt {
            c.gt = Some(v.clone());
        }
        Ok(c)
    }
}

/// Process exit status for an error: 2 configuration, 3 I/O, 4 inconsistent data.
pub fn exit_code(e: &SwiError) -> u8 {
    match e {
        SwiError::Io { .. } | SwiError::Format { .. } => 3,
        SwiError::Inconsistent(_) | SwiError::DimensionMismatch(_) => 4,
        _ => 2,
    }
}

/// Entry point used by the binary.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => Cli::command().error(clap::error::ErrorKind::MissingRequiredArgument, msg).exit(),
        Err(CliError::Run(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[derive(Debug)]
pub enum CliError {
    /// Missing or conflicting arguments; reported with usage, exit 2.
    Usage(String),
    Run(SwiError),
}

impl From<SwiError> for CliError {
    fn from(e: SwiError) -> Self {
        CliError::Run(e)
    }
}

type CliResult = std::result::Result<(), CliError>;

fn out_dir(c: &RunConfig) -> std::result::Result<PathBuf, CliError> {
    let dir = c.out.clone().ok_or_else(|| CliError::Usage("--out DIR is required".into()))?;
    std::fs::create_dir_all(&dir).map_err(|e| SwiError::io(&dir, e))?;
    Ok(dir)
}

#[derive(Serialize)]
struct Manifest<'a, T: Serialize> {
    command: &'a str,
    config: &'a RunConfig,
    outputs: Vec<&'a str>,
    results: T,
}

fn manifest<T: Serialize>(dir: &Path, command: &str, c: &RunConfig, outputs: Vec<&str>, results: T) -> Result<()> {
    io::write_manifest(
        dir,
        &Manifest {
            command,
            config: c,
            outputs,
            results,
        },
    )
}

pub fn run(command: &Command) -> CliResult {
    match command {
        Command::Scene { kind, size, common } => {
            let mut c = common.resolve()?;
            if let Some(k) = kind {
                c.scene_kind = *k;
            }
            if let Some((w, h)) = size {
                c.scene_size = [*w, *h];
            }
            cmd_scene(&c)
        }
        Command::Simulate { scene, common } => {
            let mut c = common.resolve()?;
            if scene.is_some() {
                c.scene = scene.clone();
            }
            cmd_simulate(&c)
        }
        Command::Reconstruct { frames, common } => {
            let mut c = common.resolve()?;
            if frames.is_some() {
                c.frames = frames.clone();
            }
            cmd_reconstruct(&c)
        }
        Command::Calibrate { samples, common } => {
            let mut c = common.resolve()?;
            if samples.is_some() {
                c.samples = samples.clone();
            }
            cmd_calibrate(&c)
        }
        Command::Track { scene, offsets, common } => {
            let mut c = common.resolve()?;
            if scene.is_some() {
                c.scene = scene.clone();
            }
            if let Some(o) = offsets {
                c.offsets = o.clone();
            }
            cmd_track(&c)
        }
        Command::Sweep { scene, common } => {
            let mut c = common.resolve()?;
            if scene.is_some() {
                c.scene = scene.clone();
            }
            cmd_sweep(&c)
        }
        Command::ScanCompare {
            rate,
            images,
            time,
            width,
            common,
        } => {
            let mut c = common.resolve()?;
            if let Some(v) = rate {
                c.scan_rate = *v;
            }
            if let Some(v) = images {
                c.images_per_depth = *v;
            }
            if let Some(v) = time {
                c.total_time = *v;
            }
            if let Some(v) = width {
                c.scan_width = *v;
            }
            cmd_scan_compare(&c)
        }
    }
}

fn generate_scene(c: &RunConfig, optics: &OpticalConfig) -> SceneModel {
    let [w, h] = c.scene_size;
    match c.scene_kind {
        SceneKind::Subsurface => subsurface_scene(w, h, optics, c.acquisition.seed),
        SceneKind::Flat => flat_scene(w, h, optics.unambiguous_range() / 3.0, 0.8),
        SceneKind::Relief => relief_scene(w, h, optics),
        SceneKind::Features => feature_scene(w, h, optics),
    }
}

/// The configured scene file, or a generated one.
fn scene_for(c: &RunConfig, optics: &OpticalConfig) -> Result<SceneModel> {
    match &c.scene {
        Some(p) => io::load_scene(p),
        None => Ok(generate_scene(c, optics)),
    }
}

fn cmd_scene(c: &RunConfig) -> CliResult {
    c.validate()?;
    let optics = c.optics()?;
    let dir = out_dir(c)?;
    let scene = generate_scene(c, &optics);
    let path = io::save_scene(&dir, &scene)?;
    manifest(&dir, "scene", c, vec!["scene.json"], json!({}))?;
    println!("scene: {}", path.display());
    Ok(())
}

fn cmd_simulate(c: &RunConfig) -> CliResult {
    c.validate()?;
    let scene_path = c
        .scene
        .as_ref()
        .ok_or_else(|| CliError::Usage("--scene PATH is required".into()))?;
    let optics = c.optics()?;
    let schedule = c.schedule(&optics)?;
    let scene = io::load_scene(scene_path)?;
    let dir = out_dir(c)?;
    let stack = acquire_stack(&scene, &schedule, &c.acquisition, &optics)?;
    io::write_stack(&dir, &stack, Some(&c.acquisition))?;
    manifest(&dir, "simulate", c, vec![io::stack::SIDECAR], json!({ "frames": schedule.frame_count() }))?;
    println!("lambda_s_um: {:.6}", optics.lambda_s);
    println!("unambiguous_range_um: {:.6}", optics.unambiguous_range());
    println!("frames: {}", schedule.frame_count());
    Ok(())
}

fn cmd_reconstruct(c: &RunConfig) -> CliResult {
    let frames = c
        .frames
        .as_ref()
        .ok_or_else(|| CliError::Usage("--frames DIR is required".into()))?;
    let spec = c.filter_spec();
    spec.validate()?;
    if spec.kind == FilterKind::JointBilateral && c.guide.is_none() {
        return Err(CliError::Usage("--filter bilateral requires --guide PATH".into()));
    }
    let (stack, sidecar) = io::read_stack(frames)?;
    let guide = c.guide.as_deref().map(read_image).transpose()?;
    let depth = reconstruct(&stack, &spec, guide.as_ref())?;
    let dir = out_dir(c)?;
    io::write_depth_pfm(&dir.join("depth.pfm"), &depth)?;
    io::write_mask_png(&dir.join("mask.png"), &depth)?;
    let range = io::write_depth_colormap(&dir.join("depth.png"), &depth)?;
    io::write_json(
        &dir.join("depth.json"),
        &DepthSidecar {
            lambda_s: sidecar.config.lambda_s,
            l0: sidecar.l0,
            m: sidecar.m,
            n: sidecar.n,
            filter: spec,
            config: sidecar.config,
        },
    )?;
    let metrics = match &c.gt {
        Some(p) => {
            let gt = io::read_depth_pfm(p)?;
            let rmse = wrapped_rmse(&depth, &gt, &stack.config)?;
            let medae = wrapped_medae(&depth, &gt, &stack.config)?;
            println!("rmse_um: {rmse:.6e}");
            println!("medae_um: {medae:.6e}");
            Some(json!({ "rmse_um": rmse, "medae_um": medae }))
        }
        None => None,
    };
    manifest(
        &dir,
        "reconstruct",
        c,
        vec!["depth.pfm", "depth.json", "mask.png", "depth.png"],
        json!({ "colormap": range, "valid_pixels": depth.valid_count(), "metrics": metrics }),
    )?;
    println!("valid_pixels: {}/{}", depth.valid_count(), depth.depth.len());
    Ok(())
}

#[derive(Debug, Clone, Copy, Serialize, serde::Deserialize)]
struct Sample {
    l: f64,
    e: f64,
}

fn read_samples(path: &Path) -> Result<Vec<(f64, f64)>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| SwiError::format(path, e.to_string()))?;
    r.deserialize::<Sample>()
        .map(|s| s.map(|s| (s.l, s.e)).map_err(|e| SwiError::format(path, e.to_string())))
        .collect()
}

/// Envelope sweep of one pixel at depth `λ_s/3` over `span·λ_s`, with
/// additive noise relative to unit peak.
fn simulate_sweep(c: &RunConfig, optics: &OpticalConfig) -> Result<Vec<(f64, f64)>> {
    if c.sweep_points < 4 || !(c.sweep_span > 0.0) {
        return Err(SwiError::invalid("sweep needs at least 4 points and a positive span"));
    }
    let noise = Normal::new(0.0, c.acquisition.noise_sigma).map_err(|e| SwiError::invalid(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(c.acquisition.seed);
    let d = optics.lambda_s / 3.0;
    let step = c.sweep_span * optics.lambda_s / (c.sweep_points - 1) as f64;
    Ok((0..c.sweep_points)
        .map(|i| {
            let l = c.l0 + i as f64 * step;
            (l, envelope_squared(d, l, optics) + noise.sample(&mut rng))
        })
        .collect())
}

fn cmd_calibrate(c: &RunConfig) -> CliResult {
    c.validate()?;
    let optics = c.optics()?;
    let dir = out_dir(c)?;
    let samples = match &c.samples {
        Some(p) => read_samples(p)?,
        None => simulate_sweep(c, &optics)?,
    };
    let fit = calibrate_with(&samples, &CalibrationOptions::new(optics.lambda_s))?;
    let rows: Vec<Sample> = samples.iter().map(|&(l, e)| Sample { l, e }).collect();
    io::write_csv(&dir.join("samples.csv"), &rows)?;
    io::write_csv(&dir.join("fit.csv"), &[fit])?;
    let rel = (fit.lambda_s - optics.lambda_s) / optics.lambda_s;
    manifest(&dir, "calibrate", c, vec!["samples.csv", "fit.csv"], json!({ "fit": fit, "nominal_lambda_s": optics.lambda_s }))?;
    println!(
        "lambda_s_um: {:.6} (nominal {:.6}, relative deviation {:.3e})",
        fit.lambda_s, optics.lambda_s, rel
    );
    Ok(())
}

fn cmd_track(c: &RunConfig) -> CliResult {
    if c.offsets.len() < 2 {
        return Err(SwiError::invalid(format!(
            "track needs at least 2 offsets, got {}",
            c.offsets.len()
        ))
        .into());
    }
    c.validate()?;
    let optics = c.optics()?;
    let scene = scene_for(c, &optics)?;
    let dir = out_dir(c)?;
    let protocol = TrackingProtocol {
        config: optics,
        m: c.m,
        n: c.n,
        l0: c.l0,
        offsets: c.offsets.clone(),
        swept: c.swept_settings(),
        coherent: c.coherent_settings(),
        kernel_widths: c.kernel_widths.clone(),
        pixel_pitch: c.pixel_pitch,
    };
    let report = depth_tracking_experiment(&scene, &protocol)?;
    io::write_csv(&dir.join("accuracy.csv"), &report.rows)?;
    #[derive(Serialize)]
    struct OffsetRow {
        mode: &'static str,
        kernel_width: f64,
        offset: f64,
        recovered_shift: f64,
        rmse: f64,
    }
    let offsets: Vec<OffsetRow> = report
        .per_offset
        .iter()
        .map(|r| OffsetRow {
            mode: match r.mode {
                IlluminationMode::SweptAngle => "swept",
                IlluminationMode::FullFieldCoherent => "coherent",
            },
            kernel_width: r.kernel_width,
            offset: r.offset,
            recovered_shift: r.recovered_shift,
            rmse: r.rmse,
        })
        .collect();
    io::write_csv(&dir.join("offsets.csv"), &offsets)?;
    manifest(&dir, "track", c, vec!["accuracy.csv", "offsets.csv"], json!({ "rows": report.rows }))?;
    for r in &report.rows {
        println!(
            "width {:>5.1} um: swept rmse {:.3} medae {:.3} | coherent rmse {:.3} medae {:.3}",
            r.kernel_width, r.rmse_swept, r.medae_swept, r.rmse_coherent, r.medae_coherent
        );
    }
    Ok(())
}

fn cmd_sweep(c: &RunConfig) -> CliResult {
    c.validate()?;
    let optics = c.optics()?;
    let scene = scene_for(c, &optics)?;
    let dir = out_dir(c)?;
    let protocol = TradeoffProtocol {
        config: optics,
        l0: c.l0,
        shifts: c.shifts.iter().map(|&[m, n]| (m, n)).collect(),
        coverages: c.coverages.clone(),
        base: c.acquisition,
        filter: c.filter_spec(),
    };
    let points = tradeoff_sweep(&scene, &protocol)?;
    io::write_csv(&dir.join("sweep.csv"), &points)?;
    manifest(&dir, "sweep", c, vec!["sweep.csv"], json!({ "points": points.len() }))?;
    for p in &points {
        println!(
            "M={} N={} frames={:>3} coverage={:.2}: rmse {:.3} um",
            p.m, p.n, p.frames_used, p.coverage, p.rmse
        );
    }
    Ok(())
}

fn cmd_scan_compare(c: &RunConfig) -> CliResult {
    let factor = scanning_equivalent_factor(c.scan_rate, c.images_per_depth, c.total_time, c.scan_width)?;
    println!("factor: {factor}");
    let Some(dir) = c.out.clone() else {
        return Ok(());
    };
    c.validate()?;
    let dir = out_dir(&RunConfig { out: Some(dir), ..c.clone() })?;
    let optics = c.optics()?;
    let spec = FilterSpec::joint_bilateral(c.sigma_s, c.sigma_i, c.pixel_pitch);
    let (full, gt, guide, region) = match &c.frames {
        Some(frames) => {
            let (gt_path, guide_path) = match (&c.gt, &c.guide) {
                (Some(g), Some(h)) => (g, h),
                _ => return Err(CliError::Usage("--frames requires --gt and --guide".into())),
            };
            let (stack, _) = io::read_stack(frames)?;
            let full = reconstruct(&stack, &c.filter_spec(), None)?;
            (full, io::read_depth_pfm(gt_path)?, read_image(guide_path)?, None)
        }
        None => {
            let [w, h] = c.scene_size;
            let scene = feature_scene(w, h, &optics);
            let stack = acquire_stack(&scene, &c.schedule(&optics)?, &c.acquisition, &optics)?;
            let full = reconstruct(&stack, &FilterSpec::none(), None)?;
            (full, scene.depth, scene.guide, Some(feature_mask(w, h)))
        }
    };
    let cmp = scan_comparison(&full, &gt, &guide, factor, &spec, &optics, region.as_deref())?;
    let scanned = emulate_scanning(&full, factor, &guide, &spec)?;
    io::write_depth_pfm(&dir.join("full.pfm"), &full)?;
    io::write_depth_pfm(&dir.join("scanned.pfm"), &scanned)?;
    let r_full = io::write_depth_colormap(&dir.join("full.png"), &full)?;
    let r_scan = io::write_depth_colormap(&dir.join("scanned.png"), &scanned)?;
    io::write_csv(&dir.join("scan.csv"), &[cmp])?;
    manifest(
        &dir,
        "scan-compare",
        c,
        vec!["scan.csv", "full.pfm", "scanned.pfm", "full.png", "scanned.png"],
        json!({ "comparison": cmp, "colormap_full": r_full, "colormap_scanned": r_scan }),
    )?;
    println!("rmse_full_um: {:.4}", cmp.rmse_full);
    println!("rmse_scanned_um: {:.4}", cmp.rmse_scanned);
    Ok(())
}

