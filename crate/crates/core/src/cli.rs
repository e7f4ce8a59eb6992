//! Command-line front end.

use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::compare::{self, TableFormat};
use crate::config::Settings;
use crate::error::{Error, Result};
use crate::flow::{self, FlowSource};
use crate::plot;
use crate::profile;
use crate::report::{self, PairScores, ReportOptions};
use crate::spatial::{lpips, niqe, SpatialMetric};
use crate::straightness;
use crate::perceptual;
use crate::video_io::{self, FramePattern, FrameSequence, SequencePair};

#[derive(Debug, Parser)]
#[command(name = "stpd", version, about = "Spatio-temporal perception and distortion measures for video")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute every measure for a reference/test pair and write a JSON report.
    Compute(Box<ComputeArgs>),
    /// Tabulate several reports with the best value per column marked.
    Compare(CompareArgs),
    /// Stack one pixel row across frames into a temporal-profile image.
    Profile(ProfileArgs),
    /// Estimate native optical flow for a sequence and write `.flo` files.
    Flow(FlowCmdArgs),
    /// Fit a NIQE model from a corpus of pristine frames.
    NiqeFit(NiqeFitArgs),
    /// Per-node straightness of one sequence as CSV.
    Straightness(StraightnessArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Config file of `key = value` lines (default: $STPD_CONFIG).
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Worker threads; 0 uses every core. Output does not depend on it.
    #[arg(long, default_value_t = 0, value_name = "N")]
    pub jobs: usize,
    /// Frame filename pattern, e.g. "%08d.png" (default: any numbered PNG/BMP).
    #[arg(long, value_name = "PATTERN")]
    pub pattern: Option<String>,
}

#[derive(Debug, Args)]
pub struct FlowArgs {
    /// Pyramid levels of the native estimator.
    #[arg(long, value_name = "N")]
    pub flow_levels: Option<usize>,
    /// Downscale factor between pyramid levels.
    #[arg(long, value_name = "S")]
    pub flow_scale: Option<f64>,
    /// Smoothness weight of the native estimator.
    #[arg(long, value_name = "L")]
    pub flow_lambda: Option<f64>,
    /// Jacobi iterations per pyramid level.
    #[arg(long, value_name = "N")]
    pub flow_iters: Option<usize>,
}

#[derive(Debug, Args)]
pub struct PerceptualArgs {
    /// Center crop for the perceptual model, `H` or `HxW`.
    #[arg(long, value_name = "HxW")]
    pub psh_crop: Option<String>,
    /// Block-downscale factor after cropping.
    #[arg(long, value_name = "N")]
    pub psh_downscale: Option<usize>,
    /// Gamma exponent applied to intensities.
    #[arg(long, value_name = "G")]
    pub psh_gamma: Option<f64>,
    /// Center sigma of the difference-of-Gaussians stage (px).
    #[arg(long, value_name = "SIGMA")]
    pub psh_sigma_center: Option<f64>,
    /// Surround sigma of the difference-of-Gaussians stage (px).
    #[arg(long, value_name = "SIGMA")]
    pub psh_sigma_surround: Option<f64>,
    /// Window of the local gain control (px).
    #[arg(long, value_name = "N")]
    pub psh_gain_window: Option<usize>,
    /// Epsilon of the gain control and channel normalization.
    #[arg(long, value_name = "EPS")]
    pub psh_gain_epsilon: Option<f64>,
    /// Disable the oriented second stage.
    #[arg(long)]
    pub psh_no_v1: bool,
    /// Orientations of the second stage.
    #[arg(long, value_name = "N")]
    pub psh_v1_orientations: Option<usize>,
    /// Scales of the second stage.
    #[arg(long, value_name = "N")]
    pub psh_v1_scales: Option<usize>,
    /// Pooling block of the second stage.
    #[arg(long, value_name = "N")]
    pub psh_v1_pool: Option<usize>,
    /// Drop nodes with zero-length displacements instead of failing.
    #[arg(long)]
    pub skip_degenerate: bool,
}

#[derive(Debug, Args)]
pub struct ComputeArgs {
    /// Reference (ground-truth) frame directory or .y4m file.
    #[arg(long = "ref", value_name = "PATH")]
    pub reference: PathBuf,
    /// Test (restored) frame directory or .y4m file.
    #[arg(long, value_name = "PATH")]
    pub test: PathBuf,
    /// Per-frame LPIPS scores of the test sequence (`frame,metric,score`).
    #[arg(long, value_name = "CSV")]
    pub lpips: Option<PathBuf>,
    /// Consecutive-pair LPIPS of the reference (`frame_pair,metric,score`), for tLP.
    #[arg(long, value_name = "CSV", requires = "lpips_pairs_test")]
    pub lpips_pairs_ref: Option<PathBuf>,
    /// Consecutive-pair LPIPS of the test sequence, for tLP.
    #[arg(long, value_name = "CSV", requires = "lpips_pairs_ref")]
    pub lpips_pairs_test: Option<PathBuf>,
    /// NIQE model file (from `niqe-fit`); enables NIQE scoring.
    #[arg(long, value_name = "FILE")]
    pub niqe_model: Option<PathBuf>,
    /// Flow source: `native` or `dir=<path>` holding ref_<n>.flo / test_<n>.flo.
    #[arg(long, default_value = "native", value_name = "SOURCE")]
    pub flow: String,
    /// Weight on the flow term of D_ST.
    #[arg(long, value_name = "A")]
    pub alpha: Option<f64>,
    /// Spatial metric feeding P_ST: lpips_alex, lpips_vgg or niqe.
    #[arg(long, value_name = "METRIC")]
    pub spatial: Option<String>,
    /// Scale of MSE_Pix: byte (0-255) or unit (0-1).
    #[arg(long, value_name = "RANGE")]
    pub pixel_range: Option<String>,
    /// Skip SSIM.
    #[arg(long)]
    pub no_ssim: bool,
    /// Record failing measures as unavailable instead of aborting.
    #[arg(long)]
    pub partial: bool,
    /// Name stored in the report (default: test path's final component).
    #[arg(long)]
    pub name: Option<String>,
    /// Also write a straightness-per-node SVG plot.
    #[arg(long, value_name = "SVG")]
    pub plot: Option<PathBuf>,
    /// Output report (default: stdout).
    #[arg(short, long, value_name = "JSON")]
    pub output: Option<PathBuf>,
    #[command(flatten)]
    pub flow_args: FlowArgs,
    #[command(flatten)]
    pub psh: PerceptualArgs,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Report files, one table row each.
    #[arg(required = true, value_name = "REPORT")]
    pub reports: Vec<PathBuf>,
    /// text, csv or markdown.
    #[arg(long, default_value = "text")]
    pub format: String,
    /// Also write a D_ST vs P_ST scatter plot.
    #[arg(long, value_name = "SVG")]
    pub plot: Option<PathBuf>,
    /// Output file (default: stdout).
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ProfileArgs {
    /// Frame directory or .y4m file.
    #[arg(long, value_name = "PATH")]
    pub seq: PathBuf,
    /// Pixel row to extract.
    #[arg(long)]
    pub row: usize,
    /// Frame range `START:END` (end exclusive; default: all frames).
    #[arg(long, value_name = "START:END")]
    pub frames: Option<String>,
    /// Output PNG.
    #[arg(short, long)]
    pub output: PathBuf,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct FlowCmdArgs {
    /// Frame directory or .y4m file.
    #[arg(long, value_name = "PATH")]
    pub seq: PathBuf,
    /// Directory for the `.flo` files.
    #[arg(short, long, value_name = "DIR")]
    pub output: PathBuf,
    /// File prefix; files are named `<prefix>_<n>.flo` for the flow from
    /// frame n-1 to n.
    #[arg(long, default_value = "test")]
    pub prefix: String,
    #[command(flatten)]
    pub flow_args: FlowArgs,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct NiqeFitArgs {
    /// Pristine frame directories or .y4m files.
    #[arg(required = true, value_name = "PATH")]
    pub corpus: Vec<PathBuf>,
    /// Patch size in pixels.
    #[arg(long)]
    pub patch_size: Option<usize>,
    /// Keep patches at least this fraction as sharp as the frame's sharpest.
    #[arg(long)]
    pub sharpness_fraction: Option<f64>,
    /// Output model file.
    #[arg(short, long)]
    pub output: PathBuf,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct StraightnessArgs {
    /// Frame directory or .y4m file.
    #[arg(long, value_name = "PATH")]
    pub seq: PathBuf,
    /// Output CSV (default: stdout).
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Also write an SVG plot.
    #[arg(long, value_name = "SVG")]
    pub plot: Option<PathBuf>,
    #[command(flatten)]
    pub psh: PerceptualArgs,
    #[command(flatten)]
    pub common: CommonArgs,
}

type Overrides = Vec<(&'static str, String, &'static str)>;

fn push<T: ToString>(o: &mut Overrides, key: &'static str, v: &Option<T>, flag: &'static str) {
    if let Some(v) = v {
        o.push((key, v.to_string(), flag));
    }
}

impl FlowArgs {
    fn overrides(&self, o: &mut Overrides) {
        push(o, "flow.levels", &self.flow_levels, "--flow-levels");
        push(o, "flow.scale", &self.flow_scale, "--flow-scale");
        push(o, "flow.lambda", &self.flow_lambda, "--flow-lambda");
        push(o, "flow.iters", &self.flow_iters, "--flow-iters");
    }
}

impl PerceptualArgs {
    fn overrides(&self, o: &mut Overrides) {
        push(o, "psh.crop", &self.psh_crop, "--psh-crop");
        push(o, "psh.downscale", &self.psh_downscale, "--psh-downscale");
        push(o, "psh.gamma", &self.psh_gamma, "--psh-gamma");
        push(o, "psh.sigma_center", &self.psh_sigma_center, "--psh-sigma-center");
        push(o, "psh.sigma_surround", &self.psh_sigma_surround, "--psh-sigma-surround");
        push(o, "psh.gain_window", &self.psh_gain_window, "--psh-gain-window");
        push(o, "psh.gain_epsilon", &self.psh_gain_epsilon, "--psh-gain-epsilon");
        push(o, "psh.v1_orientations", &self.psh_v1_orientations, "--psh-v1-orientations");
        push(o, "psh.v1_scales", &self.psh_v1_scales, "--psh-v1-scales");
        push(o, "psh.v1_pool", &self.psh_v1_pool, "--psh-v1-pool");
        if self.psh_no_v1 {
            o.push(("psh.v1", "false".into(), "--psh-no-v1"));
        }
        if self.skip_degenerate {
            o.push(("skip_degenerate", "true".into(), "--skip-degenerate"));
        }
    }
}

fn settings(common: &CommonArgs, overrides: Overrides) -> Result<Settings> {
    let mut s = Settings::load(common.config.as_deref())?;
    for (key, value, flag) in overrides {
        s.apply(key, &value, flag)?;
    }
    s.validate()?;
    Ok(s)
}

fn pattern(common: &CommonArgs) -> Result<Option<FramePattern>> {
    common.pattern.as_deref().map(FramePattern::parse).transpose()
}

fn load(path: &Path, common: &CommonArgs) -> Result<FrameSequence> {
    video_io::load_sequence(path, pattern(common)?.as_ref())
}

fn ensure_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => std::fs::create_dir_all(p).map_err(|e| Error::io(p, e)),
        _ => Ok(()),
    }
}

fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => {
            ensure_parent(p)?;
            std::fs::write(p, text).map_err(|e| Error::io(p, e))
        }
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| Error::io("<stdout>", e))
        }
    }
}

/// Run `f` on a pool of `jobs` threads (0 = rayon's default size).
fn with_jobs<T: Send>(jobs: usize, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    pool.install(f)
}

fn parse_range(spec: &str) -> Result<std::ops::Range<usize>> {
    let bad = || Error::InvalidParameter(format!("frame range {spec:?}: expected START:END"));
    let (a, b) = spec.split_once(':').ok_or_else(bad)?;
    Ok(a.trim().parse().map_err(|_| bad())?..b.trim().parse().map_err(|_| bad())?)
}

fn cmd_compute(a: &ComputeArgs) -> Result<()> {
    let mut o = Overrides::new();
    push(&mut o, "alpha", &a.alpha, "--alpha");
    push(&mut o, "spatial", &a.spatial, "--spatial");
    push(&mut o, "pixel_range", &a.pixel_range, "--pixel-range");
    a.flow_args.overrides(&mut o);
    a.psh.overrides(&mut o);
    let s = settings(&a.common, o)?;

    let reference = load(&a.reference, &a.common)?;
    let test = load(&a.test, &a.common)?;
    let pair = SequencePair::new(reference, test)?;

    let lpips_series = a.lpips.as_deref().map(lpips::read_lpips).transpose()?.unwrap_or_default();
    let pair_metric = if s.tradeoff.spatial_metric.is_lpips() {
        s.tradeoff.spatial_metric
    } else {
        SpatialMetric::LpipsAlex
    };
    let pair_lpips = match (&a.lpips_pairs_ref, &a.lpips_pairs_test) {
        (Some(r), Some(t)) => Some(PairScores {
            metric: pair_metric,
            reference: lpips::read_pair_lpips(r, pair_metric)?,
            test: lpips::read_pair_lpips(t, pair_metric)?,
        }),
        _ => None,
    };
    let niqe_model = a.niqe_model.as_deref().map(niqe::NiqeModel::load).transpose()?;

    let opts = ReportOptions {
        tradeoff: s.tradeoff,
        flow: FlowSource::parse(&a.flow, s.flow)?,
        perceptual: s.perceptual,
        lpips: lpips_series,
        lpips_source: a.lpips.as_ref().map(|p| p.display().to_string()),
        pair_lpips,
        niqe_model,
        ssim: !a.no_ssim,
        skip_degenerate: s.skip_degenerate,
        partial: a.partial,
        name: a.name.clone(),
    };
    let report = with_jobs(a.common.jobs, || report::build_report(&pair, &opts))?;
    if let Some(svg) = &a.plot {
        let temporal = with_jobs(a.common.jobs, || {
            let p = perceptual::to_perceptual_trajectory(pair.test(), &s.perceptual)?;
            let i = perceptual::to_intensity_trajectory(pair.test(), s.perceptual.crop, s.perceptual.downscale)?;
            Ok((
                straightness::curvature_series_with(&p, s.skip_degenerate)?,
                straightness::curvature_series_with(&i, s.skip_degenerate)?,
            ))
        });
        match temporal {
            Ok((p, i)) => write_output(Some(svg), &plot::straightness_svg(&[&p, &i], &report.meta.name))?,
            Err(e) => log::warn!("straightness plot skipped: {e}"),
        }
    }
    write_output(a.output.as_deref(), &report.to_json())
}

fn cmd_compare(a: &CompareArgs) -> Result<()> {
    let format: TableFormat = a.format.parse()?;
    let table = compare::compare_files(&a.reports)?;
    if let Some(svg) = &a.plot {
        let points: Vec<(String, f64, f64)> = table
            .rows
            .iter()
            .filter_map(|r| Some((r.name.clone(), r.values[8]?, r.values[9]?)))
            .collect();
        write_output(Some(svg), &plot::tradeoff_svg(&points, "D_ST vs P_ST"))?;
    }
    write_output(a.output.as_deref(), &table.render(format))
}

fn cmd_profile(a: &ProfileArgs) -> Result<()> {
    let seq = load(&a.seq, &a.common)?;
    let range = a.frames.as_deref().map(parse_range).transpose()?;
    let p = profile::temporal_profile(&seq, a.row, range)?;
    ensure_parent(&a.output)?;
    profile::save_profile(&p, &seq, &a.output)
}

fn cmd_flow(a: &FlowCmdArgs) -> Result<()> {
    let mut o = Overrides::new();
    a.flow_args.overrides(&mut o);
    let s = settings(&a.common, o)?;
    let seq = load(&a.seq, &a.common)?;
    let flows = with_jobs(a.common.jobs, || flow::sequence_flows(&seq, &s.flow))?;
    std::fs::create_dir_all(&a.output).map_err(|e| Error::io(&a.output, e))?;
    for (i, f) in flows.iter().enumerate() {
        flow::write_flo(f, &a.output.join(flow::flo_name(&a.prefix, i + 1)))?;
    }
    Ok(())
}

fn cmd_niqe_fit(a: &NiqeFitArgs) -> Result<()> {
    let mut o = Overrides::new();
    push(&mut o, "niqe.patch_size", &a.patch_size, "--patch-size");
    push(&mut o, "niqe.sharpness_fraction", &a.sharpness_fraction, "--sharpness-fraction");
    let s = settings(&a.common, o)?;
    let corpus: Vec<FrameSequence> = a.corpus.iter().map(|p| load(p, &a.common)).collect::<Result<_>>()?;
    let model = with_jobs(a.common.jobs, || {
        niqe::niqe_fit_sequences(&corpus, s.niqe_patch_size, s.niqe_sharpness_fraction)
    })?;
    ensure_parent(&a.output)?;
    model.save(&a.output)
}

fn cmd_straightness(a: &StraightnessArgs) -> Result<()> {
    let mut o = Overrides::new();
    a.psh.overrides(&mut o);
    let s = settings(&a.common, o)?;
    let seq = load(&a.seq, &a.common)?;
    let (p, i) = with_jobs(a.common.jobs, || {
        let p = perceptual::to_perceptual_trajectory(&seq, &s.perceptual)?;
        let i = perceptual::to_intensity_trajectory(&seq, s.perceptual.crop, s.perceptual.downscale)?;
        Ok((
            straightness::curvature_series_with(&p, s.skip_degenerate)?,
            straightness::curvature_series_with(&i, s.skip_degenerate)?,
        ))
    })?;
    let mut buf = Vec::new();
    straightness::write_csv(&mut buf, &[&p, &i]).map_err(|e| Error::io("<csv>", e))?;
    if let Some(svg) = &a.plot {
        write_output(Some(svg), &plot::straightness_svg(&[&p, &i], seq.name()))?;
    }
    write_output(a.output.as_deref(), &String::from_utf8(buf).expect("utf-8 csv"))
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Compute(a) => cmd_compute(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Profile(a) => cmd_profile(a),
        Command::Flow(a) => cmd_flow(a),
        Command::NiqeFit(a) => cmd_niqe_fit(a),
        Command::Straightness(a) => cmd_straightness(a),
    }
}

/// Parse arguments, run, and map errors to exit codes (2 input, 3 metric,
/// 4 missing external scores).
pub fn main_exit_code() -> i32 {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("stpd: error: {e}");
            e.category().exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn unknown_flag_is_rejected() {
        assert!(Cli::try_parse_from(["stpd", "compare", "a.json", "--bogus"]).is_err());
    }

    #[test]
    fn frame_range_parsing() {
        assert_eq!(parse_range("3:10").unwrap(), 3..10);
        assert!(parse_range("3-10").is_err());
    }
}
