use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sheetrefine_core::generation::{ENDPOINT_ENV, DEFAULT_GRID_PHRASE};
use sheetrefine_core::mutual_info::{DEFAULT_BINS, DEFAULT_RESOLUTION};
use sheetrefine_core::refine::{DEFAULT_MIN_KEPT, DEFAULT_STRICTNESS};
use sheetrefine_core::{AnalysisConfig, CropSpec, RefineConfig};

mod commands;
mod output;

#[derive(Parser, Debug)]
#[command(name = "sheetrefine", version, about = "Refine character-sheet candidates by mutual information")]
struct Cli {
    /// Worker threads for the MI kernel (default: available parallelism).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Output directory. Every file the command writes goes under it.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Log progress to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Cut a sheet into part images.
    Slice {
        /// Sheet image (PNG or JPEG).
        image: PathBuf,
        #[command(flatten)]
        slicing: SliceArgs,
    },
    /// Score parts by average pairwise MI and drop outliers.
    Refine {
        /// Part images, or a single directory of them.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[command(flatten)]
        refine: RefineArgs,
    },
    /// Generate (or load) a sheet, slice it, refine it and write a training manifest.
    Pipeline(PipelineArgs),
    /// Compute prompt similarity and identity consistency from embeddings.
    Eval {
        /// JSON array of image embeddings.
        #[arg(long)]
        images: PathBuf,
        /// JSON file holding the prompt's text embedding.
        #[arg(long)]
        text: PathBuf,
    },
    /// Render a synthetic sheet with known outlier cells.
    Synth(SynthArgs),
}

#[derive(Args, Debug, Clone)]
#[group(required = true, multiple = false)]
pub struct SliceArgs {
    /// Uniform grid as ROWSxCOLS, e.g. 2x3.
    #[arg(long, value_parser = parse_grid)]
    grid: Option<(u32, u32)>,
    /// Crop-spec JSON file.
    #[arg(long)]
    crop_spec: Option<PathBuf>,
}

impl SliceArgs {
    pub fn spec(&self) -> sheetrefine_core::Result<CropSpec> {
        match (&self.grid, &self.crop_spec) {
            (Some((rows, cols)), _) => {
                let spec = CropSpec::Uniform { rows: *rows, cols: *cols };
                spec.validate()?;
                Ok(spec)
            }
            (None, Some(path)) => sheetrefine_core::grid::parse_crop_spec(path),
            (None, None) => unreachable!("clap enforces one slicing mode"),
        }
    }
}

fn parse_grid(s: &str) -> Result<(u32, u32), String> {
    let (r, c) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected ROWSxCOLS, got {s:?}"))?;
    let rows = r.trim().parse().map_err(|e| format!("bad row count {r:?}: {e}"))?;
    let cols = c.trim().parse().map_err(|e| format!("bad column count {c:?}: {e}"))?;
    Ok((rows, cols))
}

#[derive(Args, Debug, Clone)]
pub struct RefineArgs {
    /// Histogram bins per axis (2-256).
    #[arg(long, default_value_t = DEFAULT_BINS)]
    bins: usize,
    /// Square analysis resolution parts are resampled to.
    #[arg(long, default_value_t = DEFAULT_RESOLUTION)]
    resolution: u32,
    /// Strictness k: keep parts scoring at least mean - k*stddev.
    #[arg(long, default_value_t = DEFAULT_STRICTNESS)]
    strictness: f64,
    /// Include each part's self-MI (its entropy) in its score.
    #[arg(long)]
    include_self: bool,
    /// Repeat the filter on survivors until nothing more is removed.
    #[arg(long)]
    iterative: bool,
    /// Never keep fewer than this many parts.
    #[arg(long, default_value_t = DEFAULT_MIN_KEPT)]
    min_kept: usize,
}

impl RefineArgs {
    pub fn config(&self) -> RefineConfig {
        RefineConfig {
            strictness: self.strictness,
            include_self_pairs: self.include_self,
            iterative: self.iterative,
            min_kept: self.min_kept,
            analysis: AnalysisConfig { bins: self.bins, resolution: Some(self.resolution) },
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct PipelineArgs {
    /// Character description.
    #[arg(long)]
    character: String,
    /// Style description (may be empty).
    #[arg(long, default_value = "")]
    style: String,
    /// Phrase asking for a multi-view grid.
    #[arg(long, default_value = DEFAULT_GRID_PHRASE)]
    grid_phrase: String,
    /// Generation service URL.
    #[arg(long, env = ENDPOINT_ENV)]
    gen_endpoint: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1024)]
    width: u32,
    #[arg(long, default_value_t = 1024)]
    height: u32,
    #[arg(long, default_value_t = 30)]
    steps: u32,
    #[arg(long, default_value_t = 7.5)]
    guidance: f64,
    /// Request timeout in seconds.
    #[arg(long, default_value_t = 120)]
    gen_timeout: u64,
    /// Retries after a network failure or 5xx (0 or 1).
    #[arg(long, default_value_t = 1)]
    gen_retries: u32,
    /// Use this sheet instead of calling the generation service.
    #[arg(long)]
    sheet: Option<PathBuf>,
    #[command(flatten)]
    slicing: SliceArgs,
    #[command(flatten)]
    refine: RefineArgs,
    /// Write `created_at: null` so runs are byte-comparable.
    #[arg(long)]
    no_timestamp: bool,
}

#[derive(Args, Debug, Clone)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 2)]
    rows: u32,
    #[arg(long, default_value_t = 3)]
    cols: u32,
    /// Comma-separated row-major outlier cell indices.
    #[arg(long, value_delimiter = ',')]
    outliers: Vec<usize>,
    /// Per-channel noise amplitude (0-128).
    #[arg(long, default_value_t = 10)]
    noise: u8,
    /// Maximum translation jitter in pixels.
    #[arg(long, default_value_t = 2)]
    jitter: u32,
    /// Cell side in pixels.
    #[arg(long, default_value_t = 128)]
    cell_size: u32,
}

fn configure_threads(threads: Option<usize>) -> anyhow::Result<()> {
    let Some(n) = threads else { return Ok(()) };
    if n == 0 {
        anyhow::bail!("--threads must be at least 1");
    }
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    #[cfg(not(feature = "parallel"))]
    log::info!("built without the parallel feature; ignoring --threads {n}");
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    configure_threads(cli.threads)?;
    let out = cli.out.ok_or_else(|| anyhow::anyhow!("--out <DIR> is required"))?;
    std::fs::create_dir_all(&out)?;
    match cli.command {
        Command::Slice { image, slicing } => commands::slice(&image, &slicing.spec()?, &out).map(|_| ()),
        Command::Refine { inputs, refine } => commands::refine(&inputs, &refine.config(), &out).map(|_| ()),
        Command::Pipeline(args) => commands::pipeline(&args, &out),
        Command::Eval { images, text } => commands::eval(&images, &text, &out),
        Command::Synth(args) => commands::synth(&args, &out),
    }
}

/// 0 success, 1 user/input error, 2 internal invariant violation.
fn exit_code(err: &anyhow::Error) -> u8 {
    let internal = err
        .chain()
        .filter_map(|e| e.downcast_ref::<sheetrefine_core::Error>())
        .any(sheetrefine_core::Error::is_internal);
    if internal {
        2
    } else {
        1
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let level = if cli.verbose { "debug" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
