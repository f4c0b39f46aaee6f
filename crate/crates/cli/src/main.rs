use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use changedet_core::benchmark::{emit_summary, metric_cells, run_benchmark, write_csv, CSV_HEADER};
use changedet_core::pipeline::detect;
use changedet_core::raster::{load_pgm, save_pgm, BinaryMap};
use changedet_core::MetricReport;

mod settings;

use settings::{Error, Settings};

pub const OUT_DIR_ENV: &str = "CHANGEDET_OUT_DIR";

#[derive(Parser)]
#[command(
    name = "changedet",
    version,
    about = "Change detection on co-registered image pairs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Detect changes between two PGM images.
    Detect(DetectArgs),
    /// Run the synthetic noise benchmark.
    Bench(BenchArgs),
}

#[derive(Args)]
struct Common {
    /// key = value settings file; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, env = OUT_DIR_ENV)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PipelineFlags {
    /// proposed, baseline or fcm.
    #[arg(long)]
    preset: Option<String>,
    /// log_ratio or gauss_log_ratio.
    #[arg(long)]
    di: Option<String>,
    /// none or srad.
    #[arg(long)]
    denoise: Option<String>,
    /// fcm or mrffcm.
    #[arg(long)]
    classifier: Option<String>,
    #[arg(long)]
    beta0: Option<f64>,
    /// Objective tolerance per pixel.
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// smoothing or as_printed.
    #[arg(long)]
    energy_sign: Option<String>,
    #[arg(long)]
    srad_iters: Option<usize>,
    #[arg(long)]
    srad_dt: Option<f64>,
    /// Lower end of the range the DI is mapped to before SRAD.
    #[arg(long)]
    srad_floor: Option<f64>,
    /// auto or x,y,width,height.
    #[arg(long)]
    srad_roi: Option<String>,
    /// canonical or without_sqrt.
    #[arg(long)]
    icov: Option<String>,
}

#[derive(Args)]
struct DetectArgs {
    #[arg(long)]
    before: PathBuf,
    #[arg(long)]
    after: PathBuf,
    /// Reference change map; enables metrics.csv.
    #[arg(long)]
    reference: Option<PathBuf>,
    #[command(flatten)]
    pipeline: PipelineFlags,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct BenchArgs {
    /// Base seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    repeats: Option<usize>,
    /// Side of the synthetic images.
    #[arg(long)]
    size: Option<usize>,
    /// Comma-separated presets.
    #[arg(long)]
    methods: Option<String>,
    #[command(flatten)]
    pipeline: PipelineFlags,
    #[command(flatten)]
    common: Common,
}

impl PipelineFlags {
    fn apply(&self, s: &mut Settings) {
        s.set("preset", self.preset.as_ref());
        s.set("di", self.di.as_ref());
        s.set("denoise", self.denoise.as_ref());
        s.set("classifier", self.classifier.as_ref());
        s.set("beta0", self.beta0);
        s.set("delta", self.delta);
        s.set("max_iter", self.max_iter);
        s.set("energy_sign", self.energy_sign.as_ref());
        s.set("srad_iters", self.srad_iters);
        s.set("srad_dt", self.srad_dt);
        s.set("srad_floor", self.srad_floor);
        s.set("srad_roi", self.srad_roi.as_ref());
        s.set("icov", self.icov.as_ref());
    }
}

impl Common {
    fn settings(&self) -> Result<Settings, Error> {
        let mut s = match &self.config {
            Some(path) => Settings::load(path)?,
            None => Settings::default(),
        };
        s.set("out", self.out.as_ref().map(|p| p.display()));
        Ok(s)
    }
}

fn out_dir(s: &Settings) -> Result<PathBuf, Error> {
    let dir = PathBuf::from(s.get("out").unwrap_or("."));
    fs::create_dir_all(&dir).map_err(|e| format!("cannot create {}: {e}", dir.display()))?;
    Ok(dir)
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), Error> {
    fs::write(path, contents).map_err(|e| format!("cannot write {}: {e}", path.display()))?;
    log::info!("wrote {}", path.display());
    Ok(())
}

fn run_detect(args: &DetectArgs) -> Result<(), Error> {
    let mut s = args.common.settings()?;
    args.pipeline.apply(&mut s);
    let config = s.pipeline()?;
    let before = load_pgm(&args.before)?;
    let after = load_pgm(&args.after)?;
    let reference = args.reference.as_ref().map(load_pgm).transpose()?;

    let detection = detect(&before, &after, &config)?;
    // everything is evaluated before the first file is written
    let report = match &reference {
        Some(r) => Some(MetricReport::evaluate(
            &detection.map,
            &BinaryMap::from_raster(r),
        )?),
        None => None,
    };

    let dir = out_dir(&s)?;
    let map_path = dir.join("change_map.pgm");
    save_pgm(&detection.map.to_raster(), &map_path)?;
    log::info!("wrote {}", map_path.display());
    println!(
        "changed pixels: {} of {}",
        detection.map.changed_count(),
        detection.map.len()
    );

    if let Some(m) = report {
        let method = s.get("preset").unwrap_or("proposed");
        let csv = format!("{CSV_HEADER}\n{method},none,0,0,{}\n", metric_cells(&m));
        write_file(&dir.join("metrics.csv"), csv.as_bytes())?;
        println!(
            "OE {:.4}%  PCC {:.4}%  KC {}  RMSE {:.6}  PSNR {:.3} dB",
            m.oe_percent,
            m.pcc_percent,
            m.kc.map_or_else(|| "undefined".into(), |k| format!("{k:.6}")),
            m.rmse,
            m.psnr_db
        );
    }
    Ok(())
}

fn run_bench(args: &BenchArgs) -> Result<(), Error> {
    let mut s = args.common.settings()?;
    args.pipeline.apply(&mut s);
    s.set("seed", args.seed);
    s.set("repeats", args.repeats);
    s.set("size", args.size);
    s.set("methods", args.methods.as_ref());
    let plan = s.plan()?;
    let dir = out_dir(&s)?;

    log::info!(
        "benchmark: {} cells x {} repeats x {} methods, {}x{}, base seed {}",
        plan.grid.len(),
        plan.repeats,
        plan.methods.len(),
        plan.size,
        plan.size,
        plan.base_seed
    );
    let rows = run_benchmark(&plan)?;
    let mut csv = Vec::new();
    write_csv(&rows, &mut csv)?;
    write_file(&dir.join("bench.csv"), &csv)?;
    let summary = emit_summary(&rows)?;
    write_file(&dir.join("summary.txt"), summary.as_bytes())?;
    print!("{summary}");
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Detect(a) => run_detect(a),
        Command::Bench(a) => run_bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
