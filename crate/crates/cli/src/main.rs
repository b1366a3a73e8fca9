//! `msgc`: batch front end for multiscale Granger causality.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use msgc::io::{parse_scales, write_series_csv, CsvOptions};
use msgc::pipeline::{self, AnalysisConfig, DetrendLambda, Figure, MonteCarloConfig, PreprocessConfig};
use msgc::rescale::{design_fir_hamming, DEFAULT_FILTER_ORDER};
use msgc::surrogate::{surrogate_set, SurrogateConfig};
use msgc::var_model::{simulate_benchmark, Generator, SimulationConfig};
use msgc::EstimationMode;

#[derive(Parser)]
#[command(name = "msgc", version, about = "Multiscale Granger causality via state-space models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Multiscale GC of a CSV dataset, with optional surrogate bands.
    Analyze(AnalyzeArgs),
    /// Simulate one of the benchmark processes to CSV.
    Simulate(SimulateArgs),
    /// Write the lowpass FIR coefficients used at a given scale.
    DesignFilter(DesignFilterArgs),
    /// Exact curves and Monte Carlo estimate tables for a benchmark figure.
    Reproduce(ReproduceArgs),
    /// Analysis with IAAFT significance bands (100 surrogates unless set).
    SurrogateTest(SurrogateTestArgs),
}

#[derive(Args, Clone)]
struct AnalysisArgs {
    /// Input CSV with a header row.
    input: PathBuf,
    /// First column is a monotone time axis.
    #[arg(long)]
    time_column: bool,
    /// Comma-separated channel labels to keep, in order.
    #[arg(long, value_delimiter = ',')]
    channels: Option<Vec<String>>,
    /// Scale list, e.g. `1..20` or `1,2,5..8`.
    #[arg(long, default_value = "1..10")]
    scales: String,
    #[arg(long, default_value_t = DEFAULT_FILTER_ORDER)]
    filter_order: usize,
    #[arg(long, default_value_t = pipeline::DEFAULT_P_MAX)]
    pmax: usize,
    /// ss-estimated or naive.
    #[arg(long, default_value = "ss-estimated")]
    mode: EstimationMode,
    /// Remove a piecewise-linear trend (lambda = 10 N unless --detrend-lambda is given).
    #[arg(long)]
    detrend: bool,
    /// l1 trend-filter penalty; implies --detrend.
    #[arg(long)]
    detrend_lambda: Option<f64>,
    /// Resample onto a uniform grid with this spacing (time-axis units).
    #[arg(long)]
    resample_dt: Option<f64>,
    /// Zero mean, unit variance per channel.
    #[arg(long)]
    normalize: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory for gc.csv and report.txt.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    common: AnalysisArgs,
    /// Number of IAAFT surrogates for significance bands (0 = none).
    #[arg(long, default_value_t = 0)]
    surrogates: usize,
}

#[derive(Args)]
struct SurrogateTestArgs {
    #[command(flatten)]
    common: AnalysisArgs,
    #[arg(long, default_value_t = 100)]
    surrogates: usize,
    /// Also write the first K surrogate datasets as surrogate_NNN.csv.
    #[arg(long, default_value_t = 0)]
    write_surrogates: usize,
}

#[derive(Args)]
struct SimulateArgs {
    /// uni, bi or mix.
    #[arg(long, default_value = "uni")]
    generator: Generator,
    #[arg(long, default_value_t = 500)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV file.
    #[arg(long, default_value = "simulated.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct DesignFilterArgs {
    #[arg(long, default_value_t = DEFAULT_FILTER_ORDER)]
    filter_order: usize,
    /// Scale factor tau; the cutoff is 1/(2 tau).
    #[arg(long, default_value_t = 2)]
    scale: usize,
    /// Drop leading and trailing zero taps.
    #[arg(long)]
    trim: bool,
    #[arg(long, default_value = "filter.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct ReproduceArgs {
    /// fig2, fig3 or fig4.
    figure: Figure,
    #[arg(long, default_value_t = 100)]
    realizations: usize,
    #[arg(long)]
    scales: Option<String>,
    #[arg(long)]
    filter_order: Option<usize>,
    #[arg(long)]
    pmax: Option<usize>,
    /// Seed of the first realization.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

fn analysis_config(args: &AnalysisArgs, surrogates: usize) -> Result<AnalysisConfig> {
    let mut cfg = AnalysisConfig::new(&args.input, &args.out);
    cfg.csv = CsvOptions {
        time_column: args.time_column,
    };
    cfg.channels = args.channels.clone();
    cfg.scales = parse_scales(&args.scales).context("--scales")?;
    cfg.filter_order = args.filter_order;
    cfg.p_max = args.pmax;
    cfg.mode = args.mode;
    cfg.seed = args.seed;
    cfg.preprocess = PreprocessConfig {
        detrend: match (args.detrend, args.detrend_lambda) {
            (_, Some(l)) => Some(DetrendLambda::Value(l)),
            (true, None) => Some(DetrendLambda::Default),
            (false, None) => None,
        },
        resample_dt: args.resample_dt,
        normalize: args.normalize,
    };
    if surrogates > 0 {
        cfg.surrogates = Some(SurrogateConfig {
            n_surrogates: surrogates,
            seed: args.seed,
            ..SurrogateConfig::default()
        });
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run_analysis(cfg: &AnalysisConfig) -> Result<()> {
    let report = pipeline::run(cfg)?;
    for w in &report.warnings {
        log::warn!("{w}");
    }
    if let Some(b) = &report.bands {
        println!(
            "{} of {} cells significant ({} surrogates used, {} skipped)",
            b.cells.iter().filter(|c| c.significant).count(),
            b.cells.len(),
            b.surrogates_used,
            b.surrogates_skipped
        );
    }
    println!("wrote {}", cfg.output_dir.display());
    Ok(())
}

fn simulate(args: &SimulateArgs) -> Result<()> {
    let cfg = SimulationConfig {
        n_samples: args.samples,
        seed: args.seed,
        ..SimulationConfig::new(args.generator)
    };
    let data = simulate_benchmark(&cfg)?;
    write_series_csv(create(&args.out)?, &data)?;
    Ok(())
}

fn design_filter(args: &DesignFilterArgs) -> Result<()> {
    let mut filter = design_fir_hamming(args.filter_order, args.scale)?;
    if args.trim {
        filter = filter.trimmed();
    }
    let mut w = create(&args.out)?;
    writeln!(w, "l,b")?;
    for (l, b) in filter.coefficients().iter().enumerate() {
        writeln!(w, "{l},{b}")?;
    }
    w.flush()?;
    Ok(())
}

fn reproduce(args: &ReproduceArgs) -> Result<()> {
    let mut cfg = MonteCarloConfig::for_figure(args.figure);
    cfg.realizations = args.realizations;
    cfg.simulation.seed = args.seed;
    if let Some(s) = &args.scales {
        cfg.scales = parse_scales(s).context("--scales")?;
    }
    if let Some(q) = args.filter_order {
        cfg.filter_order = q;
    }
    if let Some(p) = args.pmax {
        cfg.p_max = p;
    }
    let result = pipeline::monte_carlo(&cfg)?;
    pipeline::write_monte_carlo(&result, &args.out)?;
    for e in &result.estimates {
        if e.failures > 0 {
            log::warn!("{}: {} of {} realizations failed", e.mode, e.failures, cfg.realizations);
        }
    }
    println!("wrote {}", args.out.display());
    Ok(())
}

fn surrogate_test(args: &SurrogateTestArgs) -> Result<()> {
    if args.surrogates == 0 {
        bail!("--surrogates must be positive");
    }
    let cfg = analysis_config(&args.common, args.surrogates)?;
    run_analysis(&cfg)?;
    if args.write_surrogates > 0 {
        let data = msgc::io::load_csv(&cfg.input, &cfg.csv)?;
        let (data, _) = pipeline::prepare(&data, &cfg)?;
        let scfg = cfg.surrogates.as_ref().expect("surrogates configured");
        for k in 0..args.write_surrogates.min(args.surrogates) {
            let s = surrogate_set(&data, scfg.max_iterations, scfg.seed, k as u64)?;
            write_series_csv(create(&cfg.output_dir.join(format!("surrogate_{k:03}.csv")))?, &s)?;
        }
    }
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let res = match &cli.command {
        Command::Analyze(a) => analysis_config(&a.common, a.surrogates).and_then(|c| run_analysis(&c)),
        Command::Simulate(a) => simulate(a),
        Command::DesignFilter(a) => design_filter(a),
        Command::Reproduce(a) => reproduce(a),
        Command::SurrogateTest(a) => surrogate_test(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
