use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cellpmb::config::Config;
use cellpmb::error::{Error, Result};
use cellpmb::filter::{FilterKind, FilterSetup, Tracker};
use cellpmb::gospa::{gospa, GospaParams};
use cellpmb::harness::{self, Experiment};
use cellpmb::io;
use cellpmb::rng::{stream_id, stream_rng, Purpose};
use cellpmb::scenario::{frame_at, generate};

/// Multi-object tracking on thresholded cell measurements.
#[derive(Parser)]
#[command(name = "cellpmb", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the Monte-Carlo comparison and write curves.csv and summary.csv.
    Run(RunArgs),
    /// Score an estimates file against a truth file with GOSPA, per step.
    Score(ScoreArgs),
    /// Validate a configuration file and print it with defaults filled in.
    CheckConfig {
        #[arg(long)]
        config: PathBuf,
    },
    /// Print the default configuration.
    DefaultConfig {
        /// Reference particle counts and replicate count.
        #[arg(long)]
        full_scale: bool,
    },
    /// Write the ground truth and thresholded frames of one replicate,
    /// and optionally the estimates of one filter.
    Dump(DumpArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Configuration file; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// pmb-cm, pmb-am, pmb or all.
    #[arg(long)]
    filter: Option<String>,
    /// Comma-separated thresholds, e.g. 2,4,6.
    #[arg(long, value_delimiter = ',')]
    eta: Option<Vec<f64>>,
    /// Number of replicates.
    #[arg(long)]
    runs: Option<usize>,
    /// Master seed; every random stream derives from it.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "results")]
    out: PathBuf,
    /// Reference particle counts and 1000 replicates (overridden by --runs).
    #[arg(long)]
    full_scale: bool,
    /// Worker threads; 0 uses one per core.
    #[arg(long)]
    threads: Option<usize>,
    /// Stop each replicate after this step.
    #[arg(long)]
    stop_after: Option<u32>,
}

#[derive(Args)]
struct ScoreArgs {
    /// CSV with step, p1 and p2 columns.
    #[arg(long)]
    truth: PathBuf,
    /// CSV with step, p1 and p2 columns.
    #[arg(long)]
    estimates: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    p: f64,
    #[arg(long, default_value_t = 20.0)]
    c: f64,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DumpArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    replicate: u64,
    #[arg(long, default_value_t = 4.0)]
    eta: f64,
    /// Also run this filter and write estimates.csv.
    #[arg(long)]
    filter: Option<FilterKind>,
    #[arg(long)]
    out: PathBuf,
}

fn load(path: Option<&Path>) -> Result<Config> {
    match path {
        Some(p) => Config::load(p),
        None => Ok(Config::default()),
    }
}

fn parse_filters(s: &str) -> Result<Vec<FilterKind>> {
    if s == "all" {
        return Ok(FilterKind::ALL.to_vec());
    }
    s.split(',').map(|f| f.trim().parse()).collect()
}

fn cmd_run(a: RunArgs) -> Result<()> {
    let mut config = load(a.config.as_deref())?;
    if a.full_scale {
        config = config.full_scale();
    }
    let h = &mut config.harness;
    if let Some(f) = &a.filter {
        h.filters = parse_filters(f)?;
    }
    if let Some(e) = a.eta {
        h.etas = e;
    }
    if let Some(r) = a.runs {
        h.runs = r;
    }
    if let Some(s) = a.seed {
        h.seed = s;
    }
    if let Some(t) = a.threads {
        h.threads = t;
    }
    if let Some(s) = a.stop_after {
        h.stop_after = s;
    }
    let exp = Experiment::from_config(&config)?;
    eprintln!(
        "running {} filter(s) x {} threshold(s), {} replicate(s)",
        exp.filters.len(),
        exp.etas.len(),
        exp.runs
    );
    let report = harness::run(&exp)?;
    report.write(&a.out)?;
    for c in &report.cells {
        eprintln!(
            "{:>7} eta={:<4} detections={:<10.3} gospa={:<8.3} runtime={:.3}s",
            c.filter.name(),
            c.eta,
            c.mean_detections(),
            c.mean_total_gospa(),
            c.mean_runtime_s()
        );
    }
    eprintln!("wrote {}", a.out.display());
    Ok(())
}

fn cmd_score(a: ScoreArgs) -> Result<()> {
    let params = GospaParams {
        p: a.p,
        c: a.c,
        ..Default::default()
    };
    params.validate()?;
    let truth = io::read_positions(io::open(&a.truth)?, &a.truth.display().to_string())?;
    let est = io::read_positions(io::open(&a.estimates)?, &a.estimates.display().to_string())?;
    let mut steps: Vec<u32> = truth.keys().chain(est.keys()).copied().collect();
    steps.sort_unstable();
    steps.dedup();
    let none = Vec::new();
    let scores = steps
        .into_iter()
        .map(|k| {
            let g = gospa(truth.get(&k).unwrap_or(&none), est.get(&k).unwrap_or(&none), &params)?;
            Ok((k, g))
        })
        .collect::<Result<Vec<_>>>()?;
    match a.out {
        Some(p) => io::write_scores(&scores, BufWriter::new(File::create(p)?)),
        None => io::write_scores(&scores, std::io::stdout().lock()),
    }
}

fn cmd_check_config(path: &Path) -> Result<()> {
    let config = Config::load(path)?;
    Experiment::from_config(&config)?;
    print!("{}", config.to_toml());
    Ok(())
}

fn cmd_dump(a: DumpArgs) -> Result<()> {
    let config = load(a.config.as_deref())?;
    config.validate()?;
    let model = config.amplitude()?;
    let truth = generate(&config.scenario, a.seed, a.replicate)?;
    let frames_dir = a.out.join("frames");
    std::fs::create_dir_all(&frames_dir)?;
    io::write_truth(&truth, BufWriter::new(File::create(a.out.join("truth.csv"))?))?;

    let mut tracker = match a.filter {
        Some(kind) => {
            let setup = FilterSetup {
                kind,
                geometry: truth.geometry,
                amplitude: model,
                eta: a.eta,
                dt: config.scenario.dt,
                params: config.filter.clone(),
                point: config.point_filters.clone(),
                association: config.association.clone(),
            };
            let stream = stream_id(&[kind as u64, a.eta.to_bits()]);
            Some(Tracker::new(setup, stream_rng(a.seed, a.replicate, Purpose::Filter, stream))?)
        }
        None => None,
    };
    let mut estimates = Vec::new();
    for k in 1..=truth.n_steps {
        let frame = frame_at(&truth, k, &model, a.eta, a.seed, a.replicate)?;
        let mut out = BufWriter::new(File::create(frames_dir.join(format!("frame_{k:04}.csv")))?);
        io::write_frame(&frame, &mut out)?;
        out.flush()?;
        if let Some(t) = tracker.as_mut() {
            estimates.push((k, t.step(&frame)?.estimates));
        }
    }
    if tracker.is_some() {
        let out = BufWriter::new(File::create(a.out.join("estimates.csv"))?);
        io::write_estimates(estimates.iter().map(|(k, e)| (*k, e.as_slice())), out)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Score(a) => cmd_score(a),
        Command::CheckConfig { config } => cmd_check_config(&config),
        Command::DefaultConfig { full_scale } => {
            let c = Config::default();
            print!("{}", if full_scale { c.full_scale() } else { c }.to_toml());
            Ok(())
        }
        Command::Dump(a) => cmd_dump(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn exit_code(e: &Error) -> ExitCode {
    if e.is_validation() {
        ExitCode::from(2)
    } else {
        ExitCode::from(1)
    }
}
