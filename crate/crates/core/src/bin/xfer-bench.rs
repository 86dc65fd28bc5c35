use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use log::{info, warn};

use xfer_energy::bench::{
    emit_report, plot_data, run_experiment, write_report, ExperimentConfig, FigureKind, Mode, ReportFormat,
    TraceSource,
};
use xfer_energy::datasets::fixture::{Fault, FixtureOptions, FixtureServer};
use xfer_energy::datasets::{builtin_spec, generate_dataset, parse_scale};
use xfer_energy::scenario::Scenario;
use xfer_energy::{Error, Result};

/// Sweep concurrency, parallelism and I/O size over a live server or the
/// simulator and report throughput and energy per 100 MB.
#[derive(Debug, Parser)]
#[command(name = "xfer-bench", version)]
struct Args {
    /// live or sim; omit together with --fixture to only serve files
    #[arg(long)]
    mode: Option<Mode>,
    /// HTML, IMAGE, VIDEO, 32GB, 3GB or 10GB
    #[arg(long)]
    dataset: Option<String>,
    /// Fraction of the dataset, e.g. 0.25 or 1/64
    #[arg(long, value_parser = parse_scale)]
    scale: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_delimiter = ',', default_value = "1,2,4,8,16,32")]
    cc: Vec<u32>,
    #[arg(long, value_delimiter = ',', default_value = "1,2,4,8,16,32")]
    p: Vec<u32>,
    /// I/O request sizes; bytes or with a K/KB suffix
    #[arg(long, value_delimiter = ',', value_parser = parse_io, default_value = "1K,2K,4K,8K,16K,32K,64K")]
    io: Vec<u32>,
    #[arg(long, default_value_t = 5)]
    reps: u32,
    /// Base URL of the file server (live), or bind address for --fixture
    #[arg(long)]
    server: Option<String>,
    /// Preset name (sydney-wifi, sydney-lte, frankfurt-wifi, chameleon-wifi) or TOML path
    #[arg(long)]
    scenario: Option<String>,
    /// Directory of captured power traces; synthetic traces when omitted
    #[arg(long)]
    trace_dir: Option<PathBuf>,
    /// Report path; stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "csv")]
    format: ReportFormat,
    /// throughput_vs_cc, energy_vs_cc, throughput_vs_p, energy_vs_p or surface_cc_p
    #[arg(long)]
    plot: Option<FigureKind>,
    /// serve, or fault:<n> to drop every response after n body bytes
    #[arg(long, value_parser = parse_fixture)]
    fixture: Option<FixtureMode>,
    /// Fixture ignores Range headers
    #[arg(long)]
    no_ranges: bool,
    /// Seconds between live repetitions
    #[arg(long)]
    cooldown: Option<f64>,
}

#[derive(Debug, Clone)]
enum FixtureMode {
    Serve,
    Fault(u64),
}

fn parse_fixture(s: &str) -> std::result::Result<FixtureMode, String> {
    if s == "serve" {
        return Ok(FixtureMode::Serve);
    }
    s.strip_prefix("fault:")
        .and_then(|n| n.parse().ok())
        .map(FixtureMode::Fault)
        .ok_or_else(|| format!("expected `serve` or `fault:<bytes>`, got `{s}`"))
}

fn parse_io(s: &str) -> std::result::Result<u32, String> {
    let t = s.trim().to_ascii_uppercase();
    let (digits, mult) = if let Some(d) = t.strip_suffix("KB").or_else(|| t.strip_suffix('K')) {
        (d, 1024)
    } else {
        (t.as_str(), 1)
    };
    digits
        .trim()
        .parse::<u32>()
        .ok()
        .and_then(|v| v.checked_mul(mult))
        .filter(|&v| v > 0)
        .ok_or_else(|| format!("bad I/O size `{s}`"))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = match Args::try_parse() {
        Ok(args) => args,
        Err(e) => {
            let _ = e.print();
            // exit code 2 is reserved for partial sweeps
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

/// `Ok(false)` when some cells failed.
fn run(args: Args) -> Result<bool> {
    let scenario = args.scenario.as_deref().map(Scenario::resolve).transpose()?;
    let defaults = scenario.clone().unwrap_or_else(Scenario::sydney_wifi);
    let dataset = args.dataset.clone().unwrap_or(defaults.dataset.name.clone());
    let scale = args.scale.unwrap_or(defaults.dataset.scale);
    let seed = args.seed.unwrap_or(defaults.dataset.seed);

    let fixture = match &args.fixture {
        Some(mode) => Some(start_fixture(&args, mode, &dataset, scale, seed)?),
        None => None,
    };
    let mode = match (args.mode, &fixture) {
        (Some(m), _) => m,
        (None, Some((server, _))) => {
            println!("{}", server.base_url());
            let (server, _dir) = fixture.unwrap();
            server.serve_forever();
            return Ok(true);
        }
        (None, None) => Mode::Sim,
    };

    let mut config = match mode {
        Mode::Sim => ExperimentConfig::sim(defaults),
        Mode::Live => {
            let server = match (&fixture, &args.server) {
                (Some((f, _)), _) => f.base_url(),
                (None, Some(url)) => url.clone(),
                (None, None) => return Err(Error::Config("live mode needs --server or --fixture".into())),
            };
            let mut c = ExperimentConfig::live(server, &dataset, scale);
            c.scenario = scenario;
            c
        }
    };
    config.dataset = dataset;
    config.scale = scale;
    config.seed = seed;
    config = config.with_grid(&args.cc, &args.p, &args.io).with_repetitions(args.reps);
    if !(5..=10).contains(&args.reps) {
        warn!("{} repetitions is outside the usual 5 to 10", args.reps);
    }
    if let Some(dir) = &args.trace_dir {
        config.trace_source = TraceSource::Dir(dir.clone());
    }
    config.cooldown_s = args.cooldown;

    info!("running {:?} sweep over {} cells", config.mode, config.plans()?.len());
    let result = run_experiment(&config)?;
    for f in &result.failed {
        warn!("cell cc={} p={} io={} failed: {}", f.cc, f.p, f.io_bytes, f.reason);
    }
    if result.cells.is_empty() {
        return Err(Error::Config(format!("all {} cells failed", result.failed.len())));
    }

    match &args.out {
        Some(path) => emit_report(&result, args.format, path)?,
        None => write_report(&result, args.format, std::io::stdout().lock())?,
    }
    if let Some(kind) = args.plot {
        let text = plot_data(&result, kind)?;
        match &args.out {
            Some(out) => {
                let path = plot_path(out, kind);
                std::fs::write(&path, text).map_err(|e| Error::PathIo { path, source: e })?;
            }
            None => print!("\n{text}"),
        }
    }
    Ok(result.is_complete())
}

/// `results.csv` with `energy_vs_cc` becomes `results_energy_vs_cc.dat`.
fn plot_path(out: &Path, kind: FigureKind) -> PathBuf {
    let stem = out.file_stem().map_or("sweep".into(), |s| s.to_string_lossy().into_owned());
    out.with_file_name(format!("{stem}_{}.dat", kind.name()))
}

fn start_fixture(
    args: &Args,
    mode: &FixtureMode,
    dataset: &str,
    scale: f64,
    seed: u64,
) -> Result<(FixtureServer, ScratchDir)> {
    let dir = std::env::temp_dir().join(format!("xfer-bench-data-{}", std::process::id()));
    let spec = builtin_spec(dataset)?;
    let manifest = generate_dataset(&spec, seed, scale, &dir)?;
    info!("generated {} files ({} bytes) in {}", manifest.entries.len(), manifest.total_bytes(), dir.display());
    let options = FixtureOptions {
        ranges: !args.no_ranges,
        fault: match mode {
            FixtureMode::Serve => None,
            FixtureMode::Fault(n) => Some(Fault::always(*n)),
        },
    };
    let bind = match (&args.mode, &args.server) {
        // serve-only mode may take a fixed address
        (None, Some(addr)) => addr.trim_start_matches("http://").trim_end_matches('/').to_string(),
        _ => "127.0.0.1:0".to_string(),
    };
    let server = FixtureServer::bind(&bind, &dir, options)?;
    Ok((server, ScratchDir(dir)))
}

/// Generated fixture data, removed on exit.
struct ScratchDir(PathBuf);

impl Drop for ScratchDir {
    fn drop(&mut self) {
        let _ = std::fs::remove_dir_all(&self.0);
    }
}
