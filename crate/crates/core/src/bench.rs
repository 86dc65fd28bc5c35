//! Parameter sweeps over (cc, p, io) with repetitions, aggregated into
//! per-cell mean and sample standard deviation, plus report and plot-data
//! writers.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datasets::{builtin_spec, dataset_urls, Manifest, KB};
use crate::energy::{
    detect_transfer_window, energy_report, estimate_base_power, EnergyReport, PowerTrace, TailParams, TransferWindow,
};
use crate::engine::{FileJob, SystemClock, TransferEngine, TransferPlan, TransferResult};
use crate::error::{Error, Result};
use crate::netsim::{self, DevicePowerModel, EventKind, TransferEvent};
use crate::scenario::Scenario;
use crate::tuner::GridPoint;

pub const DEFAULT_LEVELS: [u32; 6] = [1, 2, 4, 8, 16, 32];
pub const DEFAULT_IO_BYTES: [u32; 7] = [KB as u32, 2 * KB as u32, 4 * KB as u32, 8 * KB as u32, 16 * KB as u32, 32 * KB as u32, 64 * KB as u32];
pub const DEFAULT_REPETITIONS: u32 = 5;
pub const LIVE_COOLDOWN_S: f64 = 5.0;
pub const REPORT_CSV_HEADER: &str = "cc,p,io_bytes,mean_mbps,sd_mbps,mean_j_per_100mb,sd_j,runs";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Live,
    Sim,
}

impl FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "live" => Ok(Self::Live),
            "sim" => Ok(Self::Sim),
            other => Err(Error::Config(format!("unknown mode `{other}`"))),
        }
    }
}

/// Where live-mode power traces come from.
#[derive(Debug, Clone, PartialEq)]
pub enum TraceSource {
    /// Built from the engine's per-file timestamps and the scenario's power model.
    Synthetic,
    /// Meter captures named `cc{cc}_p{p}_io{io}_rep{r}.csv` (r from 1).
    Dir(PathBuf),
}

/// How a captured trace's clock maps onto the transfer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TraceAlignment {
    /// Find the transfer in the trace by its power signature; base power
    /// comes from the first `lead_in_s` seconds.
    Detect { lead_in_s: f64 },
    /// Trace time equals engine time plus this offset.
    EngineOffset(f64),
}

impl Default for TraceAlignment {
    fn default() -> Self {
        Self::Detect { lead_in_s: 3.0 }
    }
}

pub fn trace_file_name(plan: &TransferPlan, rep: u32) -> String {
    format!("cc{}_p{}_io{}_rep{}.csv", plan.concurrency, plan.parallelism, plan.io_request_bytes, rep)
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub dataset: String,
    pub scale: f64,
    pub seed: u64,
    pub cc: Vec<u32>,
    pub p: Vec<u32>,
    pub io: Vec<u32>,
    pub repetitions: u32,
    /// Base URL serving the dataset files (live mode).
    pub server: Option<String>,
    /// Network and power model; sim mode requires it, live mode uses only
    /// its power model for synthetic traces.
    pub scenario: Option<Scenario>,
    pub trace_source: TraceSource,
    pub alignment: TraceAlignment,
    pub tail: TailParams,
    /// Pause between live repetitions; `None` picks the mode default.
    pub cooldown_s: Option<f64>,
    /// Where live downloads land; a temporary directory when unset.
    pub download_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn sim(scenario: Scenario) -> Self {
        Self {
            mode: Mode::Sim,
            dataset: scenario.dataset.name.clone(),
            scale: scenario.dataset.scale,
            seed: scenario.dataset.seed,
            scenario: Some(scenario),
            ..Self::base(Mode::Sim)
        }
    }

    pub fn live(server: impl Into<String>, dataset: &str, scale: f64) -> Self {
        Self {
            dataset: dataset.to_string(),
            scale,
            server: Some(server.into()),
            ..Self::base(Mode::Live)
        }
    }

    fn base(mode: Mode) -> Self {
        Self {
            mode,
            dataset: "HTML".into(),
            scale: 1.0,
            seed: 0,
            cc: DEFAULT_LEVELS.to_vec(),
            p: DEFAULT_LEVELS.to_vec(),
            io: DEFAULT_IO_BYTES.to_vec(),
            repetitions: DEFAULT_REPETITIONS,
            server: None,
            scenario: None,
            trace_source: TraceSource::Synthetic,
            alignment: TraceAlignment::default(),
            tail: TailParams::default(),
            cooldown_s: None,
            download_dir: None,
        }
    }

    pub fn with_grid(mut self, cc: &[u32], p: &[u32], io: &[u32]) -> Self {
        self.cc = cc.to_vec();
        self.p = p.to_vec();
        self.io = io.to_vec();
        self
    }

    pub fn with_repetitions(mut self, reps: u32) -> Self {
        self.repetitions = reps;
        self
    }

    pub fn cooldown(&self) -> f64 {
        self.cooldown_s.unwrap_or(match self.mode {
            Mode::Live => LIVE_COOLDOWN_S,
            Mode::Sim => 0.0,
        })
    }

    /// Every (cc, p, io) combination, ascending, duplicates removed.
    pub fn plans(&self) -> Result<Vec<TransferPlan>> {
        let cc: BTreeSet<u32> = self.cc.iter().copied().collect();
        let p: BTreeSet<u32> = self.p.iter().copied().collect();
        let io: BTreeSet<u32> = self.io.iter().copied().collect();
        let mut plans = Vec::with_capacity(cc.len() * p.len() * io.len());
        for &c in &cc {
            for &q in &p {
                for &i in &io {
                    plans.push(TransferPlan::new(c, q, i)?);
                }
            }
        }
        Ok(plans)
    }

    pub fn validate(&self) -> Result<()> {
        if self.repetitions == 0 {
            return Err(Error::Config("repetitions must be >= 1".into()));
        }
        if self.cc.is_empty() || self.p.is_empty() || self.io.is_empty() {
            return Err(Error::Config("cc, p and io grids must be non-empty".into()));
        }
        if !(self.scale > 0.0 && self.scale <= 1.0) {
            return Err(Error::Config(format!("scale must be in (0, 1], got {}", self.scale)));
        }
        builtin_spec(&self.dataset)?;
        self.plans()?;
        match self.mode {
            Mode::Sim if self.scenario.is_none() => Err(Error::Config("sim mode needs a scenario".into())),
            Mode::Live if self.server.is_none() => Err(Error::Config("live mode needs a server URL".into())),
            _ => Ok(()),
        }?;
        if let Some(s) = &self.scenario {
            s.validate()?;
        }
        Ok(())
    }
}

/// Aggregate of one grid cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub cc: u32,
    pub p: u32,
    pub io_bytes: u32,
    pub mean_mbps: f64,
    pub sd_mbps: f64,
    pub mean_j_per_100mb: f64,
    pub sd_j: f64,
    pub runs: u32,
}

impl CellResult {
    pub fn plan(&self) -> TransferPlan {
        TransferPlan {
            concurrency: self.cc,
            parallelism: self.p,
            io_request_bytes: self.io_bytes,
        }
    }

    fn from_runs(plan: &TransferPlan, runs: &[RunMeasurement]) -> Self {
        let th: Vec<f64> = runs.iter().map(|r| r.throughput_mbps).collect();
        let ej: Vec<f64> = runs.iter().map(|r| r.report.e_per_100mb_j).collect();
        Self {
            cc: plan.concurrency,
            p: plan.parallelism,
            io_bytes: plan.io_request_bytes,
            mean_mbps: mean(&th),
            sd_mbps: sample_sd(&th),
            mean_j_per_100mb: mean(&ej),
            sd_j: sample_sd(&ej),
            runs: runs.len() as u32,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    pub cc: u32,
    pub p: u32,
    pub io_bytes: u32,
    pub reason: String,
}

/// Successful cells sorted by (cc, p, io); failed cells listed apart.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SweepResult {
    pub cells: Vec<CellResult>,
    #[serde(default)]
    pub failed: Vec<CellFailure>,
}

impl SweepResult {
    pub fn is_complete(&self) -> bool {
        self.failed.is_empty()
    }

    pub fn cell(&self, cc: u32, p: u32, io_bytes: u32) -> Option<&CellResult> {
        self.cells.iter().find(|c| c.cc == cc && c.p == p && c.io_bytes == io_bytes)
    }

    pub fn to_grid(&self) -> BTreeMap<TransferPlan, GridPoint> {
        self.cells
            .iter()
            .map(|c| {
                (
                    c.plan(),
                    GridPoint {
                        throughput_mbps: c.mean_mbps,
                        energy_per_100mb_j: c.mean_j_per_100mb,
                    },
                )
            })
            .collect()
    }

    fn sort(&mut self) {
        self.cells.sort_by_key(|c| (c.cc, c.p, c.io_bytes));
        self.failed.sort_by_key(|c| (c.cc, c.p, c.io_bytes));
    }

    /// CSV rows hold successful cells only.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for c in &self.cells {
            w.serialize(c)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: std::io::Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let header = r.headers()?.iter().collect::<Vec<_>>().join(",");
        if header != REPORT_CSV_HEADER {
            return Err(Error::Config(format!("unexpected report header `{header}`")));
        }
        let cells = r.deserialize().collect::<std::result::Result<Vec<CellResult>, _>>()?;
        Ok(Self { cells, failed: Vec::new() })
    }

    pub fn load_csv(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::path_io(path, e))?;
        Self::read_csv(file)
    }
}

/// Accumulates deviations from the first value, so identical runs average
/// to exactly that value.
fn mean(xs: &[f64]) -> f64 {
    let x0 = xs[0];
    x0 + xs.iter().map(|x| x - x0).sum::<f64>() / xs.len() as f64
}

/// Standard deviation with n - 1 in the denominator; 0 for a single run.
fn sample_sd(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|x| (x - m).powi(2)).sum();
    (ss / (xs.len() - 1) as f64).sqrt()
}

/// One repetition's outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct RunMeasurement {
    pub throughput_mbps: f64,
    pub report: EnergyReport,
}

/// Runs every grid cell `repetitions` times. Cells that fail are recorded
/// in [`SweepResult::failed`] and the sweep moves on.
pub fn run_experiment(config: &ExperimentConfig) -> Result<SweepResult> {
    run_experiment_with_runs(config).map(|(result, _)| result)
}

/// Individual runs of each successful cell, in grid order.
pub type CellRuns = Vec<(TransferPlan, Vec<RunMeasurement>)>;

/// [`run_experiment`] that also returns every successful cell's runs.
pub fn run_experiment_with_runs(config: &ExperimentConfig) -> Result<(SweepResult, CellRuns)> {
    config.validate()?;
    let plans = config.plans()?;
    let outcomes: Vec<(TransferPlan, Result<Vec<RunMeasurement>>)> = match config.mode {
        Mode::Sim => {
            let scenario = config.scenario.as_ref().expect("validated");
            let spec = builtin_spec(&config.dataset)?;
            let sizes = crate::datasets::sample_sizes(&spec, config.seed, config.scale)?;
            plans
                .par_iter()
                .map(|plan| (*plan, sim_cell(plan, &sizes, scenario, config)))
                .collect()
        }
        Mode::Live => run_live(config, &plans)?,
    };

    let mut result = SweepResult::default();
    let mut detail = Vec::new();
    for (plan, outcome) in outcomes {
        match outcome {
            Ok(runs) => {
                result.cells.push(CellResult::from_runs(&plan, &runs));
                detail.push((plan, runs));
            }
            Err(e) => {
                warn!("cell {plan:?} failed: {e}");
                result.failed.push(CellFailure {
                    cc: plan.concurrency,
                    p: plan.parallelism,
                    io_bytes: plan.io_request_bytes,
                    reason: e.to_string(),
                });
            }
        }
    }
    result.sort();
    Ok((result, detail))
}

fn sim_cell(
    plan: &TransferPlan,
    sizes: &[u64],
    scenario: &Scenario,
    config: &ExperimentConfig,
) -> Result<Vec<RunMeasurement>> {
    (0..config.repetitions)
        .map(|_| sim_run(plan, sizes, scenario, &config.tail))
        .collect()
}

/// One simulated run, with energy measured from its synthetic trace.
pub fn sim_run(plan: &TransferPlan, sizes: &[u64], scenario: &Scenario, tail: &TailParams) -> Result<RunMeasurement> {
    let sim = netsim::simulate_transfer_with_rate(plan, sizes, &scenario.network, &scenario.power, scenario.trace_rate_hz)?;
    let window = sim.window();
    let report = energy_report(&sim.trace, &window, scenario.power.p_base_w, sim.total_bytes, tail)?;
    Ok(RunMeasurement {
        throughput_mbps: sim.avg_throughput_mbps,
        report,
    })
}

fn run_live(config: &ExperimentConfig, plans: &[TransferPlan]) -> Result<Vec<(TransferPlan, Result<Vec<RunMeasurement>>)>> {
    let server = config.server.as_deref().expect("validated");
    let spec = builtin_spec(&config.dataset)?;
    let manifest = Manifest::compute(&spec, config.seed, config.scale)?;
    let engine = TransferEngine::default();
    let first_url = dataset_urls(server, &manifest)
        .first()
        .map(|(u, _)| u.clone())
        .ok_or(Error::EmptyInput("dataset"))?;
    // fail fast on an unreachable server rather than failing every cell
    engine.probe_range_support(&first_url)?;

    let scratch;
    let download_root = match &config.download_dir {
        Some(d) => d.clone(),
        None => {
            scratch = std::env::temp_dir().join(format!("xfer-bench-{}", std::process::id()));
            scratch.clone()
        }
    };
    let power = config
        .scenario
        .as_ref()
        .map_or_else(DevicePowerModel::wifi, |s| s.power.clone());

    let mut out = Vec::with_capacity(plans.len());
    let mut first_run = true;
    for plan in plans {
        let outcome = live_cell(config, plan, &engine, server, &manifest, &download_root, &power, &mut first_run);
        out.push((*plan, outcome));
    }
    if config.download_dir.is_none() {
        let _ = std::fs::remove_dir_all(&download_root);
    }
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn live_cell(
    config: &ExperimentConfig,
    plan: &TransferPlan,
    engine: &TransferEngine,
    server: &str,
    manifest: &Manifest,
    download_root: &Path,
    power: &DevicePowerModel,
    first_run: &mut bool,
) -> Result<Vec<RunMeasurement>> {
    // a cell with missing captures is skipped before any download
    let traces: Vec<Option<PathBuf>> = (1..=config.repetitions)
        .map(|rep| match &config.trace_source {
            TraceSource::Synthetic => Ok(None),
            TraceSource::Dir(dir) => {
                let path = dir.join(trace_file_name(plan, rep));
                if path.is_file() {
                    Ok(Some(path))
                } else {
                    Err(Error::Config(format!("missing trace file {}", path.display())))
                }
            }
        })
        .collect::<Result<_>>()?;

    let mut runs = Vec::with_capacity(traces.len());
    for trace_path in traces {
        if !*first_run {
            std::thread::sleep(Duration::from_secs_f64(config.cooldown()));
        }
        *first_run = false;

        let run_dir = download_root.join(format!(
            "cc{}_p{}_io{}",
            plan.concurrency, plan.parallelism, plan.io_request_bytes
        ));
        std::fs::create_dir_all(&run_dir).map_err(|e| Error::path_io(&run_dir, e))?;
        let jobs: Vec<FileJob> = dataset_urls(server, manifest)
            .into_iter()
            .zip(&manifest.entries)
            .map(|((url, rel), entry)| {
                FileJob::new(url, run_dir.join(rel))
                    .with_expected_bytes(entry.bytes)
                    .with_checksum(entry.digest.clone())
            })
            .collect();
        let clock = SystemClock::new();
        let result = engine.execute(&jobs, plan, &clock);
        let _ = std::fs::remove_dir_all(&run_dir);
        let result = result?;
        if let Some(f) = result.failures.first() {
            return Err(Error::Http {
                url: f.source_url.clone(),
                message: format!("{} of {} files failed: {}", result.failures.len(), jobs.len(), f.reason),
            });
        }

        let report = match trace_path {
            None => synthetic_live_report(&result, power, &config.tail)?,
            Some(path) => measured_report(&PowerTrace::load(&path)?, &result, config.alignment, &config.tail)?,
        };
        info!(
            "cc={} p={} io={}: {:.2} Mbps, {:.2} J/100MB",
            plan.concurrency, plan.parallelism, plan.io_request_bytes, result.avg_throughput_mbps, report.e_per_100mb_j
        );
        runs.push(RunMeasurement {
            throughput_mbps: result.avg_throughput_mbps,
            report,
        });
    }
    Ok(runs)
}

/// Connection open/close events implied by the engine's per-file records,
/// shifted so the batch starts at zero.
pub fn events_from_transfer(result: &TransferResult) -> Vec<TransferEvent> {
    let mut events = Vec::new();
    for f in &result.files {
        let streams = f.streams.max(1) as usize;
        for chunk in 0..streams {
            let share = f.bytes / streams as u64 + u64::from((chunk as u64) < f.bytes % streams as u64);
            events.push(TransferEvent {
                t: f.start_s - result.t_start_s,
                kind: EventKind::ConnectionOpened { file: f.index, chunk },
            });
            events.push(TransferEvent {
                t: f.end_s - result.t_start_s,
                kind: EventKind::ConnectionClosed {
                    file: f.index,
                    chunk,
                    bytes: share,
                },
            });
        }
    }
    events.sort_by(|a, b| a.t.total_cmp(&b.t));
    events
}

fn synthetic_live_report(result: &TransferResult, power: &DevicePowerModel, tail: &TailParams) -> Result<EnergyReport> {
    let events = events_from_transfer(result);
    let duration = result.wall_duration_s.max(1e-6);
    let trace = netsim::synthesize_trace(&events, power, netsim::DEFAULT_TRACE_RATE_HZ * 10.0, duration)?;
    energy_report(&trace, &TransferWindow::new(0.0, duration)?, power.p_base_w, result.total_bytes, tail)
}

/// Energy of a live run from an externally captured trace.
pub fn measured_report(
    trace: &PowerTrace,
    result: &TransferResult,
    alignment: TraceAlignment,
    tail: &TailParams,
) -> Result<EnergyReport> {
    let (base, window) = match alignment {
        TraceAlignment::Detect { lead_in_s } => {
            let lead = TransferWindow::new(trace.start(), (trace.start() + lead_in_s).min(trace.end()))?;
            let base = estimate_base_power(trace, &lead)?;
            let window = detect_transfer_window(trace, base, tail.threshold_w, tail.hold_s)?;
            (base, window)
        }
        TraceAlignment::EngineOffset(offset) => {
            let window = TransferWindow::new(result.t_start_s + offset, result.t_end_s + offset)?;
            let lead = TransferWindow::new(trace.start(), window.t_start)?;
            (estimate_base_power(trace, &lead)?, window)
        }
    };
    energy_report(trace, &window, base, result.total_bytes, tail)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(Error::Config(format!("unknown report format `{other}`"))),
        }
    }
}

pub fn write_report<W: Write>(result: &SweepResult, format: ReportFormat, mut writer: W) -> Result<()> {
    if result.cells.is_empty() {
        return Err(Error::EmptyInput("sweep result"));
    }
    match format {
        ReportFormat::Csv => result.write_csv(writer),
        ReportFormat::Json => {
            serde_json::to_writer_pretty(&mut writer, result)?;
            writeln!(writer)?;
            Ok(())
        }
    }
}

pub fn emit_report(result: &SweepResult, format: ReportFormat, path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    write_report(result, format, &mut buf)?;
    std::fs::write(path, buf).map_err(|e| Error::path_io(path, e))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FigureKind {
    ThroughputVsCc,
    EnergyVsCc,
    ThroughputVsP,
    EnergyVsP,
    SurfaceCcP,
}

impl FigureKind {
    pub const ALL: [Self; 5] = [
        Self::ThroughputVsCc,
        Self::EnergyVsCc,
        Self::ThroughputVsP,
        Self::EnergyVsP,
        Self::SurfaceCcP,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::ThroughputVsCc => "throughput_vs_cc",
            Self::EnergyVsCc => "energy_vs_cc",
            Self::ThroughputVsP => "throughput_vs_p",
            Self::EnergyVsP => "energy_vs_p",
            Self::SurfaceCcP => "surface_cc_p",
        }
    }
}

impl FromStr for FigureKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown figure kind `{s}`")))
    }
}

/// Gnuplot-ready text. Line plots emit one block per combination of the
/// remaining parameters, separated by two blank lines so `index` selects
/// them; the surface separates each cc row of the grid by one blank line.
pub fn plot_data(result: &SweepResult, kind: FigureKind) -> Result<String> {
    let distinct = |f: fn(&CellResult) -> u32| result.cells.iter().map(f).collect::<BTreeSet<u32>>();
    let need = |f: fn(&CellResult) -> u32, axis: &'static str| {
        if distinct(f).len() < 2 {
            Err(Error::AxisAbsent(axis))
        } else {
            Ok(())
        }
    };

    let mut out = String::new();
    match kind {
        FigureKind::ThroughputVsCc | FigureKind::EnergyVsCc | FigureKind::ThroughputVsP | FigureKind::EnergyVsP => {
            let by_cc = matches!(kind, FigureKind::ThroughputVsCc | FigureKind::EnergyVsCc);
            let energy = matches!(kind, FigureKind::EnergyVsCc | FigureKind::EnergyVsP);
            let (axis, other) = if by_cc { ("cc", "p") } else { ("p", "cc") };
            if by_cc {
                need(|c| c.cc, "cc")?;
            } else {
                need(|c| c.p, "p")?;
            }
            let y = if energy {
                "energy_per_100MB[J] sd[J]"
            } else {
                "throughput[Mbps] sd[Mbps]"
            };
            writeln!(out, "# {}: {axis}[streams] {y}", kind.name()).unwrap();

            let mut groups: BTreeMap<(u32, u32), Vec<&CellResult>> = BTreeMap::new();
            for c in &result.cells {
                let fixed = if by_cc { c.p } else { c.cc };
                groups.entry((c.io_bytes, fixed)).or_default().push(c);
            }
            for (i, ((io, fixed), mut cells)) in groups.into_iter().enumerate() {
                if i > 0 {
                    out.push_str("\n\n");
                }
                cells.sort_by_key(|c| if by_cc { c.cc } else { c.p });
                writeln!(out, "# {other}={fixed} io_bytes={io}").unwrap();
                for c in cells {
                    let x = if by_cc { c.cc } else { c.p };
                    let (v, sd) = if energy {
                        (c.mean_j_per_100mb, c.sd_j)
                    } else {
                        (c.mean_mbps, c.sd_mbps)
                    };
                    writeln!(out, "{x} {v} {sd}").unwrap();
                }
            }
        }
        FigureKind::SurfaceCcP => {
            need(|c| c.cc, "cc")?;
            need(|c| c.p, "p")?;
            writeln!(
                out,
                "# surface_cc_p: cc[streams] p[streams] throughput[Mbps] energy_per_100MB[J]"
            )
            .unwrap();
            let mut by_io: BTreeMap<u32, Vec<&CellResult>> = BTreeMap::new();
            for c in &result.cells {
                by_io.entry(c.io_bytes).or_default().push(c);
            }
            for (i, (io, cells)) in by_io.into_iter().enumerate() {
                if i > 0 {
                    out.push_str("\n\n");
                }
                writeln!(out, "# io_bytes={io}").unwrap();
                let mut last_cc = None;
                for c in cells {
                    if last_cc.is_some_and(|cc| cc != c.cc) {
                        out.push('\n');
                    }
                    last_cc = Some(c.cc);
                    writeln!(out, "{} {} {} {}", c.cc, c.p, c.mean_mbps, c.mean_j_per_100mb).unwrap();
                }
            }
        }
    }
    Ok(out)
}

pub fn emit_plot_data(result: &SweepResult, kind: FigureKind, path: &Path) -> Result<()> {
    let text = plot_data(result, kind)?;
    std::fs::write(path, text).map_err(|e| Error::path_io(path, e))
}
