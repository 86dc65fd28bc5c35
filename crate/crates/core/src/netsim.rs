//! Deterministic fluid-flow simulator of multi-file, multi-stream HTTP
//! transfers over one shared bottleneck, with a device power model.
//!
//! Every file holds a concurrency slot while its chunks move. Each chunk is
//! a connection that pays `per_request_setup_rtts * rtt_s` of setup before
//! data flows. All data-phase streams share the same instantaneous rate:
//! the minimum of the TCP window limit, the fair share of the link, and the
//! client I/O drain rate for the plan's request size. A finished file's slot
//! is refilled at the same instant, so the radio never idles between files,
//! and a single tail is paid after the global last byte.

use serde::{Deserialize, Serialize};

use crate::energy::{self, EnergyReport, PowerSample, PowerTrace};
use crate::engine::plan::{plan_chunks, TransferPlan};
use crate::error::{Error, Result};

/// Offset of the "just before" sample that brackets every power step in a
/// synthesized trace.
const EDGE_EPSILON_S: f64 = 1e-6;

/// Client-side drain rate (Mbps per stream) as a function of I/O request
/// size. Piecewise linear between points; proportional below the first
/// point and flat above the last.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct IoDrainCurve {
    points: Vec<(u64, f64)>,
}

impl IoDrainCurve {
    pub fn new(mut points: Vec<(u64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidParameter("io drain curve needs points".into()));
        }
        points.sort_by_key(|p| p.0);
        if points.windows(2).any(|w| w[0].0 == w[1].0) || points.iter().any(|p| p.0 == 0 || !(p.1 > 0.0)) {
            return Err(Error::InvalidParameter(
                "io drain points need distinct positive sizes and positive rates".into(),
            ));
        }
        Ok(Self { points })
    }

    /// Unbounded drain: I/O never limits the stream.
    pub fn unlimited() -> Self {
        Self {
            points: vec![(1, f64::INFINITY)],
        }
    }

    pub fn points(&self) -> &[(u64, f64)] {
        &self.points
    }

    pub fn rate_mbps(&self, io_request_bytes: u32) -> f64 {
        let io = u64::from(io_request_bytes);
        let first = self.points[0];
        if io <= first.0 {
            if first.1.is_infinite() {
                return first.1;
            }
            return first.1 * io as f64 / first.0 as f64;
        }
        for w in self.points.windows(2) {
            let ((x0, y0), (x1, y1)) = (w[0], w[1]);
            if io <= x1 {
                return y0 + (y1 - y0) * (io - x0) as f64 / (x1 - x0) as f64;
            }
        }
        self.points[self.points.len() - 1].1
    }
}

impl Default for IoDrainCurve {
    /// Rises from 1 KB requests to a plateau reached between 8 and 16 KB.
    fn default() -> Self {
        Self {
            points: vec![
                (1024, 48.0),
                (2048, 80.0),
                (4096, 128.0),
                (8192, 176.0),
                (16384, 200.0),
            ],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub link_capacity_mbps: f64,
    pub rtt_s: f64,
    /// Per-stream TCP buffer; caps each stream at `buffer / rtt`.
    pub tcp_buffer_bytes: f64,
    /// RTTs charged to each file or chunk request before data flows.
    pub per_request_setup_rtts: f64,
    #[serde(default)]
    pub io_drain: IoDrainCurve,
}

impl NetworkConfig {
    pub fn new(link_capacity_mbps: f64, rtt_s: f64, tcp_buffer_bytes: f64) -> Self {
        Self {
            link_capacity_mbps,
            rtt_s,
            tcp_buffer_bytes,
            per_request_setup_rtts: 2.0,
            io_drain: IoDrainCurve::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("link_capacity_mbps", self.link_capacity_mbps),
            ("rtt_s", self.rtt_s),
            ("tcp_buffer_bytes", self.tcp_buffer_bytes),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || v.is_nan() {
                return Err(Error::InvalidParameter(format!("{name} must be > 0, got {v}")));
            }
        }
        if !(self.per_request_setup_rtts >= 0.0 && self.per_request_setup_rtts.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "per_request_setup_rtts must be >= 0, got {}",
                self.per_request_setup_rtts
            )));
        }
        Ok(())
    }

    pub fn bdp_bytes(&self) -> f64 {
        self.link_capacity_mbps * 1e6 / 8.0 * self.rtt_s
    }

    /// Throughput ceiling of one stream imposed by its buffer.
    pub fn window_limit_mbps(&self) -> f64 {
        self.tcp_buffer_bytes * 8.0 / (self.rtt_s * 1e6)
    }

    pub fn setup_s(&self) -> f64 {
        self.per_request_setup_rtts * self.rtt_s
    }
}

/// `min(window limit, fair share of the link)` for each of `n_active` streams.
pub fn per_stream_throughput(config: &NetworkConfig, n_active: u32) -> f64 {
    let fair_share = config.link_capacity_mbps / f64::from(n_active.max(1));
    config.window_limit_mbps().min(fair_share)
}

/// Per-stream rate once the client's I/O drain is included.
pub fn stream_rate_mbps(config: &NetworkConfig, n_active: u32, io_request_bytes: u32) -> f64 {
    per_stream_throughput(config, n_active).min(config.io_drain.rate_mbps(io_request_bytes))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RadioKind {
    Wifi,
    Lte,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DevicePowerModel {
    pub p_base_w: f64,
    /// Added while any connection is open.
    pub p_radio_active_w: f64,
    pub p_per_connection_w: f64,
    /// Held above base after the last byte.
    pub tail_power_w: f64,
    pub tail_duration_s: f64,
    pub radio_kind: RadioKind,
}

impl DevicePowerModel {
    pub fn wifi() -> Self {
        Self {
            p_base_w: 0.9,
            p_radio_active_w: 0.7,
            p_per_connection_w: 0.02,
            tail_power_w: 0.6,
            tail_duration_s: 0.24,
            radio_kind: RadioKind::Wifi,
        }
    }

    pub fn lte() -> Self {
        Self {
            p_base_w: 0.9,
            p_radio_active_w: 1.2,
            p_per_connection_w: 0.03,
            tail_power_w: 1.1,
            tail_duration_s: 11.5,
            radio_kind: RadioKind::Lte,
        }
    }

    pub fn for_radio(kind: RadioKind) -> Self {
        match kind {
            RadioKind::Wifi => Self::wifi(),
            RadioKind::Lte => Self::lte(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("p_base_w", self.p_base_w),
            ("p_radio_active_w", self.p_radio_active_w),
            ("p_per_connection_w", self.p_per_connection_w),
            ("tail_power_w", self.tail_power_w),
            ("tail_duration_s", self.tail_duration_s),
        ];
        for (name, v) in fields {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be >= 0, got {v}")));
            }
        }
        Ok(())
    }

    /// Power while `n_open` connections are open.
    pub fn active_power_w(&self, n_open: usize) -> f64 {
        if n_open == 0 {
            self.p_base_w
        } else {
            self.p_base_w + self.p_radio_active_w + self.p_per_connection_w * n_open as f64
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventKind {
    FileStarted { file: usize },
    /// Zero-byte file, never opened.
    FileSkipped { file: usize },
    ConnectionOpened { file: usize, chunk: usize },
    DataStarted { file: usize, chunk: usize },
    ConnectionClosed { file: usize, chunk: usize, bytes: u64 },
    FileCompleted { file: usize, bytes: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransferEvent {
    pub t: f64,
    #[serde(flatten)]
    pub kind: EventKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    /// Time of the global last byte.
    pub duration_s: f64,
    pub total_bytes: u64,
    pub avg_throughput_mbps: f64,
    pub trace: PowerTrace,
    pub report: EnergyReport,
    pub events: Vec<TransferEvent>,
}

impl SimResult {
    pub fn window(&self) -> energy::TransferWindow {
        energy::TransferWindow {
            t_start: 0.0,
            t_end: self.duration_s,
        }
    }

    /// Bytes delivered per input file, in input order.
    pub fn delivered_per_file(&self, n_files: usize) -> Vec<u64> {
        let mut out = vec![0; n_files];
        for e in &self.events {
            if let EventKind::ConnectionClosed { file, bytes, .. } = e.kind {
                out[file] += bytes;
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    Setup,
    Data,
}

#[derive(Debug, Clone)]
struct Stream {
    file: usize,
    chunk: usize,
    bytes: u64,
    ready_at: f64,
    remaining: f64,
    phase: Phase,
}

/// Sample rate used for synthesized power traces in [`simulate_transfer`].
pub const DEFAULT_TRACE_RATE_HZ: f64 = 10.0;

/// Runs one batch of `files` (byte sizes) under `plan`.
pub fn simulate_transfer(
    plan: &TransferPlan,
    files: &[u64],
    config: &NetworkConfig,
    power: &DevicePowerModel,
) -> Result<SimResult> {
    simulate_transfer_with_rate(plan, files, config, power, DEFAULT_TRACE_RATE_HZ)
}

pub fn simulate_transfer_with_rate(
    plan: &TransferPlan,
    files: &[u64],
    config: &NetworkConfig,
    power: &DevicePowerModel,
    trace_rate_hz: f64,
) -> Result<SimResult> {
    if files.is_empty() {
        return Err(Error::EmptyInput("file list"));
    }
    plan.validate()?;
    config.validate()?;
    power.validate()?;

    let events = run_events(plan, files, config);
    let total_bytes: u64 = files.iter().sum();
    if total_bytes == 0 {
        return Err(Error::InvalidParameter("every file is empty".into()));
    }
    let duration_s = last_byte_time(&events).unwrap_or(0.0);
    let profile = PowerProfile::from_events(&events, power);
    let trace = synthesize_trace(&events, power, trace_rate_hz, 0.0)?;

    let e_dynamic = profile.integral_above_base(0.0, duration_s, power.p_base_w);
    let report = EnergyReport::from_parts(
        power.p_base_w * duration_s,
        e_dynamic,
        power.tail_power_w * power.tail_duration_s,
        total_bytes,
    )?;

    Ok(SimResult {
        duration_s,
        total_bytes,
        avg_throughput_mbps: total_bytes as f64 * 8.0 / duration_s / 1e6,
        trace,
        report,
        events,
    })
}

fn run_events(plan: &TransferPlan, files: &[u64], config: &NetworkConfig) -> Vec<TransferEvent> {
    let setup = config.setup_s();
    let mut events = Vec::new();
    let mut streams: Vec<Stream> = Vec::new();
    let mut chunks_left = vec![0usize; files.len()];
    let mut next_file = 0usize;
    let mut files_in_flight = 0u32;
    let mut t = 0.0f64;

    let mut refill = |t: f64,
                      streams: &mut Vec<Stream>,
                      events: &mut Vec<TransferEvent>,
                      chunks_left: &mut [usize],
                      files_in_flight: &mut u32| {
        while *files_in_flight < plan.concurrency && next_file < files.len() {
            let file = next_file;
            next_file += 1;
            let size = files[file];
            if size == 0 {
                events.push(TransferEvent {
                    t,
                    kind: EventKind::FileSkipped { file },
                });
                continue;
            }
            events.push(TransferEvent {
                t,
                kind: EventKind::FileStarted { file },
            });
            let ranges = plan_chunks(size, plan.parallelism);
            chunks_left[file] = ranges.len();
            for (chunk, range) in ranges.iter().enumerate() {
                events.push(TransferEvent {
                    t,
                    kind: EventKind::ConnectionOpened { file, chunk },
                });
                streams.push(Stream {
                    file,
                    chunk,
                    bytes: range.len(),
                    ready_at: t + setup,
                    remaining: range.len() as f64,
                    phase: Phase::Setup,
                });
            }
            *files_in_flight += 1;
        }
    };

    refill(t, &mut streams, &mut events, &mut chunks_left, &mut files_in_flight);

    while !streams.is_empty() {
        for s in streams.iter_mut() {
            if s.phase == Phase::Setup && s.ready_at <= t {
                s.phase = Phase::Data;
                events.push(TransferEvent {
                    t,
                    kind: EventKind::DataStarted {
                        file: s.file,
                        chunk: s.chunk,
                    },
                });
            }
        }

        let n_active = streams.iter().filter(|s| s.phase == Phase::Data).count() as u32;
        let rate_bytes = if n_active > 0 {
            stream_rate_mbps(config, n_active, plan.io_request_bytes) * 1e6 / 8.0
        } else {
            0.0
        };
        let next_ready = streams
            .iter()
            .filter(|s| s.phase == Phase::Setup)
            .map(|s| s.ready_at)
            .fold(f64::INFINITY, f64::min);
        let min_remaining = streams
            .iter()
            .filter(|s| s.phase == Phase::Data)
            .map(|s| s.remaining)
            .fold(f64::INFINITY, f64::min);
        let finish_dt = if n_active > 0 {
            min_remaining / rate_bytes
        } else {
            f64::INFINITY
        };

        let t_next = if t + finish_dt <= next_ready {
            t + finish_dt
        } else {
            next_ready
        };
        let dt = t_next - t;
        let finishing = t + finish_dt <= next_ready;
        let done_cutoff = if finishing {
            min_remaining * (1.0 + 1e-12)
        } else {
            f64::NEG_INFINITY
        };

        let mut closed: Vec<Stream> = Vec::new();
        streams.retain_mut(|s| {
            if s.phase != Phase::Data {
                return true;
            }
            if s.remaining <= done_cutoff {
                closed.push(s.clone());
                false
            } else {
                s.remaining -= rate_bytes * dt;
                true
            }
        });
        t = t_next;

        for s in closed {
            events.push(TransferEvent {
                t,
                kind: EventKind::ConnectionClosed {
                    file: s.file,
                    chunk: s.chunk,
                    bytes: s.bytes,
                },
            });
            chunks_left[s.file] -= 1;
            if chunks_left[s.file] == 0 {
                events.push(TransferEvent {
                    t,
                    kind: EventKind::FileCompleted {
                        file: s.file,
                        bytes: files[s.file],
                    },
                });
                files_in_flight -= 1;
            }
        }
        refill(t, &mut streams, &mut events, &mut chunks_left, &mut files_in_flight);
    }
    // trailing zero-size files
    refill(t, &mut streams, &mut events, &mut chunks_left, &mut files_in_flight);
    events
}

fn last_byte_time(events: &[TransferEvent]) -> Option<f64> {
    events
        .iter()
        .rev()
        .find(|e| matches!(e.kind, EventKind::ConnectionClosed { .. }))
        .map(|e| e.t)
}

/// Right-continuous step function of device power over time.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerProfile {
    /// `(from_t, watts)`; the first step starts at 0, the last holds forever.
    steps: Vec<(f64, f64)>,
}

impl PowerProfile {
    pub fn from_events(events: &[TransferEvent], power: &DevicePowerModel) -> Self {
        let mut steps: Vec<(f64, f64)> = vec![(0.0, power.p_base_w)];
        let mut n_open = 0usize;
        let mut i = 0;
        while i < events.len() {
            let t = events[i].t;
            while i < events.len() && events[i].t == t {
                match events[i].kind {
                    EventKind::ConnectionOpened { .. } => n_open += 1,
                    EventKind::ConnectionClosed { .. } => n_open -= 1,
                    _ => {}
                }
                i += 1;
            }
            push_step(&mut steps, t, power.active_power_w(n_open));
        }
        if let Some(last) = last_byte_time(events) {
            push_step(&mut steps, last, power.p_base_w + power.tail_power_w);
            push_step(&mut steps, last + power.tail_duration_s, power.p_base_w);
        }
        Self { steps }
    }

    pub fn steps(&self) -> &[(f64, f64)] {
        &self.steps
    }

    pub fn power_at(&self, t: f64) -> f64 {
        let idx = self.steps.partition_point(|s| s.0 <= t);
        self.steps[idx.saturating_sub(1)].1
    }

    /// Exact `integral (P - base) dt` over `[a, b]`.
    pub fn integral_above_base(&self, a: f64, b: f64, base: f64) -> f64 {
        let mut acc = 0.0;
        for (i, &(from, watts)) in self.steps.iter().enumerate() {
            let to = self.steps.get(i + 1).map_or(f64::INFINITY, |s| s.0);
            let lo = from.max(a);
            let hi = to.min(b);
            if hi > lo {
                acc += (watts - base) * (hi - lo);
            }
        }
        acc
    }
}

fn push_step(steps: &mut Vec<(f64, f64)>, t: f64, watts: f64) {
    match steps.last_mut() {
        Some(last) if last.0 == t => {
            last.1 = watts;
            // collapse a step that no longer changes the level
            if steps.len() >= 2 && steps[steps.len() - 2].1 == watts {
                steps.pop();
            }
        }
        Some(last) if last.1 == watts => {}
        _ => steps.push((t, watts)),
    }
}

/// Samples the piecewise-constant device power implied by `events`.
///
/// Samples lie on the `rate_hz` grid from 0, plus a pair bracketing every
/// power step (one [`EDGE_EPSILON_S`] before it at the old level, one at
/// it with the new level), so trapezoidal integration of the trace matches
/// the step function. The trace spans `[0, max(last byte + tail, min_span_s)]`.
pub fn synthesize_trace(
    events: &[TransferEvent],
    power: &DevicePowerModel,
    rate_hz: f64,
    min_span_s: f64,
) -> Result<PowerTrace> {
    if !(rate_hz > 0.0 && rate_hz.is_finite()) {
        return Err(Error::InvalidParameter(format!("rate_hz must be > 0, got {rate_hz}")));
    }
    if events.windows(2).any(|w| w[1].t < w[0].t) {
        return Err(Error::InvalidParameter("events are not time-ordered".into()));
    }
    let profile = PowerProfile::from_events(events, power);
    let busy_end = last_byte_time(events).map_or(0.0, |t| t + power.tail_duration_s);
    let end = busy_end.max(min_span_s).max(1.0 / rate_hz);

    let n_grid = (end * rate_hz).floor() as usize;
    let mut times: Vec<f64> = (0..=n_grid).map(|k| k as f64 / rate_hz).collect();
    times.push(end);
    for &(t, _) in profile.steps().iter().skip(1) {
        if t > 0.0 && t <= end {
            times.push((t - EDGE_EPSILON_S).max(0.0));
            times.push(t);
        }
    }
    times.sort_by(f64::total_cmp);
    times.dedup();
    times.retain(|&t| t <= end);

    let samples = times
        .into_iter()
        .map(|t| PowerSample::new(t, profile.power_at(t)))
        .collect();
    PowerTrace::new(samples, rate_hz)
}
