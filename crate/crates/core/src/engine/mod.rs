//! Live HTTP download engine.
//!
//! A batch of [`FileJob`]s runs under a [`TransferPlan`]: up to
//! `concurrency` files are in flight, each split into `parallelism`
//! byte-range streams when the server honors ranges, and every socket read
//! and file write is issued in `io_request_bytes` units. Workers pull the
//! next job the moment their current one finishes, so files go out
//! back-to-back.

pub mod plan;

use std::collections::VecDeque;
use std::fs::{File, OpenOptions};
use std::io::{Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use log::{debug, warn};
use serde::{Deserialize, Serialize};

use crate::datasets::file_digest;
use crate::error::{Error, Result};

pub use plan::{plan_chunks, ByteRange, TransferPlan};

/// Time source for batch and per-file timestamps, in seconds.
pub trait Clock: Send + Sync {
    fn now_s(&self) -> f64;
}

/// Monotonic wall clock measured from its creation.
#[derive(Debug, Clone, Copy)]
pub struct SystemClock {
    epoch: Instant,
}

impl SystemClock {
    pub fn new() -> Self {
        Self { epoch: Instant::now() }
    }
}

impl Default for SystemClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for SystemClock {
    fn now_s(&self) -> f64 {
        self.epoch.elapsed().as_secs_f64()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileJob {
    pub source_url: String,
    pub expected_bytes: Option<u64>,
    pub destination_path: PathBuf,
    /// Hex SHA-256 the finished file must match.
    pub checksum: Option<String>,
}

impl FileJob {
    pub fn new(source_url: impl Into<String>, destination_path: impl Into<PathBuf>) -> Self {
        Self {
            source_url: source_url.into(),
            expected_bytes: None,
            destination_path: destination_path.into(),
            checksum: None,
        }
    }

    pub fn with_expected_bytes(mut self, bytes: u64) -> Self {
        self.expected_bytes = Some(bytes);
        self
    }

    pub fn with_checksum(mut self, digest: impl Into<String>) -> Self {
        self.checksum = Some(digest.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileRecord {
    /// Position of the job in the submitted batch.
    pub index: usize,
    pub start_s: f64,
    pub end_s: f64,
    pub bytes: u64,
    /// Streams actually used; 1 when the server ignored ranges.
    pub streams: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferFailure {
    pub index: usize,
    pub source_url: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferResult {
    /// Bytes of successfully completed files.
    pub total_bytes: u64,
    pub t_start_s: f64,
    pub t_end_s: f64,
    pub wall_duration_s: f64,
    /// Completed files, ordered by start time.
    pub files: Vec<FileRecord>,
    pub avg_throughput_mbps: f64,
    pub failures: Vec<TransferFailure>,
}

impl TransferResult {
    /// Largest number of files whose `[start, end]` intervals overlap.
    pub fn max_simultaneous_files(&self) -> usize {
        let mut edges: Vec<(f64, i32)> = self
            .files
            .iter()
            .flat_map(|f| [(f.start_s, 1), (f.end_s, -1)])
            .collect();
        // closings sort before openings at equal times
        edges.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut live = 0i32;
        let mut peak = 0i32;
        for (_, d) in edges {
            live += d;
            peak = peak.max(live);
        }
        peak as usize
    }
}

#[derive(Debug, Clone)]
pub struct EngineOptions {
    pub connect_timeout: Duration,
    pub read_timeout: Duration,
    /// Extra attempts per chunk after the first failure.
    pub chunk_retries: u32,
}

impl Default for EngineOptions {
    fn default() -> Self {
        Self {
            connect_timeout: Duration::from_secs(10),
            read_timeout: Duration::from_secs(30),
            chunk_retries: 1,
        }
    }
}

enum Probe {
    Ranged { size: u64 },
    /// The server answered the range probe with the whole body.
    Full(ureq::Response),
}

/// Executes one batch. Not meant to be shared across concurrent batches.
pub struct TransferEngine {
    agent: ureq::Agent,
    options: EngineOptions,
}

impl TransferEngine {
    pub fn new(options: EngineOptions) -> Self {
        let agent = ureq::AgentBuilder::new()
            .timeout_connect(options.connect_timeout)
            .timeout_read(options.read_timeout)
            .max_idle_connections(0)
            .build();
        Self { agent, options }
    }

    /// Whether `url` serves byte ranges. Network failures are errors;
    /// a server that answers a range probe with the full body is `false`.
    pub fn probe_range_support(&self, url: &str) -> Result<bool> {
        Ok(matches!(self.probe(url)?, Probe::Ranged { .. }))
    }

    fn probe(&self, url: &str) -> Result<Probe> {
        let http_err = |message: String| Error::Http {
            url: url.to_string(),
            message,
        };
        match self.agent.get(url).set("Range", "bytes=0-0").call() {
            Ok(resp) if resp.status() == 206 => {
                let size = resp
                    .header("Content-Range")
                    .and_then(content_range_total)
                    .ok_or_else(|| http_err("206 without a usable Content-Range".into()))?;
                let mut sink = Vec::new();
                resp.into_reader()
                    .read_to_end(&mut sink)
                    .map_err(|e| http_err(e.to_string()))?;
                Ok(Probe::Ranged { size })
            }
            Ok(resp) => Ok(Probe::Full(resp)),
            Err(ureq::Error::Status(416, resp)) => {
                // unsatisfiable 0-0 means an empty resource
                let size = resp.header("Content-Range").and_then(content_range_total).unwrap_or(0);
                Ok(Probe::Ranged { size })
            }
            Err(ureq::Error::Status(code, _)) => Err(http_err(format!("status {code}"))),
            Err(e) => Err(http_err(e.to_string())),
        }
    }

    /// Runs the batch. Per-file failures are collected in the result; only
    /// a batch in which every job fails is an error.
    pub fn execute(&self, jobs: &[FileJob], plan: &TransferPlan, clock: &dyn Clock) -> Result<TransferResult> {
        if jobs.is_empty() {
            return Err(Error::EmptyInput("job list"));
        }
        plan.validate()?;

        let queue: Mutex<VecDeque<usize>> = Mutex::new((0..jobs.len()).collect());
        let outcomes: Mutex<Vec<std::result::Result<FileRecord, TransferFailure>>> =
            Mutex::new(Vec::with_capacity(jobs.len()));
        let workers = (plan.concurrency as usize).min(jobs.len());

        let t_start_s = clock.now_s();
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let Some(index) = queue.lock().unwrap().pop_front() else {
                        break;
                    };
                    let job = &jobs[index];
                    let start_s = clock.now_s();
                    let outcome = match self.run_job(job, plan) {
                        Ok((bytes, streams)) => Ok(FileRecord {
                            index,
                            start_s,
                            end_s: clock.now_s(),
                            bytes,
                            streams,
                        }),
                        Err(e) => {
                            warn!("{} failed: {e}", job.source_url);
                            Err(TransferFailure {
                                index,
                                source_url: job.source_url.clone(),
                                reason: e.to_string(),
                            })
                        }
                    };
                    outcomes.lock().unwrap().push(outcome);
                });
            }
        });

        let mut files = Vec::new();
        let mut failures = Vec::new();
        for outcome in outcomes.into_inner().unwrap() {
            match outcome {
                Ok(record) => files.push(record),
                Err(failure) => failures.push(failure),
            }
        }
        if files.is_empty() {
            let first = failures.first().map(|f| f.reason.clone()).unwrap_or_default();
            return Err(Error::AllTransfersFailed(jobs.len(), first));
        }
        files.sort_by(|a, b| a.start_s.total_cmp(&b.start_s).then(a.index.cmp(&b.index)));
        failures.sort_by_key(|f| f.index);

        let t_end_s = files.iter().map(|f| f.end_s).fold(t_start_s, f64::max);
        let total_bytes: u64 = files.iter().map(|f| f.bytes).sum();
        let wall = t_end_s - t_start_s;
        Ok(TransferResult {
            total_bytes,
            t_start_s,
            t_end_s,
            wall_duration_s: wall,
            files,
            avg_throughput_mbps: if wall > 0.0 {
                total_bytes as f64 * 8.0 / wall / 1e6
            } else {
                0.0
            },
            failures,
        })
    }

    fn run_job(&self, job: &FileJob, plan: &TransferPlan) -> Result<(u64, u32)> {
        let tmp = temp_path(&job.destination_path);
        if let Some(parent) = job.destination_path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent).map_err(|e| Error::path_io(parent, e))?;
        }
        let result = self.download_to(job, plan, &tmp).and_then(|(bytes, streams)| {
            if let Some(expected) = job.expected_bytes {
                if expected != bytes {
                    return Err(Error::Http {
                        url: job.source_url.clone(),
                        message: format!("expected {expected} bytes, received {bytes}"),
                    });
                }
            }
            if let Some(digest) = &job.checksum {
                if !verify_integrity(&tmp, digest)? {
                    return Err(Error::Http {
                        url: job.source_url.clone(),
                        message: "checksum mismatch".into(),
                    });
                }
            }
            std::fs::rename(&tmp, &job.destination_path).map_err(|e| Error::path_io(&job.destination_path, e))?;
            Ok((bytes, streams))
        });
        if result.is_err() {
            let _ = std::fs::remove_file(&tmp);
        }
        result
    }

    fn download_to(&self, job: &FileJob, plan: &TransferPlan, tmp: &Path) -> Result<(u64, u32)> {
        let io = plan.io_request_bytes as usize;
        let url = job.source_url.as_str();
        if plan.parallelism == 1 {
            return self.whole_file(url, tmp, io, None).map(|b| (b, 1));
        }
        match self.probe(url)? {
            Probe::Full(resp) => {
                warn!("{url} ignores byte ranges; using one stream instead of {}", plan.parallelism);
                self.whole_file(url, tmp, io, Some(resp)).map(|b| (b, 1))
            }
            Probe::Ranged { size } => {
                let file = File::create(tmp).map_err(|e| Error::path_io(tmp, e))?;
                file.set_len(size).map_err(|e| Error::path_io(tmp, e))?;
                drop(file);
                let chunks = plan_chunks(size, plan.parallelism);
                let streams = chunks.len().max(1) as u32;
                std::thread::scope(|scope| {
                    let handles: Vec<_> = chunks
                        .iter()
                        .map(|range| scope.spawn(move || self.chunk_with_retry(url, *range, tmp, io)))
                        .collect();
                    handles
                        .into_iter()
                        .map(|h| h.join().expect("chunk thread panicked"))
                        .collect::<Result<Vec<()>>>()
                })?;
                Ok((size, streams))
            }
        }
    }

    fn whole_file(&self, url: &str, tmp: &Path, io: usize, first: Option<ureq::Response>) -> Result<u64> {
        let mut pending = first;
        let mut last_err = None;
        for attempt in 0..=self.options.chunk_retries {
            let resp = match pending.take() {
                Some(resp) => Ok(resp),
                None => self.agent.get(url).call().map_err(|e| Error::Http {
                    url: url.to_string(),
                    message: e.to_string(),
                }),
            };
            let outcome = resp.and_then(|resp| {
                let expected = resp.header("Content-Length").and_then(|v| v.parse::<u64>().ok());
                let mut out = File::create(tmp).map_err(|e| Error::path_io(tmp, e))?;
                let got = copy_in_units(resp.into_reader(), &mut out, io, url, tmp)?;
                match expected {
                    Some(n) if n != got => Err(Error::Http {
                        url: url.to_string(),
                        message: format!("body ended after {got} of {n} bytes"),
                    }),
                    _ => Ok(got),
                }
            });
            match outcome {
                Ok(bytes) => return Ok(bytes),
                Err(e) => {
                    debug!("{url}: attempt {} failed: {e}", attempt + 1);
                    last_err = Some(e);
                }
            }
        }
        Err(last_err.expect("at least one attempt"))
    }

    fn chunk_with_retry(&self, url: &str, range: ByteRange, tmp: &Path, io: usize) -> Result<()> {
        let mut last_err = None;
        for attempt in 0..=self.options.chunk_retries {
            match self.fetch_chunk(url, range, tmp, io) {
                Ok(()) => return Ok(()),
                Err(e) => {
                    debug!("{url} {}: attempt {} failed: {e}", range.header_value(), attempt + 1);
                    last_err = Some(e);
                }
            }
        }
        Err(last_err.expect("at least one attempt"))
    }

    fn fetch_chunk(&self, url: &str, range: ByteRange, tmp: &Path, io: usize) -> Result<()> {
        let http_err = |message: String| Error::Http {
            url: url.to_string(),
            message,
        };
        let resp = self
            .agent
            .get(url)
            .set("Range", &range.header_value())
            .call()
            .map_err(|e| http_err(e.to_string()))?;
        if resp.status() != 206 {
            return Err(http_err(format!("expected 206 for {}, got {}", range.header_value(), resp.status())));
        }
        let served = resp.header("Content-Range").and_then(content_range_span);
        if served != Some((range.start, range.end)) {
            return Err(http_err(format!("server returned range {served:?} for {}", range.header_value())));
        }
        let mut out = OpenOptions::new().write(true).open(tmp).map_err(|e| Error::path_io(tmp, e))?;
        out.seek(SeekFrom::Start(range.start)).map_err(|e| Error::path_io(tmp, e))?;
        let got = copy_in_units(resp.into_reader().take(range.len()), &mut out, io, url, tmp)?;
        if got != range.len() {
            return Err(http_err(format!("chunk ended after {got} of {} bytes", range.len())));
        }
        Ok(())
    }
}

impl Default for TransferEngine {
    fn default() -> Self {
        Self::new(EngineOptions::default())
    }
}

/// Copies with every read and write sized at most `io` bytes.
fn copy_in_units(mut reader: impl Read, out: &mut File, io: usize, url: &str, path: &Path) -> Result<u64> {
    let mut buf = vec![0u8; io];
    let mut total = 0u64;
    loop {
        let n = match reader.read(&mut buf) {
            Ok(0) => break,
            Ok(n) => n,
            Err(e) if e.kind() == std::io::ErrorKind::Interrupted => continue,
            Err(e) => {
                return Err(Error::Http {
                    url: url.to_string(),
                    message: format!("read failed after {total} bytes: {e}"),
                })
            }
        };
        out.write_all(&buf[..n]).map_err(|e| Error::path_io(path, e))?;
        total += n as u64;
    }
    Ok(total)
}

fn temp_path(dest: &Path) -> PathBuf {
    let mut name = dest.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".part");
    dest.with_file_name(name)
}

/// `bytes a-b/total` -> `total`; also accepts `bytes */total`.
fn content_range_total(value: &str) -> Option<u64> {
    value.rsplit_once('/')?.1.trim().parse().ok()
}

/// `bytes a-b/total` -> `(a, b)`.
fn content_range_span(value: &str) -> Option<(u64, u64)> {
    let spec = value.trim().strip_prefix("bytes ")?;
    let (span, _) = spec.split_once('/')?;
    let (a, b) = span.split_once('-')?;
    Some((a.trim().parse().ok()?, b.trim().parse().ok()?))
}

/// Whether `url` serves byte ranges, using a default engine.
pub fn probe_range_support(url: &str) -> Result<bool> {
    TransferEngine::default().probe_range_support(url)
}

/// Runs a batch with a default engine.
pub fn execute_transfer(jobs: &[FileJob], plan: &TransferPlan, clock: &dyn Clock) -> Result<TransferResult> {
    TransferEngine::default().execute(jobs, plan, clock)
}

/// True iff the SHA-256 of the file equals `expected_digest` (hex, any case).
pub fn verify_integrity(destination_path: &Path, expected_digest: &str) -> Result<bool> {
    Ok(file_digest(destination_path)?.eq_ignore_ascii_case(expected_digest.trim()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn content_range_parsing() {
        assert_eq!(content_range_total("bytes 0-0/1234"), Some(1234));
        assert_eq!(content_range_total("bytes */0"), Some(0));
        assert_eq!(content_range_span("bytes 5-9/10"), Some((5, 9)));
        assert_eq!(content_range_span("items 5-9/10"), None);
    }

    #[test]
    fn temp_name_appends_suffix() {
        assert_eq!(temp_path(Path::new("/a/b/x.bin")), PathBuf::from("/a/b/x.bin.part"));
    }

    #[test]
    fn integrity_checks() {
        let dir = tempfile::tempdir().unwrap();
        let empty = dir.path().join("empty");
        std::fs::write(&empty, b"").unwrap();
        let sha_empty = "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855";
        assert!(verify_integrity(&empty, sha_empty).unwrap());
        assert!(verify_integrity(&empty, &sha_empty.to_uppercase()).unwrap());

        let one = dir.path().join("one");
        std::fs::write(&one, b"a").unwrap();
        let digest = file_digest(&one).unwrap();
        std::fs::write(&one, b"b").unwrap();
        assert!(!verify_integrity(&one, &digest).unwrap());
        assert!(verify_integrity(&dir.path().join("missing"), sha_empty).is_err());
    }

    #[test]
    fn overlap_count() {
        let rec = |s, e| FileRecord {
            index: 0,
            start_s: s,
            end_s: e,
            bytes: 1,
            streams: 1,
        };
        let result = TransferResult {
            total_bytes: 3,
            t_start_s: 0.0,
            t_end_s: 3.0,
            wall_duration_s: 3.0,
            files: vec![rec(0.0, 2.0), rec(1.0, 3.0), rec(2.0, 3.0)],
            avg_throughput_mbps: 0.0,
            failures: vec![],
        };
        assert_eq!(result.max_simultaneous_files(), 2);
    }
}
