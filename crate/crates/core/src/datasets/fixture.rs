//! A small HTTP/1.1 file server for exercising the download engine.
//!
//! Serves a directory with `Connection: close` on every response. Byte-range
//! support can be switched off (the server then ignores `Range` and answers
//! 200 with the full body), and a fault can be injected that drops the
//! connection after a fixed number of body bytes.

use std::io::{BufRead, BufReader, Read, Seek, SeekFrom, Write};
use std::net::{Shutdown, SocketAddr, TcpListener, TcpStream};
use std::path::{Component, Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fault {
    /// Body bytes sent before the connection is dropped.
    pub after_bytes: u64,
    /// Only requests whose path contains this substring are affected.
    pub path_filter: Option<String>,
    /// Stop injecting after this many faults; `None` injects forever.
    pub max_triggers: Option<usize>,
}

impl Fault {
    pub fn always(after_bytes: u64) -> Self {
        Self {
            after_bytes,
            path_filter: None,
            max_triggers: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FixtureOptions {
    pub ranges: bool,
    pub fault: Option<Fault>,
}

impl Default for FixtureOptions {
    fn default() -> Self {
        Self {
            ranges: true,
            fault: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RequestRecord {
    pub method: String,
    pub path: String,
    pub range: Option<(u64, u64)>,
    pub status: u16,
    pub body_bytes_sent: u64,
    pub faulted: bool,
    /// Seconds since server start.
    pub opened_s: f64,
    pub closed_s: f64,
}

#[derive(Debug, Default)]
struct Stats {
    active: AtomicUsize,
    max_active: AtomicUsize,
    faults: AtomicUsize,
    log: Mutex<Vec<RequestRecord>>,
}

/// Decrements the live-connection count once, either explicitly before the
/// final write of a response or on drop.
struct ActiveGuard<'a> {
    stats: &'a Stats,
    released: bool,
}

impl ActiveGuard<'_> {
    fn release(&mut self) {
        if !self.released {
            self.stats.active.fetch_sub(1, Ordering::SeqCst);
            self.released = true;
        }
    }
}

impl Drop for ActiveGuard<'_> {
    fn drop(&mut self) {
        self.release();
    }
}

/// Running fixture; stops when dropped.
pub struct FixtureServer {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    stats: Arc<Stats>,
    accept_thread: Option<JoinHandle<()>>,
}

impl FixtureServer {
    /// Binds to an ephemeral loopback port and starts serving `root`.
    pub fn start(root: impl Into<PathBuf>, options: FixtureOptions) -> Result<Self> {
        Self::bind("127.0.0.1:0", root, options)
    }

    pub fn bind(addr: &str, root: impl Into<PathBuf>, options: FixtureOptions) -> Result<Self> {
        let listener = TcpListener::bind(addr)?;
        let addr = listener.local_addr()?;
        let root: PathBuf = root.into();
        let stop = Arc::new(AtomicBool::new(false));
        let stats = Arc::new(Stats::default());
        let epoch = Instant::now();

        let accept_thread = {
            let stop = Arc::clone(&stop);
            let stats = Arc::clone(&stats);
            let options = Arc::new(options);
            let root = Arc::new(root);
            std::thread::Builder::new()
                .name("fixture-accept".into())
                .spawn(move || {
                    for conn in listener.incoming() {
                        if stop.load(Ordering::SeqCst) {
                            break;
                        }
                        let Ok(stream) = conn else { continue };
                        let now = stats.active.fetch_add(1, Ordering::SeqCst) + 1;
                        stats.max_active.fetch_max(now, Ordering::SeqCst);
                        let stats = Arc::clone(&stats);
                        let options = Arc::clone(&options);
                        let root = Arc::clone(&root);
                        std::thread::spawn(move || {
                            let mut guard = ActiveGuard {
                                stats: &stats,
                                released: false,
                            };
                            let opened_s = epoch.elapsed().as_secs_f64();
                            if let Some(mut record) =
                                handle_connection(stream, &root, &options, &stats, &mut guard)
                            {
                                guard.release();
                                record.opened_s = opened_s;
                                record.closed_s = epoch.elapsed().as_secs_f64();
                                stats.log.lock().unwrap().push(record);
                            }
                        });
                    }
                })?
        };

        Ok(Self {
            addr,
            stop,
            stats,
            accept_thread: Some(accept_thread),
        })
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    /// `http://host:port` with no trailing slash.
    pub fn base_url(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub fn url_for(&self, name: &str) -> String {
        format!("{}/{}", self.base_url(), name)
    }

    /// Highest number of simultaneously open connections seen so far.
    pub fn max_concurrent_connections(&self) -> usize {
        self.stats.max_active.load(Ordering::SeqCst)
    }

    pub fn reset_max_concurrent(&self) {
        self.stats
            .max_active
            .store(self.stats.active.load(Ordering::SeqCst), Ordering::SeqCst);
    }

    pub fn faults_injected(&self) -> usize {
        self.stats.faults.load(Ordering::SeqCst)
    }

    pub fn requests(&self) -> Vec<RequestRecord> {
        self.stats.log.lock().unwrap().clone()
    }

    /// Blocks the calling thread until the process exits.
    pub fn serve_forever(mut self) {
        if let Some(handle) = self.accept_thread.take() {
            let _ = handle.join();
        }
    }
}

impl Drop for FixtureServer {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        // wake the blocking accept
        let _ = TcpStream::connect_timeout(&self.addr, Duration::from_millis(200));
        if let Some(handle) = self.accept_thread.take() {
            let _ = handle.join();
        }
    }
}

struct Request {
    method: String,
    path: String,
    range: Option<String>,
}

fn read_request(stream: &TcpStream) -> Option<Request> {
    let mut reader = BufReader::new(stream);
    let mut line = String::new();
    reader.read_line(&mut line).ok()?;
    let mut parts = line.split_whitespace();
    let method = parts.next()?.to_string();
    let path = parts.next()?.to_string();
    let mut range = None;
    loop {
        let mut header = String::new();
        if reader.read_line(&mut header).ok()? == 0 {
            break;
        }
        let header = header.trim_end();
        if header.is_empty() {
            break;
        }
        if let Some((name, value)) = header.split_once(':') {
            if name.trim().eq_ignore_ascii_case("range") {
                range = Some(value.trim().to_string());
            }
        }
    }
    Some(Request { method, path, range })
}

/// Parses a single `bytes=` range against a resource of `size` bytes.
/// `Ok(None)` means the header is not a usable single range.
fn parse_range(value: &str, size: u64) -> std::result::Result<Option<(u64, u64)>, ()> {
    let Some(spec) = value.strip_prefix("bytes=") else {
        return Ok(None);
    };
    if spec.contains(',') {
        return Ok(None);
    }
    let Some((a, b)) = spec.split_once('-') else {
        return Ok(None);
    };
    let (a, b) = (a.trim(), b.trim());
    let range = if a.is_empty() {
        let suffix: u64 = b.parse().map_err(|_| ())?;
        if suffix == 0 || size == 0 {
            return Err(());
        }
        (size.saturating_sub(suffix), size - 1)
    } else {
        let start: u64 = a.parse().map_err(|_| ())?;
        let end = if b.is_empty() {
            size.saturating_sub(1)
        } else {
            b.parse::<u64>().map_err(|_| ())?.min(size.saturating_sub(1))
        };
        if start >= size || end < start {
            return Err(());
        }
        (start, end)
    };
    Ok(Some(range))
}

fn resolve(root: &Path, url_path: &str) -> Option<PathBuf> {
    let rel = url_path.split('?').next()?.trim_start_matches('/');
    let rel = Path::new(rel);
    if rel.components().any(|c| !matches!(c, Component::Normal(_))) {
        return None;
    }
    Some(root.join(rel))
}

fn handle_connection(
    mut stream: TcpStream,
    root: &Path,
    options: &FixtureOptions,
    stats: &Stats,
    guard: &mut ActiveGuard<'_>,
) -> Option<RequestRecord> {
    let _ = stream.set_read_timeout(Some(Duration::from_secs(10)));
    let request = read_request(&stream)?;
    let mut record = RequestRecord {
        method: request.method.clone(),
        path: request.path.clone(),
        range: None,
        status: 0,
        body_bytes_sent: 0,
        faulted: false,
        opened_s: 0.0,
        closed_s: 0.0,
    };

    let file = resolve(root, &request.path).and_then(|p| std::fs::File::open(p).ok());
    let head_only = request.method.eq_ignore_ascii_case("HEAD");
    let Some(mut file) = file.filter(|_| head_only || request.method.eq_ignore_ascii_case("GET")) else {
        record.status = 404;
        guard.release();
        let _ = stream.write_all(b"HTTP/1.1 404 Not Found\r\nContent-Length: 0\r\nConnection: close\r\n\r\n");
        return Some(record);
    };
    let size = file.metadata().ok()?.len();

    let range = match (options.ranges, request.range.as_deref()) {
        (true, Some(value)) => match parse_range(value, size) {
            Ok(r) => r,
            Err(()) => {
                record.status = 416;
                guard.release();
                let _ = write!(
                    stream,
                    "HTTP/1.1 416 Range Not Satisfiable\r\nContent-Range: bytes */{size}\r\nContent-Length: 0\r\nConnection: close\r\n\r\n"
                );
                return Some(record);
            }
        },
        _ => None,
    };

    let (start, len) = match range {
        Some((a, b)) => (a, b - a + 1),
        None => (0, size),
    };
    let mut head = match range {
        Some((a, b)) => format!("HTTP/1.1 206 Partial Content\r\nContent-Range: bytes {a}-{b}/{size}\r\n"),
        None => "HTTP/1.1 200 OK\r\n".to_string(),
    };
    if options.ranges {
        head.push_str("Accept-Ranges: bytes\r\n");
    }
    head.push_str(&format!(
        "Content-Length: {len}\r\nContent-Type: application/octet-stream\r\nConnection: close\r\n\r\n"
    ));
    record.status = if range.is_some() { 206 } else { 200 };
    record.range = range;

    if head_only || len == 0 {
        guard.release();
        let _ = stream.write_all(head.as_bytes());
        return Some(record);
    }
    stream.write_all(head.as_bytes()).ok()?;

    let fault_limit = options.fault.as_ref().and_then(|f| {
        let matches = f.path_filter.as_deref().is_none_or(|s| request.path.contains(s));
        let budget = f.max_triggers.is_none_or(|max| stats.faults.load(Ordering::SeqCst) < max);
        (matches && budget).then_some(f.after_bytes)
    });
    let to_send = fault_limit.map_or(len, |limit| limit.min(len));
    if fault_limit.is_some_and(|limit| limit < len) {
        stats.faults.fetch_add(1, Ordering::SeqCst);
        record.faulted = true;
    }

    file.seek(SeekFrom::Start(start)).ok()?;
    let mut reader = file.take(to_send);
    let mut buf = vec![0u8; 64 * 1024];
    let mut sent = 0u64;
    loop {
        let n = match reader.read(&mut buf) {
            Ok(0) => break,
            Ok(n) => n,
            Err(_) => break,
        };
        if sent + n as u64 >= to_send {
            // the client may start its next request as soon as this lands
            guard.release();
        }
        if stream.write_all(&buf[..n]).is_err() {
            break;
        }
        sent += n as u64;
    }
    record.body_bytes_sent = sent;
    if record.faulted {
        let _ = stream.shutdown(Shutdown::Both);
    }
    Some(record)
}
