use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The tunable application-layer triple.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TransferPlan {
    /// Files in flight at once (cc).
    pub concurrency: u32,
    /// Byte-range streams per file (p).
    pub parallelism: u32,
    /// Unit size of each read and write issued by the client.
    pub io_request_bytes: u32,
}

impl TransferPlan {
    pub fn new(concurrency: u32, parallelism: u32, io_request_bytes: u32) -> Result<Self> {
        let plan = Self {
            concurrency,
            parallelism,
            io_request_bytes,
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn validate(&self) -> Result<()> {
        if self.concurrency == 0 || self.parallelism == 0 || self.io_request_bytes == 0 {
            return Err(Error::InvalidParameter(format!(
                "plan fields must be >= 1, got cc={} p={} io={}",
                self.concurrency, self.parallelism, self.io_request_bytes
            )));
        }
        Ok(())
    }
}

impl Default for TransferPlan {
    fn default() -> Self {
        Self {
            concurrency: 1,
            parallelism: 1,
            io_request_bytes: 8 * 1024,
        }
    }
}

/// Inclusive byte range `[start, end]` of one chunk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ByteRange {
    pub start: u64,
    pub end: u64,
}

impl ByteRange {
    pub fn len(&self) -> u64 {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Value for an HTTP `Range` header.
    pub fn header_value(&self) -> String {
        format!("bytes={}-{}", self.start, self.end)
    }
}

/// Splits `file_size` bytes into `min(parallelism, file_size)` contiguous,
/// non-empty ranges whose lengths differ by at most one byte.
pub fn plan_chunks(file_size: u64, parallelism: u32) -> Vec<ByteRange> {
    let parts = u64::from(parallelism.max(1)).min(file_size);
    if parts == 0 {
        return Vec::new();
    }
    let base = file_size / parts;
    let extra = file_size % parts;
    let mut start = 0;
    (0..parts)
        .map(|i| {
            let len = base + u64::from(i < extra);
            let range = ByteRange {
                start,
                end: start + len - 1,
            };
            start += len;
            range
        })
        .collect()
}
