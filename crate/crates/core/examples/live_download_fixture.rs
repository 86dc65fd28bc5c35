//! Generate a small dataset, serve it from the local fixture and download
//! it with several plans, verifying every file against the manifest.

use xfer_energy::datasets::fixture::{FixtureOptions, FixtureServer};
use xfer_energy::datasets::{builtin_spec, dataset_urls, generate_dataset};
use xfer_energy::engine::{execute_transfer, verify_integrity, FileJob, SystemClock, TransferPlan};

fn main() -> xfer_energy::Result<()> {
    let root = std::env::temp_dir().join(format!("xfer-example-{}", std::process::id()));
    let served = root.join("served");
    let manifest = generate_dataset(&builtin_spec("IMAGE")?, 1, 1.0 / 32.0, &served)?;
    let server = FixtureServer::start(&served, FixtureOptions::default())?;
    println!("serving {} files at {}", manifest.entries.len(), server.base_url());

    for (cc, p, io) in [(1, 1, 1024), (4, 2, 8192), (8, 8, 65536)] {
        let plan = TransferPlan::new(cc, p, io)?;
        let out = root.join(format!("cc{cc}_p{p}_io{io}"));
        let jobs: Vec<FileJob> = dataset_urls(&server.base_url(), &manifest)
            .into_iter()
            .zip(&manifest.entries)
            .map(|((url, rel), e)| FileJob::new(url, out.join(rel)).with_expected_bytes(e.bytes))
            .collect();
        let result = execute_transfer(&jobs, &plan, &SystemClock::new())?;
        let verified = manifest
            .entries
            .iter()
            .filter(|e| verify_integrity(&out.join(&e.name), &e.digest).unwrap_or(false))
            .count();
        println!(
            "cc={cc} p={p} io={io}: {:.1} Mbps, {verified}/{} verified, peak {} connections",
            result.avg_throughput_mbps,
            manifest.entries.len(),
            server.max_concurrent_connections()
        );
        server.reset_max_concurrent();
    }
    std::fs::remove_dir_all(&root).ok();
    Ok(())
}
