//! Write a builtin dataset and its manifest to disk.
//!
//! `cargo run --example generate_dataset -- <NAME> <SCALE> <DIR> [SEED]`,
//! e.g. `HTML 1/8 /tmp/html`.

use xfer_energy::datasets::{builtin_spec, generate_dataset, parse_scale};

fn main() -> xfer_energy::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let name = args.first().map_or("HTML", String::as_str);
    let scale = parse_scale(args.get(1).map_or("1/16", String::as_str))?;
    let dir = args
        .get(2)
        .map(std::path::PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join(format!("dataset-{}", name.to_lowercase())));
    let seed = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(0);

    let spec = builtin_spec(name)?;
    let manifest = generate_dataset(&spec, seed, scale, &dir)?;
    let total = manifest.total_bytes();
    println!(
        "{} files, {:.1} MiB, mean {:.1} KiB, written to {}",
        manifest.entries.len(),
        total as f64 / (1 << 20) as f64,
        total as f64 / manifest.entries.len() as f64 / 1024.0,
        dir.display()
    );
    Ok(())
}
