//! A simulated sweep over cc and p, written as a CSV report and gnuplot
//! data, followed by the tuner's picks.

use xfer_energy::bench::{emit_plot_data, emit_report, run_experiment, ExperimentConfig, FigureKind, ReportFormat};
use xfer_energy::scenario::Scenario;
use xfer_energy::tuner::{recommend_plan, Objective};

fn main() -> xfer_energy::Result<()> {
    let scenario = Scenario::sydney_wifi().with_dataset("VIDEO", 0.25);
    let config = ExperimentConfig::sim(scenario).with_grid(&[1, 2, 4, 8, 16, 32], &[1, 2, 4, 8], &[8192]);
    let result = run_experiment(&config)?;

    let out = std::env::temp_dir().join("xfer-sweep");
    std::fs::create_dir_all(&out)?;
    emit_report(&result, ReportFormat::Csv, &out.join("sweep.csv"))?;
    for kind in [FigureKind::EnergyVsCc, FigureKind::SurfaceCcP] {
        emit_plot_data(&result, kind, &out.join(format!("{}.dat", kind.name())))?;
    }
    println!("wrote {} cells to {}", result.cells.len(), out.display());

    let grid = result.to_grid();
    for objective in [Objective::MaxThroughput, Objective::MinEnergy, Objective::EnergyUnderThroughputFloor(40.0)] {
        let plan = recommend_plan(&grid, objective)?;
        println!("{objective:?}: cc={} p={}", plan.concurrency, plan.parallelism);
    }
    Ok(())
}
