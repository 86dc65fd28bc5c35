//! Fit the stream-count throughput model from three probe runs and pick the
//! knee, then compare with the full simulated curve.

use xfer_energy::engine::TransferPlan;
use xfer_energy::netsim::simulate_transfer;
use xfer_energy::scenario::Scenario;
use xfer_energy::tuner::{fit_throughput_model, predict_optimal_n, ThroughputSample};

fn main() -> xfer_energy::Result<()> {
    let scenario = Scenario::sydney_wifi().with_dataset("VIDEO", 0.25);
    let sizes = scenario.file_sizes()?;
    let run = |cc: u32| -> xfer_energy::Result<f64> {
        let plan = TransferPlan::new(cc, 1, 8192)?;
        Ok(simulate_transfer(&plan, &sizes, &scenario.network, &scenario.power)?.avg_throughput_mbps)
    };

    let probes = [1, 4, 16];
    let samples = probes
        .iter()
        .map(|&n| Ok(ThroughputSample::new(n, run(n)?)))
        .collect::<xfer_energy::Result<Vec<_>>>()?;
    let model = fit_throughput_model(&samples)?;
    println!("a={:.3e} b={:.3e} c={:.3e}", model.a, model.b, model.c);
    println!("{:>3} {:>10} {:>10}", "cc", "sim", "model");
    for cc in [1, 2, 4, 8, 16, 32] {
        println!("{cc:>3} {:>10.2} {:>10.2}", run(cc)?, model.predict(cc as f64));
    }
    println!("recommended concurrency: {}", predict_optimal_n(&model, 32, 0.05));
    Ok(())
}
