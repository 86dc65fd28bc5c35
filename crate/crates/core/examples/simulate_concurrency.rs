//! Sweep concurrency for the three small datasets on the long-RTT WiFi
//! scenario and print throughput and energy per 100 MB.

use xfer_energy::engine::TransferPlan;
use xfer_energy::netsim::simulate_transfer;
use xfer_energy::scenario::Scenario;

fn main() -> xfer_energy::Result<()> {
    for dataset in ["HTML", "IMAGE", "VIDEO"] {
        let scenario = Scenario::sydney_wifi().with_dataset(dataset, 1.0);
        let sizes = scenario.file_sizes()?;
        println!("{dataset} ({} files)", sizes.len());
        println!("  {:>3} {:>10} {:>12}", "cc", "Mbps", "J/100MB");
        for cc in [1, 2, 4, 8, 16, 32] {
            let plan = TransferPlan::new(cc, 1, 8192)?;
            let sim = simulate_transfer(&plan, &sizes, &scenario.network, &scenario.power)?;
            println!("  {cc:>3} {:>10.2} {:>12.2}", sim.avg_throughput_mbps, sim.report.e_per_100mb_j);
        }
    }
    Ok(())
}
