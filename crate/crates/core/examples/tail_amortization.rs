//! Two files fetched in isolation pay the radio tail twice; fetched
//! back-to-back or concurrently they pay it once. Tail energy is measured
//! from the synthesized power traces.

use xfer_energy::energy::{energy_report, TailParams};
use xfer_energy::engine::TransferPlan;
use xfer_energy::netsim::{simulate_transfer, DevicePowerModel, NetworkConfig, SimResult};

fn tail_j(sim: &SimResult, power: &DevicePowerModel) -> f64 {
    energy_report(&sim.trace, &sim.window(), power.p_base_w, sim.total_bytes, &TailParams::default())
        .unwrap()
        .e_tail_j
}

fn main() -> xfer_energy::Result<()> {
    let net = NetworkConfig::new(40.0, 0.1, 4.0 * 1024.0 * 1024.0);
    let file = 20_000_000;
    for power in [DevicePowerModel::lte(), DevicePowerModel::wifi()] {
        let single = simulate_transfer(&TransferPlan::new(1, 1, 65536)?, &[file], &net, &power)?;
        let back_to_back = simulate_transfer(&TransferPlan::new(1, 1, 65536)?, &[file, file], &net, &power)?;
        let concurrent = simulate_transfer(&TransferPlan::new(2, 1, 65536)?, &[file, file], &net, &power)?;
        println!("{:?} radio", power.radio_kind);
        println!("  two isolated runs: {:.3} J of tail", 2.0 * tail_j(&single, &power));
        println!("  back-to-back:      {:.3} J", tail_j(&back_to_back, &power));
        println!("  concurrent:        {:.3} J", tail_j(&concurrent, &power));
    }
    Ok(())
}
