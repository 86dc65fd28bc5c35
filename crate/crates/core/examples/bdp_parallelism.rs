//! Parallel streams help only while the per-stream TCP buffer is below the
//! bandwidth-delay product.

use xfer_energy::engine::TransferPlan;
use xfer_energy::netsim::{simulate_transfer, DevicePowerModel, NetworkConfig};

fn main() -> xfer_energy::Result<()> {
    let mut net = NetworkConfig::new(120.0, 0.29, 0.0);
    let bdp = net.bdp_bytes();
    let file = [10u64 << 30];
    println!("BDP = {:.0} bytes", bdp);
    for (label, buffer) in [("buffer = 2 x BDP", 2.0 * bdp), ("buffer = BDP / 8", bdp / 8.0)] {
        net.tcp_buffer_bytes = buffer;
        println!("{label}");
        for p in [1, 2, 4, 8, 16, 32] {
            let sim = simulate_transfer(&TransferPlan::new(1, p, 65536)?, &file, &net, &DevicePowerModel::wifi())?;
            println!("  p={p:>2} {:>8.2} Mbps", sim.avg_throughput_mbps);
        }
    }
    Ok(())
}
