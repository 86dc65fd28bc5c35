use proptest::prelude::*;
use xfer_energy::energy::integrate_dynamic_energy;
use xfer_energy::engine::TransferPlan;
use xfer_energy::netsim::{simulate_transfer, DevicePowerModel, IoDrainCurve, NetworkConfig};
use xfer_energy::scenario::Scenario;

fn plan(cc: u32, p: u32, io: u32) -> TransferPlan {
    TransferPlan::new(cc, p, io).unwrap()
}

fn arb_network() -> impl Strategy<Value = NetworkConfig> {
    (5.0f64..200.0, 0.005f64..0.4, 0.05f64..3.0, 0.0f64..3.0).prop_map(|(cap, rtt, buf_bdp, setup)| {
        let mut n = NetworkConfig::new(cap, rtt, 1.0);
        n.tcp_buffer_bytes = n.bdp_bytes() * buf_bdp;
        n.per_request_setup_rtts = setup;
        n
    })
}

fn arb_power() -> impl Strategy<Value = DevicePowerModel> {
    (any::<bool>(), 0.0f64..0.1).prop_map(|(lte, per_conn)| {
        let mut p = if lte { DevicePowerModel::lte() } else { DevicePowerModel::wifi() };
        p.p_per_connection_w = per_conn;
        p
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn bytes_are_conserved(
        net in arb_network(),
        files in prop::collection::vec(0u64..3_000_000, 1..25),
        cc in 1u32..10, p in 1u32..10,
        io in prop::sample::select(vec![1024u32, 4096, 8192, 65536]),
    ) {
        let sim = simulate_transfer(&plan(cc, p, io), &files, &net, &DevicePowerModel::wifi()).unwrap();
        prop_assert_eq!(sim.delivered_per_file(files.len()), files.clone());
        prop_assert_eq!(sim.total_bytes, files.iter().sum::<u64>());
    }

    #[test]
    fn throughput_rises_with_cc_and_never_beats_the_link(
        net in arb_network(),
        size in 100_000u64..5_000_000,
    ) {
        // 64 equal files: every cc level below divides the batch evenly
        let files = vec![size; 64];
        let mut last = 0.0;
        for cc in [1, 2, 4, 8, 16, 32, 64] {
            let th = simulate_transfer(&plan(cc, 1, 65536), &files, &net, &DevicePowerModel::wifi())
                .unwrap()
                .avg_throughput_mbps;
            prop_assert!(th <= net.link_capacity_mbps * (1.0 + 1e-9));
            prop_assert!(th >= last * (1.0 - 1e-9), "cc={} th={} < {}", cc, th, last);
            last = th;
        }
    }

    #[test]
    fn buffer_above_bdp_makes_parallelism_moot(
        cap in 5.0f64..150.0, rtt in 0.01f64..0.4, over in 1.0f64..4.0,
    ) {
        let mut net = NetworkConfig::new(cap, rtt, 1.0);
        net.tcp_buffer_bytes = net.bdp_bytes() * over;
        net.io_drain = IoDrainCurve::unlimited();
        let file = [2u64 << 30];
        let th: Vec<f64> = [1, 2, 4, 8, 16, 32]
            .iter()
            .map(|&p| simulate_transfer(&plan(1, p, 65536), &file, &net, &DevicePowerModel::wifi()).unwrap().avg_throughput_mbps)
            .collect();
        let lo = th.iter().cloned().fold(f64::MAX, f64::min);
        let hi = th.iter().cloned().fold(f64::MIN, f64::max);
        prop_assert!((hi - lo) / lo < 0.05, "{:?}", th);
    }

    #[test]
    fn parallelism_recovers_a_small_buffer(
        cap in 5.0f64..150.0, rtt in 0.01f64..0.4, k in 1u32..=8,
    ) {
        let mut net = NetworkConfig::new(cap, rtt, 1.0);
        net.tcp_buffer_bytes = net.bdp_bytes() / k as f64;
        net.io_drain = IoDrainCurve::unlimited();
        let file = [2u64 << 30];
        let th = |p| simulate_transfer(&plan(1, p, 65536), &file, &net, &DevicePowerModel::wifi()).unwrap().avg_throughput_mbps;
        prop_assert!(th(k) >= 0.8 * k as f64 * th(1));
    }

    #[test]
    fn one_tail_per_batch(
        net in arb_network(), power in arb_power(), size in 1_000u64..10_000_000,
    ) {
        let single = simulate_transfer(&plan(1, 1, 8192), &[size], &net, &power).unwrap();
        let b2b = simulate_transfer(&plan(1, 1, 8192), &[size, size], &net, &power).unwrap();
        let conc = simulate_transfer(&plan(2, 1, 8192), &[size, size], &net, &power).unwrap();
        prop_assert_eq!(2.0 * single.report.e_tail_j, 2.0 * b2b.report.e_tail_j);
        prop_assert_eq!(b2b.report.e_tail_j, conc.report.e_tail_j);
        prop_assert_eq!(single.report.e_tail_j, power.tail_power_w * power.tail_duration_s);
    }

    #[test]
    fn trace_reproduces_dynamic_energy(
        net in arb_network(), power in arb_power(),
        files in prop::collection::vec(1u64..5_000_000, 1..20),
        cc in 1u32..12, p in 1u32..12,
    ) {
        let sim = simulate_transfer(&plan(cc, p, 8192), &files, &net, &power).unwrap();
        let e = integrate_dynamic_energy(&sim.trace, power.p_base_w, &sim.window()).unwrap();
        prop_assert!((e - sim.report.e_dynamic_j).abs() <= 0.01 * sim.report.e_dynamic_j.abs());
    }
}

#[test]
fn energy_vs_cc_is_unimodal_on_calibrated_scenarios() {
    for scenario in Scenario::presets() {
        for dataset in ["HTML", "IMAGE", "VIDEO"] {
            let s = scenario.clone().with_dataset(dataset, 1.0);
            let sizes = s.file_sizes().unwrap();
            let energy: Vec<f64> = [1, 2, 4, 8, 16, 32]
                .iter()
                .map(|&cc| simulate_transfer(&plan(cc, 1, 8192), &sizes, &s.network, &s.power).unwrap().report.e_per_100mb_j)
                .collect();
            let rises = energy.windows(2).position(|w| w[1] > w[0]);
            if let Some(i) = rises {
                assert!(
                    energy[i..].windows(2).all(|w| w[1] >= w[0]),
                    "{} {dataset}: {energy:?}",
                    s.name
                );
            }
        }
    }
}
