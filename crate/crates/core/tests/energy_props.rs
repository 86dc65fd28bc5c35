use proptest::prelude::*;
use xfer_energy::energy::{
    energy_report, integrate_dynamic_energy, normalize_per_100mb, segment_tail, PowerSample, PowerTrace, TailParams,
    TransferWindow,
};

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-12)
}

prop_compose! {
    fn arb_trace()(gaps in prop::collection::vec(0.01f64..0.5, 4..150),
                   t0 in 0.0f64..5.0)
                  (powers in prop::collection::vec(0.0f64..6.0, gaps.len() + 1), gaps in Just(gaps), t0 in Just(t0))
                  -> PowerTrace {
        let mut t = t0;
        let mut samples = vec![PowerSample::new(t, powers[0])];
        for (g, p) in gaps.iter().zip(&powers[1..]) {
            t += g;
            samples.push(PowerSample::new(t, *p));
        }
        PowerTrace::from_samples(samples).unwrap()
    }
}

/// Trace plus three ordered points inside it.
fn trace_with_cuts() -> impl Strategy<Value = (PowerTrace, f64, f64, f64)> {
    (arb_trace(), 0.0f64..1.0, 0.0f64..1.0, 0.0f64..1.0).prop_map(|(trace, u, v, w)| {
        let mut f = [u, v, w];
        f.sort_by(f64::total_cmp);
        let span = trace.end() - trace.start();
        let at = |x: f64| trace.start() + x * span;
        let (a, b, c) = (at(f[0]), at(f[1]), at(f[2]));
        (trace, a, b, c)
    })
}

proptest! {
    #[test]
    fn adjacent_windows_add_up((trace, a, b, c) in trace_with_cuts(), base in 0.0f64..3.0) {
        prop_assume!(a < b && b < c);
        let left = integrate_dynamic_energy(&trace, base, &TransferWindow::new(a, b).unwrap()).unwrap();
        let right = integrate_dynamic_energy(&trace, base, &TransferWindow::new(b, c).unwrap()).unwrap();
        let whole = integrate_dynamic_energy(&trace, base, &TransferWindow::new(a, c).unwrap()).unwrap();
        let scale: f64 = left.abs() + right.abs() + whole.abs();
        prop_assert!((left + right - whole).abs() <= 1e-9 * scale.max(1e-9));
    }

    #[test]
    fn raising_base_shifts_dynamic_energy((trace, a, _b, c) in trace_with_cuts(), base in 0.0f64..3.0, delta in 0.0f64..1.0) {
        prop_assume!(a < c);
        let w = TransferWindow::new(a, c).unwrap();
        let e0 = integrate_dynamic_energy(&trace, base, &w).unwrap();
        let e1 = integrate_dynamic_energy(&trace, base + delta, &w).unwrap();
        let expected = e0 - delta * w.length();
        let scale: f64 = e0.abs() + (delta * w.length()).abs();
        prop_assert!((e1 - expected).abs() <= 1e-9 * scale.max(1e-9));
    }

    #[test]
    fn report_identity_holds((trace, a, _b, c) in trace_with_cuts(), base in 0.0f64..3.0, bytes in 1u64..10_000_000_000) {
        prop_assume!(a < c);
        let w = TransferWindow::new(a, c).unwrap();
        let r = energy_report(&trace, &w, base, bytes, &TailParams::default()).unwrap();
        prop_assert!(rel_close(r.e_total_j, r.e_base_j + r.e_dynamic_j, 1e-9));
    }

    #[test]
    fn no_tail_when_everything_after_is_quiet(
        lead in prop::collection::vec(0.0f64..6.0, 2..40),
        quiet in prop::collection::vec(0.0f64..1.0, 2..60),
        base in 0.5f64..2.0,
        threshold in 0.05f64..0.5,
    ) {
        let n_lead = lead.len();
        let samples: Vec<PowerSample> = lead
            .iter()
            // quiet samples stay strictly below base + threshold
            .chain(quiet.iter().map(|u| base + threshold * 0.999 * (2.0 * u - 1.0)).collect::<Vec<_>>().iter())
            .enumerate()
            .map(|(i, &p)| PowerSample::new(i as f64 * 0.1, p.max(0.0)))
            .collect();
        let trace = PowerTrace::new(samples, 10.0).unwrap();
        let last_byte = (n_lead - 1) as f64 * 0.1 + 0.1;
        let (dur, e) = segment_tail(&trace, last_byte, base, threshold, 0.2).unwrap();
        prop_assert_eq!((dur, e), (0.0, 0.0));
    }

    #[test]
    fn normalization_is_linear(e in -1e4f64..1e4, k in 0.01f64..100.0, bytes in 1u64..1_000_000_000_000, m in 1u64..64) {
        let base = normalize_per_100mb(e, bytes).unwrap();
        prop_assert!(rel_close(normalize_per_100mb(k * e, bytes).unwrap(), k * base, 1e-12));
        prop_assume!(bytes.checked_mul(m).is_some());
        prop_assert!(rel_close(normalize_per_100mb(e, bytes * m).unwrap(), base / m as f64, 1e-12));
    }
}
