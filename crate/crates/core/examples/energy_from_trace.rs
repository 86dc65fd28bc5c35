//! Measure the energy of a transfer from a power trace: base power from the
//! idle lead-in, the transfer window from the power signature, then the
//! dynamic and tail components.
//!
//! `cargo run --example energy_from_trace [trace.csv]`; without an argument a
//! synthetic trace with a 3 s idle lead-in is used. The power signature
//! cannot tell the radio tail from the transfer, so the detected window
//! runs to the end of the tail; when the transfer's own timestamps are
//! known, pass them as the window instead.

use xfer_energy::energy::{
    detect_transfer_window, energy_report, estimate_base_power, PowerSample, PowerTrace, TailParams, TransferWindow,
};

fn demo_trace() -> PowerTrace {
    // idle 0.9 W, 20 s transfer at about 2.1 W with ripple, 1 s tail at 1.5 W
    let samples = (0..=300)
        .map(|i| {
            let t = i as f64 / 10.0;
            let p = match t {
                t if t < 3.0 => 0.9,
                t if t < 23.0 => 2.1 + 0.1 * (t * 3.0).sin(),
                t if t < 24.0 => 1.5,
                _ => 0.9,
            };
            PowerSample::new(t, p)
        })
        .collect();
    PowerTrace::new(samples, 10.0).unwrap()
}

fn main() -> xfer_energy::Result<()> {
    let trace = match std::env::args().nth(1) {
        Some(path) => PowerTrace::load(path.as_ref())?,
        None => demo_trace(),
    };
    let tail = TailParams::default();
    let lead_in = TransferWindow::new(trace.start(), trace.start() + 2.5)?;
    let base = estimate_base_power(&trace, &lead_in)?;
    let window = detect_transfer_window(&trace, base, tail.threshold_w, tail.hold_s)?;
    let bytes = 100_000_000;
    let report = energy_report(&trace, &window, base, bytes, &tail)?;

    println!("base power      {base:.3} W");
    println!("transfer window {:.2} s .. {:.2} s", window.t_start, window.t_end);
    println!("E_base          {:.2} J", report.e_base_j);
    println!("E_dynamic       {:.2} J", report.e_dynamic_j);
    println!("E_total         {:.2} J", report.e_total_j);
    println!("tail            {:.2} J", report.e_tail_j);
    println!("per 100 MB      {:.2} J", report.e_per_100mb_j);
    if std::env::args().len() == 1 {
        let known = TransferWindow::new(3.0, 23.0)?;
        let aligned = energy_report(&trace, &known, base, bytes, &tail)?;
        println!("with the transfer's own window [3, 23] s the tail is {:.2} J", aligned.e_tail_j);
    }
    Ok(())
}
