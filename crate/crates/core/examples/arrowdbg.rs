//! Scratch: accuracy/speed check of the secular solver at apparatus scale.

use zenosim_core::arrowhead::head_spectrum;
use zenosim_core::models::{ApparatusModel, ContinuumSpec, DecayModel};

fn main() {
    // uniform stress case with a reference bisection solve
    let n = 4000;
    let d: Vec<f64> = (0..n)
        .map(|k| -10.0 + 20.0 * k as f64 / (n as f64 - 1.0))
        .collect();
    let c: Vec<f64> = (0..n)
        .map(|k| 1e-3 * (1.0 + 0.5 * ((k * 13 % 97) as f64 / 97.0)))
        .collect();
    let t0 = std::time::Instant::now();
    let spec = head_spectrum(0.0, &d, &c).unwrap();
    println!(
        "uniform 4k: weight sum - 1 = {:.3e}, time = {:.3} s",
        spec.weight_sum() - 1.0,
        t0.elapsed().as_secs_f64()
    );

    // reference: pure bisection on a sample of gaps
    let c2: Vec<f64> = c.iter().map(|x| x * x).collect();
    let secular = |lam: f64| -> f64 {
        let mut s = lam;
        for (&di, &ci2) in d.iter().zip(&c2) {
            s -= ci2 / (lam - di);
        }
        s
    };
    let mut worst = 0.0f64;
    for gap in (1..n).step_by(37) {
        let (mut a, mut b) = (d[gap - 1], d[gap]);
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if mid <= a || mid >= b {
                break;
            }
            if secular(mid) < 0.0 {
                a = mid;
            } else {
                b = mid;
            }
        }
        let rb = 0.5 * (a + b);
        let diff = (spec.eigenvalues[gap] - rb).abs() / rb.abs().max(1e-10);
        worst = worst.max(diff);
    }
    println!("sampled eigenvalue rel diff vs bisection: {worst:.3e}");

    // apparatus-scale case
    let tau_j = 48.0 * 48.0 / 393.0;
    let tau_r = tau_j * 0.1;
    let gamma_theta = 1.0 / tau_r;
    let bspec = ContinuumSpec::flat_with_timescales(9, 48.0, 393.0).unwrap();
    let b = DecayModel::build(bspec).unwrap();
    let span = 12.0 * gamma_theta + 1.2;
    let dnu = std::f64::consts::TAU / (1.25 * 800.0);
    let per = ((span / dnu).ceil() as usize).max(2);
    let full = ApparatusModel::with_response_time(b, tau_r, per * 9, span).unwrap();
    let t1 = std::time::Instant::now();
    let spec = full.head_spectrum().unwrap();
    println!(
        "apparatus dim {}: weight sum - 1 = {:.3e}, f(0) = {}, time = {:.2} s",
        full.dim(),
        spec.weight_sum() - 1.0,
        spec.head_amplitude(0.0),
        t1.elapsed().as_secs_f64()
    );
}
