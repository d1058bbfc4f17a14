//! Scratch probe for tuning acceptance-scale runs. Not part of the library.

use std::time::Instant;

use zenosim_core::dynamics::survival_amplitude;
use zenosim_core::fleming;
use zenosim_core::measurement::{
    self, effective_rate_pulsed, pulsed_survival, PulsedSchedule,
};
use zenosim_core::models::{ApparatusModel, ContinuumSpec, DecayModel};
use zenosim_core::special;
use zenosim_core::timescales::{self, fit_lifetime};

fn main() {
    let t0 = Instant::now();
    let spec = ContinuumSpec::flat_with_timescales(101, 48.0, 393.0).unwrap();
    println!(
        "calibration: phi = {:.6e}, spacing = {:.6e}",
        spec.coupling_scale,
        spec.spacing()
    );
    let model = DecayModel::build(spec).unwrap();
    let tau_z = model.tau_zeno();
    let gamma = model.golden_rate().unwrap();
    let tau_j = tau_z * tau_z * gamma;
    println!(
        "tau_Z = {tau_z}, gamma = {gamma:.6e} (1/{:.1}), tau_J = {tau_j:.4}, t_rec = {:?}",
        1.0 / gamma,
        model.recurrence_time()
    );

    // bare survival + fit
    let times: Vec<f64> = (0..=1100).map(|k| 0.5 * k as f64).collect();
    let curve = model.survival(&times).unwrap();
    let (lo, hi) = timescales::default_fit_window(&model, &curve, 5.0);
    let fit = fit_lifetime(&curve, lo, hi).unwrap();
    println!(
        "bare fit over [{lo:.1}, {hi:.1}]: tau_L = {:.3}, rms = {:.2e} [{:.1} ms]",
        fit.lifetime(),
        fit.rms_log_residual,
        t0.elapsed().as_millis()
    );

    // quadratic regime
    let dt = tau_z / 100.0;
    let q = survival_amplitude(model.hermitian(), &model.initial_state(), &[dt]).unwrap();
    println!(
        "quadratic: |p - 1 + (dt/tz)^2| = {:.3e}",
        (q.probability()[0] - 1.0 + (dt / tau_z).powi(2)).abs()
    );

    // pulsed rates
    for mult in [1.0 / 20.0, 1.0 / 10.0, 1.0 / 4.0] {
        let tau_pm = tau_j * mult;
        let horizon = 2.5 * tau_z * tau_z / tau_pm;
        let sched = PulsedSchedule::new(tau_pm, horizon).unwrap();
        let pc = pulsed_survival(model.hermitian(), &model.initial_state(), &sched).unwrap();
        let rate = effective_rate_pulsed(&pc).unwrap();
        let law = tau_pm / (tau_z * tau_z);
        println!(
            "pulsed tau_PM = tau_J*{mult:.3}: rate = {rate:.4e}, law = {law:.4e}, ratio = {:.4}",
            rate / law
        );
    }

    // self-energy: bare + special
    let root = measurement::solve_self_energy_bare(&model).unwrap();
    println!(
        "bare root: gamma_eff = {:.6e} (/golden: {:.5}), resid {:.1e}, iters {}",
        root.gamma_effective(),
        root.gamma_effective() / gamma,
        root.residual,
        root.iterations
    );
    let sroot = special::special_self_energy(&model).unwrap();
    println!(
        "special root: Re = {:.6e} (ratio {:.5}), Im = {:.4e} (ratio vs -G/16 {:.4}), resid {:.1e}",
        sroot.re,
        sroot.re * std::f64::consts::SQRT_2 * tau_z,
        sroot.im,
        sroot.im / (-gamma / 16.0),
        sroot.residual
    );

    // special experiment
    let t1 = Instant::now();
    let t_off = std::f64::consts::SQRT_2 * std::f64::consts::FRAC_PI_2 * tau_z;
    let run = special::run_special_experiment(&model, t_off, 180.0, 0.25, 1e-4).unwrap();
    println!(
        "special: crossing = {:?} (analytic {:.3}), bare@crossing = {:?}, freq ratio = {:?}, damping = {:?} vs {:?}  [{:.1} ms]",
        run.crossing,
        run.analytic_crossing,
        run.bare_at_crossing,
        run.fitted_frequency.map(|f| f / run.frequency_prediction),
        run.fitted_damping,
        run.damping_prediction,
        t1.elapsed().as_millis()
    );
    // reduced vs full sup-norm
    let reduced = special::reduced_oscillator_solution(
        tau_z,
        gamma,
        run.curve_special.times(),
    )
    .unwrap();
    let mut sup = 0.0f64;
    for ((&t, &p), &r) in run
        .curve_special
        .times()
        .iter()
        .zip(run.curve_special.probability())
        .zip(&reduced)
    {
        if t <= run.analytic_crossing {
            sup = sup.max((p.sqrt() - r.abs()).abs());
        }
    }
    println!("reduced-vs-full sup diff on [0, sqrt2 tauP]: {sup:.4}");

    // post-crossing window
    if let Some(tc) = run.crossing {
        let mut max_p = 0.0f64;
        for (&t, &p) in run
            .curve_special
            .times()
            .iter()
            .zip(run.curve_special.probability())
        {
            if t > tc && t <= tc + tau_z {
                max_p = max_p.max(p);
            }
        }
        println!("post-crossing max survival over tau_Z window: {max_p:.4}");
    }

    // fleming on two-level
    let two = zenosim_core::models::two_level(1.0).unwrap();
    let psi = zenosim_core::dynamics::StateVector::basis(2, 0);
    let grid: Vec<f64> = (0..=100).map(|k| k as f64 * 0.0157).collect();
    let rep = fleming::fleming_bound_report(&two, &psi, &grid).unwrap();
    println!("two-level max |theta - bound| = {:.2e}", rep.max_violation.abs());
    let fo = fleming::first_orthogonal_time(&two, &psi, 3.0, 1e-6).unwrap();
    println!("two-level first orthogonal = {:?} (pi/2 = {:.6})", fo, std::f64::consts::FRAC_PI_2);

    // apparatus: full vs effective vs law, three response times
    for (mult, n_levels, span_mult, horizon) in [
        (0.1, 9usize, 12.0, 800.0),
        (0.5, 15, 12.0, 600.0),
        (1.0, 21, 12.0, 600.0),
    ] {
        let t2 = Instant::now();
        let tau_r = tau_j * mult;
        let gamma_theta = 1.0 / tau_r;
        let bspec = ContinuumSpec::flat_with_timescales(n_levels, 48.0, 393.0).unwrap();
        let b = DecayModel::build(bspec).unwrap();
        let span = span_mult * gamma_theta + 1.2;
        let dnu = std::f64::consts::TAU / (1.25 * horizon);
        let per = ((span / dnu).ceil() as usize).max(2);
        let total = per * n_levels;
        let full = ApparatusModel::with_response_time(b.clone(), tau_r, total, span).unwrap();
        let eff = ApparatusModel::effective(b.clone(), 0.0, tau_r).unwrap();
        let ts: Vec<f64> = (0..=600).map(|k| horizon * k as f64 / 600.0).collect();
        let cf = full.survival(&ts).unwrap();
        let ce = eff.survival(&ts).unwrap();
        let guard = 5.0 * tau_j;
        let rf = fit_lifetime(&cf, guard, horizon).unwrap().rate;
        let re = fit_lifetime(&ce, guard, horizon).unwrap().rate;
        let law = 4.0 * tau_r / (tau_z * tau_z);
        println!(
            "apparatus tau_R = tau_J*{mult}: dim = {}, full = {rf:.4e}, eff = {re:.4e}, law = {law:.4e}, full/law = {:.4}, eff/full = {:.4}  [{:.1} s]",
            full.dim(),
            rf / law,
            re / rf,
            t2.elapsed().as_secs_f64()
        );
        let root = measurement::solve_self_energy(&full).unwrap();
        println!(
            "  full-root gamma_eff = {:.4e} (/full-fit {:.4})",
            root.gamma_effective(),
            root.gamma_effective() / rf
        );
    }

    // equivalence
    for mult in [0.1, 0.5, 1.0] {
        let tau_r = tau_j * mult;
        let eq = measurement::equivalence_check(&model, tau_r).unwrap();
        println!(
            "equivalence tau_R = tau_J*{mult}: cont = {:.4e}, pulsed = {:.4e}, ratio = {:.4}",
            eq.rate_continuous, eq.rate_pulsed, eq.ratio
        );
    }

    println!("total: {:.1} s", t0.elapsed().as_secs_f64());
}
