//! Cross-checks of the spectral propagators against an independent
//! fixed-step fourth-order integrator. The integrator lives here, in test
//! code only, and shares nothing with the library's propagation path.

use num_complex::Complex64;
use zenosim_core::dynamics::{decompose, StateVector};
use zenosim_core::models::{ApparatusModel, ContinuumSpec, DecayModel, SpecialStateModel};

type C64 = Complex64;

/// One RK4 step of `d psi/dt = -i H psi` for a dense matrix `h`.
fn rk4_step(h: &[Vec<C64>], psi: &[C64], dt: f64) -> Vec<C64> {
    let n = psi.len();
    let apply = |v: &[C64]| -> Vec<C64> {
        (0..n)
            .map(|i| {
                let mut acc = C64::new(0.0, 0.0);
                for j in 0..n {
                    acc += h[i][j] * v[j];
                }
                acc * C64::new(0.0, -1.0)
            })
            .collect()
    };
    let add = |a: &[C64], b: &[C64], s: f64| -> Vec<C64> {
        a.iter().zip(b).map(|(x, y)| x + y * C64::new(s, 0.0)).collect()
    };
    let k1 = apply(psi);
    let k2 = apply(&add(psi, &k1, dt / 2.0));
    let k3 = apply(&add(psi, &k2, dt / 2.0));
    let k4 = apply(&add(psi, &k3, dt));
    (0..n)
        .map(|i| {
            psi[i] + (k1[i] + (k2[i] + k3[i]) * C64::new(2.0, 0.0) + k4[i])
                * C64::new(dt / 6.0, 0.0)
        })
        .collect()
}

fn integrate(h: &[Vec<C64>], psi0: &[C64], t: f64, dt: f64) -> Vec<C64> {
    let steps = (t / dt).round() as usize;
    let mut psi = psi0.to_vec();
    for _ in 0..steps {
        psi = rk4_step(h, &psi, dt);
    }
    psi
}

fn to_rows(m: &nalgebra::DMatrix<C64>) -> Vec<Vec<C64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

#[test]
fn spectral_evolution_matches_integrator() {
    // three-level decay model, survival amplitude at t = 1
    let model = DecayModel::from_parts(
        vec![-0.5, 0.5],
        vec![C64::new(0.1, 0.0), C64::new(0.1, 0.0)],
    )
    .unwrap();
    let dec = decompose(model.hermitian()).unwrap();
    let psi = model.initial_state();
    let evolved = dec.propagate(&psi, 1.0).unwrap();
    let overlap_spectral = psi.overlap(&evolved).norm();

    let h = to_rows(model.hermitian().matrix());
    let psi0 = vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)];
    let out = integrate(&h, &psi0, 1.0, 1e-4);
    let overlap_oracle = out[0].norm();

    assert!(
        (overlap_spectral - overlap_oracle).abs() < 1e-6,
        "spectral {overlap_spectral} vs integrator {overlap_oracle}"
    );
}

#[test]
fn spectral_state_matches_integrator_componentwise() {
    let model = DecayModel::from_parts(
        vec![-0.4, 0.1, 0.6],
        vec![C64::new(0.07, 0.0), C64::new(0.12, 0.0), C64::new(0.05, 0.0)],
    )
    .unwrap();
    let dec = decompose(model.hermitian()).unwrap();
    let psi = model.initial_state();
    let evolved = dec.propagate(&psi, 3.0).unwrap();

    let h = to_rows(model.hermitian().matrix());
    let mut psi0 = vec![C64::new(0.0, 0.0); 4];
    psi0[0] = C64::new(1.0, 0.0);
    let oracle = integrate(&h, &psi0, 3.0, 1e-4);
    for (a, b) in evolved.amplitudes().iter().zip(&oracle) {
        assert!((a - b).norm() < 1e-6, "{a} vs {b}");
    }
}

#[test]
fn effective_backend_matches_integrator() {
    // non-Hermitian effective apparatus: same dynamics from the Pade
    // exponential and from direct integration
    let spec = ContinuumSpec::flat_with_timescales(7, 6.0, 30.0).unwrap();
    let base = DecayModel::build(spec).unwrap();
    let app = ApparatusModel::effective(base.clone(), 0.0, 0.7).unwrap();
    let times: Vec<f64> = (0..=20).map(|k| 0.5 * k as f64).collect();
    let curve = app.survival(&times).unwrap();

    let mut h = to_rows(base.hermitian().matrix());
    let n = base.continuum_levels();
    for k in 0..n {
        h[1 + k][1 + k] += C64::new(0.0, -0.5 / 0.7);
    }
    let mut psi0 = vec![C64::new(0.0, 0.0); 1 + n];
    psi0[0] = C64::new(1.0, 0.0);
    for (idx, &t) in times.iter().enumerate() {
        let oracle = integrate(&h, &psi0, t, 1e-4);
        assert!(
            (curve.amplitude()[idx] - oracle[0]).norm() < 1e-7,
            "t = {t}"
        );
    }
}

#[test]
fn special_toy_crossing_matches_integrator() {
    // N = 3 enhanced model: zero crossing from the piecewise spectral
    // propagator against the integrator's sign change
    let base = DecayModel::from_parts(
        vec![-0.5, 0.0, 0.5],
        vec![C64::new(0.1, 0.0); 3],
    )
    .unwrap();
    let sm = SpecialStateModel::build(base.clone(), 1e4).unwrap();
    let prop = sm.propagator().unwrap();
    let tau_z = base.tau_zeno();
    let tau_p = std::f64::consts::FRAC_PI_2 * tau_z;
    let crossing = zenosim_core::fleming::first_orthogonal_time_of(
        |t| prop.amplitude(t).unwrap(),
        Some(tau_p),
        40.0,
        1e-6,
        tau_p / 64.0,
    )
    .unwrap()
    .expect("toy model crosses zero");

    // oracle: integrate the enhanced Hamiltonian and interpolate the sign
    // change of Re x
    let h = to_rows(sm.enhanced().matrix());
    let mut psi = vec![C64::new(0.0, 0.0); 7];
    psi[0] = C64::new(1.0, 0.0);
    let dt = 1e-3;
    let mut t = 0.0;
    let mut prev = psi[0].re;
    let mut oracle_crossing = None;
    while t < 40.0 {
        psi = rk4_step(&h, &psi, dt);
        t += dt;
        let cur = psi[0].re;
        if prev > 0.0 && cur <= 0.0 {
            oracle_crossing = Some(t - dt * cur.abs() / (cur - prev).abs());
            break;
        }
        prev = cur;
    }
    let oracle_crossing = oracle_crossing.expect("oracle found no crossing");
    assert!(
        (crossing - oracle_crossing).abs() / oracle_crossing < 1e-3,
        "spectral {crossing} vs oracle {oracle_crossing}"
    );
}

#[test]
fn pade_exponential_agrees_with_spectral_propagator() {
    // dual route on a Hermitian model: expm(-iHt) column against V e V^H
    let spec = ContinuumSpec::flat_with_timescales(5, 4.0, 20.0).unwrap();
    let model = DecayModel::build(spec).unwrap();
    let t = 2.3;
    let u = zenosim_core::expm::expm(
        &(model.hermitian().matrix() * C64::new(0.0, -t)),
    )
    .unwrap();
    let dec = decompose(model.hermitian()).unwrap();
    let psi = model.initial_state();
    let spectral = dec.propagate(&psi, t).unwrap();
    for i in 0..model.dim() {
        assert!((u[(i, 0)] - spectral.amplitudes()[i]).norm() < 1e-12);
    }
}
