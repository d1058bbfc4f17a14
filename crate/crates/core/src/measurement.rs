//! Measurement backends: idealized pulsed projections (the Zeno product law),
//! continuous monitoring through the apparatus models, complex self-energy
//! roots of the resolvent fixed-point equations, and the pulsed/continuous
//! equivalence check.

use num_complex::Complex64;
use serde::Serialize;

use crate::dynamics::{decompose, HermitianModel, StateVector, SurvivalCurve};
use crate::error::{Error, Result};
use crate::models::{ApparatusModel, DecayModel};
use crate::timescales::fit_lifetime;

/// Interval between ideal projections onto the initial state, and the total
/// observation time.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PulsedSchedule {
    pub tau_pulse: f64,
    pub horizon: f64,
}

impl PulsedSchedule {
    pub fn new(tau_pulse: f64, horizon: f64) -> Result<Self> {
        if !(tau_pulse > 0.0 && horizon > 0.0 && tau_pulse <= horizon) {
            return Err(Error::InvalidSpec(format!(
                "need 0 < tau_pulse <= horizon, got {tau_pulse}, {horizon}"
            )));
        }
        Ok(Self { tau_pulse, horizon })
    }

    pub fn intervals(&self) -> usize {
        (self.horizon / self.tau_pulse * (1.0 + 1e-12)).floor() as usize
    }
}

/// Survival curves longer than this are subsampled (still exactly on
/// projection times).
const MAX_PULSED_SAMPLES: usize = 20_000;

/// Survival under projective measurements at fixed intervals.
///
/// Projection onto a one-dimensional undecayed subspace makes the survival
/// exact and multiplicative: `p(n tau) = p1(tau)^n` with
/// `p1 = |<psi|U(tau)|psi>|^2`, so the curve is built from one propagator
/// evaluation rather than trajectory sampling.
pub fn pulsed_survival(
    model: &HermitianModel,
    psi: &StateVector,
    schedule: &PulsedSchedule,
) -> Result<SurvivalCurve> {
    let dec = decompose(model)?;
    if psi.dim() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            got: psi.dim(),
        });
    }
    let weights = dec.weights(psi);
    let f1 = dec.raw_amplitude(&weights, schedule.tau_pulse);

    let n = schedule.intervals();
    let stride = n / MAX_PULSED_SAMPLES + 1;
    let mut times = Vec::new();
    let mut amps = Vec::new();
    let mut k = 0usize;
    while k <= n {
        times.push(k as f64 * schedule.tau_pulse);
        amps.push(f1.powi(k as i32));
        k += stride;
    }
    SurvivalCurve::from_samples(times, amps)
}

/// Exponential rate of a stroboscopic pulsed curve.
pub fn effective_rate_pulsed(curve: &SurvivalCurve) -> Result<f64> {
    let t_end = *curve.times().last().ok_or(Error::EmptyTimes)?;
    let fit = fit_lifetime(curve, 0.0, t_end)?;
    Ok(fit.rate)
}

/// Survival of the undecayed level under continuous monitoring.
///
/// `psi` must be the undecayed state; the curve comes from the apparatus
/// model's own backend (exact spectral for the full form, non-unitary
/// exponential for the effective form).
pub fn continuous_survival(
    apparatus: &ApparatusModel,
    psi: &StateVector,
    times: &[f64],
) -> Result<SurvivalCurve> {
    let expected = apparatus.dim();
    if psi.dim() != expected && psi.dim() != apparatus.base().dim() {
        return Err(Error::DimensionMismatch {
            expected,
            got: psi.dim(),
        });
    }
    let x_weight = psi.amplitudes()[0].norm_sqr();
    if (x_weight - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidSpec(
            "continuous monitoring starts from the undecayed (x = 1) state".into(),
        ));
    }
    apparatus.survival(times)
}

/// Principal-value quadrature of `sum_k w_k / (e - u_k)` where each pole
/// carries a cell of half-width `half_cell`: every cell contributes its
/// exact principal-value integral against a flat density, which regularizes
/// the pole nearest `e`.
pub(crate) fn principal_value_sum(
    weights: &[f64],
    poles: &[f64],
    e: f64,
    half_cell: f64,
) -> f64 {
    let mut acc = 0.0;
    for (&w, &u) in weights.iter().zip(poles) {
        let a = (e - u + half_cell).abs().max(f64::MIN_POSITIVE);
        let b = (e - u - half_cell).abs().max(f64::MIN_POSITIVE);
        acc += w * (a / b).ln();
    }
    acc / (2.0 * half_cell)
}

/// Linear interpolation of pole weights at `e`; zero outside the pole range.
pub(crate) fn interp_weight(weights: &[f64], poles: &[f64], e: f64) -> f64 {
    let n = poles.len();
    if n == 0 || e < poles[0] || e > poles[n - 1] {
        return 0.0;
    }
    if n == 1 {
        return weights[0];
    }
    let idx = poles.partition_point(|&u| u < e).min(n - 1).max(1);
    let (u0, u1) = (poles[idx - 1], poles[idx]);
    let frac = if u1 > u0 { (e - u0) / (u1 - u0) } else { 0.0 };
    weights[idx - 1] * (1.0 - frac) + weights[idx] * frac
}

/// Complex root of a self-energy fixed-point equation `z = Sigma(z)`, with
/// its final residual.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SelfEnergyRoot {
    pub re: f64,
    pub im: f64,
    pub residual: f64,
    pub iterations: usize,
}

impl SelfEnergyRoot {
    pub fn z(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }

    pub fn energy(&self) -> f64 {
        self.re
    }

    /// Decay rate `-2 Im z`.
    pub fn gamma_effective(&self) -> f64 {
        -2.0 * self.im
    }
}

pub(crate) const ROOT_TOL: f64 = 1e-12;
pub(crate) const ROOT_ACCEPT: f64 = 1e-10;
pub(crate) const ROOT_MAX_ITER: usize = 200;

/// Newton iteration for `z = map(z)` with numerically differenced map,
/// falling back to damped fixed-point steps when Newton stalls.
pub(crate) fn solve_fixed_point(
    map: &dyn Fn(Complex64) -> Complex64,
    z0: Complex64,
) -> Result<SelfEnergyRoot> {
    let mut z = z0;
    let mut best = (f64::INFINITY, z);
    let mut iterations = 0;
    let mut newton_ok = true;
    for it in 0..ROOT_MAX_ITER {
        iterations = it + 1;
        let g = z - map(z);
        let res = g.norm();
        if res < best.0 {
            best = (res, z);
        }
        if res < ROOT_TOL {
            break;
        }
        let mut stepped = false;
        if newton_ok {
            let h = Complex64::new(1e-7 * (1.0 + z.norm()), 0.0);
            let dg = ((z + h) - map(z + h) - g) / h;
            if dg.norm() > 1e-14 {
                let z_next = z - g / dg;
                if z_next.re.is_finite() && z_next.im.is_finite() {
                    z = z_next;
                    stepped = true;
                }
            }
            if !stepped {
                newton_ok = false;
            }
        }
        if !stepped {
            // damped fixed-point fallback
            z = 0.5 * (z + map(z));
        }
    }
    let (residual, z) = best;
    if residual > ROOT_ACCEPT {
        return Err(Error::NoConvergence {
            residual,
            iterations,
        });
    }
    Ok(SelfEnergyRoot {
        re: z.re,
        im: z.im,
        residual,
        iterations,
    })
}

/// Self-energy root of a bare decay model.
///
/// A finite discrete model has a purely real spectrum, so the decaying root
/// lives in the continuum limit: the level sum is evaluated with the
/// principal-value + i pi delta prescription, which is its outgoing-wave
/// continuum continuation.
pub fn solve_self_energy_bare(model: &DecayModel) -> Result<SelfEnergyRoot> {
    let omegas = model.omegas().to_vec();
    let weights: Vec<f64> = model.couplings().iter().map(|c| c.norm_sqr()).collect();
    if omegas.len() < 2 {
        return Err(Error::InvalidSpec(
            "self-energy prescription needs at least two continuum levels".into(),
        ));
    }
    let spacing = (omegas[omegas.len() - 1] - omegas[0]) / (omegas.len() as f64 - 1.0);
    let half_cell = spacing / 2.0;
    let map = move |z: Complex64| -> Complex64 {
        let pv = principal_value_sum(&weights, &omegas, z.re, half_cell);
        let delta = std::f64::consts::PI * interp_weight(&weights, &omegas, z.re) / spacing;
        Complex64::new(pv, -delta)
    };
    let gamma0 = model.golden_rate().unwrap_or_else(|| {
        let w: Vec<f64> = model.couplings().iter().map(|c| c.norm_sqr()).collect();
        2.0 * std::f64::consts::PI * interp_weight(&w, model.omegas(), 0.0) / spacing
    });
    solve_fixed_point(&map, Complex64::new(0.0, -0.5 * gamma0))
}

/// Self-energy root of an apparatus model.
///
/// Effective form: `z = sum_k |Phi_k|^2 / (z - omega_k - dE + i/(2 tau_R))`,
/// a genuine complex fixed point. Full form: the register resolvent is folded
/// in with the same principal-value prescription used for the bare model.
pub fn solve_self_energy(apparatus: &ApparatusModel) -> Result<SelfEnergyRoot> {
    let base = apparatus.base();
    let omegas = base.omegas().to_vec();
    let weights: Vec<f64> = base.couplings().iter().map(|c| c.norm_sqr()).collect();
    // start from the faster of the predicted slowed rate and the bare rate
    let law = 4.0 * apparatus.tau_response() / base.tau_zeno().powi(2);
    let guess = match base.golden_rate() {
        Some(g) => law.min(g),
        None => law,
    };
    let z0 = Complex64::new(0.0, -0.5 * guess);

    match apparatus.form() {
        crate::models::ApparatusForm::Effective { delta_e, tau_response } => {
            let shift = Complex64::new(*delta_e, -0.5 / tau_response);
            let map = move |z: Complex64| -> Complex64 {
                let mut acc = Complex64::new(0.0, 0.0);
                for (&w, &u) in weights.iter().zip(&omegas) {
                    acc += w / (z - u - shift);
                }
                acc
            };
            solve_fixed_point(&map, z0)
        }
        crate::models::ApparatusForm::Full { theta, nu, register_span } => {
            let theta2 = theta * theta;
            let span = *register_span;
            let rho = (nu.len() as f64 - 1.0) / span;
            let map = move |z: Complex64| -> Complex64 {
                let mut acc = Complex64::new(0.0, 0.0);
                for (&w, &u) in weights.iter().zip(&omegas) {
                    // register resolvent in its continuum limit: a flat band
                    // of density rho gives the outgoing-wave form
                    // theta^2 rho (ln|(eps + S/2)/(eps - S/2)| - i pi) inside
                    let eps = z.re - u;
                    let inside = eps.abs() < span / 2.0;
                    let pv = theta2
                        * rho
                        * ((eps + span / 2.0).abs().max(f64::MIN_POSITIVE)
                            / (eps - span / 2.0).abs().max(f64::MIN_POSITIVE))
                        .ln();
                    let delta = if inside {
                        std::f64::consts::PI * theta2 * rho
                    } else {
                        0.0
                    };
                    let sigma = Complex64::new(pv, -delta);
                    acc += w / (z - u - sigma);
                }
                acc
            };
            solve_fixed_point(&map, z0)
        }
    }
}

/// Outcome of running the same response time through both measurement
/// backends: a continuous apparatus at `tau_R` and pulsed projections at
/// `tau_PM = 4 tau_R`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EquivalenceOutcome {
    pub tau_response: f64,
    pub tau_pulse: f64,
    pub rate_continuous: f64,
    pub rate_pulsed: f64,
    pub ratio: f64,
}

/// Compares continuous monitoring at `tau_R` with pulsed projections at
/// `4 tau_R` on the same decay model.
pub fn equivalence_check(model: &DecayModel, tau_response: f64) -> Result<EquivalenceOutcome> {
    let tau_zeno = model.tau_zeno();
    if !(tau_response > 0.0 && tau_response <= tau_zeno / 5.0) {
        return Err(Error::InvalidSpec(format!(
            "equivalence regime needs 0 < tau_R <= tau_Z/5 = {:.3}, got {tau_response}",
            tau_zeno / 5.0
        )));
    }
    let law_rate = 4.0 * tau_response / (tau_zeno * tau_zeno);
    let rate_scale = match model.golden_rate() {
        Some(g) => law_rate.min(g),
        None => law_rate,
    };
    let horizon = 2.5 / rate_scale;

    let apparatus = ApparatusModel::effective(model.clone(), 0.0, tau_response)?;
    let n_samples = 600;
    let times: Vec<f64> = (0..=n_samples)
        .map(|k| horizon * k as f64 / n_samples as f64)
        .collect();
    let cont = apparatus.survival(&times)?;
    let guard = match model.golden_rate() {
        Some(g) if g > 0.0 => 5.0 * model.tau_zeno().powi(2) * g,
        _ => 0.0,
    };
    let rate_continuous = fit_lifetime(&cont, guard.min(horizon / 2.0), horizon)?.rate;

    let schedule = PulsedSchedule::new(4.0 * tau_response, horizon)?;
    let pulsed = pulsed_survival(model.hermitian(), &model.initial_state(), &schedule)?;
    let rate_pulsed = effective_rate_pulsed(&pulsed)?;

    Ok(EquivalenceOutcome {
        tau_response,
        tau_pulse: 4.0 * tau_response,
        rate_continuous,
        rate_pulsed,
        ratio: rate_continuous / rate_pulsed,
    })
}
