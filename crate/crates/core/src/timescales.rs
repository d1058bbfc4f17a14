//! Extraction of the characteristic times of a decay: moments and Zeno time,
//! golden-rule rate, fitted lifetime, jump time (both the defining ratio and
//! its bandwidth form), passage time, and the SI-units inverse-bandwidth
//! estimate for slow tunneling experiments.

use serde::Serialize;

use crate::dynamics::{HermitianModel, StateVector, SurvivalCurve};
use crate::error::{Error, Result};
use crate::models::{ContinuumSpec, DecayModel, TWO_PI};

/// hbar in J s.
pub const HBAR_SI: f64 = 1.054_571_817e-34;
/// Proton mass in kg.
pub const PROTON_MASS_SI: f64 = 1.672_621_923_69e-27;

/// Variance this far below zero is treated as roundoff and clamped.
const VARIANCE_SLACK: f64 = 1e-12;

/// Mean energy and energy spread of a state:
/// `E_psi = <psi|H|psi>`, `dH = sqrt(<psi|H^2|psi> - E_psi^2)`.
pub fn moments(model: &HermitianModel, psi: &StateVector) -> Result<(f64, f64)> {
    let h_psi = model.apply(psi)?;
    let e_psi = psi.amplitudes().dotc(&h_psi).re;
    let h2 = h_psi.norm_squared();
    let var = h2 - e_psi * e_psi;
    let scale = h2.max(1.0);
    if var < -VARIANCE_SLACK * scale {
        return Err(Error::NegativeVariance(var));
    }
    Ok((e_psi, var.max(0.0).sqrt()))
}

/// Golden-rule rate `2 pi rho(0) |phi(0)|^2` of a continuum spec.
pub fn golden_rule_rate(spec: &ContinuumSpec) -> Result<f64> {
    spec.validate()?;
    let phi0 = spec.coupling_scale * spec.profile.value(0.0);
    if !phi0.is_finite() {
        return Err(Error::InvalidSpec(
            "coupling profile undefined at band center".into(),
        ));
    }
    Ok(TWO_PI * spec.density() * phi0 * phi0)
}

/// Log-linear exponential fit of a survival curve over a window.
#[derive(Debug, Clone, Serialize)]
pub struct ExponentialFit {
    /// Decay rate (negated slope of log p).
    pub rate: f64,
    /// Extrapolated t = 0 value of the fitted exponential.
    pub amplitude: f64,
    pub window: (f64, f64),
    /// RMS residual of log p against the fit; large values mean the curve is
    /// not exponential and the fit should be rejected.
    pub rms_log_residual: f64,
    /// Samples with p <= 0 excluded from the window.
    pub excluded: usize,
}

/// Fits above this RMS log-residual are not exponential decays.
pub const FIT_REJECT_RMS: f64 = 0.1;

impl ExponentialFit {
    pub fn lifetime(&self) -> f64 {
        1.0 / self.rate
    }

    pub fn is_exponential(&self) -> bool {
        self.rms_log_residual <= FIT_REJECT_RMS && self.rate > 0.0
    }
}

/// Least-squares fit of `log p` to a line over `[t_lo, t_hi]`.
///
/// The window should start past the quadratic transient (5 jump times is the
/// usual guard) and end before the discrete-grid recurrence.
pub fn fit_lifetime(curve: &SurvivalCurve, t_lo: f64, t_hi: f64) -> Result<ExponentialFit> {
    if !(t_lo >= 0.0 && t_hi > t_lo) {
        return Err(Error::EmptyFitWindow { t_lo, t_hi });
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut excluded = 0usize;
    for (&t, &p) in curve.times().iter().zip(curve.probability()) {
        if t < t_lo || t > t_hi {
            continue;
        }
        if p <= 0.0 {
            excluded += 1;
            continue;
        }
        xs.push(t);
        ys.push(p.ln());
    }
    if xs.len() < 2 {
        return Err(Error::EmptyFitWindow { t_lo, t_hi });
    }
    let n = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| x * y).sum();
    let denom = n * sxx - sx * sx;
    if denom == 0.0 {
        return Err(Error::EmptyFitWindow { t_lo, t_hi });
    }
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    let rms = (xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let r = y - (slope * x + intercept);
            r * r
        })
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(ExponentialFit {
        rate: -slope,
        amplitude: intercept.exp(),
        window: (t_lo, t_hi),
        rms_log_residual: rms,
        excluded,
    })
}

/// Default transient guard, in jump times, for lifetime fits.
pub const FIT_GUARD_JUMP_TIMES: f64 = 5.0;
/// Fit windows are capped at this fraction of the grid recurrence time.
pub const FIT_RECURRENCE_FRACTION: f64 = 0.9;

/// Fit window a decay-model curve should use: from `guard_jump_times * tau_J`
/// (golden-rule estimate) to the end of the curve, capped below the
/// recurrence time of the discrete grid.
pub fn default_fit_window(
    model: &DecayModel,
    curve: &SurvivalCurve,
    guard_jump_times: f64,
) -> (f64, f64) {
    let t_end = *curve.times().last().expect("curve is nonempty");
    let mut t_hi = t_end;
    if let Some(t_rec) = model.recurrence_time() {
        t_hi = t_hi.min(FIT_RECURRENCE_FRACTION * t_rec);
    }
    let t_lo = match model.golden_rate() {
        Some(g) if g > 0.0 => {
            let tau_j = model.tau_zeno().powi(2) * g;
            (guard_jump_times * tau_j).min(0.5 * t_hi)
        }
        _ => 0.0,
    };
    (t_lo, t_hi)
}

/// Jump time from its bandwidth form: the inverse of the coupling-weighted
/// integral over the continuum-block eigenbasis,
/// `1/tau_J = sum_k (d_omega/2pi) (rho_k/rho_on) |<E_k|H|psi>|^2 / |M_on|^2`.
///
/// For the decay model the continuum block is already diagonal, the matrix
/// elements are the couplings, and the on-shell point is the level nearest
/// the mean energy of the undecayed state.
pub fn jump_time_bandwidth(model: &DecayModel, psi: &StateVector) -> Result<f64> {
    if psi.dim() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            got: psi.dim(),
        });
    }
    let x_weight = psi.amplitudes()[0].norm_sqr();
    if (x_weight - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidSpec(
            "bandwidth form is defined for the undecayed (x = 1) state".into(),
        ));
    }
    let omegas = model.omegas();
    let couplings = model.couplings();
    let e_psi = 0.0; // H_00 = 0 by the decay-model layout
    let on_shell = omegas
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - e_psi).abs().total_cmp(&(b.1 - e_psi).abs()))
        .map(|(k, _)| k)
        .expect("model has continuum levels");
    let m_on = couplings[on_shell].norm_sqr();
    if m_on == 0.0 {
        return Err(Error::InvalidSpec(
            "on-shell matrix element vanishes; bandwidth form undefined".into(),
        ));
    }
    // uniform grid: rho(E)/rho(E_psi) = 1 and dE = spacing
    let spacing = (omegas[omegas.len() - 1] - omegas[0]) / (omegas.len() as f64 - 1.0);
    let mut integral = 0.0;
    for c in couplings {
        integral += spacing / TWO_PI * c.norm_sqr() / m_on;
    }
    Ok(1.0 / integral)
}

/// Inverse-bandwidth jump time `2 M / (hbar K^2)` for a particle of mass `M`
/// (kg) in a periodic potential of wavenumber `K` (1/m); returns seconds.
pub fn landau_zener_jump_time(mass_kg: f64, wavenumber_per_m: f64) -> Result<f64> {
    if mass_kg <= 0.0 || wavenumber_per_m <= 0.0 {
        return Err(Error::InvalidSpec(
            "mass and wavenumber must be positive".into(),
        ));
    }
    Ok(2.0 * mass_kg / (HBAR_SI * wavenumber_per_m * wavenumber_per_m))
}

/// Every characteristic time of one model/state pair.
///
/// Constructed identities: `tau_Z = 1/delta_H`, `tau_P = pi tau_Z / 2`,
/// `tau_J = tau_Z^2 / tau_L` when the lifetime fit exists, and the
/// tunneling-time alias `tau_T = tau_J`.
#[derive(Debug, Clone, Serialize)]
pub struct TimescaleReport {
    pub e_psi: f64,
    pub delta_h: f64,
    /// Absent for stationary states (delta_H = 0).
    pub tau_zeno: Option<f64>,
    pub gamma_golden: Option<f64>,
    pub tau_lifetime_fit: Option<f64>,
    pub fit_rms_log_residual: Option<f64>,
    pub tau_jump: Option<f64>,
    pub tau_jump_bandwidth: Option<f64>,
    pub tau_passage: Option<f64>,
    /// Tunneling-time alias: identical to `tau_jump`.
    pub tau_tunneling_equiv: Option<f64>,
    /// Time to first extinction of the survival probability, for systems with
    /// no exponential regime. Never substituted for the lifetime.
    pub first_extinction: Option<f64>,
}

/// Assembles a [`TimescaleReport`] for the undecayed state of a decay model.
///
/// The lifetime is fitted from `curve` over the default window; a fit
/// rejected by its residual leaves the lifetime fields absent.
pub fn full_report(
    model: &DecayModel,
    psi: &StateVector,
    curve: Option<&SurvivalCurve>,
) -> Result<TimescaleReport> {
    let (e_psi, delta_h) = moments(model.hermitian(), psi)?;
    let tau_zeno = (delta_h > 0.0).then(|| 1.0 / delta_h);
    let tau_passage = tau_zeno.map(|tz| std::f64::consts::FRAC_PI_2 * tz);
    let gamma_golden = model.golden_rate();

    let mut tau_lifetime_fit = None;
    let mut fit_rms = None;
    let mut first_extinction = None;
    if let Some(curve) = curve {
        let (t_lo, t_hi) = default_fit_window(model, curve, FIT_GUARD_JUMP_TIMES);
        if let Ok(fit) = fit_lifetime(curve, t_lo, t_hi) {
            fit_rms = Some(fit.rms_log_residual);
            if fit.is_exponential() {
                tau_lifetime_fit = Some(fit.lifetime());
            }
        }
        first_extinction = curve
            .times()
            .iter()
            .zip(curve.probability())
            .find(|(_, &p)| p < 1e-12)
            .map(|(&t, _)| t);
    }

    let tau_jump = match (tau_zeno, tau_lifetime_fit) {
        (Some(tz), Some(tl)) => Some(tz * tz / tl),
        _ => None,
    };
    let tau_jump_bandwidth = jump_time_bandwidth(model, psi).ok();

    Ok(TimescaleReport {
        e_psi,
        delta_h,
        tau_zeno,
        gamma_golden,
        tau_lifetime_fit,
        fit_rms_log_residual: fit_rms,
        tau_jump,
        tau_jump_bandwidth,
        tau_passage,
        tau_tunneling_equiv: tau_jump,
        first_extinction,
    })
}
