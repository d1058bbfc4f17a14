//! Orthogonality-bound machinery: orthogonal decomposition of the evolute,
//! the Ersak functional identity, the angle bound `theta(t) <= dH t`, and
//! first-orthogonal-time (passage time) searches.

use num_complex::Complex64;
use serde::Serialize;

use crate::dynamics::{decompose, HermitianModel, SpectralDecomposition, StateVector};
use crate::error::{Error, Result};
use crate::timescales::moments;

/// `|f|` below this counts as orthogonal.
pub const ORTHOGONAL_EPS: f64 = 1e-6;
/// Dips of `|f|` below this are candidate orthogonality crossings.
const DIP_GATE: f64 = 0.05;
/// Bound checks fail on violations above this.
pub const BOUND_SLACK: f64 = 1e-9;

/// Splitting of the evolute into its initial-state component and the
/// orthogonal remainder: `U(t)|psi> = f(t)|psi> + |phi_t>`.
#[derive(Debug, Clone)]
pub struct OrthogonalDecomposition {
    pub f: Complex64,
    pub orthogonal: nalgebra::DVector<Complex64>,
}

impl OrthogonalDecomposition {
    /// `<psi|phi_t>`, zero up to roundoff.
    pub fn overlap_with(&self, psi: &StateVector) -> Complex64 {
        psi.amplitudes().dotc(&self.orthogonal)
    }

    pub fn orthogonal_norm_sqr(&self) -> f64 {
        self.orthogonal.norm_squared()
    }

    /// `|f|^2 + ||phi_t||^2`, one up to roundoff.
    pub fn completeness(&self) -> f64 {
        self.f.norm_sqr() + self.orthogonal_norm_sqr()
    }
}

/// Evolution-analysis helper holding one spectral decomposition so repeated
/// evolute queries cost O(dim^2) instead of a fresh eigensolve.
pub struct EvoluteAnalyzer {
    dec: SpectralDecomposition,
    psi: StateVector,
    e_psi: f64,
    weights: Vec<f64>,
    delta_h: f64,
}

impl EvoluteAnalyzer {
    pub fn new(model: &HermitianModel, psi: &StateVector) -> Result<Self> {
        let (e_psi, delta_h) = moments(model, psi)?;
        let dec = decompose(model)?;
        let weights = dec.weights(psi);
        Ok(Self {
            dec,
            psi: psi.clone(),
            e_psi,
            weights,
            delta_h,
        })
    }

    pub fn delta_h(&self) -> f64 {
        self.delta_h
    }

    pub fn tau_passage(&self) -> Option<f64> {
        (self.delta_h > 0.0).then(|| std::f64::consts::FRAC_PI_2 / self.delta_h)
    }

    /// Integrity amplitude `f(t) = <psi|exp(-i(H - E_psi)t)|psi>`.
    pub fn amplitude(&self, t: f64) -> Complex64 {
        let (s, c) = (self.e_psi * t).sin_cos();
        Complex64::new(c, s) * self.dec.raw_amplitude(&self.weights, t)
    }

    /// Full evolute split at time `t`.
    pub fn decompose_evolute(&self, t: f64) -> Result<OrthogonalDecomposition> {
        let evolved = self.dec.propagate(&self.psi, t)?;
        let (s, c) = (self.e_psi * t).sin_cos();
        let phase = Complex64::new(c, s);
        let evolved_amps = evolved.amplitudes() * phase;
        let f = self.psi.amplitudes().dotc(&evolved_amps);
        let orthogonal = evolved_amps - self.psi.amplitudes() * f;
        Ok(OrthogonalDecomposition { f, orthogonal })
    }

    /// `(g, theta)` at time `t`, with the angle taken from the evolute split
    /// as `atan2(||phi_t||, g)`: near g = 1 this is exact to roundoff where
    /// `arccos(g)` would amplify it by 1/sqrt(1 - g^2).
    pub fn angle(&self, t: f64) -> Result<(f64, f64)> {
        let split = self.decompose_evolute(t)?;
        let g = split.f.norm().clamp(0.0, 1.0);
        let theta = split.orthogonal_norm_sqr().sqrt().atan2(g);
        Ok((g, theta))
    }

    /// `|f(t+t') - f(t)f(t') - <phi_{-t'}|phi_t>|`, zero for exact unitary
    /// evolution by the Ersak identity.
    pub fn ersak_residual(&self, t: f64, t_prime: f64) -> Result<f64> {
        let f_sum = self.amplitude(t + t_prime);
        let dt = self.decompose_evolute(t)?;
        let dtp = self.decompose_evolute(-t_prime)?;
        let cross = dtp.orthogonal.dotc(&dt.orthogonal);
        Ok((f_sum - self.amplitude(t) * self.amplitude(t_prime) - cross).norm())
    }
}

/// Splits `U(t)|psi>` into `f(t)|psi> + |phi_t>` with `<psi|phi_t> = 0`.
pub fn decompose_evolute(
    model: &HermitianModel,
    psi: &StateVector,
    t: f64,
) -> Result<OrthogonalDecomposition> {
    EvoluteAnalyzer::new(model, psi)?.decompose_evolute(t)
}

/// Residual of the Ersak identity at `(t, t')`.
pub fn ersak_residual(
    model: &HermitianModel,
    psi: &StateVector,
    t: f64,
    t_prime: f64,
) -> Result<f64> {
    EvoluteAnalyzer::new(model, psi)?.ersak_residual(t, t_prime)
}

/// Sampled comparison of the evolute angle against its linear bound.
#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub times: Vec<f64>,
    /// `g = |f|`.
    pub g: Vec<f64>,
    /// `theta = arccos(g)`, principal branch.
    pub theta: Vec<f64>,
    /// `dH * t`.
    pub bound: Vec<f64>,
    pub delta_h: f64,
    /// `max(theta - bound)` over the grid; positive values falsify unitarity.
    pub max_violation: f64,
}

impl BoundReport {
    pub fn assert_ok(&self) -> Result<()> {
        if self.max_violation > BOUND_SLACK {
            let idx = self
                .theta
                .iter()
                .zip(&self.bound)
                .enumerate()
                .max_by(|a, b| (a.1 .0 - a.1 .1).total_cmp(&(b.1 .0 - b.1 .1)))
                .map(|(i, _)| i)
                .unwrap_or(0);
            return Err(Error::BoundViolation {
                t: self.times[idx],
                excess: self.max_violation,
            });
        }
        Ok(())
    }
}

/// Evaluates `theta(t) = arccos|f(t)|` against `dH t` on a time grid.
pub fn fleming_bound_report(
    model: &HermitianModel,
    psi: &StateVector,
    times: &[f64],
) -> Result<BoundReport> {
    if times.is_empty() {
        return Err(Error::EmptyTimes);
    }
    let an = EvoluteAnalyzer::new(model, psi)?;
    let mut g = Vec::with_capacity(times.len());
    let mut theta = Vec::with_capacity(times.len());
    let mut bound = Vec::with_capacity(times.len());
    let mut max_violation = f64::NEG_INFINITY;
    for &t in times {
        let (gt, th) = an.angle(t)?;
        let b = an.delta_h() * t;
        max_violation = max_violation.max(th - b);
        g.push(gt);
        theta.push(th);
        bound.push(b);
    }
    Ok(BoundReport {
        times: times.to_vec(),
        g,
        theta,
        bound,
        delta_h: an.delta_h(),
        max_violation,
    })
}

/// Earliest `t` with `|f(t)| < ORTHOGONAL_EPS`, located by a coarse scan for
/// dips of `|f|`, golden-section refinement of each dip, and a final
/// bisection onto the threshold; `None` if no dip reaches orthogonality
/// before `t_max`. Any hit earlier than `tau_P - resolution` is reported as a
/// bound violation.
pub fn first_orthogonal_time(
    model: &HermitianModel,
    psi: &StateVector,
    t_max: f64,
    resolution: f64,
) -> Result<Option<f64>> {
    let an = EvoluteAnalyzer::new(model, psi)?;
    let scan = match an.tau_passage() {
        Some(tp) => (tp / 64.0).min(t_max / 64.0),
        None => t_max / 4096.0,
    };
    first_orthogonal_time_of(|t| an.amplitude(t), an.tau_passage(), t_max, resolution, scan)
}

/// Closure-based variant of [`first_orthogonal_time`] for piecewise or
/// otherwise non-Hamiltonian amplitude sources.
pub fn first_orthogonal_time_of(
    amplitude: impl Fn(f64) -> Complex64,
    tau_passage: Option<f64>,
    t_max: f64,
    resolution: f64,
    scan_step: f64,
) -> Result<Option<f64>> {
    if !(resolution > 0.0 && t_max > 0.0 && scan_step > 0.0) {
        return Err(Error::InvalidSpec(
            "search needs positive horizon, resolution and scan step".into(),
        ));
    }
    let g = |t: f64| amplitude(t).norm();
    let n = (t_max / scan_step).ceil() as usize;
    let mut prev2 = g(0.0);
    let mut prev = g(scan_step.min(t_max));
    for i in 2..=n {
        let t = (i as f64 * scan_step).min(t_max);
        let cur = g(t);
        // local dip below the gate: refine it
        if prev <= prev2 && prev <= cur && prev < DIP_GATE {
            let a = (i as f64 - 2.0) * scan_step;
            let b = t;
            let (t_min, g_min) = golden_minimize(&g, a, b, resolution / 4.0);
            if g_min < ORTHOGONAL_EPS {
                // earliest threshold crossing inside [a, t_min]
                let t_hit = bisect_threshold(&g, a, t_min, ORTHOGONAL_EPS, resolution / 4.0);
                if let Some(tp) = tau_passage {
                    // the threshold admits hits ~eps/dH early; fold that into
                    // the floor so near-saturating systems are not rejected
                    let floor = tp * (1.0 - ORTHOGONAL_EPS) - resolution;
                    if t_hit < floor {
                        return Err(Error::BoundViolation {
                            t: t_hit,
                            excess: tp - t_hit,
                        });
                    }
                }
                return Ok(Some(t_hit));
            }
        }
        prev2 = prev;
        prev = cur;
    }
    Ok(None)
}

/// Golden-section minimization of a unimodal dip on `[a, b]`.
fn golden_minimize(g: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let (mut a, mut b) = (a, b);
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut g1 = g(x1);
    let mut g2 = g(x2);
    while (b - a) > tol {
        if g1 <= g2 {
            b = x2;
            x2 = x1;
            g2 = g1;
            x1 = b - INV_PHI * (b - a);
            g1 = g(x1);
        } else {
            a = x1;
            x1 = x2;
            g1 = g2;
            x2 = a + INV_PHI * (b - a);
            g2 = g(x2);
        }
    }
    let mid = 0.5 * (a + b);
    (mid, g(mid))
}

/// First `t` in `[a, b]` with `g(t) < eps`, assuming `g(a) >= eps > g(b)`.
fn bisect_threshold(g: &impl Fn(f64) -> f64, a: f64, b: f64, eps: f64, tol: f64) -> f64 {
    let (mut a, mut b) = (a, b);
    if g(a) < eps {
        return a;
    }
    while (b - a) > tol {
        let mid = 0.5 * (a + b);
        if g(mid) < eps {
            b = mid;
        } else {
            a = mid;
        }
    }
    b
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{two_level, ContinuumSpec, DecayModel};
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_pair(rng: &mut ChaCha8Rng, n: usize) -> (HermitianModel, StateVector) {
        let mut m = DMatrix::<Complex64>::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(rng.gen_range(-1.0..1.0), 0.0);
            for j in (i + 1)..n {
                let v = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                m[(i, j)] = v;
                m[(j, i)] = v.conj();
            }
        }
        let model = HermitianModel::new(m).unwrap();
        let v = DVector::from_fn(n, |_, _| {
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        (model, StateVector::normalized(v).unwrap())
    }

    #[test]
    fn split_at_zero_is_trivial() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (model, psi) = random_pair(&mut rng, 5);
        let split = decompose_evolute(&model, &psi, 0.0).unwrap();
        assert!((split.f - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        assert!(split.orthogonal_norm_sqr() < 1e-24);
    }

    #[test]
    fn split_two_level_at_eighth_period() {
        // at a^2 t = pi/4: |f| = ||phi|| = 1/sqrt(2)
        let alpha_sq = 0.9;
        let model = two_level(alpha_sq).unwrap();
        let psi = StateVector::basis(2, 0);
        let t = std::f64::consts::FRAC_PI_4 / alpha_sq;
        let split = decompose_evolute(&model, &psi, t).unwrap();
        let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
        assert!((split.f.norm() - inv_sqrt2).abs() < 1e-12);
        assert!((split.orthogonal_norm_sqr().sqrt() - inv_sqrt2).abs() < 1e-12);
    }

    #[test]
    fn split_invariants_on_random_models() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..50 {
            let (model, psi) = random_pair(&mut rng, 10);
            let t = rng.gen_range(0.0..20.0);
            let split = decompose_evolute(&model, &psi, t).unwrap();
            assert!(split.overlap_with(&psi).norm() < 1e-12);
            assert!((split.completeness() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn ersak_trivial_at_zero_offset() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let (model, psi) = random_pair(&mut rng, 6);
        let r = ersak_residual(&model, &psi, 1.3, 0.0).unwrap();
        assert!(r < 1e-13);
    }

    #[test]
    fn ersak_two_level_closed_form() {
        let alpha_sq = 1.0;
        let model = two_level(alpha_sq).unwrap();
        let psi = StateVector::basis(2, 0);
        let r = ersak_residual(&model, &psi, 0.3, 0.7).unwrap();
        assert!(r < 1e-12, "residual = {r:.2e}");
    }

    #[test]
    fn ersak_random_sweep() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..200 {
            let n = rng.gen_range(2..9);
            let (model, psi) = random_pair(&mut rng, n);
            let an = EvoluteAnalyzer::new(&model, &psi).unwrap();
            for _ in 0..5 {
                let t = rng.gen_range(-5.0..5.0);
                let tp = rng.gen_range(-5.0..5.0);
                let r = an.ersak_residual(t, tp).unwrap();
                assert!(r < 1e-9, "residual = {r:.2e}");
            }
        }
    }

    #[test]
    fn bound_saturated_by_two_level() {
        let model = two_level(1.0).unwrap();
        let psi = StateVector::basis(2, 0);
        let times: Vec<f64> =
            (0..=100).map(|k| std::f64::consts::FRAC_PI_2 * k as f64 / 100.0).collect();
        let report = fleming_bound_report(&model, &psi, &times).unwrap();
        report.assert_ok().unwrap();
        // saturation: theta equals the bound everywhere on the first branch
        for (th, b) in report.theta.iter().zip(&report.bound) {
            assert!((th - b).abs() < 1e-10);
        }
        assert!(report.max_violation.abs() < 1e-10);
    }

    #[test]
    fn bound_strict_for_decay_model() {
        let spec = ContinuumSpec::flat_with_timescales(41, 20.0, 120.0).unwrap();
        let model = DecayModel::build(spec).unwrap();
        let psi = model.initial_state();
        let tau_p = std::f64::consts::FRAC_PI_2 * 20.0;
        let times: Vec<f64> = (1..=60).map(|k| tau_p * k as f64 / 40.0).collect();
        let report = fleming_bound_report(model.hermitian(), &psi, &times).unwrap();
        report.assert_ok().unwrap();
        // strict inequality with growing margin: decay is slower than the bound
        let margins: Vec<f64> = report
            .bound
            .iter()
            .zip(&report.theta)
            .map(|(b, th)| b - th)
            .collect();
        assert!(margins.iter().all(|&m| m > 0.0));
        assert!(margins.last().unwrap() > &margins[2]);
    }

    #[test]
    fn bound_trivial_for_stationary_state() {
        let model = DecayModel::from_parts(
            vec![0.4, 0.9],
            vec![Complex64::new(0.0, 0.0); 2],
        )
        .unwrap();
        let psi = StateVector::basis(3, 1);
        let times: Vec<f64> = (0..=20).map(|k| k as f64).collect();
        let report = fleming_bound_report(model.hermitian(), &psi, &times).unwrap();
        assert_eq!(report.delta_h, 0.0);
        for th in &report.theta {
            assert!(th.abs() < 1e-12);
        }
        report.assert_ok().unwrap();
    }

    #[test]
    fn first_derivative_of_amplitude_vanishes() {
        // symmetric finite difference of f at 0, both components below 1e-8
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        for _ in 0..20 {
            let (model, psi) = random_pair(&mut rng, 7);
            let an = EvoluteAnalyzer::new(&model, &psi).unwrap();
            if an.delta_h() == 0.0 {
                continue;
            }
            let delta = 1.0 / an.delta_h() / 1e4;
            let deriv = (an.amplitude(delta) - an.amplitude(-delta)) / (2.0 * delta);
            assert!(deriv.re.abs() < 1e-8, "Re f'(0) = {:.2e}", deriv.re);
            assert!(deriv.im.abs() < 1e-8, "Im f'(0) = {:.2e}", deriv.im);
        }
    }

    #[test]
    fn orthogonal_part_velocity_matches_spread() {
        // ||d phi/dt (0)||^2 = (dH)^2
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..10 {
            let (model, psi) = random_pair(&mut rng, 6);
            let an = EvoluteAnalyzer::new(&model, &psi).unwrap();
            if an.delta_h() < 0.1 {
                continue;
            }
            let delta = 1.0 / an.delta_h() / 1e5;
            let plus = an.decompose_evolute(delta).unwrap();
            let minus = an.decompose_evolute(-delta).unwrap();
            let vel = (&plus.orthogonal - &minus.orthogonal) / Complex64::new(2.0 * delta, 0.0);
            let got = vel.norm_squared();
            let expect = an.delta_h() * an.delta_h();
            assert!(
                (got - expect).abs() / expect < 1e-6,
                "|d phi|^2 = {got}, dH^2 = {expect}"
            );
        }
    }

    #[test]
    fn two_level_first_orthogonal_time_is_passage_time() {
        let model = two_level(1.0).unwrap();
        let psi = StateVector::basis(2, 0);
        let t = first_orthogonal_time(&model, &psi, 3.0, 1e-5)
            .unwrap()
            .expect("two-level system reaches orthogonality");
        assert!((t - std::f64::consts::FRAC_PI_2).abs() < 1e-4);
    }

    #[test]
    fn decaying_model_never_reaches_orthogonality() {
        // exponential decay has no zero while the model still imitates its
        // continuum limit; past the grid recurrence the (real) amplitude can
        // swing through zero, so the search stops short of it
        let spec = ContinuumSpec::flat_with_timescales(101, 48.0, 393.0).unwrap();
        let model = DecayModel::build(spec).unwrap();
        let psi = model.initial_state();
        let t_max = (3.0f64 * 393.0).min(0.9 * model.recurrence_time().unwrap());
        let hit = first_orthogonal_time(model.hermitian(), &psi, t_max, 1e-4).unwrap();
        assert!(hit.is_none(), "decay reached zero unexpectedly: {hit:?}");
    }

    #[test]
    fn saturation_is_exclusive_to_the_two_level_case() {
        // among tested models only the two-level case attains the bound
        let model = two_level(1.0).unwrap();
        let psi = StateVector::basis(2, 0);
        let an = EvoluteAnalyzer::new(&model, &psi).unwrap();
        let tau_p = an.tau_passage().unwrap();
        let (_, theta) = an.angle(tau_p).unwrap();
        assert!((theta - an.delta_h() * tau_p).abs() < 1e-9);

        let mut rng = ChaCha8Rng::seed_from_u64(47);
        for _ in 0..25 {
            let (model, psi) = random_pair(&mut rng, 5);
            let an = EvoluteAnalyzer::new(&model, &psi).unwrap();
            let Some(tau_p) = an.tau_passage() else { continue };
            let (_, theta) = an.angle(tau_p).unwrap();
            let margin = an.delta_h() * tau_p - theta;
            assert!(margin > 1e-9, "unexpected saturation, margin = {margin:.2e}");
        }
    }
}
