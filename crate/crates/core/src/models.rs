//! Builders for the model Hamiltonians: the bare discrete decay model, the
//! apparatus-monitored model (full three-block form and its non-Hermitian
//! effective reduction), the transiently-enhanced fast-transition model, and
//! the two-level saturation example.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::arrowhead::{self, ArrowheadSpectrum};
use crate::dynamics::{
    decompose, survival_amplitude, HermitianModel, StateVector, SurvivalCurve,
};
use crate::error::{Error, Result};
use crate::expm::evolve_nonhermitian;

pub const TWO_PI: f64 = std::f64::consts::TAU;

/// Shape of the continuum coupling |phi(omega)|, normalized to 1 at omega = 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CouplingProfile {
    Flat,
    Lorentzian { width: f64 },
    Gaussian { width: f64 },
}

impl CouplingProfile {
    pub fn value(&self, omega: f64) -> f64 {
        match *self {
            CouplingProfile::Flat => 1.0,
            CouplingProfile::Lorentzian { width } => {
                width / (omega * omega + width * width).sqrt()
            }
            CouplingProfile::Gaussian { width } => {
                (-omega * omega / (2.0 * width * width)).exp()
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            CouplingProfile::Flat => Ok(()),
            CouplingProfile::Lorentzian { width } | CouplingProfile::Gaussian { width } => {
                if width > 0.0 && width.is_finite() {
                    Ok(())
                } else {
                    Err(Error::InvalidSpec(format!(
                        "profile width must be positive, got {width}"
                    )))
                }
            }
        }
    }
}

/// Uniform discretization of a decay continuum. The undecayed level sits at
/// energy 0 inside the band, so the band must straddle 0.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuumSpec {
    pub levels: usize,
    pub omega_min: f64,
    pub omega_max: f64,
    pub profile: CouplingProfile,
    /// Coupling amplitude at band center; the discrete couplings are
    /// `Phi_k = coupling_scale * profile(omega_k)`.
    pub coupling_scale: f64,
}

impl ContinuumSpec {
    /// Flat-band spec hitting given Zeno time and lifetime targets:
    /// `N phi^2 = 1/tau_Z^2` fixes the coupling and
    /// `2 pi phi^2 / d_omega = 1/tau_L` fixes the level spacing.
    pub fn flat_with_timescales(levels: usize, tau_zeno: f64, tau_lifetime: f64) -> Result<Self> {
        if tau_zeno <= 0.0 || tau_lifetime <= 0.0 {
            return Err(Error::InvalidSpec(
                "timescale targets must be positive".into(),
            ));
        }
        let phi = 1.0 / (tau_zeno * (levels as f64).sqrt());
        let spacing = TWO_PI * phi * phi * tau_lifetime;
        let half_span = (levels as f64 - 1.0) / 2.0 * spacing;
        let spec = Self {
            levels,
            omega_min: -half_span,
            omega_max: half_span,
            profile: CouplingProfile::Flat,
            coupling_scale: phi,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.levels < 2 {
            return Err(Error::InvalidSpec(format!(
                "need at least 2 continuum levels, got {}",
                self.levels
            )));
        }
        if !(self.omega_min < 0.0 && self.omega_max > 0.0) {
            return Err(Error::InvalidSpec(
                "band must straddle the undecayed level at energy 0".into(),
            ));
        }
        if self.coupling_scale <= 0.0 || !self.coupling_scale.is_finite() {
            return Err(Error::InvalidSpec(
                "coupling scale must be positive".into(),
            ));
        }
        self.profile.validate()
    }

    pub fn spacing(&self) -> f64 {
        (self.omega_max - self.omega_min) / (self.levels as f64 - 1.0)
    }

    /// Density of states 1/spacing.
    pub fn density(&self) -> f64 {
        1.0 / self.spacing()
    }

    pub fn omegas(&self) -> Vec<f64> {
        let d = self.spacing();
        (0..self.levels).map(|k| self.omega_min + d * k as f64).collect()
    }

    pub fn couplings(&self) -> Vec<f64> {
        self.omegas()
            .iter()
            .map(|&w| self.coupling_scale * self.profile.value(w))
            .collect()
    }
}

/// Discrete decay model: one undecayed level coupled to a band of
/// quasi-continuum levels,
/// `H = [[0, Phi^dagger], [Phi, diag(omega)]]`.
#[derive(Debug, Clone)]
pub struct DecayModel {
    spec: Option<ContinuumSpec>,
    omegas: Vec<f64>,
    couplings: Vec<Complex64>,
    model: HermitianModel,
}

impl DecayModel {
    /// Builds the model from a continuum discretization.
    pub fn build(spec: ContinuumSpec) -> Result<Self> {
        spec.validate()?;
        let omegas = spec.omegas();
        let couplings: Vec<Complex64> = spec
            .couplings()
            .into_iter()
            .map(|c| Complex64::new(c, 0.0))
            .collect();
        let model = assemble_decay(&omegas, &couplings)?;
        Ok(Self {
            spec: Some(spec),
            omegas,
            couplings,
            model,
        })
    }

    /// Builds a model directly from level energies and couplings (no
    /// continuum bookkeeping, so golden-rule quantities are unavailable).
    pub fn from_parts(omegas: Vec<f64>, couplings: Vec<Complex64>) -> Result<Self> {
        if omegas.is_empty() || omegas.len() != couplings.len() {
            return Err(Error::InvalidSpec(
                "need equal, nonzero numbers of energies and couplings".into(),
            ));
        }
        let model = assemble_decay(&omegas, &couplings)?;
        Ok(Self {
            spec: None,
            omegas,
            couplings,
            model,
        })
    }

    pub fn spec(&self) -> Option<&ContinuumSpec> {
        self.spec.as_ref()
    }

    pub fn continuum_levels(&self) -> usize {
        self.omegas.len()
    }

    pub fn dim(&self) -> usize {
        1 + self.omegas.len()
    }

    pub fn omegas(&self) -> &[f64] {
        &self.omegas
    }

    pub fn couplings(&self) -> &[Complex64] {
        &self.couplings
    }

    /// Couplings as reals when no phases are present.
    pub fn real_couplings(&self) -> Option<Vec<f64>> {
        if self.couplings.iter().all(|c| c.im == 0.0) {
            Some(self.couplings.iter().map(|c| c.re).collect())
        } else {
            None
        }
    }

    pub fn hermitian(&self) -> &HermitianModel {
        &self.model
    }

    /// Total squared coupling `Phi^dagger Phi`.
    pub fn coupling_norm_sqr(&self) -> f64 {
        self.couplings.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Zeno time of the undecayed state, `1/sqrt(Phi^dagger Phi)`.
    pub fn tau_zeno(&self) -> f64 {
        1.0 / self.coupling_norm_sqr().sqrt()
    }

    /// Golden-rule decay rate `2 pi rho(0) |phi(0)|^2`, when built from a
    /// continuum spec.
    pub fn golden_rate(&self) -> Option<f64> {
        self.spec.as_ref().map(|s| {
            let phi0 = s.coupling_scale * s.profile.value(0.0);
            TWO_PI * s.density() * phi0 * phi0
        })
    }

    /// The undecayed state (x = 1).
    pub fn initial_state(&self) -> StateVector {
        StateVector::basis(self.dim(), 0)
    }

    /// Rephasing time `2 pi / d_omega` of the uniform level grid; beyond it
    /// the discrete model stops imitating its continuum limit.
    pub fn recurrence_time(&self) -> Option<f64> {
        uniform_spacing(&self.omegas).map(|d| TWO_PI / d)
    }

    /// Survival curve of the undecayed state.
    pub fn survival(&self, times: &[f64]) -> Result<SurvivalCurve> {
        survival_amplitude(&self.model, &self.initial_state(), times)
    }
}

fn uniform_spacing(omegas: &[f64]) -> Option<f64> {
    if omegas.len() < 2 {
        return None;
    }
    let d = (omegas[omegas.len() - 1] - omegas[0]) / (omegas.len() as f64 - 1.0);
    if d <= 0.0 {
        return None;
    }
    let uniform = omegas
        .windows(2)
        .all(|w| ((w[1] - w[0]) - d).abs() <= 1e-9 * d);
    uniform.then_some(d)
}

fn assemble_decay(omegas: &[f64], couplings: &[Complex64]) -> Result<HermitianModel> {
    let n = omegas.len();
    let mut m = DMatrix::<Complex64>::zeros(1 + n, 1 + n);
    for k in 0..n {
        m[(0, 1 + k)] = couplings[k].conj();
        m[(1 + k, 0)] = couplings[k];
        m[(1 + k, 1 + k)] = Complex64::new(omegas[k], 0.0);
    }
    HermitianModel::new(m)
}

/// Two-level saturation example `H = alpha^2 sigma_x`.
pub fn two_level(alpha_sq: f64) -> Result<HermitianModel> {
    if alpha_sq <= 0.0 {
        return Err(Error::InvalidSpec(format!(
            "two-level coupling must be positive, got {alpha_sq}"
        )));
    }
    let mut m = DMatrix::<f64>::zeros(2, 2);
    m[(0, 1)] = alpha_sq;
    m[(1, 0)] = alpha_sq;
    HermitianModel::from_real(m)
}

/// Monitoring-apparatus extension of a decay model.
///
/// The full form attaches to every intermediate level its own register of
/// detection levels, centered on that level and sharing one coupling profile,
/// so detection couples to the decay products and not to the undecayed state.
/// The effective form replaces the registers by a uniform complex level shift
/// `delta_e - i/(2 tau_R)` on the intermediate band.
#[derive(Debug, Clone)]
pub struct ApparatusModel {
    base: DecayModel,
    form: ApparatusForm,
    warnings: Vec<String>,
}

#[derive(Debug, Clone)]
pub enum ApparatusForm {
    Full {
        /// Coupling from an intermediate level to each of its register levels.
        theta: f64,
        /// Register offsets, shared by every intermediate level.
        nu: Vec<f64>,
        register_span: f64,
    },
    Effective {
        delta_e: f64,
        tau_response: f64,
    },
}

impl ApparatusModel {
    /// Full three-block model with a given detection coupling strength.
    ///
    /// `total_levels` is the total number of detection levels, split evenly
    /// into per-channel registers of span `register_span`.
    pub fn build_full(
        base: DecayModel,
        theta_scale: f64,
        total_levels: usize,
        register_span: f64,
    ) -> Result<Self> {
        if register_span <= 0.0 || !register_span.is_finite() {
            return Err(Error::InvalidSpec(format!(
                "register span must be positive, got {register_span}"
            )));
        }
        if theta_scale < 0.0 {
            return Err(Error::InvalidSpec(
                "detection coupling must be nonnegative".into(),
            ));
        }
        let n = base.continuum_levels();
        if total_levels < 2 * n || total_levels % n != 0 {
            return Err(Error::InvalidSpec(format!(
                "total detection levels ({total_levels}) must be a multiple of the \
                 {n} intermediate levels, at least 2 per channel"
            )));
        }
        let per_channel = total_levels / n;
        let mut warnings = Vec::new();
        if total_levels < 4 * n {
            warnings.push(format!(
                "apparatus register is small ({per_channel} levels per channel); \
                 irreversibility will fail early"
            ));
        }
        let d = register_span / (per_channel as f64 - 1.0);
        let nu: Vec<f64> = (0..per_channel)
            .map(|m| -register_span / 2.0 + d * m as f64)
            .collect();
        Ok(Self {
            base,
            form: ApparatusForm::Full {
                theta: theta_scale,
                nu,
                register_span,
            },
            warnings,
        })
    }

    /// Full model with the coupling solved from a response-time target:
    /// `1/tau_R = Gamma_theta = 2 pi rho_register theta^2`.
    pub fn with_response_time(
        base: DecayModel,
        tau_response: f64,
        total_levels: usize,
        register_span: f64,
    ) -> Result<Self> {
        if tau_response <= 0.0 {
            return Err(Error::InvalidSpec(
                "response time must be positive".into(),
            ));
        }
        let n = base.continuum_levels();
        if total_levels < 2 * n || total_levels % n != 0 {
            return Err(Error::InvalidSpec(format!(
                "total detection levels ({total_levels}) must be a multiple of the \
                 {n} intermediate levels, at least 2 per channel"
            )));
        }
        let per_channel = total_levels / n;
        let rho = (per_channel as f64 - 1.0) / register_span;
        let theta = (1.0 / (tau_response * TWO_PI * rho)).sqrt();
        Self::build_full(base, theta, total_levels, register_span)
    }

    /// Effective non-Hermitian reduction with response time `tau_R` and
    /// optional real level shift.
    pub fn effective(base: DecayModel, delta_e: f64, tau_response: f64) -> Result<Self> {
        if tau_response <= 0.0 {
            return Err(Error::InvalidSpec(
                "response time must be positive".into(),
            ));
        }
        Ok(Self {
            base,
            form: ApparatusForm::Effective {
                delta_e,
                tau_response,
            },
            warnings: Vec::new(),
        })
    }

    pub fn base(&self) -> &DecayModel {
        &self.base
    }

    pub fn form(&self) -> &ApparatusForm {
        &self.form
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Detection rate out of the intermediate levels.
    pub fn gamma_theta(&self) -> f64 {
        match &self.form {
            ApparatusForm::Full { theta, nu, register_span } => {
                let rho = (nu.len() as f64 - 1.0) / register_span;
                TWO_PI * rho * theta * theta
            }
            ApparatusForm::Effective { tau_response, .. } => 1.0 / tau_response,
        }
    }

    /// Apparatus response time `1/Gamma_theta`.
    pub fn tau_response(&self) -> f64 {
        1.0 / self.gamma_theta()
    }

    pub fn delta_e(&self) -> f64 {
        match &self.form {
            ApparatusForm::Full { .. } => 0.0,
            ApparatusForm::Effective { delta_e, .. } => *delta_e,
        }
    }

    /// Dimension of the underlying Hilbert space.
    pub fn dim(&self) -> usize {
        match &self.form {
            ApparatusForm::Full { nu, .. } => {
                1 + self.base.continuum_levels() * (1 + nu.len())
            }
            ApparatusForm::Effective { .. } => self.base.dim(),
        }
    }

    /// Dense Hermitian assembly of the full three-block Hamiltonian, with the
    /// layout `[[0, Phi^dagger, 0], [Phi, omega, Theta^dagger], [0, Theta, W]]`.
    pub fn assemble(&self) -> Result<HermitianModel> {
        let ApparatusForm::Full { theta, nu, .. } = &self.form else {
            return Err(Error::InvalidSpec(
                "effective apparatus form has no Hermitian assembly".into(),
            ));
        };
        let n = self.base.continuum_levels();
        let m = nu.len();
        let dim = 1 + n + n * m;
        let mut h = DMatrix::<Complex64>::zeros(dim, dim);
        for k in 0..n {
            let y = 1 + k;
            h[(0, y)] = self.base.couplings[k].conj();
            h[(y, 0)] = self.base.couplings[k];
            h[(y, y)] = Complex64::new(self.base.omegas[k], 0.0);
            for (j, &off) in nu.iter().enumerate() {
                let z = 1 + n + k * m + j;
                h[(y, z)] = Complex64::new(*theta, 0.0);
                h[(z, y)] = Complex64::new(*theta, 0.0);
                h[(z, z)] = Complex64::new(self.base.omegas[k] + off, 0.0);
            }
        }
        HermitianModel::new(h)
    }

    /// Exact spectrum of the full model seen from the undecayed level, via
    /// per-channel dressing and one arrowhead secular solve.
    pub fn head_spectrum(&self) -> Result<ArrowheadSpectrum> {
        let ApparatusForm::Full { theta, nu, .. } = &self.form else {
            return Err(Error::InvalidSpec(
                "effective apparatus form has no Hermitian spectrum".into(),
            ));
        };
        let phis = self.base.real_couplings().ok_or_else(|| {
            Error::InvalidSpec(
                "arrowhead fast path requires real decay couplings".into(),
            )
        })?;
        // dress one register: arrowhead [[0, theta..],[theta, diag(nu)]]
        let thetas = vec![*theta; nu.len()];
        let dressed = arrowhead::head_spectrum(0.0, nu, &thetas)?;

        let n = self.base.continuum_levels();
        let m1 = dressed.eigenvalues.len();
        let mut d = Vec::with_capacity(n * m1);
        let mut c = Vec::with_capacity(n * m1);
        for k in 0..n {
            for j in 0..m1 {
                d.push(self.base.omegas[k] + dressed.eigenvalues[j]);
                c.push(phis[k].abs() * dressed.head_weights[j].sqrt());
            }
        }
        let mut order: Vec<usize> = (0..d.len()).collect();
        order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
        let mut ds: Vec<f64> = order.iter().map(|&i| d[i]).collect();
        let cs: Vec<f64> = order.iter().map(|&i| c[i]).collect();
        // nudge exact collisions apart; the perturbation is below roundoff
        let scale = ds.iter().fold(1.0f64, |a, &x| a.max(x.abs()));
        for i in 1..ds.len() {
            if ds[i] <= ds[i - 1] {
                ds[i] = ds[i - 1] + 1e-13 * scale;
            }
        }
        arrowhead::head_spectrum(0.0, &ds, &cs)
    }

    /// Survival of the undecayed level under monitoring.
    ///
    /// The full form is propagated exactly through its spectral decomposition
    /// (arrowhead form when couplings are real, dense otherwise); the
    /// effective form is propagated with the non-unitary exponential and its
    /// norm loss is the detection leakage.
    pub fn survival(&self, times: &[f64]) -> Result<SurvivalCurve> {
        if times.is_empty() {
            return Err(Error::EmptyTimes);
        }
        match &self.form {
            ApparatusForm::Full { .. } => {
                if self.base.real_couplings().is_some() {
                    let spec = self.head_spectrum()?;
                    let amps: Vec<Complex64> =
                        times.iter().map(|&t| spec.head_amplitude(t)).collect();
                    SurvivalCurve::from_samples(times.to_vec(), amps)
                } else {
                    let h = self.assemble()?;
                    let dec = decompose(&h)?;
                    let psi = StateVector::basis(h.dim(), 0);
                    let w = dec.weights(&psi);
                    let amps: Vec<Complex64> =
                        times.iter().map(|&t| dec.raw_amplitude(&w, t)).collect();
                    SurvivalCurve::from_samples(times.to_vec(), amps)
                }
            }
            ApparatusForm::Effective { delta_e, tau_response } => {
                let n = self.base.continuum_levels();
                let mut h = self.base.hermitian().matrix().clone();
                let shift = Complex64::new(*delta_e, -0.5 / tau_response);
                for k in 0..n {
                    h[(1 + k, 1 + k)] += shift;
                }
                let psi0 = DVector::from_fn(1 + n, |i, _| {
                    Complex64::new(if i == 0 { 1.0 } else { 0.0 }, 0.0)
                });
                let states = evolve_nonhermitian(&h, &psi0, times)?;
                let amps: Vec<Complex64> = states.iter().map(|s| s[0]).collect();
                SurvivalCurve::from_samples(times.to_vec(), amps)
            }
        }
    }
}

/// Decay model with a transient coupling enhancement: mirror levels
/// degenerate with the intermediate band, coupled to it by its own energies,
/// switched back off at `t_off`.
///
/// Layout while enhanced:
/// `[[0, Phi^dagger, 0], [Phi, omega, omega], [0, omega, omega]]`;
/// afterwards the mirror block decouples entirely and its amplitudes freeze.
#[derive(Debug, Clone)]
pub struct SpecialStateModel {
    base: DecayModel,
    t_off: f64,
    enhanced: HermitianModel,
    post: HermitianModel,
}

impl SpecialStateModel {
    pub fn build(base: DecayModel, t_off: f64) -> Result<Self> {
        if t_off <= 0.0 {
            return Err(Error::InvalidSpec(format!(
                "switch-off time must be positive, got {t_off}"
            )));
        }
        let n = base.continuum_levels();
        let dim = 1 + 2 * n;
        let mut h = DMatrix::<Complex64>::zeros(dim, dim);
        let mut post = DMatrix::<Complex64>::zeros(dim, dim);
        for k in 0..n {
            let y = 1 + k;
            let z = 1 + n + k;
            let w = Complex64::new(base.omegas[k], 0.0);
            h[(0, y)] = base.couplings[k].conj();
            h[(y, 0)] = base.couplings[k];
            h[(y, y)] = w;
            h[(y, z)] = w;
            h[(z, y)] = w;
            h[(z, z)] = w;

            post[(0, y)] = base.couplings[k].conj();
            post[(y, 0)] = base.couplings[k];
            post[(y, y)] = w;
        }
        Ok(Self {
            base,
            t_off,
            enhanced: HermitianModel::new(h)?,
            post: HermitianModel::new(post)?,
        })
    }

    pub fn base(&self) -> &DecayModel {
        &self.base
    }

    pub fn t_off(&self) -> f64 {
        self.t_off
    }

    pub fn dim(&self) -> usize {
        self.enhanced.dim()
    }

    pub fn enhanced(&self) -> &HermitianModel {
        &self.enhanced
    }

    pub fn post(&self) -> &HermitianModel {
        &self.post
    }

    /// Exact piecewise propagator for the coupling schedule.
    pub fn propagator(&self) -> Result<SpecialPropagator> {
        let dec_enhanced = decompose(&self.enhanced)?;
        let dec_post = decompose(&self.post)?;
        let psi0 = StateVector::basis(self.dim(), 0);
        let at_t_off = dec_enhanced.propagate(&psi0, self.t_off)?;
        let weights_enhanced = dec_enhanced.weights(&psi0);
        Ok(SpecialPropagator {
            t_off: self.t_off,
            dec_enhanced,
            dec_post,
            weights_enhanced,
            psi0,
            at_t_off,
        })
    }
}

/// Piecewise-exact evolution under a [`SpecialStateModel`] schedule: the
/// enhanced Hamiltonian up to `t_off`, the decoupled one afterwards, the
/// state handed across the boundary.
pub struct SpecialPropagator {
    t_off: f64,
    dec_enhanced: crate::dynamics::SpectralDecomposition,
    dec_post: crate::dynamics::SpectralDecomposition,
    weights_enhanced: Vec<f64>,
    psi0: StateVector,
    at_t_off: StateVector,
}

impl SpecialPropagator {
    /// Survival amplitude `<psi0 | psi(t)>` at an arbitrary time.
    pub fn amplitude(&self, t: f64) -> Result<Complex64> {
        if t <= self.t_off {
            Ok(self.dec_enhanced.raw_amplitude(&self.weights_enhanced, t))
        } else {
            let s = self.dec_post.propagate(&self.at_t_off, t - self.t_off)?;
            Ok(self.psi0.overlap(&s))
        }
    }

    pub fn state(&self, t: f64) -> Result<StateVector> {
        if t <= self.t_off {
            self.dec_enhanced.propagate(&self.psi0, t)
        } else {
            self.dec_post.propagate(&self.at_t_off, t - self.t_off)
        }
    }

    pub fn survival(&self, times: &[f64]) -> Result<SurvivalCurve> {
        if times.is_empty() {
            return Err(Error::EmptyTimes);
        }
        let amps: Result<Vec<Complex64>> = times.iter().map(|&t| self.amplitude(t)).collect();
        SurvivalCurve::from_samples(times.to_vec(), amps?)
    }
}
