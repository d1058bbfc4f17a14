//! Complex state vectors, Hermitian model assembly, exact time evolution by
//! spectral decomposition, and survival-amplitude sampling.
//!
//! Evolution is always computed from the eigendecomposition of the (time
//! independent) Hamiltonian, never from a step integrator, so transient-regime
//! quantities are exact to roundoff. Step integrators appear only as oracles
//! in the test suite.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Norm tolerance for state construction.
pub const NORM_TOL: f64 = 1e-12;
/// Hermiticity tolerance (relative to the largest matrix element).
pub const HERMITICITY_TOL: f64 = 1e-14;

/// Normalized complex state over the levels of a model.
#[derive(Debug, Clone)]
pub struct StateVector {
    amps: DVector<Complex64>,
}

impl StateVector {
    /// Builds a state from amplitudes, checking unit norm to `NORM_TOL`.
    pub fn new(amps: Vec<Complex64>) -> Result<Self> {
        let v = DVector::from_vec(amps);
        let deviation = (v.norm() - 1.0).abs();
        if !deviation.is_finite() || deviation > NORM_TOL {
            return Err(Error::NotNormalized { deviation });
        }
        Ok(Self { amps: v })
    }

    /// Basis state `|k>` of the given dimension.
    pub fn basis(dim: usize, k: usize) -> Self {
        assert!(k < dim, "basis index out of range");
        let mut amps = DVector::zeros(dim);
        amps[k] = Complex64::new(1.0, 0.0);
        Self { amps }
    }

    /// Normalizes an arbitrary nonzero vector.
    pub fn normalized(mut amps: DVector<Complex64>) -> Result<Self> {
        let n = amps.norm();
        if !n.is_finite() || n == 0.0 {
            return Err(Error::Numeric("cannot normalize zero state".into()));
        }
        amps /= Complex64::new(n, 0.0);
        Ok(Self { amps })
    }

    /// Internal constructor for unitarily-evolved states: the exact-arithmetic
    /// norm is 1 but roundoff up to ~1e-10 is tolerated for large models.
    pub(crate) fn from_evolution(amps: DVector<Complex64>) -> Result<Self> {
        let deviation = (amps.norm() - 1.0).abs();
        if !deviation.is_finite() || deviation > 1e-10 {
            return Err(Error::NotNormalized { deviation });
        }
        Ok(Self { amps })
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &DVector<Complex64> {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.norm()
    }

    /// `<self|other>`.
    pub fn overlap(&self, other: &StateVector) -> Complex64 {
        self.amps.dotc(&other.amps)
    }
}

/// Dense Hermitian Hamiltonian in natural units (hbar = 1).
#[derive(Debug, Clone)]
pub struct HermitianModel {
    mat: DMatrix<Complex64>,
}

impl HermitianModel {
    /// Validates `H = H^dagger` elementwise to `HERMITICITY_TOL` (relative to
    /// the largest element magnitude) and rejects non-finite entries.
    pub fn new(mat: DMatrix<Complex64>) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::DimensionMismatch {
                expected: mat.nrows(),
                got: mat.ncols(),
            });
        }
        let mut scale: f64 = 1.0;
        for v in mat.iter() {
            if !v.re.is_finite() || !v.im.is_finite() {
                return Err(Error::Numeric("non-finite matrix element".into()));
            }
            scale = scale.max(v.norm());
        }
        let n = mat.nrows();
        let mut max_asym: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                let asym = (mat[(i, j)] - mat[(j, i)].conj()).norm();
                max_asym = max_asym.max(asym);
            }
        }
        if max_asym > HERMITICITY_TOL * scale {
            return Err(Error::NotHermitian {
                max_asymmetry: max_asym,
            });
        }
        Ok(Self { mat })
    }

    /// Builds from a real symmetric matrix.
    pub fn from_real(mat: DMatrix<f64>) -> Result<Self> {
        Self::new(mat.map(|x| Complex64::new(x, 0.0)))
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.mat
    }

    pub fn is_real(&self) -> bool {
        self.mat.iter().all(|v| v.im == 0.0)
    }

    /// `H |psi>` without normalizing.
    pub fn apply(&self, psi: &StateVector) -> Result<DVector<Complex64>> {
        if psi.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: psi.dim(),
            });
        }
        Ok(&self.mat * psi.amplitudes())
    }
}

/// Eigen-decomposition `H = V diag(lambda) V^dagger` with ascending
/// eigenvalues; the backend for all exact propagation.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<Complex64>,
}

impl SpectralDecomposition {
    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<Complex64> {
        &self.eigenvectors
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Coefficients `c_j = <E_j|psi>`.
    pub fn coefficients(&self, psi: &StateVector) -> DVector<Complex64> {
        self.eigenvectors.adjoint() * psi.amplitudes()
    }

    /// Spectral weights `|<E_j|psi>|^2` of a state.
    pub fn weights(&self, psi: &StateVector) -> Vec<f64> {
        self.coefficients(psi).iter().map(|c| c.norm_sqr()).collect()
    }

    /// `exp(-iHt) |psi>`.
    pub fn propagate(&self, psi: &StateVector, t: f64) -> Result<StateVector> {
        if psi.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: psi.dim(),
            });
        }
        if !t.is_finite() {
            return Err(Error::Numeric(format!("non-finite time {t}")));
        }
        let mut c = self.coefficients(psi);
        for (j, cj) in c.iter_mut().enumerate() {
            let (s, co) = (-self.eigenvalues[j] * t).sin_cos();
            *cj *= Complex64::new(co, s);
        }
        StateVector::from_evolution(&self.eigenvectors * c)
    }

    /// Survival amplitude `<psi| exp(-iHt) |psi>` (no mean-energy phase).
    pub fn raw_amplitude(&self, weights: &[f64], t: f64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (j, &w) in weights.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let (s, co) = (-self.eigenvalues[j] * t).sin_cos();
            acc += Complex64::new(w * co, w * s);
        }
        acc
    }

    /// Max-norm residual of `V diag(lambda) V^dagger - H`.
    pub fn reconstruction_residual(&self, model: &HermitianModel) -> f64 {
        let lam = DMatrix::from_diagonal(
            &self.eigenvalues.map(|x| Complex64::new(x, 0.0)),
        );
        let rebuilt = &self.eigenvectors * lam * self.eigenvectors.adjoint();
        (rebuilt - model.matrix())
            .iter()
            .map(|v| v.norm())
            .fold(0.0, f64::max)
    }

    /// Max-norm deviation of `V^dagger V` from the identity.
    pub fn unitarity_residual(&self) -> f64 {
        let n = self.dim();
        let g = self.eigenvectors.adjoint() * &self.eigenvectors;
        let mut max = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let target = if i == j { 1.0 } else { 0.0 };
                max = max.max((g[(i, j)] - Complex64::new(target, 0.0)).norm());
            }
        }
        max
    }
}

/// Exact eigendecomposition of a Hermitian model.
///
/// Real symmetric input takes a real-arithmetic path (all builder-assembled
/// models are real), complex Hermitian input is handled directly.
pub fn decompose(model: &HermitianModel) -> Result<SpectralDecomposition> {
    let n = model.dim();
    let (vals, vecs): (Vec<f64>, DMatrix<Complex64>) = if model.is_real() {
        let real = model.matrix().map(|v| v.re);
        let eig = nalgebra::SymmetricEigen::new(real);
        (
            eig.eigenvalues.iter().copied().collect(),
            eig.eigenvectors.map(|x| Complex64::new(x, 0.0)),
        )
    } else {
        let eig = nalgebra::SymmetricEigen::new(model.matrix().clone());
        (
            eig.eigenvalues.iter().copied().collect(),
            eig.eigenvectors,
        )
    };

    // sort ascending, permuting eigenvector columns to match
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
    let sorted_vals = DVector::from_iterator(n, order.iter().map(|&j| vals[j]));
    let mut sorted_vecs = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        sorted_vecs.set_column(dst, &vecs.column(src));
    }

    Ok(SpectralDecomposition {
        eigenvalues: sorted_vals,
        eigenvectors: sorted_vecs,
    })
}

/// `exp(-iHt) |initial>` by spectral decomposition.
///
/// Decomposes on every call; reuse [`decompose`] + [`SpectralDecomposition::propagate`]
/// when evolving many times under one model.
pub fn evolve(model: &HermitianModel, initial: &StateVector, t: f64) -> Result<StateVector> {
    decompose(model)?.propagate(initial, t)
}

/// Survival amplitude and probability series from one evolution run.
#[derive(Debug, Clone)]
pub struct SurvivalCurve {
    times: Vec<f64>,
    amplitude: Vec<Complex64>,
    probability: Vec<f64>,
}

impl SurvivalCurve {
    /// Assembles a curve from samples, enforcing `0 <= p <= 1 + 1e-12`.
    pub fn from_samples(times: Vec<f64>, amplitude: Vec<Complex64>) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::EmptyTimes);
        }
        if times.len() != amplitude.len() {
            return Err(Error::DimensionMismatch {
                expected: times.len(),
                got: amplitude.len(),
            });
        }
        if times[0] < 0.0 || times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::BadTimeGrid);
        }
        let probability: Vec<f64> = amplitude.iter().map(|f| f.norm_sqr()).collect();
        for &p in &probability {
            if !(0.0..=1.0 + 1e-12).contains(&p) {
                return Err(Error::Numeric(format!(
                    "survival probability {p} outside [0, 1]"
                )));
            }
        }
        Ok(Self {
            times,
            amplitude,
            probability,
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn amplitude(&self) -> &[Complex64] {
        &self.amplitude
    }

    pub fn probability(&self) -> &[f64] {
        &self.probability
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Samples `f(t) = <psi| exp(-i(H - E_psi)t) |psi>` on a time grid.
///
/// The mean-energy phase is removed, so `df/dt(0) = 0` and the short-time law
/// is purely quadratic; `p = |f|^2` is phase-free either way.
pub fn survival_amplitude(
    model: &HermitianModel,
    initial: &StateVector,
    times: &[f64],
) -> Result<SurvivalCurve> {
    if times.is_empty() {
        return Err(Error::EmptyTimes);
    }
    let decomp = decompose(model)?;
    if initial.dim() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            got: initial.dim(),
        });
    }
    let e_psi = mean_energy(model, initial)?;
    let weights = decomp.weights(initial);
    let amps: Vec<Complex64> = times
        .iter()
        .map(|&t| {
            let (s, c) = (e_psi * t).sin_cos();
            Complex64::new(c, s) * decomp.raw_amplitude(&weights, t)
        })
        .collect();
    SurvivalCurve::from_samples(times.to_vec(), amps)
}

/// `<psi|H|psi>` (real by Hermiticity).
pub fn mean_energy(model: &HermitianModel, psi: &StateVector) -> Result<f64> {
    let h_psi = model.apply(psi)?;
    Ok(psi.amplitudes().dotc(&h_psi).re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> HermitianModel {
        let mut m = DMatrix::<Complex64>::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(rng.gen_range(-1.0..1.0), 0.0);
            for j in (i + 1)..n {
                let v = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                m[(i, j)] = v;
                m[(j, i)] = v.conj();
            }
        }
        HermitianModel::new(m).unwrap()
    }

    fn random_state(rng: &mut ChaCha8Rng, n: usize) -> StateVector {
        let v = DVector::from_fn(n, |_, _| {
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        StateVector::normalized(v).unwrap()
    }

    fn pauli_x() -> HermitianModel {
        let mut m = DMatrix::<f64>::zeros(2, 2);
        m[(0, 1)] = 1.0;
        m[(1, 0)] = 1.0;
        HermitianModel::from_real(m).unwrap()
    }

    #[test]
    fn decompose_zero_matrix() {
        let model = HermitianModel::from_real(DMatrix::zeros(2, 2)).unwrap();
        let dec = decompose(&model).unwrap();
        assert_eq!(dec.eigenvalues()[0], 0.0);
        assert_eq!(dec.eigenvalues()[1], 0.0);
        assert!(dec.unitarity_residual() < 1e-12);
    }

    #[test]
    fn decompose_pauli_x() {
        let dec = decompose(&pauli_x()).unwrap();
        assert!((dec.eigenvalues()[0] + 1.0).abs() < 1e-14);
        assert!((dec.eigenvalues()[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn decompose_random_hermitian_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let model = random_hermitian(&mut rng, 8);
            let dec = decompose(&model).unwrap();
            let scale = model.matrix().iter().map(|v| v.norm()).fold(0.0, f64::max);
            assert!(dec.reconstruction_residual(&model) < 1e-10 * scale.max(1.0));
            assert!(dec.unitarity_residual() < 1e-10);
            // eigenvalues ascending
            assert!(dec.eigenvalues().iter().zip(dec.eigenvalues().iter().skip(1)).all(|(a, b)| a <= b));
        }
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut m = DMatrix::<Complex64>::zeros(2, 2);
        m[(0, 1)] = Complex64::new(1.0, 0.0);
        m[(1, 0)] = Complex64::new(1.0, 0.5);
        match HermitianModel::new(m) {
            Err(crate::Error::NotHermitian { max_asymmetry }) => {
                assert!((max_asymmetry - 0.5).abs() < 1e-14);
            }
            other => panic!("expected NotHermitian, got {other:?}"),
        }
    }

    #[test]
    fn evolve_at_zero_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let model = random_hermitian(&mut rng, 5);
        let psi = random_state(&mut rng, 5);
        let out = evolve(&model, &psi, 0.0).unwrap();
        for (a, b) in out.amplitudes().iter().zip(psi.amplitudes().iter()) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn evolve_rabi_half_period_is_orthogonal() {
        // H = a^2 sigma_x turns |0> into an orthogonal state at t = pi/(2 a^2)
        let alpha_sq = 0.7;
        let mut m = DMatrix::<f64>::zeros(2, 2);
        m[(0, 1)] = alpha_sq;
        m[(1, 0)] = alpha_sq;
        let model = HermitianModel::from_real(m).unwrap();
        let psi = StateVector::basis(2, 0);
        let t = std::f64::consts::FRAC_PI_2 / alpha_sq;
        let out = evolve(&model, &psi, t).unwrap();
        assert!(psi.overlap(&out).norm() < 1e-10);
    }

    #[test]
    fn evolve_dimension_mismatch() {
        let model = pauli_x();
        let psi = StateVector::basis(3, 0);
        assert!(matches!(
            evolve(&model, &psi, 1.0),
            Err(crate::Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn evolve_group_law() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let model = random_hermitian(&mut rng, 6);
            let psi = random_state(&mut rng, 6);
            let (t1, t2) = (rng.gen_range(0.0..3.0), rng.gen_range(0.0..3.0));
            let dec = decompose(&model).unwrap();
            let once = dec.propagate(&psi, t1 + t2).unwrap();
            let twice = dec.propagate(&dec.propagate(&psi, t1).unwrap(), t2).unwrap();
            for (a, b) in once.amplitudes().iter().zip(twice.amplitudes().iter()) {
                assert!((a - b).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn norm_conserved_over_random_triples() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..1000 {
            let n = rng.gen_range(2..9);
            let model = random_hermitian(&mut rng, n);
            let psi = random_state(&mut rng, n);
            let t = rng.gen_range(-20.0..20.0);
            let out = evolve(&model, &psi, t).unwrap();
            assert!((out.norm() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn survival_at_zero_is_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let model = random_hermitian(&mut rng, 4);
        let psi = random_state(&mut rng, 4);
        let curve = survival_amplitude(&model, &psi, &[0.0]).unwrap();
        assert!((curve.amplitude()[0] - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        assert!((curve.probability()[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn survival_two_level_cosine() {
        let alpha_sq = 0.37;
        let mut m = DMatrix::<f64>::zeros(2, 2);
        m[(0, 1)] = alpha_sq;
        m[(1, 0)] = alpha_sq;
        let model = HermitianModel::from_real(m).unwrap();
        let psi = StateVector::basis(2, 0);
        let times: Vec<f64> = (0..50).map(|k| 0.3 * k as f64).collect();
        let curve = survival_amplitude(&model, &psi, &times).unwrap();
        for (&t, f) in times.iter().zip(curve.amplitude()) {
            let expect = (alpha_sq * t).cos();
            assert!((f - Complex64::new(expect, 0.0)).norm() < 1e-10, "t={t}");
        }
    }

    #[test]
    fn survival_rejects_empty_times() {
        let model = pauli_x();
        let psi = StateVector::basis(2, 0);
        assert!(matches!(
            survival_amplitude(&model, &psi, &[]),
            Err(crate::Error::EmptyTimes)
        ));
    }

    #[test]
    fn survival_phase_convention_kills_first_derivative() {
        // with the mean-energy phase removed, f'(0) = 0: the symmetric
        // finite difference must vanish to the quadratic-term level
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        for _ in 0..10 {
            let model = random_hermitian(&mut rng, 6);
            let psi = random_state(&mut rng, 6);
            let (_, dh) = {
                let h_psi = model.apply(&psi).unwrap();
                let e = psi.amplitudes().dotc(&h_psi).re;
                (e, (h_psi.norm_squared() - e * e).max(0.0).sqrt())
            };
            let tau_z = 1.0 / dh;
            let delta = tau_z / 1e4;
            let curve = survival_amplitude(&model, &psi, &[delta]).unwrap();
            let f_plus = curve.amplitude()[0];
            let f_minus = f_plus.conj(); // f(-t) = f(t)^* for Hermitian H
            let deriv = (f_plus - f_minus) / (2.0 * delta);
            assert!(deriv.re.abs() < 1e-8, "Re f'(0) = {}", deriv.re);
            assert!(deriv.im.abs() < 1e-8, "Im f'(0) = {}", deriv.im);
        }
    }

    #[test]
    fn time_reversal_conjugates_amplitude() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let model = random_hermitian(&mut rng, 5);
        let psi = random_state(&mut rng, 5);
        let dec = decompose(&model).unwrap();
        let w = dec.weights(&psi);
        for &t in &[0.4, 1.7, 9.2] {
            let fwd = dec.raw_amplitude(&w, t);
            let bwd = dec.raw_amplitude(&w, -t);
            assert!((fwd - bwd.conj()).norm() < 1e-12);
        }
    }

    #[test]
    fn state_norm_validation() {
        let bad = vec![Complex64::new(0.9, 0.0), Complex64::new(0.1, 0.0)];
        assert!(matches!(
            StateVector::new(bad),
            Err(crate::Error::NotNormalized { .. })
        ));
    }
}
