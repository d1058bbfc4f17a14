//! Dense complex matrix exponential by Pade approximation with scaling and
//! squaring. Used for the non-Hermitian effective-apparatus propagator, where
//! spectral decomposition is unavailable.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

// degree-13 Pade coefficients
const B13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371920351148152;

fn one_norm(m: &DMatrix<Complex64>) -> f64 {
    let mut max = 0.0f64;
    for j in 0..m.ncols() {
        let s: f64 = m.column(j).iter().map(|v| v.norm()).sum();
        max = max.max(s);
    }
    max
}

/// `exp(A)` for a general complex square matrix.
pub fn expm(a: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: a.ncols(),
        });
    }
    // shift by the mean eigenvalue to reduce the norm
    let mu = a.diagonal().sum() / Complex64::new(n as f64, 0.0);
    let mut shifted = a.clone();
    for i in 0..n {
        shifted[(i, i)] -= mu;
    }

    let norm = one_norm(&shifted);
    if !norm.is_finite() {
        return Err(Error::Numeric("non-finite matrix in expm".into()));
    }
    let s = if norm > THETA13 {
        (norm / THETA13).log2().ceil() as u32
    } else {
        0
    };
    let scaled = &shifted / Complex64::new(2f64.powi(s as i32), 0.0);

    let cb = |k: usize| Complex64::new(B13[k], 0.0);
    let id = DMatrix::<Complex64>::identity(n, n);
    let a2 = &scaled * &scaled;
    let a4 = &a2 * &a2;
    let a6 = &a2 * &a4;

    let u_inner = &a6 * (&a6 * cb(13) + &a4 * cb(11) + &a2 * cb(9))
        + &a6 * cb(7)
        + &a4 * cb(5)
        + &a2 * cb(3)
        + &id * cb(1);
    let u = &scaled * u_inner;
    let v = &a6 * (&a6 * cb(12) + &a4 * cb(10) + &a2 * cb(8))
        + &a6 * cb(6)
        + &a4 * cb(4)
        + &a2 * cb(2)
        + &id * cb(0);

    let denom = &v - &u;
    let numer = &v + &u;
    let mut r = denom
        .lu()
        .solve(&numer)
        .ok_or_else(|| Error::Numeric("singular Pade denominator in expm".into()))?;
    for _ in 0..s {
        r = &r * &r;
    }
    Ok(r * mu.exp())
}

/// Applies `exp(-i H_eff t_k) |psi0>` across an increasing time grid for a
/// possibly non-Hermitian `H_eff`. One step propagator is reused on uniform
/// grids; norm loss is the physics and is not corrected.
pub fn evolve_nonhermitian(
    h_eff: &DMatrix<Complex64>,
    psi0: &DVector<Complex64>,
    times: &[f64],
) -> Result<Vec<DVector<Complex64>>> {
    if times.is_empty() {
        return Err(Error::EmptyTimes);
    }
    if times[0] < 0.0 || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::BadTimeGrid);
    }
    if h_eff.nrows() != psi0.len() {
        return Err(Error::DimensionMismatch {
            expected: h_eff.nrows(),
            got: psi0.len(),
        });
    }

    let uniform = times.len() > 2 && {
        let dt = times[1] - times[0];
        times.windows(2).all(|w| ((w[1] - w[0]) - dt).abs() <= 1e-9 * dt.max(1e-300))
            && (times[0] == 0.0 || (times[0] - dt).abs() <= 1e-9 * dt)
    };

    let gen = |dt: f64| -> Result<DMatrix<Complex64>> {
        expm(&(h_eff * Complex64::new(0.0, -dt)))
    };

    let mut out = Vec::with_capacity(times.len());
    if uniform {
        let dt = times[1] - times[0];
        let step = gen(dt)?;
        let mut psi = if times[0] == 0.0 {
            psi0.clone()
        } else {
            &step * psi0
        };
        out.push(psi.clone());
        for _ in 1..times.len() {
            psi = &step * &psi;
            out.push(psi.clone());
        }
    } else {
        let mut psi = psi0.clone();
        let mut t_prev = 0.0;
        for &t in times {
            let dt = t - t_prev;
            if dt > 0.0 {
                psi = &gen(dt)? * &psi;
            }
            t_prev = t;
            out.push(psi.clone());
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expm_zero_is_identity() {
        let a = DMatrix::<Complex64>::zeros(4, 4);
        let e = expm(&a).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let target = if i == j { 1.0 } else { 0.0 };
                assert!((e[(i, j)] - Complex64::new(target, 0.0)).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn expm_diagonal() {
        let mut a = DMatrix::<Complex64>::zeros(3, 3);
        a[(0, 0)] = Complex64::new(1.0, 0.5);
        a[(1, 1)] = Complex64::new(-2.0, 1.0);
        a[(2, 2)] = Complex64::new(0.0, -3.0);
        let e = expm(&a).unwrap();
        for i in 0..3 {
            assert!((e[(i, i)] - a[(i, i)].exp()).norm() < 1e-13);
        }
    }

    #[test]
    fn expm_matches_rotation() {
        // exp(-i sigma_x theta) = cos(theta) I - i sin(theta) sigma_x
        let theta = 0.7;
        let mut sx = DMatrix::<Complex64>::zeros(2, 2);
        sx[(0, 1)] = Complex64::new(1.0, 0.0);
        sx[(1, 0)] = Complex64::new(1.0, 0.0);
        let e = expm(&(&sx * Complex64::new(0.0, -theta))).unwrap();
        assert!((e[(0, 0)] - Complex64::new(theta.cos(), 0.0)).norm() < 1e-14);
        assert!((e[(0, 1)] - Complex64::new(0.0, -theta.sin())).norm() < 1e-14);
    }

    #[test]
    fn expm_additivity_large_norm() {
        // exp(A)·exp(A) = exp(2A) exercises scaling/squaring
        let n = 6;
        let mut a = DMatrix::<Complex64>::zeros(n, n);
        let mut seed = 1u64;
        let mut next = || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((seed >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        for i in 0..n {
            for j in 0..n {
                a[(i, j)] = Complex64::new(4.0 * next(), 4.0 * next());
            }
        }
        let e1 = expm(&a).unwrap();
        let e2 = expm(&(&a * Complex64::new(2.0, 0.0))).unwrap();
        let prod = &e1 * &e1;
        let scale = one_norm(&e2).max(1.0);
        assert!(one_norm(&(prod - e2)) < 1e-9 * scale);
    }
}
