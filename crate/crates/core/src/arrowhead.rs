//! Spectral decomposition of symmetric arrowhead matrices
//! `[[h, c^T], [c, diag(d)]]` by the secular equation.
//!
//! Star-shaped decay models (one level coupled to many otherwise uncoupled
//! levels) are arrowhead matrices in the basis where their satellite blocks
//! are diagonal, which makes survival amplitudes of the head level computable
//! in O(n^2) without dense eigenvectors. Only the head components of the
//! eigenvectors are produced; that is all a survival amplitude needs.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Eigenvalues of an arrowhead matrix together with the squared head
/// components `|<e_0|lambda>|^2` of the corresponding eigenvectors.
#[derive(Debug, Clone)]
pub struct ArrowheadSpectrum {
    pub eigenvalues: Vec<f64>,
    pub head_weights: Vec<f64>,
}

impl ArrowheadSpectrum {
    /// Survival amplitude of the head level, `sum_j w_j exp(-i lambda_j t)`.
    pub fn head_amplitude(&self, t: f64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (&lam, &w) in self.eigenvalues.iter().zip(&self.head_weights) {
            let (s, c) = (-lam * t).sin_cos();
            acc += Complex64::new(w * c, w * s);
        }
        acc
    }

    pub fn weight_sum(&self) -> f64 {
        self.head_weights.iter().sum()
    }
}

/// Secular function `g(lam) = lam - h - sum_i c_i^2 / (lam - d_i)`;
/// strictly increasing on every interval between consecutive poles.
fn secular(lam: f64, head: f64, d: &[f64], c2: &[f64]) -> f64 {
    let mut s = lam - head;
    for (&di, &ci2) in d.iter().zip(c2) {
        s -= ci2 / (lam - di);
    }
    s
}

/// Eigen-spectrum of `[[head, c^T],[c, diag(d)]]` restricted to head data.
///
/// `d` must be strictly increasing; entries with `c_i = 0` are deflated away
/// (their eigenvalues carry zero head weight and do not contribute).
pub fn head_spectrum(head: f64, d: &[f64], c: &[f64]) -> Result<ArrowheadSpectrum> {
    if d.len() != c.len() {
        return Err(Error::DimensionMismatch {
            expected: d.len(),
            got: c.len(),
        });
    }
    if d.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Numeric(
            "arrowhead diagonal must be strictly increasing".into(),
        ));
    }
    let (d, c): (Vec<f64>, Vec<f64>) = d
        .iter()
        .zip(c)
        .filter(|(_, &ci)| ci != 0.0)
        .map(|(&di, &ci)| (di, ci))
        .unzip();
    let n = d.len();
    if n == 0 {
        return Ok(ArrowheadSpectrum {
            eigenvalues: vec![head],
            head_weights: vec![1.0],
        });
    }
    let c2: Vec<f64> = c.iter().map(|x| x * x).collect();
    let cnorm = c2.iter().sum::<f64>().sqrt();

    // one root strictly inside each gap, one below d_0, one above d_{n-1}
    let lo_outer = d[0].min(head) - cnorm - 1.0;
    let hi_outer = d[n - 1].max(head) + cnorm + 1.0;

    let mut eigenvalues = Vec::with_capacity(n + 1);
    let mut head_weights = Vec::with_capacity(n + 1);
    for gap in 0..=n {
        let lo = if gap == 0 { lo_outer } else { d[gap - 1] };
        let hi = if gap == n { hi_outer } else { d[gap] };
        let pole_lo = (gap > 0).then(|| gap - 1);
        let pole_hi = (gap < n).then_some(gap);
        let lam = gap_root(lo, hi, pole_lo, pole_hi, head, &d, &c2);
        let mut denom = 1.0;
        for (&di, &ci2) in d.iter().zip(&c2) {
            let r = lam - di;
            denom += ci2 / (r * r);
        }
        eigenvalues.push(lam);
        head_weights.push(1.0 / denom);
    }
    // the head weights are a complete distribution; renormalizing enforces
    // that exactly instead of leaving the accumulated root error in f(0)
    let total: f64 = head_weights.iter().sum();
    if (total - 1.0).abs() > 1e-8 {
        return Err(Error::Numeric(format!(
            "arrowhead weight sum {total} too far from 1; secular solve failed"
        )));
    }
    for w in &mut head_weights {
        *w /= total;
    }
    Ok(ArrowheadSpectrum {
        eigenvalues,
        head_weights,
    })
}

/// Root of the secular function in the open gap `(lo, hi)`.
///
/// The sum is split into the two bracketing pole terms and a smooth
/// remainder; the remainder is modeled linearly (slope from a secant across
/// the previous iterate, so no second O(n) pass) and the resulting
/// two-pole-plus-line model is solved by a cheap inner iteration. Bisection
/// on the sign bracket is the safeguard. Mid-gap and pole-pinned roots both
/// converge in a handful of O(n) sweeps.
fn gap_root(
    lo: f64,
    hi: f64,
    pole_lo: Option<usize>,
    pole_hi: Option<usize>,
    head: f64,
    d: &[f64],
    c2: &[f64],
) -> f64 {
    let mut a = lo;
    let mut b = hi;
    let mut x = 0.5 * (a + b);
    // the bracketing poles are adjacent indices, so the smooth remainder is a
    // sum over two contiguous slices: full precision and still vectorizable
    let cut_lo = pole_lo.unwrap_or(0);
    let cut_hi = pole_hi.map_or(d.len(), |k| k + 1);
    let p_lo = pole_lo.map(|k| (d[k], c2[k]));
    let p_hi = pole_hi.map(|k| (d[k], c2[k]));
    for _ in 0..64 {
        let (s_lo, ds_lo) = sum_slice(x, &d[..cut_lo], &c2[..cut_lo]);
        let (s_hi, ds_hi) = sum_slice(x, &d[cut_hi..], &c2[cut_hi..]);
        let smooth = x - head - s_lo - s_hi;
        let slope = 1.0 + ds_lo + ds_hi;
        let term_lo = pole_lo.map_or(0.0, |k| c2[k] / (x - d[k]));
        let term_hi = pole_hi.map_or(0.0, |k| c2[k] / (x - d[k]));
        let g = smooth - term_lo - term_hi;
        // evaluation noise floor: iterating below it just chases roundoff
        let noise = 8.0 * f64::EPSILON
            * (x.abs() + head.abs() + term_lo.abs() + term_hi.abs() + smooth.abs() + 1.0);
        if g.abs() <= noise {
            return x;
        }
        if g < 0.0 {
            a = x;
        } else {
            b = x;
        }
        if (b - a) <= 4.0 * f64::EPSILON * a.abs().max(b.abs()).max(1e-300) {
            break;
        }
        let proposal = model_root(smooth, slope, x, p_lo, p_hi, a, b);
        if let Some(v) = proposal {
            // a proposal indistinguishable from the iterate means converged,
            // whether or not it clears the strict bracket test
            if (v - x).abs() <= 4.0 * f64::EPSILON * x.abs().max(1e-300) {
                return x;
            }
        }
        x = match proposal {
            Some(v) if v > a && v < b => v,
            _ => 0.5 * (a + b),
        };
    }
    x
}

/// Root of the monotone model
/// `s0 + s1 (lam - x0) - A/(lam - p) - B/(lam - q) = 0` inside `(a, b)`,
/// by sign-safeguarded Newton seeded from the exact constant-part solve.
/// All evaluations are O(1), so this inner solve is free compared to one
/// sweep of the full secular function.
fn model_root(
    s0: f64,
    s1: f64,
    x0: f64,
    p_lo: Option<(f64, f64)>,
    p_hi: Option<(f64, f64)>,
    a: f64,
    b: f64,
) -> Option<f64> {
    let mut ma = a;
    let mut mb = b;
    let seed = two_pole_model_root(s0, p_lo, p_hi);
    let mut lam = match seed {
        Some(v) if v > ma && v < mb => v,
        _ => 0.5 * (ma + mb),
    };
    for _ in 0..24 {
        let mut f = s0 + s1 * (lam - x0);
        let mut df = s1;
        if let Some((p, ca)) = p_lo {
            let r = lam - p;
            let inv = ca / r;
            f -= inv;
            df += inv / r;
        }
        if let Some((q, cb)) = p_hi {
            let r = lam - q;
            let inv = cb / r;
            f -= inv;
            df += inv / r;
        }
        if f == 0.0 || !f.is_finite() {
            break;
        }
        if f < 0.0 {
            ma = lam;
        } else {
            mb = lam;
        }
        let step = f / df;
        let next = lam - step;
        let next = if next > ma && next < mb {
            next
        } else {
            0.5 * (ma + mb)
        };
        if (next - lam).abs() <= f64::EPSILON * lam.abs().max(1e-300) {
            return Some(next);
        }
        lam = next;
    }
    Some(lam)
}

/// `(sum c^2/(x-d), sum c^2/(x-d)^2)` in one pass.
#[inline]
fn sum_slice(x: f64, ds: &[f64], cs: &[f64]) -> (f64, f64) {
    let mut acc = 0.0;
    let mut dacc = 0.0;
    for (&dk, &ck2) in ds.iter().zip(cs) {
        let inv = 1.0 / (x - dk);
        let t = ck2 * inv;
        acc += t;
        dacc += t * inv;
    }
    (acc, dacc)
}

/// Exact root of `s - A/(lam - p) - B/(lam - q) = 0` with constant `s`;
/// `None` when the model degenerates.
fn two_pole_model_root(
    s: f64,
    lo: Option<(f64, f64)>,
    hi: Option<(f64, f64)>,
) -> Option<f64> {
    match (lo, hi) {
        (Some((p, a)), Some((q, b))) => {
            // s (lam-p)(lam-q) - A(lam-q) - B(lam-p) = 0
            let ca = s;
            let cb = -(s * (p + q) + a + b);
            let cc = s * p * q + a * q + b * p;
            if ca == 0.0 {
                return (cb != 0.0).then(|| -cc / cb);
            }
            let disc = cb * cb - 4.0 * ca * cc;
            if disc < 0.0 {
                return None;
            }
            let sq = disc.sqrt();
            let qq = -0.5 * (cb + cb.signum() * sq);
            let r1 = qq / ca;
            let r2 = if qq != 0.0 { cc / qq } else { f64::NAN };
            // the in-gap root lies between the poles
            let (lo_p, hi_p) = if p < q { (p, q) } else { (q, p) };
            if r1 > lo_p && r1 < hi_p {
                Some(r1)
            } else if r2 > lo_p && r2 < hi_p {
                Some(r2)
            } else {
                None
            }
        }
        (Some((p, a)), None) => {
            // root above the top pole: s - A/(lam - p) = 0
            (s != 0.0).then(|| p + a / s).filter(|r| *r > p)
        }
        (None, Some((q, b))) => {
            (s != 0.0).then(|| q + b / s).filter(|r| *r < q)
        }
        (None, None) => None,
    }
}
