use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::lorentz::{fit_lorentzian_samples, Lorentzian};

/// Sign of the slope of `Re eps` at a zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Rising,
    Falling,
}

/// How the zero inside a sign-change bracket was located.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RootMethod {
    /// Bisection on the fitted Lorentzian.
    Fit,
    /// Bisection on a monotone cubic through the samples, used when the fit
    /// has no zero near the bracket.
    Interpolation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnzCrossing {
    pub omega_tilde: f64,
    pub direction: Direction,
    pub method: RootMethod,
}

pub const ROOT_TOL: f64 = 1e-12;

pub fn bisect<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> Option<f64> {
    let mut fa = f(a);
    let fb = f(b);
    if fa == 0.0 {
        return Some(a);
    }
    if fb == 0.0 {
        return Some(b);
    }
    if fa.signum() == fb.signum() || !fa.is_finite() || !fb.is_finite() {
        return None;
    }
    while b - a > tol * (1.0 + a.abs()) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fm == 0.0 {
            return Some(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Some(0.5 * (a + b))
}

/// Fritsch-Carlson monotone cubic through `(x, y)` evaluated on
/// `[x[k], x[k+1]]`.
fn pchip_segment(x: &[f64], y: &[f64], k: usize) -> impl Fn(f64) -> f64 {
    let n = x.len();
    let slope = |i: usize| (y[i + 1] - y[i]) / (x[i + 1] - x[i]);
    let tangent = |i: usize| -> f64 {
        if i == 0 {
            slope(0)
        } else if i == n - 1 {
            slope(n - 2)
        } else {
            let (a, b) = (slope(i - 1), slope(i));
            if a * b <= 0.0 {
                0.0
            } else {
                let (ha, hb) = (x[i] - x[i - 1], x[i + 1] - x[i]);
                let (wa, wb) = (2.0 * hb + ha, hb + 2.0 * ha);
                (wa + wb) / (wa / a + wb / b)
            }
        }
    };
    let (x0, x1, y0, y1) = (x[k], x[k + 1], y[k], y[k + 1]);
    let (m0, m1) = (tangent(k), tangent(k + 1));
    move |t: f64| {
        let h = x1 - x0;
        let s = (t - x0) / h;
        let (s2, s3) = (s * s, s * s * s);
        (2.0 * s3 - 3.0 * s2 + 1.0) * y0
            + (s3 - 2.0 * s2 + s) * h * m0
            + (-2.0 * s3 + 3.0 * s2) * y1
            + (s3 - s2) * h * m1
    }
}

/// All zeros of `Re eps` between consecutive samples of opposite sign.
/// Each root is refined on `model` when the model changes sign within the
/// bracket widened by one sample on either side.
pub fn enz_crossings(omega: &[f64], values: &[Complex64], model: Option<&Lorentzian>) -> Vec<EnzCrossing> {
    let re: Vec<f64> = values.iter().map(|v| v.re).collect();
    let mut out = Vec::new();
    for k in 0..re.len().saturating_sub(1) {
        let (a, b) = (re[k], re[k + 1]);
        if a == 0.0 && k > 0 {
            continue;
        }
        if a.signum() == b.signum() && a != 0.0 && b != 0.0 {
            continue;
        }
        let direction = if b > a { Direction::Rising } else { Direction::Falling };
        let lo = omega[k.saturating_sub(1)];
        let hi = omega[(k + 2).min(omega.len() - 1)];
        let from_fit = model.and_then(|m| {
            let f = |w: f64| m.eval(w).re;
            let expect = if direction == Direction::Rising { 1.0 } else { -1.0 };
            // scan the widened bracket for a zero with the same slope sign
            let n = 64;
            let mut prev = (lo, f(lo));
            for i in 1..=n {
                let w = lo + (hi - lo) * i as f64 / n as f64;
                let fw = f(w);
                if prev.1.signum() != fw.signum() && (fw - prev.1).signum() == expect {
                    return bisect(f, prev.0, w, ROOT_TOL);
                }
                prev = (w, fw);
            }
            None
        });
        let (omega_tilde, method) = match from_fit {
            Some(w) => (w, RootMethod::Fit),
            None => {
                let f = pchip_segment(omega, &re, k);
                let w = bisect(f, omega[k], omega[k + 1], ROOT_TOL).unwrap_or(omega[k]);
                (w, RootMethod::Interpolation)
            }
        };
        out.push(EnzCrossing {
            omega_tilde,
            direction,
            method,
        });
    }
    out
}

/// Crossings of a sampled entry, refined on its Lorentzian fit when one can
/// be obtained.
pub fn find_enz_samples(omega: &[f64], values: &[Complex64]) -> Vec<EnzCrossing> {
    let fit = fit_lorentzian_samples(omega, values).ok();
    enz_crossings(omega, values, fit.map(|f| f.model()).as_ref())
}

/// First rising crossing above `omega_min`.
pub fn first_rising_above(crossings: &[EnzCrossing], omega_min: f64) -> Option<f64> {
    crossings
        .iter()
        .find(|c| c.direction == Direction::Rising && c.omega_tilde > omega_min)
        .map(|c| c.omega_tilde)
}
