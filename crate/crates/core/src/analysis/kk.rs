use std::f64::consts::PI;

use num_complex::Complex64;
use quadrature::double_exponential;
use serde::{Deserialize, Serialize};

use super::lorentz::{fit_lorentzian_samples, Lorentzian, LorentzianFit};
use crate::error::{Error, Result};

/// The transform is trusted only when the samples extend from at most half
/// the resonance to at least one and a half times it.
pub const RANGE_BELOW: f64 = 0.5;
pub const RANGE_ABOVE: f64 = 1.5;

const QUAD_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KkReport {
    pub residual: f64,
    /// False when the sampled range does not bracket the resonance widely
    /// enough for the fitted pole to represent the response.
    pub reliable: bool,
    pub omega_min: f64,
    pub omega_max: f64,
    pub fit: LorentzianFit,
}

fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    double_exponential::integrate(f, a, b, QUAD_TOL).integral
}

/// `Re eps(omega) - background` reconstructed from `Im eps` alone through
/// `(2 / pi) PV int_0^inf w Im eps(w) / (w^2 - omega^2) dw`.
///
/// Since `PV int_0^inf dw / (w^2 - omega^2) = 0`, subtracting the value of
/// the numerator at `w = omega` removes the singularity without changing
/// the integral. The half line is split at the resonance, a few widths
/// around it, and `omega`; the tail is mapped onto a finite interval.
pub fn hilbert_real_part(model: &Lorentzian, omega: f64) -> f64 {
    let g = |w: f64| w * model.eval(w).im;
    let g0 = g(omega);
    let f = |w: f64| {
        let d = w * w - omega * omega;
        if d == 0.0 {
            0.0
        } else {
            (g(w) - g0) / d
        }
    };
    let r = model.resonance_freq();
    let gamma = model.width.abs().max(1e-6);
    let mut cuts = vec![0.0, omega];
    for k in [-20.0, -5.0, -1.0, 0.0, 1.0, 5.0, 20.0] {
        let c = r + k * gamma;
        if c > 0.0 {
            cuts.push(c);
        }
    }
    let top = 2.0 * cuts.iter().cloned().fold(0.0, f64::max) + 1.0;
    cuts.push(top);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut total = 0.0;
    for w in cuts.windows(2) {
        total += integrate(f, w[0], w[1]);
    }
    // w = top / t on (0, 1]
    total += integrate(|t| if t == 0.0 { 0.0 } else { f(top / t) * top / (t * t) }, 0.0, 1.0);
    2.0 / PI * total
}

/// `||H[Im fit] - (Re data - background)|| / ||Re data - background||` over
/// the samples, with `H` the numerical transform above.
pub fn kk_residual_samples(omega: &[f64], values: &[Complex64]) -> Result<KkReport> {
    let fit = fit_lorentzian_samples(omega, values)?;
    let model = fit.model();
    let (mut num, mut den) = (0.0, 0.0);
    for (&w, v) in omega.iter().zip(values) {
        let target = v.re - fit.background;
        let d = hilbert_real_part(&model, w) - target;
        num += d * d;
        den += target * target;
    }
    if den == 0.0 {
        return Err(Error::Fit("real part equals the background everywhere".into()));
    }
    let omega_min = omega[0];
    let omega_max = omega[omega.len() - 1];
    let r = fit.resonance_freq;
    Ok(KkReport {
        residual: (num / den).sqrt(),
        reliable: omega_min <= RANGE_BELOW * r && omega_max >= RANGE_ABOVE * r,
        omega_min,
        omega_max,
        fit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn samples(m: &Lorentzian, lo: f64, hi: f64, n: usize) -> (Vec<f64>, Vec<Complex64>) {
        let w: Vec<f64> = (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect();
        let v = w.iter().map(|&x| m.eval(x)).collect();
        (w, v)
    }

    #[test]
    fn transform_reproduces_the_real_part() {
        let m = Lorentzian {
            background: 0.7,
            amplitude: 1.5,
            resonance_sq: 2.25f64.powi(2),
            width: 0.02,
        };
        for w in [0.5, 1.0, 2.2, 2.25, 2.26, 2.752, 4.0] {
            let exact = m.eval(w).re - m.background;
            let got = hilbert_real_part(&m, w);
            assert!(
                (got - exact).abs() <= 1e-9 * exact.abs().max(1.0),
                "w={w}: {got} vs {exact}"
            );
        }
    }

    #[test]
    fn exact_lorentzian_has_negligible_residual() {
        let m = Lorentzian {
            background: 1.2,
            amplitude: 0.9,
            resonance_sq: 1.7f64.powi(2),
            width: 0.02,
        };
        let (w, v) = samples(&m, 0.5, 4.0, 351);
        let r = kk_residual_samples(&w, &v).unwrap();
        assert!(r.residual <= 1e-8, "{}", r.residual);
        assert!(r.reliable);
    }

    #[test]
    fn non_causal_data_is_not_passed_as_consistent() {
        // flipping the sign of Im breaks causality; no causal pole inside the
        // window can match both parts
        let m = Lorentzian {
            background: 1.0,
            amplitude: 1.0,
            resonance_sq: 4.0,
            width: 0.3,
        };
        let (w, v) = samples(&m, 0.5, 4.0, 200);
        let flipped: Vec<Complex64> = v.iter().map(|z| Complex64::new(z.re, -z.im)).collect();
        if let Ok(r) = kk_residual_samples(&w, &flipped) {
            assert!(!r.reliable || r.residual > 0.05 || r.fit.rms_residual > 0.1, "{r:?}");
        }
    }

    #[test]
    fn narrow_window_is_flagged() {
        let m = Lorentzian {
            background: 1.0,
            amplitude: 1.0,
            resonance_sq: 2.25f64.powi(2),
            width: 0.02,
        };
        let (w, v) = samples(&m, 2.0, 2.5, 51);
        let r = kk_residual_samples(&w, &v).unwrap();
        assert!(!r.reliable);
    }
}
