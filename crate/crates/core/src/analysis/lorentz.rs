use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_FIT_POINTS: usize = 10;

/// `background - amplitude / (omega^2 - resonance_sq + i width omega)` with
/// real parameters. The poles lie in the lower half plane whenever
/// `width > 0`, so the model is causal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lorentzian {
    pub background: f64,
    pub amplitude: f64,
    pub resonance_sq: f64,
    pub width: f64,
}

impl Lorentzian {
    pub fn eval(&self, omega: f64) -> Complex64 {
        self.background - self.amplitude / self.denominator(omega)
    }

    fn denominator(&self, omega: f64) -> Complex64 {
        Complex64::new(omega * omega - self.resonance_sq, self.width * omega)
    }

    pub fn resonance_freq(&self) -> f64 {
        self.resonance_sq.max(0.0).sqrt()
    }

    fn params(&self) -> [f64; 4] {
        [self.background, self.amplitude, self.resonance_sq, self.width]
    }

    fn from_params(p: [f64; 4]) -> Self {
        Self {
            background: p[0],
            amplitude: p[1],
            resonance_sq: p[2],
            width: p[3],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LorentzianFit {
    pub resonance_freq: f64,
    pub amplitude: f64,
    pub width: f64,
    pub background: f64,
    pub resonance_sq: f64,
    /// `sqrt(sum |model - data|^2 / n)` over the fitted points.
    pub rms_residual: f64,
    pub points: usize,
    pub iterations: usize,
    /// Resonance from the peak of Im and width from its half maximum.
    pub initial_resonance: f64,
    pub initial_width: f64,
}

impl LorentzianFit {
    pub fn model(&self) -> Lorentzian {
        Lorentzian {
            background: self.background,
            amplitude: self.amplitude,
            resonance_sq: self.resonance_sq,
            width: self.width,
        }
    }

    pub fn eval(&self, omega: f64) -> Complex64 {
        self.model().eval(omega)
    }
}

/// Best `(background, amplitude)` for fixed `(resonance_sq, width)` and the
/// resulting squared residual.
fn project(omega: &[f64], data: &[Complex64], s: f64, g: f64) -> Option<(f64, f64, f64)> {
    let n = omega.len() as f64;
    let (mut sl, mut sll, mut sd, mut sld) = (0.0, 0.0, 0.0, 0.0);
    let mut ls = Vec::with_capacity(omega.len());
    for (&w, d) in omega.iter().zip(data) {
        let l = 1.0 / Complex64::new(w * w - s, g * w);
        sl += l.re;
        sll += l.norm_sqr();
        sd += d.re;
        sld += (l.conj() * d).re;
        ls.push(l);
    }
    // [n, -sl; sl, -sll] [b; a] = [sd; sld]
    let det = -n * sll + sl * sl;
    if det.abs() <= 1e-14 * n * sll || !det.is_finite() {
        return None;
    }
    let b = (-sll * sd + sl * sld) / det;
    let a = (n * sld - sl * sd) / det;
    let cost = ls.iter().zip(data).map(|(l, d)| (b - a * l - d).norm_sqr()).sum();
    Some((b, a, cost))
}

fn cost(model: &Lorentzian, omega: &[f64], data: &[Complex64]) -> f64 {
    omega
        .iter()
        .zip(data)
        .map(|(&w, d)| (model.eval(w) - d).norm_sqr())
        .sum()
}

/// Peak of Im and its full width at half maximum.
fn initial_guess(omega: &[f64], data: &[Complex64]) -> (f64, f64) {
    let (k, peak) = data
        .iter()
        .enumerate()
        .map(|(k, d)| (k, d.im))
        .fold((0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
    let half = 0.5 * peak;
    let cross = |range: &mut dyn Iterator<Item = usize>| -> Option<f64> {
        let mut prev = k;
        for i in range {
            if data[i].im < half {
                let (w0, w1, v0, v1) = (omega[prev], omega[i], data[prev].im, data[i].im);
                return Some(w0 + (half - v0) * (w1 - w0) / (v1 - v0));
            }
            prev = i;
        }
        None
    };
    let left = cross(&mut (0..k).rev());
    let right = cross(&mut (k + 1..omega.len()));
    let spacing = if omega.len() > 1 {
        (omega[omega.len() - 1] - omega[0]) / (omega.len() - 1) as f64
    } else {
        1.0
    };
    let fwhm = match (left, right) {
        (Some(a), Some(b)) => b - a,
        (Some(a), None) => 2.0 * (omega[k] - a),
        (None, Some(b)) => 2.0 * (b - omega[k]),
        (None, None) => omega[omega.len() - 1] - omega[0],
    };
    (omega[k], fwhm.max(0.5 * spacing))
}

/// Global grid over `(resonance, width)` followed by a local refinement,
/// minimising the projected residual.
fn search(omega: &[f64], data: &[Complex64], guess: (f64, f64)) -> Option<(f64, f64)> {
    let wmin = omega[0];
    let wmax = omega[omega.len() - 1];
    let span = wmax - wmin;
    let widths = |lo: f64, hi: f64, n: usize| -> Vec<f64> {
        (0..n).map(|k| lo * (hi / lo).powf(k as f64 / (n - 1) as f64)).collect()
    };
    let mut best: Option<(f64, f64, f64)> = None;
    let consider = |best: &mut Option<(f64, f64, f64)>, r: f64, g: f64| {
        if let Some((_, _, c)) = project(omega, data, r * r, g) {
            if best.is_none_or(|b| c < b.2) {
                *best = Some((r, g, c));
            }
        }
    };
    let coarse_widths = widths(1e-4 * span.max(1e-3), 2.0 * span.max(1e-3), 48);
    for k in 0..=240 {
        let r = wmax * 1.25 * k as f64 / 240.0;
        for &g in &coarse_widths {
            consider(&mut best, r, g);
        }
    }
    for dk in -40..=40 {
        let r = guess.0 + guess.1 * dk as f64 / 20.0;
        if r >= 0.0 {
            for &g in &widths(guess.1 / 50.0, guess.1 * 50.0, 48) {
                consider(&mut best, r, g);
            }
        }
    }
    best?;
    let step = wmax * 1.25 / 240.0;
    for _ in 0..3 {
        let (rc, gc, _) = best?;
        let h = step.min(rc.max(step));
        for dk in -30..=30 {
            let r = rc + h * dk as f64 / 15.0;
            if r >= 0.0 {
                for &g in &widths(gc / 3.0, gc * 3.0, 31) {
                    consider(&mut best, r, g);
                }
            }
        }
    }
    best.map(|b| (b.0, b.1))
}

fn solve4(mut a: [[f64; 4]; 4], mut b: [f64; 4]) -> Option<[f64; 4]> {
    for col in 0..4 {
        let piv = (col..4).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..4 {
            let f = a[row][col] / a[col][col];
            for k in col..4 {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 4];
    for row in (0..4).rev() {
        let s: f64 = (row + 1..4).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

/// Levenberg-Marquardt on all four parameters. Returns the model and the
/// iteration count.
fn polish(start: Lorentzian, omega: &[f64], data: &[Complex64]) -> (Lorentzian, usize) {
    let mut p = start.params();
    let mut cur = cost(&start, omega, data);
    let mut lambda = 1e-3;
    let mut iters = 0;
    for it in 0..500 {
        iters = it + 1;
        let m = Lorentzian::from_params(p);
        let mut jtj = [[0.0; 4]; 4];
        let mut jtr = [0.0; 4];
        for (&w, d) in omega.iter().zip(data) {
            let den = m.denominator(w);
            let inv = 1.0 / den;
            let inv2 = inv * inv;
            let r = m.eval(w) - d;
            let grads = [
                Complex64::new(1.0, 0.0),
                -inv,
                -m.amplitude * inv2,
                m.amplitude * Complex64::new(0.0, w) * inv2,
            ];
            for a in 0..4 {
                jtr[a] += grads[a].re * r.re + grads[a].im * r.im;
                for b in 0..4 {
                    jtj[a][b] += grads[a].re * grads[b].re + grads[a].im * grads[b].im;
                }
            }
        }
        let mut accepted = false;
        for _ in 0..30 {
            let mut a = jtj;
            for k in 0..4 {
                a[k][k] += lambda * jtj[k][k].max(1e-300);
            }
            let Some(delta) = solve4(a, [-jtr[0], -jtr[1], -jtr[2], -jtr[3]]) else {
                lambda *= 10.0;
                continue;
            };
            let trial = [p[0] + delta[0], p[1] + delta[1], p[2] + delta[2], p[3] + delta[3]];
            let c = cost(&Lorentzian::from_params(trial), omega, data);
            if c.is_finite() && c <= cur {
                let small = (0..4).all(|k| delta[k].abs() <= 1e-15 * p[k].abs().max(1e-12));
                let gain = cur - c;
                p = trial;
                cur = c;
                lambda = (lambda / 3.0).max(1e-15);
                accepted = true;
                if small || gain <= 1e-30 * cur.max(1e-300) {
                    return (Lorentzian::from_params(p), iters);
                }
                break;
            }
            lambda *= 4.0;
        }
        if !accepted {
            break;
        }
    }
    (Lorentzian::from_params(p), iters)
}

/// Least-squares single-pole fit jointly on the real and imaginary parts.
pub fn fit_lorentzian_samples(omega: &[f64], data: &[Complex64]) -> Result<LorentzianFit> {
    if omega.len() != data.len() {
        return Err(Error::Fit("frequency and value arrays differ in length".into()));
    }
    if omega.len() < MIN_FIT_POINTS {
        return Err(Error::Fit(format!(
            "need at least {MIN_FIT_POINTS} points, got {}",
            omega.len()
        )));
    }
    if omega.iter().any(|w| !w.is_finite()) || data.iter().any(|d| !d.is_finite()) {
        return Err(Error::Fit("non-finite samples".into()));
    }
    let guess = initial_guess(omega, data);
    let diag = |msg: &str| {
        Error::Fit(format!(
            "{msg} (initial guess: resonance {:.6}, width {:.6})",
            guess.0, guess.1
        ))
    };
    let (r, g) = search(omega, data, guess).ok_or_else(|| diag("no admissible starting point"))?;
    let (b, a, _) = project(omega, data, r * r, g).ok_or_else(|| diag("degenerate projection"))?;
    let start = Lorentzian {
        background: b,
        amplitude: a,
        resonance_sq: r * r,
        width: g,
    };
    let (model, iterations) = polish(start, omega, data);
    let c = cost(&model, omega, data);
    if !c.is_finite() || !(model.width > 0.0) {
        return Err(diag(&format!(
            "fit did not converge to a positive width (width {})",
            model.width
        )));
    }
    Ok(LorentzianFit {
        resonance_freq: model.resonance_freq(),
        amplitude: model.amplitude,
        width: model.width,
        background: model.background,
        resonance_sq: model.resonance_sq,
        rms_residual: (c / omega.len() as f64).sqrt(),
        points: omega.len(),
        iterations,
        initial_resonance: guess.0,
        initial_width: guess.1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample(m: &Lorentzian, lo: f64, hi: f64, n: usize) -> (Vec<f64>, Vec<Complex64>) {
        let w: Vec<f64> = (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect();
        let v = w.iter().map(|&x| m.eval(x)).collect();
        (w, v)
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn recovers_noise_free_parameters() {
        let truth = Lorentzian {
            background: 1.3,
            amplitude: 0.8,
            resonance_sq: 2.25f64.powi(2),
            width: 0.02,
        };
        let (w, v) = sample(&truth, 0.5, 4.0, 351);
        let fit = fit_lorentzian_samples(&w, &v).unwrap();
        assert!(rel(fit.resonance_freq, 2.25) < 1e-8);
        assert!(rel(fit.amplitude, 0.8) < 1e-8);
        assert!(rel(fit.width, 0.02) < 1e-8);
        assert!(rel(fit.background, 1.3) < 1e-8);
        assert!(fit.rms_residual < 1e-10);
    }

    #[test]
    fn recovers_a_pole_at_zero() {
        // bare Drude sheet: 1 - P / (w^2 + i 0.02 w)
        let truth = Lorentzian {
            background: 1.0,
            amplitude: 4.0,
            resonance_sq: 0.0,
            width: 0.02,
        };
        let (w, v) = sample(&truth, 0.5, 4.0, 200);
        let fit = fit_lorentzian_samples(&w, &v).unwrap();
        assert!(fit.resonance_sq.abs() < 1e-8);
        assert!(rel(fit.amplitude, 4.0) < 1e-8);
    }

    #[test]
    fn broad_resonance() {
        let truth = Lorentzian {
            background: -0.5,
            amplitude: 3.0,
            resonance_sq: 1.7f64.powi(2),
            width: 0.6,
        };
        let (w, v) = sample(&truth, 0.5, 4.0, 60);
        let fit = fit_lorentzian_samples(&w, &v).unwrap();
        assert!(rel(fit.resonance_freq, 1.7) < 1e-8);
        assert!(rel(fit.width, 0.6) < 1e-8);
    }

    #[test]
    fn too_few_points_is_a_fit_error() {
        let truth = Lorentzian {
            background: 1.0,
            amplitude: 1.0,
            resonance_sq: 4.0,
            width: 0.1,
        };
        let (w, v) = sample(&truth, 1.0, 3.0, 5);
        assert!(matches!(fit_lorentzian_samples(&w, &v), Err(Error::Fit(_))));
    }

    #[test]
    fn initial_guess_reads_peak_and_half_width() {
        let truth = Lorentzian {
            background: 0.0,
            amplitude: 1.0,
            resonance_sq: 4.0,
            width: 0.2,
        };
        let (w, v) = sample(&truth, 1.0, 3.0, 2001);
        let (r, fwhm) = initial_guess(&w, &v);
        assert!((r - 2.0).abs() < 5e-3);
        assert!((fwhm - 0.2).abs() < 0.01);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn refitting_a_fit_is_idempotent(
            b in -2.0f64..2.0,
            a in 0.1f64..5.0,
            r in 1.0f64..3.5,
            g in 0.01f64..0.5,
        ) {
            let truth = Lorentzian { background: b, amplitude: a, resonance_sq: r * r, width: g };
            let (w, v) = sample(&truth, 0.5, 4.0, 351);
            let first = fit_lorentzian_samples(&w, &v).unwrap();
            let again: Vec<Complex64> = w.iter().map(|&x| first.eval(x)).collect();
            let second = fit_lorentzian_samples(&w, &again).unwrap();
            prop_assert!(rel(second.resonance_freq, first.resonance_freq) < 1e-10);
            prop_assert!(rel(second.amplitude, first.amplitude) < 1e-10);
            prop_assert!(rel(second.width, first.width) < 1e-10);
            prop_assert!((second.background - first.background).abs() < 1e-10 * (1.0 + first.background.abs()));
        }
    }
}
