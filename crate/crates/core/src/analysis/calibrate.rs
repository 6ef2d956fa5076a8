use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub parameter: f64,
    pub value: f64,
    pub target: f64,
    /// Every `(parameter, value)` evaluated, in order.
    pub history: Vec<(f64, f64)>,
}

/// Finds `p` in `[lo, hi]` with `f(p) = target` by regula falsi with the
/// Illinois modification. `f - target` must change sign over the interval.
/// Stops when `|f(p) - target| <= tol * |target|` or the bracket collapses.
pub fn calibrate<F>(mut f: F, lo: f64, hi: f64, target: f64, tol: f64) -> Result<Calibration>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(lo < hi) {
        return Err(Error::invalid("bracket", format!("need lo < hi, got [{lo}, {hi}]")));
    }
    let mut history = Vec::new();
    let mut eval = |p: f64, history: &mut Vec<(f64, f64)>| -> Result<f64> {
        let v = f(p)?;
        history.push((p, v));
        Ok(v - target)
    };
    let (mut a, mut b) = (lo, hi);
    let mut fa = eval(a, &mut history)?;
    let mut fb = eval(b, &mut history)?;
    if fa.signum() == fb.signum() {
        return Err(Error::Precondition(format!(
            "target {target} is not bracketed: f({lo}) = {}, f({hi}) = {}",
            fa + target,
            fb + target
        )));
    }
    let mut side = 0i8;
    for _ in 0..60 {
        let p = (a * fb - b * fa) / (fb - fa);
        let fp = eval(p, &mut history)?;
        if fp.abs() <= tol * target.abs() || (b - a).abs() <= 1e-12 * (1.0 + p.abs()) {
            return Ok(Calibration {
                parameter: p,
                value: fp + target,
                target,
                history,
            });
        }
        if fp.signum() == fb.signum() {
            b = p;
            fb = fp;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            a = p;
            fa = fp;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        }
    }
    Err(Error::Solver {
        reason: "calibration did not converge".into(),
        iterations: 60,
        residual: fa.abs().min(fb.abs()),
    })
}
