//! Closed-form epsilon-near-zero analysis for sheets with vanishing
//! correctors: generalized plasmonic thickness, critical spacing and the
//! factorized effective permittivity along one principal axis.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Default bound on `|Im d_c| / |d_c|` for a critical spacing to count as
/// realizable.
pub const REALIZABLE_LOSS: f64 = 0.1;

/// `|lambda'| / |sigma'|^2` below which the sheet term dominates, with
/// `sigma' = sigma / (i omega eps)` and `lambda' = lambda / (i omega eps)`.
/// The reciprocal bounds the line-dominated regime.
pub const REGIME_RATIO: f64 = 1e-2;

/// Averaged per-axis quantities, all in reduced units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnzParams {
    pub eps_bar: Complex64,
    pub sigma_bar_d: Complex64,
    pub lambda_bar_d: Complex64,
    pub omega: f64,
    pub spacing: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    SigmaDominant,
    LambdaDominant,
    Mixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalSpacing {
    pub d_c: Complex64,
    pub realizable: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnzReport {
    pub xi0: Complex64,
    pub d_c: Complex64,
    pub realizable: bool,
    pub regime: Regime,
    pub eps_eff_ratio: Complex64,
}

impl EnzParams {
    pub fn new(
        eps_bar: Complex64,
        sigma_bar_d: Complex64,
        lambda_bar_d: Complex64,
        omega: f64,
        spacing: f64,
    ) -> Result<Self> {
        let p = Self {
            eps_bar,
            sigma_bar_d,
            lambda_bar_d,
            omega,
            spacing,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps_bar.re > 0.0) {
            return Err(Error::invalid(
                "eps_bar",
                format!("real part must be positive, got {}", self.eps_bar),
            ));
        }
        if !(self.omega > 0.0) || !self.omega.is_finite() {
            return Err(Error::invalid("omega", format!("must be positive, got {}", self.omega)));
        }
        if !(self.spacing > 0.0) || !self.spacing.is_finite() {
            return Err(Error::invalid(
                "spacing",
                format!("must be positive, got {}", self.spacing),
            ));
        }
        Ok(())
    }

    /// `sigma / (i omega eps)`, a length.
    pub fn sigma_length(&self) -> Complex64 {
        self.sigma_bar_d / (I * self.omega * self.eps_bar)
    }

    /// `lambda / (i omega eps)`, an area.
    pub fn lambda_area(&self) -> Complex64 {
        self.lambda_bar_d / (I * self.omega * self.eps_bar)
    }

    pub fn at_spacing(self, spacing: f64) -> Self {
        Self { spacing, ..self }
    }
}

/// Root `a + sqrt(a^2 + lambda')` of `xi^2 - sigma' xi - lambda' = 0` with
/// `a = sigma' / 2` and the principal square root. When the two terms nearly
/// cancel, the same root is formed as `-lambda' / (a - sqrt(..))`.
pub fn plasmonic_thickness(p: &EnzParams) -> Complex64 {
    let a = 0.5 * p.sigma_length();
    let l = p.lambda_area();
    let r = (a * a + l).sqrt();
    let plus = a + r;
    let minus = a - r;
    if plus.norm() >= minus.norm() || minus == Complex64::new(0.0, 0.0) {
        plus
    } else {
        -l / minus
    }
}

/// `|xi^2 - sigma' xi - lambda'|`.
pub fn quadratic_residual(p: &EnzParams, xi: Complex64) -> f64 {
    (xi * xi - p.sigma_length() * xi - p.lambda_area()).norm()
}

/// `1 - sigma' / d - lambda' / d^2`.
pub fn eff_permittivity_direct(p: &EnzParams) -> Complex64 {
    let d = p.spacing;
    1.0 - p.sigma_length() / d - p.lambda_area() / (d * d)
}

/// `eps_eff / eps_bar = (1 - xi0 / d)(1 + lambda' / (xi0 d))`.
pub fn eff_permittivity_factorized(p: &EnzParams) -> Result<Complex64> {
    p.validate()?;
    let xi = plasmonic_thickness(p);
    if xi == Complex64::new(0.0, 0.0) {
        return Err(Error::Precondition(
            "plasmonic thickness is zero; use the direct average".into(),
        ));
    }
    let d = p.spacing;
    Ok((1.0 - xi / d) * (1.0 + p.lambda_area() / (xi * d)))
}

pub fn critical_spacing(p: &EnzParams) -> CriticalSpacing {
    critical_spacing_with(p, REALIZABLE_LOSS)
}

pub fn critical_spacing_with(p: &EnzParams, max_loss: f64) -> CriticalSpacing {
    let d_c = plasmonic_thickness(p);
    let n = d_c.norm();
    CriticalSpacing {
        d_c,
        realizable: n > 0.0 && d_c.re > 0.0 && d_c.im.abs() / n < max_loss,
    }
}

pub fn regime(p: &EnzParams) -> Regime {
    let s = p.sigma_length().norm();
    let l = p.lambda_area().norm();
    if l == 0.0 && s == 0.0 {
        Regime::Mixed
    } else if l == 0.0 {
        Regime::SigmaDominant
    } else if s == 0.0 {
        Regime::LambdaDominant
    } else {
        let rho = l / (s * s);
        if rho < REGIME_RATIO {
            Regime::SigmaDominant
        } else if rho > 1.0 / REGIME_RATIO {
            Regime::LambdaDominant
        } else {
            Regime::Mixed
        }
    }
}

pub fn enz_report(p: &EnzParams, max_loss: f64) -> Result<EnzReport> {
    p.validate()?;
    let cs = critical_spacing_with(p, max_loss);
    let eps_eff_ratio = match eff_permittivity_factorized(p) {
        Ok(v) => v,
        Err(Error::Precondition(_)) => eff_permittivity_direct(p),
        Err(e) => return Err(e),
    };
    Ok(EnzReport {
        xi0: cs.d_c,
        d_c: cs.d_c,
        realizable: cs.realizable,
        regime: regime(p),
        eps_eff_ratio,
    })
}

impl EnzReport {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("report serialises")
    }
}
