//! Material models: Drude surface conductivity of doped graphene, its
//! nondimensional form, bulk permittivity and the spacing scalings that link
//! physical sheet conductivities to the cell-problem coefficients.
//!
//! Everything outside this module works in reduced units: frequencies in
//! units of 10^14 Hz (`omega_tilde`), spacings in units of 10 nm
//! (`spacing_tilde`), Fermi energies in units of 10^-19 J
//! (`fermi_energy_tilde`), with the vacuum permittivity and permeability set
//! to one and the unit cell equal to `[0, 1]^2`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
pub const REDUCED_PLANCK: f64 = 1.054_571_817e-34;
pub const VACUUM_PERMITTIVITY: f64 = 8.854_187_812_8e-12;

/// Unit of `omega_tilde`, in rad/s.
pub const OMEGA_UNIT: f64 = 1.0e14;
/// Unit of `spacing_tilde`, in metres.
pub const SPACING_UNIT: f64 = 10.0e-9;
/// Unit of `fermi_energy_tilde`, in joules.
pub const ENERGY_UNIT: f64 = 1.0e-19;

/// Published prefactor of the reduced Drude coefficient. The value computed
/// from CODATA constants is [`codata_eta_prefactor`] (about 82.96); 82.9 is
/// used wherever reference numbers are reproduced.
pub const ETA_PREFACTOR: f64 = 82.9;
/// Reduced damping `1 / (tau * OMEGA_UNIT)` for the default relaxation time.
pub const ETA_DAMPING: f64 = 0.02;
pub const DEFAULT_RELAX_TIME: f64 = 0.5e-12;

pub const FERMI_ENERGY_RANGE: (f64, f64) = (0.0, 1.6);
pub const OMEGA_RANGE: (f64, f64) = (0.5, 4.0);

/// Drude parameters in reduced units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DrudeParams {
    pub fermi_energy_tilde: f64,
    /// Relaxation time in seconds.
    pub relax_time: f64,
    pub omega_tilde: f64,
    pub spacing_tilde: f64,
}

impl DrudeParams {
    pub fn new(fermi_energy_tilde: f64, omega_tilde: f64, spacing_tilde: f64) -> Self {
        Self {
            fermi_energy_tilde,
            relax_time: DEFAULT_RELAX_TIME,
            omega_tilde,
            spacing_tilde,
        }
    }

    pub fn with_relax_time(mut self, relax_time: f64) -> Self {
        self.relax_time = relax_time;
        self
    }

    pub fn at_omega(mut self, omega_tilde: f64) -> Self {
        self.omega_tilde = omega_tilde;
        self
    }

    /// Parameters outside the studied window are accepted; this lists them.
    pub fn range_warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        let (e_lo, e_hi) = FERMI_ENERGY_RANGE;
        if !(e_lo..=e_hi).contains(&self.fermi_energy_tilde) {
            out.push(format!(
                "fermi_energy_tilde = {} outside [{e_lo}, {e_hi}]",
                self.fermi_energy_tilde
            ));
        }
        let (w_lo, w_hi) = OMEGA_RANGE;
        if !(w_lo..=w_hi).contains(&self.omega_tilde) {
            out.push(format!("omega_tilde = {} outside [{w_lo}, {w_hi}]", self.omega_tilde));
        }
        if self.spacing_tilde <= 0.0 {
            out.push(format!("spacing_tilde = {} is not positive", self.spacing_tilde));
        }
        out
    }

    pub fn out_of_range(&self) -> bool {
        !self.range_warnings().is_empty()
    }

    /// Reduced damping rate `1 / (tau * 10^14 Hz)`.
    pub fn damping_tilde(&self) -> f64 {
        1.0 / (self.relax_time * OMEGA_UNIT)
    }

    fn check(&self) -> Result<()> {
        if !(self.relax_time > 0.0) {
            return Err(Error::invalid("relax_time", "must be positive"));
        }
        if !(self.omega_tilde > 0.0) {
            return Err(Error::invalid("omega_tilde", "must be positive"));
        }
        Ok(())
    }

    /// Surface conductivity in reduced units, using the published prefactor
    /// and this parameter set's relaxation time. Independent of the spacing.
    pub fn sigma_d_tilde(&self) -> Result<Complex64> {
        self.check()?;
        Ok(Complex64::i() * ETA_PREFACTOR * self.fermi_energy_tilde
            / Complex64::new(self.omega_tilde, self.damping_tilde()))
    }

    /// `eta = sigma / (i omega)` of the cell problem, published prefactor.
    pub fn eta(&self) -> Result<Complex64> {
        if self.spacing_tilde == 0.0 {
            return Err(Error::DivisionDomain("eta: spacing_tilde = 0"));
        }
        let sigma_d = self.sigma_d_tilde()?;
        Ok(sigma_d / (Complex64::i() * self.omega_tilde * self.spacing_tilde))
    }
}

/// Drude surface conductivity `i e^2 E_F / (eps0 pi hbar^2 (omega + i/tau))`
/// in SI units with the vacuum permittivity divided out (m/s).
pub fn drude_surface_conductivity(p: &DrudeParams) -> Result<Complex64> {
    p.check()?;
    let e_f = p.fermi_energy_tilde * ENERGY_UNIT;
    let omega = p.omega_tilde * OMEGA_UNIT;
    let numerator = ELEMENTARY_CHARGE * ELEMENTARY_CHARGE * e_f
        / (VACUUM_PERMITTIVITY * std::f64::consts::PI * REDUCED_PLANCK * REDUCED_PLANCK);
    Ok(Complex64::i() * numerator / Complex64::new(omega, 1.0 / p.relax_time))
}

/// Converts an SI sheet conductivity (m/s, vacuum permittivity divided out)
/// to reduced units of `10^14 Hz * 10 nm`.
pub fn sigma_to_tilde(sigma_si: Complex64) -> Complex64 {
    sigma_si / (OMEGA_UNIT * SPACING_UNIT)
}

/// Prefactor of the reduced Drude coefficient recomputed from CODATA 2018.
pub fn codata_eta_prefactor() -> f64 {
    let per_energy = ELEMENTARY_CHARGE * ELEMENTARY_CHARGE
        / (VACUUM_PERMITTIVITY * std::f64::consts::PI * REDUCED_PLANCK * REDUCED_PLANCK);
    per_energy * ENERGY_UNIT / (OMEGA_UNIT * OMEGA_UNIT * SPACING_UNIT)
}

/// `eta = 82.9 E / (d w (w + 0.02 i))` in reduced units.
pub fn rescaled_eta(fermi_energy_tilde: f64, spacing_tilde: f64, omega_tilde: f64) -> Result<Complex64> {
    rescaled_eta_with(
        ETA_PREFACTOR,
        ETA_DAMPING,
        fermi_energy_tilde,
        spacing_tilde,
        omega_tilde,
    )
}

/// Reduced Drude coefficient with an explicit prefactor and damping.
pub fn rescaled_eta_with(
    prefactor: f64,
    damping: f64,
    fermi_energy_tilde: f64,
    spacing_tilde: f64,
    omega_tilde: f64,
) -> Result<Complex64> {
    if spacing_tilde == 0.0 {
        return Err(Error::DivisionDomain("rescaled_eta: spacing_tilde = 0"));
    }
    if omega_tilde == 0.0 {
        return Err(Error::DivisionDomain("rescaled_eta: omega_tilde = 0"));
    }
    let denom = spacing_tilde * omega_tilde * Complex64::new(omega_tilde, damping);
    Ok(prefactor * fermi_energy_tilde / denom)
}

/// Cell-problem conductivities to physical ones: `(d sigma, d^2 lambda)`.
pub fn scale_conductivities(d: f64, sigma: Complex64, lambda: Complex64) -> Result<(Complex64, Complex64)> {
    if !(d > 0.0) {
        return Err(Error::invalid("d", format!("spacing must be positive, got {d}")));
    }
    Ok((sigma * d, lambda * (d * d)))
}

/// Inverse of [`scale_conductivities`].
pub fn unscale_conductivities(d: f64, sigma_d: Complex64, lambda_d: Complex64) -> Result<(Complex64, Complex64)> {
    if !(d > 0.0) {
        return Err(Error::invalid("d", format!("spacing must be positive, got {d}")));
    }
    Ok((sigma_d / d, lambda_d / (d * d)))
}

/// Bulk permittivity, piecewise constant over two regions: the part of the
/// cell enclosed by (or lying below) the interfaces and the rest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BulkPermittivity {
    pub outer: Complex64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inner: Option<Complex64>,
}

impl BulkPermittivity {
    pub fn uniform(eps: Complex64) -> Self {
        Self {
            outer: eps,
            inner: None,
        }
    }

    pub fn value(&self, region: Region) -> Complex64 {
        match region {
            Region::Outer => self.outer,
            Region::Inner => self.inner.unwrap_or(self.outer),
        }
    }

    pub fn is_uniform(&self) -> bool {
        self.inner.is_none_or(|inner| inner == self.outer)
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        Self {
            outer: self.outer * c,
            inner: self.inner.map(|v| v * c),
        }
    }
}

/// Side of the interfaces a point of the cell lies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Region {
    Outer,
    Inner,
}

/// Coefficients of one cell problem: bulk permittivity, tangential surface
/// conductivity and line conductivity acting along the sheet edges.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaterialSpec {
    pub eps_bulk: BulkPermittivity,
    pub sigma_surface: Complex64,
    pub lambda_line: Complex64,
}

impl MaterialSpec {
    pub fn new(eps: Complex64, sigma_surface: Complex64, lambda_line: Complex64) -> Self {
        Self {
            eps_bulk: BulkPermittivity::uniform(eps),
            sigma_surface,
            lambda_line,
        }
    }

    pub fn dielectric(eps: Complex64) -> Self {
        Self::new(eps, Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0))
    }

    /// Unit bulk permittivity and the Drude sheet of `p`, scaled to the cell.
    pub fn from_drude(eps: Complex64, p: &DrudeParams) -> Result<Self> {
        let eta = p.eta()?;
        let sigma = Complex64::i() * p.omega_tilde * eta;
        Ok(Self::new(eps, sigma, Complex64::new(0.0, 0.0)))
    }

    /// Material whose surface coefficient `sigma / (i omega)` equals `eta`.
    pub fn from_eta(eps: Complex64, eta: Complex64, omega_tilde: f64) -> Self {
        Self::new(eps, Complex64::i() * omega_tilde * eta, Complex64::new(0.0, 0.0))
    }

    pub fn validate(&self) -> Result<()> {
        let check = |name: &'static str, eps: Complex64| {
            if !(eps.re > 0.0) {
                return Err(Error::invalid(name, format!("real part must be positive, got {eps}")));
            }
            if eps.im < 0.0 {
                return Err(Error::invalid(
                    name,
                    format!("imaginary part must be non-negative, got {eps}"),
                ));
            }
            Ok(())
        };
        check("eps_bulk", self.eps_bulk.outer)?;
        if let Some(inner) = self.eps_bulk.inner {
            check("eps_bulk.inner", inner)?;
        }
        if !(self.sigma_surface.is_finite() && self.lambda_line.is_finite()) {
            return Err(Error::invalid("conductivity", "must be finite"));
        }
        Ok(())
    }

    /// `sigma / (i omega)`.
    pub fn eta(&self, omega_tilde: f64) -> Result<Complex64> {
        if omega_tilde == 0.0 {
            return Err(Error::DivisionDomain("eta: omega_tilde = 0"));
        }
        Ok(self.sigma_surface / (Complex64::i() * omega_tilde))
    }

    /// `lambda / (i omega)`.
    pub fn line_eta(&self, omega_tilde: f64) -> Result<Complex64> {
        if omega_tilde == 0.0 {
            return Err(Error::DivisionDomain("line_eta: omega_tilde = 0"));
        }
        Ok(self.lambda_line / (Complex64::i() * omega_tilde))
    }

    /// Multiplies permittivity and both conductivities by `c`.
    pub fn scaled(&self, c: Complex64) -> Self {
        Self {
            eps_bulk: self.eps_bulk.scaled(c),
            sigma_surface: self.sigma_surface * c,
            lambda_line: self.lambda_line * c,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn zero_doping_gives_zero_conductivity() {
        let p = DrudeParams::new(0.0, 2.0, 20.72);
        assert_eq!(drude_surface_conductivity(&p).unwrap(), c(0.0, 0.0));
        assert_eq!(rescaled_eta(0.0, 20.72, 2.0).unwrap(), c(0.0, 0.0));
    }

    #[test]
    fn printed_eta_value() {
        // 82.9 / (20.72 * 2 * (2 + 0.02i)) by hand: 1.000144... - 0.010001...i
        let eta = rescaled_eta(1.0, 20.72, 2.0).unwrap();
        assert_relative_eq!(eta.re, 1.00014, epsilon = 5e-6);
        assert_relative_eq!(eta.im, -0.01000, epsilon = 5e-6);
    }

    #[test]
    fn eta_ratio_between_frequencies() {
        let at2 = rescaled_eta(1.0, 20.72, 2.0).unwrap();
        let at4 = rescaled_eta(1.0, 20.72, 4.0).unwrap();
        let expected = 0.5 * Complex64::new(2.0, 0.02) / Complex64::new(4.0, 0.02);
        assert_relative_eq!((at4 / at2 - expected).norm(), 0.0, epsilon = 1e-14);
        assert_relative_eq!((at4 / at2).re, 0.25, epsilon = 2e-3);
    }

    #[test]
    fn drude_matches_printed_eta_to_three_figures() {
        let p = DrudeParams::new(1.0, 2.0, 20.72);
        let sigma = sigma_to_tilde(drude_surface_conductivity(&p).unwrap());
        let eta = sigma / (Complex64::i() * p.omega_tilde * p.spacing_tilde);
        let printed = rescaled_eta(1.0, 20.72, 2.0).unwrap();
        assert!(((eta - printed).norm() / printed.norm()) < 1e-3);
    }

    #[test]
    fn drude_matches_codata_eta_to_twelve_digits() {
        for &(e, w, d) in &[(1.0, 2.0, 20.72), (0.3, 0.7, 5.0), (1.6, 4.0, 1.0)] {
            let p = DrudeParams::new(e, w, d);
            let sigma = sigma_to_tilde(drude_surface_conductivity(&p).unwrap());
            let eta = rescaled_eta_with(codata_eta_prefactor(), p.damping_tilde(), e, d, w).unwrap();
            let via_relation = Complex64::i() * w * d * eta;
            assert!((sigma - via_relation).norm() / sigma.norm() < 1e-12);
        }
    }

    #[test]
    fn codata_prefactor_is_close_to_printed_one() {
        let k = codata_eta_prefactor();
        assert!((k - ETA_PREFACTOR).abs() / ETA_PREFACTOR < 1.5e-3, "{k}");
        assert!((DrudeParams::new(1.0, 1.0, 1.0).damping_tilde() - ETA_DAMPING).abs() < 1e-15);
    }

    #[test]
    fn lossless_limit_is_imaginary() {
        let p = DrudeParams::new(1.0, 2.0, 20.72).with_relax_time(1e300);
        let s = drude_surface_conductivity(&p).unwrap();
        assert!(s.re.abs() < 1e-12 * s.im.abs());
        assert!(s.im > 0.0);
    }

    #[test]
    fn invalid_relax_time_and_zero_division() {
        let p = DrudeParams::new(1.0, 2.0, 20.72).with_relax_time(0.0);
        assert!(matches!(
            drude_surface_conductivity(&p),
            Err(Error::InvalidParameter { .. })
        ));
        let p = DrudeParams::new(1.0, 2.0, 20.72).with_relax_time(-1.0);
        assert!(drude_surface_conductivity(&p).is_err());
        assert!(matches!(rescaled_eta(1.0, 0.0, 2.0), Err(Error::DivisionDomain(_))));
        assert!(matches!(rescaled_eta(1.0, 20.72, 0.0), Err(Error::DivisionDomain(_))));
    }

    #[test]
    fn out_of_range_is_a_warning_only() {
        let p = DrudeParams::new(2.0, 5.0, 20.72);
        assert_eq!(p.range_warnings().len(), 2);
        assert!(p.eta().is_ok());
        assert!(!DrudeParams::new(1.0, 2.0, 20.72).out_of_range());
    }

    #[test]
    fn scaling_examples() {
        assert_eq!(
            scale_conductivities(1.0, c(2.0, 1.0), c(3.0, 0.0)).unwrap(),
            (c(2.0, 1.0), c(3.0, 0.0))
        );
        assert_eq!(
            scale_conductivities(0.5, c(2.0, 0.0), c(4.0, 0.0)).unwrap(),
            (c(1.0, 0.0), c(1.0, 0.0))
        );
        assert!(scale_conductivities(0.0, c(1.0, 0.0), c(1.0, 0.0)).is_err());
        assert!(scale_conductivities(-1.0, c(1.0, 0.0), c(1.0, 0.0)).is_err());
    }

    #[test]
    fn material_validation() {
        assert!(MaterialSpec::dielectric(c(1.0, 0.0)).validate().is_ok());
        assert!(MaterialSpec::dielectric(c(-1.0, 0.0)).validate().is_err());
        assert!(MaterialSpec::dielectric(c(1.0, -0.1)).validate().is_err());
        let m = MaterialSpec::from_drude(c(1.0, 0.0), &DrudeParams::new(1.0, 2.0, 20.72)).unwrap();
        let eta = m.eta(2.0).unwrap();
        assert!((eta - rescaled_eta(1.0, 20.72, 2.0).unwrap()).norm() < 1e-14);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn scale_round_trip(d in 1e-3f64..1e3, sr in -1e3f64..1e3, si in -1e3f64..1e3,
                            lr in -1e3f64..1e3, li in -1e3f64..1e3) {
            let (s, l) = (c(sr, si), c(lr, li));
            let (sd, ld) = scale_conductivities(d, s, l).unwrap();
            let (s2, l2) = unscale_conductivities(d, sd, ld).unwrap();
            prop_assert!((s2 - s).norm() <= 1e-13 * (1.0 + s.norm()));
            prop_assert!((l2 - l).norm() <= 1e-13 * (1.0 + l.norm()));
        }

        #[test]
        fn eta_signs(e in 1e-3f64..1.6, d in 0.1f64..50.0, w in 0.1f64..10.0) {
            let eta = rescaled_eta(e, d, w).unwrap();
            prop_assert!(eta.re > 0.0);
            prop_assert!(eta.im < 0.0);
        }

        #[test]
        fn eta_homogeneous_in_spacing(e in 1e-3f64..1.6, d in 0.1f64..50.0, w in 0.1f64..10.0) {
            let one = rescaled_eta(e, d, w).unwrap();
            let two = rescaled_eta(e, 2.0 * d, w).unwrap();
            prop_assert!((two * 2.0 - one).norm() <= 1e-15 * one.norm());
        }
    }
}
