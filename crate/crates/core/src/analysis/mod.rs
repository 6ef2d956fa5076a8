//! Frequency sweeps of the effective tensor and their post-processing:
//! single-pole fits, zero crossings of the real part and a causality check.

mod calibrate;
mod kk;
mod lorentz;
mod roots;
mod study;
mod sweep;

pub use calibrate::{calibrate, Calibration};
pub use kk::{hilbert_real_part, kk_residual_samples, KkReport, RANGE_ABOVE, RANGE_BELOW};
pub use lorentz::{fit_lorentzian_samples, Lorentzian, LorentzianFit, MIN_FIT_POINTS};
pub use roots::{bisect, enz_crossings, find_enz_samples, first_rising_above, Direction, EnzCrossing, RootMethod};
pub use study::{resonance_study, resonance_summary, ResonanceStudy, ResonanceSummary, StudyOptions};
pub use sweep::{
    check_grid, drude_sheets, effective_tensor, frequency_sweep, linear_grid, samples, sweep_svg, write_sweep_csv,
    PointStatus, SweepRecord, TensorEntry, SWEEP_CSV_HEADER,
};

use crate::error::Result;

pub fn fit_lorentzian(records: &[SweepRecord], entry: TensorEntry) -> Result<LorentzianFit> {
    let (w, v) = samples(records, entry);
    fit_lorentzian_samples(&w, &v)
}

/// Zeros of `Re eps` with their crossing direction; empty when the real
/// part keeps its sign.
pub fn find_enz_frequency(records: &[SweepRecord], entry: TensorEntry) -> Vec<EnzCrossing> {
    let (w, v) = samples(records, entry);
    find_enz_samples(&w, &v)
}

pub fn kramers_kronig_residual(records: &[SweepRecord], entry: TensorEntry) -> Result<KkReport> {
    let (w, v) = samples(records, entry);
    kk_residual_samples(&w, &v)
}

#[cfg(test)]
mod tests;
