//! Singlet-fraction maps over temperature and polarization, and threshold
//! temperatures where the singlet fraction vanishes.
//!
//! All Fermi sweeps run at fixed chemical potential `mu = 1`, so
//! temperatures are `k_B T / mu`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::moments::{collective_variances, witness_report, SpinMoments, WitnessReport};
use crate::occupancy::{build_occupation_table, solve_field_for_polarization, GasParameters};
use crate::spectra::SpectrumSetting;

pub const CHEMICAL_POTENTIAL: f64 = 1.0;

/// Bisection stops once the temperature bracket is narrower than this.
pub const THRESHOLD_TOL: f64 = 1e-6;
const MAX_THRESHOLD_STEPS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepPoint {
    pub temperature: f64,
    pub polarization: f64,
    pub field: f64,
    pub moments: SpinMoments,
    pub report: WitnessReport,
}

impl SweepPoint {
    pub fn singlet_fraction(&self) -> f64 {
        self.report.singlet_fraction
    }
}

/// Collective-spin moments of the Fermi gas at `(T, P)`.
pub fn fermi_moments(setting: &SpectrumSetting, temperature: f64, polarization: f64) -> Result<(f64, SpinMoments)> {
    let params = GasParameters::fermi(temperature, CHEMICAL_POTENTIAL, 0.0);
    let field = solve_field_for_polarization(setting, &params, polarization)?;
    let model = setting.model_for(CHEMICAL_POTENTIAL, temperature, field)?;
    let table = build_occupation_table(&model, &params.with_field(field))?;
    Ok((field, collective_variances(&table)?))
}

pub fn singlet_point(setting: &SpectrumSetting, temperature: f64, polarization: f64) -> Result<SweepPoint> {
    let wrap = |e: Error| Error::AtGridPoint { temperature, polarization, source: Box::new(e) };
    let (field, moments) = fermi_moments(setting, temperature, polarization).map_err(wrap)?;
    let report = witness_report(&moments).map_err(wrap)?;
    Ok(SweepPoint { temperature, polarization, field, moments, report })
}

/// `f_s(T, P)` on the product grid, rows ordered with temperature outer and
/// polarization inner. Points are evaluated in parallel; output order is the
/// input order.
pub fn singlet_fraction_sweep(
    setting: &SpectrumSetting,
    temperatures: &[f64],
    polarizations: &[f64],
) -> Result<Vec<SweepPoint>> {
    if temperatures.is_empty() || polarizations.is_empty() {
        return Err(Error::Precondition("sweep grids must be nonempty".into()));
    }
    if let Some(t) = temperatures.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
        return Err(Error::Precondition(format!("temperatures must be positive, got {t}")));
    }
    if let Some(p) = polarizations.iter().find(|p| !(0.0..1.0).contains(*p)) {
        return Err(Error::Precondition(format!("polarizations must lie in [0, 1), got {p}")));
    }
    let grid: Vec<(f64, f64)> = temperatures.iter().flat_map(|&t| polarizations.iter().map(move |&p| (t, p))).collect();
    grid.par_iter().map(|&(t, p)| singlet_point(setting, t, p)).collect()
}

/// Temperature at which `f_s(T, P)` changes sign inside `bracket`, by
/// bisection to a width below [`THRESHOLD_TOL`].
pub fn find_threshold(setting: &SpectrumSetting, polarization: f64, bracket: (f64, f64)) -> Result<f64> {
    let (mut lo, mut hi) = bracket;
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::Precondition(format!("threshold bracket must satisfy 0 < lo < hi, got [{lo}, {hi}]")));
    }
    let f = |t: f64| singlet_point(setting, t, polarization).map(|p| p.singlet_fraction());
    let (f_lo, f_hi) = (f(lo)?, f(hi)?);
    if !(f_lo > 0.0 && f_hi < 0.0) {
        return Err(Error::Bracket { lo, hi, f_lo, f_hi });
    }
    for _ in 0..MAX_THRESHOLD_STEPS {
        if hi - lo < THRESHOLD_TOL {
            return Ok(0.5 * (lo + hi));
        }
        let mid = 0.5 * (lo + hi);
        let fm = f(mid)?;
        if fm > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::NoConvergence(format!("threshold bisection did not close [{lo}, {hi}]")))
}
