//! Bose-Einstein / Fermi-Dirac occupations, particle numbers and the
//! field-for-polarization inversion.

use crate::error::{Error, Result};
use crate::spectra::{SpectrumModel, SpectrumSetting};

/// Exponent magnitude beyond which occupations saturate.
const EXP_LIMIT: f64 = 700.0;

/// Minimum `beta (e - sigma H - mu)` accepted for bosons.
const BOSE_MARGIN: f64 = 1e-12;

/// Target accuracy of the field solver in polarization.
pub const POLARIZATION_TOL: f64 = 1e-8;
const MAX_DOUBLINGS: usize = 200;
const MAX_BISECTIONS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Statistics {
    Bose,
    Fermi,
}

impl Statistics {
    /// `+1` for bosons, `-1` for fermions.
    pub fn sign(self) -> f64 {
        match self {
            Statistics::Bose => 1.0,
            Statistics::Fermi => -1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Statistics::Bose => "bose",
            Statistics::Fermi => "fermi",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spin {
    Up,
    Down,
}

impl Spin {
    pub const BOTH: [Spin; 2] = [Spin::Up, Spin::Down];

    /// `+1/2` or `-1/2`, entering the energy as `e - sigma H`.
    pub fn sigma(self) -> f64 {
        match self {
            Spin::Up => 0.5,
            Spin::Down => -0.5,
        }
    }
}

/// Grand-canonical control parameters (`k_B = 1`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GasParameters {
    pub statistics: Statistics,
    pub temperature: f64,
    pub chemical_potential: f64,
    pub field: f64,
}

impl GasParameters {
    pub fn fermi(temperature: f64, chemical_potential: f64, field: f64) -> Self {
        Self { statistics: Statistics::Fermi, temperature, chemical_potential, field }
    }

    /// Bose gas from the fugacity `z = exp(beta mu~)`, with `mu~` measured
    /// from the lowest single-particle level `lowest_energy`.
    pub fn bose_from_fugacity(temperature: f64, fugacity: f64, field: f64, lowest_energy: f64) -> Self {
        Self {
            statistics: Statistics::Bose,
            temperature,
            chemical_potential: lowest_energy + temperature * fugacity.ln(),
            field,
        }
    }

    pub fn beta(&self) -> f64 {
        1.0 / self.temperature
    }

    pub fn with_field(self, field: f64) -> Self {
        Self { field, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.temperature.is_finite() && self.temperature > 0.0) {
            return Err(Error::Precondition(format!("temperature must be positive, got {}", self.temperature)));
        }
        if !self.chemical_potential.is_finite() || !self.field.is_finite() {
            return Err(Error::Precondition("chemical potential and field must be finite".into()));
        }
        Ok(())
    }
}

/// Mean occupation `1 / (exp(beta (e - sigma H - mu)) - eta)` of one
/// spin-resolved level.
pub fn occupation(energy: f64, params: &GasParameters, spin: Spin) -> Result<f64> {
    occupation_at(energy, params, spin, 0)
}

fn occupation_at(energy: f64, params: &GasParameters, spin: Spin, level: usize) -> Result<f64> {
    occupation_with_complement(energy, params, spin, level).map(|(n, _)| n)
}

/// `(n, 1 + eta n)`.
fn occupation_with_complement(energy: f64, params: &GasParameters, spin: Spin, level: usize) -> Result<(f64, f64)> {
    let x = params.beta() * (energy - spin.sigma() * params.field - params.chemical_potential);
    if x.is_nan() {
        return Err(Error::Domain { level, reason: "occupation exponent is NaN".into() });
    }
    match params.statistics {
        Statistics::Fermi => Ok((fermi_function(x), fermi_function(-x))),
        Statistics::Bose => {
            if x <= BOSE_MARGIN {
                return Err(Error::Domain {
                    level,
                    reason: format!("Bose occupation diverges: beta (e - sigma H - mu) = {x:e} at e = {energy}"),
                });
            }
            let n = if x > EXP_LIMIT { 0.0 } else { 1.0 / x.exp_m1() };
            Ok((n, 1.0 + n))
        }
    }
}

/// `1 / (exp(x) + 1)`, saturating beyond `|x| > 700`.
pub fn fermi_function(x: f64) -> f64 {
    if x > EXP_LIMIT {
        0.0
    } else if x < -EXP_LIMIT {
        1.0
    } else if x >= 0.0 {
        let e = (-x).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + x.exp())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OccupationRow {
    pub energy: f64,
    pub weight: f64,
    pub up: f64,
    pub down: f64,
    /// `1 + eta n` per spin: hole occupation for fermions, `1 + n` for
    /// bosons. Kept separately so nearly filled Fermi levels keep their
    /// precision.
    pub up_complement: f64,
    pub down_complement: f64,
}

impl OccupationRow {
    /// Row with complements computed as `1 + eta n`.
    pub fn new(energy: f64, weight: f64, up: f64, down: f64, statistics: Statistics) -> Self {
        let eta = statistics.sign();
        Self { energy, weight, up, down, up_complement: 1.0 + eta * up, down_complement: 1.0 + eta * down }
    }

    /// Row for one level at `params`; `level` labels domain errors.
    pub fn at(energy: f64, weight: f64, params: &GasParameters, level: usize) -> Result<Self> {
        let (up, up_complement) = occupation_with_complement(energy, params, Spin::Up, level)?;
        let (down, down_complement) = occupation_with_complement(energy, params, Spin::Down, level)?;
        Ok(Self { energy, weight, up, down, up_complement, down_complement })
    }
}

/// Spin-resolved occupations of every level of a spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupationTable {
    pub statistics: Statistics,
    pub rows: Vec<OccupationRow>,
}

/// Particle numbers and polarization of an occupation table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Populations {
    pub total: f64,
    pub up: f64,
    pub down: f64,
    /// `<N_up - N_down>`
    pub imbalance: f64,
    pub polarization: f64,
}

pub fn build_occupation_table(model: &SpectrumModel, params: &GasParameters) -> Result<OccupationTable> {
    params.validate()?;
    let levels = model.enumerate_levels()?;
    let rows = levels
        .iter()
        .enumerate()
        .map(|(i, level)| OccupationRow::at(level.energy, level.weight, params, i))
        .collect::<Result<Vec<_>>>()?;
    Ok(OccupationTable { statistics: params.statistics, rows })
}

impl OccupationTable {
    /// `<N>`, `<N_up>`, `<N_down>` and `P = <N_up - N_down> / <N>`.
    pub fn populations(&self) -> Result<Populations> {
        let eta = self.statistics.sign();
        let (mut up, mut down, mut imbalance) = (0.0, 0.0, 0.0);
        for r in &self.rows {
            up += r.weight * r.up;
            down += r.weight * r.down;
            // n_up - n_down = eta (c_up - c_down); pick the form without cancellation.
            let diff = if r.up_complement.max(r.down_complement) < r.up.max(r.down) {
                eta * (r.up_complement - r.down_complement)
            } else {
                r.up - r.down
            };
            imbalance += r.weight * diff;
        }
        let total = up + down;
        if !(total > 0.0) {
            return Err(Error::Degenerate(format!("mean particle number is {total}; polarization undefined")));
        }
        Ok(Populations { total, up, down, imbalance, polarization: (imbalance / total).clamp(-1.0, 1.0) })
    }
}

/// Polarization at field `h`, rebuilding the spectrum for that field.
fn polarization_at(setting: &SpectrumSetting, params: &GasParameters, h: f64) -> Result<f64> {
    let p = params.with_field(h);
    let model = setting.model_for(p.chemical_potential, p.temperature, h)?;
    Ok(build_occupation_table(&model, &p)?.populations()?.polarization)
}

/// Zeeman field `H >= 0` at which the Fermi gas reaches `target` polarization
/// at fixed chemical potential and temperature.
///
/// The bracket starts at `[0, T]` and doubles its upper end until it
/// encloses the target, then bisects until `|P(H) - target| < 1e-8`.
pub fn solve_field_for_polarization(setting: &SpectrumSetting, params: &GasParameters, target: f64) -> Result<f64> {
    params.validate()?;
    if params.statistics != Statistics::Fermi {
        return Err(Error::Precondition("polarization sweeps require Fermi statistics".into()));
    }
    if !(0.0..1.0).contains(&target) {
        return Err(Error::Precondition(format!("target polarization must lie in [0, 1), got {target}")));
    }
    if target == 0.0 {
        return Ok(0.0);
    }

    let mut lo = 0.0;
    let mut hi = params.temperature.max(1e-3);
    let mut doublings = 0;
    loop {
        let p = polarization_at(setting, params, hi)?;
        if (p - target).abs() < POLARIZATION_TOL {
            return Ok(hi);
        }
        if p > target {
            break;
        }
        lo = hi;
        hi *= 2.0;
        doublings += 1;
        if doublings >= MAX_DOUBLINGS || !hi.is_finite() {
            return Err(Error::NoConvergence(format!(
                "could not bracket polarization {target} after {MAX_DOUBLINGS} doublings"
            )));
        }
    }

    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        let p = polarization_at(setting, params, mid)?;
        if (p - target).abs() < POLARIZATION_TOL {
            return Ok(mid);
        }
        if p < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    Err(Error::NoConvergence(format!("field bisection for polarization {target} stalled in [{lo}, {hi}]")))
}
