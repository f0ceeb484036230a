//! Single-particle spectra as `(energy, weight)` streams.
//!
//! Gas spectra are expressed in units where the chemical potential of the
//! Fermi sweeps is 1; lattice spectra in units of the hopping amplitude.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::quadrature::{composite_nodes, GaussLegendre};

/// One single-particle level (or quadrature node) and its multiplicity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Level {
    pub energy: f64,
    /// Degeneracy for discrete spectra, quadrature weight for the continuum.
    pub weight: f64,
}

/// A concrete, enumerable single-particle spectrum.
#[derive(Debug, Clone, PartialEq)]
pub enum SpectrumModel {
    /// Periodic box with integer momenta `n in {-w, ..., w-1}^3` and
    /// energy `energy_unit * |n|^2`.
    FreeSpaceGrid { half_width: usize, energy_unit: f64 },
    /// Density of states `density_scale * sqrt(e)` on `[0, cutoff]`,
    /// sampled by composite Gauss-Legendre panels in `u = sqrt(e)`.
    /// `breakpoints` are extra panel boundaries (energies) used to resolve
    /// Fermi edges.
    FreeSpaceContinuum { cutoff: f64, panel_order: usize, breakpoints: Vec<f64>, density_scale: f64 },
    /// Isotropic 3D oscillator shells `spacing * (n + 3/2)`, `n = 0..=n_max`.
    HarmonicTrap { spacing: f64, n_max: usize },
    /// Nearest-neighbour tight binding on an `size x size` periodic lattice.
    LatticeDispersion { size: usize, hopping: f64 },
}

/// Minimum nodes per continuum panel.
pub const MIN_PANEL_ORDER: usize = 64;

/// Continuum density-of-states prefactor equal to that of the default
/// grid, `2 pi (mu / energy_unit)^{3/2}` with `energy_unit = mu / 30`, so
/// continuum and grid gases hold the same number of particles.
pub const GRID_MATCHED_DENSITY: f64 = 2.0 * PI * 164.316_767_251_549_83;

/// Half-width of the panels placed around each Fermi edge, in units of T.
const EDGE_PANEL_WIDTH: f64 = 16.0;

/// Continuum cutoff above the highest Fermi edge, in units of T.
const CONTINUUM_TAIL: f64 = 40.0;

/// `ln(1e12)`: occupations beyond this many `T` above the edge are < 1e-12.
const TRAP_TAIL: f64 = 27.631_021_115_928_547;

impl SpectrumModel {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidModel(msg));
        match self {
            Self::FreeSpaceGrid { half_width, energy_unit } => {
                if *half_width == 0 {
                    return bad("grid half-width must be positive".into());
                }
                if !(energy_unit.is_finite() && *energy_unit > 0.0) {
                    return bad(format!("grid energy unit must be positive, got {energy_unit}"));
                }
            }
            Self::FreeSpaceContinuum { cutoff, panel_order, breakpoints, density_scale } => {
                if !(density_scale.is_finite() && *density_scale > 0.0) {
                    return bad(format!("continuum density scale must be positive, got {density_scale}"));
                }
                if !(cutoff.is_finite() && *cutoff > 0.0) {
                    return bad(format!("continuum cutoff must be positive, got {cutoff}"));
                }
                if *panel_order == 0 {
                    return bad("continuum panel order must be positive".into());
                }
                if breakpoints.iter().any(|b| !b.is_finite()) {
                    return bad("continuum breakpoints must be finite".into());
                }
            }
            Self::HarmonicTrap { spacing, .. } => {
                if !(spacing.is_finite() && *spacing > 0.0) {
                    return bad(format!("trap level spacing must be positive, got {spacing}"));
                }
            }
            Self::LatticeDispersion { size, hopping } => {
                if *size == 0 || size % 2 == 1 {
                    return bad(format!("lattice size must be even and positive, got {size}"));
                }
                if !hopping.is_finite() {
                    return bad("lattice hopping must be finite".into());
                }
            }
        }
        Ok(())
    }

    /// Lowest single-particle energy of the spectrum.
    pub fn lowest_energy(&self) -> f64 {
        match self {
            Self::FreeSpaceGrid { .. } | Self::FreeSpaceContinuum { .. } => 0.0,
            Self::HarmonicTrap { spacing, .. } => 1.5 * spacing,
            Self::LatticeDispersion { hopping, .. } => -4.0 * hopping.abs(),
        }
    }

    /// All levels in ascending energy; ties are ordered lexicographically by
    /// quantum numbers.
    pub fn enumerate_levels(&self) -> Result<Vec<Level>> {
        self.validate()?;
        Ok(match self {
            Self::FreeSpaceGrid { half_width, energy_unit } => grid_levels(*half_width, *energy_unit),
            Self::FreeSpaceContinuum { cutoff, panel_order, breakpoints, density_scale } => {
                continuum_levels(*cutoff, *panel_order, breakpoints, *density_scale)
            }
            Self::HarmonicTrap { spacing, n_max } => (0..=*n_max)
                .map(|n| Level { energy: spacing * (n as f64 + 1.5), weight: ((n + 1) * (n + 2) / 2) as f64 })
                .collect(),
            Self::LatticeDispersion { size, hopping } => lattice_levels(*size, *hopping),
        })
    }
}

fn grid_levels(half_width: usize, energy_unit: f64) -> Vec<Level> {
    let w = half_width as i64;
    let mut states: Vec<(i64, i64, i64, i64)> = Vec::with_capacity((8 * w * w * w) as usize);
    for nx in -w..w {
        for ny in -w..w {
            for nz in -w..w {
                states.push((nx * nx + ny * ny + nz * nz, nx, ny, nz));
            }
        }
    }
    states.sort_unstable();
    states.into_iter().map(|(n2, ..)| Level { energy: energy_unit * n2 as f64, weight: 1.0 }).collect()
}

fn continuum_levels(cutoff: f64, panel_order: usize, breakpoints: &[f64], density_scale: f64) -> Vec<Level> {
    let rule = GaussLegendre::new(panel_order);
    let mut cuts = vec![0.0, cutoff.sqrt()];
    cuts.extend(breakpoints.iter().filter(|&&e| e > 0.0 && e < cutoff).map(|e| e.sqrt()));
    // sqrt(e) de = 2 u^2 du
    composite_nodes(&rule, &cuts)
        .into_iter()
        .map(|(u, w)| Level { energy: u * u, weight: density_scale * 2.0 * u * u * w })
        .collect()
}

fn lattice_levels(size: usize, hopping: f64) -> Vec<Level> {
    let half = (size / 2) as i64;
    let mut states: Vec<(f64, i64, i64)> = Vec::with_capacity(size * size);
    for mx in -half..half {
        for my in -half..half {
            let k = [lattice_momentum(mx, size), lattice_momentum(my, size)];
            states.push((lattice_dispersion(k, hopping), mx, my));
        }
    }
    states.sort_by(|a, b| a.0.total_cmp(&b.0).then((a.1, a.2).cmp(&(b.1, b.2))));
    states.into_iter().map(|(energy, ..)| Level { energy, weight: 1.0 }).collect()
}

/// `2 pi m / L`.
pub fn lattice_momentum(m: i64, size: usize) -> f64 {
    2.0 * PI * m as f64 / size as f64
}

/// Tight-binding band `-2J (cos kx + cos ky)`.
pub fn lattice_dispersion(k: [f64; 2], hopping: f64) -> f64 {
    -2.0 * hopping * (k[0].cos() + k[1].cos())
}

/// How a [`SpectrumModel`] is chosen for each thermodynamic point.
///
/// Some settings adapt their resolution to `(mu, T, H)`: the continuum puts
/// panel boundaries on both spin-resolved Fermi edges and the trap picks its
/// shell cutoff from the occupation tail.
#[derive(Debug, Clone, PartialEq)]
pub enum SpectrumSetting {
    FreeSpaceGrid {
        half_width: usize,
        energy_unit: f64,
    },
    FreeSpaceContinuum {
        panel_order: usize,
        density_scale: f64,
    },
    /// `n_max = None` selects the cutoff adaptively.
    HarmonicTrap {
        spacing: f64,
        n_max: Option<usize>,
    },
    Lattice {
        size: usize,
        hopping: f64,
    },
}

impl SpectrumSetting {
    /// The 30^3 free-space grid with energy unit mu/30.
    pub fn default_grid() -> Self {
        Self::FreeSpaceGrid { half_width: 15, energy_unit: 1.0 / 30.0 }
    }

    pub fn default_continuum() -> Self {
        Self::FreeSpaceContinuum { panel_order: MIN_PANEL_ORDER, density_scale: GRID_MATCHED_DENSITY }
    }

    /// Trap with `mu / hbar omega = 30`.
    pub fn default_trap() -> Self {
        Self::HarmonicTrap { spacing: 1.0 / 30.0, n_max: None }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::FreeSpaceGrid { .. } => "grid",
            Self::FreeSpaceContinuum { .. } => "continuum",
            Self::HarmonicTrap { .. } => "trap",
            Self::Lattice { .. } => "lattice",
        }
    }

    pub fn lowest_energy(&self) -> f64 {
        match self {
            Self::FreeSpaceGrid { .. } | Self::FreeSpaceContinuum { .. } => 0.0,
            Self::HarmonicTrap { spacing, .. } => 1.5 * spacing,
            Self::Lattice { hopping, .. } => -4.0 * hopping.abs(),
        }
    }

    /// Concrete spectrum resolved for chemical potential `mu`, temperature
    /// and Zeeman field.
    pub fn model_for(&self, mu: f64, temperature: f64, field: f64) -> Result<SpectrumModel> {
        let model = match self {
            Self::FreeSpaceGrid { half_width, energy_unit } => {
                SpectrumModel::FreeSpaceGrid { half_width: *half_width, energy_unit: *energy_unit }
            }
            Self::FreeSpaceContinuum { panel_order, density_scale } => {
                if *panel_order < MIN_PANEL_ORDER {
                    return Err(Error::InvalidModel(format!(
                        "continuum panel order must be at least {MIN_PANEL_ORDER}, got {panel_order}"
                    )));
                }
                let shift = 0.5 * field.abs();
                let top_edge = (mu + shift).max(0.0);
                let cutoff = top_edge + CONTINUUM_TAIL * temperature;
                let mut breakpoints = Vec::new();
                for edge in [mu - shift, mu + shift] {
                    if edge > 0.0 {
                        breakpoints.extend([
                            edge - EDGE_PANEL_WIDTH * temperature,
                            edge,
                            edge + EDGE_PANEL_WIDTH * temperature,
                        ]);
                    }
                }
                SpectrumModel::FreeSpaceContinuum {
                    cutoff,
                    panel_order: *panel_order,
                    breakpoints,
                    density_scale: *density_scale,
                }
            }
            Self::HarmonicTrap { spacing, n_max } => {
                let n_max = match n_max {
                    Some(n) => *n,
                    None => adaptive_trap_cutoff(*spacing, mu, temperature, field)?,
                };
                SpectrumModel::HarmonicTrap { spacing: *spacing, n_max }
            }
            Self::Lattice { size, hopping } => SpectrumModel::LatticeDispersion { size: *size, hopping: *hopping },
        };
        model.validate()?;
        Ok(model)
    }
}

/// Smallest shell whose occupation (either spin) is below 1e-12, and never
/// below `2 mu / spacing`.
fn adaptive_trap_cutoff(spacing: f64, mu: f64, temperature: f64, field: f64) -> Result<usize> {
    if !(spacing.is_finite() && spacing > 0.0) {
        return Err(Error::InvalidModel(format!("trap level spacing must be positive, got {spacing}")));
    }
    let tail_edge = mu + 0.5 * field.abs() + TRAP_TAIL * temperature;
    let from_tail = (tail_edge / spacing - 1.5).floor() + 1.0;
    let floor = (2.0 * mu / spacing).ceil();
    let n = from_tail.max(floor).max(0.0);
    if !n.is_finite() || n > 1e7 {
        return Err(Error::InvalidModel(format!("trap cutoff too large ({n} shells)")));
    }
    Ok(n as usize)
}
