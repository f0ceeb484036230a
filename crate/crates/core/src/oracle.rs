//! Exact grand-canonical moments by enumerating the Fock space of a few
//! modes.
//!
//! The grand-canonical density matrix of an ideal gas is diagonal in the
//! occupation basis, so every expectation is a weighted sum over basis
//! states. `J^z` and `N` are diagonal. For `(J^x)^2` and `(J^y)^2` only the
//! diagonal matrix elements matter; cross terms `j_a j_b` between distinct
//! modes move both modes off their occupations and drop out, leaving
//! `sum_a <s|(j^x_a)^2|s>`, which is read off explicit per-mode operator
//! matrices.

use serde::Serialize;

use crate::error::{Error, Result};
pub use crate::moments::ConditionedSector;
use crate::moments::{collective_variances, SpinMoments};
use crate::occupancy::{GasParameters, OccupationRow, OccupationTable, Statistics};
use crate::rng::Lcg64;

pub const MAX_FERMION_MODES: usize = 6;
pub const MAX_BOSON_MODES: usize = 4;
/// Largest product space the enumerator will walk.
pub const MAX_STATES: u64 = 50_000_000;
pub const DEFAULT_BOSON_CUTOFF: usize = 40;
/// Relative change allowed between cutoffs `n` and `n - 1`.
const CUTOFF_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct FockEnsemble {
    pub statistics: Statistics,
    pub mode_energies: Vec<f64>,
    pub beta: f64,
    pub chemical_potential: f64,
    pub field: f64,
    /// Highest occupation per mode and spin (bosons only).
    pub boson_cutoff: usize,
}

impl FockEnsemble {
    pub fn fermions(mode_energies: Vec<f64>, beta: f64, chemical_potential: f64, field: f64) -> Self {
        Self { statistics: Statistics::Fermi, mode_energies, beta, chemical_potential, field, boson_cutoff: 1 }
    }

    pub fn bosons(mode_energies: Vec<f64>, beta: f64, chemical_potential: f64, field: f64) -> Self {
        Self {
            statistics: Statistics::Bose,
            mode_energies,
            beta,
            chemical_potential,
            field,
            boson_cutoff: DEFAULT_BOSON_CUTOFF,
        }
    }

    pub fn modes(&self) -> usize {
        self.mode_energies.len()
    }

    fn max_occupation(&self) -> usize {
        match self.statistics {
            Statistics::Fermi => 1,
            Statistics::Bose => self.boson_cutoff,
        }
    }

    /// `4^M` for fermions, `(n_cut + 1)^(2M)` for bosons.
    pub fn state_count(&self) -> u64 {
        let local = ((self.max_occupation() + 1) as u64).pow(2);
        local.saturating_pow(self.modes() as u32)
    }

    fn validate(&self) -> Result<()> {
        let m = self.modes();
        let limit = match self.statistics {
            Statistics::Fermi => MAX_FERMION_MODES,
            Statistics::Bose => MAX_BOSON_MODES,
        };
        if m == 0 || m > limit {
            return Err(Error::InvalidModel(format!(
                "{} ensembles support 1..={limit} modes, got {m}",
                self.statistics.name()
            )));
        }
        if self.state_count() > MAX_STATES {
            return Err(Error::InvalidModel(format!(
                "Fock space of {} states exceeds the enumeration limit {MAX_STATES}",
                self.state_count()
            )));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::Precondition(format!("beta must be positive, got {}", self.beta)));
        }
        if self.mode_energies.iter().any(|e| !e.is_finite())
            || !self.chemical_potential.is_finite()
            || !self.field.is_finite()
        {
            return Err(Error::Precondition("ensemble energies must be finite".into()));
        }
        if self.statistics == Statistics::Bose {
            for (i, e) in self.mode_energies.iter().enumerate() {
                if self.beta * (e - 0.5 * self.field.abs() - self.chemical_potential) <= 0.0 {
                    return Err(Error::Domain {
                        level: i,
                        reason: "Bose mode at or below the chemical potential".into(),
                    });
                }
            }
            if self.boson_cutoff < 2 {
                return Err(Error::InvalidModel("boson cutoff must be at least 2".into()));
            }
        }
        Ok(())
    }

    /// Closed-form occupations of the same modes, for comparison. Modes
    /// keep their given order.
    pub fn occupation_table(&self) -> Result<OccupationTable> {
        let params = GasParameters {
            statistics: self.statistics,
            temperature: 1.0 / self.beta,
            chemical_potential: self.chemical_potential,
            field: self.field,
        };
        let rows = self
            .mode_energies
            .iter()
            .enumerate()
            .map(|(i, &energy)| OccupationRow::at(energy, 1.0, &params, i))
            .collect::<Result<Vec<_>>>()?;
        Ok(OccupationTable { statistics: self.statistics, rows })
    }
}

/// Diagonal data of one mode's local Fock states.
struct ModeTable {
    /// Boltzmann factor relative to the most probable local state.
    weight: Vec<f64>,
    number: Vec<f64>,
    jz: Vec<f64>,
    jx_sq: Vec<f64>,
    jy_sq: Vec<f64>,
}

/// Local basis `(n_up, n_down)` in lexicographic order.
fn local_basis(max: usize) -> Vec<(usize, usize)> {
    (0..=max).flat_map(|u| (0..=max).map(move |d| (u, d))).collect()
}

/// Matrix of `a+_up a_down` in the local basis (real entries). Fermion
/// ordering is `up` before `down` within a mode.
fn spin_flip_matrix(statistics: Statistics, max: usize) -> Vec<Vec<f64>> {
    let basis = local_basis(max);
    let index = |u: usize, d: usize| u * (max + 1) + d;
    let dim = basis.len();
    let mut a = vec![vec![0.0; dim]; dim];
    for (col, &(u, d)) in basis.iter().enumerate() {
        if d == 0 || u + 1 > max {
            continue;
        }
        // a_down |u, d> then a+_up
        let (amp_down, amp_up) = match statistics {
            Statistics::Bose => ((d as f64).sqrt(), ((u + 1) as f64).sqrt()),
            // a_down anticommutes past u up-creators
            Statistics::Fermi => (if u % 2 == 0 { 1.0 } else { -1.0 }, 1.0),
        };
        a[index(u + 1, d - 1)][col] = amp_up * amp_down;
    }
    a
}

fn mode_table(ens: &FockEnsemble, energy: f64) -> ModeTable {
    let max = ens.max_occupation();
    let basis = local_basis(max);
    let flip = spin_flip_matrix(ens.statistics, max);
    let dim = basis.len();

    // j^x = (A + A^T)/2 and j^y = (A - A^T)/(2i); diagonal of the square is
    // the column norm.
    let mut jx_sq = vec![0.0; dim];
    let mut jy_sq = vec![0.0; dim];
    for s in 0..dim {
        let (mut sx, mut sy) = (0.0, 0.0);
        for t in 0..dim {
            let plus = flip[t][s] + flip[s][t];
            let minus = flip[t][s] - flip[s][t];
            sx += plus * plus;
            sy += minus * minus;
        }
        jx_sq[s] = 0.25 * sx;
        jy_sq[s] = 0.25 * sy;
    }

    let x_up = ens.beta * (energy - 0.5 * ens.field - ens.chemical_potential);
    let x_down = ens.beta * (energy + 0.5 * ens.field - ens.chemical_potential);
    let log_w: Vec<f64> = basis.iter().map(|&(u, d)| -(x_up * u as f64 + x_down * d as f64)).collect();
    let top = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    ModeTable {
        weight: log_w.iter().map(|l| (l - top).exp()).collect(),
        number: basis.iter().map(|&(u, d)| (u + d) as f64).collect(),
        jz: basis.iter().map(|&(u, d)| 0.5 * (u as f64 - d as f64)).collect(),
        jx_sq,
        jy_sq,
    }
}

/// Weighted sums over a set of Fock states. `jz_dev` and `jz_dev_sq` are
/// taken about `jz_shift`, the `J^z` of the most probable state.
#[derive(Debug, Clone, Copy, Default)]
struct Sums {
    weight: f64,
    n: f64,
    jz_dev: f64,
    jz_shift: f64,
    jz_dev_sq: f64,
    jx_sq: f64,
    jy_sq: f64,
    jx_sq_over: f64,
    jy_sq_over: f64,
    jz_sq_over: f64,
    half_n_over: f64,
    quarter_n_n2_over: f64,
}

impl Sums {
    fn moments(&self) -> SpinMoments {
        let z = self.weight;
        let mean_n = self.n / z;
        let mean_jz = self.jz_shift + self.jz_dev / z;
        SpinMoments {
            mean_n,
            mean_jz,
            var_jx: self.jx_sq / z,
            var_jy: self.jy_sq / z,
            var_jz: (self.jz_dev_sq / z - (mean_jz - self.jz_shift).powi(2)).max(0.0),
            polarization: if mean_n > 0.0 { 2.0 * mean_jz / mean_n } else { 0.0 },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExactMoments {
    /// Moments of the full grand-canonical state.
    pub moments: SpinMoments,
    /// Probability of `N <= 1`, outside the domain of the fluctuating-N
    /// inequalities.
    pub low_number_weight: f64,
    /// `None` when the `N >= 2` sector carries no weight.
    pub conditioned: Option<ConditionedSector>,
    /// Boson cutoff actually used (1 for fermions).
    pub cutoff: usize,
}

fn enumerate(ens: &FockEnsemble) -> (Sums, Sums) {
    let tables: Vec<ModeTable> = ens.mode_energies.iter().map(|&e| mode_table(ens, e)).collect();
    let dim = tables[0].weight.len();
    let m = tables.len();
    let mut digits = vec![0usize; m];
    let jz_shift: f64 = tables
        .iter()
        .map(|t| t.jz[t.weight.iter().position(|&w| w == 1.0).expect("weights are relative to the mode")])
        .sum();
    let mut all = Sums { jz_shift, ..Sums::default() };
    let mut sector = all;
    loop {
        let (mut w, mut n, mut jz, mut jx2, mut jy2) = (1.0, 0.0, 0.0, 0.0, 0.0);
        for (t, &s) in tables.iter().zip(&digits) {
            w *= t.weight[s];
            n += t.number[s];
            jz += t.jz[s];
            jx2 += t.jx_sq[s];
            jy2 += t.jy_sq[s];
        }
        let jz2 = jz * jz;
        let dev2 = (jz - jz_shift) * (jz - jz_shift);
        all.weight += w;
        all.n += w * n;
        all.jz_dev += w * (jz - jz_shift);
        all.jz_dev_sq += w * dev2;
        all.jx_sq += w * jx2;
        all.jy_sq += w * jy2;
        if n >= 2.0 {
            let inv = 1.0 / (n - 1.0);
            sector.weight += w;
            sector.n += w * n;
            sector.jz_dev += w * (jz - jz_shift);
            sector.jz_dev_sq += w * dev2;
            sector.jx_sq += w * jx2;
            sector.jy_sq += w * jy2;
            sector.jx_sq_over += w * jx2 * inv;
            sector.jy_sq_over += w * jy2 * inv;
            sector.jz_sq_over += w * jz2 * inv;
            sector.half_n_over += w * 0.5 * n * inv;
            sector.quarter_n_n2_over += w * 0.25 * n * (n - 2.0) * inv;
        }

        // odometer
        let mut i = 0;
        loop {
            if i == m {
                return (all, sector);
            }
            digits[i] += 1;
            if digits[i] < dim {
                break;
            }
            digits[i] = 0;
            i += 1;
        }
    }
}

fn exact_at_cutoff(ens: &FockEnsemble) -> ExactMoments {
    let (all, sector) = enumerate(ens);
    let conditioned = (sector.weight > 0.0).then(|| {
        let z = sector.weight;
        ConditionedSector::new(
            sector.moments(),
            [sector.jx_sq_over / z, sector.jy_sq_over / z, sector.jz_sq_over / z],
            sector.half_n_over / z,
            sector.quarter_n_n2_over / z,
        )
    });
    ExactMoments {
        moments: all.moments(),
        low_number_weight: 1.0 - sector.weight / all.weight,
        conditioned,
        cutoff: ens.max_occupation(),
    }
}

fn max_relative_change(a: &SpinMoments, b: &SpinMoments) -> f64 {
    let pairs = [
        (a.mean_n, b.mean_n),
        (a.mean_jz, b.mean_jz),
        (a.var_jx, b.var_jx),
        (a.var_jy, b.var_jy),
        (a.var_jz, b.var_jz),
    ];
    let scale = a.mean_n.abs().max(b.mean_n.abs()).max(f64::MIN_POSITIVE);
    pairs.iter().map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(1e-300 + 1e-14 * scale)).fold(0.0, f64::max)
}

/// Exact moments by full enumeration. Bosonic cutoffs are doubled until
/// runs at `n_cut` and `n_cut - 1` agree to `1e-10`.
pub fn exact_moments(ens: &FockEnsemble) -> Result<ExactMoments> {
    ens.validate()?;
    if ens.statistics == Statistics::Fermi {
        return Ok(exact_at_cutoff(ens));
    }
    let mut current = ens.clone();
    loop {
        let fine = exact_at_cutoff(&current);
        let coarse = exact_at_cutoff(&FockEnsemble { boson_cutoff: current.boson_cutoff - 1, ..current.clone() });
        if max_relative_change(&fine.moments, &coarse.moments) < CUTOFF_TOL {
            return Ok(fine);
        }
        let next = FockEnsemble { boson_cutoff: current.boson_cutoff * 2, ..current.clone() };
        if next.state_count() > MAX_STATES {
            return Err(Error::NoConvergence(format!(
                "boson cutoff {} not converged and doubling exceeds the state limit",
                current.boson_cutoff
            )));
        }
        current = next;
    }
}

/// Exact and closed-form moments of one ensemble and their largest
/// relative deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Comparison {
    pub exact: ExactMoments,
    pub closed_form: SpinMoments,
    pub max_relative_error: f64,
}

pub fn compare_with_closed_form(ens: &FockEnsemble) -> Result<Comparison> {
    let exact = exact_moments(ens)?;
    let closed_form = collective_variances(&ens.occupation_table()?)?;
    Ok(Comparison { max_relative_error: max_relative_change(&exact.moments, &closed_form), exact, closed_form })
}

/// Random fermionic ensemble: 1..=`max_modes` modes with energies in
/// `[-2, 2]`, `beta` log-uniform in `[0.2, 20]`, `mu` in `[-1, 1]`, `H` in
/// `[-2, 2]`.
pub fn sample_fermion_ensemble(rng: &mut Lcg64, max_modes: usize) -> FockEnsemble {
    let m = rng.int_in(1, max_modes.clamp(1, MAX_FERMION_MODES));
    let energies = (0..m).map(|_| rng.uniform(-2.0, 2.0)).collect();
    let beta = rng.log_uniform(0.2, 20.0);
    let mu = rng.uniform(-1.0, 1.0);
    let field = rng.uniform(-2.0, 2.0);
    FockEnsemble::fermions(energies, beta, mu, field)
}

/// Random bosonic ensemble: 1..=`max_modes` modes with energies in
/// `[0, 2]`, `beta` log-uniform in `[0.3, 3]`, `H` in `[-1, 1]`, and the
/// chemical potential placed `delta` below the lowest spin-resolved level
/// with `beta delta` in `[0.7, 3]` (fugacities at most 0.5).
pub fn sample_boson_ensemble(rng: &mut Lcg64, max_modes: usize) -> FockEnsemble {
    let m = rng.int_in(1, max_modes.clamp(1, MAX_BOSON_MODES));
    let energies: Vec<f64> = (0..m).map(|_| rng.uniform(0.0, 2.0)).collect();
    let beta = rng.log_uniform(0.3, 3.0);
    let field = rng.uniform(-1.0, 1.0);
    let gap = rng.uniform(0.7, 3.0) / beta;
    let lowest = energies.iter().copied().fold(f64::INFINITY, f64::min);
    FockEnsemble::bosons(energies, beta, lowest - 0.5 * field.abs() - gap, field)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn single_fermion_mode_at_the_fermi_level() {
        let ex = exact_moments(&FockEnsemble::fermions(vec![1.0], 3.0, 1.0, 0.0)).unwrap();
        assert_relative_eq!(ex.moments.mean_n, 1.0, epsilon = 1e-15);
        assert_relative_eq!(ex.moments.var_jz, 0.125, epsilon = 1e-15);
        assert_relative_eq!(ex.moments.var_jx, 0.125, epsilon = 1e-15);
        assert_relative_eq!(ex.moments.var_jy, 0.125, epsilon = 1e-15);
        assert_relative_eq!(ex.low_number_weight, 0.75, epsilon = 1e-15);
    }

    #[test]
    fn cold_filled_modes_form_a_singlet() {
        let ex = exact_moments(&FockEnsemble::fermions(vec![-1.0, -0.5, -0.2], 1e3, 0.0, 0.0)).unwrap();
        assert_relative_eq!(ex.moments.mean_n, 6.0, epsilon = 1e-12);
        assert!(ex.moments.total_variance() < 1e-12);
    }

    #[test]
    fn local_spin_operators() {
        // fermion: singly occupied states carry (j^x)^2 = 1/4, empty and doubly occupied 0
        let ens = FockEnsemble::fermions(vec![0.0], 1.0, 0.0, 0.0);
        let t = mode_table(&ens, 0.0);
        assert_eq!(t.jx_sq, vec![0.0, 0.25, 0.25, 0.0]);
        assert_eq!(t.jy_sq, t.jx_sq);
        // boson (1, 1): (1/4)[n_u(n_d + 1) + n_d(n_u + 1)] = 1
        let ens = FockEnsemble { boson_cutoff: 3, ..FockEnsemble::bosons(vec![1.0], 1.0, 0.0, 0.0) };
        let t = mode_table(&ens, 1.0);
        assert_relative_eq!(t.jx_sq[4 + 1], 1.0, epsilon = 1e-15);
        assert_relative_eq!(t.jy_sq[4 + 1], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn size_limits() {
        let too_many = FockEnsemble::fermions(vec![0.0; 7], 1.0, 0.0, 0.0);
        assert!(matches!(exact_moments(&too_many), Err(Error::InvalidModel(_))));
        let huge = FockEnsemble::bosons(vec![1.0; 4], 1.0, 0.0, 0.0);
        assert!(matches!(exact_moments(&huge), Err(Error::InvalidModel(_))));
    }

    #[test]
    fn bose_mode_below_chemical_potential_rejected() {
        let ens = FockEnsemble::bosons(vec![0.1], 1.0, 0.2, 0.0);
        assert!(matches!(exact_moments(&ens), Err(Error::Domain { .. })));
    }
}
