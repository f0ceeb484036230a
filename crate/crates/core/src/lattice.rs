//! Spin correlations of the spin-balanced tight-binding Fermi gas on an
//! `L x L` periodic square lattice.
//!
//! For a Gaussian state the equal-time spin correlation between sites
//! follows from the one-body density matrix `G(r) = <a+_i a_j>`:
//!
//! ```text
//! <S_i S_j> = (1/4) sum_s n_s (1 - n_s)   (i = j)
//!           = -(1/4) sum_s |G_s(r)|^2      (i != j)
//! ```

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::occupancy::fermi_function;

/// Temperature (in units of the hopping) standing in for the ground state.
pub const GROUND_STATE_TEMPERATURE: f64 = 1e-3;

/// Largest imaginary residue tolerated in transforms of real, inversion
/// symmetric data.
const IMAGINARY_TOL: f64 = 1e-12;

/// Thermodynamic point of the lattice gas. Both spins share the same
/// chemical potential.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LatticeGas {
    pub size: usize,
    pub temperature: f64,
    pub chemical_potential: f64,
    pub hopping: f64,
}

impl LatticeGas {
    /// Half filling (`mu = 0`) at the ground-state stand-in temperature.
    pub fn half_filled_ground_state(size: usize, hopping: f64) -> Self {
        Self { size, temperature: GROUND_STATE_TEMPERATURE * hopping.abs(), chemical_potential: 0.0, hopping }
    }

    pub fn validate(&self) -> Result<()> {
        if self.size == 0 || self.size % 2 == 1 {
            return Err(Error::InvalidModel(format!("lattice size must be even and positive, got {}", self.size)));
        }
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(Error::Precondition(format!("lattice temperature must be positive, got {}", self.temperature)));
        }
        if !self.chemical_potential.is_finite() || !self.hopping.is_finite() {
            return Err(Error::Precondition("lattice mu and hopping must be finite".into()));
        }
        Ok(())
    }

    /// Momentum occupations `n_k` per spin, row-major over
    /// `k = 2 pi (m_x, m_y) / L` with `m in 0..L`.
    pub fn momentum_occupations(&self) -> Result<Vec<f64>> {
        self.validate()?;
        let l = self.size;
        let beta = 1.0 / self.temperature;
        let cos = symmetric_cosines(l);
        let mut n = Vec::with_capacity(l * l);
        for mx in 0..l {
            for my in 0..l {
                // -2J (cos kx + cos ky)
                let e = -2.0 * self.hopping * (cos[mx] + cos[my]);
                n.push(fermi_function(beta * (e - self.chemical_potential)));
            }
        }
        Ok(n)
    }
}

/// `cos(2 pi m / L)` for `m in 0..L`, with `cos(k + pi) = -cos(k)` and
/// `cos(pi/2) = 0` holding exactly, so the band is exactly particle-hole
/// symmetric and the half-filled Fermi surface sits at zero energy.
pub fn symmetric_cosines(size: usize) -> Vec<f64> {
    let half = size / 2;
    let base = |m: usize| {
        // m in 0..=half; fold onto the first quarter
        if 4 * m == size {
            0.0
        } else if 4 * m < size {
            (2.0 * PI * m as f64 / size as f64).cos()
        } else {
            -(2.0 * PI * (half - m) as f64 / size as f64).cos()
        }
    };
    (0..size).map(|m| if m <= half { base(m) } else { base(size - m) }).collect()
}

/// Real field on the `L x L` torus, row-major, index `(x, y) -> x L + y`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SquareField {
    pub size: usize,
    pub values: Vec<f64>,
}

impl SquareField {
    /// Value at `(x, y)` with periodic wrapping; accepts negative offsets.
    pub fn get(&self, x: i64, y: i64) -> f64 {
        let l = self.size as i64;
        self.values[(x.rem_euclid(l) * l + y.rem_euclid(l)) as usize]
    }

    /// Grid indices of the largest value (first in row-major order on ties).
    pub fn argmax(&self) -> (usize, usize) {
        let (i, _) =
            self.values
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) });
        (i / self.size, i % self.size)
    }
}

/// `<S^z_0 S^z_r>` indexed by displacement `r`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationMap(pub SquareField);

/// `S(k)` on the discrete Brillouin zone `k = 2 pi m / L`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StructureFactor(pub SquareField);

impl CorrelationMap {
    pub fn size(&self) -> usize {
        self.0.size
    }

    pub fn onsite(&self) -> f64 {
        self.0.values[0]
    }

    pub fn at(&self, x: i64, y: i64) -> f64 {
        self.0.get(x, y)
    }
}

impl StructureFactor {
    pub fn size(&self) -> usize {
        self.0.size
    }

    /// `S` at integer momentum indices `(m_x, m_y)`, wrapped.
    pub fn at(&self, mx: i64, my: i64) -> f64 {
        self.0.get(mx, my)
    }

    /// `S(pi, pi)`.
    pub fn staggered(&self) -> f64 {
        let half = (self.size() / 2) as i64;
        self.at(half, half)
    }

    /// `(1/L^2) sum_k S(k)`.
    pub fn mean(&self) -> f64 {
        self.0.values.iter().sum::<f64>() / self.0.values.len() as f64
    }
}

/// 2D DFT in place: rows, then columns. `inverse` selects `exp(+i k r)`.
/// Unnormalized in both directions.
fn fft2(data: &mut [Complex64], size: usize, inverse: bool) {
    let mut planner = FftPlanner::<f64>::new();
    let fft = if inverse { planner.plan_fft_inverse(size) } else { planner.plan_fft_forward(size) };
    for row in data.chunks_exact_mut(size) {
        fft.process(row);
    }
    let mut column = vec![Complex64::new(0.0, 0.0); size];
    for y in 0..size {
        for x in 0..size {
            column[x] = data[x * size + y];
        }
        fft.process(&mut column);
        for x in 0..size {
            data[x * size + y] = column[x];
        }
    }
}

fn real_part(data: Vec<Complex64>, scale: f64) -> Vec<f64> {
    data.into_iter()
        .map(|c| {
            assert!(
                (c.im * scale).abs() < IMAGINARY_TOL,
                "transform of inversion-symmetric data has imaginary part {}",
                c.im * scale
            );
            c.re * scale
        })
        .collect()
}

/// `G(r) = (1/L^2) sum_k exp(-i k r) n_k` per spin.
pub fn first_order_correlation(gas: &LatticeGas) -> Result<SquareField> {
    let n = gas.momentum_occupations()?;
    let l = gas.size;
    let mut data: Vec<Complex64> = n.into_iter().map(|x| Complex64::new(x, 0.0)).collect();
    fft2(&mut data, l, false);
    Ok(SquareField { size: l, values: real_part(data, 1.0 / (l * l) as f64) })
}

/// Equal-time `<S^z_0 S^z_r>` for the spin-balanced gas.
pub fn spin_correlation_map(gas: &LatticeGas) -> Result<CorrelationMap> {
    let g = first_order_correlation(gas)?;
    let filling = g.values[0];
    let mut values: Vec<f64> = g.values.iter().map(|&x| -0.5 * x * x).collect();
    values[0] = 0.5 * filling * (1.0 - filling);
    Ok(CorrelationMap(SquareField { size: g.size, values }))
}

/// `S(k) = sum_r exp(i k r) <S^z_0 S^z_r>`, the per-site Fourier transform
/// of a translation-invariant correlation map.
pub fn structure_factor(map: &CorrelationMap) -> StructureFactor {
    let l = map.size();
    let mut data: Vec<Complex64> = map.0.values.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    fft2(&mut data, l, true);
    StructureFactor(SquareField { size: l, values: real_part(data, 1.0) })
}

/// The same structure factor by the convolution theorem in momentum space:
/// `S(k) = (1 / 2L^2) sum_q n_q (1 - n_{q-k})`.
pub fn structure_factor_from_occupations(gas: &LatticeGas) -> Result<StructureFactor> {
    let n = gas.momentum_occupations()?;
    let l = gas.size;
    let norm = 0.5 / (l * l) as f64;
    let mut values = vec![0.0; l * l];
    for kx in 0..l {
        for ky in 0..l {
            let mut acc = 0.0;
            for qx in 0..l {
                let dx = (qx + l - kx) % l;
                for qy in 0..l {
                    let dy = (qy + l - ky) % l;
                    acc += n[qx * l + qy] * (1.0 - n[dx * l + dy]);
                }
            }
            values[kx * l + ky] = norm * acc;
        }
    }
    Ok(StructureFactor(SquareField { size: l, values }))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StaggeredQfi {
    /// `4 Var(J^z_stag) = 4 L^2 S(pi, pi)`
    pub qfi: f64,
    /// `QFI / L^2`
    pub density: f64,
    /// Multipartite entanglement is witnessed when the density exceeds 1.
    pub witnessed: bool,
}

pub fn qfi_staggered(sf: &StructureFactor) -> StaggeredQfi {
    let sites = (sf.size() * sf.size()) as f64;
    let qfi = 4.0 * sites * sf.staggered();
    let density = qfi / sites;
    StaggeredQfi { qfi, density, witnessed: density > 1.0 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn field(size: usize, values: Vec<f64>) -> SquareField {
        SquareField { size, values }
    }

    #[test]
    fn half_filling_density_is_one_half() {
        for t in [1e-3, 0.5, 4.0] {
            let gas = LatticeGas { size: 8, temperature: t, chemical_potential: 0.0, hopping: 1.0 };
            let g = first_order_correlation(&gas).unwrap();
            assert!((g.values[0] - 0.5).abs() < 1e-14, "T = {t}: {}", g.values[0]);
        }
    }

    #[test]
    fn diagonal_neighbour_vanishes_at_half_filling() {
        let gas = LatticeGas::half_filled_ground_state(16, 1.0);
        let g = first_order_correlation(&gas).unwrap();
        assert!(g.get(1, 1).abs() < 1e-10);
        assert!(g.get(2, 0).abs() < 1e-10);
    }

    #[test]
    fn onsite_ground_state_value() {
        let map = spin_correlation_map(&LatticeGas::half_filled_ground_state(8, 1.0)).unwrap();
        assert!((map.onsite() - 0.125).abs() < 1e-12);
    }

    #[test]
    fn uncorrelated_spins_do_not_witness() {
        let mut values = vec![0.0; 16];
        values[0] = 0.25;
        let sf = structure_factor(&CorrelationMap(field(4, values)));
        for v in &sf.0.values {
            assert_relative_eq!(*v, 0.25, epsilon = 1e-15);
        }
        let q = qfi_staggered(&sf);
        assert_relative_eq!(q.density, 1.0, epsilon = 1e-15);
        assert!(!q.witnessed);
    }

    #[test]
    fn synthetic_staggered_peak_witnesses() {
        let mut values = vec![0.1; 16];
        values[2 * 4 + 2] = 0.3;
        let q = qfi_staggered(&StructureFactor(field(4, values)));
        assert_relative_eq!(q.density, 1.2, epsilon = 1e-15);
        assert_relative_eq!(q.qfi, 4.0 * 16.0 * 0.3, epsilon = 1e-12);
        assert!(q.witnessed);
    }

    #[test]
    fn periodic_lookup_wraps() {
        let f = field(4, (0..16).map(|i| i as f64).collect());
        assert_eq!(f.get(-1, 0), 12.0);
        assert_eq!(f.get(0, -1), 3.0);
        assert_eq!(f.get(5, 6), 6.0);
        assert_eq!(f.argmax(), (3, 3));
    }

    #[test]
    fn cosine_table_matches_cos_with_exact_symmetry() {
        for l in [2, 4, 6, 8, 12, 32] {
            let c = symmetric_cosines(l);
            for m in 0..l {
                assert!((c[m] - (2.0 * PI * m as f64 / l as f64).cos()).abs() < 1e-15);
                assert_eq!(c[m], -c[(m + l / 2) % l]);
                assert_eq!(c[m], c[(l - m) % l]);
            }
        }
        assert_eq!(symmetric_cosines(8)[2], 0.0);
    }

    #[test]
    fn odd_size_rejected() {
        let gas = LatticeGas { size: 7, temperature: 0.1, chemical_potential: 0.0, hopping: 1.0 };
        assert!(matches!(first_order_correlation(&gas), Err(Error::InvalidModel(_))));
        let gas = LatticeGas { size: 8, temperature: 0.0, chemical_potential: 0.0, hopping: 1.0 };
        assert!(matches!(first_order_correlation(&gas), Err(Error::Precondition(_))));
    }
}
