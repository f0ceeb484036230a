//! Exact number-resolved moments of ideal Bose gases.
//!
//! A mode with mean occupation `n` holds a geometric number of bosons with
//! ratio `q = n / (1 + n)`. The spin-up and spin-down totals are therefore
//! independent, with distributions obtained from the generating function
//! `prod_a (1 - q_a)^w_a / (1 - q_a s)^w_a` through
//!
//! ```text
//! k P_k = sum_{j=1..k} S_j P_{k-j},    S_j = sum_a w_a q_a^j
//! ```
//!
//! Same-mode products use memorylessness of the geometric law,
//! `E[n_up n_down h(N)] = sum_{j,k>=1} q_up^j q_down^k E[h(N + j + k)]`.
//!
//! This evaluates the fluctuating-number inequalities exactly, without the
//! `<f(N) X> -> f(<N>) <X>` replacement, in the sector `N >= 2`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::moments::{ConditionedSector, SpinMoments};
use crate::occupancy::{OccupationTable, Statistics};

/// Truncated tail mass allowed per spin distribution.
pub const TAIL_TOL: f64 = 1e-15;
/// Largest particle count per spin kept in a distribution. Gases whose
/// estimated count support exceeds it are rejected up front.
pub const MAX_COUNT: usize = 5_000;

const RESCALE_ABOVE: f64 = 1e200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NumberResolved {
    /// `P(N <= 1)`, excluded from the sector.
    pub low_number_weight: f64,
    pub sector: ConditionedSector,
    /// Largest spin-up and spin-down counts kept.
    pub max_counts: (usize, usize),
}

/// Geometric ratio and multiplicity of one spin-resolved level.
#[derive(Debug, Clone, Copy)]
struct Mode {
    q: f64,
    weight: f64,
}

fn ratio(n: f64, complement: f64) -> f64 {
    if n == 0.0 {
        0.0
    } else {
        n / complement
    }
}

/// Rows merged on identical ratios; zero-occupation rows dropped.
fn spin_modes(table: &OccupationTable) -> (Vec<Mode>, Vec<Mode>, Vec<(f64, f64, f64)>) {
    let mut pairs: Vec<(f64, f64, f64)> = table
        .rows
        .iter()
        .filter(|r| r.weight > 0.0 && (r.up > 0.0 || r.down > 0.0))
        .map(|r| (ratio(r.up, r.up_complement), ratio(r.down, r.down_complement), r.weight))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mut merged: Vec<(f64, f64, f64)> = Vec::with_capacity(pairs.len());
    for p in pairs {
        match merged.last_mut() {
            Some(last) if last.0 == p.0 && last.1 == p.1 => last.2 += p.2,
            _ => merged.push(p),
        }
    }
    let up = merged.iter().filter(|p| p.0 > 0.0).map(|p| Mode { q: p.0, weight: p.2 }).collect();
    let down = merged.iter().filter(|p| p.1 > 0.0).map(|p| Mode { q: p.1, weight: p.2 }).collect();
    (up, down, merged)
}

/// Normalized distribution of the total count in `modes`.
fn count_distribution(modes: &[Mode]) -> Result<Vec<f64>> {
    if modes.is_empty() {
        return Ok(vec![1.0]);
    }
    let q_max = modes.iter().map(|m| m.q).fold(0.0, f64::max);
    let mean: f64 = modes.iter().map(|m| m.weight * m.q / (1.0 - m.q)).sum();
    let variance: f64 = modes.iter().map(|m| m.weight * m.q / ((1.0 - m.q) * (1.0 - m.q))).sum();
    // mean + 40 sigma, plus the geometric tail of the largest ratio down to 1e-16
    let support = mean + 40.0 * variance.sqrt() + 37.0 / -q_max.ln();
    if !(support <= MAX_COUNT as f64) {
        return Err(Error::Precondition(format!(
            "about {support:.0} particles per spin exceed the number-resolved limit {MAX_COUNT}"
        )));
    }
    let mut powers: Vec<f64> = modes.iter().map(|m| m.q).collect();
    let mut s = vec![0.0];
    let mut p = vec![1.0];
    let mut total = 1.0;
    for k in 1..=MAX_COUNT {
        s.push(modes.iter().zip(&powers).map(|(m, pw)| m.weight * pw).sum());
        for (pw, m) in powers.iter_mut().zip(modes) {
            *pw *= m.q;
        }
        let pk = (1..=k).map(|j| s[j] * p[k - j]).sum::<f64>() / k as f64;
        p.push(pk);
        total += pk;
        if pk > RESCALE_ABOVE {
            p.iter_mut().for_each(|x| *x /= RESCALE_ABOVE);
            total /= RESCALE_ABOVE;
        }
        let pk = p[k];
        let prev = p[k - 1];
        if k as f64 > mean && pk <= prev {
            let r = (pk / prev).max(q_max);
            if pk * r / (1.0 - r) < TAIL_TOL * total {
                return Ok(p.into_iter().map(|x| x / total).collect());
            }
        }
    }
    Err(Error::NoConvergence(format!(
        "Bose count distribution not converged within {MAX_COUNT} particles (largest fugacity {q_max})"
    )))
}

/// Exact moments and inequality sides of a Bose table in the `N >= 2`
/// sector.
pub fn bose_number_resolved(table: &OccupationTable) -> Result<NumberResolved> {
    if table.statistics != Statistics::Bose {
        return Err(Error::Precondition("number-resolved moments need a Bose table".into()));
    }
    let (up_modes, down_modes, pairs) = spin_modes(table);
    if pairs.iter().any(|p| !(p.0 < 1.0 && p.1 < 1.0)) {
        return Err(Error::Precondition("Bose fugacity must stay below 1 on every level".into()));
    }
    let up = count_distribution(&up_modes)?;
    let down = count_distribution(&down_modes)?;

    let mut total = vec![0.0; up.len() + down.len() - 1];
    for (a, pa) in up.iter().enumerate() {
        for (b, pb) in down.iter().enumerate() {
            total[a + b] += pa * pb;
        }
    }
    let low = total[0] + total.get(1).copied().unwrap_or(0.0);
    let z: f64 = total.iter().skip(2).sum();
    if !(z > 0.0) {
        return Err(Error::Degenerate("no weight in the N >= 2 sector".into()));
    }

    let (mut mean_n, mut n_over, mut half, mut pair) = (0.0, 0.0, 0.0, 0.0);
    for (n, pn) in total.iter().enumerate().skip(2) {
        let n = n as f64;
        mean_n += pn * n;
        n_over += pn * n / (n - 1.0);
        half += pn * 0.5 * n / (n - 1.0);
        pair += pn * 0.25 * n * (n - 2.0) / (n - 1.0);
    }

    let shift = 0.5
        * (up.iter().enumerate().map(|(a, p)| a as f64 * p).sum::<f64>()
            - down.iter().enumerate().map(|(b, p)| b as f64 * p).sum::<f64>());
    let (mut jz_dev, mut jz_dev_sq, mut jz_sq_over) = (0.0, 0.0, 0.0);
    for (a, pa) in up.iter().enumerate() {
        for (b, pb) in down.iter().enumerate() {
            if a + b < 2 {
                continue;
            }
            let w = pa * pb;
            let jz = 0.5 * (a as f64 - b as f64);
            jz_dev += w * (jz - shift);
            jz_dev_sq += w * (jz - shift) * (jz - shift);
            jz_sq_over += w * jz * jz / ((a + b) as f64 - 1.0);
        }
    }

    // c_m = sum_a w_a sum_{j=1..m-1} q_up^j q_down^(m-j)
    let max_m = total.len() + 1;
    let mut terms: Vec<(f64, f64, f64, f64)> =
        pairs.iter().filter(|p| p.0 > 0.0 && p.1 > 0.0).map(|&(qu, qd, w)| (qu, qd, w, qu * qd)).collect();
    let mut up_powers: Vec<f64> = terms.iter().map(|t| t.0).collect();
    let (mut cross, mut cross_over) = (0.0, 0.0);
    for m in 2..=max_m {
        let c: f64 = terms.iter().map(|t| t.2 * t.3).sum();
        if c <= 1e-18 * cross {
            break;
        }
        cross += c;
        cross_over += c * total.iter().enumerate().map(|(n, pn)| pn / ((n + m) as f64 - 1.0)).sum::<f64>();
        for (t, pu) in terms.iter_mut().zip(up_powers.iter_mut()) {
            *pu *= t.0;
            t.3 = t.1 * t.3 + *pu * t.1;
        }
    }

    let mean_jz = shift + jz_dev / z;
    let var_jx = (0.25 * mean_n + 0.5 * cross) / z;
    let jx_sq_over = (0.25 * n_over + 0.5 * cross_over) / z;
    let mean_n = mean_n / z;
    let moments = SpinMoments {
        mean_n,
        mean_jz,
        var_jx,
        var_jy: var_jx,
        var_jz: (jz_dev_sq / z - (jz_dev / z).powi(2)).max(0.0),
        polarization: 2.0 * mean_jz / mean_n,
    };
    Ok(NumberResolved {
        low_number_weight: low,
        sector: ConditionedSector::new(moments, [jx_sq_over, jx_sq_over, jz_sq_over / z], half / z, pair / z),
        max_counts: (up.len() - 1, down.len() - 1),
    })
}
