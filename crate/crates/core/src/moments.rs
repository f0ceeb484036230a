//! Collective-spin variances from occupations and the variance-based
//! separability inequalities.
//!
//! For a Gaussian (ideal-gas) state Wick factorization gives
//!
//! ```text
//! Var(Jz)    = <N>/4 + (eta/4) sum_a w_a (n_up^2 + n_down^2)
//! Var(Jx,y)  = <N>/4 + (eta/2) sum_a w_a  n_up n_down
//! ```
//!
//! with `eta = +1` for bosons and `-1` for fermions.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::occupancy::{OccupationTable, Statistics};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    /// The two other axes, in cyclic order.
    pub fn others(self) -> [Axis; 2] {
        match self {
            Axis::X => [Axis::Y, Axis::Z],
            Axis::Y => [Axis::Z, Axis::X],
            Axis::Z => [Axis::X, Axis::Y],
        }
    }
}

/// First and second moments of the collective spin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpinMoments {
    pub mean_n: f64,
    /// `(<N_up> - <N_down>) / 2`
    pub mean_jz: f64,
    pub var_jx: f64,
    pub var_jy: f64,
    pub var_jz: f64,
    pub polarization: f64,
}

impl SpinMoments {
    pub fn variance(&self, axis: Axis) -> f64 {
        match axis {
            Axis::X => self.var_jx,
            Axis::Y => self.var_jy,
            Axis::Z => self.var_jz,
        }
    }

    /// `<J_mu>`; only the z component can be nonzero.
    pub fn mean(&self, axis: Axis) -> f64 {
        match axis {
            Axis::Z => self.mean_jz,
            _ => 0.0,
        }
    }

    /// `<(J_mu)^2> = Var(J_mu) + <J_mu>^2`
    pub fn second_moment(&self, axis: Axis) -> f64 {
        self.variance(axis) + self.mean(axis).powi(2)
    }

    pub fn total_variance(&self) -> f64 {
        self.var_jx + self.var_jy + self.var_jz
    }

    /// Singlet-formation parameter `2 sum_mu Var(J_mu) / <N>`.
    pub fn xi_s2(&self) -> f64 {
        2.0 * self.total_variance() / self.mean_n
    }

    /// `1 - xi_s^2`; negative values are kept.
    pub fn singlet_fraction(&self) -> f64 {
        1.0 - self.xi_s2()
    }
}

/// Closed-form collective-spin moments of an ideal-gas occupation table.
pub fn collective_variances(table: &OccupationTable) -> Result<SpinMoments> {
    let pop = table.populations()?;
    // N/4 + eta/4 sum(n_up^2 + n_down^2) and N/4 + eta/2 sum(n_up n_down),
    // written with the complements 1 + eta n to avoid cancellation.
    let (mut same, mut crossed) = (0.0, 0.0);
    for r in &table.rows {
        same += r.weight * (r.up * r.up_complement + r.down * r.down_complement);
        crossed += r.weight * (r.up * r.down_complement + r.down * r.up_complement);
    }
    let var_jz = (0.25 * same).max(0.0);
    let var_jx = (0.25 * crossed).max(0.0);
    Ok(SpinMoments {
        mean_n: pop.total,
        mean_jz: 0.5 * pop.imbalance,
        var_jx,
        var_jy: var_jx,
        var_jz,
        polarization: pop.polarization,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Evaluation {
    Exact,
    /// Nonlinear functions of N evaluated at `<N>`: `<f(N) X>` -> `f(<N>) <X>`.
    MeanN,
}

/// One side-by-side evaluation of a separability inequality `lhs >= rhs`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InequalityCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub satisfied: bool,
    pub evaluation: Evaluation,
    /// The distinguished axis of the tightest permutation: `mu_1` for the
    /// single-variance inequality, `mu_3` for the pair inequality, `None`
    /// for the total-variance inequality.
    pub axis: Option<Axis>,
}

impl InequalityCheck {
    pub fn new(lhs: f64, rhs: f64, evaluation: Evaluation, axis: Option<Axis>) -> Self {
        Self { lhs, rhs, satisfied: lhs >= rhs, evaluation, axis }
    }

    pub fn margin(&self) -> f64 {
        self.lhs - self.rhs
    }
}

/// The three variance inequalities obeyed by separable states with a
/// fluctuating particle number, plus the singlet parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WitnessReport {
    /// `sum_mu Var(J_mu) >= <N>/2` (exact).
    pub total_variance: InequalityCheck,
    /// `Var(J_1) >= <((J_2)^2 + (J_3)^2)/(N-1)> - <N/(2(N-1))>`
    pub single_axis: InequalityCheck,
    /// `Var(J_1) + Var(J_2) >= <(J_3)^2/(N-1)> + <N(N-2)/(4(N-1))>`
    pub axis_pair: InequalityCheck,
    pub xi_s2: f64,
    pub singlet_fraction: f64,
    pub entanglement_witnessed: bool,
}

impl WitnessReport {
    pub fn checks(&self) -> [&InequalityCheck; 3] {
        [&self.total_variance, &self.single_axis, &self.axis_pair]
    }

    pub fn all_satisfied(&self) -> bool {
        self.checks().iter().all(|c| c.satisfied)
    }
}

/// Exact inequality evaluation in the sector `N >= 2`, from moments and
/// number-weighted expectations of the state renormalized there.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConditionedSector {
    pub moments: SpinMoments,
    /// `<(J^mu)^2 / (N - 1)>` for x, y, z.
    pub jsq_over_n_minus_1: [f64; 3],
    /// `<N / (2(N - 1))>`
    pub half_n_over_n_minus_1: f64,
    /// `<N (N - 2) / (4 (N - 1))>`
    pub pair_term: f64,
    pub total_variance: InequalityCheck,
    pub single_axis: InequalityCheck,
    pub axis_pair: InequalityCheck,
}

impl ConditionedSector {
    pub fn new(moments: SpinMoments, jsq_over_n_minus_1: [f64; 3], half_n_over_n_minus_1: f64, pair_term: f64) -> Self {
        let jsq = |a: Axis| jsq_over_n_minus_1[a as usize];
        let total_variance =
            InequalityCheck::new(moments.total_variance(), 0.5 * moments.mean_n, Evaluation::Exact, None);
        let single_axis = tightest(Axis::ALL.map(|a| {
            let [b, c] = a.others();
            InequalityCheck::new(
                moments.variance(a),
                jsq(b) + jsq(c) - half_n_over_n_minus_1,
                Evaluation::Exact,
                Some(a),
            )
        }));
        let axis_pair = tightest(Axis::ALL.map(|c| {
            let [a, b] = c.others();
            InequalityCheck::new(
                moments.variance(a) + moments.variance(b),
                jsq(c) + pair_term,
                Evaluation::Exact,
                Some(c),
            )
        }));
        Self { moments, jsq_over_n_minus_1, half_n_over_n_minus_1, pair_term, total_variance, single_axis, axis_pair }
    }

    pub fn checks(&self) -> [&InequalityCheck; 3] {
        [&self.total_variance, &self.single_axis, &self.axis_pair]
    }
}

/// Smallest witnessed-ensemble size accepted by [`witness_report`].
pub const MIN_MEAN_N: f64 = 2.0;

/// Evaluates the three inequalities from closed-form moments.
///
/// The total-variance inequality is exact. The other two involve
/// expectations like `<(J_mu)^2 / (N - 1)>` which are evaluated with `N`
/// replaced by `<N>` inside the nonlinear factors.
pub fn witness_report(moments: &SpinMoments) -> Result<WitnessReport> {
    let n = moments.mean_n;
    if !(n > MIN_MEAN_N) {
        return Err(Error::Precondition(format!("witness inequalities need <N> > {MIN_MEAN_N}, got {n}")));
    }
    let xi_s2 = moments.xi_s2();
    let witnessed = xi_s2 < 1.0;
    let total_variance = InequalityCheck {
        lhs: moments.total_variance(),
        rhs: 0.5 * n,
        satisfied: !witnessed,
        evaluation: Evaluation::Exact,
        axis: None,
    };

    let single_axis = tightest(Axis::ALL.map(|a| {
        let [b, c] = a.others();
        InequalityCheck::new(
            moments.variance(a),
            (moments.second_moment(b) + moments.second_moment(c)) / (n - 1.0) - n / (2.0 * (n - 1.0)),
            Evaluation::MeanN,
            Some(a),
        )
    }));
    let axis_pair = tightest(Axis::ALL.map(|c| {
        let [a, b] = c.others();
        InequalityCheck::new(
            moments.variance(a) + moments.variance(b),
            moments.second_moment(c) / (n - 1.0) + n * (n - 2.0) / (4.0 * (n - 1.0)),
            Evaluation::MeanN,
            Some(c),
        )
    }));

    Ok(WitnessReport {
        total_variance,
        single_axis,
        axis_pair,
        xi_s2,
        singlet_fraction: 1.0 - xi_s2,
        entanglement_witnessed: witnessed,
    })
}

/// The permutation with the smallest `lhs - rhs`.
fn tightest(checks: [InequalityCheck; 3]) -> InequalityCheck {
    checks.into_iter().min_by(|a, b| a.margin().total_cmp(&b.margin())).expect("three permutations")
}

/// Convenience: statistics sign check used by callers that pass `eta`
/// separately from the table.
pub fn check_statistics(table: &OccupationTable, statistics: Statistics) -> Result<()> {
    if table.statistics != statistics {
        return Err(Error::Precondition(format!(
            "table built with {} statistics, moments requested for {}",
            table.statistics.name(),
            statistics.name()
        )));
    }
    Ok(())
}
