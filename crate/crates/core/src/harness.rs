//! Monte Carlo estimates set against exact values.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::coalescent::simulate_events;
use crate::error::{Error, Result};
use crate::exact::{phi_functional, DualEngine};
use crate::functional::MomentFunctional;
use crate::gfvi::{population_at, TypeAssignment};
use crate::law::AtomicMeasure;
use crate::measure::CoagulationMeasure;
use crate::partition::DistinguishedPartition;
use crate::rng::run_replicates;
use crate::stats::{chi_square, mean_se};

/// Significance level of goodness-of-fit tests.
pub const SIGNIFICANCE: f64 = 1e-3;
/// Multiplier of the standard error in moment comparisons.
pub const SE_MULTIPLIER: f64 = 3.0;
/// `C` in the finite-population allowance `C p^2 / n`.
pub const BIAS_CONSTANT: f64 = 2.0;
pub const DEFAULT_N_PARTICLES: usize = 1000;
pub const DEFAULT_REPLICATES: usize = 10_000;
/// Largest `p` accepted by [`marginal_test`].
pub const MAX_MARGINAL_P: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn passed(self) -> bool {
        self == Verdict::Pass
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareSummary {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    pub cells: usize,
    pub pooled_cells: usize,
}

/// One estimate against one exact value.
///
/// For moment comparisons the verdict is pass iff
/// `|estimate - exact| <= 3 se + bias_allowance`. Goodness-of-fit reports
/// carry the chi-square statistic as `estimate`, its degrees of freedom as
/// `exact` and `sqrt(2 dof)` as `se`; their verdict is `p >= 0.001`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub label: String,
    pub estimate: f64,
    pub se: f64,
    pub exact: f64,
    pub z: f64,
    pub bias_allowance: f64,
    pub verdict: Verdict,
    pub chi_square: Option<ChiSquareSummary>,
    pub note: Option<String>,
}

impl ComparisonReport {
    pub fn moment(label: impl Into<String>, estimate: f64, se: f64, exact: f64, bias_allowance: f64) -> Self {
        let diff = estimate - exact;
        let z = if se > 0.0 {
            diff / se
        } else if diff == 0.0 {
            0.0
        } else {
            diff.signum() * f64::INFINITY
        };
        Self {
            label: label.into(),
            estimate,
            se,
            exact,
            z,
            bias_allowance,
            verdict: Verdict::from_bool(diff.abs() <= SE_MULTIPLIER * se + bias_allowance),
            chi_square: None,
            note: None,
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

/// Chi-square test of the law of the forward partition at time `t`,
/// restricted to `{0,...,p}`, against the exact marginal of the coalescent.
/// The flow is simulated at resolution `p`.
pub fn marginal_test(
    measure: &CoagulationMeasure,
    p: usize,
    t: f64,
    replicates: usize,
    seed: u64,
) -> Result<ComparisonReport> {
    marginal_test_at(measure, p, p, t, replicates, seed)
}

/// As [`marginal_test`], simulating at resolution `n_sim >= p` and
/// restricting.
pub fn marginal_test_at(
    measure: &CoagulationMeasure,
    p: usize,
    n_sim: usize,
    t: f64,
    replicates: usize,
    seed: u64,
) -> Result<ComparisonReport> {
    if p == 0 || p > MAX_MARGINAL_P {
        return Err(Error::InvalidArgument(format!("marginal test needs 1 <= p <= {MAX_MARGINAL_P}, got {p}")));
    }
    if n_sim < p {
        return Err(Error::InvalidArgument(format!("simulation resolution {n_sim} below p = {p}")));
    }
    let engine = DualEngine::new(measure, p)?;
    let probs = engine.marginal_law(t)?;
    let space = engine.space();
    let cells = run_replicates(seed, replicates, |rng, _| {
        let log = simulate_events(measure, n_sim, t, rng)?;
        let state = log.forward_state(t)?.restrict(p)?;
        Ok(space.index_of(&state).expect("restriction lies in the space"))
    })?;
    let mut observed = vec![0u64; space.len()];
    for c in cells {
        observed[c] += 1;
    }
    let chi = chi_square(&observed, &probs);
    let se = (2.0 * chi.dof as f64).sqrt();
    let z = if se > 0.0 { (chi.statistic - chi.dof as f64) / se } else { 0.0 };
    let mut notes = Vec::new();
    if chi.pooled_cells < chi.cells {
        notes.push(format!(
            "{} cells with positive probability pooled into {} with expected count >= 5",
            chi.cells, chi.pooled_cells
        ));
    }
    if chi.impossible {
        notes.push("observations in a cell of probability zero".to_string());
    }
    Ok(ComparisonReport {
        label: format!("marginal p={p} t={t}"),
        estimate: chi.statistic,
        se,
        exact: chi.dof as f64,
        z,
        bias_allowance: 0.0,
        verdict: Verdict::from_bool(chi.p_value >= SIGNIFICANCE),
        chi_square: Some(ChiSquareSummary {
            statistic: chi.statistic,
            dof: chi.dof,
            p_value: chi.p_value,
            cells: chi.cells,
            pooled_cells: chi.pooled_cells,
        }),
        note: (!notes.is_empty()).then(|| notes.join("; ")),
    })
}

/// Both sides of the duality identity
/// `E^rho[Phi_f(Z_t, pi)] = E^pi[Phi_f(rho, Pi(t))]`.
///
/// The left side is estimated from `n_particles` lookdown particles with
/// i.i.d. `rho` initial types; `Phi_f(Z_t, pi)` is evaluated exactly at the
/// empirical type law. The right side comes from the exact semigroup.
#[allow(clippy::too_many_arguments)]
pub fn duality_moment_test(
    measure: &CoagulationMeasure,
    rho: &AtomicMeasure,
    f: &MomentFunctional,
    pi: &DistinguishedPartition,
    t: f64,
    n_particles: usize,
    replicates: usize,
    seed: u64,
) -> Result<ComparisonReport> {
    let p = f.arity();
    if n_particles < p {
        return Err(Error::InvalidArgument(format!("{n_particles} particles for arity {p}")));
    }
    let engine = DualEngine::new(measure, p)?;
    let exact = engine.dual_expectation(pi, rho, f, t)?;
    let law = crate::gfvi::InitialLaw::Discrete { atoms: rho.atoms().to_vec() };
    let values = run_replicates(seed, replicates, |rng, _| {
        let types: TypeAssignment = crate::gfvi::assign_types(n_particles, &law, rng)?;
        let v = population_at(measure, &types, t, rng)?;
        phi_functional(&AtomicMeasure::empirical(&v)?, pi, f)
    })?;
    let m = mean_se(&values);
    let allowance = BIAS_CONSTANT * (p * p) as f64 / n_particles as f64;
    Ok(ComparisonReport::moment(
        format!("duality f={f} pi={pi} t={t}"),
        m.mean,
        m.se,
        exact,
        allowance,
    )
    .with_note(format!("finite-population allowance {BIAS_CONSTANT}*p^2/n with n = {n_particles}")))
}
