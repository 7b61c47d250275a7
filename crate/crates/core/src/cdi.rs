//! Coming down from infinity and extinction of the GFVI.
//!
//! `Phi(n)` is the rate at which the number of non-distinguished blocks of
//! the coalescent decreases from `n`; `Psi` is a smooth surrogate of the same
//! order and `zeta` its part without immigration.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::coalescent::absorption_time_by_block_count;
use crate::error::{Error, Result};
use crate::harness::{ComparisonReport, Verdict, SE_MULTIPLIER};
use crate::measure::CoagulationMeasure;
use crate::partition::paintbox_sample;
use crate::quad::integrate_log_scale;
use crate::rng::run_replicates;
use crate::stats::{mean_se, MeanSe};

/// Default truncation of the series.
pub const DEFAULT_SERIES_TERMS: usize = 1_000_000;
/// Default sweep of upper limits for the integral test.
pub const DEFAULT_SWEEP: [f64; 3] = [1e2, 1e4, 1e6];
/// Increment ratios at or below this read as convergence.
pub const CONVERGE_RATIO: f64 = 0.1;
/// Increment ratios at or above this read as divergence.
pub const DIVERGE_RATIO: f64 = 0.5;
const QUAD_TOL: f64 = 1e-13;
/// Dust below this counts as zero when flagging finite-type atoms.
const DUST_TOL: f64 = 1e-12;

/// `(1 - s)^q - 1 + q s`, accurate for small `s`.
fn binomial_excess(s: f64, q: f64) -> f64 {
    if s >= 1.0 {
        return q - 1.0;
    }
    (q * (-s).ln_1p()).exp_m1() + q * s
}

/// `e^{-q s} - 1 + q s`.
fn exponential_excess(s: f64, q: f64) -> f64 {
    (-q * s).exp_m1() + q * s
}

pub fn phi(measure: &CoagulationMeasure, q: f64) -> f64 {
    let mut total = measure.c0() * q + 0.5 * measure.c1() * q * (q - 1.0);
    for atom in measure.atoms() {
        let s = &atom.mass;
        let inner: f64 = s.masses().iter().map(|&si| binomial_excess(si, q)).sum();
        total += atom.weight * (q * s.s0() + inner);
    }
    total
}

pub fn psi(measure: &CoagulationMeasure, q: f64) -> f64 {
    let mut total = measure.c0() * q + 0.5 * measure.c1() * q * q;
    for atom in measure.atoms() {
        let s = &atom.mass;
        let inner: f64 = s.masses().iter().map(|&si| exponential_excess(si, q)).sum();
        total += atom.weight * (q * s.s0() + inner);
    }
    total
}

pub fn zeta(measure: &CoagulationMeasure, q: f64) -> f64 {
    let mut total = 0.5 * measure.c1() * q * q;
    for atom in measure.atoms() {
        let inner: f64 = atom.mass.masses().iter().map(|&si| exponential_excess(si, q)).sum();
        total += atom.weight * inner;
    }
    total
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Convergence {
    Converges,
    Diverges,
    Inconclusive,
}

impl Convergence {
    fn from_ratio(ratio: f64) -> Self {
        if ratio <= CONVERGE_RATIO {
            Convergence::Converges
        } else if ratio >= DIVERGE_RATIO {
            Convergence::Diverges
        } else {
            Convergence::Inconclusive
        }
    }
}

impl fmt::Display for Convergence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Convergence::Converges => "converges",
            Convergence::Diverges => "diverges",
            Convergence::Inconclusive => "inconclusive",
        })
    }
}

/// `sum_{n >= 1} 1/Phi(n)` truncated at `terms`, with the integral bracket
/// `[int_{N+1}^inf, int_N^inf] dq/Phi(q)` on the remainder.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesDiagnostic {
    pub terms: usize,
    /// `sum_{n=1}^N 1/Phi(n)`; infinite when `Phi(1) = 0`.
    pub partial_sum: f64,
    pub tail_lower: f64,
    pub tail_upper: f64,
    /// Midpoint of the bracket around the full sum, when it converges.
    pub limit: Option<f64>,
    /// Verdict on the whole series.
    pub verdict: Convergence,
    /// Verdict on `sum_{n >= 2}`, which ignores the immigration-only term.
    pub tail_verdict: Convergence,
    /// Ratio of successive hundred-fold increments of the remainder integral.
    pub increment_ratio: f64,
    pub reason: Option<String>,
}

/// Ratio of `int_{b}^{c}` to `int_{a}^{b}` of `g` on the sweep `a, b, c`,
/// together with the increments.
fn increment_ratio<F: Fn(f64) -> f64>(g: &F, sweep: &[f64]) -> (f64, Vec<f64>) {
    let incs: Vec<f64> = sweep
        .windows(2)
        .map(|w| integrate_log_scale(g, w[0], w[1], QUAD_TOL))
        .collect();
    let n = incs.len();
    let ratio = if n >= 2 && incs[n - 2] > 0.0 {
        incs[n - 1] / incs[n - 2]
    } else {
        f64::INFINITY
    };
    (ratio, incs)
}

/// Geometric extrapolation of the increments past the last sweep point.
fn geometric_remainder(last_increment: f64, ratio: f64) -> f64 {
    if ratio < 1.0 {
        last_increment * ratio / (1.0 - ratio)
    } else {
        f64::INFINITY
    }
}

/// `int_a^inf dq/Phi(q)`, integrated out to `a * 1e8` and extrapolated.
fn phi_tail_integral(measure: &CoagulationMeasure, a: f64) -> f64 {
    let g = |q: f64| 1.0 / phi(measure, q);
    let sweep: Vec<f64> = (0..=4).map(|k| a * 100f64.powi(k)).collect();
    let (ratio, incs) = increment_ratio(&g, &sweep);
    incs.iter().sum::<f64>() + geometric_remainder(*incs.last().unwrap(), ratio)
}

pub fn series_diagnostic(measure: &CoagulationMeasure, terms: usize) -> SeriesDiagnostic {
    let terms = terms.max(2);
    let n = terms as f64;
    let g = |q: f64| 1.0 / phi(measure, q);
    let phi2 = phi(measure, 2.0);
    let (ratio, tail_verdict) = if phi2 > 0.0 {
        let sweep = [n, 1e2 * n, 1e4 * n];
        let (ratio, _) = increment_ratio(&g, &sweep);
        (ratio, Convergence::from_ratio(ratio))
    } else {
        (f64::INFINITY, Convergence::Diverges)
    };
    let phi1 = phi(measure, 1.0);
    let mut reason = None;
    if phi2 <= 0.0 {
        reason = Some("Phi vanishes: the measure has no events".to_string());
    } else if phi1 <= 0.0 {
        reason = Some("Phi(1)=0: no immigration into the distinguished block".to_string());
    }
    // small terms first
    let from = if phi1 > 0.0 { 1 } else { 2 };
    let body: f64 = if phi2 > 0.0 {
        (from..=terms).rev().map(|k| 1.0 / phi(measure, k as f64)).sum()
    } else {
        f64::INFINITY
    };
    let partial_sum = if phi1 > 0.0 { body } else { f64::INFINITY };
    let (tail_lower, tail_upper) = if tail_verdict == Convergence::Converges {
        (phi_tail_integral(measure, n + 1.0), phi_tail_integral(measure, n))
    } else {
        (f64::INFINITY, f64::INFINITY)
    };
    let verdict = if phi1 > 0.0 { tail_verdict } else { Convergence::Diverges };
    let limit = (verdict == Convergence::Converges).then_some(partial_sum + 0.5 * (tail_lower + tail_upper));
    SeriesDiagnostic {
        terms,
        partial_sum,
        tail_lower,
        tail_upper,
        limit,
        verdict,
        tail_verdict,
        increment_ratio: ratio,
        reason,
    }
}

/// `int_a^Q dq/zeta(q)` over a sweep of `Q`, with a verdict from the trend.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegralDiagnostic {
    pub a: f64,
    pub sweep: Vec<f64>,
    /// `int_a^{Q_k}` for each sweep point.
    pub values: Vec<f64>,
    /// Last value plus a geometric extrapolation, when convergent.
    pub estimate: Option<f64>,
    pub increment_ratio: f64,
    pub verdict: Convergence,
    /// Set when `zeta(a) = 0`, in which case condition (ii) fails.
    pub degenerate: bool,
    pub reason: Option<String>,
}

pub fn integral_diagnostic(measure: &CoagulationMeasure, a: f64, sweep: &[f64]) -> Result<IntegralDiagnostic> {
    if a.is_nan() || a <= 0.0 || sweep.len() < 2 || sweep[0] <= a || sweep.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument(format!(
            "integral test needs 0 < a < Q_1 < Q_2 < ..., got a = {a}, sweep {sweep:?}"
        )));
    }
    if zeta(measure, a) <= 0.0 {
        return Ok(IntegralDiagnostic {
            a,
            sweep: sweep.to_vec(),
            values: vec![],
            estimate: None,
            increment_ratio: f64::INFINITY,
            verdict: Convergence::Diverges,
            degenerate: true,
            reason: Some("condition ii fails (zeta degenerate)".to_string()),
        });
    }
    let g = |q: f64| 1.0 / zeta(measure, q);
    let mut points = vec![a];
    points.extend_from_slice(sweep);
    let (_, incs) = increment_ratio(&g, &points);
    let values: Vec<f64> = incs
        .iter()
        .scan(0.0, |acc, x| {
            *acc += x;
            Some(*acc)
        })
        .collect();
    // trend is read from the increments between sweep points only
    let (ratio, _) = increment_ratio(&g, sweep);
    let verdict = Convergence::from_ratio(ratio);
    let estimate = (verdict == Convergence::Converges)
        .then(|| values.last().unwrap() + geometric_remainder(*incs.last().unwrap(), ratio));
    Ok(IntegralDiagnostic {
        a,
        sweep: sweep.to_vec(),
        values,
        estimate,
        increment_ratio: ratio,
        verdict,
        degenerate: false,
        reason: None,
    })
}

/// Weight of atoms in `P^f_m` (no dust).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PfmCase {
    /// No atoms at all.
    NotApplicable,
    Zero,
    FinitePositive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ComesDown {
    /// The series/integral criterion holds.
    BySeries,
    /// Dust-free atoms leave finitely many types after their first event.
    ByFiniteTypes,
    No,
    Unknown,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Diagnosis {
    Extinct,
    NotExtinct,
    Inconclusive,
}

impl fmt::Display for Diagnosis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Diagnosis::Extinct => "extinct",
            Diagnosis::NotExtinct => "not-extinct",
            Diagnosis::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CDIReport {
    /// `c0 + nu(s0 > 0) > 0`.
    pub condition_i: bool,
    pub immigration_rate: f64,
    /// `sum_k w_k (sum_{i >= 0} s_i)^2`.
    pub regularity_r: f64,
    pub regularity_finite: bool,
    pub pfm_case: PfmCase,
    pub pfm_weight: f64,
    pub series: SeriesDiagnostic,
    pub integral: IntegralDiagnostic,
    pub comes_down: ComesDown,
    pub diagnosis: Diagnosis,
    /// `sum_{n >= 1} 1/Phi(n)`, the bound on the mean fixation time.
    pub fixation_bound: Option<f64>,
    pub notes: Vec<String>,
}

pub fn classify(measure: &CoagulationMeasure) -> Result<CDIReport> {
    classify_with(measure, DEFAULT_SERIES_TERMS, 1.0, &DEFAULT_SWEEP)
}

pub fn classify_with(measure: &CoagulationMeasure, terms: usize, a: f64, sweep: &[f64]) -> Result<CDIReport> {
    let diag = measure.validate();
    if !diag.is_valid() {
        return Err(Error::InvalidMeasure(diag.violations));
    }
    let immigration_rate = measure.c0()
        + measure
            .atoms()
            .iter()
            .filter(|a| a.mass.s0() > 0.0)
            .map(|a| a.weight)
            .sum::<f64>();
    let condition_i = immigration_rate > 0.0;
    let regularity_r: f64 = measure
        .atoms()
        .iter()
        .map(|a| a.weight * (a.mass.s0() + a.mass.masses().iter().sum::<f64>()).powi(2))
        .sum();
    let pfm_weight: f64 = measure
        .atoms()
        .iter()
        .filter(|a| a.mass.dust() <= DUST_TOL)
        .map(|a| a.weight)
        .sum();
    let pfm_case = if measure.atoms().is_empty() {
        PfmCase::NotApplicable
    } else if pfm_weight > 0.0 {
        PfmCase::FinitePositive
    } else {
        PfmCase::Zero
    };
    let series = series_diagnostic(measure, terms);
    let integral = integral_diagnostic(measure, a, sweep)?;

    let mut notes = vec![
        "(R) is finite for any atomic nu; atoms that discretize a non-regular family do not inherit its behaviour"
            .to_string(),
    ];
    let comes_down = if pfm_case == PfmCase::FinitePositive {
        notes.push(format!(
            "nu(P^f_m) = {pfm_weight} > 0: after the first dust-free event only finitely many types remain, \
             and extinction is claimed almost surely in that case; condition (i) is evaluated separately"
        ));
        ComesDown::ByFiniteTypes
    } else {
        match integral.verdict {
            Convergence::Converges => ComesDown::BySeries,
            Convergence::Diverges => ComesDown::No,
            Convergence::Inconclusive => ComesDown::Unknown,
        }
    };
    if series.tail_verdict != integral.verdict {
        notes.push(format!(
            "series ({}) and integral ({}) diagnostics disagree",
            series.tail_verdict, integral.verdict
        ));
    }
    let diagnosis = if !condition_i {
        notes.push("condition (i) fails: no immigration".to_string());
        Diagnosis::NotExtinct
    } else {
        match comes_down {
            ComesDown::BySeries | ComesDown::ByFiniteTypes => Diagnosis::Extinct,
            ComesDown::No => Diagnosis::NotExtinct,
            ComesDown::Unknown => Diagnosis::Inconclusive,
        }
    };
    Ok(CDIReport {
        condition_i,
        immigration_rate,
        regularity_r,
        regularity_finite: regularity_r.is_finite(),
        pfm_case,
        pfm_weight,
        fixation_bound: series.limit,
        series,
        integral,
        comes_down,
        diagnosis,
        notes,
    })
}

/// `f(0) - f(n) = sum_{k=1}^n 1/Phi(k)`.
pub fn finite_fixation_bound(measure: &CoagulationMeasure, n: usize) -> Result<f64> {
    if phi(measure, 1.0) <= 0.0 {
        return Err(Error::BoundUndefined(
            "Phi(1)=0: the series diverges and the distinguished block never absorbs".into(),
        ));
    }
    Ok((1..=n).rev().map(|k| 1.0 / phi(measure, k as f64)).sum())
}

/// Mean absorption time of the coalescent at each resolution in `ns`
/// against `sum_{k <= n} 1/Phi(k)`; pass iff `mean <= bound + 3 se`.
///
/// Runs are censored at `max_horizon_factor * 4 (1 + bound)`; any censored
/// run fails the report.
pub fn fixation_bound_check(
    measure: &CoagulationMeasure,
    ns: &[usize],
    replicates: usize,
    seed: u64,
    max_horizon_factor: f64,
) -> Result<Vec<ComparisonReport>> {
    let full = series_diagnostic(measure, 10_000);
    let mut out = Vec::with_capacity(ns.len());
    for (idx, &n) in ns.iter().enumerate() {
        let bound = finite_fixation_bound(measure, n)?;
        let cap = 4.0 * (1.0 + bound) * max_horizon_factor;
        let stream_seed = seed.wrapping_add(idx as u64);
        let times = run_replicates(stream_seed, replicates, |rng, _| {
            absorption_time_by_block_count(measure, n, cap, rng)
        })?;
        let censored = times.iter().filter(|t| t.is_none()).count();
        let xs: Vec<f64> = times.iter().map(|t| t.unwrap_or(cap)).collect();
        let m = mean_se(&xs);
        let mut report = ComparisonReport::moment(format!("fixation n={n}"), m.mean, m.se, bound, 0.0);
        report.verdict = Verdict::from_bool(censored == 0 && m.mean <= bound + SE_MULTIPLIER * m.se);
        let mut note = match full.limit {
            Some(f0) => format!("f(0) = {f0}"),
            None => "f(0) infinite".to_string(),
        };
        if censored > 0 {
            note.push_str(&format!(
                "; {censored} of {replicates} runs censored at horizon {cap}"
            ));
        }
        out.push(report.with_note(note));
    }
    Ok(out)
}

/// Monte Carlo estimate of `Phi(n)`: Kingman parts decrease the block count
/// by exactly one; each atom contributes its weight times the mean
/// decrease `n - #blocks` of an `s`-paint-box coloring of `n` items.
pub fn phi_decrease_oracle<R: Rng + ?Sized>(
    measure: &CoagulationMeasure,
    n: usize,
    samples: usize,
    rng: &mut R,
) -> MeanSe {
    let nf = n as f64;
    let mut mean = measure.c0() * nf + 0.5 * measure.c1() * nf * (nf - 1.0);
    let mut var = 0.0;
    for atom in measure.atoms() {
        let xs: Vec<f64> = (0..samples)
            .map(|_| {
                let pi = paintbox_sample(&atom.mass, n, rng);
                (n - (pi.num_blocks() - 1)) as f64
            })
            .collect();
        let m = mean_se(&xs);
        mean += atom.weight * m.mean;
        var += (atom.weight * m.se).powi(2);
    }
    MeanSe { mean, se: var.sqrt(), count: samples }
}

/// `n` log-spaced points on `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|k| (a + (b - a) * k as f64 / (n - 1) as f64).exp())
        .collect()
}

/// Largest concavity defect of `Psi(q)/q` on `grid`: the excess of a
/// chord slope over the preceding one, relative to the slopes' size.
pub fn psi_over_q_concavity_defect(measure: &CoagulationMeasure, grid: &[f64]) -> f64 {
    let g: Vec<f64> = grid.iter().map(|&q| psi(measure, q) / q).collect();
    let slopes: Vec<f64> = grid
        .windows(2)
        .zip(g.windows(2))
        .map(|(q, y)| (y[1] - y[0]) / (q[1] - q[0]))
        .collect();
    slopes
        .windows(2)
        .map(|s| (s[1] - s[0]) / s[0].abs().max(s[1].abs()).max(1.0))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Realized `(min, max)` of `Phi(q)/Psi(q)` on `grid`.
pub fn sandwich_constants(measure: &CoagulationMeasure, grid: &[f64]) -> (f64, f64) {
    grid.iter()
        .map(|&q| phi(measure, q) / psi(measure, q))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r), hi.max(r)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{AtomSpec, MeasureSpec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn build(c0: f64, c1: f64, atoms: &[(f64, f64, &[f64])]) -> CoagulationMeasure {
        MeasureSpec {
            c0,
            c1,
            atoms: atoms
                .iter()
                .map(|&(weight, s0, s)| AtomSpec { weight, s0, s: s.to_vec() })
                .collect(),
        }
        .build()
        .unwrap()
    }

    pub(crate) fn test_measures() -> Vec<CoagulationMeasure> {
        vec![
            build(1.0, 1.0, &[]),
            build(1.0, 0.0, &[]),
            build(0.0, 1.0, &[]),
            build(0.0, 0.0, &[(1.0, 0.0, &[0.5])]),
            build(0.5, 0.0, &[(2.0, 0.1, &[0.3, 0.2])]),
            build(0.3, 0.2, &[(1.0, 0.2, &[0.4, 0.1]), (0.5, 0.0, &[0.05])]),
            build(1.0, 0.0, &[(1.0, 0.3, &[0.7])]),
        ]
    }

    #[test]
    fn phi_examples() {
        let k = build(1.0, 1.0, &[]);
        assert_eq!(phi(&k, 3.0), 6.0);
        for q in [1.0, 2.0, 7.5] {
            assert!((phi(&k, q) - q * (q + 1.0) / 2.0).abs() < 1e-12);
        }
        // Phi(3) is the total rate times a unit decrease
        assert_eq!(phi(&k, 3.0), k.total_rate(3));
        let a = build(0.0, 0.0, &[(1.0, 0.0, &[0.5])]);
        assert!((phi(&a, 2.0) - 0.25).abs() < 1e-15);
        for mu in test_measures() {
            let expected = mu.c0() + mu.atoms().iter().map(|a| a.weight * a.mass.s0()).sum::<f64>();
            assert!((phi(&mu, 1.0) - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn psi_and_zeta_examples() {
        let k = build(1.0, 1.0, &[]);
        assert_eq!(psi(&k, 4.0), 4.0 + 8.0);
        assert_eq!(zeta(&k, 4.0), 8.0);
        let imm = build(1.0, 0.0, &[(1.0, 0.4, &[])]);
        assert_eq!(zeta(&imm, 10.0), 0.0);
        for mu in test_measures() {
            for q in log_grid(0.1, 1e6, 40) {
                assert!(zeta(&mu, q) <= psi(&mu, q));
            }
        }
    }

    #[test]
    fn monotone_on_grids() {
        for mu in test_measures() {
            let grid = log_grid(1.0, 1e6, 200);
            for f in [phi, psi, zeta] {
                let v: Vec<f64> = grid.iter().map(|&q| f(&mu, q)).collect();
                assert!(v.windows(2).all(|w| w[1] >= w[0]));
            }
        }
    }

    #[test]
    fn concavity_and_sandwich() {
        let grid = log_grid(2.0, 1e6, 300);
        for mu in test_measures() {
            assert!(psi_over_q_concavity_defect(&mu, &grid) <= 1e-12);
            let (lo, hi) = sandwich_constants(&mu, &grid);
            assert!(lo > 0.0 && hi.is_finite());
            assert!(lo >= 0.25 && hi <= 4.0, "{lo} {hi}");
        }
        // Kingman: Psi(q)/q is the line 1 + q/2
        let k = build(1.0, 1.0, &[]);
        assert!((psi(&k, 10.0) / 10.0 - 6.0).abs() < 1e-12);
    }

    #[test]
    fn series_examples() {
        let d = series_diagnostic(&build(1.0, 1.0, &[]), 1_000_000);
        assert_eq!(d.verdict, Convergence::Converges);
        assert!((d.limit.unwrap() - 2.0).abs() < 1e-6);
        let n: f64 = 1e6;
        assert!((d.tail_upper - 2.0 * (1.0 + 1.0 / n).ln()).abs() < 1e-12);
        assert!(d.tail_lower <= d.tail_upper);
        let d = series_diagnostic(&build(1.0, 0.0, &[]), 100_000);
        assert_eq!(d.verdict, Convergence::Diverges);
        assert!((d.partial_sum - (100_000f64.ln() + 0.5772156649)).abs() < 1e-4);
        let d = series_diagnostic(&build(0.0, 0.0, &[(1.0, 0.0, &[0.5])]), 10_000);
        assert_eq!(d.verdict, Convergence::Diverges);
        assert!(d.reason.unwrap().contains("Phi(1)=0"));
        let d = series_diagnostic(&build(0.5, 0.0, &[(2.0, 0.1, &[0.3, 0.2])]), 10_000);
        assert_eq!(d.verdict, Convergence::Diverges);
        let d = series_diagnostic(&build(0.0, 1.0, &[]), 10_000);
        assert_eq!(d.verdict, Convergence::Diverges);
        assert_eq!(d.tail_verdict, Convergence::Converges);
    }

    #[test]
    fn integral_examples() {
        let d = integral_diagnostic(&build(0.0, 1.0, &[]), 1.0, &DEFAULT_SWEEP).unwrap();
        assert_eq!(d.verdict, Convergence::Converges);
        assert!((d.estimate.unwrap() - 2.0).abs() < 1e-6);
        assert!((d.values[2] - 2.0 * (1.0 - 1e-6)).abs() < 1e-9);
        let d = integral_diagnostic(&build(0.0, 0.0, &[(1.0, 0.0, &[0.5, 0.2])]), 1.0, &DEFAULT_SWEEP).unwrap();
        assert_eq!(d.verdict, Convergence::Diverges);
        let d = integral_diagnostic(&build(1.0, 0.0, &[]), 1.0, &DEFAULT_SWEEP).unwrap();
        assert!(d.degenerate);
        assert!(d.reason.unwrap().contains("condition ii fails"));
    }

    #[test]
    fn series_and_integral_agree() {
        for mu in test_measures() {
            let r = classify_with(&mu, 10_000, 1.0, &DEFAULT_SWEEP).unwrap();
            assert_eq!(r.series.tail_verdict, r.integral.verdict, "{mu:?}");
        }
    }

    #[test]
    fn classification_examples() {
        let r = classify(&build(1.0, 1.0, &[])).unwrap();
        assert!(r.condition_i);
        assert_eq!(r.diagnosis, Diagnosis::Extinct);
        assert!((r.fixation_bound.unwrap() - 2.0).abs() < 1e-6);
        let r = classify(&build(0.0, 1.0, &[])).unwrap();
        assert!(!r.condition_i);
        assert_eq!(r.diagnosis, Diagnosis::NotExtinct);
        let r = classify(&build(1.0, 0.0, &[])).unwrap();
        assert_eq!(r.diagnosis, Diagnosis::NotExtinct);
        assert!(r.integral.degenerate);
        assert_eq!(r.pfm_case, PfmCase::NotApplicable);
        // dust-free atom
        let r = classify_with(&build(1.0, 0.0, &[(1.0, 0.3, &[0.7])]), 1000, 1.0, &DEFAULT_SWEEP).unwrap();
        assert_eq!(r.pfm_case, PfmCase::FinitePositive);
        assert_eq!(r.comes_down, ComesDown::ByFiniteTypes);
        assert_eq!(r.diagnosis, Diagnosis::Extinct);
        assert!((r.regularity_r - 1.0).abs() < 1e-12);
        let r = classify_with(&build(0.0, 0.0, &[(1.0, 0.0, &[0.7, 0.3])]), 1000, 1.0, &DEFAULT_SWEEP).unwrap();
        assert_eq!(r.diagnosis, Diagnosis::NotExtinct);
    }

    #[test]
    fn extinct_requires_condition_i_and_convergence() {
        for mu in test_measures() {
            let r = classify_with(&mu, 10_000, 1.0, &DEFAULT_SWEEP).unwrap();
            if r.diagnosis == Diagnosis::Extinct {
                assert!(r.condition_i);
                assert!(matches!(r.comes_down, ComesDown::BySeries | ComesDown::ByFiniteTypes));
            }
        }
    }

    #[test]
    fn phi_matches_decrease_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let mu = build(0.3, 0.2, &[(1.0, 0.2, &[0.4, 0.1]), (0.5, 0.0, &[0.05])]);
        for n in [2, 5, 10] {
            let m = phi_decrease_oracle(&mu, n, 20_000, &mut rng);
            assert!((m.mean - phi(&mu, n as f64)).abs() <= 4.0 * m.se, "n={n} {m:?}");
        }
    }

    #[test]
    fn fixation_examples() {
        let imm = build(1.0, 0.0, &[]);
        assert_eq!(finite_fixation_bound(&imm, 1).unwrap(), 1.0);
        let r = fixation_bound_check(&imm, &[1], 4000, 3, 100.0).unwrap();
        assert!(r[0].verdict.passed());
        assert!((r[0].estimate - 1.0).abs() <= 3.0 * r[0].se);
        let k = build(1.0, 1.0, &[]);
        let r = fixation_bound_check(&k, &[1, 4, 8], 2000, 4, 100.0).unwrap();
        assert!(r.iter().all(|x| x.verdict.passed() && x.exact <= 2.0));
        assert!(matches!(
            fixation_bound_check(&build(0.0, 1.0, &[]), &[2], 10, 0, 10.0),
            Err(Error::BoundUndefined(_))
        ));
    }
}
