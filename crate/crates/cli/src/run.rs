//! Experiment drivers. Every run is a pure function of its configuration:
//! replicate `r` of the `k`-th comparison draws from stream `r` of the
//! generator seeded with `seed + k`.

use gfvi_core::cdi::{self, classify_with, fixation_bound_check};
use gfvi_core::coalescent::{simulate_events, Direction};
use gfvi_core::exact::{DualEngine, PartitionSpace};
use gfvi_core::gfvi::{assign_types, population_path};
use gfvi_core::harness::{self, ComparisonReport, DEFAULT_N_PARTICLES};
use gfvi_core::rng::run_replicates;
use gfvi_core::stats::mean_se;
use gfvi_core::{AtomicMeasure, CoagulationMeasure, DistinguishedPartition, Factor, MomentFunctional};

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::error::CliError;
use crate::report::{params, tally, Row, RunOutput, Summary};

/// Horizon cap of the fixation check, as a multiple of the initial horizon.
const FIXATION_HORIZON_FACTOR: f64 = 1e3;

struct Context<'a> {
    config: &'a ExperimentConfig,
    kind: ExperimentKind,
    seed: u64,
    measure: CoagulationMeasure,
}

struct Partial {
    rows: Vec<Row>,
    reports: Vec<ComparisonReport>,
    notes: Vec<String>,
    details: Option<toml::Table>,
    artifacts: Vec<(String, String)>,
}

impl Partial {
    fn new() -> Self {
        Self {
            rows: Vec::new(),
            reports: Vec::new(),
            notes: Vec::new(),
            details: None,
            artifacts: Vec::new(),
        }
    }

    fn push_report(&mut self, kind: ExperimentKind, parameters: String, report: ComparisonReport) {
        self.rows.push(Row::from_report(kind.name(), parameters, &report));
        self.reports.push(report);
    }
}

pub fn run(config: &ExperimentConfig) -> Result<RunOutput, CliError> {
    config.validate()?;
    let kind = config.experiment.expect("validated");
    let ctx = Context {
        config,
        kind,
        seed: config.seed.expect("validated"),
        measure: config.measure.build()?,
    };
    let partial = match kind {
        ExperimentKind::SimulateCoalescent => simulate_coalescent(&ctx)?,
        ExperimentKind::SimulateGfvi => simulate_gfvi(&ctx)?,
        ExperimentKind::DualityCheck => duality_check(&ctx)?,
        ExperimentKind::MarginalCheck => marginal_check(&ctx)?,
        ExperimentKind::CdiReport => cdi_report(&ctx)?,
        ExperimentKind::RatesTable => rates_table(&ctx)?,
    };
    let (passed, failed, verdict) = tally(&partial.rows);
    Ok(RunOutput {
        summary: Summary {
            experiment: kind.name().to_string(),
            seed: ctx.seed,
            replicates: config.replicates,
            rows: partial.rows.len(),
            passed,
            failed,
            verdict,
            notes: partial.notes,
            details: partial.details,
            reports: partial.reports,
        },
        rows: partial.rows,
        artifacts: partial.artifacts,
    })
}

fn sorted_times(config: &ExperimentConfig) -> Vec<f64> {
    let mut times = config.times.clone();
    times.sort_by(f64::total_cmp);
    times.dedup();
    times
}

fn csv_string(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| CliError::Config(format!("csv: {e}"));
    w.write_record(header).map_err(err)?;
    for r in rows {
        w.write_record(r).map_err(err)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Config(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("utf-8"))
}

/// Block counts of the backward and forward folds on a time grid, against
/// the exact mean block count of the restricted chain when `n` is small.
fn simulate_coalescent(ctx: &Context) -> Result<Partial, CliError> {
    let n = ctx.config.n.expect("validated");
    let times = sorted_times(ctx.config);
    let horizon = *times.last().unwrap();
    let measure = &ctx.measure;
    let counts = run_replicates(ctx.seed, ctx.config.replicates, |rng, _| {
        let log = simulate_events(measure, n, horizon, rng)?;
        times
            .iter()
            .map(|&t| {
                Ok((
                    log.backward_state(t)?.num_blocks() as f64,
                    log.forward_state(t)?.num_blocks() as f64,
                ))
            })
            .collect::<gfvi_core::Result<Vec<_>>>()
    })?;
    let engine = if n <= gfvi_core::exact::MAX_EXACT_RESOLUTION {
        Some(DualEngine::new(measure, n)?)
    } else {
        None
    };
    let mut out = Partial::new();
    if engine.is_none() {
        out.notes.push(format!("n = {n} is above the exact-enumeration cap; no reference values"));
    }
    for (k, &t) in times.iter().enumerate() {
        let exact = match &engine {
            Some(e) => Some(
                e.marginal_law(t)?
                    .iter()
                    .zip(e.space().states())
                    .map(|(p, s)| p * s.num_blocks() as f64)
                    .sum::<f64>(),
            ),
            None => None,
        };
        for (dir, name) in [(0, "backward"), (1, "forward")] {
            let xs: Vec<f64> = counts.iter().map(|c| if dir == 0 { c[k].0 } else { c[k].1 }).collect();
            let m = mean_se(&xs);
            let p = params(&[("n", n.to_string()), ("t", t.to_string()), ("fold", name.to_string())]);
            match exact {
                Some(e) => out.push_report(
                    ctx.kind,
                    p,
                    ComparisonReport::moment(format!("{name} blocks t={t}"), m.mean, m.se, e, 0.0),
                ),
                None => {
                    let mut row = Row::value(ctx.kind.name(), p, m.mean);
                    row.se = Some(m.se);
                    out.rows.push(row);
                }
            }
        }
    }
    // one plot-ready path
    let log = simulate_events(measure, n, horizon, &mut gfvi_core::rng::replicate_rng(ctx.seed, 0))?;
    let back = log.trajectory(Direction::Backward)?;
    let fwd = log.trajectory(Direction::Forward)?;
    let lines = back
        .times
        .iter()
        .zip(back.block_counts())
        .zip(fwd.block_counts())
        .map(|((t, b), f)| vec![t.to_string(), b.to_string(), f.to_string()]);
    out.artifacts.push((
        "trajectory.csv".into(),
        csv_string(&["time", "backward_blocks", "forward_blocks"], lines)?,
    ));
    Ok(out)
}

fn indicator_at_zero() -> MomentFunctional {
    MomentFunctional::new(vec![Factor::Indicator(vec![0.0])]).expect("arity 1")
}

/// Immigrant mass and moments of the empirical type law on a time grid,
/// with exact values from the dual chain where they exist.
fn simulate_gfvi(ctx: &Context) -> Result<Partial, CliError> {
    let n = ctx.config.n.expect("validated");
    let times = sorted_times(ctx.config);
    let law = ctx.config.initial_law.clone().expect("validated");
    let rho = law.as_atomic()?;
    let functionals = ctx
        .config
        .functionals
        .iter()
        .map(|f| f.functional())
        .collect::<Result<Vec<_>, _>>()?;
    let measure = &ctx.measure;
    let immigrant = indicator_at_zero();
    let per_rep = run_replicates(ctx.seed, ctx.config.replicates, |rng, _| {
        let types = assign_types(n, &law, rng)?;
        let path = population_path(measure, &types, &times, rng)?;
        Ok(path
            .iter()
            .map(|v| {
                let mut vals = vec![v.iter().filter(|&&x| x == 0.0).count() as f64 / n as f64];
                for f in &functionals {
                    vals.push(
                        f.factors()
                            .iter()
                            .map(|g| v.iter().map(|&x| g.eval(x)).sum::<f64>() / n as f64)
                            .product(),
                    );
                }
                vals
            })
            .collect::<Vec<_>>())
    })?;
    let mut out = Partial::new();
    // the immigrant mass does not depend on rho as long as rho avoids 0
    let any_rho = AtomicMeasure::dirac(1.0)?;
    let mass_engine = DualEngine::new(measure, 1)?;
    let engines = functionals
        .iter()
        .map(|f| DualEngine::new(measure, f.arity()))
        .collect::<gfvi_core::Result<Vec<_>>>()?;
    for (k, &t) in times.iter().enumerate() {
        let column = |j: usize| per_rep.iter().map(|r| r[k][j]).collect::<Vec<f64>>();
        let m = mean_se(&column(0));
        let exact = mass_engine.dual_expectation(&DistinguishedPartition::singletons(1), &any_rho, &immigrant, t)?;
        let allowance = harness::BIAS_CONSTANT / n as f64;
        out.push_report(
            ctx.kind,
            params(&[("n", n.to_string()), ("t", t.to_string()), ("f", immigrant.to_string())]),
            ComparisonReport::moment(format!("immigrant mass t={t}"), m.mean, m.se, exact, allowance),
        );
        for (j, f) in functionals.iter().enumerate() {
            let m = mean_se(&column(j + 1));
            let p = params(&[("n", n.to_string()), ("t", t.to_string()), ("f", f.to_string())]);
            match &rho {
                Some(rho) => {
                    let pi = DistinguishedPartition::singletons(f.arity());
                    let exact = engines[j].dual_expectation(&pi, rho, f, t)?;
                    let allowance = harness::BIAS_CONSTANT * (f.arity() * f.arity()) as f64 / n as f64;
                    out.push_report(
                        ctx.kind,
                        p,
                        ComparisonReport::moment(format!("moment f={f} t={t}"), m.mean, m.se, exact, allowance),
                    );
                }
                None => {
                    let mut row = Row::value(ctx.kind.name(), p, m.mean);
                    row.se = Some(m.se);
                    out.rows.push(row);
                }
            }
        }
    }
    if rho.is_none() && !functionals.is_empty() {
        out.notes.push("initial law is not atomic: moments reported without exact values".into());
    }
    let first = &per_rep[0];
    let lines = times
        .iter()
        .zip(first)
        .map(|(t, vals)| vec![t.to_string(), vals[0].to_string()]);
    out.artifacts.push(("population.csv".into(), csv_string(&["time", "immigrant_fraction"], lines)?));
    Ok(out)
}

/// One duality comparison per `(t, f, pi)`.
fn duality_check(ctx: &Context) -> Result<Partial, CliError> {
    let n = ctx.config.n.unwrap_or(DEFAULT_N_PARTICLES);
    let rho = ctx
        .config
        .initial_law
        .as_ref()
        .and_then(|l| l.as_atomic().transpose())
        .transpose()?
        .expect("validated discrete law");
    let mut out = Partial::new();
    let mut k = 0u64;
    for &t in &sorted_times(ctx.config) {
        for spec in &ctx.config.functionals {
            let f = spec.functional()?;
            let pi = spec.start_partition()?;
            let report = harness::duality_moment_test(
                &ctx.measure,
                &rho,
                &f,
                &pi,
                t,
                n,
                ctx.config.replicates,
                ctx.seed.wrapping_add(k),
            )?;
            k += 1;
            let p = params(&[("n", n.to_string()), ("t", t.to_string()), ("f", f.to_string()), ("pi", pi.to_string())]);
            out.push_report(ctx.kind, p, report);
        }
    }
    Ok(out)
}

fn marginal_check(ctx: &Context) -> Result<Partial, CliError> {
    let p = ctx.config.p.expect("validated");
    let n_sim = ctx.config.n.unwrap_or(p);
    let mut out = Partial::new();
    for (k, &t) in sorted_times(ctx.config).iter().enumerate() {
        let report = harness::marginal_test_at(
            &ctx.measure,
            p,
            n_sim,
            t,
            ctx.config.replicates,
            ctx.seed.wrapping_add(k as u64),
        )?;
        if let Some(note) = &report.note {
            out.notes.push(format!("t={t}: {note}"));
        }
        let params = params(&[("p", p.to_string()), ("n", n_sim.to_string()), ("t", t.to_string())]);
        out.push_report(ctx.kind, params, report);
    }
    Ok(out)
}

fn cdi_report(ctx: &Context) -> Result<Partial, CliError> {
    let terms = ctx.config.series_terms.unwrap_or(cdi::DEFAULT_SERIES_TERMS);
    let report = classify_with(&ctx.measure, terms, 1.0, &cdi::DEFAULT_SWEEP)?;
    let mut out = Partial::new();
    let series_value = report.series.limit.unwrap_or(report.series.partial_sum);
    let mut row = Row::value(
        ctx.kind.name(),
        params(&[("quantity", "series".into()), ("terms", terms.to_string()), ("verdict", report.series.verdict.to_string())]),
        series_value,
    );
    row.se = Some(0.5 * (report.series.tail_upper - report.series.tail_lower));
    out.rows.push(row);
    out.rows.push(Row::value(
        ctx.kind.name(),
        params(&[("quantity", "integral".into()), ("a", "1".into()), ("verdict", report.integral.verdict.to_string())]),
        report.integral.estimate.unwrap_or(f64::INFINITY),
    ));
    if !ctx.config.resolutions.is_empty() {
        let checks = fixation_bound_check(
            &ctx.measure,
            &ctx.config.resolutions,
            ctx.config.replicates,
            ctx.seed,
            FIXATION_HORIZON_FACTOR,
        )?;
        for (n, r) in ctx.config.resolutions.iter().zip(checks) {
            out.push_report(ctx.kind, params(&[("quantity", "fixation".into()), ("n", n.to_string())]), r);
        }
    }
    out.notes = report.notes.clone();
    let mut details = toml::Table::try_from(&report).map_err(|e| CliError::Config(e.to_string()))?;
    details.remove("notes");
    out.details = Some(details);
    Ok(out)
}

/// `q_pi` for every non-trivial `pi` in `P0_n`, and their sum against the
/// total rate.
fn rates_table(ctx: &Context) -> Result<Partial, CliError> {
    let n = ctx.config.n.expect("validated");
    let space = PartitionSpace::enumerate(n)?;
    let mut out = Partial::new();
    let mut total = 0.0;
    for pi in space.states().iter().filter(|p| !p.is_singletons()) {
        let q = ctx.measure.jump_rate(pi)?;
        total += q;
        out.rows.push(Row::value(ctx.kind.name(), params(&[("n", n.to_string()), ("pi", pi.to_string())]), q));
    }
    let lambda = ctx.measure.total_rate(n);
    let report = ComparisonReport::moment("total rate", total, 0.0, lambda, 1e-12 * lambda.max(1.0));
    out.push_report(ctx.kind, params(&[("n", n.to_string()), ("pi", "total".into())]), report);
    Ok(out)
}
