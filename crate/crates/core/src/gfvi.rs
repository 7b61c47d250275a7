//! Typed lookdown populations.
//!
//! Individual `k` at time `t` carries the type `U[alpha(Pi_hat(t), k)]` of
//! its ancestor at time 0, where `U[0] = 0` is the immigrant type. The
//! empirical type law of the `n` individuals is the resolution-`n` picture of
//! the GFVI process `Z_t`.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::coalescent::EventLog;
use crate::error::{Error, Result};
use crate::functional::MomentFunctional;
use crate::law::{AtomicMeasure, EmpiricalMeasure};
use crate::measure::CoagulationMeasure;
use crate::partition::{paintbox_sample, DistinguishedPartition, MassPartition};
use crate::stats;

/// Law of the initial types `U_1, ..., U_n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InitialLaw {
    /// i.i.d. from finitely many `(value, weight)` atoms in `(0, 1]`.
    Discrete { atoms: Vec<(f64, f64)> },
    /// i.i.d. uniform on `(0, 1]`.
    Uniform,
    /// `U_i = i / (n + 1)`, so that types name lineages.
    DistinctLabels,
}

impl InitialLaw {
    pub fn dirac(x: f64) -> Self {
        InitialLaw::Discrete { atoms: vec![(x, 1.0)] }
    }

    /// The law as an atomic measure, when it is one.
    pub fn as_atomic(&self) -> Result<Option<AtomicMeasure>> {
        match self {
            InitialLaw::Discrete { atoms } => {
                let mu = AtomicMeasure::new(atoms)?;
                if !mu.avoids_immigrant_type() {
                    return Err(Error::InvalidArgument(
                        "initial type 0 is reserved for the immigrant".into(),
                    ));
                }
                Ok(Some(mu))
            }
            _ => Ok(None),
        }
    }
}

/// Types of individuals `0..=n`, with `U[0] = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct TypeAssignment {
    types: Vec<f64>,
}

impl TypeAssignment {
    pub fn new(types: Vec<f64>) -> Result<Self> {
        if types.first() != Some(&0.0) {
            return Err(Error::InvalidArgument("U[0] must be the immigrant type 0".into()));
        }
        if let Some(x) = types[1..].iter().find(|x| !(**x > 0.0 && **x <= 1.0)) {
            return Err(Error::InvalidArgument(format!("initial type {x} outside (0, 1]")));
        }
        Ok(Self { types })
    }

    pub fn n(&self) -> usize {
        self.types.len() - 1
    }

    pub fn types(&self) -> &[f64] {
        &self.types
    }
}

pub fn assign_types<R: Rng + ?Sized>(n: usize, law: &InitialLaw, rng: &mut R) -> Result<TypeAssignment> {
    let mut types = Vec::with_capacity(n + 1);
    types.push(0.0);
    match law {
        InitialLaw::Discrete { .. } => {
            let mu = law.as_atomic()?.expect("discrete law");
            let values: Vec<f64> = mu.atoms().iter().map(|a| a.0).collect();
            let index = WeightedIndex::new(mu.atoms().iter().map(|a| a.1))
                .map_err(|e| Error::InvalidArgument(e.to_string()))?;
            types.extend((0..n).map(|_| values[index.sample(rng)]));
        }
        // 1 - [0, 1) is (0, 1]
        InitialLaw::Uniform => types.extend((0..n).map(|_| 1.0 - rng.random::<f64>())),
        InitialLaw::DistinctLabels => {
            types.extend((1..=n).map(|i| i as f64 / (n + 1) as f64))
        }
    }
    Ok(TypeAssignment { types })
}

/// Types of individuals `1..=n` at time `t`; entry `k - 1` is individual `k`.
pub fn types_at(log: &EventLog, types: &TypeAssignment, t: f64) -> Result<Vec<f64>> {
    if types.n() != log.resolution() {
        return Err(Error::InvalidArgument(format!(
            "{} types for a log of resolution {}",
            types.n(),
            log.resolution()
        )));
    }
    let state = log.forward_state(t)?;
    Ok(compose_types(&state, types.types()))
}

/// `(U[alpha_pi(k)])_{k = 1..n}`.
pub fn compose_types(pi: &DistinguishedPartition, u: &[f64]) -> Vec<f64> {
    pi.assignment()[1..].iter().map(|&a| u[a]).collect()
}

/// Same law and same random stream as `simulate_events` at resolution
/// `types.n()` followed by [`types_at`], without storing the events.
pub fn population_at<R: Rng + ?Sized>(
    measure: &CoagulationMeasure,
    types: &TypeAssignment,
    t: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if !t.is_finite() || t < 0.0 {
        return Err(Error::InvalidArgument(format!("time {t} must be finite and >= 0")));
    }
    let sampler = measure.sampler(types.n());
    let mut v = types.types().to_vec();
    if sampler.total_rate() > 0.0 {
        let mut now = 0.0;
        loop {
            let (dt, merger) = sampler.sample(rng)?;
            now += dt;
            if now > t {
                break;
            }
            merger.apply_to_types(&mut v);
        }
    }
    v.remove(0);
    Ok(v)
}

/// Populations at each of the increasing `times` along one path; the
/// stream is consumed as by [`population_at`] at the last time.
pub fn population_path<R: Rng + ?Sized>(
    measure: &CoagulationMeasure,
    types: &TypeAssignment,
    times: &[f64],
    rng: &mut R,
) -> Result<Vec<Vec<f64>>> {
    if times.iter().any(|t| !t.is_finite() || *t < 0.0) || times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidArgument("times must be finite, >= 0 and nondecreasing".into()));
    }
    let sampler = measure.sampler(types.n());
    let mut v = types.types().to_vec();
    let mut out = Vec::with_capacity(times.len());
    let mut pending = times.iter().peekable();
    let mut now = 0.0;
    if sampler.total_rate() > 0.0 && !times.is_empty() {
        let horizon = *times.last().unwrap();
        loop {
            let (dt, merger) = sampler.sample(rng)?;
            now += dt;
            while pending.next_if(|&&t| t < now).is_some() {
                out.push(v[1..].to_vec());
            }
            if now > horizon {
                break;
            }
            merger.apply_to_types(&mut v);
        }
    }
    while pending.next().is_some() {
        out.push(v[1..].to_vec());
    }
    Ok(out)
}

pub fn empirical_measure(v: &[f64]) -> Result<EmpiricalMeasure> {
    AtomicMeasure::empirical(v)
}

/// How to evaluate `G_f` at an empirical measure.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MomentMethod {
    /// Product of the factor averages; exact for product-form `f`.
    Exact,
    /// Average of `f` over this many `p`-tuples drawn with replacement.
    MonteCarlo { samples: usize },
}

/// `G_f` of the empirical type law of `v`.
pub fn empirical_moment<R: Rng + ?Sized>(
    v: &[f64],
    f: &MomentFunctional,
    method: MomentMethod,
    rng: &mut R,
) -> Result<f64> {
    if v.is_empty() {
        return Err(Error::InvalidArgument("empty population".into()));
    }
    if f.arity() > v.len() {
        return Err(Error::InvalidArgument(format!(
            "arity {} exceeds population size {}",
            f.arity(),
            v.len()
        )));
    }
    let n = v.len() as f64;
    Ok(match method {
        MomentMethod::Exact => f
            .factors()
            .iter()
            .map(|g| v.iter().map(|&x| g.eval(x)).sum::<f64>() / n)
            .product(),
        MomentMethod::MonteCarlo { samples } => {
            if samples == 0 {
                return Err(Error::InvalidArgument("zero Monte Carlo samples".into()));
            }
            let mut x = vec![0.0; f.arity()];
            let mut sum = 0.0;
            for _ in 0..samples {
                for xi in x.iter_mut() {
                    *xi = v[rng.random_range(0..v.len())];
                }
                sum += f.eval(&x);
            }
            sum / samples as f64
        }
    })
}

/// Kolmogorov-Smirnov distance between the composed types
/// `(U[alpha_pi(k)])_{k <= n}`, with `pi` an `s`-paint-box and `U` i.i.d.
/// uniform, and the mixture predicted from the same realization: dust mass
/// on the uniform law, each non-singleton block at its ancestor's type, the
/// immigrant block at 0.
pub fn paintbox_type_ks<R: Rng + ?Sized>(s: &MassPartition, n: usize, rng: &mut R) -> Result<f64> {
    let pi = paintbox_sample(s, n, rng);
    let u = assign_types(n, &InitialLaw::Uniform, rng)?;
    let v = compose_types(&pi, u.types());
    let nf = n as f64;
    let sizes = pi.block_sizes();
    let mut atoms = vec![(0.0, (sizes[0] - 1) as f64 / nf)];
    let mut dust = 0.0;
    for (b, &size) in sizes.iter().enumerate().skip(1) {
        if size > 1 {
            atoms.push((u.types()[b], size as f64 / nf));
        } else {
            dust += 1.0 / nf;
        }
    }
    Ok(stats::ks_uniform_mixture(&v, dust, &atoms))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coalescent::{simulate_events, Direction, Event};
    use crate::functional::Factor;
    use crate::measure::{AtomSpec, MeasureSpec};
    use crate::partition::tests::p;
    use crate::stats::{ks_uniform_mixture, mean_se};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn identity() -> MomentFunctional {
        MomentFunctional::coordinate_product(1).unwrap()
    }

    #[test]
    fn initial_laws() {
        let u = assign_types(3, &InitialLaw::DistinctLabels, &mut rng(0)).unwrap();
        assert_eq!(u.types(), &[0.0, 0.25, 0.5, 0.75]);
        let u = assign_types(5, &InitialLaw::dirac(1.0), &mut rng(0)).unwrap();
        assert_eq!(u.types(), &[0.0, 1.0, 1.0, 1.0, 1.0, 1.0]);
        assert!(assign_types(2, &InitialLaw::dirac(0.0), &mut rng(0)).is_err());
        assert!(TypeAssignment::new(vec![0.5, 0.5]).is_err());
        let u = assign_types(10_000, &InitialLaw::Uniform, &mut rng(4)).unwrap();
        assert!(u.types()[1..].iter().all(|&x| x > 0.0 && x <= 1.0));
        // 99.9% critical value of the one-sample KS statistic is about 1.95/sqrt(n)
        assert!(ks_uniform_mixture(&u.types()[1..], 1.0, &[]) < 1.95 / 100.0);
    }

    #[test]
    fn types_follow_the_forward_partition() {
        let u = assign_types(3, &InitialLaw::DistinctLabels, &mut rng(0)).unwrap();
        let log = EventLog::from_events(
            3,
            1.0,
            vec![Event { time: 0.5, partition: p(&[&[0, 2], &[1], &[3]]) }],
        )
        .unwrap();
        assert_eq!(types_at(&log, &u, 0.2).unwrap(), vec![0.25, 0.5, 0.75]);
        assert_eq!(types_at(&log, &u, 1.0).unwrap(), vec![0.25, 0.0, 0.5]);
        let absorbed = EventLog::from_events(
            3,
            1.0,
            vec![Event { time: 0.5, partition: DistinguishedPartition::single_block(3) }],
        )
        .unwrap();
        assert_eq!(types_at(&absorbed, &u, 1.0).unwrap(), vec![0.0; 3]);
    }

    fn mixed() -> CoagulationMeasure {
        MeasureSpec {
            c0: 0.7,
            c1: 0.5,
            atoms: vec![AtomSpec { weight: 1.0, s0: 0.1, s: vec![0.5, 0.2] }],
        }
        .build()
        .unwrap()
    }

    #[test]
    fn streaming_matches_stored_log() {
        let mu = mixed();
        for seed in 0..20 {
            let u = assign_types(12, &InitialLaw::DistinctLabels, &mut rng(0)).unwrap();
            let log = simulate_events(&mu, 12, 1.5, &mut rng(seed)).unwrap();
            let stored = types_at(&log, &u, 1.5).unwrap();
            let streamed = population_at(&mu, &u, 1.5, &mut rng(seed)).unwrap();
            assert_eq!(stored, streamed);
        }
    }

    #[test]
    fn path_matches_single_times() {
        let mu = mixed();
        let u = assign_types(15, &InitialLaw::Uniform, &mut rng(1)).unwrap();
        let times = [0.0, 0.3, 0.3, 1.0, 2.5];
        for seed in 0..10 {
            let path = population_path(&mu, &u, &times, &mut rng(seed)).unwrap();
            let log = simulate_events(&mu, 15, 2.5, &mut rng(seed)).unwrap();
            for (t, v) in times.iter().zip(&path) {
                assert_eq!(v, &types_at(&log, &u, *t).unwrap());
            }
            let last = population_at(&mu, &u, 2.5, &mut rng(seed)).unwrap();
            assert_eq!(&last, path.last().unwrap());
        }
        assert!(population_path(&mu, &u, &[1.0, 0.5], &mut rng(0)).is_err());
    }

    #[test]
    fn immigrant_type_marks_immigrant_descent() {
        let mu = mixed();
        let mut r = rng(2);
        for _ in 0..50 {
            let u = assign_types(20, &InitialLaw::Uniform, &mut r).unwrap();
            let log = simulate_events(&mu, 20, 2.0, &mut r).unwrap();
            let last = log.forward_state(2.0).unwrap();
            let v = compose_types(&last, u.types());
            for k in 1..=20 {
                assert_eq!(v[k - 1] == 0.0, last.alpha(k) == 0);
            }
            // the distinguished block of the coalescent only grows
            let sizes: Vec<usize> = log
                .trajectory(Direction::Backward)
                .unwrap()
                .states
                .iter()
                .map(|s| s.block_sizes()[0])
                .collect();
            assert!(sizes.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn immigrant_fraction_grows_in_law() {
        // at finite n a pair event can push the last immigrant type off the
        // top level, so monotonicity holds for the mean only
        let mu = mixed();
        let n = 10;
        let times = [0.0, 0.25, 0.5, 1.0, 2.0];
        let fractions = crate::rng::run_replicates(8, 20_000, |r, _| {
            let u = assign_types(n, &InitialLaw::Uniform, r)?;
            let log = simulate_events(&mu, n, 2.0, r)?;
            times
                .iter()
                .map(|&t| {
                    let v = types_at(&log, &u, t)?;
                    Ok(v.iter().filter(|&&x| x == 0.0).count() as f64 / n as f64)
                })
                .collect::<Result<Vec<f64>>>()
        })
        .unwrap();
        for w in 0..times.len() - 1 {
            let diff: Vec<f64> = fractions.iter().map(|f| f[w + 1] - f[w]).collect();
            let d = mean_se(&diff);
            assert!(d.mean > -3.0 * d.se, "{w}: {d:?}");
        }
    }

    #[test]
    fn moments_of_trivial_populations() {
        let mut r = rng(0);
        let one = MomentFunctional::constant_one(2).unwrap();
        assert_eq!(empirical_moment(&[0.3, 0.6], &one, MomentMethod::Exact, &mut r).unwrap(), 1.0);
        let mc = MomentMethod::MonteCarlo { samples: 100 };
        assert_eq!(empirical_moment(&[0.3, 0.6], &one, mc, &mut r).unwrap(), 1.0);
        assert_eq!(empirical_moment(&[0.0; 4], &identity(), MomentMethod::Exact, &mut r).unwrap(), 0.0);
        let f = MomentFunctional::new(vec![Factor::Polynomial(vec![0.0, 1.0]), Factor::Polynomial(vec![1.0, 1.0])]).unwrap();
        let v = [0.2, 0.4, 0.9];
        let exact = empirical_moment(&v, &f, MomentMethod::Exact, &mut r).unwrap();
        let mut brute = 0.0;
        for &a in &v {
            for &b in &v {
                brute += f.eval(&[a, b]) / 9.0;
            }
        }
        assert!((exact - brute).abs() < 1e-14);
        let est = empirical_moment(&v, &f, MomentMethod::MonteCarlo { samples: 200_000 }, &mut r).unwrap();
        assert!((est - exact).abs() < 0.01);
    }

    #[test]
    fn immigrant_takeover_of_first_moment() {
        // c0 = 1, types all 1: E <id, Z_t> = exp(-t)
        let mu = CoagulationMeasure::kingman(1.0, 0.0).unwrap();
        let n = 1000;
        let u = assign_types(n, &InitialLaw::dirac(1.0), &mut rng(0)).unwrap();
        let xs = crate::rng::run_replicates(17, 2000, |r, _| {
            let v = population_at(&mu, &u, 1.0, r)?;
            empirical_moment(&v, &identity(), MomentMethod::Exact, r)
        })
        .unwrap();
        let m = mean_se(&xs);
        let exact = (-1.0f64).exp();
        assert!((m.mean - exact).abs() <= 3.0 * m.se + 2.0 / n as f64, "{m:?}");
    }

    #[test]
    fn levels_are_exchangeable_in_law() {
        let mu = mixed();
        let n = 30;
        let law = InitialLaw::Discrete { atoms: vec![(0.3, 1.0), (1.0, 1.0)] };
        let pairs = crate::rng::run_replicates(5, 20_000, |r, _| {
            let u = assign_types(n, &law, r)?;
            let v = population_at(&mu, &u, 0.8, r)?;
            Ok((v[0] * v[1], v[n - 1] * v[n / 2]))
        })
        .unwrap();
        let diff: Vec<f64> = pairs.iter().map(|(a, b)| a - b).collect();
        let d = mean_se(&diff);
        assert!(d.mean.abs() <= 4.0 * d.se, "{d:?}");
    }

    #[test]
    fn composed_types_match_the_de_finetti_mixture() {
        let s = MassPartition::new(0.2, vec![0.3, 0.1]).unwrap();
        let mut r = rng(11);
        let passes = (0..5)
            .filter(|_| paintbox_type_ks(&s, 10_000, &mut r).unwrap() <= 0.05)
            .count();
        assert!(passes >= 4);
    }
}
