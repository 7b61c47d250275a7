//! Coagulation measures `(c0, c1, nu)` with finitely many atoms in `nu`,
//! their jump rates on `{0,...,n}`, and exact event sampling.

use std::fmt;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_distr::Exp;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::partition::{paintbox_prob, paintbox_sample, DistinguishedPartition, MassPartition};

/// Maximum paint-box draws when sampling a non-trivial atom event.
pub const REJECTION_CAP: usize = 1_000_000;

/// Raw, unvalidated description of a coagulation measure, as found in
/// configuration files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureSpec {
    #[serde(default)]
    pub c0: f64,
    #[serde(default)]
    pub c1: f64,
    #[serde(default)]
    pub atoms: Vec<AtomSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomSpec {
    pub weight: f64,
    #[serde(default)]
    pub s0: f64,
    #[serde(default)]
    pub s: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    NegativeRate { name: &'static str, value: f64 },
    NonPositiveWeight { atom: usize, weight: f64 },
    NegativeMass { atom: usize },
    UnsortedMasses { atom: usize },
    MassExceedsOne { atom: usize, total: f64 },
    TrivialAtom { atom: usize },
    TooManyColors { atom: usize, colors: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NegativeRate { name, value } => {
                write!(f, "{name} = {value} must be finite and nonnegative")
            }
            Violation::NonPositiveWeight { atom, weight } => {
                write!(f, "atom {atom}: weight {weight} must be finite and positive")
            }
            Violation::NegativeMass { atom } => {
                write!(f, "atom {atom}: masses must be finite and nonnegative")
            }
            Violation::UnsortedMasses { atom } => {
                write!(f, "atom {atom}: masses s1, s2, ... must be nonincreasing")
            }
            Violation::MassExceedsOne { atom, total } => {
                write!(f, "atom {atom}: total mass {total} exceeds 1")
            }
            Violation::TrivialAtom { atom } => {
                write!(f, "atom {atom}: trivial atom charges the singleton partition")
            }
            Violation::TooManyColors { atom, colors } => {
                write!(f, "atom {atom}: {colors} colors exceeds the supported maximum")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Diagnostics {
    pub violations: Vec<Violation>,
    /// `sum_k w_k (s0 + sum_i s_i^2)` over the atoms that could be read.
    pub integral: f64,
}

impl Diagnostics {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl MeasureSpec {
    /// Checks every constraint and collects all violations; never fails.
    pub fn validate(&self) -> Diagnostics {
        let mut violations = Vec::new();
        for (name, value) in [("c0", self.c0), ("c1", self.c1)] {
            if !value.is_finite() || value < 0.0 {
                violations.push(Violation::NegativeRate { name, value });
            }
        }
        let mut integral = 0.0;
        for (k, atom) in self.atoms.iter().enumerate() {
            if !atom.weight.is_finite() || atom.weight <= 0.0 {
                violations.push(Violation::NonPositiveWeight { atom: k, weight: atom.weight });
            }
            let masses = std::iter::once(&atom.s0).chain(&atom.s);
            if masses.clone().any(|x| !x.is_finite() || *x < 0.0) {
                violations.push(Violation::NegativeMass { atom: k });
                continue;
            }
            if atom.s.windows(2).any(|w| w[0] < w[1]) {
                violations.push(Violation::UnsortedMasses { atom: k });
            }
            let total: f64 = masses.sum();
            if total > 1.0 + 1e-12 {
                violations.push(Violation::MassExceedsOne { atom: k, total });
            }
            if atom.s0 == 0.0 && atom.s.iter().all(|&x| x == 0.0) {
                violations.push(Violation::TrivialAtom { atom: k });
            }
            if atom.s.len() > crate::partition::MAX_COLORS {
                violations.push(Violation::TooManyColors { atom: k, colors: atom.s.len() });
            }
            if atom.weight.is_finite() {
                integral += atom.weight * (atom.s0 + atom.s.iter().map(|x| x * x).sum::<f64>());
            }
        }
        Diagnostics { violations, integral }
    }

    pub fn build(&self) -> Result<CoagulationMeasure> {
        let diagnostics = self.validate();
        if !diagnostics.is_valid() {
            return Err(Error::InvalidMeasure(diagnostics.violations));
        }
        let atoms = self
            .atoms
            .iter()
            .map(|a| {
                Ok(Atom {
                    weight: a.weight,
                    mass: MassPartition::new(a.s0, a.s.clone())?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(CoagulationMeasure {
            c0: self.c0,
            c1: self.c1,
            atoms,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Atom {
    pub weight: f64,
    pub mass: MassPartition,
}

/// A validated coagulation measure
/// `c0 * sum_i delta_K(0,i) + c1 * sum_{i<j} delta_K(i,j) + sum_k w_k rho_{s_k}`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoagulationMeasure {
    c0: f64,
    c1: f64,
    atoms: Vec<Atom>,
}

impl CoagulationMeasure {
    /// Kingman part only.
    pub fn kingman(c0: f64, c1: f64) -> Result<Self> {
        MeasureSpec { c0, c1, atoms: vec![] }.build()
    }

    pub fn with_atom(mut self, weight: f64, mass: MassPartition) -> Result<Self> {
        if !weight.is_finite() || weight <= 0.0 {
            return Err(Error::InvalidMeasure(vec![Violation::NonPositiveWeight {
                atom: self.atoms.len(),
                weight,
            }]));
        }
        self.atoms.push(Atom { weight, mass });
        Ok(self)
    }

    pub fn c0(&self) -> f64 {
        self.c0
    }

    pub fn c1(&self) -> f64 {
        self.c1
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn to_spec(&self) -> MeasureSpec {
        MeasureSpec {
            c0: self.c0,
            c1: self.c1,
            atoms: self
                .atoms
                .iter()
                .map(|a| AtomSpec {
                    weight: a.weight,
                    s0: a.mass.s0(),
                    s: a.mass.masses().to_vec(),
                })
                .collect(),
        }
    }

    pub fn validate(&self) -> Diagnostics {
        self.to_spec().validate()
    }

    /// `q_pi`: the rate at which the chain restricted to `{0,...,n}` jumps
    /// from singletons by coagulating with `pi`.
    pub fn jump_rate(&self, pi: &DistinguishedPartition) -> Result<f64> {
        if pi.is_singletons() {
            return Err(Error::NullEvent);
        }
        let mut rate = 0.0;
        let sizes = pi.block_sizes();
        let big: Vec<usize> = (0..sizes.len()).filter(|&b| sizes[b] > 1).collect();
        if let [b] = big[..] {
            if sizes[b] == 2 {
                rate += if b == 0 { self.c0 } else { self.c1 };
            }
        }
        for atom in &self.atoms {
            rate += atom.weight * paintbox_prob(&atom.mass, pi);
        }
        Ok(rate)
    }

    /// Event rates at resolution `n`, in the fixed category order:
    /// distinguished pairs, ordinary pairs, then atoms in list order.
    pub fn category_rates(&self, n: usize) -> Vec<f64> {
        let nf = n as f64;
        let mut rates = vec![self.c0 * nf, self.c1 * nf * (nf - 1.0) / 2.0];
        rates.extend(
            self.atoms
                .iter()
                .map(|a| a.weight * (1.0 - a.mass.prob_all_singletons(n)).max(0.0)),
        );
        rates
    }

    /// `lambda_n`, the total rate of events visible at resolution `n`.
    pub fn total_rate(&self, n: usize) -> f64 {
        self.category_rates(n).iter().sum()
    }

    pub fn sampler(&self, n: usize) -> EventSampler<'_> {
        EventSampler::new(self, n)
    }

    /// Waiting time and mark of the next event at resolution `n`.
    pub fn sample_event<R: Rng + ?Sized>(
        &self,
        n: usize,
        rng: &mut R,
    ) -> Result<(f64, DistinguishedPartition)> {
        let sampler = self.sampler(n);
        let (dt, merger) = sampler.sample(rng)?;
        Ok((dt, merger.to_partition(n)))
    }
}

/// A sampled event in compact form.
#[derive(Clone, Debug, PartialEq)]
pub enum Merger {
    /// `K(0, i)`.
    Immigration(usize),
    /// `K(i, j)` with `1 <= i < j`.
    Pair(usize, usize),
    Paintbox(DistinguishedPartition),
}

impl Merger {
    pub fn to_partition(&self, n: usize) -> DistinguishedPartition {
        match self {
            Merger::Immigration(i) => DistinguishedPartition::kingman(n, 0, *i).expect("valid index"),
            Merger::Pair(i, j) => DistinguishedPartition::kingman(n, *i, *j).expect("valid pair"),
            Merger::Paintbox(pi) => pi.clone(),
        }
    }

    /// Applies the forward update `v[k] <- v[alpha(k)]` to a type vector
    /// indexed by `0..=n` with `v[0]` the immigrant type.
    pub fn apply_to_types(&self, v: &mut Vec<f64>) {
        match self {
            // individuals above i shift up one level; i takes the immigrant type
            Merger::Immigration(i) => {
                let x = v[0];
                v.insert(*i, x);
                v.pop();
            }
            Merger::Pair(i, j) => {
                let x = v[*i];
                v.insert(*j, x);
                v.pop();
            }
            Merger::Paintbox(pi) => {
                let next: Vec<f64> = pi.assignment().iter().map(|&a| v[a]).collect();
                *v = next;
            }
        }
    }
}

/// Pre-computed event law at a fixed resolution.
pub struct EventSampler<'a> {
    measure: &'a CoagulationMeasure,
    n: usize,
    total: f64,
    categories: Option<WeightedIndex<f64>>,
}

impl<'a> EventSampler<'a> {
    pub fn new(measure: &'a CoagulationMeasure, n: usize) -> Self {
        let rates = measure.category_rates(n);
        let total: f64 = rates.iter().sum();
        let categories = if total > 0.0 {
            WeightedIndex::new(&rates).ok()
        } else {
            None
        };
        Self {
            measure,
            n,
            total,
            categories,
        }
    }

    pub fn total_rate(&self) -> f64 {
        self.total
    }

    pub fn resolution(&self) -> usize {
        self.n
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(f64, Merger)> {
        let categories = self.categories.as_ref().ok_or(Error::NoEvents(self.n))?;
        let dt = Exp::new(self.total).expect("positive rate").sample(rng);
        let merger = match categories.sample(rng) {
            0 => Merger::Immigration(rng.random_range(1..=self.n)),
            1 => {
                let i = rng.random_range(1..=self.n);
                let mut j = rng.random_range(1..self.n);
                if j >= i {
                    j += 1;
                }
                Merger::Pair(i.min(j), i.max(j))
            }
            c => {
                let mass = &self.measure.atoms[c - 2].mass;
                let mut trials = 0;
                loop {
                    let pi = paintbox_sample(mass, self.n, rng);
                    if !pi.is_singletons() {
                        break Merger::Paintbox(pi);
                    }
                    trials += 1;
                    if trials >= REJECTION_CAP {
                        return Err(Error::RejectionCap(REJECTION_CAP));
                    }
                }
            }
        };
        Ok((dt, merger))
    }
}
