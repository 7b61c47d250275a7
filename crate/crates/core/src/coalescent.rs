//! Event-driven realisation of the flow of partitions on a finite window.
//!
//! One [`EventLog`] is the common randomness: the backward fold
//! `state <- coag(state, pi)` gives the distinguished coalescent `Pi(0, t)`,
//! the forward fold `state <- coag(pi, state)` gives the dual population
//! partition `Pi_hat(t)`.

use rand::Rng;

use crate::error::{Error, Result};
use crate::measure::CoagulationMeasure;
use crate::partition::DistinguishedPartition;

#[derive(Clone, Debug, PartialEq)]
pub struct Event {
    pub time: f64,
    pub partition: DistinguishedPartition,
}

/// Time-ordered Poisson events at resolution `n` over `(0, horizon]`.
#[derive(Clone, Debug, PartialEq)]
pub struct EventLog {
    n: usize,
    horizon: f64,
    events: Vec<Event>,
    pub seed: Option<u64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Direction {
    /// `state <- coag(state, event)`: the coalescent.
    Backward,
    /// `state <- coag(event, state)`: the dual (population) flow.
    Forward,
}

/// Piecewise-constant, right-continuous path: `states[i]` holds on
/// `[times[i], times[i+1])`, with `times[0] = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DistinguishedPartition>,
}

impl Trajectory {
    pub fn state_at(&self, t: f64) -> &DistinguishedPartition {
        let idx = self.times.partition_point(|&s| s <= t);
        &self.states[idx.saturating_sub(1)]
    }

    pub fn block_counts(&self) -> Vec<usize> {
        self.states.iter().map(DistinguishedPartition::num_blocks).collect()
    }
}

fn check_horizon(horizon: f64) -> Result<()> {
    if !horizon.is_finite() || horizon < 0.0 {
        return Err(Error::InvalidArgument(format!("horizon {horizon} must be finite and >= 0")));
    }
    Ok(())
}

/// Samples all events of the Poisson construction visible at resolution `n`
/// up to `horizon`. A zero total rate gives an empty log.
pub fn simulate_events<R: Rng + ?Sized>(
    measure: &CoagulationMeasure,
    n: usize,
    horizon: f64,
    rng: &mut R,
) -> Result<EventLog> {
    let mut log = EventLog::empty(n, 0.0);
    log.extend(measure, horizon, rng)?;
    Ok(log)
}

impl EventLog {
    pub fn empty(n: usize, horizon: f64) -> Self {
        Self {
            n,
            horizon,
            events: Vec::new(),
            seed: None,
        }
    }

    /// Builds a log from explicit events; times must be strictly increasing
    /// in `(0, horizon]` and every partition must live on `{0,...,n}`.
    pub fn from_events(n: usize, horizon: f64, events: Vec<Event>) -> Result<Self> {
        check_horizon(horizon)?;
        let mut last = 0.0;
        for e in &events {
            if !(e.time > last && e.time <= horizon) {
                return Err(Error::InvalidArgument(format!(
                    "event time {} not strictly increasing within (0, {horizon}]",
                    e.time
                )));
            }
            if e.partition.n() != n {
                return Err(Error::InvalidArgument(format!(
                    "event partition on {{0,...,{}}} in a log of resolution {n}",
                    e.partition.n()
                )));
            }
            last = e.time;
        }
        Ok(Self {
            n,
            horizon,
            events,
            seed: None,
        })
    }

    /// Continues the Poisson process from the current horizon to `horizon`.
    pub fn extend<R: Rng + ?Sized>(
        &mut self,
        measure: &CoagulationMeasure,
        horizon: f64,
        rng: &mut R,
    ) -> Result<()> {
        check_horizon(horizon)?;
        if horizon < self.horizon {
            return Err(Error::InvalidArgument("cannot shrink an event log".into()));
        }
        let sampler = measure.sampler(self.n);
        if sampler.total_rate() > 0.0 {
            let mut t = self.horizon;
            loop {
                let (dt, merger) = sampler.sample(rng)?;
                t += dt;
                if t > horizon {
                    break;
                }
                self.events.push(Event {
                    time: t,
                    partition: merger.to_partition(self.n),
                });
            }
        }
        self.horizon = horizon;
        Ok(())
    }

    pub fn resolution(&self) -> usize {
        self.n
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// The log seen at resolution `m <= n`: events restricted to
    /// `{0,...,m}`, dropping those that become trivial.
    pub fn restrict(&self, m: usize) -> Result<Self> {
        let mut events = Vec::new();
        for e in &self.events {
            let r = e.partition.restrict(m)?;
            if !r.is_singletons() {
                events.push(Event { time: e.time, partition: r });
            }
        }
        Ok(Self {
            n: m,
            horizon: self.horizon,
            events,
            seed: self.seed,
        })
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if !(0.0..=self.horizon).contains(&t) {
            return Err(Error::InvalidArgument(format!(
                "time {t} outside [0, {}]",
                self.horizon
            )));
        }
        Ok(())
    }

    /// Fold of the events with time in `(s, t]`.
    pub fn window(&self, s: f64, t: f64, direction: Direction) -> Result<DistinguishedPartition> {
        self.check_time(s)?;
        self.check_time(t)?;
        if s > t {
            return Err(Error::InvalidArgument(format!("window ({s}, {t}] is reversed")));
        }
        let mut state = DistinguishedPartition::singletons(self.n);
        for e in self.events.iter().filter(|e| e.time > s && e.time <= t) {
            state = step(&state, &e.partition, direction)?;
        }
        Ok(state)
    }

    /// `Pi(0, t)`: the distinguished coalescent at time `t`.
    pub fn backward_state(&self, t: f64) -> Result<DistinguishedPartition> {
        self.window(0.0, t, Direction::Backward)
    }

    /// `Pi_hat(t)`: the forward population partition at time `t`.
    pub fn forward_state(&self, t: f64) -> Result<DistinguishedPartition> {
        self.window(0.0, t, Direction::Forward)
    }

    pub fn trajectory(&self, direction: Direction) -> Result<Trajectory> {
        let mut state = DistinguishedPartition::singletons(self.n);
        let mut times = vec![0.0];
        let mut states = vec![state.clone()];
        for e in &self.events {
            state = step(&state, &e.partition, direction)?;
            times.push(e.time);
            states.push(state.clone());
        }
        Ok(Trajectory { times, states })
    }

    /// First event time at which the fold becomes the single block
    /// `{0,...,n}`; `None` if that does not happen by the horizon.
    pub fn absorption_time(&self, direction: Direction) -> Result<Option<f64>> {
        let mut state = DistinguishedPartition::singletons(self.n);
        if state.is_single_block() {
            return Ok(Some(0.0));
        }
        for e in &self.events {
            state = step(&state, &e.partition, direction)?;
            if state.is_single_block() {
                return Ok(Some(e.time));
            }
        }
        Ok(None)
    }
}

fn step(
    state: &DistinguishedPartition,
    event: &DistinguishedPartition,
    direction: Direction,
) -> Result<DistinguishedPartition> {
    match direction {
        Direction::Backward => state.coag(event),
        Direction::Forward => event.coag(state),
    }
}

/// Absorption time of the backward fold at resolution `n`, extending the
/// horizon by doubling from `initial_horizon` up to `max_horizon`.
/// `None` means the run was censored at `max_horizon`.
pub fn absorption_time_with_extension<R: Rng + ?Sized>(
    measure: &CoagulationMeasure,
    n: usize,
    initial_horizon: f64,
    max_horizon: f64,
    rng: &mut R,
) -> Result<Option<f64>> {
    let mut horizon = initial_horizon.min(max_horizon);
    let mut log = simulate_events(measure, n, horizon, rng)?;
    loop {
        if let Some(t) = log.absorption_time(Direction::Backward)? {
            return Ok(Some(t));
        }
        if horizon >= max_horizon {
            return Ok(None);
        }
        horizon = (2.0 * horizon).min(max_horizon);
        log.extend(measure, horizon, rng)?;
    }
}

/// Absorption time of the backward fold at resolution `n`, run on the
/// block-counting chain. With `b` non-distinguished blocks left only the
/// restriction of the next event to `{0,...,b}` matters, and by consistency
/// those restrictions arrive as the events of the resolution-`b` coalescent.
/// Same law as [`absorption_time_with_extension`] with far fewer events.
/// `None` means no absorption by `max_horizon`.
pub fn absorption_time_by_block_count<R: Rng + ?Sized>(
    measure: &CoagulationMeasure,
    n: usize,
    max_horizon: f64,
    rng: &mut R,
) -> Result<Option<f64>> {
    let mut b = n;
    let mut t = 0.0;
    while b > 0 {
        let sampler = measure.sampler(b);
        if sampler.total_rate() <= 0.0 {
            return Ok(None);
        }
        let (dt, merger) = sampler.sample(rng)?;
        t += dt;
        if t > max_horizon {
            return Ok(None);
        }
        b = merger.to_partition(b).num_blocks() - 1;
    }
    Ok(Some(t))
}
