//! Exact computations on `P0_p` for small `p`: the restricted coalescent's
//! rate matrix and semigroup, the duality functionals `Phi_f`, and the GFVI
//! generator evaluated on `G_f` in its two forms.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::functional::MomentFunctional;
use crate::law::AtomicMeasure;
use crate::measure::CoagulationMeasure;
use crate::partition::DistinguishedPartition;

/// Largest resolution enumerated by default (`Bell(7) = 877` states).
pub const MAX_EXACT_RESOLUTION: usize = 6;
/// Default truncation error of the uniformization series.
pub const UNIFORMIZATION_TOL: f64 = 1e-10;
/// Default cap on the number of terms in the multiple-collision part of
/// [`generator_decomposed`].
pub const GENERATOR_TERM_CAP: usize = 50_000_000;

/// All distinguished partitions of `{0,...,p}`, canonical and distinct.
#[derive(Clone, Debug)]
pub struct PartitionSpace {
    p: usize,
    states: Vec<DistinguishedPartition>,
    index: HashMap<DistinguishedPartition, usize>,
}

impl PartitionSpace {
    pub fn enumerate(p: usize) -> Result<Self> {
        Self::enumerate_with_cap(p, MAX_EXACT_RESOLUTION)
    }

    pub fn enumerate_with_cap(p: usize, cap: usize) -> Result<Self> {
        if p > cap {
            return Err(Error::ResourceCap(format!(
                "enumerating partitions of {{0,...,{p}}} exceeds the resolution cap {cap}"
            )));
        }
        let mut states = Vec::new();
        let mut labels = vec![0usize; p + 1];
        restricted_growth(1, 0, &mut labels, &mut states);
        let index = states.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect();
        Ok(Self { p, states, index })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[DistinguishedPartition] {
        &self.states
    }

    pub fn index_of(&self, pi: &DistinguishedPartition) -> Option<usize> {
        self.index.get(pi).copied()
    }

    pub fn singletons_index(&self) -> usize {
        self.index[&DistinguishedPartition::singletons(self.p)]
    }

    pub fn single_block_index(&self) -> usize {
        self.index[&DistinguishedPartition::single_block(self.p)]
    }
}

// labels[0] = 0 is fixed; each later label is at most one more than the running max
fn restricted_growth(k: usize, max: usize, labels: &mut Vec<usize>, out: &mut Vec<DistinguishedPartition>) {
    if k == labels.len() {
        out.push(DistinguishedPartition::from_labels(labels).expect("restricted growth string"));
        return;
    }
    for b in 0..=max + 1 {
        labels[k] = b;
        restricted_growth(k + 1, max.max(b), labels, out);
    }
}

/// Row-major square matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, data: vec![0.0; dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = 1.0;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    fn add(&mut self, i: usize, j: usize, x: f64) {
        self.data[i * self.dim + j] += x;
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.dim)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn mul(&self, other: &Self) -> Self {
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * other.data[k * n + j];
                }
            }
        }
        out
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Generator `L*_p` of the coalescent restricted to `{0,...,p}`:
/// `Q[pi][pi''] = sum of q_pi' over pi' with coag(pi, pi') = pi''`.
#[derive(Clone, Debug)]
pub struct RateMatrix {
    q: DenseMatrix,
}

impl RateMatrix {
    pub fn matrix(&self) -> &DenseMatrix {
        &self.q
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.q.get(i, j)
    }

    pub fn dim(&self) -> usize {
        self.q.dim()
    }

    /// Largest exit rate, the uniformization constant.
    pub fn max_exit_rate(&self) -> f64 {
        (0..self.dim()).map(|i| -self.get(i, i)).fold(0.0, f64::max)
    }

    /// `(Q phi)[i]`.
    pub fn apply(&self, phi: &[f64]) -> Vec<f64> {
        self.q.mul_vec(phi)
    }
}

pub fn rate_matrix(measure: &CoagulationMeasure, space: &PartitionSpace) -> Result<RateMatrix> {
    let mut events = Vec::new();
    for pi in space.states() {
        if pi.is_singletons() {
            continue;
        }
        let q = measure.jump_rate(pi)?;
        if q > 0.0 {
            events.push((pi, q));
        }
    }
    let dim = space.len();
    let mut q = DenseMatrix::zeros(dim);
    for (i, pi) in space.states().iter().enumerate() {
        for &(ev, rate) in &events {
            let next = pi.coag(ev)?;
            if &next == pi {
                continue;
            }
            let j = space.index_of(&next).expect("coag stays in the space");
            q.add(i, j, rate);
            q.add(i, i, -rate);
        }
    }
    Ok(RateMatrix { q })
}

/// Poisson(`lambda`) weights up to the first index past the mean where the
/// remaining mass is below `tol`.
fn poisson_weights(lambda: f64, tol: f64) -> Vec<f64> {
    let ln_lambda = lambda.ln();
    let mut ln_w = -lambda;
    let mut weights = vec![ln_w.exp()];
    let mut cum = weights[0];
    let mut k = 0usize;
    while !(k as f64 > lambda && 1.0 - cum < tol) {
        k += 1;
        ln_w += ln_lambda - (k as f64).ln();
        let w = ln_w.exp();
        weights.push(w);
        cum += w;
        // rounding can keep cum just under 1 - tol; the weights are then negligible
        if k as f64 > lambda && w < tol * 1e-6 {
            break;
        }
    }
    weights
}

/// `e^{tQ}` by uniformization, entries accurate to about `tol`.
pub fn transition_probs_tol(q: &RateMatrix, t: f64, tol: f64) -> Result<DenseMatrix> {
    check_time(t)?;
    let dim = q.dim();
    let lambda = q.max_exit_rate();
    if lambda == 0.0 || t == 0.0 {
        return Ok(DenseMatrix::identity(dim));
    }
    let b = jump_chain(q, lambda);
    let weights = poisson_weights(lambda * t, tol);
    let mut power = DenseMatrix::identity(dim);
    let mut out = DenseMatrix::zeros(dim);
    for (k, w) in weights.iter().enumerate() {
        if k > 0 {
            power = power.mul(&b);
        }
        for (o, p) in out.data.iter_mut().zip(&power.data) {
            *o += w * p;
        }
    }
    Ok(out)
}

pub fn transition_probs(q: &RateMatrix, t: f64) -> Result<DenseMatrix> {
    transition_probs_tol(q, t, UNIFORMIZATION_TOL)
}

/// `e^{tQ} phi` by uniformization, without forming the matrix exponential.
pub fn apply_semigroup(q: &RateMatrix, t: f64, phi: &[f64]) -> Result<Vec<f64>> {
    check_time(t)?;
    let lambda = q.max_exit_rate();
    if lambda == 0.0 || t == 0.0 {
        return Ok(phi.to_vec());
    }
    let b = jump_chain(q, lambda);
    let scale = phi.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    let weights = poisson_weights(lambda * t, UNIFORMIZATION_TOL / scale);
    let mut v = phi.to_vec();
    let mut out = vec![0.0; phi.len()];
    for (k, w) in weights.iter().enumerate() {
        if k > 0 {
            v = b.mul_vec(&v);
        }
        for (o, x) in out.iter_mut().zip(&v) {
            *o += w * x;
        }
    }
    Ok(out)
}

fn check_time(t: f64) -> Result<()> {
    if !t.is_finite() || t < 0.0 {
        return Err(Error::InvalidArgument(format!("time {t} must be finite and >= 0")));
    }
    Ok(())
}

/// `I + Q / lambda`.
fn jump_chain(q: &RateMatrix, lambda: f64) -> DenseMatrix {
    let mut b = q.q.clone();
    for x in b.data.iter_mut() {
        *x /= lambda;
    }
    for i in 0..b.dim {
        b.data[i * b.dim + i] += 1.0;
    }
    b
}

/// `int prod_j f_j(x_{map_j}) delta_0(dx_0) rho(dx_1) rho(dx_2) ...`, where
/// coordinate `j` reads variable `map[j]` and variable 0 is pinned at 0.
fn grouped_integral(rho: &AtomicMeasure, f: &MomentFunctional, map: &[usize]) -> f64 {
    let nvars = map.iter().copied().max().unwrap_or(0) + 1;
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); nvars];
    for (j, &var) in map.iter().enumerate() {
        groups[var].push(j);
    }
    let factors = f.factors();
    let mut total: f64 = groups[0].iter().map(|&j| factors[j].eval(0.0)).product();
    for group in groups.iter().skip(1).filter(|g| !g.is_empty()) {
        total *= rho
            .atoms()
            .iter()
            .map(|&(x, w)| w * group.iter().map(|&j| factors[j].eval(x)).product::<f64>())
            .sum::<f64>();
    }
    total
}

/// `Phi_f(rho, pi) = int f(x_{alpha_pi(1)}, ..., x_{alpha_pi(p)})
/// delta_0(dx_0) rho(dx_1) ... rho(dx_p)`.
///
/// Each block of `pi` other than the one of 0 reads a fresh `rho` variable,
/// so the integral factorises over blocks.
pub fn phi_functional(rho: &AtomicMeasure, pi: &DistinguishedPartition, f: &MomentFunctional) -> Result<f64> {
    if pi.n() != f.arity() {
        return Err(Error::InvalidArgument(format!(
            "partition of {{0,...,{}}} for a functional of arity {}",
            pi.n(),
            f.arity()
        )));
    }
    Ok(grouped_integral(rho, f, &pi.assignment()[1..]))
}

fn check_rho(rho: &AtomicMeasure) -> Result<()> {
    if !rho.avoids_immigrant_type() {
        return Err(Error::InvalidArgument("rho must be carried by (0, 1]".into()));
    }
    Ok(())
}

/// Space, rate matrix and semigroup for one measure at one resolution.
#[derive(Clone, Debug)]
pub struct DualEngine {
    space: PartitionSpace,
    q: RateMatrix,
}

impl DualEngine {
    pub fn new(measure: &CoagulationMeasure, p: usize) -> Result<Self> {
        let space = PartitionSpace::enumerate(p)?;
        let q = rate_matrix(measure, &space)?;
        Ok(Self { space, q })
    }

    pub fn space(&self) -> &PartitionSpace {
        &self.space
    }

    pub fn rate_matrix(&self) -> &RateMatrix {
        &self.q
    }

    /// `(Phi_f(rho, pi))_{pi in P0_p}`.
    pub fn phi_vector(&self, rho: &AtomicMeasure, f: &MomentFunctional) -> Result<Vec<f64>> {
        self.space.states().iter().map(|pi| phi_functional(rho, pi, f)).collect()
    }

    /// `E^pi[Phi_f(rho, Pi(t))]`, the right side of the duality identity.
    pub fn dual_expectation(
        &self,
        pi: &DistinguishedPartition,
        rho: &AtomicMeasure,
        f: &MomentFunctional,
        t: f64,
    ) -> Result<f64> {
        check_rho(rho)?;
        let i = self.space.index_of(pi).ok_or_else(|| {
            Error::InvalidArgument(format!("{pi} is not a partition of {{0,...,{}}}", self.space.p()))
        })?;
        let phi = self.phi_vector(rho, f)?;
        Ok(apply_semigroup(&self.q, t, &phi)?[i])
    }

    /// Law at time `t` of the chain started from singletons.
    pub fn marginal_law(&self, t: f64) -> Result<Vec<f64>> {
        let start = self.space.singletons_index();
        let dim = self.space.len();
        // column i of e^{tQ} restricted to row `start` is (e^{tQ} e_i)[start]
        (0..dim)
            .map(|i| {
                let mut e = vec![0.0; dim];
                e[i] = 1.0;
                Ok(apply_semigroup(&self.q, t, &e)?[start])
            })
            .collect()
    }
}

pub fn exact_dual_expectation(
    measure: &CoagulationMeasure,
    pi: &DistinguishedPartition,
    rho: &AtomicMeasure,
    f: &MomentFunctional,
    t: f64,
) -> Result<f64> {
    DualEngine::new(measure, f.arity())?.dual_expectation(pi, rho, f, t)
}

/// `L G_f(rho) = sum_pi q_pi (Phi_f(rho, pi) - Phi_f(rho, 0_p))`.
pub fn generator_eq1(measure: &CoagulationMeasure, rho: &AtomicMeasure, f: &MomentFunctional) -> Result<f64> {
    check_rho(rho)?;
    let space = PartitionSpace::enumerate(f.arity())?;
    let base = f.g_f(rho);
    let mut total = 0.0;
    for pi in space.states() {
        if pi.is_singletons() {
            continue;
        }
        let q = measure.jump_rate(pi)?;
        if q != 0.0 {
            total += q * (phi_functional(rho, pi, f)? - base);
        }
    }
    Ok(total)
}

/// The generator as immigration part + binary-merger part + multiple-merger
/// part, each evaluated directly on `G_f`.
pub fn generator_decomposed(measure: &CoagulationMeasure, rho: &AtomicMeasure, f: &MomentFunctional) -> Result<f64> {
    generator_decomposed_with_cap(measure, rho, f, GENERATOR_TERM_CAP)
}

pub fn generator_decomposed_with_cap(
    measure: &CoagulationMeasure,
    rho: &AtomicMeasure,
    f: &MomentFunctional,
    term_cap: usize,
) -> Result<f64> {
    check_rho(rho)?;
    let p = f.arity();
    let base = f.g_f(rho);
    let identity: Vec<usize> = (1..=p).collect();

    let mut immigration = 0.0;
    for i in 0..p {
        let mut map = identity.clone();
        map[i] = 0;
        immigration += grouped_integral(rho, f, &map) - base;
    }

    let mut binary = 0.0;
    for i in 0..p {
        for j in i + 1..p {
            let mut map = identity.clone();
            map[j] = map[i];
            binary += grouped_integral(rho, f, &map) - base;
        }
    }

    let mut multiple = 0.0;
    for atom in measure.atoms() {
        multiple += atom.weight * (random_measure_moment(rho, f, &atom.mass, term_cap)? - base);
    }

    Ok(measure.c0() * immigration + measure.c1() * binary + multiple)
}

/// `E[G_f(dust * rho + s0 delta_0 + sum_i s_i delta_{U_i})]` with `U_i`
/// i.i.d. `rho`: expand the product over coordinates into a choice of
/// component per coordinate, then integrate each `U_i` once.
fn random_measure_moment(
    rho: &AtomicMeasure,
    f: &MomentFunctional,
    s: &crate::partition::MassPartition,
    term_cap: usize,
) -> Result<f64> {
    let p = f.arity();
    let m = s.num_colors();
    let components = m + 2;
    let terms = (components as f64).powi(p as i32) * rho.len() as f64;
    if terms > term_cap as f64 {
        return Err(Error::ResourceCap(format!(
            "{terms} terms in the multiple-merger generator exceed the cap {term_cap}"
        )));
    }
    let factors = f.factors();
    let background: Vec<f64> = factors.iter().map(|g| g.integrate(rho)).collect();
    // component 0 = background rho, 1 = delta_0, 1 + i = delta_{U_i}
    let mut weight = vec![s.dust(), s.s0()];
    weight.extend_from_slice(s.masses());

    let mut choice = vec![0usize; p];
    let mut total = 0.0;
    loop {
        let mut term: f64 = choice.iter().map(|&c| weight[c]).product();
        if term != 0.0 {
            let mut map = vec![0usize; p];
            for (j, &c) in choice.iter().enumerate() {
                match c {
                    0 => term *= background[j],
                    1 => term *= factors[j].eval(0.0),
                    // variable i >= 1 of grouped_integral is U_i
                    _ => map[j] = c - 1,
                }
            }
            if term != 0.0 {
                let coords: Vec<usize> = (0..p).filter(|&j| choice[j] >= 2).collect();
                if !coords.is_empty() {
                    let sub = MomentFunctional::new(coords.iter().map(|&j| factors[j].clone()).collect())?;
                    let sub_map: Vec<usize> = coords.iter().map(|&j| map[j]).collect();
                    term *= grouped_integral(rho, &sub, &sub_map);
                }
                total += term;
            }
        }
        // odometer over components^p
        let mut k = 0;
        while k < p {
            choice[k] += 1;
            if choice[k] < components {
                break;
            }
            choice[k] = 0;
            k += 1;
        }
        if k == p {
            break;
        }
    }
    Ok(total)
}
