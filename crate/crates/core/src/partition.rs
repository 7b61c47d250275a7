//! Distinguished partitions of `{0,...,n}` and the distinguished paint-box.
//!
//! A [`DistinguishedPartition`] is stored as its canonical assignment vector:
//! `assignment[k]` is the index of the block containing `k`, blocks being
//! numbered by increasing least element. Element `0` therefore always sits in
//! block `0`, the distinguished block.

use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;

use crate::error::{Error, Result};

/// Upper bound on the number of colors of a [`MassPartition`] (bitmask width).
pub const MAX_COLORS: usize = 64;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DistinguishedPartition {
    assignment: Vec<usize>,
}

impl DistinguishedPartition {
    /// The partition of `{0,...,n}` into singletons.
    pub fn singletons(n: usize) -> Self {
        Self {
            assignment: (0..=n).collect(),
        }
    }

    /// The partition of `{0,...,n}` with a single block.
    pub fn single_block(n: usize) -> Self {
        Self {
            assignment: vec![0; n + 1],
        }
    }

    /// Builds a partition from arbitrary block labels, relabelling blocks by
    /// order of first appearance.
    pub fn from_labels(labels: &[usize]) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::InvalidPartition("empty ground set".into()));
        }
        let mut relabel: BTreeMap<usize, usize> = BTreeMap::new();
        let assignment = labels
            .iter()
            .map(|&l| {
                let next = relabel.len();
                *relabel.entry(l).or_insert(next)
            })
            .collect();
        Ok(Self { assignment })
    }

    /// Builds a partition from its list of blocks, which must cover
    /// `{0,...,n}` exactly once each.
    pub fn from_blocks(blocks: &[Vec<usize>]) -> Result<Self> {
        let len: usize = blocks.iter().map(Vec::len).sum();
        if len == 0 {
            return Err(Error::InvalidPartition("empty ground set".into()));
        }
        let mut labels = vec![usize::MAX; len];
        for (b, block) in blocks.iter().enumerate() {
            if block.is_empty() {
                return Err(Error::InvalidPartition(format!("block {b} is empty")));
            }
            for &k in block {
                if k >= len {
                    return Err(Error::InvalidPartition(format!(
                        "element {k} outside {{0,...,{}}}",
                        len - 1
                    )));
                }
                if labels[k] != usize::MAX {
                    return Err(Error::InvalidPartition(format!("element {k} repeated")));
                }
                labels[k] = b;
            }
        }
        Self::from_labels(&labels)
    }

    /// The simple partition of `{0,...,n}` whose only non-singleton block is
    /// `{i, j}`. With `i = 0` this is a merge into the distinguished block.
    pub fn kingman(n: usize, i: usize, j: usize) -> Result<Self> {
        if i >= j || j > n {
            return Err(Error::InvalidArgument(format!(
                "kingman({n}, {i}, {j}) needs 0 <= i < j <= n"
            )));
        }
        let mut labels: Vec<usize> = (0..=n).collect();
        labels[j] = i;
        Self::from_labels(&labels)
    }

    /// Ground-set bound: the partition lives on `{0,...,n}`.
    pub fn n(&self) -> usize {
        self.assignment.len() - 1
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn num_blocks(&self) -> usize {
        // canonical labels: the last new label is the largest
        self.assignment.iter().max().map_or(0, |&m| m + 1)
    }

    pub fn blocks(&self) -> Vec<Vec<usize>> {
        let mut blocks = vec![Vec::new(); self.num_blocks()];
        for (k, &b) in self.assignment.iter().enumerate() {
            blocks[b].push(k);
        }
        blocks
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.num_blocks()];
        for &b in &self.assignment {
            sizes[b] += 1;
        }
        sizes
    }

    /// Ancestor map: index of the block containing `k`.
    ///
    /// Panics if `k > n`.
    pub fn alpha(&self, k: usize) -> usize {
        self.assignment[k]
    }

    pub fn is_singletons(&self) -> bool {
        self.assignment.iter().enumerate().all(|(k, &b)| k == b)
    }

    pub fn is_single_block(&self) -> bool {
        self.assignment.iter().all(|&b| b == 0)
    }

    /// `coag(self, other)`: block `i` of the result is the union of the blocks
    /// of `self` whose indices lie in block `i` of `other`.
    ///
    /// `other` must index at least the blocks of `self`; its elements beyond
    /// `num_blocks(self) - 1` are ignored. The result lives on the ground set
    /// of `self` and is canonical without relabelling.
    pub fn coag(&self, other: &Self) -> Result<Self> {
        let blocks = self.num_blocks();
        if other.assignment.len() < blocks {
            return Err(Error::GroundMismatch {
                needed: blocks - 1,
                got: other.n(),
            });
        }
        let assignment: Vec<usize> = self
            .assignment
            .iter()
            .map(|&b| other.assignment[b])
            .collect();
        debug_assert!(is_canonical(&assignment));
        Ok(Self { assignment })
    }

    /// Restriction to `{0,...,m}`.
    pub fn restrict(&self, m: usize) -> Result<Self> {
        if m > self.n() {
            return Err(Error::InvalidArgument(format!(
                "cannot restrict a partition of {{0,...,{}}} to {{0,...,{m}}}",
                self.n()
            )));
        }
        Ok(Self {
            assignment: self.assignment[..=m].to_vec(),
        })
    }

    /// `(1 + max{m : restrictions to {0,...,m} agree})^-1`.
    ///
    /// Equal partitions get `1/(1+n)`, the finite-resolution stand-in for 0.
    pub fn distance(&self, other: &Self) -> Result<f64> {
        if self.n() != other.n() {
            return Err(Error::InvalidArgument(format!(
                "distance between partitions of different ground sets ({} vs {})",
                self.n(),
                other.n()
            )));
        }
        // canonical prefixes agree iff restrictions agree
        let first_diff = self
            .assignment
            .iter()
            .zip(&other.assignment)
            .position(|(a, b)| a != b);
        Ok(match first_diff {
            Some(d) => 1.0 / d as f64,
            None => 1.0 / (1.0 + self.n() as f64),
        })
    }
}

fn is_canonical(assignment: &[usize]) -> bool {
    let mut next = 0;
    for &b in assignment {
        if b > next {
            return false;
        }
        if b == next {
            next += 1;
        }
    }
    true
}

impl fmt::Display for DistinguishedPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, block) in self.blocks().iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{{")?;
            for (j, k) in block.iter().enumerate() {
                if j > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{k}")?;
            }
            write!(f, "}}")?;
        }
        write!(f, "}}")
    }
}

/// An element `(s0; s1 >= s2 >= ... >= sm)` of the mass-partition simplex
/// with finitely many colors. The remaining mass `1 - s0 - sum(s)` is dust.
#[derive(Clone, Debug, PartialEq)]
pub struct MassPartition {
    s0: f64,
    s: Vec<f64>,
}

const MASS_SLACK: f64 = 1e-12;

impl MassPartition {
    pub fn new(s0: f64, s: Vec<f64>) -> Result<Self> {
        if !s0.is_finite() || s0 < 0.0 || s.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::InvalidMass("masses must be finite and nonnegative".into()));
        }
        if s.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::InvalidMass("masses s1, s2, ... must be nonincreasing".into()));
        }
        let total = s0 + s.iter().sum::<f64>();
        if total > 1.0 + MASS_SLACK {
            return Err(Error::InvalidMass(format!("total mass {total} exceeds 1")));
        }
        if s0 == 0.0 && s.first().is_none_or(|&x| x == 0.0) {
            return Err(Error::InvalidMass(
                "trivial mass partition (pure dust) charges the singleton partition".into(),
            ));
        }
        if s.len() > MAX_COLORS {
            return Err(Error::InvalidMass(format!(
                "at most {MAX_COLORS} colors are supported, got {}",
                s.len()
            )));
        }
        let mut s = s;
        // trailing zero colors never receive elements
        while s.last() == Some(&0.0) {
            s.pop();
        }
        Ok(Self { s0, s })
    }

    /// Mass of the distinguished color.
    pub fn s0(&self) -> f64 {
        self.s0
    }

    pub fn masses(&self) -> &[f64] {
        &self.s
    }

    pub fn num_colors(&self) -> usize {
        self.s.len()
    }

    pub fn dust(&self) -> f64 {
        (1.0 - self.s0 - self.s.iter().sum::<f64>()).max(0.0)
    }

    /// Probability that an `s`-paint-box restricted to `{0,...,n}` is the
    /// singleton partition: every element of `1..=n` is dust or gets a color
    /// of its own.
    pub fn prob_all_singletons(&self, n: usize) -> f64 {
        let m = self.s.len();
        let kmax = n.min(m);
        // elementary symmetric polynomials e_0..e_kmax of the color masses
        let mut e = vec![0.0; kmax + 1];
        e[0] = 1.0;
        for &x in &self.s {
            for k in (1..=kmax).rev() {
                e[k] += e[k - 1] * x;
            }
        }
        let dust = self.dust();
        let mut total = 0.0;
        let mut falling = 1.0;
        for (k, ek) in e.iter().enumerate() {
            if k > 0 {
                falling *= (n - k + 1) as f64;
            }
            total += falling * ek * dust.powi((n - k) as i32);
        }
        total
    }
}

/// Draws the restriction to `{0,...,n}` of an `s`-distinguished paint-box.
///
/// Each of `1..=n` independently takes color 0 with probability `s0`, color
/// `j` with probability `s_j`, and is dust otherwise. Color-0 elements join
/// the block of 0, same-colored elements share a block, dust stays single.
pub fn paintbox_sample<R: Rng + ?Sized>(s: &MassPartition, n: usize, rng: &mut R) -> DistinguishedPartition {
    let mut label_of_color = vec![usize::MAX; s.s.len()];
    let mut assignment = Vec::with_capacity(n + 1);
    assignment.push(0);
    let mut next = 1;
    for _ in 1..=n {
        let u: f64 = rng.random();
        let label = match color_of(s, u) {
            Some(0) => 0,
            Some(c) => {
                let slot = &mut label_of_color[c - 1];
                if *slot == usize::MAX {
                    *slot = next;
                    next += 1;
                }
                *slot
            }
            None => {
                next += 1;
                next - 1
            }
        };
        assignment.push(label);
    }
    DistinguishedPartition { assignment }
}

/// Color (0 = distinguished, `j >= 1`) selected by a uniform draw, or `None`
/// for dust.
fn color_of(s: &MassPartition, u: f64) -> Option<usize> {
    let mut acc = s.s0;
    if u < acc {
        return Some(0);
    }
    for (j, &x) in s.s.iter().enumerate() {
        acc += x;
        if u < acc {
            return Some(j + 1);
        }
    }
    None
}

/// Exact probability that an `s`-paint-box restricted to `{0,...,n}` equals `pi`.
///
/// The distinguished block forces color 0 on its other elements. The remaining
/// blocks get pairwise distinct colors, except singletons which may be dust;
/// the sum over injective colorings runs as a recursion over blocks keyed by
/// the bitmask of used colors.
pub fn paintbox_prob(s: &MassPartition, pi: &DistinguishedPartition) -> f64 {
    let sizes = pi.block_sizes();
    let base = s.s0.powi((sizes[0] - 1) as i32);
    if base == 0.0 {
        return 0.0;
    }
    let dust = s.dust();
    let mut states: BTreeMap<u64, f64> = BTreeMap::new();
    states.insert(0, 1.0);
    for &size in &sizes[1..] {
        let mut next: BTreeMap<u64, f64> = BTreeMap::new();
        for (&mask, &p) in &states {
            if size == 1 && dust > 0.0 {
                *next.entry(mask).or_insert(0.0) += p * dust;
            }
            for (c, &x) in s.s.iter().enumerate() {
                let bit = 1u64 << c;
                if mask & bit == 0 {
                    let w = x.powi(size as i32);
                    if w > 0.0 {
                        *next.entry(mask | bit).or_insert(0.0) += p * w;
                    }
                }
            }
        }
        if next.is_empty() {
            return 0.0;
        }
        states = next;
    }
    base * states.values().sum::<f64>()
}
