//! Small statistical helpers for Monte Carlo comparisons.

use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Pooled cells must reach this expected count.
pub const MIN_EXPECTED: f64 = 5.0;

/// Sample mean and its standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeanSe {
    pub mean: f64,
    pub se: f64,
    pub count: usize,
}

pub fn mean_se(xs: &[f64]) -> MeanSe {
    let count = xs.len();
    if count == 0 {
        return MeanSe { mean: f64::NAN, se: f64::NAN, count };
    }
    let mean = xs.iter().sum::<f64>() / count as f64;
    let se = if count > 1 {
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (count - 1) as f64;
        (var / count as f64).sqrt()
    } else {
        0.0
    };
    MeanSe { mean, se, count }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    /// Cells before and after pooling.
    pub cells: usize,
    pub pooled_cells: usize,
    /// Observations fell in a cell of zero probability.
    pub impossible: bool,
}

/// Pearson goodness-of-fit of `observed` counts against cell probabilities.
///
/// Cells are sorted by expected count and pooled from the smallest up until
/// every group expects at least [`MIN_EXPECTED`]. Zero-probability cells are
/// dropped unless they were observed, which is reported as impossible.
pub fn chi_square(observed: &[u64], probs: &[f64]) -> ChiSquareResult {
    assert_eq!(observed.len(), probs.len());
    let total: u64 = observed.iter().sum();
    let totalf = total as f64;
    let mut impossible = false;
    let mut cells: Vec<(f64, f64)> = Vec::new();
    for (&o, &p) in observed.iter().zip(probs) {
        if p <= 0.0 {
            impossible |= o > 0;
            continue;
        }
        cells.push((p * totalf, o as f64));
    }
    cells.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut groups: Vec<(f64, f64)> = Vec::new();
    let mut acc = (0.0, 0.0);
    for (e, o) in cells.iter().copied() {
        acc.0 += e;
        acc.1 += o;
        if acc.0 >= MIN_EXPECTED {
            groups.push(acc);
            acc = (0.0, 0.0);
        }
    }
    if acc.0 > 0.0 || acc.1 > 0.0 {
        match groups.last_mut() {
            Some(last) => {
                last.0 += acc.0;
                last.1 += acc.1;
            }
            None => groups.push(acc),
        }
    }
    let statistic: f64 = groups.iter().map(|(e, o)| (o - e).powi(2) / e).sum();
    let dof = groups.len().saturating_sub(1);
    let p_value = if impossible {
        0.0
    } else if dof == 0 {
        1.0
    } else {
        ChiSquared::new(dof as f64).expect("positive dof").sf(statistic)
    };
    ChiSquareResult {
        statistic,
        dof,
        p_value,
        cells: cells.len(),
        pooled_cells: groups.len(),
        impossible,
    }
}

/// Kolmogorov-Smirnov distance between the empirical law of `sample` and
/// `w * Uniform(0, 1] + sum_a m_a delta_a` on `[0, 1]`.
pub fn ks_uniform_mixture(sample: &[f64], uniform_weight: f64, atoms: &[(f64, f64)]) -> f64 {
    let mut xs = sample.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let cdf = |x: f64, strict: bool| {
        let atom_mass: f64 = atoms
            .iter()
            .filter(|a| if strict { a.0 < x } else { a.0 <= x })
            .map(|a| a.1)
            .sum();
        uniform_weight * x.clamp(0.0, 1.0) + atom_mass
    };
    // the supremum is attained at sample points or atoms, from either side
    let mut points: Vec<f64> = xs.clone();
    points.extend(atoms.iter().map(|a| a.0));
    points.sort_by(f64::total_cmp);
    points.dedup();
    let mut d: f64 = 0.0;
    for x in points {
        let below = xs.partition_point(|&y| y < x) as f64 / n;
        let upto = xs.partition_point(|&y| y <= x) as f64 / n;
        d = d.max((upto - cdf(x, false)).abs());
        d = d.max((below - cdf(x, true)).abs());
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_and_se() {
        let m = mean_se(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m.mean, 2.5);
        assert!((m.se - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn chi_square_known_value() {
        // 3 cells, equal probabilities: statistic = sum (o-e)^2/e
        let r = chi_square(&[30, 40, 50], &[1.0 / 3.0; 3]);
        assert!((r.statistic - (100.0 + 0.0 + 100.0) / 40.0).abs() < 1e-12);
        assert_eq!(r.dof, 2);
        assert!((r.p_value - (-5.0f64 / 2.0).exp()).abs() < 1e-9);
    }

    #[test]
    fn chi_square_pools_and_flags() {
        let r = chi_square(&[98, 1, 1, 0], &[0.97, 0.01, 0.02, 0.0]);
        assert_eq!(r.cells, 3);
        assert_eq!(r.pooled_cells, 1);
        assert_eq!(r.dof, 0);
        assert_eq!(r.p_value, 1.0);
        let r = chi_square(&[99, 1], &[1.0, 0.0]);
        assert!(r.impossible);
        assert_eq!(r.p_value, 0.0);
    }

    #[test]
    fn ks_distance() {
        let xs: Vec<f64> = (1..=100).map(|k| k as f64 / 100.0).collect();
        assert!(ks_uniform_mixture(&xs, 1.0, &[]) <= 0.01 + 1e-12);
        let zeros = vec![0.0; 10];
        assert!(ks_uniform_mixture(&zeros, 0.0, &[(0.0, 1.0)]) < 1e-12);
        assert!((ks_uniform_mixture(&zeros, 1.0, &[]) - 1.0).abs() < 1e-12);
    }
}
