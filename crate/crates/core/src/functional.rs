//! Product-form test functions `f(x_1, ..., x_p) = prod_j f_j(x_j)` on `[0,1]^p`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::law::AtomicMeasure;

/// Atoms of an indicator factor match within this distance.
const INDICATOR_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Factor {
    /// Polynomial with coefficients in increasing degree.
    Polynomial(Vec<f64>),
    /// Indicator of a finite set of points.
    Indicator(Vec<f64>),
}

impl Factor {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Factor::Polynomial(c) => c.iter().rev().fold(0.0, |acc, &a| acc * x + a),
            Factor::Indicator(points) => {
                if points.iter().any(|&a| (a - x).abs() <= INDICATOR_TOL) {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// `int f_j d(mu)`.
    pub fn integrate(&self, mu: &AtomicMeasure) -> f64 {
        mu.atoms().iter().map(|&(x, w)| w * self.eval(x)).sum()
    }
}

impl fmt::Display for Factor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
        match self {
            Factor::Polynomial(c) => write!(f, "poly[{}]", list(c)),
            Factor::Indicator(p) => write!(f, "ind[{}]", list(p)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentFunctional {
    factors: Vec<Factor>,
}

impl MomentFunctional {
    pub fn new(factors: Vec<Factor>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::InvalidArgument("a moment functional needs arity >= 1".into()));
        }
        for factor in &factors {
            let bad = match factor {
                Factor::Polynomial(c) => c.is_empty() || c.iter().any(|x| !x.is_finite()),
                Factor::Indicator(p) => p.iter().any(|x| !x.is_finite()),
            };
            if bad {
                return Err(Error::InvalidArgument(format!("malformed factor {factor}")));
            }
        }
        Ok(Self { factors })
    }

    /// `f = 1` on `[0,1]^p`.
    pub fn constant_one(p: usize) -> Result<Self> {
        Self::new(vec![Factor::Polynomial(vec![1.0]); p])
    }

    /// `f(x) = x_1 x_2 ... x_p`.
    pub fn coordinate_product(p: usize) -> Result<Self> {
        Self::new(vec![Factor::Polynomial(vec![0.0, 1.0]); p])
    }

    pub fn arity(&self) -> usize {
        self.factors.len()
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.factors.len());
        self.factors
            .iter()
            .zip(x)
            .map(|(f, &xi)| f.eval(xi))
            .product()
    }

    /// `G_f(mu) = int f d(mu^p)`, using the product structure.
    pub fn g_f(&self, mu: &AtomicMeasure) -> f64 {
        self.factors.iter().map(|f| f.integrate(mu)).product()
    }
}

impl fmt::Display for MomentFunctional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.factors.iter().map(|x| x.to_string()).collect();
        write!(f, "{}", parts.join("*"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluation() {
        let poly = Factor::Polynomial(vec![1.0, -2.0, 3.0]);
        assert_eq!(poly.eval(2.0), 9.0);
        let ind = Factor::Indicator(vec![0.0, 1.0]);
        assert_eq!(ind.eval(0.0), 1.0);
        assert_eq!(ind.eval(0.5), 0.0);
        let f = MomentFunctional::new(vec![poly, ind]).unwrap();
        assert_eq!(f.eval(&[2.0, 1.0]), 9.0);
        assert_eq!(f.to_string(), "poly[1 -2 3]*ind[0 1]");
        assert!(MomentFunctional::new(vec![]).is_err());
        assert!(MomentFunctional::new(vec![Factor::Polynomial(vec![])]).is_err());
    }

    #[test]
    fn g_f_on_atoms() {
        let mu = AtomicMeasure::new(&[(0.5, 0.5), (1.0, 0.5)]).unwrap();
        let f = MomentFunctional::coordinate_product(2).unwrap();
        assert!((f.g_f(&mu) - 0.5625).abs() < 1e-15);
        assert_eq!(MomentFunctional::constant_one(3).unwrap().g_f(&mu), 1.0);
    }
}
