//! Gauss rules from the Golub-Welsch eigenproblem.

use ndarray::Array2;
use ndarray_linalg::{Eigh, UPLO};

use crate::error::{invalid, Error, Result};

/// Nodes and weights of a Gauss rule.
#[derive(Clone, Debug, PartialEq)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

fn golub_welsch(offdiag: &[f64], mu0: f64) -> Result<Rule> {
    let n = offdiag.len() + 1;
    let mut t = Array2::<f64>::zeros((n, n));
    for (i, &b) in offdiag.iter().enumerate() {
        t[[i, i + 1]] = b;
        t[[i + 1, i]] = b;
    }
    let (x, v) = t.eigh(UPLO::Lower).map_err(|e| Error::Numerical(format!("quadrature eigenproblem failed: {e}")))?;
    Ok(Rule { nodes: x.to_vec(), weights: v.row(0).iter().map(|c| mu0 * c * c).collect() })
}

/// `int exp(-x^2) f(x) dx` over the real line.
pub fn gauss_hermite(n: usize) -> Result<Rule> {
    if n == 0 {
        return invalid("quadrature needs at least one node");
    }
    let b: Vec<f64> = (1..n).map(|i| (i as f64 / 2.0).sqrt()).collect();
    golub_welsch(&b, std::f64::consts::PI.sqrt())
}

/// `int f(x) dx` over `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> Result<Rule> {
    if n == 0 {
        return invalid("quadrature needs at least one node");
    }
    let b: Vec<f64> = (1..n)
        .map(|i| {
            let i = i as f64;
            i / (4.0 * i * i - 1.0).sqrt()
        })
        .collect();
    golub_welsch(&b, 2.0)
}

/// Composite Gauss-Legendre over `[a, b]` with `panels` equal panels.
pub fn composite<F: Fn(f64) -> f64>(rule: &Rule, a: f64, b: f64, panels: usize, f: F) -> f64 {
    let h = (b - a) / panels as f64;
    let mut acc = 0.0;
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * h;
        for (x, w) in rule.nodes.iter().zip(&rule.weights) {
            acc += w * f(mid + 0.5 * h * x);
        }
    }
    acc * 0.5 * h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_moments() {
        let r = gauss_hermite(20).unwrap();
        let m0: f64 = r.weights.iter().sum();
        let m2: f64 = r.nodes.iter().zip(&r.weights).map(|(x, w)| w * x * x).sum();
        let pi = std::f64::consts::PI;
        assert!((m0 - pi.sqrt()).abs() < 1e-13);
        assert!((m2 - pi.sqrt() / 2.0).abs() < 1e-13);
    }

    #[test]
    fn legendre_polynomials_exact() {
        let r = gauss_legendre(5).unwrap();
        // exact through degree 9
        let v: f64 = r.nodes.iter().zip(&r.weights).map(|(x, w)| w * x.powi(8)).sum();
        assert!((v - 2.0 / 9.0).abs() < 1e-14);
        let s = composite(&r, 0.0, std::f64::consts::PI, 8, f64::sin);
        assert!((s - 2.0).abs() < 1e-13);
        assert!(gauss_legendre(0).is_err());
    }
}
