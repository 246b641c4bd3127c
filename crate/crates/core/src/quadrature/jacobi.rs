//! Gauss–Jacobi rule for the weight `s^{-gamma} (s0 - s)` on `[0, s0]`.

use nalgebra::{DMatrix, SymmetricEigen};

use super::beta::beta_integral;
use crate::error::{Error, Result};

/// Positive-weight rule exact for `s^{-gamma} (s0 - s) s^j`, `j <= 2n - 1`.
#[derive(Debug, Clone)]
pub struct SingularWeightRule {
    pub gamma: f64,
    pub s0: f64,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl SingularWeightRule {
    pub fn new(gamma: f64, s0: f64, points: usize) -> Result<Self> {
        if !(0.0..1.0).contains(&gamma) {
            return Err(Error::Domain(format!("weight exponent gamma={gamma} outside [0, 1)")));
        }
        if !(s0 > 0.0) || points == 0 {
            return Err(Error::InvalidParameter("rule needs s0 > 0 and at least one point".into()));
        }
        // Jacobi weight (1-x)^alpha (1+x)^beta with s = s0 (1+x)/2.
        let alpha = 1.0;
        let beta = -gamma;
        let ab = alpha + beta;
        let mut jac = DMatrix::<f64>::zeros(points, points);
        for i in 0..points {
            let fi = i as f64;
            let two = 2.0 * fi + ab;
            jac[(i, i)] = (beta * beta - alpha * alpha) / (two * (two + 2.0));
            if i > 0 {
                let b2 = 4.0 * fi * (fi + alpha) * (fi + beta) * (fi + ab)
                    / (two * two * (two + 1.0) * (two - 1.0));
                jac[(i, i - 1)] = b2.sqrt();
                jac[(i - 1, i)] = b2.sqrt();
            }
        }
        let eig = SymmetricEigen::new(jac);
        let mu0 = beta_integral(-gamma, 1.0, s0)?;
        let mut pairs: Vec<(f64, f64)> = (0..points)
            .map(|i| {
                let x = eig.eigenvalues[i];
                let v = eig.eigenvectors[(0, i)];
                (0.5 * s0 * (1.0 + x), mu0 * v * v)
            })
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(Self {
            gamma,
            s0,
            nodes: pairs.iter().map(|p| p.0).collect(),
            weights: pairs.iter().map(|p| p.1).collect(),
        })
    }

    /// Highest polynomial degree integrated exactly.
    pub fn order(&self) -> usize {
        2 * self.nodes.len() - 1
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&s, &w)| w * f(s)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_on_monomials() {
        for &gamma in &[0.0, 0.2, 0.45, 0.9] {
            let s0 = 0.7;
            let rule = SingularWeightRule::new(gamma, s0, 8).unwrap();
            assert!(rule.nodes.iter().all(|&s| s > 0.0 && s < s0));
            assert!(rule.weights.iter().all(|&w| w > 0.0));
            for j in 0..=rule.order() {
                let exact = beta_integral(j as f64 - gamma, 1.0, s0).unwrap();
                let got = rule.integrate(|s| s.powi(j as i32));
                assert!((got - exact).abs() <= 1e-12 * exact, "gamma={gamma} j={j}");
            }
        }
    }

    #[test]
    fn rejects_bad_gamma() {
        assert!(SingularWeightRule::new(1.0, 1.0, 4).is_err());
        assert!(SingularWeightRule::new(-0.1, 1.0, 4).is_err());
    }
}
