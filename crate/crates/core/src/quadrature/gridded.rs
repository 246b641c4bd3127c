//! Product integration of gridded data against `s^{-gamma} (s0 - s)`.
//!
//! The data are interpolated piecewise linearly between grid nodes and the
//! weighted integral of the interpolant is taken in closed form, so the
//! rule is exact for piecewise-linear data, second order for smooth data,
//! and every node weight is nonnegative.

use crate::error::{Error, Result};

/// `∫_a^b s^p ds` for `p > -1`, without cancellation for narrow cells.
fn power_moment(p: f64, a: f64, b: f64) -> f64 {
    let q = p + 1.0;
    if a == 0.0 {
        b.powf(q) / q
    } else {
        a.powf(q) * (q * ((b - a) / a).ln_1p()).exp_m1() / q
    }
}

/// Node weights of the product rule on a fixed grid.
#[derive(Debug, Clone)]
pub struct GridMomentRule {
    pub gamma: f64,
    pub s0: f64,
    weights: Vec<f64>,
}

impl GridMomentRule {
    pub fn new(nodes: &[f64], gamma: f64, s0: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&gamma) {
            return Err(Error::Domain(format!("weight exponent gamma={gamma} outside [0, 1)")));
        }
        if nodes.len() < 2 || nodes[0] != 0.0 {
            return Err(Error::Domain("gridded function must start at s = 0".into()));
        }
        let last = *nodes.last().unwrap();
        if !(s0 > 0.0) || s0 > last * (1.0 + 1e-14) {
            return Err(Error::Domain(format!(
                "gridded function on [0, {last}] does not cover [0, {s0}]"
            )));
        }
        let s0 = s0.min(last);
        let mut weights = vec![0.0; nodes.len()];
        for i in 0..nodes.len() - 1 {
            let (a, b) = (nodes[i], nodes[i + 1]);
            if a >= s0 {
                break;
            }
            let end = b.min(s0);
            let h = end - a;
            let m0 = power_moment(-gamma, a, end);
            let m1 = power_moment(1.0 - gamma, a, end);
            let m2 = power_moment(2.0 - gamma, a, end);
            let w0 = s0 * m0 - m1;
            let w1 = s0 * m1 - m2;
            let left = (end * w0 - w1) / h;
            let right = (w1 - a * w0) / h;
            weights[i] += left;
            if end == b {
                weights[i + 1] += right;
            } else {
                // f(s0) interpolated from the enclosing cell.
                let theta = (s0 - a) / (b - a);
                weights[i] += (1.0 - theta) * right;
                weights[i + 1] += theta * right;
            }
        }
        while weights.len() > 1 && *weights.last().unwrap() == 0.0 {
            weights.pop();
        }
        Ok(Self { gamma, s0, weights })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Weighted sum over node values.
    pub fn apply(&self, values: &[f64]) -> f64 {
        debug_assert!(values.len() >= self.weights.len());
        self.weights.iter().zip(values).map(|(w, v)| w * v).sum()
    }

    /// Weighted sum of `f(node, value)` pairs; `f` sees only covered nodes.
    pub fn apply_with<F: Fn(usize) -> f64>(&self, f: F) -> f64 {
        self.weights
            .iter()
            .enumerate()
            .map(|(i, w)| if *w == 0.0 { 0.0 } else { w * f(i) })
            .sum()
    }
}

/// `∫_0^{s0} s^{-gamma} (s0 - s) f(s) ds` for `f` given at `nodes`.
pub fn singular_moment_quad(nodes: &[f64], values: &[f64], gamma: f64, s0: f64) -> Result<f64> {
    if values.len() != nodes.len() {
        return Err(Error::Domain(format!(
            "{} values for {} nodes",
            values.len(),
            nodes.len()
        )));
    }
    Ok(GridMomentRule::new(nodes, gamma, s0)?.apply(values))
}
