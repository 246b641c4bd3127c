use serde::{Deserialize, Serialize};

use crate::solver::{RadialGrid, State};

/// Empirical constants of the pointwise envelopes at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeTrace {
    pub t: f64,
    /// `sup_r u r^p`.
    pub k_emp: f64,
    /// `max(sup_r v r^{N−2}, sup_r |v_r| r^{N−1})`.
    pub cv_emp: f64,
    pub v_min: f64,
}

/// Suprema over the nodes with `r > 0`. The discrete `r^{N−1} v_r` at node
/// `j` is `z_j − w_j`.
pub fn empirical_envelopes(state: &State, grid: &RadialGrid, p: f64) -> EnvelopeTrace {
    let n = grid.n();
    let u = state.u_nodes(grid);
    let mut k_emp: f64 = 0.0;
    let mut cv_emp: f64 = 0.0;
    for j in 1..grid.r_nodes.len() {
        let r = grid.r_nodes[j];
        k_emp = k_emp.max(u[j] * r.powf(p));
        cv_emp = cv_emp.max(state.v[j] * r.powf(n - 2.0)).max((state.z[j] - state.w[j]).abs());
    }
    EnvelopeTrace { t: state.t, k_emp, cv_emp, v_min: state.v_min() }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_fields() {
        let grid = RadialGrid::new(3, 2.0, 64, 3.0).unwrap();
        let st = State::from_u(0.0, vec![1.5; 64], &grid).unwrap();
        let e = empirical_envelopes(&st, &grid, 4.0);
        assert!((e.k_emp - 1.5 * 2f64.powi(4)).abs() < 1e-12);
        assert!((e.cv_emp - 1.5 * 2.0).abs() < 1e-12);
        assert!((e.v_min - 1.5).abs() < 1e-12);
    }
}
