use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::elliptic::{cumulative_cells, differentiate_w, solve_elliptic};
use super::grid::RadialGrid;

/// Solution at one time level. `w`, `v` and `z` live on the nodes, `u` and
/// `v_cells` are cell averages with `u_c = N (w_{c+1} − w_c) / Δs_c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub t: f64,
    pub w: Vec<f64>,
    pub u: Vec<f64>,
    pub v_cells: Vec<f64>,
    pub v: Vec<f64>,
    pub z: Vec<f64>,
}

impl State {
    /// Builds a state from node values of `w`, recovering `u` and solving for
    /// `v`. Cell values of `u` in `[−tol_neg, 0)` are clipped to zero; anything
    /// more negative is rejected.
    pub fn from_w(t: f64, w: Vec<f64>, grid: &RadialGrid, tol_neg: f64) -> Result<Self> {
        if w.len() != grid.s_nodes.len() {
            return Err(Error::InvalidParameter(format!(
                "expected {} node values, got {}",
                grid.s_nodes.len(),
                w.len()
            )));
        }
        let mut w = w;
        let u = differentiate_w(&w, grid);
        for (c, &uc) in u.iter().enumerate() {
            if !uc.is_finite() {
                return Err(Error::StepRejected(format!("non-finite density in cell {c}")));
            }
            if uc < -tol_neg {
                return Err(Error::StepRejected(format!("density {uc:e} in cell {c} below -{tol_neg:e}")));
            }
        }
        // Clip tiny negative densities by flattening w, so that w stays exactly
        // nondecreasing and u is its difference quotient.
        if u.iter().any(|&uc| uc < 0.0) {
            for j in 1..w.len() {
                w[j] = w[j].max(w[j - 1]);
            }
        }
        let u = differentiate_w(&w, grid).into_iter().map(|x| x.max(0.0)).collect();
        Self::assemble(t, w, u, grid)
    }

    /// Builds a state from cell averages of `u`; `w` is their cumulative sum.
    pub fn from_u(t: f64, u: Vec<f64>, grid: &RadialGrid) -> Result<Self> {
        let w = cumulative_cells(&u, grid);
        Self::assemble(t, w, u, grid)
    }

    fn assemble(t: f64, w: Vec<f64>, u: Vec<f64>, grid: &RadialGrid) -> Result<Self> {
        let sol = solve_elliptic(&u, grid)?;
        Ok(Self { t, w, u, v_cells: sol.v_cells, v: sol.v_nodes, z: sol.z })
    }

    pub fn u_max(&self) -> f64 {
        self.u.iter().copied().fold(0.0, f64::max)
    }

    pub fn v_min(&self) -> f64 {
        self.v.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `u` interpolated to the nodes.
    pub fn u_nodes(&self, grid: &RadialGrid) -> Vec<f64> {
        grid.cells_to_nodes(&self.u)
    }

    /// `∫_Ω u` from the cell averages and the shell volumes `ω (r_{c+1}^N − r_c^N)/N`.
    pub fn mass_u(&self, grid: &RadialGrid, omega: f64) -> f64 {
        shell_integral(&self.u, grid, omega)
    }

    pub fn mass_v(&self, grid: &RadialGrid, omega: f64) -> f64 {
        shell_integral(&self.v_cells, grid, omega)
    }
}

fn shell_integral(cells: &[f64], grid: &RadialGrid, omega: f64) -> f64 {
    let n = grid.n();
    let r = &grid.r_nodes;
    let total: f64 = cells
        .iter()
        .enumerate()
        .map(|(c, f)| f * (r[c + 1].powf(n) - r[c].powf(n)))
        .sum();
    omega * total / n
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::sphere_measure;

    #[test]
    fn constant_density_state() {
        let grid = RadialGrid::new(3, 1.0, 40, 3.0).unwrap();
        let st = State::from_u(0.0, vec![2.0; 40], &grid).unwrap();
        let omega = sphere_measure(3);
        let ball = omega / 3.0;
        assert!((st.mass_u(&grid, omega) - 2.0 * ball).abs() < 1e-13);
        assert!((st.mass_v(&grid, omega) - 2.0 * ball).abs() < 1e-13);
        assert!((st.w[40] - 2.0 / 3.0).abs() < 1e-15);
        assert!((st.v_min() - 2.0).abs() < 1e-13);
        assert_eq!(st.u_max(), 2.0);
    }

    #[test]
    fn clipping_and_rejection() {
        let grid = RadialGrid::new(3, 1.0, 4, 3.0).unwrap();
        let mut w = grid.s_nodes.iter().map(|s| s / 3.0).collect::<Vec<_>>();
        w[2] = w[1] - 1e-15;
        let st = State::from_w(0.0, w.clone(), &grid, 1e-12).unwrap();
        assert_eq!(st.u[1], 0.0);
        w[2] = w[1] - 1e-3;
        assert!(matches!(State::from_w(0.0, w, &grid, 1e-12), Err(Error::StepRejected(_))));
    }
}
