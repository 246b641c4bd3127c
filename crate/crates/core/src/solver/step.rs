use crate::error::Result;
use crate::params::ModelParams;

use super::grid::RadialGrid;
use super::sensitivity::Sensitivity;
use super::state::State;
use super::tridiag::solve_tridiagonal;

/// One-step map for the `w` equation
/// `w_t = m N² s^{2−2/N} (N w_s + 1)^{m−1} w_ss − N χ(N z_s) w_s (z − w)`.
pub struct Stepper<'a> {
    pub grid: &'a RadialGrid,
    pub chi: &'a dyn Sensitivity,
    pub m: f64,
    /// Pinned right-end value `M₀ / ω_{N−1}`.
    pub w_total: f64,
    /// Cells with `u < −tol_neg` reject the step.
    pub tol_neg: f64,
}

impl<'a> Stepper<'a> {
    pub fn new(params: &ModelParams, grid: &'a RadialGrid, chi: &'a dyn Sensitivity) -> Self {
        Self {
            grid,
            chi,
            m: params.m,
            w_total: params.w_total(),
            tol_neg: 1e-12 * params.total_mass,
        }
    }

    /// Advective transport speed at node `j` as it enters the cell update:
    /// `χ(v_j) (z_j − w_j)`.
    fn drift(&self, state: &State, j: usize) -> f64 {
        let d = state.z[j] - state.w[j];
        if d == 0.0 {
            0.0
        } else {
            self.chi.chi(state.v[j]) * d
        }
    }

    /// Largest `dt` for which the explicit upwind transport keeps every cell
    /// nonnegative. Infinite when there is no transport.
    pub fn transport_dt_limit(&self, state: &State) -> f64 {
        let grid = self.grid;
        let jc = grid.cells();
        let n = grid.n();
        let drift: Vec<f64> = (0..=jc)
            .map(|j| if j == 0 || j == jc { 0.0 } else { self.drift(state, j) })
            .collect();
        let mut rate: f64 = 0.0;
        for c in 0..jc {
            let out = drift[c + 1].max(0.0) + (-drift[c]).max(0.0);
            rate = rate.max(n * out / grid.ds(c));
        }
        if rate > 0.0 {
            1.0 / rate
        } else {
            f64::INFINITY
        }
    }

    /// Explicit upwind transport followed by an implicit diffusion solve with
    /// the coefficient frozen at the current state. Endpoints are pinned.
    pub fn step(&self, state: &State, dt: f64) -> Result<State> {
        let grid = self.grid;
        let jc = grid.cells();
        let n = grid.n();
        let s = &grid.s_nodes;

        let mut rhs = vec![0.0; jc - 1];
        for j in 1..jc {
            let d = self.drift(state, j);
            let upwind = if d > 0.0 { state.u[j - 1] } else { state.u[j] };
            rhs[j - 1] = state.w[j] - dt * d * upwind;
        }

        let u_nodes = grid.cells_to_nodes(&state.u);
        let mut lower = vec![0.0; jc - 1];
        let mut diag = vec![0.0; jc - 1];
        let mut upper = vec![0.0; jc - 1];
        for j in 1..jc {
            let (hl, hr) = (s[j] - s[j - 1], s[j + 1] - s[j]);
            let coef = self.m * n * n * s[j].powf(2.0 - 2.0 / n) * (u_nodes[j] + 1.0).powf(self.m - 1.0);
            let al = dt * coef * 2.0 / (hl * (hl + hr));
            let ar = dt * coef * 2.0 / (hr * (hl + hr));
            lower[j - 1] = -al;
            upper[j - 1] = -ar;
            diag[j - 1] = 1.0 + al + ar;
        }
        // Dirichlet data: w_0 = 0 drops out, w_J moves to the right-hand side.
        rhs[jc - 2] -= upper[jc - 2] * self.w_total;
        upper[jc - 2] = 0.0;
        let interior = solve_tridiagonal(&lower, &diag, &upper, &rhs)?;

        let mut w = Vec::with_capacity(jc + 1);
        w.push(0.0);
        w.extend(interior);
        w.push(self.w_total);
        State::from_w(state.t + dt, w, grid, self.tol_neg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::sphere_measure;
    use crate::solver::sensitivity::{NoTaxis, PowerLaw};

    fn params(m: f64, mass: f64) -> ModelParams {
        ModelParams {
            dim: 3,
            radius: 1.0,
            m,
            chi0: 1.0,
            a: 0.0,
            k: 0.5,
            total_mass: mass,
            inner_mass: 0.5 * mass,
            envelope: 1.0,
        }
    }

    #[test]
    fn constant_state_is_steady_without_taxis() {
        let grid = RadialGrid::new(3, 1.0, 64, 3.0).unwrap();
        let c = 1.3;
        let p = params(1.5, c * sphere_measure(3) / 3.0);
        let st0 = State::from_u(0.0, vec![c; 64], &grid).unwrap();
        let stepper = Stepper::new(&p, &grid, &NoTaxis);
        let mut st = st0.clone();
        for _ in 0..20 {
            st = stepper.step(&st, 0.01).unwrap();
        }
        for (a, b) in st.w.iter().zip(&st0.w) {
            assert!((a - b).abs() < 1e-13);
        }
        for u in &st.u {
            assert!((u - c).abs() < 1e-11);
        }
    }

    fn smooth_state(grid: &RadialGrid, p: &ModelParams) -> State {
        let u: Vec<f64> = grid.centroids().iter().map(|r| 1.0 + 4.0 * (-8.0 * r * r).exp()).collect();
        let st = State::from_u(0.0, u, grid).unwrap();
        // Rescale to the prescribed mass so the pinned endpoint matches.
        let scale = p.w_total() / st.w[grid.cells()];
        State::from_u(0.0, st.u.iter().map(|x| x * scale).collect(), grid).unwrap()
    }

    #[test]
    fn endpoints_are_pinned() {
        let grid = RadialGrid::new(3, 1.0, 64, 3.0).unwrap();
        let p = params(1.0, 5.0);
        let chi = PowerLaw { chi0: 3.0, a: 0.0, k: 0.5 };
        let stepper = Stepper::new(&p, &grid, &chi);
        let mut st = smooth_state(&grid, &p);
        for _ in 0..50 {
            let dt = 0.5 * stepper.transport_dt_limit(&st).min(1e-3);
            st = stepper.step(&st, dt).unwrap();
            assert_eq!(st.w[0], 0.0);
            assert_eq!(st.w[64], p.w_total());
            assert!(st.w.windows(2).all(|x| x[1] >= x[0]));
        }
    }

    /// Fully explicit Euler for the same semi-discretisation, with the
    /// coefficients refreshed every substep.
    fn explicit_reference(stepper: &Stepper, st: &State, dt: f64, substeps: usize) -> State {
        let grid = stepper.grid;
        let jc = grid.cells();
        let n = grid.n();
        let s = &grid.s_nodes;
        let h = dt / substeps as f64;
        let mut cur = st.clone();
        for _ in 0..substeps {
            let u_nodes = grid.cells_to_nodes(&cur.u);
            let mut w = cur.w.clone();
            for j in 1..jc {
                let d = stepper.drift(&cur, j);
                let up = if d > 0.0 { cur.u[j - 1] } else { cur.u[j] };
                let (hl, hr) = (s[j] - s[j - 1], s[j + 1] - s[j]);
                let wss = 2.0 / (hl + hr) * ((cur.w[j + 1] - cur.w[j]) / hr - (cur.w[j] - cur.w[j - 1]) / hl);
                let coef = stepper.m * n * n * s[j].powf(2.0 - 2.0 / n) * (u_nodes[j] + 1.0).powf(stepper.m - 1.0);
                w[j] += h * (coef * wss - d * up);
            }
            cur = State::from_w(cur.t + h, w, grid, 1e-9).unwrap();
        }
        cur
    }

    #[test]
    fn single_step_matches_fine_explicit_reference_to_first_order() {
        let grid = RadialGrid::new(3, 1.0, 24, 3.0).unwrap();
        let p = params(1.4, 4.0);
        let chi = PowerLaw { chi0: 2.0, a: 0.0, k: 0.5 };
        let stepper = Stepper::new(&p, &grid, &chi);
        let st = smooth_state(&grid, &p);
        let diff = |dt: f64| {
            let a = stepper.step(&st, dt).unwrap();
            let b = explicit_reference(&stepper, &st, dt, 100);
            a.w.iter().zip(&b.w).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
        };
        let d1 = diff(4e-4);
        let d2 = diff(2e-4);
        let d3 = diff(1e-4);
        let o1 = (d1 / d2).log2();
        let o2 = (d2 / d3).log2();
        assert!(o1 > 1.5 && o2 > 1.5, "local error orders {o1} {o2} ({d1:e} {d2:e} {d3:e})");
    }
}
