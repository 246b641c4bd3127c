use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::params::ModelParams;
use crate::quadrature::{singular_moment_quad, GridMomentRule};
use crate::solver::{RadialGrid, Sensitivity, State};

/// One moment functional `φ(s₀, t) = ∫₀^{s₀} s^{−γ}(s₀ − s) w ds`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentSpec {
    pub gamma: f64,
    pub s0: f64,
}

/// Moment value and the three terms of its time derivative at one instant.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MomentTerms {
    pub phi: f64,
    pub i1: f64,
    pub i2: f64,
    pub i3: f64,
}

impl MomentTerms {
    pub fn i_sum(&self) -> f64 {
        self.i1 + self.i2 + self.i3
    }
}

pub fn phi_moment(w: &[f64], grid: &RadialGrid, gamma: f64, s0: f64) -> Result<f64> {
    singular_moment_quad(&grid.s_nodes, w, gamma, s0)
}

/// Second-order `w_s` at every node: the nonuniform centred difference inside,
/// one-sided at the two ends.
pub fn node_ws(w: &[f64], grid: &RadialGrid) -> Vec<f64> {
    let s = &grid.s_nodes;
    let jc = grid.cells();
    let mut out = vec![0.0; jc + 1];
    out[0] = (w[1] - w[0]) / (s[1] - s[0]);
    out[jc] = (w[jc] - w[jc - 1]) / (s[jc] - s[jc - 1]);
    for j in 1..jc {
        let (hl, hr) = (s[j] - s[j - 1], s[j + 1] - s[j]);
        out[j] = (hl * hl * (w[j + 1] - w[j]) + hr * hr * (w[j] - w[j - 1])) / (hl * hr * (hl + hr));
    }
    out
}

/// Three-point `w_ss` at interior nodes; the end values copy their neighbours.
pub fn node_wss(w: &[f64], grid: &RadialGrid) -> Vec<f64> {
    let s = &grid.s_nodes;
    let jc = grid.cells();
    let mut out = vec![0.0; jc + 1];
    for j in 1..jc {
        let (hl, hr) = (s[j] - s[j - 1], s[j + 1] - s[j]);
        out[j] = 2.0 / (hl + hr) * ((w[j + 1] - w[j]) / hr - (w[j] - w[j - 1]) / hl);
    }
    out[0] = out[1];
    out[jc] = out[jc - 1];
    out
}

/// `χ(v) g`, taken as zero where `g` vanishes so that a singular `χ` at
/// `v = 0` does not produce `0 · ∞`.
pub(crate) fn taxis_density(chi: &dyn Sensitivity, v: f64, g: f64) -> f64 {
    if g == 0.0 {
        0.0
    } else {
        chi.chi(v) * g
    }
}

/// Precomputed quadrature weights for repeated evaluation on one grid.
#[derive(Debug, Clone)]
pub struct MomentEvaluator {
    pub spec: MomentSpec,
    rule: GridMomentRule,
}

impl MomentEvaluator {
    pub fn new(grid: &RadialGrid, spec: MomentSpec) -> Result<Self> {
        Ok(Self { spec, rule: GridMomentRule::new(&grid.s_nodes, spec.gamma, spec.s0)? })
    }

    pub fn phi(&self, w: &[f64]) -> f64 {
        self.rule.apply(w)
    }

    /// `φ` together with
    /// `I₁ = m N² ∫ s^{2−2/N−γ}(s₀−s)(N w_s + 1)^{m−1} w_ss`,
    /// `I₂ = N ∫ s^{−γ}(s₀−s) χ(v) w w_s` and
    /// `I₃ = −N ∫ s^{−γ}(s₀−s) χ(v) z w_s`.
    pub fn terms(&self, state: &State, grid: &RadialGrid, m: f64, chi: &dyn Sensitivity) -> MomentTerms {
        let n = grid.n();
        let ws = node_ws(&state.w, grid);
        let wss = node_wss(&state.w, grid);
        let s = &grid.s_nodes;
        let i1 = self.rule.apply_with(|j| {
            m * n * n * s[j].powf(2.0 - 2.0 / n) * (n * ws[j] + 1.0).powf(m - 1.0) * wss[j]
        });
        let i2 = n * self.rule.apply_with(|j| taxis_density(chi, state.v[j], state.w[j] * ws[j]));
        let i3 = -n * self.rule.apply_with(|j| taxis_density(chi, state.v[j], state.z[j] * ws[j]));
        MomentTerms { phi: self.phi(&state.w), i1, i2, i3 }
    }
}

/// Convenience wrapper building the rule on the fly.
pub fn ddt_phi_terms(
    state: &State,
    grid: &RadialGrid,
    spec: MomentSpec,
    params: &ModelParams,
    chi: &dyn Sensitivity,
) -> Result<MomentTerms> {
    Ok(MomentEvaluator::new(grid, spec)?.terms(state, grid, params.m, chi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::beta;
    use crate::solver::{NoTaxis, PowerLaw};

    #[test]
    fn closed_forms() {
        let grid = RadialGrid::new(3, 1.0, 400, 3.0).unwrap();
        let (gamma, s0) = (0.4, 0.7);
        let w_const = vec![2.5; 401];
        let phi = phi_moment(&w_const, &grid, gamma, s0).unwrap();
        let exact = 2.5 * beta(1.0 - gamma, 2.0) * s0.powf(2.0 - gamma);
        assert!((phi - exact).abs() < 1e-12 * exact);
        assert_eq!(phi_moment(&vec![0.0; 401], &grid, gamma, s0).unwrap(), 0.0);
        let c = 3.0;
        let w_lin: Vec<f64> = grid.s_nodes.iter().map(|s| c * s / 3.0).collect();
        let phi = phi_moment(&w_lin, &grid, gamma, s0).unwrap();
        let exact = c / 3.0 * beta(2.0 - gamma, 2.0) * s0.powf(3.0 - gamma);
        assert!((phi - exact).abs() < 1e-12 * exact);
    }

    #[test]
    fn derivative_stencils_exact_on_quadratics() {
        let grid = RadialGrid::new(3, 1.0, 30, 2.0).unwrap();
        let w: Vec<f64> = grid.s_nodes.iter().map(|s| 1.0 + 2.0 * s + 3.0 * s * s).collect();
        let ws = node_ws(&w, &grid);
        let wss = node_wss(&w, &grid);
        for j in 1..30 {
            let s = grid.s_nodes[j];
            assert!((ws[j] - (2.0 + 6.0 * s)).abs() < 1e-10);
            assert!((wss[j] - 6.0).abs() < 1e-8);
        }
    }

    #[test]
    fn zero_taxis_and_constant_density() {
        let grid = RadialGrid::new(3, 1.0, 100, 3.0).unwrap();
        let st = State::from_u(0.0, vec![2.0; 100], &grid).unwrap();
        let params = ModelParams {
            dim: 3,
            radius: 1.0,
            m: 1.0,
            chi0: 5.0,
            a: 0.0,
            k: 0.5,
            total_mass: 1.0,
            inner_mass: 0.5,
            envelope: 1.0,
        };
        let spec = MomentSpec { gamma: 0.4, s0: 0.5 };
        let t = ddt_phi_terms(&st, &grid, spec, &params, &NoTaxis).unwrap();
        assert_eq!((t.i2, t.i3), (0.0, 0.0));
        assert!(t.i1.abs() < 1e-9);
        let chi = PowerLaw::from_params(&params);
        let t = ddt_phi_terms(&st, &grid, spec, &params, &chi).unwrap();
        // u ≡ v gives z = w, so the two taxis terms cancel.
        assert!((t.i2 + t.i3).abs() < 1e-12 * t.i2.abs());
    }
}
