use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{alpha_of_gamma, sphere_measure, ModelParams};
use crate::quadrature::GridMomentRule;
use crate::solver::{PowerLaw, RadialGrid, Sensitivity, State};

use super::moment::{node_ws, phi_moment, taxis_density, MomentTerms};

/// One row of the diagnostic report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckEntry {
    pub name: String,
    pub pass: bool,
    pub margin_or_ratio: f64,
    pub tolerance: f64,
    pub refinement_order_observed: Option<f64>,
}

/// Centred derivative on a nonuniform time grid, at interior samples
/// `1..n−1`; `out[i−1]` belongs to sample `i`.
pub fn dphi_fd(t: &[f64], phi: &[f64]) -> Result<Vec<f64>> {
    if t.len() < 3 || phi.len() != t.len() {
        return Err(Error::InsufficientSamples { needed: 3, got: t.len().min(phi.len()) });
    }
    Ok((1..t.len() - 1)
        .map(|i| {
            let (h1, h2) = (t[i] - t[i - 1], t[i + 1] - t[i]);
            -h2 / (h1 * (h1 + h2)) * phi[i - 1] + (h2 - h1) / (h1 * h2) * phi[i] + h1 / (h2 * (h1 + h2)) * phi[i + 1]
        })
        .collect())
}

/// Outcome of comparing `dφ/dt` with `I₁ + I₂ + I₃` along a series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub max_rel_deviation: f64,
    /// Sample index (into the input) of the worst deviation.
    pub worst_index: usize,
    pub samples: usize,
}

/// `ε_floor = 1e−12 max(1, M₀ s₀^{2−γ})`, the denominator guard for
/// relative comparisons near steady states.
pub fn identity_floor(total_mass: f64, gamma: f64, s0: f64) -> f64 {
    1e-12 * (total_mass * s0.powf(2.0 - gamma)).max(1.0)
}

/// Relative size of the rounding left when `I₁ + I₂ + I₃` cancels.
const CANCELLATION: f64 = 1e-9;

/// Worst `|dφ_fd − ΣI| / max(|dφ_fd|, ε_floor, 1e−9 Σ|Iᵢ|)` over the interior
/// samples. The last guard covers equilibria, where the terms cancel to
/// rounding level and `ε_floor` alone would compare noise with noise.
pub fn check_identity(t: &[f64], terms: &[MomentTerms], floor: f64) -> Result<IdentityReport> {
    let phi: Vec<f64> = terms.iter().map(|x| x.phi).collect();
    let d = dphi_fd(t, &phi)?;
    let mut worst = (0.0, 1);
    for (k, dk) in d.iter().enumerate() {
        let i = k + 1;
        let x = terms[i];
        let scale = CANCELLATION * (x.i1.abs() + x.i2.abs() + x.i3.abs());
        let rel = (dk - x.i_sum()).abs() / dk.abs().max(floor).max(scale);
        if !(rel <= worst.0) {
            worst = (rel, i);
        }
    }
    Ok(IdentityReport { max_rel_deviation: worst.0, worst_index: worst.1, samples: t.len() })
}

/// `log₂(e_coarse / e_fine)` for a refinement by a factor of two.
pub fn observed_order(coarse: f64, fine: f64) -> f64 {
    (coarse / fine).log2()
}

/// `I₂ − C ∫ s^{−γ+(1−2/N)k}(s₀−s) w w_s` with `C = Nχ₀(aR^{N−2} + C_v)^{−k}`,
/// where `I₂` uses `χ(v) = χ₀(a+v)^{−k}`.
pub fn check_i2_lower(state: &State, grid: &RadialGrid, gamma: f64, s0: f64, params: &ModelParams, cv: f64) -> Result<f64> {
    let n = grid.n();
    let chi = PowerLaw::from_params(params);
    let rule = GridMomentRule::new(&grid.s_nodes, gamma, s0)?;
    let ws = node_ws(&state.w, grid);
    let c = n * params.chi0 * (params.a * params.radius.powf(n - 2.0) + cv).powf(-params.k);
    let e = (1.0 - 2.0 / n) * params.k;
    let s = &grid.s_nodes;
    let i2 = n * rule.apply_with(|j| taxis_density(&chi, state.v[j], state.w[j] * ws[j]));
    let rhs = c * rule.apply_with(|j| s[j].powf(e) * state.w[j] * ws[j]);
    Ok(i2 - rhs)
}

/// Geometric sample points in `(0, s₀)` for [`check_lem35`].
pub fn default_lem35_samples(s0: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|i| s0 * 1e-6f64.powf(1.0 - i as f64 / count as f64))
        .collect()
}

/// Worst ratio `w(s) / (√2 s^{α/2} (s₀−s)^{−1/2} (∫₀^{s₀} s^{−α}(s₀−s) w w_s)^{1/2})`
/// over the sample points, with `w` interpolated linearly between nodes.
pub fn check_lem35(state: &State, grid: &RadialGrid, gamma: f64, s0: f64, n: u32, k: f64, sample_s: &[f64]) -> Result<f64> {
    let alpha = alpha_of_gamma(gamma, n, k)?;
    let rule = GridMomentRule::new(&grid.s_nodes, alpha, s0)?;
    let ws = node_ws(&state.w, grid);
    let q = rule.apply_with(|j| state.w[j] * ws[j]);
    let mut worst: f64 = 0.0;
    for &s in sample_s {
        if !(s > 0.0 && s < s0) {
            return Err(Error::Domain(format!("sample point {s} outside (0, {s0})")));
        }
        let w = interpolate(&grid.s_nodes, &state.w, s);
        let bound = 2f64.sqrt() * s.powf(alpha / 2.0) * (s0 - s).powf(-0.5) * q.sqrt();
        let ratio = if w == 0.0 { 0.0 } else { w / bound };
        worst = worst.max(ratio);
    }
    Ok(worst)
}

fn interpolate(nodes: &[f64], values: &[f64], s: f64) -> f64 {
    let j = nodes.partition_point(|&x| x <= s).clamp(1, nodes.len() - 1);
    let (a, b) = (nodes[j - 1], nodes[j]);
    values[j - 1] + (values[j] - values[j - 1]) * (s - a) / (b - a)
}

/// `φ(s₀, 0) − η² M₁/ω · s₀^{2−γ}` with `η = eta_frac`; requires at least
/// `M₁` inside the ball of volume coordinate `(1−η)s₀`.
pub fn check_initial_moment(state: &State, grid: &RadialGrid, gamma: f64, s0: f64, eta_frac: f64, inner_mass: f64) -> Result<f64> {
    if !(eta_frac > 0.0 && eta_frac < 1.0) {
        return Err(Error::InvalidParameter(format!("eta_frac={eta_frac} must lie in (0,1)")));
    }
    let omega = sphere_measure(grid.dim);
    let s_eta = (1.0 - eta_frac) * s0;
    let held = omega * interpolate(&grid.s_nodes, &state.w, s_eta);
    if held < inner_mass * (1.0 - 1e-12) {
        return Err(Error::Domain(format!(
            "only {held:e} of mass inside s = {s_eta:e}, below M1 = {inner_mass:e}; the bound does not apply"
        )));
    }
    let phi = phi_moment(&state.w, grid, gamma, s0)?;
    Ok(phi - eta_frac * eta_frac * inner_mass / omega * s0.powf(2.0 - gamma))
}

/// Convenience: `I₂` for an arbitrary sensitivity, for comparisons in tests.
pub fn i2_with(state: &State, grid: &RadialGrid, gamma: f64, s0: f64, chi: &dyn Sensitivity) -> Result<f64> {
    let rule = GridMomentRule::new(&grid.s_nodes, gamma, s0)?;
    let ws = node_ws(&state.w, grid);
    Ok(grid.n() * rule.apply_with(|j| taxis_density(chi, state.v[j], state.w[j] * ws[j])))
}
