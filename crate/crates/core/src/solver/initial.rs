use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{sphere_measure, ModelParams};
use crate::quadrature::{integrate, Tolerance};

use super::grid::RadialGrid;
use super::state::State;

/// Continuous radial initial density: a capped power law `min(A, L r^{-p})`
/// on `[0, r₁]`, continued outside by a cosine taper from the value at `r₁`
/// plus a smooth compactly supported bump, all under the envelope `L r^{-p}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialProfile {
    pub dim: u32,
    pub radius: f64,
    pub envelope: f64,
    pub p: f64,
    pub r1: f64,
    /// Cap level `A`.
    pub cap: f64,
    /// Mass placed inside `B_{r₁}`.
    pub inner_mass: f64,
    pub taper_width: f64,
    pub bump_amplitude: f64,
}

impl InitialProfile {
    fn n(&self) -> f64 {
        f64::from(self.dim)
    }

    fn edge_value(&self) -> f64 {
        self.cap.min(self.envelope * self.r1.powf(-self.p))
    }

    fn taper(&self, r: f64) -> f64 {
        let x = (r - self.r1) / self.taper_width;
        if x >= 1.0 {
            0.0
        } else {
            0.5 * (1.0 + (std::f64::consts::PI * x).cos())
        }
    }

    fn bump(&self, r: f64) -> f64 {
        let x = (2.0 * r - self.r1 - self.radius) / (self.radius - self.r1);
        if x.abs() >= 1.0 {
            0.0
        } else {
            (1.0 - 1.0 / (1.0 - x * x)).exp()
        }
    }

    fn outer(&self, r: f64, amplitude: f64) -> f64 {
        let inside = self.edge_value() * self.taper(r) + amplitude * self.bump(r);
        inside.min(self.envelope * r.powf(-self.p))
    }

    pub fn eval(&self, r: f64) -> f64 {
        if r <= self.r1 {
            if r == 0.0 {
                self.cap
            } else {
                self.cap.min(self.envelope * r.powf(-self.p))
            }
        } else {
            self.outer(r, self.bump_amplitude)
        }
    }

    /// Points where the profile is not smooth.
    fn breakpoints(&self) -> [f64; 3] {
        let rc = (self.envelope / self.cap).powf(1.0 / self.p);
        [rc, self.r1, self.r1 + self.taper_width]
    }

    /// `∫₀^{r} ρ^{N−1} u₀ dρ`, by adaptive quadrature split at the kinks.
    pub fn radial_integral(&self, a: f64, b: f64) -> Result<f64> {
        let n = self.n();
        let mut cuts = vec![a];
        cuts.extend(self.breakpoints().iter().copied().filter(|&x| x > a && x < b));
        cuts.push(b);
        cuts.sort_by(f64::total_cmp);
        let scale = self.cap.max(1.0) * b.powf(n);
        let tol = Tolerance { abs: 1e-16 * scale, rel: 1e-13, max_intervals: 2000 };
        let mut total = 0.0;
        for pair in cuts.windows(2) {
            total += integrate(|r| r.powf(n - 1.0) * self.eval(r), pair[0], pair[1], tol)?.value;
        }
        Ok(total)
    }

    /// `∫_{B_r} u₀`.
    pub fn mass_within(&self, r: f64) -> Result<f64> {
        Ok(sphere_measure(self.dim) * self.radial_integral(0.0, r)?)
    }
}

/// Mass of `min(A, L ρ^{-p})` on `B_{r₁}`, in closed form.
fn capped_inner_mass(omega: f64, n: f64, l: f64, p: f64, r1: f64, cap: f64) -> f64 {
    let rc = (l / cap).powf(1.0 / p);
    if rc >= r1 {
        return omega * cap * r1.powf(n) / n;
    }
    let tail = if (n - p).abs() < 1e-12 {
        l * (r1 / rc).ln()
    } else {
        l * (r1.powf(n - p) - rc.powf(n - p)) / (n - p)
    };
    omega * (cap * rc.powf(n) / n + tail)
}

/// Smallest monotone-bisection root of `f(x) = target` on `[lo, hi]`,
/// returning the upper end so that `f(result) ≥ target`.
fn bisect_upper<F: Fn(f64) -> Result<f64>>(f: F, target: f64, mut lo: f64, mut hi: f64) -> Result<f64> {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid)? >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Builds the initial profile and the corresponding discrete state.
///
/// The total mass is `M₀` exactly in the discrete state (the node values of
/// `w` are computed by per-cell quadrature and then pinned to `M₀/ω`), the
/// profile satisfies `u₀ r^p ≤ L` everywhere, and at least `M₁` lies in `B_{r₁}`.
pub fn build_initial_data(params: &ModelParams, p: f64, r1: f64, grid: &RadialGrid) -> Result<(State, InitialProfile)> {
    params.validate()?;
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::InvalidParameter(format!("envelope exponent p={p} must be positive")));
    }
    if !(r1 > 0.0 && r1 < params.radius) {
        return Err(Error::InvalidParameter(format!("r1={r1} must lie in (0, R={})", params.radius)));
    }
    if grid.dim != params.dim || grid.radius != params.radius {
        return Err(Error::InvalidParameter("grid does not match model dimension/radius".into()));
    }
    let n = params.n();
    let omega = sphere_measure(params.dim);
    let (m0, m1, l, big_r) = (params.total_mass, params.inner_mass, params.envelope, params.radius);

    let inner_capacity = if p < n { omega * l * r1.powf(n - p) / (n - p) } else { f64::INFINITY };
    if inner_capacity <= m1 {
        return Err(Error::Infeasible(format!(
            "the envelope L r^-p with L={l}, p={p} holds at most {inner_capacity:e} inside B_{r1}, below M1={m1}"
        )));
    }
    let outer_capacity = omega * l * {
        let e = n - p;
        if e.abs() < 1e-12 {
            (big_r / r1).ln()
        } else {
            (big_r.powf(e) - r1.powf(e)) / e
        }
    };
    // Leave headroom outside; move mass inward if the annulus cannot take it.
    let inner_target = m1.max(m0 - 0.5 * outer_capacity);
    if inner_target >= inner_capacity {
        return Err(Error::Infeasible(format!(
            "remainder {:e} exceeds what fits outside B_{r1} ({outer_capacity:e}) and inside ({inner_capacity:e})",
            m0 - m1
        )));
    }

    let inner = |cap: f64| Ok(capped_inner_mass(omega, n, l, p, r1, cap));
    let mut cap_hi = inner_target * n / (omega * r1.powf(n));
    while inner(cap_hi)? < inner_target {
        cap_hi *= 2.0;
        if !cap_hi.is_finite() {
            return Err(Error::Infeasible("cap level diverged".into()));
        }
    }
    let cap = bisect_upper(inner, inner_target, 0.0, cap_hi)?;
    let inner_mass = capped_inner_mass(omega, n, l, p, r1, cap);
    let remainder = m0 - inner_mass;
    if remainder <= 0.0 {
        return Err(Error::Infeasible(format!("inner mass {inner_mass} leaves no remainder for M0={m0}")));
    }

    let mut profile = InitialProfile {
        dim: params.dim,
        radius: big_r,
        envelope: l,
        p,
        r1,
        cap,
        inner_mass,
        taper_width: 0.25 * (big_r - r1),
        bump_amplitude: 0.0,
    };
    let outer_mass = |prof: &InitialProfile, amp: f64| -> Result<f64> {
        let tol = Tolerance { abs: 1e-15 * m0, rel: 1e-13, max_intervals: 4000 };
        let mut cuts = vec![r1, r1 + prof.taper_width, big_r];
        cuts.dedup();
        let mut total = 0.0;
        for pair in cuts.windows(2) {
            total += integrate(|r| r.powf(n - 1.0) * prof.outer(r, amp), pair[0], pair[1], tol)?.value;
        }
        Ok(omega * total)
    };
    let mut halvings = 0;
    while outer_mass(&profile, 0.0)? > 0.5 * remainder {
        profile.taper_width *= 0.5;
        halvings += 1;
        if halvings > 60 {
            return Err(Error::Infeasible("taper at r1 cannot be made light enough".into()));
        }
    }
    let mut amp_hi = remainder / (omega * r1.max(0.5 * big_r).powf(n - 1.0) * (big_r - r1)).max(1e-300);
    while outer_mass(&profile, amp_hi)? < remainder {
        amp_hi *= 2.0;
        if amp_hi > 1e300 {
            return Err(Error::Infeasible(format!(
                "remainder {remainder:e} does not fit under the envelope outside B_{r1}"
            )));
        }
    }
    profile.bump_amplitude = bisect_upper(|a| outer_mass(&profile, a), remainder, 0.0, amp_hi)?;

    let w_total = params.w_total();
    let mut w = Vec::with_capacity(grid.s_nodes.len());
    let mut acc = 0.0;
    w.push(0.0);
    for c in 0..grid.cells() {
        acc += profile.radial_integral(grid.r_nodes[c], grid.r_nodes[c + 1])?;
        w.push(acc);
    }
    let scale = w_total / acc;
    if (scale - 1.0).abs() > 1e-9 {
        return Err(Error::NonConvergence { achieved: (scale - 1.0).abs(), requested: 1e-9 });
    }
    for x in &mut w {
        *x *= scale;
    }
    let last = grid.cells();
    w[last] = w_total;
    let state = State::from_w(0.0, w, grid, 1e-12 * m0)?;
    Ok((state, profile))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(m0: f64, m1: f64, l: f64) -> ModelParams {
        ModelParams {
            dim: 3,
            radius: 1.0,
            m: 1.0,
            chi0: 10.0,
            a: 0.0,
            k: 0.5,
            total_mass: m0,
            inner_mass: m1,
            envelope: l,
        }
    }

    #[test]
    fn concentrated_profile_meets_all_constraints() {
        let prm = params(10.0, 8.0, 1.0);
        let grid = RadialGrid::new(3, 1.0, 512, 3.0).unwrap();
        let (st, prof) = build_initial_data(&prm, 7.0, 0.2, &grid).unwrap();
        let omega = sphere_measure(3);
        assert!((st.w[512] * omega - 10.0).abs() <= 1e-10 * 10.0);
        assert!((st.mass_u(&grid, omega) - 10.0).abs() <= 1e-10 * 10.0);
        assert!(prof.mass_within(0.2).unwrap() >= 8.0 * (1.0 - 1e-12));
        assert!((prof.mass_within(1.0).unwrap() - 10.0).abs() < 1e-9);
        for &r in &grid.r_nodes[1..] {
            assert!(prof.eval(r) * r.powf(7.0) <= 1.0 * (1.0 + 1e-12));
        }
        assert!(st.u.iter().all(|&u| u >= 0.0));
        // Continuity across r1.
        let eps = 1e-9;
        assert!((prof.eval(0.2 - eps) - prof.eval(0.2 + eps)).abs() < 1e-4 * prof.eval(0.2));
    }

    #[test]
    fn inner_mass_closed_form_matches_quadrature() {
        let omega = sphere_measure(3);
        for &(p, cap) in &[(7.0, 1e4), (2.0, 50.0), (3.0, 1e3)] {
            let exact = capped_inner_mass(omega, 3.0, 1.0, p, 0.3, cap);
            let rc: f64 = (1.0f64 / cap).powf(1.0 / p);
            let tol = Tolerance::default();
            let f = |r: f64| r * r * cap.min(r.powf(-p));
            let q = integrate(f, 0.0, rc.min(0.3), tol).unwrap().value
                + if rc < 0.3 { integrate(f, rc, 0.3, tol).unwrap().value } else { 0.0 };
            assert!((exact - omega * q).abs() < 1e-11 * exact, "p={p}");
        }
    }

    #[test]
    fn infeasible_when_envelope_is_integrable_and_too_small() {
        // p < N: the envelope holds 4π L r1^{N−p}/(N−p) ≈ 0.126 inside B_0.01.
        let prm = params(10.0, 9.999, 1.0);
        let grid = RadialGrid::new(3, 1.0, 64, 3.0).unwrap();
        let err = build_initial_data(&prm, 2.0, 0.01, &grid).unwrap_err();
        assert!(matches!(err, Error::Infeasible(_)), "{err}");
    }

    #[test]
    fn nonintegrable_envelope_admits_any_inner_mass() {
        // With p >= N the capped power law can hold any mass near the origin.
        let prm = params(10.0, 9.999, 1.0);
        let grid = RadialGrid::new(3, 1.0, 256, 4.0).unwrap();
        let (_, prof) = build_initial_data(&prm, 6.0, 0.01, &grid).unwrap();
        assert!(prof.mass_within(0.01).unwrap() >= 9.999 * (1.0 - 1e-12));
    }

    #[test]
    fn rejects_bad_radius() {
        let prm = params(10.0, 8.0, 1.0);
        let grid = RadialGrid::new(3, 1.0, 64, 3.0).unwrap();
        assert!(build_initial_data(&prm, 7.0, 1.5, &grid).is_err());
        assert!(build_initial_data(&prm, -1.0, 0.2, &grid).is_err());
    }
}
