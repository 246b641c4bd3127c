use serde::{Deserialize, Serialize};

use crate::params::blowup_time_bound;

/// Empirical constants of `dφ/dt ≥ C₁ s₀^{−3+γ+(1−2/N)k} φ² − C₂ s₀^{3−γ−θ₁}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OdiFit {
    pub feasible: bool,
    pub c1: f64,
    pub c2: f64,
    /// `√(C₂ s₀-factor / C₁ s₀-factor)`: `φ` must exceed this for the bound to bite.
    pub phi_threshold: f64,
    pub predicted_t: Option<f64>,
}

impl OdiFit {
    fn infeasible() -> Self {
        Self { feasible: false, c1: 0.0, c2: 0.0, phi_threshold: f64::INFINITY, predicted_t: None }
    }
}

/// Fits the inequality to samples `(φ_i, dφ_i)`.
///
/// With `x = A φ²` the admissible pairs are `{(c, C) : y_i ≥ c x_i − C}`. The
/// fit returns the pair with the smallest threshold `C/c`: if every
/// `y_i / x_i` is positive that is `C = 0`, `c = min y_i/x_i`; otherwise it
/// is the minimiser over `u = 1/c` of the upper envelope `max_i (x_i − y_i u)`.
/// `t0` is the time of the first sample; the predicted time is absolute.
pub fn odi_fit(phi: &[f64], dphi: &[f64], t0: f64, gamma: f64, s0: f64, n: u32, k: f64, theta1: f64) -> OdiFit {
    let nf = f64::from(n);
    let a = s0.powf(-3.0 + gamma + (1.0 - 2.0 / nf) * k);
    let b = s0.powf(3.0 - gamma - theta1);
    let pts: Vec<(f64, f64)> = phi
        .iter()
        .zip(dphi)
        .filter(|(p, d)| p.is_finite() && d.is_finite())
        .map(|(p, d)| (a * p * p, *d))
        .collect();
    if pts.is_empty() || phi[0] <= 0.0 {
        return OdiFit::infeasible();
    }
    let (c, cc) = if pts.iter().all(|&(x, y)| y > 0.0 && x > 0.0) {
        let c = pts.iter().map(|&(x, y)| y / x).fold(f64::INFINITY, f64::min);
        (c, 0.0)
    } else {
        match minimise_envelope(&pts) {
            Some(u) => {
                let c = 1.0 / u;
                let cc = pts.iter().map(|&(x, y)| c * x - y).fold(0.0, f64::max);
                (c, cc)
            }
            None => return OdiFit::infeasible(),
        }
    };
    let c1 = c;
    let c2 = cc / b;
    let threshold = (cc / (c * a)).sqrt();
    let predicted_t = blowup_time_bound(phi[0], c * a, cc).map(|t| t0 + t);
    OdiFit { feasible: true, c1, c2, phi_threshold: threshold, predicted_t }
}

/// Minimiser `u > 0` of `h(u) = max_i (x_i − y_i u)`, from the upper envelope
/// of the lines. `None` when `h` is minimised at `u = 0` or is unbounded below.
fn minimise_envelope(pts: &[(f64, f64)]) -> Option<f64> {
    // Lines ℓ(u) = x − y u, sorted by slope −y increasing; for equal slopes
    // keep the largest intercept.
    let mut lines: Vec<(f64, f64)> = pts.iter().map(|&(x, y)| (-y, x)).collect();
    lines.sort_by(|p, q| p.0.total_cmp(&q.0).then(q.1.total_cmp(&p.1)));
    lines.dedup_by(|q, p| q.0 == p.0);
    let cross = |p: (f64, f64), q: (f64, f64)| (p.1 - q.1) / (q.0 - p.0);
    let mut hull: Vec<(f64, f64)> = Vec::new();
    for line in lines {
        while hull.len() >= 2 {
            let l1 = hull[hull.len() - 2];
            let l2 = hull[hull.len() - 1];
            if cross(l1, line) <= cross(l1, l2) {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(line);
    }
    // The envelope is decreasing while slopes are negative; its minimum sits
    // where the slope turns nonnegative.
    let first_up = hull.iter().position(|l| l.0 >= 0.0)?;
    if first_up == 0 {
        return None;
    }
    let u = cross(hull[first_up - 1], hull[first_up]);
    (u > 0.0 && u.is_finite()).then_some(u)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synthetic_blowup_series_recovers_coefficient() {
        // φ = 1/(1−t) solves φ' = φ²; with the s0-factor A the fitted
        // coefficient must be 1/A.
        let (gamma, s0, n, k, theta1) = (0.45, 0.5, 3, 0.5, 1.2);
        let ts: Vec<f64> = (0..200).map(|i| 0.9 * i as f64 / 199.0).collect();
        let phi: Vec<f64> = ts.iter().map(|t| 1.0 / (1.0 - t)).collect();
        let dphi: Vec<f64> = phi.iter().map(|p| p * p).collect();
        let fit = odi_fit(&phi, &dphi, 0.0, gamma, s0, n, k, theta1);
        let a = s0.powf(-3.0 + gamma + (1.0 - 2.0 / 3.0) * k);
        assert!(fit.feasible);
        assert!((fit.c1 * a - 1.0).abs() < 1e-6);
        assert_eq!(fit.c2, 0.0);
        assert!((fit.predicted_t.unwrap() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn negative_derivatives_need_a_constant() {
        // y = x − 1 exactly: best pair is c = 1, C = 1.
        let phi: Vec<f64> = (1..50).map(|i| 0.1 * i as f64).collect();
        let dphi: Vec<f64> = phi.iter().map(|p| p * p - 1.0).collect();
        let fit = odi_fit(&phi, &dphi, 0.0, 0.5, 1.0, 3, 0.5, 1.0);
        assert!(fit.feasible);
        assert!((fit.c1 - 1.0).abs() < 1e-12, "{fit:?}");
        assert!((fit.c2 - 1.0).abs() < 1e-12);
        assert!((fit.phi_threshold - 1.0).abs() < 1e-12);
    }

    #[test]
    fn decreasing_moment_is_infeasible() {
        let phi = vec![1.0, 0.9, 0.8];
        let dphi = vec![-1.0, -1.0, -1.0];
        assert!(!odi_fit(&phi, &dphi, 0.0, 0.5, 1.0, 3, 0.5, 1.0).feasible);
    }

    #[test]
    fn fitted_pair_is_feasible_on_random_data() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let phi: Vec<f64> = (0..40).map(|_| rng.gen_range(0.1..3.0)).collect();
            let dphi: Vec<f64> = phi.iter().map(|p| p * p * rng.gen_range(0.5..2.0) - rng.gen_range(0.0..2.0)).collect();
            let fit = odi_fit(&phi, &dphi, 0.0, 0.5, 1.0, 3, 0.5, 1.0);
            assert!(fit.feasible);
            for (p, d) in phi.iter().zip(&dphi) {
                assert!(*d >= fit.c1 * p * p - fit.c2 - 1e-9);
            }
        }
    }
}
