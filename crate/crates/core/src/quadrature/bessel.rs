//! Modified Bessel function of the second kind, `K_nu(x)` for real `nu >= 0`.
//!
//! Temme's series for `x <= 2`, Steed's continued fraction otherwise, both
//! for the reduced order `|mu| <= 1/2`, followed by upward recurrence.

use std::f64::consts::PI;

use crate::error::{Error, Result};

// Taylor coefficients of 1/Γ(1+x) about 0.
const RECIP_GAMMA: [f64; 26] = [
    1.0,
    0.577_215_664_901_532_9,
    -0.655_878_071_520_253_8,
    -0.042_002_635_034_095_2,
    0.166_538_611_382_291_5,
    -0.042_197_734_555_544_3,
    -0.009_621_971_527_877_0,
    0.007_218_943_246_663_0,
    -0.001_165_167_591_859_1,
    -0.000_215_241_674_114_9,
    0.000_128_050_282_388_2,
    -0.000_020_134_854_780_7,
    -0.000_001_250_493_482_1,
    0.000_001_133_027_232_0,
    -0.000_000_205_633_841_7,
    0.000_000_006_116_095_0,
    0.000_000_005_002_007_5,
    -0.000_000_001_181_274_6,
    0.000_000_000_104_342_7,
    0.000_000_000_007_782_3,
    -0.000_000_000_003_696_8,
    0.000_000_000_000_510_0,
    -0.000_000_000_000_020_6,
    -0.000_000_000_000_005_4,
    0.000_000_000_000_001_4,
    0.000_000_000_000_000_1,
];

const EPS: f64 = 1e-16;
const MAX_ITER: usize = 10_000;

/// `(gam1, gam2, 1/Γ(1+mu), 1/Γ(1-mu))` with
/// `gam1 = (1/Γ(1-mu) - 1/Γ(1+mu)) / (2 mu)` and
/// `gam2 = (1/Γ(1-mu) + 1/Γ(1+mu)) / 2`.
fn temme_gammas(mu: f64) -> (f64, f64, f64, f64) {
    let mut even = 0.0;
    let mut odd_over_mu = 0.0;
    for j in (0..RECIP_GAMMA.len()).rev() {
        let c = RECIP_GAMMA[j];
        if j % 2 == 0 {
            even = even * mu * mu + c;
        } else {
            odd_over_mu = odd_over_mu * mu * mu + c;
        }
    }
    // 1/Γ(1±mu) = even ± mu * odd_over_mu
    let plus = even + mu * odd_over_mu;
    let minus = even - mu * odd_over_mu;
    (-odd_over_mu, even, plus, minus)
}

/// `(K_mu(x), K_{mu+1}(x))` for `|mu| <= 1/2`.
fn k_reduced(mu: f64, x: f64) -> Result<(f64, f64)> {
    if x <= 2.0 {
        let x2 = 0.5 * x;
        let pimu = PI * mu;
        let fact = if pimu.abs() < EPS { 1.0 } else { pimu / pimu.sin() };
        let d = -x2.ln();
        let e = mu * d;
        let fact2 = if e.abs() < EPS { 1.0 } else { e.sinh() / e };
        let (gam1, gam2, gampl, gammi) = temme_gammas(mu);
        let mut ff = fact * (gam1 * e.cosh() + gam2 * fact2 * d);
        let mut sum = ff;
        let ee = e.exp();
        let mut p = 0.5 * ee / gampl;
        let mut q = 0.5 / (ee * gammi);
        let mut c = 1.0;
        let dd = x2 * x2;
        let mut sum1 = p;
        let mut converged = false;
        for i in 1..=MAX_ITER {
            let fi = i as f64;
            ff = (fi * ff + p + q) / (fi * fi - mu * mu);
            c *= dd / fi;
            p /= fi - mu;
            q /= fi + mu;
            let del = c * ff;
            sum += del;
            sum1 += c * (p - fi * ff);
            if del.abs() < sum.abs() * EPS {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::NonConvergence { achieved: f64::NAN, requested: EPS });
        }
        Ok((sum, sum1 * 2.0 / x))
    } else {
        let mut b = 2.0 * (1.0 + x);
        let mut d = 1.0 / b;
        let mut h = d;
        let mut delh = d;
        let mut q1 = 0.0;
        let mut q2 = 1.0;
        let a1 = 0.25 - mu * mu;
        let mut q = a1;
        let mut c = a1;
        let mut a = -a1;
        let mut s = 1.0 + q * delh;
        let mut converged = false;
        for i in 2..=MAX_ITER {
            let fi = i as f64;
            a -= 2.0 * (fi - 1.0);
            c = -a * c / fi;
            let qnew = (q1 - b * q2) / a;
            q1 = q2;
            q2 = qnew;
            q += c * qnew;
            b += 2.0;
            d = 1.0 / (b + a * d);
            delh *= b * d - 1.0;
            h += delh;
            let dels = q * delh;
            s += dels;
            if (dels / s).abs() < EPS {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::NonConvergence { achieved: f64::NAN, requested: EPS });
        }
        h *= a1;
        let kmu = (PI / (2.0 * x)).sqrt() * (-x).exp() / s;
        let k1 = kmu * (mu + x + 0.5 - h) / x;
        Ok((kmu, k1))
    }
}

pub fn bessel_k(nu: f64, x: f64) -> Result<f64> {
    if !(x > 0.0) || nu < 0.0 {
        return Err(Error::Domain(format!("K_nu(x) needs x > 0, nu >= 0 (nu={nu}, x={x})")));
    }
    let nl = (nu + 0.5).floor();
    let mu = nu - nl;
    let (mut k, mut k1) = k_reduced(mu, x)?;
    for i in 1..=(nl as usize) {
        let next = (mu + i as f64) * (2.0 / x) * k1 + k;
        k = k1;
        k1 = next;
    }
    Ok(k)
}
