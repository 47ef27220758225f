//! Log-Gamma and digamma on the real line.
//!
//! Both functions shift the argument upward with the recurrence until the
//! asymptotic (Stirling / Bernoulli) series is accurate to double precision.

use crate::error::{Error, Result};
use std::f64::consts::PI;

const SHIFT_TO: f64 = 15.0;
const HALF_LN_2PI: f64 = 0.918_938_533_204_672_7;

/// Distance below which an argument counts as sitting on a Gamma pole.
pub const POLE_TOLERANCE: f64 = 1e-9;

fn stirling_ln_gamma(z: f64) -> f64 {
    let inv = 1.0 / z;
    let inv2 = inv * inv;
    // Bernoulli terms B_{2k} / (2k (2k-1) z^{2k-1}), k = 1..7
    let series = inv
        * (1.0 / 12.0
            + inv2
                * (-1.0 / 360.0
                    + inv2
                        * (1.0 / 1260.0
                            + inv2
                                * (-1.0 / 1680.0
                                    + inv2
                                        * (1.0 / 1188.0
                                            + inv2 * (-691.0 / 360_360.0 + inv2 * (1.0 / 156.0)))))));
    (z - 0.5) * z.ln() - z + HALF_LN_2PI + series
}

pub(crate) fn ln_gamma_positive(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    let mut z = x;
    let mut prod = 1.0;
    while z < SHIFT_TO {
        prod *= z;
        z += 1.0;
    }
    stirling_ln_gamma(z) - prod.ln()
}

/// ln Γ(x) for x > 0.
pub fn log_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("log_gamma requires x > 0, got {x}")));
    }
    Ok(ln_gamma_positive(x))
}

/// ln |Γ(x)| together with the sign of Γ(x), for any real x off the poles.
pub fn log_abs_gamma(x: f64) -> Result<(f64, f64)> {
    if !x.is_finite() {
        return Err(Error::Domain(format!("non-finite Gamma argument {x}")));
    }
    let nearest = x.round();
    if nearest <= 0.0 && (x - nearest).abs() < POLE_TOLERANCE {
        return Err(Error::Pole { arg: x });
    }
    if x > 0.0 {
        return Ok((ln_gamma_positive(x), 1.0));
    }
    // reflection: Γ(x) Γ(1-x) = π / sin(πx)
    let s = (PI * x).sin();
    let ln_abs = PI.ln() - s.abs().ln() - ln_gamma_positive(1.0 - x);
    Ok((ln_abs, s.signum()))
}

/// ψ(x) = d/dx ln Γ(x) for x > 0.
pub fn digamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("digamma requires x > 0, got {x}")));
    }
    let mut z = x;
    let mut acc = 0.0;
    while z < 10.0 {
        acc -= 1.0 / z;
        z += 1.0;
    }
    let inv2 = 1.0 / (z * z);
    let series = inv2
        * (1.0 / 12.0
            - inv2
                * (1.0 / 120.0
                    - inv2
                        * (1.0 / 252.0
                            - inv2
                                * (1.0 / 240.0
                                    - inv2 * (1.0 / 132.0 - inv2 * (691.0 / 32_760.0 - inv2 / 12.0))))));
    Ok(acc + z.ln() - 0.5 / z - series)
}
