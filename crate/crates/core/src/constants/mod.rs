//! Closed-form constants: Gamma-function formulas evaluated in log space.

mod special;

pub use special::{digamma, log_abs_gamma, log_gamma, POLE_TOLERANCE};

use crate::error::{domain, Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

const COMPAT_TOL: f64 = 1e-12;

/// Exponent tuple (n, p, r, λ) with the derived dual exponent q and κ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub n: usize,
    pub p: f64,
    pub r: f64,
    pub lambda: f64,
    pub q: f64,
    pub kappa: f64,
}

impl Params {
    pub fn new(n: usize, p: f64, r: f64, lambda: f64) -> Result<Self> {
        if n == 0 {
            return domain("dimension must be positive");
        }
        if !(lambda > 0.0) || !lambda.is_finite() {
            return domain(format!("lambda must be positive, got {lambda}"));
        }
        for (name, v) in [("p", p), ("r", r)] {
            if !(v > 0.0 && v < 1.0) {
                return domain(format!("{name} must lie in (0,1), got {v}"));
            }
        }
        let nf = n as f64;
        let defect = 1.0 / p + 1.0 / r - lambda / nf - 2.0;
        if defect.abs() > COMPAT_TOL {
            return Err(Error::Incompatible { defect });
        }
        let floor = nf / (nf + lambda);
        if p <= floor || r <= floor {
            return domain(format!("p and r must exceed n/(n+lambda) = {floor}"));
        }
        Ok(Params {
            n,
            p,
            r,
            lambda,
            q: r / (r - 1.0),
            kappa: -(2.0 * nf + lambda) / lambda,
        })
    }

    /// The diagonal pair p = r = 2n/(2n+λ).
    pub fn diagonal(n: usize, lambda: f64) -> Result<Self> {
        let nf = n as f64;
        let p = 2.0 * nf / (2.0 * nf + lambda);
        Self::new(n, p, p, lambda)
    }

    pub fn is_diagonal(&self) -> bool {
        let nf = self.n as f64;
        (self.p - 2.0 * nf / (2.0 * nf + self.lambda)).abs() <= COMPAT_TOL && self.p == self.r
    }
}

/// Volume ωₙ of the unit ball in ℝⁿ.
pub fn unit_ball_volume(n: usize) -> f64 {
    let h = n as f64 / 2.0;
    (h * PI.ln() - special::ln_gamma_positive(h + 1.0)).exp()
}

/// Surface area |S^{n-1}| = n ωₙ of the unit sphere in ℝⁿ.
pub fn unit_sphere_area(n: usize) -> f64 {
    n as f64 * unit_ball_volume(n)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Validity {
    Validated,
    UnvalidatedRegime,
}

/// Value of the Gamma-ratio constant with its regime flag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SharpConstant {
    pub value: f64,
    pub validity: Validity,
    pub warning: Option<String>,
}

/// ln |π^{λ/2} Γ(n/2−λ/2)/Γ(n−λ/2) (Γ(n)/Γ(n/2))^{1−λ/n}| and its sign.
fn ln_gamma_ratio_form(n: usize, lambda: f64) -> Result<(f64, f64)> {
    let nf = n as f64;
    let (l1, s1) = log_abs_gamma(nf / 2.0 - lambda / 2.0)?;
    let (l2, s2) = log_abs_gamma(nf - lambda / 2.0)?;
    let ln_ratio = special::ln_gamma_positive(nf) - special::ln_gamma_positive(nf / 2.0);
    let ln = 0.5 * lambda * PI.ln() + l1 - l2 + (1.0 - lambda / nf) * ln_ratio;
    Ok((ln, s1 * s2))
}

/// 𝒞ₙ,λ = π^{λ/2}·Γ(n/2−λ/2)/Γ(n−λ/2)·(Γ(n)/Γ(n/2))^{1−λ/n}.
pub fn sharp_reversed_constant(n: usize, lambda: f64) -> Result<SharpConstant> {
    if n == 0 || !(lambda > 0.0) || !lambda.is_finite() {
        return domain("sharp constant needs n >= 1 and lambda > 0");
    }
    let (ln, sign) = ln_gamma_ratio_form(n, lambda)?;
    let value = sign * ln.exp();
    let validity = if lambda < n as f64 {
        Validity::Validated
    } else {
        Validity::UnvalidatedRegime
    };
    let warning = (value <= 0.0).then(|| format!("non-positive value {value} for lambda = {lambda} >= n"));
    Ok(SharpConstant {
        value,
        validity,
        warning,
    })
}

/// Quotient ‖I_λf‖_q/‖f‖_p attained by the bubble f = (1+|x|²)^{−(2n+λ)/2} in the
/// diagonal case: π^{−λ/2}·Γ(n/2+λ/2)/Γ(n+λ/2)·(Γ(n)/Γ(n/2))^{1+λ/n}.
pub fn bubble_ratio_constant(n: usize, lambda: f64) -> Result<f64> {
    if n == 0 || !(lambda > 0.0) || !lambda.is_finite() {
        return domain("bubble ratio needs n >= 1 and lambda > 0");
    }
    let nf = n as f64;
    let ln_ratio = special::ln_gamma_positive(nf) - special::ln_gamma_positive(nf / 2.0);
    let ln = -0.5 * lambda * PI.ln() + special::ln_gamma_positive(nf / 2.0 + lambda / 2.0)
        - special::ln_gamma_positive(nf + lambda / 2.0)
        + (1.0 + lambda / nf) * ln_ratio;
    Ok(ln.exp())
}

/// The explicit non-sharp lower bound C(n,p,r).
pub fn lower_bound_constant(params: &Params) -> f64 {
    let Params { n, p, r, lambda, .. } = *params;
    let t = lambda / n as f64;
    let omega = unit_ball_volume(n);
    let m = (r / (1.0 - r)).max(p / (1.0 - p));
    let ln = -t * (2.0 * omega).ln() - (1.0 + t) * 2f64.ln() - (1.0 + t) * (p * r).ln()
        - t * t.ln()
        - t * m.ln();
    ln.exp()
}

/// Constants of the classical (negative power) inequality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassicalConstants {
    pub upper_bound: f64,
    pub diagonal_sharp: f64,
}

pub fn classical_hls_constants(n: usize, lambda: f64, p: f64) -> Result<ClassicalConstants> {
    let nf = n as f64;
    if n == 0 || !(lambda > 0.0 && lambda < nf) {
        return domain(format!("classical constants need 0 < lambda < n, got lambda = {lambda}"));
    }
    if !(p > 1.0) {
        return domain(format!("classical constants need p > 1, got {p}"));
    }
    let inv_r = 2.0 - lambda / nf - 1.0 / p;
    if !(inv_r > 0.0 && inv_r < 1.0) {
        return domain(format!("conjugate exponent out of range: 1/r = {inv_r}"));
    }
    let r = 1.0 / inv_r;
    let t = lambda / nf;
    let base = (0.5 * lambda * PI.ln() - special::ln_gamma_positive(1.0 + nf / 2.0)) * t;
    let bracket = (lambda * p / (nf * (p - 1.0))).powf(t) + (lambda * r / (nf * (r - 1.0))).powf(t);
    let upper_bound = nf / (nf - lambda) * base.exp() / (p * r) * bracket;
    let (ln, sign) = ln_gamma_ratio_form(n, lambda)?;
    Ok(ClassicalConstants {
        upper_bound,
        diagonal_sharp: sign * ln.exp(),
    })
}

/// Best constant of the fractional Sobolev inequality of order s.
pub fn sobolev_constant(n: usize, s: f64) -> Result<f64> {
    let nf = n as f64;
    if n == 0 || !(s > 0.0 && s < nf / 2.0) {
        return domain(format!("sobolev constant needs 0 < s < n/2, got s = {s}"));
    }
    let lg = special::ln_gamma_positive;
    let ln = lg(nf / 2.0 - s) - 2.0 * s * 2f64.ln() - s * PI.ln() - lg(nf / 2.0 + s)
        + 2.0 * s / nf * (lg(nf) - lg(nf / 2.0));
    Ok(ln.exp())
}

/// d/dλ of the sharp constant at λ = 0.
pub fn log_limit_constant(n: usize) -> Result<f64> {
    if n == 0 {
        return domain("dimension must be positive");
    }
    let nf = n as f64;
    let lg = special::ln_gamma_positive;
    Ok(0.5 * (PI.ln() - digamma(nf / 2.0)? + digamma(nf)?) - (lg(nf) - lg(nf / 2.0)) / nf)
}

/// d/dλ of the bubble ratio at λ = 0.
pub fn bubble_ratio_log_derivative(n: usize) -> Result<f64> {
    if n == 0 {
        return domain("dimension must be positive");
    }
    let nf = n as f64;
    let lg = special::ln_gamma_positive;
    Ok(-0.5 * (PI.ln() - digamma(nf / 2.0)? + digamma(nf)?) + (lg(nf) - lg(nf / 2.0)) / nf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1e-300)
    }

    #[test]
    fn ball_volumes() {
        assert!(close(unit_ball_volume(1), 2.0, 1e-14));
        assert!(close(unit_ball_volume(2), PI, 1e-14));
        assert!(close(unit_ball_volume(3), 4.0 * PI / 3.0, 1e-14));
        assert!(close(unit_sphere_area(3), 4.0 * PI, 1e-14));
    }

    #[test]
    fn params_construction() {
        let d = Params::diagonal(1, 1.0).unwrap();
        assert!(close(d.p, 2.0 / 3.0, 1e-15));
        assert!(d.is_diagonal());
        assert!(close(d.q, -2.0, 1e-14));
        assert!(close(d.kappa, -3.0, 1e-15));
        assert!(matches!(Params::new(1, 0.6667, 0.6667, 1.0), Err(Error::Incompatible { .. })));
        assert!(Params::new(0, 0.5, 0.5, 1.0).is_err());
        assert!(Params::new(1, 1.2, 0.5, 1.0).is_err());
        // off-diagonal but compatible: 1/p + 1/r = 3
        let nd = Params::new(1, 0.5, 1.0, 1.0);
        assert!(nd.is_err());
        let nd = Params::new(1, 0.6, 1.0 / (3.0 - 1.0 / 0.6), 1.0).unwrap();
        assert!(!nd.is_diagonal());
    }

    #[test]
    fn sharp_constant_closed_forms() {
        let c = sharp_reversed_constant(2, 1.0).unwrap();
        assert!(close(c.value, 2.0 * PI.sqrt(), 1e-12));
        assert_eq!(c.validity, Validity::Validated);
        let c = sharp_reversed_constant(3, 1.0).unwrap();
        let want = 4.0 / 3.0 * (4.0 / PI.sqrt()).powf(2.0 / 3.0);
        assert!(close(c.value, want, 1e-12));
    }

    #[test]
    fn sharp_constant_poles_and_regimes() {
        assert!(matches!(sharp_reversed_constant(2, 2.0), Err(Error::Pole { .. })));
        assert!(matches!(sharp_reversed_constant(1, 3.0), Err(Error::Pole { .. })));
        let c = sharp_reversed_constant(2, 3.0).unwrap();
        assert_eq!(c.validity, Validity::UnvalidatedRegime);
        // Γ(-1/2) < 0, Γ(1/2) > 0
        assert!(c.value < 0.0);
        assert!(c.warning.is_some());
    }

    #[test]
    fn sharp_constant_tends_to_one() {
        for n in 1..=8 {
            assert!((sharp_reversed_constant(n, 1e-3).unwrap().value - 1.0).abs() < 1e-2);
            assert!((sharp_reversed_constant(n, 1e-6).unwrap().value - 1.0).abs() < 1e-5);
        }
    }

    #[test]
    fn lower_bound_values() {
        let p = Params::diagonal(1, 1.0).unwrap();
        assert!(close(lower_bound_constant(&p), 81.0 / 512.0, 1e-12));
        let p = Params::diagonal(2, 1.0).unwrap();
        let want = 125.0 * 2f64.sqrt() / (512.0 * PI.sqrt());
        assert!(close(lower_bound_constant(&p), want, 1e-12));
        assert!(lower_bound_constant(&p) < sharp_reversed_constant(2, 1.0).unwrap().value);
    }

    #[test]
    fn classical_constants() {
        let c = classical_hls_constants(2, 1.0, 4.0 / 3.0).unwrap();
        assert!(close(c.diagonal_sharp, 2.0 * PI.sqrt(), 1e-12));
        let c = classical_hls_constants(3, 2.0, 1.5).unwrap();
        let want = PI.powf(1.5) * (4.0 / PI.sqrt()).powf(1.0 / 3.0);
        assert!(close(c.diagonal_sharp, want, 1e-12));
        let c = classical_hls_constants(1, 0.5, 4.0 / 3.0).unwrap();
        assert!(c.upper_bound.is_finite() && c.upper_bound > 0.0);
        assert!(c.upper_bound >= c.diagonal_sharp);
        assert!(classical_hls_constants(2, 2.0, 1.5).is_err());
        assert!(classical_hls_constants(2, 1.0, 0.9).is_err());
    }

    #[test]
    fn sobolev_values() {
        let want = 1.0 / (3.0 * PI) * (4.0 / PI.sqrt()).powf(2.0 / 3.0);
        assert!(close(sobolev_constant(3, 1.0).unwrap(), want, 1e-12));
        assert!(close(sobolev_constant(4, 1.0).unwrap(), 6f64.sqrt() / (8.0 * PI), 1e-12));
        for n in 1..6 {
            assert!((sobolev_constant(n, 1e-8).unwrap() - 1.0).abs() < 1e-6);
        }
        assert!(sobolev_constant(2, 1.0).is_err());
    }

    #[test]
    fn log_limit_values() {
        assert!(close(log_limit_constant(1).unwrap(), (2.0 * PI).ln(), 1e-12));
        assert!(close(log_limit_constant(2).unwrap(), (PI.ln() + 1.0) / 2.0, 1e-12));
        let h = 1e-6;
        for n in 1..=6 {
            let fd = (sharp_reversed_constant(n, h).unwrap().value - 1.0) / h;
            assert!((fd - log_limit_constant(n).unwrap()).abs() < 1e-5, "n = {n}");
        }
    }

    #[test]
    fn bubble_ratio_values() {
        assert!(close(bubble_ratio_constant(2, 1.0).unwrap(), 2.0 / (3.0 * PI.sqrt()), 1e-12));
        assert!(close(bubble_ratio_constant(1, 1.0).unwrap(), 2.0 / (PI * PI), 1e-12));
        let h = 1e-6;
        for n in 1..=6 {
            let fd = (bubble_ratio_constant(n, h).unwrap() - 1.0) / h;
            assert!((fd - bubble_ratio_log_derivative(n).unwrap()).abs() < 1e-5, "n = {n}");
        }
    }

    proptest! {
        #[test]
        fn lower_bound_positive(n in 1usize..7, lambda in 0.05f64..6.0, t in 0.01f64..0.99) {
            // sweep the compatible line 1/p + 1/r = 2 + λ/n
            let nf = n as f64;
            let s = 2.0 + lambda / nf;
            let lo = (1.0f64).max(s - (nf + lambda) / nf) + 1e-9;
            let hi = (nf + lambda) / nf - 1e-9;
            prop_assume!(hi > lo);
            let inv_p = lo + t * (hi - lo);
            let p = 1.0 / inv_p;
            let r = 1.0 / (s - inv_p);
            if let Ok(params) = Params::new(n, p, r, lambda) {
                prop_assert!(lower_bound_constant(&params) > 0.0);
                prop_assert!(params.q < 0.0);
            }
        }

        #[test]
        fn sharp_dominates_lower_bound(n in 2usize..9, lambda in 0.01f64..1.0) {
            let p = Params::diagonal(n, lambda).unwrap();
            let c = sharp_reversed_constant(n, lambda).unwrap().value;
            prop_assert!(c >= lower_bound_constant(&p));
        }
    }
}
