//! Averages of |r e₁ − s ω|^λ and ln|r e₁ − s ω| over ω ∈ S^{n−1}.
//!
//! For n ≥ 2 the sphere integral reduces to the polar angle:
//! |S^{n−2}| ∫₀^π k(r² + s² − 2rs cos θ) sin^{n−2}θ dθ.

use super::gauss::gauss_legendre;
use crate::constants::unit_sphere_area;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kernel {
    /// |x − y|^λ
    Power(f64),
    /// ln |x − y|
    Log,
}

impl Kernel {
    /// Coefficient κ in the far-field average |S^{n−1}|·(r^λ + κ s² r^{λ−2}) (power)
    /// or |S^{n−1}|·(ln r + κ s²/r²) (log), for r ≫ s.
    pub fn far_field(&self, n: usize) -> f64 {
        let nf = n as f64;
        match *self {
            Kernel::Power(l) => 0.5 * l * (1.0 + (l - 2.0) / nf),
            Kernel::Log => 0.5 - 1.0 / nf,
        }
    }
}

#[inline]
pub(crate) fn dist_pow(d2: f64, half_lambda: f64) -> f64 {
    if half_lambda == 0.5 {
        d2.sqrt()
    } else if half_lambda == 1.0 {
        d2
    } else {
        d2.powf(half_lambda)
    }
}

#[inline]
fn kernel_of_d2(kernel: Kernel, d2: f64) -> f64 {
    match kernel {
        Kernel::Power(l) => dist_pow(d2, 0.5 * l),
        Kernel::Log => 0.5 * d2.ln(),
    }
}

/// Angular average with `order` Gauss points on the single-panel path.
pub(crate) fn average(n: usize, kernel: Kernel, r: f64, s: f64, order: usize) -> f64 {
    match (n, kernel) {
        (1, Kernel::Power(l)) => dist_pow((r - s) * (r - s), 0.5 * l) + dist_pow((r + s) * (r + s), 0.5 * l),
        (1, Kernel::Log) => (r - s).abs().ln() + (r + s).ln(),
        (3, Kernel::Power(l)) => power_average_3d(l, r, s),
        _ => average_polar(n, kernel, r, s, order),
    }
}

/// Closed form for n = 3 (series for very unequal radii).
pub(crate) fn power_average_3d(lambda: f64, r: f64, s: f64) -> f64 {
    let (big, small) = if r >= s { (r, s) } else { (s, r) };
    let four_pi = 4.0 * std::f64::consts::PI;
    if big == 0.0 {
        return 0.0;
    }
    let t = small / big;
    if t < 1e-3 {
        let l = lambda;
        let t2 = t * t;
        return four_pi
            * big.powf(l)
            * (1.0 + l * (l + 1.0) / 6.0 * t2 + l * (l + 1.0) * (l - 1.0) * (l - 2.0) / 120.0 * t2 * t2);
    }
    let e = lambda + 2.0;
    2.0 * std::f64::consts::PI / (r * s * e) * ((r + s).powf(e) - (r - s).abs().powf(e))
}

/// Polar-angle quadrature, graded toward θ = 0 when r ≈ s.
pub(crate) fn average_polar(n: usize, kernel: Kernel, r: f64, s: f64, order: usize) -> f64 {
    debug_assert!(n >= 2);
    let big = r.max(s);
    if r == 0.0 || s == 0.0 {
        return unit_sphere_area(n)
            * match kernel {
                Kernel::Power(l) => big.powf(l),
                Kernel::Log => big.ln(),
            };
    }
    let weight_area = unit_sphere_area(n - 1);
    let diff2 = (r - s) * (r - s);
    let rs4 = 4.0 * r * s;
    let sin_pow = n - 2;
    let integrand = |theta: f64| {
        let h = (0.5 * theta).sin();
        let d2 = diff2 + rs4 * h * h;
        let w = if sin_pow == 0 { 1.0 } else { theta.sin().powi(sin_pow as i32) };
        kernel_of_d2(kernel, d2) * w
    };
    let rho = (r - s).abs() / (r + s);
    let pi = std::f64::consts::PI;
    let total = if rho > 0.25 {
        gauss_legendre(order).integrate(0.0, pi, integrand)
    } else {
        let depth = if rho > 0.0 {
            ((1.0 / rho).log2().ceil() as usize + 3).min(48)
        } else {
            48
        };
        let rule = gauss_legendre((order / 2).max(8));
        let mut acc = 0.0;
        let mut hi = pi;
        for _ in 0..depth {
            let lo = 0.5 * hi;
            acc += rule.integrate(lo, hi, integrand);
            hi = lo;
        }
        acc + rule.integrate(0.0, hi, integrand)
    };
    weight_area * total
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn one_dimensional_sum() {
        assert_eq!(average(1, Kernel::Power(1.0), 2.0, 1.0, 16), 4.0);
        assert!((average(1, Kernel::Log, 2.0, 1.0, 16) - 3f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn degenerate_radius() {
        assert!((average(2, Kernel::Power(1.0), 3.0, 0.0, 16) - 6.0 * PI).abs() < 1e-13);
        assert!((average(4, Kernel::Power(0.5), 0.0, 2.0, 16) - unit_sphere_area(4) * 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn circle_closed_form() {
        // ∫₀^{2π} |2 sin(θ/2)| dθ = 8
        assert!((average_polar(2, Kernel::Power(1.0), 1.0, 1.0, 16) - 8.0).abs() < 1e-12);
        // mean of ln|re₁ − sω| over the circle is ln max(r, s)
        for (r, s) in [(1.0, 1.0), (2.0, 1.0), (0.3, 0.31), (5.0, 0.01)] {
            let got = average_polar(2, Kernel::Log, r, s, 16) / (2.0 * PI);
            assert!((got - f64::max(r, s).ln()).abs() < 1e-11, "{r} {s}: {got}");
        }
    }

    #[test]
    fn three_dimensional_paths_agree() {
        for l in [0.5, 1.0, 2.0, 3.3] {
            for (r, s) in [(1.0, 1.0), (1.0, 0.999), (2.0, 0.5), (10.0, 1e-2), (1.0, 1e-4), (1e-5, 3.0)] {
                let closed = power_average_3d(l, r, s);
                let polar = average_polar(3, Kernel::Power(l), r, s, 32);
                assert!((closed - polar).abs() <= 1e-11 * closed, "λ={l} r={r} s={s}: {closed} vs {polar}");
            }
        }
        assert!((power_average_3d(2.0, 1.0, 1.0) - 8.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn far_field_coefficients() {
        for n in [1usize, 2, 3, 5] {
            for k in [Kernel::Power(0.7), Kernel::Power(2.0), Kernel::Log] {
                let (r, s) = (1e3, 1.0);
                let exact = average(n, k, r, s, 64);
                let c = k.far_field(n);
                let area = unit_sphere_area(n);
                let approx = match k {
                    Kernel::Power(l) => area * (r.powf(l) + c * s * s * r.powf(l - 2.0)),
                    Kernel::Log => area * (r.ln() + c * s * s / (r * r)),
                };
                assert!((exact - approx).abs() <= 1e-11 * exact.abs().max(1.0), "n={n} {k:?}");
            }
        }
    }
}
