//! Radial quadrature for the bilinear form ∬ f(x)|x−y|^λ g(y), the potential
//! I_λf, negative-exponent norms of I_λf and the logarithmic kernel.
//!
//! Every public integral is evaluated at successive refinement levels until two
//! consecutive values agree within `target_rel_tol`; the last difference is
//! reported as `rel_err_estimate`.

pub mod angular;
pub mod gauss;
pub mod radial;

pub use angular::Kernel;
pub use radial::PotentialOperator;

use crate::constants::{bubble_ratio_constant, lower_bound_constant, sharp_reversed_constant, Params};
use crate::error::{domain, Error, Result};
use crate::profiles::RadialProfile;
use radial::Radial;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadSpec {
    pub angular_nodes: usize,
    pub radial_nodes_per_decade: usize,
    pub truncation_radius: f64,
    pub target_rel_tol: f64,
    pub max_refinements: usize,
}

impl Default for QuadSpec {
    fn default() -> Self {
        QuadSpec {
            angular_nodes: 16,
            radial_nodes_per_decade: 32,
            truncation_radius: 1e4,
            target_rel_tol: 1e-6,
            max_refinements: 6,
        }
    }
}

impl QuadSpec {
    pub fn with_tol(mut self, tol: f64) -> Self {
        self.target_rel_tol = tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.angular_nodes < 16 {
            return domain("angular_nodes must be at least 16");
        }
        if self.radial_nodes_per_decade < 32 {
            return domain("radial_nodes_per_decade must be at least 32");
        }
        if !(self.truncation_radius > 0.0) || !self.truncation_radius.is_finite() {
            return domain("truncation_radius must be positive");
        }
        if !(self.target_rel_tol > 1e-12 && self.target_rel_tol < 1e-2) {
            return domain("target_rel_tol must lie in (1e-12, 1e-2)");
        }
        if self.max_refinements == 0 {
            return domain("max_refinements must be positive");
        }
        Ok(())
    }
}

/// A refined value with its last successive-difference estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub rel_err_estimate: f64,
    pub refinements: usize,
}

pub(crate) fn rel_diff(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

pub(crate) fn refine(spec: &QuadSpec, mut eval: impl FnMut(usize) -> Result<f64>) -> Result<Estimate> {
    spec.validate()?;
    let mut prev = eval(0)?;
    for level in 1..=spec.max_refinements {
        let cur = eval(level)?;
        let err = rel_diff(cur, prev);
        if err <= spec.target_rel_tol {
            return Ok(Estimate {
                value: cur,
                rel_err_estimate: err,
                refinements: level,
            });
        }
        prev = cur;
        if level == spec.max_refinements {
            return Err(Error::RefinementExhausted { previous: prev, last: cur });
        }
    }
    unreachable!("max_refinements is positive")
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return domain(format!("lambda must be positive, got {lambda}"));
    }
    Ok(())
}

fn same_dim(f: &RadialProfile, g: &RadialProfile) -> Result<usize> {
    if f.dim() != g.dim() {
        return domain(format!("dimension mismatch: {} vs {}", f.dim(), g.dim()));
    }
    Ok(f.dim())
}

/// ∫_{S^{n−1}} |r e₁ − s ω|^λ dσ(ω).
pub fn angular_average(n: usize, lambda: f64, r: f64, s: f64, spec: &QuadSpec) -> Result<f64> {
    check_lambda(lambda)?;
    if n == 0 || !(r >= 0.0 && s >= 0.0) {
        return domain("angular_average needs n >= 1 and r, s >= 0");
    }
    if n == 1 {
        return Ok(angular::average(1, Kernel::Power(lambda), r, s, 0));
    }
    spec.validate()?;
    let mut prev = angular::average_polar(n, Kernel::Power(lambda), r, s, spec.angular_nodes);
    let mut order = spec.angular_nodes;
    for _ in 0..spec.max_refinements {
        order *= 2;
        let cur = angular::average_polar(n, Kernel::Power(lambda), r, s, order);
        if rel_diff(cur, prev) <= spec.target_rel_tol {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::RefinementExhausted {
        previous: prev,
        last: angular::average_polar(n, Kernel::Power(lambda), r, s, order),
    })
}

/// Dense table of angular averages on a pair of radial grids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelTable {
    pub radii_row: Vec<f64>,
    pub radii_col: Vec<f64>,
    pub entries: Vec<Vec<f64>>,
    pub lambda: f64,
    pub n: usize,
}

impl KernelTable {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i][j]
    }
}

pub fn build_kernel_table(rows: &[f64], cols: &[f64], n: usize, lambda: f64, spec: &QuadSpec) -> Result<KernelTable> {
    if rows.iter().chain(cols).any(|&r| !(r >= 0.0) || !r.is_finite()) {
        return domain("kernel table radii must be finite and non-negative");
    }
    let entries = rows
        .iter()
        .map(|&r| {
            cols.iter()
                .map(|&s| {
                    // evaluate with ordered arguments so coinciding grids give a symmetric table
                    let (a, b) = if r <= s { (r, s) } else { (s, r) };
                    angular_average(n, lambda, a, b, spec)
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(KernelTable {
        radii_row: rows.to_vec(),
        radii_col: cols.to_vec(),
        entries,
        lambda,
        n,
    })
}

/// I(f, g) = ∬ f(x)|x−y|^λ g(y) dx dy.
pub fn bilinear_functional(f: &RadialProfile, g: &RadialProfile, lambda: f64, spec: &QuadSpec) -> Result<Estimate> {
    check_lambda(lambda)?;
    let n = same_dim(f, g)?;
    if f.is_zero() || g.is_zero() {
        return Ok(Estimate {
            value: 0.0,
            rel_err_estimate: 0.0,
            refinements: 0,
        });
    }
    // integrate over the profile with the larger support in the outer variable
    // so that the result is symmetric in (f, g)
    let (inner, outer) = order_pair(f, g);
    refine(spec, |level| Radial::new(spec, level, n, Kernel::Power(lambda)).bilinear(inner, outer))
}

fn order_pair<'a>(f: &'a RadialProfile, g: &'a RadialProfile) -> (&'a RadialProfile, &'a RadialProfile) {
    let key = |h: &RadialProfile| (h.tail().is_compact(), h.radius(), h.radii().len());
    let (kf, kg) = (key(f), key(g));
    let f_first = (kf.0, -kf.1, kf.2) > (kg.0, -kg.1, kg.2)
        || (kf == kg && f.to_csv() <= g.to_csv());
    if f_first {
        (f, g)
    } else {
        (g, f)
    }
}

/// (I_λ f)(x) at |x| = `x_radius`.
pub fn potential_at(f: &RadialProfile, lambda: f64, x_radius: f64, spec: &QuadSpec) -> Result<Estimate> {
    check_lambda(lambda)?;
    if !(x_radius >= 0.0) || !x_radius.is_finite() {
        return domain("potential radius must be finite and non-negative");
    }
    let n = f.dim();
    refine(spec, |level| {
        Radial::new(spec, level, n, Kernel::Power(lambda)).potential(f, f.first_node(), x_radius)
    })
}

/// (∫ (I_λ f)^q dx)^{1/q} for q < 0.
pub fn neg_exponent_norm(f: &RadialProfile, lambda: f64, q: f64, spec: &QuadSpec) -> Result<Estimate> {
    check_lambda(lambda)?;
    if !(q < 0.0) {
        return domain(format!("neg_exponent_norm needs q < 0, got {q}"));
    }
    let n = f.dim();
    let est = refine(spec, |level| {
        Radial::new(spec, level, n, Kernel::Power(lambda)).neg_power_integral(f, q)
    })?;
    Ok(Estimate {
        value: est.value.powf(1.0 / q),
        rel_err_estimate: est.rel_err_estimate / q.abs(),
        refinements: est.refinements,
    })
}

/// −∬ f(x) ln|x−y| g(y) dx dy.
pub fn log_bilinear_functional(f: &RadialProfile, g: &RadialProfile, spec: &QuadSpec) -> Result<Estimate> {
    let n = same_dim(f, g)?;
    let (inner, outer) = order_pair(f, g);
    let est = refine(spec, |level| Radial::new(spec, level, n, Kernel::Log).bilinear(inner, outer))?;
    Ok(Estimate {
        value: -est.value,
        ..est
    })
}

/// Both sides of the reversed log-HLS inequality
/// −∬ f ln|x−y| g ≥ C*‖f‖₁‖g‖₁ + (1/2n)(‖f‖₁ln‖f‖₁ − ∫f ln f)‖g‖₁ + (f ↔ g).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogHlsReport {
    pub lhs: f64,
    /// With C* the λ-derivative of `sharp_reversed_constant`.
    pub rhs: f64,
    /// With C* the λ-derivative of the bubble quotient.
    pub rhs_bubble: f64,
    pub margin: f64,
    pub rel_err_estimate: f64,
    pub pass: bool,
    pub pass_bubble: bool,
}

pub fn log_hls_check(f: &RadialProfile, g: &RadialProfile, spec: &QuadSpec) -> Result<LogHlsReport> {
    let n = same_dim(f, g)?;
    let lhs = log_bilinear_functional(f, g, spec)?;
    let (mf, mg) = (f.power_integral(1.0)?, g.power_integral(1.0)?);
    let entropy = |m: f64, h: f64| (m * m.ln() - h) / (2.0 * n as f64);
    let rest = entropy(mf, f.entropy_integral()?) * mg + entropy(mg, g.entropy_integral()?) * mf;
    let rhs = crate::constants::log_limit_constant(n)? * mf * mg + rest;
    let rhs_bubble = crate::constants::bubble_ratio_log_derivative(n)? * mf * mg + rest;
    let tol = spec.target_rel_tol + lhs.rel_err_estimate;
    let holds = |r: f64| lhs.value >= r - tol * r.abs();
    Ok(LogHlsReport {
        lhs: lhs.value,
        rhs,
        rhs_bubble,
        margin: lhs.value - rhs,
        rel_err_estimate: lhs.rel_err_estimate,
        pass: holds(rhs),
        pass_bubble: holds(rhs_bubble),
    })
}

/// Outcome of checking ∬ f|x−y|^λ g ≥ C‖f‖_p‖g‖_r for one pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub n: usize,
    pub p: f64,
    pub r: f64,
    pub lambda: f64,
    pub lhs: f64,
    pub rhs_lower: f64,
    pub rhs_sharp: Option<f64>,
    /// Right-hand side with the quotient attained by the bubble family.
    pub rhs_bubble: Option<f64>,
    pub margin: f64,
    pub rel_err_estimate: f64,
    /// Both applicable bounds hold.
    pub pass: bool,
    pub pass_lower: bool,
    pub pass_sharp: Option<bool>,
    pub pass_bubble: Option<bool>,
}

pub fn verify_inequality(
    f: &RadialProfile,
    g: &RadialProfile,
    params: &Params,
    spec: &QuadSpec,
) -> Result<VerificationReport> {
    let n = same_dim(f, g)?;
    if n != params.n {
        return domain(format!("profiles live in dimension {n}, params in {}", params.n));
    }
    let lhs = bilinear_functional(f, g, params.lambda, spec)?;
    let norms = crate::profiles::lp_quantity(f, params.p)? * crate::profiles::lp_quantity(g, params.r)?;
    let rhs_lower = lower_bound_constant(params) * norms;
    let diag = params.is_diagonal();
    let rhs_sharp = if diag && params.lambda < n as f64 {
        Some(sharp_reversed_constant(n, params.lambda)?.value * norms)
    } else {
        None
    };
    let rhs_bubble = if diag {
        Some(bubble_ratio_constant(n, params.lambda)? * norms)
    } else {
        None
    };
    let tol = spec.target_rel_tol + lhs.rel_err_estimate;
    let holds = |rhs: f64| lhs.value >= rhs - tol * rhs.abs();
    let pass_lower = holds(rhs_lower);
    let pass_sharp = rhs_sharp.map(holds);
    let strongest = rhs_sharp.map_or(rhs_lower, |s| s.max(rhs_lower));
    let margin = if strongest > 0.0 {
        lhs.value / strongest - 1.0
    } else {
        lhs.value - strongest
    };
    Ok(VerificationReport {
        n,
        p: params.p,
        r: params.r,
        lambda: params.lambda,
        lhs: lhs.value,
        rhs_lower,
        rhs_sharp,
        rhs_bubble,
        margin,
        rel_err_estimate: lhs.rel_err_estimate,
        pass: pass_lower && pass_sharp.unwrap_or(true),
        pass_lower,
        pass_sharp,
        pass_bubble: rhs_bubble.map(holds),
    })
}
