//! Sampled non-negative radial functions with an analytic power-law tail.
//!
//! A [`RadialProfile`] stores values on a grid `0 = r₀ < … < r_M = R` and
//! continues as `c·r^τ` beyond `R`.

mod fit;

pub use fit::{extremizer, extremizer_on, fit_extremizer, ExtremizerKind, ExtremizerSpec, FitKind, FitResult};

use crate::constants::unit_sphere_area;
use crate::error::{domain, Error, Result};
use crate::quadrature::gauss::gauss_legendre;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

const SEAM_STRICT: f64 = 1e-8;
const SEAM_RELAXED: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    Uniform,
    Log,
}

/// Grid layout: `intervals` cells on `[0, radius]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub radius: f64,
    pub intervals: usize,
    pub spacing: Spacing,
    /// First positive node for log spacing; defaults to `1e-4 * radius`.
    pub first_node: Option<f64>,
}

impl GridSpec {
    pub fn uniform(radius: f64, intervals: usize) -> Self {
        GridSpec {
            radius,
            intervals,
            spacing: Spacing::Uniform,
            first_node: None,
        }
    }

    pub fn log(radius: f64, intervals: usize) -> Self {
        GridSpec {
            radius,
            intervals,
            spacing: Spacing::Log,
            first_node: None,
        }
    }

    pub fn log_from(first_node: f64, radius: f64, intervals: usize) -> Self {
        GridSpec {
            radius,
            intervals,
            spacing: Spacing::Log,
            first_node: Some(first_node),
        }
    }

    pub fn nodes(&self) -> Result<Vec<f64>> {
        let m = self.intervals;
        if !(self.radius > 0.0) || !self.radius.is_finite() {
            return domain(format!("grid radius must be positive, got {}", self.radius));
        }
        if m < 2 {
            return domain("grid needs at least two intervals");
        }
        let r = self.radius;
        let mut out = Vec::with_capacity(m + 1);
        out.push(0.0);
        match self.spacing {
            Spacing::Uniform => out.extend((1..=m).map(|i| r * i as f64 / m as f64)),
            Spacing::Log => {
                let r1 = self.first_node.unwrap_or(1e-4 * r);
                if !(r1 > 0.0 && r1 < r) {
                    return domain(format!("first log node {r1} must lie in (0, {r})"));
                }
                let ratio = (r / r1).ln() / (m - 1) as f64;
                out.extend((0..m - 1).map(|i| r1 * (ratio * i as f64).exp()));
                out.push(r);
            }
        }
        Ok(out)
    }
}

/// Power-law continuation `c·r^τ` beyond the last node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tail {
    pub exponent: f64,
    pub coefficient: f64,
}

impl Tail {
    pub fn new(exponent: f64, coefficient: f64) -> Self {
        Tail {
            exponent,
            coefficient,
        }
    }

    /// Zero continuation: the profile is supported in the closed ball of radius R.
    pub fn compact() -> Self {
        Tail {
            exponent: 0.0,
            coefficient: 0.0,
        }
    }

    pub fn is_compact(&self) -> bool {
        self.coefficient == 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Interpolation {
    /// Piecewise linear in r.
    Linear,
    /// Four-point Lagrange in (ln r, ln f); even quadratic on the first cell.
    LogCubic,
}

/// Which seam tolerance the profile satisfied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeamTier {
    Strict,
    Relaxed,
    Compact,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    radii: Vec<f64>,
    values: Vec<f64>,
    tail: Tail,
    dim: usize,
    interp: Interpolation,
    seam: SeamTier,
    decreasing: bool,
    log_radii: Vec<f64>,
    log_values: Vec<f64>,
}

impl RadialProfile {
    pub fn new(dim: usize, radii: Vec<f64>, values: Vec<f64>, tail: Tail, interp: Interpolation) -> Result<Self> {
        if dim == 0 {
            return domain("dimension must be positive");
        }
        if radii.len() < 2 || radii.len() != values.len() {
            return domain("profile needs matching radii/values with at least two nodes");
        }
        if radii[0] != 0.0 {
            return domain("first radius must be 0");
        }
        if radii.windows(2).any(|w| !(w[1] > w[0])) || !radii[radii.len() - 1].is_finite() {
            return domain("radii must be finite and strictly increasing");
        }
        for (&r, &v) in radii.iter().zip(&values) {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::NegativeSample { r, value: v });
            }
        }
        if !tail.exponent.is_finite() || !tail.coefficient.is_finite() || tail.coefficient < 0.0 {
            return domain("tail needs finite exponent and non-negative coefficient");
        }
        let m = radii.len() - 1;
        let big_r = radii[m];
        let last = values[m];
        let seam = if tail.is_compact() {
            SeamTier::Compact
        } else {
            let t = tail.coefficient * big_r.powf(tail.exponent);
            let d = (last - t).abs();
            let scale = last.max(1.0);
            if d <= SEAM_STRICT * scale {
                SeamTier::Strict
            } else if d <= SEAM_RELAXED * scale {
                SeamTier::Relaxed
            } else {
                return Err(Error::SeamMismatch {
                    radius: big_r,
                    grid: last,
                    tail: t,
                });
            }
        };
        let decreasing =
            values.windows(2).all(|w| w[1] <= w[0]) && (tail.is_compact() || tail.exponent <= 0.0);
        let mut out = RadialProfile {
            radii,
            values,
            tail,
            dim,
            interp: Interpolation::Linear,
            seam,
            decreasing,
            log_radii: Vec::new(),
            log_values: Vec::new(),
        };
        out.set_interpolation(interp)?;
        Ok(out)
    }

    fn set_interpolation(&mut self, interp: Interpolation) -> Result<()> {
        self.interp = interp;
        match interp {
            Interpolation::Linear => {
                self.log_radii.clear();
                self.log_values.clear();
            }
            Interpolation::LogCubic => {
                if self.radii.len() < 5 {
                    return domain("log-cubic interpolation needs at least four positive nodes");
                }
                if self.values.iter().any(|&v| !(v > 0.0)) {
                    return Err(Error::NotPositive("log-cubic interpolation needs positive values".into()));
                }
                self.log_radii = self.radii.iter().map(|r| r.ln()).collect();
                self.log_values = self.values.iter().map(|v| v.ln()).collect();
            }
        }
        Ok(())
    }

    pub fn with_interpolation(mut self, interp: Interpolation) -> Result<Self> {
        self.set_interpolation(interp)?;
        Ok(self)
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn tail(&self) -> Tail {
        self.tail
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Outer grid radius R.
    pub fn radius(&self) -> f64 {
        self.radii[self.radii.len() - 1]
    }

    /// Smallest positive node r₁.
    pub fn first_node(&self) -> f64 {
        self.radii[1]
    }

    pub fn interpolation(&self) -> Interpolation {
        self.interp
    }

    pub fn seam_tier(&self) -> SeamTier {
        self.seam
    }

    pub fn is_decreasing(&self) -> bool {
        self.decreasing
    }

    pub fn is_zero(&self) -> bool {
        self.tail.is_compact() && self.values.iter().all(|&v| v == 0.0)
    }

    /// f(r) for r ≥ 0.
    pub fn eval(&self, r: f64) -> f64 {
        let m = self.radii.len() - 1;
        if r > self.radii[m] {
            return if self.tail.is_compact() {
                0.0
            } else {
                self.tail.coefficient * r.powf(self.tail.exponent)
            };
        }
        if r <= 0.0 {
            return self.values[0];
        }
        let i = (self.radii.partition_point(|&x| x <= r) - 1).min(m - 1);
        match self.interp {
            Interpolation::Linear => {
                let (r0, r1) = (self.radii[i], self.radii[i + 1]);
                let t = (r - r0) / (r1 - r0);
                self.values[i] + t * (self.values[i + 1] - self.values[i])
            }
            Interpolation::LogCubic => {
                if i == 0 {
                    let t = r / self.radii[1];
                    return self.values[0] + (self.values[1] - self.values[0]) * t * t;
                }
                let j = (i - 1).clamp(1, m - 3);
                let x = r.ln();
                let xs = &self.log_radii[j..j + 4];
                let ys = &self.log_values[j..j + 4];
                let mut acc = 0.0;
                for k in 0..4 {
                    let mut w = 1.0;
                    for l in 0..4 {
                        if l != k {
                            w *= (x - xs[l]) / (xs[k] - xs[l]);
                        }
                    }
                    acc += w * ys[k];
                }
                acc.exp()
            }
        }
    }

    /// Profile of f^e with tail (c^e, eτ).
    pub fn powered(&self, e: f64) -> Result<Self> {
        if e < 0.0 && (self.values.iter().any(|&v| !(v > 0.0)) || self.tail.is_compact()) {
            return Err(Error::NotPositive("negative power of a profile with zeros".into()));
        }
        let values = self.values.iter().map(|v| v.powf(e)).collect();
        let tail = if self.tail.is_compact() {
            Tail::compact()
        } else {
            Tail::new(self.tail.exponent * e, self.tail.coefficient.powf(e))
        };
        RadialProfile::new(self.dim, self.radii.clone(), values, tail, self.interp)
    }

    /// Profile of s·f.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        if !(s >= 0.0) || !s.is_finite() {
            return domain(format!("scale factor must be non-negative, got {s}"));
        }
        let values = self.values.iter().map(|v| v * s).collect();
        let tail = Tail::new(self.tail.exponent, self.tail.coefficient * s);
        RadialProfile::new(self.dim, self.radii.clone(), values, tail, self.interp)
    }

    /// Profile of r ↦ f(r/s).
    pub fn dilated(&self, s: f64) -> Result<Self> {
        if !(s > 0.0) || !s.is_finite() {
            return domain(format!("dilation factor must be positive, got {s}"));
        }
        let radii = self.radii.iter().map(|r| r * s).collect();
        let tail = Tail::new(self.tail.exponent, self.tail.coefficient * s.powf(-self.tail.exponent));
        RadialProfile::new(self.dim, radii, self.values.clone(), tail, self.interp)
    }

    /// ∫_{ℝⁿ} f(|x|)^e dx with the analytic tail.
    pub fn power_integral(&self, e: f64) -> Result<f64> {
        let n = self.dim as f64;
        let tail = self.tail;
        let tail_part = if tail.is_compact() {
            0.0
        } else {
            let k = e * tail.exponent + n;
            if k >= 0.0 {
                return Err(Error::Divergence(format!(
                    "tail c*r^{} raised to {e} is not integrable in dimension {}",
                    tail.exponent, self.dim
                )));
            }
            tail.coefficient.powf(e) * self.radius().powf(k) / -k
        };
        if e < 0.0 && self.values.iter().any(|&v| !(v > 0.0)) {
            return Err(Error::NotPositive("negative power of a vanishing profile".into()));
        }
        let order = match self.interp {
            Interpolation::Linear => 4,
            Interpolation::LogCubic => 6,
        };
        let rule = gauss_legendre(order);
        let mut body = 0.0;
        for w in self.radii.windows(2) {
            body += rule.integrate(w[0], w[1], |r| self.eval(r).powf(e) * r.powi(self.dim as i32 - 1));
        }
        Ok(unit_sphere_area(self.dim) * (body + tail_part))
    }

    /// ∫_{ℝⁿ} f ln f dx, with 0 ln 0 = 0.
    pub fn entropy_integral(&self) -> Result<f64> {
        let n = self.dim as f64;
        let tail = self.tail;
        let tail_part = if tail.is_compact() {
            0.0
        } else {
            let k = tail.exponent + n;
            if k >= 0.0 {
                return Err(Error::Divergence("f ln f is not integrable at infinity".into()));
            }
            // ∫_R^∞ c r^{k−1}(ln c + τ ln r) dr
            let (c, big_r) = (tail.coefficient, self.radius());
            let plain = big_r.powf(k) / -k;
            let logged = big_r.powf(k) * (big_r.ln() / -k + 1.0 / (k * k));
            c * (c.ln() * plain + tail.exponent * logged)
        };
        let rule = gauss_legendre(6);
        let mut body = 0.0;
        for w in self.radii.windows(2) {
            body += rule.integrate(w[0], w[1], |r| {
                let v = self.eval(r);
                if v > 0.0 {
                    v * v.ln() * r.powi(self.dim as i32 - 1)
                } else {
                    0.0
                }
            });
        }
        Ok(unit_sphere_area(self.dim) * (body + tail_part))
    }

    /// Serialize as `r,value` rows followed by the tail footer.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("r,value\n");
        for (r, v) in self.radii.iter().zip(&self.values) {
            let _ = writeln!(s, "{r},{v}");
        }
        let _ = writeln!(
            s,
            "# tail tau={} c={} n={}",
            self.tail.exponent, self.tail.coefficient, self.dim
        );
        if self.interp == Interpolation::LogCubic {
            s.push_str("# interp log-cubic\n");
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        match lines.next() {
            Some("r,value") => {}
            other => return Err(Error::Parse(format!("expected header `r,value`, found {other:?}"))),
        }
        let mut radii = Vec::new();
        let mut values = Vec::new();
        let mut tail = None;
        let mut interp = Interpolation::Linear;
        for line in lines {
            if let Some(rest) = line.strip_prefix("# tail") {
                tail = Some(parse_footer(rest)?);
            } else if line == "# interp log-cubic" {
                interp = Interpolation::LogCubic;
            } else if line.starts_with('#') {
                continue;
            } else {
                let (a, b) = line
                    .split_once(',')
                    .ok_or_else(|| Error::Parse(format!("malformed row `{line}`")))?;
                radii.push(parse_num(a)?);
                values.push(parse_num(b)?);
            }
        }
        let (tau, c, n) = tail.ok_or_else(|| Error::Parse("missing `# tail` footer".into()))?;
        RadialProfile::new(n, radii, values, Tail::new(tau, c), interp)
    }
}

fn parse_num(s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|e| Error::Parse(format!("bad number `{s}`: {e}")))
}

fn parse_footer(rest: &str) -> Result<(f64, f64, usize)> {
    let (mut tau, mut c, mut n) = (None, None, None);
    for tok in rest.split_whitespace() {
        let (k, v) = tok
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("bad footer token `{tok}`")))?;
        match k {
            "tau" => tau = Some(parse_num(v)?),
            "c" => c = Some(parse_num(v)?),
            "n" => n = Some(v.parse::<usize>().map_err(|e| Error::Parse(format!("bad dimension `{v}`: {e}")))?),
            _ => return Err(Error::Parse(format!("unknown footer key `{k}`"))),
        }
    }
    match (tau, c, n) {
        (Some(t), Some(c), Some(n)) => Ok((t, c, n)),
        _ => Err(Error::Parse("footer needs tau, c and n".into())),
    }
}

/// Sample `evaluator` on the grid and attach the tail (linear interpolation).
pub fn build_profile(evaluator: impl Fn(f64) -> f64, dim: usize, grid: &GridSpec, tail: Tail) -> Result<RadialProfile> {
    build_profile_with(evaluator, dim, grid, tail, Interpolation::Linear)
}

pub fn build_profile_with(
    evaluator: impl Fn(f64) -> f64,
    dim: usize,
    grid: &GridSpec,
    tail: Tail,
    interp: Interpolation,
) -> Result<RadialProfile> {
    if grid.intervals < 8 {
        return domain("grid needs at least 8 intervals");
    }
    let radii = grid.nodes()?;
    let values = radii.iter().map(|&r| evaluator(r)).collect();
    RadialProfile::new(dim, radii, values, tail, interp)
}

/// f(|x|) at any r; free-function spelling of [`RadialProfile::eval`].
pub fn eval_profile(f: &RadialProfile, r: f64) -> f64 {
    f.eval(r)
}

/// (∫_{ℝⁿ} f^p)^{1/p}.
pub fn lp_quantity(f: &RadialProfile, p: f64) -> Result<f64> {
    if !(p > 0.0) {
        return domain(format!("lp_quantity needs p > 0, got {p}"));
    }
    Ok(f.power_integral(p)?.powf(1.0 / p))
}

/// Indicator of the unit ball in ℝⁿ on a uniform grid.
pub fn unit_ball_indicator(dim: usize) -> RadialProfile {
    build_profile(|_| 1.0, dim, &GridSpec::uniform(1.0, 8), Tail::compact()).expect("indicator profile")
}
