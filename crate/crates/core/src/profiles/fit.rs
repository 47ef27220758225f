//! The two-parameter bubble family a(b²+r²)^e and least-squares fitting to it.

use super::{build_profile_with, GridSpec, Interpolation, RadialProfile, Tail};
use crate::error::{domain, Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtremizerKind {
    /// f = a(b²+r²)^{−(2n+λ)/2}
    InequalityExtremizer { n: usize, lambda: f64 },
    /// u = a(b²+r²)^{p/2}
    SystemBubble { n: usize, p: f64 },
}

impl ExtremizerKind {
    pub fn dim(&self) -> usize {
        match *self {
            ExtremizerKind::InequalityExtremizer { n, .. } | ExtremizerKind::SystemBubble { n, .. } => n,
        }
    }

    /// Exponent e in a(b²+r²)^e.
    pub fn exponent(&self) -> f64 {
        match *self {
            ExtremizerKind::InequalityExtremizer { n, lambda } => -(2.0 * n as f64 + lambda) / 2.0,
            ExtremizerKind::SystemBubble { p, .. } => p / 2.0,
        }
    }

    pub fn spec(&self, a: f64, b: f64) -> ExtremizerSpec {
        ExtremizerSpec {
            a,
            b,
            center_offset: 0.0,
            exponent: self.exponent(),
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            ExtremizerKind::InequalityExtremizer { n, lambda } if n >= 1 && lambda > 0.0 && lambda.is_finite() => Ok(()),
            ExtremizerKind::SystemBubble { n, p } if n >= 1 && p > 0.0 && p.is_finite() => Ok(()),
            _ => domain(format!("invalid extremizer parameters {self:?}")),
        }
    }
}

/// Closed form a(b²+d²)^e, d the distance to a center at `center_offset` from the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtremizerSpec {
    pub a: f64,
    pub b: f64,
    pub center_offset: f64,
    pub exponent: f64,
}

impl ExtremizerSpec {
    pub fn eval_at_distance(&self, d: f64) -> f64 {
        self.a * (self.b * self.b + d * d).powf(self.exponent)
    }
}

/// Bubble profile on the default grid: log nodes from 10⁻³b to 10³b, 512 cells.
pub fn extremizer(kind: ExtremizerKind, a: f64, b: f64) -> Result<RadialProfile> {
    extremizer_on(kind, a, b, &GridSpec::log_from(1e-3 * b, 1e3 * b, 512))
}

pub fn extremizer_on(kind: ExtremizerKind, a: f64, b: f64, grid: &GridSpec) -> Result<RadialProfile> {
    kind.validate()?;
    if !(a > 0.0 && b > 0.0) || !a.is_finite() || !b.is_finite() {
        return domain(format!("bubble needs a, b > 0, got a = {a}, b = {b}"));
    }
    let spec = kind.spec(a, b);
    let tail = Tail::new(2.0 * spec.exponent, a);
    build_profile_with(|r| spec.eval_at_distance(r), kind.dim(), grid, tail, Interpolation::LogCubic)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitKind {
    InequalityExtremizer,
    SystemBubble,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub a: f64,
    pub b: f64,
    pub rms_residual: f64,
    pub iterations: usize,
}

const FIT_MAX_ITER: usize = 500;

/// Least squares for ln f ≈ ln a + e·ln(b²+r²) over the grid nodes, with e = τ/2
/// read from the profile's tail.
pub fn fit_extremizer(f: &RadialProfile, kind: FitKind) -> Result<FitResult> {
    let tau = f.tail().exponent;
    let e = tau / 2.0;
    match kind {
        FitKind::InequalityExtremizer if tau < 0.0 => {}
        FitKind::SystemBubble if tau > 0.0 => {}
        _ => return domain(format!("tail exponent {tau} does not match fit kind {kind:?}")),
    }
    if f.values().iter().any(|&v| !(v > 0.0)) || f.tail().is_compact() {
        return Err(Error::NotPositive("fit_extremizer needs a strictly positive profile".into()));
    }
    let r2: Vec<f64> = f.radii().iter().map(|r| r * r).collect();
    let y: Vec<f64> = f.values().iter().map(|v| v.ln()).collect();
    let m = y.len() as f64;

    let residuals = |alpha: f64, beta: f64, out: &mut Vec<f64>| {
        let b2 = (2.0 * beta).exp();
        out.clear();
        out.extend(r2.iter().zip(&y).map(|(r2, y)| y - alpha - e * (b2 + r2).ln()));
        out.iter().map(|x| x * x).sum::<f64>()
    };

    let c = f.tail().coefficient;
    let mut beta = {
        let guess = ((y[0] - c.ln()) / (2.0 * e)).exp();
        if guess.is_finite() && guess > 0.0 {
            guess.ln()
        } else {
            f.radii()[f.radii().len() / 2].ln()
        }
    };
    let mut alpha = y[0] - 2.0 * e * beta;
    let mut res = Vec::with_capacity(y.len());
    let mut cost = residuals(alpha, beta, &mut res);
    let mut mu = 1e-3;
    let mut converged = false;
    let mut iterations = 0;
    for it in 1..=FIT_MAX_ITER {
        iterations = it;
        let b2 = (2.0 * beta).exp();
        // Jacobian columns: d/dα = -1, d/dβ = -2e b²/(b²+r²)
        let (mut jaa, mut jab, mut jbb, mut ga, mut gb) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (ri, r2) in res.iter().zip(&r2) {
            let jb = -2.0 * e * b2 / (b2 + r2);
            jaa += 1.0;
            jab -= jb;
            jbb += jb * jb;
            ga -= ri;
            gb += jb * ri;
        }
        if ga.abs() + gb.abs() <= 1e-15 * m {
            converged = true;
            break;
        }
        let mut accepted = false;
        for _ in 0..60 {
            let (a11, a22) = (jaa * (1.0 + mu), jbb * (1.0 + mu));
            let det = a11 * a22 - jab * jab;
            let da = -(a22 * ga - jab * gb) / det;
            let db = -(a11 * gb - jab * ga) / det;
            let mut trial = Vec::with_capacity(res.len());
            let c_new = residuals(alpha + da, beta + db, &mut trial);
            if c_new.is_finite() && c_new <= cost {
                let small = da.abs() < 1e-15 * (1.0 + alpha.abs()) && db.abs() < 1e-15 * (1.0 + beta.abs());
                alpha += da;
                beta += db;
                cost = c_new;
                res = trial;
                mu = (mu / 3.0).max(1e-12);
                accepted = true;
                if small {
                    converged = true;
                }
                break;
            }
            mu *= 4.0;
        }
        if !accepted || converged || cost == 0.0 {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NonConvergence {
            iterations,
            residual: (cost / m).sqrt(),
            history: Vec::new(),
        });
    }
    Ok(FitResult {
        a: alpha.exp(),
        b: beta.exp(),
        rms_residual: (cost / m).sqrt(),
        iterations,
    })
}
