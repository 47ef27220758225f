//! Step functions, distribution functions and the symmetric decreasing
//! rearrangement f★, with the comparison I(f, g) ≥ I(f★, g★).
//!
//! Every step function keeps the (level, measure) atoms it was built from, and
//! rearrangement carries them over unchanged, so f and f★ share the same atoms
//! and every layer-cake quantity agrees exactly under correctly rounded summation.

pub mod exact;

use crate::constants::unit_ball_volume;
use crate::error::{domain, Error, Result};
use crate::profiles::{Interpolation, RadialProfile, Tail};
use crate::quadrature::gauss::gauss_legendre;
use crate::quadrature::{bilinear_functional, neg_exponent_norm, QuadSpec};
use exact::{fsum, interval_potential, rectangle_integral};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Relative width of the linear ramp that stands in for a jump in a radial profile.
pub const JUMP_WIDTH: f64 = 1e-11;

/// Non-negative step function. For n = 1 the breakpoints are arbitrary interval
/// endpoints on the line; for n ≥ 2 they are shell radii starting at 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StepJson", into = "StepJson")]
pub struct StepFunction {
    n: usize,
    breakpoints: Vec<f64>,
    levels: Vec<f64>,
    /// (level, measure) pairs behind all layer-cake quantities.
    atoms: Vec<(f64, f64)>,
}

#[derive(Serialize, Deserialize)]
struct StepJson {
    n: usize,
    breakpoints: Vec<f64>,
    levels: Vec<f64>,
}

impl TryFrom<StepJson> for StepFunction {
    type Error = Error;
    fn try_from(s: StepJson) -> Result<Self> {
        StepFunction::new(s.n, s.breakpoints, s.levels)
    }
}

impl From<StepFunction> for StepJson {
    fn from(f: StepFunction) -> Self {
        StepJson {
            n: f.n,
            breakpoints: f.breakpoints,
            levels: f.levels,
        }
    }
}

fn piece_measures(n: usize, breakpoints: &[f64]) -> Vec<f64> {
    if n == 1 {
        breakpoints.windows(2).map(|w| w[1] - w[0]).collect()
    } else {
        let omega = unit_ball_volume(n);
        breakpoints
            .windows(2)
            .map(|w| omega * (w[1].powi(n as i32) - w[0].powi(n as i32)))
            .collect()
    }
}

impl StepFunction {
    pub fn new(n: usize, breakpoints: Vec<f64>, levels: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return domain("dimension must be positive");
        }
        if breakpoints.len() != levels.len() + 1 {
            return domain("a step function needs one more breakpoint than levels");
        }
        if breakpoints.iter().any(|b| !b.is_finite()) || breakpoints.windows(2).any(|w| !(w[1] > w[0])) {
            return domain("breakpoints must be finite and strictly increasing");
        }
        if n >= 2 && breakpoints[0] != 0.0 {
            return domain("radial breakpoints must start at 0");
        }
        for (i, &l) in levels.iter().enumerate() {
            if !(l >= 0.0) || !l.is_finite() {
                return Err(Error::NegativeSample {
                    r: breakpoints[i],
                    value: l,
                });
            }
        }
        let atoms = levels.iter().copied().zip(piece_measures(n, &breakpoints)).collect();
        Ok(StepFunction {
            n,
            breakpoints,
            levels,
            atoms,
        })
    }

    /// Radial step function with `levels[k]` on the shell radii[k] ≤ |x| < radii[k+1].
    /// In one dimension this is the even function on the line.
    pub fn radial(n: usize, radii: Vec<f64>, levels: Vec<f64>) -> Result<Self> {
        if radii.first() != Some(&0.0) {
            return domain("radial breakpoints must start at 0");
        }
        if n != 1 {
            return StepFunction::new(n, radii, levels);
        }
        let mut bp: Vec<f64> = radii[1..].iter().rev().map(|r| -r).collect();
        bp.extend(&radii[1..]);
        let mut lv: Vec<f64> = levels.iter().rev().copied().collect();
        lv.extend(&levels[1..]);
        StepFunction::new(1, bp, lv)
    }

    pub fn zero(n: usize) -> Self {
        StepFunction {
            n,
            breakpoints: vec![0.0],
            levels: Vec::new(),
            atoms: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    /// Lebesgue measure of each piece.
    pub fn measures(&self) -> Vec<f64> {
        piece_measures(self.n, &self.breakpoints)
    }

    /// The (level, measure) pairs behind the layer-cake quantities.
    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn eval(&self, x: f64) -> f64 {
        let x = if self.n >= 2 { x.abs() } else { x };
        if self.levels.is_empty() || x < self.breakpoints[0] || x >= self.breakpoints[self.levels.len()] {
            return 0.0;
        }
        let i = self.breakpoints.partition_point(|&b| b <= x) - 1;
        self.levels[i]
    }

    pub fn mass(&self) -> f64 {
        fsum(self.atoms.iter().map(|(l, m)| l * m))
    }

    /// (∫ f^p)^{1/p}, exact up to the final rounding.
    pub fn lp(&self, p: f64) -> Result<f64> {
        if !(p > 0.0) {
            return domain(format!("lp needs p > 0, got {p}"));
        }
        let s = fsum(
            self.atoms.iter().filter(|(l, _)| *l > 0.0).map(|(l, m)| l.powf(p) * m),
        );
        Ok(s.powf(1.0 / p))
    }

    /// Whether the function is already radial and non-increasing in |x|.
    pub fn is_symmetric_decreasing(&self) -> bool {
        match self.radial_data() {
            Some((_, levels)) => levels.windows(2).all(|w| w[1] <= w[0]),
            None => false,
        }
    }

    /// Shell radii and levels when the data is radial (always for n ≥ 2; for n = 1
    /// when the function is even).
    pub fn radial_data(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        if self.n >= 2 {
            return Some((self.breakpoints.clone(), self.levels.clone()));
        }
        let m = self.levels.len();
        if m == 0 {
            return Some((vec![0.0], Vec::new()));
        }
        let b = &self.breakpoints;
        let even = (0..=m).all(|i| b[i] == -b[m - i]) && (0..m).all(|i| self.levels[i] == self.levels[m - 1 - i]);
        if !even {
            return None;
        }
        if m % 2 == 1 {
            let mut radii = vec![0.0];
            radii.extend(&b[m / 2 + 1..]);
            Some((radii, self.levels[m / 2..].to_vec()))
        } else {
            Some((b[m / 2..].to_vec(), self.levels[m / 2..].to_vec()))
        }
    }

    /// Radial profile of the data with each jump replaced by a ramp of relative
    /// width [`JUMP_WIDTH`].
    pub fn to_profile(&self) -> Result<RadialProfile> {
        let Some((radii, levels)) = self.radial_data() else {
            return domain("only radially symmetric step data converts to a radial profile");
        };
        if levels.is_empty() {
            return RadialProfile::new(self.n, vec![0.0, 1.0], vec![0.0, 0.0], Tail::compact(), Interpolation::Linear);
        }
        let mut r = vec![0.0];
        let mut v = vec![levels[0]];
        for k in 1..radii.len() {
            let rho = radii[k];
            let before = rho * (1.0 - JUMP_WIDTH);
            if !(before > radii[k - 1]) {
                return domain("shell thinner than the jump ramp");
            }
            r.push(before);
            v.push(levels[k - 1]);
            r.push(rho);
            v.push(levels.get(k).copied().unwrap_or(0.0));
        }
        RadialProfile::new(self.n, r, v, Tail::compact(), Interpolation::Linear)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// |{f > a}|.
pub fn distribution_function(f: &StepFunction, a: f64) -> f64 {
    fsum(f.atoms.iter().filter(|(l, _)| *l > a).map(|(_, m)| *m))
}

/// The radial non-increasing step function with the same distribution function.
pub fn decreasing_rearrangement(f: &StepFunction) -> StepFunction {
    let mut atoms: Vec<(f64, f64)> = f.atoms.iter().copied().filter(|(l, _)| *l > 0.0).collect();
    if atoms.is_empty() {
        return StepFunction::zero(f.n);
    }
    atoms.sort_by(|x, y| y.0.partial_cmp(&x.0).unwrap());
    // one piece per distinct level, ending at the correctly rounded cumulative measure
    let mut levels = Vec::new();
    let mut cum = Vec::new();
    for k in 0..atoms.len() {
        if k + 1 == atoms.len() || atoms[k + 1].0 != atoms[k].0 {
            levels.push(atoms[k].0);
            cum.push(fsum(atoms[..=k].iter().map(|a| a.1)));
        }
    }
    let (breakpoints, levels) = if f.n == 1 {
        // 2k breakpoints ±c/2 bound 2k − 1 pieces with the top level in the middle
        let mut bp: Vec<f64> = cum.iter().rev().map(|c| -0.5 * c).collect();
        bp.extend(cum.iter().map(|c| 0.5 * c));
        let mut lv: Vec<f64> = levels.iter().rev().copied().collect();
        lv.extend(&levels[1..]);
        (bp, lv)
    } else {
        let omega = unit_ball_volume(f.n);
        let mut bp = vec![0.0];
        bp.extend(cum.iter().map(|c| (c / omega).powf(1.0 / f.n as f64)));
        (bp, levels)
    };
    StepFunction {
        n: f.n,
        breakpoints,
        levels,
        atoms,
    }
}

/// ∬ f(x)|x−y|^λ g(y) dx dy for n = 1, summed over exact rectangle integrals.
pub fn line_bilinear(f: &StepFunction, g: &StepFunction, lambda: f64) -> Result<f64> {
    if f.n != 1 || g.n != 1 {
        return domain("line_bilinear is for n = 1");
    }
    if !(lambda > 0.0) {
        return domain("lambda must be positive");
    }
    let mut terms = Vec::with_capacity(f.levels.len() * g.levels.len());
    for (i, &lf) in f.levels.iter().enumerate() {
        if lf == 0.0 {
            continue;
        }
        for (j, &lg) in g.levels.iter().enumerate() {
            if lg == 0.0 {
                continue;
            }
            let (a, b) = (f.breakpoints[i], f.breakpoints[i + 1]);
            let (c, d) = (g.breakpoints[j], g.breakpoints[j + 1]);
            terms.push(lf * lg * rectangle_integral(a, b, c, d, lambda));
        }
    }
    Ok(fsum(terms))
}

/// (I_λ f)(x) for n = 1.
pub fn line_potential(f: &StepFunction, x: f64, lambda: f64) -> f64 {
    fsum(
        f.levels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l > 0.0)
            .map(|(i, &l)| l * interval_potential(x, f.breakpoints[i], f.breakpoints[i + 1], lambda)),
    )
}

/// Graded panel breaks on [lo, hi] refined toward both ends.
fn graded_interval(lo: f64, hi: f64, depth: usize, out: &mut Vec<f64>) {
    let mid = 0.5 * (lo + hi);
    let mut w = 0.5 * (hi - lo);
    out.push(lo);
    out.push(mid);
    for _ in 0..depth {
        w *= 0.5;
        out.push(lo + w);
        out.push(hi - w);
    }
}

fn line_neg_integral(f: &StepFunction, lambda: f64, q: f64, depth: usize, order: usize) -> f64 {
    let m = f.mass();
    let b = &f.breakpoints;
    let (left, right) = (b[0], b[b.len() - 1]);
    let width = right - left;
    let center = fsum(
        f.levels
            .iter()
            .enumerate()
            .map(|(i, &l)| l * 0.5 * (b[i + 1] * b[i + 1] - b[i] * b[i])),
    ) / m;
    let far = 1e4 * width;
    let mut breaks = Vec::new();
    for w in b.windows(2) {
        graded_interval(w[0], w[1], depth, &mut breaks);
    }
    // geometric panels out to the far field on both sides
    let mut d = width * 0.5f64.powi(depth as i32);
    while d < far {
        breaks.push(left - d);
        breaks.push(right + d);
        d *= 1.5;
    }
    breaks.push(left - far);
    breaks.push(right + far);
    breaks.push(right);
    breaks.sort_by(|x, y| x.partial_cmp(y).unwrap());
    breaks.dedup();
    let rule = gauss_legendre(order);
    let body = fsum(
        breaks
            .windows(2)
            .map(|w| rule.integrate(w[0], w[1], |x| line_potential(f, x, lambda).powf(q))),
    );
    // far field I f ≈ m|x − c|^λ
    let e = lambda * q + 1.0;
    let tail = m.powf(q) * ((right + far - center).powf(e) + (center - left + far).powf(e)) / -e;
    body + tail
}

/// (∫_ℝ (I_λ f)^q dx)^{1/q} for n = 1 and q < 0, with its successive-difference estimate.
pub fn line_neg_norm(f: &StepFunction, lambda: f64, q: f64) -> Result<(f64, f64)> {
    if f.n != 1 {
        return domain("line_neg_norm is for n = 1");
    }
    if !(q < 0.0) || !(lambda > 0.0) {
        return domain("line_neg_norm needs lambda > 0 and q < 0");
    }
    if lambda * q + 1.0 >= 0.0 {
        return Err(Error::Divergence(format!("(I f)^q ~ |x|^{} is not integrable on the line", lambda * q)));
    }
    if !(f.mass() > 0.0) {
        return Err(Error::NotPositive("the potential of the zero function vanishes".into()));
    }
    let coarse = line_neg_integral(f, lambda, q, 24, 8);
    let fine = line_neg_integral(f, lambda, q, 36, 16);
    let err = (fine - coarse).abs() / fine.abs();
    Ok((fine.powf(1.0 / q), err / q.abs()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RieszReport {
    pub lhs: f64,
    pub rhs: f64,
    pub rel_err_estimate: f64,
    pub pass: bool,
}

/// I(f, g) against I(f★, g★): exact rectangle sums for n = 1, radial quadrature
/// otherwise.
pub fn check_reversed_riesz(f: &StepFunction, g: &StepFunction, lambda: f64, spec: &QuadSpec) -> Result<RieszReport> {
    if f.n != g.n {
        return domain("step functions live in different dimensions");
    }
    let (fs, gs) = (decreasing_rearrangement(f), decreasing_rearrangement(g));
    let (lhs, rhs, err) = if f.n == 1 {
        (line_bilinear(f, g, lambda)?, line_bilinear(&fs, &gs, lambda)?, 0.0)
    } else {
        let l = bilinear_functional(&f.to_profile()?, &g.to_profile()?, lambda, spec)?;
        let r = bilinear_functional(&fs.to_profile()?, &gs.to_profile()?, lambda, spec)?;
        (l.value, r.value, l.rel_err_estimate + r.rel_err_estimate)
    };
    let tol = spec.target_rel_tol + err;
    Ok(RieszReport {
        lhs,
        rhs,
        rel_err_estimate: err,
        pass: lhs >= rhs - tol * rhs.abs(),
    })
}

/// ‖I_λ f‖_q together with its error estimate, by the exact line path for n = 1.
pub fn step_neg_norm(f: &StepFunction, lambda: f64, q: f64, spec: &QuadSpec) -> Result<(f64, f64)> {
    if f.n == 1 {
        line_neg_norm(f, lambda, q)
    } else {
        let est = neg_exponent_norm(&f.to_profile()?, lambda, q, spec)?;
        Ok((est.value, est.rel_err_estimate))
    }
}

/// Random step function: 1–8 pieces, levels in [0, 4], support in [−10, 10]
/// (shell radii in [0, 10] for n ≥ 2).
pub fn random_step(rng: &mut impl Rng, n: usize) -> StepFunction {
    loop {
        let pieces = rng.gen_range(1..=8usize);
        let mut bp: Vec<f64> = if n == 1 {
            (0..=pieces).map(|_| rng.gen_range(-10.0..=10.0)).collect()
        } else {
            let mut v: Vec<f64> = (0..pieces).map(|_| rng.gen_range(0.0..=10.0)).collect();
            v.push(0.0);
            v
        };
        bp.sort_by(|x, y| x.partial_cmp(y).unwrap());
        // keep pieces comfortably wider than the jump ramp of the profile form
        if bp.windows(2).any(|w| w[1] - w[0] < 1e-6) {
            continue;
        }
        let levels = (0..pieces).map(|_| rng.gen_range(0.0..=4.0)).collect();
        if let Ok(f) = StepFunction::new(n, bp, levels) {
            return f;
        }
    }
}

/// Random radial step function (even in one dimension).
pub fn random_radial_step(rng: &mut impl Rng, n: usize) -> StepFunction {
    loop {
        let pieces = rng.gen_range(1..=8usize);
        let mut radii: Vec<f64> = (0..pieces).map(|_| rng.gen_range(0.0..=10.0)).collect();
        radii.push(0.0);
        radii.sort_by(|x, y| x.partial_cmp(y).unwrap());
        if radii.windows(2).any(|w| w[1] - w[0] < 1e-6) {
            continue;
        }
        let levels = (0..pieces).map(|_| rng.gen_range(0.0..=4.0)).collect();
        if let Ok(f) = StepFunction::radial(n, radii, levels) {
            return f;
        }
    }
}
