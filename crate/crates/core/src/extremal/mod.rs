//! The integral system u = ∫|x−y|^p v^{−q}, v = ∫|x−y|^p u^{−q}, its fixed-point
//! solver, the quotient minimizer for ‖I_λf‖_q/‖f‖_p and growth diagnostics.
//!
//! The map T(w)(x) = ∫|x−y|^p w(y)^{−q} dy has two exact symmetries at the
//! critical exponent q = 1 + 2n/p: T(cw) = c^{−q}T(w), and T commutes with the
//! dilation D_t w(x) = t^α w(x/t), α = (n+p)/(1+q). The solver iterates on
//! shapes (u, v normalized to u(0) = v(0) = target) and restores the scale with
//! these two symmetries, which keeps the unstable amplitude mode out of the loop.

use crate::constants::Params;
use crate::error::{domain, Error, Result};
use crate::profiles::{
    extremizer_on, fit_extremizer, lp_quantity, ExtremizerKind, FitKind, FitResult, GridSpec, Interpolation,
    RadialProfile, Tail,
};
use crate::quadrature::{Kernel, PotentialOperator, QuadSpec};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Refinement level of the quadrature behind every operator built here.
const SOLVER_LEVEL: usize = 1;
/// Log-space mixing weight of each new iterate.
pub const DAMPING: f64 = 0.5;
/// Both residuals below this count as converged.
pub const RESIDUAL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Anchor {
    ValueAtZero,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub anchor: Anchor,
    pub target: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemState {
    pub u: RadialProfile,
    pub v: RadialProfile,
    pub p_exp: f64,
    pub q_exp: f64,
    pub iteration: usize,
    pub residual_history: Vec<f64>,
    pub normalization: Normalization,
    /// Bubble fitted to u once the solver has converged.
    pub fitted: Option<FitResult>,
}

/// The critical exponent 1 + 2n/p.
pub fn critical_q(n: usize, p: f64) -> f64 {
    1.0 + 2.0 * n as f64 / p
}

/// 2n − pq + p, which vanishes at the critical exponent.
pub fn conformal_weight_exponent(n: usize, p: f64, q: f64) -> f64 {
    2.0 * n as f64 - p * q + p
}

impl SystemState {
    pub fn new(u: RadialProfile, v: RadialProfile, p_exp: f64, q_exp: f64) -> Result<Self> {
        if u.dim() != v.dim() {
            return domain("u and v live in different dimensions");
        }
        if !(p_exp > 0.0 && q_exp > 0.0) {
            return domain("exponents must be positive");
        }
        if q_exp > critical_q(u.dim(), p_exp) + 1e-12 {
            return domain(format!(
                "q = {q_exp} exceeds 1 + 2n/p = {}",
                critical_q(u.dim(), p_exp)
            ));
        }
        for w in [&u, &v] {
            if w.values().iter().any(|&x| !(x > 0.0)) || w.tail().is_compact() {
                return Err(Error::NotPositive("system states need strictly positive u and v".into()));
            }
        }
        let target = u.values()[0];
        Ok(SystemState {
            u,
            v,
            p_exp,
            q_exp,
            iteration: 0,
            residual_history: Vec::new(),
            normalization: Normalization {
                anchor: Anchor::ValueAtZero,
                target,
            },
            fitted: None,
        })
    }

    pub fn dim(&self) -> usize {
        self.u.dim()
    }

    /// u = v = a(b²+r²)^{p/2} at the critical exponent on the default bubble grid.
    pub fn bubble(n: usize, p: f64, a: f64, b: f64) -> Result<Self> {
        let kind = ExtremizerKind::SystemBubble { n, p };
        let u = extremizer_on(kind, a, b, &default_grid(b))?;
        SystemState::new(u.clone(), u, p, critical_q(n, p))
    }

    /// Bubble pair with independent smooth multiplicative noise of relative size
    /// `amplitude` on u and v.
    pub fn perturbed_bubble(n: usize, p: f64, a: f64, b: f64, amplitude: f64, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let grid = default_grid(b);
        let nodes = grid.nodes()?;
        let mut noisy = || -> Result<RadialProfile> {
            let modes: Vec<(f64, f64)> = (0..4).map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(0.0..6.3))).collect();
            let norm: f64 = modes.iter().map(|m| m.0.abs()).sum();
            let bump = |r: f64| {
                let s = (1.0 + r / b).ln();
                modes
                    .iter()
                    .enumerate()
                    .map(|(k, (c, phase))| c * ((k + 1) as f64 * s + phase).sin())
                    .sum::<f64>()
                    / norm
            };
            let values: Vec<f64> = nodes
                .iter()
                .map(|&r| a * (b * b + r * r).powf(p / 2.0) * (1.0 + amplitude * bump(r)))
                .collect();
            profile_with_seam(n, nodes.clone(), values, p)
        };
        let u = noisy()?;
        let v = noisy()?;
        SystemState::new(u, v, p, critical_q(n, p))
    }
}

fn default_grid(b: f64) -> GridSpec {
    GridSpec::log_from(1e-3 * b, 1e3 * b, 512)
}

/// Positive log-cubic profile whose power tail r^τ continues the last node exactly.
fn profile_with_seam(n: usize, radii: Vec<f64>, values: Vec<f64>, tau: f64) -> Result<RadialProfile> {
    let big_r = radii[radii.len() - 1];
    let c = values[values.len() - 1] / big_r.powf(tau);
    RadialProfile::new(n, radii, values, Tail::new(tau, c), Interpolation::LogCubic)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    pub res_u: f64,
    pub res_v: f64,
}

/// T(w) = ∫|x−y|^p w^{−q} at fixed targets.
struct SystemMap {
    op: PotentialOperator,
    q: f64,
}

impl SystemMap {
    fn new(n: usize, p: f64, q: f64, targets: &[f64], spec: &QuadSpec) -> Result<Self> {
        let lo = targets.iter().copied().filter(|&r| r > 0.0).fold(f64::INFINITY, f64::min);
        let top = targets[targets.len() - 1];
        let op = PotentialOperator::new(n, Kernel::Power(p), targets, lo, &[top], spec, SOLVER_LEVEL)?;
        Ok(SystemMap { op, q })
    }

    fn apply(&self, w: &RadialProfile) -> Result<Vec<f64>> {
        self.op.apply(&w.powered(-self.q)?)
    }
}

fn max_rel_dev(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| ((x - y) / x).abs()).fold(0.0, f64::max)
}

fn check_grids(state: &SystemState) -> Result<()> {
    if state.u.radii() != state.v.radii() {
        return domain("u and v must share one grid");
    }
    Ok(())
}

/// Relative sup-deviation of u from T(v) and of v from T(u) over the grid nodes.
pub fn el_residual(state: &SystemState, spec: &QuadSpec) -> Result<Residuals> {
    check_grids(state)?;
    let map = SystemMap::new(state.dim(), state.p_exp, state.q_exp, state.u.radii(), spec)?;
    let tv = map.apply(&state.v)?;
    let tu = map.apply(&state.u)?;
    Ok(Residuals {
        res_u: max_rel_dev(state.u.values(), &tv),
        res_v: max_rel_dev(state.v.values(), &tu),
    })
}

/// D_t w(x) = t^α w(x/t) sampled back on w's own grid.
fn dilate_on_grid(w: &RadialProfile, t: f64, alpha: f64, tau: f64) -> Result<RadialProfile> {
    let scale = t.powf(alpha);
    let values = w.radii().iter().map(|&r| scale * w.eval(r / t)).collect();
    profile_with_seam(w.dim(), w.radii().to_vec(), values, tau)
}

fn scaled_values(values: &[f64], c: f64) -> Vec<f64> {
    values.iter().map(|x| c * x).collect()
}

/// Scalars (α, β) with αu = T(βv) and βv = T(αu) at the origin, from
/// T(cw) = c^{−q}T(w).
fn exact_scales(u0: f64, v0: f64, tv0: f64, tu0: f64, q: f64) -> (f64, f64) {
    let a = (tv0 / u0).ln();
    let b = (tu0 / v0).ln();
    let d = 1.0 - q * q;
    (((a - q * b) / d).exp(), ((b - q * a) / d).exp())
}

fn mix(old: &[f64], new: &[f64], theta: f64) -> Vec<f64> {
    old.iter().zip(new).map(|(o, n)| o.powf(1.0 - theta) * n.powf(theta)).collect()
}

/// Alternating fixed-point iteration at q = 1 + 2n/p. `init` defaults to the
/// bubble a = b = 1 under smooth 5% noise.
pub fn solve_system(
    n: usize,
    p_exp: f64,
    init: Option<SystemState>,
    spec: &QuadSpec,
    max_iter: usize,
) -> Result<SystemState> {
    if n == 0 || !(p_exp > 0.0) || !p_exp.is_finite() {
        return domain("solve_system needs n >= 1 and p > 0");
    }
    let q = critical_q(n, p_exp);
    let mut state = match init {
        Some(s) => s,
        None => SystemState::perturbed_bubble(n, p_exp, 1.0, 1.0, 0.05, 0)?,
    };
    if state.dim() != n || (state.p_exp - p_exp).abs() > 1e-15 || (state.q_exp - q).abs() > 1e-12 {
        return domain("initial state does not match (n, p, 1 + 2n/p)");
    }
    check_grids(&state)?;
    let target = state.normalization.target;
    let alpha = (n as f64 + p_exp) / (1.0 + q);
    let nodes = state.u.radii().to_vec();
    let map = SystemMap::new(n, p_exp, q, &nodes, spec)?;

    let residual_of = |u: &RadialProfile, v: &RadialProfile| -> Result<(Residuals, Vec<f64>, Vec<f64>)> {
        let tv = map.apply(v)?;
        let tu = map.apply(u)?;
        let r = Residuals {
            res_u: max_rel_dev(u.values(), &tv),
            res_v: max_rel_dev(v.values(), &tu),
        };
        Ok((r, tv, tu))
    };

    let (r0, _, _) = residual_of(&state.u, &state.v)?;
    state.residual_history = vec![r0.res_u.max(r0.res_v)];
    if r0.res_u < RESIDUAL_TOL && r0.res_v < RESIDUAL_TOL {
        state.fitted = fit_extremizer(&state.u, FitKind::SystemBubble).ok();
        return Ok(state);
    }

    // shape iteration with u(0) = v(0) = 1
    let mut u = scaled_values(state.u.values(), 1.0 / state.u.values()[0]);
    let mut v = scaled_values(state.v.values(), 1.0 / state.v.values()[0]);
    let mut history = state.residual_history.clone();
    for it in 1..=max_iter {
        let up = profile_with_seam(n, nodes.clone(), u.clone(), p_exp)?;
        let vp = profile_with_seam(n, nodes.clone(), v.clone(), p_exp)?;
        let tv = map.apply(&vp)?;
        let tu = map.apply(&up)?;
        let (sa, sb) = exact_scales(u[0], v[0], tv[0], tu[0], q);
        // residuals of the rescaled pair (sa·u, sb·v), read off the same applications
        let res_u = u.iter().zip(&tv).map(|(x, t)| (1.0 - sb.powf(-q) * t / (sa * x)).abs()).fold(0.0, f64::max);
        let res_v = v.iter().zip(&tu).map(|(x, t)| (1.0 - sa.powf(-q) * t / (sb * x)).abs()).fold(0.0, f64::max);
        history.push(res_u.max(res_v));
        if !(res_u.is_finite() && res_v.is_finite()) {
            return Err(Error::NonConvergence {
                iterations: it,
                residual: f64::INFINITY,
                history,
            });
        }
        if res_u < RESIDUAL_TOL && res_v < RESIDUAL_TOL {
            let su = profile_with_seam(n, nodes.clone(), scaled_values(&u, sa), p_exp)?;
            let sv = profile_with_seam(n, nodes.clone(), scaled_values(&v, sb), p_exp)?;
            // dilate onto the anchor u(0) = target
            let t = (target / su.values()[0]).powf(1.0 / alpha);
            let fu = dilate_on_grid(&su, t, alpha, p_exp)?;
            let fv = dilate_on_grid(&sv, t, alpha, p_exp)?;
            let mut out = SystemState::new(fu, fv, p_exp, q)?;
            out.normalization.target = target;
            let (rf, _, _) = residual_of(&out.u, &out.v)?;
            history.push(rf.res_u.max(rf.res_v));
            out.iteration = it;
            out.residual_history = history;
            out.fitted = Some(fit_extremizer(&out.u, FitKind::SystemBubble)?);
            return Ok(out);
        }
        let nu = mix(&u, &tv, DAMPING);
        let nv = mix(&v, &tu, DAMPING);
        u = scaled_values(&nu, 1.0 / nu[0]);
        v = scaled_values(&nv, 1.0 / nv[0]);
    }
    let last = *history.last().unwrap();
    Err(Error::NonConvergence {
        iterations: max_iter,
        residual: last,
        history,
    })
}

/// Solver report in its external JSON form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverReport {
    pub n: usize,
    pub p: f64,
    pub q: f64,
    pub iterations: usize,
    pub residuals: Vec<f64>,
    pub fitted_a: Option<f64>,
    pub fitted_b: Option<f64>,
    pub ab_product: Option<f64>,
    pub quotient_if_applicable: Option<f64>,
}

impl SolverReport {
    pub fn from_state(state: &SystemState) -> Self {
        let fit = state.fitted;
        SolverReport {
            n: state.dim(),
            p: state.p_exp,
            q: state.q_exp,
            iterations: state.iteration,
            residuals: state.residual_history.clone(),
            fitted_a: fit.map(|f| f.a),
            fitted_b: fit.map(|f| f.b),
            ab_product: fit.map(|f| f.a * f.b),
            quotient_if_applicable: None,
        }
    }
}

/// Far-field limits of u/r^p and v/r^p against the masses ∫v^{−q}, ∫u^{−q}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthLimits {
    pub r_far: f64,
    pub lim_u: f64,
    pub lim_v: f64,
    pub mass_u: f64,
    pub mass_v: f64,
    pub match_u: f64,
    pub match_v: f64,
    /// Smallest C with (1+r^p)/C ≤ u, v ≤ C(1+r^p) on every grid node.
    pub envelope_c: f64,
}

pub fn growth_limits(state: &SystemState) -> Result<GrowthLimits> {
    let p = state.p_exp;
    let q = state.q_exp;
    let b = match state.fitted {
        Some(f) => f.b,
        None => fit_extremizer(&state.u, FitKind::SystemBubble)?.b,
    };
    let r_far = 1e3 * b;
    let lim_u = state.u.eval(r_far) / r_far.powf(p);
    let lim_v = state.v.eval(r_far) / r_far.powf(p);
    let mass_v = state.v.power_integral(-q)?;
    let mass_u = state.u.power_integral(-q)?;
    let mut c: f64 = 1.0;
    for w in [&state.u, &state.v] {
        for (&r, &x) in w.radii().iter().zip(w.values()) {
            let env = 1.0 + r.powf(p);
            c = c.max(x / env).max(env / x);
        }
    }
    Ok(GrowthLimits {
        r_far,
        lim_u,
        lim_v,
        mass_u,
        mass_v,
        match_u: (lim_u - mass_v).abs() / mass_v,
        match_v: (lim_v - mass_u).abs() / mass_u,
        envelope_c: c,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuotientResult {
    pub f: RadialProfile,
    pub quotient: f64,
    pub iterations: usize,
    pub history: Vec<f64>,
    /// Set for non-diagonal exponents, where the iteration has no derivation behind it.
    pub experimental: bool,
    /// Whether the quotient never rose by more than 1e−8 (relative) between steps.
    pub monotone: bool,
}

/// ‖I_λ f‖_q / ‖f‖_p evaluated from samples of I_λ f on a fixed grid.
struct QuotientMap {
    op: PotentialOperator,
    nodes: Vec<f64>,
    n: usize,
    lambda: f64,
    p: f64,
    q: f64,
}

impl QuotientMap {
    fn potential(&self, f: &RadialProfile) -> Result<RadialProfile> {
        let values = self.op.apply(f)?;
        profile_with_seam(self.n, self.nodes.clone(), values, self.lambda)
    }

    fn quotient(&self, f: &RadialProfile, h: &RadialProfile) -> Result<f64> {
        Ok(h.power_integral(self.q)?.powf(1.0 / self.q) / lp_quantity(f, self.p)?)
    }

    /// f ↦ (I_λ (I_λ f)^{q−1})^{1/(p−1)}.
    fn step(&self, h: &RadialProfile) -> Result<RadialProfile> {
        let g = h.powered(self.q - 1.0)?;
        let k = self.op.apply(&g)?;
        let e = 1.0 / (self.p - 1.0);
        let values = k.iter().map(|x| x.powf(e)).collect();
        profile_with_seam(self.n, self.nodes.clone(), values, self.lambda * e)
    }
}

/// Normalize ‖f‖_p = 1 and dilate so that f(0) equals `anchor`.
fn normalize(f: &RadialProfile, n: usize, p: f64, lambda: f64, anchor: f64) -> Result<RadialProfile> {
    let norm = lp_quantity(f, p)?;
    let f0 = f.values()[0] / norm;
    // s^{n/p} f(sx) keeps the L^p norm
    let s = (anchor / f0).powf(p / n as f64);
    let scale = s.powf(n as f64 / p) / norm;
    let values: Vec<f64> = f.radii().iter().map(|&r| scale * f.eval(s * r)).collect();
    profile_with_seam(n, f.radii().to_vec(), values, -(2.0 * n as f64 + lambda))
}

/// Minimizes ‖I_λf‖_q/‖f‖_p over radial profiles by iterating the Euler–Lagrange
/// relation f^{p−1} ∝ I_λ((I_λ f)^{q−1}).
pub fn minimize_quotient(params: &Params, init: &RadialProfile, spec: &QuadSpec, max_iter: usize) -> Result<QuotientResult> {
    let n = params.n;
    if init.dim() != n {
        return domain("initial profile has the wrong dimension");
    }
    let (p, lambda) = (params.p, params.lambda);
    let q = params.r / (params.r - 1.0);
    if lambda * q + n as f64 >= 0.0 {
        return Err(Error::Divergence("(I f)^q is not integrable at infinity".into()));
    }
    let experimental = !params.is_diagonal();
    let grid = GridSpec::log_from(1e-3, 1e3, 512);
    let nodes = grid.nodes()?;
    let op = PotentialOperator::new(n, Kernel::Power(lambda), &nodes, nodes[1], &[nodes[512]], spec, SOLVER_LEVEL)?;
    let map = QuotientMap {
        op,
        nodes: nodes.clone(),
        n,
        lambda,
        p,
        q,
    };
    // the normalized b = 1 bubble fixes the dilation
    let bubble = extremizer_on(ExtremizerKind::InequalityExtremizer { n, lambda }, 1.0, 1.0, &grid)?;
    let anchor = bubble.values()[0] / lp_quantity(&bubble, p)?;

    let h0 = map.potential(init)?;
    let mut quotient = map.quotient(init, &h0)?;
    let mut history = vec![quotient];
    // first step from the raw initial profile, which may have zeros
    let mut f = normalize(&map.step(&h0)?, n, p, lambda, anchor)?;
    if init.interpolation() == Interpolation::LogCubic
        && init.radii() == f.radii()
        && init.values().iter().all(|&x| x > 0.0)
    {
        // an already smooth start is kept so that an exact extremizer is a fixed point at step 0
        f = normalize(init, n, p, lambda, anchor)?;
    }
    let mut monotone = true;
    for it in 1..=max_iter {
        let h = map.potential(&f)?;
        let qk = map.quotient(&f, &h)?;
        if qk > quotient * (1.0 + 1e-8) {
            monotone = false;
        }
        let change = (qk - quotient).abs() / qk;
        quotient = qk;
        history.push(qk);
        let next = normalize(&map.step(&h)?, n, p, lambda, anchor)?;
        let mixed = profile_with_seam(
            n,
            nodes.clone(),
            mix(f.values(), next.values(), DAMPING),
            -(2.0 * n as f64 + lambda),
        )?;
        let shape = max_rel_dev(f.values(), next.values());
        if shape < RESIDUAL_TOL || (it > 1 && change < 1e-12) {
            return Ok(QuotientResult {
                f,
                quotient,
                iterations: it,
                history,
                experimental,
                monotone,
            });
        }
        f = normalize(&mixed, n, p, lambda, anchor)?;
    }
    Err(Error::NonConvergence {
        iterations: max_iter,
        residual: quotient,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn spec() -> QuadSpec {
        QuadSpec::default()
    }

    fn exact_pair() -> SystemState {
        // a³b³ = π/2 with b = 1
        SystemState::bubble(1, 2.0, (PI / 2.0).cbrt(), 1.0).unwrap()
    }

    #[test]
    fn exponent_identity() {
        for n in 1..6 {
            for p in [0.5, 1.0, 2.0, 3.7] {
                assert!(conformal_weight_exponent(n, p, critical_q(n, p)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn exact_bubble_solves_the_system() {
        let r = el_residual(&exact_pair(), &spec()).unwrap();
        assert!(r.res_u < 1e-6 && r.res_v < 1e-6, "{r:?}");
    }

    #[test]
    fn doubled_amplitude_is_not_a_solution() {
        let s = SystemState::bubble(1, 2.0, 2.0 * (PI / 2.0).cbrt(), 1.0).unwrap();
        let r = el_residual(&s, &spec()).unwrap();
        // u = 2U while T(2U) = U/4 gives |1 − 2^{−q−1}| = 7/8
        assert!((r.res_u - 7.0 / 8.0).abs() < 1e-5, "{r:?}");
    }

    #[test]
    fn constants_diverge() {
        let c = RadialProfile::new(1, vec![0.0, 1.0, 2.0], vec![1.0; 3], Tail::new(0.0, 1.0), Interpolation::Linear)
            .unwrap();
        let s = SystemState::new(c.clone(), c, 2.0, 2.0).unwrap();
        assert!(matches!(el_residual(&s, &spec()), Err(Error::Divergence(_))));
    }

    #[test]
    fn scaling_law_of_the_map() {
        let s = exact_pair();
        let map = SystemMap::new(1, 2.0, 2.0, s.v.radii(), &spec()).unwrap();
        let t = map.apply(&s.v).unwrap();
        let t3 = map.apply(&s.v.scaled(3.0).unwrap()).unwrap();
        for (a, b) in t.iter().zip(&t3) {
            assert!((b / a - 1.0 / 9.0).abs() < 1e-8 / 9.0);
        }
    }

    #[test]
    fn exact_start_returns_immediately() {
        let s = solve_system(1, 2.0, Some(exact_pair()), &spec(), 200).unwrap();
        assert_eq!(s.iteration, 0);
        assert!(s.residual_history[0] < 1e-6);
    }

    #[test]
    fn growth_of_the_exact_bubble() {
        let s = exact_pair();
        let g = growth_limits(&s).unwrap();
        let a = (PI / 2.0).cbrt();
        assert!((g.mass_v - a).abs() / a < 1e-6, "{g:?}");
        assert!(g.match_u < 1e-2 && g.match_v < 1e-2);
        assert_eq!(g.lim_u, g.lim_v);
        assert_eq!(g.mass_u, g.mass_v);
        assert!(g.envelope_c.is_finite() && g.envelope_c >= 1.0);
    }

    #[test]
    fn state_rejects_supercritical_q() {
        let s = exact_pair();
        assert!(SystemState::new(s.u.clone(), s.v.clone(), 2.0, 2.5).is_err());
    }

    #[test]
    fn noisy_start_lands_on_the_bubble_family() {
        let s = solve_system(1, 2.0, None, &spec(), 200).unwrap();
        let fit = s.fitted.unwrap();
        assert!((fit.a * fit.b - (PI / 2.0).cbrt()).abs() < 1e-4, "{fit:?}");
        assert!(*s.residual_history.last().unwrap() < 1e-6);
        assert!(max_rel_dev(s.u.values(), s.v.values()) < 1e-5);
        assert!((s.u.values()[0] - s.normalization.target).abs() < 1e-12);
        let report = SolverReport::from_state(&s);
        assert_eq!(report.q, 2.0);
        assert!(serde_json::to_string(&report).unwrap().contains("ab_product"));
    }

    #[test]
    fn plane_system_with_q_five() {
        let s = solve_system(2, 1.0, None, &spec(), 200).unwrap();
        assert_eq!(s.q_exp, 5.0);
        assert!(s.fitted.unwrap().rms_residual < 1e-4);
        let fit = s.fitted.unwrap();
        let b = SystemState::bubble(2, 1.0, fit.a, fit.b).unwrap();
        let r = el_residual(&b, &spec()).unwrap();
        assert!(r.res_u < 1e-4, "{r:?}");
    }

    #[test]
    fn minimizer_reaches_the_bubble_quotient() {
        let params = Params::diagonal(2, 1.0).unwrap();
        let target = crate::constants::bubble_ratio_constant(2, 1.0).unwrap();
        let ball = crate::profiles::unit_ball_indicator(2);
        let res = minimize_quotient(&params, &ball, &spec(), 200).unwrap();
        assert!((res.quotient - target).abs() < 1e-3 * target, "{}", res.quotient);
        assert!(res.f.is_decreasing());
        assert!(!res.experimental);
        // the extremizer is a fixed point from the first evaluation
        let grid = GridSpec::log_from(1e-3, 1e3, 512);
        let bubble = extremizer_on(ExtremizerKind::InequalityExtremizer { n: 2, lambda: 1.0 }, 1.0, 1.0, &grid).unwrap();
        let res = minimize_quotient(&params, &bubble, &spec(), 200).unwrap();
        assert!((res.history[0] - target).abs() < 1e-6 * target, "{}", res.history[0]);
    }

    #[test]
    fn off_diagonal_runs_are_flagged() {
        let params = Params::new(1, 0.6, 0.75, 1.0).unwrap();
        let res = minimize_quotient(&params, &crate::profiles::unit_ball_indicator(1), &spec(), 200).unwrap();
        assert!(res.experimental);
        assert!(res.quotient > 0.0);
    }
}
