//! Sphere inversion, the Kelvin-type transform w_{x,λ}(ξ) = (|ξ−x|/λ)^p w(ξ^{x,λ}),
//! the comparison kernel k, and a sampled estimate of the critical radius λ̄(x).

use crate::error::{domain, Error, Result};
use crate::extremal::{critical_q, SystemState};
use crate::profiles::{Interpolation, RadialProfile, Tail};
use crate::quadrature::gauss::gauss_legendre;
use crate::quadrature::{potential_at, QuadSpec};
use serde::{Deserialize, Serialize};

/// Points closer than this multiple of λ to the center count as the center.
const EXCLUSION: f64 = 1e-12;
/// Outer radius of the critical-radius sample annulus.
pub const CLOUD_OUTER: f64 = 1e3;
pub const CLOUD_SIZE: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphereMap {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl SphereMap {
    pub fn new(center: Vec<f64>, radius: f64) -> Result<Self> {
        if center.is_empty() {
            return domain("sphere center needs at least one coordinate");
        }
        if !(radius > 0.0) || !radius.is_finite() {
            return domain(format!("sphere radius must be positive, got {radius}"));
        }
        Ok(SphereMap { center, radius })
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    /// ξ − x, refusing points within the exclusion radius of the center.
    fn offset(&self, xi: &[f64]) -> Result<(Vec<f64>, f64)> {
        if xi.len() != self.dim() {
            return domain(format!("point has {} coordinates, map has {}", xi.len(), self.dim()));
        }
        let d: Vec<f64> = xi.iter().zip(&self.center).map(|(a, b)| a - b).collect();
        let r2 = norm2(&d);
        if r2.sqrt() <= EXCLUSION * self.radius {
            return Err(Error::Singular(format!("point {xi:?} sits on the sphere center")));
        }
        Ok((d, r2))
    }
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// A non-negative function on ℝⁿ given pointwise.
#[derive(Debug, Clone, PartialEq)]
pub enum PointFunction {
    /// a(b² + |y − center|²)^{exponent/2}
    Bubble {
        a: f64,
        b: f64,
        center: Vec<f64>,
        exponent: f64,
    },
    /// A radial profile recentered at `center`.
    Radial { profile: RadialProfile, center: Vec<f64> },
}

impl PointFunction {
    pub fn bubble(a: f64, b: f64, center: Vec<f64>, exponent: f64) -> Result<Self> {
        if !(a > 0.0 && b > 0.0) || center.is_empty() {
            return domain("bubble needs a, b > 0 and a center");
        }
        Ok(PointFunction::Bubble { a, b, center, exponent })
    }

    pub fn radial(profile: RadialProfile, center: Vec<f64>) -> Result<Self> {
        if center.len() != profile.dim() {
            return domain("center and profile dimensions differ");
        }
        Ok(PointFunction::Radial { profile, center })
    }

    pub fn dim(&self) -> usize {
        match self {
            PointFunction::Bubble { center, .. } | PointFunction::Radial { center, .. } => center.len(),
        }
    }

    pub fn provenance(&self) -> String {
        match self {
            PointFunction::Bubble { a, b, center, exponent } => {
                format!("bubble a={a} b={b} center={center:?} exponent={exponent}")
            }
            PointFunction::Radial { profile, center } => {
                format!("radial profile ({} nodes) centered at {center:?}", profile.radii().len())
            }
        }
    }

    pub fn eval(&self, y: &[f64]) -> f64 {
        match self {
            PointFunction::Bubble { a, b, center, exponent } => {
                let d2: f64 = y.iter().zip(center).map(|(p, c)| (p - c) * (p - c)).sum();
                a * (b * b + d2).powf(exponent / 2.0)
            }
            PointFunction::Radial { profile, center } => profile.eval(dist(y, center)),
        }
    }
}

/// ξ^{x,λ} = x + λ²(ξ−x)/|ξ−x|².
pub fn invert_point(map: &SphereMap, xi: &[f64]) -> Result<Vec<f64>> {
    let (d, r2) = map.offset(xi)?;
    let s = map.radius * map.radius / r2;
    Ok(map.center.iter().zip(&d).map(|(c, di)| c + s * di).collect())
}

/// (λ/|z−x|)^{2n}.
pub fn jacobian_factor(map: &SphereMap, z: &[f64]) -> Result<f64> {
    let (_, r2) = map.offset(z)?;
    Ok((map.radius * map.radius / r2).powi(map.dim() as i32))
}

/// w_{x,λ}(ξ) = (|ξ−x|/λ)^p w(ξ^{x,λ}).
pub fn transform_eval(w: &PointFunction, map: &SphereMap, p_exp: f64, xi: &[f64]) -> Result<f64> {
    if w.dim() != map.dim() {
        return domain("function and map dimensions differ");
    }
    let (_, r2) = map.offset(xi)?;
    let star = invert_point(map, xi)?;
    Ok((r2.sqrt() / map.radius).powf(p_exp) * w.eval(&star))
}

/// k(ξ, z) = (|ξ−x|/λ)^p |ξ^{x,λ} − z|^p − |ξ − z|^p.
pub fn kernel_k(map: &SphereMap, p_exp: f64, xi: &[f64], z: &[f64]) -> Result<f64> {
    let (_, r2) = map.offset(xi)?;
    map.offset(z)?;
    let star = invert_point(map, xi)?;
    Ok((r2.sqrt() / map.radius).powf(p_exp) * dist(&star, z).powf(p_exp) - dist(xi, z).powf(p_exp))
}

/// ∇_ξ k, written through |ξ−x||ξ^{x,λ}−z| = |z−x||z^{x,λ}−ξ|.
pub fn kernel_k_gradient(map: &SphereMap, p_exp: f64, xi: &[f64], z: &[f64]) -> Result<Vec<f64>> {
    map.offset(xi)?;
    let (_, rz2) = map.offset(z)?;
    let z_star = invert_point(map, z)?;
    let eps = EXCLUSION * map.radius;
    let d_star: Vec<f64> = xi.iter().zip(&z_star).map(|(a, b)| a - b).collect();
    let d: Vec<f64> = xi.iter().zip(z).map(|(a, b)| a - b).collect();
    let (m_star, m) = (norm2(&d_star).sqrt(), norm2(&d).sqrt());
    if m_star <= eps || m <= eps {
        return Err(Error::Singular("gradient of k is undefined at z and its inverse".into()));
    }
    let c = p_exp * (rz2.sqrt() / map.radius).powf(p_exp) * m_star.powf(p_exp - 2.0);
    let e = p_exp * m.powf(p_exp - 2.0);
    Ok(d_star.iter().zip(&d).map(|(s, t)| c * s - e * t).collect())
}

/// Conformal-identity residual on the sample points, plus the report fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub map: SphereMap,
    pub p: f64,
    pub q: f64,
    pub residual: f64,
    pub samples: usize,
    pub seed: u64,
}

/// max over the samples of |u_{x,λ}(ξ) − ∫|ξ−z|^p v_{x,λ}(z)^{−q} dz| / u_{x,λ}(ξ).
///
/// A centered map keeps everything radial and goes through the radial potential;
/// on the line a shifted map is integrated directly. Shifted maps in higher
/// dimensions are not supported.
pub fn conformal_residual(state: &SystemState, map: &SphereMap, sample_points: &[Vec<f64>], spec: &QuadSpec) -> Result<f64> {
    let n = state.dim();
    let (p, q) = (state.p_exp, state.q_exp);
    if map.dim() != n {
        return domain("map and state dimensions differ");
    }
    if (q - critical_q(n, p)).abs() > 1e-12 {
        return domain("the conformal identity needs q = 1 + 2n/p");
    }
    let u = PointFunction::radial(state.u.clone(), vec![0.0; n])?;
    let centered = map.center.iter().all(|&c| c == 0.0);
    let transformed_v = if centered { Some(radial_transform(&state.v, map.radius, p)?) } else { None };
    if !centered && n != 1 {
        return Err(Error::Unsupported("shifted sphere maps are only integrated on the line".into()));
    }
    let mut worst: f64 = 0.0;
    for xi in sample_points {
        let lhs = transform_eval(&u, map, p, xi)?;
        let rhs = match &transformed_v {
            Some(vt) => potential_at(&vt.powered(-q)?, p, norm2(xi).sqrt(), spec)?.value,
            None => line_transformed_potential(&state.v, map.center[0], map.radius, p, q, xi[0]),
        };
        worst = worst.max(((lhs - rhs) / lhs).abs());
    }
    Ok(worst)
}

/// Residual on `samples` cloud points with 0.1λ ≤ |ξ−x| ≤ 10³.
pub fn residual_report(state: &SystemState, map: &SphereMap, samples: usize, seed: u64, spec: &QuadSpec) -> Result<ResidualReport> {
    let points = annulus_cloud(&map.center, 0.1 * map.radius, samples, seed)?;
    Ok(ResidualReport {
        map: map.clone(),
        p: state.p_exp,
        q: state.q_exp,
        residual: conformal_residual(state, map, &points, spec)?,
        samples,
        seed,
    })
}

/// Profile of ρ ↦ (ρ/λ)^p v(λ²/ρ) on the inverted grid of v.
fn radial_transform(v: &RadialProfile, lambda: f64, p: f64) -> Result<RadialProfile> {
    let tail = v.tail();
    if tail.is_compact() {
        return Err(Error::NotPositive("transform of a compactly supported v".into()));
    }
    let l2 = lambda * lambda;
    let mut radii = vec![0.0];
    let mut values = vec![tail.coefficient * lambda.powf(p)];
    for (&r, &x) in v.radii().iter().zip(v.values()).skip(1).rev() {
        let rho = l2 / r;
        radii.push(rho);
        values.push((rho / lambda).powf(p) * x);
    }
    let last = *radii.last().unwrap();
    let c = values[values.len() - 1] / last.powf(p);
    RadialProfile::new(v.dim(), radii, values, Tail::new(p, c), Interpolation::LogCubic)
}

/// ∫_ℝ |ξ−z|^p v_{x,λ}(z)^{−q} dz for n = 1 by graded Gauss–Legendre panels.
fn line_transformed_potential(v: &RadialProfile, x: f64, lambda: f64, p: f64, q: f64, xi: f64) -> f64 {
    let l2 = lambda * lambda;
    let vt = |z: f64| {
        let d = z - x;
        if d == 0.0 {
            // v(s) ~ c s^p as s → ∞
            return v.tail().coefficient * lambda.powf(p);
        }
        (d.abs() / lambda).powf(p) * v.eval((x + l2 / d).abs())
    };
    let integrand = |z: f64| (xi - z).abs().powf(p) * vt(z).powf(-q);
    let scale = lambda + (xi - x).abs() + x.abs() + 1.0;
    let big = 1e6 * scale;
    let mut pts = vec![x - big, x + big];
    for c in [x, xi] {
        pts.push(c);
        let mut h = 1e-7 * scale;
        while h < big {
            pts.push(c - h);
            pts.push(c + h);
            h *= 2.0;
        }
    }
    pts.retain(|&t| t >= x - big && t <= x + big);
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup();
    let rule = gauss_legendre(20);
    let body: f64 = pts.windows(2).map(|w| rule.integrate(w[0], w[1], integrand)).sum();
    // beyond |z−x| = big the transform is (|z−x|/λ)^p v(|x|) and |ξ−z| ≈ |z−x|
    let far = (lambda.powf(p) / v.eval(x.abs())).powf(q);
    let k = p - p * q + 1.0;
    body + 2.0 * far * big.powf(k) / -k
}

/// Critical-radius search settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadiusSearch {
    pub lambda_max: f64,
    pub tol: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalRadius {
    /// None when no violation was found up to lambda_max.
    pub lambda_bar: Option<f64>,
    pub infinite: bool,
    pub witnessed: bool,
    /// Worst relative deficit on the cloud just past λ̄.
    pub margin: f64,
    /// Set when even the first failing scan radius violates by less than 1e−10 beyond tol.
    pub warning: Option<String>,
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut x = 0.0;
    while i > 0 {
        x += f * (i % base) as f64;
        i /= base;
        f *= inv;
    }
    x
}

const PRIMES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

/// Halton cloud in the annulus λ ≤ |y−x| ≤ CLOUD_OUTER: log-uniform radii and
/// Box–Muller directions; the seed offsets the sequence.
pub fn annulus_cloud(x: &[f64], lambda: f64, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let n = x.len();
    if n == 0 || 2 * n.div_ceil(2) + 1 > PRIMES.len() {
        return Err(Error::Unsupported(format!("sample cloud in dimension {n}")));
    }
    if !(lambda > 0.0 && lambda < CLOUD_OUTER) {
        return domain(format!("annulus needs 0 < λ < {CLOUD_OUTER}, got {lambda}"));
    }
    let span = (CLOUD_OUTER / lambda).ln();
    let mut cloud = Vec::with_capacity(count);
    for k in 0..count {
        let i = seed + k as u64 + 1;
        let radius = lambda * (span * radical_inverse(i, PRIMES[0])).exp();
        let mut dir = Vec::with_capacity(n + 1);
        if n == 1 {
            dir.push(if radical_inverse(i, PRIMES[1]) < 0.5 { -1.0 } else { 1.0 });
        } else {
            for j in 0..n.div_ceil(2) {
                let u1 = radical_inverse(i, PRIMES[1 + 2 * j]).max(f64::MIN_POSITIVE);
                let u2 = radical_inverse(i, PRIMES[2 + 2 * j]);
                let m = (-2.0 * u1.ln()).sqrt();
                let t = std::f64::consts::TAU * u2;
                dir.push(m * t.cos());
                dir.push(m * t.sin());
            }
            dir.truncate(n);
            let len = norm2(&dir).sqrt();
            dir.iter_mut().for_each(|d| *d /= len);
        }
        cloud.push(x.iter().zip(&dir).map(|(c, d)| c + radius * d).collect());
    }
    Ok(cloud)
}

/// min over the cloud of (w_{x,λ} − w)/w for both functions.
fn worst_deficit(u: &PointFunction, v: &PointFunction, p: f64, x: &[f64], lambda: f64, seed: u64) -> Result<f64> {
    let map = SphereMap::new(x.to_vec(), lambda)?;
    let mut worst = f64::INFINITY;
    for y in annulus_cloud(x, lambda, CLOUD_SIZE, seed)? {
        for w in [u, v] {
            let base = w.eval(&y);
            worst = worst.min((transform_eval(w, &map, p, &y)? - base) / base);
        }
    }
    Ok(worst)
}

/// Sampled λ̄(x): the first λ where the comparison u_{x,λ} ≥ u, v_{x,λ} ≥ v fails
/// on the cloud by more than `tol`, located by a geometric scan and bisection.
pub fn critical_radius(
    u: &PointFunction,
    v: &PointFunction,
    p_exp: f64,
    x: &[f64],
    search: &RadiusSearch,
) -> Result<CriticalRadius> {
    if u.dim() != x.len() || v.dim() != x.len() {
        return domain("functions and point live in different dimensions");
    }
    if !(search.tol > 0.0) || !(search.lambda_max > 0.0 && search.lambda_max < CLOUD_OUTER) {
        return domain("search needs tol > 0 and 0 < lambda_max < 1e3");
    }
    let holds = |lambda: f64| -> Result<(bool, f64)> {
        let d = worst_deficit(u, v, p_exp, x, lambda, search.seed)?;
        Ok((d >= -search.tol, d))
    };
    let mut lo = 0.0;
    let mut hi = None;
    let mut lambda = 1e-3 * search.lambda_max;
    loop {
        let (ok, d) = holds(lambda)?;
        if !ok {
            hi = Some((lambda, d));
            break;
        }
        lo = lambda;
        if lambda >= search.lambda_max {
            break;
        }
        lambda = (1.25 * lambda).min(search.lambda_max);
    }
    let Some((mut hi, scan_margin)) = hi else {
        return Ok(CriticalRadius {
            lambda_bar: None,
            infinite: true,
            witnessed: false,
            margin: f64::INFINITY,
            warning: None,
        });
    };
    let mut margin = scan_margin;
    while hi - lo > 1e-10 * hi {
        let mid = 0.5 * (lo + hi);
        let (ok, d) = holds(mid)?;
        if ok {
            lo = mid;
        } else {
            hi = mid;
            margin = d;
        }
    }
    // bisection always ends on the threshold; the scan step shows whether the violation is real
    let excess = -scan_margin - search.tol;
    let warning = (excess < 1e-10).then(|| format!("violation past the critical radius exceeds tol by only {excess:e}"));
    Ok(CriticalRadius {
        lambda_bar: Some(0.5 * (lo + hi)),
        infinite: false,
        witnessed: true,
        margin,
        warning,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extremal::conformal_weight_exponent;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_point(rng: &mut impl Rng, n: usize, scale: f64) -> Vec<f64> {
        (0..n).map(|_| rng.gen_range(-scale..scale)).collect()
    }

    #[test]
    fn inversion_examples() {
        let m = SphereMap::new(vec![0.0, 0.0], 1.0).unwrap();
        assert_eq!(invert_point(&m, &[2.0, 0.0]).unwrap(), vec![0.5, 0.0]);
        let on = [0.6, 0.8];
        let back = invert_point(&m, &on).unwrap();
        assert!(dist(&back, &on) < 1e-15);
        assert!(matches!(invert_point(&m, &[0.0, 0.0]), Err(Error::Singular(_))));
        assert!(SphereMap::new(vec![0.0], 0.0).is_err());
    }

    #[test]
    fn jacobian_examples() {
        let m = SphereMap::new(vec![0.0], 1.0).unwrap();
        assert_eq!(jacobian_factor(&m, &[2.0]).unwrap(), 0.25);
        assert!((jacobian_factor(&m, &[-1.0]).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn jacobian_change_of_variables() {
        // |B(0,2)\B(0,1)| in the plane against the inverted annulus weighted by the Jacobian
        let m = SphereMap::new(vec![0.0, 0.0], 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let samples = 200_000;
        let mut acc = 0.0;
        for _ in 0..samples {
            let z = random_point(&mut rng, 2, 1.0);
            let r = norm2(&z).sqrt();
            if (0.5..1.0).contains(&r) {
                acc += jacobian_factor(&m, &z).unwrap();
            }
        }
        let estimate = 4.0 * acc / samples as f64;
        let exact = 3.0 * std::f64::consts::PI;
        assert!((estimate - exact).abs() < 0.01 * exact, "{estimate}");
    }

    #[test]
    fn kernel_examples() {
        let m = SphereMap::new(vec![0.0], 1.0).unwrap();
        assert!((kernel_k(&m, 2.0, &[2.0], &[3.0]).unwrap() - 24.0).abs() < 1e-13);
        let m2 = SphereMap::new(vec![1.0, -1.0], 2.0).unwrap();
        let on = [1.0 + 2.0 * 0.6, -1.0 + 2.0 * 0.8];
        assert!(kernel_k(&m2, 1.3, &on, &[5.0, 5.0]).unwrap().abs() < 1e-12);
    }

    #[test]
    fn bubble_is_self_invariant() {
        let (a, b) = (1.7, 0.8);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in 1..=3 {
            let w = PointFunction::bubble(a, b, vec![0.0; n], 2.0).unwrap();
            let m = SphereMap::new(vec![0.0; n], b).unwrap();
            for _ in 0..1000 {
                let xi = random_point(&mut rng, n, 10.0);
                let t = transform_eval(&w, &m, 2.0, &xi).unwrap();
                assert!((t / w.eval(&xi) - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn transform_fixes_the_sphere_and_is_an_involution() {
        let w = PointFunction::bubble(1.0, 0.5, vec![0.3, 0.0], 1.0).unwrap();
        let m = SphereMap::new(vec![1.0, 2.0], 1.5).unwrap();
        let on = [1.0 + 1.5 * 0.8, 2.0 - 1.5 * 0.6];
        assert!((transform_eval(&w, &m, 1.0, &on).unwrap() - w.eval(&on)).abs() < 1e-14);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..1000 {
            let xi = random_point(&mut rng, 2, 5.0);
            // (w_{x,λ})_{x,λ}(ξ) = (|ξ−x|/λ)^p w_{x,λ}(ξ*)
            let star = invert_point(&m, &xi).unwrap();
            let twice = (dist(&xi, &m.center) / 1.5) * transform_eval(&w, &m, 1.0, &star).unwrap();
            assert!((twice / w.eval(&xi) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn gradient_sign_on_the_sphere() {
        let m = SphereMap::new(vec![0.0, 0.0], 1.0).unwrap();
        let z = [2.0, 1.0];
        let p = 1.5;
        for k in 0..16 {
            let t = k as f64 * 0.39;
            let xi = [t.cos(), t.sin()];
            let g = kernel_k_gradient(&m, p, &xi, &z).unwrap();
            let dot = g[0] * xi[0] + g[1] * xi[1];
            let expected = p * dist(&xi, &z).powf(p - 2.0) * (norm2(&z) - 1.0);
            assert!((dot - expected).abs() < 1e-12 * expected);
            assert!(dot > 0.0);
        }
    }

    #[test]
    fn quadratic_gradient_is_polynomial() {
        // p = 2: k = |ξ|²|ξ*−z|² − |ξ−z|² = 1 − 2ξ·z + |ξ|²|z|² − |ξ−z|² about x = 0, λ = 1
        let m = SphereMap::new(vec![0.0, 0.0, 0.0], 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..1000 {
            let xi = random_point(&mut rng, 3, 3.0);
            let z = random_point(&mut rng, 3, 3.0);
            let g = kernel_k_gradient(&m, 2.0, &xi, &z).unwrap();
            let z2 = norm2(&z);
            for i in 0..3 {
                let exact = 2.0 * xi[i] * z2 - 2.0 * xi[i];
                assert!((g[i] - exact).abs() < 1e-12 * (1.0 + exact.abs() + z2 * xi[i].abs()));
            }
        }
    }

    #[test]
    fn exponent_weight_vanishes() {
        for n in 1..=4 {
            for p in [0.25, 1.0, 2.0, 5.0] {
                assert!(conformal_weight_exponent(n, p, critical_q(n, p)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn halton_cloud_is_deterministic_and_in_the_annulus() {
        let x = [0.5, -0.5, 1.0];
        let a = annulus_cloud(&x, 0.7, 500, 11).unwrap();
        assert_eq!(a, annulus_cloud(&x, 0.7, 500, 11).unwrap());
        assert_ne!(a, annulus_cloud(&x, 0.7, 500, 12).unwrap());
        for y in &a {
            let r = dist(y, &x);
            assert!(r >= 0.7 * (1.0 - 1e-12) && r <= CLOUD_OUTER * (1.0 + 1e-12));
        }
    }

    #[test]
    fn centered_bubble_radius() {
        let b = 1.3;
        let u = PointFunction::bubble(2.0, b, vec![0.0, 0.0], 1.0).unwrap();
        let s = RadiusSearch {
            lambda_max: 20.0,
            tol: 1e-3,
            seed: 0,
        };
        let r = critical_radius(&u, &u, 1.0, &[0.0, 0.0], &s).unwrap();
        assert!(r.witnessed && !r.infinite);
        assert!((r.lambda_bar.unwrap() - b).abs() < 1e-3 * b * 2.0, "{r:?}");
    }

    #[test]
    fn shifted_point_radius() {
        let (b, c) = (1.0, vec![0.4, -0.3]);
        let u = PointFunction::bubble(1.0, b, c.clone(), 2.0).unwrap();
        let x = [1.0, 0.5];
        let s = RadiusSearch {
            lambda_max: 50.0,
            tol: 1e-4,
            seed: 1,
        };
        let r = critical_radius(&u, &u, 2.0, &x, &s).unwrap();
        let expected = (b * b + dist(&x, &c).powi(2)).sqrt();
        let lb = r.lambda_bar.unwrap();
        assert!((lb - expected).abs() < 1e-3, "{lb} vs {expected}");
        let m = SphereMap::new(x.to_vec(), lb).unwrap();
        for y in annulus_cloud(&x, lb, 2000, 1).unwrap() {
            assert!((transform_eval(&u, &m, 2.0, &y).unwrap() / u.eval(&y) - 1.0).abs() < 5e-3);
        }
    }

    #[test]
    fn increasing_function_never_saturates() {
        let prof = RadialProfile::new(1, vec![0.0, 1.0], vec![1.0, 1.0], Tail::new(0.0, 1.0), Interpolation::Linear).unwrap();
        let w = PointFunction::radial(prof, vec![0.0]).unwrap();
        let s = RadiusSearch {
            lambda_max: 10.0,
            tol: 1e-6,
            seed: 0,
        };
        // the constant 1 gives w_{0,λ}(y) = (|y|/λ)^p ≥ 1 on the annulus
        let r = critical_radius(&w, &w, 1.0, &[0.0], &s).unwrap();
        assert!(r.infinite && r.lambda_bar.is_none());
    }

    fn exact_line_state() -> SystemState {
        SystemState::bubble(1, 2.0, (std::f64::consts::PI / 2.0).cbrt(), 1.0).unwrap()
    }

    #[test]
    fn conformal_identity_for_the_line_bubble() {
        let s = exact_line_state();
        let spec = QuadSpec::default();
        let pts: Vec<Vec<f64>> = [0.3, 1.0, 2.5, 7.0].iter().map(|&x| vec![x]).collect();
        for lambda in [1.0, 2.0] {
            let m = SphereMap::new(vec![0.0], lambda).unwrap();
            let r = conformal_residual(&s, &m, &pts, &spec).unwrap();
            assert!(r < 1e-4, "λ = {lambda}: {r}");
        }
        let shifted = SphereMap::new(vec![0.7], 1.4).unwrap();
        let r = conformal_residual(&s, &shifted, &pts, &spec).unwrap();
        assert!(r < 1e-4, "shifted: {r}");
    }

    #[test]
    fn conformal_identity_separates_non_solutions() {
        let s = SystemState::perturbed_bubble(1, 2.0, (std::f64::consts::PI / 2.0).cbrt(), 1.0, 0.2, 4).unwrap();
        let pts: Vec<Vec<f64>> = [0.3, 1.0, 2.5, 7.0].iter().map(|&x| vec![x]).collect();
        let m = SphereMap::new(vec![0.0], 2.0).unwrap();
        let r = conformal_residual(&s, &m, &pts, &QuadSpec::default()).unwrap();
        assert!(r > 1e-2, "{r}");
    }

    #[test]
    fn shifted_maps_in_the_plane_are_unsupported() {
        let s = SystemState::bubble(2, 1.0, 1.0, 1.0).unwrap();
        let m = SphereMap::new(vec![0.5, 0.0], 1.0).unwrap();
        let err = conformal_residual(&s, &m, &[vec![1.0, 1.0]], &QuadSpec::default());
        assert!(matches!(err, Err(Error::Unsupported(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(2000))]

        #[test]
        fn involution(n in 1usize..4, seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = SphereMap::new(random_point(&mut rng, n, 3.0), rng.gen_range(0.1..5.0)).unwrap();
            let xi = random_point(&mut rng, n, 10.0);
            let back = invert_point(&m, &invert_point(&m, &xi).unwrap()).unwrap();
            // ξ* − x cancels against |x| once ξ* lands near the center
            let nx = norm2(&m.center).sqrt();
            let cond = 1.0 + nx * dist(&xi, &m.center) / (m.radius * m.radius);
            let scale = norm2(&xi).sqrt() + nx + m.radius;
            prop_assert!(dist(&back, &xi) <= 1e-14 * scale * cond);
        }

        #[test]
        fn kernel_factorization(n in 1usize..4, seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = random_point(&mut rng, n, 2.0);
            let lambda: f64 = rng.gen_range(0.2..3.0);
            let m = SphereMap::new(x.clone(), lambda).unwrap();
            let xi = random_point(&mut rng, n, 6.0);
            let z = random_point(&mut rng, n, 6.0);
            let k = kernel_k(&m, 2.0, &xi, &z).unwrap();
            let l2 = lambda * lambda;
            let f = (l2 - dist(&z, &x).powi(2)) * (l2 - dist(&xi, &x).powi(2)) / l2;
            let scale = (dist(&xi, &x).powi(2) / l2) * dist(&invert_point(&m, &xi).unwrap(), &z).powi(2) + dist(&xi, &z).powi(2);
            prop_assert!((k - f).abs() <= 1e-10 * scale);
        }

        #[test]
        fn distance_identity(n in 1usize..4, seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = random_point(&mut rng, n, 2.0);
            let lambda: f64 = rng.gen_range(0.2..3.0);
            let m = SphereMap::new(x.clone(), lambda).unwrap();
            let xi = random_point(&mut rng, n, 6.0);
            let z = random_point(&mut rng, n, 6.0);
            let lhs = dist(&z, &x) * dist(&xi, &x) * dist(&invert_point(&m, &xi).unwrap(), &invert_point(&m, &z).unwrap());
            let rhs = lambda * lambda * dist(&xi, &z);
            prop_assert!((lhs - rhs).abs() <= 1e-10 * rhs);
        }

        #[test]
        fn kernel_positive_outside(n in 1usize..4, seed in any::<u64>(), p in 0.2f64..4.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = random_point(&mut rng, n, 2.0);
            let lambda: f64 = rng.gen_range(0.2..3.0);
            let m = SphereMap::new(x.clone(), lambda).unwrap();
            let outside = |rng: &mut ChaCha8Rng| loop {
                let y = random_point(rng, n, 8.0);
                if dist(&y, &x) > lambda * 1.001 {
                    return y;
                }
            };
            let xi = outside(&mut rng);
            let z = outside(&mut rng);
            prop_assume!(dist(&xi, &z) > 1e-6);
            prop_assert!(kernel_k(&m, p, &xi, &z).unwrap() > 0.0);
        }

        #[test]
        fn gradient_matches_finite_differences(n in 1usize..4, seed in any::<u64>(), p in 0.5f64..3.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = SphereMap::new(random_point(&mut rng, n, 1.0), rng.gen_range(0.5..2.0)).unwrap();
            let xi = random_point(&mut rng, n, 3.0);
            let z = random_point(&mut rng, n, 3.0);
            let zs = invert_point(&m, &z).unwrap();
            prop_assume!(dist(&xi, &z) > 0.1 && dist(&xi, &zs) > 0.1 && dist(&xi, &m.center) > 0.1);
            let g = kernel_k_gradient(&m, p, &xi, &z).unwrap();
            let h = 1e-6;
            for i in 0..n {
                let (mut a, mut b) = (xi.clone(), xi.clone());
                a[i] += h;
                b[i] -= h;
                let fd = (kernel_k(&m, p, &a, &z).unwrap() - kernel_k(&m, p, &b, &z).unwrap()) / (2.0 * h);
                prop_assert!((fd - g[i]).abs() < 1e-5, "{} vs {}", fd, g[i]);
            }
        }
    }
}
