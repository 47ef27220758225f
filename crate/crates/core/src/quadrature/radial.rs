//! Composite Gauss-Legendre meshes on [0, T] and the radial kernel integrals
//! built on them. Beyond T the profiles' power tails are integrated in closed
//! form against the far-field expansion of the angular average.

use super::angular::{self, Kernel};
use super::gauss::gauss_legendre;
use super::QuadSpec;
use crate::constants::unit_sphere_area;
use crate::error::{domain, Error, Result};
use crate::profiles::{RadialProfile, Tail};

/// Gauss points per radial panel.
pub(crate) const PANEL_ORDER: usize = 8;
/// Profiles with at most this many nodes are treated as piecewise data whose
/// nodes are all panel breaks.
pub(crate) const COARSE_NODES: usize = 257;

/// Resolution knobs for one refinement level.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Level {
    pub ang_order: usize,
    pub per_decade: usize,
    pub grade: usize,
}

impl Level {
    pub fn new(spec: &QuadSpec, level: usize, n: usize, kernel: Kernel) -> Self {
        let base_grade = match (n, kernel) {
            (1, _) | (_, Kernel::Log) => 14,
            (2, _) => 8,
            _ => 4,
        };
        Level {
            ang_order: spec.angular_nodes << level,
            per_decade: ((spec.radial_nodes_per_decade << level) / PANEL_ORDER).max(1),
            grade: base_grade + 2 * level,
        }
    }
}

pub(crate) fn profile_breaks(f: &RadialProfile) -> Vec<f64> {
    if f.radii().len() <= COARSE_NODES {
        f.radii()[1..].to_vec()
    } else {
        vec![f.radius()]
    }
}

fn is_coarse(f: &RadialProfile) -> bool {
    f.radii().len() <= COARSE_NODES
}

/// Breaks 0 < lo < … < cut, geometric between lo and cut, merged with `extra`.
pub(crate) fn base_mesh(lo: f64, cut: f64, per_decade: usize, extra: &[f64]) -> Vec<f64> {
    let mut b = vec![0.0, cut];
    if lo < cut {
        let k = (((cut / lo).log10() * per_decade as f64).ceil() as usize).max(1);
        let ratio = (cut / lo).ln() / k as f64;
        b.extend((0..k).map(|i| lo * (ratio * i as f64).exp()));
    }
    b.extend(extra.iter().copied().filter(|&x| x > 0.0 && x < cut));
    tidy(&mut b);
    b
}

fn tidy(b: &mut Vec<f64>) {
    b.sort_by(|x, y| x.partial_cmp(y).unwrap());
    b.dedup_by(|x, y| (*x - *y).abs() <= 1e-13 * x.abs().max(y.abs()));
}

/// Relative gap below which two points are treated as the two sides of one jump.
const TWIN_GAP: f64 = 1e-9;

/// Insert geometric sub-breaks approaching each point from both sides.
pub(crate) fn graded(mesh: &[f64], points: &[f64], depth: usize) -> Vec<f64> {
    let mut b = mesh.to_vec();
    let top = mesh[mesh.len() - 1];
    let mut pts: Vec<f64> = points.iter().copied().filter(|&x| x >= 0.0 && x <= top).collect();
    pts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    pts.dedup_by(|x, y| (*x - *y).abs() <= TWIN_GAP * x.abs().max(y.abs()));
    for x in pts {
        let gap = TWIN_GAP * x;
        // panels [l2, l1] and [r1, r2] around x, skipping a jump's twin node
        let i = mesh.partition_point(|&m| m < x - gap);
        let j = mesh.partition_point(|&m| m <= x + gap);
        let l1 = if i > 0 { mesh[i - 1] } else { x };
        let l2 = if i > 1 { mesh[i - 2] } else { l1 };
        let r1 = mesh.get(j).copied().unwrap_or(x);
        let r2 = mesh.get(j + 1).copied().unwrap_or(r1);
        // the finest width is set by the nearest neighbours, but the sweep starts
        // from the second ones so no wide panel ends right next to x
        let finest = (x - l1).max(r1 - x) * 0.5f64.powi(depth as i32);
        let mut w = (x - l2).max(r2 - x);
        b.push(x);
        while w > finest {
            w *= 0.5;
            if x > 0.0 && x - w > 0.0 {
                b.push(x - w);
            }
            if x + w < top {
                b.push(x + w);
            }
        }
    }
    tidy(&mut b);
    b
}

pub(crate) fn integrate_mesh(mesh: &[f64], mut f: impl FnMut(f64) -> f64) -> f64 {
    let rule = gauss_legendre(PANEL_ORDER);
    mesh.windows(2).map(|w| rule.integrate(w[0], w[1], &mut f)).sum()
}

pub(crate) fn mesh_nodes(mesh: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let rule = gauss_legendre(PANEL_ORDER);
    let mut nodes = Vec::with_capacity(mesh.len() * PANEL_ORDER);
    let mut weights = Vec::with_capacity(mesh.len() * PANEL_ORDER);
    for w in mesh.windows(2) {
        rule.push_mapped(w[0], w[1], &mut nodes, &mut weights);
    }
    (nodes, weights)
}

/// ∫_cut^∞ r^β dr, β < −1.
fn power_tail(beta: f64, cut: f64) -> f64 {
    cut.powf(beta + 1.0) / -(beta + 1.0)
}

/// ∫_cut^∞ r^β ln r dr, β < −1.
fn log_power_tail(beta: f64, cut: f64) -> f64 {
    let k = beta + 1.0;
    cut.powf(k) * (-cut.ln() / k + 1.0 / (k * k))
}

/// ∫_cut^∞ c r^τ r^{n−1} A(r, x) dr using the far-field form of A.
pub(crate) fn kernel_tail(n: usize, kernel: Kernel, tail: Tail, x: f64, cut: f64) -> Result<f64> {
    if tail.is_compact() {
        return Ok(0.0);
    }
    let area = unit_sphere_area(n);
    let kappa = kernel.far_field(n);
    let c = tail.coefficient;
    let base = tail.exponent + n as f64 - 1.0;
    match kernel {
        Kernel::Power(l) => {
            let beta = base + l;
            if beta >= -1.0 {
                return Err(Error::Divergence(format!(
                    "tail exponent {} against |x-y|^{l} in dimension {n}",
                    tail.exponent
                )));
            }
            Ok(c * area * (power_tail(beta, cut) + kappa * x * x * power_tail(beta - 2.0, cut)))
        }
        Kernel::Log => {
            if base >= -1.0 {
                return Err(Error::Divergence(format!(
                    "tail exponent {} against ln|x-y| in dimension {n}",
                    tail.exponent
                )));
            }
            Ok(c * area * (log_power_tail(base, cut) + kappa * x * x * power_tail(base - 2.0, cut)))
        }
    }
}

/// Integration context for one refinement level.
pub(crate) struct Radial {
    pub n: usize,
    pub kernel: Kernel,
    pub level: Level,
    pub t_base: f64,
}

impl Radial {
    pub fn new(spec: &QuadSpec, level: usize, n: usize, kernel: Kernel) -> Self {
        Radial {
            n,
            kernel,
            level: Level::new(spec, level, n, kernel),
            t_base: spec.truncation_radius,
        }
    }

    fn inner_cut(&self, f: &RadialProfile, x: f64) -> f64 {
        if f.tail().is_compact() {
            f.radius()
        } else {
            self.t_base.max(1e3 * x).max(f.radius())
        }
    }

    /// Mesh for the potential of `f` at radius x.
    pub fn inner_mesh(&self, f: &RadialProfile, lo: f64, x: f64) -> (Vec<f64>, f64) {
        let cut = self.inner_cut(f, x);
        let mesh = base_mesh(lo, cut, self.level.per_decade, &profile_breaks(f));
        let mesh = if x <= cut {
            graded(&mesh, &[x], self.level.grade)
        } else {
            mesh
        };
        (mesh, cut)
    }

    /// ∫₀^∞ f(r) r^{n−1} A(r, x) dr.
    pub fn potential(&self, f: &RadialProfile, lo: f64, x: f64) -> Result<f64> {
        let (mesh, cut) = self.inner_mesh(f, lo, x);
        let n = self.n;
        let pw = n as i32 - 1;
        let (kernel, order) = (self.kernel, self.level.ang_order);
        let body = integrate_mesh(&mesh, |r| {
            let fr = f.eval(r);
            if fr == 0.0 {
                0.0
            } else {
                fr * r.powi(pw) * angular::average(n, kernel, r, x, order)
            }
        });
        Ok(body + kernel_tail(n, kernel, f.tail(), x, cut)?)
    }

    /// ∫₀^cut f(r) r^{n−1+k} dr on the outer mesh.
    fn moment(&self, f: &RadialProfile, mesh: &[f64], k: i32) -> f64 {
        let pw = self.n as i32 - 1 + k;
        integrate_mesh(mesh, |r| f.eval(r) * r.powi(pw))
    }

    fn outer_mesh(&self, f: &RadialProfile, g: &RadialProfile, lo: f64, cut: f64) -> Vec<f64> {
        let mut extra = profile_breaks(g);
        let fb = profile_breaks(f);
        extra.extend(&fb);
        let mesh = base_mesh(lo, cut, self.level.per_decade, &extra);
        if is_coarse(f) {
            // the log potential has an (s−ρ)ln|s−ρ| kink at each jump, the power one a milder one
            let depth = match self.kernel {
                Kernel::Log => self.level.grade,
                Kernel::Power(_) => self.level.grade / 2,
            };
            graded(&mesh, &fb, depth)
        } else {
            mesh
        }
    }

    /// ∫_{ℝⁿ} g(|x|) ∫_{ℝⁿ} f(|y|) k(x − y) dy dx.
    pub fn bilinear(&self, f: &RadialProfile, g: &RadialProfile) -> Result<f64> {
        let n = self.n;
        let area = unit_sphere_area(n);
        let lo = f.first_node().min(g.first_node());
        let gt = g.tail();
        let cut = if gt.is_compact() {
            g.radius()
        } else {
            self.t_base.max(g.radius())
        };
        // check integrability of the outer tail before any heavy work
        let outer_tail = if gt.is_compact() {
            0.0
        } else {
            let m0 = f.power_integral(1.0)? / area;
            let m2 = self.moment(f, &base_mesh(lo, cut, self.level.per_decade, &profile_breaks(f)), 2);
            let kappa = self.kernel.far_field(n);
            let base = gt.exponent + n as f64 - 1.0;
            match self.kernel {
                Kernel::Power(l) => {
                    let beta = base + l;
                    if beta >= -1.0 {
                        return Err(Error::Divergence(format!(
                            "tail exponent {} of g against |x-y|^{l} in dimension {n}",
                            gt.exponent
                        )));
                    }
                    gt.coefficient * area * (m0 * power_tail(beta, cut) + kappa * m2 * power_tail(beta - 2.0, cut))
                }
                Kernel::Log => {
                    if base >= -1.0 {
                        return Err(Error::Divergence(format!(
                            "tail exponent {} of g against ln|x-y| in dimension {n}",
                            gt.exponent
                        )));
                    }
                    gt.coefficient * area * (m0 * log_power_tail(base, cut) + kappa * m2 * power_tail(base - 2.0, cut))
                }
            }
        };
        let mesh = self.outer_mesh(f, g, lo, cut);
        let (nodes, weights) = mesh_nodes(&mesh);
        let pw = n as i32 - 1;
        let mut body = 0.0;
        for (s, w) in nodes.into_iter().zip(weights) {
            let gs = g.eval(s);
            if gs == 0.0 {
                continue;
            }
            body += w * gs * s.powi(pw) * self.potential(f, lo, s)?;
        }
        Ok(area * (body + outer_tail))
    }

    /// ∫_{ℝⁿ} (I f)^q dx for q < 0 (power kernel only).
    pub fn neg_power_integral(&self, f: &RadialProfile, q: f64) -> Result<f64> {
        let Kernel::Power(l) = self.kernel else {
            return domain("negative-exponent norm needs a power kernel");
        };
        let n = self.n;
        let nf = n as f64;
        if l * q + nf >= 0.0 {
            return Err(Error::Divergence(format!(
                "(I f)^q ~ |x|^{} is not integrable in dimension {n}",
                l * q
            )));
        }
        let area = unit_sphere_area(n);
        let lo = f.first_node();
        let cut = self.t_base.max(1e3 * f.radius());
        let mesh = base_mesh(lo, cut, self.level.per_decade, &profile_breaks(f));
        let m0 = f.power_integral(1.0)? / area;
        if !(m0 > 0.0) {
            return Err(Error::NotPositive("the potential of the zero profile vanishes".into()));
        }
        let m2 = self.moment(f, &mesh, 2);
        let mesh = if is_coarse(f) {
            graded(&mesh, &profile_breaks(f), self.level.grade / 2)
        } else {
            mesh
        };
        let (nodes, weights) = mesh_nodes(&mesh);
        let pw = n as i32 - 1;
        let mut body = 0.0;
        for (s, w) in nodes.into_iter().zip(weights) {
            body += w * self.potential(f, lo, s)?.powf(q) * s.powi(pw);
        }
        let kappa = self.kernel.far_field(n);
        let e = l * q + nf - 1.0;
        let tail = (area * m0).powf(q) * (power_tail(e, cut) + q * kappa * m2 / m0 * power_tail(e - 2.0, cut));
        Ok(area * (body + tail))
    }
}

/// Precomputed rows ∑ₖ wₖ r_k^{n−1} A(r_k, xᵢ) for repeated potentials at fixed targets.
#[derive(Debug, Clone)]
pub struct PotentialOperator {
    n: usize,
    kernel: Kernel,
    targets: Vec<f64>,
    rows: Vec<OperatorRow>,
}

#[derive(Debug, Clone)]
struct OperatorRow {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    cut: f64,
}

impl PotentialOperator {
    /// `lo` is the smallest length scale to resolve and `breaks` are forced panel
    /// edges; integrands applied later must have their grid radius below the cut.
    pub fn new(
        n: usize,
        kernel: Kernel,
        targets: &[f64],
        lo: f64,
        breaks: &[f64],
        spec: &QuadSpec,
        level: usize,
    ) -> Result<Self> {
        if n == 0 {
            return domain("dimension must be positive");
        }
        if !(lo > 0.0) {
            return domain("operator needs a positive inner scale");
        }
        let ctx = Radial::new(spec, level, n, kernel);
        let rows = targets
            .iter()
            .map(|&x| {
                let cut = ctx.t_base.max(1e3 * x);
                let mesh = base_mesh(lo, cut, ctx.level.per_decade, breaks);
                let mesh = if x <= cut {
                    graded(&mesh, &[x], ctx.level.grade)
                } else {
                    mesh
                };
                let (nodes, mut weights) = mesh_nodes(&mesh);
                for (w, &r) in weights.iter_mut().zip(&nodes) {
                    *w *= r.powi(n as i32 - 1) * angular::average(n, kernel, r, x, ctx.level.ang_order);
                }
                OperatorRow { nodes, weights, cut }
            })
            .collect();
        Ok(PotentialOperator {
            n,
            kernel,
            targets: targets.to_vec(),
            rows,
        })
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    /// Potentials of `f` at every target.
    pub fn apply(&self, f: &RadialProfile) -> Result<Vec<f64>> {
        if f.dim() != self.n {
            return domain(format!("profile dimension {} differs from operator dimension {}", f.dim(), self.n));
        }
        self.targets
            .iter()
            .zip(&self.rows)
            .map(|(&x, row)| {
                if f.radius() > row.cut {
                    return domain("profile grid extends past the operator cut-off");
                }
                let body: f64 = row.nodes.iter().zip(&row.weights).map(|(&r, &w)| w * f.eval(r)).sum();
                Ok(body + kernel_tail(self.n, self.kernel, f.tail(), x, row.cut)?)
            })
            .collect()
    }
}
