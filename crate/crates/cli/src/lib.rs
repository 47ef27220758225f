//! Experiment runner behind the `rhls` binary.
//!
//! Every subcommand resolves a flat [`ExperimentConfig`] (JSON file first, flags on
//! top), runs one library operation and writes a deterministic report envelope.
//! Exit codes: 0 pass, 1 usage or domain error, 2 numeric failure.

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rhls::constants::{self, Params};
use rhls::extremal::{self, SolverReport, SystemState};
use rhls::profiles::{extremizer, unit_ball_indicator, ExtremizerKind, RadialProfile};
use rhls::quadrature::{self, QuadSpec};
use rhls::rearrangement::{self, StepFunction};
use rhls::spheres::{self, PointFunction, RadiusSearch, SphereMap};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::io::Write;
use std::path::PathBuf;

/// Largest compatibility defect |1/p + 1/r − λ/n − 2| that gets snapped.
const SNAP_DEFECT: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

/// Flat experiment description; every field doubles as a `--flag`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, Args)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    #[arg(skip)]
    pub command: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Quadrature target tolerance; for `spheres`, the critical-radius margin.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Profile: ball | bubble:<a>:<b> | file:<path>.
    #[arg(long)]
    pub f: Option<String>,
    #[arg(long)]
    pub g: Option<String>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub center: Option<Vec<f64>>,
    #[arg(long)]
    pub radius: Option<f64>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub lambda_max: Option<f64>,
    #[arg(long)]
    pub angular_nodes: Option<usize>,
    #[arg(long)]
    pub radial_nodes_per_decade: Option<usize>,
    #[arg(long)]
    pub truncation_radius: Option<f64>,
    #[arg(long)]
    pub max_refinements: Option<usize>,
}

impl ExperimentConfig {
    /// Field-wise `self` over `base`.
    fn over(self, base: ExperimentConfig) -> ExperimentConfig {
        ExperimentConfig {
            command: self.command.or(base.command),
            n: self.n.or(base.n),
            p: self.p.or(base.p),
            r: self.r.or(base.r),
            lambda: self.lambda.or(base.lambda),
            out: self.out.or(base.out),
            format: self.format.or(base.format),
            seed: self.seed.or(base.seed),
            tol: self.tol.or(base.tol),
            f: self.f.or(base.f),
            g: self.g.or(base.g),
            max_iter: self.max_iter.or(base.max_iter),
            center: self.center.or(base.center),
            radius: self.radius.or(base.radius),
            samples: self.samples.or(base.samples),
            lambda_max: self.lambda_max.or(base.lambda_max),
            angular_nodes: self.angular_nodes.or(base.angular_nodes),
            radial_nodes_per_decade: self.radial_nodes_per_decade.or(base.radial_nodes_per_decade),
            truncation_radius: self.truncation_radius.or(base.truncation_radius),
            max_refinements: self.max_refinements.or(base.max_refinements),
        }
    }

    fn quad_spec(&self, use_tol: bool) -> Result<QuadSpec, CliError> {
        let d = QuadSpec::default();
        let spec = QuadSpec {
            angular_nodes: self.angular_nodes.unwrap_or(d.angular_nodes),
            radial_nodes_per_decade: self.radial_nodes_per_decade.unwrap_or(d.radial_nodes_per_decade),
            truncation_radius: self.truncation_radius.unwrap_or(d.truncation_radius),
            target_rel_tol: if use_tol { self.tol.unwrap_or(d.target_rel_tol) } else { d.target_rel_tol },
            max_refinements: self.max_refinements.unwrap_or(d.max_refinements),
        };
        spec.validate()?;
        Ok(spec)
    }

    fn need<T: Copy>(v: Option<T>, flag: &str) -> Result<T, CliError> {
        v.ok_or_else(|| CliError::Usage(format!("missing --{flag}")))
    }
}

#[derive(Debug, Parser)]
#[command(name = "rhls", version, about = "Reversed HLS numerics: constants, quadrature checks, solvers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Flags {
    /// Flat JSON config; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    cfg: ExperimentConfig,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Closed-form constants for (n, λ).
    Constants(Flags),
    /// Check the reversed inequality for a pair of radial profiles.
    Verify(Flags),
    /// Rearrange a step function and compare functionals.
    Rearrange(Flags),
    /// Minimize ‖I_λf‖_q/‖f‖_p by the Euler–Lagrange iteration.
    Minimize(Flags),
    /// Solve the integral system at q = 1 + 2n/p.
    SolveSystem(Flags),
    /// Conformal residual and critical radius of a solved system.
    Spheres(Flags),
    /// The λ → 0 constant and the logarithmic inequality for the unit ball.
    LogLimit(Flags),
}

impl Command {
    fn split(self) -> (&'static str, Flags) {
        match self {
            Command::Constants(f) => ("constants", f),
            Command::Verify(f) => ("verify", f),
            Command::Rearrange(f) => ("rearrange", f),
            Command::Minimize(f) => ("minimize", f),
            Command::SolveSystem(f) => ("solve-system", f),
            Command::Spheres(f) => ("spheres", f),
            Command::LogLimit(f) => ("log-limit", f),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Lib(#[from] rhls::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("config: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Lib(
                rhls::Error::NonConvergence { .. } | rhls::Error::RefinementExhausted { .. } | rhls::Error::Singular(_),
            ) => 2,
            _ => 1,
        }
    }
}

/// Report envelope written for every run.
#[derive(Debug, Serialize)]
pub struct Envelope {
    pub command: String,
    pub version: String,
    pub config: ExperimentConfig,
    pub result: Value,
    pub rel_err_estimate: f64,
    pub pass: bool,
}

struct Outcome {
    result: Value,
    rel_err: f64,
    pass: bool,
    /// Plot-ready columns for CSV output.
    table: Option<(Vec<&'static str>, Vec<Vec<f64>>)>,
}

/// Parses `argv` (program name first), runs the command and returns the exit code.
pub fn run_command<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn run(cli: Cli) -> Result<i32, CliError> {
    let (name, flags) = cli.command.split();
    let file = match &flags.config {
        Some(path) => serde_json::from_str::<ExperimentConfig>(&std::fs::read_to_string(path)?)?,
        None => ExperimentConfig::default(),
    };
    if let Some(c) = &file.command {
        if c != name {
            return Err(CliError::Usage(format!("config is for `{c}`, not `{name}`")));
        }
    }
    let mut cfg = flags.cfg.over(file);
    cfg.command = Some(name.to_string());
    let out = match name {
        "constants" => cmd_constants(&cfg)?,
        "verify" => cmd_verify(&cfg)?,
        "rearrange" => cmd_rearrange(&cfg)?,
        "minimize" => cmd_minimize(&cfg)?,
        "solve-system" => cmd_solve(&cfg)?,
        "spheres" => cmd_spheres(&cfg)?,
        "log-limit" => cmd_log_limit(&cfg)?,
        _ => unreachable!("clap only yields known subcommands"),
    };
    let envelope = Envelope {
        command: name.to_string(),
        version: rhls::VERSION.to_string(),
        config: cfg.clone(),
        result: out.result,
        rel_err_estimate: out.rel_err,
        pass: out.pass,
    };
    let text = match cfg.format.unwrap_or(Format::Json) {
        Format::Json => serde_json::to_string_pretty(&envelope)? + "\n",
        Format::Csv => to_csv(&envelope, out.table.as_ref()),
    };
    match &cfg.out {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(if out.pass { 0 } else { 2 })
}

fn to_csv(env: &Envelope, table: Option<&(Vec<&'static str>, Vec<Vec<f64>>)>) -> String {
    let mut s = String::new();
    match table {
        Some((header, rows)) => {
            s.push_str(&header.join(","));
            s.push('\n');
            for row in rows {
                let cells: Vec<String> = row.iter().map(|x| x.to_string()).collect();
                s.push_str(&cells.join(","));
                s.push('\n');
            }
        }
        None => {
            s.push_str("key,value\n");
            let mut rows = Vec::new();
            flatten("", &env.result, &mut rows);
            rows.push(("rel_err_estimate".into(), env.rel_err_estimate.to_string()));
            rows.push(("pass".into(), env.pass.to_string()));
            for (k, v) in rows {
                s.push_str(&format!("{k},{v}\n"));
            }
        }
    }
    s
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    let key = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match v {
        Value::Object(m) => m.iter().for_each(|(k, x)| flatten(&key(k), x, out)),
        Value::Array(a) => a.iter().enumerate().for_each(|(i, x)| flatten(&key(&i.to_string()), x, out)),
        Value::String(s) => out.push((prefix.to_string(), format!("\"{}\"", s.replace('"', "\"\"")))),
        Value::Null => out.push((prefix.to_string(), String::new())),
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

/// Resolves (p, r), snapping inputs within SNAP_DEFECT of compatibility.
fn resolve_params(cfg: &ExperimentConfig) -> Result<(Params, Option<Value>), CliError> {
    let n = ExperimentConfig::need(cfg.n, "n")?;
    let lambda = ExperimentConfig::need(cfg.lambda, "lambda")?;
    let nf = n as f64;
    let diag = 2.0 * nf / (2.0 * nf + lambda);
    let from_p = |p: f64| 1.0 / (2.0 + lambda / nf - 1.0 / p);
    let (p, r) = match (cfg.p, cfg.r) {
        (None, None) => (diag, diag),
        (Some(p), None) => (p, from_p(p)),
        (None, Some(r)) => (from_p(r), r),
        (Some(p), Some(r)) => (p, r),
    };
    match Params::new(n, p, r, lambda) {
        Ok(params) => Ok((params, None)),
        Err(rhls::Error::Incompatible { defect }) if defect.abs() <= SNAP_DEFECT => {
            let (p2, r2) = if (p - r).abs() <= SNAP_DEFECT { (diag, diag) } else { (p, from_p(p)) };
            let params = Params::new(n, p2, r2, lambda)?;
            let note = json!({ "from": { "p": p, "r": r }, "to": { "p": p2, "r": r2 }, "defect": defect });
            Ok((params, Some(note)))
        }
        Err(e) => Err(e.into()),
    }
}

fn load_profile(spec: Option<&str>, n: usize, lambda: Option<f64>) -> Result<RadialProfile, CliError> {
    let spec = spec.unwrap_or("ball");
    if spec == "ball" {
        return Ok(unit_ball_indicator(n));
    }
    if let Some(rest) = spec.strip_prefix("bubble:") {
        let parts: Vec<&str> = rest.split(':').collect();
        let bad = || CliError::Usage(format!("expected bubble:<a>:<b>, got `{spec}`"));
        if parts.len() != 2 {
            return Err(bad());
        }
        let a: f64 = parts[0].parse().map_err(|_| bad())?;
        let b: f64 = parts[1].parse().map_err(|_| bad())?;
        let lambda = ExperimentConfig::need(lambda, "lambda")?;
        return Ok(extremizer(ExtremizerKind::InequalityExtremizer { n, lambda }, a, b)?);
    }
    if let Some(path) = spec.strip_prefix("file:") {
        let f = RadialProfile::from_csv(&std::fs::read_to_string(path)?)?;
        if f.dim() != n {
            return Err(CliError::Usage(format!("{path} holds a profile in dimension {}, not {n}", f.dim())));
        }
        return Ok(f);
    }
    Err(CliError::Usage(format!("unknown profile `{spec}` (ball | bubble:<a>:<b> | file:<path>)")))
}

fn profile_rows(f: &RadialProfile) -> Vec<Vec<f64>> {
    f.radii().iter().zip(f.values()).map(|(&r, &v)| vec![r, v]).collect()
}

fn cmd_constants(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let n = ExperimentConfig::need(cfg.n, "n")?;
    let lambda = ExperimentConfig::need(cfg.lambda, "lambda")?;
    let sharp = constants::sharp_reversed_constant(n, lambda)?;
    let (params, adjusted) = resolve_params(cfg)?;
    let nf = n as f64;
    let classical = if lambda < nf {
        constants::classical_hls_constants(n, lambda, 2.0 * nf / (2.0 * nf - lambda)).ok()
    } else {
        None
    };
    let result = json!({
        "n": n,
        "lambda": lambda,
        "sharp": sharp.value,
        "sharp_validity": sharp.validity,
        "sharp_warning": sharp.warning,
        "bubble_ratio": constants::bubble_ratio_constant(n, lambda)?,
        "params": params,
        "adjusted": adjusted,
        "lower_bound": constants::lower_bound_constant(&params),
        "classical": classical,
        "log_limit": constants::log_limit_constant(n)?,
    });
    Ok(Outcome {
        result,
        rel_err: 0.0,
        pass: true,
        table: None,
    })
}

fn cmd_verify(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let (params, adjusted) = resolve_params(cfg)?;
    let spec = cfg.quad_spec(true)?;
    let f = load_profile(cfg.f.as_deref(), params.n, cfg.lambda)?;
    let g = load_profile(cfg.g.as_deref(), params.n, cfg.lambda)?;
    let rep = quadrature::verify_inequality(&f, &g, &params, &spec)?;
    let mut result = serde_json::to_value(&rep)?;
    result["adjusted"] = adjusted.unwrap_or(Value::Null);
    Ok(Outcome {
        rel_err: rep.rel_err_estimate,
        pass: rep.pass,
        result,
        table: None,
    })
}

fn cmd_rearrange(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let (params, adjusted) = resolve_params(cfg)?;
    let spec = cfg.quad_spec(true)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.unwrap_or(0));
    let mut load = |which: Option<&str>| -> Result<StepFunction, CliError> {
        match which {
            None => Ok(rearrangement::random_step(&mut rng, params.n)),
            Some(s) => match s.strip_prefix("file:") {
                Some(path) => Ok(StepFunction::from_json(&std::fs::read_to_string(path)?)?),
                None => Err(CliError::Usage(format!("rearrange takes file:<path> step data, got `{s}`"))),
            },
        }
    };
    let f = load(cfg.f.as_deref())?;
    let g = load(cfg.g.as_deref())?;
    if f.dim() != params.n || g.dim() != params.n {
        return Err(CliError::Usage("step data dimension differs from --n".into()));
    }
    let fs = rearrangement::decreasing_rearrangement(&f);
    let equimeasurable = f
        .levels()
        .iter()
        .chain(fs.levels())
        .all(|&a| rearrangement::distribution_function(&f, a) == rearrangement::distribution_function(&fs, a));
    let (lp, lp_star) = (f.lp(params.p)?, fs.lp(params.p)?);
    let lp_match = (lp - lp_star).abs() <= 1e-10 * lp.abs().max(f64::MIN_POSITIVE);
    let riesz = rearrangement::check_reversed_riesz(&f, &g, params.lambda, &spec)?;
    let mut rel_err = riesz.rel_err_estimate;
    let mut pass = equimeasurable && lp_match && riesz.pass;
    let potential_norms = if f.mass() > 0.0 {
        let (a, ea) = rearrangement::step_neg_norm(&f, params.lambda, params.q, &spec)?;
        let (b, eb) = rearrangement::step_neg_norm(&fs, params.lambda, params.q, &spec)?;
        let tol = spec.target_rel_tol + ea + eb;
        rel_err = rel_err.max(ea).max(eb);
        pass &= a >= b * (1.0 - tol);
        Some(json!({ "f": a, "f_star": b, "pass": a >= b * (1.0 - tol) }))
    } else {
        None
    };
    let step_json = |s: &StepFunction| -> Result<Value, CliError> { Ok(serde_json::from_str(&s.to_json()?)?) };
    let result = json!({
        "params": params,
        "adjusted": adjusted,
        "f": step_json(&f)?,
        "f_star": step_json(&fs)?,
        "equimeasurable": equimeasurable,
        "lp": { "p": params.p, "f": lp, "f_star": lp_star },
        "riesz": riesz,
        "potential_neg_norm": potential_norms,
    });
    Ok(Outcome {
        result,
        rel_err,
        pass,
        table: None,
    })
}

fn cmd_minimize(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let (params, adjusted) = resolve_params(cfg)?;
    let spec = cfg.quad_spec(true)?;
    let init = load_profile(cfg.f.as_deref(), params.n, cfg.lambda)?;
    let res = extremal::minimize_quotient(&params, &init, &spec, cfg.max_iter.unwrap_or(200))?;
    let bubble = if params.is_diagonal() {
        Some(constants::bubble_ratio_constant(params.n, params.lambda)?)
    } else {
        None
    };
    let result = json!({
        "params": params,
        "adjusted": adjusted,
        "quotient": res.quotient,
        "bubble_ratio": bubble,
        "iterations": res.iterations,
        "history": res.history,
        "experimental": res.experimental,
        "monotone": res.monotone,
        "decreasing": res.f.is_decreasing(),
    });
    Ok(Outcome {
        result,
        rel_err: spec.target_rel_tol,
        pass: res.f.is_decreasing(),
        table: Some((vec!["r", "f"], profile_rows(&res.f))),
    })
}

fn solved_state(cfg: &ExperimentConfig, spec: &QuadSpec) -> Result<SystemState, CliError> {
    let n = ExperimentConfig::need(cfg.n, "n")?;
    let p = ExperimentConfig::need(cfg.p, "p")?;
    let init = SystemState::perturbed_bubble(n, p, 1.0, 1.0, 0.05, cfg.seed.unwrap_or(0))?;
    Ok(extremal::solve_system(n, p, Some(init), spec, cfg.max_iter.unwrap_or(200))?)
}

fn cmd_solve(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let spec = cfg.quad_spec(true)?;
    let state = solved_state(cfg, &spec)?;
    let report = SolverReport::from_state(&state);
    let growth = extremal::growth_limits(&state)?;
    let last = *state.residual_history.last().unwrap_or(&f64::INFINITY);
    let result = json!({ "solver": report, "growth": growth });
    let rows = state
        .u
        .radii()
        .iter()
        .zip(state.u.values().iter().zip(state.v.values()))
        .map(|(&r, (&u, &v))| vec![r, u, v])
        .collect();
    Ok(Outcome {
        result,
        rel_err: last,
        pass: last < extremal::RESIDUAL_TOL,
        table: Some((vec!["r", "u", "v"], rows)),
    })
}

fn cmd_spheres(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let spec = cfg.quad_spec(false)?;
    let state = solved_state(cfg, &spec)?;
    let n = state.dim();
    let center = cfg.center.clone().unwrap_or_else(|| vec![0.0; n]);
    let fit = state
        .fitted
        .ok_or_else(|| CliError::Usage("solver returned no fitted bubble".into()))?;
    let map = SphereMap::new(center.clone(), cfg.radius.unwrap_or(fit.b))?;
    let seed = cfg.seed.unwrap_or(0);
    let residual = spheres::residual_report(&state, &map, cfg.samples.unwrap_or(16), seed, &spec)?;
    let bubble = PointFunction::bubble(fit.a, fit.b, vec![0.0; n], state.p_exp)?;
    let search = RadiusSearch {
        lambda_max: cfg.lambda_max.unwrap_or(100.0),
        tol: cfg.tol.unwrap_or(1e-3),
        seed,
    };
    let radius = spheres::critical_radius(&bubble, &bubble, state.p_exp, &center, &search)?;
    let expected = (fit.b * fit.b + center.iter().map(|c| c * c).sum::<f64>()).sqrt();
    let pass = residual.residual < 1e-4 && radius.lambda_bar.is_some();
    let result = json!({
        "residual": residual,
        "critical_radius": radius,
        "bubble": { "a": fit.a, "b": fit.b },
        "expected_lambda_bar": expected,
    });
    Ok(Outcome {
        result,
        rel_err: residual.residual,
        pass,
        table: None,
    })
}

fn cmd_log_limit(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let n = ExperimentConfig::need(cfg.n, "n")?;
    let spec = cfg.quad_spec(true)?;
    let h = 1e-6;
    let closed = constants::log_limit_constant(n)?;
    let fd = (constants::sharp_reversed_constant(n, h)?.value - 1.0) / h;
    let ball = unit_ball_indicator(n);
    let rep = quadrature::log_hls_check(&ball, &ball, &spec)?;
    let result = json!({
        "n": n,
        "log_limit": closed,
        "finite_difference": fd,
        "bubble_log_derivative": constants::bubble_ratio_log_derivative(n)?,
        "ball": rep,
    });
    Ok(Outcome {
        result,
        rel_err: rep.rel_err_estimate,
        pass: rep.pass && (closed - fd).abs() < 1e-5,
        table: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(n: usize, p: Option<f64>, r: Option<f64>, lambda: f64) -> ExperimentConfig {
        ExperimentConfig {
            n: Some(n),
            p,
            r,
            lambda: Some(lambda),
            ..Default::default()
        }
    }

    #[test]
    fn flags_win_over_the_file() {
        let file = ExperimentConfig { n: Some(3), seed: Some(1), ..Default::default() };
        let flags = ExperimentConfig { n: Some(2), ..Default::default() };
        let merged = flags.over(file);
        assert_eq!((merged.n, merged.seed), (Some(2), Some(1)));
    }

    #[test]
    fn missing_exponents_are_completed() {
        let (p, note) = resolve_params(&cfg(1, None, None, 1.0)).unwrap();
        assert!((p.p - 2.0 / 3.0).abs() < 1e-15 && note.is_none());
        let (p, _) = resolve_params(&cfg(2, Some(0.7), None, 1.0)).unwrap();
        assert!((1.0 / p.p + 1.0 / p.r - 2.5).abs() < 1e-12);
    }

    #[test]
    fn snapping_only_near_compatibility() {
        let (p, note) = resolve_params(&cfg(1, Some(0.6667), Some(0.6667), 1.0)).unwrap();
        assert_eq!(p.p, p.r);
        assert!(note.is_some());
        let (p, note) = resolve_params(&cfg(1, Some(0.6), Some(0.7505), 1.0)).unwrap();
        assert_eq!(p.p, 0.6);
        assert_eq!(note.unwrap()["from"]["r"], 0.7505);
        assert!(resolve_params(&cfg(1, Some(0.6), Some(0.6), 1.0)).is_err());
    }

    #[test]
    fn exit_codes_by_error_kind() {
        assert_eq!(CliError::Usage("x".into()).exit_code(), 1);
        assert_eq!(CliError::Lib(rhls::Error::Singular("x".into())).exit_code(), 2);
        assert_eq!(CliError::Lib(rhls::Error::Domain("x".into())).exit_code(), 1);
    }

    #[test]
    fn csv_flattening() {
        let env = Envelope {
            command: "constants".into(),
            version: "0".into(),
            config: ExperimentConfig::default(),
            result: serde_json::json!({ "a": { "b": [1.5, null] }, "s": "x\"y" }),
            rel_err_estimate: 0.0,
            pass: true,
        };
        assert_eq!(to_csv(&env, None), "key,value\na.b.0,1.5\na.b.1,\ns,\"x\"\"y\"\nrel_err_estimate,0\npass,true\n");
        let table = (vec!["r", "f"], vec![vec![0.0, 1.0], vec![2.0, 0.5]]);
        assert_eq!(to_csv(&env, Some(&table)), "r,f\n0,1\n2,0.5\n");
    }

    #[test]
    fn profile_specs() {
        assert_eq!(load_profile(Some("ball"), 2, None).unwrap().dim(), 2);
        assert!(load_profile(Some("bubble:1:2"), 1, Some(1.0)).is_ok());
        assert!(load_profile(Some("bubble:1"), 1, Some(1.0)).is_err());
        assert!(load_profile(Some("file:/nonexistent/x.csv"), 1, None).is_err());
    }
}
