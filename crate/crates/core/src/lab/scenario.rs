//! Scenario files, the per-model pipelines and report emission.

use std::fs;
use std::path::Path;

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::decay::{default_floor, fit_decay, DecayFit};
use super::limit::identify_limit;
use super::svg::decay_plot;
use crate::error::{Error, Result};
use crate::fmcf::{evolve_with, numeric_symbol_with, FmcfConfig, FmcfEvolveOptions, FmcfOperator};
use crate::heleshaw::{hs_conserved, hs_evolve, hs_gap, hs_multiplier, stable_part_norm};
use crate::manifold::{
    build_graph_chart, check_normal_stability, linearize_at, reduce_trajectory, simulate, spectral_split,
    synthesize_normally_stable, IntegratorOptions, ManifoldParam, PolySystem, QuasilinearSystem, StabilityOptions,
};
use crate::rd::{evolve_rd_with, rd_exponents, rd_weighted_diagnostic, RdConfig, RdEvolveOptions};
use crate::spectral::{PeriodicGrid, SpectralField};

pub const REPORT_FILE: &str = "report.json";
pub const CSV_FILE: &str = "trajectory.csv";
pub const SVG_FILE: &str = "decay.svg";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelTag {
    Manifold,
    Fmcf,
    Heleshaw,
    Rd,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub id: Option<String>,
    pub model: ModelTag,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default = "empty_object")]
    pub params: Value,
    #[serde(default = "empty_object")]
    pub experiment: Value,
}

fn empty_object() -> Value {
    Value::Object(Default::default())
}

/// Deserializes `value`, reporting failures as schema errors keyed by the
/// dotted path below `section`.
fn parse_section<T: DeserializeOwned>(value: &Value, section: &str) -> Result<T> {
    serde_path_to_error::deserialize(value.clone()).map_err(|err| {
        let path = err.path().to_string();
        let message = err.inner().to_string();
        let mut key = section.to_string();
        if path != "." {
            if !key.is_empty() {
                key.push('.');
            }
            key.push_str(&path);
        }
        if let Some(field) = field_in_message(&message) {
            if !key.ends_with(field) {
                if !key.is_empty() {
                    key.push('.');
                }
                key.push_str(field);
            }
        }
        Error::Schema { key, message }
    })
}

fn field_in_message(message: &str) -> Option<&str> {
    let rest = message
        .strip_prefix("missing field `")
        .or_else(|| message.strip_prefix("unknown field `"))?;
    rest.split('`').next()
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Scenario> {
        let value: Value = serde_json::from_str(text).map_err(|e| Error::Schema {
            key: "<document>".into(),
            message: e.to_string(),
        })?;
        parse_section(&value, "")
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilityFlags {
    pub manifold_rank: bool,
    pub tangent_is_kernel: bool,
    pub zero_semisimple: bool,
    pub stable_spectrum: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct LimitSummary {
    pub description: String,
    /// Kernel coordinates of the limit relative to the base equilibrium.
    pub coords: Vec<f64>,
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Artifacts {
    pub csv: String,
    pub svg: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub scenario: String,
    pub model: Option<ModelTag>,
    /// `pass`, `fail`, or the kind of error that stopped the run.
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    pub seed: u64,
    pub normal_stability: Option<StabilityFlags>,
    pub gap: Option<f64>,
    pub omega_fit: Option<f64>,
    pub decay: Option<DecayFit>,
    pub limit: Option<LimitSummary>,
    pub weighted_k: Option<f64>,
    pub extras: Vec<(String, f64)>,
    pub checks: Vec<Check>,
    pub artifacts: Option<Artifacts>,
}

impl RunReport {
    fn new(scenario: String, model: Option<ModelTag>, seed: u64) -> Self {
        RunReport {
            scenario,
            model,
            status: "fail".into(),
            message: None,
            seed,
            normal_stability: None,
            gap: None,
            omega_fit: None,
            decay: None,
            limit: None,
            weighted_k: None,
            extras: Vec::new(),
            checks: Vec::new(),
            artifacts: None,
        }
    }

    fn check(&mut self, name: &str, passed: bool, value: f64, bound: f64) {
        self.checks.push(Check {
            name: name.into(),
            passed,
            value,
            bound,
        });
    }

    fn extra(&mut self, name: &str, value: f64) {
        self.extras.push((name.into(), value));
    }

    pub fn passed(&self) -> bool {
        self.status == "pass"
    }
}

/// Tabular trajectory plus the series to plot.
struct Output {
    headers: Vec<String>,
    rows: Vec<Vec<f64>>,
    plot_title: String,
    plot_times: Vec<f64>,
    plot_norms: Vec<f64>,
}

fn names(h: &[&str]) -> Vec<String> {
    h.iter().map(|s| s.to_string()).collect()
}

/// Decay rate fitted to the samples so far; NaN until there are enough.
fn running_rate(times: &[f64], norms: &[f64]) -> f64 {
    fit_decay(times, norms, default_floor(norms)).map_or(f64::NAN, |f| f.omega_fit)
}

fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<()> {
    let tmp = dir.join(format!(".{name}.tmp"));
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, dir.join(name))?;
    Ok(())
}

fn csv_bytes(headers: &[String], rows: &[Vec<f64>]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(headers)?;
    for row in rows {
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

/// Runs the scenario in `config` and writes `report.json`, `trajectory.csv`
/// and `decay.svg` into `out`. Model failures end up in the report status;
/// only unreadable input and failed writes are returned as errors.
pub fn run_scenario(config: &Path, out: &Path, seed: Option<u64>) -> Result<RunReport> {
    let text = fs::read_to_string(config)?;
    let id = config
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "scenario".into());
    run_scenario_text(&text, &id, out, seed)
}

pub fn run_scenario_text(text: &str, default_id: &str, out: &Path, seed: Option<u64>) -> Result<RunReport> {
    fs::create_dir_all(out)?;
    let scenario = Scenario::parse(text);
    let (id, model, seed) = match &scenario {
        Ok(s) => (
            s.id.clone().unwrap_or_else(|| default_id.to_string()),
            Some(s.model),
            seed.or(s.seed).unwrap_or(0),
        ),
        Err(_) => (default_id.to_string(), None, seed.unwrap_or(0)),
    };
    let mut report = RunReport::new(id, model, seed);
    let result = scenario.and_then(|s| match s.model {
        ModelTag::Manifold => run_manifold(&s, seed, &mut report),
        ModelTag::Fmcf => run_fmcf(&s, &mut report),
        ModelTag::Heleshaw => run_heleshaw(&s, &mut report),
        ModelTag::Rd => run_rd(&s, &mut report),
    });
    match result {
        Ok(output) => {
            write_atomic(out, CSV_FILE, &csv_bytes(&output.headers, &output.rows)?)?;
            let svg = decay_plot(&output.plot_title, &output.plot_times, &output.plot_norms);
            write_atomic(out, SVG_FILE, svg.as_bytes())?;
            report.artifacts = Some(Artifacts {
                csv: CSV_FILE.into(),
                svg: SVG_FILE.into(),
            });
            report.status = if report.checks.iter().all(|c| c.passed) { "pass" } else { "fail" }.into();
        }
        Err(e) => {
            report.status = e.kind().into();
            report.message = Some(e.to_string());
        }
    }
    let mut json = serde_json::to_vec_pretty(&report)?;
    json.push(b'\n');
    write_atomic(out, REPORT_FILE, &json)?;
    Ok(report)
}

// ---------------------------------------------------------------- manifold

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    pub m: usize,
    pub d: usize,
    pub stable_eigs: Vec<f64>,
    #[serde(default)]
    pub curvature: f64,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifoldParams {
    #[serde(default)]
    system: Option<PolySystem>,
    #[serde(default)]
    synthesized: Option<SynthSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct ManifoldExperiment {
    u0: Option<Vec<f64>>,
    perturbation: f64,
    t_end: f64,
    dt: f64,
    r0: f64,
    newton_tol: f64,
    gap_tol: f64,
}

impl Default for ManifoldExperiment {
    fn default() -> Self {
        ManifoldExperiment {
            u0: None,
            perturbation: 1e-2,
            t_end: 25.0,
            dt: 0.1,
            r0: 0.5,
            newton_tol: 1e-12,
            gap_tol: 1e-6,
        }
    }
}

/// Point `u* + ε·w` with `w` a seeded random unit vector.
pub fn perturbed_start(u_star: &DVector<f64>, eps: f64, seed: u64) -> DVector<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = DVector::from_fn(u_star.len(), |_, _| StandardNormal.sample(&mut rng));
    u_star + w.normalize() * eps
}

fn manifold_problem(params: &ManifoldParams, seed: u64) -> Result<(QuasilinearSystem, DVector<f64>, ManifoldParam)> {
    match (&params.system, &params.synthesized) {
        (Some(sys), None) => {
            let built = sys.build()?;
            let param = sys.manifold_param().ok_or_else(|| Error::Schema {
                key: "params.system.manifold".into(),
                message: "an equilibrium family is required".into(),
            })?;
            Ok((built, sys.equilibrium(), param))
        }
        (None, Some(spec)) => {
            let s = synthesize_normally_stable(spec.m, spec.d, &spec.stable_eigs, spec.curvature, spec.seed.unwrap_or(seed))?;
            let param = s.manifold_param();
            Ok((s.system, DVector::zeros(spec.d), param))
        }
        _ => Err(Error::Schema {
            key: "params".into(),
            message: "exactly one of `system` and `synthesized` is required".into(),
        }),
    }
}

/// `t, u_1..u_d, x_1..x_m, y_norm` with `x` in kernel coordinates.
fn manifold_headers(d: usize, m: usize) -> Vec<String> {
    let mut h = vec!["t".to_string()];
    h.extend((1..=d).map(|i| format!("u_{i}")));
    h.extend((1..=m).map(|i| format!("x_{i}")));
    h.push("y_norm".into());
    h
}

fn run_manifold(s: &Scenario, seed: u64, report: &mut RunReport) -> Result<Output> {
    let params: ManifoldParams = parse_section(&s.params, "params")?;
    let exp: ManifoldExperiment = parse_section(&s.experiment, "experiment")?;
    let (system, u_star, param) = manifold_problem(&params, seed)?;

    let opts = StabilityOptions {
        gap_tol: exp.gap_tol,
        seed,
        ..StabilityOptions::default()
    };
    let stab = check_normal_stability(&system, &u_star, &param, &opts)?;
    report.normal_stability = Some(StabilityFlags {
        manifold_rank: stab.manifold_rank_ok,
        tangent_is_kernel: stab.tangent_matches_kernel,
        zero_semisimple: stab.zero_semisimple,
        stable_spectrum: stab.stable_spectrum_ok,
    });
    report.gap = Some(stab.gap);
    report.check("normally_stable", stab.passed(), stab.max_principal_sine, opts.angle_tol);
    if !stab.passed() {
        return Ok(Output {
            headers: manifold_headers(u_star.len(), 0),
            rows: Vec::new(),
            plot_title: "normal stability failed".into(),
            plot_times: Vec::new(),
            plot_norms: Vec::new(),
        });
    }

    let split = spectral_split(&linearize_at(&system, &u_star)?, exp.gap_tol)?;
    let chart = build_graph_chart(&system, &u_star, &split, exp.r0, exp.newton_tol)?;
    let u0 = match &exp.u0 {
        Some(u) if u.len() != u_star.len() => {
            return Err(Error::Schema {
                key: "experiment.u0".into(),
                message: format!("must have {} entries", u_star.len()),
            })
        }
        Some(u) => DVector::from_column_slice(u),
        None => perturbed_start(&u_star, exp.perturbation, seed),
    };
    let traj = simulate(&system, &u0, exp.t_end, exp.dt)?;
    let reduced = reduce_trajectory(&traj, &chart)?;
    let y = reduced.y_norms();
    let fit = fit_decay(&reduced.times, &y, integration_floor(&traj.states, &y))?;
    report.omega_fit = Some(fit.omega_fit);
    report.decay = Some(fit);
    report.check("reduced_rate", fit.omega_fit >= 0.95 * stab.gap, fit.omega_fit, 0.95 * stab.gap);

    let limit = identify_limit(&reduced, &chart)?;
    let shift = (DVector::from_column_slice(&limit.u_hat) - &u_star).norm();
    report.extra("limit_shift_ratio", shift / (&u0 - &u_star).norm());
    report.limit = Some(LimitSummary {
        description: "u* + x + phi(x) at the final kernel coordinates".into(),
        coords: limit.x_hat.clone(),
        residual: limit.residual,
    });

    let rows = reduced
        .times
        .iter()
        .zip(&traj.states)
        .zip(&reduced.x)
        .zip(&y)
        .map(|(((t, u), x), y)| {
            let mut row = vec![*t];
            row.extend(u.iter());
            row.extend(split.coordinates(x).iter());
            row.push(*y);
            row
        })
        .collect();
    Ok(Output {
        headers: manifold_headers(u_star.len(), split.kernel_dim),
        rows,
        plot_title: "|y(t)|".into(),
        plot_times: reduced.times.clone(),
        plot_norms: y,
    })
}

/// Noise floor of `|y|` from a simulated trajectory: the integrator keeps a
/// relative accuracy `rtol` on the full state, so `|y|` below
/// `rtol·max|u|` is not resolved.
pub fn integration_floor(states: &[DVector<f64>], y: &[f64]) -> f64 {
    let size = states.iter().map(|u| u.amax()).fold(0.0, f64::max);
    default_floor(y).max(IntegratorOptions::default().rtol * size)
}

// ---------------------------------------------------------------- fmcf

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct FmcfParams {
    #[serde(default = "half")]
    sigma: f64,
    #[serde(default = "default_points")]
    n_points: usize,
    #[serde(default)]
    delta: Option<f64>,
    #[serde(default)]
    far_cells: Option<usize>,
    #[serde(default)]
    quad_order: Option<usize>,
}

fn half() -> f64 {
    0.5
}

fn default_points() -> usize {
    256
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct FmcfExperiment {
    mean: f64,
    modes: Vec<(i64, f64)>,
    t_end: f64,
    dt: f64,
    record_every: usize,
    k_max: usize,
    norm_order: f64,
}

impl Default for FmcfExperiment {
    fn default() -> Self {
        FmcfExperiment {
            mean: 0.0,
            modes: vec![(1, 1e-2), (3, 1e-2)],
            t_end: 3.0,
            dt: 5e-3,
            record_every: 4,
            k_max: 32,
            norm_order: 1.25,
        }
    }
}

fn fmcf_operator(s: &Scenario) -> Result<(FmcfOperator, FmcfParams)> {
    let params: FmcfParams = parse_section(&s.params, "params")?;
    let mut cfg = FmcfConfig::new(params.sigma, params.n_points)?;
    if let Some(d) = params.delta {
        cfg.delta = d;
    }
    if let Some(f) = params.far_cells {
        cfg.far_cells = f;
    }
    if let Some(q) = params.quad_order {
        cfg.quad_order = q;
    }
    cfg.validate()?;
    Ok((FmcfOperator::new(cfg)?, params))
}

fn run_fmcf(s: &Scenario, report: &mut RunReport) -> Result<Output> {
    let exp: FmcfExperiment = parse_section(&s.experiment, "experiment")?;
    let (op, params) = fmcf_operator(s)?;
    let cfg = *op.config();
    let symbol = numeric_symbol_with(&op, exp.k_max)?;
    let gap = symbol.gap();
    report.gap = Some(gap);
    report.extra("p_fit", symbol.exponent);
    report.extra("omega0_num", symbol.omega0);
    let p_target = 1.0 + params.sigma;
    report.check("symbol_exponent", (symbol.exponent / p_target - 1.0).abs() <= 0.02, symbol.exponent, p_target);

    let u0 = SpectralField::from_cosine_modes(cfg.grid, exp.mean, &exp.modes);
    let opts = FmcfEvolveOptions {
        dt: exp.dt,
        record_every: exp.record_every,
        norm_order: exp.norm_order,
    };
    let traj = evolve_with(&op, &u0, exp.t_end, &opts)?;
    let fit = fit_decay(&traj.times, &traj.deviations, default_floor(&traj.deviations))?;
    report.omega_fit = Some(fit.omega_fit);
    report.decay = Some(fit);
    report.check("decay_rate", fit.omega_fit >= 0.9 * gap, fit.omega_fit, 0.9 * gap);

    let last = traj.final_state();
    let residual = op.apply(last, last)?.max_abs();
    let limit = *traj.means.last().unwrap();
    report.check("equilibrium_residual", residual <= 1e-8, residual, 1e-8);
    report.limit = Some(LimitSummary {
        description: "constant profile at the final integral mean".into(),
        coords: vec![limit],
        residual,
    });
    report.extra("mean_drift", limit - traj.means[0]);

    Ok(Output {
        headers: names(&["t", "mean", "hs_dev", "fitted_rate"]),
        rows: traj
            .times
            .iter()
            .zip(&traj.means)
            .zip(&traj.deviations)
            .enumerate()
            .map(|(i, ((t, m), d))| vec![*t, *m, *d, running_rate(&traj.times[..=i], &traj.deviations[..=i])])
            .collect(),
        plot_title: "|u - mean u|".into(),
        plot_times: traj.times.clone(),
        plot_norms: traj.deviations.clone(),
    })
}

// ---------------------------------------------------------------- heleshaw

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct HeleShawParams {
    #[serde(default = "hs_points")]
    n_points: usize,
}

fn hs_points() -> usize {
    64
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct HeleShawExperiment {
    mean: f64,
    modes: Vec<(i64, f64)>,
    t_end: f64,
    dt: f64,
}

impl Default for HeleShawExperiment {
    fn default() -> Self {
        HeleShawExperiment {
            mean: 0.0,
            modes: vec![(2, 1.0)],
            t_end: 5.0,
            dt: 0.05,
        }
    }
}

fn run_heleshaw(s: &Scenario, report: &mut RunReport) -> Result<Output> {
    let params: HeleShawParams = parse_section(&s.params, "params")?;
    let exp: HeleShawExperiment = parse_section(&s.experiment, "experiment")?;
    if !(exp.dt > 0.0 && exp.t_end > 0.0) {
        return Err(Error::Config("need dt > 0 and t_end > 0".into()));
    }
    let grid = PeriodicGrid::standard(params.n_points)?;
    let cert = hs_gap(&grid);
    report.gap = Some(cert.gap);
    report.extra("kernel_dim", cert.kernel_dim as f64);

    let v0 = SpectralField::from_cosine_modes(grid, exp.mean, &exp.modes);
    let n = (exp.t_end / exp.dt).round() as usize;
    let times: Vec<f64> = (0..=n).map(|i| i as f64 * exp.dt).collect();
    let states: Vec<SpectralField> = times.iter().map(|&t| hs_evolve(&v0, t)).collect();
    let norms: Vec<f64> = states.iter().map(stable_part_norm).collect();
    let moments: Vec<(f64, f64, f64)> = states.iter().map(hs_conserved).collect();
    let drift = moments
        .iter()
        .map(|m| (m.0 - moments[0].0).abs().max((m.1 - moments[0].1).abs()).max((m.2 - moments[0].2).abs()))
        .fold(0.0, f64::max);
    report.check("conserved_functionals", drift <= 1e-12, drift, 1e-12);

    let fit = fit_decay(&times, &norms, default_floor(&norms))?;
    report.omega_fit = Some(fit.omega_fit);
    report.decay = Some(fit);
    report.check("decay_rate", fit.omega_fit >= 0.99 * cert.gap, fit.omega_fit, 0.99 * cert.gap);

    let last = states.last().unwrap();
    let kernel_part = last.project_low_modes(1);
    let residual = kernel_part.apply_multiplier(&hs_multiplier())?.max_abs();
    let (c, sn) = match kernel_part.coeff(1) {
        Some(z) => (2.0 * z.re, -2.0 * z.im),
        None => (0.0, 0.0),
    };
    report.limit = Some(LimitSummary {
        description: "kernel part a + b cos x + c sin x".into(),
        coords: vec![kernel_part.integral_mean(), c, sn],
        residual,
    });

    Ok(Output {
        headers: names(&["t", "stable_norm", "area", "moment_cos", "moment_sin"]),
        rows: times
            .iter()
            .zip(&norms)
            .zip(&moments)
            .map(|((t, n), m)| vec![*t, *n, m.0, m.1, m.2])
            .collect(),
        plot_title: "stable part".into(),
        plot_times: times.clone(),
        plot_norms: norms,
    })
}

// ---------------------------------------------------------------- rd

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct CosineData {
    mean: f64,
    modes: Vec<(u32, f64)>,
}

impl Default for CosineData {
    fn default() -> Self {
        CosineData {
            mean: 0.0,
            modes: vec![(1, 1e-2)],
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct ExponentChoice {
    n: u32,
    p: f64,
    tau: f64,
}

impl Default for ExponentChoice {
    fn default() -> Self {
        ExponentChoice { n: 2, p: 5.0, tau: 0.275 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RdExperiment {
    u0: CosineData,
    t_end: f64,
    omega: Option<f64>,
    omega_factor: f64,
    exponents: ExponentChoice,
    dt: f64,
    record_every: usize,
}

impl Default for RdExperiment {
    fn default() -> Self {
        RdExperiment {
            u0: CosineData::default(),
            t_end: 3.0,
            omega: None,
            omega_factor: 0.5,
            exponents: ExponentChoice::default(),
            dt: 1e-3,
            record_every: 10,
        }
    }
}

fn rd_setup(s: &Scenario) -> Result<(RdConfig, RdExperiment)> {
    let cfg: RdConfig = parse_section(&s.params, "params")?;
    let exp: RdExperiment = parse_section(&s.experiment, "experiment")?;
    cfg.validate()?;
    Ok((cfg, exp))
}

/// Decay rate `(4/h²) sin²(πkh/2L)` of the k-th discrete cosine mode under
/// unit diffusivity.
fn rd_mode_rate(cfg: &RdConfig, k: usize) -> f64 {
    let h = cfg.spacing();
    4.0 / (h * h) * (std::f64::consts::PI * k as f64 * h / (2.0 * cfg.length)).sin().powi(2)
}

fn run_rd(s: &Scenario, report: &mut RunReport) -> Result<Output> {
    let (cfg, exp) = rd_setup(s)?;
    let exps = rd_exponents(exp.exponents.n, exp.exponents.p, cfg.kappa, exp.exponents.tau)?;
    report.extra("s_c", exps.s_c);
    report.extra("mu", exps.mu);

    let length = cfg.length;
    let u0 = cfg.sample(|x| {
        exp.u0.mean
            + exp
                .u0
                .modes
                .iter()
                .map(|&(k, a)| a * (std::f64::consts::PI * k as f64 * x / length).cos())
                .sum::<f64>()
    });
    let opts = RdEvolveOptions {
        dt: exp.dt,
        record_every: exp.record_every,
        proxy_order: exps.s_c,
        ..RdEvolveOptions::default()
    };
    let traj = evolve_rd_with(&u0, &cfg, exp.t_end, &opts)?;
    let mono = traj.mean_monotonicity();
    report.check("mean_increasing", mono.strictly_increasing(), (mono.decreases + mono.stalls) as f64, 0.0);

    let fit = fit_decay(&traj.times, &traj.l2_dev, default_floor(&traj.l2_dev))?;
    report.omega_fit = Some(fit.omega_fit);
    report.decay = Some(fit);
    let omega = exp.omega.unwrap_or(exp.omega_factor * fit.omega_fit);
    let diag = rd_weighted_diagnostic(&traj, &exps, omega)?;
    report.weighted_k = Some(diag.k_stat);
    report.extra("omega", omega);
    report.check("weighted_k_finite", diag.k_stat.is_finite(), diag.k_stat, f64::MAX);
    report.check("below_decay_rate", !diag.gap_violation, diag.argmax_time, diag.last_used_time);

    report.gap = Some(cfg.diffusivity.eval(diag.u_hat) * rd_mode_rate(&cfg, 1));
    report.limit = Some(LimitSummary {
        description: "constant at the limit of the integral mean".into(),
        coords: vec![diag.u_hat],
        residual: diag.tail_drift,
    });

    let alpha = traj.distances_to(diag.u_hat, exps.s_c);
    let xi = traj.distances_to(diag.u_hat, exps.s);
    let weighted: Vec<f64> = traj
        .times
        .iter()
        .zip(alpha.iter().zip(&xi))
        .map(|(t, (a, x))| (omega * t).exp() * (a + t.powf(exps.mu) * x) / alpha[0])
        .collect();
    Ok(Output {
        headers: names(&["t", "mean", "L2dev", "H1dev", "weighted_stat"]),
        rows: (0..traj.len())
            .map(|i| vec![traj.times[i], traj.means[i], traj.l2_dev[i], traj.h1_dev[i], weighted[i]])
            .collect(),
        plot_title: "|u - mean u| (L2)".into(),
        plot_times: traj.times.clone(),
        plot_norms: traj.l2_dev.clone(),
    })
}

// ------------------------------------------------- linearization, spectra

/// Linearization at the base state: the matrix `A*(0)` for finite systems,
/// the mode-wise symbol for the PDE models.
pub fn linearize_scenario(s: &Scenario, seed: u64) -> Result<Value> {
    Ok(match s.model {
        ModelTag::Manifold => {
            let params: ManifoldParams = parse_section(&s.params, "params")?;
            let (system, u_star, _) = manifold_problem(&params, seed)?;
            let lin = linearize_at(&system, &u_star)?;
            let rows: Vec<Vec<f64>> = lin.row_iter().map(|r| r.iter().copied().collect()).collect();
            serde_json::json!({ "u_star": u_star.as_slice(), "matrix": rows })
        }
        ModelTag::Fmcf => {
            let exp: FmcfExperiment = parse_section(&s.experiment, "experiment")?;
            let (op, _) = fmcf_operator(s)?;
            let sym = numeric_symbol_with(&op, exp.k_max)?;
            serde_json::json!({ "k": (0..sym.values.len()).collect::<Vec<_>>(), "symbol": sym.values })
        }
        ModelTag::Heleshaw => {
            let ks: Vec<i64> = (0..=16).collect();
            let m: Vec<f64> = ks.iter().map(|&k| crate::heleshaw::hs_symbol(k)).collect();
            serde_json::json!({ "k": ks, "symbol": m })
        }
        ModelTag::Rd => {
            let (cfg, exp) = rd_setup(s)?;
            let c = exp.u0.mean;
            let ks: Vec<usize> = (0..=16.min(cfg.n_cells - 1)).collect();
            let eig: Vec<f64> = ks.iter().map(|&k| -cfg.diffusivity.eval(c) * rd_mode_rate(&cfg, k)).collect();
            serde_json::json!({ "constant": c, "k": ks, "eigenvalue": eig })
        }
    })
}

/// Spectral data of the linearization: eigenvalues, gap and kernel.
pub fn spectrum_scenario(s: &Scenario, seed: u64) -> Result<Value> {
    Ok(match s.model {
        ModelTag::Manifold => {
            let params: ManifoldParams = parse_section(&s.params, "params")?;
            let exp: ManifoldExperiment = parse_section(&s.experiment, "experiment")?;
            let (system, u_star, _) = manifold_problem(&params, seed)?;
            let a = crate::manifold::analyze(&linearize_at(&system, &u_star)?, exp.gap_tol);
            let eigs: Vec<[f64; 2]> = a.eigenvalues.iter().map(|z| [z.re, z.im]).collect();
            serde_json::json!({
                "eigenvalues": eigs,
                "kernel_algebraic": a.algebraic,
                "kernel_geometric": a.geometric,
                "semisimple": a.semisimple(),
                "gap": a.gap,
            })
        }
        ModelTag::Fmcf => {
            let exp: FmcfExperiment = parse_section(&s.experiment, "experiment")?;
            let (op, _) = fmcf_operator(s)?;
            let sym = numeric_symbol_with(&op, exp.k_max)?;
            serde_json::json!({
                "exponent": sym.exponent,
                "omega0_num": sym.omega0,
                "gap": sym.gap(),
                "fit_rms": sym.fit_rms,
                "max_leakage": sym.max_leakage,
            })
        }
        ModelTag::Heleshaw => {
            let params: HeleShawParams = parse_section(&s.params, "params")?;
            serde_json::to_value(hs_gap(&PeriodicGrid::standard(params.n_points)?))?
        }
        ModelTag::Rd => {
            let (cfg, exp) = rd_setup(s)?;
            let exps = rd_exponents(exp.exponents.n, exp.exponents.p, cfg.kappa, exp.exponents.tau)?;
            serde_json::json!({
                "exponents": exps,
                "gap_at_mean": cfg.diffusivity.eval(exp.u0.mean) * rd_mode_rate(&cfg, 1),
            })
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(text: &str) -> (RunReport, tempfile::TempDir) {
        let dir = tempfile::tempdir().unwrap();
        let report = run_scenario_text(text, "t", dir.path(), Some(1)).unwrap();
        (report, dir)
    }

    #[test]
    fn heleshaw_minimal() {
        let (r, dir) = run(r#"{"model": "heleshaw"}"#);
        assert!(r.passed(), "{r:?}");
        assert!((r.gap.unwrap() - 6.0).abs() < 1e-12);
        assert!((r.omega_fit.unwrap() / 6.0 - 1.0).abs() < 0.01);
        for f in [REPORT_FILE, CSV_FILE, SVG_FILE] {
            assert!(dir.path().join(f).exists());
        }
    }

    #[test]
    fn schema_errors_name_the_key() {
        let cases = [
            (r#"{"model": "heleshaw", "params": {"n_points": "many"}}"#, "params.n_points"),
            (r#"{"model": "heleshaw", "experiment": {"t_ned": 3}}"#, "experiment.t_ned"),
            (r#"{"model": "fmcf", "params": {"sigma": 0.5}, "experiment": {"modes": [[1]]}}"#, "experiment.modes[0]"),
            (r#"{"model": "nope"}"#, "model"),
            (r#"{"params": {}}"#, "model"),
            (r#"{"model": "rd", "params": {"kappa": null}}"#, "params.kappa"),
        ];
        for (text, key) in cases {
            let (r, dir) = run(text);
            assert_eq!(r.status, "schema_error", "{text}");
            let msg = r.message.unwrap();
            assert!(msg.contains(&format!("`{key}`")), "{text}: {msg}");
            assert!(r.artifacts.is_none());
            assert!(dir.path().join(REPORT_FILE).exists());
        }
    }

    #[test]
    fn rd_exponent_violation_has_its_own_status() {
        let (r, _d) = run(r#"{"model": "rd", "experiment": {"exponents": {"p": 4.0}}}"#);
        assert_eq!(r.status, "exponent_constraint");
    }

    #[test]
    fn closed_form_manifold_scenario() {
        let text = r#"{
            "model": "manifold",
            "params": {"system": {
                "dim": 2,
                "A": [[[], [{"coeff": 1.0, "powers": [1, 0]}]], [[], [{"coeff": -1.0, "powers": [0, 0]}]]],
                "f": [[], []],
                "manifold": {"dim": 1, "map": [[{"coeff": 1.0, "powers": [1]}], []]}
            }},
            "experiment": {"u0": [0.01, 0.01], "t_end": 25.0, "dt": 0.5}
        }"#;
        let (r, _d) = run(text);
        assert!(r.passed(), "{r:?}");
        let x_hat = r.limit.unwrap().coords[0].abs();
        assert!((x_hat - 0.01 * 0.01f64.exp()).abs() < 1e-8, "{x_hat}");
    }

    #[test]
    fn csv_is_reproducible() {
        let text = r#"{"model": "manifold", "params": {"synthesized": {"m": 1, "d": 3, "stable_eigs": [-1.0, -2.0], "curvature": 0.5}}}"#;
        let (a, da) = run(text);
        let (_, db) = run(text);
        assert!(a.passed(), "{a:?}");
        let read = |d: &tempfile::TempDir, f: &str| fs::read(d.path().join(f)).unwrap();
        assert_eq!(read(&da, CSV_FILE), read(&db, CSV_FILE));
        assert_eq!(read(&da, REPORT_FILE), read(&db, REPORT_FILE));
    }
}
