use std::path::PathBuf;

use serde::Serialize;
use serde_json::json;
use thinfilm::analysis::{self, Bump, CriticalPoints, EnergyReport, GrowthReport, OscillationChecks, SpacingDiagnostics};
use thinfilm::rupture::{self, RuptureSolution};
use thinfilm::scaling::{self, SolutionKey, SolutionMenu};
use thinfilm::verify::{self, Suite, SuiteReport, VerifyOptions};
use thinfilm::{derive_constants, shoot_smooth, Params, SolveConfig, Trajectory};

use crate::cli::{BvpArgs, BvpMode, ModelArgs, RuptureArgs, SmoothArgs, TolArgs, VerifyArgs};
use crate::output::{RunManifest, Sink};

/// Failure classes, each with its own exit code.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Solver(thinfilm::Error),
    Verification(String),
    Io(anyhow::Error),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Solver(_) => 3,
            Failure::Verification(_) => 4,
            Failure::Io(_) => 1,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Usage(m) => write!(f, "usage error: {m}"),
            Failure::Solver(e) => write!(f, "solver failure: {e}"),
            Failure::Verification(m) => write!(f, "verification failed: {m}"),
            Failure::Io(e) => write!(f, "output error: {e:#}"),
        }
    }
}

impl From<thinfilm::Error> for Failure {
    fn from(e: thinfilm::Error) -> Self {
        Failure::Solver(e)
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Io(e)
    }
}

type Outcome = Result<PathBuf, Failure>;

fn usage(e: thinfilm::Error) -> Failure {
    Failure::Usage(e.to_string())
}

fn params(m: &ModelArgs) -> Result<Params, Failure> {
    let p = m.p.unwrap_or(1.0 / m.alpha);
    Params::new(m.alpha, m.dim, p).map_err(usage)
}

fn positive(name: &str, v: Option<f64>) -> Result<(), Failure> {
    match v {
        Some(x) if !(x.is_finite() && x > 0.0) => Err(Failure::Usage(format!("--{name} must be positive, got {x}"))),
        _ => Ok(()),
    }
}

fn base_config(t: &TolArgs) -> Result<SolveConfig, Failure> {
    let mut cfg = SolveConfig::default().with_tolerances(t.rel_tol, t.abs_tol);
    cfg.event_refine_tol = t.event_tol;
    cfg.f_offset = t.f_offset;
    cfg.validate().map_err(usage)?;
    Ok(cfg)
}

/// `--k` and `--r-max` together: stop at whichever comes first.
fn horizon(base: &SolveConfig, p: &Params, k: Option<usize>, r_max: Option<f64>) -> Result<SolveConfig, Failure> {
    positive("r-max", r_max)?;
    if k == Some(0) {
        return Err(Failure::Usage("--k must be at least 1".into()));
    }
    Ok(match (k, r_max) {
        (_, Some(r)) => {
            let mut cfg = base.with_r_max(r);
            cfg.stop_after_events = k;
            cfg
        }
        (k, None) => scaling::sweep_config(base, p, k.unwrap_or(10)),
    })
}

#[derive(Debug, Serialize)]
struct Energy {
    passed: bool,
    rel_tol: f64,
    samples: usize,
    violations: usize,
    worst_excess: f64,
}

impl From<&EnergyReport> for Energy {
    fn from(r: &EnergyReport) -> Self {
        Self { passed: r.passed(), rel_tol: r.rel_tol, samples: r.samples, violations: r.violations.len(), worst_excess: r.worst_excess }
    }
}

#[derive(Debug, Serialize)]
struct Profile {
    xi: f64,
    r_end: f64,
    critical_radii: Vec<f64>,
    critical_heights: Vec<f64>,
    spacings: Vec<f64>,
    /// `r_k^(-2/(1+alpha))` times the average over `B_{r_k}`.
    hbar: Vec<f64>,
    oscillation: OscillationChecks,
    spacing_tail: Option<SpacingDiagnostics>,
    energy: Energy,
}

fn profile(traj: &Trajectory) -> Result<Profile, Failure> {
    let p = traj.params();
    let found = traj.events().len();
    let cp: CriticalPoints = analysis::critical_points(traj, found)?;
    let keys = if found > 0 { scaling::solution_keys(traj, found)? } else { Vec::new() };
    let spacing_tail = analysis::spacing_diagnostics(&cp, &derive_constants(p)).ok();
    let energy = analysis::check_energy_monotonicity(&analysis::energy_series(traj), verify::ENERGY_TOL);
    Ok(Profile {
        xi: p.xi(),
        r_end: traj.r_end(),
        critical_radii: cp.radii,
        critical_heights: cp.heights,
        spacings: cp.spacings,
        hbar: keys.iter().map(|k| k.hbar).collect(),
        oscillation: cp.checks,
        spacing_tail,
        energy: (&energy).into(),
    })
}

fn require_events(traj: &Trajectory, k: Option<usize>) -> Result<(), Failure> {
    match k {
        Some(k) if traj.events().len() < k && !traj.is_flat() => {
            Err(Failure::Solver(thinfilm::Error::InsufficientRange { found: traj.events().len(), requested: k }))
        }
        _ => Ok(()),
    }
}

#[derive(Debug, Serialize)]
struct SmoothResult {
    eta: f64,
    flat: bool,
    notice: Option<String>,
    #[serde(flatten)]
    profile: Profile,
}

pub fn smooth(a: &SmoothArgs) -> Outcome {
    let p = params(&a.model)?;
    positive("eta", Some(a.eta))?;
    let base = base_config(&a.tol)?;
    let cfg = horizon(&base, &p, a.k, a.r_max)?;
    let mut traj = shoot_smooth(&p, a.eta, &cfg)?;
    let flat = traj.is_flat();
    if flat && a.r_max.is_none() {
        traj = shoot_smooth(&p, a.eta, &base.with_r_max(10.0 * p.length_scale()))?;
    }
    if !flat {
        require_events(&traj, a.k.or(if a.r_max.is_none() { Some(10) } else { None }))?;
    }
    let notice = flat.then(|| format!("eta equals xi = {}: the flat solution h = xi has no critical points", p.xi()));
    if let Some(n) = &notice {
        eprintln!("{n}");
    }
    let result = SmoothResult { eta: a.eta, flat, notice, profile: profile(&traj)? };
    let mut sink = Sink::new(&a.out.out)?;
    sink.write_trajectory("smooth", &analysis::energy_series(&traj), traj.samples(), a.out.gnuplot)?;
    let manifest = RunManifest::new("smooth", &p, json!({ "eta": a.eta, "k": a.k, "r_max": a.r_max }), &cfg);
    Ok(sink.finish("smooth", &manifest, &result)?)
}

#[derive(Debug, Serialize)]
struct PicardSummary {
    delta: f64,
    iterations: usize,
    residual: f64,
    contraction_ratio: f64,
    imag_residue: f64,
    log_step: f64,
}

#[derive(Debug, Serialize)]
struct RuptureResult {
    c_star: f64,
    kappa: f64,
    cross_validation: f64,
    picard: PicardSummary,
    t_big: f64,
    growth: GrowthReport,
    /// Weak-form residual for the bump `(0, 0.9 r_1)`, or `None` without a critical point.
    weak_form_residual: Option<f64>,
    energy_identity_residual: f64,
    #[serde(flatten)]
    profile: Profile,
}

pub fn rupture(a: &RuptureArgs) -> Outcome {
    let p = params(&a.model)?;
    let base = base_config(&a.tol)?;
    let cfg = horizon(&base, &p, a.k, a.r_max)?;
    let c = derive_constants(&p);
    let sol: RuptureSolution = rupture::solve_rupture(&p, &cfg)?;
    let traj = &sol.trajectory;
    require_events(traj, a.k.or(if a.r_max.is_none() { Some(10) } else { None }))?;
    let weak_form_residual = match traj.events().first() {
        Some(e) => Some(analysis::weak_form_residual(traj, Bump::new(0.0, 0.9 * e.r)?)?),
        None => None,
    };
    let l = &sol.local;
    let result = RuptureResult {
        c_star: c.c_star,
        kappa: c.kappa(),
        cross_validation: sol.cross_validation,
        picard: PicardSummary {
            delta: l.delta,
            iterations: l.iterations,
            residual: l.residual,
            contraction_ratio: l.contraction_ratio,
            imag_residue: l.imag_residue,
            log_step: l.log_step,
        },
        t_big: sol.t_big,
        growth: analysis::growth_bounds_check(traj)?,
        weak_form_residual,
        energy_identity_residual: rupture::energy_identity_residual(&sol.run, &p, &c),
        profile: profile(traj)?,
    };
    let mut sink = Sink::new(&a.out.out)?;
    sink.write_trajectory("rupture", &analysis::energy_series(traj), traj.samples(), a.out.gnuplot)?;
    let manifest = RunManifest::new("rupture", &p, json!({ "k": a.k, "r_max": a.r_max }), &cfg);
    Ok(sink.finish("rupture", &manifest, &result)?)
}

#[derive(Debug, Serialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
enum BvpResult {
    Pressure {
        count: usize,
        menu: SolutionMenu,
    },
    Volume {
        target: f64,
        /// Rupture solution on the unit ball whose average matches the target.
        matched: Option<SolutionKey>,
        candidates: Vec<SolutionKey>,
    },
}

pub fn bvp(a: &BvpArgs) -> Outcome {
    let p = params(&a.model)?;
    let base = base_config(&a.tol)?;
    if a.k == 0 {
        return Err(Failure::Usage("--k must be at least 1".into()));
    }
    let mut sink = Sink::new(&a.out.out)?;
    let (result, inputs) = match a.mode {
        BvpMode::Pressure => {
            let radius = a.radius.unwrap_or(f64::NAN);
            positive("radius", Some(radius))?;
            positive("eta-min", Some(a.eta_min))?;
            if !(a.eta_min < 0.99 && a.eta_max > 1.01) {
                return Err(Failure::Usage("eta grid must straddle 1 (units of xi)".into()));
            }
            let grid = scaling::eta_grid(a.eta_min, a.eta_max, a.eta_points[0], a.eta_points[1]);
            let menu = scaling::solve_prescribed_pressure(&p, radius, a.k, &grid, &base)?;
            let inputs = json!({ "mode": "pressure", "radius": radius, "k": a.k, "eta_min": a.eta_min, "eta_max": a.eta_max, "eta_points": a.eta_points });
            (BvpResult::Pressure { count: menu.count(), menu }, inputs)
        }
        BvpMode::Volume => {
            let target = a.hbar.unwrap_or(f64::NAN);
            positive("hbar", Some(target))?;
            let candidates = scaling::rupture_keys(p.alpha(), p.dim(), a.k, &base)?;
            let matched = scaling::solve_prescribed_volume_rupture(p.alpha(), p.dim(), target, a.k, &base)?;
            if let Some(key) = &matched {
                let canon = scaling::canonical_rupture(p.alpha(), p.dim(), key.k, &base)?;
                let unit = scaling::unit_ball_trajectory(&canon, key)?;
                let inside: Vec<_> = unit.samples().iter().copied().filter(|s| s.r <= 1.0).collect();
                sink.write_trajectory("bvp", &energy_of(&unit, inside.len()), &inside, a.out.gnuplot)?;
            }
            let inputs = json!({ "mode": "volume", "hbar": target, "k": a.k });
            (BvpResult::Volume { target, matched, candidates }, inputs)
        }
    };
    let manifest = RunManifest::new("bvp", &p, inputs, &base);
    Ok(sink.finish("bvp", &manifest, &result)?)
}

fn energy_of(traj: &Trajectory, n: usize) -> analysis::EnergySeries {
    let mut es = analysis::energy_series(traj);
    es.r.truncate(n);
    es.e1.truncate(n);
    es.e2.truncate(n);
    es
}

#[derive(Debug, Serialize)]
struct SuiteOutcome {
    suite: Suite,
    passed: bool,
    /// Solver error that aborted the suite, if any.
    error: Option<String>,
    report: Option<SuiteReport>,
}

#[derive(Debug, Serialize)]
struct VerifyResult {
    passed: bool,
    suites: Vec<SuiteOutcome>,
}

pub fn verify(a: &VerifyArgs) -> Outcome {
    let p = params(&a.model)?;
    let base = base_config(&a.tol)?;
    let suites: Vec<Suite> = if a.suite.is_empty() { Suite::ALL.to_vec() } else { a.suite.clone() };
    let opts = VerifyOptions { params: p, config: base, seed: a.seed };
    let mut outcomes = Vec::new();
    for &suite in &suites {
        let outcome = match verify::run_suite(suite, &opts) {
            Ok(report) => {
                for c in report.checks.iter().filter(|c| c.asserted) {
                    eprintln!("[{}] {} {}: {}", suite, if c.passed { "pass" } else { "FAIL" }, c.name, c.value);
                }
                SuiteOutcome { suite, passed: report.passed, error: None, report: Some(report) }
            }
            Err(e) => {
                eprintln!("[{suite}] FAIL aborted: {e}");
                SuiteOutcome { suite, passed: false, error: Some(e.to_string()), report: None }
            }
        };
        outcomes.push(outcome);
    }
    let passed = outcomes.iter().all(|o| o.passed);
    let failed: Vec<String> = outcomes.iter().filter(|o| !o.passed).map(|o| o.suite.to_string()).collect();
    let names: Vec<&str> = suites.iter().map(|s| s.name()).collect();
    let manifest = RunManifest::new("verify", &p, json!({ "suites": names, "seed": a.seed }), &base);
    let sink = Sink::new(&a.out.out)?;
    let path = sink.finish("verify", &manifest, &VerifyResult { passed, suites: outcomes })?;
    if passed {
        Ok(path)
    } else {
        Err(Failure::Verification(format!("{} (see {})", failed.join(", "), path.display())))
    }
}
