//! The scaling group and the two boundary-value problems built on it.
//!
//! With `s = alpha p`, the profile at `(p, eta)` is
//! `h(r) = s^(-1/alpha) H(s^((1+alpha)/(2 alpha)) r)` where `H` is the
//! canonical profile (`p = 1/alpha`, so `xi = 1`) with `H(0) = s^(1/alpha) eta`.
//! Each critical radius `r_k` of a profile is a Neumann radius; rescaling
//! `B_{r_k}` to the unit ball changes the pressure to `p r_k^(2 alpha/(1+alpha))`.

use rayon::prelude::*;
use serde::Serialize;

use crate::analysis;
use crate::error::{Error, Result};
use crate::integrator::{shoot_smooth, SolveConfig, Trajectory, TrajectoryKind};
use crate::model::Params;
use crate::rupture;

/// Height factor `s^(-1/alpha)` and radial factor `s^((1+alpha)/(2 alpha))`.
fn factors(params: &Params) -> (f64, f64) {
    let s = params.alpha() * params.pressure();
    (s.powf(-1.0 / params.alpha()), 1.0 / params.length_scale())
}

/// Canonical initial height `(alpha p)^(1/alpha) eta` for a profile at `params`.
pub fn canonical_eta(params: &Params, eta: f64) -> f64 {
    eta / params.xi()
}

/// Map a canonical trajectory to pressure `params.pressure()`.
///
/// `canonical` must be computed at `p = 1/alpha` with the same `alpha, N`;
/// for the smooth kind its initial height must equal `canonical_eta(params, eta)`.
/// A rupture trajectory is passed with `eta = 0`.
pub fn scale_from_canonical(params: &Params, eta: f64, canonical: &Trajectory) -> Result<Trajectory> {
    let cp = canonical.params();
    let canonical_p = 1.0 / params.alpha();
    if cp.alpha() != params.alpha() || cp.dim() != params.dim() || (cp.pressure() - canonical_p).abs() > 1e-15 * canonical_p {
        return Err(Error::InvalidInput(format!("{cp:?} is not the canonical problem for {params:?}")));
    }
    let kind = match canonical.kind() {
        TrajectoryKind::Smooth { eta: eta_c } => {
            let want = canonical_eta(params, eta);
            if (eta_c - want).abs() > 1e-12 * want {
                return Err(Error::InvalidInput(format!("canonical eta {eta_c} does not match {want}")));
            }
            TrajectoryKind::Smooth { eta }
        }
        TrajectoryKind::Rupture => {
            if eta != 0.0 {
                return Err(Error::InvalidInput("rupture profiles carry eta = 0".into()));
            }
            TrajectoryKind::Rupture
        }
    };
    let (height, radius) = factors(params);
    Ok(canonical.rescaled(height, radius, *params, kind))
}

/// Classification of one Neumann solution: the profile `(p, eta)` restricted
/// to `B_{r_k}`. `eta = 0` marks the rupture profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolutionKey {
    pub pressure: f64,
    pub eta: f64,
    pub k: usize,
    pub r_k: f64,
    /// `r_k^(-2/(1+alpha))` times the average of `h` over `B_{r_k}`.
    pub hbar: f64,
    /// Pressure of the same solution rescaled to the unit ball.
    pub scaled_pressure: f64,
}

/// Keys for the first `k_max` critical radii of `traj`.
pub fn solution_keys(traj: &Trajectory, k_max: usize) -> Result<Vec<SolutionKey>> {
    let params = traj.params();
    let eta = match traj.kind() {
        TrajectoryKind::Smooth { eta } => eta,
        TrajectoryKind::Rupture => 0.0,
    };
    let events = traj.events();
    if events.len() < k_max {
        return Err(Error::InsufficientRange { found: events.len(), requested: k_max });
    }
    let gamma = 2.0 / (1.0 + params.alpha());
    events[..k_max]
        .iter()
        .enumerate()
        .map(|(i, e)| {
            Ok(SolutionKey {
                pressure: params.pressure(),
                eta,
                k: i + 1,
                r_k: e.r,
                hbar: e.r.powf(-gamma) * analysis::average_thickness(traj, e.r)?,
                scaled_pressure: params.pressure() * e.r.powf(2.0 - gamma),
            })
        })
        .collect()
}

/// Rescale `traj` on `B_{r_k}` to the unit ball: `r_k^(-2/(1+alpha)) h(r_k y)`.
pub fn unit_ball_trajectory(traj: &Trajectory, key: &SolutionKey) -> Result<Trajectory> {
    let params = traj.params().with_pressure(key.scaled_pressure)?;
    let gamma = 2.0 / (1.0 + params.alpha());
    Ok(traj.rescaled(key.r_k.powf(-gamma), key.r_k, params, traj.kind()))
}

/// Geometric grid of `n_above` points on `[1.01, hi]` and `n_below` on
/// `[lo, 0.99]`, in units of `xi`, sorted increasingly.
pub fn eta_grid(lo: f64, hi: f64, n_below: usize, n_above: usize) -> Vec<f64> {
    let geo = |a: f64, b: f64, n: usize| -> Vec<f64> {
        match n {
            0 => Vec::new(),
            1 => vec![b],
            _ => (0..n).map(|i| a * (b / a).powf(i as f64 / (n - 1) as f64)).collect(),
        }
    };
    let mut g = geo(lo, 0.99, n_below);
    g.extend(geo(1.01, hi, n_above));
    g
}

/// Default grid: `(0.02, 0.99]` and `(1.01, 50]` times `xi`.
pub fn default_eta_grid() -> Vec<f64> {
    eta_grid(0.02, 50.0, 40, 80)
}

/// Integration settings for family sweeps: long horizon, stop at `k` events.
pub fn sweep_config(base: &SolveConfig, params: &Params, k: usize) -> SolveConfig {
    base.with_r_max(1e4 * params.length_scale()).with_events(k)
}

fn canonical_params(params: &Params) -> Result<Params> {
    Params::canonical(params.alpha(), params.dim())
}

/// Canonical critical radius `r_k` of the smooth profile with `H(0) = eta_c`.
fn canonical_rk(canon: &Params, eta_c: f64, k: usize, config: &SolveConfig) -> Result<f64> {
    let tr = shoot_smooth(canon, eta_c, &sweep_config(config, canon, k))?;
    tr.events()
        .get(k - 1)
        .map(|e| e.r)
        .ok_or(Error::InsufficientRange { found: tr.events().len(), requested: k })
}

/// One row of a [`FamilyRecord`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FamilyRow {
    pub eta: f64,
    pub keys: Vec<SolutionKey>,
}

/// Table of [`SolutionKey`]s over an `eta` grid at the canonical pressure,
/// plus the rupture row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FamilyRecord {
    pub alpha: f64,
    pub dim: u32,
    pub k_max: usize,
    pub rows: Vec<FamilyRow>,
    pub rupture: Vec<SolutionKey>,
    /// For each `k`, grid indices where `r_k(eta)` changes direction, split by
    /// side of `xi`. Between two listed indices `r_k` is monotone.
    pub turning_points: Vec<Vec<usize>>,
}

impl FamilyRecord {
    /// `r_k` column for index `k` (1-based) in grid order.
    pub fn column(&self, k: usize) -> Vec<f64> {
        self.rows.iter().map(|row| row.keys[k - 1].r_k).collect()
    }
}

/// Sweep the canonical problem over `eta_grid` (canonical heights, `!= 1`).
pub fn family_record(alpha: f64, dim: u32, eta_grid: &[f64], k_max: usize, config: &SolveConfig) -> Result<FamilyRecord> {
    let canon = Params::canonical(alpha, dim)?;
    if k_max == 0 {
        return Err(Error::InvalidInput("k_max must be at least 1".into()));
    }
    if let Some(bad) = eta_grid.iter().find(|&&e| !(e > 0.0) || e == 1.0) {
        return Err(Error::InvalidInput(format!("eta grid entry {bad} must be positive and differ from xi")));
    }
    if eta_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidInput("eta grid must be strictly increasing".into()));
    }
    let cfg = sweep_config(config, &canon, k_max);
    let rows = eta_grid
        .par_iter()
        .map(|&eta| {
            let tr = shoot_smooth(&canon, eta, &cfg)?;
            Ok(FamilyRow { eta, keys: solution_keys(&tr, k_max)? })
        })
        .collect::<Result<Vec<_>>>()?;
    let rupture_traj = rupture::shoot_rupture(&canon, &cfg)?;
    let rupture = solution_keys(&rupture_traj, k_max)?;
    let turning_points = (1..=k_max)
        .map(|k| {
            let mut turns = Vec::new();
            for i in 1..rows.len().saturating_sub(1) {
                let same_side = (rows[i - 1].eta - 1.0).signum() == (rows[i + 1].eta - 1.0).signum();
                let (a, b, c) = (rows[i - 1].keys[k - 1].r_k, rows[i].keys[k - 1].r_k, rows[i + 1].keys[k - 1].r_k);
                if same_side && (b - a) * (c - b) < 0.0 {
                    turns.push(i);
                }
            }
            turns
        })
        .collect();
    Ok(FamilyRecord { alpha, dim, k_max, rows, rupture, turning_points })
}

/// Family record for `params` on an `eta` grid in units of `params.xi()`.
///
/// The keys are reported at `params.pressure()`: radii scale by the length
/// scale while `hbar` and the unit-ball pressure are invariant.
pub fn hbar_table(params: &Params, eta_grid: &[f64], k_max: usize, config: &SolveConfig) -> Result<FamilyRecord> {
    let canonical_grid: Vec<f64> = eta_grid.iter().map(|&e| canonical_eta(params, e)).collect();
    let mut rec = family_record(params.alpha(), params.dim(), &canonical_grid, k_max, config)?;
    let length = params.length_scale();
    let to_params = |key: &mut SolutionKey, eta: f64| {
        key.pressure = params.pressure();
        key.eta = eta;
        key.r_k *= length;
    };
    for (row, &eta) in rec.rows.iter_mut().zip(eta_grid) {
        row.eta = eta;
        row.keys.iter_mut().for_each(|k| to_params(k, eta));
    }
    rec.rupture.iter_mut().for_each(|k| to_params(k, 0.0));
    Ok(rec)
}

/// All radial Neumann solutions on `B_R` found from an `eta` grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolutionMenu {
    pub pressure: f64,
    pub radius: f64,
    /// The flat solution `h = xi` always solves the problem.
    pub flat_height: f64,
    pub smooth: Vec<SolutionKey>,
    pub rupture: Vec<SolutionKey>,
}

impl SolutionMenu {
    /// Number of solutions including the flat one.
    pub fn count(&self) -> usize {
        1 + self.smooth.len() + self.rupture.len()
    }
}

/// Bisection tolerance on canonical `eta` for bracketed roots of `r_k(eta) = R`.
const ETA_TOL: f64 = 1e-12;

fn bisect<F: Fn(f64) -> Result<f64>>(g: F, mut a: f64, mut b: f64, mut ga: f64) -> Result<f64> {
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if (b - a).abs() <= ETA_TOL * m.abs().max(1.0) {
            return Ok(m);
        }
        let gm = g(m)?;
        if gm == 0.0 {
            return Ok(m);
        }
        if (gm < 0.0) == (ga < 0.0) {
            a = m;
            ga = gm;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// Solve the prescribed-pressure problem on `B_R` for indices `k <= k_max`.
///
/// `eta_grid` is in units of `params.xi()`. Every grid cell (on one side of
/// `xi`) where `r_k - R` changes sign is refined by bisection; the rupture
/// profile is included when its `r_k` matches `R` to relative `1e-6`.
pub fn solve_prescribed_pressure(
    params: &Params,
    radius: f64,
    k_max: usize,
    eta_grid: &[f64],
    config: &SolveConfig,
) -> Result<SolutionMenu> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::InvalidInput(format!("radius must be positive, got {radius}")));
    }
    let canon = canonical_params(params)?;
    let length = params.length_scale();
    let target = radius / length;
    let rec = hbar_table(params, eta_grid, k_max, config)?;
    let mut menu = SolutionMenu { pressure: params.pressure(), radius, flat_height: params.xi(), smooth: Vec::new(), rupture: Vec::new() };

    for k in 1..=k_max {
        let col: Vec<f64> = rec.column(k).iter().map(|r| r / length).collect();
        let mut roots: Vec<f64> = Vec::new();
        for i in 0..col.len() {
            let gi = col[i] - target;
            if gi == 0.0 {
                roots.push(canonical_eta(params, eta_grid[i]));
                continue;
            }
            if i + 1 == col.len() {
                continue;
            }
            let (e0, e1) = (canonical_eta(params, eta_grid[i]), canonical_eta(params, eta_grid[i + 1]));
            let gj = col[i + 1] - target;
            if (e0 - 1.0) * (e1 - 1.0) < 0.0 || gi * gj >= 0.0 {
                continue;
            }
            roots.push(bisect(|e| Ok(canonical_rk(&canon, e, k, config)? - target), e0, e1, gi)?);
        }
        for eta_c in roots {
            let tr = shoot_smooth(&canon, eta_c, &sweep_config(config, &canon, k))?;
            let mut key = solution_keys(&tr, k)?[k - 1];
            key.pressure = params.pressure();
            key.eta = eta_c * params.xi();
            key.r_k *= length;
            menu.smooth.push(key);
        }
        let rk = rec.rupture[k - 1];
        if ((rk.r_k - radius) / radius).abs() < 1e-6 {
            menu.rupture.push(rk);
        }
    }
    Ok(menu)
}

/// Unit-ball rupture solution whose average thickness is `hbar_target`, if any
/// `hbar_k` with `k <= k_max` matches it to relative `1e-6`.
pub fn solve_prescribed_volume_rupture(
    alpha: f64,
    dim: u32,
    hbar_target: f64,
    k_max: usize,
    config: &SolveConfig,
) -> Result<Option<SolutionKey>> {
    if !(hbar_target > 0.0 && hbar_target.is_finite()) {
        return Err(Error::InvalidInput(format!("target average must be positive, got {hbar_target}")));
    }
    let keys = rupture_keys(alpha, dim, k_max, config)?;
    Ok(keys.into_iter().find(|key| ((key.hbar - hbar_target) / hbar_target).abs() < 1e-6))
}

/// Canonical rupture trajectory with at least `k_max` critical points.
pub fn canonical_rupture(alpha: f64, dim: u32, k_max: usize, config: &SolveConfig) -> Result<Trajectory> {
    let canon = Params::canonical(alpha, dim)?;
    rupture::shoot_rupture(&canon, &sweep_config(config, &canon, k_max))
}

/// `hbar_k` keys of the canonical rupture profile for `k <= k_max`.
pub fn rupture_keys(alpha: f64, dim: u32, k_max: usize, config: &SolveConfig) -> Result<Vec<SolutionKey>> {
    solution_keys(&canonical_rupture(alpha, dim, k_max, config)?, k_max)
}

/// Numerical infima of `r_k` over an `eta` grid with the pressure thresholds
/// they imply for a ball of radius `R`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InfimumEstimate {
    /// `R_k = min over the grid of r_k` at the canonical pressure.
    pub r_inf: Vec<f64>,
    pub argmin_eta: Vec<f64>,
    /// `(1/alpha) (R_k / R)^(2 alpha/(1+alpha))`
    pub p_k: Vec<f64>,
}

pub fn estimate_inf_rk(
    alpha: f64,
    dim: u32,
    eta_grid: &[f64],
    k_max: usize,
    radius: f64,
    config: &SolveConfig,
) -> Result<InfimumEstimate> {
    let rec = family_record(alpha, dim, eta_grid, k_max, config)?;
    let mut est = InfimumEstimate { r_inf: Vec::new(), argmin_eta: Vec::new(), p_k: Vec::new() };
    for k in 1..=k_max {
        let (i, r) = rec
            .column(k)
            .into_iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("non-empty grid");
        est.r_inf.push(r);
        est.argmin_eta.push(rec.rows[i].eta);
        est.p_k.push((r / radius).powf(2.0 * alpha / (1.0 + alpha)) / alpha);
    }
    Ok(est)
}
