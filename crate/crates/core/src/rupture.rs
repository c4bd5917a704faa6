//! The radial rupture profile `h(0) = 0`.
//!
//! Near the origin `h = c* phi(r) r^(2/(alpha+1))` with `phi(0) = 1`. Two
//! independent constructions of `phi` are provided:
//!
//! * a Picard iteration for `psi = phi - 1` on `(0, delta]` using the
//!   integral operator
//!   `L psi = kappa r^beta - r^(-a1) ∫_0^r s^(a1-a2-1) ∫_0^s t^(a2-1) g~(psi(t)) dt ds`;
//! * backward integration in `t = -ln r` of
//!   `phi_tt - A phi_t + g(phi) + C e^(-beta t) = 0` from its bounded
//!   asymptote `phi ~ 1 + kappa e^(-beta t)`. Both homogeneous modes grow
//!   forward in `t`, so they decay in the backward direction.
//!
//! The backward run is the production path; the Picard fixed point verifies it.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::integrator::{self, RadialSystem, SolveConfig, State, Trajectory, TrajectoryKind};
use crate::model::{self, DerivedConstants, Params};
use crate::ode::{self, Flow, PlanarSystem, StepControl, Vec2};

/// Local corrector `psi = phi - 1` on a geometric grid over `(0, delta]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RuptureLocal {
    pub delta: f64,
    /// Grid radii, increasing, last entry equal to `delta`.
    pub r: Vec<f64>,
    pub psi: Vec<f64>,
    /// `d psi / dr` from the differentiated operator.
    pub dpsi: Vec<f64>,
    pub iterations: usize,
    /// Sup-norm of the last Picard update.
    pub residual: f64,
    /// Largest imaginary part discarded from the complex quadrature.
    pub imag_residue: f64,
    /// Largest observed ratio of successive update norms.
    pub contraction_ratio: f64,
    /// Grid spacing in `ln r` of the accepted level.
    pub log_step: f64,
}

impl RuptureLocal {
    pub fn phi(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.r.iter().zip(&self.psi).map(|(&r, &p)| (r, 1.0 + p))
    }
}

/// State of the normalized equation in `t = -ln r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormalizedState {
    pub t: f64,
    pub phi: f64,
    pub dphi: f64,
}

/// Output of [`integrate_normalized_backward`]: states in decreasing `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedRun {
    pub states: Vec<NormalizedState>,
    second: Vec<f64>,
}

impl NormalizedRun {
    pub fn t_range(&self) -> (f64, f64) {
        (self.states[self.states.len() - 1].t, self.states[0].t)
    }

    /// Interpolated state at `t`.
    pub fn state_at(&self, t: f64) -> Result<NormalizedState> {
        let (lo, hi) = self.t_range();
        if !(t >= lo && t <= hi) {
            return Err(Error::OutOfRange { r: t, lo, hi });
        }
        // states are stored with decreasing t
        let idx = self.states.partition_point(|s| s.t > t);
        if idx < self.states.len() && self.states[idx].t == t {
            return Ok(self.states[idx]);
        }
        let (a, b) = (self.states[idx - 1], self.states[idx]);
        let (phi, dphi) = ode::quintic_hermite(
            a.t,
            b.t,
            [a.phi, a.dphi, self.second[idx - 1]],
            [b.phi, b.dphi, self.second[idx]],
            t,
        );
        Ok(NormalizedState { t, phi, dphi })
    }

    pub fn phi_range(&self) -> (f64, f64) {
        self.states
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| (lo.min(s.phi), hi.max(s.phi)))
    }
}

struct NormalizedSystem {
    params: Params,
    cap_a: f64,
    cap_c: f64,
    beta: f64,
}

impl NormalizedSystem {
    fn new(params: &Params, constants: &DerivedConstants) -> Self {
        Self { params: *params, cap_a: constants.cap_a, cap_c: constants.cap_c, beta: constants.beta }
    }

    fn forcing(&self, t: f64) -> f64 {
        self.cap_c * (-self.beta * t).exp()
    }
}

impl PlanarSystem for NormalizedSystem {
    fn rhs(&self, t: f64, y: Vec2) -> Option<Vec2> {
        if !(y[0] > 0.0) {
            return None;
        }
        Some([y[1], self.cap_a * y[1] - model::g_raw(&self.params, y[0]) - self.forcing(t)])
    }
}

/// `t` at which the forcing `C e^(-beta t)` drops below `1e-12`.
pub fn default_t_big(constants: &DerivedConstants) -> f64 {
    if constants.cap_c <= 0.0 {
        return 30.0;
    }
    ((constants.cap_c / 1e-12).ln() / constants.beta).max(1.0)
}

/// Bounded asymptote `phi = 1 + kappa e^(-beta t)` at `t_big`.
pub fn rupture_tail_start(constants: &DerivedConstants, t_big: f64) -> NormalizedState {
    let decay = constants.kappa() * (-constants.beta * t_big).exp();
    NormalizedState { t: t_big, phi: 1.0 + decay, dphi: -constants.beta * decay }
}

/// Integrate the normalized equation from `start` down to `t_end < start.t`.
pub fn integrate_normalized_backward(
    params: &Params,
    constants: &DerivedConstants,
    start: NormalizedState,
    t_end: f64,
    config: &SolveConfig,
) -> Result<NormalizedRun> {
    config.validate()?;
    if !(t_end < start.t) {
        return Err(Error::InvalidInput(format!("t_end {t_end} must be below start t {}", start.t)));
    }
    if !(start.phi > 0.0) {
        return Err(Error::PositivityBreach { r: (-start.t).exp(), h: start.phi, floor: 0.0 });
    }
    let sys = NormalizedSystem::new(params, constants);
    let ctl = StepControl {
        rel_tol: config.rel_tol,
        abs_tol: config.abs_tol,
        max_step: 0.1,
        max_steps: config.max_steps,
    };
    let first = sys.rhs(start.t, [start.phi, start.dphi]).expect("phi > 0 checked above");
    let mut states = vec![start];
    let mut second = vec![first[1]];
    ode::drive(&sys, start.t, [start.phi, start.dphi], t_end, &ctl, |step| {
        if step.y1[0] <= 1e-8 {
            return Err(Error::PositivityBreach { r: (-step.x1).exp(), h: step.y1[0], floor: 1e-8 });
        }
        states.push(NormalizedState { t: step.x1, phi: step.y1[0], dphi: step.y1[1] });
        second.push(step.f1[1]);
        Ok(Flow::Continue)
    })?;
    Ok(NormalizedRun { states, second })
}

/// Samples of `phi_t^2/2 + G(phi)` along a normalized run.
pub fn normalized_energy_series(run: &NormalizedRun, params: &Params) -> Vec<(f64, f64)> {
    run.states
        .iter()
        .map(|s| (s.t, 0.5 * s.dphi * s.dphi + model::big_g_raw(params, s.phi)))
        .collect()
}

/// Largest mismatch between the discrete energy slope on each step and the
/// Simpson average of `A phi_t^2 - C e^(-beta t) phi_t` over the same step.
pub fn energy_identity_residual(run: &NormalizedRun, params: &Params, constants: &DerivedConstants) -> f64 {
    let energy = normalized_energy_series(run, params);
    let rhs = |s: &NormalizedState| {
        constants.cap_a * s.dphi * s.dphi - constants.cap_c * (-constants.beta * s.t).exp() * s.dphi
    };
    let mut worst: f64 = 0.0;
    for i in 0..run.states.len() - 1 {
        let (a, b) = (run.states[i], run.states[i + 1]);
        let dt = b.t - a.t;
        let mid = run.state_at(0.5 * (a.t + b.t)).expect("midpoint inside run");
        let avg = (rhs(&a) + 4.0 * rhs(&mid) + rhs(&b)) / 6.0;
        let slope = (energy[i + 1].1 - energy[i].1) / dt;
        worst = worst.max((slope - avg).abs());
    }
    worst
}

/// Grid and stopping controls for [`picard_local_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PicardConfig {
    pub tol: f64,
    pub max_iter: usize,
    /// Smallest radius covered is `delta * exp(-span)`.
    pub span: f64,
    /// Initial grid spacing in `ln r`; halved until `psi` settles.
    pub initial_log_step: f64,
    pub max_levels: usize,
}

impl PicardConfig {
    pub fn new(tol: f64, max_iter: usize, span: f64) -> Self {
        Self { tol, max_iter, span, initial_log_step: 1.0 / 16.0, max_levels: 7 }
    }
}

/// Cumulative integral on a uniform grid (Simpson on pairs, 3-point rule for
/// odd nodes).
fn cumulative(values: &[Complex64], step: f64, tail: Complex64) -> Vec<Complex64> {
    let n = values.len();
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    out[0] = tail;
    for j in 1..n {
        out[j] = if j % 2 == 0 {
            out[j - 2] + (values[j - 2] + values[j - 1] * 4.0 + values[j]) * (step / 3.0)
        } else if j + 1 < n {
            out[j - 1] + (values[j - 1] * 5.0 + values[j] * 8.0 - values[j + 1]) * (step / 12.0)
        } else if j >= 2 {
            out[j - 1] + (values[j - 2] * -1.0 + values[j - 1] * 8.0 + values[j] * 5.0) * (step / 12.0)
        } else {
            out[j - 1] + (values[j - 1] + values[j]) * (0.5 * step)
        };
    }
    out
}

struct PicardGrid {
    u: Vec<f64>,
    r: Vec<f64>,
    forcing: Vec<f64>,
    step: f64,
}

impl PicardGrid {
    /// `n + 1` nodes ending at `delta`, spaced `step` apart in `ln r`.
    fn new(delta: f64, n: usize, step: f64, constants: &DerivedConstants) -> Self {
        let u_top = delta.ln();
        let u: Vec<f64> = (0..=n).map(|j| u_top - (n - j) as f64 * step).collect();
        let r: Vec<f64> = u.iter().map(|x| x.exp()).collect();
        let kappa = constants.kappa();
        let forcing = r.iter().map(|&x| kappa * x.powf(constants.beta)).collect();
        Self { u, r, forcing, step }
    }
}

struct OperatorOutput {
    psi: Vec<f64>,
    /// `r dpsi/dr`
    r_dpsi: Vec<f64>,
    imag: f64,
}

fn apply_operator(params: &Params, constants: &DerivedConstants, grid: &PicardGrid, psi: &[f64]) -> OperatorOutput {
    let a1 = constants.exponents.a1();
    let a2 = constants.exponents.a2();
    let two_beta = 2.0 * constants.beta;
    let w: Vec<Complex64> = grid
        .u
        .iter()
        .zip(psi)
        .map(|(&u, &p)| (a2 * u).exp() * model::g_tilde(params, constants.g_prime_1, p))
        .collect();
    let inner = cumulative(&w, grid.step, w[0] / (a2 + two_beta));
    let v: Vec<Complex64> = grid.u.iter().zip(&inner).map(|(&u, &i)| ((a1 - a2) * u).exp() * i).collect();
    let outer = cumulative(&v, grid.step, v[0] / (a1 + two_beta));
    let mut out = OperatorOutput { psi: Vec::with_capacity(psi.len()), r_dpsi: Vec::with_capacity(psi.len()), imag: 0.0 };
    for j in 0..grid.u.len() {
        let u = grid.u[j];
        let decay1 = (-a1 * u).exp();
        let nonlinear = decay1 * outer[j];
        let slope = -a1 * decay1 * outer[j] + (-a2 * u).exp() * inner[j];
        out.imag = out.imag.max(nonlinear.im.abs()).max(slope.im.abs());
        out.psi.push(grid.forcing[j] - nonlinear.re);
        out.r_dpsi.push(constants.beta * grid.forcing[j] - slope.re);
    }
    out
}

struct LevelResult {
    psi: Vec<f64>,
    r_dpsi: Vec<f64>,
    iterations: usize,
    residual: f64,
    imag: f64,
    ratio: f64,
}

fn fixed_point(params: &Params, constants: &DerivedConstants, delta: f64, grid: &PicardGrid, cfg: &PicardConfig) -> Result<LevelResult> {
    let mut psi = vec![0.0; grid.u.len()];
    let mut prev_diff: Option<f64> = None;
    let mut ratio: f64 = 0.0;
    for it in 1..=cfg.max_iter {
        let out = apply_operator(params, constants, grid, &psi);
        let sup = out.psi.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if !sup.is_finite() || sup > delta {
            return Err(Error::NoContraction { delta, reason: format!("iterate left the ball: sup |psi| = {sup:e}") });
        }
        let diff = out.psi.iter().zip(&psi).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        if let Some(pd) = prev_diff {
            if pd > 1e3 * f64::EPSILON * sup.max(1e-300) {
                let q = diff / pd;
                ratio = ratio.max(q);
                if q >= 0.5 {
                    return Err(Error::NoContraction { delta, reason: format!("update ratio {q:.3} >= 1/2") });
                }
            }
        }
        psi = out.psi;
        if diff <= cfg.tol {
            return Ok(LevelResult { psi, r_dpsi: out.r_dpsi, iterations: it, residual: diff, imag: out.imag, ratio });
        }
        prev_diff = Some(diff);
    }
    let out = apply_operator(params, constants, grid, &psi);
    let residual = out.psi.iter().zip(&psi).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    Err(Error::MaxIterExceeded { iterations: cfg.max_iter, residual })
}

/// Picard fixed point of `L` on `(0, delta]`, starting from `psi = 0`.
pub fn picard_local(params: &Params, constants: &DerivedConstants, delta: f64, tol: f64, max_iter: usize) -> Result<RuptureLocal> {
    let span = default_t_big(constants) + delta.ln() + 2.0;
    picard_local_with(params, constants, delta, &PicardConfig::new(tol, max_iter, span.max(4.0)))
}

pub fn picard_local_with(params: &Params, constants: &DerivedConstants, delta: f64, cfg: &PicardConfig) -> Result<RuptureLocal> {
    if !(delta > 0.0 && delta.is_finite()) || !(cfg.tol > 0.0) || !(cfg.span > 0.0) {
        return Err(Error::InvalidInput(format!("bad Picard setup: delta {delta}, {cfg:?}")));
    }
    let mut step = cfg.initial_log_step;
    let mut intervals = ((cfg.span / step).ceil() as usize).max(2);
    let mut previous: Option<(Vec<f64>, LevelResult)> = None;
    for level in 0..cfg.max_levels {
        let grid = PicardGrid::new(delta, intervals, step, constants);
        let res = fixed_point(params, constants, delta, &grid, cfg)?;
        let settled = previous.as_ref().map(|(_, prev)| {
            // nodes of the coarse grid are every other node of the fine grid
            let n = res.psi.len();
            let m = prev.psi.len();
            (0..m).map(|i| (prev.psi[m - 1 - i] - res.psi[n - 1 - 2 * i]).abs()).fold(0.0f64, f64::max)
        });
        let done = settled.is_some_and(|d| d < cfg.tol / 10.0) || level + 1 == cfg.max_levels;
        if done {
            if res.imag > 1e-10 {
                return Err(Error::NoContraction { delta, reason: format!("imaginary residue {:e} exceeds 1e-10", res.imag) });
            }
            let dpsi = res.r_dpsi.iter().zip(&grid.r).map(|(rd, r)| rd / r).collect();
            return Ok(RuptureLocal {
                delta,
                r: grid.r,
                psi: res.psi,
                dpsi,
                iterations: res.iterations,
                residual: res.residual,
                imag_residue: res.imag,
                contraction_ratio: res.ratio,
                log_step: step,
            });
        }
        previous = Some((grid.r, res));
        step *= 0.5;
        intervals *= 2;
    }
    unreachable!("loop returns on its last level")
}

/// Picard solve with the halving rule for `delta`, starting at a tenth of the
/// length scale.
pub fn picard_adaptive(params: &Params, constants: &DerivedConstants, tol: f64) -> Result<RuptureLocal> {
    let mut delta = 0.1 * params.length_scale();
    let mut last = None;
    for _ in 0..30 {
        match picard_local(params, constants, delta, tol, 200) {
            Ok(local) => return Ok(local),
            Err(e @ Error::NoContraction { .. }) => last = Some(e),
            Err(e) => return Err(e),
        }
        delta *= 0.5;
    }
    Err(last.expect("at least one attempt"))
}

/// Where the near-origin part of a rupture profile comes from.
#[derive(Debug, Clone, Copy)]
pub enum LocalProfile<'a> {
    Normalized(&'a NormalizedRun),
    Picard(&'a RuptureLocal),
}

/// Convert the local profile to `(r, h, h')`, then continue outward with the
/// radial integrator from the outermost local radius.
pub fn assemble_rupture_trajectory(params: &Params, local: LocalProfile<'_>, config: &SolveConfig) -> Result<Trajectory> {
    let constants = model::derive_constants(params);
    let gamma = constants.rupture_exponent();
    let c_star = constants.c_star;
    let to_radial = |r: f64, phi: f64, r_dphi: f64| {
        let scale = c_star * r.powf(gamma);
        State { r, h: scale * phi, dh: scale / r * (gamma * phi + r_dphi) }
    };
    let mut near: Vec<State> = match local {
        LocalProfile::Normalized(run) => {
            run.states.iter().map(|s| to_radial((-s.t).exp(), s.phi, -s.dphi)).collect()
        }
        LocalProfile::Picard(loc) => (0..loc.r.len())
            .map(|j| to_radial(loc.r[j], 1.0 + loc.psi[j], loc.r[j] * loc.dpsi[j]))
            .collect(),
    };
    near.dedup_by(|b, a| b.r <= a.r);
    if let Some(bad) = near.iter().find(|s| !(s.h > 0.0 && s.dh > 0.0)) {
        return Err(Error::InvalidInput(format!("local rupture profile is not increasing near the origin: {bad:?}")));
    }
    let start = *near.last().ok_or_else(|| Error::InvalidInput("empty local profile".into()))?;
    let outer = integrator::integrate(params, start, config, TrajectoryKind::Rupture)?;
    let sys = RadialSystem::new(params, config.f_offset);
    let mut samples: Vec<State> = near[..near.len() - 1].to_vec();
    let mut curvature: Vec<f64> = samples.iter().map(|s| sys.curvature(s.r, s.h, s.dh)).collect();
    samples.extend_from_slice(outer.samples());
    curvature.extend_from_slice(outer.curvature());
    Ok(Trajectory::from_parts(
        TrajectoryKind::Rupture,
        *params,
        samples,
        curvature,
        outer.events().to_vec(),
        outer.error_estimate(),
    ))
}

/// Everything produced by a full rupture solve.
#[derive(Debug, Clone)]
pub struct RuptureSolution {
    pub trajectory: Trajectory,
    pub local: RuptureLocal,
    pub run: NormalizedRun,
    pub t_big: f64,
    /// Sup-norm difference of `phi` between the two constructions on `(0, delta]`.
    pub cross_validation: f64,
}

/// Sup-norm difference between the Picard and backward-normalized `phi` at
/// the Picard nodes covered by the run.
pub fn cross_validate(local: &RuptureLocal, run: &NormalizedRun) -> Result<f64> {
    let (t_lo, t_hi) = run.t_range();
    let mut worst: f64 = 0.0;
    for (&r, &psi) in local.r.iter().zip(&local.psi) {
        let t = -r.ln();
        if t < t_lo || t > t_hi {
            continue;
        }
        let s = run.state_at(t)?;
        worst = worst.max((s.phi - 1.0 - psi).abs());
    }
    Ok(worst)
}

/// Build the rupture profile with both constructions and splice it into a
/// trajectory out to `config.r_max` (or `config.stop_after_events`).
pub fn solve_rupture(params: &Params, config: &SolveConfig) -> Result<RuptureSolution> {
    let constants = model::derive_constants(params);
    let local = picard_adaptive(params, &constants, 1e-13)?;
    let t_big = default_t_big(&constants);
    let t_end = -local.delta.ln();
    let start = rupture_tail_start(&constants, t_big);
    let run = integrate_normalized_backward(params, &constants, start, t_end, config)?;
    let cross_validation = cross_validate(&local, &run)?;
    let trajectory = assemble_rupture_trajectory(params, LocalProfile::Normalized(&run), config)?;
    Ok(RuptureSolution { trajectory, local, run, t_big, cross_validation })
}

/// Rupture trajectory only (backward-normalized local part, no Picard check).
pub fn shoot_rupture(params: &Params, config: &SolveConfig) -> Result<Trajectory> {
    let constants = model::derive_constants(params);
    let delta = 0.1 * params.length_scale();
    let t_big = default_t_big(&constants);
    let start = rupture_tail_start(&constants, t_big);
    let run = integrate_normalized_backward(params, &constants, start, -delta.ln(), config)?;
    assemble_rupture_trajectory(params, LocalProfile::Normalized(&run), config)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn canonical() -> (Params, DerivedConstants) {
        let p = Params::new(3.0, 2, 1.0 / 3.0).unwrap();
        let c = model::derive_constants(&p);
        (p, c)
    }

    #[test]
    fn first_picard_iterate_is_the_forcing_term() {
        let (p, c) = canonical();
        let grid = PicardGrid::new(0.1, 160, 1.0 / 16.0, &c);
        let zero = vec![0.0; grid.u.len()];
        let out = apply_operator(&p, &c, &grid, &zero);
        for (j, &r) in grid.r.iter().enumerate() {
            let expect = -0.065_305_604_147_515_77 * r.powf(1.5);
            assert!((out.psi[j] - expect).abs() <= 1e-15 * expect.abs().max(1e-300));
        }
    }

    #[test]
    fn tail_start_matches_asymptote() {
        let (_, c) = canonical();
        let s = rupture_tail_start(&c, 10.0);
        let expect = 1.0 - 0.065_305_604_147_515_77 * (-15f64).exp();
        assert!((s.phi - expect).abs() < 1e-16);
        let far = rupture_tail_start(&c, 200.0);
        assert_eq!(far.phi, 1.0);
        assert!(far.dphi.abs() < 1e-100);
    }

    #[test]
    fn tail_start_residual_is_second_order() {
        // substituting the asymptote leaves only the nonlinear remainder ~ e^(-2 beta t)
        let (p, c) = canonical();
        for &t in &[4.0, 6.0, 8.0] {
            let s = rupture_tail_start(&c, t);
            let phi_tt = c.beta * c.beta * (s.phi - 1.0);
            let res = phi_tt - c.cap_a * s.dphi + model::g_raw(&p, s.phi) + c.cap_c * (-c.beta * t).exp();
            let scale = (-2.0 * c.beta * t).exp();
            assert!(res.abs() < 0.1 * scale && res.abs() > 1e-3 * scale, "t={t} res={res:e}");
        }
    }

    #[test]
    fn unforced_equilibrium_stays_flat() {
        let (p, mut c) = canonical();
        c.cap_c = 0.0;
        let start = NormalizedState { t: 5.0, phi: 1.0, dphi: 0.0 };
        let run = integrate_normalized_backward(&p, &c, start, -2.0, &SolveConfig::default()).unwrap();
        assert!(run.states.iter().all(|s| s.phi == 1.0 && s.dphi == 0.0));
        let energy = normalized_energy_series(&run, &p);
        let g1 = model::big_g_raw(&p, 1.0);
        assert!(energy.iter().all(|&(_, e)| e == g1));
    }

    #[test]
    fn backward_run_requires_decreasing_t() {
        let (p, c) = canonical();
        let start = rupture_tail_start(&c, 5.0);
        assert!(integrate_normalized_backward(&p, &c, start, 6.0, &SolveConfig::default()).is_err());
    }

    #[test]
    fn picard_rejects_oversized_delta() {
        let (p, c) = canonical();
        match picard_local(&p, &c, 50.0, 1e-12, 200) {
            Err(Error::NoContraction { .. }) | Err(Error::MaxIterExceeded { .. }) => {}
            other => panic!("expected failure, got {other:?}"),
        }
    }

    #[test]
    fn cumulative_rule_is_accurate() {
        let step = 0.01;
        let vals: Vec<Complex64> = (0..=301).map(|j| Complex64::new((j as f64 * step).exp(), 0.0)).collect();
        let cum = cumulative(&vals, step, Complex64::new(0.0, 0.0));
        for (j, c) in cum.iter().enumerate() {
            let exact = (j as f64 * step).exp() - 1.0;
            // odd nodes carry the O(h^4) local error of the half-panel rule
            assert!((c.re - exact).abs() < 2e-9 * exact.max(1.0), "j={j}");
        }
    }
}
