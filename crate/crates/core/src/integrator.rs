//! Radial initial-value solver for `h'' + (N-1)/r h' + f(h) = 0`.
//!
//! Smooth profiles start at the singular point `r = 0` through a short Taylor
//! series; the adaptive integrator never evaluates the `1/r` term at the
//! origin. Every sign change of `h'` is located on the dense interpolant and
//! then polished with exact Runge-Kutta steps.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::Params;
use crate::ode::{self, AcceptedStep, Flow, PlanarSystem, StepControl, Vec2};

/// A point `(r, h, h')` on a radial profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct State {
    pub r: f64,
    pub h: f64,
    pub dh: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TrajectoryKind {
    Smooth { eta: f64 },
    Rupture,
}

/// Number of Taylor terms used to step off the origin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum TaylorOrder {
    /// `h = eta + c2 r^2`.
    #[default]
    Two,
    /// Adds the `c4 r^4` term.
    Four,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolveConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub r_max: f64,
    /// Positivity guard; `None` means `1e-8 xi`.
    pub h_floor: Option<f64>,
    /// Relative tolerance for critical-point polishing.
    pub event_refine_tol: f64,
    /// Sample-spacing cap; `None` means a tenth of the length scale.
    pub max_step: Option<f64>,
    /// Stop right after this many critical points.
    pub stop_after_events: Option<usize>,
    pub max_steps: usize,
    pub taylor_order: TaylorOrder,
    /// Test hook: the radial integrator uses `f + f_offset` in place of `f`.
    pub f_offset: f64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-11,
            abs_tol: 1e-13,
            r_max: 100.0,
            h_floor: None,
            event_refine_tol: 1e-12,
            max_step: None,
            stop_after_events: None,
            max_steps: 5_000_000,
            taylor_order: TaylorOrder::Two,
            f_offset: 0.0,
        }
    }
}

impl SolveConfig {
    pub fn with_r_max(mut self, r_max: f64) -> Self {
        self.r_max = r_max;
        self
    }

    pub fn with_events(mut self, k: usize) -> Self {
        self.stop_after_events = Some(k);
        self
    }

    pub fn with_tolerances(mut self, rel_tol: f64, abs_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self.abs_tol = abs_tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("rel_tol", self.rel_tol),
            ("abs_tol", self.abs_tol),
            ("r_max", self.r_max),
            ("event_refine_tol", self.event_refine_tol),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidInput(format!("{name} must be positive, got {v}")));
            }
        }
        if let Some(v) = self.h_floor {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidInput(format!("h_floor must be positive, got {v}")));
            }
        }
        if let Some(v) = self.max_step {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidInput(format!("max_step must be positive, got {v}")));
            }
        }
        if !self.f_offset.is_finite() {
            return Err(Error::InvalidInput("f_offset must be finite".into()));
        }
        Ok(())
    }

    pub(crate) fn floor_for(&self, params: &Params) -> f64 {
        self.h_floor.unwrap_or(1e-8 * params.xi())
    }

    pub(crate) fn step_cap(&self, params: &Params) -> f64 {
        self.max_step.unwrap_or(0.1 * params.length_scale())
    }

    pub(crate) fn control(&self, params: &Params) -> StepControl {
        StepControl {
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            max_step: self.step_cap(params),
            max_steps: self.max_steps,
        }
    }
}

pub(crate) struct RadialSystem {
    params: Params,
    dim_minus_one: f64,
    f_offset: f64,
}

impl RadialSystem {
    pub(crate) fn new(params: &Params, f_offset: f64) -> Self {
        Self { params: *params, dim_minus_one: params.n() - 1.0, f_offset }
    }

    #[inline]
    pub(crate) fn curvature(&self, r: f64, h: f64, dh: f64) -> f64 {
        -self.dim_minus_one / r * dh - self.params.f_raw(h) - self.f_offset
    }
}

impl PlanarSystem for RadialSystem {
    #[inline]
    fn rhs(&self, r: f64, y: Vec2) -> Option<Vec2> {
        if !(y[0] > 0.0) {
            return None;
        }
        Some([y[1], self.curvature(r, y[0], y[1])])
    }
}

/// Dense record of one radial profile.
///
/// Samples are strictly increasing in `r` and carry `h''` for quintic
/// Hermite interpolation. Critical points (`h' = 0`) are also samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    kind: TrajectoryKind,
    params: Params,
    samples: Vec<State>,
    curvature: Vec<f64>,
    events: Vec<State>,
    error_estimate: f64,
}

impl Trajectory {
    pub(crate) fn from_parts(
        kind: TrajectoryKind,
        params: Params,
        samples: Vec<State>,
        curvature: Vec<f64>,
        events: Vec<State>,
        error_estimate: f64,
    ) -> Self {
        debug_assert_eq!(samples.len(), curvature.len());
        debug_assert!(samples.windows(2).all(|w| w[0].r < w[1].r));
        Self { kind, params, samples, curvature, events, error_estimate }
    }

    pub fn kind(&self) -> TrajectoryKind {
        self.kind
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn samples(&self) -> &[State] {
        &self.samples
    }

    /// `h''` at each sample.
    pub fn curvature(&self) -> &[f64] {
        &self.curvature
    }

    /// Critical points `r_1 < r_2 < ...` in `r > 0`.
    pub fn events(&self) -> &[State] {
        &self.events
    }

    /// Sum of local error estimates for `h` over all accepted steps.
    pub fn error_estimate(&self) -> f64 {
        self.error_estimate
    }

    pub fn r_start(&self) -> f64 {
        self.samples[0].r
    }

    pub fn r_end(&self) -> f64 {
        self.samples[self.samples.len() - 1].r
    }

    pub fn is_flat(&self) -> bool {
        self.samples.iter().all(|s| s.dh == 0.0)
    }

    /// Interpolated state at `r`.
    pub fn evaluate_at(&self, r: f64) -> Result<State> {
        let (lo, hi) = (self.r_start(), self.r_end());
        if !(r >= lo && r <= hi) {
            return Err(Error::OutOfRange { r, lo, hi });
        }
        let idx = self.samples.partition_point(|s| s.r < r);
        if idx < self.samples.len() && self.samples[idx].r == r {
            return Ok(self.samples[idx]);
        }
        let (i0, i1) = (idx - 1, idx);
        let (s0, s1) = (self.samples[i0], self.samples[i1]);
        let (h, dh) = ode::quintic_hermite(
            s0.r,
            s1.r,
            [s0.h, s0.dh, self.curvature[i0]],
            [s1.h, s1.dh, self.curvature[i1]],
            r,
        );
        Ok(State { r, h, dh })
    }

    /// Interpolated `h` on the sample interval `[r_i, r_{i+1}]`.
    pub(crate) fn height_in(&self, i: usize, r: f64) -> f64 {
        let (s0, s1) = (self.samples[i], self.samples[i + 1]);
        ode::quintic_hermite(
            s0.r,
            s1.r,
            [s0.h, s0.dh, self.curvature[i]],
            [s1.h, s1.dh, self.curvature[i + 1]],
            r,
        )
        .0
    }

    /// Map `h(r)` to `height * h(r * radius)` under new parameters.
    pub(crate) fn rescaled(&self, height: f64, radius: f64, params: Params, kind: TrajectoryKind) -> Trajectory {
        let map = |s: &State| State { r: s.r / radius, h: height * s.h, dh: height * radius * s.dh };
        Trajectory {
            kind,
            params,
            samples: self.samples.iter().map(map).collect(),
            curvature: self.curvature.iter().map(|c| height * radius * radius * c).collect(),
            events: self.events.iter().map(map).collect(),
            error_estimate: height * self.error_estimate,
        }
    }
}

fn taylor_coefficients(params: &Params, eta: f64) -> (f64, f64) {
    let n = params.n();
    let f = params.f_raw(eta);
    let c2 = -f / (2.0 * n);
    let c4 = params.f_prime_raw(eta) * f / (8.0 * n * (n + 2.0));
    (c2, c4)
}

/// Series state at `r0` for the smooth profile with `h(0) = eta`.
pub fn taylor_start_smooth(params: &Params, eta: f64, r0: f64) -> State {
    taylor_start_smooth_with_order(params, eta, r0, TaylorOrder::Two)
}

pub fn taylor_start_smooth_with_order(params: &Params, eta: f64, r0: f64, order: TaylorOrder) -> State {
    let (c2, c4) = taylor_coefficients(params, eta);
    let c4 = match order {
        TaylorOrder::Two => 0.0,
        TaylorOrder::Four => c4,
    };
    let r2 = r0 * r0;
    State { r: r0, h: eta + c2 * r2 + c4 * r2 * r2, dh: 2.0 * c2 * r0 + 4.0 * c4 * r2 * r0 }
}

/// Step-off radius: `1e-3` of the length scale, reduced until the first
/// neglected series term is below `abs_tol`.
pub fn smooth_start_radius(params: &Params, eta: f64, abs_tol: f64) -> f64 {
    let (_, c4) = taylor_coefficients(params, eta);
    let base = 1e-3 * params.length_scale();
    if c4 == 0.0 {
        base
    } else {
        base.min((abs_tol / c4.abs()).powf(0.25))
    }
}

fn is_equilibrium(params: &Params, start: &State) -> bool {
    let scale = params.pressure().max(start.h.powf(-params.alpha()) / params.alpha());
    start.dh == 0.0 && params.f_raw(start.h).abs() <= 4.0 * f64::EPSILON * scale
}

fn locate_event(sys: &RadialSystem, step: &AcceptedStep, tol: f64) -> State {
    let node0 = [step.y0[0], step.y0[1], step.f0[1]];
    let node1 = [step.y1[0], step.y1[1], step.f1[1]];
    let slope = |x: f64| ode::quintic_hermite(step.x0, step.x1, node0, node1, x).1;

    // Illinois false position on the interpolated derivative
    let (mut a, mut b) = (step.x0, step.x1);
    let (mut fa, mut fb) = (step.y0[1], step.y1[1]);
    let mut side = 0i8;
    let mut root = 0.5 * (a + b);
    for _ in 0..200 {
        root = (a * fb - b * fa) / (fb - fa);
        if !(root > a && root < b) {
            root = 0.5 * (a + b);
        }
        let fr = slope(root);
        if fr == 0.0 || (b - a) <= tol * root.abs() {
            break;
        }
        if fr.signum() == fb.signum() {
            b = root;
            fb = fr;
            if side == 1 {
                fa *= 0.5;
            }
            side = 1;
        } else {
            a = root;
            fa = fr;
            if side == -1 {
                fb *= 0.5;
            }
            side = -1;
        }
    }

    // Newton polish with exact steps from the left end of the bracket
    let mut r = root;
    let mut best: Option<State> = None;
    for _ in 0..6 {
        let Some(trial) = ode::dp5_step(sys, step.x0, step.y0, step.f0, r - step.x0) else {
            break;
        };
        best = Some(State { r, h: trial.y[0], dh: trial.y[1] });
        if trial.f[1] == 0.0 {
            break;
        }
        let dr = -trial.y[1] / trial.f[1];
        let next = r + dr;
        if !(next > step.x0 && next <= step.x1) {
            break;
        }
        r = next;
        if dr.abs() <= tol * r.abs() {
            if let Some(t) = ode::dp5_step(sys, step.x0, step.y0, step.f0, r - step.x0) {
                best = Some(State { r, h: t.y[0], dh: t.y[1] });
            }
            break;
        }
    }
    best.unwrap_or_else(|| {
        let (h, dh) = ode::quintic_hermite(step.x0, step.x1, node0, node1, root);
        State { r: root, h, dh }
    })
}

/// Integrate the radial equation from `start` (with `start.r > 0`).
///
/// For `TrajectoryKind::Smooth { eta }` the origin sample `(0, eta, 0)` is
/// prepended so the record covers `[0, r_end]`.
pub fn integrate(params: &Params, start: State, config: &SolveConfig, kind: TrajectoryKind) -> Result<Trajectory> {
    config.validate()?;
    if !(start.r > 0.0 && start.r.is_finite()) {
        return Err(Error::InvalidInput(format!("start radius must be > 0, got {}", start.r)));
    }
    if !(start.h > 0.0 && start.h.is_finite()) || !start.dh.is_finite() {
        return Err(Error::InvalidInput(format!("start state {start:?} must have h > 0")));
    }
    if start.r >= config.r_max {
        return Err(Error::InvalidInput(format!("start radius {} beyond r_max {}", start.r, config.r_max)));
    }
    let sys = RadialSystem::new(params, config.f_offset);
    let floor = config.floor_for(params);
    let mut samples = Vec::new();
    let mut curvature = Vec::new();
    if let TrajectoryKind::Smooth { eta } = kind {
        samples.push(State { r: 0.0, h: eta, dh: 0.0 });
        curvature.push(-(params.f_raw(eta) + config.f_offset) / params.n());
    }

    if config.f_offset == 0.0 && is_equilibrium(params, &start) {
        let cap = config.step_cap(params);
        let count = ((config.r_max - start.r) / cap).ceil().clamp(1.0, 100_000.0) as usize;
        for i in 0..=count {
            let r = start.r + (config.r_max - start.r) * i as f64 / count as f64;
            samples.push(State { r, h: start.h, dh: 0.0 });
            curvature.push(0.0);
        }
        return Ok(Trajectory::from_parts(kind, *params, samples, curvature, Vec::new(), 0.0));
    }

    samples.push(start);
    curvature.push(sys.curvature(start.r, start.h, start.dh));
    let mut events: Vec<State> = Vec::new();
    let mut error_estimate = 0.0;
    let ctl = config.control(params);

    ode::drive(&sys, start.r, [start.h, start.dh], config.r_max, &ctl, |step| {
        if step.y1[0] < floor {
            return Err(Error::PositivityBreach { r: step.x1, h: step.y1[0], floor });
        }
        error_estimate += step.err[0].abs();
        if step.y0[1] * step.y1[1] < 0.0 || (step.y1[1] == 0.0 && step.y0[1] != 0.0) {
            let ev = if step.y1[1] == 0.0 {
                State { r: step.x1, h: step.y1[0], dh: 0.0 }
            } else {
                locate_event(&sys, step, config.event_refine_tol)
            };
            let last_r = samples.last().map_or(f64::NEG_INFINITY, |s| s.r);
            if ev.r > last_r && ev.r < step.x1 {
                samples.push(ev);
                curvature.push(sys.curvature(ev.r, ev.h, ev.dh));
            }
            events.push(ev);
            if config.stop_after_events.is_some_and(|k| events.len() >= k) {
                if ev.r >= step.x1 {
                    samples.push(State { r: step.x1, h: step.y1[0], dh: step.y1[1] });
                    curvature.push(step.f1[1]);
                }
                return Ok(Flow::Stop);
            }
        }
        samples.push(State { r: step.x1, h: step.y1[0], dh: step.y1[1] });
        curvature.push(step.f1[1]);
        Ok(Flow::Continue)
    })?;

    Ok(Trajectory::from_parts(kind, *params, samples, curvature, events, error_estimate))
}

/// Smooth profile with `h(0) = eta`, started from the Taylor series.
pub fn shoot_smooth(params: &Params, eta: f64, config: &SolveConfig) -> Result<Trajectory> {
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::Domain { function: "shoot_smooth", value: eta });
    }
    let r0 = smooth_start_radius(params, eta, config.abs_tol);
    let flat = State { r: r0, h: eta, dh: 0.0 };
    let start = if is_equilibrium(params, &flat) {
        flat
    } else {
        taylor_start_smooth_with_order(params, eta, r0, config.taylor_order)
    };
    integrate(params, start, config, TrajectoryKind::Smooth { eta })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn canonical() -> Params {
        Params::new(3.0, 2, 1.0 / 3.0).unwrap()
    }

    #[test]
    fn taylor_start_examples() {
        let p = canonical();
        let s = taylor_start_smooth(&p, 2.0, 1e-2);
        // c2 = -f(2)/(2N) = -7/96
        assert!((s.h - (2.0 - 7.0 / 96.0 * 1e-4)).abs() < 1e-15);
        assert!((s.dh + 7.0 / 48.0 * 1e-2).abs() < 1e-15);
        let flat = taylor_start_smooth(&p, 1.0, 0.3);
        assert_eq!((flat.h, flat.dh), (1.0, 0.0));
        let below = taylor_start_smooth(&p, 0.5, 1e-3);
        assert!(below.h > 0.5 && below.dh > 0.0);
    }

    #[test]
    fn four_term_series_has_smaller_ode_residual() {
        // residual of h'' + (N-1)/r h' + f(h) for the truncated series
        let p = canonical();
        let eta = 2.0;
        let residual = |order: TaylorOrder, r: f64| {
            let (c2, c4) = taylor_coefficients(&p, eta);
            let c4 = if order == TaylorOrder::Four { c4 } else { 0.0 };
            let s = taylor_start_smooth_with_order(&p, eta, r, order);
            let ddh = 2.0 * c2 + 12.0 * c4 * r * r;
            (ddh + (p.n() - 1.0) / r * s.dh + p.f_raw(s.h)).abs()
        };
        for &r in &[1e-2, 3e-2] {
            let r2 = residual(TaylorOrder::Two, r);
            let r4 = residual(TaylorOrder::Four, r);
            assert!(r2 < 0.1 * r * r, "two-term residual {r2} not O(r^2)");
            assert!(r4 < 0.1 * r2, "four-term {r4} vs two-term {r2}");
        }
    }

    #[test]
    fn flat_start_gives_constant_trajectory() {
        let p = canonical();
        let traj = shoot_smooth(&p, p.xi(), &SolveConfig::default().with_r_max(20.0)).unwrap();
        assert!(traj.events().is_empty());
        assert!(traj.is_flat());
        for &r in &[0.0, 0.37, 5.0, 19.9] {
            let s = traj.evaluate_at(r).unwrap();
            assert_eq!((s.h, s.dh), (1.0, 0.0));
        }
    }

    #[test]
    fn out_of_range_evaluation_fails() {
        let p = canonical();
        let traj = shoot_smooth(&p, 2.0, &SolveConfig::default().with_r_max(5.0)).unwrap();
        assert!(matches!(traj.evaluate_at(5.5), Err(Error::OutOfRange { .. })));
        assert!(matches!(traj.evaluate_at(-0.1), Err(Error::OutOfRange { .. })));
        let s = traj.samples()[7];
        assert_eq!(traj.evaluate_at(s.r).unwrap(), s);
    }

    #[test]
    fn first_critical_height_drops_below_xi() {
        let p = canonical();
        let traj = shoot_smooth(&p, 2.0, &SolveConfig::default().with_r_max(60.0)).unwrap();
        let ev = traj.events();
        assert!(ev.len() > 10);
        assert!(ev[0].h < 1.0);
        for e in ev {
            assert!(e.dh.abs() < 1e-10, "{e:?}");
        }
    }

    #[test]
    fn invalid_starts_are_rejected() {
        let p = canonical();
        let cfg = SolveConfig::default();
        let bad_r = State { r: 0.0, h: 1.0, dh: 0.0 };
        assert!(integrate(&p, bad_r, &cfg, TrajectoryKind::Rupture).is_err());
        let bad_h = State { r: 1.0, h: -1.0, dh: 0.0 };
        assert!(integrate(&p, bad_h, &cfg, TrajectoryKind::Rupture).is_err());
        let mut bad_cfg = cfg;
        bad_cfg.rel_tol = 0.0;
        assert!(shoot_smooth(&p, 2.0, &bad_cfg).is_err());
    }

    #[test]
    fn stop_after_events_ends_on_the_event() {
        let p = canonical();
        let traj = shoot_smooth(&p, 2.0, &SolveConfig::default().with_r_max(1e4).with_events(3)).unwrap();
        assert_eq!(traj.events().len(), 3);
        assert_eq!(traj.r_end(), traj.events()[2].r);
    }

    #[test]
    fn positivity_breach_is_reported() {
        // a huge floor forces the guard
        let p = canonical();
        let mut cfg = SolveConfig::default().with_r_max(20.0);
        cfg.h_floor = Some(0.9);
        assert!(matches!(shoot_smooth(&p, 2.0, &cfg), Err(Error::PositivityBreach { .. })));
    }
}
