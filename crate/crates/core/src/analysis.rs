//! Diagnostics extracted from trajectories: critical points, energies,
//! growth near a rupture point, averages and the weak-form identity.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::integrator::{Trajectory, TrajectoryKind};
use crate::model::{self, Params};
use crate::quadrature;

/// Outcome of the structural checks on a critical-point sequence.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OscillationChecks {
    /// `h(r_k) - xi` changes sign at every step.
    pub alternates: bool,
    /// `F(h(r_k))` strictly decreasing.
    pub energy_decreasing: bool,
    /// `|h(r_k) - xi|` nonincreasing within each parity class.
    pub parity_monotone: bool,
    pub violations: Vec<String>,
}

impl OscillationChecks {
    pub fn passed(&self) -> bool {
        self.alternates && self.energy_decreasing && self.parity_monotone
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalPoints {
    pub radii: Vec<f64>,
    pub heights: Vec<f64>,
    pub spacings: Vec<f64>,
    pub checks: OscillationChecks,
}

impl CriticalPoints {
    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }

    /// Checks restricted to `r_k` with `k >= k_from` (1-based).
    pub fn checks_from(&self, params: &Params, k_from: usize) -> OscillationChecks {
        let skip = k_from.saturating_sub(1).min(self.heights.len());
        check_sequence(params, &self.radii[skip..], &self.heights[skip..])
    }
}

fn check_sequence(params: &Params, radii: &[f64], heights: &[f64]) -> OscillationChecks {
    let xi = params.xi();
    let mut out = OscillationChecks { alternates: true, energy_decreasing: true, parity_monotone: true, violations: Vec::new() };
    for k in 1..heights.len() {
        let (a, b) = (heights[k - 1] - xi, heights[k] - xi);
        if !(a * b < 0.0) {
            out.alternates = false;
            out.violations.push(format!("no sign change between r = {} and r = {}", radii[k - 1], radii[k]));
        }
        if !(params.big_f_raw(heights[k]) < params.big_f_raw(heights[k - 1])) {
            out.energy_decreasing = false;
            out.violations.push(format!("F(h) did not decrease at r = {}", radii[k]));
        }
        if k >= 2 && (heights[k] - xi).abs() > (heights[k - 2] - xi).abs() {
            out.parity_monotone = false;
            out.violations.push(format!("|h - xi| grew within its parity class at r = {}", radii[k]));
        }
    }
    out
}

/// The first `k_max` critical points of `traj` with their structural checks.
///
/// A flat trajectory yields an empty list. Check failures are recorded in
/// [`CriticalPoints::checks`], not raised.
pub fn critical_points(traj: &Trajectory, k_max: usize) -> Result<CriticalPoints> {
    let events = traj.events();
    let take = if traj.is_flat() {
        0
    } else {
        if events.len() < k_max {
            return Err(Error::InsufficientRange { found: events.len(), requested: k_max });
        }
        k_max
    };
    let radii: Vec<f64> = events[..take].iter().map(|e| e.r).collect();
    let heights: Vec<f64> = events[..take].iter().map(|e| e.h).collect();
    let spacings = radii.windows(2).map(|w| w[1] - w[0]).collect();
    let checks = check_sequence(traj.params(), &radii, &heights);
    Ok(CriticalPoints { radii, heights, spacings, checks })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpacingDiagnostics {
    /// Mean of the last quarter of the spacings.
    pub tail_mean: f64,
    pub tail_count: usize,
    pub tail_min: f64,
    pub tail_max: f64,
    pub limit: f64,
    /// `|tail_mean - limit| / limit`
    pub deviation: f64,
}

pub fn spacing_diagnostics(cp: &CriticalPoints, constants: &model::DerivedConstants) -> Result<SpacingDiagnostics> {
    let n = cp.spacings.len();
    if n < 10 {
        return Err(Error::InsufficientRange { found: n, requested: 10 });
    }
    let tail = &cp.spacings[n - n / 4..];
    let tail_mean = tail.iter().sum::<f64>() / tail.len() as f64;
    let limit = constants.spacing_limit;
    Ok(SpacingDiagnostics {
        tail_mean,
        tail_count: tail.len(),
        tail_min: tail.iter().copied().fold(f64::INFINITY, f64::min),
        tail_max: tail.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        limit,
        deviation: (tail_mean - limit).abs() / limit,
    })
}

/// Samples of `e1 = h'^2/2 + F(h)` and `e2 = r^(2(N-1)) e1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergySeries {
    pub r: Vec<f64>,
    pub e1: Vec<f64>,
    pub e2: Vec<f64>,
}

pub fn energy_series(traj: &Trajectory) -> EnergySeries {
    let params = traj.params();
    let power = 2.0 * (params.n() - 1.0);
    let mut es = EnergySeries { r: Vec::new(), e1: Vec::new(), e2: Vec::new() };
    for s in traj.samples() {
        let e1 = 0.5 * s.dh * s.dh + params.big_f_raw(s.h);
        es.r.push(s.r);
        es.e1.push(e1);
        es.e2.push(s.r.powf(power) * e1);
    }
    es
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EnergyKind {
    E1,
    E2,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyViolation {
    pub which: EnergyKind,
    pub index: usize,
    pub r: f64,
    /// Size of the wrong-way step relative to the previous value.
    pub relative_excess: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyReport {
    pub rel_tol: f64,
    pub samples: usize,
    pub violations: Vec<EnergyViolation>,
    /// Largest wrong-way relative step seen, violation or not.
    pub worst_excess: f64,
}

impl EnergyReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Flag consecutive samples where `e1` rises or `e2` falls by more than
/// `rel_tol` relative to the previous value.
pub fn check_energy_monotonicity(es: &EnergySeries, rel_tol: f64) -> EnergyReport {
    let mut report = EnergyReport { rel_tol, samples: es.r.len(), violations: Vec::new(), worst_excess: 0.0 };
    for i in 1..es.r.len() {
        let up = (es.e1[i] - es.e1[i - 1]) / es.e1[i - 1].abs().max(f64::MIN_POSITIVE);
        let down = (es.e2[i - 1] - es.e2[i]) / es.e2[i - 1].abs().max(f64::MIN_POSITIVE);
        for (which, excess) in [(EnergyKind::E1, up), (EnergyKind::E2, down)] {
            report.worst_excess = report.worst_excess.max(excess);
            if excess > rel_tol {
                report.violations.push(EnergyViolation { which, index: i, r: es.r[i], relative_excess: excess });
            }
        }
    }
    report
}

/// Count pairs `r < anchor` breaking `e1(r) <= (anchor/r)^(2(N-1)) e1(anchor)`
/// beyond `rel_tol`, for every sample taken as the anchor in `anchors`.
pub fn sandwich_violations(es: &EnergySeries, dim: u32, anchors: &[usize], rel_tol: f64) -> usize {
    let power = 2.0 * (f64::from(dim) - 1.0);
    let mut bad = 0;
    for &a in anchors {
        let (ra, ea) = (es.r[a], es.e1[a]);
        for i in 0..a {
            if es.r[i] <= 0.0 {
                continue;
            }
            let bound = (ra / es.r[i]).powf(power) * ea;
            if es.e1[i] > bound * (1.0 + rel_tol) {
                bad += 1;
            }
        }
    }
    bad
}

/// Lower bound for the first critical radius of the smooth profile `h(0) = eta`:
/// `sqrt(2 N alpha |eta - xi| / |xi^(-alpha) - eta^(-alpha)|)`.
///
/// The `eta < xi` branch is the mirrored form of the `eta > xi` bound. Near
/// `eta = xi` the quotient is evaluated without cancellation and tends to
/// `sqrt(2 N xi^(alpha+1))`.
pub fn r1_lower_bound(params: &Params, eta: f64) -> Result<f64> {
    let xi = params.xi();
    if !(eta > 0.0 && eta.is_finite()) || eta == xi {
        return Err(Error::Domain { function: "r1_lower_bound", value: eta });
    }
    let alpha = params.alpha();
    // xi^(-a) - eta^(-a) = xi^(-a) (1 - (eta/xi)^(-a)) = -xi^(-a) expm1(-a ln(eta/xi))
    let rel = (eta - xi) / xi;
    let log_ratio = rel.ln_1p();
    let denom = -xi.powf(-alpha) * (-alpha * log_ratio).exp_m1();
    Ok((2.0 * params.n() * alpha * (eta - xi) / denom).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthReport {
    /// Explicit lower constant `((alpha+1)/(4 N alpha))^(1/(alpha+1))`.
    pub lower_constant: f64,
    /// End of the region from the origin where `f(h) <= -h^(-alpha)/(2 alpha)`.
    pub lower_region_end: f64,
    /// Samples in that region with `h < lower_constant r^gamma`.
    pub lower_violations: usize,
    /// `sup h / r^gamma` over the same region.
    pub upper_constant: f64,
    /// Least-squares slope of `ln h` against `ln r` on `[1e-6, 1e-4]`.
    pub slope: f64,
    pub expected_slope: f64,
    /// `h / r^gamma` at the innermost sample.
    pub leading_ratio: f64,
    pub c_star: f64,
    /// `r^(N-1) h'` at the innermost sample.
    pub flux_at_origin: f64,
}

impl GrowthReport {
    pub fn slope_error(&self) -> f64 {
        (self.slope - self.expected_slope).abs()
    }

    pub fn ratio_error(&self) -> f64 {
        (self.leading_ratio - self.c_star).abs()
    }
}

/// Growth-rate diagnostics for a rupture trajectory near `r = 0`.
pub fn growth_bounds_check(traj: &Trajectory) -> Result<GrowthReport> {
    if traj.kind() != TrajectoryKind::Rupture {
        return Err(Error::InvalidInput("growth bounds need a rupture trajectory".into()));
    }
    let params = traj.params();
    let constants = model::derive_constants(params);
    let alpha = params.alpha();
    let n = params.n();
    let gamma = constants.rupture_exponent();
    let lower_constant = ((alpha + 1.0) / (4.0 * n * alpha)).powf(1.0 / (alpha + 1.0));
    let h_cut = (2.0 * alpha * params.pressure()).powf(-1.0 / alpha);

    let mut lower_region_end = traj.r_start();
    let mut lower_violations = 0;
    let mut upper_constant: f64 = 0.0;
    for s in traj.samples() {
        if s.h > h_cut {
            break;
        }
        lower_region_end = s.r;
        let ratio = s.h / s.r.powf(gamma);
        upper_constant = upper_constant.max(ratio);
        if ratio < lower_constant {
            lower_violations += 1;
        }
    }

    let (lo, hi) = (1e-6f64.max(traj.r_start()), 1e-4f64.min(traj.r_end()));
    let pts = 41;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..pts {
        let x = lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (pts - 1) as f64;
        let y = traj.evaluate_at(x.exp().clamp(lo, hi))?.h.ln();
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    let m = pts as f64;
    let slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);

    let first = traj.samples()[0];
    Ok(GrowthReport {
        lower_constant,
        lower_region_end,
        lower_violations,
        upper_constant,
        slope,
        expected_slope: gamma,
        leading_ratio: first.h / first.r.powf(gamma),
        c_star: constants.c_star,
        flux_at_origin: first.r.powf(n - 1.0) * first.dh,
    })
}

/// Quadrature used on each sample interval of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scheme {
    AdaptiveSimpson { tol: f64 },
    GaussLegendre { nodes: usize },
    CompositeSimpson { panels: usize },
}

/// `∫_lo^hi w(r, h(r)) dr` over the interpolant, one rule application per
/// sample interval.
fn integrate_samples<W: Fn(f64, f64) -> f64>(traj: &Trajectory, lo: f64, hi: f64, scheme: Scheme, w: W) -> f64 {
    let samples = traj.samples();
    let rule = match scheme {
        Scheme::GaussLegendre { nodes } => quadrature::gauss_legendre(nodes),
        _ => Vec::new(),
    };
    let first = samples.partition_point(|s| s.r <= lo).saturating_sub(1);
    let mut total = 0.0;
    let mut i = first;
    while i + 1 < samples.len() && samples[i].r < hi {
        let a = samples[i].r.max(lo);
        let b = samples[i + 1].r.min(hi);
        if b > a {
            let g = |r: f64| w(r, traj.height_in(i, r));
            total += match scheme {
                Scheme::AdaptiveSimpson { tol } => {
                    quadrature::adaptive_simpson(g, a, b, tol * (b - a) / (hi - lo), 16)
                }
                Scheme::GaussLegendre { .. } => quadrature::gauss_apply(&rule, g, a, b),
                Scheme::CompositeSimpson { panels } => quadrature::composite_simpson(g, a, b, panels),
            };
        }
        i += 1;
    }
    total
}

/// Average `(N / R^N) ∫_0^R h(s) s^(N-1) ds` of the profile over `B_R`.
pub fn average_thickness(traj: &Trajectory, radius: f64) -> Result<f64> {
    average_thickness_with(traj, radius, Scheme::AdaptiveSimpson { tol: 1e-13 })
}

pub fn average_thickness_with(traj: &Trajectory, radius: f64, scheme: Scheme) -> Result<f64> {
    let (lo, hi) = (traj.r_start(), traj.r_end());
    if !(radius > 0.0 && radius <= hi) {
        return Err(Error::OutOfRange { r: radius, lo, hi });
    }
    let params = traj.params();
    let n = params.n();
    let mut total = 0.0;
    let mut start = 0.0;
    if traj.kind() == TrajectoryKind::Rupture {
        // h = c* r^gamma (1 + kappa r^beta + ...) below the first sample
        let c = model::derive_constants(params);
        let rs = lo.min(radius);
        let e = c.rupture_exponent() + n;
        total += c.c_star * (rs.powf(e) / e + c.kappa() * rs.powf(e + c.beta) / (e + c.beta));
        start = rs;
    }
    if radius > start {
        total += integrate_samples(traj, start, radius, scheme, |r, h| h * r.powf(n - 1.0));
    }
    Ok(n / radius.powf(n) * total)
}

/// Radial bump `exp(-1/(1 - x^2))`, `x = (r - center)/width`.
///
/// Either `center = 0` (smooth at the origin, support `[0, width)`) or
/// `center >= width` (support away from the origin).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bump {
    pub center: f64,
    pub width: f64,
}

impl Bump {
    pub fn new(center: f64, width: f64) -> Result<Self> {
        if !(width > 0.0 && center >= 0.0) || (center > 0.0 && center < width) {
            return Err(Error::InvalidInput(format!("bump centered at {center} with width {width} is not smooth and radial")));
        }
        Ok(Self { center, width })
    }

    pub fn support(&self) -> (f64, f64) {
        ((self.center - self.width).max(0.0), self.center + self.width)
    }

    /// `(phi, phi', phi'')` at radius `r`.
    pub fn eval(&self, r: f64) -> (f64, f64, f64) {
        let x = (r - self.center) / self.width;
        if x.abs() >= 1.0 {
            return (0.0, 0.0, 0.0);
        }
        let q = 1.0 - x * x;
        let b = (-1.0 / q).exp();
        let d1 = b * (-2.0 * x / (q * q));
        let d2 = b * (6.0 * x.powi(4) - 2.0) / q.powi(4);
        (b, d1 / self.width, d2 / (self.width * self.width))
    }
}

/// `|∫ h Δφ r^(N-1) dr - ∫ (h^(-alpha)/alpha - p) φ r^(N-1) dr|` for a radial bump.
pub fn weak_form_residual(traj: &Trajectory, bump: Bump) -> Result<f64> {
    weak_form_residual_with(traj, bump, 32)
}

/// As [`weak_form_residual`] with `panels` composite-Simpson panels per
/// sample interval.
pub fn weak_form_residual_with(traj: &Trajectory, bump: Bump, panels: usize) -> Result<f64> {
    let (lo, hi) = bump.support();
    if hi > traj.r_end() {
        return Err(Error::OutOfRange { r: hi, lo: traj.r_start(), hi: traj.r_end() });
    }
    let params = *traj.params();
    let n = params.n();
    let alpha = params.alpha();
    let integrand = |r: f64, h: f64| {
        let (b, d1, d2) = bump.eval(r);
        // r^(N-1) Δφ with the (N-1) r^(N-2) φ' term written out so r = 0 is safe
        let lap_w = d2 * r.powf(n - 1.0) + if d1 == 0.0 { 0.0 } else { (n - 1.0) * r.powf(n - 2.0) * d1 };
        h * lap_w - (h.powf(-alpha) / alpha - params.pressure()) * b * r.powf(n - 1.0)
    };
    let mut total = 0.0;
    let mut start = lo;
    if traj.kind() == TrajectoryKind::Rupture && lo < traj.r_start() {
        if lo > 0.0 {
            return Err(Error::OutOfRange { r: lo, lo: traj.r_start(), hi: traj.r_end() });
        }
        // below the first sample the bump is flat to O(r^2) and h = c* r^gamma (1 + kappa r^beta)
        let c = model::derive_constants(&params);
        let rs = traj.r_start();
        let (b0, _, d20) = bump.eval(0.0);
        let g = c.rupture_exponent();
        let h_part = c.c_star * (rs.powf(g + n) / (g + n) + c.kappa() * rs.powf(g + n + c.beta) / (g + n + c.beta));
        let lap0 = n * d20;
        let sing = c.c_star.powf(-alpha)
            * (rs.powf(n - c.beta) / (n - c.beta) - alpha * c.kappa() * rs.powf(n) / n);
        total += lap0 * h_part - b0 * (sing / alpha - params.pressure() * rs.powf(n) / n);
        start = rs;
    }
    total += integrate_samples(traj, start, hi, Scheme::CompositeSimpson { panels }, integrand);
    Ok(total.abs())
}
