//! Dormand-Prince 5(4) stepping for planar systems `y' = F(x, y)`.
//!
//! Step control is the PI controller of Hairer & Wanner (dopri5): the error
//! norm is the RMS of `err_i / (atol + rtol max(|y_i|, |y_new_i|))` and the
//! next step is `h * clamp(err^-0.17 * err_prev^0.04 / 0.9)`. Integration may
//! run in either direction.

use crate::error::{Error, Result};

pub(crate) type Vec2 = [f64; 2];

/// Right-hand side of a planar system. `None` signals that the state left the
/// domain of the model; the step is then rejected and retried smaller.
pub(crate) trait PlanarSystem {
    fn rhs(&self, x: f64, y: Vec2) -> Option<Vec2>;
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// fifth minus fourth order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[inline]
fn axpy(y: Vec2, h: f64, terms: &[(f64, Vec2)]) -> Vec2 {
    let mut out = y;
    for &(c, k) in terms {
        out[0] += h * c * k[0];
        out[1] += h * c * k[1];
    }
    out
}

/// Result of one trial step.
#[derive(Debug, Clone, Copy)]
pub(crate) struct TrialStep {
    pub y: Vec2,
    pub f: Vec2,
    pub err: Vec2,
}

/// One Dormand-Prince step of (signed) size `h` from `(x, y)` with `f = F(x, y)`.
pub(crate) fn dp5_step<S: PlanarSystem>(sys: &S, x: f64, y: Vec2, f: Vec2, h: f64) -> Option<TrialStep> {
    let k1 = f;
    let k2 = sys.rhs(x + C2 * h, axpy(y, h, &[(A21, k1)]))?;
    let k3 = sys.rhs(x + C3 * h, axpy(y, h, &[(A31, k1), (A32, k2)]))?;
    let k4 = sys.rhs(x + C4 * h, axpy(y, h, &[(A41, k1), (A42, k2), (A43, k3)]))?;
    let k5 = sys.rhs(x + C5 * h, axpy(y, h, &[(A51, k1), (A52, k2), (A53, k3), (A54, k4)]))?;
    let k6 = sys.rhs(
        x + h,
        axpy(y, h, &[(A61, k1), (A62, k2), (A63, k3), (A64, k4), (A65, k5)]),
    )?;
    let y_new = axpy(y, h, &[(A71, k1), (A73, k3), (A74, k4), (A75, k5), (A76, k6)]);
    let k7 = sys.rhs(x + h, y_new)?;
    let mut err = [0.0; 2];
    for i in 0..2 {
        err[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
    }
    Some(TrialStep { y: y_new, f: k7, err })
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct StepControl {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Largest allowed |h|.
    pub max_step: f64,
    pub max_steps: usize,
}

/// An accepted step handed to the observer.
#[derive(Debug, Clone, Copy)]
pub(crate) struct AcceptedStep {
    pub x0: f64,
    pub y0: Vec2,
    pub f0: Vec2,
    pub x1: f64,
    pub y1: Vec2,
    pub f1: Vec2,
    pub err: Vec2,
}

pub(crate) enum Flow {
    Continue,
    Stop,
}

fn error_norm(ctl: &StepControl, y0: Vec2, y1: Vec2, err: Vec2) -> f64 {
    let mut acc = 0.0;
    for i in 0..2 {
        let sc = ctl.abs_tol + ctl.rel_tol * y0[i].abs().max(y1[i].abs());
        acc += (err[i] / sc).powi(2);
    }
    (acc / 2.0).sqrt()
}

fn initial_step<S: PlanarSystem>(sys: &S, ctl: &StepControl, x0: f64, y0: Vec2, f0: Vec2, dir: f64) -> f64 {
    // Hairer's starting-step heuristic, first-derivative part only.
    let scale = |i: usize| ctl.abs_tol + ctl.rel_tol * y0[i].abs();
    let d0 = ((y0[0] / scale(0)).powi(2) + (y0[1] / scale(1)).powi(2)).sqrt();
    let d1 = ((f0[0] / scale(0)).powi(2) + (f0[1] / scale(1)).powi(2)).sqrt();
    let mut h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h = h.min(ctl.max_step);
    if let Some(f1) = sys.rhs(x0 + dir * h, axpy(y0, dir * h, &[(1.0, f0)])) {
        let d2 = (((f1[0] - f0[0]) / scale(0)).powi(2) + ((f1[1] - f0[1]) / scale(1)).powi(2)).sqrt() / h;
        let big = d1.max(d2);
        let h1 = if big <= 1e-15 { (h * 1e-3).max(1e-6) } else { (0.01 / big).powf(0.2) };
        h = (100.0 * h).min(h1).min(ctl.max_step);
    }
    h
}

/// Integrate from `x0` toward `x_end`, reporting every accepted step.
///
/// Returns the final abscissa and state (where the observer stopped, or `x_end`).
pub(crate) fn drive<S, O>(
    sys: &S,
    x0: f64,
    y0: Vec2,
    x_end: f64,
    ctl: &StepControl,
    mut observer: O,
) -> Result<(f64, Vec2)>
where
    S: PlanarSystem,
    O: FnMut(&AcceptedStep) -> Result<Flow>,
{
    let dir = if x_end >= x0 { 1.0 } else { -1.0 };
    let mut x = x0;
    let mut y = y0;
    let mut f = sys
        .rhs(x, y)
        .ok_or(Error::InvalidInput(format!("initial state {y:?} is outside the model domain")))?;
    let mut h = initial_step(sys, ctl, x, y, f, dir);
    let mut err_prev: f64 = 1e-4;
    let mut rejected_last = false;
    let mut accepted = 0usize;

    while dir * (x_end - x) > 0.0 {
        if accepted >= ctl.max_steps {
            return Err(Error::StepFailure { x, step: h });
        }
        let remaining = (x_end - x).abs();
        let last = h >= remaining;
        let step = if last { remaining } else { h };
        if step <= 1e-14 * x.abs().max(1.0) {
            return Err(Error::StepFailure { x, step });
        }
        let trial = match dp5_step(sys, x, y, f, dir * step) {
            Some(t) => t,
            None => {
                h = 0.25 * step;
                rejected_last = true;
                continue;
            }
        };
        let err = error_norm(ctl, y, trial.y, trial.err);
        if !err.is_finite() {
            h = 0.25 * step;
            rejected_last = true;
            continue;
        }
        if err <= 1.0 {
            let x_new = if last { x_end } else { x + dir * step };
            let info = AcceptedStep { x0: x, y0: y, f0: f, x1: x_new, y1: trial.y, f1: trial.f, err: trial.err };
            accepted += 1;
            x = x_new;
            y = trial.y;
            f = trial.f;
            let fac = (err.max(1e-10).powf(0.17) / err_prev.powf(0.04) / 0.9).clamp(0.2, 10.0);
            let mut next = step / fac;
            if rejected_last {
                next = next.min(step);
            }
            h = next.min(ctl.max_step);
            err_prev = err.max(1e-4);
            rejected_last = false;
            if let Flow::Stop = observer(&info)? {
                break;
            }
        } else {
            let fac = (err.powf(0.2) / 0.9).min(5.0);
            h = step / fac;
            rejected_last = true;
        }
    }
    Ok((x, y))
}

/// Quintic Hermite interpolation on `[x0, x1]` from value, first and second
/// derivative at both ends. Returns `(value, derivative)` at `x`.
#[inline]
pub(crate) fn quintic_hermite(x0: f64, x1: f64, p0: [f64; 3], p1: [f64; 3], x: f64) -> (f64, f64) {
    let hh = x1 - x0;
    let t = (x - x0) / hh;
    let t2 = t * t;
    let t3 = t2 * t;
    let t4 = t3 * t;
    let t5 = t4 * t;
    let b0 = 1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5;
    let b1 = t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5;
    let b2 = 0.5 * (t2 - 3.0 * t3 + 3.0 * t4 - t5);
    let b3 = 0.5 * (t3 - 2.0 * t4 + t5);
    let b4 = -4.0 * t3 + 7.0 * t4 - 3.0 * t5;
    let b5 = 10.0 * t3 - 15.0 * t4 + 6.0 * t5;
    let d0 = -30.0 * t2 + 60.0 * t3 - 30.0 * t4;
    let d1 = 1.0 - 18.0 * t2 + 32.0 * t3 - 15.0 * t4;
    let d2 = 0.5 * (2.0 * t - 9.0 * t2 + 12.0 * t3 - 5.0 * t4);
    let d3 = 0.5 * (3.0 * t2 - 8.0 * t3 + 5.0 * t4);
    let d4 = -12.0 * t2 + 28.0 * t3 - 15.0 * t4;
    let d5 = 30.0 * t2 - 60.0 * t3 + 30.0 * t4;
    let value = b0 * p0[0] + b5 * p1[0] + hh * (b1 * p0[1] + b4 * p1[1]) + hh * hh * (b2 * p0[2] + b3 * p1[2]);
    let slope = (d0 * p0[0] + d5 * p1[0]) / hh + d1 * p0[1] + d4 * p1[1] + hh * (d2 * p0[2] + d3 * p1[2]);
    (value, slope)
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Harmonic;
    impl PlanarSystem for Harmonic {
        fn rhs(&self, _x: f64, y: Vec2) -> Option<Vec2> {
            Some([y[1], -y[0]])
        }
    }

    fn ctl(tol: f64) -> StepControl {
        StepControl { rel_tol: tol, abs_tol: tol, max_step: 1.0, max_steps: 1_000_000 }
    }

    #[test]
    fn harmonic_oscillator_forward_and_backward() {
        let (x, y) = drive(&Harmonic, 0.0, [1.0, 0.0], 10.0, &ctl(1e-11), |_| Ok(Flow::Continue)).unwrap();
        assert_eq!(x, 10.0);
        assert!((y[0] - 10f64.cos()).abs() < 1e-9);
        assert!((y[1] + 10f64.sin()).abs() < 1e-9);
        let (_, back) = drive(&Harmonic, 10.0, y, 0.0, &ctl(1e-11), |_| Ok(Flow::Continue)).unwrap();
        assert!((back[0] - 1.0).abs() < 1e-8 && back[1].abs() < 1e-8);
    }

    #[test]
    fn fifth_order_convergence_of_single_steps() {
        // local error of a order-5 method scales like h^6
        let e = |h: f64| {
            let s = dp5_step(&Harmonic, 0.0, [1.0, 0.0], [0.0, -1.0], h).unwrap();
            (s.y[0] - h.cos()).abs()
        };
        let ratio = e(0.2) / e(0.1);
        assert!(ratio > 40.0 && ratio < 90.0, "ratio {ratio}");
    }

    #[test]
    fn quintic_hermite_reproduces_quintics() {
        let p = |x: f64| 1.0 - 2.0 * x + 0.5 * x * x + 3.0 * x.powi(3) - x.powi(4) + 0.25 * x.powi(5);
        let dp = |x: f64| -2.0 + x + 9.0 * x * x - 4.0 * x.powi(3) + 1.25 * x.powi(4);
        let ddp = |x: f64| 1.0 + 18.0 * x - 12.0 * x * x + 5.0 * x.powi(3);
        let (a, b) = (0.3, 1.7);
        for i in 0..=10 {
            let x = a + (b - a) * i as f64 / 10.0;
            let (v, d) = quintic_hermite(a, b, [p(a), dp(a), ddp(a)], [p(b), dp(b), ddp(b)], x);
            assert!((v - p(x)).abs() < 1e-12);
            assert!((d - dp(x)).abs() < 1e-11);
        }
    }
}
