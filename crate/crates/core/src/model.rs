//! Problem parameters, derived constants and the scalar nonlinearities.
//!
//! The radial steady-state equation is
//!
//! ```text
//! h'' + (N-1)/r h' + f(h) = 0,     f(h) = p - h^(-alpha)/alpha
//! ```
//!
//! and near a rupture point the profile is written `h = c* phi(r) r^(2/(alpha+1))`,
//! which turns the nonlinearity into `g(phi)` with antiderivative `G(phi)`.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

/// The problem triple `(alpha, N, p)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Params {
    alpha: f64,
    dim: u32,
    pressure: f64,
}

impl Params {
    pub fn new(alpha: f64, dim: u32, pressure: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 1.0) {
            return Err(Error::InvalidParams(format!("alpha must be > 1, got {alpha}")));
        }
        if dim < 2 {
            return Err(Error::InvalidParams(format!("dimension must be >= 2, got {dim}")));
        }
        if !(pressure.is_finite() && pressure > 0.0) {
            return Err(Error::InvalidParams(format!("pressure must be > 0, got {pressure}")));
        }
        Ok(Self { alpha, dim, pressure })
    }

    /// Parameters at the canonical pressure `1/alpha`, where `xi = 1`.
    pub fn canonical(alpha: f64, dim: u32) -> Result<Self> {
        Self::new(alpha, dim, 1.0 / alpha)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn dim(&self) -> u32 {
        self.dim
    }

    pub fn pressure(&self) -> f64 {
        self.pressure
    }

    pub(crate) fn n(&self) -> f64 {
        f64::from(self.dim)
    }

    /// Same exponent and dimension at a different pressure.
    pub fn with_pressure(&self, pressure: f64) -> Result<Self> {
        Self::new(self.alpha, self.dim, pressure)
    }

    /// Flat-solution height `xi = (alpha p)^(-1/alpha)`.
    pub fn xi(&self) -> f64 {
        (self.alpha * self.pressure).powf(-1.0 / self.alpha)
    }

    /// Natural radial length scale `(alpha p)^(-(1+alpha)/(2 alpha))`.
    pub fn length_scale(&self) -> f64 {
        (self.alpha * self.pressure).powf(-(1.0 + self.alpha) / (2.0 * self.alpha))
    }

    #[inline]
    pub(crate) fn f_raw(&self, h: f64) -> f64 {
        self.pressure - h.powf(-self.alpha) / self.alpha
    }

    #[inline]
    pub(crate) fn f_prime_raw(&self, h: f64) -> f64 {
        h.powf(-self.alpha - 1.0)
    }

    #[inline]
    pub(crate) fn big_f_raw(&self, h: f64) -> f64 {
        h.powf(1.0 - self.alpha) / (self.alpha * (self.alpha - 1.0)) + self.pressure * h
    }
}

/// Roots `a1, a2` of `lambda^2 - A lambda + g'(1) = 0`.
///
/// Always stored as complex numbers; when the discriminant is nonnegative the
/// imaginary parts are exactly zero and `a1 >= a2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExponentPair {
    pub a1: (f64, f64),
    pub a2: (f64, f64),
}

impl ExponentPair {
    pub fn a1(&self) -> Complex64 {
        Complex64::new(self.a1.0, self.a1.1)
    }

    pub fn a2(&self) -> Complex64 {
        Complex64::new(self.a2.0, self.a2.1)
    }

    pub fn is_complex(&self) -> bool {
        self.a1.1 != 0.0
    }

    /// Shortcut for the real case; `None` when the pair is complex.
    pub fn real_parts(&self) -> Option<(f64, f64)> {
        (!self.is_complex()).then_some((self.a1.0, self.a2.0))
    }

    pub fn min_real_part(&self) -> f64 {
        self.a1.0.min(self.a2.0)
    }
}

/// Closed-form constants attached to a parameter triple.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivedConstants {
    /// Flat height `xi`.
    pub xi: f64,
    /// Rupture amplitude `c*`.
    pub c_star: f64,
    /// `A = N - 2 + 4/(alpha+1)`.
    pub cap_a: f64,
    /// Forcing coefficient `C = p / c*`.
    pub cap_c: f64,
    /// `g'(1) = 2 (N - 2 + 2/(alpha+1))`.
    pub g_prime_1: f64,
    pub exponents: ExponentPair,
    /// Forcing exponent `2 alpha/(alpha+1)`.
    pub beta: f64,
    /// Limit of consecutive critical-radius spacings.
    pub spacing_limit: f64,
}

impl DerivedConstants {
    /// Amplitude of the leading corrector `phi - 1 ~ kappa r^beta`.
    pub fn kappa(&self) -> f64 {
        -self.cap_c / (self.beta * self.beta + self.cap_a * self.beta + self.g_prime_1)
    }

    /// Growth exponent `2/(alpha+1)` of rupture profiles at the origin.
    pub fn rupture_exponent(&self) -> f64 {
        2.0 - self.beta
    }
}

pub fn derive_constants(params: &Params) -> DerivedConstants {
    let alpha = params.alpha;
    let n = params.n();
    let mid = n - 2.0 + 2.0 / (alpha + 1.0);
    let c_star = (2.0 * alpha / (alpha + 1.0) * mid).powf(-1.0 / (alpha + 1.0));
    let cap_a = n - 2.0 + 4.0 / (alpha + 1.0);
    let g_prime_1 = 2.0 * mid;
    let disc = cap_a * cap_a - 4.0 * g_prime_1;
    let exponents = if disc >= 0.0 {
        // larger root first, smaller from the product to avoid cancellation
        let a1 = 0.5 * (cap_a + disc.sqrt());
        ExponentPair { a1: (a1, 0.0), a2: (g_prime_1 / a1, 0.0) }
    } else {
        let im = 0.5 * (-disc).sqrt();
        ExponentPair { a1: (0.5 * cap_a, im), a2: (0.5 * cap_a, -im) }
    };
    DerivedConstants {
        xi: params.xi(),
        c_star,
        cap_a,
        cap_c: params.pressure / c_star,
        g_prime_1,
        exponents,
        beta: 2.0 * alpha / (alpha + 1.0),
        spacing_limit: std::f64::consts::PI * params.length_scale(),
    }
}

fn check_positive(function: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain { function, value })
    }
}

/// `f(h) = p - h^(-alpha)/alpha`.
pub fn f_eval(params: &Params, h: f64) -> Result<f64> {
    check_positive("f", h)?;
    Ok(params.f_raw(h))
}

/// `F(h) = h^(1-alpha)/(alpha(alpha-1)) + p h`, the convex antiderivative of `f`.
pub fn big_f_eval(params: &Params, h: f64) -> Result<f64> {
    check_positive("F", h)?;
    Ok(params.big_f_raw(h))
}

#[inline]
pub(crate) fn g_coefficient(params: &Params) -> f64 {
    let a = params.alpha;
    2.0 / (a + 1.0) * (params.n() - 2.0 + 2.0 / (a + 1.0))
}

#[inline]
pub(crate) fn g_raw(params: &Params, phi: f64) -> f64 {
    g_coefficient(params) * (phi - phi.powf(-params.alpha))
}

#[inline]
pub(crate) fn big_g_raw(params: &Params, phi: f64) -> f64 {
    let a = params.alpha;
    g_coefficient(params) * (0.5 * phi * phi + phi.powf(1.0 - a) / (a - 1.0))
}

/// `g(phi)`, the nonlinearity of the rescaled rupture equation.
pub fn g_eval(params: &Params, phi: f64) -> Result<f64> {
    check_positive("g", phi)?;
    Ok(g_raw(params, phi))
}

/// `G(phi)` with `G' = g`; minimal at `phi = 1`.
pub fn big_g_eval(params: &Params, phi: f64) -> Result<f64> {
    check_positive("G", phi)?;
    Ok(big_g_raw(params, phi))
}

/// `g~(psi) = g(1 + psi) - g'(1) psi`, quadratic at the origin.
#[inline]
pub(crate) fn g_tilde(params: &Params, g_prime_1: f64, psi: f64) -> f64 {
    g_raw(params, 1.0 + psi) - g_prime_1 * psi
}

#[cfg(test)]
mod tests {
    use super::*;

    fn canonical() -> Params {
        Params::new(3.0, 2, 1.0 / 3.0).unwrap()
    }

    #[test]
    fn construction_rejects_bad_triples() {
        assert!(Params::new(1.0, 2, 1.0).is_err());
        assert!(Params::new(0.5, 2, 1.0).is_err());
        assert!(Params::new(3.0, 1, 1.0).is_err());
        assert!(Params::new(3.0, 2, 0.0).is_err());
        assert!(Params::new(3.0, 2, -1.0).is_err());
        assert!(Params::new(f64::NAN, 2, 1.0).is_err());
    }

    #[test]
    fn domain_errors_are_reported() {
        let p = canonical();
        assert!(matches!(f_eval(&p, 0.0), Err(Error::Domain { .. })));
        assert!(matches!(big_f_eval(&p, -1.0), Err(Error::Domain { .. })));
        assert!(matches!(g_eval(&p, 0.0), Err(Error::Domain { .. })));
        assert!(matches!(big_g_eval(&p, -2.0), Err(Error::Domain { .. })));
    }

    #[test]
    fn f_vanishes_at_xi_and_tends_to_minus_infinity() {
        for &(a, n, pr) in &[(3.0, 2, 1.0 / 3.0), (2.5, 3, 0.7), (1.5, 5, 4.0)] {
            let p = Params::new(a, n, pr).unwrap();
            let xi = p.xi();
            assert!(f_eval(&p, xi).unwrap().abs() < 1e-15 * pr.max(1.0));
        }
        let p = canonical();
        assert!(f_eval(&p, 1e-6).unwrap() < -1e17);
    }

    #[test]
    fn g_prime_at_one_matches_constant() {
        for &(a, n) in &[(3.0, 2), (3.0, 10), (1.7, 4)] {
            let p = Params::canonical(a, n).unwrap();
            let c = derive_constants(&p);
            let eps = 1e-5;
            let fd = (g_raw(&p, 1.0 + eps) - g_raw(&p, 1.0 - eps)) / (2.0 * eps);
            assert!((fd - c.g_prime_1).abs() < 1e-8, "{fd} vs {}", c.g_prime_1);
        }
    }

    #[test]
    fn g_tilde_is_quadratic_at_zero() {
        let p = canonical();
        let c = derive_constants(&p);
        for &s in &[1e-2, 1e-3, 1e-4] {
            let ratio = g_tilde(&p, c.g_prime_1, s) / (s * s);
            // g''(1)/2 = -coef alpha (alpha + 1)/2 with coef = 1/4
            assert!((ratio + 0.25 * 3.0 * 4.0 / 2.0).abs() < 20.0 * s);
        }
    }

    #[test]
    fn real_exponent_branch_is_ordered() {
        let p = Params::canonical(3.0, 10).unwrap();
        let c = derive_constants(&p);
        let (a1, a2) = c.exponents.real_parts().expect("real pair at N = 10");
        assert!(a1 > a2 && a2 > 0.0);
        assert!(derive_constants(&canonical()).exponents.real_parts().is_none());
    }
}
