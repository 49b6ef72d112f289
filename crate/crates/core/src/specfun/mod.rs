//! Special functions and the closed-form time integrals produced by the
//! Laplace-type transform `e^delta * int_{-inf}^{-delta} e^t u(t) dt`.

pub mod quadrature;

pub use quadrature::{
    gauss_legendre, integrate, integrate_to_neg_cutoff, CompositeRule, QuadResult,
    QuadratureSettings,
};

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

use crate::error::{check_delta_half_open, Error, Result};

pub const SQRT_PI: f64 = 1.772_453_850_905_516_f64;
const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7_f64;

/// Error function, accurate to a few ulp.
pub fn erf(z: f64) -> f64 {
    libm::erf(z)
}

/// Complementary error function `1 - erf(z)` without cancellation.
pub fn erfc(z: f64) -> f64 {
    libm::erfc(z)
}

/// Standard normal density.
#[inline]
pub fn norm_pdf(z: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * z * z).exp()
}

/// Standard normal distribution function.
#[inline]
pub fn norm_cdf(z: f64) -> f64 {
    0.5 * erfc(-z * FRAC_1_SQRT_2)
}

/// Upper tail `1 - Phi(z)`.
#[inline]
pub fn norm_sf(z: f64) -> f64 {
    0.5 * erfc(z * FRAC_1_SQRT_2)
}

fn require_n(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidArgument("need at least one variable".into()));
    }
    Ok(())
}

/// `E[max_i Y_i]` for `n` independent standard normals.
///
/// Integrates the distribution function of the maximum:
/// `int_0^inf (1 - Phi^n) - int_{-inf}^0 Phi^n`.
pub fn gaussian_max_expectation(n: usize) -> Result<f64> {
    require_n(n)?;
    if n == 1 {
        return Ok(0.0);
    }
    let nf = n as f64;
    let s = QuadratureSettings::precise();
    let upper = 9.0 + (2.0 * nf.ln()).sqrt();
    let pos = integrate(|t| -(nf * (-norm_sf(t)).ln_1p()).exp_m1(), 0.0, upper, &s)?;
    let neg = integrate(|t| (nf * norm_cdf(t).ln()).exp(), -10.0, 0.0, &s)?;
    Ok(pos.value - neg.value)
}

/// `E[max_i |Y_i|]` for `n` independent standard normals.
pub fn gaussian_absmax_expectation(n: usize) -> Result<f64> {
    require_n(n)?;
    let nf = n as f64;
    let s = QuadratureSettings::precise();
    let upper = 9.0 + (2.0 * nf.ln()).sqrt();
    let r = integrate(
        |t| {
            // P(|Y| <= t) = erf(t / sqrt 2) = 1 - erfc(t / sqrt 2)
            let tail = erfc(t * FRAC_1_SQRT_2);
            let log_cdf = if tail < 0.5 {
                (-tail).ln_1p()
            } else {
                erf(t * FRAC_1_SQRT_2).ln()
            };
            -(nf * log_cdf).exp_m1()
        },
        0.0,
        upper,
        &s,
    )?;
    Ok(r.value)
}

/// `int_{-inf}^{-delta} e^t sqrt(-t) dt = e^{-delta} sqrt(delta) + (sqrt(pi)/2) erfc(sqrt(delta))`.
pub fn laplace_sqrt_integral(delta: f64) -> Result<f64> {
    check_delta_half_open(delta)?;
    Ok(sqrt_moment_tail(delta))
}

/// Same integral without the domain check; also used for tail masses.
pub(crate) fn sqrt_moment_tail(c: f64) -> f64 {
    (-c).exp() * c.sqrt() + 0.5 * SQRT_PI * erfc(c.sqrt())
}

/// `int_{-inf}^{-delta} e^t |t|^{-3/2} dt = 2 e^{-delta} / sqrt(delta) - 2 sqrt(pi) erfc(sqrt(delta))`.
pub fn laplace_inv32_integral(delta: f64) -> Result<f64> {
    check_delta_half_open(delta)?;
    Ok(2.0 * (-delta).exp() / delta.sqrt() - 2.0 * SQRT_PI * erfc(delta.sqrt()))
}

/// Bound `e^delta int_{-inf}^{-delta} e^t / |t| dt <= 1 + log(1/delta)`.
pub fn laplace_inv1_bound(delta: f64) -> Result<f64> {
    check_delta_half_open(delta)?;
    let bound = 1.0 + (1.0 / delta).ln();
    debug_assert!(scaled_exponential_integral(delta).map_or(true, |v| v <= bound));
    Ok(bound)
}

/// `e^delta E_1(delta) = int_0^inf e^{-u} / (u + delta) du`, by quadrature.
pub fn scaled_exponential_integral(delta: f64) -> Result<f64> {
    check_delta_half_open(delta)?;
    let s = QuadratureSettings::precise();
    // u = e^v - delta spreads the 1/(u + delta) peak over a log scale
    let lo = delta.ln();
    let r = integrate(
        |v| {
            let u = v.exp() - delta;
            (-u).exp()
        },
        lo,
        (delta + 45.0).ln(),
        &s,
    )?;
    Ok(r.value)
}

/// `f(z) = sqrt(2/pi) e^{-z^2/2} + z erf(z / sqrt 2)`, the profile of the
/// max potential; `f'(z) = erf(z / sqrt 2)`.
#[inline]
pub fn max_profile(z: f64) -> f64 {
    (2.0 / PI).sqrt() * (-0.5 * z * z).exp() + z * erf(z / SQRT_2)
}
