//! Explicit regret bounds, diffusion factors and error terms.
//!
//! Error constants are estimated in scale-free variables. Both diffusive
//! potentials satisfy `u(x, t) = sigma F(x / sigma)` with
//! `sigma = sqrt(2 kappa |t|)`, hence
//! `|t| |D^3 u[q,q,q]| = |D^3 F(z)[q,q,q]| / (2 kappa)` and
//! `|t|^{3/2} |D^4 u[q,q,q,q]| = |D^4 F(z)[q,q,q,q]| / (2 kappa)^{3/2}`.
//! The suprema over `z` do not depend on `delta` and are sampled once per `N`.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_delta_open, Error, Result};
use crate::potentials::{
    directional_from_gradient, heat_gradient_fixed, max_gradient_fixed, Family, Side,
};
use crate::specfun::{
    erfc, gaussian_max_expectation, laplace_inv1_bound, laplace_inv32_integral, SQRT_PI,
};
use crate::strategies::heat_adversary_support;

fn check_n(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("need N >= 2, got {n}")));
    }
    Ok(())
}

/// Lower-bound heat factor: `(1-delta)/delta` times 1, `1/2 + 1/(2N)` (odd N)
/// or `1/2 + 1/(2N-2)` (even N > 2).
pub fn kappa_s(n: usize, delta: f64) -> Result<f64> {
    check_n(n)?;
    check_delta_open(delta)?;
    let base = (1.0 - delta) / delta;
    let nf = n as f64;
    Ok(if n == 2 {
        base
    } else if n % 2 == 1 {
        base * (0.5 + 0.5 / nf)
    } else {
        base * (0.5 + 0.5 / (nf - 1.0))
    })
}

/// Upper-bound max factor: `N^2 / (2(N-1))` (even N) or `(N+1)/2` (odd N)
/// times `(1-delta)/delta`.
pub fn kappa_m(n: usize, delta: f64) -> Result<f64> {
    check_n(n)?;
    check_delta_open(delta)?;
    let base = (1.0 - delta) / delta;
    let nf = n as f64;
    Ok(if n.is_multiple_of(2) {
        base * nf * nf / (2.0 * (nf - 1.0))
    } else {
        base * (nf + 1.0) / 2.0
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiffusionConstants {
    pub kappa_s: f64,
    pub kappa_heat_ub: f64,
    pub kappa_max_lb: f64,
    pub kappa_m: f64,
}

impl DiffusionConstants {
    pub fn new(n: usize, delta: f64) -> Result<Self> {
        let base = {
            check_delta_open(delta)?;
            (1.0 - delta) / delta
        };
        Ok(Self {
            kappa_s: kappa_s(n, delta)?,
            kappa_heat_ub: base,
            kappa_max_lb: 2.0 * base,
            kappa_m: kappa_m(n, delta)?,
        })
    }

    pub fn for_potential(&self, family: Family, side: Side) -> Option<f64> {
        match (family, side) {
            (Family::Heat, Side::Lower) => Some(self.kappa_s),
            (Family::Heat, Side::Upper) => Some(self.kappa_heat_ub),
            (Family::Max, Side::Lower) => Some(self.kappa_max_lb),
            (Family::Max, Side::Upper) => Some(self.kappa_m),
            (Family::ExpWeights, _) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorMode {
    /// Error terms switched off (pure potential curves).
    None,
    UserSupplied,
    NumericallyEstimated,
}

impl ErrorMode {
    pub fn name(self) -> &'static str {
        match self {
            ErrorMode::None => "none",
            ErrorMode::UserSupplied => "user_supplied",
            ErrorMode::NumericallyEstimated => "numerically_estimated",
        }
    }
}

/// Sampled suprema of scale-free derivatives, valid for every `delta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampledMaxima {
    pub n: usize,
    /// `sup |D^3 F[q,q,q]|`, heat, `q` in the heat adversary support.
    pub m3_heat_support: f64,
    /// `sup |D^4 F[q,q,q,q]|`, heat, `q` in the heat adversary support.
    pub m4_heat_support: f64,
    /// `sup |D^3 F[q,q,q]|`, heat, `q` in the cube.
    pub m3_heat_cube: f64,
    /// `sup |D^3 G[q,q,q]|`, max, `q` a one-plus-rest-minus sign vector.
    pub m3_max_argmax: f64,
    /// `sup |D^3 G[q,q,q]|`, max, `q` in the cube.
    pub m3_max_cube: f64,
    /// Number of `(z, q)` evaluations behind the maxima.
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimationSettings {
    /// Random points in `z`; half in a ball of radius 12, half in `[-3, 3]^N`.
    pub samples: usize,
    /// Random cube directions added to the sign vectors.
    pub cube_directions: usize,
    /// Local search steps from each of the best few points.
    pub refine_steps: usize,
    pub seed: u64,
}

impl Default for EstimationSettings {
    fn default() -> Self {
        Self {
            samples: 400,
            cube_directions: 8,
            refine_steps: 30,
            seed: 0x6e57_1a7e,
        }
    }
}

type GradFn = fn(&[f64], &mut [f64]);

fn heat_unit_gradient(z: &[f64], out: &mut [f64]) {
    // sigma = sqrt(2 * 1 * 0.5) = 1
    let g = heat_gradient_fixed(z, -0.5, 1.0).expect("finite state");
    out.copy_from_slice(g.as_slice());
}

fn max_unit_gradient(z: &[f64], out: &mut [f64]) {
    let g = max_gradient_fixed(z, -0.5, 1.0).expect("finite state");
    out.copy_from_slice(g.as_slice());
}

fn sup_over(grad: GradFn, ranked: bool, z: &[f64], qs: &[Vec<f64>], order: u8) -> f64 {
    qs.iter()
        .map(|q| {
            directional_from_gradient(grad, z, q, order, ranked)
                .map(|e| e.value.abs())
                .unwrap_or(0.0)
        })
        .fold(0.0, f64::max)
}

fn uniform_ball(rng: &mut ChaCha8Rng, n: usize, radius: f64) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let r2: f64 = v.iter().map(|a| a * a).sum();
        if r2 <= 1.0 && r2 > 0.0 {
            return v.into_iter().map(|a| a * radius).collect();
        }
    }
}

/// Sampled maximum followed by a shrinking random local search.
fn maximize(
    grad: GradFn,
    ranked: bool,
    qs: &[Vec<f64>],
    order: u8,
    points: &[Vec<f64>],
    settings: &EstimationSettings,
) -> (f64, usize) {
    let scored: Vec<(f64, usize)> = points
        .par_iter()
        .enumerate()
        .map(|(k, z)| (sup_over(grad, ranked, z, qs, order), k))
        .collect();
    let mut evaluations = points.len() * qs.len();
    let mut ranked_pts = scored.clone();
    ranked_pts.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut best = ranked_pts.first().map(|p| p.0).unwrap_or(0.0);
    let starts: Vec<usize> = ranked_pts.iter().take(3).map(|p| p.1).collect();
    for (s, &k) in starts.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(settings.seed ^ (0x9e37 + s as u64));
        let mut z = points[k].clone();
        let mut val = scored[k].0;
        let mut step = 0.5;
        for _ in 0..settings.refine_steps {
            let cand: Vec<f64> = z
                .iter()
                .map(|a| a + step * rng.gen_range(-1.0..1.0))
                .collect();
            let v = sup_over(grad, ranked, &cand, qs, order);
            evaluations += qs.len();
            if v > val {
                val = v;
                z = cand;
            } else {
                step *= 0.8;
            }
        }
        best = best.max(val);
    }
    (best, evaluations)
}

impl SampledMaxima {
    pub fn estimate(n: usize, settings: &EstimationSettings) -> Result<Self> {
        check_n(n)?;
        if settings.samples == 0 {
            return Err(Error::InvalidArgument("need at least one sample".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(settings.seed ^ n as u64);
        let mut points: Vec<Vec<f64>> = Vec::with_capacity(settings.samples + 2);
        points.push(vec![0.0; n]);
        let mut near_tie = vec![0.0; n];
        near_tie[0] = 0.3;
        points.push(near_tie);
        for k in 0..settings.samples {
            if k % 2 == 0 {
                points.push(uniform_ball(&mut rng, n, 12.0));
            } else {
                points.push((0..n).map(|_| rng.gen_range(-3.0..3.0)).collect());
            }
        }

        let support: Vec<Vec<f64>> = heat_adversary_support(n)?
            .into_iter()
            .map(|q| q.as_slice().to_vec())
            .collect();
        // sign vectors up to global sign, plus random interior directions
        let mut cube: Vec<Vec<f64>> = (0..1u64 << (n - 1))
            .map(|mask| {
                (0..n)
                    .map(|i| if mask >> i & 1 == 1 { -1.0 } else { 1.0 })
                    .collect()
            })
            .collect();
        for _ in 0..settings.cube_directions {
            cube.push((0..n).map(|_| rng.gen_range(-1.0..1.0)).collect());
        }
        let argmax_dirs: Vec<Vec<f64>> = (0..n)
            .map(|k| (0..n).map(|i| if i == k { 1.0 } else { -1.0 }).collect())
            .collect();

        let (m3_heat_support, e1) =
            maximize(heat_unit_gradient, false, &support, 3, &points, settings);
        let (m4_heat_support, e2) =
            maximize(heat_unit_gradient, false, &support, 4, &points, settings);
        let (m3_heat_cube, e3) = maximize(heat_unit_gradient, false, &cube, 3, &points, settings);
        let (m3_max_argmax, e4) =
            maximize(max_unit_gradient, true, &argmax_dirs, 3, &points, settings);
        let (m3_max_cube, e5) = maximize(max_unit_gradient, true, &cube, 3, &points, settings);
        Ok(Self {
            n,
            m3_heat_support,
            m4_heat_support,
            m3_heat_cube,
            m3_max_argmax,
            m3_max_cube,
            evaluations: e1 + e2 + e3 + e4 + e5,
        })
    }
}

/// Constants `K` with `|D^3 u| <= K_3 / |t|` and `|D^4 u| <= K_4 / |t|^{3/2}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorConstants {
    pub k3_heat_lb: f64,
    pub k4_heat_lb: f64,
    pub k3_heat_ub: f64,
    pub k3_max_lb: f64,
    pub k3_max_ub: f64,
    pub mode: ErrorMode,
    /// Present when the constants were estimated.
    pub sampled: Option<SampledMaxima>,
}

impl ErrorConstants {
    /// All error terms zero.
    pub fn zero() -> Self {
        Self {
            k3_heat_lb: 0.0,
            k4_heat_lb: 0.0,
            k3_heat_ub: 0.0,
            k3_max_lb: 0.0,
            k3_max_ub: 0.0,
            mode: ErrorMode::None,
            sampled: None,
        }
    }

    pub fn user_supplied(
        k3_heat_lb: f64,
        k4_heat_lb: f64,
        k3_heat_ub: f64,
        k3_max_lb: f64,
        k3_max_ub: f64,
    ) -> Result<Self> {
        let ks = [k3_heat_lb, k4_heat_lb, k3_heat_ub, k3_max_lb, k3_max_ub];
        if ks.iter().any(|k| !(k.is_finite() && *k > 0.0)) {
            return Err(Error::InvalidArgument(
                "error constants must be positive".into(),
            ));
        }
        Ok(Self {
            k3_heat_lb,
            k4_heat_lb,
            k3_heat_ub,
            k3_max_lb,
            k3_max_ub,
            mode: ErrorMode::UserSupplied,
            sampled: None,
        })
    }

    /// Rescales sampled maxima by the diffusion factors at `delta`.
    pub fn from_maxima(m: &SampledMaxima, delta: f64) -> Result<Self> {
        let dc = DiffusionConstants::new(m.n, delta)?;
        let k3 = |mx: f64, kappa: f64| mx / (2.0 * kappa);
        Ok(Self {
            k3_heat_lb: k3(m.m3_heat_support, dc.kappa_s),
            k4_heat_lb: m.m4_heat_support / (2.0 * dc.kappa_s).powf(1.5),
            k3_heat_ub: k3(m.m3_heat_cube, dc.kappa_heat_ub),
            k3_max_lb: k3(m.m3_max_argmax, dc.kappa_max_lb),
            k3_max_ub: k3(m.m3_max_cube, dc.kappa_m),
            mode: ErrorMode::NumericallyEstimated,
            sampled: Some(*m),
        })
    }

    pub fn estimate(n: usize, delta: f64, settings: &EstimationSettings) -> Result<Self> {
        check_delta_open(delta)?;
        Self::from_maxima(&SampledMaxima::estimate(n, settings)?, delta)
    }
}

/// `(1-delta)/(6 delta) K_3 (1 + log(1/delta))`.
pub fn third_order_error(k3: f64, delta: f64) -> Result<f64> {
    check_delta_open(delta)?;
    Ok((1.0 - delta) / (6.0 * delta) * k3 * laplace_inv1_bound(delta)?)
}

/// `(1-delta)/(24 delta) K_4 (2/sqrt(delta) - 2 e^delta sqrt(pi) erfc(sqrt(delta)))`.
pub fn fourth_order_error(k4: f64, delta: f64) -> Result<f64> {
    check_delta_open(delta)?;
    Ok((1.0 - delta) / (24.0 * delta) * k4 * delta.exp() * laplace_inv32_integral(delta)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorTerms {
    pub heat_lower: f64,
    pub heat_upper: f64,
    pub max_lower: f64,
    pub max_upper: f64,
}

impl ErrorTerms {
    pub fn new(ec: &ErrorConstants, delta: f64) -> Result<Self> {
        Ok(Self {
            heat_lower: third_order_error(ec.k3_heat_lb, delta)?
                .min(fourth_order_error(ec.k4_heat_lb, delta)?),
            heat_upper: third_order_error(ec.k3_heat_ub, delta)?,
            max_lower: third_order_error(ec.k3_max_lb, delta)?,
            max_upper: third_order_error(ec.k3_max_ub, delta)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub family: Family,
    pub side: Side,
    pub n: usize,
    pub delta: f64,
    pub potential_at_zero: f64,
    pub error_term: f64,
    pub bound: f64,
    pub c_n: f64,
    pub error_mode: ErrorMode,
}

impl BoundReport {
    fn new(
        family: Family,
        side: Side,
        n: usize,
        delta: f64,
        potential_at_zero: f64,
        error_term: f64,
        error_mode: ErrorMode,
    ) -> Self {
        let bound = match side {
            Side::Lower => potential_at_zero - error_term,
            Side::Upper => potential_at_zero + error_term,
        };
        Self {
            family,
            side,
            n,
            delta,
            potential_at_zero,
            error_term,
            bound,
            c_n: bound * delta.sqrt(),
            error_mode,
        }
    }
}

/// `sqrt(2 (1-delta) log N / delta)`, with no error term.
pub fn exp_weights_bound(n: usize, delta: f64) -> Result<BoundReport> {
    check_n(n)?;
    check_delta_open(delta)?;
    let v = (2.0 * (1.0 - delta) * (n as f64).ln() / delta).sqrt();
    Ok(BoundReport::new(
        Family::ExpWeights,
        Side::Upper,
        n,
        delta,
        v,
        0.0,
        ErrorMode::None,
    ))
}

/// `phi_hat(0) = sqrt(2 kappa) E max Y (sqrt(delta) + e^delta (sqrt(pi)/2) erfc(sqrt(delta)))`.
pub fn heat_transform_at_zero(n: usize, delta: f64, kappa: f64) -> Result<f64> {
    check_n(n)?;
    check_delta_open(delta)?;
    let emax = gaussian_max_expectation(n)?;
    Ok((2.0 * kappa).sqrt()
        * emax
        * (delta.sqrt() + delta.exp() * 0.5 * SQRT_PI * erfc(delta.sqrt())))
}

/// `psi_hat(0) = ((N-1)/N) sqrt(kappa) (e^delta erfc(sqrt(delta)) + (2/sqrt(pi)) sqrt(delta))`.
pub fn max_transform_at_zero(n: usize, delta: f64, kappa: f64) -> Result<f64> {
    check_n(n)?;
    check_delta_open(delta)?;
    let nf = n as f64;
    Ok((nf - 1.0) / nf
        * kappa.sqrt()
        * (delta.exp() * erfc(delta.sqrt()) + 2.0 / SQRT_PI * delta.sqrt()))
}

fn heat_shift(n: usize, delta: f64, kappa: f64) -> Result<f64> {
    Ok((2.0 * kappa * delta).sqrt() * gaussian_max_expectation(n)?)
}

fn max_shift(n: usize, delta: f64, kappa: f64) -> f64 {
    let nf = n as f64;
    2.0 * (kappa * delta / PI).sqrt() * (nf - 1.0) / nf
}

pub fn heat_bounds(
    n: usize,
    delta: f64,
    ec: &ErrorConstants,
) -> Result<(BoundReport, BoundReport)> {
    let dc = DiffusionConstants::new(n, delta)?;
    let e = ErrorTerms::new(ec, delta)?;
    let lower = heat_transform_at_zero(n, delta, dc.kappa_s)? - heat_shift(n, delta, dc.kappa_s)?;
    let upper = heat_transform_at_zero(n, delta, dc.kappa_heat_ub)?
        + heat_shift(n, delta, dc.kappa_heat_ub)?;
    Ok((
        BoundReport::new(
            Family::Heat,
            Side::Lower,
            n,
            delta,
            lower,
            e.heat_lower,
            ec.mode,
        ),
        BoundReport::new(
            Family::Heat,
            Side::Upper,
            n,
            delta,
            upper,
            e.heat_upper,
            ec.mode,
        ),
    ))
}

/// The upper report uses `psi_hat(0) + C` (the `4/sqrt(pi)` form), which
/// exceeds the potential `psi_hat(0)` itself.
pub fn max_bounds(n: usize, delta: f64, ec: &ErrorConstants) -> Result<(BoundReport, BoundReport)> {
    let dc = DiffusionConstants::new(n, delta)?;
    let e = ErrorTerms::new(ec, delta)?;
    let lower =
        max_transform_at_zero(n, delta, dc.kappa_max_lb)? - max_shift(n, delta, dc.kappa_max_lb);
    let upper = max_transform_at_zero(n, delta, dc.kappa_m)? + max_shift(n, delta, dc.kappa_m);
    Ok((
        BoundReport::new(
            Family::Max,
            Side::Lower,
            n,
            delta,
            lower,
            e.max_lower,
            ec.mode,
        ),
        BoundReport::new(
            Family::Max,
            Side::Upper,
            n,
            delta,
            upper,
            e.max_upper,
            ec.mode,
        ),
    ))
}

/// Reference curves for comparison plots.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonCurves {
    pub n: usize,
    pub delta: f64,
    /// Minimax-style upper bound `sqrt(2 log N / delta)` for exponential weights.
    pub gravin_upper: f64,
    /// Asymptotic lower bound `sqrt(log N / (2 delta))`.
    pub gravin_ew_lower_asymptote: f64,
    pub exp_weights_upper: f64,
}

pub fn comparison_curves(n: usize, delta: f64) -> Result<ComparisonCurves> {
    check_n(n)?;
    check_delta_open(delta)?;
    let ln = (n as f64).ln();
    Ok(ComparisonCurves {
        n,
        delta,
        gravin_upper: (2.0 * ln / delta).sqrt(),
        gravin_ew_lower_asymptote: (ln / (2.0 * delta)).sqrt(),
        exp_weights_upper: exp_weights_bound(n, delta)?.bound,
    })
}

/// `sqrt(delta) (u_hat^h(0) - E) / sqrt(2 log N)`.
pub fn ratio_to_sqrt_2logn(n: usize, delta: f64, ec: &ErrorConstants) -> Result<f64> {
    let (lower, _) = heat_bounds(n, delta, ec)?;
    Ok(lower.c_n / (2.0 * (n as f64).ln()).sqrt())
}

/// Every report for one `(N, delta)`: exponential weights, then heat and max
/// lower/upper.
pub fn all_reports(n: usize, delta: f64, ec: &ErrorConstants) -> Result<Vec<BoundReport>> {
    let (hl, hu) = heat_bounds(n, delta, ec)?;
    let (ml, mu) = max_bounds(n, delta, ec)?;
    Ok(vec![exp_weights_bound(n, delta)?, hl, hu, ml, mu])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::PotentialHandle;
    use approx::assert_abs_diff_eq;

    #[test]
    fn diffusion_factors() {
        assert_eq!(kappa_s(2, 0.5).unwrap(), 1.0);
        assert_abs_diff_eq!(kappa_s(3, 0.5).unwrap(), 2.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(kappa_s(4, 0.5).unwrap(), 2.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(kappa_m(4, 0.5).unwrap(), 16.0 / 6.0, epsilon = 1e-15);
        assert_abs_diff_eq!(kappa_m(3, 0.5).unwrap(), 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(kappa_m(2, 0.5).unwrap(), 2.0, epsilon = 1e-15);
        assert!(kappa_s(1, 0.5).is_err());
        let dc = DiffusionConstants::new(5, 0.1).unwrap();
        for k in [dc.kappa_s, dc.kappa_heat_ub, dc.kappa_max_lb, dc.kappa_m] {
            assert!(k > 0.0);
        }
        assert_abs_diff_eq!(dc.kappa_max_lb, 18.0, epsilon = 1e-12);
    }

    #[test]
    fn exp_weights_examples() {
        let r = exp_weights_bound(2, 0.5).unwrap();
        assert_abs_diff_eq!(r.bound, (2f64.ln() * 2.0).sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(r.bound, 1.177_41, epsilon = 1e-5);
        assert_eq!(r.error_term, 0.0);
        assert!(exp_weights_bound(2, 1.0 - 1e-12).unwrap().bound < 1e-5);
        let d = 1e-6;
        for n in [2usize, 10, 100] {
            let c = exp_weights_bound(n, d).unwrap().c_n;
            let target = (2.0 * (n as f64).ln()).sqrt() * (1.0 - 5e-7);
            assert_abs_diff_eq!(c, target, epsilon = 1e-6);
        }
    }

    #[test]
    fn error_term_formulas() {
        assert_abs_diff_eq!(
            third_order_error(1.0, 0.1).unwrap(),
            1.5 * (1.0 + 10f64.ln()),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(third_order_error(1.0, 0.1).unwrap(), 4.9539, epsilon = 1e-4);
        for delta in [0.3, 0.01, 1e-4] {
            let ratio = third_order_error(2.0, delta / 10.0).unwrap()
                / third_order_error(2.0, delta).unwrap();
            let expected = (1.0 + (10.0 / delta).ln()) / (1.0 + (1.0 / delta).ln())
                * ((1.0 - delta / 10.0) / (delta / 10.0))
                / ((1.0 - delta) / delta);
            assert_abs_diff_eq!(ratio, expected, epsilon = 1e-9);
        }
        let d: f64 = 0.2;
        let expected =
            0.8 / (24.0 * d) * 3.0 * (2.0 / d.sqrt() - 2.0 * d.exp() * SQRT_PI * erfc(d.sqrt()));
        assert_abs_diff_eq!(
            fourth_order_error(3.0, d).unwrap(),
            expected,
            epsilon = 1e-12
        );
    }

    #[test]
    fn reports_match_potentials_at_origin() {
        let delta = 0.05;
        for n in [2usize, 3, 4] {
            let dc = DiffusionConstants::new(n, delta).unwrap();
            let (hl, hu) = heat_bounds(n, delta, &ErrorConstants::zero()).unwrap();
            let zero = vec![0.0; n];
            let h = PotentialHandle::heat(n, delta, dc.kappa_s).unwrap();
            assert_abs_diff_eq!(
                hl.potential_at_zero,
                h.value(&zero, Side::Lower).unwrap(),
                epsilon = 1e-7
            );
            let h = PotentialHandle::heat(n, delta, dc.kappa_heat_ub).unwrap();
            assert_abs_diff_eq!(
                hu.potential_at_zero,
                h.value(&zero, Side::Upper).unwrap(),
                epsilon = 1e-7
            );
            let (ml, mu) = max_bounds(n, delta, &ErrorConstants::zero()).unwrap();
            let m = PotentialHandle::max(n, delta, dc.kappa_max_lb).unwrap();
            assert_abs_diff_eq!(
                ml.potential_at_zero,
                m.value(&zero, Side::Lower).unwrap(),
                epsilon = 1e-7
            );
            let m = PotentialHandle::max(n, delta, dc.kappa_m).unwrap();
            let w = m.value(&zero, Side::Upper).unwrap();
            assert_abs_diff_eq!(mu.potential_at_zero, w + m.shift_constant(), epsilon = 1e-7);
            // the formula of the lower report
            let nf = n as f64;
            let formula = (nf - 1.0) / nf
                * (2.0 * (1.0 - delta) / delta).sqrt()
                * delta.exp()
                * erfc(delta.sqrt());
            assert_abs_diff_eq!(ml.potential_at_zero, formula, epsilon = 1e-12);
            assert!(hl.bound <= hu.bound && ml.bound <= mu.bound);
        }
    }

    #[test]
    fn small_delta_limits() {
        let d = 1e-6;
        let target = std::f64::consts::FRAC_1_SQRT_2;
        let z = ErrorConstants::zero();
        let (hl, _) = heat_bounds(2, d, &z).unwrap();
        assert!((hl.c_n - target).abs() < 0.01 * target);
        for (n, t) in [(2usize, target), (3, 4.0 / 3.0 * target)] {
            let (ml, mu) = max_bounds(n, d, &z).unwrap();
            assert!((ml.c_n - t).abs() < 0.01 * t);
            assert!((mu.c_n - t).abs() < 0.01 * t);
        }
    }

    #[test]
    fn lower_never_exceeds_upper() {
        let z = ErrorConstants::zero();
        for delta in [1e-2, 1e-4, 1e-6] {
            for n in 2..=32 {
                let (hl, hu) = heat_bounds(n, delta, &z).unwrap();
                let (ml, mu) = max_bounds(n, delta, &z).unwrap();
                assert!(hl.potential_at_zero <= hu.potential_at_zero);
                assert!(ml.potential_at_zero <= mu.potential_at_zero);
                assert!(hu.c_n.is_finite() && hu.c_n > 0.0 && mu.c_n > 0.0);
            }
        }
    }

    #[test]
    fn comparison_examples() {
        let c = comparison_curves(2, 1e-6).unwrap();
        assert_abs_diff_eq!(
            c.gravin_upper * 1e-3,
            (2.0 * 2f64.ln()).sqrt(),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(c.gravin_ew_lower_asymptote * 1e-3, 0.5887, epsilon = 1e-4);
        for delta in [0.9, 0.5, 0.1, 1e-3] {
            let c = comparison_curves(7, delta).unwrap();
            assert!(c.exp_weights_upper <= c.gravin_upper);
        }
    }

    #[test]
    fn ratio_trend() {
        let z = ErrorConstants::zero();
        let vals: Vec<f64> = [10usize, 100, 1000, 10_000]
            .iter()
            .map(|&n| ratio_to_sqrt_2logn(n, 1e-12, &z).unwrap())
            .collect();
        for w in vals.windows(2) {
            assert!(w[1] > w[0]);
        }
        assert!(vals[3] >= 0.75 && vals[3] <= 0.89, "{vals:?}");
        assert!(vals[3] < SQRT_PI / 2.0);
    }

    #[test]
    fn report_json_round_trip() {
        let ec = ErrorConstants::user_supplied(1.0, 2.0, 3.0, 4.0, 5.0).unwrap();
        for r in all_reports(5, 0.01, &ec).unwrap() {
            let s = serde_json::to_string(&r).unwrap();
            let back: BoundReport = serde_json::from_str(&s).unwrap();
            assert_eq!(back, r);
        }
        assert!(ErrorConstants::user_supplied(1.0, 0.0, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn estimated_constants_are_positive_and_scale() {
        let settings = EstimationSettings {
            samples: 40,
            cube_directions: 2,
            refine_steps: 5,
            seed: 1,
        };
        let m = SampledMaxima::estimate(3, &settings).unwrap();
        for v in [
            m.m3_heat_support,
            m.m4_heat_support,
            m.m3_heat_cube,
            m.m3_max_argmax,
            m.m3_max_cube,
        ] {
            assert!(v > 0.0 && v.is_finite());
        }
        assert!(m.m3_heat_cube >= m.m3_heat_support * 0.5);
        let a = ErrorConstants::from_maxima(&m, 0.1).unwrap();
        let b = ErrorConstants::from_maxima(&m, 0.05).unwrap();
        assert_eq!(a.mode, ErrorMode::NumericallyEstimated);
        // K_3 scales like 1 / kappa
        let ratio = a.k3_heat_ub / b.k3_heat_ub;
        assert_abs_diff_eq!(ratio, (0.95 / 0.05) / (0.9 / 0.1), epsilon = 1e-12);
        assert_eq!(SampledMaxima::estimate(3, &settings).unwrap(), m);
    }
}
