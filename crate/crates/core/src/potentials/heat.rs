//! Heat potential `phi(x, t) = E max_k (x_k + sigma Y_k)`, `sigma = sqrt(2 kappa |t|)`.
//!
//! The smooth evaluator splits the expectation by winner:
//! `phi = sum_i x_i P_i + sigma sum_i E[Y_i; i wins]` with
//! `P_i = int pdf(y) prod_{j != i} Phi(y + (x_i - x_j) / sigma) dy`,
//! integrated on a fixed Gauss-Legendre grid in `y`.

use std::sync::OnceLock;

use super::{Family, PotentialHandle, Side};
use crate::error::{check_time, Error, Result};
use crate::game::SimplexWeights;
use crate::specfun::{integrate, norm_cdf, norm_pdf, norm_sf, CompositeRule, QuadratureSettings};

const Y_MAX: f64 = 9.0;
const Y_PANELS: usize = 24;
const Y_ORDER: usize = 8;
/// Experts trailing by more than this many `sigma` never win (probability < 1e-17).
const SKIP: f64 = 12.0;
/// Nodes where the product falls below `Phi(-9)` are dropped.
const FLOOR: f64 = 9.0;
/// `Phi(z) = 1` to double precision beyond this point.
const SATURATE: f64 = 8.3;

struct YGrid {
    y: Vec<f64>,
    wpdf: Vec<f64>,
}

fn y_grid() -> &'static YGrid {
    static GRID: OnceLock<YGrid> = OnceLock::new();
    GRID.get_or_init(|| {
        let rule = CompositeRule::uniform(-Y_MAX, Y_MAX, Y_PANELS, Y_ORDER);
        let wpdf = rule
            .nodes
            .iter()
            .zip(&rule.weights)
            .map(|(y, w)| w * norm_pdf(*y))
            .collect();
        YGrid {
            y: rule.nodes,
            wpdf,
        }
    })
}

/// Win probabilities and `phi - max x` for a state whose maximum is 0.
pub(crate) fn win_decomposition(
    xc: &[f64],
    sigma: f64,
    probs: &mut [f64],
    d: &mut Vec<f64>,
) -> f64 {
    let grid = y_grid();
    let mut value = 0.0;
    for i in 0..xc.len() {
        d.clear();
        let mut dmin = f64::INFINITY;
        for (j, xj) in xc.iter().enumerate() {
            if j != i {
                let dij = (xc[i] - xj) / sigma;
                dmin = dmin.min(dij);
                d.push(dij);
            }
        }
        if dmin < -SKIP {
            probs[i] = 0.0;
            continue;
        }
        let y_lo = -FLOOR - dmin;
        let (mut p, mut q) = (0.0, 0.0);
        for (y, w) in grid.y.iter().zip(&grid.wpdf) {
            if *y < y_lo {
                continue;
            }
            let mut prod = *w;
            for dj in d.iter() {
                let z = y + dj;
                if z < SATURATE {
                    prod *= norm_cdf(z);
                }
            }
            p += prod;
            q += prod * y;
        }
        probs[i] = p;
        value += xc[i] * p + sigma * q;
    }
    value
}

fn check_state(x: &[f64], t: f64, kappa: f64) -> Result<f64> {
    if x.is_empty() || x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(
            "state must be nonempty and finite".into(),
        ));
    }
    check_time(t)?;
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(Error::OutOfDomain {
            name: "kappa",
            value: kappa,
            range: "(0, inf)",
        });
    }
    Ok((2.0 * kappa * -t).sqrt())
}

fn centre(x: &[f64]) -> (f64, Vec<f64>) {
    let m = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (m, x.iter().map(|v| v - m).collect())
}

/// `phi(x, t)` from the distribution function of the maximum,
/// `E max = int_0^inf (1 - prod F_k) - int_{-inf}^0 prod F_k`, by adaptive quadrature.
pub fn heat_potential_fixed(x: &[f64], t: f64, kappa: f64) -> Result<f64> {
    let sigma = check_state(x, t, kappa)?;
    let (m, xc) = centre(x);
    let gaps: Vec<f64> = xc.iter().map(|v| -v / sigma).collect();
    let log_cdf = |w: f64| -> f64 {
        gaps.iter()
            .map(|g| {
                let z = w + g;
                if z > 0.0 {
                    (-norm_sf(z)).ln_1p()
                } else {
                    norm_cdf(z).ln()
                }
            })
            .sum()
    };
    let s = QuadratureSettings::precise();
    let upper = 9.0 + (2.0 * (x.len() as f64).ln()).sqrt();
    let pos = integrate(|w| -log_cdf(w).exp_m1(), 0.0, upper, &s)?;
    let neg = integrate(|w| log_cdf(w).exp(), -10.0, 0.0, &s)?;
    Ok(m + sigma * (pos.value - neg.value))
}

/// `phi(x, t)` on the fixed `y` grid; smooth in `x` and `t`.
pub fn heat_potential_fixed_grid(x: &[f64], t: f64, kappa: f64) -> Result<f64> {
    let sigma = check_state(x, t, kappa)?;
    let (m, xc) = centre(x);
    let mut probs = vec![0.0; x.len()];
    Ok(m + win_decomposition(&xc, sigma, &mut probs, &mut Vec::new()))
}

/// Win probabilities `P(x_i + sigma Y_i` is the maximum`)`.
pub fn heat_gradient_fixed(x: &[f64], t: f64, kappa: f64) -> Result<SimplexWeights> {
    let sigma = check_state(x, t, kappa)?;
    let (_, xc) = centre(x);
    let mut probs = vec![0.0; x.len()];
    win_decomposition(&xc, sigma, &mut probs, &mut Vec::new());
    SimplexWeights::from_unnormalized(probs)
}

pub(crate) fn geometric_value(h: &PotentialHandle, x: &[f64]) -> f64 {
    let (m, xc) = centre(x);
    let mut probs = vec![0.0; x.len()];
    let mut d = Vec::with_capacity(x.len());
    let rule = h.rule();
    let mut acc = 0.0;
    for (w, sigma) in rule.weights.iter().zip(h.sigmas()) {
        acc += w * win_decomposition(&xc, *sigma, &mut probs, &mut d);
    }
    m + acc
}

pub(crate) fn geometric_gradient(h: &PotentialHandle, x: &[f64], out: &mut [f64]) {
    let (_, xc) = centre(x);
    let mut probs = vec![0.0; x.len()];
    let mut d = Vec::with_capacity(x.len());
    out.iter_mut().for_each(|o| *o = 0.0);
    let rule = h.rule();
    for (w, sigma) in rule.weights.iter().zip(h.sigmas()) {
        win_decomposition(&xc, *sigma, &mut probs, &mut d);
        for (o, p) in out.iter_mut().zip(&probs) {
            *o += w * p;
        }
    }
    let s: f64 = out.iter().sum();
    out.iter_mut().for_each(|o| *o /= s);
}

fn require_heat(h: &PotentialHandle) -> Result<()> {
    if h.family() == Family::Heat {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "expected a heat potential, got {}",
            h.family()
        )))
    }
}

/// `phi_hat(x) -/+ C` on the requested side.
pub fn heat_potential_geometric(x: &[f64], h: &PotentialHandle, side: Side) -> Result<f64> {
    require_heat(h)?;
    h.value(x, side)
}

/// `e^delta int e^t grad phi(x, t) dt`, renormalized onto the simplex.
pub fn heat_gradient_geometric(x: &[f64], h: &PotentialHandle) -> Result<SimplexWeights> {
    require_heat(h)?;
    h.gradient(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::hessian_from_gradient;
    use crate::specfun::{
        gaussian_absmax_expectation, gaussian_max_expectation, laplace_sqrt_integral, SQRT_PI,
    };
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(11)
    }

    #[test]
    fn origin_two_experts() {
        let expected = 2f64.sqrt() / SQRT_PI;
        assert_abs_diff_eq!(expected, 0.797_884_6, epsilon = 1e-7);
        // nested quadrature of E max(sigma Y1, sigma Y2), sigma = sqrt 2,
        // with the inner integral split at the kink b = a
        let s = QuadratureSettings::default();
        let sigma = 2f64.sqrt();
        let inner = |a: f64| {
            let below = integrate(|b| norm_pdf(b) * a, -10.0, a, &s).unwrap().value;
            let above = integrate(|b| norm_pdf(b) * b, a, 10.0, &s).unwrap().value;
            sigma * (below + above)
        };
        let oracle = integrate(|a| norm_pdf(a) * inner(a), -10.0, 10.0, &s)
            .unwrap()
            .value;
        assert_abs_diff_eq!(oracle, expected, epsilon = 1e-8);
        let x = [0.0, 0.0];
        assert_abs_diff_eq!(
            heat_potential_fixed(&x, -1.0, 1.0).unwrap(),
            expected,
            epsilon = 1e-10
        );
        assert_abs_diff_eq!(
            heat_potential_fixed_grid(&x, -1.0, 1.0).unwrap(),
            expected,
            epsilon = 1e-12
        );
    }

    #[test]
    fn constant_state() {
        for n in [2usize, 3, 6] {
            let c = -1.7;
            let x = vec![c; n];
            let sigma = (2.0f64 * 0.8 * 2.5).sqrt();
            let expected = c + sigma * gaussian_max_expectation(n).unwrap();
            assert_abs_diff_eq!(
                heat_potential_fixed(&x, -2.5, 0.8).unwrap(),
                expected,
                epsilon = 1e-10
            );
            assert_abs_diff_eq!(
                heat_potential_fixed_grid(&x, -2.5, 0.8).unwrap(),
                expected,
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn dominant_coordinate() {
        // sigma = 0.1
        let x = [10.0, 0.0];
        assert_abs_diff_eq!(
            heat_potential_fixed(&x, -0.005, 1.0).unwrap(),
            10.0,
            epsilon = 1e-8
        );
        assert_abs_diff_eq!(
            heat_potential_fixed_grid(&x, -0.005, 1.0).unwrap(),
            10.0,
            epsilon = 1e-8
        );
        let p = heat_gradient_fixed(&x, -0.005, 1.0).unwrap();
        assert_abs_diff_eq!(p[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p[1], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn grid_agrees_with_distribution_form() {
        let mut r = rng();
        for _ in 0..40 {
            let n = r.gen_range(2..7);
            let x: Vec<f64> = (0..n).map(|_| r.gen_range(-3.0..3.0)).collect();
            let t = -r.gen_range(0.01..5.0);
            let kappa = r.gen_range(0.1..3.0);
            let a = heat_potential_fixed(&x, t, kappa).unwrap();
            let b = heat_potential_fixed_grid(&x, t, kappa).unwrap();
            assert_abs_diff_eq!(a, b, epsilon = 1e-11);
        }
    }

    #[test]
    fn gradient_is_uniform_at_origin_and_matches_differences() {
        let p = heat_gradient_fixed(&[0.0; 3], -1.0, 1.0).unwrap();
        for v in p.iter() {
            assert_abs_diff_eq!(*v, 1.0 / 3.0, epsilon = 1e-13);
        }
        let mut r = rng();
        for _ in 0..30 {
            let n = r.gen_range(2..6);
            let x: Vec<f64> = (0..n).map(|_| r.gen_range(-2.0..2.0)).collect();
            let (t, kappa) = (-r.gen_range(0.05..2.0), r.gen_range(0.2..2.0));
            let p = heat_gradient_fixed(&x, t, kappa).unwrap();
            assert_abs_diff_eq!(p.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
            for i in 0..n {
                let h = 1e-5;
                let mut a = x.clone();
                let mut b = x.clone();
                a[i] += h;
                b[i] -= h;
                let fd = (heat_potential_fixed_grid(&a, t, kappa).unwrap()
                    - heat_potential_fixed_grid(&b, t, kappa).unwrap())
                    / (2.0 * h);
                assert_abs_diff_eq!(fd, p[i], epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn heat_equation_residual() {
        let mut r = rng();
        for _ in 0..50 {
            let n = r.gen_range(2..5);
            let x: Vec<f64> = (0..n).map(|_| r.gen_range(-3.0..3.0)).collect();
            let t = -r.gen_range(0.1..4.0);
            let kappa = r.gen_range(0.2..2.0);
            let ht = 1e-4;
            let phi_t = (heat_potential_fixed_grid(&x, t + ht, kappa).unwrap()
                - heat_potential_fixed_grid(&x, t - ht, kappa).unwrap())
                / (2.0 * ht);
            let grad = |y: &[f64], out: &mut [f64]| {
                out.copy_from_slice(heat_gradient_fixed(y, t, kappa).unwrap().as_slice());
            };
            let hess = hessian_from_gradient(grad, &x);
            let lap: f64 = (0..n).map(|i| hess[i][i]).sum();
            assert!(
                (phi_t + kappa * lap).abs() <= 1e-4,
                "residual {}",
                phi_t + kappa * lap
            );
        }
    }

    #[test]
    fn final_time_bound() {
        let mut r = rng();
        for _ in 0..100 {
            let n = r.gen_range(2..7);
            let delta = r.gen_range(0.01..0.5);
            let kappa = (1.0 - delta) / delta;
            let x: Vec<f64> = (0..n).map(|_| r.gen_range(-10.0..10.0)).collect();
            let m = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let v = heat_potential_fixed_grid(&x, -delta, kappa).unwrap();
            let c = (2.0 * kappa * delta).sqrt() * gaussian_max_expectation(n).unwrap();
            assert!(v - m >= -1e-12 && v - m <= c + 1e-12);
        }
    }

    #[test]
    fn hessian_bound_at_origin() {
        let mut r = rng();
        for n in [2usize, 3, 5] {
            let (t, kappa) = (-0.7, 1.3);
            let sigma = (2.0f64 * kappa * 0.7).sqrt();
            let bound = 2.0 / sigma * gaussian_absmax_expectation(n).unwrap();
            let x = vec![0.0; n];
            let grad = |y: &[f64], out: &mut [f64]| {
                out.copy_from_slice(heat_gradient_fixed(y, t, kappa).unwrap().as_slice());
            };
            let hess = hessian_from_gradient(grad, &x);
            for _ in 0..100 {
                let q: Vec<f64> = (0..n).map(|_| r.gen_range(-1.0..1.0)).collect();
                let form = crate::potentials::quadratic_form(&hess, &q);
                assert!(form <= bound + 1e-8);
                assert!(form >= -1e-8);
            }
        }
    }

    #[test]
    fn geometric_closed_form_at_origin() {
        for delta in [1e-2, 1e-6] {
            for n in [2usize, 5] {
                let kappa = (1.0 - delta) / delta;
                let h = PotentialHandle::heat(n, delta, kappa).unwrap();
                let emax = gaussian_max_expectation(n).unwrap();
                let closed = (2.0 * kappa).sqrt()
                    * emax
                    * delta.exp()
                    * laplace_sqrt_integral(delta).unwrap();
                let closed_alt = (2.0 * kappa).sqrt()
                    * emax
                    * (delta.sqrt()
                        + delta.exp() * 0.5 * SQRT_PI * crate::specfun::erfc(delta.sqrt()));
                assert_abs_diff_eq!(closed, closed_alt, epsilon = 1e-9);
                let zero = vec![0.0; n];
                let up = heat_potential_geometric(&zero, &h, Side::Upper).unwrap();
                let lo = heat_potential_geometric(&zero, &h, Side::Lower).unwrap();
                assert_abs_diff_eq!(up - h.shift_constant(), closed, epsilon = 1e-7);
                assert_abs_diff_eq!(lo + h.shift_constant(), closed, epsilon = 1e-7);
            }
        }
    }

    #[test]
    fn geometric_lower_limit_two_experts() {
        let delta = 1e-6;
        let h = PotentialHandle::heat(2, delta, (1.0 - delta) / delta).unwrap();
        let v = heat_potential_geometric(&[0.0, 0.0], &h, Side::Lower).unwrap();
        let target = std::f64::consts::FRAC_1_SQRT_2;
        assert!((delta.sqrt() * v - target).abs() < 0.01 * target);
    }

    #[test]
    fn geometric_translation_permutation_and_gradient() {
        let mut r = rng();
        let delta = 0.1;
        for n in [2usize, 3, 4] {
            let h = PotentialHandle::heat(n, delta, (1.0 - delta) / delta).unwrap();
            for _ in 0..10 {
                let x: Vec<f64> = (0..n).map(|_| r.gen_range(-15.0..15.0)).collect();
                let c = r.gen_range(-5.0..5.0);
                let v = h.value(&x, Side::Upper).unwrap();
                let xs: Vec<f64> = x.iter().map(|a| a + c).collect();
                assert_abs_diff_eq!(h.value(&xs, Side::Upper).unwrap(), v + c, epsilon = 1e-8);
                let mut rev = x.clone();
                rev.reverse();
                assert_abs_diff_eq!(h.value(&rev, Side::Upper).unwrap(), v, epsilon = 1e-11);
                let g = heat_gradient_geometric(&x, &h).unwrap();
                let grev = h.gradient(&rev).unwrap();
                for i in 0..n {
                    assert_abs_diff_eq!(g[i], grev[n - 1 - i], epsilon = 1e-12);
                    let step = 1e-5;
                    let mut a = x.clone();
                    let mut b = x.clone();
                    a[i] += step;
                    b[i] -= step;
                    let fd = (h.value(&a, Side::Upper).unwrap()
                        - h.value(&b, Side::Upper).unwrap())
                        / (2.0 * step);
                    assert_abs_diff_eq!(fd, g[i], epsilon = 1e-6);
                    assert!(g[i] >= 0.0);
                }
            }
        }
        let h = PotentialHandle::heat(3, delta, 9.0).unwrap();
        let u = h.gradient(&[0.0; 3]).unwrap();
        for v in u.iter() {
            assert_abs_diff_eq!(*v, 1.0 / 3.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn geometric_is_convex() {
        let mut r = rng();
        let delta = 0.05;
        let h = PotentialHandle::heat(3, delta, (1.0 - delta) / delta).unwrap();
        for _ in 0..10 {
            let x: Vec<f64> = (0..3).map(|_| r.gen_range(-20.0..20.0)).collect();
            let hess = crate::potentials::hessian(&h, &x).unwrap();
            for _ in 0..10 {
                let q: Vec<f64> = (0..3).map(|_| r.gen_range(-1.0..1.0)).collect();
                assert!(crate::potentials::quadratic_form(&hess, &q) >= -1e-6);
            }
        }
    }
}
