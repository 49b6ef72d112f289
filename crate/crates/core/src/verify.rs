//! Numerical checks of the inequalities and identities the potentials satisfy.
//!
//! Each check evaluates a margin per sample point (negative means violated)
//! and returns a [`CheckReport`] with the worst margin and the offending
//! points. Points are processed in parallel and reported in input order.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::DiffusionConstants;
use crate::error::{check_delta_open, Error, Result};
use crate::game::final_regret;
use crate::potentials::{
    directional_derivative, fd_step, hessian, hessian_from_gradient, quadratic_form, Family,
    PotentialHandle, Side,
};
use crate::strategies::AdversaryStrategy;

pub const DEFAULT_TOLERANCE: f64 = 1e-4;
pub const DEFAULT_SAMPLES: usize = 200;
pub const DEFAULT_SEED: u64 = 0x5eed;
/// Translation identity tolerance, relative to `max(1, |u(x)|)`.
pub const TRANSLATION_TOL: f64 = 1e-8;
/// Smallest allowed gradient entry.
pub const MONOTONE_TOL: f64 = -1e-10;
pub const SIMPLEX_TOL: f64 = 1e-9;
/// Gradient versus finite differences, relative to `max(1, |g|)`.
pub const GRADIENT_TOL: f64 = 1e-6;
pub const PERMUTATION_TOL: f64 = 1e-9;
/// Final-time bounds, relative to `max(1, |x|)`.
pub const FINAL_TIME_TOL: f64 = 1e-9;
/// PDE residual, relative to `max(1, |u_t|)`.
pub const PDE_TOL: f64 = 1e-4;
/// Offending points kept in a report.
pub const MAX_LISTED: usize = 20;
/// Sign vectors are enumerated up to this `N`.
pub const VERTEX_LIMIT: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub x: Vec<f64>,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check: String,
    pub family: Option<Family>,
    pub n: usize,
    pub delta: f64,
    pub tolerance: f64,
    pub checked: usize,
    /// Points skipped as outside the check's domain (ties for the max family).
    pub excluded: usize,
    pub violations: usize,
    pub worst_margin: f64,
    pub worst_point: Vec<f64>,
    pub failures: Vec<Violation>,
    pub diagnostics: BTreeMap<String, f64>,
    pub passed: bool,
}

impl CheckReport {
    fn from_margins(
        check: &str,
        family: Option<Family>,
        h_n: usize,
        delta: f64,
        tolerance: f64,
        xs: &[Vec<f64>],
        margins: Vec<Option<f64>>,
    ) -> Self {
        let mut worst = (f64::INFINITY, None);
        let mut failures = Vec::new();
        let mut violations = 0;
        let mut checked = 0;
        for (x, m) in xs.iter().zip(&margins) {
            let Some(m) = *m else { continue };
            checked += 1;
            // NaN margins count as violations.
            let bad = !(m >= 0.0);
            if bad {
                violations += 1;
                if failures.len() < MAX_LISTED {
                    failures.push(Violation {
                        x: x.clone(),
                        margin: m,
                    });
                }
            }
            if bad && !worst.0.is_nan() || m < worst.0 {
                worst = (m, Some(x));
            }
        }
        Self {
            check: check.to_string(),
            family,
            n: h_n,
            delta,
            tolerance,
            checked,
            excluded: margins.len() - checked,
            violations,
            worst_margin: worst.0,
            worst_point: worst.1.cloned().unwrap_or_default(),
            failures,
            diagnostics: BTreeMap::new(),
            passed: violations == 0,
        }
    }

    fn with(mut self, key: &str, value: f64) -> Self {
        self.diagnostics.insert(key.to_string(), value);
        self
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let fam = self.family.map(|x| x.name()).unwrap_or("-");
        write!(
            f,
            "{} {:<22} {:<5} N={} delta={} checked={} excluded={} violations={} worst_margin={:.3e}",
            if self.passed { "ok  " } else { "FAIL" },
            self.check,
            fam,
            self.n,
            self.delta,
            self.checked,
            self.excluded,
            self.violations,
            self.worst_margin
        )
    }
}

fn check_points(h: &PotentialHandle, xs: &[Vec<f64>]) -> Result<()> {
    if let Some(x) = xs.iter().find(|x| x.len() != h.n()) {
        return Err(Error::InvalidArgument(format!(
            "sample point has {} coordinates, potential expects {}",
            x.len(),
            h.n()
        )));
    }
    Ok(())
}

fn vertices(n: usize) -> Result<Vec<Vec<f64>>> {
    if n > VERTEX_LIMIT {
        return Err(Error::Unsupported {
            family: "verify",
            what: "enumerating sign vectors beyond N = 16",
        });
    }
    Ok((0..1u64 << n)
        .map(|m| {
            (0..n)
                .map(|i| if m >> i & 1 == 1 { 1.0 } else { -1.0 })
                .collect()
        })
        .collect())
}

/// Smallest gap between two distinct coordinates.
fn min_gap(x: &[f64]) -> f64 {
    let mut s = x.to_vec();
    s.sort_by(|a, b| a.total_cmp(b));
    s.windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min)
}

/// `<D^2 u q, q>` for each `q`. Smooth families use one finite-difference
/// Hessian; the max family uses directional stencils that respect rankings.
fn curvatures(h: &PotentialHandle, x: &[f64], qs: &[Vec<f64>]) -> Result<Vec<f64>> {
    if h.family() == Family::Max {
        qs.iter()
            .map(|q| Ok(directional_derivative(h, x, q, 2)?.value))
            .collect()
    } else {
        let hess = hessian(h, x)?;
        Ok(qs.iter().map(|q| quadratic_form(&hess, q)).collect())
    }
}

/// Projected gradient ascent of `q' H q` over `[-1, 1]^n` from random starts.
pub fn cube_quadratic_max(hess: &[Vec<f64>], starts: usize, seed: u64) -> f64 {
    let n = hess.len();
    let norm = hess.iter().flatten().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return 0.0;
    }
    let step = 0.5 / norm;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = f64::NEG_INFINITY;
    for _ in 0..starts {
        let mut q: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        for _ in 0..500 {
            let g: Vec<f64> = hess
                .iter()
                .map(|row| 2.0 * row.iter().zip(&q).map(|(a, b)| a * b).sum::<f64>())
                .collect();
            let mut moved = 0.0f64;
            for (qi, gi) in q.iter_mut().zip(&g) {
                let next = (*qi + step * gi).clamp(-1.0, 1.0);
                moved = moved.max((next - *qi).abs());
                *qi = next;
            }
            if moved < 1e-13 {
                break;
            }
        }
        best = best.max(quadratic_form(hess, &q));
    }
    best
}

/// `u(x) <= max x + ((1 - delta) / (2 delta)) E_a <D^2 u(x) q, q> + tol` for the
/// lower potential of `h` and the adversary `a`.
pub fn check_lower_condition(
    h: &PotentialHandle,
    a: &AdversaryStrategy,
    xs: &[Vec<f64>],
    tol: f64,
) -> Result<CheckReport> {
    check_points(h, xs)?;
    if h.family() == Family::ExpWeights {
        return Err(Error::Unsupported {
            family: "exp",
            what: "a lower-bound potential",
        });
    }
    if a.n() != h.n() {
        return Err(Error::InvalidArgument("adversary size differs".into()));
    }
    let delta = h.delta();
    let factor = (1.0 - delta) / (2.0 * delta);
    let margins = xs
        .par_iter()
        .map(|x| {
            let dist = a.distribution(x)?;
            let qs: Vec<Vec<f64>> = dist.support().iter().map(|q| q.to_vec()).collect();
            let curv = curvatures(h, x, &qs)?;
            let expected: f64 = curv.iter().zip(dist.probs()).map(|(c, p)| c * p).sum();
            let u = h.value(x, Side::Lower)?;
            Ok(Some(final_regret(x) + factor * expected + tol - u))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CheckReport::from_margins(
        "lower_condition",
        Some(h.family()),
        h.n(),
        delta,
        tol,
        xs,
        margins,
    ))
}

/// `w(x) >= max x + ((1 - delta) / (2 delta)) max_q <D^2 w(x) q, q> - tol` over
/// sign vectors `q`, for the upper potential of `h`.
///
/// The largest gap between projected ascent over the full cube and the vertex
/// maximum is reported as the `cube_gap` diagnostic.
pub fn check_upper_condition(
    h: &PotentialHandle,
    xs: &[Vec<f64>],
    tol: f64,
) -> Result<CheckReport> {
    check_points(h, xs)?;
    let delta = h.delta();
    let factor = (1.0 - delta) / (2.0 * delta);
    let qs = vertices(h.n())?;
    let rows = xs
        .par_iter()
        .enumerate()
        .map(|(k, x)| {
            let curv = curvatures(h, x, &qs)?;
            let vmax = curv.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let hess = hessian(h, x)?;
            let cube = cube_quadratic_max(&hess, 10, DEFAULT_SEED ^ k as u64);
            let vertex_hess = qs
                .iter()
                .map(|q| quadratic_form(&hess, q))
                .fold(f64::NEG_INFINITY, f64::max);
            let w = h.value(x, Side::Upper)?;
            Ok((
                Some(w - final_regret(x) - factor * vmax + tol),
                (cube - vertex_hess).max(0.0) * factor,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let gap = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    let margins = rows.into_iter().map(|r| r.0).collect();
    Ok(CheckReport::from_margins(
        "upper_condition",
        Some(h.family()),
        h.n(),
        delta,
        tol,
        xs,
        margins,
    )
    .with("cube_gap", gap))
}

/// `<D^2 Phi(x) q, q> <= eta` for the exponential-weights potential, with one
/// random `q` in `[-1, 1]^N` per point.
pub fn check_exp_curvature(
    h: &PotentialHandle,
    xs: &[Vec<f64>],
    tol: f64,
    seed: u64,
) -> Result<CheckReport> {
    check_points(h, xs)?;
    let eta = h.eta().ok_or(Error::InvalidArgument(
        "curvature bound needs an exponential-weights potential".into(),
    ))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let qs: Vec<Vec<f64>> = xs
        .iter()
        .map(|x| x.iter().map(|_| rng.gen_range(-1.0..=1.0)).collect())
        .collect();
    let margins = xs
        .par_iter()
        .zip(&qs)
        .map(|(x, q)| Ok(Some(eta + tol - directional_derivative(h, x, q, 2)?.value)))
        .collect::<Result<Vec<_>>>()?;
    Ok(CheckReport::from_margins(
        "exp_curvature",
        Some(Family::ExpWeights),
        h.n(),
        h.delta(),
        tol,
        xs,
        margins,
    ))
}

/// Fixed-horizon bounds at `t = -delta` with `C` the potential's shift constant:
/// heat `0 <= phi - max x <= C`, max `0 <= psi - max x <= C`.
pub fn check_final_time(h: &PotentialHandle, xs: &[Vec<f64>]) -> Result<CheckReport> {
    check_points(h, xs)?;
    if h.family() == Family::ExpWeights {
        return Err(Error::Unsupported {
            family: "exp",
            what: "a fixed-horizon potential",
        });
    }
    let delta = h.delta();
    let c = h.shift_constant();
    let margins = xs
        .par_iter()
        .map(|x| {
            let scale = FINAL_TIME_TOL * x.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            let d = h.fixed_value(x, -delta)? - final_regret(x);
            Ok(Some((d + scale).min(c + scale - d)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CheckReport::from_margins(
        "final_time",
        Some(h.family()),
        h.n(),
        delta,
        FINAL_TIME_TOL,
        xs,
        margins,
    )
    .with("constant", c))
}

/// `w(x + c𝟙) = w(x) + c` for `c` uniform in `[-5, 5]`, and every gradient
/// entry at least `MONOTONE_TOL`.
pub fn check_translation_and_monotone(
    h: &PotentialHandle,
    xs: &[Vec<f64>],
    seed: u64,
) -> Result<CheckReport> {
    check_points(h, xs)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shifts: Vec<f64> = xs.iter().map(|_| rng.gen_range(-5.0..=5.0)).collect();
    let rows: Vec<(f64, f64)> = xs
        .par_iter()
        .zip(&shifts)
        .map(|(x, &c)| {
            let w = h.transformed(x);
            let y: Vec<f64> = x.iter().map(|v| v + c).collect();
            let err = (h.transformed(&y) - w - c).abs();
            let mut g = vec![0.0; h.n()];
            h.gradient_into(x, &mut g);
            let gmin = g.iter().copied().fold(f64::INFINITY, f64::min);
            (
                TRANSLATION_TOL * w.abs().max(1.0) - err,
                gmin - MONOTONE_TOL,
            )
        })
        .collect();
    let worst_translation = rows.iter().map(|r| r.0).fold(f64::INFINITY, f64::min);
    let worst_monotone = rows.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    let margins = rows.iter().map(|r| Some(r.0.min(r.1))).collect();
    Ok(CheckReport::from_margins(
        "translation_monotone",
        Some(h.family()),
        h.n(),
        h.delta(),
        TRANSLATION_TOL,
        xs,
        margins,
    )
    .with("translation_margin", worst_translation)
    .with("monotone_margin", worst_monotone))
}

/// The gradient is a probability vector: entries nonnegative, sum one.
pub fn check_simplex(h: &PotentialHandle, xs: &[Vec<f64>]) -> Result<CheckReport> {
    check_points(h, xs)?;
    let margins = xs
        .par_iter()
        .map(|x| {
            let mut g = vec![0.0; h.n()];
            h.gradient_into(x, &mut g);
            let sum_err = (g.iter().sum::<f64>() - 1.0).abs();
            let gmin = g.iter().copied().fold(f64::INFINITY, f64::min);
            Some((SIMPLEX_TOL - sum_err).min(gmin + SIMPLEX_TOL))
        })
        .collect();
    Ok(CheckReport::from_margins(
        "simplex",
        Some(h.family()),
        h.n(),
        h.delta(),
        SIMPLEX_TOL,
        xs,
        margins,
    ))
}

/// Values and gradients commute with a coordinate permutation drawn per point.
pub fn check_permutation_symmetry(
    h: &PotentialHandle,
    xs: &[Vec<f64>],
    seed: u64,
) -> Result<CheckReport> {
    check_points(h, xs)?;
    let n = h.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let perms: Vec<Vec<usize>> = xs
        .iter()
        .map(|_| {
            let mut p: Vec<usize> = (0..n).collect();
            rand::seq::SliceRandom::shuffle(p.as_mut_slice(), &mut rng);
            p
        })
        .collect();
    let margins = xs
        .par_iter()
        .zip(&perms)
        .map(|(x, p)| {
            // Ties make the max family's ordering index-dependent.
            if h.family() == Family::Max && min_gap(x) == 0.0 {
                return None;
            }
            let y: Vec<f64> = p.iter().map(|&k| x[k]).collect();
            let (a, b) = (h.transformed(x), h.transformed(&y));
            let scale = a.abs().max(1.0);
            let mut gx = vec![0.0; n];
            let mut gy = vec![0.0; n];
            h.gradient_into(x, &mut gx);
            h.gradient_into(&y, &mut gy);
            let gerr = p
                .iter()
                .enumerate()
                .map(|(i, &k)| (gy[i] - gx[k]).abs())
                .fold(0.0, f64::max);
            Some((PERMUTATION_TOL * scale - (a - b).abs()).min(PERMUTATION_TOL - gerr))
        })
        .collect();
    Ok(CheckReport::from_margins(
        "permutation_symmetry",
        Some(h.family()),
        n,
        h.delta(),
        PERMUTATION_TOL,
        xs,
        margins,
    ))
}

fn central_gradient(h: &PotentialHandle, x: &[f64], step: f64) -> Vec<f64> {
    let mut y = x.to_vec();
    (0..x.len())
        .map(|i| {
            y[i] = x[i] + step;
            let up = h.transformed(&y);
            y[i] = x[i] - step;
            let down = h.transformed(&y);
            y[i] = x[i];
            (up - down) / (2.0 * step)
        })
        .collect()
}

/// Analytic gradient against central differences of the value. Points whose
/// coordinates come within the stencil width of a tie are excluded for the
/// max family.
///
/// The `halving_ratio` diagnostic is the median of `err(s) / err(s / 2)` at a
/// coarse step `s`, close to 4 for a second-order stencil.
pub fn check_gradient_consistency(h: &PotentialHandle, xs: &[Vec<f64>]) -> Result<CheckReport> {
    check_points(h, xs)?;
    let n = h.n();
    let rows: Vec<Option<(f64, f64)>> = xs
        .par_iter()
        .map(|x| {
            let step = fd_step(2, x);
            if h.family() == Family::Max && min_gap(x) <= 4.0 * step {
                return None;
            }
            let mut g = vec![0.0; n];
            h.gradient_into(x, &mut g);
            let fd = central_gradient(h, x, step);
            let err = g
                .iter()
                .zip(&fd)
                .map(|(a, b)| (a - b).abs() / a.abs().max(1.0))
                .fold(0.0, f64::max);
            let coarse = 0.05 * x.iter().fold(1.0f64, |m, v| m.max(v.abs())).sqrt();
            let ratio = if h.family() == Family::Max && min_gap(x) <= 4.0 * coarse {
                f64::NAN
            } else {
                let e = |s: f64| {
                    central_gradient(h, x, s)
                        .iter()
                        .zip(&g)
                        .map(|(a, b)| (a - b).abs())
                        .fold(0.0, f64::max)
                };
                let (e1, e2) = (e(coarse), e(coarse / 2.0));
                if e2 > 1e-11 {
                    e1 / e2
                } else {
                    f64::NAN
                }
            };
            Some((GRADIENT_TOL - err, ratio))
        })
        .collect();
    let mut ratios: Vec<f64> = rows
        .iter()
        .flatten()
        .map(|r| r.1)
        .filter(|r| r.is_finite())
        .collect();
    ratios.sort_by(|a, b| a.total_cmp(b));
    let median = ratios.get(ratios.len() / 2).copied().unwrap_or(f64::NAN);
    let margins = rows.iter().map(|r| r.map(|v| v.0)).collect();
    Ok(CheckReport::from_margins(
        "gradient_consistency",
        Some(h.family()),
        n,
        h.delta(),
        GRADIENT_TOL,
        xs,
        margins,
    )
    .with("halving_ratio", median)
    .with("halving_samples", ratios.len() as f64))
}

/// Fixed-horizon PDE: `phi_t + kappa tr D^2 phi = 0` for heat and
/// `psi_t + kappa max_i d_ii psi = 0` for max. Each point is paired with a
/// time `t = -s^2`, `s` uniform in `[sqrt(delta), 3]`, and rescaled to the
/// diffusion scale of that time. Max-family points near ties are excluded.
pub fn check_pde_residual(h: &PotentialHandle, xs: &[Vec<f64>], seed: u64) -> Result<CheckReport> {
    check_points(h, xs)?;
    let kappa = h.kappa().ok_or(Error::Unsupported {
        family: "exp",
        what: "a fixed-horizon potential",
    })?;
    let delta = h.delta();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let times: Vec<f64> = xs
        .iter()
        .map(|_| {
            -rng.gen_range(delta.sqrt()..3.0f64.max(delta.sqrt() + 1.0))
                .powi(2)
        })
        .collect();
    let scale = (2.0 * kappa * delta).sqrt();
    let margins = xs
        .par_iter()
        .zip(&times)
        .map(|(x, &t)| {
            // Sample points are drawn on the 1/sqrt(delta) scale; map them to
            // the diffusion width at time t.
            let sigma = (2.0 * kappa * -t).sqrt();
            let y: Vec<f64> = x.iter().map(|v| v * sigma / scale * delta.sqrt()).collect();
            if h.family() == Family::Max && min_gap(&y) <= 1e-3 * sigma {
                return Ok(None);
            }
            let ht = 1e-4 * -t;
            let u_t = (h.fixed_value(&y, t + ht)? - h.fixed_value(&y, t - ht)?) / (2.0 * ht);
            let grad = |z: &[f64], out: &mut [f64]| {
                let g = h.fixed_gradient(z, t).expect("validated input");
                out.copy_from_slice(&g);
            };
            let hess = hessian_from_gradient(grad, &y);
            let diag = (0..y.len()).map(|i| hess[i][i]);
            let op = if h.family() == Family::Heat {
                diag.sum::<f64>()
            } else {
                diag.fold(f64::NEG_INFINITY, f64::max)
            };
            let residual = (u_t + kappa * op).abs();
            Ok(Some(PDE_TOL * u_t.abs().max(1.0) - residual))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CheckReport::from_margins(
        "pde_residual",
        Some(h.family()),
        h.n(),
        delta,
        PDE_TOL,
        xs,
        margins,
    ))
}

/// Sample states: structured points (origin, ties, near ties, a dominant
/// coordinate, a `𝟙`-shifted copy) followed by uniform draws from the ball of
/// radius `20 / sqrt(delta)`.
pub fn sample_points(n: usize, delta: f64, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    check_delta_open(delta)?;
    if n < 2 {
        return Err(Error::InvalidArgument("need at least two experts".into()));
    }
    let s = 1.0 / delta.sqrt();
    let radius = 20.0 * s;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ball = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        let dir: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let norm = dir
            .iter()
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
            .max(f64::MIN_POSITIVE);
        let r = radius * rng.gen::<f64>().powf(1.0 / n as f64);
        dir.iter().map(|v| v * r / norm).collect()
    };
    let mut pts = vec![vec![0.0; n]];
    let mut tie = vec![0.0; n];
    tie[0] = s;
    tie[1] = s;
    pts.push(tie.clone());
    tie[1] = s + 1e-3;
    pts.push(tie);
    let mut dominant = vec![0.0; n];
    dominant[n - 1] = 10.0 * s;
    pts.push(dominant);
    let mut ladder: Vec<f64> = (0..n).map(|i| -(i as f64) * 0.5 * s).collect();
    ladder.reverse();
    pts.push(ladder);
    let base = ball(&mut rng);
    pts.push(base.iter().map(|v| v + 7.0).collect());
    pts.push(base);
    pts.truncate(count);
    while pts.len() < count {
        pts.push(ball(&mut rng));
    }
    Ok(pts)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Lower,
    Upper,
    FinalTime,
    Translation,
    Gradients,
    Simplex,
    Permutation,
    Pde,
    All,
}

impl Suite {
    pub const EACH: [Suite; 8] = [
        Suite::Lower,
        Suite::Upper,
        Suite::FinalTime,
        Suite::Translation,
        Suite::Gradients,
        Suite::Simplex,
        Suite::Permutation,
        Suite::Pde,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Lower => "lower",
            Suite::Upper => "upper",
            Suite::FinalTime => "final-time",
            Suite::Translation => "translation",
            Suite::Gradients => "gradients",
            Suite::Simplex => "simplex",
            Suite::Permutation => "permutation",
            Suite::Pde => "pde",
            Suite::All => "all",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Suite::EACH
            .iter()
            .chain(&[Suite::All])
            .find(|k| k.name() == s || k.name().replace('-', "_") == s)
            .copied()
            .ok_or_else(|| Error::InvalidArgument(format!("unknown suite `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub n: usize,
    pub delta: f64,
    pub samples: usize,
    /// Tolerance of the lower and upper conditions.
    pub tol: f64,
    pub seed: u64,
}

impl SuiteConfig {
    pub fn new(n: usize, delta: f64) -> Self {
        Self {
            n,
            delta,
            samples: DEFAULT_SAMPLES,
            tol: DEFAULT_TOLERANCE,
            seed: DEFAULT_SEED,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub config: SuiteConfig,
    pub checks: Vec<CheckReport>,
    pub violations: usize,
    pub passed: bool,
}

/// Potentials used by the suites: heat and max with their lower and upper
/// diffusion factors, and tuned exponential weights.
struct Handles {
    heat_lower: PotentialHandle,
    heat_upper: PotentialHandle,
    max_lower: PotentialHandle,
    max_upper: PotentialHandle,
    exp: PotentialHandle,
}

impl Handles {
    fn new(n: usize, delta: f64) -> Result<Self> {
        let dc = DiffusionConstants::new(n, delta)?;
        Ok(Self {
            heat_lower: PotentialHandle::heat(n, delta, dc.kappa_s)?,
            heat_upper: PotentialHandle::heat(n, delta, dc.kappa_heat_ub)?,
            max_lower: PotentialHandle::max(n, delta, dc.kappa_max_lb)?,
            max_upper: PotentialHandle::max(n, delta, dc.kappa_m)?,
            exp: PotentialHandle::exp_weights_tuned(n, delta)?,
        })
    }

    fn upper(&self) -> [&PotentialHandle; 3] {
        [&self.exp, &self.heat_upper, &self.max_upper]
    }
}

pub fn run_suite(suite: Suite, config: &SuiteConfig) -> Result<SuiteReport> {
    let (n, delta) = (config.n, config.delta);
    let hs = Handles::new(n, delta)?;
    let xs = sample_points(n, delta, config.samples, config.seed)?;
    let seed = config.seed;
    let mut checks = Vec::new();
    let wanted = |s: Suite| suite == Suite::All || suite == s;
    if wanted(Suite::Lower) {
        checks.push(check_lower_condition(
            &hs.heat_lower,
            &AdversaryStrategy::heat(n)?,
            &xs,
            config.tol,
        )?);
        checks.push(check_lower_condition(
            &hs.max_lower,
            &AdversaryStrategy::max(n)?,
            &xs,
            config.tol,
        )?);
    }
    if wanted(Suite::Upper) {
        for h in [&hs.heat_upper, &hs.max_upper, &hs.exp] {
            checks.push(check_upper_condition(h, &xs, config.tol)?);
        }
        checks.push(check_exp_curvature(&hs.exp, &xs, config.tol, seed)?);
    }
    if wanted(Suite::FinalTime) {
        for h in [&hs.heat_lower, &hs.heat_upper, &hs.max_lower, &hs.max_upper] {
            checks.push(check_final_time(h, &xs)?);
        }
    }
    if wanted(Suite::Translation) {
        for h in hs.upper() {
            checks.push(check_translation_and_monotone(h, &xs, seed)?);
        }
    }
    if wanted(Suite::Gradients) {
        for h in hs.upper() {
            checks.push(check_gradient_consistency(h, &xs)?);
        }
    }
    if wanted(Suite::Simplex) {
        for h in hs.upper() {
            checks.push(check_simplex(h, &xs)?);
        }
    }
    if wanted(Suite::Permutation) {
        for h in hs.upper() {
            checks.push(check_permutation_symmetry(h, &xs, seed)?);
        }
    }
    if wanted(Suite::Pde) {
        for h in [&hs.heat_upper, &hs.max_upper] {
            checks.push(check_pde_residual(h, &xs, seed)?);
        }
    }
    let violations = checks.iter().map(|c| c.violations).sum();
    Ok(SuiteReport {
        suite,
        config: config.clone(),
        checks,
        violations,
        passed: violations == 0,
    })
}
