//! Max potential `psi(x, t) = mean(x) + sigma sum_l c_l f(z_l)` in ranked
//! coordinates, with `c_l = 1/(l(l+1))` and `z_l = g_l / sigma`,
//! `g_l = sum_{n <= l} (x_(n) - x_(l+1))`.

use serde::{Deserialize, Serialize};

use super::{Family, PotentialHandle, Side};
use crate::error::{check_time, Error, Result};
use crate::game::SimplexWeights;
use crate::specfun::{erf, max_profile};
use std::f64::consts::FRAC_1_SQRT_2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedDecomposition {
    /// `order[k]` is the index of the `(k+1)`-th largest coordinate.
    pub order: Vec<usize>,
    /// `z_1, ..., z_{N-1}`.
    pub z: Vec<f64>,
    pub sigma: f64,
}

pub(crate) struct Ranked {
    pub order: Vec<usize>,
    /// `g_1, ..., g_{N-1}`, all nonnegative.
    pub gaps: Vec<f64>,
    pub mean: f64,
}

/// Stable descending sort (value, then index) and the cumulative gaps.
pub(crate) fn rank(x: &[f64]) -> Ranked {
    let n = x.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| x[b].total_cmp(&x[a]).then(a.cmp(&b)));
    let mut gaps = Vec::with_capacity(n.saturating_sub(1));
    let mut g = 0.0;
    for l in 1..n {
        g += l as f64 * (x[order[l - 1]] - x[order[l]]);
        gaps.push(g);
    }
    Ranked {
        order,
        gaps,
        mean: x.iter().sum::<f64>() / n as f64,
    }
}

#[inline]
fn c(l: usize) -> f64 {
    let l = l as f64;
    1.0 / (l * (l + 1.0))
}

/// Scatters ranked slopes `e_l = f'(z_l)` into the gradient.
fn scatter(r: &Ranked, e: &[f64], out: &mut [f64]) {
    let n = r.order.len();
    let base = 1.0 / n as f64;
    // suffix[k] = sum_{l >= k+1} c_l e_l (1-based l over gaps)
    let mut suffix = 0.0;
    for k in (0..n).rev() {
        // ranked position k+1
        if k < n - 1 {
            suffix += c(k + 1) * e[k];
        }
        let back = if k > 0 {
            k as f64 * c(k) * e[k - 1]
        } else {
            0.0
        };
        out[r.order[k]] = base + suffix - back;
    }
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

pub fn ranked_decomposition(x: &[f64], t: f64, kappa: f64) -> Result<RankedDecomposition> {
    let sigma = check_state(x, t, kappa)?;
    let r = rank(x);
    Ok(RankedDecomposition {
        z: r.gaps.iter().map(|g| g / sigma).collect(),
        order: r.order,
        sigma,
    })
}

pub fn max_potential_fixed(x: &[f64], t: f64, kappa: f64) -> Result<f64> {
    let sigma = check_state(x, t, kappa)?;
    let r = rank(x);
    let s: f64 = r
        .gaps
        .iter()
        .enumerate()
        .map(|(i, g)| c(i + 1) * max_profile(g / sigma))
        .sum();
    Ok(r.mean + sigma * s)
}

/// Analytic gradient; at ties the sorted order picks a subgradient.
pub fn max_gradient_fixed(x: &[f64], t: f64, kappa: f64) -> Result<SimplexWeights> {
    let sigma = check_state(x, t, kappa)?;
    let r = rank(x);
    let e: Vec<f64> = r
        .gaps
        .iter()
        .map(|g| erf(g / sigma * FRAC_1_SQRT_2))
        .collect();
    let mut out = vec![0.0; x.len()];
    scatter(&r, &e, &mut out);
    SimplexWeights::from_unnormalized(out)
}

pub(crate) fn geometric_value(h: &PotentialHandle, x: &[f64]) -> f64 {
    let r = rank(x);
    let rule = h.rule();
    let mut acc = 0.0;
    for (l, g) in r.gaps.iter().enumerate() {
        let s: f64 = rule
            .weights
            .iter()
            .zip(h.sigmas())
            .map(|(w, sigma)| w * sigma * max_profile(g / sigma))
            .sum();
        acc += c(l + 1) * s;
    }
    r.mean + acc
}

pub(crate) fn geometric_gradient(h: &PotentialHandle, x: &[f64], out: &mut [f64]) {
    let r = rank(x);
    let rule = h.rule();
    let e: Vec<f64> = r
        .gaps
        .iter()
        .map(|g| {
            rule.weights
                .iter()
                .zip(h.sigmas())
                .map(|(w, sigma)| w * erf(g / sigma * FRAC_1_SQRT_2))
                .sum()
        })
        .collect();
    scatter(&r, &e, out);
}

fn require_max(h: &PotentialHandle) -> Result<()> {
    if h.family() == Family::Max {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "expected a max potential, got {}",
            h.family()
        )))
    }
}

/// `psi_hat(x) - C` (lower) or `psi_hat(x)` (upper).
pub fn max_potential_geometric(x: &[f64], h: &PotentialHandle, side: Side) -> Result<f64> {
    require_max(h)?;
    h.value(x, side)
}

pub fn max_gradient_geometric(x: &[f64], h: &PotentialHandle) -> Result<SimplexWeights> {
    require_max(h)?;
    h.gradient(x)
}
