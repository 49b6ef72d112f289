//! Finite differences of analytic gradients.
//!
//! With `g(e) = <grad u(x + e q), q>`, the directional derivatives are
//! `D^2 u[q,q] = g'(0)`, `D^3 u[q,q,q] = g''(0)`, `D^4 u[q,q,q,q] = g'''(0)`.
//! Central stencils are second order; steps are `eps^{1/3}`, `eps^{1/4}` and
//! `eps^{1/5}` times `max(1, |x|)`.

use serde::{Deserialize, Serialize};

use super::{Family, PotentialHandle};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirectionalEstimate {
    pub value: f64,
    pub step: f64,
    /// Set when a ranking change inside the central stencil forced a
    /// one-sided stencil.
    pub one_sided: bool,
}

/// Step for a derivative of `order` (2, 3 or 4) of the potential at `x`.
pub fn fd_step(order: u8, x: &[f64]) -> f64 {
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let root = match order {
        2 => 3.0,
        3 => 4.0,
        _ => 5.0,
    };
    f64::EPSILON.powf(1.0 / root) * norm.max(1.0)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Clone, Copy, PartialEq, Debug)]
enum Stencil {
    Central,
    Forward,
    Backward,
}

/// Chooses a stencil that stays inside one ranking region of `x + e q`
/// for `|e| <= reach`.
fn choose_stencil(x: &[f64], q: &[f64], reach: f64) -> Stencil {
    let mut fwd = true;
    let mut bwd = true;
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            let dq = q[i] - q[j];
            if dq == 0.0 {
                continue;
            }
            // x_i - x_j + e dq = 0
            let e = -(x[i] - x[j]) / dq;
            if e > 0.0 && e <= reach {
                fwd = false;
            }
            if e < 0.0 && e >= -reach {
                bwd = false;
            }
        }
    }
    // an exact tie broken by q leaves both half-lines smooth, but not the line
    let exact_tie = (0..x.len()).any(|i| (i + 1..x.len()).any(|j| x[i] == x[j] && q[i] != q[j]));
    if fwd && bwd && !exact_tie {
        Stencil::Central
    } else if fwd {
        Stencil::Forward
    } else if bwd {
        Stencil::Backward
    } else {
        Stencil::Forward
    }
}

/// Directional derivative of `order` from any gradient oracle.
///
/// `ranked` enables the tie guard used for the max family.
pub fn directional_from_gradient<G>(
    mut grad: G,
    x: &[f64],
    q: &[f64],
    order: u8,
    ranked: bool,
) -> Result<DirectionalEstimate>
where
    G: FnMut(&[f64], &mut [f64]),
{
    if !(2..=4).contains(&order) {
        return Err(Error::InvalidArgument(format!(
            "directional derivative order {order} not in 2..=4"
        )));
    }
    if q.len() != x.len() {
        return Err(Error::InvalidArgument("direction has wrong length".into()));
    }
    let h = fd_step(order, x);
    let reach = match order {
        2 => 2.0 * h,
        3 => 3.0 * h,
        _ => 4.0 * h,
    };
    let stencil = if ranked {
        choose_stencil(x, q, reach)
    } else {
        Stencil::Central
    };
    let n = x.len();
    let mut buf = vec![0.0; n];
    let mut pt = vec![0.0; n];
    let mut g = |e: f64| -> f64 {
        for k in 0..n {
            pt[k] = x[k] + e * q[k];
        }
        grad(&pt, &mut buf);
        dot(&buf, q)
    };
    let value = match (stencil, order) {
        (Stencil::Central, 2) => (g(h) - g(-h)) / (2.0 * h),
        (Stencil::Central, 3) => (g(h) - 2.0 * g(0.0) + g(-h)) / (h * h),
        (Stencil::Central, _) => {
            (g(2.0 * h) - 2.0 * g(h) + 2.0 * g(-h) - g(-2.0 * h)) / (2.0 * h * h * h)
        }
        (side, order) => {
            let s = if side == Stencil::Forward { 1.0 } else { -1.0 };
            let gk: Vec<f64> = (0..=order as usize + 1)
                .map(|k| g(s * k as f64 * h))
                .collect();
            match order {
                2 => s * (-3.0 * gk[0] + 4.0 * gk[1] - gk[2]) / (2.0 * h),
                3 => (2.0 * gk[0] - 5.0 * gk[1] + 4.0 * gk[2] - gk[3]) / (h * h),
                _ => {
                    s * (-5.0 * gk[0] + 18.0 * gk[1] - 24.0 * gk[2] + 14.0 * gk[3] - 3.0 * gk[4])
                        / (2.0 * h * h * h)
                }
            }
        }
    };
    Ok(DirectionalEstimate {
        value,
        step: h,
        one_sided: stencil != Stencil::Central,
    })
}

/// `<D^2 u q, q>`, `D^3 u[q,q,q]` or `D^4 u[q,q,q,q]` of the geometric potential.
pub fn directional_derivative(
    h: &PotentialHandle,
    x: &[f64],
    q: &[f64],
    order: u8,
) -> Result<DirectionalEstimate> {
    if x.len() != h.n() {
        return Err(Error::InvalidArgument("state has wrong length".into()));
    }
    directional_from_gradient(
        |y, out| h.gradient_into(y, out),
        x,
        q,
        order,
        h.family() == Family::Max,
    )
}

/// Symmetrized Hessian from central differences of a gradient oracle.
pub fn hessian_from_gradient<G>(mut grad: G, x: &[f64]) -> Vec<Vec<f64>>
where
    G: FnMut(&[f64], &mut [f64]),
{
    let n = x.len();
    let h = fd_step(2, x);
    let mut hess = vec![vec![0.0; n]; n];
    let mut plus = vec![0.0; n];
    let mut minus = vec![0.0; n];
    let mut pt = x.to_vec();
    for i in 0..n {
        pt[i] = x[i] + h;
        grad(&pt, &mut plus);
        pt[i] = x[i] - h;
        grad(&pt, &mut minus);
        pt[i] = x[i];
        for j in 0..n {
            hess[j][i] = (plus[j] - minus[j]) / (2.0 * h);
        }
    }
    for i in 0..n {
        for j in 0..i {
            let s = 0.5 * (hess[i][j] + hess[j][i]);
            hess[i][j] = s;
            hess[j][i] = s;
        }
    }
    hess
}

pub fn hessian(h: &PotentialHandle, x: &[f64]) -> Result<Vec<Vec<f64>>> {
    if x.len() != h.n() {
        return Err(Error::InvalidArgument("state has wrong length".into()));
    }
    Ok(hessian_from_gradient(|y, out| h.gradient_into(y, out), x))
}

pub fn quadratic_form(hess: &[Vec<f64>], q: &[f64]) -> f64 {
    hess.iter().zip(q).map(|(row, qi)| qi * dot(row, q)).sum()
}
