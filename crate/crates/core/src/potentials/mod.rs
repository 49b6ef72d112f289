//! Fixed-horizon potentials `u(x, t)` and their geometric versions
//! `u_hat(x) = e^delta * int_{-inf}^{-delta} e^t u(x, t) dt +/- C`.
//!
//! Every evaluation is built from fixed quadrature nodes, so values and
//! gradients are smooth functions of `x` and can be finite-differenced.

mod derivatives;
mod exp;
mod heat;
mod max;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use derivatives::{
    directional_derivative, directional_from_gradient, fd_step, hessian, hessian_from_gradient,
    quadratic_form, DirectionalEstimate,
};
pub use exp::{exp_potential_geometric, log_sum_exp, softmax};
pub use heat::{
    heat_gradient_fixed, heat_gradient_geometric, heat_potential_fixed, heat_potential_fixed_grid,
    heat_potential_geometric,
};
pub use max::{
    max_gradient_fixed, max_gradient_geometric, max_potential_fixed, max_potential_geometric,
    ranked_decomposition, RankedDecomposition,
};

use crate::error::{check_delta_open, check_time, Error, Result};
use crate::game::SimplexWeights;
use crate::specfun::{gaussian_max_expectation, CompositeRule, QuadratureSettings};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    ExpWeights,
    Heat,
    Max,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::ExpWeights => "exp",
            Family::Heat => "heat",
            Family::Max => "max",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exp" | "exp_weights" => Ok(Family::ExpWeights),
            "heat" => Ok(Family::Heat),
            "max" => Ok(Family::Max),
            _ => Err(Error::InvalidArgument(format!("unknown family `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Lower,
    Upper,
}

impl Side {
    pub fn name(self) -> &'static str {
        match self {
            Side::Lower => "lower",
            Side::Upper => "upper",
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Side {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lower" => Ok(Side::Lower),
            "upper" => Ok(Side::Upper),
            _ => Err(Error::InvalidArgument(format!("unknown side `{s}`"))),
        }
    }
}

/// Nodes `t_k` and weights `w_k` with
/// `e^delta * int_{-cutoff}^{-delta} e^t g(t) dt ~ sum w_k g(t_k)`.
///
/// Built in `s = sqrt(-t)`, where the integrand `2 s e^{-s^2} g(-s^2)` is
/// smooth; panels grow geometrically from `sqrt(delta)` and are capped in width.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeRule {
    pub t: Vec<f64>,
    pub weights: Vec<f64>,
}

const MAX_S_PANEL: f64 = 0.5;

impl TimeRule {
    pub fn new(delta: f64, quad: &QuadratureSettings) -> Result<Self> {
        check_delta_open(delta)?;
        quad.validate()?;
        let lo = delta.sqrt();
        let hi = quad.tail_cutoff.sqrt();
        let mut breaks = vec![lo];
        let mut b = lo;
        while b < hi {
            let next = (b * quad.panel_ratio).min(b + MAX_S_PANEL).min(hi);
            breaks.push(next);
            b = next;
        }
        if breaks.len() - 1 > quad.max_panels {
            return Err(Error::InvalidArgument(format!(
                "time grid needs {} panels, more than max_panels = {}",
                breaks.len() - 1,
                quad.max_panels
            )));
        }
        let rule = CompositeRule::from_breaks(&breaks, quad.gl_order);
        let scale = delta.exp();
        let t = rule.nodes.iter().map(|s| -s * s).collect();
        let weights = rule
            .nodes
            .iter()
            .zip(&rule.weights)
            .map(|(s, w)| scale * w * 2.0 * s * (-s * s).exp())
            .collect();
        Ok(Self { t, weights })
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// `sum_k w_k g(t_k)`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut g: F) -> f64 {
        self.t
            .iter()
            .zip(&self.weights)
            .map(|(t, w)| w * g(*t))
            .sum()
    }
}

/// A configured potential: family, size, horizon parameter, diffusion factor
/// or learning rate, and the shift constant `C`.
#[derive(Debug, Clone)]
pub struct PotentialHandle {
    family: Family,
    n: usize,
    delta: f64,
    kappa: Option<f64>,
    eta: Option<f64>,
    shift_constant: f64,
    quad: QuadratureSettings,
    rule: Option<Arc<TimeRule>>,
    /// `sigma_k = sqrt(2 kappa |t_k|)` on the time nodes.
    sigmas: Arc<Vec<f64>>,
}

impl PotentialHandle {
    /// Exponential weights with learning rate `eta`.
    pub fn exp_weights(n: usize, delta: f64, eta: f64) -> Result<Self> {
        check_delta_open(delta)?;
        if n == 0 {
            return Err(Error::InvalidArgument("need at least one expert".into()));
        }
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::OutOfDomain {
                name: "eta",
                value: eta,
                range: "(0, inf)",
            });
        }
        Ok(Self {
            family: Family::ExpWeights,
            n,
            delta,
            kappa: None,
            eta: Some(eta),
            shift_constant: (1.0 - delta) * eta / (2.0 * delta),
            quad: QuadratureSettings::default(),
            rule: None,
            sigmas: Arc::new(Vec::new()),
        })
    }

    /// Exponential weights with `eta = sqrt(2 delta log N / (1 - delta))`.
    pub fn exp_weights_tuned(n: usize, delta: f64) -> Result<Self> {
        check_delta_open(delta)?;
        if n < 2 {
            return Err(Error::InvalidArgument("tuned rate needs N >= 2".into()));
        }
        Self::exp_weights(n, delta, tuned_eta(n, delta))
    }

    pub fn heat(n: usize, delta: f64, kappa: f64) -> Result<Self> {
        Self::diffusive(Family::Heat, n, delta, kappa, QuadratureSettings::default())
    }

    pub fn max(n: usize, delta: f64, kappa: f64) -> Result<Self> {
        Self::diffusive(Family::Max, n, delta, kappa, QuadratureSettings::default())
    }

    /// Heat or max potential with explicit quadrature settings.
    pub fn diffusive(
        family: Family,
        n: usize,
        delta: f64,
        kappa: f64,
        quad: QuadratureSettings,
    ) -> Result<Self> {
        check_delta_open(delta)?;
        if n < 2 {
            return Err(Error::InvalidArgument(format!(
                "{family} potential needs N >= 2"
            )));
        }
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(Error::OutOfDomain {
                name: "kappa",
                value: kappa,
                range: "(0, inf)",
            });
        }
        let nf = n as f64;
        let shift_constant = match family {
            Family::Heat => (2.0 * kappa * delta).sqrt() * gaussian_max_expectation(n)?,
            Family::Max => 2.0 * (kappa * delta / std::f64::consts::PI).sqrt() * (nf - 1.0) / nf,
            Family::ExpWeights => {
                return Err(Error::Unsupported {
                    family: "exp",
                    what: "a diffusion factor",
                })
            }
        };
        let rule = TimeRule::new(delta, &quad)?;
        let sigmas = rule.t.iter().map(|t| (2.0 * kappa * -t).sqrt()).collect();
        Ok(Self {
            family,
            n,
            delta,
            kappa: Some(kappa),
            eta: None,
            shift_constant,
            quad,
            rule: Some(Arc::new(rule)),
            sigmas: Arc::new(sigmas),
        })
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn kappa(&self) -> Option<f64> {
        self.kappa
    }

    pub fn eta(&self) -> Option<f64> {
        self.eta
    }

    /// The magnitude `C >= 0` of the shift.
    pub fn shift_constant(&self) -> f64 {
        self.shift_constant
    }

    pub fn quadrature(&self) -> &QuadratureSettings {
        &self.quad
    }

    pub fn time_rule(&self) -> Option<&TimeRule> {
        self.rule.as_deref()
    }

    /// Signed shift added to the transformed potential on `side`.
    ///
    /// The max family is lowered by `C` for lower bounds and left unshifted
    /// for upper bounds; exponential weights only has an upper side.
    pub fn signed_shift(&self, side: Side) -> Result<f64> {
        match (self.family, side) {
            (Family::ExpWeights, Side::Upper) => Ok(self.shift_constant),
            (Family::ExpWeights, Side::Lower) => Err(Error::Unsupported {
                family: "exp",
                what: "a lower-bound potential",
            }),
            (Family::Heat, Side::Lower) | (Family::Max, Side::Lower) => Ok(-self.shift_constant),
            (Family::Heat, Side::Upper) => Ok(self.shift_constant),
            (Family::Max, Side::Upper) => Ok(0.0),
        }
    }

    fn check_len(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::InvalidArgument(format!(
                "state has {} coordinates, potential expects {}",
                x.len(),
                self.n
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "state has non-finite entries".into(),
            ));
        }
        Ok(())
    }

    pub(crate) fn rule(&self) -> &TimeRule {
        self.rule
            .as_deref()
            .expect("diffusive potential has a time rule")
    }

    pub(crate) fn sigmas(&self) -> &[f64] {
        &self.sigmas
    }

    /// Geometric potential on `side` at `x`.
    pub fn value(&self, x: &[f64], side: Side) -> Result<f64> {
        self.check_len(x)?;
        let shift = self.signed_shift(side)?;
        Ok(self.transformed(x) + shift)
    }

    /// Unshifted transform (`Phi` for exponential weights).
    pub fn transformed(&self, x: &[f64]) -> f64 {
        match self.family {
            Family::ExpWeights => exp::log_sum_exp(x, self.eta.unwrap_or(1.0)),
            Family::Heat => heat::geometric_value(self, x),
            Family::Max => max::geometric_value(self, x),
        }
    }

    /// Gradient of the geometric potential, a probability vector.
    pub fn gradient(&self, x: &[f64]) -> Result<SimplexWeights> {
        self.check_len(x)?;
        let mut g = vec![0.0; self.n];
        self.gradient_into(x, &mut g);
        SimplexWeights::from_unnormalized(g)
    }

    /// Raw gradient without validation or renormalization.
    pub fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        match self.family {
            Family::ExpWeights => exp::softmax_into(x, self.eta.unwrap_or(1.0), out),
            Family::Heat => heat::geometric_gradient(self, x, out),
            Family::Max => max::geometric_gradient(self, x, out),
        }
    }

    /// Fixed-horizon potential `u(x, t)` for the heat and max families.
    pub fn fixed_value(&self, x: &[f64], t: f64) -> Result<f64> {
        self.check_len(x)?;
        check_time(t)?;
        let kappa = self.fixed_kappa()?;
        match self.family {
            Family::Heat => heat_potential_fixed_grid(x, t, kappa),
            _ => max_potential_fixed(x, t, kappa),
        }
    }

    /// Gradient of the fixed-horizon potential.
    pub fn fixed_gradient(&self, x: &[f64], t: f64) -> Result<Vec<f64>> {
        self.check_len(x)?;
        check_time(t)?;
        let kappa = self.fixed_kappa()?;
        let g = match self.family {
            Family::Heat => heat_gradient_fixed(x, t, kappa)?,
            _ => max_gradient_fixed(x, t, kappa)?,
        };
        Ok(g.into_inner())
    }

    fn fixed_kappa(&self) -> Result<f64> {
        self.kappa.ok_or(Error::Unsupported {
            family: "exp",
            what: "a fixed-horizon potential",
        })
    }
}

/// `eta = sqrt(2 delta log N / (1 - delta))`.
pub fn tuned_eta(n: usize, delta: f64) -> f64 {
    (2.0 * delta * (n as f64).ln() / (1.0 - delta)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::{integrate, laplace_sqrt_integral};
    use approx::assert_abs_diff_eq;

    #[test]
    fn time_rule_integrates_laplace_kernel() {
        for delta in [1e-6, 1e-3, 0.05, 0.5] {
            let rule = TimeRule::new(delta, &QuadratureSettings::default()).unwrap();
            // e^delta int e^t dt = 1 up to the truncated tail
            assert_abs_diff_eq!(rule.integrate(|_| 1.0), 1.0, epsilon = 1e-13);
            let sq = rule.integrate(|t| (-t).sqrt());
            let exact = delta.exp() * laplace_sqrt_integral(delta).unwrap();
            assert_abs_diff_eq!(sq, exact, epsilon = 1e-12 * exact);
        }
    }

    #[test]
    fn time_rule_matches_adaptive_quadrature() {
        let delta = 0.03;
        let rule = TimeRule::new(delta, &QuadratureSettings::default()).unwrap();
        let g = |t: f64| (1.0 + (-t).sqrt()).ln() * (0.3 * t).cos();
        let oracle = integrate(
            |t| delta.exp() * t.exp() * g(t),
            -40.0,
            -delta,
            &QuadratureSettings::precise(),
        )
        .unwrap()
        .value;
        assert_abs_diff_eq!(rule.integrate(g), oracle, epsilon = 1e-11);
    }

    #[test]
    fn handle_validation() {
        assert!(PotentialHandle::heat(1, 0.1, 1.0).is_err());
        assert!(PotentialHandle::heat(3, 1.0, 1.0).is_err());
        assert!(PotentialHandle::max(3, 0.1, -1.0).is_err());
        assert!(PotentialHandle::exp_weights(2, 0.1, 0.0).is_err());
        let h = PotentialHandle::heat(3, 0.1, 9.0).unwrap();
        assert!(h.value(&[0.0, 0.0], Side::Lower).is_err());
        assert!(h.value(&[0.0, f64::NAN, 0.0], Side::Lower).is_err());
        let e = PotentialHandle::exp_weights_tuned(2, 0.5).unwrap();
        assert!(e.value(&[0.0, 0.0], Side::Lower).is_err());
        assert!(e.fixed_value(&[0.0, 0.0], -1.0).is_err());
        assert!(h.fixed_value(&[0.0, 0.0, 0.0], 0.0).is_err());
    }

    #[test]
    fn shift_constants() {
        let delta = 0.1;
        let kappa = 4.0;
        let h = PotentialHandle::heat(2, delta, kappa).unwrap();
        let c = (2.0 * kappa * delta).sqrt() / std::f64::consts::PI.sqrt();
        assert_abs_diff_eq!(h.shift_constant(), c, epsilon = 1e-12);
        assert_abs_diff_eq!(h.signed_shift(Side::Lower).unwrap(), -c, epsilon = 1e-12);
        assert_abs_diff_eq!(h.signed_shift(Side::Upper).unwrap(), c, epsilon = 1e-12);
        let m = PotentialHandle::max(3, delta, kappa).unwrap();
        let cm = 2.0 * (kappa * delta / std::f64::consts::PI).sqrt() * 2.0 / 3.0;
        assert_abs_diff_eq!(m.shift_constant(), cm, epsilon = 1e-15);
        assert_eq!(m.signed_shift(Side::Upper).unwrap(), 0.0);
    }

    #[test]
    fn names_round_trip() {
        for f in [Family::ExpWeights, Family::Heat, Family::Max] {
            assert_eq!(f.name().parse::<Family>().unwrap(), f);
        }
        for s in [Side::Lower, Side::Upper] {
            assert_eq!(s.name().parse::<Side>().unwrap(), s);
        }
        assert!("gauss".parse::<Family>().is_err());
    }
}
