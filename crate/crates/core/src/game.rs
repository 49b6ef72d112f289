//! Game-state arithmetic shared by every strategy, oracle and simulator.
//!
//! The only state a Markovian strategy sees is the cumulative regret vector
//! `x`, where `x_i` is the player's realized loss minus expert `i`'s loss.
//! One round with expert losses `q` and followed expert `I` moves the state
//! by `q_I 1 - q`.
//!
//! Expert indices are zero-based throughout the crate.

use serde::{Deserialize, Serialize};
use std::ops::Deref;

use crate::error::{check_delta_half_open, Error, Result};

/// Slack below zero tolerated in a weight vector before it is rejected.
pub const SIMPLEX_CLIP: f64 = 1e-12;
/// Allowed deviation of a weight vector's sum from one.
pub const SIMPLEX_SUM_TOL: f64 = 1e-9;
/// Tolerance used when comparing the coordinates of an adversary mean.
pub const BALANCE_TOL: f64 = 1e-12;

/// Cumulative regret of the player against each expert.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretVector(Vec<f64>);

impl RegretVector {
    pub fn new(x: Vec<f64>) -> Result<Self> {
        if x.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "regret vector needs at least 2 experts, got {}",
                x.len()
            )));
        }
        if let Some(v) = x.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite regret {v}")));
        }
        Ok(Self(x))
    }

    pub fn zeros(n: usize) -> Result<Self> {
        Self::new(vec![0.0; n])
    }

    pub fn n(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Applies one round's instantaneous regret in place.
    pub fn advance(&mut self, r: &InstantRegret) {
        debug_assert_eq!(r.len(), self.0.len());
        for (xi, ri) in self.0.iter_mut().zip(r.iter()) {
            *xi += ri;
        }
    }
}

impl Deref for RegretVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// One draw of expert losses, each in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossOutcome(Vec<f64>);

impl LossOutcome {
    pub fn new(q: Vec<f64>) -> Result<Self> {
        if q.is_empty() {
            return Err(Error::InvalidArgument("empty loss outcome".into()));
        }
        if let Some(v) = q.iter().find(|v| !(-1.0..=1.0).contains(*v)) {
            return Err(Error::InvalidArgument(format!("loss {v} outside [-1, 1]")));
        }
        Ok(Self(q))
    }

    /// Builds a sign vector from a bit mask: bit `i` set means `q_i = +1`.
    pub fn from_sign_mask(n: usize, mask: u64) -> Self {
        Self(
            (0..n)
                .map(|i| if mask >> i & 1 == 1 { 1.0 } else { -1.0 })
                .collect(),
        )
    }

    pub fn n(&self) -> usize {
        self.0.len()
    }

    pub fn negated(&self) -> Self {
        Self(self.0.iter().map(|v| -v).collect())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl Deref for LossOutcome {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// A player's distribution over experts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimplexWeights(Vec<f64>);

impl SimplexWeights {
    /// Validates an already-normalized weight vector.
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::InvalidSimplex("empty".into()));
        }
        if let Some(v) = p.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidSimplex(format!("entry {v}")));
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_SUM_TOL {
            return Err(Error::InvalidSimplex(format!("sum {sum}")));
        }
        Ok(Self(p))
    }

    /// Clips entries in `[-SIMPLEX_CLIP, 0)` to zero and renormalizes.
    ///
    /// Anything more negative than the clip threshold is rejected, as is a
    /// vector with nonpositive mass.
    pub fn from_unnormalized(mut p: Vec<f64>) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::InvalidSimplex("empty".into()));
        }
        for v in p.iter_mut() {
            if !v.is_finite() || *v < -SIMPLEX_CLIP {
                return Err(Error::InvalidSimplex(format!("entry {v}")));
            }
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        let sum: f64 = p.iter().sum();
        if sum <= 0.0 {
            return Err(Error::InvalidSimplex(format!("sum {sum}")));
        }
        p.iter_mut().for_each(|v| *v /= sum);
        Ok(Self(p))
    }

    pub fn uniform(n: usize) -> Self {
        Self(vec![1.0 / n as f64; n])
    }

    pub fn n(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Index of the largest weight; lowest index on ties.
    pub fn argmax(&self) -> usize {
        argmax(&self.0)
    }
}

impl Deref for SimplexWeights {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Regret increment of one round, `q_I 1 - q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstantRegret(Vec<f64>);

impl Deref for InstantRegret {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Geometric stopping parameter.
///
/// With probability `delta` the game stops before each round, so the number
/// of rounds played is `t` with probability `delta (1 - delta)^t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometricHorizon {
    delta: f64,
}

impl GeometricHorizon {
    pub fn new(delta: f64) -> Result<Self> {
        check_delta_half_open(delta)?;
        Ok(Self { delta })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Expected number of rounds, `(1 - delta) / delta`.
    pub fn mean_rounds(&self) -> f64 {
        (1.0 - self.delta) / self.delta
    }

    /// Probability that exactly `t` rounds are played.
    pub fn pmf(&self, t: u64) -> f64 {
        self.delta * (1.0 - self.delta).powi(t as i32)
    }
}

/// Finite-support distribution over loss outcomes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdversaryDistribution {
    support: Vec<LossOutcome>,
    probs: Vec<f64>,
}

impl AdversaryDistribution {
    pub fn new(support: Vec<LossOutcome>, probs: Vec<f64>) -> Result<Self> {
        if support.is_empty() || support.len() != probs.len() {
            return Err(Error::InvalidArgument(format!(
                "support of size {} with {} probabilities",
                support.len(),
                probs.len()
            )));
        }
        let n = support[0].n();
        if support.iter().any(|q| q.n() != n) {
            return Err(Error::InvalidArgument("ragged support".into()));
        }
        if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::InvalidArgument("negative probability".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > SIMPLEX_SUM_TOL {
            return Err(Error::InvalidArgument(format!(
                "probabilities sum to {total}"
            )));
        }
        Ok(Self { support, probs })
    }

    pub fn uniform(support: Vec<LossOutcome>) -> Result<Self> {
        let k = support.len();
        Self::new(support, vec![1.0 / k as f64; k])
    }

    pub fn point_mass(q: LossOutcome) -> Self {
        Self {
            support: vec![q],
            probs: vec![1.0],
        }
    }

    pub fn n(&self) -> usize {
        self.support[0].n()
    }

    pub fn support(&self) -> &[LossOutcome] {
        &self.support
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn iter(&self) -> impl Iterator<Item = (&LossOutcome, f64)> {
        self.support.iter().zip(self.probs.iter().copied())
    }

    /// Componentwise expectation `E_a[q]`.
    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.n()];
        for (q, p) in self.iter() {
            for (mi, qi) in m.iter_mut().zip(q.iter()) {
                *mi += p * qi;
            }
        }
        m
    }

    /// Support closed under negation with matching probabilities.
    pub fn is_symmetric(&self) -> bool {
        self.iter().all(|(q, _)| {
            let neg = q.negated();
            let mass: f64 = self
                .iter()
                .filter(|(other, _)| **other == neg)
                .map(|(_, pp)| pp)
                .sum();
            let own: f64 = self
                .iter()
                .filter(|(other, _)| *other == q)
                .map(|(_, pp)| pp)
                .sum();
            (mass - own).abs() <= BALANCE_TOL
        })
    }
}

/// Regret increment when expert `i` is followed and losses are `q`.
pub fn instant_regret(q: &LossOutcome, i: usize) -> Result<InstantRegret> {
    let n = q.n();
    if i >= n {
        return Err(Error::IndexOutOfRange { index: i, n });
    }
    let qi = q[i];
    Ok(InstantRegret(q.iter().map(|qj| qi - qj).collect()))
}

/// Regret against the best expert: `max_i x_i`.
pub fn final_regret(x: &[f64]) -> f64 {
    x.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// True iff every coordinate of `E_a[q]` agrees to within [`BALANCE_TOL`].
pub fn check_balanced(a: &AdversaryDistribution) -> bool {
    let m = a.mean();
    let lo = m.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = m.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    hi - lo <= BALANCE_TOL
}

/// Index of the largest entry, lowest index on ties.
pub fn argmax(x: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in x.iter().enumerate().skip(1) {
        if *v > x[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(v: &[f64]) -> LossOutcome {
        LossOutcome::new(v.to_vec()).unwrap()
    }

    #[test]
    fn instant_regret_examples() {
        assert_eq!(&*instant_regret(&q(&[1.0, -1.0]), 0).unwrap(), &[0.0, 2.0]);
        assert_eq!(&*instant_regret(&q(&[1.0, -1.0]), 1).unwrap(), &[-2.0, 0.0]);
        assert_eq!(
            &*instant_regret(&q(&[1.0, -1.0, -1.0]), 0).unwrap(),
            &[0.0, 2.0, 2.0]
        );
        assert!(matches!(
            instant_regret(&q(&[1.0, -1.0]), 2),
            Err(Error::IndexOutOfRange { index: 2, n: 2 })
        ));
    }

    #[test]
    fn final_regret_examples() {
        assert_eq!(final_regret(&[0.0, 0.0]), 0.0);
        assert_eq!(final_regret(&[3.0, 1.0, 2.0]), 3.0);
        assert_eq!(final_regret(&[-1.0, -4.0]), -1.0);
    }

    #[test]
    fn balanced_examples() {
        let a = AdversaryDistribution::uniform(vec![q(&[1.0, -1.0]), q(&[-1.0, 1.0])]).unwrap();
        assert!(check_balanced(&a));
        assert!(a.is_symmetric());
        let b = AdversaryDistribution::point_mass(q(&[1.0, -1.0]));
        assert!(!check_balanced(&b));
        assert!(!b.is_symmetric());

        // every sign vector in {±1}^3 with coordinate sum ±1, found by enumeration
        let six: Vec<_> = (0..8u64)
            .map(|m| LossOutcome::from_sign_mask(3, m))
            .filter(|v| v.iter().sum::<f64>().abs() == 1.0)
            .collect();
        assert_eq!(six.len(), 6);
        let c = AdversaryDistribution::uniform(six).unwrap();
        assert!(check_balanced(&c));
    }

    #[test]
    fn constructors_validate() {
        assert!(RegretVector::new(vec![1.0]).is_err());
        assert!(RegretVector::new(vec![1.0, f64::NAN]).is_err());
        assert!(LossOutcome::new(vec![1.5, 0.0]).is_err());
        assert!(SimplexWeights::new(vec![0.5, 0.6]).is_err());
        assert!(SimplexWeights::from_unnormalized(vec![0.5, -1e-6, 0.5]).is_err());
        let w = SimplexWeights::from_unnormalized(vec![0.5, -1e-13, 0.5]).unwrap();
        assert_eq!(w[1], 0.0);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(GeometricHorizon::new(0.0).is_err());
        assert!(GeometricHorizon::new(1.0).is_ok());
        assert!(AdversaryDistribution::new(vec![q(&[1.0, 1.0])], vec![0.9]).is_err());
    }

    #[test]
    fn horizon_mean_follows_recursion() {
        let h = GeometricHorizon::new(0.5).unwrap();
        assert_eq!(h.mean_rounds(), 1.0);
        let s: f64 = (0..200).map(|t| t as f64 * h.pmf(t)).sum();
        assert!((s - 1.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn instant_regret_in_range(v in prop::collection::vec(-1.0f64..=1.0, 2..8), i in 0usize..8) {
            let qq = q(&v);
            let i = i % v.len();
            let r = instant_regret(&qq, i).unwrap();
            prop_assert_eq!(r[i], 0.0);
            prop_assert!(r.iter().all(|ri| (-2.0..=2.0).contains(ri)));
        }

        #[test]
        fn balanced_kills_first_order_term(
            p in prop::collection::vec(0.01f64..1.0, 3),
            g in prop::collection::vec(0.01f64..1.0, 3),
        ) {
            // balanced with a nonzero common mean: half the mass on the all-ones outcome
            let mut support: Vec<_> = (0..8u64)
                .map(|m| LossOutcome::from_sign_mask(3, m))
                .filter(|v| v.iter().sum::<f64>().abs() == 1.0)
                .collect();
            let k = support.len() as f64;
            let mut probs = vec![0.5 / k; support.len()];
            support.push(q(&[1.0, 1.0, 1.0]));
            probs.push(0.5);
            let a = AdversaryDistribution::new(support, probs).unwrap();
            prop_assert!(check_balanced(&a));
            let p = SimplexWeights::from_unnormalized(p).unwrap();
            let g = SimplexWeights::from_unnormalized(g).unwrap();
            let mean = a.mean();
            let s: f64 = (0..3).map(|i| (p[i] - g[i]) * mean[i]).sum();
            prop_assert!(s.abs() < 1e-12);
        }
    }
}
