//! Players and adversaries.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bounds::DiffusionConstants;
use crate::error::{Error, Result};
use crate::game::{argmax, AdversaryDistribution, LossOutcome, SimplexWeights};
use crate::potentials::{Family, PotentialHandle};

/// Largest `N` whose heat adversary support is enumerated.
pub const HEAT_ENUMERATION_LIMIT: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlayerKind {
    ExpWeights,
    Heat,
    Max,
    Uniform,
    FollowBest,
}

impl PlayerKind {
    pub fn name(self) -> &'static str {
        match self {
            PlayerKind::ExpWeights => "exp",
            PlayerKind::Heat => "heat",
            PlayerKind::Max => "max",
            PlayerKind::Uniform => "uniform",
            PlayerKind::FollowBest => "follow_best",
        }
    }
}

impl fmt::Display for PlayerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PlayerKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exp" | "exp_weights" => Ok(PlayerKind::ExpWeights),
            "heat" => Ok(PlayerKind::Heat),
            "max" => Ok(PlayerKind::Max),
            "uniform" => Ok(PlayerKind::Uniform),
            "follow_best" | "follow-best" => Ok(PlayerKind::FollowBest),
            _ => Err(Error::InvalidArgument(format!("unknown player `{s}`"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PlayerStrategy {
    kind: PlayerKind,
    n: usize,
    handle: Option<PotentialHandle>,
}

impl PlayerStrategy {
    /// Exponential weights with `eta = sqrt(2 delta log N / (1 - delta))`.
    pub fn exp_weights(n: usize, delta: f64) -> Result<Self> {
        Ok(Self {
            kind: PlayerKind::ExpWeights,
            n,
            handle: Some(PotentialHandle::exp_weights_tuned(n, delta)?),
        })
    }

    /// Gradient of the heat upper potential with `kappa = (1 - delta) / delta`.
    pub fn heat(n: usize, delta: f64) -> Result<Self> {
        let dc = DiffusionConstants::new(n, delta)?;
        Self::from_handle(PotentialHandle::heat(n, delta, dc.kappa_heat_ub)?)
    }

    /// Gradient of the max upper potential with `kappa = kappa_m`.
    pub fn max(n: usize, delta: f64) -> Result<Self> {
        let dc = DiffusionConstants::new(n, delta)?;
        Self::from_handle(PotentialHandle::max(n, delta, dc.kappa_m)?)
    }

    pub fn uniform(n: usize) -> Result<Self> {
        Self::plain(PlayerKind::Uniform, n)
    }

    /// All weight on the current leader (lowest index on ties).
    pub fn follow_best(n: usize) -> Result<Self> {
        Self::plain(PlayerKind::FollowBest, n)
    }

    fn plain(kind: PlayerKind, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("need at least one expert".into()));
        }
        Ok(Self {
            kind,
            n,
            handle: None,
        })
    }

    /// Gradient player of an arbitrary potential.
    pub fn from_handle(handle: PotentialHandle) -> Result<Self> {
        let kind = match handle.family() {
            Family::ExpWeights => PlayerKind::ExpWeights,
            Family::Heat => PlayerKind::Heat,
            Family::Max => PlayerKind::Max,
        };
        Ok(Self {
            kind,
            n: handle.n(),
            handle: Some(handle),
        })
    }

    pub fn new(kind: PlayerKind, n: usize, delta: f64) -> Result<Self> {
        match kind {
            PlayerKind::ExpWeights => Self::exp_weights(n, delta),
            PlayerKind::Heat => Self::heat(n, delta),
            PlayerKind::Max => Self::max(n, delta),
            PlayerKind::Uniform => Self::uniform(n),
            PlayerKind::FollowBest => Self::follow_best(n),
        }
    }

    pub fn kind(&self) -> PlayerKind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn handle(&self) -> Option<&PotentialHandle> {
        self.handle.as_ref()
    }

    pub fn weights(&self, x: &[f64]) -> Result<SimplexWeights> {
        if x.len() != self.n {
            return Err(Error::InvalidArgument(format!(
                "state has {} coordinates, player expects {}",
                x.len(),
                self.n
            )));
        }
        let mut p = vec![0.0; self.n];
        self.weights_into(x, &mut p);
        SimplexWeights::from_unnormalized(p)
    }

    /// Unchecked weights into `out`.
    pub fn weights_into(&self, x: &[f64], out: &mut [f64]) {
        match (&self.handle, self.kind) {
            (Some(h), _) => h.gradient_into(x, out),
            (None, PlayerKind::FollowBest) => {
                out.iter_mut().for_each(|o| *o = 0.0);
                out[argmax(x)] = 1.0;
            }
            (None, _) => {
                let u = 1.0 / self.n as f64;
                out.iter_mut().for_each(|o| *o = u);
            }
        }
    }
}

pub fn exp_weights_player(x: &[f64], n: usize, delta: f64) -> Result<SimplexWeights> {
    PlayerStrategy::exp_weights(n, delta)?.weights(x)
}

pub fn heat_player(x: &[f64], h: &PotentialHandle) -> Result<SimplexWeights> {
    crate::potentials::heat_gradient_geometric(x, h)
}

pub fn max_player(x: &[f64], h: &PotentialHandle) -> Result<SimplexWeights> {
    crate::potentials::max_gradient_geometric(x, h)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdversaryKind {
    Heat,
    Max,
}

impl AdversaryKind {
    pub fn name(self) -> &'static str {
        match self {
            AdversaryKind::Heat => "heat",
            AdversaryKind::Max => "max",
        }
    }
}

impl fmt::Display for AdversaryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AdversaryKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "heat" => Ok(AdversaryKind::Heat),
            "max" => Ok(AdversaryKind::Max),
            _ => Err(Error::InvalidArgument(format!("unknown adversary `{s}`"))),
        }
    }
}

/// Sign vectors with `sum q = 0` (even N) or `sum q = +-1` (odd N).
pub fn heat_adversary_support(n: usize) -> Result<Vec<LossOutcome>> {
    if n < 2 {
        return Err(Error::InvalidArgument("heat adversary needs N >= 2".into()));
    }
    if n > HEAT_ENUMERATION_LIMIT {
        return Err(Error::Unsupported {
            family: "heat",
            what: "enumerating the adversary support beyond N = 20",
        });
    }
    let mut out = Vec::new();
    for mask in 0..1u64 << n {
        let plus = mask.count_ones() as i64;
        let sum = 2 * plus - n as i64;
        let keep = if n.is_multiple_of(2) { sum == 0 } else { sum.abs() == 1 };
        if keep {
            out.push(LossOutcome::from_sign_mask(n, mask));
        }
    }
    Ok(out)
}

/// `1/2` on each of `+-q`, `q = +1` at the leader (lowest index) and `-1` elsewhere.
pub fn max_adversary(x: &[f64]) -> Result<AdversaryDistribution> {
    if x.is_empty() {
        return Err(Error::InvalidArgument("empty state".into()));
    }
    let q = max_outcome(x);
    AdversaryDistribution::new(vec![q.clone(), q.negated()], vec![0.5, 0.5])
}

fn max_outcome(x: &[f64]) -> LossOutcome {
    let n = x.len();
    LossOutcome::from_sign_mask(n, 1u64 << argmax(x))
}

#[derive(Debug, Clone)]
pub struct AdversaryStrategy {
    kind: AdversaryKind,
    n: usize,
    heat: Option<Arc<AdversaryDistribution>>,
}

impl AdversaryStrategy {
    pub fn new(kind: AdversaryKind, n: usize) -> Result<Self> {
        match kind {
            AdversaryKind::Heat => Self::heat(n),
            AdversaryKind::Max => Self::max(n),
        }
    }

    pub fn heat(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidArgument("heat adversary needs N >= 2".into()));
        }
        let heat = if n <= HEAT_ENUMERATION_LIMIT {
            Some(Arc::new(AdversaryDistribution::uniform(
                heat_adversary_support(n)?,
            )?))
        } else {
            None
        };
        Ok(Self {
            kind: AdversaryKind::Heat,
            n,
            heat,
        })
    }

    pub fn max(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidArgument("max adversary needs N >= 2".into()));
        }
        Ok(Self {
            kind: AdversaryKind::Max,
            n,
            heat: None,
        })
    }

    pub fn kind(&self) -> AdversaryKind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// The heat adversary ignores the state.
    pub fn is_stationary(&self) -> bool {
        self.kind == AdversaryKind::Heat
    }

    pub fn distribution(&self, x: &[f64]) -> Result<AdversaryDistribution> {
        if x.len() != self.n {
            return Err(Error::InvalidArgument("state has wrong length".into()));
        }
        match self.kind {
            AdversaryKind::Heat => self.heat.as_deref().cloned().ok_or(Error::Unsupported {
                family: "heat",
                what: "enumerating the adversary support beyond N = 20",
            }),
            AdversaryKind::Max => max_adversary(x),
        }
    }

    /// Draws one outcome at state `x`.
    pub fn sample<R: Rng + ?Sized>(&self, x: &[f64], rng: &mut R) -> LossOutcome {
        let mut q = vec![0.0; self.n];
        self.sample_into(x, rng, &mut q);
        LossOutcome::new(q).expect("signs are in range")
    }

    /// Draws one outcome at state `x` into `out` without allocating.
    pub fn sample_into<R: Rng + ?Sized>(&self, x: &[f64], rng: &mut R, out: &mut [f64]) {
        match self.kind {
            AdversaryKind::Max => {
                let lead = argmax(x);
                let s = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                for (i, o) in out.iter_mut().enumerate() {
                    *o = if i == lead { s } else { -s };
                }
            }
            AdversaryKind::Heat => match &self.heat {
                Some(d) => {
                    let q = &d.support()[rng.gen_range(0..d.support().len())];
                    out.copy_from_slice(q);
                }
                None => {
                    let n = self.n;
                    let plus = if n.is_multiple_of(2) {
                        n / 2
                    } else if rng.gen_bool(0.5) {
                        n.div_ceil(2)
                    } else {
                        (n - 1) / 2
                    };
                    out.iter_mut().for_each(|o| *o = -1.0);
                    for i in sample(rng, n, plus) {
                        out[i] = 1.0;
                    }
                }
            },
        }
    }
}
