//! Monte Carlo estimation of expected final regret.
//!
//! Trial `k` draws from `ChaCha8Rng::seed_from_u64(seed)` on stream `k`, so a
//! run is reproducible and independent of thread count and scheduling.

use std::collections::HashMap;
use std::sync::RwLock;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_delta_half_open, Error, Result};
use crate::strategies::{AdversaryStrategy, PlayerKind, PlayerStrategy};

/// Default truncation cap is `ceil(CAP_FACTOR / delta)` rounds.
pub const CAP_FACTOR: f64 = 50.0;

#[derive(Debug, Clone)]
pub struct SimulationConfig {
    pub delta: f64,
    pub player: PlayerStrategy,
    pub adversary: AdversaryStrategy,
    pub trials: u64,
    pub seed: u64,
    pub max_rounds: u64,
}

impl SimulationConfig {
    pub fn new(
        player: PlayerStrategy,
        adversary: AdversaryStrategy,
        delta: f64,
        trials: u64,
        seed: u64,
    ) -> Result<Self> {
        check_delta_half_open(delta)?;
        if player.n() != adversary.n() {
            return Err(Error::InvalidArgument(format!(
                "player has {} experts, adversary has {}",
                player.n(),
                adversary.n()
            )));
        }
        if trials == 0 {
            return Err(Error::InvalidArgument("need at least one trial".into()));
        }
        Ok(Self {
            delta,
            player,
            adversary,
            trials,
            seed,
            max_rounds: default_cap(delta),
        })
    }

    pub fn with_max_rounds(mut self, cap: u64) -> Self {
        self.max_rounds = cap;
        self
    }

    pub fn n(&self) -> usize {
        self.player.n()
    }
}

pub fn default_cap(delta: f64) -> u64 {
    (CAP_FACTOR / delta).ceil() as u64
}

/// Number of rounds played, `P(T = t) = delta (1 - delta)^t`.
pub fn sample_horizon<R: Rng + ?Sized>(delta: f64, rng: &mut R) -> u64 {
    if delta >= 1.0 {
        return 0;
    }
    Geometric::new(delta).expect("delta in (0, 1)").sample(rng)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeOutcome {
    pub regret: f64,
    pub rounds: u64,
    pub truncated: bool,
    pub final_state: Vec<f64>,
    /// Per-coordinate sums of `q` and `q^2` over the rounds played.
    pub q_sum: Vec<f64>,
    pub q_sq_sum: Vec<f64>,
}

/// Player weights keyed on the exact bits of `x - x_N`.
///
/// Potential players are translation invariant, so the weights are always
/// computed at the reduced state; cached and fresh lookups agree bit for bit.
struct WeightCache<'a> {
    player: &'a PlayerStrategy,
    memo: Option<RwLock<HashMap<Vec<u64>, Vec<f64>>>>,
}

impl<'a> WeightCache<'a> {
    fn new(player: &'a PlayerStrategy) -> Self {
        let memo = matches!(player.kind(), PlayerKind::Heat | PlayerKind::Max)
            .then(|| RwLock::new(HashMap::new()));
        Self { player, memo }
    }

    fn weights(&self, x: &[f64], reduced: &mut Vec<f64>, out: &mut [f64]) {
        let last = x[x.len() - 1];
        reduced.clear();
        reduced.extend(x.iter().map(|v| v - last));
        let Some(memo) = &self.memo else {
            self.player.weights_into(reduced, out);
            return;
        };
        let key: Vec<u64> = reduced.iter().map(|v| v.to_bits()).collect();
        if let Some(p) = memo.read().expect("cache lock").get(&key) {
            out.copy_from_slice(p);
            return;
        }
        self.player.weights_into(reduced, out);
        memo.write().expect("cache lock").insert(key, out.to_vec());
    }
}

fn sample_index<R: Rng + ?Sized>(p: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.gen::<f64>() * p.iter().sum::<f64>();
    let mut acc = 0.0;
    for (i, &w) in p.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    p.iter().rposition(|&w| w > 0.0).unwrap_or(p.len() - 1)
}

/// Plays one episode from `x = 0` and returns its final regret and statistics.
pub fn play_episode<R: Rng + ?Sized>(config: &SimulationConfig, rng: &mut R) -> EpisodeOutcome {
    let cache = WeightCache::new(&config.player);
    episode(config, &cache, rng)
}

fn episode<R: Rng + ?Sized>(
    config: &SimulationConfig,
    cache: &WeightCache<'_>,
    rng: &mut R,
) -> EpisodeOutcome {
    let n = config.n();
    let horizon = sample_horizon(config.delta, rng);
    let rounds = horizon.min(config.max_rounds);
    let mut x = vec![0.0; n];
    let mut q = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut reduced = Vec::with_capacity(n);
    let mut q_sum = vec![0.0; n];
    let mut q_sq_sum = vec![0.0; n];
    for _ in 0..rounds {
        config.adversary.sample_into(&x, rng, &mut q);
        cache.weights(&x, &mut reduced, &mut p);
        let i = sample_index(&p, rng);
        let qi = q[i];
        for k in 0..n {
            x[k] += qi - q[k];
            q_sum[k] += q[k];
            q_sq_sum[k] += q[k] * q[k];
        }
    }
    let regret = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    debug_assert!(regret >= -2.0 * rounds as f64);
    EpisodeOutcome {
        regret,
        rounds,
        truncated: horizon > config.max_rounds,
        final_state: x,
        q_sum,
        q_sq_sum,
    }
}

fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Outcome of a single trial, reproducible in isolation.
pub fn run_trial(config: &SimulationConfig, trial: u64) -> EpisodeOutcome {
    play_episode(config, &mut trial_rng(config.seed, trial))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationResult {
    pub n: usize,
    pub delta: f64,
    pub player: String,
    pub adversary: String,
    pub seed: u64,
    pub mean_regret: f64,
    pub std_error: f64,
    pub trials_used: u64,
    pub truncated_trials: u64,
    pub max_rounds: u64,
    /// `P(T > max_rounds)`.
    pub truncation_probability: f64,
    pub mean_rounds: f64,
    pub total_rounds: u64,
    /// Pooled per-coordinate mean of the adversary's outcomes.
    pub mean_loss: Vec<f64>,
    pub mean_loss_std_error: Vec<f64>,
}

impl SimulationResult {
    /// Largest `|mean_loss_i| / se_i`; NaN when no rounds were played.
    pub fn max_loss_z_score(&self) -> f64 {
        if self.total_rounds == 0 {
            return f64::NAN;
        }
        self.mean_loss
            .iter()
            .zip(&self.mean_loss_std_error)
            .map(|(m, s)| match (*s > 0.0, *m == 0.0) {
                (true, _) => m.abs() / s,
                (false, true) => 0.0,
                (false, false) => f64::INFINITY,
            })
            .fold(0.0, f64::max)
    }
}

pub fn run(config: &SimulationConfig) -> Result<SimulationResult> {
    let cache = WeightCache::new(&config.player);
    let outcomes: Vec<EpisodeOutcome> = (0..config.trials)
        .into_par_iter()
        .map(|k| episode(config, &cache, &mut trial_rng(config.seed, k)))
        .collect();
    Ok(summarize(config, &outcomes))
}

fn summarize(config: &SimulationConfig, outcomes: &[EpisodeOutcome]) -> SimulationResult {
    let n = config.n();
    let m = outcomes.len() as f64;
    let mut sum = 0.0;
    let mut total_rounds = 0u64;
    let mut truncated = 0u64;
    let mut q_sum = vec![0.0; n];
    let mut q_sq_sum = vec![0.0; n];
    for o in outcomes {
        sum += o.regret;
        total_rounds += o.rounds;
        truncated += o.truncated as u64;
        for k in 0..n {
            q_sum[k] += o.q_sum[k];
            q_sq_sum[k] += o.q_sq_sum[k];
        }
    }
    let mean = sum / m;
    let var = if outcomes.len() > 1 {
        outcomes
            .iter()
            .map(|o| (o.regret - mean).powi(2))
            .sum::<f64>()
            / (m - 1.0)
    } else {
        0.0
    };
    let r = total_rounds as f64;
    let (mean_loss, mean_loss_std_error) = if total_rounds == 0 {
        (vec![0.0; n], vec![0.0; n])
    } else {
        q_sum
            .iter()
            .zip(&q_sq_sum)
            .map(|(s, s2)| {
                let mu = s / r;
                let v = if total_rounds > 1 {
                    ((s2 - r * mu * mu) / (r - 1.0)).max(0.0)
                } else {
                    0.0
                };
                (mu, (v / r).sqrt())
            })
            .unzip()
    };
    SimulationResult {
        n,
        delta: config.delta,
        player: config.player.kind().name().to_string(),
        adversary: config.adversary.kind().name().to_string(),
        seed: config.seed,
        mean_regret: mean,
        std_error: (var / m).sqrt(),
        trials_used: outcomes.len() as u64,
        truncated_trials: truncated,
        max_rounds: config.max_rounds,
        truncation_probability: (1.0 - config.delta).powf(config.max_rounds as f64 + 1.0),
        mean_rounds: r / m,
        total_rounds,
        mean_loss,
        mean_loss_std_error,
    }
}
