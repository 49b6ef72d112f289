//! Value iteration on the integer lattice for small `N`.
//!
//! States are integer regret vectors reduced along `𝟙` by pinning the last
//! coordinate to zero. Outcomes are sign vectors, so every coordinate
//! difference moves by `-2`, `0` or `2` per round and only the even
//! sublattice reachable from the origin is stored. A state belongs to the
//! table when its spread `max x - min x` is at most `radius`.
//!
//! A transition that leaves the table is valued at `max x` of the state it
//! lands on, as if the game stopped there. Against a balanced adversary
//! `max x` is a submartingale, so this exit rule can only lower the value and
//! the adversary table is a lower bound on `v_a`. The rigorous gap at the
//! origin is reported as `boundary_slack`.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_delta_half_open, Error, Result};
use crate::game::LossOutcome;
use crate::potentials::{PotentialHandle, Side};
use crate::strategies::{AdversaryStrategy, PlayerStrategy};

/// Largest `N` the oracle accepts.
pub const MAX_ORACLE_N: usize = 4;
pub const DEFAULT_TOLERANCE: f64 = 1e-8;

const EXIT: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailBound {
    pub t: i64,
    pub s_of_t: f64,
}

/// `2 (1 - delta)^(-t) / delta`: the most regret can still change after `-t`
/// rounds have already been played.
pub fn tail_bound(t: i64, delta: f64) -> Result<TailBound> {
    check_delta_half_open(delta)?;
    if t > 0 {
        return Err(Error::OutOfDomain {
            name: "t",
            value: t as f64,
            range: "t <= 0",
        });
    }
    Ok(TailBound {
        t,
        s_of_t: 2.0 * (1.0 - delta).powi((-t).min(i32::MAX as i64) as i32) / delta,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleKind {
    /// Fixed adversary, minimizing player.
    Adversary,
    /// Fixed player, maximizing vertex adversary.
    Player,
}

#[derive(Debug, Clone)]
pub struct LatticeValueFunction {
    pub kind: OracleKind,
    pub n: usize,
    pub delta: f64,
    pub radius: u32,
    pub tolerance: f64,
    /// Sup-norm change of the final sweep.
    pub residual: f64,
    /// `residual (1 - delta) / delta`, a bound on the distance to the fixed point.
    pub error_bound: f64,
    pub sweeps: usize,
    pub converged: bool,
    /// Worst-case effect of the exit rule on the value at the origin.
    pub boundary_slack: f64,
    states: Vec<Vec<i64>>,
    values: Vec<f64>,
    policy: Vec<usize>,
    index: HashMap<Vec<i64>, usize>,
}

impl LatticeValueFunction {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Reduced states with the last coordinate equal to zero.
    pub fn states(&self) -> &[Vec<i64>] {
        &self.states
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Optimizing action at state `i`: an expert index for adversary tables,
    /// an index into the vertex set for player tables.
    pub fn policy(&self, i: usize) -> usize {
        self.policy[i]
    }

    /// Value at an arbitrary integer state, using `v(x + c𝟙) = v(x) + c`.
    pub fn get(&self, x: &[i64]) -> Option<f64> {
        if x.len() != self.n {
            return None;
        }
        let last = x[self.n - 1];
        let key: Vec<i64> = x.iter().map(|v| v - last).collect();
        self.index.get(&key).map(|&i| self.values[i] + last as f64)
    }

    pub fn value_at_origin(&self) -> f64 {
        self.get(&vec![0; self.n]).expect("origin is always stored")
    }

    /// All one-step successors of state `i` stay in the table.
    pub fn is_interior(&self, i: usize) -> bool {
        spread(&self.states[i]) + 2 <= self.radius as i64
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[i64], f64)> {
        self.states
            .iter()
            .map(|s| s.as_slice())
            .zip(self.values.iter().copied())
    }

    pub fn summary(&self) -> OracleSummary {
        OracleSummary {
            kind: self.kind,
            n: self.n,
            delta: self.delta,
            radius: self.radius,
            tolerance: self.tolerance,
            states: self.len(),
            value_at_origin: self.value_at_origin(),
            residual: self.residual,
            error_bound: self.error_bound,
            sweeps: self.sweeps,
            converged: self.converged,
            boundary_slack: self.boundary_slack,
            radius_sufficient: self.boundary_slack < self.tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSummary {
    pub kind: OracleKind,
    pub n: usize,
    pub delta: f64,
    pub radius: u32,
    pub tolerance: f64,
    pub states: usize,
    pub value_at_origin: f64,
    pub residual: f64,
    pub error_bound: f64,
    pub sweeps: usize,
    pub converged: bool,
    pub boundary_slack: f64,
    /// Whether `boundary_slack < tolerance`.
    pub radius_sufficient: bool,
}

fn spread(x: &[i64]) -> i64 {
    let hi = x.iter().copied().max().unwrap_or(0);
    let lo = x.iter().copied().min().unwrap_or(0);
    hi - lo
}

/// Even-sublattice states of spread at most `radius`, last coordinate zero.
struct Lattice {
    n: usize,
    half: i64,
    states: Vec<Vec<i64>>,
    lookup: Vec<u32>,
}

impl Lattice {
    fn new(n: usize, radius: u32) -> Self {
        let half = (radius / 2) as i64;
        let side = (2 * half + 1) as usize;
        let dims = n - 1;
        let mut lookup = vec![EXIT; side.pow(dims as u32)];
        let mut states = Vec::new();
        let mut z = vec![-half; dims];
        'outer: loop {
            let mut full: Vec<i64> = z.iter().map(|v| 2 * v).collect();
            full.push(0);
            if spread(&full) <= 2 * half {
                lookup[Self::offset(&z, half, side)] = states.len() as u32;
                states.push(full);
            }
            for d in 0..dims {
                if z[d] < half {
                    z[d] += 1;
                    continue 'outer;
                }
                z[d] = -half;
            }
            break;
        }
        Self {
            n,
            half,
            states,
            lookup,
        }
    }

    fn offset(z: &[i64], half: i64, side: usize) -> usize {
        z.iter()
            .rev()
            .fold(0usize, |acc, &v| acc * side + (v + half) as usize)
    }

    /// Successor of state `s` when expert `i` is chosen against `q`:
    /// either `(index, shift)` with value `v[index] + shift`, or `(EXIT, max x')`.
    fn step(&self, s: usize, q: &[f64], i: usize) -> (u32, f64) {
        let n = self.n;
        let x = &self.states[s];
        let moved: Vec<i64> = (0..n).map(|j| x[j] + (q[i] - q[j]) as i64).collect();
        let last = moved[n - 1];
        let z: Vec<i64> = moved[..n - 1].iter().map(|v| (v - last) / 2).collect();
        let side = (2 * self.half + 1) as usize;
        let inside = z.iter().all(|v| v.abs() <= self.half) && {
            let idx = self.lookup[Self::offset(&z, self.half, side)];
            idx != EXIT
        };
        if inside {
            (self.lookup[Self::offset(&z, self.half, side)], last as f64)
        } else {
            (EXIT, *moved.iter().max().expect("n >= 2") as f64)
        }
    }
}

fn check_instance(n: usize, delta: f64, radius: u32, tol: f64) -> Result<()> {
    check_delta_half_open(delta)?;
    if !(2..=MAX_ORACLE_N).contains(&n) {
        return Err(Error::Unsupported {
            family: "oracle",
            what: "lattice oracles beyond N = 4",
        });
    }
    if radius < 2 {
        return Err(Error::InvalidArgument("radius must be at least 2".into()));
    }
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    Ok(())
}

fn check_vertex(q: &[f64]) -> Result<()> {
    if q.iter().all(|&v| v == 1.0 || v == -1.0) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(
            "oracle outcomes must be sign vectors".into(),
        ))
    }
}

#[inline]
fn successor(v: &[f64], (idx, add): (u32, f64)) -> f64 {
    if idx == EXIT {
        add
    } else {
        v[idx as usize] + add
    }
}

/// Jacobi sweeps of `v <- delta max x + (1 - delta) B(v)` starting from `max x`.
fn iterate<F>(
    lattice: &Lattice,
    delta: f64,
    tol: f64,
    continuation: F,
) -> (Vec<f64>, Vec<usize>, f64, usize, bool)
where
    F: Fn(usize, &[f64]) -> (f64, usize) + Sync,
{
    let maxx: Vec<f64> = lattice
        .states
        .iter()
        .map(|s| *s.iter().max().expect("n >= 2") as f64)
        .collect();
    let mut v = maxx.clone();
    let mut policy = vec![0; v.len()];
    // Stop once the a posteriori bound residual (1 - delta) / delta is below tol.
    let target = tol * delta / (1.0 - delta).max(f64::MIN_POSITIVE);
    let max_sweeps = ((tol.ln() - 40.0) / (1.0 - delta).ln()).ceil().max(1.0) as usize;
    let mut residual = f64::INFINITY;
    let mut sweeps = 0;
    while sweeps < max_sweeps {
        let next: Vec<(f64, usize)> = (0..v.len())
            .into_par_iter()
            .map(|s| {
                let (c, a) = continuation(s, &v);
                (delta * maxx[s] + (1.0 - delta) * c, a)
            })
            .collect();
        residual = next
            .iter()
            .zip(&v)
            .map(|((a, _), b)| (a - b).abs())
            .fold(0.0, f64::max);
        for (s, (val, a)) in next.into_iter().enumerate() {
            v[s] = val;
            policy[s] = a;
        }
        sweeps += 1;
        if residual <= target {
            break;
        }
    }
    let converged = residual <= target;
    (v, policy, residual, sweeps, converged)
}

fn finish(
    kind: OracleKind,
    lattice: Lattice,
    delta: f64,
    radius: u32,
    tol: f64,
    solved: (Vec<f64>, Vec<usize>, f64, usize, bool),
) -> Result<LatticeValueFunction> {
    let (values, policy, residual, sweeps, converged) = solved;
    let index = lattice
        .states
        .iter()
        .enumerate()
        .map(|(i, s)| (s.clone(), i))
        .collect();
    // Leaving the table from the origin takes more than radius / 2 rounds.
    let boundary_slack = tail_bound(-((radius / 2) as i64 + 1), delta)?.s_of_t;
    Ok(LatticeValueFunction {
        kind,
        n: lattice.n,
        delta,
        radius,
        tolerance: tol,
        residual,
        error_bound: if delta < 1.0 {
            residual * (1.0 - delta) / delta
        } else {
            0.0
        },
        sweeps,
        converged,
        boundary_slack,
        states: lattice.states,
        values,
        policy,
        index,
    })
}

/// Value of the fixed adversary `a` against a best-responding player.
///
/// Solves `v(x) = delta max x + (1 - delta) min_i E_a[v(x + q_i 𝟙 - q)]`; the
/// minimum over the simplex sits at a vertex because the objective is linear.
pub fn value_iteration_adversary(
    a: &AdversaryStrategy,
    delta: f64,
    radius: u32,
    tol: f64,
) -> Result<LatticeValueFunction> {
    let n = a.n();
    check_instance(n, delta, radius, tol)?;
    let lattice = Lattice::new(n, radius);
    // Per state: outcome probabilities and successors for each expert.
    let mut trans: Vec<Vec<(f64, Vec<(u32, f64)>)>> = Vec::with_capacity(lattice.states.len());
    for s in 0..lattice.states.len() {
        let x: Vec<f64> = lattice.states[s].iter().map(|&v| v as f64).collect();
        let dist = a.distribution(&x)?;
        let mut row = Vec::with_capacity(dist.support().len());
        for (q, p) in dist.iter() {
            check_vertex(q)?;
            row.push((p, (0..n).map(|i| lattice.step(s, q, i)).collect()));
        }
        trans.push(row);
    }
    let solved = iterate(&lattice, delta, tol, |s, v| {
        let mut best = (f64::INFINITY, 0);
        for i in 0..n {
            let e: f64 = trans[s].iter().map(|(p, nx)| p * successor(v, nx[i])).sum();
            if e < best.0 {
                best = (e, i);
            }
        }
        best
    });
    finish(OracleKind::Adversary, lattice, delta, radius, tol, solved)
}

/// Every sign vector in `{-1, 1}^n`.
pub fn all_vertices(n: usize) -> Vec<LossOutcome> {
    (0..1u64 << n)
        .map(|m| LossOutcome::from_sign_mask(n, m))
        .collect()
}

/// Value of the fixed player `p` against the best adversary restricted to
/// deterministic outcomes from `vertices`. This lower-bounds the player's
/// value against unrestricted adversaries.
pub fn value_iteration_player(
    p: &PlayerStrategy,
    delta: f64,
    radius: u32,
    tol: f64,
    vertices: &[LossOutcome],
) -> Result<LatticeValueFunction> {
    let n = p.n();
    check_instance(n, delta, radius, tol)?;
    if vertices.is_empty() {
        return Err(Error::InvalidArgument("empty vertex set".into()));
    }
    for q in vertices {
        if q.n() != n {
            return Err(Error::InvalidArgument("vertex has wrong length".into()));
        }
        check_vertex(q)?;
    }
    let lattice = Lattice::new(n, radius);
    let weights: Vec<Vec<f64>> = lattice
        .states
        .par_iter()
        .map(|s| {
            let x: Vec<f64> = s.iter().map(|&v| v as f64).collect();
            let mut w = vec![0.0; n];
            p.weights_into(&x, &mut w);
            w
        })
        .collect();
    let trans: Vec<Vec<Vec<(u32, f64)>>> = (0..lattice.states.len())
        .map(|s| {
            vertices
                .iter()
                .map(|q| (0..n).map(|i| lattice.step(s, q, i)).collect())
                .collect()
        })
        .collect();
    let solved = iterate(&lattice, delta, tol, |s, v| {
        let mut best = (f64::NEG_INFINITY, 0);
        for (k, nx) in trans[s].iter().enumerate() {
            let e: f64 = weights[s]
                .iter()
                .zip(nx)
                .map(|(w, &t)| w * successor(v, t))
                .sum();
            if e > best.0 {
                best = (e, k);
            }
        }
        best
    });
    finish(OracleKind::Player, lattice, delta, radius, tol, solved)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SandwichReport {
    pub side: Side,
    pub error_term: f64,
    pub tolerance: f64,
    pub checked: usize,
    pub violations: usize,
    /// Smallest slack over interior states; negative means a violation.
    pub worst_margin: f64,
    pub worst_state: Vec<i64>,
    pub passed: bool,
}

fn sandwich(
    vf: &LatticeValueFunction,
    side: Side,
    error_term: f64,
    tol: f64,
    margin: impl Fn(f64, f64) -> f64 + Sync,
    potential: impl Fn(&[f64]) -> Result<f64> + Sync,
) -> Result<SandwichReport> {
    let interior: Vec<usize> = (0..vf.len()).filter(|&i| vf.is_interior(i)).collect();
    let margins: Vec<f64> = interior
        .par_iter()
        .map(|&i| {
            let x: Vec<f64> = vf.states[i].iter().map(|&v| v as f64).collect();
            Ok(margin(vf.values[i], potential(&x)?))
        })
        .collect::<Result<_>>()?;
    let mut worst = (f64::INFINITY, 0);
    for (k, &m) in margins.iter().enumerate() {
        if m < worst.0 {
            worst = (m, interior[k]);
        }
    }
    let violations = margins.iter().filter(|&&m| m < 0.0).count();
    Ok(SandwichReport {
        side,
        error_term,
        tolerance: tol,
        checked: interior.len(),
        violations,
        worst_margin: worst.0,
        worst_state: vf.states.get(worst.1).cloned().unwrap_or_default(),
        passed: violations == 0,
    })
}

/// Checks `u(x) - error_term <= v(x) + tol` at interior states, where `u` is
/// the lower potential of `h`.
pub fn sandwich_lower(
    vf: &LatticeValueFunction,
    h: &PotentialHandle,
    error_term: f64,
    tol: f64,
) -> Result<SandwichReport> {
    check_handle(vf, h)?;
    sandwich(
        vf,
        Side::Lower,
        error_term,
        tol,
        |v, u| v + tol - (u - error_term),
        |x| h.value(x, Side::Lower),
    )
}

/// Checks `v(x) <= w(x) + error_term + tol` at interior states, where `w` is
/// the upper potential of `h`.
pub fn sandwich_upper(
    vf: &LatticeValueFunction,
    h: &PotentialHandle,
    error_term: f64,
    tol: f64,
) -> Result<SandwichReport> {
    check_handle(vf, h)?;
    sandwich(
        vf,
        Side::Upper,
        error_term,
        tol,
        |v, w| w + error_term + tol - v,
        |x| h.value(x, Side::Upper),
    )
}

fn check_handle(vf: &LatticeValueFunction, h: &PotentialHandle) -> Result<()> {
    if h.n() != vf.n || (h.delta() - vf.delta).abs() > 0.0 {
        return Err(Error::InvalidArgument(
            "potential and value table describe different games".into(),
        ));
    }
    Ok(())
}
