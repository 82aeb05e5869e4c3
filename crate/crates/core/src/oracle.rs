//! Exact reference computations.
//!
//! [`exact_reliability_enum`] counts, for every `d`, the `d`-subsets of the
//! `NM` disks whose failure loses data (more than `k` nodes with more than
//! `ℓ` failed disks). [`markov_mttdl`] gives the exact mean time to data
//! loss of the failure process with instantaneous restriping, on a chain
//! lumped by how many nodes sit at each failed-disk count.

use std::collections::HashMap;

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;

use crate::analytic::DiskReliability;
use crate::combinatorics::{binomial, compensated_sum};
use crate::config::{FailureModel, HraidConfig};
use crate::error::{Error, Result};

/// Largest array the enumeration accepts.
pub const MAX_ENUM_DISKS: usize = 64;

/// Fatal `d`-subset counts for `d = 0..=NM`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnreliabilityPolynomial {
    total_disks: usize,
    fatal_counts: Vec<BigUint>,
}

impl UnreliabilityPolynomial {
    pub fn total_disks(&self) -> usize {
        self.total_disks
    }

    pub fn fatal_counts(&self) -> &[BigUint] {
        &self.fatal_counts
    }

    pub fn fatal_count(&self, d: usize) -> &BigUint {
        &self.fatal_counts[d]
    }

    /// `C(NM, d)`.
    pub fn total_subsets(&self, d: usize) -> BigUint {
        binomial(self.total_disks, d)
    }

    /// Smallest `d` with a fatal `d`-subset.
    pub fn min_fatal_size(&self) -> Option<usize> {
        self.fatal_counts.iter().position(|c| !c.is_zero())
    }

    /// `Σ_d fatal[d] ε^d (1-ε)^(NM-d)`.
    pub fn unreliability(&self, eps: DiskReliability) -> f64 {
        let e = eps.epsilon();
        compensated_sum(self.fatal_counts.iter().enumerate().map(|(d, c)| {
            big_to_f64(c) * e.powi(d as i32) * (1.0 - e).powi((self.total_disks - d) as i32)
        }))
    }

    /// `Σ_d (C(NM,d) - fatal[d]) ε^d (1-ε)^(NM-d)`.
    pub fn reliability(&self, eps: DiskReliability) -> f64 {
        let e = eps.epsilon();
        compensated_sum(self.fatal_counts.iter().enumerate().map(|(d, c)| {
            let survivors = self.total_subsets(d) - c;
            big_to_f64(&survivors) * e.powi(d as i32) * (1.0 - e).powi((self.total_disks - d) as i32)
        }))
    }

    /// CSV with header `d,total_subsets,fatal_count`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("d,total_subsets,fatal_count\n");
        for (d, c) in self.fatal_counts.iter().enumerate() {
            out.push_str(&format!("{d},{},{c}\n", self.total_subsets(d)));
        }
        out
    }
}

fn big_to_f64(v: &BigUint) -> f64 {
    v.to_f64().expect("counts below 2^64 choose 32 fit an f64")
}

/// Count fatal subsets by dynamic programming over nodes.
///
/// State after some nodes: (disks failed so far, failed nodes capped at
/// `k+1`). A node with `f` failed disks contributes `C(M, f)` subsets.
pub fn exact_reliability_enum(config: &HraidConfig) -> Result<UnreliabilityPolynomial> {
    let total = config.total_disks();
    if total > MAX_ENUM_DISKS {
        return Err(Error::invalid(
            "N*M <= 64",
            format!("N*M={total}"),
        ));
    }
    let (m, k, l) = (config.m(), config.k(), config.l());
    let per_node: Vec<BigUint> = (0..=m).map(|f| binomial(m, f)).collect();
    let cap = k + 1;
    // ways[d][failed_nodes]
    let mut ways = vec![vec![BigUint::zero(); cap + 1]; total + 1];
    ways[0][0] = BigUint::from(1u32);
    let mut used = 0;
    for _ in 0..config.n() {
        let mut next = vec![vec![BigUint::zero(); cap + 1]; total + 1];
        for d in 0..=used {
            for dead in 0..=cap {
                if ways[d][dead].is_zero() {
                    continue;
                }
                for f in 0..=m {
                    let nd = if f > l { (dead + 1).min(cap) } else { dead };
                    next[d + f][nd] += &ways[d][dead] * &per_node[f];
                }
            }
        }
        ways = next;
        used += m;
    }
    Ok(UnreliabilityPolynomial {
        total_disks: total,
        fatal_counts: ways.into_iter().map(|mut w| w.swap_remove(cap)).collect(),
    })
}

/// Fewest failed disks that can lose data.
pub fn min_fatal_size(config: &HraidConfig) -> Result<usize> {
    Ok(exact_reliability_enum(config)?
        .min_fatal_size()
        .expect("k < N, so failing every disk is fatal"))
}

/// Nodes grouped by failed-disk count, plus the number of dead nodes.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct LumpedState {
    /// `counts[f]`: alive nodes with `f` failed disks, `f = 0..=ℓ`.
    pub counts: Vec<usize>,
    pub dead_nodes: usize,
}

impl LumpedState {
    pub fn fresh(config: &HraidConfig) -> Self {
        let mut counts = vec![0; config.l() + 1];
        counts[0] = config.n();
        LumpedState {
            counts,
            dead_nodes: 0,
        }
    }

    /// Outgoing `(rate, next state)` pairs.
    fn transitions(&self, config: &HraidConfig, rates: &FailureModel) -> Vec<(f64, LumpedState)> {
        let (m, l) = (config.m(), config.l());
        let mut out = Vec::with_capacity(2 * self.counts.len());
        for (f, &c) in self.counts.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let mut disk = self.clone();
            disk.counts[f] -= 1;
            let mut killed = disk.clone();
            if f < l {
                disk.counts[f + 1] += 1;
            } else {
                disk.dead_nodes += 1;
            }
            out.push((c as f64 * (m - f) as f64 * rates.disk_rate(), disk));
            if rates.controller_rate() > 0.0 {
                killed.dead_nodes += 1;
                out.push((c as f64 * rates.controller_rate(), killed));
            }
        }
        out
    }
}

/// Exact MTTDL (hours) from the fresh state.
///
/// A disk failure in a node with `f < ℓ` failed disks moves it to `f + 1`; at
/// `f = ℓ` the node dies, as it does on a controller failure. Dead nodes and
/// their remaining disks leave the process. Data is lost when `k + 1` nodes
/// are dead. The chain only moves forward, so expected absorption times are
/// filled in by memoised recursion.
pub fn markov_mttdl(config: &HraidConfig, rates: &FailureModel) -> f64 {
    let mut memo = HashMap::new();
    expected_time(&LumpedState::fresh(config), config, rates, &mut memo)
}

fn expected_time(
    state: &LumpedState,
    config: &HraidConfig,
    rates: &FailureModel,
    memo: &mut HashMap<LumpedState, f64>,
) -> f64 {
    if state.dead_nodes > config.k() {
        return 0.0;
    }
    if let Some(&t) = memo.get(state) {
        return t;
    }
    let transitions = state.transitions(config, rates);
    let total: f64 = transitions.iter().map(|(r, _)| r).sum();
    let ahead = compensated_sum(
        transitions
            .iter()
            .map(|(r, next)| r / total * expected_time(next, config, rates, memo)),
    );
    let t = 1.0 / total + ahead;
    memo.insert(state.clone(), t);
    t
}

/// Non-absorbing states reachable from the fresh state.
pub fn markov_state_count(config: &HraidConfig, rates: &FailureModel) -> usize {
    let mut memo = HashMap::new();
    expected_time(&LumpedState::fresh(config), config, rates, &mut memo);
    memo.len()
}

/// Closed form for RAID0 nodes (`ℓ = 0`): every failure kills a node, so
/// MTTDL is `Σ_{i=0..k} 1/((N-i)(Mδ + γ))`.
pub fn raid0_nodes_mttdl(config: &HraidConfig, rates: &FailureModel) -> Option<f64> {
    if config.l() != 0 {
        return None;
    }
    let per_node = config.m() as f64 * rates.disk_rate() + rates.controller_rate();
    Some((0..=config.k()).map(|i| 1.0 / ((config.n() - i) as f64 * per_node)).sum())
}
