//! Monte Carlo MTTDL.
//!
//! Each trial runs the failure process of one array until data loss: with
//! total failure rate `Λ = δ·Σ_alive (M - f_i) + γ·alive`, the next failure
//! arrives after an exponential(Λ) delay and hits a component chosen in
//! proportion to its rate. Restriping is instantaneous and nothing is ever
//! replaced.
//!
//! Trial `i` draws from its own stream keyed by `stream_seed(seed, i)`, so
//! estimates do not depend on how trials are scheduled across threads.

mod report;

use rand::distributions::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use report::{sweep_csv, write_sweep_csv, CSV_HEADER};

use crate::combinatorics::compensated_sum;
use crate::config::{FailureModel, HraidConfig, MAX_TOLERANCE};
use crate::error::{Error, Result};

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of stream `index` under `seed`:
/// `mix64(seed + mix64((index + 1) · 0x9E3779B97F4A7C15))`, wrapping.
pub fn stream_seed(seed: u64, index: u64) -> u64 {
    mix64(seed.wrapping_add(mix64(index.wrapping_add(1).wrapping_mul(GOLDEN))))
}

/// Random source for one trial.
#[derive(Debug, Clone)]
pub struct TrialStream(ChaCha8Rng);

impl TrialStream {
    pub fn new(seed: u64, index: u64) -> Self {
        TrialStream(ChaCha8Rng::seed_from_u64(stream_seed(seed, index)))
    }

    /// Exponential sample with the given rate.
    fn exponential(&mut self, rate: f64) -> f64 {
        let u: f64 = self.0.sample(Open01);
        -u.ln() / rate
    }

    fn uniform(&mut self) -> f64 {
        self.0.gen()
    }
}

/// Alive nodes' failed-disk counts during one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemState {
    /// `Some(f)` for an alive node with `f` failed disks, `None` once dead.
    nodes: Vec<Option<usize>>,
    dead_nodes: usize,
    elapsed_hours: f64,
}

impl SystemState {
    pub fn fresh(config: &HraidConfig) -> Self {
        SystemState {
            nodes: vec![Some(0); config.n()],
            dead_nodes: 0,
            elapsed_hours: 0.0,
        }
    }

    pub fn failed_disks(&self, node: usize) -> Option<usize> {
        self.nodes[node - 1]
    }

    pub fn dead_nodes(&self) -> usize {
        self.dead_nodes
    }

    pub fn elapsed_hours(&self) -> f64 {
        self.elapsed_hours
    }

    pub fn alive_nodes(&self) -> usize {
        self.nodes.len() - self.dead_nodes
    }

    fn total_rate(&self, m: usize, rates: &FailureModel) -> f64 {
        let live_disks: usize = self.nodes.iter().flatten().map(|f| m - f).sum();
        live_disks as f64 * rates.disk_rate() + self.alive_nodes() as f64 * rates.controller_rate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureKind {
    Disk,
    Controller,
}

/// What a failure did to the array.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Effect {
    /// The node rebuilt over its highest remaining intra-node check class.
    Restriped { intra_class: u8 },
    /// The node died and the array rebuilt it over an inter-node check class.
    NodeFailed { inter_class: u8 },
    DataLoss,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub time_hours: f64,
    /// 1-based node index.
    pub node: usize,
    pub kind: FailureKind,
    pub effect: Effect,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum LossCause {
    DiskCascade,
    Controller,
}

/// One trial's outcome, with its full failure history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataLossEvent {
    pub time_hours: f64,
    pub cause: LossCause,
    pub disk_failures: usize,
    pub controller_failures: usize,
    pub trace: Vec<TraceEvent>,
}

/// Trial outcome without the trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialOutcome {
    pub time_hours: f64,
    pub cause: LossCause,
    pub disk_failures: usize,
    pub controller_failures: usize,
}

fn run<F: FnMut(TraceEvent)>(
    config: &HraidConfig,
    rates: &FailureModel,
    stream: &mut TrialStream,
    mut record: F,
) -> TrialOutcome {
    let (m, k, l) = (config.m(), config.k(), config.l());
    let (delta, gamma) = (rates.disk_rate(), rates.controller_rate());
    let mut state = SystemState::fresh(config);
    let mut disk_failures = 0;
    let mut controller_failures = 0;
    loop {
        let total = state.total_rate(m, rates);
        state.elapsed_hours += stream.exponential(total);
        let mut target = stream.uniform() * total;

        // Walk the components in a fixed order: node disks, then its controller.
        let mut hit = None;
        let mut last_alive = 0;
        for (i, node) in state.nodes.iter().enumerate() {
            let Some(f) = *node else { continue };
            last_alive = i;
            let disk = (m - f) as f64 * delta;
            if target < disk {
                hit = Some((i, FailureKind::Disk));
                break;
            }
            target -= disk;
            if gamma > 0.0 {
                if target < gamma {
                    hit = Some((i, FailureKind::Controller));
                    break;
                }
                target -= gamma;
            }
        }
        // Rounding can push the target past the last component.
        let (node, kind) = hit.unwrap_or((last_alive, FailureKind::Disk));
        let failed = state.nodes[node].expect("chosen node is alive");
        match kind {
            FailureKind::Disk => disk_failures += 1,
            FailureKind::Controller => controller_failures += 1,
        }

        let event = |effect| TraceEvent {
            time_hours: state.elapsed_hours,
            node: node + 1,
            kind,
            effect,
        };
        if kind == FailureKind::Disk && failed < l {
            // Check classes are consumed from the top: with ℓ = 2, Q before P.
            let intra_class = (l - 1 - failed) as u8;
            record(event(Effect::Restriped { intra_class }));
            state.nodes[node] = Some(failed + 1);
            continue;
        }
        state.nodes[node] = None;
        state.dead_nodes += 1;
        if state.dead_nodes > k {
            record(event(Effect::DataLoss));
            let cause = match kind {
                FailureKind::Disk => LossCause::DiskCascade,
                FailureKind::Controller => LossCause::Controller,
            };
            return TrialOutcome {
                time_hours: state.elapsed_hours,
                cause,
                disk_failures,
                controller_failures,
            };
        }
        let inter_class = (k - state.dead_nodes) as u8;
        record(event(Effect::NodeFailed { inter_class }));
    }
}

/// Run one trial to data loss, recording every failure.
pub fn simulate_trial(
    config: &HraidConfig,
    rates: &FailureModel,
    stream: &mut TrialStream,
) -> DataLossEvent {
    let mut trace = Vec::new();
    let outcome = run(config, rates, stream, |e| trace.push(e));
    DataLossEvent {
        time_hours: outcome.time_hours,
        cause: outcome.cause,
        disk_failures: outcome.disk_failures,
        controller_failures: outcome.controller_failures,
        trace,
    }
}

/// Run one trial to data loss without keeping a trace.
pub fn run_trial(config: &HraidConfig, rates: &FailureModel, stream: &mut TrialStream) -> TrialOutcome {
    run(config, rates, stream, |_| {})
}

/// Traced replays of trials `0..count` of an estimate with this seed.
pub fn trace_trials(
    config: &HraidConfig,
    rates: &FailureModel,
    seed: u64,
    count: u64,
) -> Vec<DataLossEvent> {
    (0..count)
        .map(|i| simulate_trial(config, rates, &mut TrialStream::new(seed, i)))
        .collect()
}

/// Outcomes of trials `0..trials`, in trial order, run on the current rayon pool.
pub fn run_trials(
    config: &HraidConfig,
    rates: &FailureModel,
    trials: u64,
    seed: u64,
) -> Vec<TrialOutcome> {
    (0..trials)
        .into_par_iter()
        .map(|i| run_trial(config, rates, &mut TrialStream::new(seed, i)))
        .collect()
}

/// Mean time to data loss over independent trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MttdlEstimate {
    pub trials: u64,
    pub seed: u64,
    pub mean_hours: f64,
    /// Sample standard deviation of the loss times (0 for a single trial).
    pub std_dev_hours: f64,
    /// `mean ± 1.96 s / √trials`.
    pub ci95_low: f64,
    pub ci95_high: f64,
    /// Fewest disk failures seen before a loss, over all trials.
    pub min_disk_failures: usize,
    pub max_disk_failures: usize,
}

impl MttdlEstimate {
    pub fn from_outcomes(outcomes: &[TrialOutcome], seed: u64) -> Result<Self> {
        if outcomes.is_empty() {
            return Err(Error::invalid("trials >= 1", "trials=0"));
        }
        let n = outcomes.len() as f64;
        let mean = compensated_sum(outcomes.iter().map(|o| o.time_hours)) / n;
        let std_dev = if outcomes.len() > 1 {
            let ss = compensated_sum(outcomes.iter().map(|o| (o.time_hours - mean).powi(2)));
            (ss / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        let half = 1.96 * std_dev / n.sqrt();
        Ok(MttdlEstimate {
            trials: outcomes.len() as u64,
            seed,
            mean_hours: mean,
            std_dev_hours: std_dev,
            ci95_low: mean - half,
            ci95_high: mean + half,
            min_disk_failures: outcomes.iter().map(|o| o.disk_failures).min().unwrap_or(0),
            max_disk_failures: outcomes.iter().map(|o| o.disk_failures).max().unwrap_or(0),
        })
    }

    pub fn contains(&self, hours: f64) -> bool {
        self.ci95_low <= hours && hours <= self.ci95_high
    }
}

pub fn estimate_mttdl(
    config: &HraidConfig,
    rates: &FailureModel,
    trials: u64,
    seed: u64,
) -> Result<MttdlEstimate> {
    if trials == 0 {
        return Err(Error::invalid("trials >= 1", "trials=0"));
    }
    MttdlEstimate::from_outcomes(&run_trials(config, rates, trials, seed), seed)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub config: HraidConfig,
    pub rates: FailureModel,
    pub estimate: MttdlEstimate,
}

/// Estimates for every `(k, ℓ)` apportionment of one geometry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub n: usize,
    pub m: usize,
    pub rates: FailureModel,
    pub trials: u64,
    pub seed: u64,
    /// Ordered by `ℓ`, then `k`; apportionments the geometry cannot hold are absent.
    pub cells: Vec<SweepCell>,
}

impl SweepTable {
    pub fn cell(&self, k: usize, l: usize) -> Option<&SweepCell> {
        self.cells
            .iter()
            .find(|c| c.config.k() == k && c.config.l() == l)
    }
}

/// Seed of the `(k, ℓ)` cell of a sweep; independent of the rates, so tables
/// for different rates are paired trial by trial.
pub fn cell_seed(seed: u64, k: usize, l: usize) -> u64 {
    stream_seed(seed ^ 0x5EED_CE11_0000_0000, (l * (MAX_TOLERANCE + 1) + k) as u64)
}

/// The `k, ℓ ∈ 0..=3` table for `N` nodes of `M` disks.
pub fn sweep(n: usize, m: usize, rates: &FailureModel, trials: u64, seed: u64) -> Result<SweepTable> {
    if trials == 0 {
        return Err(Error::invalid("trials >= 1", "trials=0"));
    }
    HraidConfig::new(n, m, 0, 0)?;
    let configs: Vec<HraidConfig> = (0..=MAX_TOLERANCE)
        .flat_map(|l| (0..=MAX_TOLERANCE).map(move |k| (k, l)))
        .filter_map(|(k, l)| HraidConfig::new(n, m, k, l).ok())
        .collect();
    let cells = configs
        .into_par_iter()
        .map(|config| {
            let seed = cell_seed(seed, config.k(), config.l());
            estimate_mttdl(&config, rates, trials, seed).map(|estimate| SweepCell {
                config,
                rates: *rates,
                estimate,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepTable {
        n,
        m,
        rates: *rates,
        trials,
        seed,
        cells,
    })
}
