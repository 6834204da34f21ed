//! Slotted Monte-Carlo simulation of all-to-all dissemination.
//!
//! Each slot one transmitter is drawn uniformly among all nodes, it encodes
//! and broadcasts, and every other node independently receives with its link
//! probability. The run stops at the first slot after which every node can
//! decode (network-coded protocol) or holds every packet (random-selection
//! baseline).
//!
//! Per-trial RNG streams are split off the master seed with the ChaCha stream
//! counter, so trials are reproducible independently of scheduling order.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::coding::{CodedMessage, InformationPacket, SubspaceBuffer};
use crate::galois::{FieldContext, GaloisError};
use crate::radio::ReceptionMatrix;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Field(#[from] GaloisError),
    #[error("at least one trial is required")]
    NoTrials,
    #[error("payload must contain at least one symbol")]
    EmptyPayload,
    #[error("max_slots {max_slots} is below the network size {n}")]
    MaxSlotsTooSmall { max_slots: u64, n: usize },
}

/// Dissemination protocol under test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Protocol {
    /// Random linear network coding over GF(2^q).
    Nc,
    /// Non-coding baseline: the transmitter broadcasts a uniformly chosen
    /// stored information packet.
    RandomSelection,
}

impl Protocol {
    pub fn as_str(self) -> &'static str {
        match self {
            Protocol::Nc => "nc",
            Protocol::RandomSelection => "random_selection",
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Protocol {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "nc" => Ok(Protocol::Nc),
            "random_selection" | "baseline" => Ok(Protocol::RandomSelection),
            other => Err(format!("unknown protocol `{other}`")),
        }
    }
}

/// Simulation parameters shared by every trial of an experiment.
#[derive(Debug, Clone)]
pub struct SimConfig {
    /// Field width for coding coefficients and symbols.
    pub q: u8,
    /// Payload symbols per information packet.
    pub r: usize,
    pub protocol: Protocol,
    pub trials: u64,
    /// Master seed; trial k runs on stream k of this seed.
    pub seed: u64,
    /// Safety cap per trial; defaults to 50 * N^2 when unset.
    pub max_slots: Option<u64>,
    /// Record the per-slot total dimension increase D(t).
    pub record_trace: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            q: 8,
            r: 4,
            protocol: Protocol::Nc,
            trials: 200,
            seed: 42,
            max_slots: None,
            record_trace: false,
        }
    }
}

impl SimConfig {
    pub fn effective_max_slots(&self, n: usize) -> u64 {
        self.max_slots.unwrap_or(50 * (n as u64).pow(2))
    }

    fn validate(&self, n: usize) -> Result<(), EngineError> {
        if self.trials == 0 {
            return Err(EngineError::NoTrials);
        }
        if self.r == 0 {
            return Err(EngineError::EmptyPayload);
        }
        if let Some(max_slots) = self.max_slots {
            if max_slots < n as u64 {
                return Err(EngineError::MaxSlotsTooSmall { max_slots, n });
            }
        }
        // field width must be constructible even for the baseline, so a config
        // is valid or invalid independently of the protocol
        FieldContext::new(self.q)?;
        Ok(())
    }
}

/// Outcome of one simulated trial.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrialResult {
    /// Slots until every node was complete, or the cap when `!completed`.
    pub stopping_time: u64,
    pub completed: bool,
    /// D(t) for t = 0..=stopping_time when tracing was requested.
    pub dimension_trace: Option<Vec<u64>>,
}

/// A completed NC trial together with the ground-truth packets and final
/// buffers, for decode verification.
#[derive(Debug)]
pub struct NcTrialOutcome {
    pub result: TrialResult,
    pub packets: Vec<InformationPacket>,
    pub buffers: Vec<SubspaceBuffer>,
}

/// Aggregate over the completed trials of an experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSummary {
    pub trials: u64,
    pub incomplete_count: u64,
    /// Mean stopping time over completed trials; NaN when degenerate.
    pub mean: f64,
    pub std_dev: f64,
    pub ci95_lo: f64,
    pub ci95_hi: f64,
    /// True when no trial completed, in which case the statistics are NaN.
    pub degenerate: bool,
}

fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Runs one network-coded trial on stream `trial` of the config seed.
pub fn run_trial_nc(
    matrix: &ReceptionMatrix,
    config: &SimConfig,
    trial: u64,
) -> Result<TrialResult, EngineError> {
    Ok(run_trial_nc_detailed(matrix, config, trial)?.result)
}

/// As [`run_trial_nc`], but also returns the source packets and final buffer
/// states so callers can verify decoding.
pub fn run_trial_nc_detailed(
    matrix: &ReceptionMatrix,
    config: &SimConfig,
    trial: u64,
) -> Result<NcTrialOutcome, EngineError> {
    config.validate(matrix.n())?;
    let ctx = FieldContext::new(config.q)?;
    Ok(nc_trial(&ctx, matrix, config, trial))
}

fn nc_trial(
    ctx: &FieldContext,
    matrix: &ReceptionMatrix,
    config: &SimConfig,
    trial: u64,
) -> NcTrialOutcome {
    let n = matrix.n();
    let mut rng = trial_rng(config.seed, trial);
    let packets: Vec<InformationPacket> = (0..n)
        .map(|origin| InformationPacket {
            origin,
            symbols: (0..config.r).map(|_| ctx.sample(&mut rng)).collect(),
        })
        .collect();
    let mut buffers: Vec<SubspaceBuffer> = packets
        .iter()
        .map(|p| SubspaceBuffer::new(p, n).expect("origin in range"))
        .collect();
    let mut complete = buffers.iter().filter(|b| b.is_complete()).count();
    let mut dim_sum = n as u64; // every node starts at dimension 1
    let mut trace = config.record_trace.then(|| vec![0u64]);

    if complete == n {
        return NcTrialOutcome {
            result: TrialResult {
                stopping_time: 0,
                completed: true,
                dimension_trace: trace,
            },
            packets,
            buffers,
        };
    }

    let max_slots = config.effective_max_slots(n);
    let mut receivers: Vec<usize> = Vec::with_capacity(n);
    for slot in 1..=max_slots {
        let tx = rng.gen_range(0..n);
        // The combination weights are drawn whether or not anyone listens so
        // that the stream consumed per slot is state-independent up front.
        let weights = buffers[tx]
            .draw_coefficients(ctx, &mut rng)
            .expect("buffers never empty");
        receivers.clear();
        let row = matrix.row(tx);
        for (u, &p) in row.iter().enumerate() {
            if u != tx && rng.gen_bool(p) {
                receivers.push(u);
            }
        }
        if receivers.iter().any(|&u| !buffers[u].is_complete()) {
            let message: CodedMessage = buffers[tx].combine(ctx, &weights);
            for &u in &receivers {
                if buffers[u].is_complete() {
                    continue;
                }
                if buffers[u]
                    .insert(ctx, &message)
                    .expect("message shape matches buffers")
                {
                    dim_sum += 1;
                    if buffers[u].is_complete() {
                        complete += 1;
                    }
                }
            }
        }
        if let Some(trace) = &mut trace {
            trace.push(dim_sum - n as u64);
        }
        if complete == n {
            return NcTrialOutcome {
                result: TrialResult {
                    stopping_time: slot,
                    completed: true,
                    dimension_trace: trace,
                },
                packets,
                buffers,
            };
        }
    }

    NcTrialOutcome {
        result: TrialResult {
            stopping_time: max_slots,
            completed: false,
            dimension_trace: trace,
        },
        packets,
        buffers,
    }
}

/// Runs one random-selection baseline trial: same MAC and channel, plain
/// packet stores, the transmitter picks one stored packet uniformly.
pub fn run_trial_baseline(
    matrix: &ReceptionMatrix,
    config: &SimConfig,
    trial: u64,
) -> Result<TrialResult, EngineError> {
    config.validate(matrix.n())?;
    Ok(baseline_trial(matrix, config, trial))
}

fn baseline_trial(matrix: &ReceptionMatrix, config: &SimConfig, trial: u64) -> TrialResult {
    let n = matrix.n();
    let mut rng = trial_rng(config.seed, trial);
    let mut have = vec![vec![false; n]; n];
    let mut counts = vec![1u64; n];
    for (u, held) in have.iter_mut().enumerate() {
        held[u] = true;
    }
    let mut complete = if n == 1 { 1 } else { 0 };
    let mut trace = config.record_trace.then(|| vec![0u64]);

    if complete == n {
        return TrialResult {
            stopping_time: 0,
            completed: true,
            dimension_trace: trace,
        };
    }

    let max_slots = config.effective_max_slots(n);
    let mut held_sum = n as u64;
    for slot in 1..=max_slots {
        let tx = rng.gen_range(0..n);
        let pick = rng.gen_range(0..counts[tx]);
        let packet = have[tx]
            .iter()
            .enumerate()
            .filter(|(_, &h)| h)
            .nth(pick as usize)
            .map(|(k, _)| k)
            .expect("count matches set bits");
        let row = matrix.row(tx);
        for u in 0..n {
            if u != tx && rng.gen_bool(row[u]) && !have[u][packet] {
                have[u][packet] = true;
                counts[u] += 1;
                held_sum += 1;
                if counts[u] == n as u64 {
                    complete += 1;
                }
            }
        }
        if let Some(trace) = &mut trace {
            trace.push(held_sum - n as u64);
        }
        if complete == n {
            return TrialResult {
                stopping_time: slot,
                completed: true,
                dimension_trace: trace,
            };
        }
    }

    TrialResult {
        stopping_time: max_slots,
        completed: false,
        dimension_trace: trace,
    }
}

/// Runs every trial of the configured protocol. The result vector is indexed
/// by trial, independent of worker scheduling.
pub fn run_trials(
    matrix: &ReceptionMatrix,
    config: &SimConfig,
) -> Result<Vec<TrialResult>, EngineError> {
    config.validate(matrix.n())?;
    let results = match config.protocol {
        Protocol::Nc => {
            let ctx = FieldContext::new(config.q)?;
            (0..config.trials)
                .into_par_iter()
                .map(|trial| nc_trial(&ctx, matrix, config, trial).result)
                .collect()
        }
        Protocol::RandomSelection => (0..config.trials)
            .into_par_iter()
            .map(|trial| baseline_trial(matrix, config, trial))
            .collect(),
    };
    Ok(results)
}

/// Runs an experiment and aggregates the completed trials.
pub fn run_experiment(
    matrix: &ReceptionMatrix,
    config: &SimConfig,
) -> Result<ExperimentSummary, EngineError> {
    Ok(summarize(&run_trials(matrix, config)?))
}

/// Order-stable aggregation: callers pass results in trial order.
pub fn summarize(results: &[TrialResult]) -> ExperimentSummary {
    let trials = results.len() as u64;
    let completed: Vec<f64> = results
        .iter()
        .filter(|t| t.completed)
        .map(|t| t.stopping_time as f64)
        .collect();
    let incomplete_count = trials - completed.len() as u64;
    if completed.is_empty() {
        return ExperimentSummary {
            trials,
            incomplete_count,
            mean: f64::NAN,
            std_dev: f64::NAN,
            ci95_lo: f64::NAN,
            ci95_hi: f64::NAN,
            degenerate: true,
        };
    }
    let count = completed.len() as f64;
    let mean = completed.iter().sum::<f64>() / count;
    let std_dev = if completed.len() < 2 {
        0.0
    } else {
        (completed.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (count - 1.0)).sqrt()
    };
    let half_width = 1.96 * std_dev / count.sqrt();
    ExperimentSummary {
        trials,
        incomplete_count,
        mean,
        std_dev,
        ci95_lo: mean - half_width,
        ci95_hi: mean + half_width,
        degenerate: false,
    }
}
