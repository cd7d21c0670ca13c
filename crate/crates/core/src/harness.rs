//! Seeded episode simulation and Monte Carlo aggregation.
//!
//! Every trial gets its own seed derived from the master seed. Within a
//! trial all policies face the same channel trajectory, and the filter-bank
//! noise for sensing column `c` in slot `k` comes from a stream keyed by
//! `(k, c)`, so two policies sensing the same column see the same noise.

use std::ops::Range;
use std::sync::Arc;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{ChannelState, ModelParams, TransitionMatrix};
use crate::error::{Error, Result};
use crate::policies::{make_policy, EpisodeStart, InitMode, PolicyEnv, PolicyKind};
use crate::pomdp::RewardSpec;
use crate::sensing::{sense_column, Action, DetectorSpec, Observation, ObservationMode};

/// Normal quantile for two-sided 95% intervals.
pub const Z95: f64 = 1.96;

const CHANNEL_STREAM: u64 = 0;
const POLICY_STREAM: u64 = 1;
const NOISE_STREAM_BASE: u64 = 2;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub name: String,
    pub n_tx: usize,
    pub n_rx: usize,
    pub n_paths: usize,
    /// Path SNR `N_t N_r P_t xi^2 / sigma^2` in dB; sets the transmit power.
    pub snr_db: f64,
    pub gain_var: f64,
    pub noise_var: f64,
    pub bandwidth: usize,
    pub decay: f64,
    pub mix: f64,
    pub m_p: usize,
    pub slots: usize,
    /// Symbols per slot. Recorded only; data symbols are not simulated.
    pub slot_length: usize,
    pub p_fa: f64,
    pub observation_mode: ObservationMode,
    pub init: InitMode,
    pub reward: RewardSpec,
    pub policies: Vec<PolicyKind>,
    pub trials: usize,
    pub seed: u64,
}

pub const PRESETS: [&str; 4] = ["fig5a", "fig5b", "fig6", "fig7"];

impl ExperimentConfig {
    /// Named experiment setup.
    pub fn preset(name: &str) -> Result<Self> {
        let fig5 = |init, name: &str| ExperimentConfig {
            name: name.to_string(),
            n_tx: 8,
            n_rx: 4,
            n_paths: 2,
            snr_db: 20.0,
            gain_var: 1.0,
            noise_var: 1.0,
            bandwidth: 1,
            decay: 0.5,
            mix: 0.0,
            m_p: 4,
            slots: 10,
            slot_length: 10,
            p_fa: 0.05,
            observation_mode: ObservationMode::Signal,
            init,
            reward: RewardSpec::PathCount,
            policies: vec![
                PolicyKind::Lookahead(2),
                PolicyKind::GreedyFull,
                PolicyKind::GreedyReduced,
                PolicyKind::Random,
            ],
            trials: 20_000,
            seed: 1,
        };
        match name {
            "fig5a" => Ok(fig5(InitMode::Uniform, name)),
            "fig5b" => Ok(fig5(InitMode::Known, name)),
            "fig6" => Ok(ExperimentConfig {
                n_tx: 16,
                m_p: 6,
                bandwidth: 2,
                slots: 30,
                slot_length: 30,
                policies: vec![PolicyKind::GreedyFull, PolicyKind::GreedyReduced, PolicyKind::Heuristic],
                trials: 5_000,
                ..fig5(InitMode::Known, name)
            }),
            "fig7" => Ok(ExperimentConfig {
                n_tx: 64,
                n_rx: 16,
                m_p: 10,
                bandwidth: 8,
                slots: 30,
                slot_length: 30,
                p_fa: 0.01,
                policies: vec![PolicyKind::GreedyReduced, PolicyKind::Heuristic],
                trials: 500,
                ..fig5(InitMode::Known, name)
            }),
            other => Err(Error::config(format!(
                "unknown preset '{other}' (expected one of {})",
                PRESETS.join(", ")
            ))),
        }
    }

    pub fn path_snr(&self) -> f64 {
        10f64.powf(self.snr_db / 10.0)
    }

    pub fn model_params(&self) -> Result<ModelParams> {
        let tx_power = self.path_snr() * self.noise_var / (self.n_tx as f64 * self.n_rx as f64 * self.gain_var);
        ModelParams::new(self.n_tx, self.n_rx, self.n_paths, self.gain_var, self.noise_var, tx_power)
    }

    pub fn transition(&self) -> Result<TransitionMatrix> {
        TransitionMatrix::banded(self.n_tx, self.bandwidth, self.decay)?.mix_uniform(self.mix)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::config(msg));
        if self.name.is_empty() || self.name.contains(|c: char| c == ',' || c == '"' || c.is_control()) {
            return fail(format!("name {:?} must be nonempty without commas, quotes or control characters", self.name));
        }
        if self.slots == 0 {
            return fail("slots must be at least 1".into());
        }
        if self.trials == 0 {
            return fail("trials must be at least 1".into());
        }
        if self.m_p == 0 || self.m_p > self.n_tx {
            return fail(format!("m_p = {} must lie in 1..={} (n_tx)", self.m_p, self.n_tx));
        }
        if self.policies.is_empty() {
            return fail("policy list is empty".into());
        }
        if !self.snr_db.is_finite() {
            return fail("snr_db must be finite".into());
        }
        if let RewardSpec::MrcLog { snr_per_path } = self.reward {
            if !(snr_per_path >= 0.0) {
                return fail("reward snr_per_path must be nonnegative".into());
            }
        }
        self.model_params().map_err(as_config)?;
        self.transition().map_err(as_config)?;
        DetectorSpec::with_path_snr(self.p_fa, self.path_snr(), self.noise_var).map_err(as_config)?;
        Ok(())
    }
}

fn as_config(e: Error) -> Error {
    match e {
        Error::Parameter(msg) => Error::Config(msg),
        other => other,
    }
}

/// Validated experiment with the derived model objects.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub env: Arc<PolicyEnv>,
}

impl Experiment {
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let params = config.model_params()?;
        let env = PolicyEnv {
            detector: DetectorSpec::new(config.p_fa, &params)?,
            transition: config.transition()?,
            m_p: config.m_p,
            horizon: config.slots,
            reward: config.reward,
            params,
        };
        Ok(Experiment {
            config,
            env: Arc::new(env),
        })
    }

    /// Replaces the detector used by both the simulator and the policies.
    /// Idealized detectors (rates of 0 or 1) need analytic observations.
    pub fn with_detector(mut self, detector: DetectorSpec) -> Self {
        Arc::make_mut(&mut self.env).detector = detector;
        self
    }

    pub fn params(&self) -> &ModelParams {
        &self.env.params
    }

    pub fn detector(&self) -> &DetectorSpec {
        &self.env.detector
    }
}

/// Seed of trial `trial` under master seed `master`.
pub fn trial_seed(master: u64, trial: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(trial);
    rng.next_u64()
}

fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Channel states of one trial: index 0 is the initial state, index `k >= 1`
/// the state sensed in slot `k` (slots count from 1).
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<ChannelState>,
}

impl Trajectory {
    pub fn generate(exp: &Experiment, seed: u64) -> Self {
        let mut rng = stream(seed, CHANNEL_STREAM);
        let params = exp.params();
        let mut states = Vec::with_capacity(exp.config.slots + 1);
        states.push(ChannelState::random(params, &mut rng));
        for k in 0..exp.config.slots {
            let next = states[k].step(&exp.env.transition, params, &mut rng);
            states.push(next);
        }
        Trajectory { states }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlotRecord {
    pub slot: usize,
    pub columns: Vec<usize>,
    pub action: Action,
    pub observation: Observation,
    pub reward: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpisodeTrace {
    pub policy: PolicyKind,
    pub seed: u64,
    pub rows: Vec<usize>,
    pub initial_columns: Vec<usize>,
    pub slots: Vec<SlotRecord>,
    pub total_reward: f64,
}

/// Reward actually earned in a slot: bins of flagged columns, mapped by `spec`.
pub fn slot_reward(state: &ChannelState, action: &Action, obs: &Observation, spec: &RewardSpec) -> f64 {
    let detected = action
        .columns()
        .iter()
        .zip(obs.flags())
        .filter(|(_, &f)| f)
        .map(|(&c, _)| state.bin_count(c))
        .sum();
    spec.value(detected)
}

/// Runs one episode of `kind` on the trial with seed `seed`.
pub fn run_episode(exp: &Experiment, kind: PolicyKind, seed: u64) -> Result<EpisodeTrace> {
    run_on_trajectory(exp, kind, &Trajectory::generate(exp, seed), seed)
}

pub fn run_on_trajectory(exp: &Experiment, kind: PolicyKind, traj: &Trajectory, seed: u64) -> Result<EpisodeTrace> {
    let env = &exp.env;
    let init = &traj.states[0];
    let start = EpisodeStart {
        mode: exp.config.init,
        columns: init.columns.clone(),
        rows: init.rows.clone(),
    };
    let mut policy = make_policy(kind, Arc::clone(env), &start, stream(seed, POLICY_STREAM))?;
    let n_tx = env.params.n_tx as u64;
    let mut slots = Vec::with_capacity(exp.config.slots);
    let mut total = 0.0;
    for (k, state) in traj.states[1..].iter().enumerate() {
        let action = policy.choose(k);
        let flags = action
            .columns()
            .iter()
            .map(|&c| {
                let mut rng = stream(seed, NOISE_STREAM_BASE + k as u64 * n_tx + c as u64);
                sense_column(state, c, &env.detector, &env.params, exp.config.observation_mode, &mut rng)
            })
            .collect();
        let obs = Observation::new(flags);
        let reward = slot_reward(state, &action, &obs, &env.reward);
        total += reward;
        policy.observe(&action, &obs)?;
        slots.push(SlotRecord {
            slot: k + 1,
            columns: state.columns.clone(),
            action,
            observation: obs,
            reward,
        });
    }
    Ok(EpisodeTrace {
        policy: kind,
        seed,
        rows: init.rows.clone(),
        initial_columns: init.columns.clone(),
        slots,
        total_reward: total,
    })
}

/// Mean and 95% half-width of a sample.
pub fn mean_ci(samples: impl ExactSizeIterator<Item = f64> + Clone) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.clone().sum::<f64>() / n;
    if samples.len() < 2 {
        return (mean, 0.0);
    }
    let var = samples.map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, Z95 * (var / n).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolicySummary {
    pub policy: PolicyKind,
    /// Mean reward in each slot.
    pub mean_reward: Vec<f64>,
    pub mean_ci95: Vec<f64>,
    /// Mean reward accumulated up to and including each slot.
    pub acc_reward: Vec<f64>,
    pub acc_ci95: Vec<f64>,
    /// Per-trial rewards, `rewards[trial][slot]`.
    #[serde(skip)]
    pub rewards: Vec<Vec<f64>>,
}

impl PolicySummary {
    fn from_rewards(policy: PolicyKind, rewards: Vec<Vec<f64>>) -> Self {
        let slots = rewards.first().map_or(0, Vec::len);
        let mut s = PolicySummary {
            policy,
            mean_reward: Vec::with_capacity(slots),
            mean_ci95: Vec::with_capacity(slots),
            acc_reward: Vec::with_capacity(slots),
            acc_ci95: Vec::with_capacity(slots),
            rewards,
        };
        for k in 0..slots {
            let (m, c) = mean_ci(s.rewards.iter().map(|r| r[k]));
            s.mean_reward.push(m);
            s.mean_ci95.push(c);
            let (m, c) = s.window(0..k + 1);
            s.acc_reward.push(m * (k + 1) as f64);
            s.acc_ci95.push(c * (k + 1) as f64);
        }
        s
    }

    /// Mean and 95% half-width of the per-trial average reward over `slots`
    /// (0-based, end exclusive).
    pub fn window(&self, slots: Range<usize>) -> (f64, f64) {
        let len = slots.len() as f64;
        mean_ci(self.rewards.iter().map(|r| r[slots.clone()].iter().sum::<f64>() / len))
    }

    /// Mean reward per slot averaged over the whole episode.
    pub fn overall(&self) -> (f64, f64) {
        self.window(0..self.mean_reward.len())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateResult {
    pub preset: String,
    pub seed: u64,
    pub n_trials: usize,
    pub slots: usize,
    pub policies: Vec<PolicySummary>,
}

impl AggregateResult {
    pub fn policy(&self, kind: PolicyKind) -> Option<&PolicySummary> {
        self.policies.iter().find(|p| p.policy == kind)
    }
}

/// Runs `trials` episodes of every configured policy with common random numbers.
pub fn monte_carlo(exp: &Experiment) -> Result<AggregateResult> {
    let cfg = &exp.config;
    let per_trial: Vec<Vec<Vec<f64>>> = (0..cfg.trials as u64)
        .into_par_iter()
        .map(|t| {
            let seed = trial_seed(cfg.seed, t);
            let traj = Trajectory::generate(exp, seed);
            cfg.policies
                .iter()
                .map(|&kind| {
                    run_on_trajectory(exp, kind, &traj, seed)
                        .map(|tr| tr.slots.iter().map(|s| s.reward).collect())
                })
                .collect::<Result<Vec<Vec<f64>>>>()
        })
        .collect::<Result<_>>()?;

    let mut by_policy: Vec<Vec<Vec<f64>>> = vec![Vec::with_capacity(cfg.trials); cfg.policies.len()];
    for trial in per_trial {
        for (acc, rewards) in by_policy.iter_mut().zip(trial) {
            acc.push(rewards);
        }
    }
    Ok(AggregateResult {
        preset: cfg.name.clone(),
        seed: cfg.seed,
        n_trials: cfg.trials,
        slots: cfg.slots,
        policies: cfg
            .policies
            .iter()
            .zip(by_policy)
            .map(|(&kind, rewards)| PolicySummary::from_rewards(kind, rewards))
            .collect(),
    })
}
