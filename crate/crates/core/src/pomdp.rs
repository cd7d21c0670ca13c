//! Full-belief POMDP over enumerated path-location states.
//!
//! A state is the tuple of AoD columns `(i_1, ..., i_L)`, flattened with the
//! first path as the most significant base-`N_t` digit, so there are
//! `N_t^L` states. Beliefs are held *before* the slot's state transition;
//! every quantity below folds the one-step prediction `pi P` in first.
//!
//! The planner is an exact depth-limited expectimax over all
//! `C(N_t, M_p)` actions and `2^M_p` observations. With the path-count
//! reward the expected immediate reward of an action is a sum of per-column
//! terms, so a depth-1 maximization is a top-`M_p` selection rather than an
//! enumeration.

use std::str::FromStr;
use std::sync::OnceLock;

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::channel::{occupied_bins, ModelParams, TransitionMatrix};
use crate::error::{Error, Result};
use crate::sensing::{observation_prob, Action, DetectorSpec, Observation};

/// Largest state space the full-belief machinery will allocate.
pub const MAX_STATES: usize = 1 << 22;

/// Bijection between flat state indices and per-path column tuples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateSpace {
    n_tx: usize,
    n_paths: usize,
    n_states: usize,
}

impl StateSpace {
    pub fn new(n_tx: usize, n_paths: usize) -> Result<Self> {
        let n_states = (0..n_paths)
            .try_fold(1usize, |acc, _| acc.checked_mul(n_tx))
            .filter(|&n| n <= MAX_STATES)
            .ok_or_else(|| {
                Error::param(format!("state space {n_tx}^{n_paths} exceeds {MAX_STATES} states"))
            })?;
        Ok(StateSpace {
            n_tx,
            n_paths,
            n_states,
        })
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_tx(&self) -> usize {
        self.n_tx
    }

    pub fn n_paths(&self) -> usize {
        self.n_paths
    }

    pub fn index(&self, columns: &[usize]) -> usize {
        debug_assert_eq!(columns.len(), self.n_paths);
        columns.iter().fold(0, |acc, &c| acc * self.n_tx + c)
    }

    pub fn columns(&self, index: usize) -> Vec<usize> {
        let mut out = vec![0; self.n_paths];
        self.decode_into(index, &mut out);
        out
    }

    pub fn decode_into(&self, mut index: usize, out: &mut [usize]) {
        for slot in out.iter_mut().rev() {
            *slot = index % self.n_tx;
            index /= self.n_tx;
        }
    }
}

/// Belief vector `pi` over the enumerated states.
#[derive(Debug, Clone, PartialEq)]
pub struct FullBelief {
    probs: Vec<f64>,
}

impl FullBelief {
    pub fn uniform(n_states: usize) -> Self {
        FullBelief {
            probs: vec![1.0 / n_states as f64; n_states],
        }
    }

    pub fn point_mass(n_states: usize, state: usize) -> Self {
        let mut probs = vec![0.0; n_states];
        probs[state] = 1.0;
        FullBelief { probs }
    }

    pub fn from_probs(probs: Vec<f64>) -> Result<Self> {
        if probs.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
            return Err(Error::param("belief entries must be finite and nonnegative"));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::param(format!("belief sums to {total}, not 1")));
        }
        Ok(FullBelief { probs })
    }

    /// Normalizes a nonnegative weight vector.
    pub(crate) fn normalized(mut weights: Vec<f64>) -> Option<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return None;
        }
        weights.iter_mut().for_each(|w| *w /= total);
        Some(FullBelief { probs: weights })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn max_abs_diff(&self, other: &FullBelief) -> f64 {
        self.probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Per-slot reward definition.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RewardSpec {
    /// Number of correctly identified paths.
    #[default]
    PathCount,
    /// `log2(1 + detected * snr_per_path)`, the MRC data rate.
    MrcLog { snr_per_path: f64 },
}

impl RewardSpec {
    /// Reward when `detected` nonzero bins were correctly flagged.
    #[inline]
    pub fn value(&self, detected: usize) -> f64 {
        match *self {
            RewardSpec::PathCount => detected as f64,
            RewardSpec::MrcLog { snr_per_path } => (1.0 + detected as f64 * snr_per_path).log2(),
        }
    }

    fn is_separable(&self) -> bool {
        matches!(self, RewardSpec::PathCount)
    }
}

impl FromStr for RewardSpec {
    type Err = Error;
    /// `path-count`, `mrc-log` (per-path SNR 100) or `mrc-log:<snr>`.
    fn from_str(s: &str) -> Result<Self> {
        match s.split_once(':') {
            None if s == "path-count" => Ok(RewardSpec::PathCount),
            None if s == "mrc-log" => Ok(RewardSpec::MrcLog { snr_per_path: 100.0 }),
            Some(("mrc-log", snr)) => snr
                .parse()
                .map(|snr_per_path| RewardSpec::MrcLog { snr_per_path })
                .map_err(|_| Error::config(format!("bad mrc-log SNR '{snr}'"))),
            _ => Err(Error::config(format!("unknown reward '{s}'"))),
        }
    }
}

/// Result of a planning call.
#[derive(Debug, Clone, PartialEq)]
pub struct Plan {
    pub action: Action,
    /// Expected reward accumulated over the planning depth.
    pub value: f64,
}

/// The beam-selection POMDP for one episode.
///
/// AoA rows are fixed per episode and only matter through same-bin
/// collisions, which change the number of occupied bins in a column.
#[derive(Debug)]
pub struct BeamPomdp {
    space: StateSpace,
    n_rx: usize,
    m_p: usize,
    transition: TransitionMatrix,
    /// Nonzero entries of each transition row.
    sparse_rows: Vec<Vec<(usize, f64)>>,
    detector: DetectorSpec,
    rows: Vec<usize>,
    reward: RewardSpec,
    /// `bins[i * n_tx + col]`: occupied bins of `col` in state `i`.
    bins: Vec<u8>,
    /// Occupied `(col, bins)` pairs per state, `occ[occ_start[i]..occ_start[i + 1]]`.
    occ: Vec<(usize, usize)>,
    occ_start: Vec<usize>,
    /// Expected path-count reward of sensing a column holding `n` bins.
    detect_reward: Vec<f64>,
    actions: OnceLock<Vec<Action>>,
    /// Pre-transition expected reward per (state, column), path-count only.
    leaf: OnceLock<Vec<f64>>,
}

impl BeamPomdp {
    pub fn new(
        params: &ModelParams,
        m_p: usize,
        transition: TransitionMatrix,
        detector: DetectorSpec,
        rows: Vec<usize>,
        reward: RewardSpec,
    ) -> Result<Self> {
        let n_tx = params.n_tx;
        if transition.size() != n_tx {
            return Err(Error::param(format!(
                "transition matrix is {}x{0}, expected {n_tx}",
                transition.size()
            )));
        }
        if m_p == 0 || m_p > n_tx {
            return Err(Error::param(format!("m_p must lie in 1..={n_tx}, got {m_p}")));
        }
        if rows.len() != params.n_paths || rows.iter().any(|&r| r >= params.n_rx) {
            return Err(Error::param("need one in-range AoA row per path"));
        }
        let space = StateSpace::new(n_tx, params.n_paths)?;
        let n = space.n_states();

        let mut bins = vec![0u8; n * n_tx];
        let mut occ = Vec::new();
        let mut occ_start = Vec::with_capacity(n + 1);
        let mut cols = vec![0; params.n_paths];
        for i in 0..n {
            occ_start.push(occ.len());
            space.decode_into(i, &mut cols);
            for &c in cols.iter().sorted_unstable().dedup() {
                let nb = occupied_bins(&cols, &rows, c);
                bins[i * n_tx + c] = nb as u8;
                occ.push((c, nb));
            }
        }
        occ_start.push(occ.len());

        let detect_reward = (0..=params.n_paths)
            .map(|nb| nb as f64 * (1.0 - detector.column_zero_prob(nb, params.n_rx)))
            .collect();
        let sparse_rows = (0..n_tx)
            .map(|a| {
                transition
                    .row(a)
                    .iter()
                    .enumerate()
                    .filter(|(_, &p)| p > 0.0)
                    .map(|(b, &p)| (b, p))
                    .collect()
            })
            .collect();

        Ok(BeamPomdp {
            space,
            n_rx: params.n_rx,
            m_p,
            transition,
            sparse_rows,
            detector,
            rows,
            reward,
            bins,
            occ,
            occ_start,
            detect_reward,
            actions: OnceLock::new(),
            leaf: OnceLock::new(),
        })
    }

    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    pub fn n_states(&self) -> usize {
        self.space.n_states()
    }

    pub fn n_tx(&self) -> usize {
        self.space.n_tx()
    }

    pub fn n_rx(&self) -> usize {
        self.n_rx
    }

    pub fn m_p(&self) -> usize {
        self.m_p
    }

    pub fn transition(&self) -> &TransitionMatrix {
        &self.transition
    }

    pub fn detector(&self) -> &DetectorSpec {
        &self.detector
    }

    pub fn rows(&self) -> &[usize] {
        &self.rows
    }

    pub fn reward_spec(&self) -> &RewardSpec {
        &self.reward
    }

    /// Number of observations, `2^M_p`.
    pub fn n_observations(&self) -> usize {
        1 << self.m_p
    }

    /// All actions in lexicographic order.
    pub fn actions(&self) -> &[Action] {
        self.actions.get_or_init(|| {
            (0..self.n_tx())
                .combinations(self.m_p)
                .map(Action::from_sorted)
                .collect()
        })
    }

    /// Occupied bins of column `col` in state `i`.
    #[inline]
    pub fn bin_count(&self, state: usize, col: usize) -> usize {
        self.bins[state * self.n_tx() + col] as usize
    }

    fn occupied(&self, state: usize) -> &[(usize, usize)] {
        &self.occ[self.occ_start[state]..self.occ_start[state + 1]]
    }

    fn action_bins(&self, state: usize, action: &Action) -> Vec<usize> {
        action.columns().iter().map(|&c| self.bin_count(state, c)).collect()
    }

    /// Joint transition probability between enumerated states.
    pub fn transition_prob(&self, from: usize, to: usize) -> f64 {
        let l = self.space.n_paths();
        let mut a = vec![0; l];
        let mut b = vec![0; l];
        self.space.decode_into(from, &mut a);
        self.space.decode_into(to, &mut b);
        a.iter().zip(&b).map(|(&x, &y)| self.transition.prob(x, y)).product()
    }

    /// One-step prediction `w P` on the product space (unnormalized input allowed).
    pub fn predict(&self, weights: &[f64]) -> Vec<f64> {
        self.apply_axes(weights, false)
    }

    /// `P v`: expectation of a post-transition quantity from each pre-transition state.
    pub fn pull_back(&self, values: &[f64]) -> Vec<f64> {
        self.apply_axes(values, true)
    }

    fn apply_axes(&self, input: &[f64], backward: bool) -> Vec<f64> {
        let n = self.n_states();
        let n_tx = self.n_tx();
        debug_assert_eq!(input.len(), n);
        let mut cur = input.to_vec();
        let mut next = vec![0.0; n];
        let mut stride = n;
        for _ in 0..self.space.n_paths() {
            stride /= n_tx;
            let block = stride * n_tx;
            next.iter_mut().for_each(|v| *v = 0.0);
            for base in (0..n).step_by(block) {
                for inner in 0..stride {
                    let off = base + inner;
                    for (a, row) in self.sparse_rows.iter().enumerate() {
                        if backward {
                            let acc: f64 = row.iter().map(|&(b, p)| p * cur[off + b * stride]).sum();
                            next[off + a * stride] = acc;
                        } else {
                            let w = cur[off + a * stride];
                            if w == 0.0 {
                                continue;
                            }
                            for &(b, p) in row {
                                next[off + b * stride] += w * p;
                            }
                        }
                    }
                }
            }
            std::mem::swap(&mut cur, &mut next);
        }
        cur
    }

    /// `q_ij^a = Pr{o^(j) | s^(i), a}`.
    pub fn obs_prob_given_state(&self, state: usize, obs: &Observation, action: &Action) -> f64 {
        observation_prob(&self.action_bins(state, action), obs, &self.detector, self.n_rx)
    }

    /// Likelihood table for `action`, laid out `[j * N + i]`.
    fn likelihood_table(&self, action: &Action, out: &mut Vec<f64>) {
        let n = self.n_states();
        let n_obs = self.n_observations();
        out.clear();
        out.resize(n_obs * n, 0.0);
        let mut tmp = vec![0.0; n_obs];
        let zero_prob: Vec<f64> = (0..=self.space.n_paths())
            .map(|nb| self.detector.column_zero_prob(nb, self.n_rx))
            .collect();
        for i in 0..n {
            tmp[0] = 1.0;
            for (m, &c) in action.columns().iter().enumerate() {
                let p0 = zero_prob[self.bin_count(i, c)];
                let half = 1 << m;
                for j in 0..half {
                    tmp[j | half] = tmp[j] * (1.0 - p0);
                    tmp[j] *= p0;
                }
            }
            for (j, &q) in tmp.iter().enumerate() {
                out[j * n + i] = q;
            }
        }
    }

    /// `r(s^(i), a, o^(j))`; false alarms earn nothing.
    pub fn immediate_reward(&self, state: usize, action: &Action, obs: &Observation) -> f64 {
        let detected: usize = action
            .columns()
            .iter()
            .zip(obs.flags())
            .filter(|(_, &f)| f)
            .map(|(&c, _)| self.bin_count(state, c))
            .sum();
        self.reward.value(detected)
    }

    /// Expected reward of `action` in post-transition state `i`, averaged over observations.
    pub fn observation_averaged_reward(&self, state: usize, action: &Action) -> f64 {
        if self.reward.is_separable() {
            return action
                .columns()
                .iter()
                .map(|&c| self.detect_reward[self.bin_count(state, c)])
                .sum();
        }
        let bins = self.action_bins(state, action);
        (0..self.n_observations())
            .map(|j| {
                let obs = Observation::from_index(j, self.m_p);
                let q = observation_prob(&bins, &obs, &self.detector, self.n_rx);
                if q == 0.0 {
                    0.0
                } else {
                    q * self.immediate_reward(state, action, &obs)
                }
            })
            .sum()
    }

    /// `R(s^(n), a)`: expected reward when the slot starts in state `n`.
    pub fn expected_reward_state(&self, prior_state: usize, action: &Action) -> f64 {
        let mut w = vec![0.0; self.n_states()];
        w[prior_state] = 1.0;
        let pred = self.predict(&w);
        self.expected_reward_predicted(&pred, action)
    }

    /// `<R(a), pi>`.
    pub fn expected_reward_belief(&self, belief: &FullBelief, action: &Action) -> f64 {
        let pred = self.predict(belief.probs());
        self.expected_reward_predicted(&pred, action)
    }

    fn expected_reward_predicted(&self, pred: &[f64], action: &Action) -> f64 {
        if self.reward.is_separable() {
            let scores = self.column_scores(pred);
            return action.columns().iter().map(|&c| scores[c]).sum();
        }
        pred.iter()
            .enumerate()
            .filter(|(_, &w)| w > 0.0)
            .map(|(i, &w)| w * self.observation_averaged_reward(i, action))
            .sum()
    }

    /// Expected path-count reward of sensing each column, given the
    /// post-transition weights `pred`.
    fn column_scores(&self, pred: &[f64]) -> Vec<f64> {
        let mut scores = vec![0.0; self.n_tx()];
        for (i, &w) in pred.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for &(c, nb) in self.occupied(i) {
                scores[c] += w * self.detect_reward[nb];
            }
        }
        scores
    }

    /// `gamma(o^(j) | pi, a)`.
    pub fn obs_likelihood(&self, belief: &FullBelief, action: &Action, obs: &Observation) -> f64 {
        let pred = self.predict(belief.probs());
        pred.iter()
            .enumerate()
            .filter(|(_, &w)| w > 0.0)
            .map(|(i, &w)| w * self.obs_prob_given_state(i, obs, action))
            .sum()
    }

    /// Bayes update `T(pi | a, o)`.
    pub fn belief_update(&self, belief: &FullBelief, action: &Action, obs: &Observation) -> Result<FullBelief> {
        let pred = self.predict(belief.probs());
        let weights: Vec<f64> = pred
            .iter()
            .enumerate()
            .map(|(i, &w)| if w > 0.0 { w * self.obs_prob_given_state(i, obs, action) } else { 0.0 })
            .collect();
        FullBelief::normalized(weights).ok_or_else(|| {
            Error::ImpossibleObservation(format!("observation {obs} has zero probability under action {action}"))
        })
    }

    fn leaf_table(&self) -> &[f64] {
        self.leaf.get_or_init(|| {
            let n = self.n_states();
            let n_tx = self.n_tx();
            let mut table = vec![0.0; n * n_tx];
            let mut post = vec![0.0; n];
            for c in 0..n_tx {
                for (i, v) in post.iter_mut().enumerate() {
                    *v = self.detect_reward[self.bin_count(i, c)];
                }
                for (i, v) in self.pull_back(&post).into_iter().enumerate() {
                    table[i * n_tx + c] = v;
                }
            }
            table
        })
    }

    /// Top-`M_p` columns by score, ties to the lower index; returns the
    /// sorted action and its total score.
    fn top_columns(&self, scores: &[f64]) -> (Action, f64) {
        let (cols, value) = top_k(scores, self.m_p);
        (Action::from_sorted(cols), value)
    }

    /// Exact greedy action: maximizes the one-slot expected reward.
    pub fn greedy_plan(&self, belief: &FullBelief) -> Plan {
        let pred = self.predict(belief.probs());
        let (action, value) = self.best_immediate(&pred);
        Plan { action, value }
    }

    fn best_immediate(&self, pred: &[f64]) -> (Action, f64) {
        if self.reward.is_separable() {
            return self.top_columns(&self.column_scores(pred));
        }
        let mut best: Option<(usize, f64)> = None;
        for (k, a) in self.actions().iter().enumerate() {
            let v = self.expected_reward_predicted(pred, a);
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((k, v));
            }
        }
        let (k, v) = best.expect("action space is nonempty");
        (self.actions()[k].clone(), v)
    }

    /// Depth-limited expectimax. The effective depth is
    /// `min(depth, horizon_remaining)`, terminal value zero; depth 1 is the
    /// exact greedy policy. Ties go to the first action in lexicographic order.
    pub fn lookahead_plan(&self, belief: &FullBelief, depth: usize, horizon_remaining: usize) -> Plan {
        let depth = depth.min(horizon_remaining).max(1);
        if depth == 1 {
            return self.greedy_plan(belief);
        }
        let (value, k) = self.search(belief.probs(), depth);
        Plan {
            action: self.actions()[k].clone(),
            value,
        }
    }

    /// Value of the (unnormalized) pre-transition belief `u` over `depth`
    /// slots. Expectimax values are positively homogeneous in `u`, so branch
    /// weights never need normalizing.
    fn node_value(&self, u: &[f64], depth: usize) -> f64 {
        match depth {
            0 => 0.0,
            1 => self.best_immediate(&self.predict(u)).1,
            _ => self.search(u, depth).0,
        }
    }

    /// Returns the best value and the index of the maximizing action.
    fn search(&self, u: &[f64], depth: usize) -> (f64, usize) {
        debug_assert!(depth >= 2);
        let n = self.n_states();
        let n_tx = self.n_tx();
        let n_obs = self.n_observations();
        let pred = self.predict(u);
        let scores = self.reward.is_separable().then(|| self.column_scores(&pred));

        // children one level above the leaves use the pulled-back reward table
        let leaf_weighted: Option<Vec<f64>> = (depth == 2 && self.reward.is_separable()).then(|| {
            let leaf = self.leaf_table();
            let mut m = vec![0.0; n * n_tx];
            for (i, &w) in pred.iter().enumerate() {
                if w != 0.0 {
                    for c in 0..n_tx {
                        m[i * n_tx + c] = w * leaf[i * n_tx + c];
                    }
                }
            }
            m
        });

        let support: Vec<usize> = (0..n).filter(|&i| pred[i] > 0.0).collect();
        let mut q = Vec::new();
        let mut child = vec![0.0; n];
        let mut child_scores = vec![0.0; n_tx];
        let mut best = (f64::NEG_INFINITY, 0);
        for (k, action) in self.actions().iter().enumerate() {
            let immediate = match &scores {
                Some(s) => action.columns().iter().map(|&c| s[c]).sum(),
                None => self.expected_reward_predicted(&pred, action),
            };
            self.likelihood_table(action, &mut q);
            let mut future = 0.0;
            for j in 0..n_obs {
                let qj = &q[j * n..(j + 1) * n];
                if let Some(m) = &leaf_weighted {
                    child_scores.iter_mut().for_each(|v| *v = 0.0);
                    let mut mass = 0.0;
                    for &i in &support {
                        let qi = qj[i];
                        if qi == 0.0 {
                            continue;
                        }
                        mass += qi;
                        let row = &m[i * n_tx..(i + 1) * n_tx];
                        for (s, &v) in child_scores.iter_mut().zip(row) {
                            *s += qi * v;
                        }
                    }
                    if mass > 0.0 {
                        future += top_k(&child_scores, self.m_p).1;
                    }
                } else {
                    child.iter_mut().for_each(|v| *v = 0.0);
                    let mut mass = 0.0;
                    for &i in &support {
                        child[i] = qj[i] * pred[i];
                        mass += child[i];
                    }
                    if mass > 0.0 {
                        future += self.node_value(&child, depth - 1);
                    }
                }
            }
            let value = immediate + future;
            if value > best.0 {
                best = (value, k);
            }
        }
        best
    }
}

/// Indices of the `k` largest scores (ties to the lower index), sorted
/// ascending, and their sum.
pub(crate) fn top_k(scores: &[f64], k: usize) -> (Vec<usize>, f64) {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order.truncate(k);
    let value = order.iter().map(|&c| scores[c]).sum();
    order.sort_unstable();
    (order, value)
}
