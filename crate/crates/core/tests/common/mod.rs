//! Brute-force reference computations, written independently of the
//! library's vectorized code paths.

#![allow(dead_code)]

use std::collections::BTreeSet;

use beamtrack::channel::TransitionMatrix;
use beamtrack::sensing::DetectorSpec;
use itertools::Itertools;

/// All column tuples, first path varying slowest.
pub fn states(n_tx: usize, n_paths: usize) -> Vec<Vec<usize>> {
    (0..n_paths).map(|_| 0..n_tx).multi_cartesian_product().collect()
}

/// Distinct (row, col) bins in column `col`.
pub fn bins(cols: &[usize], rows: &[usize], col: usize) -> usize {
    cols.iter()
        .zip(rows)
        .filter(|(&c, _)| c == col)
        .map(|(_, &r)| r)
        .collect::<BTreeSet<_>>()
        .len()
}

pub fn joint_transition(p: &TransitionMatrix, from: &[usize], to: &[usize]) -> f64 {
    let mut prob = 1.0;
    for l in 0..from.len() {
        prob *= p.row(from[l])[to[l]];
    }
    prob
}

/// Probability of `flags` when sensing `action` in state `cols`, element by element.
pub fn obs_lik(d: &DetectorSpec, n_rx: usize, cols: &[usize], rows: &[usize], action: &[usize], flags: &[bool]) -> f64 {
    let mut prob = 1.0;
    for (m, &c) in action.iter().enumerate() {
        let nb = bins(cols, rows, c);
        let mut silent = 1.0;
        for _ in 0..(n_rx - nb) {
            silent *= 1.0 - d.p_fa;
        }
        for _ in 0..nb {
            silent *= d.p_md;
        }
        prob *= if flags[m] { 1.0 - silent } else { silent };
    }
    prob
}

pub fn reward(cols: &[usize], rows: &[usize], action: &[usize], flags: &[bool]) -> f64 {
    action
        .iter()
        .zip(flags)
        .filter(|(_, &f)| f)
        .map(|(&c, _)| bins(cols, rows, c) as f64)
        .sum()
}

pub fn all_flags(m_p: usize) -> Vec<Vec<bool>> {
    (0..1usize << m_p).map(|j| (0..m_p).map(|m| (j >> m) & 1 == 1).collect()).collect()
}

pub struct Model<'a> {
    pub p: &'a TransitionMatrix,
    pub d: &'a DetectorSpec,
    pub n_rx: usize,
    pub rows: Vec<usize>,
    pub states: Vec<Vec<usize>>,
}

impl Model<'_> {
    pub fn predicted(&self, prior: &[f64]) -> Vec<f64> {
        self.states
            .iter()
            .map(|to| {
                self.states
                    .iter()
                    .zip(prior)
                    .map(|(from, &w)| w * joint_transition(self.p, from, to))
                    .sum()
            })
            .collect()
    }

    /// Unnormalized joint `sum_n pi_n p_ni q_ij`.
    pub fn joint(&self, prior: &[f64], action: &[usize], flags: &[bool]) -> Vec<f64> {
        self.predicted(prior)
            .iter()
            .zip(&self.states)
            .map(|(&w, s)| w * obs_lik(self.d, self.n_rx, s, &self.rows, action, flags))
            .collect()
    }

    pub fn posterior(&self, prior: &[f64], action: &[usize], flags: &[bool]) -> Vec<f64> {
        let joint = self.joint(prior, action, flags);
        let total: f64 = joint.iter().sum();
        joint.iter().map(|x| x / total).collect()
    }

    pub fn gamma(&self, prior: &[f64], action: &[usize], flags: &[bool]) -> f64 {
        self.joint(prior, action, flags).iter().sum()
    }

    /// One-slot expected reward, summing over next states and observations.
    pub fn expected_reward(&self, prior: &[f64], action: &[usize]) -> f64 {
        let m_p = action.len();
        let pred = self.predicted(prior);
        let mut total = 0.0;
        for (s, &w) in self.states.iter().zip(&pred) {
            for flags in all_flags(m_p) {
                total += w * obs_lik(self.d, self.n_rx, s, &self.rows, action, &flags) * reward(s, &self.rows, action, &flags);
            }
        }
        total
    }

    /// Two-slot expectimax value by explicit enumeration.
    pub fn two_stage_value(&self, prior: &[f64], m_p: usize) -> f64 {
        let n_tx = self.p.size();
        let actions: Vec<Vec<usize>> = (0..n_tx).combinations(m_p).collect();
        let best_one = |b: &[f64]| {
            actions
                .iter()
                .map(|a| self.expected_reward(b, a))
                .fold(f64::NEG_INFINITY, f64::max)
        };
        actions
            .iter()
            .map(|a| {
                let mut v = self.expected_reward(prior, a);
                for flags in all_flags(m_p) {
                    let g = self.gamma(prior, a, &flags);
                    if g > 0.0 {
                        v += g * best_one(&self.posterior(prior, a, &flags));
                    }
                }
                v
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Per-path marginal update written symbol by symbol, for two paths.
pub fn reduced_update_two_paths(
    omega: [&[f64]; 2],
    p: &TransitionMatrix,
    d: &DetectorSpec,
    n_rx: usize,
    action: &[usize],
    flags: &[bool],
) -> [Vec<f64>; 2] {
    let n_tx = p.size();
    let keep = (1.0 - d.p_fa).powf(n_rx as f64);
    let miss = (1.0 - d.p_fa).powf(n_rx as f64 - 1.0) * d.p_md;
    let update = |l: usize| {
        let s = 1 - l;
        let mut row = vec![0.0; n_tx];
        for i in 0..n_tx {
            let mut prior_i = 0.0;
            for n in 0..n_tx {
                prior_i += omega[l][n] * p.row(n)[i];
            }
            let mut q = 1.0;
            for (m, &c) in action.iter().enumerate() {
                let silent = if c == i {
                    miss
                } else {
                    let mut other_in = 0.0;
                    for t in 0..n_tx {
                        other_in += omega[s][t] * p.row(t)[c];
                    }
                    (1.0 - other_in) * keep + other_in * miss
                };
                q *= if flags[m] { 1.0 - silent } else { silent };
            }
            row[i] = q * prior_i;
        }
        let total: f64 = row.iter().sum();
        row.iter().map(|x| x / total).collect::<Vec<f64>>()
    };
    [update(0), update(1)]
}

/// Random distribution with occasional exact zeros.
pub fn random_dist<R: rand::Rng>(n: usize, rng: &mut R) -> Vec<f64> {
    let w: Vec<f64> = (0..n)
        .map(|_| if rng.random::<f64>() < 0.2 { 0.0 } else { rng.random::<f64>() })
        .collect();
    let total: f64 = w.iter().sum();
    if total == 0.0 {
        return vec![1.0 / n as f64; n];
    }
    w.iter().map(|x| x / total).collect()
}

/// `k` sigma binomial half-width.
pub fn binomial_bound(p: f64, n: usize, k: f64) -> f64 {
    k * (p * (1.0 - p) / n as f64).sqrt()
}
