//! Reduced sufficient statistic: per-path marginals over AoD columns.
//!
//! `omega` is an `L x N_t` matrix whose row `l` is the marginal belief of
//! path `l`, held before the slot's transition like the full belief. The
//! greedy action is the top-`M_p` entries of the score vector
//! `v_m = sum_l sum_n omega_{l,n} p_{n,m}`; no action enumeration is needed.

use crate::channel::TransitionMatrix;
use crate::error::{Error, Result};
use crate::pomdp::{top_k, FullBelief, StateSpace};
use crate::sensing::{Action, DetectorSpec, Observation};

#[derive(Debug, Clone, PartialEq)]
pub struct ReducedBelief {
    n_tx: usize,
    /// Row-major `L x N_t`.
    marginals: Vec<f64>,
}

/// Detection probability used by [`reduced_expected_reward`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RewardMode {
    /// A sensed path is flagged with the column-level detection probability.
    Exact,
    /// Every sensed path is flagged.
    ZeroMiss,
}

impl ReducedBelief {
    pub fn uniform(n_paths: usize, n_tx: usize) -> Self {
        ReducedBelief {
            n_tx,
            marginals: vec![1.0 / n_tx as f64; n_paths * n_tx],
        }
    }

    /// Point mass for each path at the given column.
    pub fn point_masses(columns: &[usize], n_tx: usize) -> Result<Self> {
        let mut marginals = vec![0.0; columns.len() * n_tx];
        for (l, &c) in columns.iter().enumerate() {
            if c >= n_tx {
                return Err(Error::param(format!("column {c} out of range 0..{n_tx}")));
            }
            marginals[l * n_tx + c] = 1.0;
        }
        Ok(ReducedBelief { n_tx, marginals })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n_tx = rows.first().map_or(0, Vec::len);
        if n_tx == 0 || rows.iter().any(|r| r.len() != n_tx) {
            return Err(Error::param("marginal rows must be nonempty and equally long"));
        }
        for r in &rows {
            let total: f64 = r.iter().sum();
            if r.iter().any(|p| !(*p >= 0.0)) || (total - 1.0).abs() > 1e-10 {
                return Err(Error::param("each marginal row must be a distribution"));
            }
        }
        Ok(ReducedBelief {
            n_tx,
            marginals: rows.concat(),
        })
    }

    pub fn n_paths(&self) -> usize {
        self.marginals.len() / self.n_tx
    }

    pub fn n_tx(&self) -> usize {
        self.n_tx
    }

    pub fn row(&self, path: usize) -> &[f64] {
        &self.marginals[path * self.n_tx..(path + 1) * self.n_tx]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.marginals.chunks(self.n_tx)
    }

    /// Largest entrywise difference between two reduced beliefs.
    pub fn max_abs_diff(&self, other: &ReducedBelief) -> f64 {
        self.marginals
            .iter()
            .zip(&other.marginals)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// `v = P' omega`: expected number of paths in each column after the transition.
pub fn score_vector(omega: &ReducedBelief, p: &TransitionMatrix) -> Vec<f64> {
    let mut pooled = vec![0.0; omega.n_tx];
    for row in omega.rows() {
        for (acc, &w) in pooled.iter_mut().zip(row) {
            *acc += w;
        }
    }
    p.propagate(&pooled)
}

/// Greedy action: the `m_p` columns with the largest scores, ties to the lower index.
pub fn greedy_action(omega: &ReducedBelief, p: &TransitionMatrix, m_p: usize) -> Action {
    let (cols, _) = top_k(&score_vector(omega, p), m_p);
    Action::from_sorted(cols)
}

/// Expected path-count reward under the independent-path approximation.
pub fn reduced_expected_reward(
    omega: &ReducedBelief,
    action: &Action,
    p: &TransitionMatrix,
    mode: RewardMode,
    detector: &DetectorSpec,
    n_rx: usize,
) -> f64 {
    let detect = match mode {
        RewardMode::Exact => detector.column_detection(n_rx),
        RewardMode::ZeroMiss => 1.0,
    };
    let v = score_vector(omega, p);
    detect * action.columns().iter().map(|&c| v[c]).sum::<f64>()
}

/// Per-path Bayes update of the marginals.
///
/// For path `l` in column `i`, a sensed column `a_m = i` contributes the
/// column-level miss probability (or its complement); any other sensed
/// column contributes the probability that the remaining paths leave it
/// empty or occupied, computed from their current marginals.
pub fn reduced_belief_update(
    omega: &ReducedBelief,
    action: &Action,
    obs: &Observation,
    p: &TransitionMatrix,
    detector: &DetectorSpec,
    n_rx: usize,
) -> Result<ReducedBelief> {
    let n_tx = omega.n_tx;
    let n_paths = omega.n_paths();
    if action.len() != obs.len() {
        return Err(Error::param("action and observation lengths differ"));
    }
    let miss = detector.column_miss(n_rx);
    let quiet = 1.0 - detector.column_false_alarm(n_rx);
    let predicted: Vec<Vec<f64>> = omega.rows().map(|r| p.propagate(r)).collect();

    let mut marginals = Vec::with_capacity(n_paths * n_tx);
    for l in 0..n_paths {
        // probability that column a_m holds none of the other paths
        let others_absent: Vec<f64> = action
            .columns()
            .iter()
            .map(|&c| {
                (0..n_paths)
                    .filter(|&s| s != l)
                    .map(|s| 1.0 - predicted[s][c])
                    .product()
            })
            .collect();
        let mut row: Vec<f64> = (0..n_tx)
            .map(|i| {
                let q: f64 = action
                    .columns()
                    .iter()
                    .zip(obs.flags())
                    .zip(&others_absent)
                    .map(|((&c, &flag), &absent)| {
                        let zero = if c == i {
                            miss
                        } else {
                            absent * quiet + (1.0 - absent) * miss
                        };
                        if flag {
                            1.0 - zero
                        } else {
                            zero
                        }
                    })
                    .product();
                q * predicted[l][i]
            })
            .collect();
        let total: f64 = row.iter().sum();
        if !(total > 0.0) {
            return Err(Error::ImpossibleObservation(format!(
                "observation {obs} has zero probability for path {l} under action {action}"
            )));
        }
        row.iter_mut().for_each(|w| *w /= total);
        marginals.extend(row);
    }
    Ok(ReducedBelief { n_tx, marginals })
}

/// Product-form full belief `pi_n = prod_l omega_{l, i_l(n)}`.
pub fn expand_reduced_to_full(omega: &ReducedBelief) -> Result<FullBelief> {
    let space = StateSpace::new(omega.n_tx, omega.n_paths())?;
    let mut cols = vec![0; omega.n_paths()];
    let probs = (0..space.n_states())
        .map(|n| {
            space.decode_into(n, &mut cols);
            cols.iter().enumerate().map(|(l, &c)| omega.row(l)[c]).product()
        })
        .collect();
    FullBelief::normalized(probs).ok_or_else(|| Error::param("reduced belief has no mass"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::ModelParams;
    use crate::pomdp::{BeamPomdp, RewardSpec};
    use itertools::Itertools;

    fn noisy() -> DetectorSpec {
        let params = ModelParams::with_path_snr(8, 4, 1, 100.0).unwrap();
        DetectorSpec::new(0.05, &params).unwrap()
    }

    #[test]
    fn point_mass_identity_greedy() {
        let omega = ReducedBelief::point_masses(&[2], 8).unwrap();
        let a = greedy_action(&omega, &TransitionMatrix::identity(8), 3);
        assert!(a.contains(2));
    }

    #[test]
    fn uniform_scores_break_ties_low() {
        let omega = ReducedBelief::uniform(2, 8);
        let p = TransitionMatrix::banded(8, 1, 0.5).unwrap().mix_uniform(1.0).unwrap();
        assert_eq!(greedy_action(&omega, &p, 4).columns(), &[0, 1, 2, 3]);
    }

    #[test]
    fn greedy_matches_exhaustive_on_neighbors() {
        let p = TransitionMatrix::banded(8, 1, 0.5).unwrap();
        let omega = ReducedBelief::point_masses(&[1, 5], 8).unwrap();
        let a = greedy_action(&omega, &p, 4);
        let d = noisy();
        let best = (0..8)
            .combinations(4)
            .map(|c| Action::new(c, 8).unwrap())
            .map(|a| reduced_expected_reward(&omega, &a, &p, RewardMode::ZeroMiss, &d, 4))
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((reduced_expected_reward(&omega, &a, &p, RewardMode::ZeroMiss, &d, 4) - best).abs() < 1e-12);
        assert!(a.contains(1) && a.contains(5));
    }

    #[test]
    fn exact_mode_scales_zero_miss() {
        let p = TransitionMatrix::banded(8, 1, 0.5).unwrap();
        let omega = ReducedBelief::point_masses(&[3], 8).unwrap();
        let a = Action::new(vec![2, 3], 8).unwrap();
        let d = noisy();
        let zm = reduced_expected_reward(&omega, &a, &p, RewardMode::ZeroMiss, &d, 4);
        let ex = reduced_expected_reward(&omega, &a, &p, RewardMode::Exact, &d, 4);
        assert!((zm - 0.75).abs() < 1e-12);
        assert!((ex / zm - 0.974943).abs() < 1e-6);
    }

    #[test]
    fn perfect_detector_exclusion() {
        let omega = ReducedBelief::uniform(1, 4);
        let a = Action::new(vec![0], 4).unwrap();
        let post = reduced_belief_update(
            &omega,
            &a,
            &Observation::new(vec![false]),
            &TransitionMatrix::identity(4),
            &DetectorSpec::perfect(),
            4,
        )
        .unwrap();
        let third = 1.0 / 3.0;
        assert!(post.max_abs_diff(&ReducedBelief::from_rows(vec![vec![0.0, third, third, third]]).unwrap()) < 1e-15);
    }

    #[test]
    fn single_path_update_is_exact() {
        let p = TransitionMatrix::banded(6, 1, 0.6).unwrap().mix_uniform(0.1).unwrap();
        let params = ModelParams::with_path_snr(6, 4, 1, 100.0).unwrap();
        let d = DetectorSpec::new(0.05, &params).unwrap();
        let m = BeamPomdp::new(&params, 2, p.clone(), d.clone(), vec![0], RewardSpec::PathCount).unwrap();
        let omega = ReducedBelief::from_rows(vec![vec![0.1, 0.3, 0.05, 0.25, 0.2, 0.1]]).unwrap();
        for a in m.actions() {
            for j in 0..4 {
                let o = Observation::from_index(j, 2);
                let full = m.belief_update(&expand_reduced_to_full(&omega).unwrap(), a, &o).unwrap();
                let red = reduced_belief_update(&omega, a, &o, &p, &d, 4).unwrap();
                for (x, y) in full.probs().iter().zip(red.row(0)) {
                    assert!((x - y).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn expand_point_masses() {
        let omega = ReducedBelief::point_masses(&[1, 4], 8).unwrap();
        let full = expand_reduced_to_full(&omega).unwrap();
        let space = StateSpace::new(8, 2).unwrap();
        assert_eq!(full, FullBelief::point_mass(64, space.index(&[1, 4])));
    }

    #[test]
    fn updates_keep_rows_normalized() {
        let p = TransitionMatrix::banded(8, 1, 0.5).unwrap();
        let mut omega = ReducedBelief::uniform(2, 8);
        let d = noisy();
        for (k, j) in [(0usize, 0usize), (2, 5), (4, 15), (1, 8)] {
            let a = Action::new((k..k + 4).collect(), 8).unwrap();
            omega = reduced_belief_update(&omega, &a, &Observation::from_index(j, 4), &p, &d, 4).unwrap();
            for r in omega.rows() {
                assert!((r.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
        }
    }
}
