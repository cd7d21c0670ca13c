//! Beam-selection policies behind one interface.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{ModelParams, TransitionMatrix};
use crate::error::{Error, Result};
use crate::pomdp::{BeamPomdp, FullBelief, RewardSpec};
use crate::reduced::{greedy_action, reduced_belief_update, ReducedBelief};
use crate::sensing::{Action, DetectorSpec, Observation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PolicyKind {
    Random,
    Heuristic,
    GreedyFull,
    GreedyReduced,
    Lookahead(usize),
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolicyKind::Random => f.write_str("random"),
            PolicyKind::Heuristic => f.write_str("heuristic"),
            PolicyKind::GreedyFull => f.write_str("greedy-full"),
            PolicyKind::GreedyReduced => f.write_str("greedy-reduced"),
            PolicyKind::Lookahead(d) => write!(f, "lookahead({d})"),
        }
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    /// Accepts `random`, `heuristic`, `greedy-full`, `greedy-reduced`,
    /// `lookahead(d)` and the shorthand `lookahead` (depth 2).
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "random" => return Ok(PolicyKind::Random),
            "heuristic" => return Ok(PolicyKind::Heuristic),
            "greedy-full" => return Ok(PolicyKind::GreedyFull),
            "greedy-reduced" => return Ok(PolicyKind::GreedyReduced),
            "lookahead" => return Ok(PolicyKind::Lookahead(2)),
            _ => {}
        }
        let depth = s
            .strip_prefix("lookahead(")
            .and_then(|r| r.strip_suffix(')'))
            .and_then(|d| d.trim().parse::<usize>().ok())
            .ok_or_else(|| Error::config(format!("unknown policy '{s}'")))?;
        if depth == 0 {
            return Err(Error::config("lookahead depth must be at least 1"));
        }
        Ok(PolicyKind::Lookahead(depth))
    }
}

impl Serialize for PolicyKind {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PolicyKind {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Initial knowledge handed to the policies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitMode {
    /// All-equal initial belief.
    #[default]
    Uniform,
    /// Point mass on the true initial state.
    Known,
}

impl FromStr for InitMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(InitMode::Uniform),
            "known" => Ok(InitMode::Known),
            other => Err(Error::config(format!("unknown init mode '{other}'"))),
        }
    }
}

/// Model knowledge shared by every policy in an experiment.
#[derive(Debug, Clone)]
pub struct PolicyEnv {
    pub params: ModelParams,
    pub transition: TransitionMatrix,
    pub detector: DetectorSpec,
    pub m_p: usize,
    pub horizon: usize,
    pub reward: RewardSpec,
}

/// What a policy learns about the episode before the first slot.
#[derive(Debug, Clone)]
pub struct EpisodeStart {
    pub mode: InitMode,
    /// True columns at slot 0; only used in [`InitMode::Known`].
    pub columns: Vec<usize>,
    /// AoA rows of the paths, fixed for the episode.
    pub rows: Vec<usize>,
}

/// Per-path tracker of the heuristic baseline.
#[derive(Debug, Clone, PartialEq)]
pub struct Tracker {
    pub center: usize,
    pub beams: Vec<usize>,
}

#[derive(Debug, Clone)]
pub enum PolicyState {
    Random(ChaCha8Rng),
    Heuristic(Vec<Tracker>),
    Full {
        model: Arc<BeamPomdp>,
        belief: FullBelief,
    },
    Reduced(ReducedBelief),
}

#[derive(Debug, Clone)]
pub struct Policy {
    kind: PolicyKind,
    env: Arc<PolicyEnv>,
    state: PolicyState,
}

/// Builds a fresh policy for one episode. `rng` drives the random policy only.
pub fn make_policy(kind: PolicyKind, env: Arc<PolicyEnv>, start: &EpisodeStart, rng: ChaCha8Rng) -> Result<Policy> {
    let n_tx = env.params.n_tx;
    let n_paths = env.params.n_paths;
    if env.m_p == 0 || env.m_p > n_tx {
        return Err(Error::config(format!("m_p must lie in 1..={n_tx}")));
    }
    if start.mode == InitMode::Known && start.columns.len() != n_paths {
        return Err(Error::config("known init needs the initial column of every path"));
    }
    let state = match kind {
        PolicyKind::Random => PolicyState::Random(rng),
        PolicyKind::Heuristic => PolicyState::Heuristic(heuristic_init(&env, start)?),
        PolicyKind::GreedyReduced => PolicyState::Reduced(match start.mode {
            InitMode::Uniform => ReducedBelief::uniform(n_paths, n_tx),
            InitMode::Known => ReducedBelief::point_masses(&start.columns, n_tx)?,
        }),
        PolicyKind::GreedyFull | PolicyKind::Lookahead(_) => {
            let model = BeamPomdp::new(
                &env.params,
                env.m_p,
                env.transition.clone(),
                env.detector.clone(),
                start.rows.clone(),
                env.reward,
            )?;
            let belief = match start.mode {
                InitMode::Uniform => FullBelief::uniform(model.n_states()),
                InitMode::Known => FullBelief::point_mass(model.n_states(), model.space().index(&start.columns)),
            };
            PolicyState::Full {
                model: Arc::new(model),
                belief,
            }
        }
    };
    Ok(Policy { kind, env, state })
}

impl Policy {
    pub fn kind(&self) -> PolicyKind {
        self.kind
    }

    pub fn state(&self) -> &PolicyState {
        &self.state
    }

    /// Action for slot `slot` (0-based).
    pub fn choose(&mut self, slot: usize) -> Action {
        let env = &self.env;
        match &mut self.state {
            PolicyState::Random(rng) => random_policy_choose(rng, env.params.n_tx, env.m_p),
            PolicyState::Heuristic(trackers) => heuristic_action(trackers),
            PolicyState::Reduced(omega) => greedy_action(omega, &env.transition, env.m_p),
            PolicyState::Full { model, belief } => {
                let depth = match self.kind {
                    PolicyKind::Lookahead(d) => d,
                    _ => 1,
                };
                let remaining = env.horizon.saturating_sub(slot).max(1);
                model.lookahead_plan(belief, depth, remaining).action
            }
        }
    }

    /// Folds the slot's feedback into the policy state.
    pub fn observe(&mut self, action: &Action, obs: &Observation) -> Result<()> {
        let env = &self.env;
        match &mut self.state {
            PolicyState::Random(_) => {}
            PolicyState::Heuristic(trackers) => heuristic_update(trackers, action, obs, &env.transition, env.m_p),
            PolicyState::Reduced(omega) => {
                *omega = reduced_belief_update(omega, action, obs, &env.transition, &env.detector, env.params.n_rx)?;
            }
            PolicyState::Full { model, belief } => {
                *belief = model.belief_update(belief, action, obs)?;
            }
        }
        Ok(())
    }
}

/// Uniformly random `m_p`-subset of the columns.
pub fn random_policy_choose<R: Rng + ?Sized>(rng: &mut R, n_tx: usize, m_p: usize) -> Action {
    let mut cols = sample(rng, n_tx, m_p).into_vec();
    cols.sort_unstable();
    Action::from_sorted(cols)
}

/// Columns ordered by transition probability from `center`, ties ascending.
fn preference(transition: &TransitionMatrix, center: usize) -> Vec<usize> {
    let row = transition.row(center);
    let mut order: Vec<usize> = (0..row.len()).collect();
    order.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then(a.cmp(&b)));
    order
}

fn aim(transition: &TransitionMatrix, center: usize, per_path: usize, claimed: &mut Vec<usize>) -> Vec<usize> {
    let beams: Vec<usize> = preference(transition, center)
        .into_iter()
        .filter(|c| !claimed.contains(c))
        .take(per_path)
        .collect();
    claimed.extend(&beams);
    beams
}

fn heuristic_init(env: &PolicyEnv, start: &EpisodeStart) -> Result<Vec<Tracker>> {
    let n_paths = env.params.n_paths;
    let n_tx = env.params.n_tx;
    if env.m_p % n_paths != 0 {
        return Err(Error::config(format!(
            "heuristic needs m_p ({}) divisible by the number of paths ({n_paths})",
            env.m_p
        )));
    }
    let per_path = env.m_p / n_paths;
    let centers: Vec<usize> = match start.mode {
        InitMode::Known => start.columns.clone(),
        InitMode::Uniform => (0..n_paths).map(|l| (2 * l + 1) * n_tx / (2 * n_paths)).collect(),
    };
    let mut claimed = Vec::with_capacity(env.m_p);
    Ok(centers
        .into_iter()
        .map(|center| Tracker {
            center,
            beams: aim(&env.transition, center, per_path, &mut claimed),
        })
        .collect())
}

fn heuristic_action(trackers: &[Tracker]) -> Action {
    let mut cols: Vec<usize> = trackers.iter().flat_map(|t| t.beams.iter().copied()).collect();
    cols.sort_unstable();
    Action::from_sorted(cols)
}

/// One heuristic step: a tracker whose beams saw a detection re-centers on the
/// flagged beam most likely reached from its old center and re-aims at the
/// most likely next columns; a tracker without detection keeps its beams.
/// Trackers that keep their beams claim them first; re-aimed trackers skip
/// columns already claimed.
pub fn heuristic_update(
    trackers: &mut [Tracker],
    action: &Action,
    obs: &Observation,
    transition: &TransitionMatrix,
    m_p: usize,
) {
    let per_path = m_p / trackers.len();
    let flagged: Vec<usize> = action
        .columns()
        .iter()
        .zip(obs.flags())
        .filter(|(_, &f)| f)
        .map(|(&c, _)| c)
        .collect();

    let new_centers: Vec<Option<usize>> = trackers
        .iter()
        .map(|t| {
            let row = transition.row(t.center);
            t.beams
                .iter()
                .copied()
                .filter(|b| flagged.contains(b))
                .min_by(|&a, &b| row[b].total_cmp(&row[a]).then(a.cmp(&b)))
        })
        .collect();

    let mut claimed: Vec<usize> = trackers
        .iter()
        .zip(&new_centers)
        .filter(|(_, c)| c.is_none())
        .flat_map(|(t, _)| t.beams.iter().copied())
        .collect();
    for (t, c) in trackers.iter_mut().zip(new_centers) {
        if let Some(center) = c {
            t.center = center;
            t.beams = aim(transition, center, per_path, &mut claimed);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn kinds_round_trip() {
        for s in ["random", "heuristic", "greedy-full", "greedy-reduced", "lookahead(3)"] {
            assert_eq!(s.parse::<PolicyKind>().unwrap().to_string(), s);
        }
        assert_eq!("lookahead".parse::<PolicyKind>().unwrap(), PolicyKind::Lookahead(2));
        assert!("lookahead(0)".parse::<PolicyKind>().is_err());
        assert!("optimal".parse::<PolicyKind>().is_err());
    }

    #[test]
    fn random_full_width_is_everything() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10 {
            assert_eq!(random_policy_choose(&mut rng, 4, 4).columns(), &[0, 1, 2, 3]);
        }
    }

    #[test]
    fn identity_row_preference() {
        let p = TransitionMatrix::identity(8);
        let mut claimed = Vec::new();
        assert_eq!(aim(&p, 5, 3, &mut claimed), vec![5, 0, 1]);
    }

    #[test]
    fn banded_row_preference() {
        let p = TransitionMatrix::banded(16, 2, 0.5).unwrap();
        let mut claimed = Vec::new();
        assert_eq!(aim(&p, 5, 3, &mut claimed), vec![5, 4, 6]);
    }

    #[test]
    fn undetected_tracker_keeps_beams() {
        let p = TransitionMatrix::banded(16, 2, 0.5).unwrap();
        let mut trackers = vec![Tracker { center: 5, beams: vec![5, 4, 6] }, Tracker { center: 11, beams: vec![11, 10, 12] }];
        let a = heuristic_action(&trackers);
        let o = Observation::new(vec![false, false, false, false, false, true]);
        heuristic_update(&mut trackers, &a, &o, &p, 6);
        assert_eq!(trackers[0].beams, vec![5, 4, 6]);
        assert_eq!(trackers[1].center, 12);
        assert_eq!(trackers[1].beams, vec![12, 11, 13]);
    }

    #[test]
    fn re_aimed_trackers_avoid_claimed_columns() {
        let p = TransitionMatrix::banded(16, 2, 0.5).unwrap();
        let mut trackers = vec![Tracker { center: 5, beams: vec![5, 4, 6] }, Tracker { center: 8, beams: vec![8, 7, 9] }];
        let a = heuristic_action(&trackers);
        // only the second tracker's column 7 fires
        let o = Observation::new(a.columns().iter().map(|&c| c == 7).collect());
        heuristic_update(&mut trackers, &a, &o, &p, 6);
        assert_eq!(trackers[1].center, 7);
        assert_eq!(trackers[1].beams, vec![7, 8, 9]);
        assert_eq!(heuristic_action(&trackers).len(), 6);
    }
}
