//! Exact Bayes filtering of the path locations while a greedy planner
//! chooses the beams.
//!
//! cargo run --example belief_tracking

use beamtrack::channel::{ModelParams, TransitionMatrix, ChannelState};
use beamtrack::pomdp::{BeamPomdp, FullBelief, RewardSpec};
use beamtrack::sensing::{simulate_observation, DetectorSpec, ObservationMode};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> beamtrack::Result<()> {
    let params = ModelParams::with_path_snr(8, 4, 2, 100.0)?;
    let p = TransitionMatrix::banded(8, 1, 0.5)?;
    let detector = DetectorSpec::new(0.05, &params)?;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut state = ChannelState::random(&params, &mut rng);
    let model = BeamPomdp::new(&params, 4, p.clone(), detector.clone(), state.rows.clone(), RewardSpec::PathCount)?;
    let mut belief = FullBelief::uniform(model.n_states());

    for k in 1..=10 {
        state = state.step(&p, &params, &mut rng);
        let plan = model.greedy_plan(&belief);
        let obs = simulate_observation(&state, &plan.action, &detector, &params, ObservationMode::Signal, &mut rng);
        belief = model.belief_update(&belief, &plan.action, &obs)?;
        let (map, p_map) = belief
            .probs()
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, &p)| (model.space().columns(i), p))
            .unwrap();
        println!(
            "slot {k:>2}: true {:?} sensed [{}] flags {} -> MAP {:?} ({:.3})",
            state.columns, plan.action, obs, map, p_map
        );
    }
    Ok(())
}
