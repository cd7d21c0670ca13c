//! Per-path marginal beliefs: score vector, greedy beams and updates,
//! compared with the exact posterior on the same observations.
//!
//! cargo run --example reduced_greedy

use beamtrack::channel::{ChannelState, ModelParams, TransitionMatrix};
use beamtrack::pomdp::{BeamPomdp, RewardSpec};
use beamtrack::reduced::{expand_reduced_to_full, greedy_action, reduced_belief_update, score_vector, ReducedBelief};
use beamtrack::sensing::{simulate_observation, DetectorSpec, ObservationMode};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> beamtrack::Result<()> {
    let params = ModelParams::with_path_snr(16, 4, 2, 100.0)?;
    let p = TransitionMatrix::banded(16, 2, 0.5)?;
    let detector = DetectorSpec::new(0.05, &params)?;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut state = ChannelState::random(&params, &mut rng);
    let exact = BeamPomdp::new(&params, 6, p.clone(), detector.clone(), state.rows.clone(), RewardSpec::PathCount)?;

    let mut omega = ReducedBelief::point_masses(&state.columns, 16)?;
    let mut full = expand_reduced_to_full(&omega)?;
    for k in 1..=8 {
        state = state.step(&p, &params, &mut rng);
        let v = score_vector(&omega, &p);
        let a = greedy_action(&omega, &p, 6);
        let obs = simulate_observation(&state, &a, &detector, &params, ObservationMode::Signal, &mut rng);
        omega = reduced_belief_update(&omega, &a, &obs, &p, &detector, params.n_rx)?;
        full = exact.belief_update(&full, &a, &obs)?;
        let gap = expand_reduced_to_full(&omega)?.max_abs_diff(&full);
        let top: Vec<String> = a.columns().iter().map(|&c| format!("{c}:{:.2}", v[c])).collect();
        println!("slot {k}: true {:?} beams {} flags {} product-vs-exact {gap:.3}", state.columns, top.join(" "), obs);
    }
    Ok(())
}
