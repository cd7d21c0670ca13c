//! Planning values at increasing depth from a diffuse belief.
//!
//! cargo run --release --example lookahead_planning

use std::time::Instant;

use beamtrack::channel::{ModelParams, TransitionMatrix};
use beamtrack::pomdp::{BeamPomdp, FullBelief, RewardSpec};
use beamtrack::sensing::DetectorSpec;

fn main() -> beamtrack::Result<()> {
    let params = ModelParams::with_path_snr(8, 4, 2, 100.0)?;
    let p = TransitionMatrix::banded(8, 1, 0.5)?;
    let detector = DetectorSpec::new(0.05, &params)?;
    let model = BeamPomdp::new(&params, 4, p, detector, vec![0, 2], RewardSpec::PathCount)?;

    // mass split between two well separated hypotheses
    let mut probs = vec![0.0; model.n_states()];
    probs[model.space().index(&[1, 6])] = 0.5;
    probs[model.space().index(&[3, 4])] = 0.5;
    let belief = FullBelief::from_probs(probs)?;

    for depth in 1..=3 {
        let t0 = Instant::now();
        let plan = model.lookahead_plan(&belief, depth, 10);
        println!("depth {depth}: action [{}] value {:.4} ({:.1?})", plan.action, plan.value, t0.elapsed());
    }

    let mrc = BeamPomdp::new(&params, 2, TransitionMatrix::banded(8, 1, 0.5)?, DetectorSpec::new(0.05, &params)?, vec![0, 2], RewardSpec::MrcLog { snr_per_path: 100.0 })?;
    let plan = mrc.lookahead_plan(&FullBelief::uniform(mrc.n_states()), 2, 10);
    println!("MRC reward, M_p=2, depth 2: action [{}] value {:.4}", plan.action, plan.value);
    Ok(())
}
