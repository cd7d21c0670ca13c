//! Banded path-movement model and a sampled random walk.
//!
//! cargo run --example transition_dynamics

use beamtrack::channel::{ChannelState, ModelParams, TransitionMatrix};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> beamtrack::Result<()> {
    let p = TransitionMatrix::banded(8, 1, 0.5)?;
    println!("B=1, beta=0.5:\n{}", p.to_text());
    println!("with uniform appearance, lambda=0.2:\n{}", p.mix_uniform(0.2)?.to_text());

    let params = ModelParams::with_path_snr(8, 4, 2, 100.0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut state = ChannelState::random(&params, &mut rng);
    println!("rows (fixed): {:?}", state.rows);
    for k in 0..12 {
        println!("slot {k:>2}: columns {:?}", state.columns);
        state = state.step(&p, &params, &mut rng);
    }

    let mut counts = [0usize; 8];
    let n = 100_000;
    for _ in 0..n {
        counts[p.sample_next(3, &mut rng)] += 1;
    }
    let freq: Vec<String> = counts.iter().map(|&c| format!("{:.4}", c as f64 / n as f64)).collect();
    println!("empirical row 3: {}", freq.join(" "));
    Ok(())
}
