//! One tracking episode per policy on the large-array setup, printed as
//! true columns against sensed beams.
//!
//! cargo run --release --example tracking_trace -- [seed]

use beamtrack::harness::{run_episode, Experiment, ExperimentConfig};
use beamtrack::policies::PolicyKind;

fn main() -> beamtrack::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(4);
    let exp = Experiment::new(ExperimentConfig::preset("fig7")?)?;
    for kind in [PolicyKind::GreedyReduced, PolicyKind::Heuristic] {
        let trace = run_episode(&exp, kind, seed)?;
        println!("{kind}: total reward {}", trace.total_reward);
        for s in trace.slots.iter().step_by(3) {
            let hits: Vec<String> = s
                .columns
                .iter()
                .map(|c| if s.action.contains(*c) { format!("[{c}]") } else { c.to_string() })
                .collect();
            println!("  slot {:>2}: paths {:<12} beams {}", s.slot, hits.join(" "), s.action);
        }
    }
    Ok(())
}
