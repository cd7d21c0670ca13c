//! Policy comparison on the small known-start setup.
//!
//! cargo run --release --example monte_carlo_fig5 -- [trials] [decay]

use std::time::Instant;

use beamtrack::harness::{monte_carlo, Experiment, ExperimentConfig};

fn main() -> beamtrack::Result<()> {
    let mut args = std::env::args().skip(1);
    let trials = args.next().and_then(|s| s.parse().ok()).unwrap_or(2_000);
    let decay = args.next().and_then(|s| s.parse().ok()).unwrap_or(0.5);
    let cfg = ExperimentConfig {
        trials,
        decay,
        ..ExperimentConfig::preset("fig5b")?
    };
    let t0 = Instant::now();
    let result = monte_carlo(&Experiment::new(cfg)?)?;
    println!("{} trials, decay {decay}, {:.1?}", result.n_trials, t0.elapsed());
    println!("{:<16} {:>10} {:>8}  per-slot", "policy", "mean", "ci95");
    for p in &result.policies {
        let (m, ci) = p.overall();
        let curve: Vec<String> = p.mean_reward.iter().map(|r| format!("{r:.3}")).collect();
        println!("{:<16} {m:>10.4} {ci:>8.4}  {}", p.policy.to_string(), curve.join(" "));
    }
    Ok(())
}
