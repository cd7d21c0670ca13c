use beamtrack::harness::{monte_carlo, run_episode, run_on_trajectory, trial_seed, Experiment, ExperimentConfig, Trajectory};
use beamtrack::output::results_csv;
use beamtrack::policies::PolicyKind;
use beamtrack::pomdp::{BeamPomdp, RewardSpec};
use beamtrack::sensing::{DetectorSpec, ObservationMode};

const ALL: [PolicyKind; 5] = [
    PolicyKind::Random,
    PolicyKind::Heuristic,
    PolicyKind::GreedyFull,
    PolicyKind::GreedyReduced,
    PolicyKind::Lookahead(2),
];

fn fig5b(trials: usize) -> ExperimentConfig {
    ExperimentConfig {
        trials,
        policies: ALL.to_vec(),
        ..ExperimentConfig::preset("fig5b").unwrap()
    }
}

#[test]
fn trace_rewards_match_model_reward() {
    let exp = Experiment::new(fig5b(1)).unwrap();
    for seed in 0..20 {
        for kind in ALL {
            let tr = run_episode(&exp, kind, seed).unwrap();
            assert_eq!(tr.slots.len(), 10);
            let model = BeamPomdp::new(exp.params(), 4, exp.env.transition.clone(), exp.detector().clone(), tr.rows.clone(), RewardSpec::PathCount).unwrap();
            let mut total = 0.0;
            for s in &tr.slots {
                let idx = model.space().index(&s.columns);
                assert_eq!(model.immediate_reward(idx, &s.action, &s.observation), s.reward);
                assert_eq!(s.action.len(), 4);
                assert!(s.action.columns().windows(2).all(|w| w[0] < w[1]));
                total += s.reward;
            }
            assert_eq!(total, tr.total_reward);
        }
    }
}

#[test]
fn policies_share_the_channel_and_noise() {
    let exp = Experiment::new(fig5b(1)).unwrap();
    for t in 0..30 {
        let seed = trial_seed(9, t);
        let traj = Trajectory::generate(&exp, seed);
        let traces: Vec<_> = ALL.iter().map(|&k| run_on_trajectory(&exp, k, &traj, seed).unwrap()).collect();
        for tr in &traces {
            for (s, state) in tr.slots.iter().zip(&traj.states[1..]) {
                assert_eq!(s.columns, state.columns);
            }
        }
        // same column sensed in the same slot gives the same flag
        for k in 0..10 {
            for a in &traces {
                for b in &traces {
                    let (sa, sb) = (&a.slots[k], &b.slots[k]);
                    for (ca, fa) in sa.action.columns().iter().zip(sa.observation.flags()) {
                        if let Some(pos) = sb.action.columns().iter().position(|c| c == ca) {
                            assert_eq!(*fa, sb.observation.flags()[pos]);
                        }
                    }
                }
            }
        }
    }
}

#[test]
fn depth_one_lookahead_is_greedy_full() {
    for preset in ["fig5a", "fig5b"] {
        let exp = Experiment::new(ExperimentConfig::preset(preset).unwrap()).unwrap();
        for seed in 0..40 {
            let a = run_episode(&exp, PolicyKind::GreedyFull, seed).unwrap();
            let b = run_episode(&exp, PolicyKind::Lookahead(1), seed).unwrap();
            assert_eq!(
                a.slots.iter().map(|s| &s.action).collect::<Vec<_>>(),
                b.slots.iter().map(|s| &s.action).collect::<Vec<_>>()
            );
        }
    }
}

#[test]
fn random_policy_ignores_the_channel() {
    let calm = Experiment::new(fig5b(1)).unwrap();
    let wild = Experiment::new(ExperimentConfig { decay: 0.9, mix: 0.5, p_fa: 0.2, ..fig5b(1) }).unwrap();
    for seed in 0..10 {
        let a = run_episode(&calm, PolicyKind::Random, seed).unwrap();
        let b = run_episode(&wild, PolicyKind::Random, seed).unwrap();
        assert_ne!(a.slots.iter().map(|s| &s.columns).collect::<Vec<_>>(), b.slots.iter().map(|s| &s.columns).collect::<Vec<_>>());
        assert_eq!(a.slots.iter().map(|s| &s.action).collect::<Vec<_>>(), b.slots.iter().map(|s| &s.action).collect::<Vec<_>>());
    }
}

#[test]
fn known_start_with_slow_paths_senses_them_first() {
    let exp = Experiment::new(ExperimentConfig { decay: 0.05, ..fig5b(1) }).unwrap();
    for seed in 0..50 {
        for kind in [PolicyKind::GreedyReduced, PolicyKind::GreedyFull, PolicyKind::Heuristic] {
            let tr = run_episode(&exp, kind, seed).unwrap();
            for c in &tr.initial_columns {
                assert!(tr.slots[0].action.contains(*c), "{kind} seed {seed}");
            }
        }
    }
}

#[test]
fn static_channel_perfect_detector_keeps_paths_in_view() {
    let cfg = ExperimentConfig {
        decay: 0.0,
        observation_mode: ObservationMode::Analytic,
        ..ExperimentConfig::preset("fig6").unwrap()
    };
    let exp = Experiment::new(cfg).unwrap().with_detector(DetectorSpec::perfect());
    for seed in 0..30 {
        let tr = run_episode(&exp, PolicyKind::GreedyReduced, seed).unwrap();
        for s in &tr.slots {
            assert!(s.columns.iter().all(|c| s.action.contains(*c)));
        }
    }
}

#[test]
fn monte_carlo_is_reproducible_and_bounded() {
    let exp = Experiment::new(fig5b(300)).unwrap();
    let a = monte_carlo(&exp).unwrap();
    let b = monte_carlo(&exp).unwrap();
    assert_eq!(results_csv(&[a.clone()]), results_csv(&[b]));
    for p in &a.policies {
        assert!(p.mean_reward.iter().all(|&m| (0.0..=2.0).contains(&m)));
        assert!(p.acc_reward.windows(2).all(|w| w[1] >= w[0]));
        assert!(p.mean_ci95.iter().chain(&p.acc_ci95).all(|&c| c >= 0.0));
    }
    let other = monte_carlo(&Experiment::new(ExperimentConfig { seed: 2, ..fig5b(300) }).unwrap()).unwrap();
    assert_ne!(results_csv(&[a]), results_csv(&[other]));
}
