use qbias::agents::run_episode;
use qbias::envs::spec_file::{parse_spec, write_spec};
use qbias::envs::{random_mdp, value_iteration};
use qbias::rng::rng_from_seed;
use qbias::{Agent, AgentConfig, QTable, TabularEnv, Variant};

const CHAIN: &str = "\
gamma 0.9
absorbing 3
start 0
0 0 1:1:0
0 1 0:1:0.5
1 0 2:1:1
1 1 0:1:-0.2
2 0 3:1:2
2 1 1:1:0.3
";

#[test]
fn every_variant_reaches_the_value_iteration_fixed_point() {
    let spec = parse_spec(CHAIN, "chain").unwrap();
    let truth = value_iteration(&spec, 1e-13).unwrap();
    for variant in [
        Variant::Q,
        Variant::DoubleQ,
        Variant::MaxminQ(3),
        Variant::EnsembleQ(2),
        Variant::AveragedQ(3),
    ] {
        let cfg = AgentConfig {
            variant,
            alpha: 0.5,
            epsilon: 1.0,
            gamma: spec.gamma,
            buffer_capacity: 100,
            batch_size: 4,
            updates_per_step: 2,
        };
        let counts = spec.action_counts();
        let mut agent = Agent::new(cfg, || Ok(QTable::zeros(&counts))).unwrap();
        let mut env = TabularEnv::new(spec.clone(), 50).unwrap();
        let mut rng = rng_from_seed(5);
        for ep in 0..3000 {
            run_episode(&mut agent, &mut env, ep, &mut rng).unwrap();
        }
        for table in agent.estimators() {
            for (s, row) in truth.q.iter().enumerate() {
                for (a, &q) in row.iter().enumerate() {
                    let got = table.row(s)[a];
                    assert!((got - q).abs() < 1e-6, "{variant} Q({s},{a}) = {got}, expected {q}");
                }
            }
        }
    }
}

#[test]
fn spec_files_round_trip_exactly() {
    let spec = random_mdp(6, 3, 3, 0.95, 11).unwrap();
    let text = write_spec(&spec);
    let back = parse_spec(&text, "round trip").unwrap();
    assert_eq!(back, spec);
    assert_eq!(write_spec(&back), text);
}
