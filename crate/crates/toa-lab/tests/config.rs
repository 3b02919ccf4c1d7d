use proptest::prelude::*;
use toa_lab::config::{GridConfig, ModelConfig, PacketConfig};
use toa_lab::{validate, ExperimentConfig, REGISTRY};

fn arb_config() -> impl Strategy<Value = ExperimentConfig> {
    (
        proptest::option::of(0usize..REGISTRY.len()),
        proptest::option::of(1.0f64..500.0),
        proptest::option::of(6u32..14),
        proptest::option::of((-50.0f64..0.0, 0.1f64..20.0, 0.2f64..5.0)),
        proptest::option::of(0.1f64..100.0),
        proptest::option::of(proptest::collection::vec(1e-5f64..1e-2, 1..6)),
        proptest::option::of(any::<u64>()),
    )
        .prop_map(|(exp, half, log_n, packet, alpha, deltas, seed)| ExperimentConfig {
            experiment: exp.map(|i| REGISTRY[i].name.to_string()),
            grid: GridConfig { half_width: half, n: log_n.map(|l| 1usize << l), dx: None },
            packet: packet.map(|(x0, k0, sigma)| PacketConfig { m: Some(1.0), k0: Some(k0), sigma: Some(sigma), x0: Some(x0) }).unwrap_or_default(),
            model: ModelConfig { alpha, deltas, ..ModelConfig::default() },
            seed,
            ..ExperimentConfig::default()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn json_round_trip(cfg in arb_config()) {
        let text = serde_json::to_string(&cfg).unwrap();
        prop_assert_eq!(ExperimentConfig::parse(&text).unwrap(), cfg);
    }

    #[test]
    fn unknown_keys_are_config_errors(cfg in arb_config(), key in "[a-z]{3,12}_x", section in 0usize..4) {
        let mut v = serde_json::to_value(&cfg).unwrap();
        let target = match section {
            0 => &mut v,
            1 => &mut v["grid"],
            2 => &mut v["packet"],
            _ => &mut v["model"],
        };
        target.as_object_mut().unwrap().insert(key, serde_json::json!(1));
        let err = ExperimentConfig::parse(&v.to_string()).unwrap_err();
        prop_assert_eq!(err.exit_code(), 2);
    }
}

#[test]
fn every_experiment_validates_its_defaults() {
    for e in &REGISTRY {
        validate(e.name, &ExperimentConfig::default()).unwrap_or_else(|err| panic!("{}: {err}", e.name));
    }
}

#[test]
fn unknown_experiment_is_a_config_error() {
    let err = validate("nope", &ExperimentConfig::default()).unwrap_err();
    assert_eq!(err.exit_code(), 2);
}
