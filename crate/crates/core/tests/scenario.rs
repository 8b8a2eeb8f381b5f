use proptest::prelude::*;
use ringsim::ensemble::{ProbeConfig, ScenarioConfig, ShapeMode, ShapingPulse, ShapingWindow};
use ringsim::magnetics::RingFrame;
use ringsim::scenario::{parse_scenario_str, write_scenario, OutputSpec};

#[test]
fn units_are_converted() {
    let text = r#"
seed = 4
[ring]
radius = "10 mm"
current = "8 A"
tilt = "90 deg"
[cloud]
n = 100
speed = "0.85 m/s"
t_longitudinal = "3.4 uK"
"#;
    let f = parse_scenario_str(text, "inline").unwrap();
    let c = &f.config;
    assert_eq!(c.seed, 4);
    assert!((c.ring.radius - 0.01).abs() < 1e-15);
    assert!((c.loads[0].speed - 0.85).abs() < 1e-15);
    assert!((c.loads[0].t_longitudinal - 3.4e-6).abs() < 1e-18);
}

#[test]
fn bad_units_and_keys_are_refused() {
    for text in [
        "[ring]\nradius = \"8 A\"\n",
        "[ring]\nradius = 0.01\n",
        "[ring]\nradius = \"1 cm\"\n",
        "colour = 3\n",
        "[ring]\nradus = \"1 cm\"\n",
    ] {
        assert!(parse_scenario_str(text, "inline").is_err(), "{text}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn written_scenarios_parse_back(
        seed in 0u64..1_000_000,
        n in 1usize..5000,
        speed in 0.1f64..2.0,
        t_end in 0.05f64..1.0,
        tilt in 0.0f64..1.5,
        tau in proptest::option::of(0.01f64..10.0),
        shape in proptest::option::of((0.1f64..0.9, any::<bool>())),
        junction in any::<bool>(),
    ) {
        let mut cfg = ScenarioConfig::ring_stage(seed, n, speed, t_end).unwrap();
        cfg.ring.frame = RingFrame::tilted(tilt);
        cfg.losses.background_lifetime = tau;
        cfg.losses.junction = junction;
        cfg.probe = ProbeConfig::default().sweep(0.0, 0.5 * t_end, 1e-3).unwrap();
        if let Some((fraction, keep)) = shape {
            cfg.shaping = vec![ShapingPulse {
                t: 0.5 * t_end,
                window: ShapingWindow { fraction, mode: if keep { ShapeMode::Keep } else { ShapeMode::Remove } },
            }];
        }
        let text = write_scenario(&cfg, &OutputSpec::default()).unwrap();
        let back = parse_scenario_str(&text, "written").unwrap().config;
        prop_assert_eq!(&back, &cfg);
        prop_assert_eq!(back.hash(), cfg.hash());
    }
}
