use proptest::prelude::*;
use wavebreak_cli::scenario::{
    ClassifySpec, Figure, OdeRunSpec, OdeSweepSpec, PdeRunSpec, PdeSweepSpec, PortraitSpec,
    RandomSlack, ReportSpec, SeparatrixSpec,
};
use wavebreak_cli::{parse_scenario_str, Scenario};
use wavebreak_core::ode::{SlackPair, SlackProfile};
use wavebreak_core::whitham::{KernelSpec, RunOptions};

fn point() -> impl Strategy<Value = [f64; 2]> {
    (-20.0..-0.01f64, 0.0..20.0f64).prop_map(|(a, b)| [a, b])
}

fn kernel() -> impl Strategy<Value = KernelSpec> {
    prop_oneof![
        (0.1..5.0f64).prop_map(|sigma| KernelSpec::Gaussian { sigma }),
        (0.1..5.0f64).prop_map(|lambda| KernelSpec::SechSquared { lambda }),
    ]
}

fn run_options() -> impl Strategy<Value = RunOptions> {
    (8u32..14, 0.1..2.0f64, 0.1..0.5f64, proptest::option::of(1e-4..1e-2f64)).prop_map(
        |(log_n, t_max, cfl, fixed_dt)| RunOptions {
            n: 1 << log_n,
            t_max,
            cfl,
            fixed_dt,
            ..RunOptions::default()
        },
    )
}

fn slack() -> impl Strategy<Value = SlackProfile> {
    prop_oneof![
        Just(SlackProfile::Zero),
        (0.0..3.0f64).prop_map(|value| SlackProfile::Constant { value }),
        (0.01..1.0f64, proptest::collection::vec(0.0..3.0f64, 1..5))
            .prop_map(|(interval, values)| SlackProfile::Piecewise { interval, values }),
    ]
}

fn scenario() -> impl Strategy<Value = Scenario> {
    prop_oneof![
        proptest::collection::vec(point(), 1..6)
            .prop_map(|points| Scenario::Classify(ClassifySpec { points })),
        (-20.0..-3.0f64, 10usize..900).prop_map(|(x_min, points)| {
            Scenario::Separatrix(SeparatrixSpec { x_min, points, ..SeparatrixSpec::default() })
        }),
        (prop_oneof![Just(Figure::PhasePortrait), Just(Figure::Region), Just(Figure::Both)], 2usize..50)
            .prop_map(|(figure, k)| Scenario::Portrait(PortraitSpec {
                figure,
                arrows: [k, k + 1],
                ..PortraitSpec::default()
            })),
        (point(), proptest::option::of((slack(), slack())), any::<bool>(), any::<u64>()).prop_map(
            |(start, pair, random, seed)| Scenario::OdeRun(OdeRunSpec {
                start,
                slack: pair.clone().map(|(a, b)| SlackPair { a, b }),
                random_slack: (random && pair.is_none()).then_some(RandomSlack { interval: 0.05, count: 10, max: 1.0 }),
                seed: Some(seed >> 1),
                ..OdeRunSpec::default()
            })
        ),
        (1usize..300, 1usize..300, 1e-12..1e-6f64).prop_map(|(nx, ny, rel)| {
            let mut s = OdeSweepSpec { nx, ny, ..OdeSweepSpec::default() };
            s.tolerance.rel_tol = rel;
            Scenario::OdeSweep(s)
        }),
        (kernel(), point(), run_options()).prop_map(|(k, e, run)| Scenario::PdeRun(PdeRunSpec {
            kernel: Some(k),
            profile: None,
            extrema: Some(e),
            run,
        })),
        (kernel(), proptest::collection::vec(point(), 1..4), run_options())
            .prop_map(|(k, extrema, run)| Scenario::PdeSweep(PdeSweepSpec { kernel: Some(k), extrema, run })),
        (0usize..10_000, proptest::option::of(0u64..1 << 40)).prop_map(|(n, seed)| {
            Scenario::Report(ReportSpec {
                inputs: vec!["a.csv".into(), "dir/b.csv".into()],
                seliger_samples: n,
                seed: seed.or((n > 0).then_some(1)),
            })
        }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 200, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn scenarios_survive_a_toml_round_trip(s in scenario()) {
        let text = s.to_toml();
        let back = parse_scenario_str(&text, "generated").map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
        prop_assert_eq!(back, s);
    }
}

#[test]
fn every_kind_has_defaults_that_round_trip() {
    for kind in ["classify", "separatrix", "portrait", "ode-run", "ode-sweep", "pde-run", "pde-sweep", "report"] {
        let s = Scenario::default_for(kind).unwrap();
        assert_eq!(s.kind(), kind);
        assert_eq!(parse_scenario_str(&s.to_toml(), kind).unwrap(), s);
    }
}
