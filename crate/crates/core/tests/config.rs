use std::path::{Path, PathBuf};

use flatnormal::config::{
    default_radii, load_config, parse_config, ChartSelector, CoordsConfig, RunConfig, ToleranceOverrides,
};
use flatnormal::geometry::Engine;
use flatnormal::principal::DEFAULT_SEED;
use flatnormal::Error;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

#[test]
fn golden_config_parses_to_recorded_value() {
    let cfg = load_config(&data("golden.ini")).unwrap();
    let expected = RunConfig {
        chart: ChartSelector::Catalog { name: "dini".into(), params: vec![("a".into(), 1.0), ("b".into(), 0.5)] },
        exploratory: false,
        resolution: Some(vec![129, 65]),
        engine: Engine::fd(),
        seed: 7,
        tolerances: ToleranceOverrides {
            gauss: Some(2e-4),
            codazzi: Some(1e-4),
            connection: Some(1e-4),
            g0_flat: Some(1e-3),
            flat_normal: Some(1e-6),
            commutator: Some(1e-4),
            homomorphism: Some(1e-6),
            pullback: Some(1e-3),
            round_trip: Some(1e-8),
        },
        anchor: Some(vec![std::f64::consts::PI, 0.8]),
        radii: vec![0.25, 0.5, 1.0],
        window: Some((0.25, 1.0)),
        coords: CoordsConfig { t_box: Some(vec![(-0.2, 0.2), (-0.1, 0.3)]), nodes: 11, step: 0.005, pairs: 50 },
        output: PathBuf::from("results/dini"),
    };
    assert_eq!(cfg, expected);
    assert_eq!(cfg.counts(2, 257).unwrap(), vec![129, 65]);
    assert!(cfg.counts(3, 33).is_err());
}

#[test]
fn minimal_config_applies_defaults() {
    let cfg = parse_config("[chart]\nname = pseudosphere\n").unwrap();
    assert_eq!(cfg.engine, Engine::Ad);
    assert_eq!(cfg.seed, DEFAULT_SEED);
    assert_eq!(cfg.radii, default_radii());
    assert_eq!(cfg.radii.len(), 8);
    assert_eq!(cfg.counts(2, 257).unwrap(), vec![257, 257]);
    assert_eq!(cfg.output, PathBuf::from("out"));
}

#[test]
fn radii_must_increase() {
    let e = parse_config("[chart]\nname = pseudosphere\n\n[growth]\nradii = 1.5, 1.0\n").unwrap_err();
    assert!(matches!(e, Error::Parse { line: 5, .. }), "{e:?}");
    assert!(parse_config("[chart]\nname = pseudosphere\n[growth]\nradii = 0, 1\n").is_err());
}

#[test]
fn chart_files_resolve_next_to_the_config() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.ini"), "[chart]\nfile = shapes/t.chart\n").unwrap();
    let cfg = load_config(&dir.path().join("run.ini")).unwrap();
    assert_eq!(cfg.chart, ChartSelector::File(dir.path().join("shapes/t.chart")));
}

#[test]
fn syntax_errors_carry_line_numbers() {
    let cases = [
        ("[chart\nname = dini\n", 1),
        ("[chart]\nname dini\n", 2),
        ("[chart]\nname = dini\n[grid]\nseed = -3\n", 4),
        ("[chart]\nname = dini\nparams = a 1\n", 3),
        ("[chart]\nname = dini\n[coords]\nbox = 1 0, 0 1\n", 4),
        ("[chart]\nname = dini\n[tolerances]\npullback = -1e-3\n", 4),
        ("[chart]\nname = dini\n[growth]\nwindow = 2, 1\n", 4),
    ];
    for (text, line) in cases {
        match parse_config(text) {
            Err(Error::Parse { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
            other => panic!("{text:?}: {other:?}"),
        }
    }
}
