use cfres_cli::validate::run_validation;
use cfres_cli::ExperimentConfig;

#[test]
fn default_validation_passes() {
    let cfg = ExperimentConfig::default();
    let report = run_validation(&cfg).unwrap();
    let failures: Vec<_> = report.failures().iter().map(|l| l.name.clone()).collect();
    assert!(report.passed(), "{failures:?}\n{}", report.table());
    for l in report.lines.iter().filter(|l| l.name.starts_with("beam_norm") || l.name.starts_with("an_beam_norm")) {
        assert!((l.observed - 1.0).abs() < 0.03, "{}: {}", l.name, l.observed);
    }
    assert!(report.lines.iter().any(|l| l.name.contains("@ zero power")));
    let grid = report.lines.last().unwrap();
    assert!(grid.name.starts_with("grid_oracle") && grid.score <= 0.01);
}

#[test]
fn oracle_instance_size_is_limited() {
    let err = ExperimentConfig::from_toml("[validate]\naps = 5\n").unwrap_err();
    assert!(err.to_string().contains("validate"));
}
