use hodge_curvature::error::Error;
use hodge_curvature::harness::*;

fn elliptic() -> ExperimentConfig {
    let mut config = bundled("elliptic_hodge").unwrap();
    config.identities.seeds = 2;
    config
}

fn with_line(text: &str, line: &str) -> String {
    format!("{line}\n{text}")
}

#[test]
fn every_bundled_config_parses() {
    for (name, _) in BUNDLED {
        let config = bundled(name).unwrap();
        assert_eq!(config.name, name);
        assert!(!config.suites.is_empty());
    }
    assert!(matches!(bundled("missing"), Err(Error::Config(_))));
}

#[test]
fn negative_tolerance_is_a_config_error() {
    let (_, text) = BUNDLED[0];
    let bad = format!("{text}\n[tolerances]\nagreement = -1e-7\n");
    assert!(matches!(ExperimentConfig::from_toml(&bad), Err(Error::Config(_))));
    let mut config = elliptic();
    config.tolerance_scale = 0.0;
    assert!(matches!(run(&config), Err(Error::Config(_))));
}

#[test]
fn unknown_keys_are_rejected() {
    let (_, text) = BUNDLED[0];
    assert!(matches!(ExperimentConfig::from_toml(&with_line(text, "colour = \"blue\"")), Err(Error::Config(_))));
    let nested = text.replace("[identities]\nseeds = 20", "[identities]\nseeds = 20\nwarmup = 3");
    assert_ne!(nested, text);
    assert!(matches!(ExperimentConfig::from_toml(&nested), Err(Error::Config(_))));
    let backend = text.replace("cutoff = 8", "cutoff = 8, threads = 2");
    assert!(matches!(ExperimentConfig::from_toml(&backend), Err(Error::Config(_))));
}

#[test]
fn bidegrees_beyond_the_fiber_dimension_are_rejected() {
    let mut config = elliptic();
    config.bidegrees.push([2, 0]);
    assert!(matches!(config.validate(), Err(Error::Config(_))));
}

#[test]
fn empty_suite_list_gives_an_empty_passing_report() {
    let mut config = elliptic();
    config.suites.clear();
    let report = run(&config).unwrap();
    assert!(report.passed);
    assert!(report.suites.is_empty());
    assert_eq!(report.to_csv().unwrap().lines().count(), 1);
}

#[test]
fn elliptic_run_passes_and_records_its_settings() {
    let mut config = elliptic();
    config.tolerance_scale = 2.0;
    let report = run(&config).unwrap();
    assert!(report.passed, "{:?}", report.failures().collect::<Vec<_>>());
    assert_eq!(report.tolerance_scale, 2.0);
    assert_eq!(report.seed, config.seed);
    assert!(report.timing.is_none());
    let suites: Vec<Suite> = report.suites.iter().map(|s| s.suite).collect();
    assert_eq!(suites, vec![Suite::Identities, Suite::Curvature, Suite::Oracle]);
    let curvature = report.suite(Suite::Curvature).unwrap();
    assert!(curvature.checks.iter().any(|c| c.name.starts_with("gauge beta=10")));
    assert!(curvature.checks.iter().all(|c| c.value.is_none() || c.tolerance > 0.0));
    let identities = report.suite(Suite::Identities).unwrap();
    assert_eq!(identities.identities.len(), 2);
    assert_eq!(identities.checks.iter().filter(|c| c.name.starts_with("bkn (")).count(), 2 * config.bidegrees.len());
}

#[test]
fn tolerance_scale_multiplies_every_tolerance() {
    let mut config = elliptic();
    config.suites = vec![Suite::Curvature];
    let base = run(&config).unwrap();
    config.tolerance_scale = 10.0;
    let scaled = run(&config).unwrap();
    for ((_, a), (_, b)) in base.checks().zip(scaled.checks()) {
        assert_eq!(a.name, b.name);
        if a.value.is_some() {
            assert!((b.tolerance - 10.0 * a.tolerance).abs() <= 1e-12 * b.tolerance, "{}", a.name);
        }
    }
}

#[test]
fn suite_errors_are_captured_not_fatal() {
    let mut config = elliptic();
    config.suites = vec![Suite::Curvature, Suite::Wp];
    let report = run(&config).unwrap();
    let wp = report.suite(Suite::Wp).unwrap();
    assert!(!wp.passed);
    assert!(wp.error.as_deref().unwrap().contains("product"));
    assert!(report.suite(Suite::Curvature).unwrap().passed);
    assert!(!report.passed);
}

#[test]
fn failing_expectation_fails_the_run() {
    let mut config = elliptic();
    config.suites = vec![Suite::Curvature];
    config.expect[0].normalized = 0.3;
    let report = run(&config).unwrap();
    assert!(!report.passed);
    assert!(report.failures().all(|(_, c)| c.name.contains("expected")));
}

#[test]
fn json_roundtrip_and_csv_rows() {
    let report = run(&elliptic()).unwrap();
    let text = report.to_json().unwrap();
    assert_eq!(RunReport::from_json(&text).unwrap(), report);
    let csv = report.to_csv().unwrap();
    assert_eq!(csv.lines().count(), 1 + report.checks().count());
    assert!(csv.starts_with("suite,check,value,tolerance,pass"));
}

#[test]
fn emit_writes_both_formats() {
    let dir = std::env::temp_dir().join(format!("hodge-harness-{}", std::process::id()));
    let mut config = elliptic();
    config.suites = vec![Suite::Oracle];
    let report = run(&config).unwrap();
    let json = dir.join("nested/report.json");
    let csv = dir.join("report.csv");
    emit(&report, Format::Json, &json).unwrap();
    emit(&report, Format::Csv, &csv).unwrap();
    assert_eq!(RunReport::from_json(&std::fs::read_to_string(&json).unwrap()).unwrap(), report);
    assert_eq!(std::fs::read_to_string(&csv).unwrap(), report.to_csv().unwrap());
    std::fs::remove_dir_all(dir).unwrap();
    assert!("xml".parse::<Format>().is_err());
}

#[test]
fn repeated_runs_are_byte_identical() {
    let config = elliptic();
    let first = run(&config).unwrap().to_json().unwrap();
    let second = run(&config).unwrap().to_json().unwrap();
    assert_eq!(first, second);
}

#[test]
fn diff_reports_finds_changed_checks() {
    let config = elliptic();
    let a = run(&config).unwrap();
    assert!(diff_reports(&a, &a.clone()).identical);
    let mut other = config.clone();
    other.expect[0].normalized = 0.3;
    let b = run(&other).unwrap();
    let diff = diff_reports(&a, &b);
    assert!(!diff.identical);
    assert!(diff.verdict_changed);
    assert!(diff.deltas.iter().all(|d| d.name.contains("expected")));
    let mut timed = a.clone();
    timed.timing = Some(Default::default());
    assert!(diff_reports(&a, &timed).identical);
}

#[test]
fn describe_reports_ranks_and_applicable_evaluators() {
    let summary = describe(&elliptic()).unwrap();
    assert_eq!(summary.dim, 1);
    assert!(summary.untwisted);
    assert!(!summary.product);
    assert_eq!(summary.bidegrees.len(), 4);
    assert!(summary.bidegrees.iter().all(|b| b.rank == 1));
    let names: Vec<&str> = summary.bidegrees[1].evaluators.iter().map(|e| e.name()).collect();
    assert_eq!(names, ["main", "griffiths", "flat"]);

    let theta = describe(&bundled("theta_line").unwrap()).unwrap();
    assert_eq!(theta.degree, Some(1));
    let top = theta.bidegrees.iter().find(|b| b.bidegree == [1, 1]).unwrap();
    assert_eq!(top.rank, 0);
}

#[test]
fn config_survives_a_toml_roundtrip() {
    for (name, _) in BUNDLED {
        let config = bundled(name).unwrap();
        assert_eq!(ExperimentConfig::from_toml(&config.to_toml().unwrap()).unwrap(), config);
    }
}

#[test]
fn suite_names_are_listed() {
    let names: Vec<&str> = Suite::ALL.iter().map(|s| s.name()).collect();
    assert_eq!(names, ["identities", "curvature", "oracle", "wp"]);
    assert!(Suite::ALL.iter().all(|s| !s.description().is_empty()));
}
