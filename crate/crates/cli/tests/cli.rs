use std::process::Command;

use polariton_cli::{
    parse_config, parse_config_with, read_csv, run_experiment, scan_grid, series_table,
    write_series, CliError, ExperimentConfig, ExperimentKind, OutputFormat, Preset,
};
use polariton_core::params::effective_parameters;
use polariton_core::{CavityGraph, ObservableSeries, PhysicalParams, RampSchedule};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_polariton-bh"))
}

fn run_to_string(config: &ExperimentConfig, kind: ExperimentKind) -> String {
    let mut buf = Vec::new();
    run_experiment(config, kind, &mut buf).unwrap();
    String::from_utf8(buf).unwrap()
}

fn report_value(text: &str, key: &str) -> f64 {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key},")))
        .unwrap_or_else(|| panic!("no `{key}` in report"))
        .parse()
        .unwrap()
}

#[test]
fn empty_config_gives_documented_defaults() {
    let c = parse_config("# nothing but a comment\n\n").unwrap();
    assert_eq!(c.params, PhysicalParams::toroidal_2005());
    assert_eq!(c.ramp, RampSchedule::toroidal_default());
    assert_eq!(c.graph, CavityGraph::cycle(3).unwrap());
    assert_eq!(c.initial, vec![1, 1, 1]);
    assert_eq!(c.n_max, 3);
    assert_eq!(c.samples, 200);
    assert_eq!(c.rtol, 1e-8);
    assert_eq!(c.preset, Preset::Toroidal2005);
    assert_eq!(c, ExperimentConfig::default());
}

#[test]
fn flipped_detuning_gives_attractive_kappa() {
    let c = parse_config("Delta = 2.0e10\n").unwrap();
    assert_eq!(c.params.delta_cap, 2.0e10);
    assert!(effective_parameters(&c.params).unwrap().kappa < 0.0);
    let same = parse_config("delta_cap = 2.0e10 # canonical name\n").unwrap();
    assert_eq!(c, same);
}

#[test]
fn cycle_shorthand_expands() {
    let c = parse_config("graph = cycle:3").unwrap();
    assert_eq!(c.graph.site_count(), 3);
    assert_eq!(c.graph.edges(), &[(0, 1), (1, 2), (2, 0)]);
    let explicit = parse_config("graph = 3: 0-1, 1-2, 2-0").unwrap();
    assert_eq!(explicit.graph, c.graph);
    let chain = parse_config("graph = chain:4\ninitial = 1,0,1,0").unwrap();
    assert_eq!(chain.graph.edges(), &[(0, 1), (1, 2), (2, 3)]);
    assert_eq!(chain.n_max, 2);
}

#[test]
fn config_errors_carry_line_numbers() {
    let line_of = |text: &str| match parse_config(text) {
        Err(CliError::Config { line, .. }) => line,
        other => panic!("expected config error, got {other:?}"),
    };
    assert_eq!(line_of("g13 = 1e9\n\nbogus = 3\n"), 3);
    assert_eq!(line_of("# c\ng24 = two\n"), 2);
    assert_eq!(line_of("g13 = 1e9\ng13 = 2e9\n"), 2);
    assert_eq!(line_of("samples\n"), 1);
    assert_eq!(line_of("ramp_shape = cubic\n"), 1);
    assert_eq!(line_of("graph = 2: 0-0\n"), 1);
    // without a preset every physical key is required; reported past the last line
    let err = parse_config("preset = none\ng13 = 2.5e9\n").unwrap_err();
    match err {
        CliError::Config { line, message } => {
            assert_eq!(line, 3);
            assert!(message.contains("missing required key"), "{message}");
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn preset_without_defaults_accepts_full_listing() {
    let text = "\
preset = none
omega_c = 2.21e15
g13 = 2.5e9
g24 = 2.5e9
omega_l_start = 7.8e10
delta_cap = -2.0e10
delta_small = -1.0e10
epsilon = 0
n_atoms = 1000
gamma_c = 0.4e5
gamma3 = 1.6e7
gamma4 = 1.6e7
gamma_dephase = 0
two_omega_alpha = 1.1e7
";
    let c = parse_config(text).unwrap();
    assert_eq!(c.params, PhysicalParams::toroidal_2005());
    assert_eq!(c.preset, Preset::None);
}

#[test]
fn pbg_preset_reaches_quoted_ratio() {
    let c = parse_config_with("", Some(Preset::Pbg)).unwrap();
    let e = effective_parameters(&c.params).unwrap();
    assert!((e.kappa_over_gamma() - 5.2).abs() < 1e-9);
    assert_eq!(parse_config("preset = pbg").unwrap(), c);
}

#[test]
fn params_report_matches_oracle() {
    let text = run_to_string(&ExperimentConfig::default(), ExperimentKind::Params);
    assert!((report_value(&text, "kappa") / 7.81e7 - 1.0).abs() < 1e-3);
    assert!((report_value(&text, "j") / 5.43e6 - 1.0).abs() < 1e-3);
    let ratio = report_value(&text, "kappa_over_gamma");
    assert!((3.9e3..4.1e3).contains(&ratio));
    assert!(text.contains("validity.verdict,Valid"));
}

#[test]
fn params_flags_exactly_when_threshold_exceeded() {
    let at = |threshold: f64| {
        let c = parse_config(&format!("validity_threshold = {threshold}")).unwrap();
        let mut buf = Vec::new();
        let outcome = run_experiment(&c, ExperimentKind::Params, &mut buf).unwrap();
        let worst = report_value(&String::from_utf8(buf).unwrap(), "validity.max_ratio");
        (outcome, worst)
    };
    let (loose, worst) = at(0.25);
    assert!(loose.validity_passed());
    assert_eq!(loose.exit_code(true), 0);
    let (tight, _) = at(worst * 0.999);
    assert!(!tight.validity_passed());
    assert_eq!(tight.exit_code(true), 2);
    assert_eq!(tight.exit_code(false), 0);
    let (edge, _) = at(worst);
    assert!(edge.validity_passed());
}

#[test]
fn validate_micro_reports_small_error() {
    let text = run_to_string(&ExperimentConfig::default(), ExperimentKind::ValidateMicro);
    assert!(report_value(&text, "relative_error") <= 0.10);
    assert!(report_value(&text, "dark_overlap") > 0.5);
}

fn one_sample_series() -> ObservableSeries {
    ObservableSeries {
        sites: 2,
        times: vec![0.0],
        omega_l: vec![7.8e10],
        kappa: vec![7.811084863547009e7],
        hopping: vec![5.4259769742176095e6],
        gamma: vec![1.0 / 3.0],
        mean_n: vec![vec![1.0, 0.1 + 0.2]],
        fluctuation: vec![vec![0.0, 2.0f64.sqrt()]],
        trace: vec![1.0],
        purity: vec![1.0 - 1e-17],
        min_eigenvalue: vec![0.0],
        hermiticity_error: vec![0.0],
        ..Default::default()
    }
}

#[test]
fn one_sample_csv_has_header_and_row() {
    let mut buf = Vec::new();
    write_series(&one_sample_series(), OutputFormat::Csv, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0], "t,omega_l,kappa,j,gamma,n_1,n_2,f_1,f_2,trace,purity");
}

#[test]
fn csv_round_trip_is_bit_exact() {
    let series = one_sample_series();
    let mut buf = Vec::new();
    write_series(&series, OutputFormat::Csv, &mut buf).unwrap();
    let parsed = read_csv(std::str::from_utf8(&buf).unwrap()).unwrap();
    let original = series_table(&series);
    assert_eq!(parsed.columns.len(), original.columns.len());
    for ((name_a, a), (name_b, b)) in parsed.columns.iter().zip(&original.columns) {
        assert_eq!(name_a, name_b);
        for (x, y) in a.iter().zip(b) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }
}

#[test]
fn json_mirrors_record_names() {
    let mut buf = Vec::new();
    write_series(&one_sample_series(), OutputFormat::Json, &mut buf).unwrap();
    let v: serde_json::Value = serde_json::from_slice(&buf).unwrap();
    let keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
    assert_eq!(
        keys,
        ["t", "omega_l", "kappa", "j", "gamma", "n_1", "n_2", "f_1", "f_2", "trace", "purity"]
    );
    assert_eq!(v["gamma"][0].as_f64().unwrap(), 1.0 / 3.0);
}

#[test]
fn ragged_series_is_rejected() {
    let mut s = one_sample_series();
    s.trace.push(1.0);
    assert!(write_series(&s, OutputFormat::Csv, &mut Vec::new()).is_err());
}

#[test]
fn ground_scan_is_ordered_and_monotone() {
    let config = parse_config("scan_max = 0.5\nscan_points = 11").unwrap();
    let text = run_to_string(&config, ExperimentKind::GroundScan);
    let table = read_csv(&text).unwrap();
    assert_eq!(table.column("j_over_kappa").unwrap(), scan_grid(0.0, 0.5, 11).as_slice());
    let f = table.column("f_1").unwrap();
    assert_eq!(f[0], 0.0);
    assert!(f.windows(2).all(|w| w[1] > w[0]));
    for n in table.column("n_1").unwrap() {
        assert!((n - 1.0).abs() < 1e-10);
    }
}

#[test]
fn ramp_defaults_write_200_rows_with_fluctuation_growth() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ramp.csv");
    let status = bin()
        .args(["ramp", "--out"])
        .arg(&path)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let table = read_csv(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(table.rows(), 200);
    let f = table.column("f_1").unwrap();
    let n = table.column("n_1").unwrap();
    assert!(f[199] > 10.0 * f[0].max(1e-6));
    assert!(n.iter().all(|&x| x >= 0.9));
    for (tr, p) in table.column("trace").unwrap().iter().zip(table.column("purity").unwrap()) {
        assert!((tr - 1.0).abs() <= 1e-6);
        assert!(*p <= 1.0 + 1e-10);
    }
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("short.cfg");
    std::fs::write(&config, "samples = 20\nramp_duration = 2e-7\n").unwrap();
    let mut outputs = Vec::new();
    for name in ["a.csv", "b.csv"] {
        let path = dir.path().join(name);
        let status = bin()
            .args(["ramp", "--config"])
            .arg(&config)
            .arg("--out")
            .arg(&path)
            .status()
            .unwrap();
        assert!(status.success());
        outputs.push(std::fs::read(&path).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(String::from_utf8_lossy(&outputs[0]).lines().count(), 21);

    let scan = |threads: &str| {
        let out = bin()
            .args(["ground-scan", "--format", "json"])
            .env("POLARITON_BH_THREADS", threads)
            .output()
            .unwrap();
        assert!(out.status.success());
        out.stdout
    };
    assert_eq!(scan("1"), scan("4"));
}

#[test]
fn exit_codes() {
    // three polaritons on one site exceed the strict threshold at the default drive
    let out = bin()
        .args(["ground-scan", "--strict-validity"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Marginal"));
    let out = bin().args(["params", "--strict-validity"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.cfg");
    std::fs::write(&bad, "g13 = 1e9\nwhat = 1\n").unwrap();
    let out = bin().args(["params", "--config"]).arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));

    let out = bin()
        .args(["params", "--config"])
        .arg(dir.path().join("missing.cfg"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}
