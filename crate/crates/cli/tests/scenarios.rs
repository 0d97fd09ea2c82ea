use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::process::Command;

use shgcat::config::{Scenario, ScenarioConfig};
use shgcat::scenarios::{detuning_sweep, dispersive_cat, fidelity_scan, resonant, spectrum_check, variance_scan};
use shgcat::{execute, CliError, RunConfig};

fn config(scenario: Scenario, edit: impl FnOnce(&mut ScenarioConfig)) -> RunConfig {
    let mut c = ScenarioConfig {
        scenario: Some(scenario),
        ..Default::default()
    };
    edit(&mut c);
    c.resolve().unwrap()
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap()
}

#[test]
fn resonant_snapshots() {
    let cfg = config(Scenario::Resonant, |c| c.tau = Some(vec![0.0, 1.0, 4.0]));
    let run = resonant(&cfg).unwrap();
    let s = &run.result.snapshots;
    let cell = cfg.grid_spec().step();
    assert_eq!(s[0].n_peaks, 1);
    assert!((s[0].peaks[0].re - 10f64.sqrt()).abs() <= cell && s[0].peaks[0].im.abs() <= cell);
    assert!((s[0].q_max - 1.0 / PI).abs() <= 1e-2 / PI);
    assert!(s[0].q_integral >= 1.0 - s[0].trace_deficit - 1e-3 && s[0].q_integral <= 1.0 + 1e-12);
    assert!(s[1].min_variance < 0.5);
    assert_eq!(s[2].n_peaks, 2);
    let names: Vec<&str> = run.tables.iter().map(|t| t.name.as_str()).collect();
    assert_eq!(names, ["q_tau_0.csv", "q_tau_1.csv", "q_tau_4.csv"]);
    assert_eq!(run.tables[0].rows.len(), 121 * 121);
    assert_eq!(run.cutoffs.unwrap().n_max_a, 36);
}

#[test]
fn sweep_matches_resonant_and_freezes_at_large_detuning() {
    let sweep_cfg = config(Scenario::DetuningSweep, |c| c.detunings = Some(vec![0.0, 200.0]));
    let sweep = detuning_sweep(&sweep_cfg).unwrap();
    let res = resonant(&config(Scenario::Resonant, |c| c.tau = Some(vec![4.0]))).unwrap();
    assert_eq!(sweep.tables[0].to_csv(), res.tables[0].to_csv());
    assert_eq!(sweep.result.rows[0].snapshot, res.result.snapshots[0]);
    assert_eq!(sweep.result.rows[1].snapshot.n_peaks, 1);
    let summary = sweep.tables.last().unwrap();
    assert_eq!(summary.name, "sweep.csv");
    assert_eq!(summary.header, ["detuning", "fidelity", "n_peaks"]);
}

#[test]
fn dispersive_branches() {
    let run = dispersive_cat(&config(Scenario::DispersiveCat, |_| {})).unwrap();
    let r = &run.result;
    assert!((r.gt - 25.0 * PI).abs() < 1e-12);
    assert!(r.effective.best_fidelity >= 1.0 - 1e-8);
    assert!((r.baseline_fidelity - 0.5).abs() < 1e-6);
    assert_eq!(r.exact.n_peaks, 2);
    let root = 10f64.sqrt();
    let mut res: Vec<f64> = r.exact.peaks.iter().map(|p| p.re).collect();
    res.sort_by(f64::total_cmp);
    assert!((res[0] + root).abs() < 0.5 && (res[1] - root).abs() < 0.5);
    assert!(r.doubled_cutoffs.fidelity_shift.abs() < 1e-3);
    assert_eq!(r.doubled_cutoffs.n_max_a, 72);
    assert!((r.exact.best_fidelity - 0.6193).abs() < 1e-3);
    assert!((r.exact.purity - 0.941).abs() < 1e-3);
}

#[test]
fn dispersive_kerr_branch() {
    let run = dispersive_cat(&config(Scenario::DispersiveCat, |c| c.form = Some("kerr".into()))).unwrap();
    assert!(run.result.effective.best_fidelity >= 1.0 - 1e-8);
    assert_eq!(run.result.form, "kerr");
}

#[test]
fn fidelity_scan_shape() {
    let run = fidelity_scan(&config(Scenario::FidelityScan, |_| {})).unwrap();
    let r = &run.result;
    assert_eq!(run.tables[0].rows.len(), 600);
    assert!((r.end_gt - 1.2 * 25.0 * PI).abs() < 1e-9);
    assert!((r.initial_fidelity - 0.5).abs() < 1e-6);
    assert!(r.secondary_maxima.iter().any(|p| p.gt > 5.0 && p.gt < r.argmax_gt));
    assert!((r.argmax_gt - 82.13).abs() < 0.3, "argmax {}", r.argmax_gt);
    assert!((r.peak_fidelity - 0.970).abs() < 2e-3);
    assert!(r.half_prominence_width > 2.0 && r.half_prominence_width < 12.0);
}

#[test]
fn variance_scan_rows() {
    let run = variance_scan(&config(Scenario::VarianceScan, |c| c.beta = Some([1.0, 0.0]))).unwrap();
    let t = &run.tables[0];
    assert_eq!(t.header, ["T", "formula", "effective", "exact"]);
    assert_eq!(t.rows.len(), 41);
    let first: Vec<f64> = (0..4).map(|j| t.float_column(j)[0]).collect();
    assert_eq!(first[0], 0.0);
    for v in &first[1..] {
        assert!((v - 0.5).abs() < 1e-8);
    }
    let last: Vec<f64> = (0..4).map(|j| *t.float_column(j).last().unwrap()).collect();
    assert!((last[1] - 0.26242924683208724).abs() < 1e-12);
    assert!((last[2] - 0.30774367876935216).abs() < 1e-8);
}

#[test]
fn spectrum_decay() {
    let run = spectrum_check(&config(Scenario::SpectrumCheck, |_| {})).unwrap();
    let errs: Vec<f64> = run.result.summaries.iter().map(|s| s.max_error).collect();
    assert!(errs.windows(2).all(|w| w[1] < w[0]));
    assert!(*errs.last().unwrap() < 1e-4);
    for r in &run.result.ratios {
        assert!((7.0..=9.0).contains(r), "ratio {r}");
    }
    assert!(run.result.summaries[2].max_error_up_to_12 < 1e-2);
    assert_eq!(run.tables[0].rows.len(), 5 * 21);
}

#[test]
fn third_harmonic_runs() {
    let run = spectrum_check(&config(Scenario::SpectrumCheck, |c| {
        c.order = Some(3);
        c.detunings = Some(vec![200.0, 400.0]);
        c.max_sector = Some(15);
    }))
    .unwrap();
    assert!(run.result.summaries[1].max_error < run.result.summaries[0].max_error);
    let cat = dispersive_cat(&config(Scenario::DispersiveCat, |c| {
        c.order = Some(3);
        c.nbar_a = Some(4.0);
        c.detuning_over_g = Some(200.0);
        c.form = Some("eq21-detuned".into());
    }))
    .unwrap();
    assert!(cat.result.exact.purity <= 1.0 + 1e-10);
}

#[test]
fn serial_reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    for scenario in [Scenario::Resonant, Scenario::FidelityScan, Scenario::SpectrumCheck] {
        let mut outputs = Vec::new();
        for run in 0..2 {
            let out = dir.path().join(format!("{}-{run}", scenario.name()));
            let cfg = config(scenario, |c| {
                c.serial = Some(true);
                c.out = Some(out.clone());
                c.tau = (scenario == Scenario::Resonant).then(|| vec![1.0, 4.0]);
                c.samples = Some(120);
            });
            let result = execute(&cfg).unwrap();
            assert_eq!(result.manifest.threads, 1);
            outputs.push((out, result));
        }
        let (a, b) = (&outputs[0], &outputs[1]);
        assert_eq!(a.1.manifest.files, b.1.manifest.files);
        for name in &a.1.manifest.files {
            assert_eq!(fs::read(a.0.join(name)).unwrap(), fs::read(b.0.join(name)).unwrap());
        }
        assert_eq!(a.1.manifest.results, b.1.manifest.results);
    }
}

#[test]
fn parallel_matches_serial() {
    let serial = config(Scenario::Resonant, |c| {
        c.tau = Some(vec![2.0, 4.0]);
        c.serial = Some(true);
    });
    let mut parallel = serial.clone();
    parallel.serial = false;
    let a = shgcat::run(&serial).unwrap();
    let b = shgcat::run(&parallel).unwrap();
    for (x, y) in a.tables.iter().zip(&b.tables) {
        assert_eq!(x.to_csv(), y.to_csv());
    }
}

#[test]
fn manifest_contents() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(Scenario::SpectrumCheck, |c| {
        c.out = Some(dir.path().to_path_buf());
        c.detunings = Some(vec![100.0, 200.0]);
    });
    execute(&cfg).unwrap();
    let m: serde_json::Value = serde_json::from_str(&read(dir.path(), "manifest.json")).unwrap();
    assert_eq!(m["scenario"], "spectrum-check");
    assert_eq!(m["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(m["config"]["detunings"], serde_json::json!([100.0, 200.0]));
    assert!(m["wall_time_seconds"].as_f64().unwrap() >= 0.0);
    assert_eq!(m["files"], serde_json::json!(["spectrum.csv"]));
    let csv = read(dir.path(), "spectrum.csv");
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("detuning,sector,max_error,dispersive"));
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first[0], "1.0000000000000000e2");
    assert_eq!(first[1], "0");
}

#[test]
fn numerical_errors_map_to_exit_three() {
    let e = CliError::from(shgcat_core::Error::NoConvergence { size: 3, index: 0 });
    assert_eq!(e.exit_code(), 3);
    let e = CliError::from(shgcat_core::Error::ZeroDetuning);
    assert_eq!(e.exit_code(), 2);
}

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_shgcat"))
}

#[test]
fn binary_exit_codes_and_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("cfg.json");
    fs::write(
        &cfg_path,
        r#"{"scenario": "spectrum-check", "detunings": [50, 100], "max_sector": 6}"#,
    )
    .unwrap();
    let out = dir.path().join("run");
    let status = binary()
        .args(["--config", cfg_path.to_str().unwrap(), "--detunings", "100,200", "--out", out.to_str().unwrap(), "--serial"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let m: serde_json::Value = serde_json::from_str(&read(&out, "manifest.json")).unwrap();
    assert_eq!(m["config"]["detunings"], serde_json::json!([100.0, 200.0]));
    assert_eq!(m["config"]["max_sector"], 6);

    let bad = binary().args(["dispersive-cat", "--detuning", "0", "--out"]).arg(dir.path().join("x")).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("configuration error"));
    assert_eq!(binary().args(["resonant", "--bogus"]).status().unwrap().code(), Some(2));
    assert_eq!(binary().args(["resonant", "--tau", "1", "--gt", "1"]).status().unwrap().code(), Some(2));
    fs::write(&cfg_path, r#"{"scenario": "resonant", "nbar": 3}"#).unwrap();
    assert_eq!(binary().args(["--config", cfg_path.to_str().unwrap()]).status().unwrap().code(), Some(2));
}
