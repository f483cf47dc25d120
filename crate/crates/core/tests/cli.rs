use std::path::{Path, PathBuf};
use std::process::Command;

use oqs_lab::cli::{file_stem, parse_config, parse_csv, run, to_csv_string, ExperimentConfig, Subcommand};

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("oqs-lab-cli-{name}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_oqs-lab"))
}

fn run_csv(sub: Subcommand, json: &str) -> Vec<(String, String)> {
    let cfg = parse_config(sub, json).unwrap();
    run(&cfg)
        .unwrap()
        .into_iter()
        .map(|o| (o.name.clone(), to_csv_string(&o.table).unwrap()))
        .collect()
}

fn column(csv: &str, name: &str) -> Vec<Option<f64>> {
    parse_csv(csv).unwrap().column(name).unwrap()
}

#[test]
fn kz_compare_is_byte_deterministic() {
    let json = r#"{"n_oscillators": 32, "dt": 0.001, "t_final": 10.0, "seed": 7, "record_every": 100}"#;
    let a = run_csv(Subcommand::KzCompare, json);
    let b = run_csv(Subcommand::KzCompare, json);
    assert_eq!(a, b);
    let diff = column(&a[0].1, "abs_diff");
    assert_eq!(diff.len(), 101);
    assert!(diff.iter().all(|d| d.unwrap() <= 1e-3));
}

#[test]
fn binary_output_does_not_depend_on_thread_count() {
    let dir = scratch("threads");
    let cfg = dir.join("realize.json");
    std::fs::write(&cfg, r#"{"steps": 2000, "n_traj": 16, "max_lag": 5}"#).unwrap();
    let mut outputs = Vec::new();
    for threads in ["1", "3"] {
        let out = dir.join(format!("t{threads}"));
        let status = bin()
            .args(["realize", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&out)
            .args(["--seed", "42"])
            .env("OQS_THREADS", threads)
            .status()
            .unwrap();
        assert!(status.success());
        outputs.push(std::fs::read(out.join("realize_covariance.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    let text = String::from_utf8(outputs.pop().unwrap()).unwrap();
    assert!(text.contains("# config: {") && text.contains("\"seed\":42"));
    assert!(text.contains("# version: oqs-lab "));
}

#[test]
fn dilation_reports_order() {
    let out = run_csv(Subcommand::Dilation, r#"{"dt_list": [0.01, 0.005]}"#);
    let errors = &out.iter().find(|(n, _)| n == "errors").unwrap().1;
    let order = column(errors, "order");
    assert_eq!(order[0], None);
    assert!((order[1].unwrap() - 1.0).abs() < 0.2);
    let ito = &out.iter().find(|(n, _)| n == "ito").unwrap().1;
    let t = parse_csv(ito).unwrap();
    for r in &t.rows {
        let (v, e, dt) = (r[3].unwrap(), r[4].unwrap(), r[0].unwrap());
        assert!((v - e).abs() <= 4.0 * f64::EPSILON * dt);
    }
}

#[test]
fn qnoise_identity_residuals() {
    let out = run_csv(Subcommand::Qnoise, "{}");
    for name in ["params", "kernel"] {
        let csv = &out.iter().find(|(n, _)| n == name).unwrap().1;
        assert!(column(csv, "residual").iter().all(|r| r.unwrap() <= 1e-12), "{name}");
    }
    let gen = &out.iter().find(|(n, _)| n == "generator").unwrap().1;
    assert!(column(gen, "eta_drift").iter().all(|r| r.unwrap() <= 1e-6));
    let cfg = parse_config(Subcommand::Qnoise, r#"{"sim_traj": 2}"#).unwrap();
    assert!(run(&cfg).is_err());
}

#[test]
fn every_subcommand_runs_and_round_trips() {
    let quick = [
        (Subcommand::Kernels, r#"{"n_t": 5}"#),
        (Subcommand::Realize, r#"{"steps": 500, "n_traj": 4, "seed": 1}"#),
        (Subcommand::Gle, r#"{"steps": 2000, "seed": 1}"#),
        (Subcommand::KzCompare, r#"{"t_final": 1.0, "seed": 1}"#),
        (Subcommand::Lindblad, r#"{"t_final": 1.0}"#),
        (Subcommand::Lindblad, r#"{"model": "damped_ho", "gamma": 0.1, "fock_cutoff": 15, "t_final": 1.0}"#),
        (Subcommand::Dilation, r#"{}"#),
        (Subcommand::Qnoise, r#"{"sim_traj": 2, "sim_steps": 200, "seed": 3, "n_t": 3}"#),
        (Subcommand::FockCheck, r#"{"cutoffs": [10, 20]}"#),
    ];
    for (sub, json) in quick {
        let cfg = parse_config(sub, json).unwrap();
        for o in run(&cfg).unwrap() {
            let text = to_csv_string(&o.table).unwrap();
            let back = parse_csv(&text).unwrap();
            assert_eq!(back, o.table, "{}", file_stem(sub, &o.name));
            let echoed = back.metadata.iter().find(|(k, _)| k == "config").unwrap();
            assert_eq!(parse_config(sub, &echoed.1).unwrap(), cfg);
        }
    }
}

#[test]
fn custom_lindblad_model_from_file() {
    let dir = scratch("custom");
    let model = dir.join("model.json");
    std::fs::write(
        &model,
        r#"{"h": [[[0,0],[0,0]],[[0,0],[1,0]]], "lindblad_ops": [[[[0,0],[1,0]],[[0,0],[0,0]]]],
            "rho0": [[[0,0],[0,0]],[[0,0],[1,0]]]}"#,
    )
    .unwrap();
    let json = format!(
        r#"{{"model": "custom", "custom_file": {}, "t_final": 1.0, "record_every": 100}}"#,
        serde_json::to_string(model.to_str().unwrap()).unwrap()
    );
    let out = run_csv(Subcommand::Lindblad, &json);
    let p1 = column(&out[0].1, "population_1");
    assert!((p1[1].unwrap() - (-1.0f64).exp()).abs() < 1e-8);
}

fn exit_code(args: &[&str], cfg: Option<(&Path, &str)>) -> i32 {
    if let Some((p, text)) = cfg {
        std::fs::write(p, text).unwrap();
    }
    bin().args(args).output().unwrap().status.code().unwrap()
}

#[test]
fn exit_codes_and_messages() {
    let dir = scratch("exit");
    let cfg = dir.join("c.json");
    let cfg_s = cfg.to_str().unwrap();
    let out_s = dir.to_str().unwrap();
    assert_eq!(exit_code(&["kernels", "--config", cfg_s, "--out", out_s], Some((&cfg, r#"{"n_t": 3}"#))), 0);
    assert_eq!(exit_code(&["kernels", "--config", cfg_s], Some((&cfg, r#"{"lamda": 1}"#))), 2);
    assert_eq!(exit_code(&["gle", "--config", cfg_s], Some((&cfg, "{}"))), 2);
    assert_eq!(exit_code(&["kernels", "--config", "/nonexistent/c.json"], None), 3);
    assert_eq!(
        exit_code(&["qnoise", "--config", cfg_s], Some((&cfg, r#"{"temperature": 0.2}"#))),
        4
    );
    std::fs::write(&cfg, r#"{"lamda": 1}"#).unwrap();
    let o = bin().args(["kernels", "--config", cfg_s]).output().unwrap();
    let stderr = String::from_utf8(o.stderr).unwrap();
    assert!(stderr.starts_with("error[config]") && stderr.contains("did you mean `lambda`"), "{stderr}");

    let printed = bin().args(["dilation", "--print-defaults"]).output().unwrap();
    let text = String::from_utf8(printed.stdout).unwrap();
    assert_eq!(
        parse_config(Subcommand::Dilation, &text).unwrap(),
        ExperimentConfig::defaults(Subcommand::Dilation)
    );
}
