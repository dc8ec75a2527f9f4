use std::path::{Path, PathBuf};
use std::process::Command;

use tsam::adaptation::default_config;
use tsam::cli::datasets::{
    generate_synthetic_logistic, load_logistic_csv, load_lv_csv, DEFAULT_BETA,
};
use tsam::cli::output::{read_trace_csv, write_trace, write_trace_csv};
use tsam::cli::ExperimentConfig;
use tsam::samplers::{run_chain, KernelKind, SamplerConfig};
use tsam::targets::{ShiftedTTarget, TwoLevelTarget};
use tsam::trace::{Counters, Trace};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tsam"))
}

fn write_config(dir: &Path, name: &str, json: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, json).unwrap();
    p
}

fn run(config: &Path, extra: &[&str]) -> std::process::Output {
    bin().arg("run").arg(config).args(extra).output().unwrap()
}

const SMALL_RUN: &str = r#"{
  "target": { "kind": "banana" },
  "sampler": { "kernel": "tsam", "n_iters": 600, "thinning": 3 }
}"#;

#[test]
fn single_run_writes_outputs_and_effective_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", SMALL_RUN);
    let out = dir.path().join("out");
    let o = run(&cfg, &["--seed", "4", "--out", out.to_str().unwrap()]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    for f in ["effective_config.json", "trace.csv", "run_stats.csv"] {
        assert!(out.join(f).is_file(), "missing {f}");
    }
    let eff = ExperimentConfig::load(&out.join("effective_config.json")).unwrap();
    assert_eq!(eff.base_seed, 4);
    // every default is spelled out, and the file parses back to itself
    let text = std::fs::read_to_string(out.join("effective_config.json")).unwrap();
    for key in [
        "\"s_d\"",
        "\"t0\"",
        "\"epsilon\"",
        "\"burn_in_fraction\"",
        "\"mu\"",
    ] {
        assert!(text.contains(key), "effective config lacks {key}");
    }
    assert_eq!(eff.to_json() + "\n", text);
    let rows = read_trace_csv(&out.join("trace.csv")).unwrap();
    assert_eq!(rows.len(), 100);
    assert_eq!(rows[0].iter, 301);
    assert_eq!(rows[1].iter, 304);
}

#[test]
fn same_config_and_seed_give_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", SMALL_RUN);
    let trace = |seed: &str, sub: &str| {
        let out = dir.path().join(sub);
        assert!(run(&cfg, &["--seed", seed, "--out", out.to_str().unwrap()])
            .status
            .success());
        std::fs::read(out.join("trace.csv")).unwrap()
    };
    assert_eq!(trace("11", "a"), trace("11", "b"));
    assert_ne!(trace("11", "c"), trace("12", "d"));

    // Re-running the effective config reproduces the trace.
    let eff = dir.path().join("a/effective_config.json");
    let out = dir.path().join("e");
    assert!(run(&eff, &["--out", out.to_str().unwrap()])
        .status
        .success());
    assert_eq!(
        std::fs::read(out.join("trace.csv")).unwrap(),
        trace("11", "f")
    );
}

#[test]
fn validation_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        (
            "negative.json",
            r#"{"target": {"kind": "banana"}, "sampler": {"n_iters": -5}}"#,
            "n_iters",
        ),
        (
            "unknown.json",
            r#"{"target": {"kind": "banana"}, "sampler": {"n_iters": 5, "speed": 2}}"#,
            "speed",
        ),
        (
            "kind.json",
            r#"{"target": {"kind": "gamma"}, "sampler": {"n_iters": 5}}"#,
            "gamma",
        ),
        (
            "thin.json",
            r#"{"target": {"kind": "banana"}, "sampler": {"n_iters": 5, "thinning": 0}}"#,
            "thinning",
        ),
        ("syntax.json", r#"{"target": "#, ""),
    ];
    for (name, json, needle) in cases {
        let o = run(
            &write_config(dir.path(), name, json),
            &["--out", dir.path().join("o").to_str().unwrap()],
        );
        assert_eq!(
            o.status.code(),
            Some(2),
            "{name}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
        assert!(
            String::from_utf8_lossy(&o.stderr).contains(needle),
            "{name}"
        );
    }
    let o = run(&dir.path().join("absent.json"), &[]);
    assert_eq!(o.status.code(), Some(2));
    let o = bin().arg("run").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn missing_data_file_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "lv.json",
        r#"{"target": {"kind": "lotka_volterra", "data": {"source": "csv", "path": "nowhere.csv"}}, "sampler": {"n_iters": 5}}"#,
    );
    assert_eq!(run(&cfg, &[]).status.code(), Some(2));
}

#[test]
fn unwritable_output_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", SMALL_RUN);
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let o = run(&cfg, &["--out", blocker.join("sub").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn mc_summary_has_one_row_per_n() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "mc.json",
        r#"{"target": {"kind": "shifted_t"}, "sampler": {"n_iters": 1},
            "experiment": {"type": "mc_estimate", "replicates": 3, "n_list": [50, 100, 200]}}"#,
    );
    let out = dir.path().join("o");
    assert!(run(&cfg, &["--out", out.to_str().unwrap()])
        .status
        .success());
    let text = std::fs::read_to_string(out.join("summary.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "n,mean,sd");
    assert_eq!(lines.len(), 4);
    assert!(lines[3].starts_with("200,"));
}

#[test]
fn edpm_compare_writes_one_summary_per_thinning() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "e.json",
        r#"{"target": {"kind": "shifted_t"}, "sampler": {"n_iters": 4000},
            "experiment": {"type": "edpm_compare", "thinning": [1, 5],
                           "projections": [{"kind": "log_posterior"}, {"kind": "coordinate", "index": 7}]}}"#,
    );
    let out = dir.path().join("o");
    assert!(run(&cfg, &["--out", out.to_str().unwrap()])
        .status
        .success());
    for k in [1, 5] {
        let text = std::fs::read_to_string(out.join(format!("summary_thin{k}.csv"))).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "projection,edpm_a,edpm_b,redpm");
        assert!(lines[1].starts_with("log_pi,") && lines[2].starts_with("x_8,"));
    }
    assert_eq!(
        read_trace_csv(&out.join("trace_a.csv")).unwrap().len(),
        2000
    );
    let stats = std::fs::read_to_string(out.join("run_stats.csv")).unwrap();
    assert!(stats.lines().nth(1).unwrap().starts_with("tsam,4000,2000,"));
    assert!(stats.lines().nth(2).unwrap().starts_with("am,4000,2000,"));
}

#[test]
fn empty_trace_is_header_only() {
    let t = ShiftedTTarget::paper();
    let trace = Trace {
        kernel: KernelKind::Tsam,
        dim: 8,
        rows: Vec::new(),
        wall: Default::default(),
        counters: Counters::default(),
        config: SamplerConfig::new(KernelKind::Tsam, default_config(8, t.support()), 1, 0),
    };
    let mut buf = Vec::new();
    write_trace(&trace, &mut buf).unwrap();
    assert_eq!(
        String::from_utf8(buf).unwrap(),
        "iter,x_1,x_2,x_3,x_4,x_5,x_6,x_7,x_8,log_pi,stage1_accept,stage2_accept,expensive_eval\n"
    );
}

#[test]
fn trace_round_trips_exactly() {
    let t = ShiftedTTarget::paper();
    let trace = run_chain(
        &t,
        &SamplerConfig::new(KernelKind::Tsam, default_config(8, t.support()), 500, 3),
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("t.csv");
    write_trace_csv(&trace, &p).unwrap();
    assert_eq!(read_trace_csv(&p).unwrap(), trace.rows);
}

#[test]
fn shipped_hare_lynx_table_has_21_years() {
    let obs =
        load_lv_csv(&Path::new(env!("CARGO_MANIFEST_DIR")).join("data/hare_lynx.csv")).unwrap();
    assert_eq!(obs.len(), 21);
    assert_eq!(obs.times[0], 1900.0);
    assert_eq!(obs.relative_times()[20], 20.0);
}

#[test]
fn synthetic_logistic_matches_paper_imbalance() {
    let data = generate_synthetic_logistic(41_188, Some(0.887), &DEFAULT_BETA, 7);
    let zeros = data.n_zeros() as f64;
    let sd = (41_188.0f64 * 0.887 * 0.113).sqrt();
    assert!((zeros - 0.887 * 41_188.0).abs() < 4.0 * sd, "{zeros} zeros");

    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    data.write_csv(&a).unwrap();
    generate_synthetic_logistic(41_188, Some(0.887), &DEFAULT_BETA, 7)
        .write_csv(&b)
        .unwrap();
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

    let names = tsam::cli::datasets::SyntheticLogistic::predictor_names();
    let loaded = load_logistic_csv(&a, "y", &names, &[]).unwrap();
    assert_eq!(loaded.design, data.design());
    assert_eq!(loaded.n_zeros(), data.n_zeros());
}

#[test]
fn bank_scale_file_reports_zero_count() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bank.csv");
    let mut text = String::from("y,job,contact\n");
    for i in 0..41_188usize {
        let y = if i < 4_640 { "yes" } else { "no" };
        text.push_str(&format!("{y},j{},c{}\n", i % 3, (i / 3) % 2));
    }
    std::fs::write(&p, text).unwrap();
    let names = ["job".to_string(), "contact".to_string()];
    let data = load_logistic_csv(&p, "y", &names, &[]).unwrap();
    assert_eq!(data.y.len(), 41_188);
    assert_eq!(data.n_zeros(), 36_548);
    assert_eq!(data.design.n_cols(), 4);
}
