//! End-to-end tests of the `amhrp` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn amhrp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_amhrp"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("cfg.toml");
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn dump_layout_lists_nineteen_sensors() {
    let out = amhrp(&["--dump-layout"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines.len() >= 19, "{text}");
    for line in &lines {
        assert_eq!(line.split(',').count(), 4, "{line}");
    }
}

#[test]
fn simulate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "rounds = 500\n");
    let mut csvs = Vec::new();
    for run in ["a", "b"] {
        let out_dir = dir.path().join(run);
        let out = amhrp(&[
            "simulate",
            "--config",
            &cfg,
            "--protocol",
            "amhrp",
            "--seed",
            "4",
            "--out",
            out_dir.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        csvs.push(fs::read(out_dir.join("runs/amhrp_seed4.csv")).unwrap());
    }
    assert_eq!(csvs[0], csvs[1]);
    let text = String::from_utf8(csvs.remove(0)).unwrap();
    assert!(text.starts_with(
        "round,alive,sent,received,critical_received,total_residual_j,mean_residual_j,mean_path_loss_db,equilibrium_ok\n"
    ));
    assert!(text.ends_with('\n') && !text.contains('\r'));
    assert_eq!(text.lines().count(), 501);
}

#[test]
fn sweep_compare_and_plots() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "rounds = 300\n");
    let out_dir = dir.path().join("out");
    let out = out_dir.to_str().unwrap();
    let sweep = amhrp(&[
        "sweep",
        "--config",
        &cfg,
        "--protocols",
        "amhrp,mattempt,simple",
        "--seeds",
        "1..3",
        "--out",
        out,
    ]);
    assert!(sweep.status.success(), "{}", String::from_utf8_lossy(&sweep.stderr));
    for p in ["amhrp", "mattempt", "simple"] {
        for s in 1..=3 {
            assert!(out_dir.join(format!("runs/{p}_seed{s}.csv")).is_file());
        }
    }
    assert!(out_dir.join("config.toml").is_file());

    let compare = amhrp(&["compare", "--in", out]);
    assert!(compare.status.success(), "{}", String::from_utf8_lossy(&compare.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("comparison.json")).unwrap()).unwrap();
    assert_eq!(report["seeds"], serde_json::json!([1, 2, 3]));
    assert!(fs::read_to_string(out_dir.join("comparison.txt"))
        .unwrap()
        .contains("amhrp vs mattempt"));

    let plots = amhrp(&["plots", "--in", out]);
    assert!(plots.status.success(), "{}", String::from_utf8_lossy(&plots.stderr));
    for name in ["lifetime.dat", "throughput.dat", "residual.dat", "pathloss.dat"] {
        let text = fs::read_to_string(out_dir.join(name)).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("# round amhrp mattempt simple"));
        assert_eq!(lines.count(), 300);
    }
    // Cumulative received never decreases.
    let throughput = fs::read_to_string(out_dir.join("throughput.dat")).unwrap();
    let amhrp_col: Vec<f64> = throughput
        .lines()
        .skip(1)
        .map(|l| l.split(' ').nth(1).unwrap().parse().unwrap())
        .collect();
    assert!(amhrp_col.windows(2).all(|w| w[1] >= w[0]));
}

#[test]
fn written_config_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "rounds = 200\ntx_range = 0.45\n[events]\nlambda = 0.2\n");
    let first = dir.path().join("first");
    let second = dir.path().join("second");
    let run = |config: &str, out: &Path| {
        let o = amhrp(&[
            "simulate",
            "--config",
            config,
            "--protocol",
            "simple",
            "--seed",
            "2",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    };
    run(&cfg, &first);
    run(first.join("config.toml").to_str().unwrap(), &second);
    assert_eq!(
        fs::read(first.join("runs/simple_seed2.csv")).unwrap(),
        fs::read(second.join("runs/simple_seed2.csv")).unwrap()
    );
}

#[test]
fn config_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let out = out.to_str().unwrap();
    for body in [
        "rounds = 10\nbogus_key = 1\n",
        "[energy]\nx_w = 7.0\n",
        "node_count = -3\n",
        "protocol = \"leach\"\n",
    ] {
        let cfg = write_config(dir.path(), body);
        let o = amhrp(&["simulate", "--config", &cfg, "--out", out]);
        assert_eq!(
            o.status.code(),
            Some(1),
            "{body}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
        assert!(!o.stderr.is_empty());
    }
    assert_eq!(
        amhrp(&["simulate", "--out", out, "--protocol", "nope"]).status.code(),
        Some(1)
    );
    assert_eq!(
        amhrp(&["sweep", "--out", out, "--seeds", "5..1"]).status.code(),
        Some(1)
    );
}

#[test]
fn unconstrained_weights_flag_admits_free_x_w() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "rounds = 50\n[energy]\nx_w = 7e-4\n");
    let out = dir.path().join("out");
    let strict = amhrp(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(strict.status.code(), Some(1));
    let loose = amhrp(&[
        "simulate",
        "--config",
        &cfg,
        "--allow-unconstrained-weights",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(loose.status.success(), "{}", String::from_utf8_lossy(&loose.stderr));
}

#[test]
fn stop_on_all_dead_truncates_the_series() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "rounds = 5000\ninitial_energy = 0.01\n");
    let out = dir.path().join("out");
    let o = amhrp(&[
        "simulate",
        "--config",
        &cfg,
        "--protocol",
        "mattempt",
        "--seed",
        "1",
        "--stop-on-all-dead",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(out.join("runs/mattempt_seed1.csv")).unwrap();
    let rows = text.lines().count() - 1;
    assert!(rows < 5000, "{rows} rows");
    assert!(text.lines().last().unwrap().starts_with(&format!("{},0,", rows - 1)));
}

#[test]
fn io_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.toml");
    let out = dir.path().join("out");
    let o = amhrp(&[
        "simulate",
        "--config",
        missing.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(
        amhrp(&["compare", "--in", dir.path().join("nothing").to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        amhrp(&["plots", "--in", dir.path().join("nothing").to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
    // An output path that is a regular file cannot hold a run directory.
    let blocker = dir.path().join("blocker");
    fs::write(&blocker, "x").unwrap();
    let o = amhrp(&["simulate", "--out", blocker.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}
