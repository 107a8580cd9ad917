//! The `cybertwin` binary: outputs, determinism and exit codes.

use std::path::Path;
use std::process::{Command, Output};

fn cybertwin(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cybertwin"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

const SMALL_SIM: &str = "[simulate]\nduration = 120.0\nattacks = [{ kind = \"flood\", multiplier = 3.0, start = 20.0, end = 40.0 }]\n";

#[test]
fn simulate_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", SMALL_SIM);
    for out in ["a", "b"] {
        let o = cybertwin(
            &["simulate", "--config", &cfg, "--seed", "9", "--out", out],
            dir.path(),
        );
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for f in [
        "simulate_trace.csv",
        "simulate_windows.csv",
        "simulate_summary.csv",
    ] {
        let a = std::fs::read(dir.path().join("a").join(f)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(f)).unwrap();
        assert_eq!(a, b, "{f}");
        let text = String::from_utf8(a).unwrap();
        assert!(text.starts_with("# experiment: simulate\n"));
        assert!(text.contains("# seed: 9\n"));
    }
}

#[test]
fn seed_changes_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", SMALL_SIM);
    for (seed, out) in [("1", "a"), ("2", "b")] {
        assert!(cybertwin(
            &["simulate", "--config", &cfg, "--seed", seed, "--out", out],
            dir.path()
        )
        .status
        .success());
    }
    let a = std::fs::read(dir.path().join("a/simulate_trace.csv")).unwrap();
    let b = std::fs::read(dir.path().join("b/simulate_trace.csv")).unwrap();
    assert_ne!(a, b);
}

#[test]
fn queue_validate_flags_unstable_points() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.toml",
        "experiment = \"queue-validate\"\n[queue_validate]\nmin_completions = 5000\ngrid = [{ lambda_r = 0.5, mu = 1.0, m = 1 }, { lambda_r = 3.0, mu = 1.0, m = 2 }]\n",
    );
    let o = cybertwin(&["run", "--config", &cfg, "--out", "o"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(dir.path().join("o/queue_validate.csv")).unwrap();
    let rows: Vec<&str> = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].contains(",ok,"));
    assert!(rows[1].contains(",unstable,"));
}

#[test]
fn config_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = write(dir.path(), "unknown.toml", "no_such_key = 1\n");
    let even_k = write(dir.path(), "even.toml", "[detect_bench]\nknn_k = 4\n");
    let no_experiment = write(dir.path(), "empty.toml", "");
    for args in [
        vec!["simulate", "--config", &unknown],
        vec!["detect-bench", "--config", &even_k],
        vec!["run", "--config", &no_experiment],
        vec!["simulate", "--config", "missing.toml"],
    ] {
        assert_eq!(
            cybertwin(&args, dir.path()).status.code(),
            Some(2),
            "{args:?}"
        );
    }
}

#[test]
fn data_errors_exit_with_3() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "a.csv", "n_packets,avg_wait,label\n1,2\n");
    write(dir.path(), "b.csv", "n_packets,avg_wait,label\n1,2,0\n");
    write(dir.path(), "t.csv", "src_pkts,duration,label\n1,2,0\n");
    let cfg = write(
        dir.path(),
        "c.toml",
        "[data]\nrf_jamming = [\"a.csv\", \"b.csv\"]\nton_iot = \"t.csv\"\n",
    );
    let o = cybertwin(
        &["detect-bench", "--config", &cfg, "--out", "o"],
        dir.path(),
    );
    assert_eq!(
        o.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
}

#[test]
fn bundled_config_lists_the_defaults() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/default.toml");
    let cfg = cybertwin_cli::config::Config::load(&path).unwrap();
    assert_eq!(cfg, cybertwin_cli::config::Config::default());
}
