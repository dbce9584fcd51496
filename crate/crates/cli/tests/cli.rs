use std::path::Path;
use std::process::{Command, Output};

fn homodyn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_homodyn"))
        .args(args)
        .env_remove("HOMODYN_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn oracle_prints_six_decimals() {
    let o = homodyn(&["oracle", "--preset", "ou", "--sigma", "1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.lines().any(|l| l == "K=0.623860"), "{text}");
    assert!(text.lines().any(|l| l == "Sigma=0.623860"));
}

#[test]
fn single_point_trajectory_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("one.hmdt");
    let mut bytes = b"HMDT1".to_vec();
    bytes.extend(1u64.to_le_bytes());
    bytes.extend(0u64.to_le_bytes());
    bytes.extend(0.01f64.to_le_bytes());
    bytes.extend(0.5f64.to_le_bytes());
    std::fs::write(&path, bytes).unwrap();
    let o = homodyn(&["estimate", "--input", path.to_str().unwrap(), "--preset", "ou"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("trajectory too short"), "{}", stderr(&o));
}

#[test]
fn bad_arguments_exit_with_one_and_name_the_field() {
    let o = homodyn(&["oracle", "--preset", "nope", "--sigma", "1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("preset"));

    let o = homodyn(&["oracle", "--preset", "ou", "--sigma", "-1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("sigma"), "{}", stderr(&o));

    let o = homodyn(&["estimate", "--input", "/definitely/missing.hmdt", "--preset", "ou"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("input"));

    let o = homodyn(&["sweep", "--preset", "ou", "--scale-T", "0"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("scale-T"));
}

#[test]
fn simulate_filter_estimate_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = |name: &str| dir.path().join(name).to_str().unwrap().to_string();
    let (raw, smooth, csv) = (path("x.hmdt"), path("z.hmdt"), path("x.csv"));
    let o = homodyn(&[
        "simulate", "--preset", "ou", "--sigma", "1", "--epsilon", "0.1", "-T", "20", "--dt",
        "1e-3", "--seed", "5", "--effective", "--out", &raw, "--csv", &csv,
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv_text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(csv_text.lines().count(), 20_002);

    let o = homodyn(&["filter", "--input", &raw, "--kind", "exp", "--delta", "0.5", "--out", &smooth]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(std::fs::metadata(&smooth).unwrap().len(), std::fs::metadata(&raw).unwrap().len());

    let o = homodyn(&[
        "estimate", "--input", &raw, "--preset", "ou", "--sigma", "1", "--delta", "0.5",
        "--methods", "mle,qv,drift_exp,hat_exp,tilde_exp",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let rows: Vec<Vec<&str>> = text.lines().skip(1).map(|l| l.split('\t').collect()).collect();
    assert_eq!(rows.len(), 5);
    for row in &rows {
        assert_eq!(row.len(), 4);
        let v: f64 = row[2].parse().unwrap();
        assert!(v.is_finite() && v > 0.0, "{row:?}");
        assert_eq!(row[3], "0.623860");
    }
}

fn sweep_csv(dir: &Path, name: &str, threads: &str) -> Vec<u8> {
    let config = dir.join("sweep.toml");
    std::fs::write(
        &config,
        "model = \"ou\"\nT = 100.0\ndt = 1e-3\nepsilon = [0.1, 0.2]\nsigma = [1.0]\n\
         delta = [0.5, 1.0]\nmethods = [\"mle\", \"qv\", \"drift_ma\", \"hat_exp\", \"tilde_sub\"]\n\
         replicates = 3\nbase_seed = 11\n",
    )
    .unwrap();
    let out = dir.join(name);
    let o = homodyn(&[
        "sweep", "--config", config.to_str().unwrap(), "--scale-T", "0.1", "--threads", threads,
        "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    std::fs::read(out).unwrap()
}

#[test]
fn sweeps_are_byte_identical_across_reruns_and_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let a = sweep_csv(dir.path(), "a.csv", "1");
    let b = sweep_csv(dir.path(), "b.csv", "1");
    let c = sweep_csv(dir.path(), "c.csv", "4");
    assert_eq!(a, b);
    assert_eq!(a, c);
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with("experiment,sigma,epsilon,delta,method"));
    // 2 eps x 3 replicates x (mle + qv + 3 methods x 2 widths)
    assert_eq!(text.lines().count(), 1 + 2 * 3 * 8);
}
