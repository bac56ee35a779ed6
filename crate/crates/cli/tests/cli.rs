use std::path::Path;
use std::process::{Command, Output};

fn banditlab(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_banditlab"))
        .args(args)
        .current_dir(cwd)
        .env("RUST_LOG", "warn")
        .env_remove("BANDITLAB_OUT")
        .env_remove("BANDITLAB_THREADS")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

const SMALL: &str = r#"
arms = [2, 3]
tau = [0.5, 2]
policies = ["ucb_tau", "thompson", "etc"]
horizon = 300
repetitions = 16
"#;

#[test]
fn validate_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = banditlab(&["validate"], dir.path());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{stdout}");
    assert!(stdout.contains("validation passed"));
    assert_eq!(stdout.matches("lemma ").count(), 3);
}

#[test]
fn nonpositive_alpha_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.toml", "rule = \"alpha\"\nalpha = 0.0\nhorizon = 10\nrepetitions = 1\n");
    let out = banditlab(&["run", "--config", &cfg], dir.path());
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("config error at `alpha`"), "{stderr}");
    assert!(!dir.path().join("results").exists());
}

#[test]
fn unparsable_config_names_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.toml", "arms = 2\ntau = [0.5,\n");
    let out = banditlab(&["grid", "--config", &cfg], dir.path());
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("line"));
}

#[test]
fn ordered_grid_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "g.toml", SMALL);
    for out in ["a", "b"] {
        let o = banditlab(&["grid", "--config", &cfg, "--out", out, "--ordered", "--threads", "3"], dir.path());
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let a = std::fs::read(dir.path().join("a/results.csv")).unwrap();
    let b = std::fs::read(dir.path().join("b/results.csv")).unwrap();
    assert_eq!(a, b);
    // 2 instances x (2 taus + thompson + etc), 10 checkpoints each
    assert_eq!(String::from_utf8(a).unwrap().lines().count(), 1 + 8 * 10);
}

#[test]
fn grid_resumes_and_summarize_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "g.toml", SMALL);
    let first = banditlab(&["grid", "--config", &cfg, "--out", "r"], dir.path());
    assert!(String::from_utf8_lossy(&first.stdout).contains("8 cells computed, 0 reused"));
    let results = dir.path().join("r/results.csv");
    let before = std::fs::read(&results).unwrap();

    let second = banditlab(&["grid", "--config", &cfg, "--out", "r"], dir.path());
    assert!(String::from_utf8_lossy(&second.stdout).contains("0 cells computed, 8 reused"));
    assert_eq!(std::fs::read(&results).unwrap(), before);

    let s = banditlab(&["summarize", "--out", "r"], dir.path());
    assert!(s.status.success(), "{}", String::from_utf8_lossy(&s.stderr));
    assert_eq!(std::fs::read(&results).unwrap(), before);
}

#[test]
fn environment_overrides_output_directory() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "one.toml", "arms = 2\nhorizon = 50\nrepetitions = 4\n");
    let out = Command::new(env!("CARGO_BIN_EXE_banditlab"))
        .args(["run", "--config", &cfg, "--checkpoints", "10,20"])
        .current_dir(dir.path())
        .env("BANDITLAB_OUT", "from_env")
        .env("BANDITLAB_THREADS", "2")
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("from_env/results.csv")).unwrap();
    let rounds: Vec<&str> = text.lines().skip(1).map(|l| l.split(',').nth(7).unwrap()).collect();
    assert_eq!(rounds, ["10", "20", "50"]);
}

#[test]
fn bounds_share_the_result_schema() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "b.toml", "arms = 10\ntau = 2\ndelta = 2.718281828459045\nhorizon = 10000\n");
    let out = banditlab(&["bounds", "--config", &cfg, "--out", "o"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("o/bounds.csv")).unwrap();
    let header = text.lines().next().unwrap();
    assert!(header.starts_with("policy,tau,rule,delta,sigma,gap,arms,t_checkpoint"));
    let last_lr = text.lines().rfind(|l| l.starts_with("bound:lai_robbins,")).unwrap();
    let value: f64 = last_lr.split(',').nth(9).unwrap().parse().unwrap();
    assert!((value - 18.0 * 1e4f64.ln()).abs() < 1e-9);
    assert!(text.contains("bound:thm1_nta,2,explicit_beta,"));
    assert!(text.contains("bound:thm1_nta_re,2,explicit_beta,"));
}
