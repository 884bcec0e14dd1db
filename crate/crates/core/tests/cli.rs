use std::path::Path;
use std::process::{Command, Output};

fn cli(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_abr-bandit"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}\nstderr: {}",
        out.status,
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn gen_trace_writes_normalized_csv() {
    let dir = tempfile::tempdir().unwrap();
    ok(&cli(&["gen-trace", "--out", "adv.csv"], dir.path()));
    let text = std::fs::read_to_string(dir.path().join("adv.csv")).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows.len(), 180);
    assert_eq!(rows[0], "0,4500");
    assert_eq!(rows[49], "122.5,200");
    assert_eq!(rows[149], "372.5,9000");
}

#[test]
fn run_then_report_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let stdout = ok(&cli(
        &["run", "--seeds", "2", "--policy", "throughput,bandit_cold", "--out", "r.txt"],
        dir.path(),
    ));
    assert!(stdout.contains("bandit_cold"), "{stdout}");
    let again = ok(&cli(&["report", "r.txt", "--out", "r2.txt"], dir.path()));
    assert_eq!(stdout, again);
    let a = std::fs::read(dir.path().join("r.txt")).unwrap();
    let b = std::fs::read(dir.path().join("r2.txt")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn config_file_drives_run() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("exp.toml"),
        "policies = [\"buffer\", \"hybrid\"]\nseed_list = [3]\nchunks = 20\noutput = \"out.txt\"\n",
    )
    .unwrap();
    ok(&cli(&["run", "--config", "exp.toml"], dir.path()));
    let text = std::fs::read_to_string(dir.path().join("out.txt")).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("chunk,")).count(), 40);
    assert!(text.lines().any(|l| l.starts_with("aggregate,hybrid,1,")));
}

#[test]
fn calibrate_then_warm_run_on_trace_files() {
    let dir = tempfile::tempdir().unwrap();
    let traces = dir.path().join("traces");
    std::fs::create_dir(&traces).unwrap();
    for (i, rate) in [800u32, 1500, 3000].iter().enumerate() {
        let body: String = (0..40).map(|s| format!("{} {}\n", s * 1000, rate * 125 + s * 997 % 50_000)).collect();
        std::fs::write(traces.join(format!("t{i}.log")), body).unwrap();
    }
    ok(&cli(&["calibrate", "--traces", "traces", "--out", "priors.txt"], dir.path()));
    let priors = std::fs::read_to_string(dir.path().join("priors.txt")).unwrap();
    assert_eq!(priors.lines().filter(|l| !l.starts_with('#')).count(), 3);

    std::fs::write(
        dir.path().join("warm.toml"),
        "traces = \"traces\"\npriors = \"priors.txt\"\npolicies = [\"throughput\", \"bandit_warm\"]\nseeds = 2\nchunks = 30\n",
    )
    .unwrap();
    let stdout = ok(&cli(&["run", "--config", "warm.toml", "--out", "w.txt"], dir.path()));
    assert!(stdout.contains("wilcoxon bandit_warm vs throughput"), "{stdout}");
    let text = std::fs::read_to_string(dir.path().join("w.txt")).unwrap();
    assert!(text.lines().any(|l| l.starts_with("wilcoxon,bandit_warm,throughput,")));
}

#[test]
fn bad_inputs_fail_with_context() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.toml"), "chunks = 10\nbogus_key = 1\n").unwrap();
    let out = cli(&["run", "--config", "bad.toml"], dir.path());
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bogus_key") && err.contains("line 2"), "{err}");

    let out = cli(&["run", "--policy", "nonsense"], dir.path());
    assert!(!out.status.success());

    let out = cli(&["run", "--policy", "bandit_warm"], dir.path());
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("calibration_traces"));
}
