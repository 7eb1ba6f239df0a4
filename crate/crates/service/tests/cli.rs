mod common;

use std::path::Path;

use watson_service::cli::{run, Io};

struct Outcome {
    code: i32,
    stdout: String,
    stderr: String,
}

fn watson(config: &Path, args: &[&str], stdin: &str) -> Outcome {
    let mut input = stdin.as_bytes();
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let mut io = Io {
        stdin: &mut input,
        stdout: &mut out,
        stderr: &mut err,
    };
    let mut argv = vec!["watson".to_string(), "--config".into(), config.display().to_string()];
    argv.extend(args.iter().map(|s| s.to_string()));
    let code = run(argv, &mut io);
    Outcome {
        code,
        stdout: String::from_utf8(out).unwrap(),
        stderr: String::from_utf8(err).unwrap(),
    }
}

fn setup() -> (tempfile::TempDir, std::path::PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let cfg = common::write_config(dir.path(), "");
    (dir, cfg)
}

fn data(name: &str) -> String {
    common::root().join("data").join(name).display().to_string()
}

#[test]
fn normalize_prints_value_and_band() {
    let (_d, cfg) = setup();
    let o = watson(&cfg, &["normalize", "30", "10,20,40,60"], "");
    assert_eq!((o.code, o.stdout.as_str()), (0, "2.5 Normal\n"));
    let o = watson(&cfg, &["normalize", "75", "10,20,40,60"], "");
    assert_eq!(o.stdout, "4.25 StrongHigh\n");
}

#[test]
fn usage_errors_exit_2_and_data_errors_exit_1() {
    let (_d, cfg) = setup();
    assert_eq!(watson(&cfg, &["bogus"], "").code, 2);
    assert_eq!(watson(&cfg, &["normalize"], "").code, 2);
    assert_eq!(watson(&cfg, &["normalize", "abc", "1,2,3,4"], "").code, 2);
    let o = watson(&cfg, &["normalize", "3", "1,3,2,4"], "");
    assert_eq!(o.code, 1);
    assert!(o.stderr.starts_with("error:"));
    assert_eq!(watson(&cfg, &["summarize", "/nonexistent/record.json"], "").code, 1);
    let missing = cfg.with_file_name("nowhere.toml");
    let o = watson(&missing, &["consult", "--decision", "stable"], "");
    assert_eq!(o.code, 1);
    assert!(o.stderr.contains("nowhere.toml"));
}

#[test]
fn consult_asks_at_most_twice() {
    let (_d, cfg) = setup();
    let args = [
        "consult", "--decision", "stable", "--obs", "temp=39.4", "--obs", "hr=125", "--obs", "lactate=4.2",
    ];
    let o = watson(&cfg, &args, "39.5\n130\n99\n");
    assert_eq!(o.code, 0, "{}", o.stderr);
    assert_eq!(o.stdout.matches("> ").count(), 2);
    assert!(o.stdout.contains("disagreement is recorded"));

    let o = watson(
        &cfg,
        &[
            "consult", "--decision", "stable", "--obs", "temp=36.8", "--obs", "hr=78", "--obs", "sbp=120",
            "--obs", "rr=15", "--obs", "lactate=1.0", "--obs", "rhythm=sinus", "--obs", "mental=alert",
        ],
        "",
    );
    assert_eq!((o.code, o.stdout.as_str()), (0, "ok\n"));

    let o = watson(&cfg, &["consult", "--decision", "stable", "--obs", "pulse=80"], "");
    assert_eq!(o.code, 1);
}

#[test]
fn summarize_suspect_record() {
    let (_d, cfg) = setup();
    let o = watson(&cfg, &["summarize", &data("registry/suspect.json")], "");
    assert_eq!(o.code, 0, "{}", o.stderr);
    assert!(o.stdout.contains("1) Key fields"));
    assert!(o.stdout.contains("missing-relapse"));
    assert!(o.stdout.contains("date order"));
    let o = watson(&cfg, &["summarize", "--json", &data("registry/clean.json")], "");
    let v: serde_json::Value = serde_json::from_str(&o.stdout).unwrap();
    assert_eq!(v["possible_errors"], serde_json::json!([]));
}

#[test]
fn mine_planted_table() {
    let (_d, cfg) = setup();
    let o = watson(&cfg, &["mine", &data("ambulance_calls.csv"), "ambulance"], "");
    assert_eq!(o.code, 0, "{}", o.stderr);
    assert!(o.stdout.contains("1 minimal antisyndrome"));
    assert!(o.stdout.contains("{sex=male, pregnant=yes}"));
    let o = watson(&cfg, &["mine", &data("ambulance_calls.csv"), "ambulance", "--max-size", "0"], "");
    assert_eq!(o.code, 1);
}

#[test]
fn rank_ward_file() {
    let (_d, cfg) = setup();
    let o = watson(&cfg, &["rank-ward", &data("ward.json")], "");
    assert_eq!(o.code, 0, "{}", o.stderr);
    let order: Vec<_> = o
        .stdout
        .lines()
        .skip(2)
        .map(|l| l.split_whitespace().nth(1).unwrap().to_string())
        .collect();
    assert_eq!(order, ["bed-2", "bed-3", "bed-1"]);
}

#[test]
fn train_prints_model() {
    let (_d, cfg) = setup();
    let o = watson(&cfg, &["train", &data("icu_train.csv"), "--max-depth", "2"], "");
    assert_eq!(o.code, 0, "{}", o.stderr);
    let v: serde_json::Value = serde_json::from_str(&o.stdout).unwrap();
    assert!(v["depth"].as_u64().unwrap() <= 2);
    assert_eq!(v["labels"].as_array().unwrap().len(), 3);
}
