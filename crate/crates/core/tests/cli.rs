use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;

fn fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn txrisk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_txrisk"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// A small synthesized fleet clustered once and shared by the tests.
fn workspace() -> &'static Path {
    static DIR: OnceLock<(tempfile::TempDir, PathBuf)> = OnceLock::new();
    &DIR.get_or_init(|| {
        let tmp = tempfile::tempdir().unwrap();
        let root = tmp.path().to_path_buf();
        let p = |s: &str| root.join(s).to_string_lossy().into_owned();
        let out = txrisk(&[
            "--seed",
            "7",
            "--out",
            &p("data"),
            "synth",
            "--services",
            "4",
            "--days",
            "120",
        ]);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        let out = txrisk(&[
            "--seed",
            "7",
            "--out",
            &p("model"),
            "cluster",
            "--data",
            &p("data"),
            "--k",
            "4",
        ]);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        (tmp, root)
    })
    .1
}

fn path(sub: &str) -> String {
    workspace().join(sub).to_string_lossy().into_owned()
}

#[test]
fn help_lists_exit_codes() {
    let out = txrisk(&["--help"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("Exit codes:"));
    assert!(text.contains("8   query far from every cluster"));
}

#[test]
fn synth_is_deterministic_per_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let run = |sub: &str, seed: &str| {
        let dir = tmp.path().join(sub);
        let out = txrisk(&[
            "--seed",
            seed,
            "--out",
            dir.to_str().unwrap(),
            "synth",
            "--services",
            "3",
            "--days",
            "30",
        ]);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        std::fs::read(dir.join("meter.csv")).unwrap()
    };
    assert_eq!(run("a", "5"), run("b", "5"));
    assert_ne!(run("a", "5"), run("c", "6"));
}

#[test]
fn more_clusters_than_records_exits_6() {
    let tmp = tempfile::tempdir().unwrap();
    let out = txrisk(&[
        "--out",
        tmp.path().to_str().unwrap(),
        "cluster",
        "--data",
        &path("data"),
        "--k",
        "100000",
    ]);
    assert_eq!(code(&out), 6, "{}", stderr(&out));
    assert!(stderr(&out).lines().any(|l| l.starts_with("error: ")));
}

#[test]
fn reversed_service_range_exits_2() {
    let out = txrisk(&["assess", "--n-range", "30..10"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn missing_spec_exits_2() {
    let out = txrisk(&["assess", "--model", &path("model/model.json")]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("--spec"));
}

#[test]
fn malformed_spec_exits_4() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = tmp.path().join("spec.json");
    std::fs::write(&spec, "{ not json").unwrap();
    let out = txrisk(&[
        "assess",
        "--spec",
        spec.to_str().unwrap(),
        "--model",
        &path("model/model.json"),
    ]);
    assert_eq!(code(&out), 4, "{}", stderr(&out));
}

#[test]
fn assess_writes_every_report() {
    let tmp = tempfile::tempdir().unwrap();
    let out = txrisk(&[
        "--out",
        tmp.path().to_str().unwrap(),
        "assess",
        "--spec",
        &fixture("spec_25kva.json"),
        "--model",
        &path("model/model.json"),
        "--n-range",
        "5..12",
        "--svg",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    for name in [
        "thresholds.csv",
        "month_days.csv",
        "service_top_oil.csv",
        "service_hotspot.csv",
        "life_loss.csv",
        "summary.json",
        "month_days.svg",
    ] {
        assert!(tmp.path().join(name).is_file(), "{name}");
    }
    let grid = std::fs::read_to_string(tmp.path().join("service_top_oil.csv")).unwrap();
    assert!(grid.starts_with("cluster_id,N=5,N=6,"));
    assert!(grid.lines().next().unwrap().ends_with("N=12"));
}

#[test]
fn estimate_writes_one_row_per_query_day() {
    let tmp = tempfile::tempdir().unwrap();
    let out = txrisk(&[
        "--out",
        tmp.path().to_str().unwrap(),
        "estimate",
        "--spec",
        &fixture("spec_25kva.json"),
        "--model",
        &path("model/model.json"),
        "--query",
        &fixture("query_7day.csv"),
        "--services",
        "15",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = std::fs::read_to_string(tmp.path().join("estimates.csv")).unwrap();
    assert_eq!(text.lines().count(), 8);
}

#[test]
fn strict_mode_refuses_a_far_query_with_8() {
    let tmp = tempfile::tempdir().unwrap();
    let query = tmp.path().join("far.csv");
    std::fs::write(
        &query,
        "date,t_max_c,t_min_c,t_avg_c,l_avg_kva,weekday\n2016-07-01,60,45,52,9.5,Y\n",
    )
    .unwrap();
    let args = |strict: bool| {
        let mut v = vec![
            "--out".to_string(),
            tmp.path().join("out").to_string_lossy().into_owned(),
            "estimate".into(),
            "--spec".into(),
            fixture("spec_25kva.json"),
            "--model".into(),
            path("model/model.json"),
            "--query".into(),
            query.to_string_lossy().into_owned(),
            "--services".into(),
            "10".into(),
        ];
        if strict {
            v.insert(0, "--strict".into());
        }
        v
    };
    let strict = args(true);
    let out = txrisk(&strict.iter().map(String::as_str).collect::<Vec<_>>());
    assert_eq!(code(&out), 8, "{}", stderr(&out));
    let lenient = args(false);
    let out = txrisk(&lenient.iter().map(String::as_str).collect::<Vec<_>>());
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = std::fs::read_to_string(tmp.path().join("out/estimates.csv")).unwrap();
    assert!(text.lines().nth(1).unwrap().ends_with(",Y"), "{text}");
}

#[test]
fn zero_services_exits_10() {
    let out = txrisk(&[
        "estimate",
        "--spec",
        &fixture("spec_25kva.json"),
        "--model",
        &path("model/model.json"),
        "--query",
        &fixture("query_7day.csv"),
        "--services",
        "0",
    ]);
    assert_eq!(code(&out), 10, "{}", stderr(&out));
}

#[test]
fn missing_input_file_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let out = txrisk(&[
        "--out",
        tmp.path().to_str().unwrap(),
        "cluster",
        "--data",
        tmp.path().join("nowhere").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 3, "{}", stderr(&out));
}

#[test]
fn cluster_output_is_byte_identical_and_matches_golden() {
    use sha2::{Digest, Sha256};
    let tmp = tempfile::tempdir().unwrap();
    let out = txrisk(&[
        "--seed",
        "7",
        "--threads",
        "2",
        "--out",
        tmp.path().to_str().unwrap(),
        "cluster",
        "--data",
        &path("data"),
        "--k",
        "4",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let model = std::fs::read(tmp.path().join("model.json")).unwrap();
    assert_eq!(model, std::fs::read(path("model/model.json")).unwrap());
    let text = String::from_utf8_lossy(&model);
    assert_eq!(text.matches("\"member_count\"").count(), 4);

    let digest = hex::encode(Sha256::digest(&model));
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/cluster_k4_seed7.sha256");
    if std::env::var_os("TXRISK_BLESS").is_some() {
        std::fs::write(&golden, format!("{digest}\n")).unwrap();
    }
    assert_eq!(std::fs::read_to_string(&golden).unwrap().trim(), digest);
}
