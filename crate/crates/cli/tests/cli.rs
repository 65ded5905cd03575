use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use itrd_cli::MetricsReport;
use itrd_core::entropy::mutual_information_breakdown;
use itrd_core::{itrd_loss, matrix_entropy, Alpha, ItrdConfig, KernelSpec, NpdMatrix};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

fn itrd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_itrd"))
        .args(args)
        .env_remove("ITRD_WALL_TIME")
        .output()
        .expect("binary runs")
}

fn report(args: &[&str]) -> MetricsReport {
    let out = itrd(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    MetricsReport::from_json(std::str::from_utf8(&out.stdout).unwrap()).unwrap()
}

fn features(name: &str) -> itrd_core::Matrix {
    itrd_cli::FeatureFile::read(fixture(name)).unwrap().data
}

fn npd(name: &str) -> NpdMatrix {
    NpdMatrix::from_features(&features(name), KernelSpec::default()).unwrap()
}

fn path(name: &str) -> String {
    fixture(name).display().to_string()
}

#[test]
fn entropy_of_reference_files() {
    for alpha in ["0.5", "1", "2", "3"] {
        let r = report(&[
            "entropy",
            "--input",
            &path("orthonormal4.csv"),
            "--alpha",
            alpha,
        ]);
        assert!((r.results["entropy"] - 2.0).abs() < 1e-9);
        let r = report(&[
            "entropy",
            "--input",
            &path("identical4.csv"),
            "--alpha",
            alpha,
        ]);
        assert!(r.results["entropy"].abs() < 1e-9);
    }
}

#[test]
fn entropy_matches_library() {
    let r = report(&["entropy", "--input", &path("teacher.csv"), "--alpha", "1.5"]);
    let want = matrix_entropy(&npd("teacher.csv"), Alpha::new(1.5).unwrap());
    assert_eq!(r.results["entropy"], want);
    assert_eq!(r.command, "entropy");
    assert_eq!(r.config["alpha"], 1.5);
    assert_eq!(r.wall_time_s, 0.0);
}

#[test]
fn mi_reference_values() {
    let r = report(&[
        "mi",
        "--a",
        &path("orthonormal4.csv"),
        "--b",
        &path("identical4.csv"),
    ]);
    assert!(r.results["mutual_information"].abs() < 1e-9);
    let o = path("orthonormal4.csv");
    let r = report(&["mi", "--a", &o, "--b", &o]);
    assert!((r.results["mutual_information"] - 2.0).abs() < 1e-9);
}

#[test]
fn mi_matches_library() {
    let r = report(&[
        "mi",
        "--a",
        &path("student.csv"),
        "--b",
        &path("teacher.csv"),
        "--alpha",
        "1.01",
    ]);
    let want = mutual_information_breakdown(
        &npd("student.csv"),
        &npd("teacher.csv"),
        Alpha::new(1.01).unwrap(),
    )
    .unwrap();
    assert_eq!(r.results["entropy_a"], want.entropy_a);
    assert_eq!(r.results["entropy_b"], want.entropy_b);
    assert_eq!(r.results["joint_entropy"], want.joint);
    assert_eq!(r.results["mutual_information"], want.mutual_information);
}

#[test]
fn loss_matches_library() {
    let r = report(&[
        "loss",
        "--student",
        &path("student.csv"),
        "--teacher",
        &path("teacher.csv"),
    ]);
    let want = itrd_loss(
        &features("student.csv"),
        &features("teacher.csv"),
        None,
        0.0,
        &ItrdConfig::default(),
    )
    .unwrap();
    assert_eq!(r.results["corr"], want.corr);
    assert_eq!(r.results["mi"], want.mi);
    assert_eq!(r.results["total"], want.total);
    assert_eq!(r.config["beta_corr"], 2.0);
    assert_eq!(r.config["beta_mi"], 1.0);
    assert_eq!(r.config["alpha_corr"], 1.01);
    assert_eq!(r.config["mi_variant"], "no_log");
}

#[test]
fn loss_reference_cases() {
    let t = path("teacher.csv");
    let r = report(&["loss", "--student", &t, "--teacher", &t]);
    assert_eq!(r.results["corr"], 1e-12f64.log2());
    let r = report(&[
        "loss",
        "--student",
        &path("student.csv"),
        "--teacher",
        &t,
        "--beta-corr",
        "0",
        "--beta-mi",
        "0",
    ]);
    assert_eq!(r.results["total"], 0.0);
    for variant in ["log_potential", "eigen_exact"] {
        let r = report(&[
            "loss",
            "--student",
            &path("student.csv"),
            "--teacher",
            &t,
            "--mi-variant",
            variant,
        ]);
        assert_eq!(r.config["mi_variant"], variant);
    }
}

#[test]
fn narrow_student_needs_embed_seed() {
    let args = [
        "loss",
        "--student",
        &path("student_narrow.csv"),
        "--teacher",
        &path("teacher.csv"),
    ];
    assert_eq!(itrd(&args).status.code(), Some(2));
    let mut with_seed = args.to_vec();
    with_seed.extend(["--embed-seed", "11"]);
    let a = report(&with_seed);
    assert_eq!(a.config["embed_seed"], 11);
    assert!(a.results["total"].is_finite());
    assert_eq!(report(&with_seed), a);
    // Wider student than teacher is rejected outright.
    let wide = [
        "loss",
        "--student",
        &path("teacher.csv"),
        "--teacher",
        &path("student_narrow.csv"),
    ];
    assert_eq!(itrd(&wide).status.code(), Some(2));
}

#[test]
fn input_errors_exit_with_two() {
    let cases: Vec<Vec<String>> = vec![
        vec!["entropy".into(), "--input".into(), path("missing.csv")],
        vec![
            "entropy".into(),
            "--input".into(),
            path("teacher.csv"),
            "--alpha".into(),
            "-1".into(),
        ],
        vec![
            "mi".into(),
            "--a".into(),
            path("teacher.csv"),
            "--b".into(),
            path("short.csv"),
        ],
        vec![
            "loss".into(),
            "--student".into(),
            path("short.csv"),
            "--teacher".into(),
            path("teacher.csv"),
        ],
        vec!["entropy".into(), "--bogus".into()],
    ];
    for args in cases {
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        let out = itrd(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn parse_errors_carry_location() {
    let out = itrd(&["entropy", "--input", &path("ragged.csv")]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 3: expected 3 columns, found 2"), "{err}");
    let out = itrd(&["entropy", "--input", &path("bad_cell.csv")]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2, column 2"));
}

#[test]
fn degenerate_kernel_exits_with_three() {
    let out = itrd(&["entropy", "--input", &path("zeros.csv")]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn demo_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    let run = |out: &Path| {
        let o = itrd(&[
            "demo",
            "--seed",
            "3",
            "--epochs",
            "5",
            "--variant",
            "itrd",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        String::from_utf8(o.stdout).unwrap()
    };
    let line = run(&a);
    run(&b);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let r = MetricsReport::from_json(&std::fs::read_to_string(&a).unwrap()).unwrap();
    assert_eq!(
        line,
        format!("itrd seed=3 test_acc={:.4}\n", r.results["test_acc"])
    );
    let series = r.series.unwrap();
    assert_eq!(series["test_accuracy"].len(), 5);
    assert_eq!(series["loss_corr"].len(), 5);
    assert_eq!(r.config["epochs"], 5);
}

#[test]
fn demo_without_training() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.json");
    let o = itrd(&[
        "demo",
        "--epochs",
        "0",
        "--variant",
        "xent",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let r = MetricsReport::from_json(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert!(r.series.unwrap()["test_accuracy"].is_empty());
    assert!((0.0..=1.0).contains(&r.results["test_acc"]));
}

#[test]
fn unwritable_output_is_an_input_error() {
    let o = itrd(&["demo", "--epochs", "0", "--out", "/nonexistent-dir/x.json"]);
    assert_eq!(o.status.code(), Some(2));
}
