use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn panelcov(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_panelcov"))
        .args(args)
        .env_remove("RUST_LOG")
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "exit {:?}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn tree(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut files = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(root).unwrap().display().to_string();
                files.insert(rel, fs::read(&path).unwrap());
            }
        }
    }
    files
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn simulate_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&a, &b] {
        ok(&panelcov(&[
            "simulate",
            "--set",
            "seed=42",
            "--set",
            "synthetic.n_instruments=4",
            "-o",
            s(dir),
        ]));
    }
    let (ta, tb) = (tree(&a), tree(&b));
    assert_eq!(ta, tb);
    assert!(ta.contains_key("ground_truth.json") && ta.contains_key("metadata.csv"));
    assert_eq!(
        ta.keys().filter(|k| k.ends_with(".csv") && k.contains("SYN")).count(),
        8
    );
}

#[test]
fn simulate_zero_instruments_warns() {
    let tmp = tempfile::tempdir().unwrap();
    let out = panelcov(&["simulate", "--set", "synthetic.n_instruments=0", "-o", s(tmp.path())]);
    ok(&out);
    assert!(String::from_utf8_lossy(&out.stderr).contains("empty corpus"));
    assert_eq!(
        fs::read_to_string(tmp.path().join("ground_truth.json")).unwrap().trim(),
        "[]"
    );
    assert_eq!(fs::read_dir(tmp.path().join("unadjusted")).unwrap().count(), 0);
}

#[test]
fn five_day_week_has_no_weekend_rows() {
    let tmp = tempfile::tempdir().unwrap();
    ok(&panelcov(&[
        "simulate",
        "--set",
        "synthetic.n_instruments=3",
        "--set",
        "synthetic.trading_week=mon,tue,wed,thu,fri",
        "-o",
        s(tmp.path()),
    ]));
    for entry in fs::read_dir(tmp.path().join("unadjusted")).unwrap() {
        let text = fs::read_to_string(entry.unwrap().path()).unwrap();
        for line in text.lines().skip(1) {
            let date: chrono::NaiveDate = line.split(',').next().unwrap().parse().unwrap();
            assert!(chrono::Datelike::weekday(&date).number_from_monday() <= 5, "{date}");
        }
    }
}

#[test]
fn ingest_writes_matrix_and_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = tmp.path().join("corpus");
    ok(&panelcov(&[
        "simulate",
        "--set",
        "synthetic.n_instruments=3",
        "-o",
        s(&corpus),
    ]));
    let (a, b) = (tmp.path().join("ing_a"), tmp.path().join("ing_b"));
    for dir in [&a, &b] {
        ok(&panelcov(&["ingest", "--corpus", s(&corpus), "-o", s(dir)]));
    }
    assert_eq!(tree(&a), tree(&b));
    let matrix = fs::read_to_string(a.join("availability_matrix.csv")).unwrap();
    assert_eq!(matrix.lines().next().unwrap(), "date,SYN000,SYN001,SYN002");
    let meta: serde_json::Value = serde_json::from_slice(&fs::read(a.join("metadata.json")).unwrap()).unwrap();
    assert_eq!(meta.as_array().unwrap().len(), 3);
    assert!(a.join("ingest_report.json").is_file());
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("missing");
    assert_eq!(
        panelcov(&["ingest", "--corpus", s(&missing), "-o", s(tmp.path())])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(panelcov(&["analyze", "--set", "bogus=1"]).status.code(), Some(2));
    assert_eq!(panelcov(&["report", "-o", s(&missing)]).status.code(), Some(2));
    // an existing but empty analysis directory is also a configuration problem
    assert_eq!(panelcov(&["report", "-o", s(tmp.path())]).status.code(), Some(2));

    let corpus = tmp.path().join("corpus");
    ok(&panelcov(&[
        "simulate",
        "--set",
        "synthetic.n_instruments=2",
        "-o",
        s(&corpus),
    ]));
    let garbage = tmp.path().join("garbage");
    fs::create_dir_all(garbage.join("unadjusted")).unwrap();
    fs::write(garbage.join("unadjusted/X.csv"), "date,close\nnot-a-date,1\n").unwrap();
    // every file rejected
    let out = panelcov(&["ingest", "--corpus", s(&garbage), "-o", s(&tmp.path().join("g"))]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    // selection matches nothing: no instrument lists after the cutoff
    let out = panelcov(&[
        "analyze",
        "--corpus",
        s(&corpus),
        "--set",
        "listed_after=2030-01-01",
        "-o",
        s(&tmp.path().join("x")),
    ]);
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn analyze_and_report_end_to_end() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = tmp.path().join("corpus");
    ok(&panelcov(&["simulate", "-o", s(&corpus)]));
    let conf = tmp.path().join("run.conf");
    fs::write(
        &conf,
        format!(
            "# synthetic listings start in 2012\ncorpus = {}\nlisted_after = 2012-01-01\n",
            s(&corpus)
        ),
    )
    .unwrap();
    let (a, b) = (tmp.path().join("an_a"), tmp.path().join("an_b"));
    for dir in [&a, &b] {
        ok(&panelcov(&["analyze", "--config", s(&conf), "-o", s(dir)]));
    }
    assert_eq!(tree(&a), tree(&b));
    for f in [
        "distortion_records.csv",
        "summary.json",
        "fig_v1_histogram.csv",
        "fig_v2_boxplot.csv",
        "fig_v4_scatter.csv",
        "model_stats.csv",
    ] {
        assert!(a.join(f).is_file(), "{f}");
    }
    let records = fs::read_to_string(a.join("distortion_records.csv")).unwrap();
    for kind in ["forward_filled", "backward_filled"] {
        for measure in ["return_std", "garch_unconditional_variance"] {
            let n = records
                .lines()
                .filter(|l| l.contains(&format!(",{kind},{measure},")))
                .count();
            assert_eq!(n, 20, "{kind} {measure}");
        }
    }
    let summary: serde_json::Value = serde_json::from_slice(&fs::read(a.join("summary.json")).unwrap()).unwrap();
    let std_ff = summary["summaries"]
        .as_array()
        .unwrap()
        .iter()
        .find(|s| s["measure"] == "return_std" && s["naive_kind"] == "forward_filled")
        .unwrap();
    assert!(std_ff["sign_test_p"].as_f64().unwrap() < 1e-4);
    assert_eq!(std_ff["n"], 20);

    let out = panelcov(&["report", "-o", s(&a)]);
    ok(&out);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text, fs::read_to_string(a.join("report.md")).unwrap());
    assert_eq!(
        text.matches("| Construction | Obs. | Return STD | AIC | BIC | RMSE | MAE |")
            .count(),
        20
    );
    for line in [
        "- mean distortion:",
        "- median distortion:",
        "- sign test p:",
        "- t-test:",
    ] {
        assert!(text.contains(line), "{line}");
    }
}

#[test]
fn single_instrument_report_has_one_row_set() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("an");
    ok(&panelcov(&[
        "analyze",
        "--set",
        "synthetic.n_instruments=1",
        "--set",
        "naive_kinds=forward",
        "-o",
        s(&out_dir),
    ]));
    let out = panelcov(&["report", "-o", s(&out_dir)]);
    ok(&out);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.matches("| Construction |").count(), 1);
    for label in [
        "| Coverage-Aware |",
        "| Naive Forward-Filled |",
        "| Naive Backward-Filled |",
    ] {
        assert_eq!(text.matches(label).count(), 1, "{label}");
    }
}
