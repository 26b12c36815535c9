use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rigidity"))
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(format!("{name}.json"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn analyze(name: &str) -> Value {
    let out = run(&["analyze", fixture(name).to_str().unwrap()]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn analyze_k4() {
    let r = analyze("lp_k4_square");
    assert_eq!(r["verdicts"]["prestress_stable"], Value::Bool(true));
    assert_eq!(r["verdicts"]["infinitesimally_rigid"], Value::Bool(false));
    assert_eq!(r["mode"], "float");
}

#[test]
fn analyze_single_bar() {
    let r = analyze("linf_single_bar");
    assert_eq!(r["verdicts"]["infinitesimally_rigid"], Value::Bool(true));
    assert_eq!(
        r["verdicts"]["strongly_infinitesimally_rigid"],
        Value::Bool(false)
    );
    assert_eq!(r["mode"], "exact");
}

#[test]
fn malformed_input_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(
        &path,
        r#"{"norm": {"kind": "euclidean", "dim": 2}, "vertices": ["a"], "edges": [["a", "z"]], "placement": {"a": [0, 0]}}"#,
    )
    .unwrap();
    let out = run(&["analyze", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("$.edges[0]"), "{err}");

    std::fs::write(&path, "{").unwrap();
    assert_eq!(
        run(&["analyze", path.to_str().unwrap()]).status.code(),
        Some(2)
    );
}

#[test]
fn exact_smooth_norm_exits_3() {
    let out = run(&[
        "analyze",
        fixture("lp_k4_square").to_str().unwrap(),
        "--mode",
        "exact",
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(out.stdout.is_empty());
}

#[test]
fn generate_matches_fixtures() {
    let cases: [(&[&str], &str); 4] = [
        (&["single-bar"], "linf_single_bar"),
        (&["k4-square", "--p", "4"], "lp_k4_square"),
        (&["fig5ii"], "stable_grid_fig5ii"),
        (
            &[
                "grid",
                "--m",
                "4",
                "--n",
                "4",
                "--braces",
                "1,3;2,2;3,1",
                "--p",
                "4",
            ],
            "stable_grid_fig5ii",
        ),
    ];
    for (args, name) in cases {
        let mut all = vec!["generate"];
        all.extend_from_slice(args);
        let out = run(&all);
        assert!(out.status.success());
        assert_eq!(
            String::from_utf8(out.stdout).unwrap(),
            std::fs::read_to_string(fixture(name)).unwrap()
        );
    }
}

#[test]
fn generate_rejects_bad_braces() {
    let out = run(&[
        "generate", "grid", "--m", "3", "--n", "3", "--braces", "3,1",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stderr.is_empty());
}

#[test]
fn render_single_bar_with_arrows() {
    let dir = tempfile::tempdir().unwrap();
    let svg = dir.path().join("bar.svg");
    let out = run(&[
        "render",
        fixture("linf_single_bar").to_str().unwrap(),
        "--svg",
        svg.to_str().unwrap(),
        "--flex-arrows",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = std::fs::read_to_string(&svg).unwrap();
    assert_eq!(text.matches("<circle").count(), 2);
    assert_eq!(text.matches("<line").count(), 1);
    assert_eq!(text.matches("<path").count(), 2);
}

#[test]
fn braced_square_arrows_sit_on_the_midpoints() {
    let dir = tempfile::tempdir().unwrap();
    let svg = dir.path().join("sq.svg");
    let input = fixture("euclid_braced_square_midpoints");
    let out = run(&[
        "render",
        input.to_str().unwrap(),
        "--svg",
        svg.to_str().unwrap(),
        "--flex-arrows",
    ]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&svg).unwrap();
    assert_eq!(text.matches("<path").count(), 2);
    let centre = |name: &str| {
        let line = text
            .lines()
            .find(|l| l.contains(&format!("<title>{name}</title></circle>")))
            .unwrap();
        let attr = |k: &str| {
            line.split(&format!("{k}=\""))
                .nth(1)
                .unwrap()
                .split('"')
                .next()
                .unwrap()
                .to_string()
        };
        format!("M {} {} ", attr("cx"), attr("cy"))
    };
    for v in ["2a", "3a"] {
        assert!(text.contains(&format!("<path d=\"{}", centre(v))), "{v}");
    }
}

#[test]
fn empty_framework_renders() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("empty.json");
    std::fs::write(
        &input,
        r#"{"norm": {"kind": "euclidean", "dim": 2}, "vertices": [], "edges": [], "placement": {}}"#,
    )
    .unwrap();
    let svg = dir.path().join("empty.svg");
    let out = run(&[
        "render",
        input.to_str().unwrap(),
        "--svg",
        svg.to_str().unwrap(),
        "--flex-arrows",
    ]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&svg).unwrap();
    assert!(text.contains("<svg") && !text.contains("<circle"));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    for name in [
        "linf_seven_vertex",
        "stable_grid_fig5ii",
        "euclid_braced_square_midpoints",
    ] {
        let mut reports = Vec::new();
        let mut svgs = Vec::new();
        for k in 0..2 {
            let json = dir.path().join(format!("{name}{k}.json"));
            let svg = dir.path().join(format!("{name}{k}.svg"));
            let out = run(&[
                "analyze",
                fixture(name).to_str().unwrap(),
                "--json",
                json.to_str().unwrap(),
                "--svg",
                svg.to_str().unwrap(),
                "--flex-arrows",
            ]);
            assert!(out.status.success());
            reports.push(std::fs::read(&json).unwrap());
            svgs.push(std::fs::read(&svg).unwrap());
        }
        assert_eq!(reports[0], reports[1], "{name}");
        assert_eq!(svgs[0], svgs[1], "{name}");
    }
}
