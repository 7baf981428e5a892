use std::path::PathBuf;
use std::process::{Command, Output};

fn falqon(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_falqon")).args(args).output().unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("falqon-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn data_lines(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).collect()
}

#[test]
fn run_writes_full_trace() {
    let dir = scratch("run");
    let out = dir.join("trace.csv");
    let o = falqon(&[
        "run",
        "--graph",
        "cycle:4",
        "--mode",
        "exact",
        "--dt",
        "0.05",
        "--layers",
        "75",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let lines = data_lines(&text);
    assert_eq!(lines[0], "layer,beta,A_est,C_est,C_exact,budget");
    assert_eq!(lines.len(), 76);
    assert!(text.contains("# seed: 0"));
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn same_arguments_same_bytes() {
    let dir = scratch("determinism");
    let (a, b) = (dir.join("a.csv"), dir.join("b.csv"));
    for path in [&a, &b] {
        let o = falqon(&[
            "run",
            "--graph",
            "complete:5",
            "--mode",
            "shadow",
            "--M",
            "32",
            "--K",
            "16",
            "--layers",
            "10",
            "--seed",
            "42",
            "--out",
            path.to_str().unwrap(),
        ]);
        assert!(o.status.success());
    }
    let (x, y) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(x, y);
    assert!(String::from_utf8(x).unwrap().contains("# seed: 42"));

    let args = [
        "scaling",
        "--sizes",
        "3,4",
        "--epsilon",
        "0.2",
        "--runs",
        "2",
        "--layers",
        "3",
        "--seed",
        "9",
    ];
    let (s1, s2) = (falqon(&args), falqon(&args));
    assert!(s1.status.success());
    assert_eq!(s1.stdout, s2.stdout);
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn graph_from_file() {
    let dir = scratch("file");
    let g = dir.join("square.txt");
    std::fs::write(&g, "# square\n0 1\n1 2\n2 3\n3 0\n").unwrap();
    let from_file = falqon(&["run", "--graph", &format!("file:{}", g.display()), "--layers", "5"]);
    let generated = falqon(&["run", "--graph", "cycle:4", "--layers", "5"]);
    assert!(from_file.status.success());
    assert_eq!(
        data_lines(&String::from_utf8(from_file.stdout).unwrap()),
        data_lines(&String::from_utf8(generated.stdout).unwrap())
    );
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn errors_exit_nonzero() {
    let cases: [&[&str]; 6] = [
        &["run", "--graph", "ring:4"],
        &["run", "--graph", "cycle:4", "--bogus", "1"],
        &["run", "--graph", "file:/nonexistent/graph.txt"],
        &["run", "--graph", "cycle:4", "--dt", "-1"],
        &["fit", "--in", "/nonexistent/samples.csv"],
        &["budget", "--graph", "cycle:4", "--mode", "exact"],
    ];
    for args in cases {
        let o = falqon(args);
        assert!(!o.status.success(), "{args:?}");
        assert!(!o.stderr.is_empty(), "{args:?}");
    }
}

#[test]
fn budget_prints_both_modes() {
    let o = falqon(&[
        "budget", "--graph", "cycle:4", "--err", "100", "--layers", "5", "--seed", "3",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("# seed: 3"));
    assert!(text.lines().any(|l| l.starts_with("shadow") && l.contains(" 128 ")));
    assert!(text.lines().any(|l| l.starts_with("direct") && l.contains(" 128 ")));
}

#[test]
fn budget_exhaustion_is_reported() {
    let o = falqon(&[
        "budget",
        "--graph",
        "cycle:4",
        "--err",
        "1e-6",
        "--layers",
        "3",
        "--max-budget",
        "512",
        "--mode",
        "direct",
    ]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("exhausted"));
}

#[test]
fn scaling_then_fit() {
    let dir = scratch("fit");
    let (samples, fits) = (dir.join("samples.csv"), dir.join("fit.csv"));
    let o = falqon(&[
        "scaling",
        "--sizes",
        "3,4,5",
        "--epsilon",
        "0.1",
        "--epsilon",
        "0.2",
        "--runs",
        "2",
        "--layers",
        "3",
        "--seed",
        "5",
        "--out",
        samples.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&samples).unwrap();
    assert!(text.contains("# seed: 5"));
    assert_eq!(data_lines(&text).len(), 1 + 3 * 2 * 2);

    let o = falqon(&[
        "fit",
        "--in",
        samples.to_str().unwrap(),
        "--out",
        fits.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8(o.stdout).unwrap().contains("ceil(max A)"));
    let fit_text = std::fs::read_to_string(&fits).unwrap();
    assert_eq!(fit_text.lines().next().unwrap(), "epsilon,A,B,residual");
    assert_eq!(fit_text.lines().count(), 3);
    std::fs::remove_dir_all(dir).unwrap();
}
