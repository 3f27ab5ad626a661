use std::process::{Command, Output};

fn dirk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dirk"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn verify_builtin_passes() {
    let o = dirk(&["verify", "DIRK(13,8)A"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("achieved order    8"), "{text}");
    assert!(text.contains("A-stable          true"));
    assert!(text.contains("stiffly accurate  false"));
}

#[test]
fn aliases_resolve() {
    assert_eq!(dirk(&["verify", "dirk-15-8-sa"]).status.code(), Some(0));
}

#[test]
fn unknown_scheme_and_problem_are_usage_errors() {
    assert_eq!(dirk(&["verify", "nonexistent-scheme"]).status.code(), Some(2));
    assert_eq!(
        dirk(&["integrate", "dirk-6-6-a", "--problem", "nope", "--dt", "0.1"]).status.code(),
        Some(2)
    );
    assert_eq!(dirk(&["analyze", "--table", "4"]).status.code(), Some(2));
}

#[test]
fn table_two_row() {
    let o = dirk(&["analyze", "--table", "2", "--jobs", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let row = stdout(&o)
        .lines()
        .find_map(|l| l.strip_prefix("\"DIRK(9,7)A\",").map(str::to_owned))
        .unwrap();
    let v: Vec<f64> = row.split(',').map(|x| x.parse().unwrap()).collect();
    assert!((v[0] - 4.77).abs() <= 0.01 && (v[1] - 0.34).abs() <= 0.01, "{row}");
}

#[test]
fn table_three_is_csv() {
    let o = dirk(&["analyze", "--table", "3"]);
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 7);
    assert!(text.contains("\"DIRK(6,6)A\",4.210e-3,2.410e-3"));
}

#[test]
fn failing_scheme_file_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("euler.txt");
    // explicit Euler written by hand, claimed to be second order
    std::fs::write(&path, "name euler\norder 2\nstages 1\n0\n1\n").unwrap();
    let o = dirk(&["verify", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn converge_writes_deterministic_csv() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = dirk(&[
            "converge",
            "dirk-10-7-sa",
            "--problem",
            "pr",
            "--dt",
            "0.01,0.005,0.0025",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0));
        (
            std::fs::read_to_string(&out).unwrap(),
            std::fs::read_to_string(out.with_extension("slopes.csv")).unwrap(),
        )
    };
    let (errors, slopes) = run("a.csv");
    assert_eq!(errors.lines().count(), 4);
    assert!(errors.starts_with("scheme,problem,dt,error,norm"));
    assert!(slopes.lines().nth(1).unwrap().starts_with("\"DIRK(10,7)SA\",prothero-robinson,"));
    assert_eq!(run("b.csv"), (errors, slopes));
}

#[test]
fn stability_plot_kinds() {
    for kind in ["r", "e", "eps-real", "eps-imag"] {
        let o = dirk(&["stability-plot", "dirk-6-6-a", "--kind", kind, "--points", "11"]);
        assert_eq!(o.status.code(), Some(0), "{kind}");
        assert_eq!(stdout(&o).lines().count(), 12, "{kind}");
    }
}

#[test]
fn refine_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("refined.txt");
    let o = dirk(&["refine", "dirk-6-6-a", "--digits", "8", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(std::fs::read_to_string(dir.path().join("refined.log.csv"))
        .unwrap()
        .starts_with("iteration,residual,damping,accepted"));
    let again = dirk(&["verify", out.to_str().unwrap()]);
    assert_eq!(again.status.code(), Some(0));
}

#[test]
fn refine_out_of_basin_is_numerical_failure() {
    let o = dirk(&["refine", "dirk-6-6-a", "--perturb", "0.1", "--seed", "3"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn integrate_emits_trajectory() {
    let o = dirk(&["integrate", "dirk-8-6-sa", "--problem", "kaps", "--dt", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("t,y0,y1\n"));
    assert_eq!(text.lines().count(), 12);
}
