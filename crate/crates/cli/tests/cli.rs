use serde_json::Value;
use std::path::PathBuf;
use std::process::{Command, Output};

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name).display().to_string()
}

fn relosc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_relosc")).args(args).output().expect("binary runs")
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is one JSON report")
}

fn strip_time(mut v: Value) -> Value {
    v.as_object_mut().unwrap().remove("wall_time_s");
    v
}

#[test]
fn explicit_well_count() {
    let (p0, p1) = (fixture("free_dirichlet.json"), fixture("well_dirichlet.json"));
    let out = relosc(&["count", "--problem0", &p0, "--problem1", &p1, "--lambda", "0"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    for row in r["result"]["counts"].as_array().unwrap() {
        assert_eq!(row["count"]["count_on_interval"].as_i64().unwrap().abs(), 3);
    }
}

#[test]
fn halfline_count_stabilizes() {
    let (p0, p1) = (fixture("free_halfline.json"), fixture("well_halfline.json"));
    let out = relosc(&["count", "--problem0", &p0, "--problem1", &p1, "--lambda", "-1", "--xmax", "80"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    let first = &r["result"]["counts"][0]["limit"];
    assert_eq!(first["stabilized"], true);
    assert_eq!(first["underline"]["finite"], 3);
    assert_eq!(first["history"].as_array().unwrap().len(), 5);
}

#[test]
fn verify_regular_passes_and_is_deterministic() {
    let run = |jobs: &str| relosc(&["verify", "regular", "--trials", "200", "--seed", "7", "--jobs", jobs]);
    let (a, b) = (run("1"), run("4"));
    assert_eq!(a.status.code(), Some(0));
    let (ra, rb) = (report(&a), report(&b));
    assert_eq!(ra["result"]["passed"], 200);
    assert_eq!(ra["result"]["matched_orders"].as_array().unwrap().len(), 1);
    let (mut ra, mut rb) = (strip_time(ra), strip_time(rb));
    ra.as_object_mut().unwrap().remove("command");
    rb.as_object_mut().unwrap().remove("command");
    assert_eq!(serde_json::to_string(&ra).unwrap(), serde_json::to_string(&rb).unwrap());
}

#[test]
fn mathieu_edges() {
    let c = fixture("mathieu.json");
    let out = relosc(&["bands", "--coeffs", &c, "--period", "3.141592653589793", "--lmin", "-2", "--lmax", "12"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    let e: Vec<f64> = r["result"]["edges"].as_array().unwrap().iter().map(|x| x["E"].as_f64().unwrap()).collect();
    // characteristic values a0, b1, a1, b2, a2, b3, a3 at q = 1
    let table = [-0.455139, -0.110249, 1.859108, 3.917025, 4.371301, 9.047739, 9.078369];
    assert_eq!(e.len(), table.len());
    for (x, y) in e.iter().zip(table) {
        assert!((x - y).abs() < 1e-5, "{x} vs {y}");
    }
}

#[test]
fn trace_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("t.csv");
    let p = fixture("well_dirichlet.json");
    let out = relosc(&["trace", "--problem", &p, "--lambda", "0", "--trace-out", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("x,theta,log_rho\n"));
    assert_eq!(report(&out)["outputs_written"][0], csv.to_str().unwrap());
}

#[test]
fn classifiers_agree_with_growth() {
    for (tail, verdict) in [("euler_tail_strong.json", "accumulation"), ("euler_tail_weak.json", "no_accumulation")] {
        let out = relosc(&["classify", "kneser", "--coeffs", &fixture(tail), "--growth"]);
        assert_eq!(out.status.code(), Some(0));
        assert_eq!(report(&out)["result"]["verdict"]["verdict"], verdict);
    }
    let kp = fixture("kronig_penney.json");
    for (tail, verdict) in [("edge_tail_strong.json", "accumulation"), ("edge_tail_weak.json", "no_accumulation")] {
        let dq = fixture(tail);
        let out = relosc(&[
            "classify", "rofe-beketov", "--coeffs", &kp, "--perturbation", &dq, "--period", "1", "--edge", "8", "--growth",
        ]);
        assert_eq!(out.status.code(), Some(0));
        assert_eq!(report(&out)["result"]["verdict"]["verdict"], verdict);
    }
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(relosc(&["bogus"]).status.code(), Some(2));
    assert_eq!(relosc(&["count", "--problem0", "missing.json", "--problem1", "x", "--lambda", "0"]).status.code(), Some(2));
    let p = fixture("well_dirichlet.json");
    assert_eq!(relosc(&["eig", "--problem", &p, "--lambda0", "3", "--lambda1", "1"]).status.code(), Some(2));
    let h = fixture("well_halfline.json");
    let out = relosc(&["eig", "--problem", &h, "--lambda0", "-20", "--lambda1", "0"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--xmax"));
    assert_eq!(relosc(&["--help"]).status.code(), Some(0));
}

#[test]
fn failed_check_exits_one() {
    // a coarse ODE tolerance breaks some of the integer equalities
    let out = relosc(&["--tol", "0.5", "verify", "regular", "--trials", "100", "--seed", "7"]);
    assert_eq!(out.status.code(), Some(1));
    let r = report(&out);
    assert_eq!(r["pass"], false);
    assert!(r["result"]["failed"].as_u64().unwrap() > 0);
}

#[test]
fn computation_error_exits_one() {
    let (p0, p1) = (fixture("free_halfline.json"), fixture("well_halfline.json"));
    let out = relosc(&["verify", "halfline", "--problem0", &p0, "--problem1", &p1, "--lambda", "2", "--xmax", "80"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(out.stdout.is_empty());
    assert!(String::from_utf8_lossy(&out.stderr).contains("did not stabilize"));
}
