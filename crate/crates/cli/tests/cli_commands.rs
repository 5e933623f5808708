use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fracbvp::output::parse_csv;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_fracbvp"));
    c.env_remove("FRACBVP_SEED");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn cfg(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name).display().to_string()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.display().to_string()
}

fn path(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}

fn csv_rows(p: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    parse_csv(&fs::read_to_string(p).unwrap()).unwrap()
}

const IDENTITY: &str = "[problem]\nalpha = 2.7\nbeta = 1.5\neta = 0.4\n\n[phi]\nkind = \"identity\"\n\n\
[f]\nkind = \"custom\"\nexpr = \"(1 + t) * cos(u) / 4\"\n\n[g]\nkind = \"custom\"\nexpr = \"(1 + t) / 4\"\n\n\
[solver]\ngrid_size = 256\nmode = \"uniqueness\"\n";

#[test]
fn zero_rhs_gives_zero_solution() {
    let dir = tempfile::tempdir().unwrap();
    let c = write(
        dir.path(),
        "zero.cfg",
        "[problem]\nalpha = 2.5\nbeta = 1\neta = 0.5\n[phi]\nkind = \"sqrt_half\"\n[f]\nkind = \"zero\"\n[solver]\ngrid_size = 128\n",
    );
    let out = path(dir.path(), "zero.csv");
    let o = run(&["solve", &c, "-o", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let (cols, rows) = csv_rows(&out);
    assert_eq!(cols, ["t", "u"]);
    assert_eq!(rows.len(), 128);
    assert!(rows.iter().all(|r| r[1] == 0.0));
}

#[test]
fn solve_is_deterministic_and_writes_a_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let a = path(dir.path(), "a.csv");
    let b = path(dir.path(), "b.csv");
    for p in [&a, &b] {
        let o = run(&["solve", &cfg("example42.cfg"), "-o", p.to_str().unwrap(), "--grid", "256"]);
        assert_eq!(o.status.code(), Some(0));
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let text = fs::read_to_string(&a).unwrap();
    assert!(text.lines().take_while(|l| l.starts_with('#')).any(|l| l.starts_with("# config: ")));
    assert_eq!(csv_rows(&a).1.len(), 256);

    let report: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("a.csv.report.json")).unwrap()).unwrap();
    assert_eq!(report["certificate"]["verdict"], "unique-solution");
    assert_eq!(report["solve"]["converged"], true);
    assert!(report["solve"]["iterations"].as_u64().unwrap() >= 1);
    assert!(!report["solve"]["observed_ratios"].as_array().unwrap().is_empty());
    assert!(report["solve"]["fixed_point_residual"].as_f64().unwrap() <= 1e-6);
    assert_eq!(report["provenance"]["config"]["grid_size"], 256);
    assert_eq!(report["provenance"]["version"], env!("CARGO_PKG_VERSION"));
    assert!(report["provenance"]["grid"].as_str().unwrap().contains("256 nodes"));
}

#[test]
fn non_convergence_keeps_partial_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = path(dir.path(), "partial.csv");
    let o = run(&["solve", &cfg("example42.cfg"), "-o", out.to_str().unwrap(), "--max-iter", "1", "--grid", "128"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(fs::read_to_string(&out).unwrap().contains("# converged: false"));
    let report: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("partial.csv.report.json")).unwrap()).unwrap();
    assert_eq!(report["solve"]["converged"], false);
}

#[test]
fn csv_values_round_trip_through_a_tabulated_identity_map() {
    let dir = tempfile::tempdir().unwrap();
    let c = write(dir.path(), "id.cfg", IDENTITY);
    let first = path(dir.path(), "first.csv");
    assert_eq!(run(&["solve", &c, "-o", first.to_str().unwrap()]).status.code(), Some(0));
    let (_, rows) = csv_rows(&first);

    // The written u values are exactly the solver's values.
    let report: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("first.csv.report.json")).unwrap()).unwrap();
    assert_eq!(report["solve"]["converged"], true);

    // Re-ingest the node abscissae as a table for phi(t) = t.
    let mut table = String::from("t,phi\n0,0\n");
    for r in &rows {
        table.push_str(&format!("{},{}\n", r[0], r[0]));
    }
    table.push_str("1,1\n");
    write(dir.path(), "identity.csv", &table);
    let c2 = write(
        dir.path(),
        "table.cfg",
        &IDENTITY.replace("kind = \"identity\"", "kind = \"table\"\ntable = \"identity.csv\""),
    );
    let second = path(dir.path(), "second.csv");
    let o = run(&["solve", &c2, "-o", second.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let (_, rows2) = csv_rows(&second);
    assert_eq!(rows.len(), rows2.len());
    for (a, b) in rows.iter().zip(&rows2) {
        assert_eq!(a[0].to_bits(), b[0].to_bits(), "t differs: {} vs {}", a[0], b[0]);
        assert_eq!(a[1].to_bits(), b[1].to_bits(), "u differs at t = {}: {} vs {}", a[0], a[1], b[1]);
    }
}

#[test]
fn green_tabulation() {
    let dir = tempfile::tempdir().unwrap();
    let out = path(dir.path(), "g.csv");
    let o = run(&["green", &cfg("example41.cfg"), "-o", out.to_str().unwrap(), "--resolution", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.contains("# mu: 0.227"));
    assert!(text.contains("# beta_bound: 2.959"));
    let (cols, rows) = parse_csv(&text).unwrap();
    assert_eq!(cols, ["t", "s", "G"]);
    assert_eq!(rows.len(), 9);
    assert!(rows.iter().filter(|r| r[0] == 0.0).all(|r| r[2] == 0.0));

    let o = run(&["green", &cfg("example42.cfg"), "-o", out.to_str().unwrap(), "--resolution", "200"]);
    assert_eq!(o.status.code(), Some(0));
    let (_, rows) = csv_rows(&out);
    assert_eq!(rows.len(), 40_000);
    let interior = rows.iter().filter(|r| r[0] > 0.0 && r[0] < 1.0 && r[1] > 0.0 && r[1] < 1.0);
    assert!(interior.clone().count() == 198 * 198);
    assert!(interior.into_iter().all(|r| r[2] > 0.0));

    let o = run(&["green", &cfg("example42.cfg"), "-o", out.to_str().unwrap(), "--resolution", "1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--resolution"));
}

#[test]
fn verify_paper_is_deterministic_and_json_matches_table() {
    let a = run(&["verify-paper"]);
    let b = run(&["verify-paper"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let table = String::from_utf8(a.stdout).unwrap();
    assert!(table.contains("6 of 6 within 1e-4"));

    let j1 = run(&["verify-paper", "--json"]);
    assert_eq!(j1.stdout, run(&["verify-paper", "--json"]).stdout);
    let v: serde_json::Value = serde_json::from_slice(&j1.stdout).unwrap();
    assert_eq!(v["passed"], true);
    for c in v["constants"].as_array().unwrap() {
        let computed = c["computed"].as_f64().unwrap();
        assert!(table.contains(&computed.to_string()), "{computed} missing from the table");
    }
}

#[test]
fn check_json_bundle() {
    let o = run(&["check", &cfg("example42.cfg"), "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["certificate"]["verdict"], "unique-solution");
    assert_eq!(v["kernel_checks"]["gridsize"], 200);
    assert!(v["solve"].is_null());
    assert_eq!(v["provenance"]["config"]["mode"], "uniqueness");
}

#[test]
fn seed_controls_the_sample_suite() {
    let seeded = |seed: &str| {
        let o = bin()
            .args(["check", &cfg("example41.cfg"), "--json", "--grid", "256"])
            .env("FRACBVP_SEED", seed)
            .output()
            .unwrap();
        (o.status.code(), o.stdout)
    };
    let (code, a) = seeded("7");
    assert_eq!(code, Some(0));
    let v: serde_json::Value = serde_json::from_slice(&a).unwrap();
    assert_eq!(v["provenance"]["seed"], 7);
    assert_eq!(v["provenance"]["sample_pairs"], 50);
    assert_eq!(seeded("7").1, a);
    assert_ne!(seeded("8").1, a);
    assert_eq!(seeded("seven").0, Some(1));
}

#[test]
fn config_errors_exit_one_and_name_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        (IDENTITY.replace("eta = 0.4", "eta = 1.4"), "problem.eta"),
        (IDENTITY.replace("grid_size = 256", "grid_size = 32"), "solver.grid_size"),
        (IDENTITY.replace("expr = \"(1 + t) * cos(u) / 4\"", "expr = \"cos(u\""), "f.expr"),
        (IDENTITY.replace("[solver]", "[solver]\nspeed = 3"), "solver.speed"),
        (IDENTITY.replace("kind = \"identity\"", "kind = \"table\"\ntable = \"missing.csv\""), "missing.csv"),
    ];
    for (i, (text, key)) in cases.iter().enumerate() {
        let c = write(dir.path(), &format!("bad{i}.cfg"), text);
        let o = run(&["check", &c]);
        assert_eq!(o.status.code(), Some(1), "{key}");
        let err = String::from_utf8_lossy(&o.stderr);
        assert!(err.contains(key), "{key}: {err}");
    }
    let o = run(&["check", "/nonexistent/config.cfg"]);
    assert_eq!(o.status.code(), Some(1));
    let o = run(&["check", &cfg("example42.cfg"), "--tol", "0"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--tol"));
}

#[test]
fn solve_only_mode_reports_but_never_fails_the_certificate() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(cfg("example42.cfg"))
        .unwrap()
        .replace("beta = 4", "beta = 6")
        .replace("\"uniqueness\"", "\"solve-only\"");
    let c = write(dir.path(), "free.cfg", &text);
    let o = run(&["check", &c, "--grid", "128"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("no-certificate"));
}
