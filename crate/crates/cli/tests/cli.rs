use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use relicomp::circuit::NodeKind;
use relicomp::netlist::parse;

const MAJ: &str = "input a\ninput b\ninput c\ngate g = MAJ3(a,b,c)\noutput g\n";
const MIN: &str = "input a\ninput b\ninput c\ngate g = MIN3(a,b,c)\noutput g\n";

fn relicomp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_relicomp")).args(args).env_remove("RELICOMP_THREADS").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn csv_rows(text: &str) -> Vec<csv::StringRecord> {
    csv::Reader::from_reader(text.as_bytes()).records().map(|r| r.unwrap()).collect()
}

#[test]
fn validate_reports_success_and_failures() {
    let dir = tempfile::tempdir().unwrap();
    let ok = relicomp(&["validate", s(&write(dir.path(), "ok.nls", MAJ))]);
    assert!(ok.status.success());
    assert!(stdout(&ok).starts_with("ok: 3 inputs, 1 gates"));

    let bad = relicomp(&["validate", s(&write(dir.path(), "bad.nls", "input a\ngate g = MAJ3(a,a\noutput g\n"))]);
    assert!(!bad.status.success());
    assert!(stderr(&bad).contains("line 2"), "{}", stderr(&bad));

    let cycle = "input a\ngate g = AND(a,h)\ngate h = AND(a,g)\noutput h\n";
    let cyc = relicomp(&["validate", s(&write(dir.path(), "cyc.nls", cycle))]);
    assert!(!cyc.status.success());
    assert!(stderr(&cyc).contains("invalid circuit"), "{}", stderr(&cyc));
}

#[test]
fn simulate_single_gate_error_rates() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "maj.nls", MAJ);
    let trials = 50_000.0f64;
    for delta in [0.1, 0.5] {
        let o = relicomp(&["simulate", s(&f), "--delta", &delta.to_string(), "--trials", "50000", "--all-inputs"]);
        assert!(o.status.success(), "{}", stderr(&o));
        let rows = csv_rows(&stdout(&o));
        assert_eq!(rows.len(), 8);
        // A single noisy gate errs exactly when it flips.
        let se = (delta * (1.0 - delta) / trials).sqrt();
        for r in rows {
            let est: f64 = r[3].parse().unwrap();
            assert!((est - delta).abs() <= 4.0 * se, "δ={delta}: {est}");
        }
    }
}

#[test]
fn simulate_is_reproducible_and_thread_independent() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "maj.nls", MAJ);
    let run = |out: &str, threads: &str| {
        let out = dir.path().join(out);
        let o = relicomp(&[
            "--threads", threads, "simulate", s(&f), "--delta", "0.2", "--trials", "30000", "--seed", "7",
            "--format", "json", "--out", s(&out),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        std::fs::read(out).unwrap()
    };
    let a = run("a.json", "1");
    let b = run("b.json", "4");
    assert_eq!(a, b);
    let v: serde_json::Value = serde_json::from_slice(&a).unwrap();
    assert_eq!(v["seed"], 7);
    assert_eq!(v["rng"], "chacha8");

    let env = Command::new(env!("CARGO_BIN_EXE_relicomp"))
        .args(["simulate", s(&f), "--delta", "0.2", "--trials", "30000", "--seed", "7", "--format", "json"])
        .env("RELICOMP_THREADS", "2")
        .output()
        .unwrap();
    assert!(env.status.success());
    assert_eq!(env.stdout, a);
}

#[test]
fn selected_inputs_are_simulated() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "maj.nls", MAJ);
    let o = relicomp(&["simulate", s(&f), "--delta", "0.05", "--input", "101", "--input", "000"]);
    assert!(o.status.success());
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows.iter().map(|r| r[0].to_string()).collect::<Vec<_>>(), ["101", "000"]);
}

#[test]
fn precondition_violations_exit_nonzero_with_contract() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "maj.nls", MAJ);
    let o = relicomp(&["simulate", s(&f), "--delta", "0.7"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("gate noise δ"), "{}", stderr(&o));
    let o = relicomp(&["simulate", s(&f), "--delta", "0.1", "--trials", "0"]);
    assert!(!o.status.success());
    let o = relicomp(&["transform", s(&write(dir.path(), "and.nls", "input a\ninput b\ngate g = AND(a,b)\noutput g\n")), "--family", "maj3"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("not a maj3 gate"), "{}", stderr(&o));
    let o = relicomp(&["--threads", "0", "validate", s(&f)]);
    assert!(!o.status.success());
}

#[test]
fn transform_single_gate_shape() {
    let dir = tempfile::tempdir().unwrap();
    for (text, family, gates) in [(MAJ, "maj3", 4), (MIN, "min3", 5)] {
        let f = write(dir.path(), &format!("{family}.nls"), text);
        let out = dir.path().join(format!("{family}.out.nls"));
        let o = relicomp(&["transform", s(&f), "--family", family, "--out", s(&out), "--check"]);
        assert!(o.status.success(), "{}", stderr(&o));
        assert!(stderr(&o).contains("noiseless equivalence: ok"));
        let t = parse(&std::fs::read_to_string(&out).unwrap()).unwrap();
        assert_eq!(t.num_inputs(), 3);
        assert_eq!(t.num_gates(), gates);
        // Restoring layer: one gate per input, fed three copies of it.
        let inputs = t.input_ids();
        for x in &inputs {
            assert!(t.nodes().iter().any(|n| n.is_gate() && n.inputs == vec![*x; 3]));
        }
        let root = t.outputs()[0];
        let final_gate = if family == "maj3" { root } else { t.node(root).unwrap().inputs[0] };
        for w in &t.node(final_gate).unwrap().inputs {
            assert!(matches!(t.node(*w).unwrap().kind, NodeKind::Gate(_)));
        }
        assert!(Path::new(&format!("{}.manifest.json", out.display())).exists());
    }
}

#[test]
fn analyze_modes() {
    let dir = tempfile::tempdir().unwrap();
    let id = write(dir.path(), "id.nls", "input x\ngate g = TABLE[01](x)\noutput g\n");
    let o = relicomp(&["analyze", s(&id), "mi", "--delta", "0"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows[0][1].parse::<f64>().unwrap(), 1.0);

    let maj = write(dir.path(), "maj.nls", MAJ);
    let o = relicomp(&["analyze", s(&maj), "chain", "--delta", "0.1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.starts_with("input,mutual_information,percolation,path_sum,depth_bound,distance,fan_in,holds"));
    for r in csv_rows(&text) {
        assert_eq!(&r[4], "inapplicable");
        assert_eq!(&r[7], "true");
    }

    let o = relicomp(&["analyze", s(&maj), "chain", "--delta", "0.3", "--input-node", "b"]);
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 1);
    let v: Vec<f64> = (1..=4).map(|i| rows[0][i].parse().unwrap()).collect();
    assert!(v[0] <= v[1] + 1e-9 && v[1] <= v[2] + 1e-9 && v[2] <= v[3] + 1e-9);

    let exact = relicomp(&["analyze", s(&maj), "percolation", "--delta", "0.2", "--exact"]);
    let mc = relicomp(&["analyze", s(&maj), "percolation", "--delta", "0.2", "--mc", "--trials", "40000"]);
    let p: f64 = csv_rows(&stdout(&exact))[0][1].parse().unwrap();
    assert!((p - 0.36).abs() < 1e-12);
    let m = &csv_rows(&stdout(&mc))[0];
    let (est, se): (f64, f64) = (m[1].parse().unwrap(), m[2].parse().unwrap());
    assert!((est - p).abs() <= 4.0 * se);

    let o = relicomp(&["analyze", s(&maj), "mi", "--delta", "0.1", "--mc"]);
    assert!(!o.status.success());
    let o = relicomp(&["analyze", s(&maj), "mi", "--delta", "0.1", "--input-node", "zz"]);
    assert!(!o.status.success());
}

#[test]
fn thresholds_table_rows() {
    let o = relicomp(&["thresholds", "--k-range", "2..9", "--gap-ratio"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with("k,es_threshold,formula_threshold,stirling,gap_ratio\n"));
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), 8);
    assert_eq!(&rows[1][0], "3");
    assert_eq!(&rows[1][1], "0.211325");
    assert_eq!(&rows[1][2], "0.166667");
    assert_eq!(&rows[0][2], "0.088562");
    assert_eq!(&rows[2][2], "");
    assert_eq!(&rows[2][4], "");
}

#[test]
fn roots_report_feasibility() {
    let o = relicomp(&["roots", "--family", "min3", "--deltas", "0.0073"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("no feasible interval"));
    let o = relicomp(&["roots", "--family", "maj3", "--deltas", "0.0073"]);
    assert!(stdout(&o).contains("feasible η ∈ ["), "{}", stdout(&o));

    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("roots.csv");
    let curves = dir.path().join("curves");
    let o = relicomp(&[
        "roots", "--family", "min3", "--deltas", "0.004,0.0073", "--out", s(&out), "--curves", s(&curves), "--points", "11",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = csv_rows(&std::fs::read_to_string(&out).unwrap());
    assert_eq!(rows.len(), 2);
    assert!(rows[0][2].parse::<f64>().unwrap() > 0.02);
    assert_eq!(&rows[1][2], "");
    let curve = std::fs::read_to_string(curves.join("cubic_min3_0.004.csv")).unwrap();
    assert!(curve.starts_with("eta,p_value\n"));
    assert_eq!(curve.lines().count(), 12);
}

#[test]
fn replay_reproduces_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "maj.nls", MAJ);
    let out = dir.path().join("run.json");
    let manifest = dir.path().join("run.manifest");
    let o = relicomp(&[
        "--manifest", s(&manifest), "simulate", s(&f), "--delta", "0.15", "--trials", "20000", "--seed", "3",
        "--format", "json", "--out", s(&out),
    ]);
    assert!(o.status.success());
    let first = std::fs::read(&out).unwrap();
    let recorded = std::fs::read(&manifest).unwrap();
    let m: serde_json::Value = serde_json::from_slice(&recorded).unwrap();
    assert_eq!(m["subcommand"], "simulate");
    assert_eq!(m["seed"], 3);
    assert_eq!(m["outputs"][0], s(&out));

    std::fs::remove_file(&out).unwrap();
    let o = relicomp(&["replay", s(&manifest)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(std::fs::read(&out).unwrap(), first);
    assert_eq!(std::fs::read(&manifest).unwrap(), recorded);
}

#[test]
fn manifest_goes_to_stderr_without_outputs() {
    let o = relicomp(&["thresholds", "--k-range", "3..3"]);
    let m: serde_json::Value = serde_json::from_str(&stderr(&o)).unwrap();
    assert_eq!(m["subcommand"], "thresholds");
    assert_eq!(m["arguments"][2], "3..3");
}
