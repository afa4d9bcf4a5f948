use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn data(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn dualpure(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dualpure"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn value_of(report: &str, method: &str) -> f64 {
    report
        .lines()
        .find_map(|l| {
            let mut cols = l.split('\t');
            (cols.next() == Some(method)).then(|| cols.next().unwrap().parse().unwrap())
        })
        .unwrap_or_else(|| panic!("no {method} row in {report}"))
}

#[test]
fn bell_pair_z_marginal_is_zero() {
    let o = dualpure(&[
        "estimate",
        "--circuit",
        &data("bell.circ"),
        "--observable",
        "ZI",
        "--method",
        "dsp",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(value_of(&stdout(&o), "dsp"), 0.0);
}

#[test]
fn identity_observable_is_one() {
    let dir = tempfile::tempdir().unwrap();
    let circ = dir.path().join("c.circ");
    std::fs::write(&circ, "QUBITS 4\nH 0\nCX 0 3\n").unwrap();
    let o = dualpure(&["estimate", "--circuit", circ.to_str().unwrap(), "--observable", "IIII"]);
    assert!(o.status.success());
    for m in ["ef", "raw", "dsp_projective", "dsp", "tp", "analytic"] {
        assert_eq!(value_of(&stdout(&o), m), 1.0);
    }
}

#[test]
fn malformed_circuit_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let circ = dir.path().join("bad.circ");
    std::fs::write(&circ, "QUBITS 2\nCX 0 0\n").unwrap();
    let o = dualpure(&["estimate", "--circuit", circ.to_str().unwrap(), "--observable", "ZI"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("parse-error"), "{}", stderr(&o));
}

#[test]
fn missing_hamiltonian_exits_2() {
    let o = dualpure(&[
        "vqe",
        "--hamiltonian",
        "/nonexistent/h.json",
        "--ansatz",
        &data("h2_ansatz.circ"),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("io-error"));
}

#[test]
fn numerical_failure_exits_3() {
    // Shot mode with a handful of shots and heavy readout error leaves
    // no post-selected shot in some basis.
    let dir = tempfile::tempdir().unwrap();
    let noise = dir.path().join("noise.json");
    let model = r#"{"kind":"explicit","n_qubits":3,"pairs":[],
        "measurement":[{"qubit":0,"type":"bit_flip","p":0.5},{"qubit":1,"type":"bit_flip","p":0.5}]}"#;
    std::fs::write(&noise, model).unwrap();
    let circ = dir.path().join("x.circ");
    std::fs::write(&circ, "QUBITS 2\nX 0\nX 1\n").unwrap();
    let o = dualpure(&[
        "estimate",
        "--circuit",
        circ.to_str().unwrap(),
        "--observable",
        "ZZ",
        "--noise",
        noise.to_str().unwrap(),
        "--method",
        "dsp",
        "--shots",
        "1",
        "--seed",
        "3",
    ]);
    assert_eq!(o.status.code(), Some(3), "{} {}", stdout(&o), stderr(&o));
}

#[test]
fn unknown_method_is_input_error() {
    let o = dualpure(&[
        "estimate",
        "--circuit",
        &data("bell.circ"),
        "--observable",
        "ZI",
        "--method",
        "best",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn compile_basis_prints_circuit() {
    let o = dualpure(&["compile-basis", "XIZX"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "# pivot 0\nQUBITS 4\nH 0\nH 3\nCX 2 0\nCX 3 0\n");
}

fn random_test(out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        "random-test",
        "--n",
        "3",
        "--circuits",
        "5",
        "--seed",
        "8",
        "--out",
        out.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    dualpure(&args)
}

#[test]
fn random_test_is_byte_identical_across_runs_and_jobs() {
    let dir = tempfile::tempdir().unwrap();
    let a: PathBuf = dir.path().join("a");
    let b: PathBuf = dir.path().join("b");
    assert!(random_test(&a, &["--jobs", "1"]).status.success());
    assert!(random_test(&b, &["--jobs", "3"]).status.success());
    for f in ["records.csv", "summary.csv"] {
        assert_eq!(
            std::fs::read(a.join(f)).unwrap(),
            std::fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }
    let o = dualpure(&["rerun", a.join("manifest.json").to_str().unwrap()]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("all outputs identical"));

    std::fs::write(a.join("summary.csv"), "tampered\n").unwrap();
    let o = dualpure(&["rerun", a.join("manifest.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("summary.csv"));
}

#[test]
fn zero_noise_sweep_matches_noiseless_values() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("z");
    let o = random_test(&out, &["--eps-t", "0"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(out.join("records.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "n,n_g,eps_t,model,circuit_id,seed,o_ef,o_n,o_dsp,o_tp,p_tilde"
    );
    for line in lines {
        let cols: Vec<f64> = line.split(',').skip(6).take(4).map(|c| c.parse().unwrap()).collect();
        for v in &cols[1..] {
            assert!((v - cols[0]).abs() < 1e-12, "{line}");
        }
    }
    let summary = std::fs::read_to_string(out.join("summary.csv")).unwrap();
    assert!(summary.lines().skip(1).all(|l| l.ends_with(",NaN")), "{summary}");
}

#[test]
fn noiseless_vqe_raw_matches_direct_expectation() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("v");
    let o = dualpure(&[
        "vqe",
        "--hamiltonian",
        &data("h2_1.000.json"),
        "--ansatz",
        &data("h2_ansatz.circ"),
        "--theta",
        "0.4",
        "--methods",
        "ef,raw,dsp",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(out.join("vqe.csv")).unwrap();
    let energies: Vec<f64> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(3).unwrap().parse().unwrap())
        .collect();
    assert_eq!(energies.len(), 3);
    assert!((energies[1] - energies[0]).abs() < 1e-9);
    assert!((energies[2] - energies[0]).abs() < 1e-9);
    let manifest = std::fs::read_to_string(out.join("manifest.json")).unwrap();
    assert!(manifest.contains("\"command\": \"vqe\""));
}
