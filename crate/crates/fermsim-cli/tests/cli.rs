use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fermsim::circuit::{Circuit, Gate, GateKind, WireType};
use fermsim::entanglement::{phi_mixed, phi_prime};
use fermsim::json::DensityMatrixJson;
use fermsim::linalg::{cr, diag, max_abs_diff, CMat};
use fermsim_cli::schema::Schema;
use serde_json::Value;

fn fermsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fermsim")).args(args).output().expect("binary runs")
}

fn tmp(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("cli");
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn write_json<T: serde::Serialize>(name: &str, v: &T) -> PathBuf {
    let p = tmp(name);
    std::fs::write(&p, serde_json::to_string(v).unwrap()).unwrap();
    p
}

fn write_state(name: &str, n: usize, rho: &CMat) -> PathBuf {
    write_json(name, &DensityMatrixJson::from_matrix(n, rho))
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("{e}: {}", String::from_utf8_lossy(&out.stderr));
    })
}

fn assert_conforms(schema: Schema, v: &Value) {
    let errors = schema.violations(v);
    assert!(errors.is_empty(), "{}: {errors:?}", schema.name());
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn bundled_schemas_compile() {
    for s in Schema::ALL {
        assert!(!s.violations(&Value::Null).is_empty(), "{} accepts null", s.name());
    }
}

#[test]
fn verify_car_example() {
    let out = fermsim(&["verify", "car", "--n", "6"]);
    assert_eq!(out.status.code(), Some(0));
    let r = stdout_json(&out);
    assert_conforms(Schema::VerifyReport, &r);
    assert_eq!(r["seed"], 7);
    let checks = r["suites"][0]["checks"].as_array().unwrap();
    assert!(checks.iter().all(|c| c["value"].as_f64().unwrap() < 1e-12 && c["bound"] == 1e-12));
    assert!(checks.iter().any(|c| c["name"] == "car.sparse.n6"));
}

#[test]
fn verify_dimensions_example() {
    let out = fermsim(&["verify", "dimensions", "--n", "5"]);
    assert_eq!(out.status.code(), Some(0));
    let r = stdout_json(&out);
    assert_conforms(Schema::VerifyReport, &r);
    let checks = r["suites"][0]["checks"].as_array().unwrap();
    let d5 = checks.iter().find(|c| c["name"] == "dimensions.d.n5").unwrap();
    assert_eq!(d5["value"].as_f64(), Some(512.0));
    assert_eq!(d5["relation"], "==");
}

#[test]
fn verify_bk_emits_gate_count_table() {
    let out = fermsim(&["verify", "bk", "--m", "32", "--seed", "7"]);
    assert_eq!(out.status.code(), Some(0));
    let r = stdout_json(&out);
    assert_conforms(Schema::VerifyReport, &r);
    let rows = r["suites"][0]["data"]["benchmark"].as_array().unwrap();
    assert_eq!(rows.len(), 29);
    assert_eq!(rows[0]["m"], 4);
    assert_eq!(rows[28]["max_gates_jwt"], 33);
}

#[test]
fn every_suite_report_conforms() {
    for suite in ["channels", "universal", "entanglement", "locc", "jwt"] {
        let out = fermsim(&["verify", suite, "--seed", "3", "--jobs", "2"]);
        assert_eq!(out.status.code(), Some(0), "{suite}: {}", String::from_utf8_lossy(&out.stderr));
        assert_conforms(Schema::VerifyReport, &stdout_json(&out));
    }
}

#[test]
fn reports_are_reproducible() {
    let a = fermsim(&["verify", "channels", "--n", "2", "--seed", "11", "--jobs", "1"]);
    let b = fermsim(&["verify", "channels", "--n", "2", "--seed", "11", "--jobs", "3"]);
    assert_eq!(a.stdout, b.stdout);
    let c = fermsim(&["verify", "channels", "--n", "2", "--seed", "12"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn exit_codes() {
    assert_eq!(fermsim(&["verify", "nonsense"]).status.code(), Some(2));
    assert_eq!(fermsim(&["verify", "car", "--tol", "0"]).status.code(), Some(2));
    assert_eq!(fermsim(&["verify", "car", "--tol", "-1e-3"]).status.code(), Some(2));
    assert_eq!(fermsim(&["verify", "channels", "--n", "9"]).status.code(), Some(2));
    assert_eq!(fermsim(&["frobnicate"]).status.code(), Some(2));

    // A tolerance no floating-point residual can meet turns the suite red.
    let out = fermsim(&["verify", "universal", "--tol", "1e-300"]);
    assert_eq!(out.status.code(), Some(1));
    let r = stdout_json(&out);
    assert_eq!(r["passed"], false);
    assert_eq!(r["tolerance_override"], 1e-300);
    assert!(String::from_utf8_lossy(&out.stderr).contains("failed"));
}

#[test]
fn report_goes_to_out_file() {
    let path = tmp("car.json");
    let out = fermsim(&["verify", "car", "--n", "3", "--out", p(&path)]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let r: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(r["suites"][0]["params"]["n"], 3);
}

#[test]
fn entanglement_of_phi() {
    let path = write_state("phi.json", 2, &phi_mixed());
    let out = fermsim(&["entanglement", "--state", p(&path), "--measure", "cf"]);
    assert_eq!(out.status.code(), Some(0));
    let r = stdout_json(&out);
    assert_conforms(Schema::EntanglementReport, &r);
    assert!((r["concurrence"]["value"].as_f64().unwrap() - 1.0).abs() < 1e-10);
    assert!(r.get("separability").is_none());

    let r = stdout_json(&fermsim(&["entanglement", "--in", p(&path)]));
    assert_conforms(Schema::EntanglementReport, &r);
    assert!((r["eof_lower"]["lower_bound"].as_f64().unwrap() - 1.0).abs() < 1e-10);
    assert_eq!(r["eof_lower"]["equals_operational"], true);
    assert_eq!(r["separability"]["separable"], false);
    assert!((r["separability"]["xx_correlator"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert_eq!(r["sectors"]["p0"].as_f64(), Some(0.5));
}

#[test]
fn monogamy_of_phi_prime() {
    let psi = phi_prime();
    let path = write_state("phi_prime.json", 3, &(&psi * psi.adjoint()));
    let out = fermsim(&["entanglement", "--in", p(&path), "--measure", "monogamy"]);
    assert_eq!(out.status.code(), Some(0));
    let r = stdout_json(&out);
    assert_conforms(Schema::EntanglementReport, &r);
    let m = &r["monogamy"];
    for (key, want) in [("c_ab", 1.0), ("c_ac", 1.0), ("sum_of_squares", 2.0)] {
        assert!((m[key].as_f64().unwrap() - want).abs() < 1e-10, "{key}");
    }
    assert_eq!(m["violated"], true);
    // cf needs two modes
    assert_eq!(fermsim(&["entanglement", "--in", p(&path), "--measure", "cf"]).status.code(), Some(2));
}

#[test]
fn diagonal_state_is_separable() {
    let rho = diag(&[cr(0.1), cr(0.2), cr(0.3), cr(0.4)]);
    let path = write_state("diag.json", 2, &rho);
    let r = stdout_json(&fermsim(&["entanglement", "--in", p(&path), "--measure", "separability"]));
    assert_conforms(Schema::EntanglementReport, &r);
    assert_eq!(r["separability"]["separable"], true);
    assert_eq!(r["separability"]["bipartite"]["separable"], true);
    assert!(r["separability"]["witness"]["row"].is_null());
}

#[test]
fn invalid_states_are_rejected_with_residuals() {
    // |+><+| mixes the parity sectors
    let plus = CMat::from_element(2, 2, cr(0.5));
    let path = write_state("plus.json", 1, &plus);
    let out = fermsim(&["entanglement", "--in", p(&path)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("parity commutator"));

    let bad = tmp("malformed.json");
    std::fs::write(&bad, "{\"n\": 1, \"re\": [[1, 0], [0, 0]]").unwrap();
    let out = fermsim(&["trace", "--in", p(&bad), "--keep", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("malformed JSON"));

    let wrong = write_json("wrong.json", &serde_json::json!({ "n": 0, "re": [[1]], "im": [[0]], "extra": 1 }));
    let out = fermsim(&["entanglement", "--in", p(&wrong)]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("state schema") && err.contains("/n"), "{err}");

    let missing = tmp("does_not_exist.json");
    assert_eq!(fermsim(&["entanglement", "--in", p(&missing)]).status.code(), Some(2));
}

#[test]
fn trace_of_phi_prime() {
    let psi = phi_prime();
    let path = write_state("phi_prime_trace.json", 3, &(&psi * psi.adjoint()));
    let out_path = tmp("marginal.json");
    let out = fermsim(&["trace", "--in", p(&path), "--keep", "2,3", "--out", p(&out_path)]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_conforms(Schema::State, &v);
    let m: DensityMatrixJson = serde_json::from_value(v).unwrap();
    assert_eq!(m.n, 2);
    assert!(max_abs_diff(&m.to_matrix().unwrap(), &phi_mixed()) < 1e-15);
    assert_eq!(fermsim(&["trace", "--in", p(&path), "--keep", "3,1"]).status.code(), Some(2));
}

fn compile(name: &str, c: &Circuit) -> (Output, Value, Value) {
    let input = write_json(&format!("{name}.json"), &c.to_json());
    let out_path = tmp(&format!("{name}.qubit.json"));
    let report_path = tmp(&format!("{name}.report.json"));
    let out = fermsim(&["compile", "--in", p(&input), "--out", p(&out_path), "--report", p(&report_path)]);
    let read =
        |path: &Path| serde_json::from_str(&std::fs::read_to_string(path).unwrap_or_default()).unwrap_or(Value::Null);
    (out, read(&out_path), read(&report_path))
}

#[test]
fn compile_fswap() {
    let c = Circuit::from_gates(WireType::Mode, 2, vec![Gate::two(GateKind::Fswap, 0, 1)]).unwrap();
    let (out, circuit, report) = compile("fswap", &c);
    assert_eq!(out.status.code(), Some(0));
    assert_conforms(Schema::Circuit, &circuit);
    assert_conforms(Schema::CompileReport, &report);
    assert_eq!(circuit["wire_type"], "qubit");
    let kinds: Vec<&str> = circuit["gates"].as_array().unwrap().iter().map(|g| g["kind"].as_str().unwrap()).collect();
    assert_eq!(kinds, ["lambda_z", "qswap"]);
    assert_eq!(report["passed"], true);
    assert!(report["equivalence_residual"].as_f64().unwrap() < 1e-12);
}

#[test]
fn compile_identity_is_empty() {
    let c = Circuit::from_gates(WireType::Mode, 2, vec![Gate::custom(fermsim::linalg::eye(4), vec![0, 1]).unwrap()])
        .unwrap();
    let (out, circuit, report) = compile("identity", &c);
    assert_eq!(out.status.code(), Some(0));
    assert!(circuit["gates"].as_array().unwrap().is_empty());
    assert_eq!(report["output_gates"], 0);
}

#[test]
fn compile_rejects_bad_circuits() {
    // CNOT is not parity preserving on modes
    let cnot = Circuit::from_gates(WireType::Mode, 2, vec![Gate::two(GateKind::Cnot, 0, 1)]).unwrap();
    let (out, _, _) = compile("cnot", &cnot);
    assert_eq!(out.status.code(), Some(2));

    let not_unitary = serde_json::json!({
        "wire_type": "mode", "n_wires": 1,
        "gates": [{ "kind": "custom", "wires": [0], "payload": { "re": [[2, 0], [0, 1]], "im": [[0, 0], [0, 0]] } }]
    });
    let input = write_json("not_unitary.json", &not_unitary);
    let out = fermsim(&["compile", "--in", p(&input)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unitary"));

    let no_payload =
        serde_json::json!({ "wire_type": "mode", "n_wires": 1, "gates": [{ "kind": "custom", "wires": [0] }] });
    let input = write_json("no_payload.json", &no_payload);
    let out = fermsim(&["compile", "--in", p(&input)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("circuit schema"));
}

#[test]
fn encode_benchmark_csv() {
    let out = fermsim(&["encode", "--m", "64", "--mode", "benchmark"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("M,max_gates_bk,max_gates_jwt"));
    let rows: Vec<[usize; 3]> = lines
        .map(|l| {
            let v: Vec<usize> = l.split(',').map(|x| x.parse().unwrap()).collect();
            [v[0], v[1], v[2]]
        })
        .collect();
    assert_eq!(rows.len(), 64);
    for [m, bk, jwt] in rows {
        assert_eq!(jwt, m + 1);
        if m >= 4 {
            let ceil_log2 = (m as f64).log2().ceil() as usize;
            assert!(bk <= 3 * (ceil_log2 + 1), "M={m}: {bk}");
        }
    }
}

#[test]
fn encode_table_and_circuits() {
    let r = stdout_json(&fermsim(&["encode", "--m", "8", "--mode", "table"]));
    assert_conforms(Schema::EncodingTable, &r);
    assert_eq!(r["t"], 3);
    assert_eq!(r["rows"][7]["s"], serde_json::json!([4, 5, 6, 7]));

    let r = stdout_json(&fermsim(&["encode", "--m", "8", "--mode", "circuit"]));
    assert_conforms(Schema::ExtractionCircuits, &r);
    let circuits = r["circuits"].as_array().unwrap();
    assert_eq!(circuits.len(), 8);
    for c in circuits {
        assert_conforms(Schema::Circuit, &c["circuit"]);
        assert_eq!(c["circuit"]["n_wires"], 9);
    }

    let r = stdout_json(&fermsim(&["encode", "--m", "8", "--mode", "circuit", "--j", "5"]));
    assert_eq!(r["circuits"].as_array().unwrap().len(), 1);
    assert_eq!(fermsim(&["encode", "--m", "8", "--mode", "circuit", "--j", "8"]).status.code(), Some(2));
    assert_eq!(fermsim(&["encode", "--m", "0"]).status.code(), Some(2));
}

#[test]
fn kraus_map_format_conforms() {
    let m = fermsim::channels::KrausMap::from_ops(1, vec![fermsim::linalg::pauli::x()]).unwrap();
    assert_conforms(Schema::KrausMap, &serde_json::to_value(m.to_json()).unwrap());
}
