//! On-disk formats round-trip exactly and reject malformed input.

use nqs_core::analysis::{load_records, save_records, Method, ScalingRecord};
use nqs_core::harness::{run_sweep, RunManifest, SweepPlan};
use nqs_core::model::ModelState;
use nqs_core::pauli::{group_bases, load_hamiltonian, transverse_field_ising};
use nqs_core::rbm::RbmParams;
use nqs_core::rng::stream;
use nqs_core::rnn::RnnParams;
use nqs_core::sampler::{sample_dataset, Dataset};
use nqs_core::statevec::{groundstate, load_state, save_state, StateVector};
use nqs_core::Error;

#[test]
fn hamiltonian_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("h.json");
    std::fs::write(
        &path,
        r#"{"name": "demo", "n": 2, "terms": [["II", -0.5], ["ZZ", 1.0], ["XI", 0.25], ["ZZ", 0.5]]}"#,
    )
    .unwrap();
    let h = load_hamiltonian(&path).unwrap();
    assert_eq!(h.name, "demo");
    assert_eq!(h.identity_offset, -0.5);
    assert_eq!(h.terms.len(), 2);
    assert_eq!(h.terms[0].coeff, 1.5);
    std::fs::write(&path, r#"{"name": "bad", "n": 2, "terms": [["ZQ", 1.0]]}"#).unwrap();
    assert!(matches!(
        load_hamiltonian(&path),
        Err(Error::InvalidPauli { .. })
    ));
}

#[test]
fn state_file_layout_and_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.bin");
    let s = StateVector::random(3, &mut stream(1, 0));
    save_state(&s, &path).unwrap();
    let bytes = std::fs::read(&path).unwrap();
    assert_eq!(bytes.len(), 16 + 16 * 8);
    assert_eq!(u64::from_le_bytes(bytes[8..16].try_into().unwrap()), 3);
    assert_eq!(
        f64::from_le_bytes(bytes[16..24].try_into().unwrap()),
        s.amplitudes()[0].re
    );
    assert_eq!(load_state(&path).unwrap(), s);
    std::fs::write(&path, &bytes[..100]).unwrap();
    assert!(load_state(&path).is_err());
}

#[test]
fn dataset_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.jsonl");
    let h = transverse_field_ising(3, 1.0, 0.6);
    let g = groundstate(&h).unwrap();
    let d = sample_dataset(&g.state, &group_bases(&h), 5000, 3).unwrap();
    d.save(&path).unwrap();
    assert_eq!(Dataset::load(&path).unwrap(), d);
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines: Vec<&str> = text.lines().collect();
    lines.pop();
    std::fs::write(&path, lines.join("\n")).unwrap();
    assert!(matches!(Dataset::load(&path), Err(Error::Format(_))));
}

#[test]
fn model_checkpoints_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let mut g = stream(2, 0);
    for (i, m) in [
        ModelState::Rbm(RbmParams::random(4, 3, 0.2, &mut g)),
        ModelState::Rnn(RnnParams::random(4, 5, 0.5, true, &mut g)),
        ModelState::Wavefunction(StateVector::random(3, &mut g)),
    ]
    .into_iter()
    .enumerate()
    {
        let path = dir.path().join(format!("m{i}.json"));
        m.save(&path).unwrap();
        let back = ModelState::load(&path).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.to_statevector().unwrap(), m.to_statevector().unwrap());
    }
}

#[test]
fn records_and_manifest_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let hpath = dir.path().join("h.json");
    std::fs::write(&hpath, transverse_field_ising(2, 1.0, 0.5).to_json()).unwrap();
    let mut plan = SweepPlan::new(
        vec![Method::Wavefunction, Method::Shadows],
        vec![100, 200, 400],
        2,
        1,
    );
    plan.hamiltonian_path = Some(hpath);
    let m = run_sweep(&plan).unwrap();
    let mpath = dir.path().join("manifest.json");
    m.save(&mpath).unwrap();
    assert_eq!(RunManifest::load(&mpath).unwrap(), m);
    let rpath = dir.path().join("records.csv");
    let mut records = m.records();
    records.push(ScalingRecord {
        method: Method::Rnn,
        shots: 7,
        seed: u64::MAX,
        epsilon: 1e-17,
        delta: Some(0.0),
        g_error: Some(f64::INFINITY),
    });
    save_records(&records, &rpath).unwrap();
    assert_eq!(load_records(&rpath).unwrap(), records);
}
