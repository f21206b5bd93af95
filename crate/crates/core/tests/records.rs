mod common;

use common::running;
use endperiodic::pipeline::{construct, construct_batch, verify_record, ConstructionRecord, PipelineConfig, SCHEMA_VERSION};
use endperiodic::par::Execution;
use endperiodic::{Error, IntMatrix};

fn fresh() -> ConstructionRecord {
    construct(&PipelineConfig::matrix(running())).unwrap()
}

#[test]
fn fresh_record_verifies() {
    let r = fresh();
    let report = verify_record(&r).unwrap();
    assert!(report.passed);
    let names: Vec<&str> = report.checks.iter().map(|c| c.name.as_str()).collect();
    assert_eq!(
        names,
        ["schema-depth", "stretch-factor", "incidence-structure", "record-hash", "reconstruction"]
    );
}

#[test]
fn record_survives_json_round_trip() {
    let r = fresh();
    let back = ConstructionRecord::from_json(&r.to_json()).unwrap();
    assert_eq!(back.hash, r.hash);
    assert_eq!(back.compute_hash(), r.hash);
    assert!(verify_record(&back).unwrap().passed);
}

#[test]
fn timestamp_is_outside_the_hash() {
    let mut r = fresh();
    let h = r.compute_hash();
    r.created_at = Some("2026-01-01T00:00:00Z".into());
    assert_eq!(r.compute_hash(), h);
}

#[test]
fn mutated_incidence_names_the_stretch_factor() {
    let mut r = fresh();
    r.incidence.incidence.set(2, 0, 1);
    match verify_record(&r) {
        Err(Error::Verification { invariant, .. }) => assert_eq!(invariant, "stretch-factor"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn swapped_blocks_fail_the_structure_check() {
    // same spectrum, wrong matrix: move one block off the diagonal
    let mut r = fresh();
    let m = running();
    let mut bad = IntMatrix::zeros(8);
    for i in 0..4 {
        for j in 0..4 {
            bad.set(i, j + 4, m.get(i, j));
            bad.set(i + 4, j, m.get(i, j));
        }
    }
    r.incidence.incidence = bad;
    match verify_record(&r) {
        Err(Error::Verification { invariant, .. }) => assert_eq!(invariant, "incidence-structure"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn truncated_depth_fails_the_precondition() {
    let mut r = fresh();
    r.schema.depth_cap = r.certificates.escape_depth - 1;
    assert!(matches!(verify_record(&r), Err(Error::Precondition(_))));
}

#[test]
fn edited_record_fails_the_hash() {
    let mut r = fresh();
    r.census.finite_pairs += 1;
    match verify_record(&r) {
        Err(Error::Verification { invariant, .. }) => assert_eq!(invariant, "record-hash"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn stale_version_is_rejected() {
    let text = fresh().to_json().replace(SCHEMA_VERSION, "endperiodic-record/0");
    match ConstructionRecord::from_json(&text) {
        Err(Error::InvalidInput(msg)) => assert!(msg.contains("endperiodic-record/0")),
        other => panic!("{other:?}"),
    }
}

#[test]
fn depth_below_escape_is_refused() {
    let mut c = PipelineConfig::matrix(running());
    c.depth = Some(5);
    assert!(matches!(construct(&c), Err(Error::InvalidInput(_))));
}

#[test]
fn reducible_input_is_refused() {
    let m = IntMatrix::from_rows(vec![vec![1, 1], vec![0, 1]]).unwrap();
    assert!(matches!(construct(&PipelineConfig::matrix(m)), Err(Error::Precondition(_))));
}

#[test]
fn batch_modes_agree() {
    let configs: Vec<PipelineConfig> = (2..6).map(PipelineConfig::integer).chain([PipelineConfig::matrix(running())]).collect();
    let seq = construct_batch(&configs, Execution::Sequential);
    let par = construct_batch(&configs, Execution::Parallel);
    for (a, b) in seq.iter().zip(&par) {
        assert_eq!(a.as_ref().unwrap().hash, b.as_ref().unwrap().hash);
    }
}
