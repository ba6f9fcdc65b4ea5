use m4::record::{RunRecord, EVENTS_FILE, FLOWS_FILE};
use m4::runner::run_prepared;
use m4::scenario::{Backend, Scenario};

fn scenario_path(rel: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(rel)
}

#[test]
fn run_records_round_trip_exactly() {
    let sc = Scenario::load(&scenario_path("desk-2000.json")).unwrap();
    let prep = sc.prepare().unwrap();
    let rec = run_prepared(&prep, Backend::Fluid, None).unwrap();
    assert_eq!(rec.flows.len(), 2000);
    assert_eq!(rec.events.len(), 4000);
    assert!(rec.flows.windows(2).all(|w| w[0].id < w[1].id));
    assert!(rec.flows.iter().all(|f| f.slowdown >= 0.0 && f.slowdown == f.fct / f.ideal));
    let dir = tempfile::tempdir().unwrap();
    rec.write_dir(dir.path()).unwrap();
    let back = RunRecord::read_dir(dir.path()).unwrap();
    assert_eq!(back, rec);
    let lines = std::fs::read_to_string(dir.path().join(FLOWS_FILE)).unwrap();
    assert!(lines.lines().next().unwrap().starts_with("{\"id\":0,\"src\":"));
    let ev = std::fs::read_to_string(dir.path().join(EVENTS_FILE)).unwrap();
    assert!(ev.lines().next().unwrap().starts_with("{\"time\":"));
}

#[test]
fn packet_runs_are_deterministic_on_disk() {
    let sc = Scenario::load(&scenario_path("heldout/05-web_mixed.json")).unwrap();
    let prep = sc.prepare().unwrap();
    let dir = tempfile::tempdir().unwrap();
    for name in ["a", "b"] {
        run_prepared(&prep, Backend::Packet, None).unwrap().write_dir(&dir.path().join(name)).unwrap();
    }
    for f in [FLOWS_FILE, EVENTS_FILE] {
        let a = std::fs::read(dir.path().join("a").join(f)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(f)).unwrap();
        assert_eq!(a, b, "{f}");
    }
}

#[test]
fn learned_backend_requires_weights() {
    let sc = Scenario::load(&scenario_path("desk-2000.json")).unwrap();
    let prep = sc.prepare().unwrap();
    assert!(matches!(run_prepared(&prep, Backend::Learned, None), Err(m4::Error::MissingWeights)));
}
