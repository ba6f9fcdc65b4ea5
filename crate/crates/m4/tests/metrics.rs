use m4::metrics::{
    compare_report, percentile, relative_error, relative_error_stats, render_jsonl, render_text, ComparePair,
    RowStatus,
};
use m4::record::{FlowRecord, RunMeta, RunRecord};
use m4::scenario::Backend;

fn record(backend: Backend, slowdowns: &[f64], wall_s: f64) -> RunRecord {
    let flows = slowdowns
        .iter()
        .enumerate()
        .map(|(i, &s)| FlowRecord {
            id: i as u32,
            src: 0,
            dst: 1,
            size: 1000,
            arrival: 0.0,
            fct: s * 1e-6,
            ideal: 1e-6,
            slowdown: s,
        })
        .collect::<Vec<_>>();
    RunRecord {
        meta: RunMeta {
            scenario: "s".into(),
            backend,
            n_flows: flows.len(),
            n_events: 0,
            wall_s,
            throughput: None,
        },
        flows,
        events: vec![],
    }
}

#[test]
fn relative_error_sign_and_scale() {
    assert_eq!(relative_error(3.0, 2.0), 0.5);
    assert_eq!(relative_error(1.0, 2.0), -0.5);
}

#[test]
fn identical_records_have_zero_error() {
    let r = record(Backend::Packet, &[1.0, 2.5, 7.0], 1.0);
    let s = relative_error_stats(&r, &r).unwrap();
    assert_eq!((s.mean_abs, s.p90_abs, s.p99_slowdown_err), (0.0, 0.0, 0.0));
    assert!(s.per_flow.iter().all(|&(_, e)| e == 0.0));
}

#[test]
fn five_flow_hand_computation() {
    let truth = record(Backend::Packet, &[2.0, 4.0, 5.0, 10.0, 1.0], 1.0);
    let est = record(Backend::Fluid, &[3.0, 3.0, 5.0, 11.0, 1.2], 1.0);
    let s = relative_error_stats(&est, &truth).unwrap();
    let e: Vec<f64> = s.per_flow.iter().map(|&(_, e)| e).collect();
    let want = [0.5, -0.25, 0.0, 0.1, 0.2];
    for (g, w) in e.iter().zip(want) {
        assert!((g - w).abs() < 1e-12);
    }
    // |e| sorted: 0, .1, .2, .25, .5; p90 at position 3.6
    assert!((s.mean_abs - 0.21).abs() < 1e-12);
    assert!((s.p90_abs - 0.4).abs() < 1e-12);
    // p99 at position 3.96: truth 5 + .96·5, estimate 5 + .96·6
    assert!((s.p99_truth - 9.8).abs() < 1e-12);
    assert!((s.p99_est - 10.76).abs() < 1e-12);
    assert!((s.p99_slowdown_err - 0.96 / 9.8).abs() < 1e-12);
}

#[test]
fn percentile_endpoints() {
    assert_eq!(percentile(&[3.0, 1.0, 2.0], 0.0), 1.0);
    assert_eq!(percentile(&[3.0, 1.0, 2.0], 1.0), 3.0);
    assert_eq!(percentile(&[3.0, 1.0, 2.0], 0.5), 2.0);
    assert!(percentile(&[], 0.5).is_nan());
}

#[test]
fn mismatched_flow_sets_are_rejected() {
    let truth = record(Backend::Packet, &[1.0, 2.0, 3.0], 1.0);
    let est = record(Backend::Fluid, &[1.0, 2.0], 1.0);
    assert!(matches!(relative_error_stats(&est, &truth), Err(m4::Error::FlowSetMismatch(_))));
    let row = &compare_report(&[ComparePair {
        scenario: "s".into(),
        label: "fluid".into(),
        truth: Some(truth),
        est: Some(est),
    }])[0];
    assert_eq!(row.status, RowStatus::Mismatch);
}

#[test]
fn one_scenario_one_row_with_speedup() {
    let truth = record(Backend::Packet, &[2.0, 4.0], 3.0);
    let est = record(Backend::Fluid, &[2.0, 5.0], 0.5);
    let rows = compare_report(&[ComparePair {
        scenario: "s".into(),
        label: "fluid".into(),
        truth: Some(truth),
        est: Some(est),
    }]);
    assert_eq!(rows.len(), 1);
    let r = &rows[0];
    assert_eq!(r.status, RowStatus::Ok);
    assert_eq!(r.backend, "fluid");
    assert_eq!(r.speedup, Some(6.0));
    assert!(r.mean_abs_err.is_some() && r.p90_abs_err.is_some() && r.p99_slowdown_err.is_some());
}

#[test]
fn missing_runs_get_gap_rows() {
    let rows = compare_report(&[ComparePair {
        scenario: "s".into(),
        label: "learned".into(),
        truth: Some(record(Backend::Packet, &[1.0], 1.0)),
        est: None,
    }]);
    assert_eq!(rows[0].status, RowStatus::Missing);
    assert!(render_text(&rows).contains("MISSING"));
    assert!(render_jsonl(&rows).contains("\"status\":\"missing\""));
}

#[test]
fn report_from_stored_records_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let truth = record(Backend::Packet, &[1.25, 3.5, 2.0, 9.75], 0.125);
    let est = record(Backend::Fluid, &[1.0, 3.0, 2.5, 7.0], 0.01);
    truth.write_dir(&dir.path().join("truth/a")).unwrap();
    est.write_dir(&dir.path().join("fluid/a")).unwrap();
    let report = || {
        let pairs = m4::metrics::load_compare_set(&dir.path().join("truth"), &[dir.path().join("fluid")]).unwrap();
        let rows = compare_report(&pairs);
        (render_text(&rows), render_jsonl(&rows))
    };
    let first = report();
    assert_eq!(first, report());
    let direct = compare_report(&[ComparePair {
        scenario: "a".into(),
        label: "fluid".into(),
        truth: Some(truth),
        est: Some(est),
    }]);
    assert_eq!(first.1, render_jsonl(&direct));
}
