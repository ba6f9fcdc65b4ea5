use alloc::vec;
use alloc::vec::Vec;

use proptest::prelude::*;

use super::*;
use crate::netmodel::{build_fattree, ecmp_route, NodeId};
use crate::nn::{gru_cell, ModelDims};
use crate::source::ScheduleSource;

fn dims() -> ModelDims {
    ModelDims::small(8, 6, 5)
}

fn flow(topo: &Topology, id: u32, src: u32, dst: u32, size: u64, at: f64) -> FlowSpec {
    FlowSpec {
        id: FlowId(id),
        src: NodeId(src),
        dst: NodeId(dst),
        size,
        arrival: at,
        path: ecmp_route(topo, NodeId(src), NodeId(dst), FlowId(id), 1).unwrap(),
    }
}

/// Slowdown head pinned to a huge negative output: `1 + softplus(-200)`
/// rounds to exactly 1.
fn unit_slowdown_weights() -> ModelWeights {
    let mut w = ModelWeights::random(dims(), 5, 1.0);
    w.mlp_sldn.layer2.weight.iter_mut().for_each(|v| *v = 0.0);
    w.mlp_sldn.layer2.bias[0] = -200.0;
    w
}

fn cfg() -> NetworkConfig {
    NetworkConfig::default()
}

#[test]
fn empty_schedule() {
    let topo = build_fattree(1, 2, 2, 1).unwrap();
    let w = ModelWeights::random(dims(), 0, 1.0);
    let t = m4_run(&mut ScheduleSource::new(vec![]), &topo, &cfg(), &w, false).unwrap();
    assert!(t.run.flows.is_empty() && t.run.events.is_empty());
}

#[test]
fn single_flow_takes_predicted_slowdown() {
    let topo = build_fattree(2, 2, 2, 2).unwrap();
    let w = ModelWeights::random(dims(), 1, 1.0);
    let f = flow(&topo, 0, 0, 7, 50_000, 1e-6);
    let mut e = Engine::new(&w, &topo, &cfg()).unwrap();
    let mut src = ScheduleSource::new(vec![f.clone()]);
    e.step(&mut src).unwrap().unwrap();
    let fh = e.flow(FlowId(0)).unwrap();
    let hs = Matrix::from_vec(1, 8, fh.h.clone()).unwrap();
    let s = predict_slowdown(&w, &hs, &[f.path.len()], &e.cfg).unwrap()[0];
    let want = s * fh.ideal;
    while e.step(&mut src).unwrap().is_some() {}
    let t = e.into_trace();
    assert_eq!(t.run.events.len(), 2);
    assert!((t.run.flows[0].fct - want).abs() <= 1e-12 * want);
}

#[test]
fn unit_slowdown_bundle_gives_ideal_fcts_under_contention() {
    let topo = build_fattree(2, 4, 4, 1).unwrap();
    let w = unit_slowdown_weights();
    let fs: Vec<FlowSpec> = (0..30)
        .map(|i| flow(&topo, i, i % 4, 16 + i % 3, 10_000 + 1000 * i as u64, i as f64 * 1e-7))
        .collect();
    let t = m4_run(&mut ScheduleSource::new(fs), &topo, &cfg(), &w, false).unwrap();
    assert_eq!(t.run.flows.len(), 30);
    for r in &t.run.flows {
        assert!((r.slowdown() - 1.0).abs() < 1e-9, "{}", r.slowdown());
    }
}

#[test]
fn encoder_inputs_and_init() {
    let topo = build_fattree(1, 2, 2, 1).unwrap();
    let w = ModelWeights::random(dims(), 2, 1.0);
    assert_eq!(flow_features(&w, 10_000_000, 4), [1.0, 0.5]);
    let a = init_link_hidden(&w, 10e9, 10e9).unwrap();
    let b = init_link_hidden(&w, 10e9, 10e9).unwrap();
    assert_eq!(a, b);
    let z = ModelWeights::zeros(dims());
    assert!(init_flow_hidden(&z, 1234, 3).unwrap().iter().all(|&v| v == 0.0));
    let e = Engine::new(&w, &topo, &cfg()).unwrap();
    assert_eq!(e.link(LinkId(0)).p, e.link(LinkId(1)).p);
}

#[test]
fn zero_dt_still_applies_one_step() {
    let w = ModelWeights::random(dims(), 3, 1.0);
    let cfgv = encode_config(&cfg()).unwrap().to_f32();
    let h: Vec<f32> = (0..8).map(|i| i as f32 * 0.1 - 0.3).collect();
    let hs = Matrix::from_vec(1, 8, h.clone()).unwrap();
    let out = temporal_update(&w, Entity::Flow, &hs, &[0.0], &cfgv).unwrap();
    let mut x = vec![0.0f32];
    x.extend_from_slice(&cfgv);
    assert_eq!(out.row(0), gru_cell(&x, &h, &w.gru_flow_time).unwrap().as_slice());
    assert_ne!(out.row(0), h.as_slice());
}

#[test]
fn symmetric_flows_are_interchangeable() {
    // Two same-rack senders to one receiver with equal sizes and arrival
    // times. Swapping their ids swaps which one is processed first, so the
    // state of sender 0 in one run must equal that of sender 1 in the other.
    let topo = build_fattree(1, 2, 3, 1).unwrap();
    let w = ModelWeights::random(dims(), 4, 1.0);
    let run = |ids: [u32; 2]| {
        let mut fs = vec![flow(&topo, ids[0], 0, 2, 30_000, 0.0), flow(&topo, ids[1], 1, 2, 30_000, 0.0)];
        fs.sort_by_key(|f| f.id);
        let mut e = Engine::new(&w, &topo, &cfg()).unwrap();
        let mut src = ScheduleSource::new(fs);
        e.step(&mut src).unwrap();
        e.step(&mut src).unwrap();
        let by_src = |s: u32| {
            let f = e.flows().find(|f| f.spec.src == NodeId(s)).unwrap();
            (f.h.clone(), f.departure)
        };
        (by_src(0), by_src(1))
    };
    let (a0, a1) = run([0, 1]);
    let (b0, b1) = run([1, 0]);
    assert_ne!(a0, a1);
    assert_eq!(a0, b1);
    assert_eq!(a1, b0);
}

#[test]
fn ordering_error() {
    let topo = build_fattree(1, 2, 2, 1).unwrap();
    let w = ModelWeights::random(dims(), 0, 1.0);
    let fs = vec![flow(&topo, 0, 0, 3, 1000, 1.0), flow(&topo, 1, 1, 2, 1000, 0.5)];
    let err = m4_run(&mut ScheduleSource::new(fs), &topo, &cfg(), &w, false).unwrap_err();
    assert!(matches!(err, EngineError::Ordering(_)));
}

#[test]
fn predictions_are_recorded() {
    let topo = build_fattree(2, 2, 2, 1).unwrap();
    let w = ModelWeights::random(dims(), 6, 1.0);
    let fs: Vec<FlowSpec> = (0..5).map(|i| flow(&topo, i, i, 7 - i, 5_000, i as f64 * 1e-6)).collect();
    let t = m4_run(&mut ScheduleSource::new(fs.clone()), &topo, &cfg(), &w, true).unwrap();
    assert_eq!(t.queues.len(), 5);
    for q in &t.queues {
        assert!(q.bytes.iter().all(|&b| (0.0..=100_000.0).contains(&b)));
    }
    for r in &t.remaining {
        for &(id, rem) in &r.remaining {
            let size = fs[id.0 as usize].size as f64;
            assert!((0.0..=size).contains(&rem));
        }
    }
}

fn scenario() -> impl Strategy<Value = Vec<(u32, u32, u64, u32)>> {
    prop::collection::vec((0u32..8, 0u32..8, 1_000u64..200_000, 0u32..50), 1..25)
}

fn schedule(topo: &Topology, raw: &[(u32, u32, u64, u32)]) -> Vec<FlowSpec> {
    let mut fs: Vec<FlowSpec> = raw
        .iter()
        .enumerate()
        .map(|(i, &(s, d, size, t))| {
            let d = if d == s { (d + 1) % 8 } else { d };
            flow(topo, i as u32, s, d, size, t as f64 * 2e-6)
        })
        .collect();
    fs.sort_by(|a, b| a.arrival.total_cmp(&b.arrival).then(a.id.cmp(&b.id)));
    fs
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn non_members_are_untouched(raw in scenario(), seed in 0u64..1000) {
        let topo = build_fattree(2, 2, 2, 1).unwrap();
        let w = ModelWeights::random(dims(), seed, 2.0);
        let mut e = Engine::new(&w, &topo, &cfg()).unwrap();
        let mut src = ScheduleSource::new(schedule(&topo, &raw));
        loop {
            let flows_before: Vec<FlowHidden> = e.flows().cloned().collect();
            let links_before: Vec<LinkHidden> =
                (0..topo.n_links()).map(|l| e.link(LinkId(l as u32)).clone()).collect();
            let Some(info) = e.step(&mut src).unwrap() else { break };
            for f in &flows_before {
                if info.flows.contains(&f.spec.id) || f.spec.id == info.event.flow {
                    continue;
                }
                let now = e.flow(f.spec.id).unwrap();
                prop_assert!(now.h.iter().zip(&f.h).all(|(a, b)| a.to_bits() == b.to_bits()));
                prop_assert_eq!(now.departure.to_bits(), f.departure.to_bits());
            }
            for (l, before) in links_before.iter().enumerate() {
                if !info.links.contains(&LinkId(l as u32)) {
                    prop_assert_eq!(e.link(LinkId(l as u32)), before);
                }
            }
            for f in e.flows() {
                prop_assert!(f.departure > f.spec.arrival);
                prop_assert!(f.departure >= e.clock());
            }
        }
    }

    #[test]
    fn runs_are_deterministic_and_ordered(raw in scenario(), seed in 0u64..1000) {
        let topo = build_fattree(2, 2, 2, 1).unwrap();
        let w = ModelWeights::random(dims(), seed, 2.0);
        let fs = schedule(&topo, &raw);
        let a = m4_run(&mut ScheduleSource::new(fs.clone()), &topo, &cfg(), &w, true).unwrap();
        let b = m4_run(&mut ScheduleSource::new(fs.clone()), &topo, &cfg(), &w, true).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert!(a.run.events.windows(2).all(|p| p[0].time <= p[1].time));
        prop_assert_eq!(a.run.events.len(), 2 * fs.len());
        for r in &a.run.flows {
            prop_assert!(r.slowdown() >= 1.0 - 1e-12);
            prop_assert!(r.fct > 0.0);
        }
    }

    #[test]
    fn heads_respect_ranges(h in prop::collection::vec(-1e4f32..1e4, 8), n in 1usize..9, size in 1u64..1u64 << 40) {
        let w = ModelWeights::random(dims(), 9, 3.0);
        let cfgv = encode_config(&cfg()).unwrap().to_f32();
        let hs = Matrix::from_vec(1, 8, h).unwrap();
        prop_assert!(predict_slowdown(&w, &hs, &[n], &cfgv).unwrap()[0] >= 1.0);
        let r = predict_remaining(&w, &hs, &[n], &[size], &cfgv).unwrap()[0];
        prop_assert!(r >= 0.0 && r <= size as f64);
        let q = predict_queue(&w, &hs, &cfgv, 123_000.0).unwrap()[0];
        prop_assert!((0.0..=123_000.0).contains(&q));
    }
}

#[test]
fn probe_matches_first_engine_arrival() {
    let topo = build_fattree(2, 2, 2, 2).unwrap();
    let w = ModelWeights::random(dims(), 9, 1.0);
    let f = flow(&topo, 0, 1, 6, 37_000, 2.5e-6);
    let mut e = Engine::new(&w, &topo, &cfg()).unwrap().with_predictions();
    let mut src = ScheduleSource::new(vec![f.clone()]);
    e.step(&mut src).unwrap().unwrap();
    let dep = e.flow(FlowId(0)).unwrap().departure;
    let ideal = e.flow(FlowId(0)).unwrap().ideal;
    let input = ProbeInput {
        config: cfg(),
        link_capacities_bps: f.path.iter().map(|&l| topo.link(l).capacity_bps).collect(),
        max_capacity_bps: topo.max_capacity(),
        size: f.size,
        dt_s: f.arrival,
    };
    let out = probe_forward(&w, &input).unwrap();
    let t = e.trace();
    assert_eq!(out.queue, t.queues[0].bytes);
    assert_eq!(out.remaining, t.remaining[0].remaining[0].1);
    let s = (dep - f.arrival) / ideal;
    assert!((out.slowdown - s).abs() < 1e-9 * s, "{} vs {}", out.slowdown, s);
}
