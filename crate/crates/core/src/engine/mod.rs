//! The learned flow-level simulator.
//!
//! Each active flow and every link carries a hidden vector. An arrival or
//! departure touches only the connected component of flows sharing links
//! with the triggering flow: those hiddens go through a time GRU, three
//! GraphSAGE rounds on the bipartite flow/link graph and a space GRU, after
//! which the output heads re-predict completion times for the members.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::math::{log10, sigmoid, softplus};
use crate::netmodel::{
    encode_config, ideal_fct_for, ConfigError, EventKind, EventRecord, FlowError, FlowId,
    FlowSpec, LinkId, NetworkConfig, Topology, CONFIG_VECTOR_LEN,
};
use crate::nn::{gru_rows, mlp_rows, sage_layer, Activation, Matrix, ModelWeights, NnError};
use crate::snapshot::{
    affected_component, build_bipartite, departure_members, Component, FlowLinkIndex, SnapshotError,
};
use crate::source::{ArrivalSource, FlowResult, OrderingError, RunOutput};

mod probe;

pub use probe::{probe_forward, ProbeInput, ProbeOutput};

/// Departure predictions are kept at least this far past the clock.
pub const MIN_ADVANCE_S: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EngineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Ordering(#[from] OrderingError),
    #[error("flow {flow}: {source}")]
    BadFlow { flow: FlowId, source: FlowError },
    #[error("flow {0} is already active")]
    DuplicateFlow(FlowId),
    #[error("weights do not fit the model: {0}")]
    Weights(#[from] NnError),
    #[error(transparent)]
    Snapshot(#[from] SnapshotError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowHidden {
    pub spec: FlowSpec,
    pub h: Vec<f32>,
    pub ideal: f64,
    pub last_update: f64,
    pub departure: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkHidden {
    pub p: Vec<f32>,
    pub last_update: f64,
}

/// Predicted remaining bytes for the members of one event's snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemainingPrediction {
    pub event: usize,
    pub remaining: Vec<(FlowId, f64)>,
}

/// Predicted first-packet queue bytes along an arriving flow's path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueuePrediction {
    pub flow: FlowId,
    pub links: Vec<LinkId>,
    pub bytes: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct M4Trace {
    pub run: RunOutput,
    pub remaining: Vec<RemainingPrediction>,
    pub queues: Vec<QueuePrediction>,
}

/// What one processed event touched.
#[derive(Debug, Clone, PartialEq)]
pub struct StepInfo {
    pub event: EventRecord,
    pub flows: Vec<FlowId>,
    pub links: Vec<LinkId>,
}

/// Flow encoder input `[log10(size)/a, n_links/b]`.
pub fn flow_features(w: &ModelWeights, size: u64, n_links: usize) -> [f32; 2] {
    [
        (log10(size as f64) / w.norm.size_log_scale) as f32,
        (n_links as f64 / w.norm.nlinks_scale) as f32,
    ]
}

pub fn init_flow_hidden(w: &ModelWeights, size: u64, n_links: usize) -> Result<Vec<f32>, NnError> {
    w.flow_init.forward(&flow_features(w, size, n_links))
}

pub fn init_link_hidden(w: &ModelWeights, capacity: f64, max_capacity: f64) -> Result<Vec<f32>, NnError> {
    w.link_init.forward(&[(capacity / max_capacity) as f32])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Entity {
    Flow,
    Link,
}

/// Time GRU over `hs` with per-row elapsed time `dts` (seconds).
pub fn temporal_update(
    w: &ModelWeights,
    entity: Entity,
    hs: &Matrix,
    dts: &[f64],
    cfg: &[f32; CONFIG_VECTOR_LEN],
) -> Result<Matrix, NnError> {
    let mut x = Matrix::zeros(hs.rows(), 1 + CONFIG_VECTOR_LEN);
    for (r, &dt) in dts.iter().enumerate() {
        let row = x.row_mut(r);
        row[0] = (dt / w.norm.dt_scale_s) as f32;
        row[1..].copy_from_slice(cfg);
    }
    let p = match entity {
        Entity::Flow => &w.gru_flow_time,
        Entity::Link => &w.gru_link_time,
    };
    gru_rows(&x, hs, p)
}

/// GraphSAGE rounds on the snapshot followed by the space GRUs. Returns the
/// new flow and link hiddens in snapshot order.
pub fn spatial_update(
    w: &ModelWeights,
    snap: &crate::snapshot::BipartiteSnapshot,
    cfg: &[f32; CONFIG_VECTOR_LEN],
) -> Result<(Matrix, Matrix), NnError> {
    let adj = snap.adjacency();
    let mut x = snap.node_features();
    let n_layers = w.sage.len();
    for (i, layer) in w.sage.iter().enumerate() {
        let act = if i + 1 == n_layers {
            Activation::Identity
        } else {
            Activation::Relu
        };
        x = sage_layer(&adj, &x, layer, act)?;
    }
    let nf = snap.flows.len();
    let g = x.cols();
    let with_cfg = |rows: core::ops::Range<usize>| -> Matrix {
        let mut m = Matrix::zeros(rows.len(), g + CONFIG_VECTOR_LEN);
        for (o, r) in rows.enumerate() {
            let dst = m.row_mut(o);
            dst[..g].copy_from_slice(x.row(r));
            dst[g..].copy_from_slice(cfg);
        }
        m
    };
    let flows = gru_rows(&with_cfg(0..nf), &snap.flow_features, &w.gru_flow_space)?;
    let links = gru_rows(&with_cfg(nf..snap.n_nodes()), &snap.link_features, &w.gru_link_space)?;
    Ok((flows, links))
}

fn flow_head_input(w: &ModelWeights, hs: &Matrix, n_links: &[usize], cfg: &[f32; CONFIG_VECTOR_LEN]) -> Matrix {
    let h = hs.cols();
    let mut x = Matrix::zeros(hs.rows(), h + 1 + CONFIG_VECTOR_LEN);
    for r in 0..hs.rows() {
        let row = x.row_mut(r);
        row[..h].copy_from_slice(hs.row(r));
        row[h] = (n_links[r] as f64 / w.norm.nlinks_scale) as f32;
        row[h + 1..].copy_from_slice(cfg);
    }
    x
}

/// `1 + softplus(MLP-sldn)`, at least 1 for any input.
pub fn predict_slowdown(
    w: &ModelWeights,
    hs: &Matrix,
    n_links: &[usize],
    cfg: &[f32; CONFIG_VECTOR_LEN],
) -> Result<Vec<f64>, NnError> {
    let y = mlp_rows(&flow_head_input(w, hs, n_links, cfg), &w.mlp_sldn)?;
    Ok((0..y.rows()).map(|r| 1.0 + softplus(y.row(r)[0] as f64)).collect())
}

/// `size · sigmoid(MLP-size)`, within `[0, size]`.
pub fn predict_remaining(
    w: &ModelWeights,
    hs: &Matrix,
    n_links: &[usize],
    sizes: &[u64],
    cfg: &[f32; CONFIG_VECTOR_LEN],
) -> Result<Vec<f64>, NnError> {
    let y = mlp_rows(&flow_head_input(w, hs, n_links, cfg), &w.mlp_size)?;
    Ok((0..y.rows())
        .map(|r| sizes[r] as f64 * sigmoid(y.row(r)[0] as f64))
        .collect())
}

/// `buffer · sigmoid(MLP-queue)`, within `[0, buffer]`.
pub fn predict_queue(
    w: &ModelWeights,
    ps: &Matrix,
    cfg: &[f32; CONFIG_VECTOR_LEN],
    buffer_bytes: f64,
) -> Result<Vec<f64>, NnError> {
    let h = ps.cols();
    let mut x = Matrix::zeros(ps.rows(), h + CONFIG_VECTOR_LEN);
    for r in 0..ps.rows() {
        let row = x.row_mut(r);
        row[..h].copy_from_slice(ps.row(r));
        row[h..].copy_from_slice(cfg);
    }
    let y = mlp_rows(&x, &w.mlp_queue)?;
    Ok((0..y.rows())
        .map(|r| buffer_bytes * sigmoid(y.row(r)[0] as f64))
        .collect())
}

fn time_key(t: f64) -> u64 {
    // non-negative finite floats order like their bit patterns
    t.to_bits()
}

/// Event-driven state of one learned-simulator run.
pub struct Engine<'a> {
    w: &'a ModelWeights,
    topo: &'a Topology,
    cfg: [f32; CONFIG_VECTOR_LEN],
    buffer: f64,
    clock: f64,
    flows: BTreeMap<FlowId, FlowHidden>,
    links: Vec<LinkHidden>,
    index: FlowLinkIndex,
    departures: BTreeSet<(u64, FlowId)>,
    record: bool,
    trace: M4Trace,
}

impl<'a> Engine<'a> {
    pub fn new(w: &'a ModelWeights, topo: &'a Topology, net: &NetworkConfig) -> Result<Self, EngineError> {
        let cfg = encode_config(net)?.to_f32();
        let max_cap = topo.max_capacity();
        let links = topo
            .links()
            .iter()
            .map(|l| {
                Ok(LinkHidden {
                    p: init_link_hidden(w, l.capacity_bps, max_cap)?,
                    last_update: 0.0,
                })
            })
            .collect::<Result<Vec<_>, NnError>>()?;
        Ok(Self {
            w,
            topo,
            cfg,
            buffer: net.buffer_bytes as f64,
            clock: 0.0,
            flows: BTreeMap::new(),
            links,
            index: FlowLinkIndex::new(),
            departures: BTreeSet::new(),
            record: false,
            trace: M4Trace::default(),
        })
    }

    /// Also record remaining-size and queue predictions.
    pub fn with_predictions(mut self) -> Self {
        self.record = true;
        self
    }

    pub fn clock(&self) -> f64 {
        self.clock
    }

    pub fn flow(&self, id: FlowId) -> Option<&FlowHidden> {
        self.flows.get(&id)
    }

    pub fn flows(&self) -> impl Iterator<Item = &FlowHidden> {
        self.flows.values()
    }

    pub fn link(&self, id: LinkId) -> &LinkHidden {
        &self.links[id.index()]
    }

    pub fn n_active(&self) -> usize {
        self.flows.len()
    }

    pub fn trace(&self) -> &M4Trace {
        &self.trace
    }

    pub fn into_trace(self) -> M4Trace {
        self.trace
    }

    fn next_departure(&self) -> Option<(f64, FlowId)> {
        self.departures
            .iter()
            .next()
            .map(|&(k, id)| (f64::from_bits(k), id))
    }

    /// Processes the earlier of the next arrival and the next predicted
    /// departure (departures win ties). `None` once the source is exhausted
    /// and no flow is active.
    pub fn step<S: ArrivalSource + ?Sized>(&mut self, source: &mut S) -> Result<Option<StepInfo>, EngineError> {
        let ta = source.peek_time();
        let dep = self.next_departure();
        match (ta, dep) {
            (None, None) => Ok(None),
            (ta, Some((td, id))) if ta.is_none_or(|ta| td <= ta) => {
                let info = self.depart(id, td)?;
                source.on_completion(id, td);
                Ok(Some(info))
            }
            (Some(ta), _) => {
                let spec = source.next_flow().expect("peeked");
                if ta < self.clock {
                    return Err(OrderingError {
                        flow: spec.id,
                        time: ta,
                        clock: self.clock,
                    }
                    .into());
                }
                self.arrive(spec).map(Some)
            }
            (None, Some(_)) => unreachable!("handled by the departure arm"),
        }
    }

    fn arrive(&mut self, spec: FlowSpec) -> Result<StepInfo, EngineError> {
        spec.validate(self.topo)
            .map_err(|source| EngineError::BadFlow { flow: spec.id, source })?;
        if self.flows.contains_key(&spec.id) {
            return Err(EngineError::DuplicateFlow(spec.id));
        }
        self.clock = spec.arrival;
        let id = spec.id;
        let event = EventRecord {
            time: self.clock,
            kind: EventKind::Arrival,
            flow: id,
        };
        self.trace.run.events.push(event);
        let h = init_flow_hidden(self.w, spec.size, spec.path.len())?;
        let ideal = ideal_fct_for(spec.size, &spec.path, self.topo);
        self.index.insert(id, &spec.path);
        self.flows.insert(
            id,
            FlowHidden {
                spec,
                h,
                ideal,
                last_update: self.clock,
                departure: f64::INFINITY,
            },
        );
        let comp = affected_component(&self.index, id);
        self.update(&comp, Some(id))?;
        Ok(StepInfo {
            event,
            flows: comp.flows,
            links: comp.links,
        })
    }

    fn depart(&mut self, id: FlowId, time: f64) -> Result<StepInfo, EngineError> {
        self.clock = time;
        let event = EventRecord {
            time,
            kind: EventKind::Departure,
            flow: id,
        };
        self.trace.run.events.push(event);
        let members = departure_members(&self.index, id);
        let f = self.flows.remove(&id).expect("departing flow is active");
        self.departures.remove(&(time_key(f.departure), id));
        self.index.remove(id);
        self.trace.run.flows.push(FlowResult {
            id,
            src: f.spec.src,
            dst: f.spec.dst,
            size: f.spec.size,
            arrival: f.spec.arrival,
            fct: time - f.spec.arrival,
            ideal: f.ideal,
        });
        if !members.flows.is_empty() {
            self.update(&members, None)?;
        }
        Ok(StepInfo {
            event,
            flows: members.flows,
            links: members.links,
        })
    }

    /// Temporal update, spatial update and re-prediction for `comp`.
    fn update(&mut self, comp: &Component, arriving: Option<FlowId>) -> Result<(), EngineError> {
        let w = self.w;
        let hdim = w.dims.hidden;
        let now = self.clock;

        let mut fh = Vec::with_capacity(comp.flows.len() * hdim);
        let mut fdt = Vec::with_capacity(comp.flows.len());
        for id in &comp.flows {
            let f = &self.flows[id];
            fh.extend_from_slice(&f.h);
            fdt.push(now - f.last_update);
        }
        let mut lh = Vec::with_capacity(comp.links.len() * hdim);
        let mut ldt = Vec::with_capacity(comp.links.len());
        for l in &comp.links {
            let s = &self.links[l.index()];
            lh.extend_from_slice(&s.p);
            ldt.push(now - s.last_update);
        }
        let fh = Matrix::from_vec(comp.flows.len(), hdim, fh)?;
        let lh = Matrix::from_vec(comp.links.len(), hdim, lh)?;
        let f_tilde = temporal_update(w, Entity::Flow, &fh, &fdt, &self.cfg)?;
        let l_tilde = temporal_update(w, Entity::Link, &lh, &ldt, &self.cfg)?;

        let n_links: Vec<usize> = comp.flows.iter().map(|id| self.flows[id].spec.path.len()).collect();
        if self.record {
            let sizes: Vec<u64> = comp.flows.iter().map(|id| self.flows[id].spec.size).collect();
            let rem = predict_remaining(w, &f_tilde, &n_links, &sizes, &self.cfg)?;
            self.trace.remaining.push(RemainingPrediction {
                event: self.trace.run.events.len() - 1,
                remaining: comp.flows.iter().copied().zip(rem).collect(),
            });
            if let Some(a) = arriving {
                let path = self.flows[&a].spec.path.clone();
                let mut ps = Matrix::zeros(path.len(), hdim);
                for (r, l) in path.iter().enumerate() {
                    let j = comp.links.binary_search(l).expect("path links are members");
                    ps.row_mut(r).copy_from_slice(l_tilde.row(j));
                }
                let bytes = predict_queue(w, &ps, &self.cfg, self.buffer)?;
                self.trace.queues.push(QueuePrediction {
                    flow: a,
                    links: path,
                    bytes,
                });
            }
        }

        let snap = {
            let flow_rows: BTreeMap<FlowId, usize> =
                comp.flows.iter().enumerate().map(|(i, &id)| (id, i)).collect();
            let link_rows: BTreeMap<LinkId, usize> =
                comp.links.iter().enumerate().map(|(i, &l)| (l, i)).collect();
            build_bipartite(
                comp,
                &self.index,
                hdim,
                |id| flow_rows.get(&id).map(|&r| f_tilde.row(r)),
                |l| link_rows.get(&l).map(|&r| l_tilde.row(r)),
            )?
        };
        let (f_new, l_new) = spatial_update(w, &snap, &self.cfg)?;
        let sldn = predict_slowdown(w, &f_new, &n_links, &self.cfg)?;

        for (r, id) in comp.flows.iter().enumerate() {
            let f = self.flows.get_mut(id).expect("member is active");
            f.h.copy_from_slice(f_new.row(r));
            f.last_update = now;
            let dep = (f.spec.arrival + sldn[r] * f.ideal).max(now + MIN_ADVANCE_S);
            self.departures.remove(&(time_key(f.departure), *id));
            f.departure = dep;
            self.departures.insert((time_key(dep), *id));
        }
        for (r, l) in comp.links.iter().enumerate() {
            let s = &mut self.links[l.index()];
            s.p.copy_from_slice(l_new.row(r));
            s.last_update = now;
        }
        Ok(())
    }
}

/// Runs the learned simulator to completion.
pub fn m4_run<S: ArrivalSource + ?Sized>(
    source: &mut S,
    topo: &Topology,
    net: &NetworkConfig,
    w: &ModelWeights,
    record_predictions: bool,
) -> Result<M4Trace, EngineError> {
    let mut e = Engine::new(w, topo, net)?;
    if record_predictions {
        e = e.with_predictions();
    }
    while e.step(source)?.is_some() {}
    Ok(e.into_trace())
}

#[cfg(test)]
mod tests;
