//! Single-flow forward pass used to cross-check exported weights.
//!
//! The probe is one flow arriving at `dt_s` on an otherwise idle path whose
//! links were initialized at time 0. Its outputs equal what [`super::Engine`]
//! computes for the first arrival of a run with the same path.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{
    init_flow_hidden, init_link_hidden, predict_queue, predict_remaining, predict_slowdown,
    spatial_update, temporal_update, EngineError, Entity,
};
use crate::netmodel::{encode_config, FlowId, LinkId, NetworkConfig};
use crate::nn::{Matrix, ModelWeights};
use crate::snapshot::{affected_component, build_bipartite, FlowLinkIndex};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeInput {
    pub config: NetworkConfig,
    /// Capacities along the path, in path order.
    pub link_capacities_bps: Vec<f64>,
    /// Normalizer for link capacities; the fabric's largest capacity.
    pub max_capacity_bps: f64,
    pub size: u64,
    /// Time since the links were last updated.
    pub dt_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeOutput {
    pub slowdown: f64,
    pub remaining: f64,
    /// Queue bytes per path link.
    pub queue: Vec<f64>,
}

pub fn probe_forward(w: &ModelWeights, input: &ProbeInput) -> Result<ProbeOutput, EngineError> {
    let cfg = encode_config(&input.config)?.to_f32();
    let hdim = w.dims.hidden;
    let n = input.link_capacities_bps.len();
    let path: Vec<LinkId> = (0..n as u32).map(LinkId).collect();
    let fid = FlowId(0);
    let mut index = FlowLinkIndex::new();
    index.insert(fid, &path);
    let comp = affected_component(&index, fid);

    let fh = Matrix::from_vec(1, hdim, init_flow_hidden(w, input.size, n)?)?;
    let mut lh = Vec::with_capacity(n * hdim);
    for &c in &input.link_capacities_bps {
        lh.extend(init_link_hidden(w, c, input.max_capacity_bps)?);
    }
    let lh = Matrix::from_vec(n, hdim, lh)?;
    let f_tilde = temporal_update(w, Entity::Flow, &fh, &[0.0], &cfg)?;
    let l_tilde = temporal_update(w, Entity::Link, &lh, &alloc::vec![input.dt_s; n], &cfg)?;

    let remaining = predict_remaining(w, &f_tilde, &[n], &[input.size], &cfg)?[0];
    let queue = predict_queue(w, &l_tilde, &cfg, input.config.buffer_bytes as f64)?;
    let snap = build_bipartite(
        &comp,
        &index,
        hdim,
        |_| Some(f_tilde.row(0)),
        |l| Some(l_tilde.row(l.index())),
    )?;
    let (f_new, _) = spatial_update(w, &snap, &cfg)?;
    let slowdown = predict_slowdown(w, &f_new, &[n], &cfg)?[0];
    Ok(ProbeOutput {
        slowdown,
        remaining,
        queue,
    })
}
