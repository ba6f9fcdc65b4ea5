//! Supervised episodes built from packet-level ground truth.
//!
//! Each episode replays the reference event order through the same
//! membership rule the learned engine applies, so event `k` of an episode
//! lists exactly the flows and links the engine would update at its `k`-th
//! event under teacher forcing.
//!
//! Store layout under the output directory:
//!
//! - `episodes/ep_NNNNN.json`: one [`Episode`] each.
//! - `manifest.json`: [`Manifest`] with the train/validation split and any
//!   skipped episodes.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use m4_core::netmodel::{
    encode_config, CcProtocol, EventKind, FlowId, LinkId, NetworkConfig, ParamRange, BUFFER_RANGE,
    DCTCP_K_RANGE, INIT_WINDOW_RANGE, TIMELY_THIGH_RANGE, TIMELY_TLOW_RANGE,
};
use m4_core::packet::{GroundTruthTrace, PacketConfig};
use m4_core::snapshot::{affected_component, departure_members, Component, FlowLinkIndex};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{io_err, json_err, Error, Result};
use crate::runner::packet_trace;
use crate::scenario::{MatrixConfig, Prepared, Scenario, SizeConfig, TopologyConfig, WorkloadConfig};

/// One in this many episodes goes to validation.
pub const VALIDATION_EVERY: usize = 10;

/// Inclusive sampling interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval<T> {
    pub min: T,
    pub max: T,
}

impl Interval<f64> {
    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        if self.min >= self.max {
            self.min
        } else {
            rng.random_range(self.min..=self.max)
        }
    }
}

impl Interval<u64> {
    fn sample(&self, rng: &mut ChaCha8Rng) -> u64 {
        if self.min >= self.max {
            self.min
        } else {
            rng.random_range(self.min..=self.max)
        }
    }

    fn within(&self, r: ParamRange) -> bool {
        self.min <= self.max && self.min >= r.min && self.max <= r.max
    }
}

fn range_of(r: ParamRange) -> Interval<u64> {
    Interval { min: r.min, max: r.max }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    Dctcp,
    Timely,
}

/// Distribution over scenarios. Configuration intervals default to the
/// full supported parameter ranges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpace {
    pub topology: TopologyConfig,
    pub n_flows: Interval<u64>,
    pub sizes: Vec<SizeConfig>,
    /// Mean flow size, bytes.
    pub theta: Interval<f64>,
    pub sigma: Interval<f64>,
    pub max_load: Interval<f64>,
    pub matrices: Vec<MatrixConfig>,
    #[serde(default = "default_protocols")]
    pub protocols: Vec<Protocol>,
    #[serde(default = "default_buffer")]
    pub buffer_bytes: Interval<u64>,
    #[serde(default = "default_window")]
    pub init_window_bytes: Interval<u64>,
    #[serde(default = "default_k")]
    pub dctcp_k_bytes: Interval<u64>,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_protocols() -> Vec<Protocol> {
    vec![Protocol::Dctcp]
}

fn default_buffer() -> Interval<u64> {
    range_of(BUFFER_RANGE)
}

fn default_window() -> Interval<u64> {
    range_of(INIT_WINDOW_RANGE)
}

fn default_k() -> Interval<u64> {
    range_of(DCTCP_K_RANGE)
}

impl ScenarioSpace {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        let mut s: ScenarioSpace = serde_json::from_str(&text).map_err(json_err(path))?;
        s.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        s.validate()?;
        Ok(s)
    }

    fn fail(detail: &str) -> Error {
        Error::Scenario {
            id: "scenario space".into(),
            detail: detail.into(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sizes.is_empty() || self.matrices.is_empty() || self.protocols.is_empty() {
            return Err(Self::fail("sizes, matrices and protocols must be non-empty"));
        }
        if !self.buffer_bytes.within(BUFFER_RANGE)
            || !self.init_window_bytes.within(INIT_WINDOW_RANGE)
            || !self.dctcp_k_bytes.within(DCTCP_K_RANGE)
        {
            return Err(Self::fail("configuration intervals exceed the supported ranges"));
        }
        if self.n_flows.min == 0 || self.n_flows.min > self.n_flows.max {
            return Err(Self::fail("n_flows interval must be positive and ordered"));
        }
        Ok(())
    }

    /// Scenario `index` of the stream seeded by `seed`.
    pub fn sample(&self, seed: u64, index: usize) -> Scenario {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index as u64);
        let cc = match *self.protocols.choose(&mut rng).expect("non-empty") {
            Protocol::Dctcp => CcProtocol::Dctcp {
                k_bytes: self.dctcp_k_bytes.sample(&mut rng),
            },
            Protocol::Timely => CcProtocol::Timely {
                t_low_ns: range_of(TIMELY_TLOW_RANGE).sample(&mut rng),
                t_high_ns: range_of(TIMELY_THIGH_RANGE).sample(&mut rng),
            },
        };
        let network = NetworkConfig {
            cc,
            buffer_bytes: self.buffer_bytes.sample(&mut rng),
            init_window_bytes: self.init_window_bytes.sample(&mut rng),
        };
        let workload = WorkloadConfig::OpenLoop {
            size: self.sizes.choose(&mut rng).expect("non-empty").clone(),
            theta: self.theta.sample(&mut rng),
            sigma: self.sigma.sample(&mut rng),
            max_load: self.max_load.sample(&mut rng),
            matrix: self.matrices.choose(&mut rng).expect("non-empty").clone(),
            n_flows: self.n_flows.sample(&mut rng) as usize,
        };
        Scenario {
            id: format!("ep_{index:05}"),
            seed: rng.random(),
            topology: self.topology.clone(),
            network,
            workload,
            backend: None,
            base_dir: self.base_dir.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeFlow {
    pub id: u32,
    pub src: u32,
    pub dst: u32,
    pub size: u64,
    pub arrival: f64,
    pub path: Vec<u32>,
    pub ideal: f64,
    pub fct: f64,
    pub slowdown: f64,
}

/// One flow-level event with the snapshot it updates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeEvent {
    pub time: f64,
    pub kind: EventKind,
    pub flow: u32,
    /// Member flows, ascending id.
    pub flows: Vec<u32>,
    /// Seconds since each member flow was last updated.
    pub flow_dt: Vec<f64>,
    /// Member links, ascending id.
    pub links: Vec<u32>,
    pub link_dt: Vec<f64>,
    /// Reference remaining bytes of each member flow after the event.
    pub remaining: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeQueue {
    pub flow: u32,
    /// Path order.
    pub links: Vec<u32>,
    pub bytes: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Episode {
    pub id: String,
    pub scenario: Scenario,
    pub config: NetworkConfig,
    pub config_vector: Vec<f64>,
    /// Capacity of every directed link, indexed by link id.
    pub link_capacity_bps: Vec<f64>,
    pub max_capacity_bps: f64,
    /// Ascending id.
    pub flows: Vec<EpisodeFlow>,
    pub events: Vec<EpisodeEvent>,
    /// One per arrival, ascending flow id.
    pub queues: Vec<EpisodeQueue>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Skipped {
    pub id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub seed: u64,
    pub count: usize,
    pub train: Vec<String>,
    pub validation: Vec<String>,
    pub skipped: Vec<Skipped>,
}

/// Converts a reference trace into an episode.
pub fn episode_from_trace(scenario: &Scenario, prep: &Prepared, trace: &GroundTruthTrace) -> Result<Episode> {
    let specs = match &prep.arrivals {
        crate::scenario::Arrivals::Open(f) => f,
        crate::scenario::Arrivals::Closed(_) => {
            return Err(Error::Scenario {
                id: scenario.id.clone(),
                detail: "episodes need an open-loop workload".into(),
            })
        }
    };
    let by_id: BTreeMap<FlowId, _> = specs.iter().map(|f| (f.id, f)).collect();
    let results: BTreeMap<FlowId, _> = trace.flows.iter().map(|r| (r.id, r)).collect();
    let mut flows = Vec::with_capacity(specs.len());
    for (id, spec) in &by_id {
        let r = results.get(id).ok_or_else(|| Error::Scenario {
            id: scenario.id.clone(),
            detail: format!("flow {id} never completed"),
        })?;
        flows.push(EpisodeFlow {
            id: id.0,
            src: spec.src.0,
            dst: spec.dst.0,
            size: spec.size,
            arrival: spec.arrival,
            path: spec.path.iter().map(|l| l.0).collect(),
            ideal: r.ideal,
            fct: r.fct,
            slowdown: r.slowdown(),
        });
    }

    let mut index = FlowLinkIndex::new();
    let mut flow_seen: BTreeMap<FlowId, f64> = BTreeMap::new();
    let mut link_seen = vec![0.0f64; prep.topo.n_links()];
    let mut events = Vec::with_capacity(trace.events.len());
    for (ev, sample) in trace.events.iter().zip(&trace.remaining) {
        let comp: Component = match ev.kind {
            EventKind::Arrival => {
                index.insert(ev.flow, &by_id[&ev.flow].path);
                flow_seen.insert(ev.flow, ev.time);
                affected_component(&index, ev.flow)
            }
            EventKind::Departure => {
                let m = departure_members(&index, ev.flow);
                index.remove(ev.flow);
                flow_seen.remove(&ev.flow);
                m
            }
        };
        let rem: BTreeMap<FlowId, u64> = sample.remaining.iter().copied().collect();
        let mut e = EpisodeEvent {
            time: ev.time,
            kind: ev.kind,
            flow: ev.flow.0,
            flows: comp.flows.iter().map(|f| f.0).collect(),
            flow_dt: Vec::with_capacity(comp.flows.len()),
            links: comp.links.iter().map(|l| l.0).collect(),
            link_dt: Vec::with_capacity(comp.links.len()),
            remaining: Vec::with_capacity(comp.flows.len()),
        };
        for f in &comp.flows {
            let seen = flow_seen.get_mut(f).expect("member is active");
            e.flow_dt.push(ev.time - *seen);
            *seen = ev.time;
            e.remaining.push(rem.get(f).copied().unwrap_or(0));
        }
        for l in &comp.links {
            let seen = &mut link_seen[l.index()];
            e.link_dt.push(ev.time - *seen);
            *seen = ev.time;
        }
        events.push(e);
    }
    let queues = trace
        .first_packet_queue
        .iter()
        .map(|q| EpisodeQueue {
            flow: q.flow.0,
            links: q.links.iter().map(|l: &LinkId| l.0).collect(),
            bytes: q.bytes.clone(),
        })
        .collect();
    Ok(Episode {
        id: scenario.id.clone(),
        scenario: scenario.clone(),
        config: prep.net,
        config_vector: encode_config(&prep.net)?.as_slice().to_vec(),
        link_capacity_bps: prep.topo.links().iter().map(|l| l.capacity_bps).collect(),
        max_capacity_bps: prep.topo.max_capacity(),
        flows,
        events,
        queues,
    })
}

/// Samples, simulates and converts one scenario.
pub fn build_episode(scenario: &Scenario) -> Result<Episode> {
    let prep = scenario.prepare()?;
    let (trace, _) = packet_trace(&prep, PacketConfig::from_network(&prep.net)?)?;
    episode_from_trace(scenario, &prep, &trace)
}

/// Writes `count` episodes and the manifest. Failed episodes are logged and
/// listed under `skipped`.
pub fn build_dataset(space: &ScenarioSpace, count: usize, seed: u64, out: &Path) -> Result<Manifest> {
    let dir = out.join("episodes");
    fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    let mut manifest = Manifest {
        seed,
        count,
        train: Vec::new(),
        validation: Vec::new(),
        skipped: Vec::new(),
    };
    for i in 0..count {
        let scenario = space.sample(seed, i);
        match build_episode(&scenario) {
            Ok(ep) => {
                let path = dir.join(format!("{}.json", ep.id));
                let text = serde_json::to_string(&ep).map_err(json_err(&path))?;
                fs::write(&path, text).map_err(io_err(&path))?;
                log::info!("{}: {} flows, {} events", ep.id, ep.flows.len(), ep.events.len());
                if i % VALIDATION_EVERY == VALIDATION_EVERY - 1 {
                    manifest.validation.push(ep.id);
                } else {
                    manifest.train.push(ep.id);
                }
            }
            Err(e) => {
                log::warn!("{}: skipped: {e}", scenario.id);
                manifest.skipped.push(Skipped {
                    id: scenario.id,
                    reason: e.to_string(),
                });
            }
        }
    }
    let path = out.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).map_err(json_err(&path))?;
    fs::write(&path, text + "\n").map_err(io_err(&path))?;
    Ok(manifest)
}

pub fn load_episode(path: &Path) -> Result<Episode> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(json_err(path))
}
