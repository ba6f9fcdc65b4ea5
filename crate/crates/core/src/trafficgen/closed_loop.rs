use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{SizeDist, TrafficError};
use crate::netmodel::{ecmp_route, FlowId, FlowSpec, NodeId, Topology};
use crate::source::ArrivalSource;

/// Closed-loop workload: a quarter of the racks are clients, each with a
/// backlog of reads from random storage hosts and at most `n_inflight`
/// outstanding at once.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosedLoopSpec {
    pub n_inflight: usize,
    pub flows_per_client: usize,
    pub size_dist: SizeDist,
    pub theta: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThroughputRecord {
    pub completed: usize,
    /// Time of the last completion.
    pub makespan: f64,
    /// Completed flows per second.
    pub throughput: f64,
}

/// [`ArrivalSource`] that releases a client's next backlog flow at the
/// completion time of one of its outstanding flows.
#[derive(Debug, Clone)]
pub struct ClosedLoopSource {
    n_inflight: usize,
    client_racks: Vec<usize>,
    backlog: Vec<VecDeque<FlowSpec>>,
    inflight: Vec<usize>,
    owner: BTreeMap<FlowId, usize>,
    ready: BTreeSet<(u64, FlowId)>,
    ready_specs: BTreeMap<FlowId, FlowSpec>,
    completions: Vec<f64>,
}

impl ClosedLoopSource {
    pub fn new(spec: &ClosedLoopSpec, topo: &Topology) -> Result<Self, TrafficError> {
        if spec.n_inflight == 0 {
            return Err(TrafficError::BadClosedLoop("inflight limit must be at least 1"));
        }
        if !(spec.theta > 0.0 && spec.theta.is_finite()) {
            return Err(TrafficError::NonPositive("theta"));
        }
        spec.size_dist.validate()?;
        let n_racks = topo.n_racks();
        if n_racks < 2 {
            return Err(TrafficError::BadClosedLoop("needs at least two racks"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let mut racks: Vec<usize> = (0..n_racks).collect();
        racks.shuffle(&mut rng);
        let n_clients = (n_racks / 4).max(1);
        let mut client_racks = racks[..n_clients].to_vec();
        client_racks.sort_unstable();
        let storage: Vec<NodeId> = racks[n_clients..]
            .iter()
            .flat_map(|&r| topo.hosts_in_rack(r))
            .collect();

        let mut backlog = Vec::with_capacity(n_clients);
        let mut owner = BTreeMap::new();
        let mut next_id = 0u32;
        for (ci, &rack) in client_racks.iter().enumerate() {
            let hosts = topo.hosts_in_rack(rack);
            let mut q = VecDeque::with_capacity(spec.flows_per_client);
            for _ in 0..spec.flows_per_client {
                let dst = hosts[rng.random_range(0..hosts.len())];
                let src = storage[rng.random_range(0..storage.len())];
                let size = spec.size_dist.sample(spec.theta, &mut rng);
                let id = FlowId(next_id);
                next_id += 1;
                let path = ecmp_route(topo, src, dst, id, spec.seed)?;
                owner.insert(id, ci);
                q.push_back(FlowSpec {
                    id,
                    src,
                    dst,
                    size,
                    arrival: 0.0,
                    path,
                });
            }
            backlog.push(q);
        }
        let mut me = Self {
            n_inflight: spec.n_inflight,
            inflight: vec![0; n_clients],
            client_racks,
            backlog,
            owner,
            ready: BTreeSet::new(),
            ready_specs: BTreeMap::new(),
            completions: Vec::new(),
        };
        for c in 0..n_clients {
            for _ in 0..spec.n_inflight {
                me.launch(c, 0.0);
            }
        }
        Ok(me)
    }

    fn launch(&mut self, client: usize, t: f64) {
        if self.inflight[client] >= self.n_inflight {
            return;
        }
        if let Some(mut f) = self.backlog[client].pop_front() {
            f.arrival = t;
            self.inflight[client] += 1;
            self.ready.insert((t.to_bits(), f.id));
            self.ready_specs.insert(f.id, f);
        }
    }

    pub fn client_racks(&self) -> &[usize] {
        &self.client_racks
    }

    pub fn n_inflight(&self) -> usize {
        self.n_inflight
    }

    /// Index into [`Self::client_racks`] of the client owning `flow`.
    pub fn client_of(&self, flow: FlowId) -> Option<usize> {
        self.owner.get(&flow).copied()
    }

    pub fn total_flows(&self) -> usize {
        self.owner.len()
    }

    pub fn report(&self) -> ThroughputRecord {
        let makespan = self.completions.iter().copied().fold(0.0, f64::max);
        let completed = self.completions.len();
        let throughput = if makespan > 0.0 {
            completed as f64 / makespan
        } else {
            0.0
        };
        ThroughputRecord {
            completed,
            makespan,
            throughput,
        }
    }
}

impl ArrivalSource for ClosedLoopSource {
    fn peek_time(&self) -> Option<f64> {
        self.ready.iter().next().map(|&(k, _)| f64::from_bits(k))
    }

    fn next_flow(&mut self) -> Option<FlowSpec> {
        let (_, id) = self.ready.pop_first()?;
        self.ready_specs.remove(&id)
    }

    fn on_completion(&mut self, flow: FlowId, time: f64) {
        let Some(c) = self.client_of(flow) else { return };
        self.completions.push(time);
        self.inflight[c] -= 1;
        self.launch(c, time);
    }
}
