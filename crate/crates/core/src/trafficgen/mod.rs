//! Synthetic workloads: open-loop schedules calibrated to a target link
//! load, and a closed-loop client/storage source.

mod closed_loop;
mod dist;
mod matrix;

pub use closed_loop::{ClosedLoopSource, ClosedLoopSpec, ThroughputRecord};
pub use dist::{EmpiricalCdf, SizeDist, PARETO_SHAPE};
pub use matrix::TrafficMatrix;

use alloc::vec;
use alloc::vec::Vec;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::LogNormal;
use serde::{Deserialize, Serialize};

use crate::math::ln;
use crate::netmodel::{ecmp_route, FlowId, FlowSpec, NodeId, RouteError, Router, Topology};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TrafficError {
    #[error("max_load {0} must lie strictly between 0 and 1")]
    BadLoad(f64),
    #[error("{0} must be positive and finite")]
    NonPositive(&'static str),
    #[error("traffic matrix: {0}")]
    BadMatrix(&'static str),
    #[error("empirical CDF: {0}")]
    BadCdf(&'static str),
    #[error("no link carries traffic under this matrix")]
    NoLoad,
    #[error("closed loop: {0}")]
    BadClosedLoop(&'static str),
    #[error(transparent)]
    Route(#[from] RouteError),
}

/// Open-loop workload description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkloadSpec {
    pub size_dist: SizeDist,
    /// Mean flow size in bytes for the parametric distributions.
    pub theta: f64,
    /// Log-normal shape of the inter-arrival times.
    pub sigma: f64,
    /// Target expected utilization of the most loaded link.
    pub max_load: f64,
    pub matrix: TrafficMatrix,
    pub n_flows: usize,
    pub seed: u64,
}

impl WorkloadSpec {
    fn validate(&self, topo: &Topology) -> Result<(), TrafficError> {
        if !(self.max_load > 0.0 && self.max_load < 1.0) {
            return Err(TrafficError::BadLoad(self.max_load));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(TrafficError::NonPositive("sigma"));
        }
        if !(self.theta > 0.0 && self.theta.is_finite()) {
            return Err(TrafficError::NonPositive("theta"));
        }
        self.size_dist.validate()?;
        self.matrix.validate(topo)
    }
}

/// Expected fraction of one flow's bytes crossing each directed link,
/// averaged over the matrix and ECMP.
pub fn expected_link_usage(topo: &Topology, matrix: &TrafficMatrix) -> Result<Vec<f64>, TrafficError> {
    matrix.validate(topo)?;
    let router = Router::new(topo);
    let total = matrix.total();
    let mut usage = vec![0.0; topo.n_links()];
    for (i, j, wgt) in matrix.entries() {
        let p = wgt / total;
        let pairs: Vec<(NodeId, NodeId)> = topo
            .hosts_in_rack(i)
            .into_iter()
            .flat_map(|s| topo.hosts_in_rack(j).into_iter().map(move |d| (s, d)))
            .filter(|(s, d)| s != d)
            .collect();
        let share = p / pairs.len() as f64;
        for (s, d) in pairs {
            for (l, u) in router.link_usage(s, d) {
                usage[l.index()] += share * u;
            }
        }
    }
    Ok(usage)
}

/// Flow arrival rate (flows/s) that puts the busiest link at `max_load`.
pub fn calibrated_rate(
    topo: &Topology,
    matrix: &TrafficMatrix,
    mean_size: f64,
    max_load: f64,
) -> Result<f64, TrafficError> {
    let usage = expected_link_usage(topo, matrix)?;
    let worst = topo
        .links()
        .iter()
        .map(|l| usage[l.id.index()] * mean_size * 8.0 / l.capacity_bps)
        .fold(0.0, f64::max);
    if worst <= 0.0 {
        return Err(TrafficError::NoLoad);
    }
    Ok(max_load / worst)
}

/// Samples an arrival-sorted schedule. Identical specs give identical
/// schedules.
pub fn sample_flow_schedule(spec: &WorkloadSpec, topo: &Topology) -> Result<Vec<FlowSpec>, TrafficError> {
    spec.validate(topo)?;
    if spec.n_flows == 0 {
        return Ok(Vec::new());
    }
    let mean = spec.size_dist.mean(spec.theta);
    let rate = calibrated_rate(topo, &spec.matrix, mean, spec.max_load)?;
    let mu = ln(1.0 / rate) - spec.sigma * spec.sigma / 2.0;
    let gaps = LogNormal::new(mu, spec.sigma).map_err(|_| TrafficError::NonPositive("sigma"))?;
    let entries: Vec<(usize, usize, f64)> = spec.matrix.entries().collect();
    let pick = WeightedIndex::new(entries.iter().map(|e| e.2))
        .map_err(|_| TrafficError::BadMatrix("weights do not form a distribution"))?;
    let racks: Vec<Vec<NodeId>> = (0..topo.n_racks()).map(|r| topo.hosts_in_rack(r)).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut t = 0.0;
    let mut out = Vec::with_capacity(spec.n_flows);
    for k in 0..spec.n_flows {
        t += gaps.sample(&mut rng);
        let (i, j, _) = entries[pick.sample(&mut rng)];
        let (src, dst) = loop {
            let s = racks[i][rng.random_range(0..racks[i].len())];
            let d = racks[j][rng.random_range(0..racks[j].len())];
            if s != d {
                break (s, d);
            }
        };
        let size = spec.size_dist.sample(spec.theta, &mut rng);
        let id = FlowId(k as u32);
        let path = ecmp_route(topo, src, dst, id, spec.seed)?;
        out.push(FlowSpec {
            id,
            src,
            dst,
            size,
            arrival: t,
            path,
        });
    }
    Ok(out)
}
