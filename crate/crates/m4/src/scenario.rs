//! Declarative scenario files: topology, workload, network configuration,
//! default backend and seed in one JSON document.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use m4_core::netmodel::{ecmp_route, FatTreeSpec, FlowId, FlowSpec, LinkSpec, NetworkConfig, NodeId, NodeRole, Topology};
use m4_core::trafficgen::{
    sample_flow_schedule, ClosedLoopSpec, EmpiricalCdf, SizeDist, TrafficMatrix, WorkloadSpec,
};
use serde::{Deserialize, Serialize};

use crate::error::{io_err, json_err, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Fluid,
    Packet,
    Learned,
}

impl Backend {
    pub const ALL: [Backend; 3] = [Backend::Fluid, Backend::Packet, Backend::Learned];

    pub fn as_str(self) -> &'static str {
        match self {
            Backend::Fluid => "fluid",
            Backend::Packet => "packet",
            Backend::Learned => "learned",
        }
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Backend {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Backend::ALL
            .into_iter()
            .find(|b| b.as_str() == s)
            .ok_or_else(|| format!("unknown backend {s:?}; expected fluid, packet or learned"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TopologyConfig {
    FatTree(FatTreeSpec),
    /// Explicit directed links; ids must be dense and in order.
    Links { roles: Vec<NodeRole>, links: Vec<LinkSpec> },
}

impl TopologyConfig {
    pub fn build(&self) -> Result<Topology> {
        Ok(match self {
            TopologyConfig::FatTree(spec) => spec.build()?,
            TopologyConfig::Links { roles, links } => Topology::new(roles.clone(), links.clone())?,
        })
    }
}

/// Flow-size distribution; `empirical_file` reads a two-column CDF file
/// relative to the scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SizeConfig {
    Exponential,
    Pareto,
    Gaussian,
    Lognormal,
    Empirical { points: Vec<(f64, f64)> },
    EmpiricalFile { path: PathBuf },
}

impl SizeConfig {
    pub fn resolve(&self, base: &Path) -> Result<SizeDist> {
        Ok(match self {
            SizeConfig::Exponential => SizeDist::Exponential,
            SizeConfig::Pareto => SizeDist::Pareto,
            SizeConfig::Gaussian => SizeDist::Gaussian,
            SizeConfig::Lognormal => SizeDist::LogNormal,
            SizeConfig::Empirical { points } => SizeDist::Empirical(EmpiricalCdf::new(points.clone())?),
            SizeConfig::EmpiricalFile { path } => {
                let p = base.join(path);
                let text = std::fs::read_to_string(&p).map_err(io_err(&p))?;
                SizeDist::Empirical(EmpiricalCdf::parse(&text)?)
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MatrixConfig {
    Uniform,
    /// Every pair involving one of the first `hot` racks weighs `factor`.
    Hotspot { hot: usize, factor: f64 },
    Weights { weights: Vec<Vec<f64>> },
    /// Whitespace-separated rows, relative to the scenario file.
    File { path: PathBuf },
}

impl MatrixConfig {
    pub fn resolve(&self, base: &Path, n_racks: usize) -> Result<TrafficMatrix> {
        Ok(match self {
            MatrixConfig::Uniform => TrafficMatrix::uniform(n_racks),
            MatrixConfig::Hotspot { hot, factor } => TrafficMatrix::hotspot(n_racks, *hot, *factor),
            MatrixConfig::Weights { weights } => TrafficMatrix {
                weights: weights.clone(),
            },
            MatrixConfig::File { path } => {
                let p = base.join(path);
                let text = std::fs::read_to_string(&p).map_err(io_err(&p))?;
                TrafficMatrix::parse(&text)?
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitFlow {
    pub src: u32,
    pub dst: u32,
    pub size: u64,
    /// Seconds.
    pub arrival: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WorkloadConfig {
    OpenLoop {
        size: SizeConfig,
        theta: f64,
        #[serde(default = "default_sigma")]
        sigma: f64,
        max_load: f64,
        #[serde(default = "default_matrix")]
        matrix: MatrixConfig,
        n_flows: usize,
    },
    ClosedLoop {
        n_inflight: usize,
        flows_per_client: usize,
        size: SizeConfig,
        theta: f64,
    },
    /// Fixed flows, given in arrival order; ids follow list order.
    Flows { flows: Vec<ExplicitFlow> },
}

fn default_sigma() -> f64 {
    1.0
}

fn default_matrix() -> MatrixConfig {
    MatrixConfig::Uniform
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub id: String,
    #[serde(default)]
    pub seed: u64,
    pub topology: TopologyConfig,
    #[serde(default)]
    pub network: NetworkConfig,
    pub workload: WorkloadConfig,
    /// Used when the CLI does not name one.
    #[serde(default)]
    pub backend: Option<Backend>,
    /// Directory that relative paths resolve against; set on load.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

/// Flows to simulate, either fixed up front or released by a closed loop.
#[derive(Debug, Clone)]
pub enum Arrivals {
    Open(Vec<FlowSpec>),
    Closed(ClosedLoopSpec),
}

/// A scenario with its topology built and its workload sampled.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub id: String,
    pub topo: Topology,
    pub net: NetworkConfig,
    pub arrivals: Arrivals,
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        let mut s: Scenario = serde_json::from_str(&text).map_err(json_err(path))?;
        s.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(s)
    }

    fn fail(&self, detail: impl Into<String>) -> Error {
        Error::Scenario {
            id: self.id.clone(),
            detail: detail.into(),
        }
    }

    pub fn prepare(&self) -> Result<Prepared> {
        let topo = self.topology.build()?;
        let arrivals = match &self.workload {
            WorkloadConfig::OpenLoop {
                size,
                theta,
                sigma,
                max_load,
                matrix,
                n_flows,
            } => {
                let spec = WorkloadSpec {
                    size_dist: size.resolve(&self.base_dir)?,
                    theta: *theta,
                    sigma: *sigma,
                    max_load: *max_load,
                    matrix: matrix.resolve(&self.base_dir, topo.n_racks())?,
                    n_flows: *n_flows,
                    seed: self.seed,
                };
                Arrivals::Open(sample_flow_schedule(&spec, &topo)?)
            }
            WorkloadConfig::ClosedLoop {
                n_inflight,
                flows_per_client,
                size,
                theta,
            } => Arrivals::Closed(ClosedLoopSpec {
                n_inflight: *n_inflight,
                flows_per_client: *flows_per_client,
                size_dist: size.resolve(&self.base_dir)?,
                theta: *theta,
                seed: self.seed,
            }),
            WorkloadConfig::Flows { flows } => {
                let mut out = Vec::with_capacity(flows.len());
                for (i, f) in flows.iter().enumerate() {
                    if out.last().is_some_and(|p: &FlowSpec| p.arrival > f.arrival) {
                        return Err(self.fail(format!("flow {i} arrives before its predecessor")));
                    }
                    let (id, src, dst) = (FlowId(i as u32), NodeId(f.src), NodeId(f.dst));
                    out.push(FlowSpec {
                        id,
                        src,
                        dst,
                        size: f.size,
                        arrival: f.arrival,
                        path: ecmp_route(&topo, src, dst, id, self.seed)?,
                    });
                }
                Arrivals::Open(out)
            }
        };
        Ok(Prepared {
            id: self.id.clone(),
            topo,
            net: self.network,
            arrivals,
        })
    }
}
