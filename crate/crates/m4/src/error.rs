use std::path::PathBuf;

use m4_core::engine::EngineError;
use m4_core::fluid::FluidError;
use m4_core::netmodel::{ConfigError, RouteError, TopologyError};
use m4_core::nn::{NnError, WeightError};
use m4_core::packet::PacketError;
use m4_core::trafficgen::TrafficError;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("scenario {id}: {detail}")]
    Scenario { id: String, detail: String },
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Route(#[from] RouteError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Traffic(#[from] TrafficError),
    #[error(transparent)]
    Weights(#[from] WeightError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error("fluid backend: {0}")]
    Fluid(#[from] FluidError),
    #[error("packet backend: {0}")]
    Packet(#[from] PacketError),
    #[error("learned backend: {0}")]
    Engine(#[from] EngineError),
    #[error("the learned backend needs a weight bundle")]
    MissingWeights,
    #[error("flow sets differ: {0}")]
    FlowSetMismatch(String),
    #[error("probe mismatch on {field}: runtime {got}, expected {expected}")]
    ProbeMismatch {
        field: String,
        got: f64,
        expected: f64,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn io_err(path: &std::path::Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub(crate) fn json_err(path: &std::path::Path) -> impl FnOnce(serde_json::Error) -> Error + '_ {
    move |source| Error::Json {
        path: path.to_path_buf(),
        source,
    }
}
