//! Topologies, routing, flow and event records, network-configuration
//! encoding, and the ideal-FCT normalizer shared by every backend.

mod config;
mod flow;
mod routing;
mod topology;

use core::fmt;

use serde::{Deserialize, Serialize};

pub use config::{
    encode_config, CcProtocol, ConfigError, NetworkConfig, NetworkConfigVector, ParamRange,
    BUFFER_RANGE, CONFIG_VECTOR_LEN, DCQCN_KMAX_RANGE, DCQCN_KMIN_RANGE, DCTCP_K_RANGE,
    INIT_WINDOW_RANGE, TIMELY_THIGH_RANGE, TIMELY_TLOW_RANGE,
};
pub use flow::{ideal_fct, ideal_fct_for, EventKind, EventRecord, FlowError, FlowSpec, MTU_BYTES};
pub use routing::{ecmp_route, RouteError, Router};
pub use topology::{build_fattree, FatTreeSpec, LinkSpec, NodeRole, Topology, TopologyError};

macro_rules! id_type {
    ($(#[$m:meta])* $name:ident) => {
        $(#[$m])*
        #[derive(
            Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize,
        )]
        #[serde(transparent)]
        pub struct $name(pub u32);

        impl $name {
            #[inline]
            pub const fn new(raw: u32) -> Self {
                Self(raw)
            }

            #[inline]
            pub const fn index(self) -> usize {
                self.0 as usize
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}", self.0)
            }
        }
    };
}

id_type!(
    /// Flow identifier, unique within a run.
    FlowId
);
id_type!(
    /// Directed-link identifier; link ids are dense `0..n_links`.
    LinkId
);
id_type!(
    /// Node identifier; node ids are dense `0..n_nodes`.
    NodeId
);
