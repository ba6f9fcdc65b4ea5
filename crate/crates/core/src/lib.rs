//! Flow-level data-center network simulation.
//!
//! Three backends share one flow/topology model:
//!
//! - [`fluid`]: the classical max-min fair fluid simulator.
//! - [`packet`]: a packet-level reference simulator with drop-tail queues,
//!   ECN marking and DCTCP window control. It produces the ground-truth
//!   traces used for training and evaluation.
//! - [`engine`]: the learned simulator, which keeps a recurrent hidden state
//!   per flow and per link, updates them with GRUs and a GraphSAGE network on
//!   the event-affected sub-network, and reads completion times out of MLP
//!   heads.
//!
//! The crate is `no_std` (with `alloc`); file formats, the CLI and timing live
//! in the `m4` companion crate.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod engine;
pub mod fluid;
pub mod netmodel;
pub mod nn;
pub mod packet;
pub mod snapshot;
pub mod source;
pub mod trafficgen;

mod math;

pub use netmodel::{
    build_fattree, ecmp_route, encode_config, ideal_fct, CcProtocol, EventKind, EventRecord,
    FlowId, FlowSpec, LinkId, LinkSpec, NetworkConfig, NetworkConfigVector, NodeId, NodeRole,
    Topology, MTU_BYTES,
};
pub use source::{ArrivalSource, FlowResult, OrderingError, RunOutput, ScheduleSource};
