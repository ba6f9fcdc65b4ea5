//! Packet-level reference simulator.
//!
//! Store-and-forward switches with one FIFO per directed link, drop-tail
//! buffers, ECN marking on instantaneous occupancy and DCTCP senders with
//! per-packet cumulative ACKs and go-back-N timeout recovery. Time is kept
//! in integer picoseconds so single-flow runs match closed forms exactly.

mod dctcp;
mod sim;

pub use dctcp::{dctcp_window_update, CcState, DCTCP_G};
pub use sim::{
    run, FirstPacketQueue, GroundTruthTrace, PacketConfig, PacketError, PacketStats,
    RemainingSample, SenderMode, ACK_BYTES, RTO_RTT_MULTIPLIER,
};
