use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{FlowId, LinkId, NodeId, Topology};

/// Maximum payload per packet, in bytes. Used by every backend and by the
/// ideal-FCT normalizer.
pub const MTU_BYTES: u64 = 1000;

/// A flow: size, arrival time, endpoints, and its fixed path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowSpec {
    pub id: FlowId,
    pub src: NodeId,
    pub dst: NodeId,
    /// Bytes.
    pub size: u64,
    /// Seconds.
    pub arrival: f64,
    pub path: Vec<LinkId>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FlowError {
    #[error("flow {0} has zero size")]
    ZeroSize(FlowId),
    #[error("flow {0} has a negative or non-finite arrival time")]
    BadArrival(FlowId),
    #[error("flow {0} has an empty path")]
    EmptyPath(FlowId),
    #[error("flow {flow} path uses unknown link {link}")]
    UnknownLink { flow: FlowId, link: LinkId },
    #[error("flow {0} path is not a contiguous walk from src to dst")]
    BrokenPath(FlowId),
}

impl FlowSpec {
    /// Checks the flow's invariants against `topo`.
    pub fn validate(&self, topo: &Topology) -> Result<(), FlowError> {
        if self.size == 0 {
            return Err(FlowError::ZeroSize(self.id));
        }
        if !(self.arrival >= 0.0) || !self.arrival.is_finite() {
            return Err(FlowError::BadArrival(self.id));
        }
        if self.path.is_empty() {
            return Err(FlowError::EmptyPath(self.id));
        }
        let mut at = self.src;
        for &l in &self.path {
            let spec = topo.get_link(l).ok_or(FlowError::UnknownLink {
                flow: self.id,
                link: l,
            })?;
            if spec.src != at {
                return Err(FlowError::BrokenPath(self.id));
            }
            at = spec.dst;
        }
        if at != self.dst {
            return Err(FlowError::BrokenPath(self.id));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Arrival,
    Departure,
}

/// A processed flow-level event.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub time: f64,
    pub kind: EventKind,
    pub flow: FlowId,
}

/// Completion time on an otherwise idle network: propagation along the
/// path, full serialization at the bottleneck, and store-and-forward of the
/// first packet at every hop but the last.
pub fn ideal_fct(flow: &FlowSpec, topo: &Topology) -> f64 {
    ideal_fct_for(flow.size, &flow.path, topo)
}

pub fn ideal_fct_for(size: u64, path: &[LinkId], topo: &Topology) -> f64 {
    let mut prop = 0.0;
    let mut bottleneck = f64::INFINITY;
    for &l in path {
        let spec = topo.link(l);
        prop += spec.prop_delay_s;
        bottleneck = bottleneck.min(spec.capacity_bps);
    }
    let first = size.min(MTU_BYTES) as f64;
    let hops = path.len().saturating_sub(1) as f64;
    prop + size as f64 * 8.0 / bottleneck + hops * first * 8.0 / bottleneck
}

#[cfg(test)]
mod tests {
    use super::super::{build_fattree, ecmp_route, NodeRole};
    use super::*;

    #[test]
    fn one_hop_closed_form() {
        let roles = vec![NodeRole::Host, NodeRole::Tor];
        let t = Topology::from_cables(roles, &[(NodeId(0), NodeId(1), 10e9, 1e-6)]).unwrap();
        let got = ideal_fct_for(1000, &[LinkId(0)], &t);
        assert!((got - 1.8e-6).abs() < 1e-18);
    }

    #[test]
    fn two_hop_closed_form() {
        let t = build_fattree(1, 1, 2, 1).unwrap();
        let p = ecmp_route(&t, NodeId(0), NodeId(1), FlowId(0), 0).unwrap();
        assert_eq!(p.len(), 2);
        let got = ideal_fct_for(1000, &p, &t);
        assert!((got - 3.6e-6).abs() < 1e-18, "{got}");
    }

    #[test]
    fn monotone_in_size_and_hops() {
        let t = build_fattree(2, 2, 2, 1).unwrap();
        let p = ecmp_route(&t, NodeId(0), NodeId(7), FlowId(0), 0).unwrap();
        let mut prev = 0.0;
        for size in [1u64, 10, 999, 1000, 1001, 5000, 1_000_000] {
            let v = ideal_fct_for(size, &p, &t);
            assert!(v >= prev);
            prev = v;
        }
        let short = ecmp_route(&t, NodeId(0), NodeId(1), FlowId(0), 0).unwrap();
        let long = ecmp_route(&t, NodeId(0), NodeId(7), FlowId(0), 0).unwrap();
        assert!(ideal_fct_for(3000, &long, &t) > ideal_fct_for(3000, &short, &t));
    }

    #[test]
    fn validate_paths() {
        let t = build_fattree(2, 2, 2, 1).unwrap();
        let path = ecmp_route(&t, NodeId(0), NodeId(7), FlowId(3), 1).unwrap();
        let mut f = FlowSpec {
            id: FlowId(3),
            src: NodeId(0),
            dst: NodeId(7),
            size: 10,
            arrival: 0.0,
            path,
        };
        assert_eq!(f.validate(&t), Ok(()));
        f.path.swap(0, 1);
        assert_eq!(f.validate(&t), Err(FlowError::BrokenPath(FlowId(3))));
        f.path.clear();
        assert_eq!(f.validate(&t), Err(FlowError::EmptyPath(FlowId(3))));
        f.size = 0;
        assert_eq!(f.validate(&t), Err(FlowError::ZeroSize(FlowId(3))));
    }
}
