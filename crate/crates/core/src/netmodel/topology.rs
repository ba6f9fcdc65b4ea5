use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{LinkId, NodeId};

/// Role of a node in a data-center fabric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeRole {
    Host,
    Tor,
    Aggregation,
    Spine,
}

/// A directed link. Each physical cable is modeled as two of these, one per
/// direction, each with its own queue.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkSpec {
    pub id: LinkId,
    pub src: NodeId,
    pub dst: NodeId,
    /// Bits per second.
    pub capacity_bps: f64,
    /// Seconds.
    pub prop_delay_s: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TopologyError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
    #[error("link {0} has non-positive capacity")]
    NonPositiveCapacity(LinkId),
    #[error("link {0} has a negative or non-finite propagation delay")]
    BadDelay(LinkId),
    #[error("link {link} references unknown node {node}")]
    UnknownNode { link: LinkId, node: NodeId },
    #[error("link ids must be dense and ordered; found {found} at position {expected}")]
    LinkIdOrder { expected: u32, found: LinkId },
    #[error("host {host} has {count} uplinks to a ToR, expected exactly one")]
    HostUplinks { host: NodeId, count: usize },
    #[error("topology is not connected")]
    Disconnected,
}

/// A directed-link graph with node roles.
#[derive(Debug, Clone)]
pub struct Topology {
    roles: Vec<NodeRole>,
    links: Vec<LinkSpec>,
    out_links: Vec<Vec<LinkId>>,
    in_links: Vec<Vec<LinkId>>,
    hosts: Vec<NodeId>,
    tors: Vec<NodeId>,
    /// Rack index (position of the ToR in `tors`) per node; only meaningful
    /// for hosts.
    rack_of: Vec<usize>,
    host_uplink: Vec<Option<LinkId>>,
}

impl Topology {
    /// Validates a node/link list and builds the adjacency.
    ///
    /// Link ids must equal their position in `links`.
    pub fn new(roles: Vec<NodeRole>, links: Vec<LinkSpec>) -> Result<Self, TopologyError> {
        let n = roles.len();
        if n == 0 {
            return Err(TopologyError::InvalidParameter("topology has no nodes"));
        }
        let mut out_links = vec![Vec::new(); n];
        let mut in_links = vec![Vec::new(); n];
        for (i, l) in links.iter().enumerate() {
            if l.id.index() != i {
                return Err(TopologyError::LinkIdOrder {
                    expected: i as u32,
                    found: l.id,
                });
            }
            if !(l.capacity_bps > 0.0) || !l.capacity_bps.is_finite() {
                return Err(TopologyError::NonPositiveCapacity(l.id));
            }
            if !(l.prop_delay_s >= 0.0) || !l.prop_delay_s.is_finite() {
                return Err(TopologyError::BadDelay(l.id));
            }
            for node in [l.src, l.dst] {
                if node.index() >= n {
                    return Err(TopologyError::UnknownNode { link: l.id, node });
                }
            }
            out_links[l.src.index()].push(l.id);
            in_links[l.dst.index()].push(l.id);
        }

        let tors: Vec<NodeId> = (0..n)
            .filter(|&i| roles[i] == NodeRole::Tor)
            .map(|i| NodeId(i as u32))
            .collect();
        let hosts: Vec<NodeId> = (0..n)
            .filter(|&i| roles[i] == NodeRole::Host)
            .map(|i| NodeId(i as u32))
            .collect();
        let mut rack_of = vec![usize::MAX; n];
        let mut host_uplink = vec![None; n];
        for &h in &hosts {
            let ups: Vec<LinkId> = out_links[h.index()]
                .iter()
                .copied()
                .filter(|l| roles[links[l.index()].dst.index()] == NodeRole::Tor)
                .collect();
            if ups.len() != 1 || out_links[h.index()].len() != 1 {
                return Err(TopologyError::HostUplinks {
                    host: h,
                    count: out_links[h.index()].len(),
                });
            }
            let tor = links[ups[0].index()].dst;
            rack_of[h.index()] = tors.binary_search(&tor).unwrap_or(usize::MAX);
            host_uplink[h.index()] = Some(ups[0]);
        }

        let topo = Self {
            roles,
            links,
            out_links,
            in_links,
            hosts,
            tors,
            rack_of,
            host_uplink,
        };
        if !topo.is_connected() {
            return Err(TopologyError::Disconnected);
        }
        Ok(topo)
    }

    /// Builds a topology from undirected cables; cable `k` becomes links
    /// `2k` (a→b) and `2k+1` (b→a).
    pub fn from_cables(
        roles: Vec<NodeRole>,
        cables: &[(NodeId, NodeId, f64, f64)],
    ) -> Result<Self, TopologyError> {
        let mut links = Vec::with_capacity(cables.len() * 2);
        for &(a, b, cap, delay) in cables {
            for (src, dst) in [(a, b), (b, a)] {
                links.push(LinkSpec {
                    id: LinkId(links.len() as u32),
                    src,
                    dst,
                    capacity_bps: cap,
                    prop_delay_s: delay,
                });
            }
        }
        Self::new(roles, links)
    }

    fn is_connected(&self) -> bool {
        let n = self.roles.len();
        let reach = |adj: &[Vec<LinkId>], forward: bool| {
            let mut seen = vec![false; n];
            let mut queue = VecDeque::from([0usize]);
            seen[0] = true;
            while let Some(u) = queue.pop_front() {
                for l in &adj[u] {
                    let spec = &self.links[l.index()];
                    let v = if forward { spec.dst } else { spec.src }.index();
                    if !seen[v] {
                        seen[v] = true;
                        queue.push_back(v);
                    }
                }
            }
            seen.into_iter().all(|s| s)
        };
        reach(&self.out_links, true) && reach(&self.in_links, false)
    }

    pub fn n_nodes(&self) -> usize {
        self.roles.len()
    }

    pub fn n_links(&self) -> usize {
        self.links.len()
    }

    pub fn links(&self) -> &[LinkSpec] {
        &self.links
    }

    pub fn link(&self, id: LinkId) -> &LinkSpec {
        &self.links[id.index()]
    }

    pub fn get_link(&self, id: LinkId) -> Option<&LinkSpec> {
        self.links.get(id.index())
    }

    pub fn role(&self, node: NodeId) -> Option<NodeRole> {
        self.roles.get(node.index()).copied()
    }

    pub fn roles(&self) -> &[NodeRole] {
        &self.roles
    }

    pub fn out_links(&self, node: NodeId) -> &[LinkId] {
        &self.out_links[node.index()]
    }

    pub fn in_links(&self, node: NodeId) -> &[LinkId] {
        &self.in_links[node.index()]
    }

    pub fn hosts(&self) -> &[NodeId] {
        &self.hosts
    }

    pub fn is_host(&self, node: NodeId) -> bool {
        self.role(node) == Some(NodeRole::Host)
    }

    /// ToR switches in ascending id order; a host's rack index is the
    /// position of its ToR in this list.
    pub fn tors(&self) -> &[NodeId] {
        &self.tors
    }

    pub fn n_racks(&self) -> usize {
        self.tors.len()
    }

    pub fn rack_of(&self, host: NodeId) -> Option<usize> {
        self.rack_of
            .get(host.index())
            .copied()
            .filter(|&r| r != usize::MAX)
    }

    /// Hosts attached to rack `rack`, ascending.
    pub fn hosts_in_rack(&self, rack: usize) -> Vec<NodeId> {
        self.hosts
            .iter()
            .copied()
            .filter(|&h| self.rack_of[h.index()] == rack)
            .collect()
    }

    pub fn host_uplink(&self, host: NodeId) -> Option<LinkId> {
        self.host_uplink.get(host.index()).copied().flatten()
    }

    pub fn max_capacity(&self) -> f64 {
        self.links
            .iter()
            .map(|l| l.capacity_bps)
            .fold(0.0, f64::max)
    }

    /// Worst-case ratio of downlink to uplink capacity over switches of
    /// `role`. Downlinks point to the tier below, uplinks to the tier above.
    pub fn oversubscription(&self, role: NodeRole) -> f64 {
        let tier = |r: NodeRole| match r {
            NodeRole::Host => 0,
            NodeRole::Tor => 1,
            NodeRole::Aggregation => 2,
            NodeRole::Spine => 3,
        };
        let mut worst: f64 = 0.0;
        for (i, &r) in self.roles.iter().enumerate() {
            if r != role {
                continue;
            }
            let mut down = 0.0;
            let mut up = 0.0;
            for l in &self.out_links[i] {
                let spec = &self.links[l.index()];
                let peer = self.roles[spec.dst.index()];
                if tier(peer) < tier(r) {
                    down += spec.capacity_bps;
                } else if tier(peer) > tier(r) {
                    up += spec.capacity_bps;
                }
            }
            if up > 0.0 {
                worst = worst.max(down / up);
            }
        }
        worst
    }
}

/// Parameters of a three-tier fat-tree.
///
/// Every pod has `racks_per_pod` ToRs and `planes` aggregation switches; each
/// ToR connects to every aggregation switch of its pod. Aggregation switch
/// `k` of every pod connects to all `spines_per_plane` spines of plane `k`,
/// so the plane-level oversubscription is `racks_per_pod / spines_per_plane`
/// with uniform capacities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FatTreeSpec {
    pub pods: usize,
    pub racks_per_pod: usize,
    pub hosts_per_rack: usize,
    pub spines_per_plane: usize,
    #[serde(default = "default_planes")]
    pub planes: usize,
    #[serde(default = "default_capacity")]
    pub capacity_bps: f64,
    #[serde(default = "default_delay")]
    pub prop_delay_s: f64,
}

fn default_planes() -> usize {
    1
}

fn default_capacity() -> f64 {
    10e9
}

fn default_delay() -> f64 {
    1e-6
}

impl FatTreeSpec {
    pub fn new(pods: usize, racks_per_pod: usize, hosts_per_rack: usize, spines: usize) -> Self {
        Self {
            pods,
            racks_per_pod,
            hosts_per_rack,
            spines_per_plane: spines,
            planes: default_planes(),
            capacity_bps: default_capacity(),
            prop_delay_s: default_delay(),
        }
    }

    pub fn n_hosts(&self) -> usize {
        self.pods * self.racks_per_pod * self.hosts_per_rack
    }

    /// Node ids are assigned hosts first, then ToRs, aggregation switches
    /// (pod-major) and spines (plane-major).
    pub fn build(&self) -> Result<Topology, TopologyError> {
        if self.pods == 0
            || self.racks_per_pod == 0
            || self.hosts_per_rack == 0
            || self.spines_per_plane == 0
            || self.planes == 0
        {
            return Err(TopologyError::InvalidParameter("fat-tree counts must be >= 1"));
        }
        let n_racks = self.pods * self.racks_per_pod;
        let n_hosts = n_racks * self.hosts_per_rack;
        let n_aggs = self.pods * self.planes;
        let n_spines = self.planes * self.spines_per_plane;

        let tor0 = n_hosts;
        let agg0 = tor0 + n_racks;
        let spine0 = agg0 + n_aggs;
        let mut roles = vec![NodeRole::Host; n_hosts];
        roles.extend(core::iter::repeat_n(NodeRole::Tor, n_racks));
        roles.extend(core::iter::repeat_n(NodeRole::Aggregation, n_aggs));
        roles.extend(core::iter::repeat_n(NodeRole::Spine, n_spines));

        let node = |i: usize| NodeId(i as u32);
        let (cap, d) = (self.capacity_bps, self.prop_delay_s);
        let mut cables = Vec::new();
        for h in 0..n_hosts {
            cables.push((node(h), node(tor0 + h / self.hosts_per_rack), cap, d));
        }
        for r in 0..n_racks {
            let pod = r / self.racks_per_pod;
            for k in 0..self.planes {
                cables.push((node(tor0 + r), node(agg0 + pod * self.planes + k), cap, d));
            }
        }
        for pod in 0..self.pods {
            for k in 0..self.planes {
                for s in 0..self.spines_per_plane {
                    cables.push((
                        node(agg0 + pod * self.planes + k),
                        node(spine0 + k * self.spines_per_plane + s),
                        cap,
                        d,
                    ));
                }
            }
        }
        Topology::from_cables(roles, &cables)
    }
}

/// Builds a single-plane fat-tree with 10 Gbps links and 1 µs delays.
pub fn build_fattree(
    pods: usize,
    racks_per_pod: usize,
    hosts_per_rack: usize,
    spines_per_plane: usize,
) -> Result<Topology, TopologyError> {
    FatTreeSpec::new(pods, racks_per_pod, hosts_per_rack, spines_per_plane).build()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn desk_fattree_has_32_hosts_and_8_tors() {
        let t = build_fattree(2, 4, 4, 1).unwrap();
        assert_eq!(t.hosts().len(), 32);
        assert_eq!(t.tors().len(), 8);
        assert_eq!(t.oversubscription(NodeRole::Tor), 4.0);
        assert_eq!(t.oversubscription(NodeRole::Aggregation), 4.0);
        let t = build_fattree(2, 4, 4, 4).unwrap();
        assert_eq!(t.oversubscription(NodeRole::Aggregation), 1.0);
    }

    #[test]
    fn trivial_fattree() {
        let t = build_fattree(1, 1, 1, 1).unwrap();
        assert_eq!(t.hosts().len(), 1);
        assert_eq!(t.tors().len(), 1);
        assert_eq!(t.rack_of(NodeId(0)), Some(0));
    }

    #[test]
    fn small_fattree_matches_hand_enumeration() {
        // 8 hosts (0..8), ToRs 8..12, aggs 12,13, spines 14,15.
        let t = build_fattree(2, 2, 2, 2).unwrap();
        assert_eq!(t.hosts().len(), 8);
        let mut expected: Vec<(u32, u32)> = Vec::new();
        for h in 0..8 {
            expected.push((h, 8 + h / 2));
        }
        for r in 0..4 {
            expected.push((8 + r, 12 + r / 2));
        }
        for a in [12, 13] {
            for s in [14, 15] {
                expected.push((a, s));
            }
        }
        assert_eq!(expected.len(), 16);
        assert_eq!(t.n_links(), 32);
        let mut got: Vec<(u32, u32)> = t.links().iter().map(|l| (l.src.0, l.dst.0)).collect();
        let mut want: Vec<(u32, u32)> = expected
            .iter()
            .flat_map(|&(a, b)| [(a, b), (b, a)])
            .collect();
        got.sort();
        want.sort();
        assert_eq!(got, want);
    }

    #[test]
    fn zero_counts_rejected() {
        for args in [(0, 1, 1, 1), (1, 0, 1, 1), (1, 1, 0, 1), (1, 1, 1, 0)] {
            assert!(matches!(
                build_fattree(args.0, args.1, args.2, args.3),
                Err(TopologyError::InvalidParameter(_))
            ));
        }
    }

    #[test]
    fn host_with_two_uplinks_rejected() {
        let roles = vec![NodeRole::Host, NodeRole::Tor, NodeRole::Tor];
        let n = |i| NodeId(i);
        let cables = [(n(0), n(1), 1e9, 0.0), (n(0), n(2), 1e9, 0.0)];
        assert!(matches!(
            Topology::from_cables(roles, &cables),
            Err(TopologyError::HostUplinks { .. })
        ));
    }

    #[test]
    fn disconnected_rejected() {
        let roles = vec![NodeRole::Host, NodeRole::Tor, NodeRole::Host, NodeRole::Tor];
        let n = |i| NodeId(i);
        let cables = [(n(0), n(1), 1e9, 0.0), (n(2), n(3), 1e9, 0.0)];
        assert_eq!(
            Topology::from_cables(roles, &cables).unwrap_err(),
            TopologyError::Disconnected
        );
    }

    #[test]
    fn bad_capacity_rejected() {
        let roles = vec![NodeRole::Host, NodeRole::Tor];
        let cables = [(NodeId(0), NodeId(1), 0.0, 0.0)];
        assert!(matches!(
            Topology::from_cables(roles, &cables),
            Err(TopologyError::NonPositiveCapacity(_))
        ));
    }
}
