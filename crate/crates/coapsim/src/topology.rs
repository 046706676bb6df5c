//! Node layouts, roles and sink-rooted tree routing.
//!
//! Four canonical layouts are built in: a 17-node chain, a 21-node
//! dumbbell (two 3x3 clusters joined by a 3-node bridge) and 6x6 / 7x7
//! grids, all with 10 m spacing. Each layout has exactly one primary
//! sink, exactly one border relay that only forwards, and clients
//! everywhere the scenario generates traffic.
//!
//! Routing is a breadth-first shortest-path tree rooted at the primary
//! sink over the transmission-range adjacency, with distance ties broken
//! toward the lowest node id. Both request and ACK paths follow tree
//! edges, so return routes are the exact reverse of forward routes.

use std::fmt;

pub const DEFAULT_SPACING_M: f64 = 10.0;
pub const DEFAULT_TX_RANGE_M: f64 = 10.0;

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct NodeId(pub u16);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Role {
    /// Generates confirmable requests toward the primary sink.
    Client,
    /// Terminates requests and returns ACKs.
    PrimarySink,
    /// Placeholder endpoint; forwards but receives no traffic in the
    /// constant-traffic workload.
    SecondarySink,
    /// Pure forwarder between network segments; never originates or
    /// terminates application messages.
    BorderRelay,
}

impl Role {
    pub fn name(self) -> &'static str {
        match self {
            Role::Client => "client",
            Role::PrimarySink => "primary_sink",
            Role::SecondarySink => "secondary_sink",
            Role::BorderRelay => "border_relay",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, PartialEq, Debug)]
pub struct NodeInfo {
    pub id: NodeId,
    pub x_m: f64,
    pub y_m: f64,
    pub role: Role,
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum TopologyKind {
    Chain,
    Dumbbell,
    Grid6,
    Grid7,
}

impl TopologyKind {
    pub const ALL: [TopologyKind; 4] = [
        TopologyKind::Chain,
        TopologyKind::Dumbbell,
        TopologyKind::Grid6,
        TopologyKind::Grid7,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TopologyKind::Chain => "chain",
            TopologyKind::Dumbbell => "dumbbell",
            TopologyKind::Grid6 => "grid6",
            TopologyKind::Grid7 => "grid7",
        }
    }
}

impl fmt::Display for TopologyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for TopologyKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "chain" => Ok(TopologyKind::Chain),
            "dumbbell" => Ok(TopologyKind::Dumbbell),
            "grid6" => Ok(TopologyKind::Grid6),
            "grid7" => Ok(TopologyKind::Grid7),
            other => Err(format!(
                "unknown topology {other:?} (expected chain, dumbbell, grid6 or grid7)"
            )),
        }
    }
}

#[derive(thiserror::Error, Debug, PartialEq)]
pub enum TopologyError {
    #[error("topology has no nodes")]
    Empty,
    #[error("node ids must be contiguous from 0; found {found} at index {index}")]
    NonContiguousIds { index: usize, found: u16 },
    #[error("expected exactly one primary sink, found {0}")]
    PrimarySinkCount(usize),
    #[error("expected exactly one border relay, found {0}")]
    BorderRelayCount(usize),
    #[error("node {0} cannot reach the primary sink within transmission range")]
    Unreachable(NodeId),
}

/// An immutable layout plus its routing tables.
#[derive(Clone, Debug)]
pub struct Topology {
    nodes: Vec<NodeInfo>,
    tx_range_m: f64,
    sink: NodeId,
    relay: NodeId,
    clients: Vec<NodeId>,
    /// Hop distance to the sink, indexed by node.
    sink_hops: Vec<u16>,
    /// `next_hop[dest][node]`: neighbor of `node` on the tree path
    /// toward `dest`; `u16::MAX` when `node == dest`.
    next_hop: Vec<Vec<u16>>,
}

const NO_HOP: u16 = u16::MAX;

impl Topology {
    pub fn build(kind: TopologyKind) -> Topology {
        let nodes = match kind {
            TopologyKind::Chain => chain_nodes(),
            TopologyKind::Dumbbell => dumbbell_nodes(),
            TopologyKind::Grid6 => grid_nodes(6),
            TopologyKind::Grid7 => grid_nodes(7),
        };
        Topology::from_nodes(nodes, DEFAULT_TX_RANGE_M)
            .expect("built-in layout must be a valid connected topology")
    }

    /// Validates an arbitrary layout and computes its routing tables.
    pub fn from_nodes(nodes: Vec<NodeInfo>, tx_range_m: f64) -> Result<Topology, TopologyError> {
        if nodes.is_empty() {
            return Err(TopologyError::Empty);
        }
        for (index, node) in nodes.iter().enumerate() {
            if node.id.index() != index {
                return Err(TopologyError::NonContiguousIds {
                    index,
                    found: node.id.0,
                });
            }
        }
        let sinks: Vec<NodeId> = nodes
            .iter()
            .filter(|n| n.role == Role::PrimarySink)
            .map(|n| n.id)
            .collect();
        if sinks.len() != 1 {
            return Err(TopologyError::PrimarySinkCount(sinks.len()));
        }
        let relays: Vec<NodeId> = nodes
            .iter()
            .filter(|n| n.role == Role::BorderRelay)
            .map(|n| n.id)
            .collect();
        if relays.len() != 1 {
            return Err(TopologyError::BorderRelayCount(relays.len()));
        }
        let clients = nodes
            .iter()
            .filter(|n| n.role == Role::Client)
            .map(|n| n.id)
            .collect();

        let mut topo = Topology {
            nodes,
            tx_range_m,
            sink: sinks[0],
            relay: relays[0],
            clients,
            sink_hops: Vec::new(),
            next_hop: Vec::new(),
        };
        topo.compute_routes()?;
        Ok(topo)
    }

    /// Builds the sink-rooted shortest-path tree and per-destination
    /// next-hop tables over the tree edges.
    fn compute_routes(&mut self) -> Result<(), TopologyError> {
        let n = self.nodes.len();
        let dist = self.bfs_distances(self.sink, |a, b| self.in_tx_range(a, b));
        if let Some(i) = dist.iter().position(|&d| d == NO_HOP) {
            return Err(TopologyError::Unreachable(NodeId(i as u16)));
        }
        self.sink_hops = dist.clone();

        // Parent toward the sink: the lowest-id neighbor one hop closer.
        let mut parent = vec![NO_HOP; n];
        for v in 0..n {
            if v == self.sink.index() {
                continue;
            }
            for u in 0..n {
                if u != v
                    && dist[u] + 1 == dist[v]
                    && self.in_tx_range(NodeId(u as u16), NodeId(v as u16))
                {
                    parent[v] = u as u16;
                    break;
                }
            }
            debug_assert_ne!(parent[v], NO_HOP);
        }

        // Tree adjacency, then next hops toward every destination by
        // searching the tree from that destination.
        let mut tree_adj: Vec<Vec<u16>> = vec![Vec::new(); n];
        for v in 0..n {
            if parent[v] != NO_HOP {
                tree_adj[v].push(parent[v]);
                tree_adj[parent[v] as usize].push(v as u16);
            }
        }
        for adj in &mut tree_adj {
            adj.sort_unstable();
        }

        self.next_hop = (0..n)
            .map(|dest| {
                let mut hops = vec![NO_HOP; n];
                let mut queue = std::collections::VecDeque::new();
                let mut seen = vec![false; n];
                seen[dest] = true;
                for &nb in &tree_adj[dest] {
                    hops[nb as usize] = dest as u16;
                    seen[nb as usize] = true;
                    queue.push_back(nb as usize);
                }
                while let Some(v) = queue.pop_front() {
                    for &nb in &tree_adj[v] {
                        let nb = nb as usize;
                        if !seen[nb] {
                            seen[nb] = true;
                            hops[nb] = v as u16;
                            queue.push_back(nb);
                        }
                    }
                }
                hops
            })
            .collect();
        Ok(())
    }

    fn bfs_distances(&self, from: NodeId, connected: impl Fn(NodeId, NodeId) -> bool) -> Vec<u16> {
        let n = self.nodes.len();
        let mut dist = vec![NO_HOP; n];
        let mut queue = std::collections::VecDeque::new();
        dist[from.index()] = 0;
        queue.push_back(from.index());
        while let Some(v) = queue.pop_front() {
            for u in 0..n {
                if dist[u] == NO_HOP && connected(NodeId(v as u16), NodeId(u as u16)) {
                    dist[u] = dist[v] + 1;
                    queue.push_back(u);
                }
            }
        }
        dist
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[NodeInfo] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &NodeInfo {
        &self.nodes[id.index()]
    }

    pub fn sink(&self) -> NodeId {
        self.sink
    }

    pub fn relay(&self) -> NodeId {
        self.relay
    }

    pub fn clients(&self) -> &[NodeId] {
        &self.clients
    }

    pub fn tx_range_m(&self) -> f64 {
        self.tx_range_m
    }

    pub fn distance_m(&self, a: NodeId, b: NodeId) -> f64 {
        let (na, nb) = (&self.nodes[a.index()], &self.nodes[b.index()]);
        ((na.x_m - nb.x_m).powi(2) + (na.y_m - nb.y_m).powi(2)).sqrt()
    }

    pub fn in_tx_range(&self, a: NodeId, b: NodeId) -> bool {
        a != b && self.distance_m(a, b) <= self.tx_range_m
    }

    /// Nodes within transmission range, ascending by id.
    pub fn neighbors(&self, node: NodeId) -> Vec<NodeId> {
        (0..self.nodes.len() as u16)
            .map(NodeId)
            .filter(|&other| self.in_tx_range(node, other))
            .collect()
    }

    /// Next node on the tree path from `node` toward `dest`; `None`
    /// when already there.
    pub fn next_hop(&self, node: NodeId, dest: NodeId) -> Option<NodeId> {
        if node == dest {
            return None;
        }
        let hop = self.next_hop[dest.index()][node.index()];
        debug_assert_ne!(hop, NO_HOP);
        Some(NodeId(hop))
    }

    /// Tree-path hop count from `node` to the primary sink.
    pub fn hops_to_sink(&self, node: NodeId) -> usize {
        self.sink_hops[node.index()] as usize
    }

    /// Tree-path hop count between two nodes.
    pub fn hop_count(&self, node: NodeId, dest: NodeId) -> usize {
        let mut at = node;
        let mut hops = 0;
        while at != dest {
            at = self.next_hop(at, dest).expect("tree is connected");
            hops += 1;
            assert!(hops <= self.nodes.len(), "routing loop from {node} to {dest}");
        }
        hops
    }

    /// Plain-text dump (one node per line) for plotting and debugging.
    pub fn export_text(&self) -> String {
        use std::fmt::Write;
        let mut out = String::new();
        writeln!(out, "# id x_m y_m role next_hop_to_sink hops_to_sink").unwrap();
        for node in &self.nodes {
            let hop = self
                .next_hop(node.id, self.sink)
                .map(|h| h.to_string())
                .unwrap_or_else(|| "-".into());
            writeln!(
                out,
                "{} {} {} {} {} {}",
                node.id,
                node.x_m,
                node.y_m,
                node.role,
                hop,
                self.hops_to_sink(node.id)
            )
            .unwrap();
        }
        out
    }
}

fn chain_nodes() -> Vec<NodeInfo> {
    // Sink at the left end, relay at the middle position (9th of 17).
    (0..17)
        .map(|i| NodeInfo {
            id: NodeId(i),
            x_m: f64::from(i) * DEFAULT_SPACING_M,
            y_m: 0.0,
            role: match i {
                0 => Role::PrimarySink,
                8 => Role::BorderRelay,
                _ => Role::Client,
            },
        })
        .collect()
}

/// Two 3x3 clusters joined by a 3-node bridge. The left cluster holds
/// the clients, the middle bridge node is the border relay and the
/// primary sink sits at the center of the right cluster; remaining
/// right-side and bridge nodes are secondary sinks that only forward.
fn dumbbell_nodes() -> Vec<NodeInfo> {
    let mut nodes = Vec::with_capacity(21);
    for r in 0..3 {
        for c in 0..3 {
            nodes.push(NodeInfo {
                id: NodeId((r * 3 + c) as u16),
                x_m: f64::from(c) * DEFAULT_SPACING_M,
                y_m: f64::from(r) * DEFAULT_SPACING_M,
                role: Role::Client,
            });
        }
    }
    for (i, x) in [30.0, 40.0, 50.0].iter().enumerate() {
        nodes.push(NodeInfo {
            id: NodeId((9 + i) as u16),
            x_m: *x,
            y_m: DEFAULT_SPACING_M,
            role: if i == 1 {
                Role::BorderRelay
            } else {
                Role::SecondarySink
            },
        });
    }
    for r in 0..3 {
        for c in 0..3 {
            let id = 12 + r * 3 + c;
            nodes.push(NodeInfo {
                id: NodeId(id as u16),
                x_m: 60.0 + f64::from(c) * DEFAULT_SPACING_M,
                y_m: f64::from(r) * DEFAULT_SPACING_M,
                role: if id == 16 {
                    Role::PrimarySink
                } else {
                    Role::SecondarySink
                },
            });
        }
    }
    nodes
}

fn grid_nodes(side: u16) -> Vec<NodeInfo> {
    // Relay at cell (3,3) (the exact center for 7x7), sink at the
    // lowest-id cell adjacent to it.
    let relay = 3 * side + 3;
    let sink = 2 * side + 3;
    (0..side * side)
        .map(|i| NodeInfo {
            id: NodeId(i),
            x_m: f64::from(i % side) * DEFAULT_SPACING_M,
            y_m: f64::from(i / side) * DEFAULT_SPACING_M,
            role: if i == sink {
                Role::PrimarySink
            } else if i == relay {
                Role::BorderRelay
            } else {
                Role::Client
            },
        })
        .collect()
}
