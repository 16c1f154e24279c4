//! Physical and virtual data-center topologies.
//!
//! Physical topologies are graphs of hosts and switches joined by undirected,
//! full-duplex links. Virtual topologies describe what a tenant asks for: VMs,
//! middleboxes and the virtual links between them. Both have a JSON form (see
//! [`load_physical`] / [`load_virtual`]) that rejects unknown fields.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::power::PowerParams;

/// Bandwidth in bits per second.
pub type Bps = u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Host,
    Edge,
    Aggregation,
    Core,
}

impl NodeKind {
    pub fn is_switch(self) -> bool {
        self != NodeKind::Host
    }

    /// Tier in the switching hierarchy, hosts at the bottom.
    pub fn tier(self) -> u8 {
        match self {
            NodeKind::Host => 0,
            NodeKind::Edge => 1,
            NodeKind::Aggregation => 2,
            NodeKind::Core => 3,
        }
    }
}

/// Compute resources of a host.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HostSpec {
    pub cores: u32,
    pub mips_per_core: f64,
    pub power: PowerParams,
}

impl HostSpec {
    pub fn total_mips(&self) -> f64 {
        f64::from(self.cores) * self.mips_per_core
    }
}

impl Default for HostSpec {
    /// 16 cores of 4000 MIPS, the host used in the consolidation experiment.
    fn default() -> Self {
        HostSpec {
            cores: 16,
            mips_per_core: 4000.0,
            power: PowerParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhysNode {
    pub id: String,
    pub kind: NodeKind,
    /// Present for hosts only.
    pub host: Option<HostSpec>,
}

impl PhysNode {
    pub fn host(id: impl Into<String>, spec: HostSpec) -> Self {
        PhysNode {
            id: id.into(),
            kind: NodeKind::Host,
            host: Some(spec),
        }
    }

    pub fn switch(id: impl Into<String>, kind: NodeKind) -> Self {
        PhysNode {
            id: id.into(),
            kind,
            host: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Link {
    pub a: String,
    pub b: String,
    pub capacity_bps: Bps,
    pub latency_s: f64,
}

impl Link {
    pub fn new(
        a: impl Into<String>,
        b: impl Into<String>,
        capacity_bps: Bps,
        latency_s: f64,
    ) -> Self {
        Link {
            a: a.into(),
            b: b.into(),
            capacity_bps,
            latency_s,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PhysicalTopology {
    pub nodes: Vec<PhysNode>,
    pub links: Vec<Link>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelClass {
    Standard,
    Priority,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VmSpec {
    pub id: String,
    #[serde(rename = "type")]
    pub type_name: String,
    pub mips_per_core: f64,
    pub cores: u32,
    #[serde(with = "whole_bps")]
    pub bandwidth_bps: Bps,
}

impl VmSpec {
    pub fn total_mips(&self) -> f64 {
        f64::from(self.cores) * self.mips_per_core
    }
}

/// Rewrite applied by a middlebox to the transmission that follows it.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Transform {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub set_dst: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub size_factor: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MiddleboxSpec {
    pub id: String,
    #[serde(rename = "type")]
    pub type_name: String,
    pub mips_per_core: f64,
    pub cores: u32,
    #[serde(with = "whole_bps")]
    pub bandwidth_bps: Bps,
    #[serde(default)]
    pub transform: Transform,
}

impl MiddleboxSpec {
    /// The middlebox viewed as a plain VM for packing purposes.
    pub fn as_vm(&self) -> VmSpec {
        VmSpec {
            id: self.id.clone(),
            type_name: self.type_name.clone(),
            mips_per_core: self.mips_per_core,
            cores: self.cores,
            bandwidth_bps: self.bandwidth_bps,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VLinkSpec {
    pub id: String,
    pub src: String,
    pub dst: String,
    #[serde(with = "whole_bps")]
    pub bandwidth_bps: Bps,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_latency_s: Option<f64>,
    pub class: ChannelClass,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VirtualTopology {
    pub vms: Vec<VmSpec>,
    #[serde(default)]
    pub middleboxes: Vec<MiddleboxSpec>,
    #[serde(default)]
    pub vlinks: Vec<VLinkSpec>,
}

impl VirtualTopology {
    pub fn middlebox(&self, id: &str) -> Option<&MiddleboxSpec> {
        self.middleboxes.iter().find(|m| m.id == id)
    }
}

/// One broken invariant.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Violation {
    DuplicateId(String),
    UnknownEndpoint(String),
    SelfLoop(String),
    DuplicateLink(String, String),
    MissingCompute(String),
    SwitchWithCompute(String),
    InvalidHost { id: String, reason: String },
    InvalidCapacity(String, String),
    InvalidLatency(String, String),
    Unreachable(String),
    EdgeAttachment { host: String, edges: usize },
    InvalidVm { id: String, reason: String },
    InvalidVLink { id: String, reason: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DuplicateId(id) => write!(f, "duplicate id {id}"),
            Violation::UnknownEndpoint(id) => write!(f, "unknown endpoint {id}"),
            Violation::SelfLoop(id) => write!(f, "self-loop on {id}"),
            Violation::DuplicateLink(a, b) => write!(f, "duplicate link {a}-{b}"),
            Violation::MissingCompute(id) => write!(f, "host {id} lacks compute fields"),
            Violation::SwitchWithCompute(id) => write!(f, "switch {id} carries compute fields"),
            Violation::InvalidHost { id, reason } => write!(f, "invalid host {id}: {reason}"),
            Violation::InvalidCapacity(a, b) => write!(f, "link {a}-{b}: capacity must be > 0"),
            Violation::InvalidLatency(a, b) => {
                write!(f, "link {a}-{b}: latency must be finite and >= 0")
            }
            Violation::Unreachable(id) => write!(f, "unreachable: {id}"),
            Violation::EdgeAttachment { host, edges } => {
                write!(
                    f,
                    "host {host} attaches to {edges} edge switches, expected 1"
                )
            }
            Violation::InvalidVm { id, reason } => write!(f, "invalid vm {id}: {reason}"),
            Violation::InvalidVLink { id, reason } => write!(f, "invalid vlink {id}: {reason}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn len(&self) -> usize {
        self.violations.len()
    }

    pub fn messages(&self) -> Vec<String> {
        self.violations.iter().map(ToString::to_string).collect()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.messages().join("; "))
    }
}

#[derive(Debug, Error)]
pub enum TopologyError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("format error at line {line}, column {column}: {message}")]
    Format {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("validation error: {0}")]
    Validation(ValidationReport),
}

impl From<serde_json::Error> for TopologyError {
    fn from(e: serde_json::Error) -> Self {
        TopologyError::Format {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        }
    }
}

/// Checks every invariant of a physical topology.
///
/// Structural problems (duplicate ids, dangling endpoints, self-loops) hide
/// the graph-level checks, so a single bad field yields a single entry.
pub fn validate(pt: &PhysicalTopology) -> ValidationReport {
    let mut out = Vec::new();
    let mut kinds: HashMap<&str, NodeKind> = HashMap::new();
    let mut structural_ok = true;

    for node in &pt.nodes {
        if kinds.insert(node.id.as_str(), node.kind).is_some() {
            out.push(Violation::DuplicateId(node.id.clone()));
            structural_ok = false;
        }
        match (node.kind, &node.host) {
            (NodeKind::Host, None) => out.push(Violation::MissingCompute(node.id.clone())),
            (NodeKind::Host, Some(spec)) => {
                if let Some(reason) = host_spec_problem(spec) {
                    out.push(Violation::InvalidHost {
                        id: node.id.clone(),
                        reason,
                    });
                }
            }
            (_, Some(_)) => out.push(Violation::SwitchWithCompute(node.id.clone())),
            (_, None) => {}
        }
    }

    let mut pairs = HashSet::new();
    for link in &pt.links {
        let mut dangling = false;
        for end in [&link.a, &link.b] {
            if !kinds.contains_key(end.as_str()) {
                out.push(Violation::UnknownEndpoint(end.clone()));
                dangling = true;
            }
        }
        if dangling {
            structural_ok = false;
            continue;
        }
        if link.a == link.b {
            out.push(Violation::SelfLoop(link.a.clone()));
            structural_ok = false;
            continue;
        }
        let key = if link.a < link.b {
            (link.a.as_str(), link.b.as_str())
        } else {
            (link.b.as_str(), link.a.as_str())
        };
        if !pairs.insert(key) {
            out.push(Violation::DuplicateLink(
                key.0.to_string(),
                key.1.to_string(),
            ));
            structural_ok = false;
        }
        if link.capacity_bps == 0 {
            out.push(Violation::InvalidCapacity(link.a.clone(), link.b.clone()));
        }
        if !(link.latency_s.is_finite() && link.latency_s >= 0.0) {
            out.push(Violation::InvalidLatency(link.a.clone(), link.b.clone()));
        }
    }

    if structural_ok {
        graph_violations(pt, &mut out);
    }
    ValidationReport { violations: out }
}

fn host_spec_problem(spec: &HostSpec) -> Option<String> {
    if spec.cores < 1 {
        return Some("cores must be >= 1".into());
    }
    if !(spec.mips_per_core.is_finite() && spec.mips_per_core > 0.0) {
        return Some("mips_per_core must be > 0".into());
    }
    spec.power.problem()
}

fn graph_violations(pt: &PhysicalTopology, out: &mut Vec<Violation>) {
    let graph = Graph::new(pt);
    let hosts: Vec<usize> = (0..graph.len())
        .filter(|&i| graph.kind(i) == NodeKind::Host)
        .collect();
    if hosts.is_empty() {
        return;
    }

    // Component labelling; the component holding the most hosts (ties: the
    // one containing the smallest host id) is the data center proper.
    let mut comp = vec![usize::MAX; graph.len()];
    let mut n_comp = 0;
    for start in 0..graph.len() {
        if comp[start] != usize::MAX {
            continue;
        }
        let mut queue = VecDeque::from([start]);
        comp[start] = n_comp;
        while let Some(u) = queue.pop_front() {
            for &(v, _) in graph.neighbors(u) {
                if comp[v] == usize::MAX {
                    comp[v] = n_comp;
                    queue.push_back(v);
                }
            }
        }
        n_comp += 1;
    }
    let mut count = vec![0usize; n_comp];
    for &h in &hosts {
        count[comp[h]] += 1;
    }
    let mut sorted_hosts = hosts;
    sorted_hosts.sort_by(|&x, &y| graph.id(x).cmp(graph.id(y)));
    let best = sorted_hosts
        .iter()
        .map(|&h| count[comp[h]])
        .max()
        .unwrap_or(0);
    let main = sorted_hosts
        .iter()
        .map(|&h| comp[h])
        .find(|&c| count[c] == best)
        .expect("hosts nonempty");

    for &h in &sorted_hosts {
        if comp[h] != main {
            out.push(Violation::Unreachable(graph.id(h).to_string()));
            continue;
        }
        let edges: BTreeSet<usize> = graph
            .neighbors(h)
            .iter()
            .filter(|&&(v, _)| graph.kind(v) == NodeKind::Edge)
            .map(|&(v, _)| v)
            .collect();
        if edges.len() != 1 {
            out.push(Violation::EdgeAttachment {
                host: graph.id(h).to_string(),
                edges: edges.len(),
            });
        }
    }
}

/// Checks every invariant of a virtual topology.
pub fn validate_virtual(vt: &VirtualTopology) -> ValidationReport {
    let mut out = Vec::new();
    let mut nodes = HashSet::new();
    let vm_like = vt
        .vms
        .iter()
        .map(|v| (&v.id, v.mips_per_core, v.cores, v.bandwidth_bps))
        .chain(
            vt.middleboxes
                .iter()
                .map(|m| (&m.id, m.mips_per_core, m.cores, m.bandwidth_bps)),
        );
    for (id, mips, cores, bw) in vm_like {
        if !nodes.insert(id.as_str()) {
            out.push(Violation::DuplicateId(id.clone()));
        }
        let reason = if !(mips.is_finite() && mips > 0.0) {
            Some("mips_per_core must be > 0")
        } else if cores == 0 {
            Some("cores must be > 0")
        } else if bw == 0 {
            Some("bandwidth must be > 0")
        } else {
            None
        };
        if let Some(reason) = reason {
            out.push(Violation::InvalidVm {
                id: id.clone(),
                reason: reason.into(),
            });
        }
    }
    for mb in &vt.middleboxes {
        if let Some(f) = mb.transform.size_factor {
            if !(f.is_finite() && f > 0.0) {
                out.push(Violation::InvalidVm {
                    id: mb.id.clone(),
                    reason: "size_factor must be > 0".into(),
                });
            }
        }
        if let Some(dst) = &mb.transform.set_dst {
            if !nodes.contains(dst.as_str()) {
                out.push(Violation::UnknownEndpoint(dst.clone()));
            }
        }
    }

    let mut vlink_ids = HashSet::new();
    for vl in &vt.vlinks {
        if !vlink_ids.insert(vl.id.as_str()) {
            out.push(Violation::DuplicateId(vl.id.clone()));
        }
        for end in [&vl.src, &vl.dst] {
            if !nodes.contains(end.as_str()) {
                out.push(Violation::UnknownEndpoint(end.clone()));
            }
        }
        if vl.bandwidth_bps == 0 {
            out.push(Violation::InvalidVLink {
                id: vl.id.clone(),
                reason: "bandwidth must be > 0".into(),
            });
        }
        if let Some(lat) = vl.max_latency_s {
            if !(lat.is_finite() && lat > 0.0) {
                out.push(Violation::InvalidVLink {
                    id: vl.id.clone(),
                    reason: "max_latency must be > 0".into(),
                });
            }
        }
    }
    ValidationReport { violations: out }
}

/// Two-tier tree: hosts under edge switches, every edge switch under one core.
///
/// Ids are `h<i>`, `e<i>`, `c0`, zero-based and assigned left to right.
pub fn build_fat_tree(
    n_hosts: usize,
    hosts_per_edge: usize,
    link_capacity: Bps,
    link_latency: f64,
) -> Result<PhysicalTopology, TopologyError> {
    build_fat_tree_with(
        n_hosts,
        hosts_per_edge,
        link_capacity,
        link_latency,
        HostSpec::default(),
    )
}

pub fn build_fat_tree_with(
    n_hosts: usize,
    hosts_per_edge: usize,
    link_capacity: Bps,
    link_latency: f64,
    host: HostSpec,
) -> Result<PhysicalTopology, TopologyError> {
    if n_hosts == 0 || hosts_per_edge == 0 {
        return Err(TopologyError::InvalidArgument(
            "n_hosts and hosts_per_edge must be >= 1".into(),
        ));
    }
    if link_capacity == 0 {
        return Err(TopologyError::InvalidArgument(
            "link capacity must be > 0".into(),
        ));
    }
    if !(link_latency.is_finite() && link_latency >= 0.0) {
        return Err(TopologyError::InvalidArgument(
            "link latency must be finite and >= 0".into(),
        ));
    }
    if let Some(reason) = host_spec_problem(&host) {
        return Err(TopologyError::InvalidArgument(reason));
    }

    let n_edges = n_hosts.div_ceil(hosts_per_edge);
    let mut nodes = Vec::with_capacity(n_hosts + n_edges + 1);
    let mut links = Vec::with_capacity(n_hosts + n_edges);
    nodes.extend((0..n_hosts).map(|i| PhysNode::host(format!("h{i}"), host)));
    nodes.extend((0..n_edges).map(|i| PhysNode::switch(format!("e{i}"), NodeKind::Edge)));
    nodes.push(PhysNode::switch("c0", NodeKind::Core));
    for i in 0..n_hosts {
        let edge = i / hosts_per_edge;
        links.push(Link::new(
            format!("h{i}"),
            format!("e{edge}"),
            link_capacity,
            link_latency,
        ));
    }
    for e in 0..n_edges {
        links.push(Link::new(
            format!("e{e}"),
            "c0",
            link_capacity,
            link_latency,
        ));
    }
    Ok(PhysicalTopology { nodes, links })
}

/// Dense adjacency view of a physical topology.
///
/// Neighbour lists are sorted by neighbour id so that every traversal built
/// on top of it visits nodes in lexicographic order.
#[derive(Debug, Clone)]
pub struct Graph {
    ids: Vec<String>,
    kinds: Vec<NodeKind>,
    index: HashMap<String, usize>,
    adj: Vec<Vec<(usize, usize)>>,
    /// (a, b) node indices per link.
    ends: Vec<(usize, usize)>,
}

impl Graph {
    /// Links whose endpoints are unknown are skipped.
    pub fn new(pt: &PhysicalTopology) -> Self {
        let ids: Vec<String> = pt.nodes.iter().map(|n| n.id.clone()).collect();
        let kinds = pt.nodes.iter().map(|n| n.kind).collect();
        let mut index = HashMap::with_capacity(ids.len());
        for (i, id) in ids.iter().enumerate() {
            index.entry(id.clone()).or_insert(i);
        }
        let mut adj = vec![Vec::new(); ids.len()];
        let mut ends = Vec::with_capacity(pt.links.len());
        for (l, link) in pt.links.iter().enumerate() {
            match (index.get(&link.a), index.get(&link.b)) {
                (Some(&a), Some(&b)) => {
                    adj[a].push((b, l));
                    adj[b].push((a, l));
                    ends.push((a, b));
                }
                _ => ends.push((usize::MAX, usize::MAX)),
            }
        }
        for list in &mut adj {
            list.sort_by(|x, y| ids[x.0].cmp(&ids[y.0]).then(x.1.cmp(&y.1)));
        }
        Graph {
            ids,
            kinds,
            index,
            adj,
            ends,
        }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn id(&self, i: usize) -> &str {
        &self.ids[i]
    }

    pub fn kind(&self, i: usize) -> NodeKind {
        self.kinds[i]
    }

    /// `(neighbour, link index)` pairs sorted by neighbour id.
    pub fn neighbors(&self, i: usize) -> &[(usize, usize)] {
        &self.adj[i]
    }

    pub fn link_ends(&self, link: usize) -> (usize, usize) {
        self.ends[link]
    }
}

// ---------------------------------------------------------------------------
// JSON

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPhysical {
    nodes: Vec<RawNode>,
    links: Vec<RawLink>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNode {
    id: String,
    kind: NodeKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cores: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mips_per_core: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    p_idle_w: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    p_peak_w: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLink {
    a: String,
    b: String,
    #[serde(with = "whole_bps")]
    capacity_bps: Bps,
    latency_s: f64,
}

/// Parses and validates a physical topology document.
pub fn load_physical(document: &[u8]) -> Result<PhysicalTopology, TopologyError> {
    let raw: RawPhysical = serde_json::from_slice(document)?;
    let mut shape = Vec::new();
    let mut nodes = Vec::with_capacity(raw.nodes.len());
    for n in raw.nodes {
        let has_compute = n.cores.is_some()
            || n.mips_per_core.is_some()
            || n.p_idle_w.is_some()
            || n.p_peak_w.is_some();
        let host = match n.kind {
            NodeKind::Host => match (n.cores, n.mips_per_core) {
                (Some(cores), Some(mips)) => {
                    let defaults = PowerParams::default();
                    Some(HostSpec {
                        cores,
                        mips_per_core: mips,
                        power: PowerParams {
                            p_idle_w: n.p_idle_w.unwrap_or(defaults.p_idle_w),
                            p_peak_w: n.p_peak_w.unwrap_or(defaults.p_peak_w),
                        },
                    })
                }
                _ => {
                    shape.push(Violation::MissingCompute(n.id.clone()));
                    None
                }
            },
            _ => {
                if has_compute {
                    shape.push(Violation::SwitchWithCompute(n.id.clone()));
                }
                None
            }
        };
        nodes.push(PhysNode {
            id: n.id,
            kind: n.kind,
            host,
        });
    }
    let links = raw
        .links
        .into_iter()
        .map(|l| Link::new(l.a, l.b, l.capacity_bps, l.latency_s))
        .collect();
    let pt = PhysicalTopology { nodes, links };
    let mut report = validate(&pt);
    // Missing-compute hosts were already reported by `validate`.
    shape.retain(|v| !matches!(v, Violation::MissingCompute(_)));
    report.violations.extend(shape);
    if report.is_empty() {
        Ok(pt)
    } else {
        Err(TopologyError::Validation(report))
    }
}

pub fn physical_to_json(pt: &PhysicalTopology) -> String {
    let raw = RawPhysical {
        nodes: pt
            .nodes
            .iter()
            .map(|n| RawNode {
                id: n.id.clone(),
                kind: n.kind,
                cores: n.host.map(|h| h.cores),
                mips_per_core: n.host.map(|h| h.mips_per_core),
                p_idle_w: n.host.map(|h| h.power.p_idle_w),
                p_peak_w: n.host.map(|h| h.power.p_peak_w),
            })
            .collect(),
        links: pt
            .links
            .iter()
            .map(|l| RawLink {
                a: l.a.clone(),
                b: l.b.clone(),
                capacity_bps: l.capacity_bps,
                latency_s: l.latency_s,
            })
            .collect(),
    };
    serde_json::to_string_pretty(&raw).expect("topology serializes")
}

/// Parses and validates a virtual topology document.
pub fn load_virtual(document: &[u8]) -> Result<VirtualTopology, TopologyError> {
    let vt: VirtualTopology = serde_json::from_slice(document)?;
    let report = validate_virtual(&vt);
    if report.is_empty() {
        Ok(vt)
    } else {
        Err(TopologyError::Validation(report))
    }
}

pub fn virtual_to_json(vt: &VirtualTopology) -> String {
    serde_json::to_string_pretty(vt).expect("topology serializes")
}

/// Bandwidth fields are JSON numbers (`1e9` is fine) that must hold a whole,
/// non-negative number of bits per second.
mod whole_bps {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &u64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(*v)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<u64, D::Error> {
        let x = f64::deserialize(d)?;
        if !x.is_finite() || x < 0.0 || x.fract() != 0.0 || x > 9.007_199_254_740_992e15 {
            return Err(de::Error::custom(format!(
                "bandwidth {x} is not a whole number of bits per second"
            )));
        }
        Ok(x as u64)
    }
}

/// Node ids grouped by kind, in declaration order.
pub fn ids_by_kind(pt: &PhysicalTopology) -> BTreeMap<NodeKind, Vec<String>> {
    let mut map: BTreeMap<NodeKind, Vec<String>> = BTreeMap::new();
    for n in &pt.nodes {
        map.entry(n.kind).or_default().push(n.id.clone());
    }
    map
}
