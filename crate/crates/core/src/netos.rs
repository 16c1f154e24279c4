//! The simulated network operating system.
//!
//! Links are full duplex: every link contributes two arcs (one per direction)
//! and each arc owns the link's full capacity. A channel is an embedded
//! virtual link pinned to a path of arcs. Priority channels hold a fixed
//! reservation on every arc of their path; standard channels split what is
//! left evenly among the standard channels that currently have traffic, and
//! a channel's rate is the smallest of its per-arc shares. Inside a channel,
//! active transmissions share the channel rate equally (processor sharing).

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BinaryHeap, VecDeque};

use thiserror::Error;

use crate::topology::{Bps, ChannelClass, Graph, NodeKind, PhysicalTopology, VLinkSpec};

/// Index of a directed link: `2 * link` for a→b, `2 * link + 1` for b→a.
pub type ArcId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Infeasibility {
    Bandwidth,
    Latency,
    Disconnected,
}

impl std::fmt::Display for Infeasibility {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Infeasibility::Bandwidth => "bandwidth",
            Infeasibility::Latency => "latency",
            Infeasibility::Disconnected => "disconnected",
        })
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetError {
    #[error("embedding infeasible ({0})")]
    Infeasible(Infeasibility),
    #[error("unknown host {0}")]
    UnknownHost(String),
    #[error("channel {0} already exists")]
    Conflict(String),
    #[error("channel {0} not found")]
    NotFound(String),
    #[error("channel {0} has active transmissions")]
    Busy(String),
    #[error("internal inconsistency: {0}")]
    Internal(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    /// Node ids from source to destination.
    pub nodes: Vec<String>,
    pub arcs: Vec<ArcId>,
    pub latency_s: f64,
}

impl Path {
    pub fn hop_count(&self) -> usize {
        self.arcs.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinkState {
    pub capacity: Bps,
    /// Sum of priority reservations crossing this arc.
    pub reserved: Bps,
    /// Standard channels with traffic crossing this arc.
    pub standard_active: usize,
}

impl LinkState {
    pub fn residual(&self) -> Bps {
        self.capacity - self.reserved
    }
}

/// Minimum-hop simple path from `src` to `dst` whose arcs all have at least
/// `required_bw` unreserved and whose latency stays within `max_latency`.
///
/// Only switches forward traffic: hosts appear solely as endpoints. Among
/// equally short paths the lexicographically smallest node sequence wins.
pub fn find_path(
    pt: &PhysicalTopology,
    arcs: &[LinkState],
    src: &str,
    dst: &str,
    required_bw: Bps,
    max_latency: Option<f64>,
) -> Result<Path, NetError> {
    let graph = Graph::new(pt);
    let latencies: Vec<f64> = pt.links.iter().map(|l| l.latency_s).collect();
    route(&graph, &latencies, arcs, src, dst, required_bw, max_latency)
}

fn route(
    graph: &Graph,
    latencies: &[f64],
    arcs: &[LinkState],
    src: &str,
    dst: &str,
    required_bw: Bps,
    max_latency: Option<f64>,
) -> Result<Path, NetError> {
    let lookup = |id: &str| {
        graph
            .index_of(id)
            .filter(|&i| graph.kind(i) == NodeKind::Host)
            .ok_or_else(|| NetError::UnknownHost(id.to_string()))
    };
    let (s, d) = (lookup(src)?, lookup(dst)?);
    if let Some(p) = search(graph, latencies, arcs, s, d, Some(required_bw), max_latency) {
        return Ok(p);
    }
    let reason = if search(graph, latencies, arcs, s, d, None, None).is_none() {
        Infeasibility::Disconnected
    } else if search(graph, latencies, arcs, s, d, Some(required_bw), None).is_none() {
        Infeasibility::Bandwidth
    } else {
        Infeasibility::Latency
    };
    Err(NetError::Infeasible(reason))
}

struct Label {
    node: usize,
    parent: usize,
    arc: ArcId,
    hops: u32,
    latency: f64,
}

/// Label-setting BFS. Labels are expanded in (hops, node sequence) order;
/// a label is dropped when an earlier one reached the same node with no more
/// hops and no more latency, which cannot hide a better completion.
fn search(
    graph: &Graph,
    latencies: &[f64],
    arcs: &[LinkState],
    src: usize,
    dst: usize,
    required_bw: Option<Bps>,
    max_latency: Option<f64>,
) -> Option<Path> {
    let mut labels = vec![Label {
        node: src,
        parent: usize::MAX,
        arc: 0,
        hops: 0,
        latency: 0.0,
    }];
    if src == dst {
        return Some(build_path(graph, &labels, 0));
    }
    let mut seen: Vec<Vec<(u32, f64)>> = vec![Vec::new(); graph.len()];
    seen[src].push((0, 0.0));
    let mut queue = VecDeque::from([0usize]);

    while let Some(li) = queue.pop_front() {
        let (node, hops, latency) = (labels[li].node, labels[li].hops, labels[li].latency);
        if node != src && graph.kind(node) == NodeKind::Host {
            continue;
        }
        for &(next, link) in graph.neighbors(node) {
            let arc = arc_id(graph, link, node);
            if on_chain(&labels, li, next) {
                continue;
            }
            if required_bw.is_some_and(|bw| arcs[arc].residual() < bw) {
                continue;
            }
            let lat = latency + latencies[link];
            if max_latency.is_some_and(|m| lat > m) {
                continue;
            }
            let key = if max_latency.is_some() { lat } else { 0.0 };
            let n_hops = hops + 1;
            if seen[next].iter().any(|&(h, l)| h <= n_hops && l <= key) {
                continue;
            }
            seen[next].push((n_hops, key));
            labels.push(Label {
                node: next,
                parent: li,
                arc,
                hops: n_hops,
                latency: lat,
            });
            let new = labels.len() - 1;
            if next == dst {
                return Some(build_path(graph, &labels, new));
            }
            queue.push_back(new);
        }
    }
    None
}

fn arc_id(graph: &Graph, link: usize, from: usize) -> ArcId {
    let (a, _) = graph.link_ends(link);
    if a == from {
        2 * link
    } else {
        2 * link + 1
    }
}

fn on_chain(labels: &[Label], mut at: usize, node: usize) -> bool {
    while at != usize::MAX {
        if labels[at].node == node {
            return true;
        }
        at = labels[at].parent;
    }
    false
}

fn build_path(graph: &Graph, labels: &[Label], last: usize) -> Path {
    let mut nodes = Vec::new();
    let mut arcs = Vec::new();
    let mut at = last;
    let latency_s = labels[last].latency;
    while at != usize::MAX {
        nodes.push(graph.id(labels[at].node).to_string());
        if labels[at].parent != usize::MAX {
            arcs.push(labels[at].arc);
        }
        at = labels[at].parent;
    }
    nodes.reverse();
    arcs.reverse();
    Path {
        nodes,
        arcs,
        latency_s,
    }
}

/// Total order over finite floats for the completion heap.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Key(f64);

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

#[derive(Debug, Clone)]
struct Flow {
    tag: u64,
    bits: f64,
    /// Independently integrated volume, maintained in audit mode only.
    delivered: f64,
}

/// Processor-sharing state of one channel.
///
/// `served` is the volume every active flow has received since the channel
/// was created; a flow started when `served == s0` finishes once `served`
/// reaches `s0 + bits`.
#[derive(Debug, Clone, Default)]
struct Flows {
    served: f64,
    since: f64,
    per_flow_rate: f64,
    next_seq: u64,
    heap: BinaryHeap<Reverse<(Key, u64)>>,
    active: BTreeMap<u64, Flow>,
}

impl Flows {
    fn advance(&mut self, now: f64, audit: bool) {
        let dt = now - self.since;
        if dt > 0.0 && !self.active.is_empty() {
            let gained = self.per_flow_rate * dt;
            self.served += gained;
            if audit {
                for f in self.active.values_mut() {
                    f.delivered += gained;
                }
            }
        }
        self.since = self.since.max(now);
    }

    fn retune(&mut self, rate: Bps) {
        let k = self.active.len();
        self.per_flow_rate = if k == 0 { 0.0 } else { rate as f64 / k as f64 };
    }

    fn next_completion(&self) -> Option<f64> {
        let Reverse((Key(finish), _)) = self.heap.peek()?;
        if self.per_flow_rate <= 0.0 {
            return None;
        }
        let remaining = (finish - self.served).max(0.0);
        Some(self.since + remaining / self.per_flow_rate)
    }
}

#[derive(Debug, Clone)]
pub struct Channel {
    pub id: String,
    pub vlink: VLinkSpec,
    pub src_host: String,
    pub dst_host: String,
    pub path: Path,
    pub class: ChannelClass,
    /// Held bandwidth; zero for standard channels.
    pub reservation: Bps,
    /// `Bps::MAX` for channels whose endpoints share a host.
    pub current_rate: Bps,
    flows: Flows,
}

impl Channel {
    pub fn active_transmissions(&self) -> usize {
        self.flows.active.len()
    }

    /// Rate each active transmission currently progresses at.
    pub fn per_transmission_rate(&self) -> f64 {
        self.flows.per_flow_rate
    }

    fn set_rate(&mut self, now: f64, rate: Bps, audit: bool) {
        self.flows.advance(now, audit);
        self.current_rate = rate;
        self.flows.retune(rate);
    }
}

/// A transmission that has delivered its whole volume.
#[derive(Debug, Clone, PartialEq)]
pub struct Finished {
    pub tag: u64,
    pub bits: f64,
    /// Integral of the transmission's rate, when auditing.
    pub delivered: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct NetworkOs {
    graph: Graph,
    latencies: Vec<f64>,
    arcs: Vec<LinkState>,
    channels: BTreeMap<String, Channel>,
    audit: bool,
}

impl NetworkOs {
    pub fn new(pt: &PhysicalTopology) -> Self {
        let arcs = pt
            .links
            .iter()
            .flat_map(|l| {
                let s = LinkState {
                    capacity: l.capacity_bps,
                    reserved: 0,
                    standard_active: 0,
                };
                [s.clone(), s]
            })
            .collect();
        NetworkOs {
            graph: Graph::new(pt),
            latencies: pt.links.iter().map(|l| l.latency_s).collect(),
            arcs,
            channels: BTreeMap::new(),
            audit: false,
        }
    }

    /// Tracks every transmission's rate integral independently of the
    /// processor-sharing bookkeeping.
    pub fn set_audit(&mut self, on: bool) {
        self.audit = on;
    }

    pub fn link_states(&self) -> &[LinkState] {
        &self.arcs
    }

    /// (from, to) node ids of an arc.
    pub fn arc_ends(&self, arc: ArcId) -> (&str, &str) {
        let (a, b) = self.graph.link_ends(arc / 2);
        if arc.is_multiple_of(2) {
            (self.graph.id(a), self.graph.id(b))
        } else {
            (self.graph.id(b), self.graph.id(a))
        }
    }

    pub fn channel(&self, id: &str) -> Option<&Channel> {
        self.channels.get(id)
    }

    pub fn channels(&self) -> impl Iterator<Item = &Channel> {
        self.channels.values()
    }

    pub fn find_path(
        &self,
        src: &str,
        dst: &str,
        required_bw: Bps,
        max_latency: Option<f64>,
    ) -> Result<Path, NetError> {
        route(
            &self.graph,
            &self.latencies,
            &self.arcs,
            src,
            dst,
            required_bw,
            max_latency,
        )
    }

    /// Embeds `vlink` between two hosts and returns the channel id.
    pub fn create_channel(
        &mut self,
        now: f64,
        vlink: &VLinkSpec,
        src_host: &str,
        dst_host: &str,
    ) -> Result<String, NetError> {
        if self.channels.contains_key(&vlink.id) {
            return Err(NetError::Conflict(vlink.id.clone()));
        }
        let path = self.find_path(src_host, dst_host, vlink.bandwidth_bps, vlink.max_latency_s)?;
        let reservation = match vlink.class {
            ChannelClass::Priority => vlink.bandwidth_bps,
            ChannelClass::Standard => 0,
        };
        for &arc in &path.arcs {
            self.arcs[arc].reserved += reservation;
        }
        let channel = Channel {
            id: vlink.id.clone(),
            vlink: vlink.clone(),
            src_host: src_host.to_string(),
            dst_host: dst_host.to_string(),
            path,
            class: vlink.class,
            reservation,
            current_rate: 0,
            flows: Flows {
                since: now,
                ..Flows::default()
            },
        };
        self.channels.insert(vlink.id.clone(), channel);
        self.recompute_rates(now);
        Ok(vlink.id.clone())
    }

    pub fn remove_channel(&mut self, now: f64, id: &str) -> Result<(), NetError> {
        let ch = self
            .channels
            .get(id)
            .ok_or_else(|| NetError::NotFound(id.to_string()))?;
        if ch.active_transmissions() > 0 {
            return Err(NetError::Busy(id.to_string()));
        }
        let ch = self.channels.remove(id).expect("checked above");
        for &arc in &ch.path.arcs {
            self.arcs[arc].reserved -= ch.reservation;
        }
        self.recompute_rates(now);
        Ok(())
    }

    /// Re-derives every channel's rate from the current reservations and
    /// active channel counts. Channels whose rate changes have their
    /// in-flight progress settled at the old rate first.
    pub fn recompute_rates(&mut self, now: f64) -> BTreeMap<String, Bps> {
        for arc in &mut self.arcs {
            arc.standard_active = 0;
        }
        for ch in self.channels.values() {
            if ch.class == ChannelClass::Standard && ch.active_transmissions() > 0 {
                for &arc in &ch.path.arcs {
                    self.arcs[arc].standard_active += 1;
                }
            }
        }
        let audit = self.audit;
        for ch in self.channels.values_mut() {
            let rate = match ch.class {
                _ if ch.path.arcs.is_empty() => Bps::MAX,
                ChannelClass::Priority => ch.reservation,
                ChannelClass::Standard => {
                    // An idle channel reports the share it would get on arrival.
                    let extra = usize::from(ch.active_transmissions() == 0);
                    ch.path
                        .arcs
                        .iter()
                        .map(|&a| {
                            let s = &self.arcs[a];
                            s.residual() / (s.standard_active + extra) as Bps
                        })
                        .min()
                        .expect("nonempty path")
                }
            };
            if rate != ch.current_rate {
                ch.set_rate(now, rate, audit);
            }
        }
        self.rates()
    }

    pub fn rates(&self) -> BTreeMap<String, Bps> {
        self.channels
            .iter()
            .map(|(id, c)| (id.clone(), c.current_rate))
            .collect()
    }

    /// Adds a transmission of `bits` to a channel. `tag` comes back in
    /// [`Finished`] when it completes.
    pub fn on_transmission_start(
        &mut self,
        now: f64,
        id: &str,
        bits: f64,
        tag: u64,
    ) -> Result<BTreeMap<String, Bps>, NetError> {
        if !(bits.is_finite() && bits > 0.0) {
            return Err(NetError::Internal(format!("transmission of {bits} bits")));
        }
        let audit = self.audit;
        let ch = self
            .channels
            .get_mut(id)
            .ok_or_else(|| NetError::NotFound(id.to_string()))?;
        let flows = &mut ch.flows;
        flows.advance(now, audit);
        let seq = flows.next_seq;
        flows.next_seq += 1;
        flows.heap.push(Reverse((Key(flows.served + bits), seq)));
        flows.active.insert(
            seq,
            Flow {
                tag,
                bits,
                delivered: 0.0,
            },
        );
        flows.retune(ch.current_rate);
        Ok(self.recompute_rates(now))
    }

    /// Completes the channel's earliest-finishing transmission (and any that
    /// finish at exactly the same point).
    pub fn on_transmission_finish(
        &mut self,
        now: f64,
        id: &str,
    ) -> Result<(Vec<Finished>, BTreeMap<String, Bps>), NetError> {
        let audit = self.audit;
        let ch = self
            .channels
            .get_mut(id)
            .ok_or_else(|| NetError::NotFound(id.to_string()))?;
        if ch.flows.active.is_empty() {
            return Err(NetError::Internal(format!(
                "finish on channel {id} with no active transmissions"
            )));
        }
        let flows = &mut ch.flows;
        flows.advance(now, audit);
        let mut done = Vec::new();
        let Reverse((Key(first), _)) = *flows.heap.peek().expect("nonempty");
        // Rounding can leave the head a hair short of its target at its
        // scheduled time; the head is complete by construction.
        flows.served = flows.served.max(first);
        while let Some(&Reverse((Key(finish), seq))) = flows.heap.peek() {
            if finish > flows.served {
                break;
            }
            flows.heap.pop();
            let f = flows.active.remove(&seq).expect("heap and map agree");
            done.push(Finished {
                tag: f.tag,
                bits: f.bits,
                delivered: audit.then_some(f.delivered),
            });
        }
        flows.retune(ch.current_rate);
        let rates = self.recompute_rates(now);
        Ok((done, rates))
    }

    /// Earliest pending completion over all channels, ties by channel id.
    pub fn next_completion(&self) -> Option<(f64, &str)> {
        self.channels
            .values()
            .filter_map(|c| c.flows.next_completion().map(|t| (t, c.id.as_str())))
            .min_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(b.1)))
    }

    /// Checks the per-arc budget and priority rates; returns the first breach.
    pub fn check_conservation(&self) -> Result<(), String> {
        let mut granted = vec![0u128; self.arcs.len()];
        for ch in self.channels.values() {
            match ch.class {
                ChannelClass::Priority if !ch.path.arcs.is_empty() => {
                    if ch.current_rate != ch.reservation {
                        return Err(format!(
                            "priority channel {} runs at {} instead of {}",
                            ch.id, ch.current_rate, ch.reservation
                        ));
                    }
                }
                ChannelClass::Standard if ch.active_transmissions() > 0 => {
                    for &a in &ch.path.arcs {
                        granted[a] += u128::from(ch.current_rate);
                    }
                }
                _ => {}
            }
        }
        for (a, s) in self.arcs.iter().enumerate() {
            if s.reserved > s.capacity
                || u128::from(s.reserved) + granted[a] > u128::from(s.capacity)
            {
                let (x, y) = self.arc_ends(a);
                return Err(format!(
                    "arc {x}->{y}: reserved {} + granted {} > capacity {}",
                    s.reserved, granted[a], s.capacity
                ));
            }
        }
        Ok(())
    }
}
