//! Discrete-event kernel: requests run as chains of processing and
//! transmission activities over placed VMs and embedded channels.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, VecDeque};
use std::hash::{DefaultHasher, Hash, Hasher};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::netos::NetError;
use crate::placement::{Cloud, Embedding, PlacementError, Policy};
use crate::power::{idle_switch_count, EnergyLedger, PowerError};
use crate::topology::{PhysicalTopology, Transform, VirtualTopology, VmSpec};

/// Default processing burst of a middlebox, in MI.
pub const DEFAULT_MIDDLEBOX_BURST_MI: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RequestClass {
    Normal,
    Priority,
}

impl RequestClass {
    pub fn as_str(self) -> &'static str {
        match self {
            RequestClass::Normal => "normal",
            RequestClass::Priority => "priority",
        }
    }
}

impl std::fmt::Display for RequestClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum Activity {
    /// `mi` million instructions on one core of `vm`.
    Processing {
        vm: String,
        mi: f64,
    },
    Transmission {
        channel: String,
        bytes: f64,
    },
}

impl Activity {
    /// The default short burst on a middlebox VM.
    pub fn middlebox(vm: &str) -> Self {
        Activity::Processing {
            vm: vm.to_string(),
            mi: DEFAULT_MIDDLEBOX_BURST_MI,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Request {
    pub id: String,
    pub submission_time: f64,
    pub activities: Vec<Activity>,
    pub class: RequestClass,
}

/// A VM to create at `start_s` and destroy `lifetime_s` later.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VmRequest {
    pub vm: VmSpec,
    pub start_s: f64,
    pub lifetime_s: f64,
}

/// What a middlebox may rewrite about a packet.
#[derive(Debug, Clone, PartialEq)]
pub struct PacketDescriptor {
    pub src: String,
    pub dst: String,
    pub bytes: f64,
}

pub fn apply_middlebox(t: &Transform, mut p: PacketDescriptor) -> PacketDescriptor {
    if let Some(f) = t.size_factor {
        p.bytes *= f;
    }
    if let Some(dst) = &t.set_dst {
        p.dst = dst.clone();
    }
    p
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("invalid request {id}: {reason}")]
    InvalidRequest { id: String, reason: String },
    #[error("unknown vm {0}")]
    UnknownVm(String),
    #[error("unknown channel {0}")]
    UnknownChannel(String),
    #[error("time {at} is before the clock {clock}")]
    Causality { at: f64, clock: f64 },
    #[error("internal inconsistency: {0}")]
    Internal(String),
    #[error(transparent)]
    Placement(#[from] PlacementError),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Power(#[from] PowerError),
}

#[derive(Debug, Clone)]
pub struct Event<P> {
    pub time: f64,
    pub seq: u64,
    pub payload: P,
}

impl<P> PartialEq for Event<P> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<P> Eq for Event<P> {}

impl<P> PartialOrd for Event<P> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<P> Ord for Event<P> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.time
            .total_cmp(&other.time)
            .then(self.seq.cmp(&other.seq))
    }
}

/// Min-queue ordered by (time, insertion sequence).
#[derive(Debug, Clone)]
pub struct EventQueue<P> {
    heap: BinaryHeap<Reverse<Event<P>>>,
    next_seq: u64,
}

impl<P> Default for EventQueue<P> {
    fn default() -> Self {
        EventQueue {
            heap: BinaryHeap::new(),
            next_seq: 0,
        }
    }
}

impl<P> EventQueue<P> {
    pub fn push(&mut self, time: f64, payload: P) -> u64 {
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Reverse(Event { time, seq, payload }));
        seq
    }

    pub fn pop(&mut self) -> Option<Event<P>> {
        self.heap.pop().map(|Reverse(e)| e)
    }

    pub fn peek_time(&self) -> Option<f64> {
        self.heap.peek().map(|Reverse(e)| e.time)
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Payload {
    Arrive(usize),
    ProcessingDone {
        vm: String,
        req: usize,
    },
    FlowStart {
        req: usize,
        channel: String,
        bits: f64,
    },
    VmCreate(usize),
    VmExpire(String),
}

/// Execution state of one VM: free cores and a FIFO of waiting work.
#[derive(Debug, Clone)]
pub struct VmRuntime {
    pub spec: VmSpec,
    pub free_cores: u32,
    pub fifo: VecDeque<(usize, f64)>,
}

#[derive(Debug, Clone)]
struct RequestState {
    req: Request,
    next: usize,
    finish: Option<f64>,
    transform: Option<Transform>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RequestRecord {
    pub request_id: String,
    pub class: RequestClass,
    pub submit_s: f64,
    pub finish_s: f64,
    pub response_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metrics {
    pub time_s: f64,
    /// Completed requests in submission order.
    pub requests: Vec<RequestRecord>,
    pub energy_wh_total: f64,
    pub energy_wh_per_host: BTreeMap<String, f64>,
    pub max_hosts: usize,
    pub idle_switches: usize,
    pub vms_placed: usize,
    pub vms_rejected: usize,
}

impl Metrics {
    pub fn responses(&self, class: RequestClass) -> Vec<f64> {
        self.requests
            .iter()
            .filter(|r| r.class == class)
            .map(|r| r.response_s)
            .collect()
    }

    pub fn mean_response(&self, class: RequestClass) -> Option<f64> {
        let xs = self.responses(class);
        (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
    }
}

/// Largest relative gap seen between a transmission's integrated rate and
/// its size, when auditing.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Audit {
    pub checked_events: u64,
    pub completed_transmissions: u64,
    pub max_volume_error: f64,
}

#[derive(Debug, Clone)]
pub struct Simulation {
    pt: PhysicalTopology,
    cloud: Cloud,
    policy: Policy,
    clock: f64,
    queue: EventQueue<Payload>,
    vms: BTreeMap<String, VmRuntime>,
    transforms: BTreeMap<String, Transform>,
    requests: Vec<RequestState>,
    request_ids: BTreeSet<String>,
    vm_requests: Vec<VmRequest>,
    ledger: EnergyLedger,
    vms_placed: usize,
    rejected: Vec<String>,
    trace: Option<Vec<String>>,
    audit: Option<Audit>,
    events: u64,
}

impl Simulation {
    /// An empty data center; every host is switched off.
    pub fn new(pt: &PhysicalTopology, policy: Policy) -> Self {
        let cloud = Cloud::new(pt);
        let mut ledger = EnergyLedger::new(cloud.dc.host_ids());
        ledger.track_usage(cloud.dc.hosts(), 0.0);
        Simulation {
            pt: pt.clone(),
            cloud,
            policy,
            clock: 0.0,
            queue: EventQueue::default(),
            vms: BTreeMap::new(),
            transforms: BTreeMap::new(),
            requests: Vec::new(),
            request_ids: BTreeSet::new(),
            vm_requests: Vec::new(),
            ledger,
            vms_placed: 0,
            rejected: Vec::new(),
            trace: None,
            audit: None,
            events: 0,
        }
    }

    pub fn enable_trace(&mut self) {
        self.trace.get_or_insert_with(Vec::new);
    }

    /// Trace lines `time,event_kind,subject_id,detail`.
    pub fn trace(&self) -> &[String] {
        self.trace.as_deref().unwrap_or(&[])
    }

    /// Checks link budgets after every event and integrates each
    /// transmission's rate independently.
    pub fn enable_audit(&mut self) {
        self.cloud.net.set_audit(true);
        self.audit.get_or_insert_with(Audit::default);
    }

    pub fn audit(&self) -> Option<Audit> {
        self.audit
    }

    pub fn clock(&self) -> f64 {
        self.clock
    }

    pub fn cloud(&self) -> &Cloud {
        &self.cloud
    }

    pub fn ledger(&self) -> &EnergyLedger {
        &self.ledger
    }

    pub fn events_processed(&self) -> u64 {
        self.events
    }

    /// Places and embeds a virtual topology at the current time.
    pub fn deploy(&mut self, vt: &VirtualTopology) -> Result<Embedding, EngineError> {
        let emb = self.cloud.embed(vt, self.policy, self.clock)?;
        for vm in vt
            .vms
            .iter()
            .cloned()
            .chain(vt.middleboxes.iter().map(|m| m.as_vm()))
        {
            self.add_runtime(vm);
        }
        for mb in &vt.middleboxes {
            self.transforms.insert(mb.id.clone(), mb.transform.clone());
        }
        for (vm, host) in &emb.vm_to_host {
            self.log("place", vm, host);
        }
        self.observe_all()?;
        Ok(emb)
    }

    fn add_runtime(&mut self, spec: VmSpec) {
        self.vms.insert(
            spec.id.clone(),
            VmRuntime {
                free_cores: spec.cores,
                spec,
                fifo: VecDeque::new(),
            },
        );
    }

    pub fn submit(&mut self, r: Request) -> Result<(), EngineError> {
        let bad = |reason: &str| EngineError::InvalidRequest {
            id: r.id.clone(),
            reason: reason.to_string(),
        };
        if !(r.submission_time.is_finite() && r.submission_time >= self.clock) {
            return Err(bad("submission time is before the clock"));
        }
        if r.activities.is_empty() {
            return Err(bad("no activities"));
        }
        if self.request_ids.contains(&r.id) {
            return Err(bad("duplicate id"));
        }
        for a in &r.activities {
            match a {
                Activity::Processing { vm, mi } => {
                    if !self.vms.contains_key(vm) {
                        return Err(EngineError::UnknownVm(vm.clone()));
                    }
                    if !(mi.is_finite() && *mi > 0.0) {
                        return Err(bad("workload must be > 0"));
                    }
                }
                Activity::Transmission { channel, bytes } => {
                    if self.cloud.net.channel(channel).is_none() {
                        return Err(EngineError::UnknownChannel(channel.clone()));
                    }
                    if !(bytes.is_finite() && *bytes > 0.0) {
                        return Err(bad("packet size must be > 0"));
                    }
                }
            }
        }
        self.request_ids.insert(r.id.clone());
        let idx = self.requests.len();
        self.queue.push(r.submission_time, Payload::Arrive(idx));
        self.requests.push(RequestState {
            req: r,
            next: 0,
            finish: None,
            transform: None,
        });
        Ok(())
    }

    pub fn submit_vm(&mut self, v: VmRequest) -> Result<(), EngineError> {
        let bad = |reason: &str| EngineError::InvalidRequest {
            id: v.vm.id.clone(),
            reason: reason.to_string(),
        };
        if !(v.start_s.is_finite() && v.start_s >= self.clock) {
            return Err(bad("start time is before the clock"));
        }
        if !(v.lifetime_s.is_finite() && v.lifetime_s >= 0.0) {
            return Err(bad("lifetime must be >= 0"));
        }
        let idx = self.vm_requests.len();
        self.queue.push(v.start_s, Payload::VmCreate(idx));
        self.vm_requests.push(v);
        Ok(())
    }

    /// Time of the next event, if any.
    pub fn peek(&self) -> Option<f64> {
        let net = self
            .cloud
            .net
            .next_completion()
            .map(|(t, _)| t.max(self.clock));
        match (net, self.queue.peek_time()) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        }
    }

    /// Processes exactly one event and returns its time, or `None` when
    /// nothing is left.
    pub fn step(&mut self) -> Result<Option<f64>, EngineError> {
        let net = self
            .cloud
            .net
            .next_completion()
            .map(|(t, ch)| (t.max(self.clock), ch.to_string()));
        let queued = self.queue.peek_time();
        let t = match (net, queued) {
            (Some((tn, ch)), q) if q.is_none_or(|tq| tn <= tq) => {
                self.clock = tn;
                self.network_finish(&ch)?;
                tn
            }
            (_, None) => return Ok(None),
            (_, Some(_)) => {
                let ev = self.queue.pop().expect("peeked");
                if ev.time < self.clock {
                    return Err(EngineError::Causality {
                        at: ev.time,
                        clock: self.clock,
                    });
                }
                self.clock = ev.time;
                self.dispatch(ev.payload)?;
                ev.time
            }
        };
        self.events += 1;
        if let Some(a) = &mut self.audit {
            a.checked_events += 1;
            self.cloud
                .net
                .check_conservation()
                .map_err(EngineError::Internal)?;
        }
        Ok(Some(t))
    }

    /// Processes every event at or before `t`. In-flight work is left
    /// untouched, so stopping here and continuing is the same as not
    /// stopping.
    pub fn run_until(&mut self, t: f64) -> Result<Metrics, EngineError> {
        if t < self.clock {
            return Err(EngineError::Causality {
                at: t,
                clock: self.clock,
            });
        }
        while self.peek().is_some_and(|next| next <= t) {
            self.step()?;
        }
        self.clock = t;
        Ok(self.metrics())
    }

    pub fn run_to_completion(&mut self) -> Result<Metrics, EngineError> {
        while self.step()?.is_some() {}
        Ok(self.metrics())
    }

    pub fn metrics(&self) -> Metrics {
        let requests = self
            .requests
            .iter()
            .filter_map(|s| {
                s.finish.map(|f| RequestRecord {
                    request_id: s.req.id.clone(),
                    class: s.req.class,
                    submit_s: s.req.submission_time,
                    finish_s: f,
                    response_s: f - s.req.submission_time,
                })
            })
            .collect();
        Metrics {
            time_s: self.clock,
            requests,
            energy_wh_total: self.ledger.total_wh_at(self.clock),
            energy_wh_per_host: self.ledger.per_host_wh_at(self.clock),
            max_hosts: self.ledger.max_hosts_in_use(),
            idle_switches: idle_switch_count(&self.pt, self.cloud.dc.hosts()),
            vms_placed: self.vms_placed,
            vms_rejected: self.rejected.len(),
        }
    }

    /// Ids of VM requests that found no feasible host.
    pub fn rejected_vms(&self) -> &[String] {
        &self.rejected
    }

    /// Hash over clock, request progress, queue, channel rates and host
    /// allocations.
    pub fn state_digest(&self) -> u64 {
        let mut h = DefaultHasher::new();
        self.clock.to_bits().hash(&mut h);
        self.events.hash(&mut h);
        for s in &self.requests {
            s.next.hash(&mut h);
            s.finish.map(f64::to_bits).hash(&mut h);
        }
        self.queue.len().hash(&mut h);
        for (id, rate) in self.cloud.net.rates() {
            id.hash(&mut h);
            rate.hash(&mut h);
        }
        for c in self.cloud.net.channels() {
            c.active_transmissions().hash(&mut h);
            c.per_transmission_rate().to_bits().hash(&mut h);
        }
        for host in self.cloud.dc.hosts() {
            host.allocated_mips.to_bits().hash(&mut h);
            host.allocated_bw.hash(&mut h);
            host.powered_on.hash(&mut h);
        }
        for (id, vm) in &self.vms {
            id.hash(&mut h);
            vm.free_cores.hash(&mut h);
            vm.fifo.len().hash(&mut h);
        }
        self.ledger.total_wh_at(self.clock).to_bits().hash(&mut h);
        self.rejected.hash(&mut h);
        h.finish()
    }

    fn log(&mut self, kind: &str, subject: &str, detail: &str) {
        if let Some(t) = &mut self.trace {
            t.push(format!("{},{kind},{subject},{detail}", self.clock));
        }
    }

    fn dispatch(&mut self, p: Payload) -> Result<(), EngineError> {
        match p {
            Payload::Arrive(req) => {
                let id = self.requests[req].req.id.clone();
                self.log("arrive", &id, self.requests[req].req.class.as_str());
                self.start_activity(req)
            }
            Payload::ProcessingDone { vm, req } => self.processing_done(&vm, req),
            Payload::FlowStart { req, channel, bits } => {
                self.log("xmit_start", &channel, &self.requests[req].req.id.clone());
                self.cloud
                    .net
                    .on_transmission_start(self.clock, &channel, bits, req as u64)?;
                Ok(())
            }
            Payload::VmCreate(i) => self.vm_create(i),
            Payload::VmExpire(vm) => self.vm_expire(&vm),
        }
    }

    fn start_activity(&mut self, req: usize) -> Result<(), EngineError> {
        let state = &self.requests[req];
        match state.req.activities[state.next].clone() {
            Activity::Processing { vm, mi } => {
                let rt = self
                    .vms
                    .get_mut(&vm)
                    .ok_or_else(|| EngineError::UnknownVm(vm.clone()))?;
                if rt.free_cores > 0 {
                    rt.free_cores -= 1;
                    let done = self.clock + mi / rt.spec.mips_per_core;
                    self.queue.push(done, Payload::ProcessingDone { vm, req });
                } else {
                    rt.fifo.push_back((req, mi));
                }
                Ok(())
            }
            Activity::Transmission { channel, bytes } => {
                let (channel, bytes) = match self.requests[req].transform.take() {
                    Some(t) => self.redirect(&t, &channel, bytes)?,
                    None => (channel, bytes),
                };
                let path = &self
                    .cloud
                    .net
                    .channel(&channel)
                    .ok_or_else(|| EngineError::UnknownChannel(channel.clone()))?
                    .path;
                if path.arcs.is_empty() {
                    // Both ends share a host.
                    return self.advance(req);
                }
                let latency = path.latency_s;
                let bits = bytes * 8.0;
                self.queue.push(
                    self.clock + latency,
                    Payload::FlowStart { req, channel, bits },
                );
                Ok(())
            }
        }
    }

    /// Rewrites a transmission per a middlebox transform. A new destination
    /// selects the channel from the same source VM to that destination.
    fn redirect(
        &self,
        t: &Transform,
        channel: &str,
        bytes: f64,
    ) -> Result<(String, f64), EngineError> {
        let ch = self
            .cloud
            .net
            .channel(channel)
            .ok_or_else(|| EngineError::UnknownChannel(channel.to_string()))?;
        let before = PacketDescriptor {
            src: ch.vlink.src.clone(),
            dst: ch.vlink.dst.clone(),
            bytes,
        };
        let after = apply_middlebox(t, before.clone());
        if after.dst == before.dst {
            return Ok((channel.to_string(), after.bytes));
        }
        let target = self
            .cloud
            .net
            .channels()
            .find(|c| c.vlink.src == after.src && c.vlink.dst == after.dst)
            .ok_or_else(|| EngineError::UnknownChannel(format!("{}->{}", after.src, after.dst)))?;
        Ok((target.id.clone(), after.bytes))
    }

    fn processing_done(&mut self, vm: &str, req: usize) -> Result<(), EngineError> {
        let rt = self
            .vms
            .get_mut(vm)
            .ok_or_else(|| EngineError::UnknownVm(vm.to_string()))?;
        match rt.fifo.pop_front() {
            Some((next, mi)) => {
                let done = self.clock + mi / rt.spec.mips_per_core;
                self.queue.push(
                    done,
                    Payload::ProcessingDone {
                        vm: vm.to_string(),
                        req: next,
                    },
                );
            }
            None => rt.free_cores += 1,
        }
        if let Some(t) = self.transforms.get(vm) {
            self.requests[req].transform = Some(t.clone());
        }
        let id = self.requests[req].req.id.clone();
        self.log("proc_done", vm, &id);
        self.advance(req)
    }

    fn network_finish(&mut self, channel: &str) -> Result<(), EngineError> {
        let (done, _) = self.cloud.net.on_transmission_finish(self.clock, channel)?;
        for f in done {
            if let (Some(a), Some(delivered)) = (&mut self.audit, f.delivered) {
                a.completed_transmissions += 1;
                let err = ((delivered - f.bits) / f.bits).abs();
                a.max_volume_error = a.max_volume_error.max(err);
            }
            let req = f.tag as usize;
            let id = self.requests[req].req.id.clone();
            self.log("xmit_done", channel, &id);
            self.advance(req)?;
        }
        Ok(())
    }

    fn advance(&mut self, req: usize) -> Result<(), EngineError> {
        let s = &mut self.requests[req];
        s.next += 1;
        if s.next == s.req.activities.len() {
            s.finish = Some(self.clock);
            let id = s.req.id.clone();
            self.log("complete", &id, "");
            Ok(())
        } else {
            self.start_activity(req)
        }
    }

    fn vm_create(&mut self, i: usize) -> Result<(), EngineError> {
        let v = self.vm_requests[i].clone();
        match self.cloud.dc.place(self.policy, &v.vm) {
            Ok(h) => {
                self.vms_placed += 1;
                let host = self.cloud.dc.hosts()[h].id.clone();
                self.log("place", &v.vm.id, &host);
                self.add_runtime(v.vm.clone());
                self.observe(h)?;
                self.queue
                    .push(self.clock + v.lifetime_s, Payload::VmExpire(v.vm.id));
                Ok(())
            }
            Err(PlacementError::Infeasible(_)) => {
                self.log("reject", &v.vm.id, "no feasible host");
                self.rejected.push(v.vm.id);
                Ok(())
            }
            Err(e) => Err(e.into()),
        }
    }

    fn vm_expire(&mut self, vm: &str) -> Result<(), EngineError> {
        let h = self.cloud.release(vm, self.clock)?;
        self.vms.remove(vm);
        self.log("release", vm, &self.cloud.dc.hosts()[h].id.clone());
        self.observe(h)
    }

    fn observe(&mut self, host: usize) -> Result<(), EngineError> {
        self.ledger
            .observe(host, self.clock, &self.cloud.dc.hosts()[host])?;
        self.ledger.track_usage(self.cloud.dc.hosts(), self.clock);
        Ok(())
    }

    fn observe_all(&mut self) -> Result<(), EngineError> {
        for h in 0..self.cloud.dc.hosts().len() {
            self.ledger
                .observe(h, self.clock, &self.cloud.dc.hosts()[h])?;
        }
        self.ledger.track_usage(self.cloud.dc.hosts(), self.clock);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::{build_fat_tree_with, ChannelClass, HostSpec, MiddleboxSpec, VLinkSpec};

    const GBPS: u64 = 1_000_000_000;

    fn vm(id: &str, mips: f64, cores: u32) -> VmSpec {
        VmSpec {
            id: id.into(),
            type_name: "t".into(),
            mips_per_core: mips,
            cores,
            bandwidth_bps: 1_000_000,
        }
    }

    fn vlink(id: &str, src: &str, dst: &str) -> VLinkSpec {
        VLinkSpec {
            id: id.into(),
            src: src.into(),
            dst: dst.into(),
            bandwidth_bps: 1_000_000,
            max_latency_s: None,
            class: ChannelClass::Standard,
        }
    }

    /// Two VMs on different hosts of a zero-latency tree.
    fn two_tier() -> Simulation {
        let host = HostSpec {
            cores: 4,
            mips_per_core: 4000.0,
            ..HostSpec::default()
        };
        let pt = build_fat_tree_with(2, 1, GBPS, 0.0, host).unwrap();
        let mut sim = Simulation::new(&pt, Policy::WorstFit);
        let vt = VirtualTopology {
            vms: vec![vm("a", 2000.0, 1), vm("b", 3000.0, 1)],
            middleboxes: vec![],
            vlinks: vec![vlink("ab", "a", "b")],
        };
        let emb = sim.deploy(&vt).unwrap();
        assert_ne!(emb.vm_to_host["a"], emb.vm_to_host["b"]);
        sim
    }

    fn proc(vm: &str, mi: f64) -> Activity {
        Activity::Processing { vm: vm.into(), mi }
    }

    fn req(id: &str, t: f64, activities: Vec<Activity>) -> Request {
        Request {
            id: id.into(),
            submission_time: t,
            activities,
            class: RequestClass::Normal,
        }
    }

    #[test]
    fn queue_breaks_ties_by_insertion() {
        let mut q = EventQueue::default();
        q.push(1.0, "b");
        q.push(0.5, "a");
        q.push(1.0, "c");
        let order: Vec<_> = std::iter::from_fn(|| q.pop()).map(|e| e.payload).collect();
        assert_eq!(order, ["a", "b", "c"]);
    }

    #[test]
    fn single_processing() {
        let mut sim = two_tier();
        sim.submit(req("r", 1.0, vec![proc("a", 4000.0)])).unwrap();
        let m = sim.run_to_completion().unwrap();
        assert_eq!(m.requests[0].finish_s, 3.0);
        assert_eq!(m.requests[0].response_s, 2.0);
    }

    #[test]
    fn three_activity_request() {
        let mut sim = two_tier();
        let acts = vec![
            proc("a", 2000.0),
            Activity::Transmission {
                channel: "ab".into(),
                bytes: 1e6,
            },
            proc("b", 3000.0),
        ];
        sim.submit(req("r", 0.0, acts)).unwrap();
        let m = sim.run_to_completion().unwrap();
        assert!((m.requests[0].response_s - 2.008).abs() < 1e-12);
    }

    #[test]
    fn unknown_references_rejected() {
        let mut sim = two_tier();
        let x = Activity::Transmission {
            channel: "zz".into(),
            bytes: 1.0,
        };
        assert!(matches!(
            sim.submit(req("r", 0.0, vec![x])),
            Err(EngineError::UnknownChannel(_))
        ));
        assert!(matches!(
            sim.submit(req("r", 0.0, vec![proc("q", 1.0)])),
            Err(EngineError::UnknownVm(_))
        ));
        assert!(sim.submit(req("r", 0.0, vec![])).is_err());
        assert!(sim.submit(req("r", 0.0, vec![proc("a", 0.0)])).is_err());
    }

    #[test]
    fn empty_simulation() {
        let mut sim = two_tier();
        assert_eq!(sim.step().unwrap(), None);
        let m = sim.run_until(0.0).unwrap();
        assert!(m.requests.is_empty());
    }

    #[test]
    fn fifo_on_single_core() {
        let mut sim = two_tier();
        sim.submit(req("r1", 0.0, vec![proc("a", 2000.0)])).unwrap();
        sim.submit(req("r2", 0.0, vec![proc("a", 2000.0)])).unwrap();
        let m = sim.run_to_completion().unwrap();
        let fin: Vec<f64> = m.requests.iter().map(|r| r.finish_s).collect();
        assert_eq!(fin, [1.0, 2.0]);
    }

    #[test]
    fn transmissions_share_the_channel() {
        let mut sim = two_tier();
        let x = || Activity::Transmission {
            channel: "ab".into(),
            bytes: 125e6,
        };
        sim.submit(req("r1", 0.0, vec![x()])).unwrap();
        sim.submit(req("r2", 0.0, vec![x()])).unwrap();
        let m = sim.run_to_completion().unwrap();
        for r in &m.requests {
            assert!((r.finish_s - 2.0).abs() < 1e-9, "{}", r.finish_s);
        }
    }

    #[test]
    fn split_run_matches_straight_run() {
        let build = || {
            let mut sim = two_tier();
            for i in 0..20 {
                let acts = vec![
                    proc("a", 500.0 + 37.0 * i as f64),
                    Activity::Transmission {
                        channel: "ab".into(),
                        bytes: 1e5 * (1 + i % 3) as f64,
                    },
                    proc("b", 900.0),
                ];
                sim.submit(req(&format!("r{i}"), 0.05 * i as f64, acts))
                    .unwrap();
            }
            sim
        };
        let mut a = build();
        let mut b = build();
        a.run_until(0.37).unwrap();
        a.run_until(0.9).unwrap();
        let ma = a.run_until(3.0).unwrap();
        let mb = b.run_until(3.0).unwrap();
        assert_eq!(ma, mb);
        assert_eq!(a.state_digest(), b.state_digest());
    }

    #[test]
    fn middlebox_transform() {
        let t = Transform {
            set_dst: None,
            size_factor: Some(0.5),
        };
        let p = PacketDescriptor {
            src: "a".into(),
            dst: "b".into(),
            bytes: 1e6,
        };
        assert_eq!(apply_middlebox(&t, p).bytes, 5e5);
    }

    #[test]
    fn middlebox_burst_and_redirect() {
        let host = HostSpec {
            cores: 8,
            mips_per_core: 4000.0,
            ..HostSpec::default()
        };
        let pt = build_fat_tree_with(3, 1, GBPS, 0.0, host).unwrap();
        let mut sim = Simulation::new(&pt, Policy::WorstFit);
        sim.enable_trace();
        let vt = VirtualTopology {
            vms: vec![vm("a", 2000.0, 1), vm("b", 2000.0, 1), vm("c", 2000.0, 1)],
            middleboxes: vec![MiddleboxSpec {
                id: "fw".into(),
                type_name: "firewall".into(),
                mips_per_core: 3000.0,
                cores: 1,
                bandwidth_bps: 1_000_000,
                transform: Transform {
                    set_dst: Some("c".into()),
                    size_factor: Some(0.5),
                },
            }],
            vlinks: vec![vlink("ab", "a", "b"), vlink("ac", "a", "c")],
        };
        sim.deploy(&vt).unwrap();
        let acts = vec![
            Activity::middlebox("fw"),
            Activity::Transmission {
                channel: "ab".into(),
                bytes: 250e6,
            },
        ];
        sim.submit(req("r", 0.0, acts)).unwrap();
        let m = sim.run_to_completion().unwrap();
        // 100/3000 s of burst, then 1e9 bits at 1 Gbps.
        let want = 100.0 / 3000.0 + 1.0;
        assert!((m.requests[0].response_s - want).abs() < 1e-12);
        assert!(sim.trace().iter().any(|l| l.contains("xmit_start,ac,r")));
    }

    #[test]
    fn vm_lifecycle_powers_hosts() {
        let pt = build_fat_tree_with(2, 1, GBPS, 0.0, HostSpec::default()).unwrap();
        let mut sim = Simulation::new(&pt, Policy::BestFit);
        sim.submit_vm(VmRequest {
            vm: vm("v", 4000.0, 16),
            start_s: 0.0,
            lifetime_s: 3600.0,
        })
        .unwrap();
        sim.submit_vm(VmRequest {
            vm: vm("w", 4000.0, 17),
            start_s: 1.0,
            lifetime_s: 10.0,
        })
        .unwrap();
        let m = sim.run_to_completion().unwrap();
        assert_eq!(m.max_hosts, 1);
        assert_eq!(m.vms_rejected, 1);
        assert!((m.energy_wh_total - 250.0).abs() < 1e-9);
        assert_eq!(m.idle_switches, 3);
    }
}
