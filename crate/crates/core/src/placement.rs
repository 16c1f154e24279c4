//! VM and middlebox placement by two-dimensional bin packing, plus the
//! atomic embedding of whole virtual topologies.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::netos::{NetError, NetworkOs};
use crate::power::PowerParams;
use crate::topology::{Bps, HostSpec, NodeKind, PhysicalTopology, VirtualTopology, VmSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Policy {
    #[default]
    #[serde(alias = "best_fit")]
    BestFit,
    #[serde(alias = "worst_fit")]
    WorstFit,
}

impl std::str::FromStr for Policy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "bestfit" | "best_fit" | "best-fit" => Ok(Policy::BestFit),
            "worstfit" | "worst_fit" | "worst-fit" => Ok(Policy::WorstFit),
            _ => Err(format!(
                "unknown policy {s:?}, expected bestfit or worstfit"
            )),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum PlacementError {
    #[error("placement infeasible: no host can take {0}")]
    Infeasible(String),
    #[error("embedding infeasible for {element}: {source}")]
    Embedding {
        element: String,
        #[source]
        source: NetError,
    },
    #[error("unknown vm {0}")]
    UnknownVm(String),
    #[error("unknown host {0}")]
    UnknownHost(String),
    #[error("vm {0} is already placed")]
    AlreadyPlaced(String),
    #[error("invalid virtual topology: {0}")]
    InvalidTopology(String),
    #[error(transparent)]
    Net(#[from] NetError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct HostState {
    pub id: String,
    pub cores: u32,
    pub mips_per_core: f64,
    /// Capacity of the host's edge link.
    pub nic_bps: Bps,
    pub power: PowerParams,
    pub allocated_mips: f64,
    pub allocated_bw: Bps,
    /// Resident VMs with their (MIPS, bandwidth) grants.
    pub resident: BTreeMap<String, (f64, Bps)>,
    pub powered_on: bool,
}

impl HostState {
    pub fn new(id: String, spec: HostSpec, nic_bps: Bps) -> Self {
        HostState {
            id,
            cores: spec.cores,
            mips_per_core: spec.mips_per_core,
            nic_bps,
            power: spec.power,
            allocated_mips: 0.0,
            allocated_bw: 0,
            resident: BTreeMap::new(),
            powered_on: false,
        }
    }

    pub fn mips_capacity(&self) -> f64 {
        f64::from(self.cores) * self.mips_per_core
    }

    /// Allocated share of CPU capacity.
    pub fn utilization(&self) -> f64 {
        self.allocated_mips / self.mips_capacity()
    }

    /// Whether `vm` fits with both dimensions checked independently.
    pub fn fits(&self, vm: &VmSpec) -> bool {
        self.allocated_mips + vm.total_mips() <= self.mips_capacity()
            && self
                .allocated_bw
                .checked_add(vm.bandwidth_bps)
                .is_some_and(|bw| bw <= self.nic_bps)
    }

    pub(crate) fn admit(&mut self, vm: &VmSpec) {
        self.resident
            .insert(vm.id.clone(), (vm.total_mips(), vm.bandwidth_bps));
        self.resync();
    }

    pub(crate) fn evict(&mut self, vm: &str) -> bool {
        let found = self.resident.remove(vm).is_some();
        self.resync();
        found
    }

    // Allocations are always re-derived from the resident set so that
    // admit followed by evict restores the exact previous values.
    fn resync(&mut self) {
        self.allocated_mips = self.resident.values().map(|r| r.0).sum();
        self.allocated_bw = self.resident.values().map(|r| r.1).sum();
        self.powered_on = !self.resident.is_empty();
    }
}

/// CPU and bandwidth demand of `vm` as fractions of `host`'s capacity.
pub fn normalized_demand(vm: &VmSpec, host: &HostState) -> (f64, f64) {
    (
        vm.total_mips() / host.mips_capacity(),
        vm.bandwidth_bps as f64 / host.nic_bps as f64,
    )
}

/// Free area of the host's normalized (CPU, bandwidth) square.
pub fn idleness(hs: &HostState) -> f64 {
    let free_cpu = 1.0 - hs.allocated_mips / hs.mips_capacity();
    let free_bw = 1.0 - hs.allocated_bw as f64 / hs.nic_bps as f64;
    free_cpu * free_bw
}

/// Picks the feasible host with the least idleness; ties go to the smallest id.
pub fn place_best_fit(vm: &VmSpec, hosts: &[HostState]) -> Result<usize, PlacementError> {
    select(vm, hosts, |cand, best| cand < best)
}

/// Picks the feasible host with the most idleness; ties go to the smallest id.
pub fn place_worst_fit(vm: &VmSpec, hosts: &[HostState]) -> Result<usize, PlacementError> {
    select(vm, hosts, |cand, best| cand > best)
}

pub fn place(policy: Policy, vm: &VmSpec, hosts: &[HostState]) -> Result<usize, PlacementError> {
    match policy {
        Policy::BestFit => place_best_fit(vm, hosts),
        Policy::WorstFit => place_worst_fit(vm, hosts),
    }
}

fn select(
    vm: &VmSpec,
    hosts: &[HostState],
    better: impl Fn(f64, f64) -> bool,
) -> Result<usize, PlacementError> {
    let mut best: Option<(usize, f64)> = None;
    for (i, h) in hosts.iter().enumerate() {
        if !h.fits(vm) {
            continue;
        }
        let score = idleness(h);
        best = match best {
            None => Some((i, score)),
            Some((j, s)) if better(score, s) || (score == s && h.id < hosts[j].id) => {
                Some((i, score))
            }
            keep => keep,
        };
    }
    best.map(|(i, _)| i)
        .ok_or_else(|| PlacementError::Infeasible(vm.id.clone()))
}

/// All hosts of a data center, sorted by id.
#[derive(Debug, Clone, PartialEq)]
pub struct Datacenter {
    hosts: Vec<HostState>,
    index: BTreeMap<String, usize>,
    location: BTreeMap<String, usize>,
}

impl Datacenter {
    pub fn new(pt: &PhysicalTopology) -> Self {
        let kinds: BTreeMap<&str, NodeKind> =
            pt.nodes.iter().map(|n| (n.id.as_str(), n.kind)).collect();
        let mut hosts: Vec<HostState> = pt
            .nodes
            .iter()
            .filter_map(|n| {
                let spec = n.host?;
                // NIC = the host's edge link; any link if it has none.
                let nic = pt
                    .links
                    .iter()
                    .filter_map(|l| {
                        let other = if l.a == n.id {
                            &l.b
                        } else if l.b == n.id {
                            &l.a
                        } else {
                            return None;
                        };
                        let edge = kinds.get(other.as_str()) == Some(&NodeKind::Edge);
                        Some((edge, l.capacity_bps))
                    })
                    .max()
                    .map_or(0, |(_, c)| c);
                Some(HostState::new(n.id.clone(), spec, nic))
            })
            .collect();
        hosts.sort_by(|a, b| a.id.cmp(&b.id));
        let index = hosts
            .iter()
            .enumerate()
            .map(|(i, h)| (h.id.clone(), i))
            .collect();
        Datacenter {
            hosts,
            index,
            location: BTreeMap::new(),
        }
    }

    pub fn hosts(&self) -> &[HostState] {
        &self.hosts
    }

    pub fn host_ids(&self) -> Vec<String> {
        self.hosts.iter().map(|h| h.id.clone()).collect()
    }

    pub fn host_index(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn host_of(&self, vm: &str) -> Option<&str> {
        self.location.get(vm).map(|&i| self.hosts[i].id.as_str())
    }

    pub fn placements(&self) -> impl Iterator<Item = (&str, &str)> {
        self.location
            .iter()
            .map(|(vm, &h)| (vm.as_str(), self.hosts[h].id.as_str()))
    }

    pub fn hosts_in_use(&self) -> usize {
        self.hosts.iter().filter(|h| h.powered_on).count()
    }

    /// Places `vm` by `policy` and returns the chosen host index.
    pub fn place(&mut self, policy: Policy, vm: &VmSpec) -> Result<usize, PlacementError> {
        if self.location.contains_key(&vm.id) {
            return Err(PlacementError::AlreadyPlaced(vm.id.clone()));
        }
        let i = place(policy, vm, &self.hosts)?;
        self.hosts[i].admit(vm);
        self.location.insert(vm.id.clone(), i);
        Ok(i)
    }

    /// Places `vm` on a named host, bypassing the policy.
    pub fn admit_on(&mut self, host: &str, vm: &VmSpec) -> Result<usize, PlacementError> {
        let i = self
            .host_index(host)
            .ok_or_else(|| PlacementError::UnknownHost(host.to_string()))?;
        if self.location.contains_key(&vm.id) {
            return Err(PlacementError::AlreadyPlaced(vm.id.clone()));
        }
        if !self.hosts[i].fits(vm) {
            return Err(PlacementError::Infeasible(vm.id.clone()));
        }
        self.hosts[i].admit(vm);
        self.location.insert(vm.id.clone(), i);
        Ok(i)
    }

    /// Frees a VM's allocation; the host powers off once empty.
    pub fn release(&mut self, vm: &str) -> Result<usize, PlacementError> {
        let i = self
            .location
            .remove(vm)
            .ok_or_else(|| PlacementError::UnknownVm(vm.to_string()))?;
        self.hosts[i].evict(vm);
        Ok(i)
    }
}

/// Realized mapping of one virtual topology.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct Embedding {
    pub vm_to_host: BTreeMap<String, String>,
    pub vlink_to_channel: BTreeMap<String, String>,
}

/// Compute and network state managed together by the planner.
#[derive(Debug, Clone)]
pub struct Cloud {
    pub dc: Datacenter,
    pub net: NetworkOs,
}

impl Cloud {
    pub fn new(pt: &PhysicalTopology) -> Self {
        Cloud {
            dc: Datacenter::new(pt),
            net: NetworkOs::new(pt),
        }
    }

    /// Places every VM and middlebox (declaration order, VMs first) and then
    /// embeds every virtual link. On failure nothing is changed.
    pub fn embed(
        &mut self,
        vt: &VirtualTopology,
        policy: Policy,
        now: f64,
    ) -> Result<Embedding, PlacementError> {
        let report = crate::topology::validate_virtual(vt);
        if !report.is_empty() {
            return Err(PlacementError::InvalidTopology(report.to_string()));
        }
        let snapshot = self.clone();
        match self.embed_inner(vt, policy, now) {
            Ok(e) => Ok(e),
            Err(e) => {
                *self = snapshot;
                Err(e)
            }
        }
    }

    fn embed_inner(
        &mut self,
        vt: &VirtualTopology,
        policy: Policy,
        now: f64,
    ) -> Result<Embedding, PlacementError> {
        let mut emb = Embedding::default();
        let members = vt
            .vms
            .iter()
            .cloned()
            .chain(vt.middleboxes.iter().map(|m| m.as_vm()));
        for vm in members {
            let h = self.dc.place(policy, &vm)?;
            emb.vm_to_host
                .insert(vm.id.clone(), self.dc.hosts()[h].id.clone());
        }
        for vl in &vt.vlinks {
            let src = self
                .dc
                .host_of(&vl.src)
                .ok_or_else(|| PlacementError::UnknownVm(vl.src.clone()))?
                .to_string();
            let dst = self
                .dc
                .host_of(&vl.dst)
                .ok_or_else(|| PlacementError::UnknownVm(vl.dst.clone()))?
                .to_string();
            let ch = self
                .net
                .create_channel(now, vl, &src, &dst)
                .map_err(|source| PlacementError::Embedding {
                    element: vl.id.clone(),
                    source,
                })?;
            emb.vlink_to_channel.insert(vl.id.clone(), ch);
        }
        Ok(emb)
    }

    /// Destroys a VM: its channels go first, then its allocation.
    pub fn release(&mut self, vm: &str, now: f64) -> Result<usize, PlacementError> {
        if self.dc.host_of(vm).is_none() {
            return Err(PlacementError::UnknownVm(vm.to_string()));
        }
        let attached: Vec<String> = self
            .net
            .channels()
            .filter(|c| c.vlink.src == vm || c.vlink.dst == vm)
            .map(|c| c.id.clone())
            .collect();
        if let Some(busy) = attached.iter().find(|id| {
            self.net
                .channel(id)
                .is_some_and(|c| c.active_transmissions() > 0)
        }) {
            return Err(NetError::Busy(busy.clone()).into());
        }
        for id in attached {
            self.net.remove_channel(now, &id)?;
        }
        self.dc.release(vm)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::{build_fat_tree_with, ChannelClass, VLinkSpec};
    use crate::workload::VM_TYPES;

    const GBPS: Bps = 1_000_000_000;

    fn default_host(id: &str) -> HostState {
        HostState::new(id.into(), HostSpec::default(), GBPS)
    }

    fn vm_type(name: &str) -> VmSpec {
        let mut v = VM_TYPES.iter().find(|t| t.name == name).unwrap().spec("x");
        v.id = name.to_string();
        v
    }

    #[test]
    fn app_server_demand() {
        assert_eq!(
            normalized_demand(&vm_type("app"), &default_host("h")),
            (0.375, 0.1)
        );
    }

    #[test]
    fn firewall_demand() {
        assert_eq!(
            normalized_demand(&vm_type("firewall"), &default_host("h")),
            (0.375, 0.5)
        );
    }

    #[test]
    fn full_host_vm_demand() {
        let v = VmSpec {
            id: "v".into(),
            type_name: "full".into(),
            mips_per_core: 4000.0,
            cores: 16,
            bandwidth_bps: GBPS,
        };
        assert_eq!(normalized_demand(&v, &default_host("h")), (1.0, 1.0));
        let mut h = default_host("h");
        assert!(h.fits(&v));
        h.admit(&v);
        assert_eq!(idleness(&h), 0.0);
    }

    #[test]
    fn idleness_values() {
        let mut h = default_host("h");
        assert_eq!(idleness(&h), 1.0);
        h.admit(&vm_type("app"));
        assert_eq!(idleness(&h), 0.625 * 0.9);
        assert_eq!(idleness(&h), 0.5625);
    }

    fn with_idleness(id: &str, target_cpu_free: f64) -> HostState {
        let mut h = HostState::new(
            id.into(),
            HostSpec {
                cores: 10,
                mips_per_core: 100.0,
                power: PowerParams::default(),
            },
            1000,
        );
        let used = (1.0 - target_cpu_free) * 1000.0;
        h.admit(&VmSpec {
            id: format!("{id}-load"),
            type_name: "load".into(),
            mips_per_core: used,
            cores: 1,
            bandwidth_bps: 0,
        });
        h
    }

    fn small_vm() -> VmSpec {
        VmSpec {
            id: "new".into(),
            type_name: "t".into(),
            mips_per_core: 100.0,
            cores: 1,
            bandwidth_bps: 10,
        }
    }

    #[test]
    fn best_fit_takes_most_utilized() {
        let hosts = vec![with_idleness("A", 0.3), with_idleness("B", 0.6)];
        assert_eq!(place_best_fit(&small_vm(), &hosts).unwrap(), 0);
    }

    #[test]
    fn best_fit_skips_infeasible() {
        let hosts = vec![with_idleness("A", 0.05), with_idleness("B", 0.6)];
        assert_eq!(place_best_fit(&small_vm(), &hosts).unwrap(), 1);
    }

    #[test]
    fn worst_fit_takes_least_loaded() {
        let hosts = vec![with_idleness("A", 0.3), with_idleness("B", 0.6)];
        assert_eq!(place_worst_fit(&small_vm(), &hosts).unwrap(), 1);
        let single = vec![with_idleness("A", 0.05), with_idleness("B", 0.3)];
        assert_eq!(place_worst_fit(&small_vm(), &single).unwrap(), 1);
    }

    #[test]
    fn ties_go_to_smallest_id() {
        let hosts = vec![with_idleness("B", 0.5), with_idleness("A", 0.5)];
        assert_eq!(place_best_fit(&small_vm(), &hosts).unwrap(), 1);
        assert_eq!(place_worst_fit(&small_vm(), &hosts).unwrap(), 1);
    }

    #[test]
    fn nothing_fits() {
        let hosts = vec![with_idleness("A", 0.0)];
        assert_eq!(
            place_best_fit(&small_vm(), &hosts),
            Err(PlacementError::Infeasible("new".into()))
        );
    }

    fn full_host_topology(n: usize) -> PhysicalTopology {
        build_fat_tree_with(n, 2, GBPS, 0.001, HostSpec::default()).unwrap()
    }

    fn full_vm(id: &str) -> VmSpec {
        VmSpec {
            id: id.into(),
            type_name: "full".into(),
            mips_per_core: 4000.0,
            cores: 16,
            bandwidth_bps: 1000,
        }
    }

    #[test]
    fn three_tier_lands_on_distinct_hosts() {
        let topo = crate::scenario::three_host_topology(GBPS, 0.001, HostSpec::default());
        let mut cloud = Cloud::new(&topo);
        let vt = VirtualTopology {
            vms: vec![full_vm("web"), full_vm("app"), full_vm("db")],
            middleboxes: vec![],
            vlinks: vec![
                VLinkSpec {
                    id: "l1".into(),
                    src: "web".into(),
                    dst: "app".into(),
                    bandwidth_bps: 1_000_000,
                    max_latency_s: None,
                    class: ChannelClass::Standard,
                },
                VLinkSpec {
                    id: "l2".into(),
                    src: "app".into(),
                    dst: "db".into(),
                    bandwidth_bps: 1_000_000,
                    max_latency_s: None,
                    class: ChannelClass::Priority,
                },
            ],
        };
        let emb = cloud.embed(&vt, Policy::BestFit, 0.0).unwrap();
        let hosts: std::collections::BTreeSet<_> = emb.vm_to_host.values().collect();
        assert_eq!(hosts.len(), 3);
        assert_eq!(emb.vm_to_host["web"], "h1");
        assert_eq!(emb.vm_to_host["db"], "h3");
        assert_eq!(emb.vlink_to_channel.len(), 2);
    }

    #[test]
    fn failed_embed_leaves_state_unchanged() {
        let topo = full_host_topology(1);
        let mut cloud = Cloud::new(&topo);
        let before_dc = cloud.dc.clone();
        let vt = VirtualTopology {
            vms: vec![full_vm("a"), full_vm("b")],
            ..Default::default()
        };
        let err = cloud.embed(&vt, Policy::BestFit, 0.0).unwrap_err();
        assert_eq!(err, PlacementError::Infeasible("b".into()));
        assert_eq!(cloud.dc, before_dc);
    }

    #[test]
    fn failed_vlink_rolls_back_vms() {
        let topo = full_host_topology(2);
        let mut cloud = Cloud::new(&topo);
        let before = cloud.clone();
        let vt = VirtualTopology {
            vms: vec![full_vm("a"), full_vm("b")],
            middleboxes: vec![],
            vlinks: vec![VLinkSpec {
                id: "big".into(),
                src: "a".into(),
                dst: "b".into(),
                bandwidth_bps: 2 * GBPS,
                max_latency_s: None,
                class: ChannelClass::Priority,
            }],
        };
        let err = cloud.embed(&vt, Policy::WorstFit, 0.0).unwrap_err();
        assert!(matches!(err, PlacementError::Embedding { ref element, .. } if element == "big"));
        assert_eq!(cloud.dc, before.dc);
        assert_eq!(cloud.net.link_states(), before.net.link_states());
    }

    #[test]
    fn release_restores_idleness_and_powers_off() {
        let topo = full_host_topology(2);
        let mut dc = Datacenter::new(&topo);
        let before = dc.clone();
        let i = dc.place(Policy::BestFit, &vm_type("db")).unwrap();
        assert!(dc.hosts()[i].powered_on);
        dc.release("db").unwrap();
        assert!(!dc.hosts()[i].powered_on);
        assert_eq!(dc, before);
        assert_eq!(
            dc.release("db"),
            Err(PlacementError::UnknownVm("db".into()))
        );
    }

    #[test]
    fn release_removes_channels() {
        let topo = full_host_topology(2);
        let mut cloud = Cloud::new(&topo);
        let vt = VirtualTopology {
            vms: vec![full_vm("a"), full_vm("b")],
            middleboxes: vec![],
            vlinks: vec![VLinkSpec {
                id: "ab".into(),
                src: "a".into(),
                dst: "b".into(),
                bandwidth_bps: 1000,
                max_latency_s: None,
                class: ChannelClass::Priority,
            }],
        };
        let fresh = cloud.net.link_states().to_vec();
        cloud.embed(&vt, Policy::BestFit, 0.0).unwrap();
        assert!(cloud.net.channel("ab").is_some());
        cloud.release("a", 0.0).unwrap();
        assert!(cloud.net.channel("ab").is_none());
        assert_eq!(cloud.net.link_states(), fresh.as_slice());
    }
}
