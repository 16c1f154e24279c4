//! Canned experiments and the generic file-driven run.

use serde::Serialize;
use thiserror::Error;

use crate::engine::{EngineError, Metrics, Simulation};
use crate::placement::Policy;
use crate::topology::{
    build_fat_tree_with, Bps, ChannelClass, HostSpec, Link, NodeKind, PhysNode, PhysicalTopology,
    TopologyError, VLinkSpec, VirtualTopology, VmSpec,
};
use crate::workload::{
    gen_usecase1, gen_usecase2, UseCase1Workload, UseCase2Workload, WorkloadError, WorkloadItem,
    CHANNEL_SIZES, HOPS, PRIORITY_CHANNELS, STANDARD_CHANNELS,
};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Workload(#[from] WorkloadError),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

/// Three hosts, two edge switches and one core switch:
/// h1 and h2 under e1, h3 under e2, both edges under c1.
pub fn three_host_topology(capacity_bps: Bps, latency_s: f64, host: HostSpec) -> PhysicalTopology {
    let nodes = vec![
        PhysNode::host("h1", host),
        PhysNode::host("h2", host),
        PhysNode::host("h3", host),
        PhysNode::switch("e1", NodeKind::Edge),
        PhysNode::switch("e2", NodeKind::Edge),
        PhysNode::switch("c1", NodeKind::Core),
    ];
    let links = [
        ("h1", "e1"),
        ("h2", "e1"),
        ("h3", "e2"),
        ("e1", "c1"),
        ("e2", "c1"),
    ]
    .into_iter()
    .map(|(a, b)| Link::new(a, b, capacity_bps, latency_s))
    .collect();
    PhysicalTopology { nodes, links }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UseCase1Config {
    pub workload: UseCase1Workload,
    /// Same reservation on every priority channel instead of the
    /// per-hop default.
    pub reservation_bps: Option<Bps>,
    pub link_capacity_bps: Bps,
    pub link_latency_s: f64,
    /// Bandwidth requested (not reserved) by the standard channels.
    pub standard_vlink_bps: Bps,
    pub host: HostSpec,
}

impl UseCase1Config {
    pub fn new(workload: UseCase1Workload) -> Self {
        UseCase1Config {
            workload,
            reservation_bps: None,
            link_capacity_bps: 4_000_000,
            link_latency_s: 0.001,
            standard_vlink_bps: 100_000,
            host: HostSpec {
                cores: 16,
                mips_per_core: 20_000.0,
                ..HostSpec::default()
            },
        }
    }
}

/// Twice the mean offered load of hop `hop` at `rate` requests per second.
pub fn default_reservation_bps(hop: usize, rate: f64) -> Bps {
    let mean_bytes = CHANNEL_SIZES[hop].mean().expect("lognormal mean is finite");
    (2.0 * rate * mean_bytes * 8.0).ceil() as Bps
}

/// Web, app and db VMs each taking a whole host, the four standard hop
/// channels and, when priority is on, their reserved twins.
pub fn usecase1_virtual(cfg: &UseCase1Config) -> VirtualTopology {
    let vm = |name: &str| VmSpec {
        id: name.to_string(),
        type_name: name.to_string(),
        mips_per_core: cfg.host.mips_per_core,
        cores: cfg.host.cores,
        bandwidth_bps: cfg.link_capacity_bps,
    };
    let mut vlinks: Vec<VLinkSpec> = HOPS
        .iter()
        .zip(STANDARD_CHANNELS)
        .map(|(&(src, dst), id)| VLinkSpec {
            id: id.to_string(),
            src: src.to_string(),
            dst: dst.to_string(),
            bandwidth_bps: cfg.standard_vlink_bps,
            max_latency_s: None,
            class: ChannelClass::Standard,
        })
        .collect();
    if cfg.workload.priority {
        for (hop, (&(src, dst), id)) in HOPS.iter().zip(PRIORITY_CHANNELS).enumerate() {
            vlinks.push(VLinkSpec {
                id: id.to_string(),
                src: src.to_string(),
                dst: dst.to_string(),
                bandwidth_bps: cfg
                    .reservation_bps
                    .unwrap_or_else(|| default_reservation_bps(hop, cfg.workload.priority_rate)),
                max_latency_s: None,
                class: ChannelClass::Priority,
            });
        }
    }
    VirtualTopology {
        vms: vec![vm("web"), vm("app"), vm("db")],
        middleboxes: vec![],
        vlinks,
    }
}

/// A deployed use-case-1 simulation with its requests submitted.
pub fn prepare_usecase1(cfg: &UseCase1Config) -> Result<Simulation, ScenarioError> {
    let pt = three_host_topology(cfg.link_capacity_bps, cfg.link_latency_s, cfg.host);
    let mut sim = Simulation::new(&pt, Policy::BestFit);
    sim.deploy(&usecase1_virtual(cfg))?;
    for r in gen_usecase1(&cfg.workload)? {
        sim.submit(r)?;
    }
    Ok(sim)
}

pub fn run_usecase1(cfg: &UseCase1Config) -> Result<Metrics, ScenarioError> {
    Ok(prepare_usecase1(cfg)?.run_to_completion()?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UseCase2Config {
    pub workload: UseCase2Workload,
    pub policy: Policy,
    pub n_hosts: usize,
    pub hosts_per_edge: usize,
    pub link_capacity_bps: Bps,
    pub link_latency_s: f64,
    pub host: HostSpec,
}

impl UseCase2Config {
    pub fn new(policy: Policy, seed: u64) -> Self {
        UseCase2Config {
            workload: UseCase2Workload::new(seed),
            policy,
            n_hosts: 40,
            hosts_per_edge: 10,
            link_capacity_bps: 1_000_000_000,
            link_latency_s: 0.001,
            host: HostSpec::default(),
        }
    }
}

pub fn prepare_usecase2(cfg: &UseCase2Config) -> Result<Simulation, ScenarioError> {
    let pt = build_fat_tree_with(
        cfg.n_hosts,
        cfg.hosts_per_edge,
        cfg.link_capacity_bps,
        cfg.link_latency_s,
        cfg.host,
    )?;
    let mut sim = Simulation::new(&pt, cfg.policy);
    for v in gen_usecase2(&cfg.workload)? {
        sim.submit_vm(v)?;
    }
    Ok(sim)
}

pub fn run_usecase2(cfg: &UseCase2Config) -> Result<Metrics, ScenarioError> {
    Ok(prepare_usecase2(cfg)?.run_to_completion()?)
}

/// Deploys `vt`, feeds every workload item and runs to `until` (or until
/// nothing is left).
pub fn run_files(
    pt: &PhysicalTopology,
    vt: &VirtualTopology,
    items: Vec<WorkloadItem>,
    policy: Policy,
    until: Option<f64>,
) -> Result<Metrics, ScenarioError> {
    let mut sim = Simulation::new(pt, policy);
    sim.deploy(vt)?;
    for item in items {
        match item {
            WorkloadItem::Request(r) => sim.submit(r)?,
            WorkloadItem::Vm(v) => sim.submit_vm(v)?,
        }
    }
    Ok(match until {
        Some(t) => sim.run_until(t)?,
        None => sim.run_to_completion()?,
    })
}
