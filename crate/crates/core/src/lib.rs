//! Discrete-event simulator for software-defined cloud data centers:
//! hosts and switches, VM placement, bandwidth channels managed by a
//! network controller, request execution and host energy.

pub mod engine;
pub mod netos;
pub mod placement;
pub mod power;
pub mod report;
pub mod scenario;
pub mod topology;
pub mod workload;

pub use engine::{Activity, Metrics, Request, RequestClass, Simulation, VmRequest};
pub use netos::{find_path, NetError, NetworkOs, Path};
pub use placement::{Cloud, Datacenter, HostState, Policy};
pub use power::{EnergyLedger, PowerParams};
pub use topology::{Bps, PhysicalTopology, VirtualTopology};
