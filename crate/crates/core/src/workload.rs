//! Seeded random streams, distribution samplers and the two scenario
//! workload generators.
//!
//! # Random streams
//!
//! Every random quantity draws from its own xoshiro256++ stream. The base
//! generator is seeded from the scenario seed with SplitMix64 (the reference
//! `seed_from_u64`), and stream `k` is that generator advanced by `k` calls
//! of the standard 2^128-step `jump()`. Uniforms are `((x >> 11) + 0.5) / 2^53`
//! over the raw 64-bit output, which lies strictly inside (0, 1); normals use
//! the cosine branch of Box-Muller on two consecutive uniforms. These rules
//! are enough to reproduce any stream bit for bit in another language.

use std::io::{BufRead, Write};

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{Activity, Request, RequestClass, VmRequest};
use crate::topology::{Bps, VmSpec};

/// Named random streams. The discriminant is the jump count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u32)]
pub enum Stream {
    NormalArrivals = 0,
    NormalSizes = 1,
    NormalWorkloads = 2,
    PriorityArrivals = 3,
    PrioritySizes = 4,
    PriorityWorkloads = 5,
    VmArrivals = 6,
    VmTypes = 7,
    VmLifetimes = 8,
}

#[derive(Debug, Clone)]
pub struct Rng(Xoshiro256PlusPlus);

impl Rng {
    pub fn stream(seed: u64, stream: Stream) -> Self {
        let mut g = Xoshiro256PlusPlus::seed_from_u64(seed);
        for _ in 0..stream as u32 {
            g.jump();
        }
        Rng(g)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    /// Uniform on the open interval (0, 1).
    pub fn uniform(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    pub fn standard_normal(&mut self) -> f64 {
        let u1 = self.uniform();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// Uniform index in `0..n`.
    pub fn index(&mut self, n: usize) -> usize {
        ((self.uniform() * n as f64) as usize).min(n - 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum DistSpec {
    Lognormal {
        mu: f64,
        sigma: f64,
    },
    Pareto {
        location: f64,
        shape: f64,
    },
    Exponential {
        rate: f64,
    },
    /// Constant gap `1 / rate`.
    FixedRate {
        rate: f64,
    },
}

#[derive(Debug, Error, PartialEq)]
pub enum WorkloadError {
    #[error("invalid distribution: {0}")]
    InvalidDist(String),
    #[error("invalid workload config: {0}")]
    InvalidConfig(String),
    #[error("workload line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("io error: {0}")]
    Io(String),
}

impl DistSpec {
    pub fn validate(&self) -> Result<(), WorkloadError> {
        let pos = |x: f64| x.is_finite() && x > 0.0;
        let ok = match *self {
            DistSpec::Lognormal { mu, sigma } => mu.is_finite() && pos(sigma),
            DistSpec::Pareto { location, shape } => pos(location) && pos(shape),
            DistSpec::Exponential { rate } | DistSpec::FixedRate { rate } => pos(rate),
        };
        if ok {
            Ok(())
        } else {
            Err(WorkloadError::InvalidDist(format!("{self:?}")))
        }
    }

    /// Closed-form mean, `None` where it diverges.
    pub fn mean(&self) -> Option<f64> {
        match *self {
            DistSpec::Lognormal { mu, sigma } => Some((mu + sigma * sigma / 2.0).exp()),
            DistSpec::Pareto { location, shape } => {
                (shape > 1.0).then(|| shape * location / (shape - 1.0))
            }
            DistSpec::Exponential { rate } | DistSpec::FixedRate { rate } => Some(1.0 / rate),
        }
    }
}

pub fn sample(d: &DistSpec, rng: &mut Rng) -> f64 {
    match *d {
        DistSpec::Lognormal { mu, sigma } => (mu + sigma * rng.standard_normal()).exp(),
        DistSpec::Pareto { location, shape } => location / rng.uniform().powf(1.0 / shape),
        DistSpec::Exponential { rate } => -rng.uniform().ln() / rate,
        DistSpec::FixedRate { rate } => 1.0 / rate,
    }
}

// ---------------------------------------------------------------------------
// Published request characteristics (3-tier web application)

/// Request inter-arrival times; available as an alternative arrival model.
pub const TABLE_INTER_ARRIVAL: DistSpec = DistSpec::Lognormal {
    mu: 1.5627,
    sigma: 1.5458,
};

/// Packet-size distributions for channels 1 to 4.
pub const CHANNEL_SIZES: [DistSpec; 4] = [
    DistSpec::Lognormal {
        mu: 5.6129,
        sigma: 0.1343,
    },
    DistSpec::Lognormal {
        mu: 4.6455,
        sigma: 0.8013,
    },
    DistSpec::Lognormal {
        mu: 3.6839,
        sigma: 0.8261,
    },
    DistSpec::Lognormal {
        mu: 7.0104,
        sigma: 0.8481,
    },
];

/// Processing workload sizes, in MI.
pub const WORKLOAD_SIZES: DistSpec = DistSpec::Pareto {
    location: 12.3486,
    shape: 0.9713,
};

/// One row of the VM configuration table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VmType {
    pub name: &'static str,
    pub mips_per_core: f64,
    pub cores: u32,
    pub bandwidth_bps: Bps,
}

impl VmType {
    pub fn spec(&self, id: &str) -> VmSpec {
        VmSpec {
            id: id.to_string(),
            type_name: self.name.to_string(),
            mips_per_core: self.mips_per_core,
            cores: self.cores,
            bandwidth_bps: self.bandwidth_bps,
        }
    }
}

pub const VM_TYPES: [VmType; 5] = [
    VmType {
        name: "web",
        mips_per_core: 2000.0,
        cores: 2,
        bandwidth_bps: 100_000_000,
    },
    VmType {
        name: "app",
        mips_per_core: 3000.0,
        cores: 8,
        bandwidth_bps: 100_000_000,
    },
    VmType {
        name: "db",
        mips_per_core: 2400.0,
        cores: 8,
        bandwidth_bps: 100_000_000,
    },
    VmType {
        name: "proxy",
        mips_per_core: 2000.0,
        cores: 8,
        bandwidth_bps: 500_000_000,
    },
    VmType {
        name: "firewall",
        mips_per_core: 3000.0,
        cores: 8,
        bandwidth_bps: 500_000_000,
    },
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Congestion {
    Low,
    Medium,
    High,
}

impl Congestion {
    pub const ALL: [Congestion; 3] = [Congestion::Low, Congestion::Medium, Congestion::High];

    /// Normal-traffic request rate (requests per second).
    pub fn normal_rate(self) -> f64 {
        match self {
            Congestion::Low => 100.0,
            Congestion::Medium => 250.0,
            Congestion::High => 500.0,
        }
    }
}

impl std::str::FromStr for Congestion {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "low" => Ok(Congestion::Low),
            "medium" => Ok(Congestion::Medium),
            "high" => Ok(Congestion::High),
            _ => Err(format!("unknown congestion level {s:?}")),
        }
    }
}

/// Hop `i` of a request (web→app, app→db, db→app, app→web) on the shared
/// standard channels.
pub const STANDARD_CHANNELS: [&str; 4] = ["ch1", "ch2", "ch3", "ch4"];
/// The same hops on the priority channels.
pub const PRIORITY_CHANNELS: [&str; 4] = ["ch1p", "ch2p", "ch3p", "ch4p"];
/// (source, destination) VM of each hop.
pub const HOPS: [(&str, &str); 4] = [("web", "app"), ("app", "db"), ("db", "app"), ("app", "web")];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UseCase1Workload {
    pub congestion: Congestion,
    /// Whether priority requests get their own channels.
    pub priority: bool,
    pub seed: u64,
    /// Arrivals are generated on `[0, duration_s)`.
    pub duration_s: f64,
    pub priority_rate: f64,
    /// Replaces Poisson arrivals for both classes when set.
    pub inter_arrival: Option<DistSpec>,
}

impl UseCase1Workload {
    pub fn new(congestion: Congestion, priority: bool, seed: u64) -> Self {
        UseCase1Workload {
            congestion,
            priority,
            seed,
            duration_s: 10.0,
            priority_rate: 100.0,
            inter_arrival: None,
        }
    }
}

/// Two independent request streams, merged by submission time (normal first
/// on ties). Each class owns its arrival, size and workload streams, so the
/// priority stream is identical across congestion levels for a given seed.
pub fn gen_usecase1(cfg: &UseCase1Workload) -> Result<Vec<Request>, WorkloadError> {
    if !(cfg.duration_s.is_finite() && cfg.duration_s >= 0.0) {
        return Err(WorkloadError::InvalidConfig("duration must be >= 0".into()));
    }
    if let Some(d) = &cfg.inter_arrival {
        d.validate()?;
    }
    let normal = class_stream(cfg, RequestClass::Normal, cfg.congestion.normal_rate())?;
    let priority = class_stream(cfg, RequestClass::Priority, cfg.priority_rate)?;
    let mut all: Vec<Request> = normal.into_iter().chain(priority).collect();
    // Stable: normal requests precede priority ones at equal times.
    all.sort_by(|a, b| a.submission_time.total_cmp(&b.submission_time));
    Ok(all)
}

fn class_stream(
    cfg: &UseCase1Workload,
    class: RequestClass,
    rate: f64,
) -> Result<Vec<Request>, WorkloadError> {
    let arrivals_dist = match cfg.inter_arrival {
        Some(d) => d,
        None => {
            let d = DistSpec::Exponential { rate };
            d.validate()?;
            d
        }
    };
    let (sa, ss, sw, prefix) = match class {
        RequestClass::Normal => (
            Stream::NormalArrivals,
            Stream::NormalSizes,
            Stream::NormalWorkloads,
            "n",
        ),
        RequestClass::Priority => (
            Stream::PriorityArrivals,
            Stream::PrioritySizes,
            Stream::PriorityWorkloads,
            "p",
        ),
    };
    let mut arrivals = Rng::stream(cfg.seed, sa);
    let mut sizes = Rng::stream(cfg.seed, ss);
    let mut works = Rng::stream(cfg.seed, sw);
    let channels = if class == RequestClass::Priority && cfg.priority {
        PRIORITY_CHANNELS
    } else {
        STANDARD_CHANNELS
    };

    let mut out = Vec::new();
    let mut t = 0.0;
    loop {
        t += sample(&arrivals_dist, &mut arrivals);
        if t >= cfg.duration_s {
            break;
        }
        let mut work = || sample(&WORKLOAD_SIZES, &mut works);
        let mut size = |hop: usize| sample(&CHANNEL_SIZES[hop], &mut sizes);
        let activities = vec![
            Activity::Processing {
                vm: "web".into(),
                mi: work(),
            },
            Activity::Transmission {
                channel: channels[0].into(),
                bytes: size(0),
            },
            Activity::Processing {
                vm: "app".into(),
                mi: work(),
            },
            Activity::Transmission {
                channel: channels[1].into(),
                bytes: size(1),
            },
            Activity::Processing {
                vm: "db".into(),
                mi: work(),
            },
            Activity::Transmission {
                channel: channels[2].into(),
                bytes: size(2),
            },
            Activity::Transmission {
                channel: channels[3].into(),
                bytes: size(3),
            },
        ];
        out.push(Request {
            id: format!("{prefix}{}", out.len()),
            submission_time: t,
            activities,
            class,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UseCase2Workload {
    pub n: usize,
    pub seed: u64,
    /// VM arrivals per second.
    pub arrival_rate: f64,
    pub life_location: f64,
    pub life_shape: f64,
}

impl UseCase2Workload {
    pub fn new(seed: u64) -> Self {
        UseCase2Workload {
            n: 100,
            seed,
            arrival_rate: 1.0 / 30.0,
            life_location: 1000.0,
            life_shape: 1.5,
        }
    }
}

/// VM creation requests with exponential gaps, uniformly drawn types and
/// Pareto lifetimes.
pub fn gen_usecase2(cfg: &UseCase2Workload) -> Result<Vec<VmRequest>, WorkloadError> {
    let gaps = DistSpec::Exponential {
        rate: cfg.arrival_rate,
    };
    let life = DistSpec::Pareto {
        location: cfg.life_location,
        shape: cfg.life_shape,
    };
    gaps.validate()?;
    life.validate()?;
    let mut arrivals = Rng::stream(cfg.seed, Stream::VmArrivals);
    let mut types = Rng::stream(cfg.seed, Stream::VmTypes);
    let mut lifetimes = Rng::stream(cfg.seed, Stream::VmLifetimes);
    let width = cfg.n.saturating_sub(1).to_string().len().max(3);
    let mut t = 0.0;
    Ok((0..cfg.n)
        .map(|i| {
            t += sample(&gaps, &mut arrivals);
            let ty = VM_TYPES[types.index(VM_TYPES.len())];
            VmRequest {
                vm: ty.spec(&format!("vm{i:0width$}")),
                start_s: t,
                lifetime_s: sample(&life, &mut lifetimes),
            }
        })
        .collect())
}

/// One line of a workload file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum WorkloadItem {
    Request(Request),
    Vm(VmRequest),
}

pub fn dump_jsonl<W: Write>(items: &[WorkloadItem], mut out: W) -> Result<(), WorkloadError> {
    for item in items {
        let line = serde_json::to_string(item).expect("workload items serialize");
        writeln!(out, "{line}").map_err(|e| WorkloadError::Io(e.to_string()))?;
    }
    Ok(())
}

/// Reads JSON lines; blank lines are skipped.
pub fn load_jsonl<R: BufRead>(input: R) -> Result<Vec<WorkloadItem>, WorkloadError> {
    let mut items = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line.map_err(|e| WorkloadError::Io(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let item = serde_json::from_str(&line).map_err(|e| WorkloadError::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        items.push(item);
    }
    Ok(items)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let mut a = Rng::stream(7, Stream::NormalSizes);
        let mut b = Rng::stream(7, Stream::NormalSizes);
        let mut c = Rng::stream(7, Stream::PrioritySizes);
        let xs: Vec<u64> = (0..4).map(|_| a.next_u64()).collect();
        let ys: Vec<u64> = (0..4).map(|_| b.next_u64()).collect();
        let zs: Vec<u64> = (0..4).map(|_| c.next_u64()).collect();
        assert_eq!(xs, ys);
        assert_ne!(xs, zs);
    }

    #[test]
    fn uniform_stays_open() {
        let mut r = Rng::stream(1, Stream::VmTypes);
        for _ in 0..100_000 {
            let u = r.uniform();
            assert!(u > 0.0 && u < 1.0);
        }
    }

    #[test]
    fn pareto_respects_location() {
        let mut r = Rng::stream(3, Stream::NormalWorkloads);
        for _ in 0..100_000 {
            assert!(sample(&WORKLOAD_SIZES, &mut r) >= 12.3486);
        }
    }

    #[test]
    fn fixed_rate_is_constant() {
        let mut r = Rng::stream(3, Stream::NormalArrivals);
        assert_eq!(sample(&DistSpec::FixedRate { rate: 4.0 }, &mut r), 0.25);
    }

    #[test]
    fn invalid_dists() {
        for d in [
            DistSpec::Lognormal {
                mu: 0.0,
                sigma: 0.0,
            },
            DistSpec::Pareto {
                location: 0.0,
                shape: 1.0,
            },
            DistSpec::Exponential { rate: -1.0 },
            DistSpec::FixedRate { rate: f64::NAN },
        ] {
            assert!(d.validate().is_err(), "{d:?}");
        }
    }

    #[test]
    fn usecase1_counts_are_poisson_plausible() {
        let reqs = gen_usecase1(&UseCase1Workload::new(Congestion::Low, true, 42)).unwrap();
        let normal = reqs
            .iter()
            .filter(|r| r.class == RequestClass::Normal)
            .count() as f64;
        let prio = reqs.len() as f64 - normal;
        // Mean 1000, sd ~31.6.
        assert!((normal - 1000.0).abs() < 3.0 * 1000f64.sqrt(), "{normal}");
        assert!((prio - 1000.0).abs() < 3.0 * 1000f64.sqrt(), "{prio}");
        assert!(reqs
            .windows(2)
            .all(|w| w[0].submission_time <= w[1].submission_time));
    }

    #[test]
    fn usecase1_is_deterministic() {
        let cfg = UseCase1Workload::new(Congestion::Medium, false, 9);
        assert_eq!(gen_usecase1(&cfg).unwrap(), gen_usecase1(&cfg).unwrap());
    }

    #[test]
    fn priority_stream_is_shared_across_levels() {
        let prio = |c| -> Vec<Request> {
            gen_usecase1(&UseCase1Workload::new(c, true, 5))
                .unwrap()
                .into_iter()
                .filter(|r| r.class == RequestClass::Priority)
                .collect()
        };
        assert_eq!(prio(Congestion::Low), prio(Congestion::High));
    }

    #[test]
    fn priority_requests_use_priority_channels_only_when_enabled() {
        for on in [false, true] {
            let reqs = gen_usecase1(&UseCase1Workload::new(Congestion::Low, on, 1)).unwrap();
            for r in reqs.iter().filter(|r| r.class == RequestClass::Priority) {
                for a in &r.activities {
                    if let Activity::Transmission { channel, .. } = a {
                        assert_eq!(channel.ends_with('p'), on);
                    }
                }
            }
        }
    }

    #[test]
    fn usecase2_shape() {
        for seed in [0, 1, 99] {
            let vms = gen_usecase2(&UseCase2Workload::new(seed)).unwrap();
            assert_eq!(vms.len(), 100);
            for v in &vms {
                assert!(VM_TYPES.iter().any(|t| t.name == v.vm.type_name));
                assert!(v.lifetime_s >= 1000.0);
            }
            assert!(vms.windows(2).all(|w| w[0].start_s < w[1].start_s));
        }
    }

    #[test]
    fn jsonl_round_trip() {
        let mut items: Vec<WorkloadItem> = gen_usecase1(&UseCase1Workload {
            duration_s: 0.05,
            ..UseCase1Workload::new(Congestion::Low, true, 3)
        })
        .unwrap()
        .into_iter()
        .map(WorkloadItem::Request)
        .collect();
        items.extend(
            gen_usecase2(&UseCase2Workload {
                n: 3,
                ..UseCase2Workload::new(3)
            })
            .unwrap()
            .into_iter()
            .map(WorkloadItem::Vm),
        );
        let mut buf = Vec::new();
        dump_jsonl(&items, &mut buf).unwrap();
        assert_eq!(load_jsonl(buf.as_slice()).unwrap(), items);
    }

    #[test]
    fn jsonl_reports_line() {
        let err = load_jsonl("\n{\"kind\":\"nope\"}\n".as_bytes()).unwrap_err();
        assert!(matches!(err, WorkloadError::Parse { line: 2, .. }));
    }
}
