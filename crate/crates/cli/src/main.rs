use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use sdcsim::engine::{EngineError, Metrics};
use sdcsim::netos::NetError;
use sdcsim::placement::{PlacementError, Policy};
use sdcsim::report::{requests_csv, RunReport, Summary};
use sdcsim::scenario::{
    run_files, run_usecase1, run_usecase2, ScenarioError, UseCase1Config, UseCase2Config,
};
use sdcsim::topology::{load_physical, load_virtual, TopologyError};
use sdcsim::workload::{load_jsonl, Congestion, UseCase1Workload, WorkloadError};

#[derive(Parser)]
#[command(
    name = "sdcsim",
    version,
    about = "Software-defined cloud data center simulator"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum OnOff {
    On,
    Off,
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyArg {
    Bestfit,
    Worstfit,
}

impl From<PolicyArg> for Policy {
    fn from(p: PolicyArg) -> Policy {
        match p {
            PolicyArg::Bestfit => Policy::BestFit,
            PolicyArg::Worstfit => Policy::WorstFit,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum CongestionArg {
    Low,
    Medium,
    High,
}

impl From<CongestionArg> for Congestion {
    fn from(c: CongestionArg) -> Congestion {
        match c {
            CongestionArg::Low => Congestion::Low,
            CongestionArg::Medium => Congestion::Medium,
            CongestionArg::High => Congestion::High,
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a scenario described by files.
    Run {
        #[arg(long)]
        physical: PathBuf,
        #[arg(long)]
        r#virtual: PathBuf,
        /// JSON lines of requests and VM requests.
        #[arg(long)]
        workload: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Stop after this simulated time; runs to completion if absent.
        #[arg(long)]
        until: Option<f64>,
        #[arg(long, value_enum, default_value = "bestfit")]
        policy: PolicyArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Three-tier web application with and without priority channels.
    Usecase1 {
        #[arg(long, value_enum)]
        congestion: CongestionArg,
        #[arg(long, value_enum)]
        priority: OnOff,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Bandwidth reserved by each priority channel.
        #[arg(long)]
        reservation_bps: Option<u64>,
        #[arg(long)]
        link_capacity_bps: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// VM consolidation with best fit or worst fit placement.
    Usecase2 {
        #[arg(long, value_enum)]
        policy: PolicyArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check topology files and print every violation.
    Validate {
        #[arg(long)]
        physical: PathBuf,
        #[arg(long)]
        r#virtual: Option<PathBuf>,
    },
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Failure {
            code,
            message: message.into(),
        }
    }
}

const EXIT_VALIDATION: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;
const EXIT_INTERNAL: u8 = 4;

fn net_code(e: &NetError) -> u8 {
    match e {
        NetError::Infeasible(_) => EXIT_INFEASIBLE,
        NetError::Internal(_) => EXIT_INTERNAL,
        _ => EXIT_VALIDATION,
    }
}

fn placement_code(e: &PlacementError) -> u8 {
    match e {
        PlacementError::Infeasible(_) | PlacementError::Embedding { .. } => EXIT_INFEASIBLE,
        PlacementError::Net(n) => net_code(n),
        _ => EXIT_VALIDATION,
    }
}

impl From<ScenarioError> for Failure {
    fn from(e: ScenarioError) -> Self {
        let code = match &e {
            ScenarioError::Topology(_) | ScenarioError::Workload(_) => EXIT_VALIDATION,
            ScenarioError::Engine(e) => match e {
                EngineError::InvalidRequest { .. }
                | EngineError::UnknownVm(_)
                | EngineError::UnknownChannel(_) => EXIT_VALIDATION,
                EngineError::Placement(p) => placement_code(p),
                EngineError::Net(n) => net_code(n),
                EngineError::Causality { .. }
                | EngineError::Internal(_)
                | EngineError::Power(_) => EXIT_INTERNAL,
            },
        };
        Failure::new(code, e.to_string())
    }
}

impl From<TopologyError> for Failure {
    fn from(e: TopologyError) -> Self {
        ScenarioError::from(e).into()
    }
}

impl From<WorkloadError> for Failure {
    fn from(e: WorkloadError) -> Self {
        ScenarioError::from(e).into()
    }
}

fn read(path: &Path) -> Result<Vec<u8>, Failure> {
    fs::read(path).map_err(|e| Failure::new(EXIT_VALIDATION, format!("{}: {e}", path.display())))
}

/// Writes the three output files. Anything written before a failure is
/// removed again, along with `out` if it was created here.
fn emit(out: &Path, m: &Metrics, report: &RunReport) -> Result<(), Failure> {
    let created = !out.exists();
    let files = [
        ("requests.csv", requests_csv(m)),
        ("summary.json", Summary::from_metrics(m).to_json()),
        ("report.json", report.to_json()),
    ];
    let mut written = Vec::new();
    let result = fs::create_dir_all(out).and_then(|_| {
        for (name, body) in &files {
            let path = out.join(name);
            written.push(path.clone());
            fs::write(&path, body)?;
        }
        Ok(())
    });
    result.map_err(|e| {
        for p in &written {
            let _ = fs::remove_file(p);
        }
        if created {
            let _ = fs::remove_dir(out);
        }
        Failure::new(1, format!("{}: {e}", out.display()))
    })
}

fn print_summary(m: &Metrics) {
    let s = Summary::from_metrics(m);
    let fmt = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.6}"));
    println!(
        "requests {}  mean normal {} s  mean priority {} s  energy {:.3} Wh  max hosts {}  idle switches {}",
        m.requests.len(),
        fmt(s.mean_response_s.normal),
        fmt(s.mean_response_s.priority),
        s.energy_wh_total,
        s.max_hosts,
        s.idle_switches_final,
    );
}

fn execute(cmd: Cmd) -> Result<(), Failure> {
    match cmd {
        Cmd::Run {
            physical,
            r#virtual,
            workload,
            seed,
            until,
            policy,
            out,
        } => {
            if until.is_some_and(|t| !(t.is_finite() && t >= 0.0)) {
                return Err(Failure::new(EXIT_VALIDATION, "--until must be >= 0"));
            }
            let pt = load_physical(&read(&physical)?)?;
            let vt = load_virtual(&read(&r#virtual)?)?;
            let items = load_jsonl(BufReader::new(read(&workload)?.as_slice()))?;
            let policy = Policy::from(policy);
            let m = run_files(&pt, &vt, items, policy, until)?;
            let config = json!({
                "physical": physical.display().to_string(),
                "virtual": r#virtual.display().to_string(),
                "workload": workload.display().to_string(),
                "until": until,
                "policy": policy,
            });
            emit(&out, &m, &RunReport::new("run", seed, &config, &m))?;
            print_summary(&m);
        }
        Cmd::Usecase1 {
            congestion,
            priority,
            seed,
            reservation_bps,
            link_capacity_bps,
            out,
        } => {
            let on = matches!(priority, OnOff::On);
            let mut cfg = UseCase1Config::new(UseCase1Workload::new(congestion.into(), on, seed));
            cfg.reservation_bps = reservation_bps;
            if let Some(c) = link_capacity_bps {
                cfg.link_capacity_bps = c;
            }
            let m = run_usecase1(&cfg)?;
            emit(&out, &m, &RunReport::new("usecase1", seed, &cfg, &m))?;
            print_summary(&m);
        }
        Cmd::Usecase2 { policy, seed, out } => {
            let cfg = UseCase2Config::new(policy.into(), seed);
            let m = run_usecase2(&cfg)?;
            emit(&out, &m, &RunReport::new("usecase2", seed, &cfg, &m))?;
            print_summary(&m);
            if m.vms_rejected > 0 {
                println!("rejected {} VM requests", m.vms_rejected);
            }
        }
        Cmd::Validate {
            physical,
            r#virtual,
        } => {
            let mut problems = Vec::new();
            match load_physical(&read(&physical)?) {
                Ok(_) => {}
                Err(TopologyError::Validation(r)) => problems.extend(r.messages()),
                Err(e) => return Err(e.into()),
            }
            if let Some(v) = r#virtual {
                match load_virtual(&read(&v)?) {
                    Ok(_) => {}
                    Err(TopologyError::Validation(r)) => problems.extend(r.messages()),
                    Err(e) => return Err(e.into()),
                }
            }
            if !problems.is_empty() {
                return Err(Failure::new(EXIT_VALIDATION, problems.join("\n")));
            }
            println!("ok");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse().cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
