//! Per-request CSV, summary JSON and response-time statistics.

use std::collections::BTreeMap;
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::engine::{Metrics, RequestClass};

pub const CSV_HEADER: &str = "request_id,class,submit_s,finish_s,response_s";

pub fn requests_csv(m: &Metrics) -> String {
    let mut out = String::with_capacity(64 * (m.requests.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in &m.requests {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.request_id, r.class, r.submit_s, r.finish_s, r.response_s
        )
        .expect("writing to a string");
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanResponse {
    pub normal: Option<f64>,
    pub priority: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub energy_wh_total: f64,
    pub energy_wh_per_host: BTreeMap<String, f64>,
    pub max_hosts: usize,
    pub idle_switches_final: usize,
    pub mean_response_s: MeanResponse,
}

impl Summary {
    pub fn from_metrics(m: &Metrics) -> Self {
        Summary {
            energy_wh_total: m.energy_wh_total,
            energy_wh_per_host: m.energy_wh_per_host.clone(),
            max_hosts: m.max_hosts,
            idle_switches_final: m.idle_switches,
            mean_response_s: MeanResponse {
                normal: m.mean_response(RequestClass::Normal),
                priority: m.mean_response(RequestClass::Priority),
            },
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serializes") + "\n"
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub count: usize,
    pub mean: f64,
    /// Average of the two middle values for even counts.
    pub median: f64,
    /// Nearest rank: the ceil(0.95 n)-th smallest value.
    pub p95: f64,
}

impl Stats {
    pub fn of(xs: &[f64]) -> Option<Stats> {
        if xs.is_empty() {
            return None;
        }
        let mut v = xs.to_vec();
        v.sort_by(f64::total_cmp);
        let n = v.len();
        let median = if n % 2 == 1 {
            v[n / 2]
        } else {
            (v[n / 2 - 1] + v[n / 2]) / 2.0
        };
        let rank = (0.95 * n as f64).ceil() as usize;
        Some(Stats {
            count: n,
            mean: xs.iter().sum::<f64>() / n as f64,
            median,
            p95: v[rank.clamp(1, n) - 1],
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub scenario: String,
    pub seed: u64,
    pub config: serde_json::Value,
    pub response_s: BTreeMap<RequestClass, Stats>,
    pub requests_completed: usize,
    pub energy_wh_total: f64,
    pub max_hosts: usize,
    pub idle_switches_final: usize,
    pub vms_placed: usize,
    pub vms_rejected: usize,
    pub simulated_s: f64,
}

impl RunReport {
    pub fn new<C: Serialize>(scenario: &str, seed: u64, config: &C, m: &Metrics) -> Self {
        let response_s = [RequestClass::Normal, RequestClass::Priority]
            .into_iter()
            .filter_map(|c| Stats::of(&m.responses(c)).map(|s| (c, s)))
            .collect();
        RunReport {
            scenario: scenario.to_string(),
            seed,
            config: serde_json::to_value(config).expect("config serializes"),
            response_s,
            requests_completed: m.requests.len(),
            energy_wh_total: m.energy_wh_total,
            max_hosts: m.max_hosts,
            idle_switches_final: m.idle_switches,
            vms_placed: m.vms_placed,
            vms_rejected: m.vms_rejected,
            simulated_s: m.time_s,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }
}
