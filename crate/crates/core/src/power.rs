//! Host energy accounting with a linear utilization-to-power model.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::placement::HostState;
use crate::topology::{Graph, NodeKind, PhysicalTopology};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerParams {
    pub p_idle_w: f64,
    pub p_peak_w: f64,
}

impl Default for PowerParams {
    fn default() -> Self {
        PowerParams {
            p_idle_w: 100.0,
            p_peak_w: 250.0,
        }
    }
}

impl PowerParams {
    pub(crate) fn problem(&self) -> Option<String> {
        let ok = self.p_idle_w.is_finite()
            && self.p_peak_w.is_finite()
            && 0.0 <= self.p_idle_w
            && self.p_idle_w <= self.p_peak_w;
        (!ok).then(|| "power must satisfy 0 <= p_idle <= p_peak".to_string())
    }

    /// Power draw of a powered-on host at utilization `u` in [0, 1].
    pub fn at(&self, u: f64) -> f64 {
        self.p_idle_w + (self.p_peak_w - self.p_idle_w) * u
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum PowerError {
    #[error("internal inconsistency: negative interval {0} s")]
    NegativeInterval(f64),
}

/// Watts drawn by a host right now; zero when it is switched off.
pub fn instantaneous_power(hs: &HostState) -> f64 {
    if !hs.powered_on {
        return 0.0;
    }
    hs.power.at(hs.utilization())
}

#[derive(Debug, Clone, PartialEq)]
struct HostEnergy {
    energy_wh: f64,
    /// Power in force since `since`.
    power_w: f64,
    since: f64,
}

/// Per-host energy integrals plus the peak number of hosts in use.
///
/// Power is piecewise constant between calls to [`EnergyLedger::observe`], so
/// the integral is exact up to floating-point summation.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyLedger {
    hosts: Vec<HostEnergy>,
    ids: Vec<String>,
    max_hosts_in_use: usize,
    /// (time, hosts powered on) whenever the count changes.
    usage: Vec<(f64, usize)>,
}

impl EnergyLedger {
    pub fn new(host_ids: Vec<String>) -> Self {
        let hosts = host_ids
            .iter()
            .map(|_| HostEnergy {
                energy_wh: 0.0,
                power_w: 0.0,
                since: 0.0,
            })
            .collect();
        EnergyLedger {
            hosts,
            ids: host_ids,
            max_hosts_in_use: 0,
            usage: Vec::new(),
        }
    }

    /// Adds `power_w` drawn for `dt` seconds to a host's total.
    pub fn accrue(&mut self, host: usize, power_w: f64, dt: f64) -> Result<(), PowerError> {
        if dt < 0.0 {
            return Err(PowerError::NegativeInterval(dt));
        }
        self.hosts[host].energy_wh += power_w * dt / 3600.0;
        Ok(())
    }

    /// Closes the current interval of `host` at `now` and starts a new one at
    /// the host's present power draw.
    pub fn observe(&mut self, host: usize, now: f64, hs: &HostState) -> Result<(), PowerError> {
        let (power, since) = (self.hosts[host].power_w, self.hosts[host].since);
        let new_power = instantaneous_power(hs);
        if power == new_power && now >= since {
            return Ok(());
        }
        self.accrue(host, power, now - since)?;
        let h = &mut self.hosts[host];
        h.power_w = new_power;
        h.since = now;
        Ok(())
    }

    /// Updates the running maximum of simultaneously powered hosts.
    pub fn track_usage(&mut self, states: &[HostState], t: f64) {
        let on = states.iter().filter(|h| h.powered_on).count();
        self.max_hosts_in_use = self.max_hosts_in_use.max(on);
        if self.usage.last().map(|&(_, n)| n) != Some(on) {
            self.usage.push((t, on));
        }
    }

    pub fn max_hosts_in_use(&self) -> usize {
        self.max_hosts_in_use
    }

    /// Step function of powered-on host counts.
    pub fn usage_timeline(&self) -> &[(f64, usize)] {
        &self.usage
    }

    /// Energy of one host up to time `t`, without mutating the ledger.
    pub fn energy_wh_at(&self, host: usize, t: f64) -> f64 {
        let h = &self.hosts[host];
        h.energy_wh + h.power_w * (t - h.since).max(0.0) / 3600.0
    }

    pub fn per_host_wh_at(&self, t: f64) -> BTreeMap<String, f64> {
        self.ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.clone(), self.energy_wh_at(i, t)))
            .collect()
    }

    pub fn total_wh_at(&self, t: f64) -> f64 {
        (0..self.hosts.len()).map(|i| self.energy_wh_at(i, t)).sum()
    }
}

/// Counts switches whose every downstream host is powered off.
///
/// A switch's downstream hosts are those reachable by walking only to
/// strictly lower tiers (edge switches see their hosts, a core sees every
/// host under its edges).
pub fn idle_switch_count(pt: &PhysicalTopology, states: &[HostState]) -> usize {
    let graph = Graph::new(pt);
    let on: BTreeMap<&str, bool> = states
        .iter()
        .map(|h| (h.id.as_str(), h.powered_on))
        .collect();
    let mut idle = 0;
    for s in 0..graph.len() {
        let kind = graph.kind(s);
        if !kind.is_switch() {
            continue;
        }
        let mut stack = vec![s];
        let mut seen = vec![false; graph.len()];
        seen[s] = true;
        let mut any_on = false;
        while let Some(u) = stack.pop() {
            if graph.kind(u) == NodeKind::Host {
                any_on |= on.get(graph.id(u)).copied().unwrap_or(false);
                continue;
            }
            for &(v, _) in graph.neighbors(u) {
                if !seen[v] && graph.kind(v).tier() < graph.kind(u).tier() {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        if !any_on {
            idle += 1;
        }
    }
    idle
}
