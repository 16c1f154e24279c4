//! Browser bindings for the simulator. Each export returns a JSON string.

use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

use sdcsim::netos::NetworkOs;
use sdcsim::placement::Policy;
use sdcsim::scenario::{
    prepare_usecase2, run_usecase1, three_host_topology, UseCase1Config, UseCase2Config,
};
use sdcsim::topology::{Bps, ChannelClass, HostSpec, VLinkSpec};
use sdcsim::workload::{Congestion, UseCase1Workload};
use sdcsim::RequestClass;

/// Mean response times per congestion level, with and without priority
/// channels. A zero reservation keeps the per-hop default.
pub fn usecase1_sweep_json(seed: u64, reservation_bps: Bps) -> Result<String, String> {
    let mut rows = Vec::new();
    for c in Congestion::ALL {
        let mut row = json!({ "congestion": c });
        for (key, on) in [("off", false), ("on", true)] {
            let mut cfg = UseCase1Config::new(UseCase1Workload::new(c, on, seed));
            cfg.reservation_bps = (reservation_bps > 0).then_some(reservation_bps);
            let m = run_usecase1(&cfg).map_err(|e| e.to_string())?;
            row[key] = json!({
                "priority": m.mean_response(RequestClass::Priority),
                "normal": m.mean_response(RequestClass::Normal),
            });
        }
        rows.push(row);
    }
    Ok(Value::Array(rows).to_string())
}

/// Hosts powered on over time and total energy for one placement policy.
pub fn usecase2_json(policy: &str, seed: u64) -> Result<String, String> {
    let policy: Policy = policy.parse()?;
    let mut sim =
        prepare_usecase2(&UseCase2Config::new(policy, seed)).map_err(|e| e.to_string())?;
    let m = sim.run_to_completion().map_err(|e| e.to_string())?;
    Ok(json!({
        "policy": policy,
        "max_hosts": m.max_hosts,
        "energy_wh": m.energy_wh_total,
        "rejected": m.vms_rejected,
        "timeline": sim.ledger().usage_timeline(),
    })
    .to_string())
}

/// Rates on the three-host fabric when one priority channel h1->h3 holds
/// `reservation_mbps` and `standard` busy standard channels share the rest.
pub fn three_host_rates_json(reservation_mbps: f64, standard: u32) -> Result<String, String> {
    if !(reservation_mbps.is_finite() && reservation_mbps >= 0.0) {
        return Err("reservation must be >= 0".into());
    }
    let pt = three_host_topology(1_000_000_000, 0.001, HostSpec::default());
    let mut net = NetworkOs::new(&pt);
    let link = |id: String, dst: &str, bw: Bps, class| VLinkSpec {
        id,
        src: "h1".into(),
        dst: dst.into(),
        bandwidth_bps: bw,
        max_latency_s: None,
        class,
    };
    let reservation = (reservation_mbps * 1e6).round() as Bps;
    if reservation > 0 {
        net.create_channel(
            0.0,
            &link("priority".into(), "h3", reservation, ChannelClass::Priority),
            "h1",
            "h3",
        )
        .map_err(|e| e.to_string())?;
    }
    for i in 0..standard {
        let (id, dst) = (format!("standard{i}"), if i % 2 == 0 { "h3" } else { "h2" });
        net.create_channel(
            0.0,
            &link(id.clone(), dst, 1, ChannelClass::Standard),
            "h1",
            dst,
        )
        .map_err(|e| e.to_string())?;
        net.on_transmission_start(0.0, &id, 1e9, u64::from(i))
            .map_err(|e| e.to_string())?;
    }
    let channels: Vec<Value> = net
        .channels()
        .map(|c| {
            json!({
                "id": c.id,
                "class": c.class,
                "path": c.path.nodes,
                "rate_mbps": c.current_rate as f64 / 1e6,
            })
        })
        .collect();
    let arcs: Vec<Value> = net
        .link_states()
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let (a, b) = net.arc_ends(i);
            json!({ "from": a, "to": b, "reserved_mbps": s.reserved as f64 / 1e6,
                    "standard_active": s.standard_active })
        })
        .collect();
    Ok(json!({ "channels": channels, "arcs": arcs }).to_string())
}

#[wasm_bindgen]
pub fn usecase1_sweep(seed: u32, reservation_bps: f64) -> Result<String, JsValue> {
    usecase1_sweep_json(u64::from(seed), reservation_bps.max(0.0) as Bps)
        .map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn usecase2(policy: &str, seed: u32) -> Result<String, JsValue> {
    usecase2_json(policy, u64::from(seed)).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn three_host_rates(reservation_mbps: f64, standard: u32) -> Result<String, JsValue> {
    three_host_rates_json(reservation_mbps, standard).map_err(|e| JsValue::from_str(&e))
}
