//! Thermal-aware hop-count routing baseline.
//!
//! Each round begins with a hello flood that assigns breadth-first hop counts
//! from the sink over the in-range graph, skipping nodes above the temperature
//! threshold. Normal packets follow the minimum hop count; critical packets go
//! straight to the sink at boosted power. A relay that is over the threshold
//! when a packet arrives bounces it back and the sender marks it as a hotspot.

use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use super::{in_range, reaches_sink, RouteAction, RoutingDecision};
use crate::error::Violation;
use crate::topology::{NodeId, PacketKind, SensorNode, Sink};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MattemptParams {
    /// °C.
    pub temp_threshold: f64,
    /// °C.
    pub ambient: f64,
    /// °C per data transmission.
    pub delta_tx: f64,
    /// °C per data reception.
    pub delta_rx: f64,
    /// Fraction of the excess over ambient shed per round.
    pub cooling: f64,
    pub boost_multiplier: f64,
    /// Control exchanges every alive node performs per round besides the
    /// hellos it hears: its own hello, its hop-count advertisement, its TDMA
    /// slot request and the sink's schedule.
    pub phase_exchanges: u64,
}

impl Default for MattemptParams {
    fn default() -> Self {
        Self {
            temp_threshold: 38.5,
            ambient: 37.0,
            delta_tx: 0.05,
            delta_rx: 0.03,
            cooling: 0.1,
            boost_multiplier: 2.0,
            phase_exchanges: 4,
        }
    }
}

impl MattemptParams {
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if !(0.0..1.0).contains(&self.cooling) {
            out.push(Violation::new(
                "mattempt.cooling",
                format!("must lie in [0, 1), got {}", self.cooling),
            ));
        }
        if !(self.boost_multiplier >= 1.0) {
            out.push(Violation::new(
                "mattempt.boost_multiplier",
                format!("must be >= 1, got {}", self.boost_multiplier),
            ));
        }
        if !(self.delta_tx >= 0.0 && self.delta_rx >= 0.0) {
            out.push(Violation::new("mattempt.delta_tx", "heating increments must be >= 0"));
        }
        if !self.temp_threshold.is_finite() || !self.ambient.is_finite() {
            out.push(Violation::new("mattempt.temp_threshold", "temperatures must be finite"));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MattemptState {
    /// `None` means unreachable.
    pub hop_counts: Vec<Option<u32>>,
    /// Per node, neighbors it has seen bounce a packet.
    pub hotspots: Vec<BTreeSet<NodeId>>,
}

impl MattemptState {
    pub fn hop(&self, id: NodeId) -> Option<u32> {
        self.hop_counts.get(id).copied().flatten()
    }
}

/// Result of one hello flood.
#[derive(Debug, Clone, PartialEq)]
pub struct HelloFlood {
    pub hop_counts: Vec<Option<u32>>,
    /// Control exchanges per node: the fixed per-round phase exchanges plus
    /// one per hello heard, the sink's included. Zero for dead nodes.
    pub control_exchanges: Vec<u64>,
}

pub fn is_hot(node: &SensorNode, params: &MattemptParams) -> bool {
    node.temperature > params.temp_threshold
}

/// Breadth-first hop counts from the sink. Dead and overheated nodes get
/// `None` and do not relay.
pub fn build_hopcounts(nodes: &[SensorNode], sink: &Sink, params: &MattemptParams) -> HelloFlood {
    let usable = |n: &SensorNode| n.alive && !is_hot(n, params);
    let mut hops: Vec<Option<u32>> = vec![None; nodes.len()];
    let mut queue = VecDeque::new();
    for n in nodes.iter().filter(|n| usable(n) && reaches_sink(n, sink)) {
        hops[n.id] = Some(1);
        queue.push_back(n.id);
    }
    while let Some(i) = queue.pop_front() {
        let next = hops[i].map(|h| h + 1);
        for j in nodes {
            if usable(j) && hops[j.id].is_none() && in_range(&nodes[i], j) {
                hops[j.id] = next;
                queue.push_back(j.id);
            }
        }
    }
    let control_exchanges = nodes
        .iter()
        .map(|n| {
            if !n.alive {
                return 0;
            }
            let heard = nodes
                .iter()
                .filter(|m| m.alive && m.id != n.id && in_range(n, m))
                .count() as u64;
            params.phase_exchanges + heard + u64::from(reaches_sink(n, sink))
        })
        .collect();
    HelloFlood {
        hop_counts: hops,
        control_exchanges,
    }
}

/// Next hop for a packet held by `node`.
pub fn next_hop<'a>(
    node: &SensorNode,
    packet: PacketKind,
    state: &MattemptState,
    neighbors: impl IntoIterator<Item = &'a SensorNode>,
    sink: &Sink,
) -> RoutingDecision {
    if packet == PacketKind::Critical {
        return RoutingDecision {
            action: RouteAction::SendToSink,
            boosted: true,
        };
    }
    let Some(own) = state.hop(node.id) else {
        return RoutingDecision::hold();
    };
    if reaches_sink(node, sink) {
        return RoutingDecision::plain(RouteAction::SendToSink);
    }
    let marked = &state.hotspots[node.id];
    let best = neighbors
        .into_iter()
        .filter(|n| n.alive && n.id != node.id && !marked.contains(&n.id))
        .filter_map(|n| state.hop(n.id).filter(|&h| h < own).map(|h| (n, h)))
        .min_by(|(a, ha), (b, hb)| {
            ha.cmp(hb)
                .then(a.distance_to(sink.position).total_cmp(&b.distance_to(sink.position)))
                .then(a.id.cmp(&b.id))
        });
    match best {
        Some((n, _)) => RoutingDecision::plain(RouteAction::SendToForwarder(n.id)),
        None => RoutingDecision::hold(),
    }
}

/// `ambient + (T − ambient)(1 − cooling) + tx·δtx + rx·δrx`.
pub fn temperature_step(params: &MattemptParams, temperature: f64, tx_count: u64, rx_count: u64) -> f64 {
    params.ambient
        + (temperature - params.ambient) * (1.0 - params.cooling)
        + tx_count as f64 * params.delta_tx
        + rx_count as f64 * params.delta_rx
}
