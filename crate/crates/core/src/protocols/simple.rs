//! Single-forwarder baseline.
//!
//! Every round the sink elects the alive node minimising
//! `distance_to_sink / residual_energy` as the common forwarder. Other nodes
//! send their readings to it and it uploads one aggregate to the sink at the
//! end of the round. Critical readings and the ECG node go straight to the
//! sink. Transmissions are single-hop with adjustable power, so the radio
//! range does not restrict any of these links.

use serde::{Deserialize, Serialize};

use super::{RouteAction, RoutingDecision};
use crate::topology::{NodeId, PacketKind, SensorKind, SensorNode, Sink};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimpleParams {
    /// Control exchanges per alive node per round: its status broadcast and
    /// the sink's forwarder announcement.
    pub control_per_round: u64,
}

impl Default for SimpleParams {
    fn default() -> Self {
        Self { control_per_round: 2 }
    }
}

pub fn forwarder_cost(node: &SensorNode, sink: &Sink) -> f64 {
    node.distance_to(sink.position) / node.residual_energy
}

/// The round's forwarder, or `None` when nothing is alive.
pub fn select_forwarder(nodes: &[SensorNode], sink: &Sink) -> Option<NodeId> {
    nodes
        .iter()
        .filter(|n| n.alive)
        .min_by(|a, b| {
            forwarder_cost(a, sink)
                .total_cmp(&forwarder_cost(b, sink))
                .then(a.id.cmp(&b.id))
        })
        .map(|n| n.id)
}

pub fn next_hop(node: &SensorNode, packet: PacketKind, forwarder: Option<NodeId>) -> RoutingDecision {
    if packet == PacketKind::Critical || node.kind == SensorKind::ECG {
        return RoutingDecision::plain(RouteAction::SendToSink);
    }
    match forwarder {
        Some(f) if f == node.id => RoutingDecision::plain(RouteAction::Aggregate),
        Some(f) => RoutingDecision::plain(RouteAction::SendToForwarder(f)),
        None => RoutingDecision::plain(RouteAction::SendToSink),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::BodyPoint;

    fn at_distance(id: usize, d: f64, e: f64) -> SensorNode {
        SensorNode {
            id,
            kind: SensorKind::Glucose,
            position: BodyPoint::new(0.4, 0.9 - d),
            residual_energy: e,
            temperature: 37.0,
            tx_range: 0.5,
            alive: true,
        }
    }

    #[test]
    fn argmin_of_distance_over_energy() {
        let nodes = vec![at_distance(0, 0.5, 0.5), at_distance(1, 0.4, 0.2)];
        assert!((forwarder_cost(&nodes[0], &Sink::default()) - 1.0).abs() < 1e-12);
        assert!((forwarder_cost(&nodes[1], &Sink::default()) - 2.0).abs() < 1e-12);
        assert_eq!(select_forwarder(&nodes, &Sink::default()), Some(0));
    }

    #[test]
    fn single_and_empty() {
        let mut nodes = vec![at_distance(0, 0.5, 0.5), at_distance(1, 0.4, 0.2)];
        nodes[0].alive = false;
        assert_eq!(select_forwarder(&nodes, &Sink::default()), Some(1));
        nodes[1].alive = false;
        assert_eq!(select_forwarder(&nodes, &Sink::default()), None);
    }

    #[test]
    fn scaling_energy_keeps_choice() {
        let mut nodes = vec![
            at_distance(0, 0.5, 0.5),
            at_distance(1, 0.4, 0.2),
            at_distance(2, 0.7, 0.45),
        ];
        let before = select_forwarder(&nodes, &Sink::default());
        for n in &mut nodes {
            n.residual_energy *= 2.0;
        }
        assert_eq!(select_forwarder(&nodes, &Sink::default()), before);
    }

    #[test]
    fn routing_rules() {
        let n = at_distance(3, 0.6, 0.5);
        assert_eq!(
            next_hop(&n, PacketKind::Normal, Some(1)).action,
            RouteAction::SendToForwarder(1)
        );
        assert_eq!(next_hop(&n, PacketKind::Normal, Some(3)).action, RouteAction::Aggregate);
        assert_eq!(
            next_hop(&n, PacketKind::Critical, Some(1)).action,
            RouteAction::SendToSink
        );
        let mut ecg = n.clone();
        ecg.kind = SensorKind::ECG;
        assert_eq!(
            next_hop(&ecg, PacketKind::Normal, Some(1)).action,
            RouteAction::SendToSink
        );
    }
}
