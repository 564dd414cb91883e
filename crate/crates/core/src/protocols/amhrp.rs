//! Adaptive multi-hop routing.
//!
//! A node in range of the sink uploads directly. Otherwise it hands the packet
//! to the neighbor with the most residual energy among those strictly closer
//! to the sink, breaking ties by distance to the sink and then by id. With no
//! such neighbor a critical packet escalates to the external WSN gateway and
//! a normal packet is held.

use serde::{Deserialize, Serialize};

use super::{reaches_sink, RouteAction, RoutingDecision};
use crate::topology::{PacketKind, SensorNode, Sink};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AmhrpParams {
    /// Charge one control exchange per node in round 0 for the initial
    /// position and slot exchange.
    pub setup_control: bool,
    /// Whether a relay that has no onward route escalates a critical packet
    /// itself. When false only originators escalate and a dead-ended relay
    /// drops the packet.
    pub relay_escalation: bool,
}

impl Default for AmhrpParams {
    fn default() -> Self {
        Self {
            setup_control: true,
            relay_escalation: false,
        }
    }
}

pub fn select_forwarder<'a>(
    node: &SensorNode,
    neighbors: impl IntoIterator<Item = &'a SensorNode>,
    sink: &Sink,
    packet: PacketKind,
) -> RoutingDecision {
    if reaches_sink(node, sink) {
        return RoutingDecision::plain(RouteAction::SendToSink);
    }
    let own = node.distance_to(sink.position);
    let best = neighbors
        .into_iter()
        .filter(|n| n.alive && n.id != node.id)
        .map(|n| (n, n.distance_to(sink.position)))
        .filter(|&(_, d)| d < own)
        .min_by(|(a, da), (b, db)| {
            b.residual_energy
                .total_cmp(&a.residual_energy)
                .then(da.total_cmp(db))
                .then(a.id.cmp(&b.id))
        });
    match best {
        Some((n, _)) => RoutingDecision::plain(RouteAction::SendToForwarder(n.id)),
        None if packet == PacketKind::Critical => RoutingDecision::plain(RouteAction::SendToExternalWSN),
        None => RoutingDecision::hold(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocols::neighbors;
    use crate::topology::{BodyPoint, SensorKind};

    fn node(id: usize, x: f64, y: f64, e: f64) -> SensorNode {
        SensorNode {
            id,
            kind: SensorKind::ALL[id % 19],
            position: BodyPoint::new(x, y),
            residual_energy: e,
            temperature: 37.0,
            tx_range: 0.5,
            alive: true,
        }
    }

    fn sink() -> Sink {
        Sink::default()
    }

    #[test]
    fn in_range_goes_direct() {
        let n = node(0, 0.4, 0.6, 0.5);
        let d = select_forwarder(&n, [], &sink(), PacketKind::Normal);
        assert_eq!(d.action, RouteAction::SendToSink);
    }

    #[test]
    fn picks_highest_residual_closer_neighbor() {
        let me = node(0, 0.4, 0.1, 0.5);
        let a = node(1, 0.3, 0.4, 0.4);
        let b = node(2, 0.5, 0.4, 0.3);
        let d = select_forwarder(&me, [&a, &b], &sink(), PacketKind::Normal);
        assert_eq!(d.action, RouteAction::SendToForwarder(1));
    }

    #[test]
    fn residual_tie_goes_to_nearer_sink() {
        let me = node(0, 0.4, 0.1, 0.5);
        // distances to (0.4, 0.9): 0.2 and 0.3
        let a = node(5, 0.4, 0.7, 0.3);
        let b = node(2, 0.4, 0.6, 0.3);
        let mut me_far = me.clone();
        me_far.tx_range = 0.7;
        let d = select_forwarder(&me_far, [&b, &a], &sink(), PacketKind::Normal);
        assert_eq!(d.action, RouteAction::SendToForwarder(5));
    }

    #[test]
    fn id_breaks_full_ties() {
        let me = node(0, 0.4, 0.1, 0.5);
        let a = node(7, 0.3, 0.4, 0.3);
        let b = node(3, 0.5, 0.4, 0.3);
        let d = select_forwarder(&me, [&a, &b], &sink(), PacketKind::Normal);
        assert_eq!(d.action, RouteAction::SendToForwarder(3));
    }

    #[test]
    fn no_route_escalates_only_critical() {
        let me = node(0, 0.4, 0.1, 0.5);
        let behind = node(1, 0.4, 0.05, 0.5);
        let mut dead = node(2, 0.4, 0.4, 0.5);
        dead.alive = false;
        assert_eq!(
            select_forwarder(&me, [&behind, &dead], &sink(), PacketKind::Critical).action,
            RouteAction::SendToExternalWSN
        );
        assert_eq!(
            select_forwarder(&me, [&behind, &dead], &sink(), PacketKind::Normal).action,
            RouteAction::Hold
        );
    }

    #[test]
    fn never_selects_self_or_farther() {
        let me = node(0, 0.4, 0.1, 0.5);
        let nodes = vec![me.clone(), node(1, 0.4, 0.0, 0.5), node(2, 0.1, 0.05, 0.5)];
        let d = select_forwarder(&me, neighbors(&nodes, &me), &sink(), PacketKind::Normal);
        assert_eq!(d.action, RouteAction::Hold);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn choice_invariant_under_uniform_scaling(
                pts in prop::collection::vec((0.0f64..0.8, 0.0f64..1.8, 0.01f64..0.5), 2..19),
                scale in 0.01f64..100.0,
            ) {
                let nodes: Vec<_> = pts.iter().enumerate().map(|(i, &(x, y, e))| node(i, x, y, e)).collect();
                let scaled: Vec<_> = nodes.iter().cloned().map(|mut n| { n.residual_energy *= scale; n }).collect();
                for me in 0..nodes.len() {
                    let a = select_forwarder(&nodes[me], neighbors(&nodes, &nodes[me]), &sink(), PacketKind::Normal);
                    let b = select_forwarder(&scaled[me], neighbors(&scaled, &scaled[me]), &sink(), PacketKind::Normal);
                    prop_assert_eq!(a, b);
                    if let RouteAction::SendToForwarder(j) = a.action {
                        prop_assert!(j != me);
                        prop_assert!(nodes[j].distance_to(sink().position) < nodes[me].distance_to(sink().position));
                    }
                }
            }
        }
    }
}
