//! Routing policies and the equilibrium diagnostic.

pub mod amhrp;
pub mod equilibrium;
pub mod mattempt;
pub mod simple;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::topology::{distance, NodeId, SensorNode, Sink};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProtocolId {
    #[default]
    Amhrp,
    Mattempt,
    Simple,
}

impl ProtocolId {
    pub const ALL: [ProtocolId; 3] = [ProtocolId::Amhrp, ProtocolId::Mattempt, ProtocolId::Simple];

    pub fn as_str(self) -> &'static str {
        match self {
            ProtocolId::Amhrp => "amhrp",
            ProtocolId::Mattempt => "mattempt",
            ProtocolId::Simple => "simple",
        }
    }
}

impl fmt::Display for ProtocolId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProtocolId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "amhrp" => Ok(ProtocolId::Amhrp),
            "mattempt" | "m-attempt" => Ok(ProtocolId::Mattempt),
            "simple" => Ok(ProtocolId::Simple),
            other => Err(format!(
                "unknown protocol `{other}` (expected amhrp, mattempt or simple)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RouteAction {
    SendToSink,
    SendToForwarder(NodeId),
    SendToExternalWSN,
    /// Keep the packet at the current holder for an aggregated upload later
    /// in the round. Only the single-forwarder baseline uses it.
    Aggregate,
    Hold,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RoutingDecision {
    pub action: RouteAction,
    /// Raised transmit power for a direct critical upload.
    pub boosted: bool,
}

impl RoutingDecision {
    pub const fn plain(action: RouteAction) -> Self {
        Self { action, boosted: false }
    }

    pub const fn hold() -> Self {
        Self::plain(RouteAction::Hold)
    }
}

/// Whether `a` and `b` can hear each other.
pub fn in_range(a: &SensorNode, b: &SensorNode) -> bool {
    let d = distance(a.position, b.position);
    d <= a.tx_range && d <= b.tx_range
}

/// Alive nodes other than `of` within mutual range of it.
pub fn neighbors<'a>(nodes: &'a [SensorNode], of: &'a SensorNode) -> impl Iterator<Item = &'a SensorNode> + 'a {
    nodes
        .iter()
        .filter(move |n| n.alive && n.id != of.id && in_range(of, n))
}

pub fn reaches_sink(node: &SensorNode, sink: &Sink) -> bool {
    node.distance_to(sink.position) <= node.tx_range
}
