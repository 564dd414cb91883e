//! Body-plane geometry, sensor and sink types, and topology construction.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::SimConfig;
use crate::error::{ConfigError, Violation};
use crate::events::Reading;

/// Width of the canonical body plane in meters.
pub const PLANE_WIDTH: f64 = 0.8;
/// Height of the canonical body plane in meters.
pub const PLANE_HEIGHT: f64 = 1.8;

pub type NodeId = usize;

/// Measurement carried by a body sensor. One kind per default node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SensorKind {
    ECG,
    BloodPressure,
    Glucose,
    Insulin,
    EMG,
    Temperature,
    SpO2,
    EnzymeTest,
    Respiration,
    Toxin,
    LacticAcid,
    Tilt,
    PH,
    DNAProtein,
    Motion,
    PulseRate,
    HeartRate,
    Pressure,
    Positioning,
}

impl SensorKind {
    pub const ALL: [SensorKind; 19] = [
        SensorKind::ECG,
        SensorKind::BloodPressure,
        SensorKind::Glucose,
        SensorKind::Insulin,
        SensorKind::EMG,
        SensorKind::Temperature,
        SensorKind::SpO2,
        SensorKind::EnzymeTest,
        SensorKind::Respiration,
        SensorKind::Toxin,
        SensorKind::LacticAcid,
        SensorKind::Tilt,
        SensorKind::PH,
        SensorKind::DNAProtein,
        SensorKind::Motion,
        SensorKind::PulseRate,
        SensorKind::HeartRate,
        SensorKind::Pressure,
        SensorKind::Positioning,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SensorKind::ECG => "ECG",
            SensorKind::BloodPressure => "BloodPressure",
            SensorKind::Glucose => "Glucose",
            SensorKind::Insulin => "Insulin",
            SensorKind::EMG => "EMG",
            SensorKind::Temperature => "Temperature",
            SensorKind::SpO2 => "SpO2",
            SensorKind::EnzymeTest => "EnzymeTest",
            SensorKind::Respiration => "Respiration",
            SensorKind::Toxin => "Toxin",
            SensorKind::LacticAcid => "LacticAcid",
            SensorKind::Tilt => "Tilt",
            SensorKind::PH => "PH",
            SensorKind::DNAProtein => "DNAProtein",
            SensorKind::Motion => "Motion",
            SensorKind::PulseRate => "PulseRate",
            SensorKind::HeartRate => "HeartRate",
            SensorKind::Pressure => "Pressure",
            SensorKind::Positioning => "Positioning",
        }
    }
}

impl fmt::Display for SensorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SensorKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SensorKind::ALL
            .iter()
            .copied()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown sensor kind `{s}`"))
    }
}

/// A point on the 2D body plane, origin at the bottom-left corner.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BodyPoint {
    pub x: f64,
    pub y: f64,
}

impl BodyPoint {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn plane_center() -> Self {
        Self::new(PLANE_WIDTH / 2.0, PLANE_HEIGHT / 2.0)
    }

    pub fn in_plane(&self) -> bool {
        (0.0..=PLANE_WIDTH).contains(&self.x) && (0.0..=PLANE_HEIGHT).contains(&self.y)
    }
}

/// Euclidean distance between two body points, in meters.
pub fn distance(a: BodyPoint, b: BodyPoint) -> f64 {
    (a.x - b.x).hypot(a.y - b.y)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorNode {
    pub id: NodeId,
    pub kind: SensorKind,
    pub position: BodyPoint,
    /// Joules.
    pub residual_energy: f64,
    /// Degrees Celsius; only the thermal-aware baseline reads it.
    pub temperature: f64,
    /// Meters.
    pub tx_range: f64,
    pub alive: bool,
}

impl SensorNode {
    pub fn distance_to(&self, p: BodyPoint) -> f64 {
        distance(self.position, p)
    }
}

/// Traffic class of a packet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PacketKind {
    Normal,
    Critical,
    Control,
    Hello,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Packet {
    kind: PacketKind,
    pub source: NodeId,
    pub created_round: u64,
    hop_count: u32,
    pub payload: Reading,
}

impl Packet {
    pub fn new(kind: PacketKind, source: NodeId, created_round: u64, payload: Reading) -> Self {
        Self {
            kind,
            source,
            created_round,
            hop_count: 0,
            payload,
        }
    }

    /// Fixed at creation; a critical packet stays critical.
    pub fn kind(&self) -> PacketKind {
        self.kind
    }

    pub fn hop_count(&self) -> u32 {
        self.hop_count
    }

    /// Records one relay hop.
    pub fn relayed(&mut self) {
        self.hop_count += 1;
    }
}

/// The body-central collector. It has no energy budget and never dies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sink {
    pub position: BodyPoint,
}

impl Default for Sink {
    fn default() -> Self {
        Self {
            position: BodyPoint::plane_center(),
        }
    }
}

/// How sensor positions are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    #[default]
    UniformRandom,
    CanonicalBody,
}

/// Fixed on-body positions: head, neck, chest, arms, abdomen, legs.
pub const CANONICAL_LAYOUT: [(SensorKind, BodyPoint); 19] = [
    (SensorKind::ECG, BodyPoint::new(0.45, 1.15)),
    (SensorKind::BloodPressure, BodyPoint::new(0.12, 1.10)),
    (SensorKind::Glucose, BodyPoint::new(0.55, 0.85)),
    (SensorKind::Insulin, BodyPoint::new(0.30, 0.80)),
    (SensorKind::EMG, BodyPoint::new(0.70, 1.00)),
    (SensorKind::Temperature, BodyPoint::new(0.30, 1.28)),
    (SensorKind::SpO2, BodyPoint::new(0.05, 0.75)),
    (SensorKind::EnzymeTest, BodyPoint::new(0.48, 0.95)),
    (SensorKind::Respiration, BodyPoint::new(0.52, 1.25)),
    (SensorKind::Toxin, BodyPoint::new(0.60, 0.70)),
    (SensorKind::LacticAcid, BodyPoint::new(0.28, 0.42)),
    (SensorKind::Tilt, BodyPoint::new(0.52, 0.38)),
    (SensorKind::PH, BodyPoint::new(0.40, 0.68)),
    (SensorKind::DNAProtein, BodyPoint::new(0.25, 1.00)),
    (SensorKind::Motion, BodyPoint::new(0.55, 0.08)),
    (SensorKind::PulseRate, BodyPoint::new(0.75, 0.75)),
    (SensorKind::HeartRate, BodyPoint::new(0.42, 1.38)),
    (SensorKind::Pressure, BodyPoint::new(0.38, 1.55)),
    (SensorKind::Positioning, BodyPoint::new(0.40, 1.72)),
];

/// The canonical layout as `id,kind,x,y` lines.
pub fn dump_layout() -> String {
    let mut out = String::new();
    for (id, (kind, p)) in CANONICAL_LAYOUT.iter().enumerate() {
        out.push_str(&format!("{id},{kind},{},{}\n", p.x, p.y));
    }
    out
}

/// Places `config.node_count` sensors and the sink.
///
/// `rng` should be the topology stream; uniform placement consumes exactly two
/// draws per node and nothing else.
pub fn build_topology<R: Rng + ?Sized>(
    config: &SimConfig,
    rng: &mut R,
) -> Result<(Vec<SensorNode>, Sink), ConfigError> {
    let n = config.node_count;
    let positions: Vec<(SensorKind, BodyPoint)> = match config.placement {
        Placement::UniformRandom => (0..n)
            .map(|i| {
                let x = rng.random_range(0.0..=PLANE_WIDTH);
                let y = rng.random_range(0.0..=PLANE_HEIGHT);
                (SensorKind::ALL[i % SensorKind::ALL.len()], BodyPoint::new(x, y))
            })
            .collect(),
        Placement::CanonicalBody => {
            if n > CANONICAL_LAYOUT.len() {
                return Err(ConfigError::Constraints(vec![Violation::new(
                    "node_count",
                    format!(
                        "canonical_body placement has {} positions, {n} requested",
                        CANONICAL_LAYOUT.len()
                    ),
                )]));
            }
            CANONICAL_LAYOUT[..n].to_vec()
        }
    };
    let nodes = positions
        .into_iter()
        .enumerate()
        .map(|(id, (kind, position))| SensorNode {
            id,
            kind,
            position,
            residual_energy: config.initial_energy,
            temperature: config.mattempt.ambient,
            tx_range: config.tx_range,
            alive: true,
        })
        .collect();
    Ok((nodes, Sink::default()))
}
