//! Round-based simulator for multi-hop wireless body area networks.
//!
//! The crate models a set of body-mounted sensors reporting to a central
//! sink over TDMA rounds. Three routing policies are provided: the adaptive
//! multi-hop protocol ([`protocols::amhrp`]), the thermal-aware
//! [`protocols::mattempt`] baseline and the single-forwarder
//! [`protocols::simple`] baseline. Energy is charged from a weighted
//! action-count budget, path loss is reported from a log-distance model with
//! optional shadowing, and per-round metrics are written as CSV.
//!
//! ```
//! use amhrp_sim::{config::SimConfig, engine::run_simulation};
//!
//! let mut config = SimConfig::default();
//! config.rounds = 200;
//! let run = run_simulation(&config).unwrap();
//! assert_eq!(run.metrics.len(), 200);
//! ```

pub mod channel;
pub mod config;
pub mod energy;
pub mod engine;
pub mod error;
pub mod events;
pub mod output;
pub mod protocols;
pub mod report;
pub mod rng;
pub mod topology;

pub use config::SimConfig;
pub use engine::{run_simulation, RoundMetrics, RunOutput, RunSummary, Simulation};
pub use error::{ConfigError, SimError};
pub use protocols::ProtocolId;
pub use topology::{BodyPoint, NodeId, SensorKind, SensorNode, Sink};
