//! Experiment configuration: defaults, TOML parsing, validation, rendering.
//!
//! The file format is TOML. Top-level keys describe the run; tables hold the
//! per-concern parameters:
//!
//! ```toml
//! node_count = 19
//! rounds = 10000
//! protocol = "amhrp"
//!
//! [energy]
//! x_d = 4e-5        # x_w defaults to 100 * x_d
//!
//! [schedule]
//! BloodPressure = 3 # period in rounds
//! ```
//!
//! Every key is optional. Unknown keys are rejected.

use std::collections::BTreeMap;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::channel::ChannelParams;
use crate::energy::{EnergyWeights, WSN_TO_DESTINED_RATIO};
use crate::error::{ConfigError, Violation};
use crate::events::{EventParams, SensingSchedule, Threshold, VitalThresholds};
use crate::protocols::amhrp::AmhrpParams;
use crate::protocols::equilibrium::EquilibriumParams;
use crate::protocols::mattempt::MattemptParams;
use crate::protocols::simple::SimpleParams;
use crate::protocols::ProtocolId;
use crate::topology::{Placement, SensorKind};

/// Full description of one experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimConfig {
    pub node_count: usize,
    pub rounds: u64,
    /// Joules per node.
    pub initial_energy: f64,
    pub protocol: ProtocolId,
    pub seed: u64,
    /// Seed set used by sweeps.
    pub seeds: Vec<u64>,
    pub placement: Placement,
    /// Meters.
    pub tx_range: f64,
    pub stop_on_all_dead: bool,
    pub allow_unconstrained_weights: bool,
    /// A node's final, fatal charge still completes the action it paid for.
    pub last_gasp: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,
    pub energy: EnergyWeights,
    pub channel: ChannelParams,
    pub events: EventParams,
    pub vitals: VitalThresholds,
    pub schedule: SensingSchedule,
    pub amhrp: AmhrpParams,
    pub mattempt: MattemptParams,
    pub simple: SimpleParams,
    pub equilibrium: EquilibriumParams,
}

impl Default for SimConfig {
    fn default() -> Self {
        let events = EventParams::default();
        Self {
            node_count: 19,
            rounds: 10_000,
            initial_energy: 0.5,
            protocol: ProtocolId::Amhrp,
            seed: 1,
            seeds: (1..=10).collect(),
            placement: Placement::UniformRandom,
            tx_range: 0.38,
            stop_on_all_dead: false,
            allow_unconstrained_weights: false,
            last_gasp: true,
            output_dir: None,
            energy: EnergyWeights::default(),
            channel: ChannelParams::default(),
            schedule: SensingSchedule::for_rounds_per_day(events.rounds_per_day),
            events,
            vitals: VitalThresholds::default(),
            amhrp: AmhrpParams::default(),
            mattempt: MattemptParams::default(),
            simple: SimpleParams::default(),
            equilibrium: EquilibriumParams::default(),
        }
    }
}

impl SimConfig {
    /// Every violated constraint, not just the first.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.node_count < 1 {
            out.push(Violation::new("node_count", "must be >= 1"));
        }
        if !(self.initial_energy > 0.0) || !self.initial_energy.is_finite() {
            out.push(Violation::new(
                "initial_energy",
                format!("must be > 0, got {}", self.initial_energy),
            ));
        }
        if !(self.tx_range > 0.0) || !self.tx_range.is_finite() {
            out.push(Violation::new(
                "tx_range",
                format!("must be > 0, got {}", self.tx_range),
            ));
        }
        if self.seeds.is_empty() {
            out.push(Violation::new("seeds", "must list at least one seed"));
        }
        if self.placement == Placement::CanonicalBody && self.node_count > SensorKind::ALL.len() {
            out.push(Violation::new(
                "node_count",
                format!(
                    "canonical_body placement supports at most {} nodes",
                    SensorKind::ALL.len()
                ),
            ));
        }
        out.extend(self.energy.validate(self.allow_unconstrained_weights));
        if self.energy.x_t >= self.initial_energy {
            out.push(Violation::new(
                "energy.x_t",
                "death threshold must be below initial_energy",
            ));
        }
        out.extend(self.channel.validate());
        for &(a, b) in &self.channel.nlos_pairs {
            if a >= self.node_count || b >= self.node_count {
                out.push(Violation::new(
                    "channel.nlos_pairs",
                    format!("node id out of range in ({a}, {b})"),
                ));
            }
        }
        if self.channel.nlos_to_sink.iter().any(|&a| a >= self.node_count) {
            out.push(Violation::new("channel.nlos_to_sink", "node id out of range"));
        }
        out.extend(self.events.validate());
        out.extend(self.vitals.validate());
        out.extend(self.schedule.validate());
        out.extend(self.mattempt.validate());
        out.extend(self.equilibrium.validate());
        out
    }

    pub fn validated(self) -> Result<Self, ConfigError> {
        let v = self.validate();
        if v.is_empty() {
            Ok(self)
        } else {
            Err(ConfigError::Constraints(v))
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawConfig {
    node_count: Option<i64>,
    rounds: Option<i64>,
    initial_energy: Option<f64>,
    protocol: Option<String>,
    seed: Option<i64>,
    seeds: Option<Vec<i64>>,
    placement: Option<Placement>,
    tx_range: Option<f64>,
    stop_on_all_dead: Option<bool>,
    allow_unconstrained_weights: Option<bool>,
    last_gasp: Option<bool>,
    output_dir: Option<String>,
    energy: RawEnergy,
    channel: Option<ChannelParams>,
    events: RawEvents,
    vitals: BTreeMap<SensorKind, Threshold>,
    schedule: BTreeMap<SensorKind, i64>,
    amhrp: Option<AmhrpParams>,
    mattempt: Option<MattemptParams>,
    simple: Option<SimpleParams>,
    equilibrium: Option<EquilibriumParams>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawEnergy {
    x_s: Option<f64>,
    x_d: Option<f64>,
    x_w: Option<f64>,
    x_f: Option<f64>,
    x_c: Option<f64>,
    x_t: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawEvents {
    lambda: Option<f64>,
    rounds_per_day: Option<i64>,
    critical_fraction: Option<f64>,
}

fn line_col(text: &str, span: Option<Range<usize>>) -> (usize, usize) {
    let Some(span) = span else { return (1, 1) };
    let upto = &text[..span.start.min(text.len())];
    let line = upto.matches('\n').count() + 1;
    let column = upto.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

fn non_negative(v: i64, key: &str, out: &mut Vec<Violation>) -> u64 {
    if v < 0 {
        out.push(Violation::new(key, format!("must be >= 0, got {v}")));
        0
    } else {
        v as u64
    }
}

/// Parses without checking value constraints; command-line overrides are
/// applied between this and [`SimConfig::validated`].
///
/// Type and range problems the raw document can express (a negative round
/// count, an unknown protocol name) are still reported as constraint
/// violations.
pub fn parse_config_unvalidated(text: &str) -> Result<SimConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| {
        let (line, column) = line_col(text, e.span());
        let message = e.message().to_string();
        if let Some(rest) = message.strip_prefix("unknown field `") {
            let key = rest.split('`').next().unwrap_or_default().to_string();
            ConfigError::UnknownKey { key, line, column }
        } else {
            ConfigError::Parse { line, column, message }
        }
    })?;

    let mut bad = Vec::new();
    let mut c = SimConfig::default();
    if let Some(v) = raw.node_count {
        c.node_count = non_negative(v, "node_count", &mut bad) as usize;
        if v == 0 {
            bad.push(Violation::new("node_count", "must be >= 1"));
        }
    }
    if let Some(v) = raw.rounds {
        c.rounds = non_negative(v, "rounds", &mut bad);
    }
    if let Some(v) = raw.initial_energy {
        c.initial_energy = v;
    }
    if let Some(p) = raw.protocol {
        match p.parse() {
            Ok(p) => c.protocol = p,
            Err(e) => bad.push(Violation::new("protocol", e)),
        }
    }
    if let Some(v) = raw.seed {
        c.seed = non_negative(v, "seed", &mut bad);
    }
    if let Some(v) = raw.seeds {
        c.seeds = v.into_iter().map(|s| non_negative(s, "seeds", &mut bad)).collect();
    }
    if let Some(v) = raw.placement {
        c.placement = v;
    }
    if let Some(v) = raw.tx_range {
        c.tx_range = v;
    }
    if let Some(v) = raw.stop_on_all_dead {
        c.stop_on_all_dead = v;
    }
    if let Some(v) = raw.allow_unconstrained_weights {
        c.allow_unconstrained_weights = v;
    }
    if let Some(v) = raw.last_gasp {
        c.last_gasp = v;
    }
    c.output_dir = raw.output_dir;

    let e = raw.energy;
    let d = EnergyWeights::default();
    let x_d = e.x_d.unwrap_or(d.x_d);
    c.energy = EnergyWeights {
        x_s: e.x_s.unwrap_or(d.x_s),
        x_d,
        x_w: e.x_w.unwrap_or(WSN_TO_DESTINED_RATIO * x_d),
        x_f: e.x_f.unwrap_or(d.x_f),
        x_c: e.x_c.unwrap_or(d.x_c),
        x_t: e.x_t.unwrap_or(d.x_t),
    };

    if let Some(ch) = raw.channel {
        c.channel = ch;
    }
    let ev = raw.events;
    if let Some(v) = ev.lambda {
        c.events.lambda = v;
    }
    if let Some(v) = ev.critical_fraction {
        c.events.critical_fraction = v;
    }
    if let Some(v) = ev.rounds_per_day {
        if v < 1 || v > u32::MAX as i64 {
            bad.push(Violation::new(
                "events.rounds_per_day",
                format!("must be >= 1, got {v}"),
            ));
        } else {
            c.events.rounds_per_day = v as u32;
        }
    }
    c.schedule = SensingSchedule::for_rounds_per_day(c.events.rounds_per_day);
    for (kind, period) in raw.schedule {
        if period < 1 {
            bad.push(Violation::new(
                format!("schedule.{kind}"),
                format!("period must be >= 1, got {period}"),
            ));
        } else {
            c.schedule.0.insert(kind, period as u64);
        }
    }
    c.vitals.0.extend(raw.vitals);
    if let Some(v) = raw.amhrp {
        c.amhrp = v;
    }
    if let Some(v) = raw.mattempt {
        c.mattempt = v;
    }
    if let Some(v) = raw.simple {
        c.simple = v;
    }
    if let Some(v) = raw.equilibrium {
        c.equilibrium = v;
    }
    if bad.is_empty() {
        Ok(c)
    } else {
        Err(ConfigError::Constraints(bad))
    }
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<SimConfig, ConfigError> {
    parse_config_unvalidated(text)?.validated()
}

/// Renders a configuration that [`parse_config`] reads back unchanged.
pub fn render_config(config: &SimConfig) -> String {
    toml::to_string(config).expect("configuration is always representable as TOML")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::events::Band;

    #[test]
    fn empty_document_is_the_default() {
        let c = parse_config("").unwrap();
        assert_eq!(c, SimConfig::default());
        assert_eq!(c.node_count, 19);
        assert_eq!(c.rounds, 10_000);
        assert_eq!(c.initial_energy, 0.5);
        assert_eq!(c.channel.frequency, 2.4e9);
        assert_eq!(c.protocol, ProtocolId::Amhrp);
    }

    #[test]
    fn wsn_weight_is_derived() {
        let c = parse_config("[energy]\nx_d = 1e-3\nx_c = 5e-4\n").unwrap();
        assert_eq!(c.energy.x_w, 0.1);
    }

    #[test]
    fn inconsistent_wsn_weight_is_rejected_unless_allowed() {
        let err = parse_config("[energy]\nx_d = 1e-3\nx_c = 5e-4\nx_w = 0.5\n").unwrap_err();
        assert_eq!(err.violations()[0].path, "energy.x_w");
        let ok = parse_config("allow_unconstrained_weights = true\n[energy]\nx_d = 1e-3\nx_c = 5e-4\nx_w = 0.5\n");
        assert_eq!(ok.unwrap().energy.x_w, 0.5);
    }

    #[test]
    fn negative_rounds_names_the_key() {
        let err = parse_config("rounds = -5").unwrap_err();
        assert!(matches!(err, ConfigError::Constraints(_)));
        assert_eq!(err.violations()[0].path, "rounds");
    }

    #[test]
    fn all_violations_are_listed() {
        let err = parse_config("tx_range = 0\ninitial_energy = -1\n[channel]\nexponent_los = 9\n").unwrap_err();
        let keys: Vec<_> = err.violations().iter().map(|v| v.path.as_str()).collect();
        assert!(keys.contains(&"tx_range"));
        assert!(keys.contains(&"initial_energy"));
        assert!(keys.contains(&"channel.exponent_los"));
    }

    #[test]
    fn unknown_keys_are_hard_errors() {
        match parse_config("rounds = 10\nround = 5\n").unwrap_err() {
            ConfigError::UnknownKey { key, line, .. } => {
                assert_eq!(key, "round");
                assert_eq!(line, 2);
            }
            other => panic!("{other}"),
        }
        assert!(matches!(
            parse_config("[energy]\nx_q = 1\n").unwrap_err(),
            ConfigError::UnknownKey { .. }
        ));
    }

    #[test]
    fn syntax_errors_carry_position() {
        match parse_config("rounds = 10\nnode_count = = 3\n").unwrap_err() {
            ConfigError::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn schedule_and_vitals_overrides() {
        let text = "[events]\nrounds_per_day = 48\n[schedule]\nECG = 10\n[vitals.HeartRate]\nlower = 50\nupper = 110\nenvelope_low = 20\nenvelope_high = 220\n";
        let c = parse_config(text).unwrap();
        assert_eq!(c.schedule.period(SensorKind::ECG), 10);
        assert_eq!(c.schedule.period(SensorKind::BloodPressure), 6);
        assert_eq!(
            c.vitals.0[&SensorKind::HeartRate],
            Threshold::Scalar(Band::new(50.0, 110.0, 20.0, 220.0))
        );
        assert!(parse_config("[schedule]\nECG = 0\n").is_err());
    }

    #[test]
    fn protocol_names() {
        assert_eq!(
            parse_config("protocol = \"mattempt\"").unwrap().protocol,
            ProtocolId::Mattempt
        );
        let err = parse_config("protocol = \"leach\"").unwrap_err();
        assert_eq!(err.violations()[0].path, "protocol");
    }

    #[test]
    fn render_round_trips_defaults() {
        let c = SimConfig::default();
        assert_eq!(parse_config(&render_config(&c)).unwrap(), c);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]
            #[test]
            fn render_then_parse_is_identity(
                node_count in 1usize..40,
                rounds in 0u64..50_000,
                energy in 0.01f64..5.0,
                x_d in 1e-6f64..1e-2,
                tx_range in 0.05f64..2.0,
                lambda in 0.0f64..3.0,
                sigma in 0.0f64..8.0,
                seed in 0u64..1_000_000,
                protocol in prop::sample::select(ProtocolId::ALL.to_vec()),
                stop in any::<bool>(),
            ) {
                let mut c = SimConfig::default();
                c.node_count = node_count;
                c.rounds = rounds;
                c.initial_energy = energy;
                c.energy = EnergyWeights::with_derived_wsn(x_d / 10.0, x_d, x_d / 8.0, x_d / 2.0, 0.0);
                c.tx_range = tx_range;
                c.events.lambda = lambda;
                c.channel.sigma_db = sigma;
                c.seed = seed;
                c.protocol = protocol;
                c.stop_on_all_dead = stop;
                prop_assert!(c.validate().is_empty(), "{:?}", c.validate());
                let back = parse_config(&render_config(&c)).unwrap();
                prop_assert_eq!(back, c);
            }
        }
    }
}
