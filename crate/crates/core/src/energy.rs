//! Weighted action-count energy model and per-node charging.
//!
//! A node's spend over any accounting window is
//! `n1·x_s + n2·x_d + n3·x_w + n4·x_f + n5·x_c`, where the `n` are how many
//! times each action was performed. Distance does not enter the budget.

use std::ops::{Add, AddAssign};

use serde::{Deserialize, Serialize};

use crate::error::{SimError, Violation};
use crate::topology::SensorNode;

/// Ratio between an external-gateway send and a send to a body node.
pub const WSN_TO_DESTINED_RATIO: f64 = 100.0;

/// Per-action energy costs in joules, plus the death threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyWeights {
    /// Self-computation (sensing and local processing of one reading).
    pub x_s: f64,
    /// Send to a destined body node or the sink.
    pub x_d: f64,
    /// Send to the external WSN gateway.
    pub x_w: f64,
    /// Forward one packet as a relay.
    pub x_f: f64,
    /// Send or receive one control packet.
    pub x_c: f64,
    /// Death threshold: a node is alive while its residual exceeds this.
    pub x_t: f64,
}

impl Default for EnergyWeights {
    fn default() -> Self {
        // Calibrated against the reference outcome bands; see README.md.
        let x_d = 4.0e-5;
        Self {
            x_s: 1.0e-6,
            x_d,
            x_w: WSN_TO_DESTINED_RATIO * x_d,
            x_f: 1.0e-5,
            x_c: 3.5e-5,
            x_t: 0.0,
        }
    }
}

impl EnergyWeights {
    /// Weights with `x_w` derived from `x_d`.
    pub fn with_derived_wsn(x_s: f64, x_d: f64, x_f: f64, x_c: f64, x_t: f64) -> Self {
        Self {
            x_s,
            x_d,
            x_w: WSN_TO_DESTINED_RATIO * x_d,
            x_f,
            x_c,
            x_t,
        }
    }

    /// Constraint violations, with key paths under `energy.`.
    ///
    /// With `allow_unconstrained` the `x_w` ratio and the `x_f < x_c < x_d`
    /// ordering are not enforced; non-negativity always is.
    pub fn validate(&self, allow_unconstrained: bool) -> Vec<Violation> {
        let mut out = Vec::new();
        for (name, v) in [
            ("x_s", self.x_s),
            ("x_d", self.x_d),
            ("x_w", self.x_w),
            ("x_f", self.x_f),
            ("x_c", self.x_c),
            ("x_t", self.x_t),
        ] {
            if !v.is_finite() || v < 0.0 {
                out.push(Violation::new(
                    format!("energy.{name}"),
                    format!("must be a finite non-negative number of joules, got {v}"),
                ));
            }
        }
        if allow_unconstrained {
            return out;
        }
        let expected = WSN_TO_DESTINED_RATIO * self.x_d;
        if (self.x_w - expected).abs() > 1e-12 * expected.abs().max(1e-300) {
            out.push(Violation::new(
                "energy.x_w",
                format!("must equal 100 * x_d = {expected}, got {}", self.x_w),
            ));
        }
        if !(self.x_f < self.x_c) {
            out.push(Violation::new(
                "energy.x_f",
                format!("must be below x_c ({}), got {}", self.x_c, self.x_f),
            ));
        }
        if !(self.x_c < self.x_d) {
            out.push(Violation::new(
                "energy.x_c",
                format!("must be below x_d ({}), got {}", self.x_d, self.x_c),
            ));
        }
        out
    }

    pub fn cost_of(&self, action: Action) -> f64 {
        match action {
            Action::SelfComputation => self.x_s,
            Action::DestinedSend => self.x_d,
            Action::BoostedSend { multiplier } => self.x_d * multiplier,
            Action::WsnSend => self.x_w,
            Action::Forward => self.x_f,
            Action::Control => self.x_c,
        }
    }
}

/// One chargeable action.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Action {
    SelfComputation,
    DestinedSend,
    /// Destined send at raised transmit power.
    BoostedSend {
        multiplier: f64,
    },
    WsnSend,
    Forward,
    Control,
}

/// How often each action was performed within one accounting window.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionCounts {
    pub self_computation: u64,
    pub destined_sends: u64,
    pub wsn_sends: u64,
    pub forwards: u64,
    pub control_exchanges: u64,
}

impl ActionCounts {
    pub fn new(
        self_computation: u64,
        destined_sends: u64,
        wsn_sends: u64,
        forwards: u64,
        control_exchanges: u64,
    ) -> Self {
        Self {
            self_computation,
            destined_sends,
            wsn_sends,
            forwards,
            control_exchanges,
        }
    }

    pub fn total(&self) -> u64 {
        self.self_computation + self.destined_sends + self.wsn_sends + self.forwards + self.control_exchanges
    }

    /// Counts a single action. Boosted sends count as destined sends.
    pub fn record(&mut self, action: Action) {
        match action {
            Action::SelfComputation => self.self_computation += 1,
            Action::DestinedSend | Action::BoostedSend { .. } => self.destined_sends += 1,
            Action::WsnSend => self.wsn_sends += 1,
            Action::Forward => self.forwards += 1,
            Action::Control => self.control_exchanges += 1,
        }
    }
}

impl Add for ActionCounts {
    type Output = ActionCounts;

    fn add(self, rhs: Self) -> Self {
        Self {
            self_computation: self.self_computation + rhs.self_computation,
            destined_sends: self.destined_sends + rhs.destined_sends,
            wsn_sends: self.wsn_sends + rhs.wsn_sends,
            forwards: self.forwards + rhs.forwards,
            control_exchanges: self.control_exchanges + rhs.control_exchanges,
        }
    }
}

impl AddAssign for ActionCounts {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

/// Energy spent for the given action counts.
pub fn round_cost(w: &EnergyWeights, c: &ActionCounts) -> f64 {
    c.self_computation as f64 * w.x_s
        + c.destined_sends as f64 * w.x_d
        + c.wsn_sends as f64 * w.x_w
        + c.forwards as f64 * w.x_f
        + c.control_exchanges as f64 * w.x_c
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChargeOutcome {
    /// Cost deducted; the node is still alive.
    Applied { drained: f64 },
    /// The node crossed the threshold. Its residual is now zero and
    /// `drained` is everything it had left.
    Died { drained: f64 },
}

impl ChargeOutcome {
    pub fn drained(&self) -> f64 {
        match *self {
            ChargeOutcome::Applied { drained } | ChargeOutcome::Died { drained } => drained,
        }
    }

    pub fn died(&self) -> bool {
        matches!(self, ChargeOutcome::Died { .. })
    }
}

/// Deducts `cost` from a live node, killing it if the residual would not stay
/// above `x_t`.
pub fn charge(node: &mut SensorNode, cost: f64, w: &EnergyWeights) -> Result<ChargeOutcome, SimError> {
    if !node.alive {
        return Err(SimError::Usage(format!("charged dead node {}", node.id)));
    }
    if !(cost >= 0.0) {
        return Err(SimError::Usage(format!("negative charge {cost} on node {}", node.id)));
    }
    let remaining = node.residual_energy - cost;
    if remaining > w.x_t {
        node.residual_energy = remaining;
        Ok(ChargeOutcome::Applied { drained: cost })
    } else {
        let drained = node.residual_energy;
        node.residual_energy = 0.0;
        node.alive = false;
        Ok(ChargeOutcome::Died { drained })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::{BodyPoint, SensorKind};

    fn node(residual: f64) -> SensorNode {
        SensorNode {
            id: 0,
            kind: SensorKind::ECG,
            position: BodyPoint::new(0.4, 0.5),
            residual_energy: residual,
            temperature: 37.0,
            tx_range: 0.5,
            alive: true,
        }
    }

    fn example_weights() -> EnergyWeights {
        EnergyWeights::with_derived_wsn(1e-4, 1e-3, 1e-5, 5e-4, 0.0)
    }

    #[test]
    fn round_cost_examples() {
        let w = example_weights();
        assert_eq!(w.x_w, 0.1);
        assert_eq!(round_cost(&w, &ActionCounts::default()), 0.0);
        let c = ActionCounts::new(2, 1, 0, 3, 1);
        assert!((round_cost(&w, &c) - 1.73e-3).abs() < 1e-15);
        let only_wsn = ActionCounts::new(0, 0, 1, 0, 0);
        assert!((round_cost(&w, &only_wsn) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn charge_examples() {
        let w = EnergyWeights::default();
        let mut n = node(0.5);
        let out = charge(&mut n, 0.2, &w).unwrap();
        assert!(matches!(out, ChargeOutcome::Applied { .. }));
        assert!((n.residual_energy - 0.3).abs() < 1e-15);
        assert!(n.alive);

        let mut n = node(0.1);
        let out = charge(&mut n, 0.2, &w).unwrap();
        assert_eq!(out, ChargeOutcome::Died { drained: 0.1 });
        assert_eq!(n.residual_energy, 0.0);
        assert!(!n.alive);

        let mut n = node(0.5);
        let before = n.clone();
        assert_eq!(
            charge(&mut n, 0.0, &w).unwrap(),
            ChargeOutcome::Applied { drained: 0.0 }
        );
        assert_eq!(n, before);
    }

    #[test]
    fn charge_at_threshold_kills() {
        let mut w = EnergyWeights::default();
        w.x_t = 0.1;
        let mut n = node(0.3);
        assert!(charge(&mut n, 0.2, &w).unwrap().died());
    }

    #[test]
    fn charging_dead_node_is_usage_error() {
        let w = EnergyWeights::default();
        let mut n = node(0.0);
        n.alive = false;
        assert!(matches!(charge(&mut n, 0.01, &w), Err(SimError::Usage(_))));
    }

    #[test]
    fn validation() {
        assert!(EnergyWeights::default().validate(false).is_empty());
        let mut w = EnergyWeights::default();
        w.x_w = 1.0;
        let v = w.validate(false);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].path, "energy.x_w");
        assert!(w.validate(true).is_empty());
        w = EnergyWeights::default();
        w.x_f = w.x_c;
        assert_eq!(w.validate(false)[0].path, "energy.x_f");
        w = EnergyWeights::default();
        w.x_s = -1.0;
        assert_eq!(w.validate(true)[0].path, "energy.x_s");
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn counts() -> impl Strategy<Value = ActionCounts> {
            (0u64..1000, 0u64..1000, 0u64..10, 0u64..1000, 0u64..1000)
                .prop_map(|(a, b, c, d, e)| ActionCounts::new(a, b, c, d, e))
        }

        proptest! {
            #[test]
            fn round_cost_is_additive(a in counts(), b in counts()) {
                let w = example_weights();
                let lhs = round_cost(&w, &(a + b));
                let rhs = round_cost(&w, &a) + round_cost(&w, &b);
                prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0));
            }

            #[test]
            fn derived_wsn_weight_satisfies_ratio(x_d in 1e-9f64..1.0) {
                let w = EnergyWeights::with_derived_wsn(0.0, x_d, 0.0, x_d / 2.0, 0.0);
                prop_assert_eq!(w.x_w, 100.0 * x_d);
                prop_assert!(w.validate(false).iter().all(|v| v.path != "energy.x_w"));
            }
        }
    }
}
