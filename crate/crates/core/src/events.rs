//! Poisson event arrivals, vital-sign thresholds and the periodic sensing
//! schedule.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{SimError, Violation};
use crate::topology::SensorKind;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventParams {
    /// Expected events per round per node.
    pub lambda: f64,
    /// Rounds per simulated day; one round is one hour by default.
    pub rounds_per_day: u32,
    /// Probability that a Poisson event is an alarm, i.e. produces an
    /// out-of-band reading.
    pub critical_fraction: f64,
}

impl Default for EventParams {
    fn default() -> Self {
        Self {
            lambda: 0.025,
            rounds_per_day: 24,
            critical_fraction: 1.0,
        }
    }
}

impl EventParams {
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            out.push(Violation::new(
                "events.lambda",
                format!("must be >= 0, got {}", self.lambda),
            ));
        }
        if self.rounds_per_day < 1 {
            out.push(Violation::new("events.rounds_per_day", "must be >= 1"));
        }
        if !(0.0..=1.0).contains(&self.critical_fraction) {
            out.push(Violation::new(
                "events.critical_fraction",
                format!("must lie in [0, 1], got {}", self.critical_fraction),
            ));
        }
        out
    }
}

/// `P(k) = e^-λ λ^k / k!`.
///
/// Evaluated in log space for `k > 20`.
pub fn poisson_pmf(lambda: f64, k: u64) -> Result<f64, SimError> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(SimError::Domain(format!("poisson rate must be >= 0, got {lambda}")));
    }
    if k <= 20 {
        let mut p = (-lambda).exp();
        for i in 1..=k {
            p *= lambda / i as f64;
        }
        return Ok(p);
    }
    if lambda == 0.0 {
        return Ok(0.0);
    }
    let ln_fact: f64 = (2..=k).map(|i| (i as f64).ln()).sum();
    Ok((-lambda + k as f64 * lambda.ln() - ln_fact).exp().min(1.0))
}

/// One Poisson draw by CDF inversion on a single uniform variate.
pub fn sample_event_count<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> u64 {
    let u: f64 = rng.random();
    if lambda <= 0.0 {
        return 0;
    }
    let mut k = 0u64;
    let mut p = (-lambda).exp();
    let mut cdf = p;
    while u >= cdf {
        k += 1;
        p *= lambda / k as f64;
        let next = cdf + p;
        if next == cdf {
            break;
        }
        cdf = next;
    }
    k
}

/// Physiological band for a scalar reading, with the envelope that bounds
/// synthetic out-of-band draws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Band {
    pub lower: f64,
    pub upper: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hard_critical: Option<f64>,
    pub envelope_low: f64,
    pub envelope_high: f64,
}

impl Band {
    pub const fn new(lower: f64, upper: f64, envelope_low: f64, envelope_high: f64) -> Self {
        Self {
            lower,
            upper,
            hard_critical: None,
            envelope_low,
            envelope_high,
        }
    }

    fn validate(&self, path: &str, out: &mut Vec<Violation>) {
        if !(self.lower < self.upper) {
            out.push(Violation::new(
                format!("{path}.lower"),
                format!("must be below upper ({}), got {}", self.upper, self.lower),
            ));
        }
        if let Some(h) = self.hard_critical {
            if !(h >= self.upper) {
                out.push(Violation::new(
                    format!("{path}.hard_critical"),
                    format!("must be >= upper ({}), got {h}", self.upper),
                ));
            }
        }
        if !(self.envelope_low <= self.lower && self.envelope_high >= self.upper) {
            out.push(Violation::new(
                format!("{path}.envelope_low"),
                "envelope must contain the band",
            ));
        }
        if !(self.envelope_low < self.lower || self.envelope_high > self.upper) {
            out.push(Violation::new(
                format!("{path}.envelope_high"),
                "envelope leaves no out-of-band region",
            ));
        }
    }
}

/// Threshold rule for one sensor kind.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Threshold {
    /// Critical outside `[lower, upper]`.
    Scalar(Band),
    /// Blood-pressure style pair. Critical when either component is below its
    /// lower bound or meets/exceeds its upper bound.
    Pair { systolic: Band, diastolic: Band },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Reading {
    Scalar(f64),
    Pair(f64, f64),
}

/// Threshold table keyed by sensor kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VitalThresholds(pub BTreeMap<SensorKind, Threshold>);

impl Default for VitalThresholds {
    fn default() -> Self {
        use SensorKind::*;
        let band = Band::new;
        let mut m = BTreeMap::new();
        m.insert(ECG, Threshold::Scalar(band(60.0, 100.0, 30.0, 200.0)));
        m.insert(
            BloodPressure,
            Threshold::Pair {
                systolic: band(90.0, 140.0, 60.0, 220.0),
                diastolic: band(60.0, 90.0, 40.0, 130.0),
            },
        );
        m.insert(Glucose, Threshold::Scalar(band(70.0, 125.0, 30.0, 400.0)));
        m.insert(Insulin, Threshold::Scalar(band(2.0, 25.0, 0.0, 100.0)));
        m.insert(EMG, Threshold::Scalar(band(0.0, 5.0, 0.0, 20.0)));
        m.insert(
            Temperature,
            Threshold::Scalar(Band {
                hard_critical: Some(40.0),
                ..band(36.5, 37.5, 34.0, 42.0)
            }),
        );
        m.insert(SpO2, Threshold::Scalar(band(95.0, 100.0, 70.0, 100.0)));
        m.insert(EnzymeTest, Threshold::Scalar(band(7.0, 56.0, 0.0, 500.0)));
        m.insert(Respiration, Threshold::Scalar(band(12.0, 20.0, 4.0, 60.0)));
        m.insert(Toxin, Threshold::Scalar(band(0.0, 1.0, 0.0, 10.0)));
        m.insert(LacticAcid, Threshold::Scalar(band(0.5, 2.2, 0.0, 15.0)));
        m.insert(Tilt, Threshold::Scalar(band(-30.0, 30.0, -90.0, 90.0)));
        m.insert(PH, Threshold::Scalar(band(7.35, 7.45, 6.8, 7.8)));
        m.insert(DNAProtein, Threshold::Scalar(band(6.0, 8.3, 2.0, 12.0)));
        m.insert(Motion, Threshold::Scalar(band(0.0, 2.0, 0.0, 16.0)));
        m.insert(PulseRate, Threshold::Scalar(band(60.0, 100.0, 30.0, 200.0)));
        m.insert(HeartRate, Threshold::Scalar(band(60.0, 100.0, 30.0, 200.0)));
        m.insert(Pressure, Threshold::Scalar(band(5.0, 15.0, 0.0, 60.0)));
        m.insert(Positioning, Threshold::Scalar(band(0.0, 0.3, 0.0, 2.0)));
        Self(m)
    }
}

impl VitalThresholds {
    pub fn get(&self, kind: SensorKind) -> Result<&Threshold, SimError> {
        self.0
            .get(&kind)
            .ok_or_else(|| SimError::Domain(format!("no vital threshold for {kind}")))
    }

    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        for kind in SensorKind::ALL {
            match self.0.get(&kind) {
                None => out.push(Violation::new(format!("vitals.{kind}"), "missing threshold")),
                Some(Threshold::Scalar(b)) => b.validate(&format!("vitals.{kind}"), &mut out),
                Some(Threshold::Pair { systolic, diastolic }) => {
                    systolic.validate(&format!("vitals.{kind}.systolic"), &mut out);
                    diastolic.validate(&format!("vitals.{kind}.diastolic"), &mut out);
                }
            }
        }
        out
    }
}

/// Whether a reading falls outside its kind's band or reaches its hard
/// critical bound.
pub fn is_critical(kind: SensorKind, reading: Reading, t: &VitalThresholds) -> Result<bool, SimError> {
    match (t.get(kind)?, reading) {
        (Threshold::Scalar(b), Reading::Scalar(v)) => {
            Ok(v < b.lower || v > b.upper || b.hard_critical.is_some_and(|h| v >= h))
        }
        (Threshold::Pair { systolic, diastolic }, Reading::Pair(s, d)) => {
            Ok(s < systolic.lower || s >= systolic.upper || d < diastolic.lower || d >= diastolic.upper)
        }
        (_, r) => Err(SimError::Domain(format!(
            "reading {r:?} does not match threshold shape for {kind}"
        ))),
    }
}

/// Synthetic reading consistent with `critical_event` under `t`.
pub fn sample_reading<R: Rng + ?Sized>(
    kind: SensorKind,
    critical_event: bool,
    t: &VitalThresholds,
    rng: &mut R,
) -> Result<Reading, SimError> {
    Ok(match t.get(kind)? {
        Threshold::Scalar(b) => Reading::Scalar(if critical_event {
            sample_out_of_band(b, true, rng)
        } else {
            rng.random_range(b.lower..=b.upper)
        }),
        Threshold::Pair { systolic, diastolic } => {
            if critical_event {
                // At least one component out of band: pick which, then draw
                // the other freely from its envelope.
                if rng.random_bool(0.5) {
                    let s = sample_out_of_band(systolic, false, rng);
                    let d = rng.random_range(diastolic.envelope_low..=diastolic.envelope_high);
                    Reading::Pair(s, d)
                } else {
                    let s = rng.random_range(systolic.envelope_low..=systolic.envelope_high);
                    let d = sample_out_of_band(diastolic, false, rng);
                    Reading::Pair(s, d)
                }
            } else {
                Reading::Pair(
                    rng.random_range(systolic.lower..systolic.upper),
                    rng.random_range(diastolic.lower..diastolic.upper),
                )
            }
        }
    })
}

/// Uniform draw from `[envelope_low, lower) ∪ (upper, envelope_high]`, or
/// `[upper, envelope_high]` on the upper side when `upper_open` is false.
fn sample_out_of_band<R: Rng + ?Sized>(b: &Band, upper_open: bool, rng: &mut R) -> f64 {
    let below = (b.lower - b.envelope_low).max(0.0);
    let above = (b.envelope_high - b.upper).max(0.0);
    let u: f64 = rng.random::<f64>() * (below + above);
    if u < below {
        b.envelope_low + u
    } else {
        let t = (u - below) / above;
        if upper_open {
            // (upper, high]
            b.envelope_high - t * above
        } else {
            b.upper + t * above
        }
    }
}

/// Sensing period per kind, in rounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SensingSchedule(pub BTreeMap<SensorKind, u64>);

impl SensingSchedule {
    /// Default monitoring plan, converted from hours to rounds.
    pub fn for_rounds_per_day(rounds_per_day: u32) -> Self {
        use SensorKind::*;
        let hours = |kind: SensorKind| -> u64 {
            match kind {
                ECG => 7 * 24,
                BloodPressure => 3,
                Glucose | Temperature => 8,
                Insulin => 24,
                EMG | EnzymeTest | SpO2 => 30 * 24,
                DNAProtein | Respiration | Toxin | LacticAcid | Tilt => 24,
                Motion | PulseRate | HeartRate | Pressure | Positioning | PH => 7 * 24,
            }
        };
        let to_rounds = |h: u64| ((h as f64 * rounds_per_day as f64 / 24.0).round() as u64).max(1);
        Self(SensorKind::ALL.iter().map(|&k| (k, to_rounds(hours(k)))).collect())
    }

    pub fn period(&self, kind: SensorKind) -> u64 {
        self.0.get(&kind).copied().unwrap_or(u64::MAX)
    }

    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        for kind in SensorKind::ALL {
            match self.0.get(&kind) {
                None => out.push(Violation::new(format!("schedule.{kind}"), "missing period")),
                Some(0) => out.push(Violation::new(format!("schedule.{kind}"), "period must be >= 1")),
                Some(_) => {}
            }
        }
        out
    }
}

impl Default for SensingSchedule {
    fn default() -> Self {
        Self::for_rounds_per_day(24)
    }
}

/// Whether `kind` takes a routine reading in `round`. Round 0 is due for all.
pub fn is_scheduled(kind: SensorKind, round: u64, s: &SensingSchedule) -> bool {
    round.is_multiple_of(s.period(kind))
}
