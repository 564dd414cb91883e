//! Log-distance path loss with optional log-normal shadowing.
//!
//! Path loss here is a reported quantity only; it never feeds the energy
//! budget or packet delivery.

use serde::{Deserialize, Serialize};

use crate::error::{SimError, Violation};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkClass {
    Los,
    Nlos,
    FreeSpace,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelParams {
    /// Hz.
    pub frequency: f64,
    /// Reference distance, meters.
    pub d0: f64,
    pub exponent_los: f64,
    pub exponent_nlos: f64,
    pub exponent_free: f64,
    /// Shadowing standard deviation, dB.
    pub sigma_db: f64,
    /// m/s.
    pub c: f64,
    /// Frequency-dependence exponent.
    pub k_freq: f64,
    /// Unordered node-id pairs whose link is NLOS.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub nlos_pairs: Vec<(usize, usize)>,
    /// Nodes whose link to the sink is NLOS.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub nlos_to_sink: Vec<usize>,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            frequency: 2.4e9,
            d0: 0.1,
            exponent_los: 3.5,
            exponent_nlos: 6.0,
            exponent_free: 2.0,
            sigma_db: 0.0,
            c: SPEED_OF_LIGHT,
            k_freq: 1.0,
            nlos_pairs: Vec::new(),
            nlos_to_sink: Vec::new(),
        }
    }
}

impl ChannelParams {
    pub fn exponent(&self, link: LinkClass) -> f64 {
        match link {
            LinkClass::Los => self.exponent_los,
            LinkClass::Nlos => self.exponent_nlos,
            LinkClass::FreeSpace => self.exponent_free,
        }
    }

    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut check = |ok: bool, key: &str, msg: String| {
            if !ok {
                out.push(Violation::new(format!("channel.{key}"), msg));
            }
        };
        check(
            self.frequency > 0.0 && self.frequency.is_finite(),
            "frequency",
            format!("must be > 0, got {}", self.frequency),
        );
        check(
            self.d0 > 0.0 && self.d0.is_finite(),
            "d0",
            format!("must be > 0, got {}", self.d0),
        );
        check(
            self.c > 0.0 && self.c.is_finite(),
            "c",
            format!("must be > 0, got {}", self.c),
        );
        check(
            (2.0..=4.0).contains(&self.exponent_los),
            "exponent_los",
            format!("must lie in [2, 4], got {}", self.exponent_los),
        );
        check(
            (5.0..=7.4).contains(&self.exponent_nlos),
            "exponent_nlos",
            format!("must lie in [5, 7.4], got {}", self.exponent_nlos),
        );
        check(
            self.exponent_free > 0.0 && self.exponent_free.is_finite(),
            "exponent_free",
            format!("must be > 0, got {}", self.exponent_free),
        );
        check(
            self.sigma_db >= 0.0 && self.sigma_db.is_finite(),
            "sigma_db",
            format!("must be >= 0, got {}", self.sigma_db),
        );
        check(
            self.k_freq.is_finite(),
            "k_freq",
            format!("must be finite, got {}", self.k_freq),
        );
        out
    }

    /// Link class between node `a` and node `b`, or the sink when `b` is `None`.
    pub fn classify(&self, a: usize, b: Option<usize>) -> LinkClass {
        let nlos = match b {
            None => self.nlos_to_sink.contains(&a),
            Some(b) => self
                .nlos_pairs
                .iter()
                .any(|&(p, q)| (p == a && q == b) || (p == b && q == a)),
        };
        if nlos {
            LinkClass::Nlos
        } else {
            LinkClass::Los
        }
    }
}

/// Free-space loss at the reference distance, `20·log10(4π·d0·f/c)` dB.
///
/// The squared-ratio form is used with `c` inside the ratio, which keeps the
/// result dimensionless and positive at 10 cm.
pub fn reference_path_loss(p: &ChannelParams) -> f64 {
    20.0 * (4.0 * std::f64::consts::PI * p.d0 * p.frequency / p.c).log10()
}

/// `PL0 + 10·n·log10(d/d0) + shadow`, in dB.
pub fn path_loss(p: &ChannelParams, d: f64, link: LinkClass, shadow_sample: f64) -> Result<f64, SimError> {
    if !(d > 0.0) || !d.is_finite() {
        return Err(SimError::Domain(format!("path loss distance must be > 0, got {d}")));
    }
    Ok(reference_path_loss(p) + 10.0 * p.exponent(link) * (d / p.d0).log10() + shadow_sample)
}

/// Linear frequency scaling `(f/f_ref)^(2k)`.
pub fn frequency_factor(p: &ChannelParams, f: f64, f_ref: f64) -> Result<f64, SimError> {
    if !(f > 0.0) || !(f_ref > 0.0) {
        return Err(SimError::Domain(format!(
            "frequencies must be > 0, got {f} and {f_ref}"
        )));
    }
    Ok((f / f_ref).powf(2.0 * p.k_freq))
}
