//! Trigonometric equilibrium profile, used as a logged per-round diagnostic.
//!
//! `f(x) = a0 + Σ_{n=1..l} (a_n·sin(nπx/L) + b_n·cos(nπx/L))`, and a round is
//! flagged healthy when `f(x) > α*`. The engine fills `a_n` with the share of
//! actions in window `n` that were forwards and `b_n` with the share that were
//! sends; the profile never influences routing.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{SimError, Violation};

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumProfile {
    pub a0: f64,
    pub coeffs_a: Vec<f64>,
    pub coeffs_b: Vec<f64>,
    /// Iteration count.
    pub iterations: u64,
    pub alpha_star: f64,
}

impl EquilibriumProfile {
    pub fn new(
        a0: f64,
        coeffs_a: Vec<f64>,
        coeffs_b: Vec<f64>,
        iterations: u64,
        alpha_star: f64,
    ) -> Result<Self, SimError> {
        if coeffs_a.len() != coeffs_b.len() {
            return Err(SimError::Domain(format!(
                "coefficient series lengths differ: {} vs {}",
                coeffs_a.len(),
                coeffs_b.len()
            )));
        }
        if iterations == 0 {
            return Err(SimError::Domain("iteration count must be >= 1".into()));
        }
        Ok(Self {
            a0,
            coeffs_a,
            coeffs_b,
            iterations,
            alpha_star,
        })
    }

    pub fn len(&self) -> usize {
        self.coeffs_a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs_a.is_empty()
    }
}

pub fn equilibrium_score(p: &EquilibriumProfile, x: f64) -> Result<f64, SimError> {
    let l = p.iterations as f64;
    if !(0.0..=l).contains(&x) {
        return Err(SimError::Domain(format!("x = {x} outside [0, {l}]")));
    }
    let series: f64 = p
        .coeffs_a
        .iter()
        .zip(&p.coeffs_b)
        .enumerate()
        .map(|(i, (a, b))| {
            let arg = (i + 1) as f64 * PI * x / l;
            a * arg.sin() + b * arg.cos()
        })
        .sum();
    Ok(p.a0 + series)
}

pub fn equilibrium_ok(p: &EquilibriumProfile, x: f64) -> Result<bool, SimError> {
    Ok(equilibrium_score(p, x)? > p.alpha_star)
}

/// Window settings for the per-round diagnostic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EquilibriumParams {
    /// Rounds per logged window.
    pub window_rounds: u64,
    /// Number of most recent windows in the series.
    pub windows: usize,
    pub alpha_star: f64,
}

impl Default for EquilibriumParams {
    fn default() -> Self {
        Self {
            window_rounds: 100,
            windows: 10,
            alpha_star: 0.25,
        }
    }
}

impl EquilibriumParams {
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.window_rounds == 0 {
            out.push(Violation::new("equilibrium.window_rounds", "must be >= 1"));
        }
        if self.windows == 0 {
            out.push(Violation::new("equilibrium.windows", "must be >= 1"));
        }
        if !self.alpha_star.is_finite() {
            out.push(Violation::new("equilibrium.alpha_star", "must be finite"));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat(a0: f64, alpha: f64) -> EquilibriumProfile {
        EquilibriumProfile::new(a0, vec![0.0; 3], vec![0.0; 3], 10, alpha).unwrap()
    }

    #[test]
    fn score_examples() {
        assert_eq!(equilibrium_score(&flat(0.5, 0.0), 3.0).unwrap(), 0.5);
        let p = EquilibriumProfile::new(0.2, vec![1.0], vec![0.0], 10, 0.0).unwrap();
        assert!((equilibrium_score(&p, 5.0).unwrap() - 1.2).abs() < 1e-12);
        let p = EquilibriumProfile::new(0.2, vec![0.7, -0.3], vec![0.25, 0.5], 10, 0.0).unwrap();
        assert_eq!(equilibrium_score(&p, 0.0).unwrap(), 0.2 + 0.25 + 0.5);
        assert!(equilibrium_score(&p, 10.5).is_err());
        assert!(equilibrium_score(&p, -0.1).is_err());
    }

    #[test]
    fn threshold_is_strict() {
        assert!(equilibrium_ok(&flat(0.5, 0.4), 1.0).unwrap());
        assert!(!equilibrium_ok(&flat(0.5, 0.5), 1.0).unwrap());
        assert!(!equilibrium_ok(&flat(0.5, 0.6), 1.0).unwrap());
    }

    #[test]
    fn rejects_bad_profiles() {
        assert!(EquilibriumProfile::new(0.0, vec![1.0], vec![], 10, 0.0).is_err());
        assert!(EquilibriumProfile::new(0.0, vec![], vec![], 0, 0.0).is_err());
    }
}
