//! Multi-run comparison: medians over seeds and pairwise improvements.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::engine::RunSummary;
use crate::error::SimError;
use crate::output::median;
use crate::protocols::ProtocolId;

/// Per-protocol medians over the shared seed set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolMedians {
    pub protocol: ProtocolId,
    pub runs: usize,
    pub stability_period: f64,
    pub network_lifetime: f64,
    pub throughput_pct: Option<f64>,
    pub packets_received: f64,
    pub final_total_residual: f64,
    pub residual_pct_at_end: f64,
    pub mean_path_loss_db: Option<f64>,
}

/// How protocol `a` compares with protocol `b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseComparison {
    pub a: ProtocolId,
    pub b: ProtocolId,
    /// `100·(A − B)/B`; `None` when B's median is zero.
    pub stability_improvement_pct: Option<f64>,
    pub lifetime_improvement_pct: Option<f64>,
    /// A / B.
    pub stability_ratio: Option<f64>,
    pub lifetime_ratio: Option<f64>,
    /// Percentage points.
    pub throughput_delta: Option<f64>,
    pub residual_pct_delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub seeds: Vec<u64>,
    pub rounds: u64,
    pub node_count: usize,
    pub protocols: Vec<ProtocolMedians>,
    pub pairs: Vec<PairwiseComparison>,
}

pub fn improvement_pct(a: f64, b: f64) -> Option<f64> {
    (b != 0.0).then(|| 100.0 * (a - b) / b)
}

/// Builds the report over the seeds every protocol has run. Protocols appear
/// in their canonical order; pairs cover every protocol against each later
/// one.
pub fn compare_runs(summaries: &[RunSummary]) -> Result<ComparisonReport, SimError> {
    let protocols: Vec<ProtocolId> = ProtocolId::ALL
        .into_iter()
        .filter(|p| summaries.iter().any(|s| s.protocol == *p))
        .collect();
    if protocols.len() < 2 {
        return Err(SimError::Domain(format!(
            "comparison needs at least two protocols, found {}",
            protocols.len()
        )));
    }
    let seeds_of =
        |p: ProtocolId| -> BTreeSet<u64> { summaries.iter().filter(|s| s.protocol == p).map(|s| s.seed).collect() };
    let shared: BTreeSet<u64> = protocols
        .iter()
        .map(|&p| seeds_of(p))
        .reduce(|a, b| &a & &b)
        .unwrap_or_default();
    if shared.is_empty() {
        return Err(SimError::Domain("no seed is shared by all protocols".into()));
    }
    let used: Vec<&RunSummary> = summaries.iter().filter(|s| shared.contains(&s.seed)).collect();
    let (rounds, node_count) = (used[0].rounds, used[0].node_count);
    if used.iter().any(|s| s.rounds != rounds || s.node_count != node_count) {
        return Err(SimError::Domain(
            "runs differ in round count or node count; they are not comparable".into(),
        ));
    }

    let medians: Vec<ProtocolMedians> = protocols
        .iter()
        .map(|&p| {
            let runs: Vec<&&RunSummary> = used.iter().filter(|s| s.protocol == p).collect();
            let med = |f: &dyn Fn(&RunSummary) -> Option<f64>| {
                let mut v: Vec<f64> = runs.iter().filter_map(|s| f(s)).collect();
                median(&mut v)
            };
            ProtocolMedians {
                protocol: p,
                runs: runs.len(),
                stability_period: med(&|s| Some(s.stability_period as f64)).unwrap_or(0.0),
                network_lifetime: med(&|s| Some(s.network_lifetime as f64)).unwrap_or(0.0),
                throughput_pct: med(&|s| s.throughput_pct),
                packets_received: med(&|s| Some(s.packets_received as f64)).unwrap_or(0.0),
                final_total_residual: med(&|s| Some(s.final_total_residual)).unwrap_or(0.0),
                residual_pct_at_end: med(&|s| Some(s.residual_pct_at_end)).unwrap_or(0.0),
                mean_path_loss_db: med(&|s| s.mean_path_loss_db),
            }
        })
        .collect();

    let mut pairs = Vec::new();
    for (i, a) in medians.iter().enumerate() {
        for b in &medians[i + 1..] {
            let ratio = |x: f64, y: f64| (y != 0.0).then(|| x / y);
            pairs.push(PairwiseComparison {
                a: a.protocol,
                b: b.protocol,
                stability_improvement_pct: improvement_pct(a.stability_period, b.stability_period),
                lifetime_improvement_pct: improvement_pct(a.network_lifetime, b.network_lifetime),
                stability_ratio: ratio(a.stability_period, b.stability_period),
                lifetime_ratio: ratio(a.network_lifetime, b.network_lifetime),
                throughput_delta: a.throughput_pct.zip(b.throughput_pct).map(|(x, y)| x - y),
                residual_pct_delta: a.residual_pct_at_end - b.residual_pct_at_end,
            });
        }
    }
    Ok(ComparisonReport {
        seeds: shared.into_iter().collect(),
        rounds,
        node_count,
        protocols: medians,
        pairs,
    })
}

fn opt(v: Option<f64>, decimals: usize) -> String {
    v.map_or_else(|| "n/a".to_string(), |v| format!("{v:.decimals$}"))
}

fn signed(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |v| format!("{v:+.1}%"))
}

impl ComparisonReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Plain-text table.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let seeds: Vec<String> = self.seeds.iter().map(u64::to_string).collect();
        let _ = writeln!(
            out,
            "Medians over {} seed(s) [{}], {} rounds, {} nodes",
            self.seeds.len(),
            seeds.join(","),
            self.rounds,
            self.node_count
        );
        let _ = writeln!(
            out,
            "{:<10} {:>10} {:>10} {:>12} {:>10} {:>12} {:>10}",
            "protocol", "stability", "lifetime", "throughput%", "received", "residual%", "pathloss"
        );
        for m in &self.protocols {
            let _ = writeln!(
                out,
                "{:<10} {:>10} {:>10} {:>12} {:>10} {:>12.2} {:>10}",
                m.protocol.as_str(),
                m.stability_period,
                m.network_lifetime,
                opt(m.throughput_pct, 2),
                m.packets_received,
                m.residual_pct_at_end,
                opt(m.mean_path_loss_db, 2)
            );
        }
        let _ = writeln!(out);
        let _ = writeln!(
            out,
            "{:<20} {:>11} {:>8} {:>11} {:>8} {:>12} {:>11}",
            "pair", "stability", "ratio", "lifetime", "ratio", "throughput", "residual"
        );
        for p in &self.pairs {
            let _ = writeln!(
                out,
                "{:<20} {:>11} {:>8} {:>11} {:>8} {:>12} {:>11}",
                format!("{} vs {}", p.a, p.b),
                signed(p.stability_improvement_pct),
                opt(p.stability_ratio, 2),
                signed(p.lifetime_improvement_pct),
                opt(p.lifetime_ratio, 2),
                p.throughput_delta
                    .map_or_else(|| "n/a".into(), |v| format!("{v:+.2}pp")),
                format!("{:+.2}pp", p.residual_pct_delta),
            );
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn summary(protocol: ProtocolId, seed: u64, stability: u64, lifetime: u64) -> RunSummary {
        RunSummary {
            protocol,
            seed,
            rounds: 10_000,
            node_count: 19,
            stability_period: stability,
            network_lifetime: lifetime,
            packets_sent: 100,
            packets_received: 90,
            throughput_pct: Some(90.0),
            final_total_residual: 8.0,
            residual_pct_at_end: 84.2,
            mean_path_loss_db: Some(60.0),
        }
    }

    #[test]
    fn improvement_examples() {
        assert_eq!(improvement_pct(6000.0, 4000.0), Some(50.0));
        assert!((improvement_pct(10000.0, 2857.0).unwrap() - 250.0).abs() < 0.02);
        assert_eq!(improvement_pct(1.0, 0.0), None);
    }

    #[test]
    fn medians_and_pairs() {
        let s = vec![
            summary(ProtocolId::Amhrp, 1, 6000, 10000),
            summary(ProtocolId::Amhrp, 2, 6000, 10000),
            summary(ProtocolId::Mattempt, 1, 4000, 2857),
            summary(ProtocolId::Mattempt, 2, 4000, 2857),
        ];
        let r = compare_runs(&s).unwrap();
        assert_eq!(r.protocols.len(), 2);
        assert_eq!(r.pairs[0].stability_improvement_pct, Some(50.0));
        assert!((r.pairs[0].lifetime_improvement_pct.unwrap() - 250.0).abs() < 0.02);
        assert!(r.render_text().contains("amhrp vs mattempt"));
        let back: ComparisonReport = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn identical_summaries_give_zero() {
        let s = vec![
            summary(ProtocolId::Amhrp, 1, 5000, 9000),
            summary(ProtocolId::Simple, 1, 5000, 9000),
        ];
        let r = compare_runs(&s).unwrap();
        let p = &r.pairs[0];
        assert_eq!(p.stability_improvement_pct, Some(0.0));
        assert_eq!(p.lifetime_improvement_pct, Some(0.0));
        assert_eq!(p.throughput_delta, Some(0.0));
        assert_eq!(p.residual_pct_delta, 0.0);
    }

    #[test]
    fn requires_shared_seeds_and_two_protocols() {
        let s = vec![
            summary(ProtocolId::Amhrp, 1, 1, 1),
            summary(ProtocolId::Mattempt, 2, 1, 1),
        ];
        assert!(compare_runs(&s).is_err());
        assert!(compare_runs(&s[..1]).is_err());
    }

    #[test]
    fn seed_order_does_not_matter() {
        let mut s: Vec<_> = (1..=5)
            .flat_map(|k| {
                [
                    summary(ProtocolId::Amhrp, k, 4000 + 100 * k, 10000),
                    summary(ProtocolId::Mattempt, k, 2000 + 37 * k * k, 3000 + k),
                ]
            })
            .collect();
        let a = compare_runs(&s).unwrap();
        s.reverse();
        s.swap(0, 3);
        assert_eq!(compare_runs(&s).unwrap(), a);
    }
}
