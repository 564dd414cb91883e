//! Files on disk: per-run metric CSVs, the run-summary index and the plot
//! series for the four result figures.
//!
//! An output directory looks like
//!
//! ```text
//! <dir>/runs/<protocol>_seed<k>.csv   one per run
//! <dir>/summaries.json                every RunSummary in the directory
//! <dir>/{lifetime,throughput,residual,pathloss}.dat   written by `plots`
//! <dir>/comparison.{txt,json}                      written by `compare`
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::engine::{RoundMetrics, RunSummary};
use crate::error::SimError;
use crate::protocols::ProtocolId;

pub const METRICS_HEADER: &str =
    "round,alive,sent,received,critical_received,total_residual_j,mean_residual_j,mean_path_loss_db,equilibrium_ok";
pub const SUMMARIES_FILE: &str = "summaries.json";
pub const RUNS_DIR: &str = "runs";
pub const PLOT_FILES: [&str; 4] = ["lifetime.dat", "throughput.dat", "residual.dat", "pathloss.dat"];

#[derive(Serialize, Deserialize)]
struct CsvRow {
    round: u64,
    alive: usize,
    sent: u64,
    received: u64,
    critical_received: u64,
    total_residual_j: f64,
    mean_residual_j: f64,
    mean_path_loss_db: Option<f64>,
    equilibrium_ok: bool,
}

impl From<&RoundMetrics> for CsvRow {
    fn from(m: &RoundMetrics) -> Self {
        Self {
            round: m.round,
            alive: m.alive_count,
            sent: m.packets_sent,
            received: m.packets_received_at_sink,
            critical_received: m.critical_received,
            total_residual_j: m.total_residual,
            mean_residual_j: m.mean_residual,
            mean_path_loss_db: m.mean_path_loss,
            equilibrium_ok: m.equilibrium_flag,
        }
    }
}

impl From<CsvRow> for RoundMetrics {
    fn from(r: CsvRow) -> Self {
        Self {
            round: r.round,
            alive_count: r.alive,
            packets_sent: r.sent,
            packets_received_at_sink: r.received,
            critical_received: r.critical_received,
            total_residual: r.total_residual_j,
            mean_residual: r.mean_residual_j,
            mean_path_loss: r.mean_path_loss_db,
            equilibrium_flag: r.equilibrium_ok,
        }
    }
}

fn create_parent(path: &Path) -> Result<(), SimError> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => fs::create_dir_all(dir).map_err(|e| SimError::io(dir, e)),
        _ => Ok(()),
    }
}

/// The CSV text for a metric series: header, one LF-terminated row per round.
pub fn metrics_csv(metrics: &[RoundMetrics]) -> String {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    for m in metrics {
        w.serialize(CsvRow::from(m)).expect("serializing to memory cannot fail");
    }
    let body = String::from_utf8(w.into_inner().expect("in-memory writer")).expect("CSV output is UTF-8");
    format!("{METRICS_HEADER}\n{body}")
}

pub fn write_metrics_csv(metrics: &[RoundMetrics], path: &Path) -> Result<(), SimError> {
    create_parent(path)?;
    fs::write(path, metrics_csv(metrics)).map_err(|e| SimError::io(path, e))
}

pub fn read_metrics_csv(path: &Path) -> Result<Vec<RoundMetrics>, SimError> {
    let text = fs::read_to_string(path).map_err(|e| SimError::io(path, e))?;
    parse_metrics_csv(&text).map_err(|message| SimError::Format {
        path: path.to_path_buf(),
        message,
    })
}

pub fn parse_metrics_csv(text: &str) -> Result<Vec<RoundMetrics>, String> {
    let header = text.lines().next().unwrap_or_default();
    if header != METRICS_HEADER {
        return Err(format!("unexpected header `{header}`"));
    }
    csv::Reader::from_reader(text.as_bytes())
        .deserialize::<CsvRow>()
        .map(|r| r.map(RoundMetrics::from).map_err(|e| e.to_string()))
        .collect()
}

pub fn run_csv_path(dir: &Path, protocol: ProtocolId, seed: u64) -> PathBuf {
    dir.join(RUNS_DIR).join(format!("{protocol}_seed{seed}.csv"))
}

pub fn read_summaries(dir: &Path) -> Result<Vec<RunSummary>, SimError> {
    let path = dir.join(SUMMARIES_FILE);
    let text = fs::read_to_string(&path).map_err(|e| SimError::io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| SimError::Format {
        path,
        message: e.to_string(),
    })
}

pub fn write_summaries(dir: &Path, summaries: &[RunSummary]) -> Result<(), SimError> {
    let path = dir.join(SUMMARIES_FILE);
    create_parent(&path)?;
    let mut text = serde_json::to_string_pretty(summaries).expect("summaries serialize");
    text.push('\n');
    fs::write(&path, text).map_err(|e| SimError::io(&path, e))
}

/// Adds `new` to the directory's summary index, replacing any earlier entry
/// for the same protocol and seed. Entries are kept sorted by protocol then
/// seed.
pub fn merge_summaries(dir: &Path, new: &[RunSummary]) -> Result<Vec<RunSummary>, SimError> {
    let mut all = if dir.join(SUMMARIES_FILE).exists() {
        read_summaries(dir)?
    } else {
        Vec::new()
    };
    all.retain(|old| !new.iter().any(|n| n.protocol == old.protocol && n.seed == old.seed));
    all.extend_from_slice(new);
    all.sort_by_key(|s| (s.protocol, s.seed));
    write_summaries(dir, &all)?;
    Ok(all)
}

/// One round of the four plotted quantities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesPoint {
    pub alive: f64,
    /// Packets received at the sink since round 0.
    pub cumulative_received: f64,
    pub total_residual: f64,
    pub path_loss: Option<f64>,
}

pub fn series_points(metrics: &[RoundMetrics]) -> Vec<SeriesPoint> {
    let mut received = 0u64;
    metrics
        .iter()
        .map(|m| {
            received += m.packets_received_at_sink;
            SeriesPoint {
                alive: m.alive_count as f64,
                cumulative_received: received as f64,
                total_residual: m.total_residual,
                path_loss: m.mean_path_loss,
            }
        })
        .collect()
}

pub fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let mid = values.len() / 2;
    Some(if values.len() % 2 == 1 {
        values[mid]
    } else {
        (values[mid - 1] + values[mid]) / 2.0
    })
}

/// Per-round median across runs of equal length. Path loss uses the runs
/// that transmitted in that round.
pub fn median_series(runs: &[Vec<SeriesPoint>]) -> Result<Vec<SeriesPoint>, SimError> {
    let Some(first) = runs.first() else {
        return Ok(Vec::new());
    };
    if runs.iter().any(|r| r.len() != first.len()) {
        return Err(SimError::Domain("runs have different round counts".into()));
    }
    Ok((0..first.len())
        .map(|i| {
            let col = |f: &dyn Fn(&SeriesPoint) -> Option<f64>| {
                let mut v: Vec<f64> = runs.iter().filter_map(|r| f(&r[i])).collect();
                median(&mut v)
            };
            SeriesPoint {
                alive: col(&|p| Some(p.alive)).unwrap_or(0.0),
                cumulative_received: col(&|p| Some(p.cumulative_received)).unwrap_or(0.0),
                total_residual: col(&|p| Some(p.total_residual)).unwrap_or(0.0),
                path_loss: col(&|p| p.path_loss),
            }
        })
        .collect())
}

/// Writes the four `.dat` files with a `# round <labels…>` header and one
/// whitespace-separated row per round. Rounds without transmissions show
/// `NaN` in `pathloss.dat`.
pub fn emit_plot_series(runs: &[(String, Vec<SeriesPoint>)], out_dir: &Path) -> Result<Vec<PathBuf>, SimError> {
    let rounds = runs.first().map_or(0, |(_, s)| s.len());
    if let Some((label, s)) = runs.iter().find(|(_, s)| s.len() != rounds) {
        return Err(SimError::Domain(format!(
            "series `{label}` has {} rounds, expected {rounds}",
            s.len()
        )));
    }
    fs::create_dir_all(out_dir).map_err(|e| SimError::io(out_dir, e))?;
    let header: String = std::iter::once("# round")
        .chain(runs.iter().map(|(l, _)| l.as_str()))
        .collect::<Vec<_>>()
        .join(" ");
    let columns: [fn(&SeriesPoint) -> String; 4] = [
        |p| p.alive.to_string(),
        |p| p.cumulative_received.to_string(),
        |p| p.total_residual.to_string(),
        |p| p.path_loss.map_or_else(|| "NaN".to_string(), |v| v.to_string()),
    ];
    let mut written = Vec::new();
    for (name, column) in PLOT_FILES.iter().zip(columns) {
        let mut text = String::with_capacity(rounds * 16 * (runs.len() + 1));
        text.push_str(&header);
        text.push('\n');
        for i in 0..rounds {
            text.push_str(&i.to_string());
            for (_, s) in runs {
                text.push(' ');
                text.push_str(&column(&s[i]));
            }
            text.push('\n');
        }
        let path = out_dir.join(name);
        fs::write(&path, text).map_err(|e| SimError::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(round: u64, loss: Option<f64>) -> RoundMetrics {
        RoundMetrics {
            round,
            alive_count: 19 - round as usize,
            packets_sent: 3,
            packets_received_at_sink: 2,
            critical_received: 1,
            total_residual: 9.5 - 0.1 * round as f64 - 1e-17,
            mean_residual: 0.5 / 3.0,
            mean_path_loss: loss,
            equilibrium_flag: round.is_multiple_of(2),
        }
    }

    #[test]
    fn csv_shape_and_round_trip() {
        let m = vec![row(0, Some(61.123456789012345)), row(1, None), row(2, Some(1e-300))];
        let text = metrics_csv(&m);
        assert_eq!(text.lines().count(), 4);
        assert!(text.ends_with('\n') && !text.contains('\r'));
        assert_eq!(text.lines().next(), Some(METRICS_HEADER));
        assert!(text.lines().nth(2).unwrap().contains(",,"));
        assert_eq!(parse_metrics_csv(&text).unwrap(), m);
    }

    #[test]
    fn bad_header_is_a_format_error() {
        assert!(parse_metrics_csv("round,alive\n1,2\n").is_err());
    }

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), Some(2.5));
        assert_eq!(median(&mut []), None);
    }

    #[test]
    fn plot_files_have_expected_shape() {
        let dir = tempfile::tempdir().unwrap();
        let m = vec![row(0, Some(60.0)), row(1, None), row(2, Some(70.0))];
        let runs: Vec<(String, Vec<SeriesPoint>)> = ["amhrp", "mattempt", "simple"]
            .iter()
            .map(|l| (l.to_string(), series_points(&m)))
            .collect();
        let files = emit_plot_series(&runs, dir.path()).unwrap();
        assert_eq!(files.len(), 4);
        for f in &files {
            let text = fs::read_to_string(f).unwrap();
            assert_eq!(text.lines().count(), 4);
            assert_eq!(text.lines().next(), Some("# round amhrp mattempt simple"));
        }
        let tp = fs::read_to_string(dir.path().join("throughput.dat")).unwrap();
        assert_eq!(tp.lines().nth(3), Some("2 6 6 6"));
        let pl = fs::read_to_string(dir.path().join("pathloss.dat")).unwrap();
        assert_eq!(pl.lines().nth(2), Some("1 NaN NaN NaN"));

        let short = vec![
            ("a".to_string(), series_points(&m)),
            ("b".to_string(), series_points(&m[..2])),
        ];
        assert!(emit_plot_series(&short, dir.path()).is_err());
    }
}
