//! `amhrp`: run, sweep, compare and plot body-area-network routing
//! simulations.
//!
//! Exit status: 0 on success, 1 on a configuration or usage error, 2 on an
//! I/O or file-format error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::thread;

use clap::{Args, Parser, Subcommand};

use amhrp_sim::config::{parse_config_unvalidated, render_config};
use amhrp_sim::engine::{run_simulation, RunOutput, RunSummary};
use amhrp_sim::error::{ConfigError, SimError};
use amhrp_sim::output::{
    emit_plot_series, median_series, merge_summaries, read_metrics_csv, read_summaries, run_csv_path, series_points,
    write_metrics_csv,
};
use amhrp_sim::report::compare_runs;
use amhrp_sim::topology::dump_layout;
use amhrp_sim::{ProtocolId, SimConfig};

#[derive(Parser, Debug)]
#[command(name = "amhrp", version, about = "Body-area-network routing simulator")]
struct Cli {
    /// Print the canonical body layout as `id,kind,x,y` lines and exit.
    #[arg(long)]
    dump_layout: bool,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one protocol for one seed.
    Simulate {
        #[command(flatten)]
        common: RunArgs,
        #[arg(long)]
        protocol: Option<ProtocolId>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run every protocol for every seed.
    Sweep {
        #[command(flatten)]
        common: RunArgs,
        /// Comma-separated protocol ids.
        #[arg(long, value_delimiter = ',', default_value = "amhrp,mattempt,simple")]
        protocols: Vec<ProtocolId>,
        /// `a..b` (inclusive), `a..=b`, or a comma-separated list.
        #[arg(long, value_parser = parse_seeds)]
        seeds: Option<Seeds>,
    },
    /// Write the median comparison report for a run directory.
    Compare {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Write the four plot series for a run directory.
    Plots {
        #[arg(long = "in")]
        input: PathBuf,
    },
}

#[derive(Args, Debug)]
struct RunArgs {
    /// TOML configuration; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// End a run early once every node is dead.
    #[arg(long)]
    stop_on_all_dead: bool,
    /// Skip the x_w = 100·x_d and x_f < x_c < x_d weight constraints.
    #[arg(long)]
    allow_unconstrained_weights: bool,
}

#[derive(Debug, Clone)]
struct Seeds(Vec<u64>);

fn parse_seeds(s: &str) -> Result<Seeds, String> {
    let num = |t: &str| t.trim().parse::<u64>().map_err(|e| format!("bad seed `{t}`: {e}"));
    let seeds = if let Some((a, b)) = s.split_once("..") {
        let b = b.strip_prefix('=').unwrap_or(b);
        let (a, b) = (num(a)?, num(b)?);
        if a > b {
            return Err(format!("empty seed range {s}"));
        }
        (a..=b).collect()
    } else {
        s.split(',').map(num).collect::<Result<Vec<_>, _>>()?
    };
    Ok(Seeds(seeds))
}

fn load_config(args: &RunArgs) -> Result<SimConfig, SimError> {
    let mut config = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| SimError::io(path, e))?;
            parse_config_unvalidated(&text)?
        }
        None => SimConfig::default(),
    };
    config.stop_on_all_dead |= args.stop_on_all_dead;
    config.allow_unconstrained_weights |= args.allow_unconstrained_weights;
    Ok(config)
}

fn validated(config: SimConfig) -> Result<SimConfig, SimError> {
    config.validated().map_err(SimError::from)
}

fn write_run(out: &Path, run: &RunOutput) -> Result<(), SimError> {
    write_metrics_csv(&run.metrics, &run_csv_path(out, run.summary.protocol, run.summary.seed))
}

fn summary_line(s: &RunSummary) -> String {
    let tp = s
        .throughput_pct
        .map_or_else(|| "n/a".to_string(), |t| format!("{t:.2}%"));
    format!(
        "{} seed {}: stability {} lifetime {} throughput {} residual {:.2}%",
        s.protocol, s.seed, s.stability_period, s.network_lifetime, tp, s.residual_pct_at_end
    )
}

fn write_config(out: &Path, config: &SimConfig) -> Result<(), SimError> {
    fs::create_dir_all(out).map_err(|e| SimError::io(out, e))?;
    let path = out.join("config.toml");
    fs::write(&path, render_config(config)).map_err(|e| SimError::io(&path, e))
}

fn simulate(common: &RunArgs, protocol: Option<ProtocolId>, seed: Option<u64>) -> Result<(), SimError> {
    let mut config = load_config(common)?;
    if let Some(p) = protocol {
        config.protocol = p;
    }
    if let Some(s) = seed {
        config.seed = s;
    }
    let config = validated(config)?;
    let run = run_simulation(&config)?;
    write_config(&common.out, &config)?;
    write_run(&common.out, &run)?;
    merge_summaries(&common.out, std::slice::from_ref(&run.summary))?;
    println!("{}", summary_line(&run.summary));
    Ok(())
}

fn sweep(common: &RunArgs, protocols: &[ProtocolId], seeds: Option<&Seeds>) -> Result<(), SimError> {
    let mut base = load_config(common)?;
    if let Some(Seeds(s)) = seeds {
        base.seeds = s.clone();
    }
    let base = validated(base)?;
    let jobs: Vec<SimConfig> = protocols
        .iter()
        .flat_map(|&p| {
            base.seeds.iter().map({
                let base = &base;
                move |&seed| SimConfig {
                    protocol: p,
                    seed,
                    ..base.clone()
                }
            })
        })
        .collect();
    let workers = thread::available_parallelism()
        .map_or(1, |n| n.get())
        .min(jobs.len().max(1));
    let chunk = jobs.len().div_ceil(workers).max(1);
    let results: Vec<Result<RunOutput, SimError>> = thread::scope(|scope| {
        let handles: Vec<_> = jobs
            .chunks(chunk)
            .map(|batch| scope.spawn(move || batch.iter().map(run_simulation).collect::<Vec<_>>()))
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("simulation worker panicked"))
            .collect()
    });
    write_config(&common.out, &base)?;
    let mut summaries = Vec::with_capacity(results.len());
    for run in results {
        let run = run?;
        write_run(&common.out, &run)?;
        println!("{}", summary_line(&run.summary));
        summaries.push(run.summary);
    }
    merge_summaries(&common.out, &summaries)?;
    Ok(())
}

fn compare(dir: &Path) -> Result<(), SimError> {
    let report = compare_runs(&read_summaries(dir)?)?;
    let text = report.render_text();
    for (name, body) in [("comparison.txt", text.clone()), ("comparison.json", report.to_json())] {
        let path = dir.join(name);
        fs::write(&path, body).map_err(|e| SimError::io(&path, e))?;
    }
    print!("{text}");
    Ok(())
}

fn plots(dir: &Path) -> Result<(), SimError> {
    let summaries = read_summaries(dir)?;
    let mut series = Vec::new();
    for p in ProtocolId::ALL {
        let runs = summaries
            .iter()
            .filter(|s| s.protocol == p)
            .map(|s| read_metrics_csv(&run_csv_path(dir, p, s.seed)).map(|m| series_points(&m)))
            .collect::<Result<Vec<_>, _>>()?;
        if !runs.is_empty() {
            series.push((p.to_string(), median_series(&runs)?));
        }
    }
    for path in emit_plot_series(&series, dir)? {
        println!("{}", path.display());
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), SimError> {
    if cli.dump_layout {
        print!("{}", dump_layout());
        if cli.command.is_none() {
            return Ok(());
        }
    }
    match cli.command {
        None => Err(SimError::Usage("no command given; see --help".into())),
        Some(Command::Simulate { common, protocol, seed }) => simulate(&common, protocol, seed),
        Some(Command::Sweep {
            common,
            protocols,
            seeds,
        }) => sweep(&common, &protocols, seeds.as_ref()),
        Some(Command::Compare { input }) => compare(&input),
        Some(Command::Plots { input }) => plots(&input),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if let SimError::Config(ConfigError::Constraints(v)) = &e {
                for violation in v {
                    eprintln!("  {violation}");
                }
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_specs() {
        assert_eq!(parse_seeds("1..10").unwrap().0, (1..=10).collect::<Vec<_>>());
        assert_eq!(parse_seeds("3..=4").unwrap().0, vec![3, 4]);
        assert_eq!(parse_seeds("5,9,2").unwrap().0, vec![5, 9, 2]);
        assert_eq!(parse_seeds("7").unwrap().0, vec![7]);
        assert!(parse_seeds("4..2").is_err());
        assert!(parse_seeds("x").is_err());
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
