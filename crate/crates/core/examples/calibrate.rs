//! Calibration helper: runs every protocol over a seed set and prints the
//! medians that the acceptance targets are stated in.
//!
//! ```text
//! cargo run --release -p amhrp-sim --example calibrate -- 'tx_range = 0.4' '[energy]' 'x_d = 3e-5'
//! ```
//!
//! Each argument is one line of a TOML overlay on the defaults.

use amhrp_sim::config::parse_config;
use amhrp_sim::engine::run_simulation;
use amhrp_sim::output::median;
use amhrp_sim::ProtocolId;

fn main() {
    let overlay = std::env::args().skip(1).collect::<Vec<_>>().join("\n");
    let base = match parse_config(&overlay) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(1);
        }
    };
    let mut stability = Vec::new();
    let mut lifetime = Vec::new();
    for protocol in ProtocolId::ALL {
        let runs: Vec<_> = base
            .seeds
            .iter()
            .map(|&seed| {
                let mut c = base.clone();
                c.protocol = protocol;
                c.seed = seed;
                let run = run_simulation(&c).expect("valid config");
                let alive = run.metrics.last().map_or(0, |m| m.alive_count);
                (run.summary, alive)
            })
            .collect();
        let final_alive = median(&mut runs.iter().map(|r| r.1 as f64).collect::<Vec<_>>()).unwrap_or(f64::NAN);
        let runs: Vec<_> = runs.into_iter().map(|r| r.0).collect();
        let med = |f: &dyn Fn(&amhrp_sim::RunSummary) -> f64| {
            median(&mut runs.iter().map(f).collect::<Vec<_>>()).unwrap_or(f64::NAN)
        };
        let s = med(&|r| r.stability_period as f64);
        let l = med(&|r| r.network_lifetime as f64);
        stability.push(s);
        lifetime.push(l);
        println!(
            "{protocol:<9} stability {s:>7} lifetime {l:>7} residual {:>6.2}% received {:>8} pathloss {:>6.2} final alive {final_alive}",
            med(&|r| r.residual_pct_at_end),
            med(&|r| r.packets_received as f64),
            med(&|r| r.mean_path_loss_db.unwrap_or(f64::NAN)),
        );
        println!(
            "          per seed stability {:?}",
            runs.iter().map(|r| r.stability_period).collect::<Vec<_>>()
        );
        println!(
            "          per seed lifetime  {:?}",
            runs.iter().map(|r| r.network_lifetime).collect::<Vec<_>>()
        );
    }
    println!(
        "amhrp/mattempt: stability x{:.2}, lifetime x{:.2}",
        stability[0] / stability[1],
        lifetime[0] / lifetime[1]
    );
}
