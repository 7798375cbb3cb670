//! Runs one simulated pass and prints the angular error of both trackers.
//!
//! Usage: `cargo run --release --example single_pass -- [snr_db] [runs] [rho] [init]`

use std::time::Instant;

use leotrack::harness::{ScenarioConfig, Scenario, BASELINE, VMP};
use leotrack::vmp::InitChannel;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let mut cfg = ScenarioConfig::default();
    if let Some(v) = args.first() {
        cfg.snr_db = v.parse()?;
    }
    cfg.runs = args.get(1).map(|v| v.parse()).transpose()?.unwrap_or(1);
    if let Some(v) = args.get(2) {
        cfg.vmp.window.rho = v.parse()?;
    }
    if args.get(3).map(String::as_str) == Some("best") {
        cfg.vmp.init_channel = InitChannel::BestSample;
    }
    let started = Instant::now();
    let result = Scenario::new(cfg)?.run_montecarlo()?;
    println!("elapsed {:.1} s", started.elapsed().as_secs_f64());
    for t in [0.0, 20.0, 40.0, 100.0, 200.0, 300.0, 400.0, 500.0] {
        println!(
            "t={t:>5}  vmp {:>9.4}  baseline {:>9.4}",
            result.series.at(VMP, t).unwrap_or(f64::NAN),
            result.series.at(BASELINE, t).unwrap_or(f64::NAN)
        );
    }
    for r in &result.runs {
        let last = r.vmp.as_ref().and_then(|v| v.history().last().cloned());
        println!("run {} truth {:?} final {:?}", r.run, r.truth.gamma, last.map(|s| s.orbit.mean));
    }
    Ok(())
}
