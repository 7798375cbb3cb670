//! Result files: metric tables, ABC dumps, confidence-region orbits and a
//! gnuplot script for the error curves.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::orbit::{CircularOrbit, Direction, OrbitParams};
use crate::vmp::AbcSample;

use super::metrics::MetricSeries;
use super::montecarlo::{RunOutcome, BASELINE, VMP};

pub const ABC_HEADER: &str = "alpha,beta,eta0,fitness";
pub const CI_HEADER: &str = "sample,t_seconds,x_m,y_m,z_m";
pub const RUNS_HEADER: &str = "run,t_seconds,method,error_deg";

/// Quantities a recorded frame set was synthesised with, stored next to the
/// frames so they can be processed offline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationMeta {
    pub noise_precision: f64,
    pub channel_precision: f64,
    /// Unit vector of the initial AoA estimate.
    pub initial_aoa: [f64; 3],
}

impl SimulationMeta {
    pub fn initial_direction(&self) -> Result<Direction> {
        Direction::try_new(self.initial_aoa.into(), 1e-6)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_text(path, &toml::to_string(self).expect("metadata serialises"))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, text)?;
    Ok(())
}

pub fn write_metrics(path: &Path, series: &MetricSeries) -> Result<()> {
    write_text(path, &series.to_csv())
}

pub fn read_metrics(path: &Path) -> Result<MetricSeries> {
    MetricSeries::parse(&fs::read_to_string(path)?)
}

pub fn abc_csv(samples: &[AbcSample]) -> String {
    let mut out = format!("{ABC_HEADER}\n");
    for s in samples {
        let g = s.params;
        out.push_str(&format!("{},{},{},{}\n", g.alpha, g.beta, g.eta0, s.fitness));
    }
    out
}

/// Per-run error series, one row per run, grid point and method.
pub fn runs_csv(runs: &[RunOutcome]) -> String {
    let mut out = format!("{RUNS_HEADER}\n");
    for r in runs {
        for method in [VMP, BASELINE] {
            if let Some(errs) = r.errors(method) {
                for (t, e) in r.times.iter().zip(errs) {
                    out.push_str(&format!("{},{t},{method},{e}\n", r.run));
                }
            }
        }
    }
    out
}

/// Positions of each orbit in `orbits` over `times`, one row per pair.
pub fn ci_orbits_csv(orbit: &CircularOrbit, orbits: &[OrbitParams], times: &[f64]) -> String {
    let mut out = format!("{CI_HEADER}\n");
    for (k, g) in orbits.iter().enumerate() {
        for &t in times {
            let p = orbit.position(t, g);
            out.push_str(&format!("{k},{t},{},{},{}\n", p.x, p.y, p.z));
        }
    }
    out
}

/// Gnuplot script drawing the mean-error curve of every method found in
/// `metrics_file` on a log scale.
pub fn gnuplot_script(metrics_file: &str, methods: &[&str], output_png: &str) -> String {
    let mut out = String::new();
    out.push_str("set datafile separator ','\n");
    out.push_str("set terminal pngcairo size 900,600\n");
    out.push_str(&format!("set output '{output_png}'\n"));
    out.push_str("set xlabel 'time [s]'\nset ylabel 'mean angular error [deg]'\nset logscale y\nset key top left\n");
    let plots: Vec<String> = methods
        .iter()
        .map(|m| format!("'{metrics_file}' using 1:(strcol(2) eq '{m}' ? $3 : 1/0) with linespoints title '{m}'"))
        .collect();
    out.push_str(&format!("plot {}\n", plots.join(", \\\n     ")));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::metrics::MetricRow;

    #[test]
    fn metrics_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nested/metrics.csv");
        let s = MetricSeries {
            rows: vec![MetricRow { t: 5.0, method: "vmp".into(), mean_error_deg: 0.25, runs: 3 }],
        };
        write_metrics(&path, &s).unwrap();
        assert_eq!(read_metrics(&path).unwrap(), s);
    }

    #[test]
    fn meta_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("meta.toml");
        let meta = SimulationMeta { noise_precision: 1.5e14, channel_precision: 3.0e9, initial_aoa: [0.0, 0.6, 0.8] };
        meta.save(&path).unwrap();
        assert_eq!(SimulationMeta::load(&path).unwrap(), meta);
        assert!((meta.initial_direction().unwrap().z() - 0.8).abs() < 1e-15);
    }

    #[test]
    fn csv_shapes() {
        let orbit = CircularOrbit::from_altitude(550e3);
        let g = OrbitParams::new(1.5, 0.2, 0.1);
        let text = ci_orbits_csv(&orbit, &[g, g], &[0.0, 1.0, 2.0]);
        assert_eq!(text.lines().count(), 7);
        assert!(text.starts_with(CI_HEADER));
        let abc = abc_csv(&[AbcSample { params: g, fitness: 0.9 }]);
        assert_eq!(abc.lines().nth(1).unwrap(), "1.5,0.2,0.1,0.9");
        let script = gnuplot_script("m.csv", &["vmp", "baseline"], "m.png");
        assert!(script.contains("'vmp'") && script.contains("'baseline'"));
    }
}
