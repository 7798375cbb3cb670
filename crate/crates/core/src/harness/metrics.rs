//! Angular-error metric and its Monte Carlo average.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::orbit::Direction;

/// Angle between two unit directions, degrees.
pub fn angular_error(est: &Direction, truth: &Direction) -> f64 {
    est.as_vector().dot(truth.as_vector()).clamp(-1.0, 1.0).acos().to_degrees()
}

/// One row of the metric table.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub t: f64,
    pub method: String,
    /// Mean angular error over the runs, degrees.
    pub mean_error_deg: f64,
    pub runs: usize,
}

/// Mean error over runs per time step and method.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricSeries {
    pub rows: Vec<MetricRow>,
}

pub const METRIC_HEADER: &str = "t_seconds,method,A_e_deg,K";

impl MetricSeries {
    /// Averages per-run error series sampled on `times`. Methods are emitted
    /// in name order, each over the full time grid.
    pub fn aggregate(times: &[f64], per_run: &BTreeMap<String, Vec<Vec<f64>>>) -> Result<Self> {
        let mut rows = Vec::new();
        for (method, runs) in per_run {
            if runs.is_empty() {
                continue;
            }
            if runs.iter().any(|r| r.len() != times.len()) {
                return Err(Error::Config(format!("error series for {method} do not match the time grid")));
            }
            for (i, &t) in times.iter().enumerate() {
                let mean = runs.iter().map(|r| r[i]).sum::<f64>() / runs.len() as f64;
                rows.push(MetricRow { t, method: method.clone(), mean_error_deg: mean, runs: runs.len() });
            }
        }
        Ok(MetricSeries { rows })
    }

    /// Values of one method in time order.
    pub fn method(&self, name: &str) -> Vec<(f64, f64)> {
        self.rows.iter().filter(|r| r.method == name).map(|r| (r.t, r.mean_error_deg)).collect()
    }

    /// Value of `method` at the grid point nearest `t`.
    pub fn at(&self, name: &str, t: f64) -> Option<f64> {
        self.method(name)
            .into_iter()
            .min_by(|a, b| (a.0 - t).abs().total_cmp(&(b.0 - t).abs()))
            .map(|(_, v)| v)
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("{METRIC_HEADER}\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{},{}\n", r.t, r.method, r.mean_error_deg, r.runs));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == METRIC_HEADER => {}
            _ => return Err(Error::Parse { line: 1, message: format!("expected header `{METRIC_HEADER}`") }),
        }
        let mut rows = Vec::new();
        for (i, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let err = || Error::Parse { line: i + 1, message: format!("malformed row `{line}`") };
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 4 {
                return Err(err());
            }
            rows.push(MetricRow {
                t: f[0].parse().map_err(|_| err())?,
                method: f[1].to_string(),
                mean_error_deg: f[2].parse().map_err(|_| err())?,
                runs: f[3].parse().map_err(|_| err())?,
            });
        }
        Ok(MetricSeries { rows })
    }
}

/// Median of a non-empty slice; NaN-free input assumed.
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector3;

    #[test]
    fn basic_angles() {
        let z = Direction::zenith();
        assert_eq!(angular_error(&z, &z), 0.0);
        assert!((angular_error(&z, &Direction::new(Vector3::x())) - 90.0).abs() < 1e-12);
        assert!((angular_error(&z, &Direction::new(-Vector3::z())) - 180.0).abs() < 1e-12);
    }

    #[test]
    fn averaging_is_linear() {
        let times = [0.0, 5.0];
        let mut per_run = BTreeMap::new();
        per_run.insert("vmp".to_string(), vec![vec![1.0, 2.0], vec![3.0, 6.0]]);
        per_run.insert("baseline".to_string(), vec![vec![0.5, 0.5]]);
        let s = MetricSeries::aggregate(&times, &per_run).unwrap();
        assert_eq!(s.method("vmp"), vec![(0.0, 2.0), (5.0, 4.0)]);
        assert_eq!(s.rows[0].method, "baseline");
        assert_eq!(s.at("vmp", 4.0), Some(4.0));
        per_run.insert("bad".to_string(), vec![vec![1.0]]);
        assert!(MetricSeries::aggregate(&times, &per_run).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let empty = MetricSeries::default();
        assert_eq!(empty.to_csv(), format!("{METRIC_HEADER}\n"));
        assert_eq!(MetricSeries::parse(&empty.to_csv()).unwrap(), empty);
        let s = MetricSeries {
            rows: vec![
                MetricRow { t: 0.0, method: "vmp".into(), mean_error_deg: 0.123456789012345, runs: 10 },
                MetricRow { t: 5.0, method: "baseline".into(), mean_error_deg: 1e-17, runs: 10 },
            ],
        };
        assert_eq!(MetricSeries::parse(&s.to_csv()).unwrap(), s);
        assert!(MetricSeries::parse("t,x\n").is_err());
        assert!(MetricSeries::parse(&format!("{METRIC_HEADER}\n1,vmp,2\n")).is_err());
    }

    #[test]
    fn medians() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
