//! Nelder-Mead simplex maximisation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::orbit::OrbitParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimplexConfig {
    /// Edge length of the initial simplex.
    pub initial_edge: f64,
    /// Stop once every vertex lies within this distance of the best one.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SimplexConfig {
    fn default() -> Self {
        SimplexConfig { initial_edge: 0.01, tolerance: 1e-7, max_iterations: 500 }
    }
}

impl SimplexConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.initial_edge > 0.0 && self.tolerance > 0.0) || self.max_iterations == 0 {
            return Err(Error::Config("simplex edge, tolerance and iteration cap must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexResult<const N: usize> {
    pub point: [f64; N],
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn score(v: f64) -> f64 {
    if v.is_nan() {
        f64::NEG_INFINITY
    } else {
        v
    }
}

/// Maximises `f` from `start`. NaN values count as `-inf`.
pub fn maximize<const N: usize, F>(f: F, start: [f64; N], cfg: &SimplexConfig) -> SimplexResult<N>
where
    F: Fn(&[f64; N]) -> f64,
{
    let (reflect, expand, contract, shrink) = (1.0, 2.0, 0.5, 0.5);
    let mut verts: Vec<([f64; N], f64)> = Vec::with_capacity(N + 1);
    verts.push((start, score(f(&start))));
    for i in 0..N {
        let mut p = start;
        p[i] += cfg.initial_edge;
        verts.push((p, score(f(&p))));
    }
    let along = |a: &[f64; N], b: &[f64; N], w: f64| -> [f64; N] {
        let mut out = [0.0; N];
        for k in 0..N {
            out[k] = a[k] + w * (b[k] - a[k]);
        }
        out
    };
    let mut iterations = 0;
    let mut converged = false;
    loop {
        // best first; stable sort keeps ties in insertion order
        verts.sort_by(|a, b| b.1.total_cmp(&a.1));
        let best = verts[0].0;
        let diameter = verts[1..]
            .iter()
            .map(|(p, _)| p.iter().zip(&best).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt())
            .fold(0.0, f64::max);
        if diameter < cfg.tolerance {
            converged = true;
            break;
        }
        if iterations >= cfg.max_iterations {
            break;
        }
        iterations += 1;

        let mut centroid = [0.0; N];
        for (p, _) in &verts[..N] {
            for k in 0..N {
                centroid[k] += p[k] / N as f64;
            }
        }
        let (worst, worst_val) = verts[N];
        let second_worst_val = verts[N - 1].1;
        let best_val = verts[0].1;

        let xr = along(&centroid, &worst, -reflect);
        let fr = score(f(&xr));
        if fr > best_val {
            let xe = along(&centroid, &worst, -expand);
            let fe = score(f(&xe));
            verts[N] = if fe > fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr > second_worst_val {
            verts[N] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr > worst_val {
            let xc = along(&centroid, &xr, contract);
            (xc, score(f(&xc)))
        } else {
            let xc = along(&centroid, &worst, contract);
            (xc, score(f(&xc)))
        };
        if fc > fr.max(worst_val) {
            verts[N] = (xc, fc);
            continue;
        }
        for v in verts.iter_mut().skip(1) {
            v.0 = along(&best, &v.0, shrink);
            v.1 = score(f(&v.0));
        }
    }
    verts.sort_by(|a, b| b.1.total_cmp(&a.1));
    SimplexResult { point: verts[0].0, value: verts[0].1, iterations, converged }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizeOutcome {
    pub params: OrbitParams,
    pub value: f64,
    /// Index into `starts` of the winning run.
    pub start_index: usize,
}

/// Runs the simplex from every start in parallel and returns the best
/// terminal point; ties go to the earliest start.
pub fn optimize_gamma<F>(objective: F, starts: &[OrbitParams], cfg: &SimplexConfig) -> Result<OptimizeOutcome>
where
    F: Fn(&OrbitParams) -> f64 + Sync,
{
    if starts.is_empty() {
        return Err(Error::Config("optimisation needs at least one start".into()));
    }
    let runs: Vec<SimplexResult<3>> = starts
        .par_iter()
        .map(|s| maximize(|p: &[f64; 3]| objective(&OrbitParams::from_array(*p)), s.to_array(), cfg))
        .collect();
    let (start_index, best) = runs
        .iter()
        .enumerate()
        .fold(None::<(usize, &SimplexResult<3>)>, |acc, (i, r)| match acc {
            Some((_, b)) if b.value >= r.value => acc,
            _ => Some((i, r)),
        })
        .expect("at least one start");
    Ok(OptimizeOutcome { params: OrbitParams::from_array(best.point), value: best.value, start_index })
}
