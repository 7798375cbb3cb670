//! Gaussian kernel density prior over orbit parameters.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::orbit::{wrap_angle, OrbitParams};

pub const DEFAULT_BANDWIDTH: f64 = 0.005;

/// Equal-weight mixture of isotropic Gaussians centred on `samples`.
/// Differences in `beta` and `eta0` are wrapped to (−π, π]; `alpha` is not.
#[derive(Debug, Clone, PartialEq)]
pub struct KdePrior {
    samples: Vec<OrbitParams>,
    bandwidth: f64,
    log_norm: f64,
}

impl KdePrior {
    pub fn new(samples: Vec<OrbitParams>, bandwidth: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Config("KDE prior needs at least one sample".into()));
        }
        if !(bandwidth > 0.0 && bandwidth.is_finite()) {
            return Err(Error::Config(format!("KDE bandwidth must be positive, got {bandwidth}")));
        }
        let log_norm = -1.5 * (2.0 * PI * bandwidth * bandwidth).ln() - (samples.len() as f64).ln();
        Ok(KdePrior { samples, bandwidth, log_norm })
    }

    pub fn samples(&self) -> &[OrbitParams] {
        &self.samples
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    fn squared_distance(a: &OrbitParams, b: &OrbitParams) -> f64 {
        let da = a.alpha - b.alpha;
        let db = wrap_angle(a.beta - b.beta);
        let de = wrap_angle(a.eta0 - b.eta0);
        da * da + db * db + de * de
    }

    /// `log (1/N) Σ_l N(gamma; sample_l, bw² I)`, evaluated with log-sum-exp.
    pub fn log_density(&self, gamma: &OrbitParams) -> f64 {
        let scale = -0.5 / (self.bandwidth * self.bandwidth);
        let mut best = f64::NEG_INFINITY;
        let mut exps = Vec::with_capacity(self.samples.len());
        for s in &self.samples {
            let e = scale * Self::squared_distance(gamma, s);
            best = best.max(e);
            exps.push(e);
        }
        let sum: f64 = exps.iter().map(|e| (e - best).exp()).sum();
        self.log_norm + best + sum.ln()
    }
}

/// Free-function form of [`KdePrior::log_density`].
pub fn kde_log_density(gamma: &OrbitParams, prior: &KdePrior) -> f64 {
    prior.log_density(gamma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn peak_value() {
        let g = OrbitParams::new(1.5, 1.0, 2.0);
        let p = KdePrior::new(vec![g], 0.005).unwrap();
        let expected = -1.5 * (2.0 * PI * 0.005f64.powi(2)).ln();
        assert!((p.log_density(&g) - expected).abs() < 1e-12);
    }

    #[test]
    fn integrates_to_one() {
        let g = OrbitParams::new(1.5, 0.0, 6.28);
        let bw = 0.005;
        let p = KdePrior::new(vec![g], bw).unwrap();
        let n = 60;
        let h = 10.0 * bw / n as f64;
        let mut total = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let off = |i: usize| -5.0 * bw + (i as f64 + 0.5) * h;
                    let q = OrbitParams::new(g.alpha + off(i), g.beta + off(j), g.eta0 + off(k));
                    total += p.log_density(&q).exp();
                }
            }
        }
        total *= h * h * h;
        assert!((total - 1.0).abs() < 0.01, "{total}");
    }

    #[test]
    fn far_tail_and_no_underflow() {
        let p = KdePrior::new(vec![OrbitParams::new(1.5, 1.0, 1.0)], 0.005).unwrap();
        let lp = p.log_density(&OrbitParams::new(1.5 + 0.06, 1.0, 1.0));
        assert!(lp < -50.0);
        let very_far = p.log_density(&OrbitParams::new(3.0, 1.0, 1.0));
        assert!(very_far.is_finite() && very_far < -1e4);
    }

    #[test]
    fn wraps_angles() {
        let p = KdePrior::new(vec![OrbitParams::new(1.5, 0.001, 6.282)], 0.005).unwrap();
        let a = p.log_density(&OrbitParams::new(1.5, 6.2822, 0.0005));
        let b = p.log_density(&OrbitParams::new(1.5, 0.001, 6.282));
        assert!(b - a < 2.0, "wrapped neighbour should be close: {a} vs {b}");
    }

    #[test]
    fn mixture_averages() {
        let a = OrbitParams::new(1.5, 1.0, 1.0);
        let b = OrbitParams::new(1.6, 2.0, 3.0);
        let p = KdePrior::new(vec![a, b], 0.005).unwrap();
        let single = KdePrior::new(vec![a], 0.005).unwrap();
        assert!((p.log_density(&a) - (single.log_density(&a) - 2f64.ln())).abs() < 1e-9);
    }

    #[test]
    fn rejects_invalid() {
        assert!(KdePrior::new(vec![], 0.005).is_err());
        assert!(KdePrior::new(vec![OrbitParams::new(1.5, 0.0, 0.0)], 0.0).is_err());
    }

    proptest! {
        #[test]
        fn bounded_by_peak(a in 1.2..1.9f64, b in 0.0..6.3f64, e in 0.0..6.3f64) {
            let s = OrbitParams::new(1.5, 3.0, 3.0);
            let p = KdePrior::new(vec![s], 0.005).unwrap();
            prop_assert!(p.log_density(&OrbitParams::new(a, b, e)) <= p.log_density(&s) + 1e-12);
        }
    }
}
