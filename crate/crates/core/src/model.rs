//! Parameters, the time grid, seed streams and the radius events shared by
//! every other module.


#[allow(unused_imports)]
use num_traits::Float;
use crate::error::{Error, Result};
use crate::rng::{mix64, ChainRng};

/// Penalization strength, horizon, grid resolution and drift along `e₁`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub beta: f64,
    pub horizon: f64,
    pub n_steps: usize,
    /// Drift magnitude along the first axis; `0` is the plain Wiener measure.
    pub drift_mu: f64,
}

impl ModelParams {
    pub fn new(beta: f64, horizon: f64, n_steps: usize, drift_mu: f64) -> Result<Self> {
        let p = Self { beta, horizon, n_steps, drift_mu };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta >= 0.0) || !self.beta.is_finite() {
            return Err(Error::Parameter("beta must be finite and >= 0"));
        }
        if !self.drift_mu.is_finite() {
            return Err(Error::Parameter("drift must be finite"));
        }
        // The grid carries the remaining checks.
        TimeGrid::new(self.horizon, self.n_steps).map(|_| ())
    }

    pub fn grid(&self) -> Result<TimeGrid> {
        TimeGrid::new(self.horizon, self.n_steps)
    }

    /// Grid spacing `T / n`.
    pub fn dt(&self) -> f64 {
        self.horizon / self.n_steps as f64
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = beta;
        self
    }

    pub fn with_drift(mut self, mu: f64) -> Self {
        self.drift_mu = mu;
        self
    }
}

/// Uniform grid `t_i = i·Δ`, `i = 0..=n_steps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    horizon: f64,
    n_steps: usize,
    dt: f64,
}

impl TimeGrid {
    pub fn new(horizon: f64, n_steps: usize) -> Result<Self> {
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::Parameter("horizon must be finite and > 0"));
        }
        if n_steps < 2 {
            return Err(Error::Parameter("n_steps must be >= 2"));
        }
        let dt = horizon / n_steps as f64;
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::Parameter("grid spacing underflows"));
        }
        Ok(Self { horizon, n_steps, dt })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn node_count(&self) -> usize {
        self.n_steps + 1
    }

    /// Time of node `i`. The last node is pinned to the horizon exactly.
    pub fn time(&self, i: usize) -> f64 {
        if i == self.n_steps {
            self.horizon
        } else {
            i as f64 * self.dt
        }
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.n_steps).map(|i| self.time(i))
    }
}

/// Convenience wrapper over [`TimeGrid::new`].
pub fn make_grid(horizon: f64, n_steps: usize) -> Result<TimeGrid> {
    TimeGrid::new(horizon, n_steps)
}

/// Identifies one reproducible random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub stream_index: u64,
}

impl SeedSpec {
    pub const fn new(master_seed: u64, stream_index: u64) -> Self {
        Self { master_seed, stream_index }
    }

    pub fn rng(&self) -> ChainRng {
        crate::rng::stream(self.master_seed, self.stream_index)
    }

    /// Derived stream `k` below this one, e.g. replicate `k` of an estimator.
    ///
    /// The child key mixes both parent fields, so children of different
    /// parents do not collide.
    pub fn child(&self, k: u64) -> SeedSpec {
        SeedSpec {
            master_seed: mix64(self.master_seed ^ mix64(self.stream_index.wrapping_add(0x5eed))),
            stream_index: k,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    RadiusBelow,
    RadiusAbove,
}

/// `{R̂ < threshold}` or `{R̂ > threshold}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventPredicate {
    kind: EventKind,
    threshold: f64,
}

impl EventPredicate {
    /// A zero threshold is accepted so that `{R̂ > 0}` can be posed; negative
    /// or non-finite thresholds are rejected.
    pub fn new(kind: EventKind, threshold: f64) -> Result<Self> {
        if !(threshold >= 0.0) || threshold.is_nan() {
            return Err(Error::Parameter("event threshold must be >= 0"));
        }
        Ok(Self { kind, threshold })
    }

    pub fn kind(&self) -> EventKind {
        self.kind
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn fires(&self, radius: f64) -> bool {
        match self.kind {
            EventKind::RadiusBelow => radius < self.threshold,
            EventKind::RadiusAbove => radius > self.threshold,
        }
    }
}

/// Thresholds `(c₁T/ln T, c₂T√ln T)` of the small- and large-radius events.
pub fn event_thresholds(params: &ModelParams, c1: f64, c2: f64) -> Result<(f64, f64)> {
    thresholds(params.horizon, c1, c2)
}

pub(crate) fn thresholds(horizon: f64, c1: f64, c2: f64) -> Result<(f64, f64)> {
    if !(horizon > 1.0) {
        return Err(Error::Domain("event thresholds need T > 1"));
    }
    if !(c1 > 0.0) || !(c2 > 0.0) {
        return Err(Error::Parameter("c1 and c2 must be > 0"));
    }
    let log_t = horizon.ln();
    Ok((c1 * horizon / log_t, c2 * horizon * log_t.sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngCore;
    use std::vec::Vec;

    #[test]
    fn grid_nodes() {
        let g = make_grid(1.0, 2).unwrap();
        assert_eq!(g.times().collect::<Vec<_>>(), [0.0, 0.5, 1.0]);
        let g = make_grid(4.0, 4).unwrap();
        assert_eq!(g.dt(), 1.0);
        assert_eq!(g.times().collect::<Vec<_>>(), [0.0, 1.0, 2.0, 3.0, 4.0]);
        assert!(matches!(make_grid(1.0, 1), Err(Error::Parameter(_))));
        assert!(make_grid(0.0, 4).is_err());
        assert!(make_grid(-1.0, 4).is_err());
        assert!(make_grid(f64::NAN, 4).is_err());
    }

    #[test]
    fn grid_uniformity() {
        for &(t, n) in &[(1.0, 3usize), (0.7, 1000), (32.0, 1024), (1e-3, 77), (123.456, 4097)] {
            let g = make_grid(t, n).unwrap();
            let ts: Vec<f64> = g.times().collect();
            assert_eq!(ts[0], 0.0);
            assert_eq!(*ts.last().unwrap(), t);
            for w in ts.windows(2) {
                let gap = w[1] - w[0];
                assert!(gap > 0.0);
                // Node times are rounded products, so the gap error scales
                // with ulp(t) rather than ulp(Δ).
                assert!((gap - g.dt()).abs() <= 4.0 * f64::EPSILON * w[1].max(g.dt()));
            }
        }
    }

    #[test]
    fn params_validation() {
        assert!(ModelParams::new(-0.1, 1.0, 4, 0.0).is_err());
        assert!(ModelParams::new(0.0, 1.0, 1, 0.0).is_err());
        assert!(ModelParams::new(1.0, 0.0, 4, 0.0).is_err());
        assert!(ModelParams::new(1.0, 1.0, 4, f64::INFINITY).is_err());
        let p = ModelParams::new(0.0, 2.0, 8, 1.0).unwrap();
        assert_eq!(p.dt(), 0.25);
    }

    #[test]
    fn thresholds_examples() {
        let e = core::f64::consts::E;
        let p = ModelParams::new(1.0, e, 4, 0.0).unwrap();
        let (lo, hi) = event_thresholds(&p, 1.0, 1.0).unwrap();
        assert!((lo - e).abs() < 1e-15 && (hi - e).abs() < 1e-15);

        let p = ModelParams::new(1.0, 100.0, 4, 0.0).unwrap();
        let (lo, hi) = event_thresholds(&p, 1.0 / 3.0, 7.0).unwrap();
        let ln100 = 100f64.ln();
        assert!((lo - 100.0 / (3.0 * ln100)).abs() <= 1e-12 * lo);
        assert!((hi - 700.0 * ln100.sqrt()).abs() <= 1e-12 * hi);
        assert!((lo - 7.2382).abs() < 5e-5);
        assert!((hi - 1502.17).abs() < 1e-2);

        let p = ModelParams::new(1.0, 1.0, 4, 0.0).unwrap();
        assert!(matches!(event_thresholds(&p, 1.0, 1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn thresholds_monotone() {
        let mut prev_lo = f64::NEG_INFINITY;
        let mut prev_hi = f64::NEG_INFINITY;
        let mut t = 1.01f64;
        while t < 1e6 {
            let (lo, hi) = thresholds(t, 1.0 / 3.0, 7.0).unwrap();
            if t > core::f64::consts::E {
                assert!(lo > prev_lo, "low not increasing at T={t}");
                prev_lo = lo;
            }
            assert!(hi > prev_hi, "high not increasing at T={t}");
            prev_hi = hi;
            t *= 1.05;
        }
    }

    #[test]
    fn predicate_semantics() {
        let below = EventPredicate::new(EventKind::RadiusBelow, 1.0).unwrap();
        assert!(below.fires(0.5) && !below.fires(1.0));
        let above = EventPredicate::new(EventKind::RadiusAbove, 1.0).unwrap();
        assert!(above.fires(1.5) && !above.fires(1.0));
        assert!(EventPredicate::new(EventKind::RadiusAbove, -1.0).is_err());
    }

    #[test]
    fn stream_determinism() {
        let s = SeedSpec::new(42, 3);
        let a: Vec<u64> = {
            let mut r = s.rng();
            (0..1000).map(|_| r.next_u64()).collect()
        };
        let b: Vec<u64> = {
            let mut r = s.rng();
            (0..1000).map(|_| r.next_u64()).collect()
        };
        assert_eq!(a, b);
        for other in [SeedSpec::new(42, 4), SeedSpec::new(43, 3), s.child(0), s.child(1)] {
            let mut r = other.rng();
            let c: Vec<u64> = (0..1000).map(|_| r.next_u64()).collect();
            assert_ne!(a, c);
        }
        assert_ne!(s.child(0), SeedSpec::new(42, 4).child(0));
    }
}
