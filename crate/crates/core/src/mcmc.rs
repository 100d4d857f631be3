//! Metropolis sampling of the penalized path measure.
//!
//! Every proposal preserves the Wiener measure, so a move with energy change
//! `δ` is accepted with probability `min(1, exp(−βδ))` and no proposal
//! densities enter. One sweep is one proposal.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::functionals::{self, radius_of_points, PathFunctionals};
use crate::kernel::Points;
use crate::model::{EventPredicate, ModelParams, SeedSpec};
use crate::path::{self, PathSample, Rotation};
use crate::stats::{self, Autocorrelation};
use crate::estimators::{Estimate, EstimateFlags, Method};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MoveKind {
    Pivot,
    GlobalAutoregressive,
    Block,
}

impl MoveKind {
    pub const ALL: [MoveKind; 3] = [MoveKind::Pivot, MoveKind::GlobalAutoregressive, MoveKind::Block];

    pub fn name(self) -> &'static str {
        match self {
            MoveKind::Pivot => "pivot",
            MoveKind::GlobalAutoregressive => "global_ar",
            MoveKind::Block => "block",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct McmcConfig {
    /// Selection probabilities for pivot, global autoregressive and block moves.
    pub move_weights: [f64; 3],
    pub ar_step_s: f64,
    pub block_len: usize,
    pub n_sweeps: usize,
    pub burn_in: usize,
    pub thinning: usize,
    pub seed: SeedSpec,
    /// Tune `ar_step_s` toward 30% acceptance during burn-in.
    pub adapt: bool,
    /// Keep every k-th retained state as a full path.
    pub retain_paths_every: Option<usize>,
}

impl Default for McmcConfig {
    fn default() -> Self {
        Self {
            move_weights: [0.4, 0.4, 0.2],
            ar_step_s: 0.2,
            block_len: 8,
            n_sweeps: 10_000,
            burn_in: 1_000,
            thinning: 1,
            seed: SeedSpec::new(0, 0),
            adapt: true,
            retain_paths_every: None,
        }
    }
}

impl McmcConfig {
    pub fn validate(&self) -> Result<()> {
        if self.move_weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::Parameter("move weights must be finite and >= 0"));
        }
        if (self.move_weights.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::Parameter("move weights must sum to 1"));
        }
        if !(self.ar_step_s > 0.0 && self.ar_step_s <= 1.0) {
            return Err(Error::Parameter("ar_step_s must lie in (0, 1]"));
        }
        if self.block_len == 0 {
            return Err(Error::Parameter("block_len must be >= 1"));
        }
        if self.thinning == 0 {
            return Err(Error::Parameter("thinning must be >= 1"));
        }
        if self.burn_in >= self.n_sweeps {
            return Err(Error::Parameter("burn_in must be smaller than n_sweeps"));
        }
        if self.retain_paths_every == Some(0) {
            return Err(Error::Parameter("retain_paths_every must be >= 1"));
        }
        Ok(())
    }

    pub fn retained_count(&self) -> usize {
        (self.n_sweeps - self.burn_in) / self.thinning
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MoveCounts {
    pub proposed: u64,
    pub accepted: u64,
}

impl MoveCounts {
    pub fn rate(&self) -> f64 {
        if self.proposed == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainStats {
    /// Post-burn-in proposal counts, indexed like [`MoveKind::ALL`].
    pub moves: [MoveCounts; 3],
    /// Autocorrelation of the retained radius series, in sweeps.
    pub iact: f64,
    pub ess: f64,
    pub degenerate_series: bool,
    /// Pair distances clamped across all energy evaluations.
    pub clamp_events: u64,
    /// Step size in force after burn-in.
    pub ar_step_s: f64,
}

impl ChainStats {
    pub fn acceptance(&self, kind: MoveKind) -> f64 {
        self.moves[kind.index()].rate()
    }
}

#[derive(Debug, Clone)]
pub struct ChainOutput {
    pub samples: Vec<PathFunctionals>,
    pub stats: ChainStats,
    pub final_path: PathSample,
    pub paths: Vec<PathSample>,
}

impl ChainOutput {
    pub fn series(&self, f: impl Fn(&PathFunctionals) -> f64) -> Vec<f64> {
        self.samples.iter().map(f).collect()
    }

    /// Mean of a retained functional with an autocorrelation-corrected
    /// standard error.
    pub fn mean_estimate(&self, f: impl Fn(&PathFunctionals) -> f64) -> Estimate {
        let xs = self.series(f);
        let ac = stats::autocorrelation(&xs);
        let (mean, _) = stats::mean_se(&xs);
        let var = stats::variance(&xs);
        let ess = ac.ess.min(xs.len() as f64);
        Estimate {
            value: mean,
            std_error: (var / ess).sqrt(),
            n_effective: ess,
            method: Method::Mcmc,
            log_domain: false,
            flags: EstimateFlags { degenerate: ac.degenerate, ..EstimateFlags::default() },
            weight_ess: None,
        }
    }
}

/// State after one sweep, as seen by a trace observer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRecord {
    pub sweep: usize,
    pub coulomb: f64,
    pub rg: f64,
    pub endpoint_x1: f64,
    pub kind: MoveKind,
    pub accepted: bool,
}

const AUDIT_EVERY: u64 = 1000;
const AUDIT_TOL: f64 = 1e-6;
const ADAPT_WINDOW: u64 = 50;
const TARGET_ACCEPT: f64 = 0.3;

pub fn run_chain<E: Executor>(params: &ModelParams, cfg: &McmcConfig, exec: &E) -> Result<ChainOutput> {
    run_chain_observed(params, cfg, exec, |_| {})
}

pub fn run_chain_observed<E: Executor, O: FnMut(&SweepRecord)>(
    params: &ModelParams,
    cfg: &McmcConfig,
    exec: &E,
    mut observe: O,
) -> Result<ChainOutput> {
    params.validate()?;
    cfg.validate()?;
    if params.drift_mu != 0.0 {
        return Err(Error::Parameter("the sampler targets the undrifted measure; set drift_mu = 0"));
    }
    let n = params.n_steps;
    let dt = params.dt();
    let beta = params.beta;
    let mut rng = cfg.seed.rng();

    let mut path = path::sample_path_with(params, &mut rng)?;
    let mut pts = Points::from_slice(path.positions());
    let first = functionals::energy_of_points(&pts, dt, exec)?;
    let mut energy = first.value;
    let mut clamp_events = first.clamped;

    let mut s = cfg.ar_step_s;
    let mut adapt_counts = MoveCounts { proposed: 0, accepted: 0 };
    let mut moves = [MoveCounts { proposed: 0, accepted: 0 }; 3];
    let mut accepted_since_audit = 0u64;
    let block_len = cfg.block_len.min(n);

    let mut samples = Vec::with_capacity(cfg.retained_count());
    let mut paths = Vec::new();
    let mut retained = 0usize;

    for sweep in 0..cfg.n_sweeps {
        let kind = pick_move(&cfg.move_weights, rng.random::<f64>());
        let (proposal, new_pts, delta, new_energy) = match kind {
            MoveKind::Pivot => {
                let k = rng.random_range(1..n);
                let rot = Rotation::uniform(&mut rng);
                let prop = path::apply_pivot(&path, k, &rot)?;
                let np = Points::from_slice(prop.positions());
                let d = functionals::pivot_delta_points(&pts, &np, k, dt, exec)?;
                (prop, np, d, None)
            }
            MoveKind::GlobalAutoregressive => {
                let prop = path::apply_global_autoregressive(&path, s, &mut rng, params)?;
                let np = Points::from_slice(prop.positions());
                let e = functionals::energy_of_points(&np, dt, exec)?;
                clamp_events += e.clamped;
                (prop, np, e.value - energy, Some(e.value))
            }
            MoveKind::Block => {
                let i0 = rng.random_range(1..=n - block_len + 1);
                let prop = path::resample_block(&path, i0, block_len, &mut rng, params)?;
                let np = Points::from_slice(prop.positions());
                let d = functionals::block_delta_points(&pts, &np, i0, block_len, dt, exec)?;
                (prop, np, d, None)
            }
        };
        let log_ratio = -beta * delta;
        let u: f64 = rng.random();
        let accept = log_ratio >= 0.0 || u < log_ratio.exp();

        let burning = sweep < cfg.burn_in;
        if !burning {
            moves[kind.index()].proposed += 1;
            moves[kind.index()].accepted += accept as u64;
        }
        if accept {
            path = proposal;
            pts = new_pts;
            energy = new_energy.unwrap_or(energy + delta);
            accepted_since_audit += 1;
            if accepted_since_audit == AUDIT_EVERY {
                accepted_since_audit = 0;
                let full = functionals::energy_of_points(&pts, dt, exec)?;
                if (full.value - energy).abs() > AUDIT_TOL * full.value.abs() {
                    return Err(Error::Consistency { tracked: energy, recomputed: full.value });
                }
                energy = full.value;
            }
        }

        if burning && cfg.adapt && kind == MoveKind::GlobalAutoregressive {
            adapt_counts.proposed += 1;
            adapt_counts.accepted += accept as u64;
            if adapt_counts.proposed == ADAPT_WINDOW {
                let rate = adapt_counts.rate();
                s = (s * (rate - TARGET_ACCEPT).exp()).clamp(1e-4, 1.0);
                adapt_counts = MoveCounts { proposed: 0, accepted: 0 };
            }
        }

        let rg = radius_of_points(path.positions());
        let state = PathFunctionals { coulomb: energy, rg, endpoint_x1: path.endpoint()[0], clamped: 0 };
        observe(&SweepRecord {
            sweep,
            coulomb: state.coulomb,
            rg,
            endpoint_x1: state.endpoint_x1,
            kind,
            accepted: accept,
        });
        if !burning && (sweep + 1 - cfg.burn_in) % cfg.thinning == 0 {
            if let Some(every) = cfg.retain_paths_every {
                if retained % every == 0 {
                    paths.push(path.clone());
                }
            }
            samples.push(state);
            retained += 1;
        }
    }

    let radius: Vec<f64> = samples.iter().map(|f| f.rg).collect();
    let Autocorrelation { iact, ess, degenerate } = stats::autocorrelation(&radius);
    let ess = ess.min(samples.len() as f64);
    Ok(ChainOutput {
        samples,
        stats: ChainStats { moves, iact, ess, degenerate_series: degenerate, clamp_events, ar_step_s: s },
        final_path: path,
        paths,
    })
}

fn pick_move(weights: &[f64; 3], u: f64) -> MoveKind {
    let mut acc = 0.0;
    for (kind, w) in MoveKind::ALL.iter().zip(weights) {
        acc += w;
        if u < acc {
            return *kind;
        }
    }
    // Round-off in the cumulative sum: fall back to the last weighted move.
    *MoveKind::ALL.iter().zip(weights).rev().find(|(_, w)| **w > 0.0).map(|(k, _)| k).unwrap_or(&MoveKind::Pivot)
}

/// `Q_T(A)` by self-normalized reweighting of prior samples with
/// `w = exp(−β·coulomb)`.
pub fn reweighted_event_prob(prior: &[PathFunctionals], beta: f64, predicate: &EventPredicate) -> Result<Estimate> {
    if !(beta >= 0.0) {
        return Err(Error::Parameter("beta must be >= 0"));
    }
    if prior.is_empty() {
        return Err(Error::Parameter("need at least one prior sample"));
    }
    let log_w: Vec<f64> = prior.iter().map(|f| -beta * f.coulomb).collect();
    let hits: Vec<f64> = prior.iter().map(|f| predicate.fires(f.rg) as u8 as f64).collect();
    let r = stats::weighted_ratio(&log_w, &hits);
    let m = prior.len() as f64;
    Ok(Estimate {
        value: r.value,
        std_error: r.std_error,
        n_effective: r.weight_ess,
        method: Method::Reweighted,
        log_domain: false,
        flags: EstimateFlags { unreliable: r.weight_ess < 0.01 * m, ..EstimateFlags::default() },
        weight_ess: Some(r.weight_ess),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Serial;
    use crate::model::EventKind;

    fn cfg(seed: u64, sweeps: usize, burn: usize) -> McmcConfig {
        McmcConfig { n_sweeps: sweeps, burn_in: burn, seed: SeedSpec::new(seed, 0), ..McmcConfig::default() }
    }

    #[test]
    fn config_validation() {
        assert!(McmcConfig::default().validate().is_ok());
        let bad = [
            McmcConfig { move_weights: [0.5, 0.5, 0.5], ..McmcConfig::default() },
            McmcConfig { move_weights: [-0.1, 0.6, 0.5], ..McmcConfig::default() },
            McmcConfig { ar_step_s: 0.0, ..McmcConfig::default() },
            McmcConfig { block_len: 0, ..McmcConfig::default() },
            McmcConfig { thinning: 0, ..McmcConfig::default() },
            McmcConfig { burn_in: 10_000, ..McmcConfig::default() },
        ];
        for c in bad {
            assert!(c.validate().is_err(), "{c:?}");
        }
        let c = McmcConfig { n_sweeps: 1007, burn_in: 100, thinning: 4, ..McmcConfig::default() };
        assert_eq!(c.retained_count(), 226);
    }

    #[test]
    fn retained_count_and_determinism() {
        let p = ModelParams::new(0.5, 1.0, 16, 0.0).unwrap();
        let c = McmcConfig { thinning: 3, ..cfg(1, 1000, 101) };
        let a = run_chain(&p, &c, &Serial).unwrap();
        assert_eq!(a.samples.len(), (1000 - 101) / 3);
        let b = run_chain(&p, &c, &Serial).unwrap();
        assert_eq!(a.samples, b.samples);
        assert_eq!(a.final_path, b.final_path);
        assert!(run_chain(&p.with_drift(1.0), &c, &Serial).is_err());
    }

    #[test]
    fn zero_beta_accepts_everything() {
        let p = ModelParams::new(0.0, 1.0, 32, 0.0).unwrap();
        let out = run_chain(&p, &cfg(2, 3000, 100), &Serial).unwrap();
        for k in MoveKind::ALL {
            assert_eq!(out.stats.acceptance(k), 1.0);
        }
    }

    #[test]
    fn tracked_energy_matches_final_path() {
        let p = ModelParams::new(2.0, 2.0, 40, 0.0).unwrap();
        let out = run_chain(&p, &cfg(3, 5000, 500), &Serial).unwrap();
        let last = out.samples.last().unwrap().coulomb;
        let full = functionals::coulomb_energy(&out.final_path).unwrap().value;
        assert!((last - full).abs() <= 1e-9 * full);
        assert!(out.stats.iact >= 0.5);
        assert!(out.stats.ess <= out.samples.len() as f64);
    }

    #[test]
    fn observer_sees_every_sweep() {
        let p = ModelParams::new(1.0, 1.0, 8, 0.0).unwrap();
        let mut seen = 0;
        let out = run_chain_observed(&p, &cfg(4, 300, 50), &Serial, |r| {
            assert_eq!(r.sweep, seen);
            seen += 1;
        })
        .unwrap();
        assert_eq!(seen, 300);
        assert_eq!(out.samples.len(), 250);
    }

    #[test]
    fn retains_paths_on_request() {
        let p = ModelParams::new(1.0, 1.0, 8, 0.0).unwrap();
        let c = McmcConfig { retain_paths_every: Some(10), ..cfg(5, 200, 100) };
        let out = run_chain(&p, &c, &Serial).unwrap();
        assert_eq!(out.paths.len(), 10);
    }

    fn prior(n: usize, m: u64) -> Vec<PathFunctionals> {
        let p = ModelParams::new(0.0, 1.0, n, 0.0).unwrap();
        let seed = SeedSpec::new(8, 0);
        (0..m)
            .map(|r| functionals::path_functionals(&path::sample_path(&p, &seed.child(r)).unwrap()).unwrap())
            .collect()
    }

    #[test]
    fn reweighting_trivial_cases() {
        let s = prior(16, 500);
        let above0 = EventPredicate::new(EventKind::RadiusAbove, 0.0).unwrap();
        assert_eq!(reweighted_event_prob(&s, 0.7, &above0).unwrap().value, 1.0);
        let pred = EventPredicate::new(EventKind::RadiusBelow, 0.8).unwrap();
        let freq = s.iter().filter(|f| f.rg < 0.8).count() as f64 / 500.0;
        let est = reweighted_event_prob(&s, 0.0, &pred).unwrap();
        assert!((est.value - freq).abs() < 1e-15);
        assert_eq!(est.weight_ess, Some(500.0));
        assert!(reweighted_event_prob(&s, -1.0, &pred).is_err());
    }

    #[test]
    fn reweighting_flags_weight_collapse() {
        let s = prior(16, 500);
        let pred = EventPredicate::new(EventKind::RadiusAbove, 0.5).unwrap();
        let est = reweighted_event_prob(&s, 500.0, &pred).unwrap();
        assert!(est.flags.unreliable);
    }
}
