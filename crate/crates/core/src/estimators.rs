//! Estimators of the partition function and of penalized-measure averages.
//!
//! Three routes to `Z_T` are kept independent so they can check one another:
//! plain prior Monte Carlo, importance sampling from the drifted measure, and
//! thermodynamic integration over `β` using the Metropolis sampler.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec::Vec;


use crate::error::{Error, Result};
use crate::exec::{Executor, Serial};
use crate::functionals::{self, PathFunctionals};
use crate::mcmc::{run_chain, ChainStats, McmcConfig};
use crate::model::{ModelParams, SeedSpec};
use crate::path::sample_path;
use crate::stats::{self, exp_mean};
use crate::theory::TheoremWindow;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Naive,
    Girsanov,
    Thermo,
    Mcmc,
    Reweighted,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Naive => "naive",
            Method::Girsanov => "girsanov",
            Method::Thermo => "thermo",
            Method::Mcmc => "mcmc",
            Method::Reweighted => "reweighted",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EstimateFlags {
    /// Importance weights collapsed below 1% effective sample size.
    pub unreliable: bool,
    /// Underlying series or weights carried no variation.
    pub degenerate: bool,
    /// Some pair distance was clamped.
    pub clamped: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
    pub n_effective: f64,
    pub method: Method,
    /// `value` and `std_error` refer to the logarithm of the estimand.
    pub log_domain: bool,
    pub flags: EstimateFlags,
    /// Kish effective sample size of importance weights, where they exist.
    pub weight_ess: Option<f64>,
}

impl Estimate {
    pub(crate) fn plain(value: f64, std_error: f64, n_effective: f64, method: Method) -> Self {
        Self { value, std_error, n_effective, method, log_domain: false, flags: EstimateFlags::default(), weight_ess: None }
    }

    /// Estimate of `log Z` (delta method when stored linearly).
    pub fn log_value(&self) -> (f64, f64) {
        if self.log_domain {
            (self.value, self.std_error)
        } else {
            (self.value.ln(), self.std_error / self.value)
        }
    }
}

/// Linear scale below which `Z` estimates are reported as logarithms.
const LOG_SWITCH: f64 = -700.0;

fn from_log_weights(log_w: &[f64], method: Method, clamped: bool) -> Estimate {
    let e = exp_mean(log_w);
    let m = log_w.len() as f64;
    let flags = EstimateFlags {
        unreliable: e.weight_ess < 0.01 * m,
        degenerate: false,
        clamped,
    };
    let n_effective = match method {
        Method::Naive => m,
        _ => e.weight_ess,
    };
    if e.log_scale > LOG_SWITCH {
        let scale = e.log_scale.exp();
        Estimate {
            value: scale * e.scaled_mean,
            std_error: scale * e.scaled_se,
            n_effective,
            method,
            log_domain: false,
            flags,
            weight_ess: Some(e.weight_ess),
        }
    } else {
        Estimate {
            value: e.log_value(),
            std_error: e.scaled_se / e.scaled_mean,
            n_effective,
            method,
            log_domain: true,
            flags,
            weight_ess: Some(e.weight_ess),
        }
    }
}

/// Functionals of `m` independent paths drawn under `params` (including its
/// drift), replicate `r` on stream `seed.child(r)`.
pub fn sample_functionals<E: Executor>(
    params: &ModelParams,
    m: usize,
    seed: &SeedSpec,
    exec: &E,
) -> Result<Vec<PathFunctionals>> {
    params.validate()?;
    exec.map(m, |r| {
        let p = sample_path(params, &seed.child(r as u64))?;
        functionals::path_functionals_with(&p, &Serial)
    })
    .into_iter()
    .collect()
}

/// `Ẑ = (1/m) Σ exp(−β·C_r)` over prior paths.
pub fn z_naive<E: Executor>(params: &ModelParams, m: usize, seed: &SeedSpec, exec: &E) -> Result<Estimate> {
    if params.drift_mu != 0.0 {
        return Err(Error::Parameter("z_naive samples the undrifted measure; set drift_mu = 0"));
    }
    if m < 100 {
        return Err(Error::Parameter("need m >= 100 samples"));
    }
    let f = sample_functionals(params, m, seed, exec)?;
    Ok(z_naive_from(params.beta, &f))
}

/// Naive estimate from precomputed prior functionals; lets several `β`
/// share one set of paths.
pub fn z_naive_from(beta: f64, prior: &[PathFunctionals]) -> Estimate {
    let log_w: Vec<f64> = prior.iter().map(|f| -beta * f.coulomb).collect();
    from_log_weights(&log_w, Method::Naive, prior.iter().any(|f| f.clamped > 0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GirsanovEstimate {
    pub estimate: Estimate,
    /// Mean of the per-path log-weight `−βC − μx₁ + μ²T/2` and its standard
    /// error; by concavity of `log` it sits below `log Ẑ` up to noise.
    pub mean_log_weight: f64,
    pub mean_log_weight_se: f64,
}

/// Importance sampling from paths with drift `μe₁`, weighted by
/// `exp(−βC)·dP/dP̃ = exp(−βC − μx₁ + μ²T/2)`.
pub fn z_girsanov<E: Executor>(
    params: &ModelParams,
    mu: f64,
    m: usize,
    seed: &SeedSpec,
    exec: &E,
) -> Result<GirsanovEstimate> {
    if m < 100 {
        return Err(Error::Parameter("need m >= 100 samples"));
    }
    if !mu.is_finite() {
        return Err(Error::Parameter("drift must be finite"));
    }
    let drifted = params.with_drift(mu);
    let f = sample_functionals(&drifted, m, seed, exec)?;
    Ok(z_girsanov_from(params.beta, mu, params.horizon, &f))
}

pub fn z_girsanov_from(beta: f64, mu: f64, horizon: f64, drifted: &[PathFunctionals]) -> GirsanovEstimate {
    let log_w: Vec<f64> = drifted
        .iter()
        .map(|f| {
            let mut l = -beta * f.coulomb;
            if mu != 0.0 {
                l += -mu * f.endpoint_x1 + 0.5 * mu * mu * horizon;
            }
            l
        })
        .collect();
    let (mean_log_weight, mean_log_weight_se) = stats::mean_se(&log_w);
    GirsanovEstimate {
        estimate: from_log_weights(&log_w, Method::Girsanov, drifted.iter().any(|f| f.clamped > 0)),
        mean_log_weight,
        mean_log_weight_se,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThermoNode {
    pub beta: f64,
    /// Penalized mean energy at this `β`.
    pub mean_coulomb: Estimate,
    pub stats: ChainStats,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThermoEstimate {
    /// `log Z` at the last grid point.
    pub estimate: Estimate,
    /// Trapezoid error bound `Σ h³/12·|f''|` from second differences.
    pub trapezoid_bias_bound: f64,
    pub nodes: Vec<ThermoNode>,
}

/// `log Z_β = −∫₀^β E_{Q_b}[C] db` by the trapezoid rule over per-node chains.
/// Node `k` runs on stream `cfg.seed.child(k)`.
pub fn z_thermo<E: Executor>(
    params: &ModelParams,
    beta_grid: &[f64],
    cfg: &McmcConfig,
    exec: &E,
) -> Result<ThermoEstimate> {
    if beta_grid.first() != Some(&0.0) {
        return Err(Error::Parameter("beta grid must start at 0"));
    }
    if beta_grid.windows(2).any(|w| !(w[1] > w[0])) || beta_grid.iter().any(|b| !b.is_finite()) {
        return Err(Error::Parameter("beta grid must be finite and strictly increasing"));
    }
    if beta_grid.len() == 1 {
        return Ok(ThermoEstimate {
            estimate: Estimate { log_domain: true, ..Estimate::plain(0.0, 0.0, 0.0, Method::Thermo) },
            trapezoid_bias_bound: 0.0,
            nodes: Vec::new(),
        });
    }
    let nodes: Vec<ThermoNode> = exec
        .map(beta_grid.len(), |k| {
            let p = params.with_beta(beta_grid[k]);
            let c = McmcConfig { seed: cfg.seed.child(k as u64), ..cfg.clone() };
            let out = run_chain(&p, &c, &Serial)?;
            let mean = out.mean_estimate(|f| f.coulomb);
            Ok(ThermoNode { beta: beta_grid[k], mean_coulomb: mean, stats: out.stats })
        })
        .into_iter()
        .collect::<Result<_>>()?;

    let mut log_z = 0.0;
    let mut var = 0.0;
    let mut weights = alloc::vec![0.0; nodes.len()];
    for k in 0..nodes.len() - 1 {
        let h = nodes[k + 1].beta - nodes[k].beta;
        log_z -= 0.5 * h * (nodes[k].mean_coulomb.value + nodes[k + 1].mean_coulomb.value);
        weights[k] += 0.5 * h;
        weights[k + 1] += 0.5 * h;
    }
    for (w, node) in weights.iter().zip(&nodes) {
        var += w * w * node.mean_coulomb.std_error * node.mean_coulomb.std_error;
    }
    let mut bias = 0.0;
    for k in 1..nodes.len() - 1 {
        let (b0, b1, b2) = (nodes[k - 1].beta, nodes[k].beta, nodes[k + 1].beta);
        let (f0, f1, f2) = (nodes[k - 1].mean_coulomb.value, nodes[k].mean_coulomb.value, nodes[k + 1].mean_coulomb.value);
        let second = 2.0 * ((f2 - f1) / (b2 - b1) - (f1 - f0) / (b1 - b0)) / (b2 - b0);
        let h = 0.5 * ((b1 - b0) + (b2 - b1));
        bias += h * h * h / 12.0 * second.abs();
    }
    let n_eff = nodes.iter().map(|n| n.mean_coulomb.n_effective).fold(f64::INFINITY, f64::min);
    Ok(ThermoEstimate {
        estimate: Estimate {
            value: log_z,
            std_error: var.sqrt(),
            n_effective: n_eff,
            method: Method::Thermo,
            log_domain: true,
            flags: EstimateFlags::default(),
            weight_ess: None,
        },
        trapezoid_bias_bound: bias,
        nodes,
    })
}

/// Geometric grid `0, β·r^{k−1}, …, β` with `k` positive nodes, finest near 0.
pub fn default_beta_grid(beta: f64, k: usize, ratio: f64) -> Vec<f64> {
    let mut g = alloc::vec![0.0];
    if k == 0 || !(beta > 0.0) {
        return g;
    }
    for i in (0..k).rev() {
        g.push(beta * ratio.powi(-(i as i32)));
    }
    g
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadiusEstimate {
    pub mean_radius: Estimate,
    pub mean_radius_sq: Estimate,
    pub fraction_in_window: Option<f64>,
    pub stats: ChainStats,
}

/// `E_Q[R̂]` from one chain, plus the share of retained states inside `window`.
pub fn q_mean_radius<E: Executor>(
    params: &ModelParams,
    cfg: &McmcConfig,
    window: Option<&TheoremWindow>,
    exec: &E,
) -> Result<RadiusEstimate> {
    let out = run_chain(params, cfg, exec)?;
    let fraction_in_window = window.map(|w| {
        out.samples.iter().filter(|f| w.contains(f.rg)).count() as f64 / out.samples.len() as f64
    });
    Ok(RadiusEstimate {
        mean_radius: out.mean_estimate(|f| f.rg),
        mean_radius_sq: out.mean_estimate(|f| f.rg * f.rg),
        fraction_in_window,
        stats: out.stats,
    })
}

/// `P(max_i |x₁(t_i)| > λ√T)` under the prior.
pub fn tail_probability<E: Executor>(
    params: &ModelParams,
    lambda: f64,
    m: usize,
    seed: &SeedSpec,
    exec: &E,
) -> Result<Estimate> {
    let max_abs = max_abs_first_coordinate(params, m, seed, exec)?;
    Ok(tail_from(&max_abs, lambda * params.horizon.sqrt()))
}

/// Running maximum of `|x₁|` for `m` prior paths.
pub fn max_abs_first_coordinate<E: Executor>(
    params: &ModelParams,
    m: usize,
    seed: &SeedSpec,
    exec: &E,
) -> Result<Vec<f64>> {
    if params.drift_mu != 0.0 {
        return Err(Error::Parameter("tail check samples the undrifted measure"));
    }
    exec.map(m, |r| {
        let p = sample_path(params, &seed.child(r as u64))?;
        Ok(p.positions().iter().map(|q| q[0].abs()).fold(0.0, f64::max))
    })
    .into_iter()
    .collect()
}

pub fn tail_from(max_abs: &[f64], level: f64) -> Estimate {
    let hits: Vec<f64> = max_abs.iter().map(|x| (*x > level) as u8 as f64).collect();
    let (p, se) = stats::mean_se(&hits);
    Estimate::plain(p, se, hits.len() as f64, Method::Naive)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::theory::small_beta_z;

    fn params(beta: f64, t: f64, n: usize) -> ModelParams {
        ModelParams::new(beta, t, n, 0.0).unwrap()
    }

    #[test]
    fn naive_at_zero_beta_is_exact() {
        let e = z_naive(&params(0.0, 1.0, 32), 200, &SeedSpec::new(1, 0), &Serial).unwrap();
        assert_eq!(e.value, 1.0);
        assert_eq!(e.std_error, 0.0);
        assert_eq!(e.n_effective, 200.0);
        assert!(!e.log_domain);
        assert!(z_naive(&params(0.0, 1.0, 32).with_drift(1.0), 200, &SeedSpec::new(1, 0), &Serial).is_err());
        assert!(z_naive(&params(0.0, 1.0, 32), 50, &SeedSpec::new(1, 0), &Serial).is_err());
    }

    #[test]
    fn girsanov_without_drift_is_naive() {
        let p = params(0.3, 1.0, 32);
        let seed = SeedSpec::new(2, 0);
        let a = z_naive(&p, 300, &seed, &Serial).unwrap();
        let b = z_girsanov(&p, 0.0, 300, &seed, &Serial).unwrap().estimate;
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert_eq!(a.std_error.to_bits(), b.std_error.to_bits());
    }

    #[test]
    fn girsanov_normalization_at_zero_beta() {
        for mu in [0.5, 1.0, 2.0] {
            let g = z_girsanov(&params(0.0, 1.0, 16), mu, 20_000, &SeedSpec::new(3, 0), &Serial).unwrap();
            let e = g.estimate;
            assert!((e.value - 1.0).abs() <= 3.0 * e.std_error, "mu={mu}: {} ± {}", e.value, e.std_error);
        }
    }

    #[test]
    fn naive_monotone_in_beta_with_shared_paths() {
        let f = sample_functionals(&params(0.0, 1.0, 32), 2000, &SeedSpec::new(4, 0), &Serial).unwrap();
        let a = z_naive_from(0.05, &f);
        let b = z_naive_from(0.5, &f);
        assert!(a.value - b.value > 3.0 * (a.std_error.hypot(b.std_error)));
    }

    #[test]
    fn small_beta_naive_and_girsanov() {
        let p = params(0.01, 1.0, 64);
        let oracle = small_beta_z(1.0, 0.01).unwrap();
        let a = z_naive(&p, 5000, &SeedSpec::new(5, 0), &Serial).unwrap();
        let g = z_girsanov(&p, 1.0, 5000, &SeedSpec::new(6, 0), &Serial).unwrap();
        let b = g.estimate;
        assert!((a.value - b.value).abs() <= 3.0 * a.std_error.hypot(b.std_error));
        // At n = 64 the grid energy is ~11% low, worth ~0.25% of Z here.
        assert!((a.value - oracle).abs() <= (3.0 * a.std_error).max(0.005));
        // Jensen: log Ẑ ≥ mean log-weight, up to noise.
        let (lz, lz_se) = b.log_value();
        assert!(lz >= g.mean_log_weight - 3.0 * lz_se.hypot(g.mean_log_weight_se));
    }

    #[test]
    fn thermo_grid_checks() {
        let p = params(0.0, 1.0, 16);
        let c = McmcConfig { n_sweeps: 400, burn_in: 100, ..McmcConfig::default() };
        let single = z_thermo(&p, &[0.0], &c, &Serial).unwrap();
        assert_eq!(single.estimate.value, 0.0);
        assert!(single.estimate.log_domain);
        assert!(z_thermo(&p, &[0.1, 0.2], &c, &Serial).is_err());
        assert!(z_thermo(&p, &[0.0, 0.2, 0.1], &c, &Serial).is_err());
    }

    #[test]
    fn thermo_small_beta() {
        let p = params(0.0, 1.0, 32);
        let c = McmcConfig { n_sweeps: 20_000, burn_in: 1000, seed: SeedSpec::new(7, 0), ..McmcConfig::default() };
        let t = z_thermo(&p, &[0.0, 0.05, 0.1], &c, &Serial).unwrap();
        let f = sample_functionals(&p, 4000, &SeedSpec::new(8, 0), &Serial).unwrap();
        let naive = z_naive_from(0.1, &f);
        let (ln, ln_se) = naive.log_value();
        let e = t.estimate;
        assert!((e.value - ln).abs() <= 3.0 * e.std_error.hypot(ln_se), "{} ± {} vs {ln} ± {ln_se}", e.value, e.std_error);
        assert!(t.trapezoid_bias_bound >= 0.0);
        assert_eq!(t.nodes.len(), 3);
    }

    #[test]
    fn beta_grid_shape() {
        let g = default_beta_grid(0.01, 3, 2.0);
        assert_eq!(g, [0.0, 0.0025, 0.005, 0.01]);
        assert_eq!(default_beta_grid(0.0, 3, 2.0), [0.0]);
    }

    #[test]
    fn radius_at_zero_beta_and_window_extremes() {
        let p = params(0.0, 1.0, 32);
        let c = McmcConfig { n_sweeps: 6000, burn_in: 500, seed: SeedSpec::new(9, 0), ..McmcConfig::default() };
        let all = TheoremWindow { horizon: 1.0, beta: 1.0, c1: 1.0, c2: 1.0, low: 0.0, high: f64::INFINITY, valid: false };
        let r = q_mean_radius(&p, &c, Some(&all), &Serial).unwrap();
        assert_eq!(r.fraction_in_window, Some(1.0));
        let e = r.mean_radius_sq;
        assert!((e.value - 34.0 / 33.0).abs() <= 3.0 * e.std_error, "{} ± {}", e.value, e.std_error);
    }

    #[test]
    fn tail_under_reflection_bound() {
        let p = params(0.0, 1.0, 128);
        let xs = max_abs_first_coordinate(&p, 5000, &SeedSpec::new(10, 0), &Serial).unwrap();
        for lambda in [1.0, 2.0] {
            let e = tail_from(&xs, lambda);
            assert!(e.value <= 4.0 * stats::normal_tail(lambda) + 3.0 * e.std_error);
        }
    }
}
