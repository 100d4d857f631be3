//! Closed-form kernel, integrals and bounds for the penalized path measure.
//!
//! Every bound takes its constants as arguments. [`DEFAULT_C1`] and
//! [`default_c2`] give the customary choices `c₁ = 1/3`, `c₂ = 7√β`.
//! Bounds that are tiny for moderate `T` also come in a `log_` form.

#[allow(unused_imports)]
use num_traits::Float;
use core::f64::consts::{E, PI};

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::estimators::{Estimate, Method};
use crate::model::{thresholds, SeedSpec};
use crate::quadrature::integrate;
use crate::stats::mean_se;

pub const DEFAULT_C1: f64 = 1.0 / 3.0;

pub fn default_c2(beta: f64) -> f64 {
    7.0 * beta.sqrt()
}

/// `(8/3)√(2/π)`: prior mean energy is this times `T^{3/2}`.
pub fn prior_coulomb_coefficient() -> f64 {
    8.0 / 3.0 * (2.0 / PI).sqrt()
}

const E2: f64 = E * E;

fn need_positive(u: f64) -> Result<()> {
    if !(u > 0.0) || !u.is_finite() {
        return Err(Error::Domain("argument must be finite and > 0"));
    }
    Ok(())
}

/// `E[1/|B_u + u e₁|] = erf(√(u/2)) / u`.
pub fn phi(u: f64) -> Result<f64> {
    need_positive(u)?;
    Ok(libm::erf((0.5 * u).sqrt()) / u)
}

/// `min(√(2/(πu)), 1/u)`; the branches cross at `u = π/2`.
pub fn phi_bound(u: f64) -> Result<f64> {
    need_positive(u)?;
    Ok((2.0 / (PI * u)).sqrt().min(1.0 / u))
}

/// Plain Monte Carlo mean of `1/|G|` with `G ~ N(u e₁, u I₃)`.
pub fn phi_monte_carlo(u: f64, m: usize, seed: &SeedSpec) -> Result<Estimate> {
    need_positive(u)?;
    if m < 100 {
        return Err(Error::Parameter("phi_monte_carlo needs m >= 100"));
    }
    let mut rng = seed.rng();
    let sd = u.sqrt();
    let xs: alloc::vec::Vec<f64> = (0..m)
        .map(|_| {
            let g: [f64; 3] = [rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal)];
            let x = u + sd * g[0];
            let y = sd * g[1];
            let z = sd * g[2];
            1.0 / (x * x + y * y + z * z).sqrt()
        })
        .collect();
    let (value, std_error) = mean_se(&xs);
    Ok(Estimate::plain(value, std_error, m as f64, Method::Naive))
}

/// `I₁(T)` by quadrature next to the looser forms used when bounding it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct I1Audit {
    pub horizon: f64,
    /// `2∫₀^T (T−u) φ(u) du`, the exact value of `∫∫_{[0,T]²} φ(|t−s|)`.
    pub exact: f64,
    pub exact_error: f64,
    /// `T∫₀^T φ(u) du`, the single-sided form of the change of variables.
    pub paper_style: f64,
    /// `2T√(2/π) + T ln T`, the bound on `paper_style` from `phi_bound`.
    pub paper_chain: f64,
    /// `2·paper_chain`, which also bounds `exact`.
    pub audited_chain: f64,
}

/// `u = v²` removes the `u^{-1/2}` endpoint singularity: `φ(v²)·2v` is smooth.
fn phi_dv(v: f64) -> f64 {
    if v == 0.0 {
        // lim_{v→0} 2·erf(v/√2)/v
        return 2.0 * (2.0 / PI).sqrt();
    }
    2.0 * libm::erf(v / core::f64::consts::SQRT_2) / v
}

pub fn i1_exact(horizon: f64) -> Result<I1Audit> {
    need_positive(horizon)?;
    let root = horizon.sqrt();
    let exact = integrate(|v| 2.0 * (horizon - v * v) * phi_dv(v), 0.0, root, 1e-10, 1e-8)?;
    let single = integrate(phi_dv, 0.0, root, 1e-10, 1e-8)?;
    let paper_chain = 2.0 * horizon * (2.0 / PI).sqrt() + horizon * horizon.ln();
    Ok(I1Audit {
        horizon,
        exact: exact.value,
        exact_error: exact.error,
        paper_style: horizon * single.value,
        paper_chain,
        audited_chain: 2.0 * paper_chain,
    })
}

/// `2T ln T`, valid for `T > e²`.
pub fn i1_paper_bound(horizon: f64) -> Result<f64> {
    above_e2(horizon)?;
    Ok(2.0 * horizon * horizon.ln())
}

fn above_e2(t: f64) -> Result<()> {
    // The closed endpoint is admitted so that T = e² itself evaluates.
    if !(t >= E2 * (1.0 - 1e-15)) || !t.is_finite() {
        return Err(Error::Domain("bound requires T > e²"));
    }
    Ok(())
}

fn positive(x: f64, what: &'static str) -> Result<()> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Parameter(what));
    }
    Ok(())
}

pub fn log_bound_p_less(horizon: f64, beta: f64, c1: f64) -> Result<f64> {
    if !(horizon > 1.0) {
        return Err(Error::Domain("bound requires T > 1"));
    }
    positive(beta, "beta must be > 0")?;
    positive(c1, "c1 must be > 0")?;
    Ok(-beta * horizon * horizon.ln() / c1)
}

/// `exp(−βT ln T / c₁)`, the Hölder bound on `E[ℰ_T; R_T < c₁T/ln T]`.
pub fn bound_p_less(horizon: f64, beta: f64, c1: f64) -> Result<f64> {
    log_bound_p_less(horizon, beta, c1).map(f64::exp)
}

pub fn log_bound_p_greater(horizon: f64, c2: f64) -> Result<f64> {
    if !(horizon > E) {
        return Err(Error::Domain("bound requires T > e"));
    }
    positive(c2, "c2 must be > 0")?;
    Ok((24.0 / c2).ln() - c2 * c2 * horizon * horizon.ln() / 24.0)
}

/// `(24/c₂)·exp(−c₂² T ln T / 24)`, the reflection-principle tail bound.
pub fn bound_p_greater(horizon: f64, c2: f64) -> Result<f64> {
    log_bound_p_greater(horizon, c2).map(f64::exp)
}

pub fn log_bound_z_lower(horizon: f64, beta: f64) -> Result<f64> {
    above_e2(horizon)?;
    positive(beta, "beta must be > 0")?;
    Ok(-2.0 * beta * horizon * horizon.ln() - 0.5 * horizon)
}

/// `exp(−2βT ln T − T/2)`.
pub fn bound_z_lower(horizon: f64, beta: f64) -> Result<f64> {
    log_bound_z_lower(horizon, beta).map(f64::exp)
}

/// Lower bound rebuilt from the exact two-sided `I₁` identity:
/// `exp(−4βT ln T − T/2)`.
pub fn log_bound_z_lower_audited(horizon: f64, beta: f64) -> Result<f64> {
    above_e2(horizon)?;
    positive(beta, "beta must be > 0")?;
    Ok(-4.0 * beta * horizon * horizon.ln() - 0.5 * horizon)
}

pub fn bound_z_lower_audited(horizon: f64, beta: f64) -> Result<f64> {
    log_bound_z_lower_audited(horizon, beta).map(f64::exp)
}

/// Jensen bound before `I₁` is estimated: `−β·I₁ − T/2`.
pub fn log_z_jensen(horizon: f64, beta: f64) -> Result<f64> {
    Ok(-beta * i1_exact(horizon)?.exact - 0.5 * horizon)
}

pub fn log_bound_q_less(horizon: f64, beta: f64, c1: f64) -> Result<f64> {
    above_e2(horizon)?;
    positive(beta, "beta must be > 0")?;
    positive(c1, "c1 must be > 0")?;
    Ok((2.0 - 1.0 / c1) * beta * horizon * horizon.ln())
}

/// `exp((2 − 1/c₁) βT ln T)`, as displayed for `Q_T(A^(<))`.
pub fn bound_q_less(horizon: f64, beta: f64, c1: f64) -> Result<f64> {
    log_bound_q_less(horizon, beta, c1).map(f64::exp)
}

pub fn log_bound_q_greater(horizon: f64, beta: f64, c2: f64) -> Result<f64> {
    above_e2(horizon)?;
    positive(beta, "beta must be > 0")?;
    positive(c2, "c2 must be > 0")?;
    let tl = horizon * horizon.ln();
    Ok((24.0 / c2).ln() + 2.0 * beta * tl + 0.5 * horizon - c2 * c2 * tl / 24.0)
}

/// `(24/c₂)·exp(2βT ln T + T/2 − c₂² T ln T / 24)`.
pub fn bound_q_greater(horizon: f64, beta: f64, c2: f64) -> Result<f64> {
    log_bound_q_greater(horizon, beta, c2).map(f64::exp)
}

/// First-order expansion `Z ≈ 1 − β(8/3)√(2/π) T^{3/2}`.
pub fn small_beta_z(horizon: f64, beta: f64) -> Result<f64> {
    need_positive(horizon)?;
    if !(beta >= 0.0) {
        return Err(Error::Parameter("beta must be >= 0"));
    }
    Ok(1.0 - beta * prior_coulomb_coefficient() * horizon.powf(1.5))
}

/// Exact prior mean of the grid energy, `2Δ² Σ_k (n+1−k) √(2/(πkΔ))`.
///
/// It sits below the continuum value because the near-diagonal mass is
/// omitted; the gap shrinks like `√Δ`.
pub fn discrete_prior_coulomb_mean(horizon: f64, n_steps: usize) -> Result<f64> {
    need_positive(horizon)?;
    if n_steps < 2 {
        return Err(Error::Parameter("n_steps must be >= 2"));
    }
    let dt = horizon / n_steps as f64;
    let c = (2.0 / PI).sqrt();
    let s: f64 = (1..=n_steps)
        .map(|k| (n_steps + 1 - k) as f64 * c / (k as f64 * dt).sqrt())
        .sum();
    Ok(2.0 * dt * dt * s)
}

/// The radius window `[c₁T/ln T, c₂T√ln T]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoremWindow {
    pub horizon: f64,
    pub beta: f64,
    pub c1: f64,
    pub c2: f64,
    pub low: f64,
    pub high: f64,
    /// `T > e²`, where the supporting estimates apply.
    pub valid: bool,
}

impl TheoremWindow {
    pub fn contains(&self, radius: f64) -> bool {
        self.low <= radius && radius <= self.high
    }
}

pub fn window(horizon: f64, beta: f64, c1: f64, c2: f64) -> Result<TheoremWindow> {
    positive(beta, "beta must be > 0")?;
    let (low, high) = thresholds(horizon, c1, c2)?;
    Ok(TheoremWindow { horizon, beta, c1, c2, low, high, valid: horizon > E2 })
}

/// Window with `c₁ = 1/3`, `c₂ = 7√β`.
pub fn default_window(horizon: f64, beta: f64) -> Result<TheoremWindow> {
    window(horizon, beta, DEFAULT_C1, default_c2(beta))
}
