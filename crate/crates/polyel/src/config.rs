//! Experiment configuration, read from JSON documents whose keys mirror the
//! field names below.

use std::path::{Path, PathBuf};

use polyel_core::{McmcConfig, SeedSpec};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Scaling,
    KernelCheck,
    BoundCheck,
    ZCompare,
    TailCheck,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Scaling => "scaling",
            ExperimentKind::KernelCheck => "kernel_check",
            ExperimentKind::BoundCheck => "bound_check",
            ExperimentKind::ZCompare => "z_compare",
            ExperimentKind::TailCheck => "tail_check",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// How the step count follows the horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NRule {
    /// `n = round(T / Δ)`, so the step size is the same for every `T`.
    FixedDelta(f64),
    FixedN(usize),
}

impl Default for NRule {
    fn default() -> Self {
        NRule::FixedDelta(1.0 / 32.0)
    }
}

impl NRule {
    pub fn steps(&self, horizon: f64) -> Result<usize> {
        let n = match *self {
            NRule::FixedDelta(d) => {
                if !(d > 0.0 && d.is_finite()) {
                    return Err(Error::Invalid("fixed_delta must be positive".into()));
                }
                (horizon / d).round() as usize
            }
            NRule::FixedN(n) => n,
        };
        if n < 2 {
            return Err(Error::Invalid(format!("step rule gives n = {n} at T = {horizon}; need n >= 2")));
        }
        Ok(n)
    }
}

/// Sampler settings; the seed is assigned per experiment cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McmcSettings {
    pub move_weights: [f64; 3],
    pub ar_step_s: f64,
    pub block_len: usize,
    pub n_sweeps: usize,
    pub burn_in: usize,
    pub thinning: usize,
    pub adapt: bool,
    /// A chain whose radius ESS falls below this is rerun once, with sweeps
    /// scaled by the projected shortfall and capped at `max_rerun_factor`.
    pub min_ess: f64,
    pub max_rerun_factor: usize,
}

impl Default for McmcSettings {
    fn default() -> Self {
        let c = McmcConfig::default();
        McmcSettings {
            move_weights: c.move_weights,
            ar_step_s: c.ar_step_s,
            block_len: c.block_len,
            n_sweeps: c.n_sweeps,
            burn_in: c.burn_in,
            thinning: c.thinning,
            adapt: c.adapt,
            min_ess: 200.0,
            max_rerun_factor: 8,
        }
    }
}

impl McmcSettings {
    /// Sampler config with sweeps and burn-in multiplied by `scale`.
    pub fn to_config(&self, seed: SeedSpec, scale: usize) -> McmcConfig {
        McmcConfig {
            move_weights: self.move_weights,
            ar_step_s: self.ar_step_s,
            block_len: self.block_len,
            n_sweeps: self.n_sweeps * scale,
            burn_in: self.burn_in * scale,
            thinning: self.thinning,
            seed,
            adapt: self.adapt,
            retain_paths_every: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatorSettings {
    /// Drift magnitude of the importance-sampling proposal.
    pub girsanov_mu: f64,
    /// Positive nodes of the geometric thermodynamic-integration grid.
    pub thermo_nodes: usize,
    pub thermo_ratio: f64,
    /// Largest horizon at which bound checks also run Monte Carlo.
    pub mc_max_horizon: f64,
}

impl Default for EstimatorSettings {
    fn default() -> Self {
        EstimatorSettings { girsanov_mu: 1.0, thermo_nodes: 6, thermo_ratio: 2.0, mc_max_horizon: 8.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default)]
    pub t_list: Vec<f64>,
    #[serde(default)]
    pub beta_list: Vec<f64>,
    #[serde(default)]
    pub n_rule: NRule,
    #[serde(default)]
    pub mcmc: McmcSettings,
    #[serde(default)]
    pub estimator: EstimatorSettings,
    /// Independent draws per cell for every i.i.d. estimator.
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub output_format: Format,
    #[serde(default)]
    pub u_grid: Vec<f64>,
    #[serde(default)]
    pub lambda_list: Vec<f64>,
    /// Window constants; `None` selects `c₁ = 1/3` and `c₂ = 7√β`.
    #[serde(default)]
    pub c1: Option<f64>,
    #[serde(default)]
    pub c2: Option<f64>,
}

fn default_replicates() -> usize {
    10_000
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

impl ExperimentConfig {
    /// Config of `kind` with every other field at its default.
    pub fn new(kind: ExperimentKind) -> Self {
        ExperimentConfig {
            kind,
            t_list: Vec::new(),
            beta_list: Vec::new(),
            n_rule: NRule::default(),
            mcmc: McmcSettings::default(),
            estimator: EstimatorSettings::default(),
            replicates: default_replicates(),
            master_seed: 0,
            output_dir: default_output_dir(),
            output_format: Format::Csv,
            u_grid: Vec::new(),
            lambda_list: Vec::new(),
            c1: None,
            c2: None,
        }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&s)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Invalid(format!("{}: {m}", self.kind.name())));
        let needs_t = self.kind != ExperimentKind::KernelCheck;
        let needs_beta = matches!(self.kind, ExperimentKind::Scaling | ExperimentKind::BoundCheck | ExperimentKind::ZCompare);
        if needs_t && self.t_list.is_empty() {
            return bad("t_list must be nonempty");
        }
        if self.t_list.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
            return bad("every T must be positive and finite");
        }
        if needs_beta && self.beta_list.is_empty() {
            return bad("beta_list must be nonempty");
        }
        if self.beta_list.iter().any(|b| !(*b >= 0.0 && b.is_finite())) {
            return bad("every beta must be finite and >= 0");
        }
        if self.replicates < 100 {
            return bad("replicates must be at least 100");
        }
        match self.kind {
            ExperimentKind::Scaling => {
                if self.t_list.windows(2).any(|w| !(w[1] > w[0])) {
                    return bad("t_list must be strictly increasing");
                }
                if !matches!(self.n_rule, NRule::FixedDelta(_)) {
                    return bad("the scaling sweep requires the fixed_delta step rule");
                }
            }
            ExperimentKind::KernelCheck => {
                if self.u_grid.is_empty() || self.u_grid.iter().any(|u| !(*u > 0.0 && u.is_finite())) {
                    return bad("u_grid must be nonempty and positive");
                }
            }
            ExperimentKind::TailCheck => {
                if self.lambda_list.is_empty() || self.lambda_list.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
                    return bad("lambda_list must be nonempty and positive");
                }
            }
            ExperimentKind::BoundCheck | ExperimentKind::ZCompare => {}
        }
        if self.c1.is_some_and(|c| !(c > 0.0)) || self.c2.is_some_and(|c| !(c > 0.0)) {
            return bad("c1 and c2 must be positive");
        }
        if !(self.mcmc.min_ess >= 0.0) {
            return bad("mcmc.min_ess must be >= 0");
        }
        if self.mcmc.max_rerun_factor == 0 {
            return bad("mcmc.max_rerun_factor must be >= 1");
        }
        self.mcmc.to_config(SeedSpec::new(0, 0), 1).validate()?;
        for t in &self.t_list {
            self.n_rule.steps(*t)?;
        }
        Ok(())
    }
}
