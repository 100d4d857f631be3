//! The `polyel` command line.
//!
//! Exit status: 0 on success, 1 on invalid input, 2 when a computation or
//! experiment cell fails, 3 on an internal consistency violation.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use polyel_core::estimators;
use polyel_core::functionals::{holder_check, path_functionals_with, radius_gyration_centered};
use polyel_core::mcmc::{run_chain_observed, MoveKind};
use polyel_core::path::sample_path;
use polyel_core::theory;
use polyel_core::{McmcConfig, ModelParams, SeedSpec};

use crate::config::{ExperimentConfig, Format};
use crate::error::{Error, Result};
use crate::io::{self, EstimateRecord, Table, TraceWriter};
use crate::parallel::Pool;
use crate::{harness, row};

#[derive(Debug, Parser)]
#[command(name = "polyel", version, about = "Brownian paths penalized by their Coulomb self-energy")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Time horizon T.
    #[arg(long = "T", global = true, default_value_t = 1.0)]
    pub horizon: f64,
    /// Number of time steps.
    #[arg(long, global = true, default_value_t = 256)]
    pub n: usize,
    /// Coulomb coupling.
    #[arg(long, global = true, default_value_t = 0.0)]
    pub beta: f64,
    /// Drift along e1; for estimate-z the importance-sampling drift (default 1).
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub mu: Option<f64>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Output file, or output directory for `sweep`; standard output if unset.
    #[arg(long, global = true, env = "POLYEL_OUT")]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Worker threads; numeric output does not depend on this.
    #[arg(long, global = true, env = "POLYEL_THREADS")]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw one path and print its nodes.
    Sample,
    /// Coulomb energy, gyration radius and Hölder check of one path.
    Energy {
        /// Path file with columns i,t,x,y,z; a fresh path is drawn if omitted.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Run one Metropolis chain under the penalized measure.
    Mcmc {
        #[command(flatten)]
        chain: ChainArgs,
        /// Per-sweep trace file with columns sweep,coulomb,rg,endpoint_x1,move,accepted.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Estimate the partition function.
    EstimateZ {
        #[arg(long, value_enum, default_value_t = ZMethod::All)]
        method: ZMethod,
        /// Independent paths for the naive and Girsanov estimators.
        #[arg(long, default_value_t = 10_000)]
        m: usize,
        /// Positive nodes of the thermodynamic-integration grid.
        #[arg(long, default_value_t = 6)]
        nodes: usize,
        /// Geometric ratio between consecutive grid nodes.
        #[arg(long, default_value_t = 2.0)]
        ratio: f64,
        #[command(flatten)]
        chain: ChainArgs,
    },
    /// Tabulate the closed-form bounds, the window and the I1 audit.
    VerifyBounds {
        #[arg(long)]
        c1: Option<f64>,
        #[arg(long)]
        c2: Option<f64>,
    },
    /// Run an experiment described by a JSON config.
    Sweep {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ZMethod {
    Naive,
    Girsanov,
    Thermo,
    All,
}

#[derive(Debug, Clone, Args)]
pub struct ChainArgs {
    #[arg(long, default_value_t = 10_000)]
    pub sweeps: usize,
    #[arg(long, default_value_t = 1_000)]
    pub burn_in: usize,
    #[arg(long, default_value_t = 1)]
    pub thinning: usize,
    /// Initial autoregressive step s in (0, 1].
    #[arg(long, default_value_t = 0.2)]
    pub ar_step: f64,
    #[arg(long, default_value_t = 8)]
    pub block_len: usize,
    /// Pivot, global-AR and block selection probabilities.
    #[arg(long, value_delimiter = ',', num_args = 3, default_values_t = [0.4, 0.4, 0.2])]
    pub weights: Vec<f64>,
    /// Keep the AR step fixed during burn-in.
    #[arg(long)]
    pub no_adapt: bool,
}

impl ChainArgs {
    fn config(&self, seed: SeedSpec) -> Result<McmcConfig> {
        let cfg = McmcConfig {
            move_weights: [self.weights[0], self.weights[1], self.weights[2]],
            ar_step_s: self.ar_step,
            block_len: self.block_len,
            n_sweeps: self.sweeps,
            burn_in: self.burn_in,
            thinning: self.thinning,
            seed,
            adapt: !self.no_adapt,
            retain_paths_every: None,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Parses the process arguments, runs the command and maps errors to exit codes.
pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("polyel: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

/// Runs `cli`; returns the exit status for runs that complete.
pub fn dispatch(cli: &Cli) -> Result<u8> {
    let c = &cli.common;
    let pool = match c.threads {
        Some(t) => Pool::new(t)?,
        None => Pool::available()?,
    };
    let format = c.format.unwrap_or_default();
    let seed = SeedSpec::new(c.seed, 0);
    let params = |mu: f64| ModelParams::new(c.beta, c.horizon, c.n, mu);
    match &cli.command {
        Command::Sample => {
            let p = params(c.mu.unwrap_or(0.0))?;
            let path = sample_path(&p, &seed)?;
            emit(&io::path_table(&path), format, c.out.as_deref())?;
        }
        Command::Energy { input } => {
            let path = match input {
                Some(f) => io::read_path_csv(BufReader::new(File::open(f).map_err(|e| Error::io(f, e))?))?,
                None => sample_path(&params(c.mu.unwrap_or(0.0))?, &seed)?,
            };
            let f = path_functionals_with(&path, &pool)?;
            let h = holder_check(&path)?;
            let mut t = Table::new(
                "energy",
                &["n", "T", "coulomb", "rg", "rg_centered", "endpoint_x1", "clamped", "holder_m2", "holder_m_neg1", "holder_product"],
            );
            t.push(row![
                path.n_steps(),
                path.grid().horizon(),
                f.coulomb,
                f.rg,
                radius_gyration_centered(&path),
                f.endpoint_x1,
                f.clamped,
                h.m2,
                h.m_neg1,
                h.product,
            ]);
            emit(&t, format, c.out.as_deref())?;
        }
        Command::Mcmc { chain, trace } => {
            let p = params(0.0)?;
            let cfg = chain.config(seed)?;
            let mut writer = match trace {
                Some(f) => Some(TraceWriter::new(BufWriter::new(File::create(f).map_err(|e| Error::io(f, e))?))?),
                None => None,
            };
            let mut trace_err = None;
            let out = run_chain_observed(&p, &cfg, &pool, |r| {
                if let (Some(w), None) = (writer.as_mut(), trace_err.as_ref()) {
                    trace_err = w.record(r).err();
                }
            })?;
            if let Some(e) = trace_err {
                return Err(e);
            }
            if let Some(w) = writer {
                w.finish()?.flush()?;
            }
            let rg = out.mean_estimate(|f| f.rg);
            let rg2 = out.mean_estimate(|f| f.rg * f.rg);
            let en = out.mean_estimate(|f| f.coulomb);
            let s = &out.stats;
            let mut t = Table::new(
                "mcmc",
                &[
                    "T",
                    "n",
                    "beta",
                    "seed",
                    "sweeps",
                    "burn_in",
                    "retained",
                    "mean_rg",
                    "se_rg",
                    "mean_rg2",
                    "se_rg2",
                    "mean_coulomb",
                    "se_coulomb",
                    "iact",
                    "ess",
                    "acc_pivot",
                    "acc_global_ar",
                    "acc_block",
                    "ar_step_s",
                    "clamp_events",
                ],
            );
            t.push(row![
                p.horizon,
                p.n_steps,
                p.beta,
                c.seed,
                cfg.n_sweeps,
                cfg.burn_in,
                out.samples.len(),
                rg.value,
                rg.std_error,
                rg2.value,
                rg2.std_error,
                en.value,
                en.std_error,
                s.iact,
                s.ess,
                s.acceptance(MoveKind::Pivot),
                s.acceptance(MoveKind::GlobalAutoregressive),
                s.acceptance(MoveKind::Block),
                s.ar_step_s,
                s.clamp_events,
            ]);
            emit(&t, format, c.out.as_deref())?;
        }
        Command::EstimateZ { method, m, nodes, ratio, chain } => {
            let p = params(0.0)?;
            let mu = c.mu.unwrap_or(1.0);
            let cfg = chain.config(seed.child(2))?;
            let mut records = Vec::new();
            if matches!(method, ZMethod::Naive | ZMethod::All) {
                let e = estimators::z_naive(&p, *m, &seed.child(0), &pool)?;
                records.push(EstimateRecord::new(&e, &p, 0.0));
            }
            if matches!(method, ZMethod::Girsanov | ZMethod::All) {
                let e = estimators::z_girsanov(&p, mu, *m, &seed.child(1), &pool)?;
                records.push(EstimateRecord::new(&e.estimate, &p, mu));
            }
            if matches!(method, ZMethod::Thermo | ZMethod::All) {
                let grid = estimators::default_beta_grid(p.beta, *nodes, *ratio);
                let e = estimators::z_thermo(&p, &grid, &cfg, &pool)?;
                records.push(EstimateRecord::new(&e.estimate, &p, 0.0));
            }
            match format {
                Format::Csv => emit(&io::estimate_table(&records), format, c.out.as_deref())?,
                Format::Json => {
                    let mut s = serde_json::to_string_pretty(&records)?;
                    s.push('\n');
                    write_out(s.as_bytes(), c.out.as_deref())?;
                }
            }
        }
        Command::VerifyBounds { c1, c2 } => {
            let t = bounds_table(c.horizon, c.beta, c1.unwrap_or(theory::DEFAULT_C1), c2.unwrap_or_else(|| theory::default_c2(if c.beta > 0.0 { c.beta } else { 1.0 })))?;
            emit(&t, format, c.out.as_deref())?;
        }
        Command::Sweep { config } => {
            let mut cfg = ExperimentConfig::load(config)?;
            if let Some(o) = &c.out {
                cfg.output_dir = o.clone();
            }
            if let Some(f) = c.format {
                cfg.output_format = f;
            }
            let report = harness::run(&cfg, &pool)?;
            let files = report.write(&cfg.output_dir)?;
            let mut stdout = std::io::stdout().lock();
            for f in files {
                writeln!(stdout, "wrote {}", f.display())?;
            }
            for f in &report.failures {
                writeln!(stdout, "FAILED {f}")?;
            }
            if report.failed() {
                return Ok(2);
            }
        }
    }
    Ok(0)
}

/// Every closed-form quantity at `(T, β)`; entries outside a bound's
/// validity domain are NaN with a status note.
pub fn bounds_table(horizon: f64, beta: f64, c1: f64, c2: f64) -> Result<Table> {
    if !(horizon > 0.0 && horizon.is_finite()) || !(beta >= 0.0 && beta.is_finite()) {
        return Err(Error::Invalid("need T > 0 and beta >= 0".into()));
    }
    let mut t = Table::new("bounds", &["quantity", "value", "log_value", "status"]);
    let mut put_log = |name: &str, r: polyel_core::Result<f64>| match r {
        Ok(l) => t.push(row![name, l.exp(), l, "ok"]),
        Err(e) => t.push(row![name, f64::NAN, f64::NAN, format!("n/a: {e}")]),
    };
    put_log("p_less", theory::log_bound_p_less(horizon, beta, c1));
    put_log("p_greater", theory::log_bound_p_greater(horizon, c2));
    put_log("z_lower", theory::log_bound_z_lower(horizon, beta));
    put_log("z_lower_audited", theory::log_bound_z_lower_audited(horizon, beta));
    put_log("z_jensen", theory::log_z_jensen(horizon, beta));
    put_log("q_less", theory::log_bound_q_less(horizon, beta, c1));
    put_log(
        "q_less_ratio",
        theory::log_bound_p_less(horizon, beta, c1).and_then(|p| Ok(p - theory::log_bound_z_lower(horizon, beta)?)),
    );
    put_log("q_greater", theory::log_bound_q_greater(horizon, beta, c2));
    let mut put = |name: &str, r: polyel_core::Result<f64>| match r {
        Ok(v) => t.push(row![name, v, v.ln(), "ok"]),
        Err(e) => t.push(row![name, f64::NAN, f64::NAN, format!("n/a: {e}")]),
    };
    match theory::window(horizon, beta, c1, c2) {
        Ok(w) => {
            put("window_low", Ok(w.low));
            put("window_high", Ok(w.high));
            put("window_valid", Ok(if w.valid { 1.0 } else { 0.0 }));
        }
        Err(e) => {
            for q in ["window_low", "window_high", "window_valid"] {
                put(q, Err(e.clone()));
            }
        }
    }
    let audit = theory::i1_exact(horizon)?;
    put("i1_exact", Ok(audit.exact));
    put("i1_exact_error", Ok(audit.exact_error));
    put("i1_paper_style", Ok(audit.paper_style));
    put("i1_paper_chain", Ok(audit.paper_chain));
    put("i1_paper_bound", theory::i1_paper_bound(horizon));
    put("i1_audited_chain", Ok(audit.audited_chain));
    put("small_beta_z", theory::small_beta_z(horizon, beta));
    put("phi_at_T", theory::phi(horizon));
    put("phi_bound_at_T", theory::phi_bound(horizon));
    Ok(t)
}

fn emit(t: &Table, format: Format, out: Option<&Path>) -> Result<()> {
    write_out(t.render(format)?.as_bytes(), out)
}

fn write_out(bytes: &[u8], out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, bytes).map_err(|e| Error::io(p, e)),
        None => {
            let mut s = std::io::stdout().lock();
            s.write_all(bytes)?;
            s.flush()?;
            Ok(())
        }
    }
}
