//! Configured experiments over grids of `(T, β)` cells.
//!
//! Cell `c` of an experiment draws from stream `SeedSpec::new(master_seed, c)`
//! and its children, so a rerun with the same configuration reproduces every
//! value bit for bit. A failing cell is recorded and the run continues.

use std::path::{Path, PathBuf};
use std::time::Instant;

use polyel_core::estimators::{self, RadiusEstimate};
use polyel_core::functionals::radius_gyration_centered;
use polyel_core::mcmc::{reweighted_event_prob, MoveKind};
use polyel_core::model::event_thresholds;
use polyel_core::path::sample_path;
use polyel_core::stats::{mean_se, normal_tail};
use polyel_core::theory::{self, TheoremWindow};
use polyel_core::{EventKind, EventPredicate, Executor, ModelParams, SeedSpec, Serial};
use serde_json::{json, Value};

use crate::config::{ExperimentConfig, ExperimentKind, Format};
use crate::error::{Error, Result};
use crate::io::{Cell, EstimateRecord, Table};
use crate::row;

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub kind: ExperimentKind,
    pub version: &'static str,
    pub config: ExperimentConfig,
    /// The first table is the primary result of the experiment.
    pub tables: Vec<Table>,
    pub failures: Vec<String>,
    pub wall_clock_s: f64,
}

impl ExperimentReport {
    pub fn failed(&self) -> bool {
        !self.failures.is_empty()
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    /// Everything except timing; identical across reruns of one config.
    pub fn payload(&self) -> Value {
        json!({
            "kind": self.kind.name(),
            "version": self.version,
            "master_seed": self.config.master_seed,
            "config": self.config,
            "tables": self.tables.iter().map(Table::to_json).collect::<Vec<_>>(),
            "failures": self.failures,
        })
    }

    /// Writes `<kind>.json`, or `<kind>.csv` plus `<kind>-<table>.csv` for the
    /// secondary tables, then a `.dat` companion per table and
    /// `<kind>.meta.json` with timing. Returns the written paths.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let kind = self.kind.name();
        let mut written = Vec::new();
        let mut put = |name: String, bytes: Vec<u8>| -> Result<()> {
            let p = dir.join(name);
            std::fs::write(&p, bytes).map_err(|e| Error::io(&p, e))?;
            written.push(p);
            Ok(())
        };
        match self.config.output_format {
            Format::Json => {
                let mut s = serde_json::to_vec_pretty(&self.payload())?;
                s.push(b'\n');
                put(format!("{kind}.json"), s)?;
            }
            Format::Csv => {
                for (i, t) in self.tables.iter().enumerate() {
                    let mut buf = Vec::new();
                    t.write_csv(&mut buf)?;
                    let name = if i == 0 { format!("{kind}.csv") } else { format!("{kind}-{}.csv", t.name) };
                    put(name, buf)?;
                }
            }
        }
        for t in &self.tables {
            let mut buf = Vec::new();
            t.write_dat(&mut buf)?;
            put(format!("{kind}-{}.dat", t.name), buf)?;
        }
        let meta = json!({
            "kind": kind,
            "version": self.version,
            "master_seed": self.config.master_seed,
            "wall_clock_s": self.wall_clock_s,
            "failures": self.failures,
        });
        let mut s = serde_json::to_vec_pretty(&meta)?;
        s.push(b'\n');
        put(format!("{kind}.meta.json"), s)?;
        Ok(written)
    }
}

/// Tables and cell failures collected while an experiment runs.
#[derive(Default)]
struct Outcome {
    tables: Vec<Table>,
    failures: Vec<String>,
}

impl Outcome {
    fn fail(&mut self, table: &mut Table, lead: Vec<Cell>, msg: String) {
        let mut r = lead;
        while r.len() + 1 < table.columns.len() {
            r.push(Cell::Num(f64::NAN));
        }
        r.push(Cell::Text(format!("error: {msg}")));
        table.push(r);
        self.failures.push(format!("{}: {msg}", table.name));
    }
}

/// Validates `cfg` and runs the experiment it names.
pub fn run<E: Executor>(cfg: &ExperimentConfig, exec: &E) -> Result<ExperimentReport> {
    cfg.validate()?;
    let start = Instant::now();
    let out = match cfg.kind {
        ExperimentKind::Scaling => scaling(cfg, exec),
        ExperimentKind::KernelCheck => kernel_check(cfg, exec),
        ExperimentKind::BoundCheck => bound_check(cfg, exec),
        ExperimentKind::ZCompare => z_compare(cfg, exec),
        ExperimentKind::TailCheck => tail_check(cfg, exec),
    };
    Ok(ExperimentReport {
        kind: cfg.kind,
        version: crate::VERSION,
        config: cfg.clone(),
        tables: out.tables,
        failures: out.failures,
        wall_clock_s: start.elapsed().as_secs_f64(),
    })
}

pub fn run_scaling<E: Executor>(cfg: &ExperimentConfig, exec: &E) -> Result<ExperimentReport> {
    expect_kind(cfg, ExperimentKind::Scaling)?;
    run(cfg, exec)
}

pub fn run_kernel_check<E: Executor>(cfg: &ExperimentConfig, exec: &E) -> Result<ExperimentReport> {
    expect_kind(cfg, ExperimentKind::KernelCheck)?;
    run(cfg, exec)
}

pub fn run_bound_check<E: Executor>(cfg: &ExperimentConfig, exec: &E) -> Result<ExperimentReport> {
    expect_kind(cfg, ExperimentKind::BoundCheck)?;
    run(cfg, exec)
}

pub fn run_z_compare<E: Executor>(cfg: &ExperimentConfig, exec: &E) -> Result<ExperimentReport> {
    expect_kind(cfg, ExperimentKind::ZCompare)?;
    run(cfg, exec)
}

pub fn run_tail_check<E: Executor>(cfg: &ExperimentConfig, exec: &E) -> Result<ExperimentReport> {
    expect_kind(cfg, ExperimentKind::TailCheck)?;
    run(cfg, exec)
}

fn expect_kind(cfg: &ExperimentConfig, kind: ExperimentKind) -> Result<()> {
    if cfg.kind != kind {
        return Err(Error::Invalid(format!("expected a {} config, got {}", kind.name(), cfg.kind.name())));
    }
    Ok(())
}

fn c1_of(cfg: &ExperimentConfig) -> f64 {
    cfg.c1.unwrap_or(theory::DEFAULT_C1)
}

/// `7√β` vanishes at `β = 0`, where the `β = 1` constant is used instead.
fn c2_of(cfg: &ExperimentConfig, beta: f64) -> f64 {
    cfg.c2.unwrap_or_else(|| if beta > 0.0 { theory::default_c2(beta) } else { theory::default_c2(1.0) })
}

/// `(a − b) / √(sa² + sb²)`, zero when both sides agree exactly.
fn z_score(a: f64, sa: f64, b: f64, sb: f64) -> f64 {
    let d = a - b;
    if d == 0.0 {
        return 0.0;
    }
    d / (sa * sa + sb * sb).sqrt()
}

const FAIL_Z: f64 = 4.0;

struct ScalingCell {
    horizon: f64,
    n: usize,
    sweeps: usize,
    radius: RadiusEstimate,
    window: Option<TheoremWindow>,
    prior_rg: (f64, f64),
}

fn scaling_cell(cfg: &ExperimentConfig, horizon: f64, beta: f64, seed: SeedSpec) -> Result<ScalingCell> {
    let n = cfg.n_rule.steps(horizon)?;
    let params = ModelParams::new(beta, horizon, n, 0.0)?;
    let window = if beta > 0.0 { theory::window(horizon, beta, c1_of(cfg), c2_of(cfg, beta)).ok() } else { None };
    let first = cfg.mcmc.to_config(seed.child(0), 1);
    let mut radius = estimators::q_mean_radius(&params, &first, window.as_ref(), &Serial)?;
    let mut sweeps = first.n_sweeps;
    if radius.stats.ess < cfg.mcmc.min_ess && cfg.mcmc.max_rerun_factor > 1 {
        // 25% headroom over the linear projection of ESS in chain length.
        let want = (1.25 * cfg.mcmc.min_ess / radius.stats.ess.max(1.0)).ceil() as usize;
        let mc = cfg.mcmc.to_config(seed.child(0), want.clamp(2, cfg.mcmc.max_rerun_factor));
        radius = estimators::q_mean_radius(&params, &mc, window.as_ref(), &Serial)?;
        sweeps = mc.n_sweeps;
    }
    let prior_seed = seed.child(1);
    let prior = (0..cfg.replicates)
        .map(|r| Ok(radius_gyration_centered(&sample_path(&params.with_beta(0.0), &prior_seed.child(r as u64))?)))
        .collect::<Result<Vec<f64>>>()?;
    Ok(ScalingCell { horizon, n, sweeps, radius, window, prior_rg: mean_se(&prior) })
}

fn scaling<E: Executor>(cfg: &ExperimentConfig, exec: &E) -> Outcome {
    let cells: Vec<(f64, f64)> =
        cfg.beta_list.iter().flat_map(|b| cfg.t_list.iter().map(move |t| (*t, *b))).collect();
    let results = exec.map(cells.len(), |c| {
        let (t, b) = cells[c];
        scaling_cell(cfg, t, b, SeedSpec::new(cfg.master_seed, c as u64))
    });

    let mut out = Outcome::default();
    let mut table = Table::new(
        "cells",
        &[
            "T",
            "beta",
            "n",
            "dt",
            "seed_stream",
            "sweeps",
            "mean_rg",
            "se_rg",
            "mean_rg2",
            "se_rg2",
            "rg_over_sqrt_t",
            "se_rg_over_sqrt_t",
            "rg_over_t",
            "se_rg_over_t",
            "prior_mean_rg",
            "prior_se_rg",
            "prior_rg2_exact",
            "window_low",
            "window_high",
            "window_valid",
            "fraction_in_window",
            "ess",
            "iact",
            "acc_pivot",
            "acc_global_ar",
            "acc_block",
            "ar_step_s",
            "status",
        ],
    );
    let mut ok_cells: Vec<Option<ScalingCell>> = Vec::new();
    for (c, res) in results.into_iter().enumerate() {
        let (t, b) = cells[c];
        match res {
            Err(e) => {
                out.fail(&mut table, row![t, b], e.to_string());
                ok_cells.push(None);
            }
            Ok(cell) => {
                let r = &cell.radius;
                let (m, s) = (r.mean_radius.value, r.mean_radius.std_error);
                let exact_rg2 = t * (cell.n as f64 + 2.0) / (cell.n as f64 + 1.0);
                let mut status = if r.stats.ess >= cfg.mcmc.min_ess { "ok" } else { "low_ess" }.to_string();
                if b == 0.0 {
                    let z = z_score(r.mean_radius_sq.value, r.mean_radius_sq.std_error, exact_rg2, 0.0);
                    if z.abs() > FAIL_Z {
                        status = format!("control_mismatch z={z:.2}");
                        out.failures.push(format!("cells: T={t} beta=0 mean R^2 off the prior value (z={z:.2})"));
                    }
                }
                let (wl, wh, wv) = cell.window.map_or((f64::NAN, f64::NAN, false), |w| (w.low, w.high, w.valid));
                table.push(row![
                    t,
                    b,
                    cell.n,
                    t / cell.n as f64,
                    c,
                    cell.sweeps,
                    m,
                    s,
                    r.mean_radius_sq.value,
                    r.mean_radius_sq.std_error,
                    m / t.sqrt(),
                    s / t.sqrt(),
                    m / t,
                    s / t,
                    cell.prior_rg.0,
                    cell.prior_rg.1,
                    exact_rg2,
                    wl,
                    wh,
                    wv,
                    r.fraction_in_window.unwrap_or(f64::NAN),
                    r.stats.ess,
                    r.stats.iact,
                    r.stats.acceptance(MoveKind::Pivot),
                    r.stats.acceptance(MoveKind::GlobalAutoregressive),
                    r.stats.acceptance(MoveKind::Block),
                    r.stats.ar_step_s,
                    status,
                ]);
                ok_cells.push(Some(cell));
            }
        }
    }

    let mut steps = Table::new(
        "steps",
        &["beta", "T_from", "T_to", "delta_rg_over_sqrt_t", "combined_se", "z", "ess_ok", "increase_3se", "flat_3se"],
    );
    let mut summary = Table::new(
        "summary",
        &["beta", "steps", "increasing_3se", "flat_3se", "fraction_nondecreasing", "min_ess", "ess_ok", "note"],
    );
    let per_beta = cfg.t_list.len();
    for (bi, b) in cfg.beta_list.iter().enumerate() {
        let row_cells: Vec<&ScalingCell> = ok_cells[bi * per_beta..(bi + 1) * per_beta].iter().flatten().collect();
        let (mut all_up, mut all_flat, mut frac_up) = (true, true, true);
        let mut min_ess = f64::INFINITY;
        for c in &row_cells {
            min_ess = min_ess.min(c.radius.stats.ess);
        }
        for w in row_cells.windows(2) {
            let (a, z) = (w[0], w[1]);
            let ra = a.radius.mean_radius.value / a.horizon.sqrt();
            let sa = a.radius.mean_radius.std_error / a.horizon.sqrt();
            let rz = z.radius.mean_radius.value / z.horizon.sqrt();
            let sz = z.radius.mean_radius.std_error / z.horizon.sqrt();
            let se = (sa * sa + sz * sz).sqrt();
            let zs = z_score(rz, sz, ra, sa);
            let ess_ok = a.radius.stats.ess >= cfg.mcmc.min_ess && z.radius.stats.ess >= cfg.mcmc.min_ess;
            let up = rz - ra >= 3.0 * se;
            let flat = (rz - ra).abs() <= 3.0 * se;
            all_up &= up;
            all_flat &= flat;
            if let (Some(fa), Some(fz)) = (a.radius.fraction_in_window, z.radius.fraction_in_window) {
                frac_up &= fz >= fa;
            }
            steps.push(row![*b, a.horizon, z.horizon, rz - ra, se, zs, ess_ok, up, flat]);
        }
        let frac = if *b > 0.0 { Cell::Bool(frac_up) } else { Cell::Text("n/a".into()) };
        summary.push(vec![
            Cell::Num(*b),
            Cell::from(row_cells.len().saturating_sub(1)),
            Cell::Bool(all_up),
            Cell::Bool(all_flat),
            frac,
            Cell::Num(min_ess),
            Cell::Bool(min_ess >= cfg.mcmc.min_ess),
            Cell::Text("window fraction trend is a finite-T probe of a T->infinity statement".into()),
        ]);
    }
    out.tables = vec![table, steps, summary];
    out
}

fn kernel_check<E: Executor>(cfg: &ExperimentConfig, exec: &E) -> Outcome {
    let results = exec.map(cfg.u_grid.len(), |c| {
        let u = cfg.u_grid[c];
        let mc = theory::phi_monte_carlo(u, cfg.replicates, &SeedSpec::new(cfg.master_seed, c as u64))?;
        Ok::<_, polyel_core::Error>((theory::phi(u)?, theory::phi_bound(u)?, mc))
    });
    let mut out = Outcome::default();
    let mut t = Table::new(
        "kernel",
        &["u", "phi", "phi_bound", "bound_margin", "bound_branch", "mc_value", "mc_se", "z", "seed_stream", "status"],
    );
    for (c, res) in results.into_iter().enumerate() {
        let u = cfg.u_grid[c];
        match res {
            Err(e) => out.fail(&mut t, row![u], e.to_string()),
            Ok((phi, bound, mc)) => {
                let z = z_score(mc.value, mc.std_error, phi, 0.0);
                let branch = if (2.0 / (std::f64::consts::PI * u)).sqrt() <= 1.0 / u { "sqrt" } else { "inverse" };
                let mut status = String::from("ok");
                if phi > bound {
                    status = "phi_above_bound".into();
                    out.failures.push(format!("kernel: phi({u}) exceeds its bound"));
                } else if z.abs() > FAIL_Z {
                    status = format!("mc_mismatch z={z:.2}");
                    out.failures.push(format!("kernel: Monte Carlo at u={u} off by z={z:.2}"));
                }
                t.push(row![u, phi, bound, bound - phi, branch, mc.value, mc.std_error, z, c, status]);
            }
        }
    }
    out.tables = vec![t];
    out
}

/// Value and log of a bound, or NaNs with the name recorded when `T` lies
/// outside its validity domain.
fn bound_pair(log: polyel_core::Result<f64>, name: &str, na: &mut Vec<String>) -> (f64, f64) {
    match log {
        Ok(l) => (l.exp(), l),
        Err(_) => {
            na.push(name.to_string());
            (f64::NAN, f64::NAN)
        }
    }
}

fn bound_check<E: Executor>(cfg: &ExperimentConfig, exec: &E) -> Outcome {
    let mut out = Outcome::default();
    let c1 = c1_of(cfg);

    let mut bounds = Table::new(
        "bounds",
        &[
            "T",
            "beta",
            "c1",
            "c2",
            "p_less",
            "log_p_less",
            "p_greater",
            "log_p_greater",
            "z_lower",
            "log_z_lower",
            "z_lower_audited",
            "log_z_lower_audited",
            "log_z_jensen",
            "q_less",
            "log_q_less",
            "q_greater",
            "log_q_greater",
            "log_q_less_ratio",
            "window_low",
            "window_high",
            "window_valid",
            "status",
        ],
    );
    for &t in &cfg.t_list {
        for &b in &cfg.beta_list {
            let c2 = c2_of(cfg, b);
            let mut na = Vec::new();
            let (pl, lpl) = bound_pair(theory::log_bound_p_less(t, b, c1), "p_less", &mut na);
            let (pg, lpg) = bound_pair(theory::log_bound_p_greater(t, c2), "p_greater", &mut na);
            let (zl, lzl) = bound_pair(theory::log_bound_z_lower(t, b), "z_lower", &mut na);
            let (za, lza) = bound_pair(theory::log_bound_z_lower_audited(t, b), "z_lower_audited", &mut na);
            let (_, ljz) = bound_pair(theory::log_z_jensen(t, b), "z_jensen", &mut na);
            let (ql, lql) = bound_pair(theory::log_bound_q_less(t, b, c1), "q_less", &mut na);
            let (qg, lqg) = bound_pair(theory::log_bound_q_greater(t, b, c2), "q_greater", &mut na);
            let (wl, wh, wv) = match theory::window(t, b, c1, c2) {
                Ok(w) => (w.low, w.high, w.valid),
                Err(_) => {
                    na.push("window".into());
                    (f64::NAN, f64::NAN, false)
                }
            };
            let status = if na.is_empty() { "ok".to_string() } else { format!("outside domain: {}", na.join(" ")) };
            bounds.push(row![t, b, c1, c2, pl, lpl, pg, lpg, zl, lzl, za, lza, ljz, ql, lql, qg, lqg, lpl - lzl, wl, wh, wv, status]);
        }
    }

    let mut audit = Table::new(
        "i1_audit",
        &[
            "T",
            "i1_exact",
            "i1_error",
            "i1_paper_style",
            "i1_paper_chain",
            "i1_paper_bound",
            "i1_audited_chain",
            "exact_over_paper_style",
            "exact_le_paper_bound",
            "exact_le_audited_chain",
            "status",
        ],
    );
    for &t in &cfg.t_list {
        match theory::i1_exact(t) {
            Err(e) => out.fail(&mut audit, row![t], e.to_string()),
            Ok(a) => {
                let pb = theory::i1_paper_bound(t).unwrap_or(f64::NAN);
                let le_pb: Cell = if pb.is_nan() { "n/a".into() } else { (a.exact <= pb).into() };
                let mut r = row![t, a.exact, a.exact_error, a.paper_style, a.paper_chain, pb, a.audited_chain, a.exact / a.paper_style];
                r.push(le_pb);
                r.push((a.exact <= a.audited_chain).into());
                r.push("ok".into());
                audit.push(r);
            }
        }
    }

    let mut mc = Table::new(
        "monte_carlo",
        &[
            "T",
            "beta",
            "n",
            "c1",
            "c2",
            "low",
            "high",
            "p_less_hat",
            "p_less_se",
            "p_less_bound",
            "p_less_ok",
            "p_greater_hat",
            "p_greater_se",
            "p_greater_bound",
            "p_greater_ok",
            "q_less_hat",
            "q_less_se",
            "q_greater_hat",
            "q_greater_se",
            "prior_less",
            "prior_greater",
            "seed_stream",
            "status",
        ],
    );
    for (c, &t) in cfg.t_list.iter().enumerate() {
        if !(t > 1.0 && t <= cfg.estimator.mc_max_horizon) {
            continue;
        }
        let prior = cfg
            .n_rule
            .steps(t)
            .and_then(|n| Ok(ModelParams::new(0.0, t, n, 0.0)?))
            .and_then(|p| {
                let f = estimators::sample_functionals(&p, cfg.replicates, &SeedSpec::new(cfg.master_seed, c as u64), exec)?;
                Ok((p, f))
            });
        let (params, f) = match prior {
            Ok(x) => x,
            Err(e) => {
                out.fail(&mut mc, row![t], e.to_string());
                continue;
            }
        };
        for &b in &cfg.beta_list {
            let c2 = c2_of(cfg, b);
            let res = (|| -> Result<Vec<Cell>> {
                let (low, high) = event_thresholds(&params, c1, c2)?;
                let less = EventPredicate::new(EventKind::RadiusBelow, low)?;
                let greater = EventPredicate::new(EventKind::RadiusAbove, high)?;
                let weighted = |p: &EventPredicate| -> (f64, f64) {
                    let v: Vec<f64> = f.iter().map(|x| if p.fires(x.rg) { (-b * x.coulomb).exp() } else { 0.0 }).collect();
                    mean_se(&v)
                };
                let unweighted = |p: &EventPredicate| f.iter().filter(|x| p.fires(x.rg)).count() as f64 / f.len() as f64;
                let (pl, pls) = weighted(&less);
                let (pg, pgs) = weighted(&greater);
                let bl = theory::bound_p_less(t, b, c1).unwrap_or(f64::NAN);
                let bg = theory::bound_p_greater(t, c2).unwrap_or(f64::NAN);
                let ql = reweighted_event_prob(&f, b, &less)?;
                let qg = reweighted_event_prob(&f, b, &greater)?;
                let ok_l = bl.is_nan() || pl <= bl + 3.0 * pls;
                let ok_g = bg.is_nan() || pg <= bg + 3.0 * pgs;
                let status = if ok_l && ok_g { "ok" } else { "bound_violated" };
                Ok(row![
                    t,
                    b,
                    params.n_steps,
                    c1,
                    c2,
                    low,
                    high,
                    pl,
                    pls,
                    bl,
                    ok_l,
                    pg,
                    pgs,
                    bg,
                    ok_g,
                    ql.value,
                    ql.std_error,
                    qg.value,
                    qg.std_error,
                    unweighted(&less),
                    unweighted(&greater),
                    c,
                    status,
                ])
            })();
            match res {
                Ok(r) => {
                    if r.last().and_then(Cell::as_str) != Some("ok") {
                        out.failures.push(format!("monte_carlo: T={t} beta={b} exceeds a closed-form bound"));
                    }
                    mc.push(r);
                }
                Err(e) => out.fail(&mut mc, row![t, b], e.to_string()),
            }
        }
    }
    out.tables = vec![bounds, audit, mc];
    out
}

fn z_compare<E: Executor>(cfg: &ExperimentConfig, exec: &E) -> Outcome {
    let mut out = Outcome::default();
    let mut cols: Vec<&str> = EstimateRecord::COLUMNS.to_vec();
    cols.extend(["seed_stream", "z_value", "z_se", "oracle", "oracle_ok"]);
    let mut est = Table::new("estimates", &cols);
    let mut cmp = Table::new("comparisons", &["T", "beta", "pair", "diff_log", "combined_se", "z", "status"]);
    let mut nodes = Table::new(
        "thermo_nodes",
        &["T", "beta", "node_beta", "mean_coulomb", "se", "ess", "acc_pivot", "acc_global_ar", "acc_block", "trapezoid_bias_bound"],
    );
    let mu = cfg.estimator.girsanov_mu;
    let mut c = 0u64;
    for &t in &cfg.t_list {
        for &b in &cfg.beta_list {
            let seed = SeedSpec::new(cfg.master_seed, c);
            let stream = c;
            c += 1;
            let res = (|| -> Result<_> {
                let n = cfg.n_rule.steps(t)?;
                let params = ModelParams::new(b, t, n, 0.0)?;
                let naive = estimators::z_naive(&params, cfg.replicates, &seed.child(0), exec)?;
                let gir = estimators::z_girsanov(&params, mu, cfg.replicates, &seed.child(1), exec)?;
                let grid = estimators::default_beta_grid(b, cfg.estimator.thermo_nodes, cfg.estimator.thermo_ratio);
                let thermo = estimators::z_thermo(&params, &grid, &cfg.mcmc.to_config(seed.child(2), 1), exec)?;
                Ok((params, naive, gir, thermo))
            })();
            let (params, naive, gir, thermo) = match res {
                Ok(x) => x,
                Err(e) => {
                    out.fail(&mut cmp, row![t, b], e.to_string());
                    continue;
                }
            };
            let oracle = theory::small_beta_z(t, b).unwrap_or(f64::NAN);
            let recs = [
                EstimateRecord::new(&naive, &params, 0.0),
                EstimateRecord::new(&gir.estimate, &params, mu),
                EstimateRecord::new(&thermo.estimate, &params, 0.0),
            ];
            for r in &recs {
                let (lz, ls) = r.log_value();
                let (zv, zs) = (lz.exp(), lz.exp() * ls);
                let ok = (zv - oracle).abs() <= (3.0 * zs).max(0.005 * oracle.abs());
                let mut row = r.row();
                row.extend(row![stream, zv, zs, oracle, ok]);
                est.push(row);
            }
            for (i, j) in [(0, 1), (0, 2), (1, 2)] {
                let (a, sa) = recs[i].log_value();
                let (z, sz) = recs[j].log_value();
                let zs = z_score(a, sa, z, sz);
                let pair = format!("{}-{}", recs[i].method, recs[j].method);
                let status = if zs.abs() > FAIL_Z {
                    out.failures.push(format!("comparisons: T={t} beta={b} {pair} disagree (z={zs:.2})"));
                    "disagree"
                } else {
                    "ok"
                };
                cmp.push(row![t, b, pair, a - z, (sa * sa + sz * sz).sqrt(), zs, status]);
            }
            for node in &thermo.nodes {
                nodes.push(row![
                    t,
                    b,
                    node.beta,
                    node.mean_coulomb.value,
                    node.mean_coulomb.std_error,
                    node.mean_coulomb.n_effective,
                    node.stats.acceptance(MoveKind::Pivot),
                    node.stats.acceptance(MoveKind::GlobalAutoregressive),
                    node.stats.acceptance(MoveKind::Block),
                    thermo.trapezoid_bias_bound,
                ]);
            }
        }
    }
    out.tables = vec![est, cmp, nodes];
    out
}

fn tail_check<E: Executor>(cfg: &ExperimentConfig, exec: &E) -> Outcome {
    let mut out = Outcome::default();
    let mut t_tab = Table::new("tail", &["T", "n", "lambda", "p_hat", "se", "bound", "z", "seed_stream", "status"]);
    for (c, &t) in cfg.t_list.iter().enumerate() {
        let res = (|| -> Result<_> {
            let n = cfg.n_rule.steps(t)?;
            let params = ModelParams::new(0.0, t, n, 0.0)?;
            let m = estimators::max_abs_first_coordinate(&params, cfg.replicates, &SeedSpec::new(cfg.master_seed, c as u64), exec)?;
            Ok((n, m))
        })();
        let (n, max_abs) = match res {
            Ok(x) => x,
            Err(e) => {
                out.fail(&mut t_tab, row![t], e.to_string());
                continue;
            }
        };
        for &l in &cfg.lambda_list {
            let p = estimators::tail_from(&max_abs, l * t.sqrt());
            let bound = 4.0 * normal_tail(l);
            let z = z_score(p.value, p.std_error, bound, 0.0);
            let status = if z > FAIL_Z {
                out.failures.push(format!("tail: T={t} lambda={l} exceeds the reflection bound (z={z:.2})"));
                "bound_violated"
            } else {
                "ok"
            };
            t_tab.push(row![t, n, l, p.value, p.std_error, bound, z, c, status]);
        }
    }
    out.tables = vec![t_tab];
    out
}
