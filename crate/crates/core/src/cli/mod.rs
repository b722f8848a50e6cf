//! Experiment runner: one subcommand per verification operation, with
//! deterministic JSON reports and optional CSV tables.

mod config;
mod report;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use config::{ExperimentConfig, FunctionalKind, OutputFormat};
pub use report::{Report, Table, CSV_SCHEMA, REPORT_SCHEMA};

use crate::besq::{identity_grid, QuadConfig};
use crate::brownian::tail_ratio_statistics;
use crate::error::{invalid, Result};
use crate::penalize::{
    convergence_report, density_consistency, error_terms, identity_check, martingale_check,
    weighted_measure_comparison, Verdict,
};
use crate::rng::{derive_seed, Domain};

/// Maximum residual accepted by `densities`.
pub const DENSITY_RESIDUAL_TOL: f64 = 1e-6;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const RUNTIME: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const DEGENERATE: i32 = 3;
    pub const VERDICT: i32 = 4;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Converge,
    Identity,
    Martingale,
    LimitDensity,
    CompareMeasures,
    ErrorTerms,
    Densities,
    Tails,
}

impl Command {
    pub const ALL: [Command; 8] = [
        Command::Converge,
        Command::Identity,
        Command::Martingale,
        Command::LimitDensity,
        Command::CompareMeasures,
        Command::ErrorTerms,
        Command::Densities,
        Command::Tails,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Converge => "converge",
            Command::Identity => "identity",
            Command::Martingale => "martingale",
            Command::LimitDensity => "limit-density",
            Command::CompareMeasures => "compare-measures",
            Command::ErrorTerms => "error-terms",
            Command::Densities => "densities",
            Command::Tails => "tails",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| invalid("command", format!("unknown subcommand `{s}`")))
    }
}

/// A finished run: the report and its tabular form.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub report: Report,
    pub table: Table,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        match self.report.verdict {
            Verdict::Pass => exit::OK,
            Verdict::Degenerate => exit::DEGENERATE,
            Verdict::Fail => exit::VERDICT,
        }
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn all_pass(vs: impl IntoIterator<Item = Verdict>) -> Verdict {
    let mut out = Verdict::Pass;
    for v in vs {
        match v {
            Verdict::Degenerate => return Verdict::Degenerate,
            Verdict::Fail => out = Verdict::Fail,
            Verdict::Pass => {}
        }
    }
    out
}

/// Runs `command` under `cfg`.
pub fn run(command: Command, cfg: &ExperimentConfig) -> Result<Outcome> {
    cfg.validate()?;
    let params = cfg.mc_params();
    let seed = cfg.seed;
    let (verdict, body, table) = match command {
        Command::Converge => {
            let f = cfg.functional()?;
            let r = convergence_report(&f, &cfg.horizons_t, &params, seed)?;
            let mut t = Table::new(&["t", "estimate", "std_error", "i_estimate", "i_std_error", "closed_form", "agrees"]);
            for row in &r.rows {
                t.push(vec![
                    row.t.to_string(),
                    row.estimate.to_string(),
                    row.std_error.to_string(),
                    r.i_estimate.value.to_string(),
                    r.i_estimate.std_error.to_string(),
                    fmt_opt(r.closed_form),
                    row.agrees.to_string(),
                ]);
            }
            (r.verdict, serde_json::to_value(&r), t)
        }
        Command::Identity => {
            let f = cfg.functional()?;
            let reports = identity_check(std::slice::from_ref(&f), &cfg.windows_c, &cfg.horizons_t, &params, seed)?;
            let mut t = Table::new(&[
                "c", "t", "lhs", "lhs_se", "rhs", "rhs_se", "i_hat", "i_hat_se", "agrees", "within_bound",
            ]);
            for row in reports.iter().flat_map(|r| &r.rows) {
                t.push(vec![
                    row.c.to_string(),
                    row.t.to_string(),
                    row.lhs.value.to_string(),
                    row.lhs.std_error.to_string(),
                    row.rhs.value.to_string(),
                    row.rhs.std_error.to_string(),
                    row.i_hat.value.to_string(),
                    row.i_hat.std_error.to_string(),
                    row.agrees.to_string(),
                    row.within_bound.to_string(),
                ]);
            }
            (all_pass(reports.iter().map(|r| r.verdict)), serde_json::to_value(&reports), t)
        }
        Command::Martingale => {
            let f = cfg.functional()?;
            let horizon = cfg.times_s.iter().copied().fold(0.0, f64::max);
            let r = martingale_check(&f, &cfg.times_s, cfg.n_paths, cfg.time_step_ratio * horizon, seed)?;
            let mut t = Table::new(&["statistic", "s_from", "s_to", "test", "estimate", "std_error", "pass"]);
            for (j, e) in r.mean.iter().enumerate() {
                t.push(vec![
                    "mean".into(),
                    r.s[j].to_string(),
                    r.s[j].to_string(),
                    String::new(),
                    e.value.to_string(),
                    e.std_error.to_string(),
                    r.mean_pass[j].to_string(),
                ]);
            }
            for i in &r.increments {
                t.push(vec![
                    "increment".into(),
                    i.from.to_string(),
                    i.to.to_string(),
                    serde_json::to_value(i.test).unwrap().as_str().unwrap_or_default().to_string(),
                    i.estimate.value.to_string(),
                    i.estimate.std_error.to_string(),
                    i.pass.to_string(),
                ]);
            }
            (r.verdict, serde_json::to_value(&r), t)
        }
        Command::LimitDensity => {
            let f = cfg.functional()?;
            let r = density_consistency(&f, cfg.prefix_time_s, cfg.n_prefixes, &params, seed)?;
            let mut t = Table::new(&["index", "x", "local_time_zero", "supremum", "density", "std_error", "closed_form", "agrees"]);
            for row in &r.rows {
                t.push(vec![
                    row.index.to_string(),
                    row.x.to_string(),
                    row.local_time_zero.to_string(),
                    fmt_opt(row.supremum),
                    row.monte_carlo.density.value.to_string(),
                    row.monte_carlo.density.std_error.to_string(),
                    fmt_opt(row.closed_form),
                    row.agrees.to_string(),
                ]);
            }
            (r.verdict, serde_json::to_value(&r), t)
        }
        Command::CompareMeasures => {
            let f = cfg.functional()?;
            let r = weighted_measure_comparison(&f, cfg.test_function, cfg.prefix_time_s, &cfg.horizons_t, &params, seed)?;
            let mut t = Table::new(&["t", "weighted", "std_error", "limit", "limit_std_error"]);
            for row in &r.rows {
                t.push(vec![
                    row.t.to_string(),
                    row.weighted.value.to_string(),
                    row.weighted.std_error.to_string(),
                    r.limit.value.to_string(),
                    r.limit.std_error.to_string(),
                ]);
            }
            (r.verdict, serde_json::to_value(&r), t)
        }
        Command::ErrorTerms => {
            let f = cfg.functional()?;
            let mut reports = Vec::new();
            for (ci, &c) in cfg.windows_c.iter().enumerate() {
                for (ti, &h) in cfg.horizons_t.iter().enumerate() {
                    let s = derive_seed(seed, Domain::Auxiliary, &[ci as u64, ti as u64]);
                    reports.push(error_terms(&f, c, h, &params, s)?);
                }
            }
            let mut t = Table::new(&[
                "c", "t", "delta1", "delta1_se", "delta2", "delta2_se", "delta", "delta_se", "slack", "slack_se", "bound_shape",
            ]);
            for r in &reports {
                t.push(vec![
                    r.c.to_string(),
                    r.t.to_string(),
                    r.delta1.value.to_string(),
                    r.delta1.std_error.to_string(),
                    r.delta2.value.to_string(),
                    r.delta2.std_error.to_string(),
                    r.delta.value.to_string(),
                    r.delta.std_error.to_string(),
                    r.slack.value.to_string(),
                    r.slack.std_error.to_string(),
                    r.bound_shape.to_string(),
                ]);
            }
            (all_pass(reports.iter().map(|r| r.verdict)), serde_json::to_value(&reports), t)
        }
        Command::Densities => {
            let rows = identity_grid(&QuadConfig::default())?;
            let max = rows.iter().fold(0.0f64, |m, r| m.max(r.max_abs()));
            let mut t = Table::new(&[
                "y1", "y2", "z1", "z2", "convolution", "atom_convolution", "reversed_convolution", "time_reversal", "truncation",
            ]);
            for r in &rows {
                t.push(vec![
                    r.y1.to_string(),
                    r.y2.to_string(),
                    r.z1.to_string(),
                    r.z2.to_string(),
                    r.convolution.to_string(),
                    r.atom_convolution.to_string(),
                    r.reversed_convolution.to_string(),
                    r.time_reversal.to_string(),
                    r.truncation.to_string(),
                ]);
            }
            let body = serde_json::json!({ "max_abs_residual": max, "tolerance": DENSITY_RESIDUAL_TOL, "rows": rows });
            (Verdict::from_bool(max < DENSITY_RESIDUAL_TOL), Ok(body), t)
        }
        Command::Tails => {
            let mut curves = Vec::new();
            for (ci, &c) in cfg.windows_c.iter().enumerate() {
                for (ti, &h) in cfg.horizons_t.iter().enumerate() {
                    let s = derive_seed(seed, Domain::Auxiliary, &[ci as u64, ti as u64]);
                    let cs = tail_ratio_statistics(
                        c,
                        h,
                        &cfg.tail_a,
                        cfg.n_paths,
                        cfg.time_step_ratio * h,
                        cfg.grid_step_y,
                        &cfg.tail_levels_l,
                        s,
                    )?;
                    curves.extend(cs.into_iter().map(|curve| (c, h, curve)));
                }
            }
            let mut t = Table::new(&["c", "t", "source", "level", "a", "survival", "std_error", "bound", "asserted"]);
            for (c, h, curve) in &curves {
                let (source, level) = match curve.source {
                    crate::brownian::TailSource::Brownian => ("brownian".to_string(), String::new()),
                    crate::brownian::TailSource::Y { level, branch } => (format!("y_{}", branch_name(branch)), level.to_string()),
                };
                for ((a, s), b) in curve.a.iter().zip(&curve.survival).zip(&curve.bound) {
                    t.push(vec![
                        c.to_string(),
                        h.to_string(),
                        source.clone(),
                        level.clone(),
                        a.to_string(),
                        s.value.to_string(),
                        s.std_error.to_string(),
                        b.to_string(),
                        (*a >= curve.bound_from).to_string(),
                    ]);
                }
            }
            let ok = curves.iter().all(|(_, _, c)| c.below_bound());
            let body: Vec<_> = curves
                .iter()
                .map(|(c, h, curve)| serde_json::json!({ "c": c, "t": h, "curve": curve }))
                .collect();
            (Verdict::from_bool(ok), Ok(serde_json::Value::Array(body)), t)
        }
    };
    let body = body.map_err(|e| crate::Error::NonFinite(e.to_string()))?;
    Ok(Outcome {
        report: Report::new(command, cfg.clone(), verdict, body),
        table,
    })
}

fn branch_name(b: crate::ray_knight::Branch) -> String {
    match b {
        crate::ray_knight::Branch::Plus => "plus".into(),
        crate::ray_knight::Branch::Minus => "minus".into(),
        crate::ray_knight::Branch::At(a) => format!("at_{a}"),
    }
}
