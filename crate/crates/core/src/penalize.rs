//! Verification of the penalization limit: convergence of `√(2πt) E[F(L_t)]`,
//! the cutoff identity and its bound, limit densities, the density
//! martingale, weighted measures, error terms, and the Edwards degeneracy.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::brownian::{cutoff_factor, integrate_paths, LocalTimeMethod, Observation, PathPlan};
use crate::error::{invalid, require_positive, Error, Result};
use crate::field::{integrate_weighted, FieldView, LocalTimeField};
use crate::functionals::{closed_form_density, closed_form_i, shift, DominationCertificate, FunctionalSpec, PrefixState};
use crate::grid::SpaceGrid;
use crate::parallel::ordered_map;
use crate::ray_knight::{cutoff_weight, estimate_i, grid_for, integrate_measure, sample_y_plus, window_weights, Branch, IEstimate, MeasureConfig};
use crate::rng::{derive_seed, stream, Domain};
use crate::stats::{Estimate, Moments};

/// Verdicts use this many combined standard errors.
pub const TOLERANCE_SE: f64 = 3.0;

/// `√3`, the bound on `φ(x)/√(1−x)`.
const SQRT3: f64 = 1.732_050_807_568_877_2;

/// How local times are measured along Brownian paths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LocalTimeChoice {
    Bridge,
    Kernel,
}

/// Monte Carlo parameters shared by all checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McParams {
    pub n_paths: u64,
    /// Time step as a fraction of the horizon.
    pub dt_ratio: f64,
    pub local_time: LocalTimeChoice,
    /// Kernel half-width; defaults to `max(0.02, 2√dt)`.
    pub bandwidth: Option<f64>,
    pub measure: MeasureConfig,
    pub grid_step: f64,
}

impl Default for McParams {
    fn default() -> Self {
        Self {
            n_paths: 100_000,
            dt_ratio: 1e-4,
            local_time: LocalTimeChoice::Bridge,
            bandwidth: None,
            measure: MeasureConfig::default(),
            grid_step: 1.0 / 64.0,
        }
    }
}

impl McParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_paths == 0 {
            return Err(invalid("n_paths", "must be positive"));
        }
        require_positive("dt_ratio", self.dt_ratio)?;
        if self.dt_ratio > 1.0 {
            return Err(invalid("dt_ratio", "must not exceed 1"));
        }
        if let Some(b) = self.bandwidth {
            require_positive("bandwidth", b)?;
        }
        require_positive("grid_step", self.grid_step)?;
        self.measure.validate()
    }

    pub fn dt(&self, t: f64) -> f64 {
        self.dt_ratio * t
    }

    pub fn method(&self, t: f64) -> LocalTimeMethod {
        match self.local_time {
            LocalTimeChoice::Bridge => LocalTimeMethod::Bridge,
            LocalTimeChoice::Kernel => LocalTimeMethod::Kernel {
                bandwidth: self.bandwidth.unwrap_or_else(|| 0.02f64.max(2.0 * self.dt(t).sqrt())),
            },
        }
    }

    /// Path plan at horizon `t` observing every level the functionals read.
    pub fn plan(&self, fs: &[&FunctionalSpec], t: f64) -> Result<PathPlan> {
        let levels = grid_for(fs, None, self.grid_step, path_extent(t))?;
        Ok(PathPlan::new(t, self.dt(t), levels, self.method(t)))
    }
}

/// Half-width of the level grid for functionals reading whole fields.
fn path_extent(t: f64) -> f64 {
    6.0 * t.sqrt() + 1.0
}

/// Half-width of the sampling window of `Y` for functionals reading whole fields.
const MEASURE_EXTENT: f64 = 16.0;

fn sub_seed(seed: u64, tag: u64, coords: &[u64]) -> u64 {
    let mut c = vec![tag];
    c.extend_from_slice(coords);
    derive_seed(seed, Domain::Auxiliary, &c)
}

fn sqrt_2pi_t(t: f64) -> f64 {
    (2.0 * std::f64::consts::PI * t).sqrt()
}

/// Pass, fail, or a degenerate normalization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Degenerate,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }
}

/// `Î(F)` indistinguishable from 0.
pub fn is_degenerate(i: &IEstimate) -> bool {
    i.value <= TOLERANCE_SE * i.std_error + 1e-12
}

/// `Î(F)` with the sampling grid chosen from what `F` reads.
pub fn estimate_i_for(f: &FunctionalSpec, params: &McParams, seed: u64) -> Result<IEstimate> {
    let grid = grid_for(&[f], None, params.grid_step, MEASURE_EXTENT)?;
    estimate_i(f, &params.measure, &grid, seed)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub t: f64,
    pub estimate: f64,
    pub std_error: f64,
    /// Agreement with `Î(F)` within the tolerance.
    pub agrees: bool,
}

/// Rows `t ↦ √(2πt) Ê[F(L_t)]` against `I(F)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PenalizationReport {
    pub functional: String,
    pub rows: Vec<ConvergenceRow>,
    pub i_estimate: IEstimate,
    pub closed_form: Option<f64>,
    pub verdict: Verdict,
}

/// Penalized expectations over `t_list` compared with `Î(F)` (and the
/// closed form when known). The verdict is taken at the largest `t`.
pub fn convergence_report(f: &FunctionalSpec, t_list: &[f64], params: &McParams, seed: u64) -> Result<PenalizationReport> {
    params.validate()?;
    if t_list.is_empty() {
        return Err(invalid("t_list", "must not be empty"));
    }
    let mut ts = t_list.to_vec();
    ts.sort_by(f64::total_cmp);
    let i_est = estimate_i_for(f, params, sub_seed(seed, 1, &[]))?;
    let closed = closed_form_i(f).ok();
    let target = match closed {
        Some(v) => Estimate::exact(v),
        None => i_est.as_estimate(),
    };
    let mut rows = Vec::with_capacity(ts.len());
    for (k, &t) in ts.iter().enumerate() {
        let plan = params.plan(&[f], t)?;
        let m = integrate_paths(&plan, params.n_paths, sub_seed(seed, 2, &[k as u64]), 1, |obs, out| {
            out[0] = f.evaluate(&obs[obs.len() - 1].field);
        })?;
        let e = m.estimate(0).scale(sqrt_2pi_t(t));
        rows.push(ConvergenceRow {
            t,
            estimate: e.value,
            std_error: e.std_error,
            agrees: e.agrees_with(target, TOLERANCE_SE),
        });
    }
    let verdict = if is_degenerate(&i_est) || closed == Some(0.0) {
        Verdict::Degenerate
    } else {
        Verdict::from_bool(rows.last().is_some_and(|r| r.agrees))
    };
    Ok(PenalizationReport {
        functional: f.name().to_string(),
        rows,
        i_estimate: i_est,
        closed_form: closed,
        verdict,
    })
}

/// One `(c, t)` cell of the cutoff identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityRow {
    pub c: f64,
    pub t: f64,
    /// Brownian side `√(2πt) Ê[F 1{|B_t| ≥ c} φ(·)]`.
    pub lhs: Estimate,
    /// Measure side `Î_{c,t}(F)`.
    pub rhs: Estimate,
    /// `Î(F)` from the same measure samples.
    pub i_hat: Estimate,
    pub agrees: bool,
    /// `lhs ≤ √3 Î(F) + 3 SE`.
    pub within_bound: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub functional: String,
    pub rows: Vec<IdentityRow>,
    pub verdict: Verdict,
}

/// Both sides of the cutoff identity for each functional over `cs × ts`.
/// Brownian paths are shared by all functionals and windows at a given `t`;
/// measure samples are shared by all `(c, t)` of a functional.
pub fn identity_check(fs: &[FunctionalSpec], cs: &[f64], ts: &[f64], params: &McParams, seed: u64) -> Result<Vec<IdentityReport>> {
    params.validate()?;
    for &c in cs {
        require_positive("c", c)?;
    }
    let refs: Vec<&FunctionalSpec> = fs.iter().collect();
    let nf = fs.len();
    let nc = cs.len();
    let mut lhs = vec![vec![Estimate::exact(0.0); nc * ts.len()]; nf];
    for (ti, &t) in ts.iter().enumerate() {
        let plan = params.plan(&refs, t)?.with_windows(cs.to_vec());
        let m = integrate_paths(&plan, params.n_paths, sub_seed(seed, 3, &[ti as u64]), nf * nc, |obs, out| {
            let o = &obs[obs.len() - 1];
            for (fi, f) in fs.iter().enumerate() {
                let v = f.evaluate(&o.field);
                for (ci, &c) in cs.iter().enumerate() {
                    out[fi * nc + ci] = v * cutoff_factor(o, c, ci);
                }
            }
        })?;
        for fi in 0..nf {
            for ci in 0..nc {
                lhs[fi][ci * ts.len() + ti] = m.estimate(fi * nc + ci).scale(sqrt_2pi_t(t));
            }
        }
    }
    let cmax = cs.iter().copied().fold(0.0, f64::max);
    let mut reports = Vec::with_capacity(nf);
    for (fi, f) in fs.iter().enumerate() {
        let grid = grid_for(&[f], Some(cmax), params.grid_step, MEASURE_EXTENT)?;
        let k = nc * ts.len();
        let mi = integrate_measure(&params.measure, &grid, sub_seed(seed, 4, &[fi as u64]), k + 1, |field, out| {
            let v = f.evaluate(field);
            for (ci, &c) in cs.iter().enumerate() {
                let (i, y) = window_weights(field, c);
                for (ti, &t) in ts.iter().enumerate() {
                    out[ci * ts.len() + ti] = v * cutoff_weight(i, y, t);
                }
            }
            out[k] = v;
        })?;
        let i_hat = mi.estimate(k).as_estimate();
        let mut rows = Vec::with_capacity(k);
        for (ci, &c) in cs.iter().enumerate() {
            for (ti, &t) in ts.iter().enumerate() {
                let j = ci * ts.len() + ti;
                let l = lhs[fi][j];
                let r = mi.estimate(j).as_estimate();
                rows.push(IdentityRow {
                    c,
                    t,
                    lhs: l,
                    rhs: r,
                    i_hat,
                    agrees: l.agrees_with(r, TOLERANCE_SE),
                    within_bound: l.value <= SQRT3 * i_hat.value + TOLERANCE_SE * l.joint_se(i_hat.scale(SQRT3)),
                });
            }
        }
        let ok = rows.iter().all(|r| r.agrees && r.within_bound);
        reports.push(IdentityReport {
            functional: f.name().to_string(),
            rows,
            verdict: Verdict::from_bool(ok),
        });
    }
    Ok(reports)
}

/// Monte Carlo limit density with its numerator and denominator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitDensity {
    pub density: Estimate,
    pub numerator: Estimate,
    pub denominator: Estimate,
}

/// `Î(F^{(l_s), X_s}) / Î(F)` with numerator and denominator evaluated on
/// the same measure samples.
pub fn limit_density(f: &FunctionalSpec, prefix: &PrefixState, params: &McParams, seed: u64) -> Result<LimitDensity> {
    params.validate()?;
    let shifted = shift(f, Arc::new(prefix.field.clone()), prefix.x)?;
    let grid = grid_for(&[f, &shifted], None, params.grid_step, MEASURE_EXTENT)?;
    let m = integrate_measure(&params.measure, &grid, seed, 2, |field, out| {
        out[0] = shifted.evaluate(field);
        out[1] = f.evaluate(field);
    })?;
    let den = m.estimate(1);
    if is_degenerate(&den) {
        return Err(Error::Degenerate(format!("I({}) is indistinguishable from 0", f.name())));
    }
    Ok(LimitDensity {
        density: m.ratio(0, 1),
        numerator: m.estimate(0).as_estimate(),
        denominator: den.as_estimate(),
    })
}

/// Prefix states `(X_s, l_s)` of `n` independent paths observed at the levels in `levels`.
pub fn random_prefixes(levels: &[f64], s: f64, dt: f64, n: u64, seed: u64) -> Result<Vec<PrefixState>> {
    let grid = Arc::new(SpaceGrid::from_points(levels)?);
    let plan = PathPlan::new(s, dt, grid, LocalTimeMethod::Bridge);
    ordered_map(n, |i| {
        let obs = crate::brownian::observe_path(&plan, seed, i)?;
        let o = obs.into_iter().last().expect("horizon observation");
        Ok(PrefixState { x: o.x, field: o.field })
    })
    .into_iter()
    .collect()
}

/// Monte Carlo limit density against the closed form at one prefix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrefixDensityRow {
    pub index: u64,
    pub x: f64,
    pub local_time_zero: f64,
    pub supremum: Option<f64>,
    pub monte_carlo: LimitDensity,
    pub closed_form: Option<f64>,
    pub agrees: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityConsistencyReport {
    pub functional: String,
    pub s: f64,
    pub rows: Vec<PrefixDensityRow>,
    pub verdict: Verdict,
}

/// `limit_density` on `n` random prefixes of duration `s`, compared with
/// `closed_form_density` when the functional has one.
pub fn density_consistency(f: &FunctionalSpec, s: f64, n: u64, params: &McParams, seed: u64) -> Result<DensityConsistencyReport> {
    params.validate()?;
    require_positive("s", s)?;
    let levels = grid_for(&[f], None, params.grid_step, path_extent(s))?;
    let prefixes = random_prefixes(levels.points(), s, params.dt(s), n, sub_seed(seed, 8, &[]))?;
    let mut rows = Vec::with_capacity(prefixes.len());
    for (i, p) in prefixes.iter().enumerate() {
        let mc = limit_density(f, p, params, sub_seed(seed, 9, &[i as u64]))?;
        let closed = match closed_form_density(f, p) {
            Ok(v) => Some(v),
            Err(Error::NoClosedForm { .. }) => None,
            Err(e) => return Err(e),
        };
        rows.push(PrefixDensityRow {
            index: i as u64,
            x: p.x,
            local_time_zero: p.field.value_at(0.0),
            supremum: p.field.support().map(|s| s.hi),
            agrees: closed.is_none_or(|c| mc.density.agrees_with_value(c, TOLERANCE_SE)),
            monte_carlo: mc,
            closed_form: closed,
        });
    }
    let ok = rows.iter().all(|r| r.agrees);
    Ok(DensityConsistencyReport {
        functional: f.name().to_string(),
        s,
        rows,
        verdict: Verdict::from_bool(ok),
    })
}

/// Bounded adapted functions of a path prefix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestFunction {
    One,
    XPositive,
    TanhX,
    CosX,
    ExpAbsX,
    SupBelowOne,
    ExpLocalTime,
    SinXExpLocalTime,
}

impl TestFunction {
    pub const ALL: [TestFunction; 8] = [
        TestFunction::One,
        TestFunction::XPositive,
        TestFunction::TanhX,
        TestFunction::CosX,
        TestFunction::ExpAbsX,
        TestFunction::SupBelowOne,
        TestFunction::ExpLocalTime,
        TestFunction::SinXExpLocalTime,
    ];

    pub fn eval(self, o: &Observation) -> f64 {
        let x = o.x;
        let l0 = o.field.value_at(0.0);
        match self {
            TestFunction::One => 1.0,
            TestFunction::XPositive => (x > 0.0) as u8 as f64,
            TestFunction::TanhX => x.tanh(),
            TestFunction::CosX => x.cos(),
            TestFunction::ExpAbsX => (-x.abs()).exp(),
            TestFunction::SupBelowOne => (o.max < 1.0) as u8 as f64,
            TestFunction::ExpLocalTime => (-l0).exp(),
            TestFunction::SinXExpLocalTime => x.sin() * (-l0).exp(),
        }
    }
}

fn density_of(f: &FunctionalSpec, o: &Observation) -> f64 {
    let state = PrefixState {
        x: o.x,
        field: o.field.clone(),
    };
    closed_form_density(f, &state).unwrap_or(f64::NAN)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncrementStat {
    pub from: f64,
    pub to: f64,
    pub test: TestFunction,
    /// `Ê[(D_to − D_from) g(prefix at from)]`.
    pub estimate: Estimate,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MartingaleReport {
    pub functional: String,
    pub s: Vec<f64>,
    pub mean: Vec<Estimate>,
    pub variance: Vec<f64>,
    pub mean_pass: Vec<bool>,
    pub increments: Vec<IncrementStat>,
    pub verdict: Verdict,
}

/// Closed-form densities `D_s` along simulated paths: their means (which
/// must be 1) and the products of the increment `D_{s_last} − D_{s_first}`
/// with the fixed test functions of the prefix at `s_first` (which must
/// have mean 0).
pub fn martingale_check(f: &FunctionalSpec, s_list: &[f64], n_paths: u64, dt: f64, seed: u64) -> Result<MartingaleReport> {
    if s_list.is_empty() {
        return Err(invalid("s_list", "must not be empty"));
    }
    closed_form_i(f)?;
    let mut s = s_list.to_vec();
    s.sort_by(f64::total_cmp);
    let horizon = *s.last().unwrap();
    let levels = grid_for(&[f], None, 1.0, path_extent(horizon))?;
    let plan = PathPlan::new(horizon, dt, levels, LocalTimeMethod::Bridge).with_snapshots(s[..s.len() - 1].to_vec());
    let ns = s.len();
    let tests = TestFunction::ALL;
    let k = ns + tests.len();
    let m = integrate_paths(&plan, n_paths, seed, k, |obs, out| {
        for (j, o) in obs.iter().enumerate() {
            out[j] = density_of(f, o);
        }
        let inc = out[ns - 1] - out[0];
        for (j, g) in tests.iter().enumerate() {
            out[ns + j] = inc * g.eval(&obs[0]);
        }
    })?;
    let mean: Vec<Estimate> = (0..ns).map(|j| m.estimate(j)).collect();
    let mean_pass: Vec<bool> = mean.iter().map(|e| e.agrees_with_value(1.0, TOLERANCE_SE)).collect();
    let increments: Vec<IncrementStat> = tests
        .iter()
        .enumerate()
        .map(|(j, &g)| {
            let e = m.estimate(ns + j);
            IncrementStat {
                from: s[0],
                to: horizon,
                test: g,
                estimate: e,
                pass: e.agrees_with_value(0.0, TOLERANCE_SE),
            }
        })
        .collect();
    let ok = mean_pass.iter().all(|&p| p) && increments.iter().all(|i| i.pass);
    Ok(MartingaleReport {
        functional: f.name().to_string(),
        variance: (0..ns).map(|j| m.variance(j)).collect(),
        s,
        mean,
        mean_pass,
        increments,
        verdict: Verdict::from_bool(ok),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub t: f64,
    /// `Ê[G F(L_t)] / Ê[F(L_t)]`.
    pub weighted: Estimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub functional: String,
    pub test: TestFunction,
    pub s: f64,
    pub rows: Vec<ComparisonRow>,
    /// `Ê[G D_s]`.
    pub limit: Estimate,
    pub verdict: Verdict,
}

/// `W_t^F(G)` along `t_list` against `W_∞^F(G) = E[G D_s]`.
pub fn weighted_measure_comparison(
    f: &FunctionalSpec,
    g: TestFunction,
    s: f64,
    t_list: &[f64],
    params: &McParams,
    seed: u64,
) -> Result<ComparisonReport> {
    params.validate()?;
    require_positive("s", s)?;
    let mut ts = t_list.to_vec();
    ts.sort_by(f64::total_cmp);
    if ts.is_empty() || ts[0] <= s {
        return Err(invalid("t_list", "every t must exceed s"));
    }
    let mut rows = Vec::with_capacity(ts.len());
    for (k, &t) in ts.iter().enumerate() {
        let dt = params.dt(t);
        let n = (t / dt).ceil();
        let h = t / n;
        let snap = (s / h).round() * h;
        if (snap - s).abs() > 1e-9 * t {
            return Err(invalid("s", format!("{s} is not on the time grid of horizon {t}")));
        }
        let plan = params.plan(&[f], t)?.with_snapshots(vec![s]);
        let m = integrate_paths(&plan, params.n_paths, sub_seed(seed, 5, &[k as u64]), 2, |obs, out| {
            let v = f.evaluate(&obs[1].field);
            out[0] = g.eval(&obs[0]) * v;
            out[1] = v;
        })?;
        let n = m.count() as f64;
        let r = crate::stats::ratio_estimate(
            m.mean(0),
            m.mean(1),
            m.variance(0) / n,
            m.variance(1) / n,
            m.covariance(0, 1) / n,
        );
        rows.push(ComparisonRow { t, weighted: r });
    }
    let limit = match closed_form_i(f) {
        Ok(_) => {
            let levels = grid_for(&[f], None, 1.0, path_extent(s))?;
            let plan = PathPlan::new(s, params.dt(s), levels, LocalTimeMethod::Bridge);
            let m = integrate_paths(&plan, params.n_paths, sub_seed(seed, 6, &[]), 1, |obs, out| {
                out[0] = g.eval(&obs[0]) * density_of(f, &obs[0]);
            })?;
            m.estimate(0)
        }
        Err(e) => return Err(e),
    };
    let last = rows.last().unwrap().weighted;
    Ok(ComparisonReport {
        functional: f.name().to_string(),
        test: g,
        s,
        rows,
        limit,
        verdict: Verdict::from_bool(last.agrees_with(limit, TOLERANCE_SE)),
    })
}

/// Measured error terms of the cutoff approximation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorTermReport {
    pub c: f64,
    pub t: f64,
    /// `√(2πt) E[F 1{|B_t| ≤ c}]`.
    pub delta1: Estimate,
    /// `√(2πt) E[F 1{∫_{−c}^{c} L_t ≥ t/3}]`.
    pub delta2: Estimate,
    /// Full minus cutoff expectation.
    pub delta: Estimate,
    /// `Δ^{(1)} + Δ^{(2)} − Δ` (nonnegative path by path).
    pub slack: Estimate,
    /// `N_c(h) / (1 + (t/c²)^{1/3})`.
    pub bound_shape: f64,
    pub verdict: Verdict,
}

pub fn error_terms(f: &FunctionalSpec, c: f64, t: f64, params: &McParams, seed: u64) -> Result<ErrorTermReport> {
    params.validate()?;
    require_positive("c", c)?;
    let cert = f
        .certificate()
        .ok_or_else(|| invalid("functional", format!("`{}` carries no certificate", f.name())))?;
    let budget = DominationCertificate {
        c,
        n: cert.n,
        h: cert.h.clone(),
    }
    .budget()?;
    let plan = params.plan(&[f], t)?.with_windows(vec![c]);
    let m = integrate_paths(&plan, params.n_paths, seed, 4, |obs, out| {
        let o = &obs[obs.len() - 1];
        let v = f.evaluate(&o.field);
        let d = v * (1.0 - cutoff_factor(o, c, 0));
        let d1 = if o.x.abs() <= c { v } else { 0.0 };
        let d2 = if o.occupation_fraction(0) >= 1.0 / 3.0 { v } else { 0.0 };
        out[0] = d1;
        out[1] = d2;
        out[2] = d;
        out[3] = d1 + d2 - d;
    })?;
    let k = sqrt_2pi_t(t);
    let slack = m.estimate(3).scale(k);
    Ok(ErrorTermReport {
        c,
        t,
        delta1: m.estimate(0).scale(k),
        delta2: m.estimate(1).scale(k),
        delta: m.estimate(2).scale(k),
        slack,
        bound_shape: budget / (1.0 + (t / (c * c)).cbrt()),
        verdict: Verdict::from_bool(slack.value >= -TOLERANCE_SE * slack.std_error),
    })
}

/// Decay of the Edwards penalization and divergence of `∫ (Y_{l,+})²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdwardsReport {
    pub rows: Vec<ConvergenceRow>,
    pub decreasing: bool,
    pub level: f64,
    pub windows: Vec<f64>,
    pub square_integrals: Vec<Estimate>,
    pub growing: bool,
    pub verdict: Verdict,
}

/// Penalized expectations of `exp(−∫ L²)` along `t_list` (must not increase
/// beyond noise) and `Ê[∫_{−w}^{w} (Y_{l,+})²]` over doubling windows (must
/// increase beyond noise).
pub fn edwards_check(
    t_list: &[f64],
    level: f64,
    windows: &[f64],
    n_samples: u64,
    params: &McParams,
    seed: u64,
) -> Result<EdwardsReport> {
    params.validate()?;
    let f = crate::functionals::builtin_edwards();
    let mut ts = t_list.to_vec();
    ts.sort_by(f64::total_cmp);
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(ts.len());
    for (k, &t) in ts.iter().enumerate() {
        let plan = params.plan(&[&f], t)?;
        let m = integrate_paths(&plan, params.n_paths, sub_seed(seed, 7, &[k as u64]), 1, |obs, out| {
            out[0] = f.evaluate(&obs[0].field);
        })?;
        let e = m.estimate(0).scale(sqrt_2pi_t(t));
        rows.push(ConvergenceRow {
            t,
            estimate: e.value,
            std_error: e.std_error,
            agrees: true,
        });
    }
    let decreasing = rows.windows(2).all(|w| {
        let (a, b) = (Estimate::new(w[0].estimate, w[0].std_error), Estimate::new(w[1].estimate, w[1].std_error));
        b.value <= a.value + TOLERANCE_SE * a.joint_se(b)
    });
    let mut ws = windows.to_vec();
    ws.sort_by(f64::total_cmp);
    let wmax = ws.last().copied().ok_or_else(|| invalid("windows", "must not be empty"))?;
    let grid = Arc::new(SpaceGrid::window(wmax, params.grid_step)?);
    let k = ws.len();
    let m = crate::parallel::reduce_moments(n_samples, k, |i, out| {
        let mut rng = stream(seed, Domain::MeasurePlus, &[u64::MAX, i]);
        let y = sample_y_plus(level, &grid, &mut rng).expect("validated level");
        for (o, &w) in out.iter_mut().zip(&ws) {
            *o = integrate_weighted(&SquaredView(&y), -w, w, |_| 1.0);
        }
    });
    let square_integrals: Vec<Estimate> = (0..k).map(|j| m.estimate(j)).collect();
    let growing = (1..k).all(|j| {
        let d = m.difference(j, j - 1);
        d.value > TOLERANCE_SE * d.std_error
    });
    Ok(EdwardsReport {
        rows,
        decreasing,
        level,
        windows: ws,
        square_integrals,
        growing,
        verdict: Verdict::from_bool(decreasing && growing),
    })
}

/// `y ↦ (l^y)²`.
struct SquaredView<'a>(&'a LocalTimeField);

impl FieldView for SquaredView<'_> {
    fn value_at(&self, y: f64) -> f64 {
        self.0.value_at(y).powi(2)
    }
    fn first_zero_from(&self, y0: f64) -> Option<f64> {
        self.0.first_zero_from(y0)
    }
    fn nodes_in(&self, lo: f64, hi: f64) -> Vec<f64> {
        self.0.nodes_in(lo, hi)
    }
    fn known_range(&self) -> (f64, f64) {
        self.0.known_range()
    }
}

/// Moments of `k` quantities over the two branches of the measure, used by
/// callers that need raw per-branch statistics.
pub fn branch_moments<G>(level: f64, branch: Branch, grid: &Arc<SpaceGrid>, n: u64, seed: u64, k: usize, g: G) -> Moments
where
    G: Fn(&LocalTimeField, &mut [f64]) + Sync + Send,
{
    let domain = match branch {
        Branch::Minus => Domain::MeasureMinus,
        _ => Domain::MeasurePlus,
    };
    crate::parallel::reduce_moments(n, k, |i, out| {
        let mut rng = stream(seed, domain, &[u64::MAX - 1, i]);
        let y = crate::ray_knight::sample_y(level, branch, grid, &mut rng).expect("validated level");
        g(&y, out);
    })
}
