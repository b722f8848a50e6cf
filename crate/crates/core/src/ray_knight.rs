//! The two-sided processes `Y_{l,+}`, `Y_{l,−}`, `Y_{l,a}` and stratified
//! estimators of the σ-finite measure `I`.
//!
//! Each side of a sample is walked outward from 0 with exact squared Bessel
//! transitions, so sparse grids carry no discretization bias. The side that
//! starts as BESQ(2) and the side that is BESQ(0) from the origin draw from
//! separate sub-streams: mirroring a sample and enlarging its grid are then
//! exact path-by-path operations. The zero set is tracked exactly, including
//! beyond the last grid point.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::besq::{conditional_absorption, sample_raw, zero_hitting_raw, Dimension};
use crate::error::{invalid, require_nonnegative, require_positive, Error, Result};
use crate::field::{integrate_weighted, FieldView, LocalTimeField, Support};
use crate::functionals::{cutoff_phi, FunctionalSpec};
use crate::grid::SpaceGrid;
use crate::parallel::ordered_map;
use crate::rng::{stream, Domain, Stream};
use crate::stats::{ratio_estimate, Estimate, Moments};

/// Which process a sample is drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Plus,
    Minus,
    /// `Y_{l,a}`: BESQ(2) between 0 and `a`, BESQ(0) elsewhere.
    At(f64),
}

impl Branch {
    /// Signed switch point: `+∞` for `Plus`, `−∞` for `Minus`.
    fn switch(self) -> f64 {
        match self {
            Branch::Plus => f64::INFINITY,
            Branch::Minus => f64::NEG_INFINITY,
            Branch::At(a) => a,
        }
    }
}

/// Walks one side outward from 0 through `distances` (increasing, > 0):
/// BESQ(2) up to distance `switch`, BESQ(0) beyond. Returns the values and
/// the distance of the first zero (`∞` if the side never vanishes).
fn walk_side<R: Rng>(level: f64, distances: &[f64], switch: f64, rng: &mut R) -> (Vec<f64>, f64) {
    let mut values = Vec::with_capacity(distances.len());
    let (mut pos, mut v) = (0.0, level);
    let mut end = if switch <= 0.0 && level == 0.0 { Some(0.0) } else { None };
    for &p in distances {
        if end.is_some() {
            values.push(0.0);
            continue;
        }
        if pos < switch && switch < p {
            v = sample_raw(Dimension::Two, v, switch - pos, rng);
            pos = switch;
        }
        if p <= switch {
            v = sample_raw(Dimension::Two, v, p - pos, rng);
        } else {
            let next = sample_raw(Dimension::Zero, v, p - pos, rng);
            if next == 0.0 {
                end = Some(if v == 0.0 { pos } else { pos + conditional_absorption(v, p - pos, rng) });
            }
            v = next;
        }
        pos = p;
        values.push(v);
    }
    let end = end.unwrap_or_else(|| {
        if switch.is_infinite() {
            return f64::INFINITY;
        }
        if pos < switch {
            v = sample_raw(Dimension::Two, v, switch - pos, rng);
            pos = switch;
        }
        if v == 0.0 {
            pos
        } else {
            pos + zero_hitting_raw(v, rng)
        }
    });
    (values, end)
}

/// Draws a two-sided sample of the given branch on `grid`.
pub fn sample_y<R: Rng + ?Sized>(level: f64, branch: Branch, grid: &Arc<SpaceGrid>, rng: &mut R) -> Result<LocalTimeField> {
    require_nonnegative("level", level)?;
    let a = branch.switch();
    if a.is_nan() {
        return Err(invalid("a", "switch point is NaN"));
    }
    let mut primary = Stream::seed_from_u64(rng.gen());
    let mut secondary = Stream::seed_from_u64(rng.gen());
    let pts = grid.points();
    let z = grid.zero_index();
    let right: Vec<f64> = pts[z + 1..].to_vec();
    let left: Vec<f64> = pts[..z].iter().rev().map(|p| -p).collect();

    let forward = a >= 0.0;
    let (first, second) = if forward { (&right, &left) } else { (&left, &right) };
    let (v1, e1) = walk_side(level, first, a.abs(), &mut primary);
    let (v2, e2) = walk_side(level, second, 0.0, &mut secondary);
    let (vr, er, vl, el) = if forward { (v1, e1, v2, e2) } else { (v2, e2, v1, e1) };

    let mut values: Vec<f64> = vl.into_iter().rev().collect();
    values.push(level);
    values.extend(vr);
    Ok(LocalTimeField::from_parts(
        Arc::clone(grid),
        values,
        Some(Support { lo: -el, hi: er }),
    ))
}

/// `Y_{l,+}`: BESQ(2) for `y > 0`, independent BESQ(0) for `y < 0`.
pub fn sample_y_plus<R: Rng + ?Sized>(level: f64, grid: &Arc<SpaceGrid>, rng: &mut R) -> Result<LocalTimeField> {
    sample_y(level, Branch::Plus, grid, rng)
}

/// `Y_{l,−}`, the mirror image of `Y_{l,+}`.
pub fn sample_y_minus<R: Rng + ?Sized>(level: f64, grid: &Arc<SpaceGrid>, rng: &mut R) -> Result<LocalTimeField> {
    sample_y(level, Branch::Minus, grid, rng)
}

/// `Y_{l,a}`. Transitions are split exactly at `a`, so `a` need not be a grid point.
pub fn sample_y_a<R: Rng + ?Sized>(level: f64, a: f64, grid: &Arc<SpaceGrid>, rng: &mut R) -> Result<LocalTimeField> {
    if !a.is_finite() {
        return Err(invalid("a", format!("must be finite, got {a}")));
    }
    sample_y(level, Branch::At(a), grid, rng)
}

/// One draw from the measure `I` with the window quantities of the
/// cutoff identity.
#[derive(Debug, Clone)]
pub struct MeasureSample {
    pub level: f64,
    pub branch: Branch,
    pub field: LocalTimeField,
    /// `𝓘 = ∫_{−c}^{c} Y^y dy` (trapezoid on the grid).
    pub weight_i: f64,
    /// `𝒴 = (Y^c + Y^{−c}) / 2`.
    pub weight_y: f64,
}

impl MeasureSample {
    pub fn new(level: f64, branch: Branch, field: LocalTimeField, c: f64) -> Self {
        let (weight_i, weight_y) = window_weights(&field, c);
        Self {
            level,
            branch,
            field,
            weight_i,
            weight_y,
        }
    }

    /// The cutoff weight at horizon `t`.
    pub fn weight(&self, t: f64) -> f64 {
        cutoff_weight(self.weight_i, self.weight_y, t)
    }
}

/// `(𝓘, 𝒴)` of a field over `[−c, c]`.
pub fn window_weights(field: &dyn FieldView, c: f64) -> (f64, f64) {
    let i = integrate_weighted(field, -c, c, |_| 1.0);
    let y = 0.5 * (field.value_at(c) + field.value_at(-c));
    (i, y)
}

/// `φ(𝓘/t) e^{−𝒴²/2(t−𝓘)} / √(1 − 𝓘/t)`, and 0 once `𝓘 ≥ 2t/3`.
pub fn cutoff_weight(i: f64, y: f64, t: f64) -> f64 {
    if i >= 2.0 * t / 3.0 {
        return 0.0;
    }
    let r = i / t;
    cutoff_phi(r) * (-y * y / (2.0 * (t - i))).exp() / (1.0 - r).sqrt()
}

/// Stratification of the level integral `∫_0^∞ dl`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasureConfig {
    pub l_max: f64,
    pub n_levels: u64,
    pub n_mc: u64,
}

impl Default for MeasureConfig {
    fn default() -> Self {
        Self {
            l_max: 40.0,
            n_levels: 400,
            n_mc: 1000,
        }
    }
}

impl MeasureConfig {
    pub fn validate(&self) -> Result<()> {
        require_positive("l_max", self.l_max)?;
        if self.n_levels == 0 {
            return Err(invalid("n_levels", "must be positive"));
        }
        if self.n_mc == 0 {
            return Err(invalid("n_mc", "must be positive"));
        }
        Ok(())
    }

    pub fn step(&self) -> f64 {
        self.l_max / self.n_levels as f64
    }

    /// Level at position `u ∈ [0, 1)` inside stratum `k`.
    pub fn level(&self, k: u64, u: f64) -> f64 {
        (k as f64 + u) * self.step()
    }
}

/// An estimate of `I(F)` or of a weighted variant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IEstimate {
    pub value: f64,
    pub std_error: f64,
    pub l_truncation: f64,
    pub samples: u64,
    /// `c·h(l_max) + ∫_{l_max}^∞ h` for certified functionals (diagnostic only).
    pub tail_diagnostic: Option<f64>,
}

impl IEstimate {
    pub fn as_estimate(&self) -> Estimate {
        Estimate::new(self.value, self.std_error)
    }
}

/// Joint estimates of `k` integrals `∫ dl (E[g_j(Y_{l,+})] + E[g_j(Y_{l,−})])`
/// with their covariance matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureIntegral {
    k: usize,
    values: Vec<f64>,
    cov: Vec<f64>,
    samples: u64,
    l_max: f64,
}

impl MeasureIntegral {
    pub fn dim(&self) -> usize {
        self.k
    }

    pub fn value(&self, j: usize) -> f64 {
        self.values[j]
    }

    pub fn covariance(&self, i: usize, j: usize) -> f64 {
        self.cov[i * self.k + j]
    }

    pub fn samples(&self) -> u64 {
        self.samples
    }

    pub fn estimate(&self, j: usize) -> IEstimate {
        IEstimate {
            value: self.values[j],
            std_error: self.covariance(j, j).max(0.0).sqrt(),
            l_truncation: self.l_max,
            samples: self.samples,
            tail_diagnostic: None,
        }
    }

    /// `value(i) / value(j)` with delta-method standard error.
    pub fn ratio(&self, i: usize, j: usize) -> Estimate {
        ratio_estimate(
            self.values[i],
            self.values[j],
            self.covariance(i, i),
            self.covariance(j, j),
            self.covariance(i, j),
        )
    }

    /// `value(i) − value(j)` with its standard error.
    pub fn difference(&self, i: usize, j: usize) -> Estimate {
        let var = self.covariance(i, i) + self.covariance(j, j) - 2.0 * self.covariance(i, j);
        Estimate::new(self.values[i] - self.values[j], var.max(0.0).sqrt())
    }
}

/// Stratified estimator over both branches. Replicate `r` of stratum `k` of
/// branch `±` draws its level uniformly in `[kΔl, (k+1)Δl)` and then its
/// field, both from the stream derived from `(seed, branch, k, r)`. `g`
/// writes `k` outputs per sample.
pub fn integrate_measure<G>(config: &MeasureConfig, grid: &Arc<SpaceGrid>, seed: u64, k: usize, g: G) -> Result<MeasureIntegral>
where
    G: Fn(&LocalTimeField, &mut [f64]) + Sync + Send,
{
    config.validate()?;
    let strata = config.n_levels;
    let per_stratum: Vec<Result<Moments>> = ordered_map(2 * strata, |s| {
        let (branch, domain) = if s < strata {
            (Branch::Plus, Domain::MeasurePlus)
        } else {
            (Branch::Minus, Domain::MeasureMinus)
        };
        let stratum = s % strata;
        let mut m = Moments::new(k);
        let mut out = vec![0.0; k];
        for r in 0..config.n_mc {
            let mut rng = stream(seed, domain, &[stratum, r]);
            let level = config.level(stratum, rng.gen::<f64>());
            let field = sample_y(level, branch, grid, &mut rng)?;
            out.iter_mut().for_each(|x| *x = 0.0);
            g(&field, &mut out);
            if let Some(bad) = out.iter().position(|x| !x.is_finite()) {
                return Err(Error::NonFinite(format!(
                    "output {bad} at level {level} ({branch:?}, replicate {r})"
                )));
            }
            m.push(&out);
        }
        Ok(m)
    });
    let dl = config.step();
    let n = config.n_mc as f64;
    let mut values = vec![0.0; k];
    let mut cov = vec![0.0; k * k];
    for m in per_stratum {
        let m = m?;
        for i in 0..k {
            values[i] += dl * m.mean(i);
            for j in 0..k {
                cov[i * k + j] += dl * dl * m.covariance(i, j) / n;
            }
        }
    }
    Ok(MeasureIntegral {
        k,
        values,
        cov,
        samples: 2 * strata * config.n_mc,
        l_max: config.l_max,
    })
}

/// Sampling grid for a set of functionals: every level they read, a
/// uniform grid of step `step` over every window they read (and over
/// `[−c, c]` when `c` is given), and `[−whole, whole]` for functionals that
/// read the entire field.
pub fn grid_for(fs: &[&FunctionalSpec], c: Option<f64>, step: f64, whole: f64) -> Result<Arc<SpaceGrid>> {
    require_positive("grid_step", step)?;
    let mut windows: Vec<(f64, f64)> = c.map(|c| (-c, c)).into_iter().collect();
    let mut points = vec![0.0];
    for f in fs {
        let r = f.reads();
        points.extend(r.levels.iter().copied());
        windows.extend(r.window);
        if r.whole {
            windows.push((-whole, whole));
        }
    }
    for (a, b) in windows {
        if !(a.is_finite() && b.is_finite() && a <= b) {
            return Err(invalid("window", format!("[{a}, {b}] is not a finite interval")));
        }
        let lo = (a / step).floor() as i64;
        let hi = (b / step).ceil() as i64;
        points.extend((lo..=hi).map(|k| k as f64 * step));
        points.push(a);
        points.push(b);
    }
    Ok(Arc::new(SpaceGrid::from_points(&points)?))
}

fn tail_diagnostic(f: &FunctionalSpec, l_max: f64) -> Option<f64> {
    let cert = f.certificate()?;
    let h = &cert.h;
    let tail = crate::quadrature::integrate_half_line(|x| h.eval(l_max + x), 1e-12).ok()?;
    Some(cert.c * h.eval(l_max) + tail)
}

/// `Î(F) = Î_+(F) + Î_−(F)`.
pub fn estimate_i(f: &FunctionalSpec, config: &MeasureConfig, grid: &Arc<SpaceGrid>, seed: u64) -> Result<IEstimate> {
    let m = integrate_measure(config, grid, seed, 1, |field, out| out[0] = f.evaluate(field))?;
    let mut e = m.estimate(0);
    e.tail_diagnostic = tail_diagnostic(f, config.l_max);
    Ok(e)
}

/// `Î_{c,t}(F)` for each `t` in `ts`, followed by `Î(F)` from the same samples.
pub fn estimate_i_ct_many(
    f: &FunctionalSpec,
    c: f64,
    ts: &[f64],
    config: &MeasureConfig,
    grid: &Arc<SpaceGrid>,
    seed: u64,
) -> Result<MeasureIntegral> {
    require_positive("c", c)?;
    for &t in ts {
        require_positive("t", t)?;
    }
    if !grid.spans(-c, c) {
        return Err(Error::Grid(format!("grid does not span [-{c}, {c}]")));
    }
    let n = ts.len();
    integrate_measure(config, grid, seed, n + 1, |field, out| {
        let v = f.evaluate(field);
        let (i, y) = window_weights(field, c);
        for (o, &t) in out.iter_mut().zip(ts) {
            *o = v * cutoff_weight(i, y, t);
        }
        out[n] = v;
    })
}

/// `Î_{c,t}(F)`.
pub fn estimate_i_ct(
    f: &FunctionalSpec,
    c: f64,
    t: f64,
    config: &MeasureConfig,
    grid: &Arc<SpaceGrid>,
    seed: u64,
) -> Result<IEstimate> {
    Ok(estimate_i_ct_many(f, c, &[t], config, grid, seed)?.estimate(0))
}
