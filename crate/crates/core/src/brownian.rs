//! Brownian paths, their local-time fields, and the penalized expectations
//! `√(2πt) E[F(L_t)]`.
//!
//! A path is generated on a time grid and walked once. Along the way the
//! walker accumulates the local times at a set of levels, either as a kernel
//! occupation density or exactly given the grid values (each step is a
//! Brownian bridge whose local time at a level has an explicit law), the
//! exact running extrema, and the occupation times of windows `[−c, c]`.

use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, require_positive, Error, Result};
use crate::field::{extrema, LocalTimeField, Support};
use crate::functionals::{cutoff_phi, FunctionalSpec};
use crate::grid::SpaceGrid;
use crate::parallel::reduce_moments;
use crate::ray_knight::{sample_y, Branch, IEstimate};
use crate::rng::{stream, Domain, Stream};
use crate::stats::{Estimate, Moments};

/// Steps whose bridge reaches a level with probability below `e^{-36}` are skipped.
const SKIP_EXPONENT: f64 = 36.0;

/// A sampled path on a uniform time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BrownianPath {
    pub dt: f64,
    pub values: Vec<f64>,
    pub seed: u64,
    pub index: u64,
}

impl BrownianPath {
    pub fn horizon(&self) -> f64 {
        self.dt * (self.values.len() - 1) as f64
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.values.len()).map(move |i| i as f64 * self.dt)
    }

    /// The path `−B`.
    pub fn reflected(&self) -> Self {
        Self {
            values: self.values.iter().map(|v| -v).collect(),
            ..self.clone()
        }
    }
}

fn step_count(t: f64, dt: f64) -> Result<u64> {
    require_positive("t", t)?;
    require_positive("dt", dt)?;
    if dt > t {
        return Err(invalid("dt", format!("must not exceed the horizon {t}, got {dt}")));
    }
    Ok((t / dt - 1e-9).ceil().max(1.0) as u64)
}

/// Path number `index` of the experiment `seed`, on `ceil(t/dt)` equal steps.
pub fn simulate_path(t: f64, dt: f64, seed: u64, index: u64) -> Result<BrownianPath> {
    let n = step_count(t, dt)?;
    let h = t / n as f64;
    let sd = h.sqrt();
    let mut rng = stream(seed, Domain::BrownianPath, &[index]);
    let mut values = Vec::with_capacity(n as usize + 1);
    let mut x = 0.0;
    values.push(x);
    for _ in 0..n {
        let z: f64 = rng.sample(StandardNormal);
        x += sd * z;
        values.push(x);
    }
    Ok(BrownianPath { dt: h, values, seed, index })
}

/// Adds the kernel contribution of one linear segment `a → b` of duration `h`.
fn kernel_segment(points: &[f64], acc: &mut [f64], a: f64, b: f64, h: f64, eps: f64) {
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    let first = points.partition_point(|&y| y < lo - eps);
    for (j, &y) in points.iter().enumerate().skip(first) {
        if y - eps > hi {
            break;
        }
        let width = hi - lo;
        acc[j] += if width <= 0.0 {
            h
        } else {
            let overlap = hi.min(y + eps) - lo.max(y - eps);
            h * overlap.max(0.0) / width
        };
    }
}

/// Whether a bandwidth is narrow relative to the typical increment.
pub fn kernel_warning(dt: f64, eps: f64) -> Option<String> {
    (eps < dt.sqrt() / 4.0).then(|| format!("bandwidth {eps} is below sqrt(dt)/4 = {}; expect high variance", dt.sqrt() / 4.0))
}

/// Kernel estimate of a local-time field with a possible bandwidth warning.
#[derive(Debug, Clone)]
pub struct KernelField {
    pub field: LocalTimeField,
    pub warning: Option<String>,
}

/// `(1/2ε) · time spent in [y−ε, y+ε]` at each grid point, with the path
/// interpolated linearly between grid times.
pub fn local_time_field(path: &BrownianPath, grid: &Arc<SpaceGrid>, eps: f64) -> Result<KernelField> {
    require_positive("bandwidth", eps)?;
    let pts = grid.points();
    let mut acc = vec![0.0; pts.len()];
    for w in path.values.windows(2) {
        kernel_segment(pts, &mut acc, w[0], w[1], path.dt, eps);
    }
    acc.iter_mut().for_each(|v| *v /= 2.0 * eps);
    let field = LocalTimeField::new(Arc::clone(grid), acc)?
        .with_horizon(path.horizon())
        .with_bandwidth(eps);
    Ok(KernelField {
        field,
        warning: kernel_warning(path.dt, eps),
    })
}

/// Local time at 0 of a Brownian bridge from `a` to `b` over `h`, given a uniform `u`.
fn bridge_local_time(a: f64, b: f64, h: f64, u: f64) -> f64 {
    let d = b - a;
    ((d * d - 2.0 * h * u.ln()).sqrt() - a.abs() - b.abs()).max(0.0)
}

/// Maximum of a Brownian bridge from `a` to `b` over `h`, given a uniform `u`.
fn bridge_max(a: f64, b: f64, h: f64, u: f64) -> f64 {
    let d = b - a;
    0.5 * (a + b + (d * d - 2.0 * h * u.ln()).sqrt())
}

fn open_uniform<R: Rng>(rng: &mut R) -> f64 {
    let u: f64 = rng.gen();
    if u > 0.0 {
        u
    } else {
        f64::MIN_POSITIVE
    }
}

/// How local times are measured along a path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum LocalTimeMethod {
    /// Occupation density with window half-width `bandwidth`.
    Kernel { bandwidth: f64 },
    /// Exact law given the grid values (Brownian bridge on each step).
    Bridge,
}

/// What to record along each path.
#[derive(Debug, Clone)]
pub struct PathPlan {
    pub horizon: f64,
    pub dt: f64,
    pub levels: Arc<SpaceGrid>,
    pub method: LocalTimeMethod,
    /// Half-widths `c` of the windows whose occupation time is recorded.
    pub windows: Vec<f64>,
    /// Times at which the state is recorded in addition to the horizon.
    pub snapshots: Vec<f64>,
}

impl PathPlan {
    pub fn new(horizon: f64, dt: f64, levels: Arc<SpaceGrid>, method: LocalTimeMethod) -> Self {
        Self {
            horizon,
            dt,
            levels,
            method,
            windows: Vec::new(),
            snapshots: Vec::new(),
        }
    }

    pub fn with_windows(mut self, windows: Vec<f64>) -> Self {
        self.windows = windows;
        self
    }

    pub fn with_snapshots(mut self, snapshots: Vec<f64>) -> Self {
        self.snapshots = snapshots;
        self
    }

    fn schedule(&self) -> Result<(u64, f64, Vec<u64>)> {
        let n = step_count(self.horizon, self.dt)?;
        let h = self.horizon / n as f64;
        if let LocalTimeMethod::Kernel { bandwidth } = self.method {
            require_positive("bandwidth", bandwidth)?;
        }
        for &c in &self.windows {
            require_positive("c", c)?;
        }
        let mut marks = Vec::with_capacity(self.snapshots.len() + 1);
        for &s in &self.snapshots {
            require_positive("s", s)?;
            let k = (s / h).round();
            if (k * h - s).abs() > 1e-9 * self.horizon || k < 1.0 || k as u64 > n {
                return Err(invalid("s", format!("snapshot {s} is not on the time grid of step {h}")));
            }
            if marks.last().is_some_and(|&m| m > k as u64) {
                return Err(invalid("s", "snapshots must be increasing"));
            }
            marks.push(k as u64);
        }
        marks.push(n);
        Ok((n, h, marks))
    }
}

/// The state of a path at one recorded time.
#[derive(Debug, Clone)]
pub struct Observation {
    pub time: f64,
    pub x: f64,
    pub field: LocalTimeField,
    pub max: f64,
    pub min: f64,
    /// Occupation times of the plan's windows.
    pub occupation: Vec<f64>,
}

impl Observation {
    /// `(1/t) ∫_{−c}^{c} L_t^y dy` for window `j`.
    pub fn occupation_fraction(&self, j: usize) -> f64 {
        self.occupation[j] / self.time
    }
}

/// Walks path `index` and returns one observation per snapshot, then the horizon.
pub fn observe_path(plan: &PathPlan, seed: u64, index: u64) -> Result<Vec<Observation>> {
    let (n, h, marks) = plan.schedule()?;
    Ok(walk(plan, n, h, &marks, seed, index))
}

fn walk(plan: &PathPlan, n: u64, h: f64, marks: &[u64], seed: u64, index: u64) -> Vec<Observation> {
    let sd = h.sqrt();
    let mut path_rng = stream(seed, Domain::BrownianPath, &[index]);
    let mut lt_rng = stream(seed, Domain::BridgeRefinement, &[index, 0]);
    let mut ext_rng = stream(seed, Domain::BridgeRefinement, &[index, 1]);
    let pts = plan.levels.points();
    let mut acc = vec![0.0; pts.len()];
    let mut occ = vec![0.0; plan.windows.len()];
    let (mut max, mut min) = (0.0f64, 0.0f64);
    let reach = (0.5 * SKIP_EXPONENT * h).sqrt();
    let mut out = Vec::with_capacity(marks.len());
    let mut next_mark = 0;
    let mut a = 0.0;
    for step in 1..=n {
        let z: f64 = path_rng.sample(StandardNormal);
        let b = a + sd * z;
        match plan.method {
            LocalTimeMethod::Kernel { bandwidth } => kernel_segment(pts, &mut acc, a, b, h, bandwidth),
            LocalTimeMethod::Bridge => {
                let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
                let first = pts.partition_point(|&y| y < lo - reach);
                for (j, &y) in pts.iter().enumerate().skip(first) {
                    if y > hi + reach {
                        break;
                    }
                    let (u, v) = (a - y, b - y);
                    if u * v > 0.0 && 2.0 * u * v / h > SKIP_EXPONENT {
                        continue;
                    }
                    acc[j] += bridge_local_time(u, v, h, open_uniform(&mut lt_rng));
                }
            }
        }
        if 2.0 * (max - a) * (max - b) / h <= SKIP_EXPONENT {
            max = max.max(bridge_max(a, b, h, open_uniform(&mut ext_rng)));
        }
        if 2.0 * (a - min) * (b - min) / h <= SKIP_EXPONENT {
            min = min.min(-bridge_max(-a, -b, h, open_uniform(&mut ext_rng)));
        }
        max = max.max(b);
        min = min.min(b);
        for (o, &c) in occ.iter_mut().zip(&plan.windows) {
            *o += h * segment_fraction_inside(a, b, c);
        }
        a = b;
        while next_mark < marks.len() && marks[next_mark] == step {
            out.push(snapshot(plan, step as f64 * h, a, &acc, max, min, &occ));
            next_mark += 1;
        }
    }
    out
}

fn snapshot(plan: &PathPlan, time: f64, x: f64, acc: &[f64], max: f64, min: f64, occ: &[f64]) -> Observation {
    let (values, support) = match plan.method {
        LocalTimeMethod::Kernel { bandwidth } => (acc.iter().map(|v| v / (2.0 * bandwidth)).collect(), None),
        LocalTimeMethod::Bridge => (acc.to_vec(), Some(Support { lo: min, hi: max })),
    };
    let mut field = LocalTimeField::from_parts(Arc::clone(&plan.levels), values, support).with_horizon(time);
    if let LocalTimeMethod::Kernel { bandwidth } = plan.method {
        field = field.with_bandwidth(bandwidth);
    }
    Observation {
        time,
        x,
        field,
        max,
        min,
        occupation: occ.to_vec(),
    }
}

/// Fraction of a linear segment `a → b` lying in `[−c, c]`.
fn segment_fraction_inside(a: f64, b: f64, c: f64) -> f64 {
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    if hi - lo <= 0.0 {
        return if lo.abs() <= c { 1.0 } else { 0.0 };
    }
    ((hi.min(c) - lo.max(-c)).max(0.0)) / (hi - lo)
}

/// Joint moments of `k` path statistics over `n_paths` paths.
pub fn integrate_paths<G>(plan: &PathPlan, n_paths: u64, seed: u64, k: usize, g: G) -> Result<Moments>
where
    G: Fn(&[Observation], &mut [f64]) + Sync + Send,
{
    if n_paths == 0 {
        return Err(invalid("n_paths", "must be positive"));
    }
    let (n, h, marks) = plan.schedule()?;
    let m = reduce_moments(n_paths, k, |i, out| {
        let obs = walk(plan, n, h, &marks, seed, i);
        g(&obs, out);
        for v in out.iter_mut() {
            if !v.is_finite() {
                *v = f64::NAN;
            }
        }
    });
    for j in 0..k {
        if !m.mean(j).is_finite() {
            return Err(Error::NonFinite(format!("path statistic {j}")));
        }
    }
    Ok(m)
}

fn scaled(m: &Moments, j: usize, t: f64) -> IEstimate {
    let e = m.estimate(j).scale((2.0 * std::f64::consts::PI * t).sqrt());
    IEstimate {
        value: e.value,
        std_error: e.std_error,
        l_truncation: f64::INFINITY,
        samples: m.count(),
        tail_diagnostic: None,
    }
}

/// `√(2πt) Ê[F(L_t)]`.
pub fn penalized_expectation(f: &FunctionalSpec, plan: &PathPlan, n_paths: u64, seed: u64) -> Result<IEstimate> {
    let m = integrate_paths(plan, n_paths, seed, 1, |obs, out| {
        out[0] = f.evaluate(&obs[obs.len() - 1].field);
    })?;
    Ok(scaled(&m, 0, plan.horizon))
}

/// The cutoff factor `1{|B_t| ≥ c} φ((1/t)∫_{−c}^{c} L_t^y dy)` of window `j`.
pub fn cutoff_factor(obs: &Observation, c: f64, j: usize) -> f64 {
    if obs.x.abs() >= c {
        cutoff_phi(obs.occupation_fraction(j))
    } else {
        0.0
    }
}

/// `√(2πt) Ê[F(L_t) 1{|B_t| ≥ c} φ((1/t)∫_{−c}^{c} L_t^y dy)]`.
pub fn cutoff_expectation(f: &FunctionalSpec, c: f64, plan: &PathPlan, n_paths: u64, seed: u64) -> Result<IEstimate> {
    let j = plan
        .windows
        .iter()
        .position(|&w| w == c)
        .ok_or_else(|| invalid("c", format!("window {c} is not recorded by the plan")))?;
    let m = integrate_paths(plan, n_paths, seed, 1, |obs, out| {
        let o = &obs[obs.len() - 1];
        out[0] = f.evaluate(&o.field) * cutoff_factor(o, c, j);
    })?;
    Ok(scaled(&m, 0, plan.horizon))
}

/// Which process a ratio statistic is taken from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum TailSource {
    Brownian,
    Y { level: f64, branch: Branch },
}

/// Empirical survival `P(ratio ≥ a)` with the explicit bound at each `a`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailCurve {
    pub source: TailSource,
    pub a: Vec<f64>,
    pub survival: Vec<Estimate>,
    pub bound: Vec<f64>,
    /// Smallest `a` at which the bound is asserted.
    pub bound_from: f64,
}

impl TailCurve {
    /// Survival below the bound at every asserted `a`.
    pub fn below_bound(&self) -> bool {
        self.a
            .iter()
            .zip(&self.survival)
            .zip(&self.bound)
            .filter(|((a, _), _)| **a >= self.bound_from)
            .all(|((_, s), b)| s.value <= *b)
    }
}

/// `524 e^{−a/512}`.
pub fn brownian_ratio_bound(a: f64) -> f64 {
    524.0 * (-a / 512.0).exp()
}

/// `20 e^{−(a + l/c)/1024}`.
pub fn y_ratio_bound(a: f64, l: f64, c: f64) -> f64 {
    20.0 * (-(a + l / c) / 1024.0).exp()
}

fn survival(m: &Moments, k: usize) -> Vec<Estimate> {
    (0..k).map(|j| m.estimate(j)).collect()
}

/// `(sup + c)/(inf + c)` over `[−c, c]`.
fn window_ratio(field: &LocalTimeField, c: f64) -> f64 {
    let (inf, sup) = extrema(field, -c, c);
    (sup + c) / (inf + c)
}

/// Survival of `(Σ_t^c + c)/(σ_t^c + c)` for Brownian local times (bridge
/// local times on a level grid of step `level_step`), and of
/// `(Θ + c)/(θ + c)` for `Y_{l,±}` at each level in `y_levels`.
pub fn tail_ratio_statistics(
    c: f64,
    t: f64,
    a_grid: &[f64],
    n_paths: u64,
    dt: f64,
    level_step: f64,
    y_levels: &[f64],
    seed: u64,
) -> Result<Vec<TailCurve>> {
    require_positive("c", c)?;
    let grid = Arc::new(SpaceGrid::window(c, level_step)?);
    let plan = PathPlan::new(t, dt, Arc::clone(&grid), LocalTimeMethod::Bridge);
    let k = a_grid.len();
    let m = integrate_paths(&plan, n_paths, seed, k, |obs, out| {
        let r = window_ratio(&obs[0].field, c);
        for (o, &a) in out.iter_mut().zip(a_grid) {
            *o = (r >= a) as u8 as f64;
        }
    })?;
    let mut curves = vec![TailCurve {
        source: TailSource::Brownian,
        a: a_grid.to_vec(),
        survival: survival(&m, k),
        bound: a_grid.iter().map(|&a| brownian_ratio_bound(a)).collect(),
        bound_from: 8.0,
    }];
    for (li, &l) in y_levels.iter().enumerate() {
        for (bi, branch) in [Branch::Plus, Branch::Minus].into_iter().enumerate() {
            let m = reduce_moments(n_paths, k, |i, out| {
                let mut rng: Stream = stream(seed, Domain::Auxiliary, &[li as u64, bi as u64, i]);
                let field = sample_y(l, branch, &grid, &mut rng).expect("validated level");
                let r = window_ratio(&field, c);
                for (o, &a) in out.iter_mut().zip(a_grid) {
                    *o = (r >= a) as u8 as f64;
                }
            });
            curves.push(TailCurve {
                source: TailSource::Y { level: l, branch },
                a: a_grid.to_vec(),
                survival: survival(&m, k),
                bound: a_grid.iter().map(|&a| y_ratio_bound(a, l, c)).collect(),
                bound_from: 4.0,
            });
        }
    }
    Ok(curves)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::FieldView;

    #[test]
    fn path_starts_at_zero_and_has_requested_length() {
        let p = simulate_path(1.0, 0.01, 3, 0).unwrap();
        assert_eq!(p.values[0], 0.0);
        assert_eq!(p.values.len(), 101);
        assert!((p.horizon() - 1.0).abs() < 1e-12);
        assert!(simulate_path(1.0, 2.0, 3, 0).is_err());
        assert!(simulate_path(1.0, 0.0, 3, 0).is_err());
    }

    #[test]
    fn terminal_variance_is_horizon() {
        let mut m = Moments::new(1);
        for i in 0..20_000 {
            let p = simulate_path(2.0, 0.5, 4, i).unwrap();
            m.push(&[p.values.last().unwrap().powi(2)]);
        }
        assert!(m.estimate(0).agrees_with_value(2.0, 4.0), "{:?}", m.estimate(0));
    }

    #[test]
    fn kernel_occupation_identity() {
        let grid = Arc::new(SpaceGrid::uniform(-8.0, 8.0, 0.005).unwrap());
        for i in 0..5 {
            let p = simulate_path(1.0, 1e-4, 5, i).unwrap();
            let k = local_time_field(&p, &grid, 0.02).unwrap();
            assert!(k.warning.is_none());
            assert!((k.field.total_mass() - 1.0).abs() < 0.02, "{}", k.field.total_mass());
        }
    }

    #[test]
    fn kernel_is_zero_away_from_path() {
        let grid = Arc::new(SpaceGrid::uniform(-20.0, 20.0, 0.5).unwrap());
        let p = simulate_path(1.0, 1e-3, 6, 0).unwrap();
        let (lo, hi) = p.values.iter().fold((0.0f64, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
        let k = local_time_field(&p, &grid, 0.1).unwrap();
        for (&y, &v) in grid.points().iter().zip(k.field.values()) {
            if y < lo - 0.1 || y > hi + 0.1 {
                assert_eq!(v, 0.0);
            }
        }
        assert!(local_time_field(&p, &grid, 0.001).unwrap().warning.is_some());
    }

    #[test]
    fn kernel_bias_shrinks_with_bandwidth() {
        // E[L_1^0] = sqrt(2/pi); the kernel mean is biased low by O(eps).
        let grid = Arc::new(SpaceGrid::uniform(-1.0, 1.0, 1.0 / 64.0).unwrap());
        let eps = [0.2, 0.1, 0.05];
        let mut m = Moments::new(eps.len());
        for i in 0..4000 {
            let p = simulate_path(1.0, 1e-3, 8, i).unwrap();
            let v: Vec<f64> = eps.iter().map(|&e| local_time_field(&p, &grid, e).unwrap().field.value_at(0.0)).collect();
            m.push(&v);
        }
        let exact = (2.0 / std::f64::consts::PI).sqrt();
        assert!(m.mean(0) < m.mean(1) && m.mean(1) < m.mean(2), "{} {} {}", m.mean(0), m.mean(1), m.mean(2));
        let last = m.estimate(2);
        assert!((last.value - exact).abs() <= 3.0 * last.std_error + eps[2], "{last:?}");
    }

    #[test]
    fn kernel_reflection_is_exact() {
        let grid = Arc::new(SpaceGrid::uniform(-3.0, 3.0, 1.0 / 32.0).unwrap());
        let p = simulate_path(1.0, 1e-3, 7, 0).unwrap();
        let a = local_time_field(&p, &grid, 0.05).unwrap().field;
        let b = local_time_field(&p.reflected(), &grid, 0.05).unwrap().field;
        for &y in grid.points() {
            assert_eq!(a.value_at(y), b.value_at(-y));
        }
    }

    #[test]
    fn bridge_local_time_at_zero_has_reflected_normal_law() {
        // L_t^0 from a single step must match |N(0, t)|: E = √(2t/π).
        let grid = Arc::new(SpaceGrid::new(vec![0.0]).unwrap());
        let plan = PathPlan::new(2.0, 2.0, grid, LocalTimeMethod::Bridge);
        let m = integrate_paths(&plan, 100_000, 8, 2, |obs, out| {
            let l = obs[0].field.value_at(0.0);
            out[0] = l;
            out[1] = obs[0].max;
        })
        .unwrap();
        let want = (4.0 / std::f64::consts::PI).sqrt();
        assert!(m.estimate(0).agrees_with_value(want, 4.0), "{:?}", m.estimate(0));
        assert!(m.estimate(1).agrees_with_value(want, 4.0), "{:?}", m.estimate(1));
    }

    #[test]
    fn snapshots_are_ordered_and_consistent() {
        let grid = Arc::new(SpaceGrid::new(vec![-0.5, 0.0, 0.5]).unwrap());
        let plan = PathPlan::new(2.0, 0.25, grid, LocalTimeMethod::Bridge)
            .with_windows(vec![1.0])
            .with_snapshots(vec![0.5, 1.0]);
        let obs = observe_path(&plan, 9, 3).unwrap();
        assert_eq!(obs.len(), 3);
        assert_eq!(obs.iter().map(|o| o.time).collect::<Vec<_>>(), vec![0.5, 1.0, 2.0]);
        for w in obs.windows(2) {
            assert!(w[1].max >= w[0].max && w[1].min <= w[0].min);
            assert!(w[1].field.value_at(0.0) >= w[0].field.value_at(0.0));
            assert!(w[1].occupation[0] >= w[0].occupation[0]);
        }
        let bad = plan.clone().with_snapshots(vec![0.3]);
        assert!(observe_path(&bad, 9, 3).is_err());
    }

    #[test]
    fn cutoff_never_exceeds_full_expectation() {
        let f = crate::functionals::builtin_local_time_zero(crate::functionals::Profile::exp(1.0, 1.0).unwrap()).unwrap();
        let grid = Arc::new(SpaceGrid::new(vec![0.0]).unwrap());
        let plan = PathPlan::new(4.0, 4.0 / 64.0, grid, LocalTimeMethod::Bridge).with_windows(vec![1.0]);
        let full = penalized_expectation(&f, &plan, 2000, 1).unwrap();
        let cut = cutoff_expectation(&f, 1.0, &plan, 2000, 1).unwrap();
        assert!(cut.value <= full.value);
    }

    #[test]
    fn ratio_survival_is_one_at_one() {
        let curves = tail_ratio_statistics(1.0, 1.0, &[1.0, 8.0], 200, 1.0 / 64.0, 1.0 / 16.0, &[0.5], 2).unwrap();
        assert_eq!(curves.len(), 3);
        for c in &curves {
            assert_eq!(c.survival[0].value, 1.0);
            assert!(c.below_bound());
        }
    }
}
