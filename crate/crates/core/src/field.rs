//! Local-time fields `y ↦ l^y` and views used to evaluate functionals.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::SpaceGrid;

/// Grid values at or below this are treated as zero when no exact support
/// is known (guards float noise of kernel estimates).
pub const ZERO_THRESHOLD: f64 = 1e-12;

/// The field is positive on the open interval `(lo, hi)` and zero outside.
/// Either end may be infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Support {
    pub lo: f64,
    pub hi: f64,
}

impl Support {
    pub fn contains(&self, y: f64) -> bool {
        y > self.lo && y < self.hi
    }
}

/// Read access to a nonnegative function of the space variable.
pub trait FieldView: Sync {
    /// `l^y`; NaN where the value is not determined by the available data.
    fn value_at(&self, y: f64) -> f64;

    /// `inf{y >= y0 : l^y = 0}` (possibly `+∞`); `None` if undetermined.
    fn first_zero_from(&self, y0: f64) -> Option<f64>;

    /// Sorted abscissae in `[lo, hi]` at which the field is known, always
    /// including `lo` and `hi`.
    fn nodes_in(&self, lo: f64, hi: f64) -> Vec<f64>;

    /// Interval on which values are known without support information.
    fn known_range(&self) -> (f64, f64);
}

/// A sampled or estimated field on a [`SpaceGrid`], optionally with its exact
/// support (known for squared Bessel samples and exact Brownian extrema).
#[derive(Debug, Clone, PartialEq)]
pub struct LocalTimeField {
    grid: Arc<SpaceGrid>,
    values: Vec<f64>,
    support: Option<Support>,
    horizon: Option<f64>,
    bandwidth: Option<f64>,
}

impl LocalTimeField {
    pub fn new(grid: Arc<SpaceGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Grid(format!(
                "{} values for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Grid("field values must be finite and nonnegative".into()));
        }
        Ok(Self {
            grid,
            values,
            support: None,
            horizon: None,
            bandwidth: None,
        })
    }

    pub(crate) fn from_parts(grid: Arc<SpaceGrid>, values: Vec<f64>, support: Option<Support>) -> Self {
        debug_assert_eq!(grid.len(), values.len());
        Self {
            grid,
            values,
            support,
            horizon: None,
            bandwidth: None,
        }
    }

    /// The identically zero field.
    pub fn zero() -> Self {
        let grid = Arc::new(SpaceGrid::new(vec![0.0]).expect("single-point grid"));
        Self::from_parts(grid, vec![0.0], Some(Support { lo: 0.0, hi: 0.0 }))
    }

    pub fn with_support(mut self, support: Support) -> Self {
        self.support = Some(support);
        self
    }

    pub fn with_horizon(mut self, t: f64) -> Self {
        self.horizon = Some(t);
        self
    }

    pub fn with_bandwidth(mut self, eps: f64) -> Self {
        self.bandwidth = Some(eps);
        self
    }

    pub fn grid(&self) -> &SpaceGrid {
        &self.grid
    }

    pub fn shared_grid(&self) -> &Arc<SpaceGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn support(&self) -> Option<Support> {
        self.support
    }

    pub fn horizon(&self) -> Option<f64> {
        self.horizon
    }

    pub fn bandwidth(&self) -> Option<f64> {
        self.bandwidth
    }

    /// Value at the grid point equal to `y`.
    pub fn at_point(&self, y: f64) -> Option<f64> {
        self.grid.index_of(y).map(|i| self.values[i])
    }

    /// `∫ l^y dy` over the grid by the trapezoid rule.
    pub fn total_mass(&self) -> f64 {
        let p = self.grid.points();
        p.windows(2)
            .zip(self.values.windows(2))
            .map(|(y, v)| 0.5 * (v[0] + v[1]) * (y[1] - y[0]))
            .sum()
    }

    /// Field of `y ↦ l^{-y}`.
    pub fn mirrored(&self) -> Self {
        let grid = Arc::new(self.grid.mirrored());
        let values = self.values.iter().rev().copied().collect();
        Self {
            grid,
            values,
            support: self.support.map(|s| Support { lo: -s.hi, hi: -s.lo }),
            horizon: self.horizon,
            bandwidth: self.bandwidth,
        }
    }

    /// Materializes `y ↦ self(y) + other(y − offset)` on the union of both grids.
    pub fn superpose(&self, other: &LocalTimeField, offset: f64) -> Result<Self> {
        let shifted: Vec<f64> = other.grid.points().iter().map(|p| p + offset).collect();
        let lo = self.grid.lo().max(shifted[0]);
        let hi = self.grid.hi().min(*shifted.last().unwrap());
        let view = ShiftedField::new(self, other, offset);
        let mut pts: Vec<f64> = self
            .grid
            .points()
            .iter()
            .chain(shifted.iter())
            .copied()
            .filter(|p| *p >= lo && *p <= hi)
            .collect();
        pts.push(0.0);
        let grid = SpaceGrid::from_points(&pts)?;
        let values: Vec<f64> = grid.points().iter().map(|&y| view.value_at(y)).collect();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Grid("superposition reads outside known data".into()));
        }
        let support = match (self.support, other.support) {
            (Some(a), Some(b)) => {
                let (blo, bhi) = (b.lo + offset, b.hi + offset);
                let overlap = a.lo.max(blo) <= a.hi.min(bhi);
                overlap.then(|| Support {
                    lo: a.lo.min(blo),
                    hi: a.hi.max(bhi),
                })
            }
            _ => None,
        };
        Ok(Self::from_parts(Arc::new(grid), values, support))
    }

    fn interpolate(&self, y: f64) -> f64 {
        let p = self.grid.points();
        if y < p[0] || y > p[p.len() - 1] {
            return f64::NAN;
        }
        let i = p.partition_point(|&q| q < y);
        if i < p.len() && p[i] == y {
            return self.values[i];
        }
        let (mut a, mut va) = (p[i - 1], self.values[i - 1]);
        let (mut b, mut vb) = (p[i], self.values[i]);
        if let Some(s) = self.support {
            if s.hi > a && s.hi < b {
                b = s.hi;
                vb = 0.0;
            }
            if s.lo > a && s.lo < b {
                a = s.lo;
                va = 0.0;
            }
        }
        va + (vb - va) * (y - a) / (b - a)
    }
}

impl FieldView for LocalTimeField {
    fn value_at(&self, y: f64) -> f64 {
        if let Some(s) = self.support {
            if !s.contains(y) {
                return 0.0;
            }
        }
        self.interpolate(y)
    }

    fn first_zero_from(&self, y0: f64) -> Option<f64> {
        if let Some(s) = self.support {
            return Some(if s.contains(y0) { s.hi } else { y0 });
        }
        let here = self.interpolate(y0);
        if here.is_nan() {
            return None;
        }
        if here <= ZERO_THRESHOLD {
            return Some(y0);
        }
        let p = self.grid.points();
        let start = p.partition_point(|&q| q <= y0);
        (start..p.len()).find(|&j| self.values[j] <= ZERO_THRESHOLD).map(|j| p[j])
    }

    fn nodes_in(&self, lo: f64, hi: f64) -> Vec<f64> {
        let p = self.grid.points();
        let mut out = vec![lo];
        out.extend(p[self.grid.range(lo, hi)].iter().copied().filter(|&q| q > lo && q < hi));
        if hi > lo {
            out.push(hi);
        }
        out
    }

    fn known_range(&self) -> (f64, f64) {
        (self.grid.lo(), self.grid.hi())
    }
}

/// The view `y ↦ base(y) + inner(y − offset)`.
pub struct ShiftedField<'a> {
    base: &'a dyn FieldView,
    inner: &'a dyn FieldView,
    offset: f64,
}

impl<'a> ShiftedField<'a> {
    pub fn new(base: &'a dyn FieldView, inner: &'a dyn FieldView, offset: f64) -> Self {
        Self { base, inner, offset }
    }
}

impl FieldView for ShiftedField<'_> {
    fn value_at(&self, y: f64) -> f64 {
        self.base.value_at(y) + self.inner.value_at(y - self.offset)
    }

    fn first_zero_from(&self, y0: f64) -> Option<f64> {
        // Both fields are nonnegative, so the sum vanishes where both do.
        let mut y = y0;
        for _ in 0..64 {
            let a = self.base.first_zero_from(y)?;
            if a.is_infinite() {
                return Some(a);
            }
            let b = self.inner.first_zero_from(a - self.offset)? + self.offset;
            // The offset round trip may move a common zero by an ulp.
            if b <= a + 1e-12 * (1.0 + a.abs()) || b.is_infinite() {
                return Some(b.max(a));
            }
            y = b;
        }
        None
    }

    fn nodes_in(&self, lo: f64, hi: f64) -> Vec<f64> {
        let mut out = self.base.nodes_in(lo, hi);
        out.extend(
            self.inner
                .nodes_in(lo - self.offset, hi - self.offset)
                .into_iter()
                .map(|q| (q + self.offset).clamp(lo, hi)),
        );
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }

    fn known_range(&self) -> (f64, f64) {
        let (a, b) = self.base.known_range();
        let (c, d) = self.inner.known_range();
        (a.max(c + self.offset), b.min(d + self.offset))
    }
}

/// `(inf, sup)` of the field over the known nodes of `[lo, hi]`.
pub fn extrema(view: &dyn FieldView, lo: f64, hi: f64) -> (f64, f64) {
    view.nodes_in(lo, hi)
        .into_iter()
        .map(|y| view.value_at(y))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)))
}

/// Trapezoid rule for `∫_lo^hi w(y) l^y dy` on the known nodes.
pub fn integrate_weighted<W: Fn(f64) -> f64>(view: &dyn FieldView, lo: f64, hi: f64, w: W) -> f64 {
    let nodes = view.nodes_in(lo, hi);
    let vals: Vec<f64> = nodes.iter().map(|&y| w(y) * view.value_at(y)).collect();
    nodes
        .windows(2)
        .zip(vals.windows(2))
        .map(|(y, v)| 0.5 * (v[0] + v[1]) * (y[1] - y[0]))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field(points: &[f64], values: &[f64]) -> LocalTimeField {
        LocalTimeField::new(Arc::new(SpaceGrid::new(points.to_vec()).unwrap()), values.to_vec()).unwrap()
    }

    #[test]
    fn interpolation_and_outside_grid() {
        let f = field(&[-1.0, 0.0, 1.0], &[0.0, 2.0, 4.0]);
        assert_eq!(f.value_at(0.5), 3.0);
        assert!(f.value_at(2.0).is_nan());
        assert_eq!(f.total_mass(), 4.0);
    }

    #[test]
    fn support_fixes_values_beyond_grid() {
        let f = field(&[-1.0, 0.0, 1.0], &[0.0, 2.0, 4.0]).with_support(Support { lo: -0.5, hi: f64::INFINITY });
        assert_eq!(f.value_at(-3.0), 0.0);
        assert!(f.value_at(3.0).is_nan());
        // interpolation uses the support end as a zero node
        assert!((f.value_at(-0.25) - 1.0).abs() < 1e-15);
        assert_eq!(f.first_zero_from(0.0), Some(f64::INFINITY));
        assert_eq!(f.first_zero_from(-2.0), Some(-2.0));
    }

    #[test]
    fn first_zero_by_scanning() {
        let f = field(&[0.0, 0.5, 1.0, 1.5, 2.0], &[1.0, 0.5, 0.2, 0.0, 0.0]);
        assert_eq!(f.first_zero_from(0.0), Some(1.5));
        let g = field(&[0.0, 1.0], &[1.0, 0.5]);
        assert_eq!(g.first_zero_from(0.0), None);
    }

    #[test]
    fn rejects_negative_values() {
        let grid = Arc::new(SpaceGrid::new(vec![0.0, 1.0]).unwrap());
        assert!(LocalTimeField::new(grid.clone(), vec![1.0, -1.0]).is_err());
        assert!(LocalTimeField::new(grid, vec![1.0]).is_err());
    }

    #[test]
    fn shifted_view_adds_fields() {
        let base = field(&[-1.0, 0.0, 1.0], &[0.0, 1.0, 0.0]).with_support(Support { lo: -1.0, hi: 1.0 });
        let inner = field(&[-1.0, 0.0, 1.0, 2.0], &[1.0, 3.0, 1.0, 0.0]).with_support(Support { lo: f64::NEG_INFINITY, hi: 2.0 });
        let v = ShiftedField::new(&base, &inner, 0.5);
        assert_eq!(v.value_at(0.5), 0.5 + 3.0);
        assert_eq!(v.first_zero_from(0.0), Some(2.5));
        let zero = LocalTimeField::zero();
        let id = ShiftedField::new(&zero, &inner, 0.0);
        for y in [-1.0, -0.3, 0.0, 0.7, 1.5] {
            assert_eq!(id.value_at(y), inner.value_at(y));
        }
    }

    #[test]
    fn superpose_matches_view() {
        let base = field(&[-1.0, 0.0, 1.0], &[0.5, 1.0, 0.25]);
        let other = field(&[-2.0, -0.5, 0.0, 2.0], &[1.0, 2.0, 3.0, 1.0]);
        let s = base.superpose(&other, 0.25).unwrap();
        let v = ShiftedField::new(&base, &other, 0.25);
        for &y in s.grid().points() {
            assert!((s.value_at(y) - v.value_at(y)).abs() < 1e-15);
        }
    }

    #[test]
    fn extrema_and_weighted_integral() {
        let f = field(&[-1.0, 0.0, 1.0, 2.0], &[1.0, 3.0, 2.0, 9.0]);
        assert_eq!(extrema(&f, -1.0, 1.0), (1.0, 3.0));
        assert_eq!(integrate_weighted(&f, -1.0, 1.0, |_| 1.0), 4.5);
    }

    #[test]
    fn mirror_reflects_support() {
        let f = field(&[0.0, 1.0], &[2.0, 1.0]).with_support(Support { lo: -0.5, hi: 3.0 });
        let m = f.mirrored();
        assert_eq!(m.value_at(-1.0), 1.0);
        assert_eq!(m.support(), Some(Support { lo: -3.0, hi: 0.5 }));
    }

    #[test]
    fn shifted_zero_survives_offset_rounding() {
        let base = field(&[0.0], &[1.0]).with_support(Support { lo: -0.5, hi: 0.7 });
        let inner = field(&[0.0], &[0.05]).with_support(Support {
            lo: f64::NEG_INFINITY,
            hi: 0.054_525_105_812_308_24,
        });
        let x = 0.527_852_658_962_263_3;
        let z = ShiftedField::new(&base, &inner, x).first_zero_from(0.0).unwrap();
        assert!((z - 0.7).abs() < 1e-12);
        let far = field(&[0.0], &[0.05]).with_support(Support { lo: f64::NEG_INFINITY, hi: 0.4 });
        let z = ShiftedField::new(&base, &far, x).first_zero_from(0.0).unwrap();
        assert!((z - (x + 0.4)).abs() < 1e-12);
    }
}
