//! Space grids for local-time fields.

use serde::{Deserialize, Serialize};

use crate::error::{require_positive, Error, Result};

/// Points closer than this (relative to the grid scale) are merged.
const MERGE_TOL: f64 = 1e-12;

/// A strictly increasing list of space points containing 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceGrid {
    points: Vec<f64>,
    zero: usize,
}

impl SpaceGrid {
    /// Validates a strictly increasing list containing 0.
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.iter().any(|p| !p.is_finite()) {
            return Err(Error::Grid("non-finite grid point".into()));
        }
        if points.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Grid("points must be strictly increasing".into()));
        }
        let zero = points
            .iter()
            .position(|&p| p == 0.0)
            .ok_or_else(|| Error::Grid("grid must contain 0".into()))?;
        Ok(Self { points, zero })
    }

    /// Sorts, merges near-duplicates and inserts 0.
    pub fn from_points(points: &[f64]) -> Result<Self> {
        let mut pts: Vec<f64> = points.to_vec();
        if pts.iter().any(|p| !p.is_finite()) {
            return Err(Error::Grid("non-finite grid point".into()));
        }
        pts.push(0.0);
        pts.sort_by(f64::total_cmp);
        let scale = pts.iter().fold(1.0_f64, |m, p| m.max(p.abs()));
        let mut merged: Vec<f64> = Vec::with_capacity(pts.len());
        for p in pts {
            match merged.last_mut() {
                Some(last) if (p - *last).abs() <= MERGE_TOL * scale => {
                    // keep exact zero and otherwise the first representative
                    if p == 0.0 {
                        *last = 0.0;
                    }
                }
                _ => merged.push(p),
            }
        }
        Self::new(merged)
    }

    /// Uniform-step grid on `[lo, hi]` (with `lo <= 0 <= hi`), built outward
    /// from 0 so that each side has equal increments of at most `step`.
    pub fn uniform(lo: f64, hi: f64, step: f64) -> Result<Self> {
        require_positive("grid_step", step)?;
        if !(lo <= 0.0 && hi >= 0.0) {
            return Err(Error::Grid(format!("[{lo}, {hi}] does not contain 0")));
        }
        let side = |len: f64| -> Vec<f64> {
            if len == 0.0 {
                return Vec::new();
            }
            let n = (len / step - 1e-9).ceil().max(1.0) as usize;
            (1..=n).map(|k| len * k as f64 / n as f64).collect()
        };
        let mut pts: Vec<f64> = side(-lo).into_iter().rev().map(|p| -p).collect();
        pts.push(0.0);
        pts.extend(side(hi));
        Self::new(pts)
    }

    /// Symmetric uniform grid on `[-c, c]`.
    pub fn window(c: f64, step: f64) -> Result<Self> {
        Self::uniform(-c, c, step)
    }

    /// Union with extra points.
    pub fn with_points(&self, extra: &[f64]) -> Result<Self> {
        let mut all = self.points.clone();
        all.extend_from_slice(extra);
        Self::from_points(&all)
    }

    /// Reflection `y ↦ -y`.
    pub fn mirrored(&self) -> Self {
        let points: Vec<f64> = self.points.iter().rev().map(|p| if *p == 0.0 { 0.0 } else { -p }).collect();
        let zero = points.len() - 1 - self.zero;
        Self { points, zero }
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn zero_index(&self) -> usize {
        self.zero
    }

    pub fn lo(&self) -> f64 {
        self.points[0]
    }

    pub fn hi(&self) -> f64 {
        *self.points.last().unwrap()
    }

    /// Largest increment (0 for the single-point grid).
    pub fn step(&self) -> f64 {
        self.points.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }

    pub fn spans(&self, lo: f64, hi: f64) -> bool {
        self.lo() <= lo && self.hi() >= hi
    }

    /// Index of a grid point equal to `y` up to the merge tolerance.
    pub fn index_of(&self, y: f64) -> Option<usize> {
        let scale = self.lo().abs().max(self.hi().abs()).max(1.0);
        let i = self.points.partition_point(|&p| p < y);
        [i.checked_sub(1), Some(i)]
            .into_iter()
            .flatten()
            .filter(|&j| j < self.points.len())
            .find(|&j| (self.points[j] - y).abs() <= MERGE_TOL * scale)
    }

    /// Indices `j` with `points[j]` in `[lo, hi]`.
    pub fn range(&self, lo: f64, hi: f64) -> std::ops::Range<usize> {
        let a = self.points.partition_point(|&p| p < lo);
        let b = self.points.partition_point(|&p| p <= hi);
        a..b.max(a)
    }
}
