//! Squared Bessel processes of dimension 0, 2 and 4.
//!
//! Normalization: generator `2x ∂² + δ ∂`, so that BESQ(δ) from `x` has mean
//! `x + δt` and BESQ(0) is absorbed at 0 by time `t` with probability
//! `e^{-x/2t}`. The "time" variable is the space variable of the local-time
//! processes built on top of this module.

use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, require_nonnegative, require_positive, Error, Result};
use crate::quadrature::{adaptive, truncation_point, Composite};
use crate::special::bessel_i_scaled;

/// Dimension `δ` of a squared Bessel process.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Dimension {
    Zero,
    Two,
    Four,
}

impl Dimension {
    pub fn from_u32(delta: u32) -> Result<Self> {
        match delta {
            0 => Ok(Self::Zero),
            2 => Ok(Self::Two),
            4 => Ok(Self::Four),
            other => Err(Error::UnsupportedDimension(other)),
        }
    }

    pub fn delta(self) -> u32 {
        match self {
            Self::Zero => 0,
            Self::Two => 2,
            Self::Four => 4,
        }
    }

    /// Bessel index `ν = δ/2 − 1`.
    pub fn nu(self) -> i32 {
        self.delta() as i32 / 2 - 1
    }
}

/// Dimension, start point and duration of one transition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BesqParams {
    pub dimension: Dimension,
    pub start: f64,
    pub duration: f64,
}

impl BesqParams {
    pub fn new(delta: u32, start: f64, duration: f64) -> Result<Self> {
        let dimension = Dimension::from_u32(delta)?;
        require_nonnegative("start", start)?;
        require_positive("duration", duration)?;
        Ok(Self {
            dimension,
            start,
            duration,
        })
    }

    fn validate(&self) -> Result<()> {
        require_nonnegative("start", self.start)?;
        require_positive("duration", self.duration)
    }
}

/// Continuous density plus point mass at 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityValue {
    pub value: f64,
    pub atom: f64,
}

/// One exact draw of the process value after `duration`, started at `start`.
pub fn transition_sample<R: Rng + ?Sized>(params: &BesqParams, rng: &mut R) -> f64 {
    sample_raw(params.dimension, params.start, params.duration, rng)
}

/// Checked version of [`transition_sample`].
pub fn transition_sample_checked<R: Rng + ?Sized>(params: &BesqParams, rng: &mut R) -> Result<f64> {
    params.validate()?;
    Ok(transition_sample(params, rng))
}

/// Poisson–Gamma mixture without validation; callers guarantee `x >= 0, t > 0`.
pub(crate) fn sample_raw<R: Rng + ?Sized>(dim: Dimension, x: f64, t: f64, rng: &mut R) -> f64 {
    let rate = x / (2.0 * t);
    let n = if rate > 0.0 {
        Poisson::new(rate)
            .expect("finite positive Poisson rate")
            .sample(rng)
    } else {
        0.0
    };
    let shape = n + 0.5 * dim.delta() as f64;
    if shape == 0.0 {
        return 0.0;
    }
    Gamma::new(shape, 2.0 * t)
        .expect("positive Gamma parameters")
        .sample(rng)
}

/// `P(BESQ(0)_t = 0 | start x) = e^{-x/2t}`.
pub fn zero_probability(x: f64, t: f64) -> f64 {
    (-x / (2.0 * t)).exp()
}

/// Transition density at `end`, with the atom at 0 for `δ = 0`.
pub fn density(params: &BesqParams, end: f64) -> Result<DensityValue> {
    params.validate()?;
    require_nonnegative("end", end)?;
    let (x, t) = (params.start, params.duration);
    let atom = match params.dimension {
        Dimension::Zero => zero_probability(x, t),
        _ => 0.0,
    };
    Ok(DensityValue {
        value: density_raw(params.dimension, x, t, end),
        atom,
    })
}

/// Continuous part `q^(δ)_t(x, y)` without validation.
pub fn density_raw(dim: Dimension, x: f64, t: f64, y: f64) -> f64 {
    let two_t = 2.0 * t;
    if x == 0.0 {
        return match dim {
            Dimension::Zero => 0.0,
            Dimension::Two => (-y / two_t).exp() / two_t,
            Dimension::Four => y * (-y / two_t).exp() / (two_t * two_t),
        };
    }
    if y == 0.0 {
        return match dim {
            Dimension::Zero => x * (-x / two_t).exp() / (two_t * two_t),
            Dimension::Two => (-x / two_t).exp() / two_t,
            Dimension::Four => 0.0,
        };
    }
    let z = (x * y).sqrt() / t;
    let gap = x.sqrt() - y.sqrt();
    let ratio = match dim {
        Dimension::Zero => (x / y).sqrt(),
        Dimension::Two => 1.0,
        Dimension::Four => (y / x).sqrt(),
    };
    ratio * (-gap * gap / two_t).exp() * bessel_i_scaled(dim.nu(), z) / two_t
}

/// Laplace transform `E[e^{-λ X_t}] = (1+2λt)^{-δ/2} exp(-λx/(1+2λt))`.
pub fn laplace_transform(params: &BesqParams, lambda: f64) -> f64 {
    let d = 1.0 + 2.0 * lambda * params.duration;
    d.powf(-0.5 * params.dimension.delta() as f64) * (-lambda * params.start / d).exp()
}

/// First zero of BESQ(0) started at `level`: `level / (2E)` with `E ~ Exp(1)`.
pub fn besq0_zero_hitting_sample<R: Rng + ?Sized>(level: f64, rng: &mut R) -> Result<f64> {
    require_positive("level", level)?;
    Ok(zero_hitting_raw(level, rng))
}

pub(crate) fn zero_hitting_raw<R: Rng + ?Sized>(level: f64, rng: &mut R) -> f64 {
    let e: f64 = Exp1.sample(rng);
    level / (2.0 * e)
}

/// Absorption point of BESQ(0) from `x > 0`, conditioned to be absorbed
/// within `duration`. Returned as an offset in `(0, duration]`.
pub(crate) fn conditional_absorption<R: Rng + ?Sized>(x: f64, duration: f64, rng: &mut R) -> f64 {
    let u: f64 = rng.gen::<f64>();
    let u = if u > 0.0 { u } else { f64::MIN_POSITIVE };
    let s = x / (2.0 * (x / (2.0 * duration) - u.ln()));
    s.min(duration)
}

/// `p_b(u) = b (2πu³)^{-1/2} e^{-b²/2u}`: density of the first hitting time
/// of level `b` by a standard Brownian motion.
pub fn brownian_hitting_density(barrier: f64, time: f64) -> Result<f64> {
    require_positive("barrier", barrier)?;
    require_positive("time", time)?;
    let u = time;
    Ok(barrier / (2.0 * std::f64::consts::PI * u * u * u).sqrt() * (-barrier * barrier / (2.0 * u)).exp())
}

/// Quadrature settings for density identities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadConfig {
    pub nodes: usize,
    pub order: usize,
    pub tail_tol: f64,
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self {
            nodes: 512,
            order: 16,
            tail_tol: 1e-10,
        }
    }
}

impl QuadConfig {
    pub fn validate(&self) -> Result<()> {
        if self.order == 0 || self.nodes < self.order {
            return Err(invalid("quad.nodes", "need nodes >= order >= 1"));
        }
        require_positive("quad.tail_tol", self.tail_tol)
    }
}

/// A quadrature residual with an estimate of the neglected tail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    pub residual: f64,
    pub truncation: f64,
    pub z_max: f64,
}

fn integrate_truncated<F: Fn(f64) -> f64>(f: F, scale: f64, quad: &QuadConfig) -> Result<(f64, f64, f64)> {
    quad.validate()?;
    let z_max = truncation_point(&f, scale, quad.tail_tol)?;
    let value = Composite::new(quad.nodes, quad.order).integrate(0.0, z_max, &f);
    let tail = adaptive(&f, z_max, 4.0 * z_max, quad.tail_tol).abs();
    Ok((value, tail, z_max))
}

/// Residuals of the two convolution identities
///
/// `∫ q2_{y1}(z,z1) q0_{y2}(z,z2) dz = [y1 q2_{y1+y2}(z1,z2) + y2 q0_{y1+y2}(z1,z2)]/(y1+y2)`
///
/// `∫ q2_{y1}(z,z1) Q0_{y2}(z,0) dz = y2/(y1+y2) Q0_{y1+y2}(z1,0)`.
pub fn convolution_identity_residual(
    y1: f64,
    y2: f64,
    z1: f64,
    z2: f64,
    quad: &QuadConfig,
) -> Result<(Residual, Residual)> {
    require_positive("y1", y1)?;
    require_positive("y2", y2)?;
    require_nonnegative("z1", z1)?;
    require_nonnegative("z2", z2)?;
    let s = y1 + y2;
    let scale = 1.0 + z1 + z2 + s;

    let first = |z: f64| density_raw(Dimension::Two, z, y1, z1) * density_raw(Dimension::Zero, z, y2, z2);
    let (lhs, tail, z_max) = integrate_truncated(first, scale, quad)?;
    let rhs = (y1 * density_raw(Dimension::Two, z1, s, z2) + y2 * density_raw(Dimension::Zero, z1, s, z2)) / s;
    let r1 = Residual {
        residual: lhs - rhs,
        truncation: tail,
        z_max,
    };

    let second = |z: f64| density_raw(Dimension::Two, z, y1, z1) * zero_probability(z, y2);
    let (lhs, tail, z_max) = integrate_truncated(second, scale, quad)?;
    let rhs = y2 / s * zero_probability(z1, s);
    let r2 = Residual {
        residual: lhs - rhs,
        truncation: tail,
        z_max,
    };
    Ok((r1, r2))
}

/// Same as the first identity of [`convolution_identity_residual`] with
/// `q0_{y2}(z, z2)` replaced by `q4_{y2}(z2, z)`.
pub fn convolution_residual_reversed(y1: f64, y2: f64, z1: f64, z2: f64, quad: &QuadConfig) -> Result<Residual> {
    require_positive("y1", y1)?;
    require_positive("y2", y2)?;
    let s = y1 + y2;
    let f = |z: f64| density_raw(Dimension::Two, z, y1, z1) * density_raw(Dimension::Four, z2, y2, z);
    let (lhs, tail, z_max) = integrate_truncated(f, 1.0 + z1 + z2 + s, quad)?;
    let rhs = (y1 * density_raw(Dimension::Two, z1, s, z2) + y2 * density_raw(Dimension::Four, z2, s, z1)) / s;
    Ok(Residual {
        residual: lhs - rhs,
        truncation: tail,
        z_max,
    })
}

/// `q0_t(x,y) − q4_t(y,x)`.
pub fn time_reversal_residual(t: f64, x: f64, y: f64) -> Result<f64> {
    require_positive("t", t)?;
    require_nonnegative("x", x)?;
    require_nonnegative("y", y)?;
    Ok(density_raw(Dimension::Zero, x, t, y) - density_raw(Dimension::Four, y, t, x))
}

/// `∫ q_s(x,z) q_t(z,y) dz − q_{s+t}(x,y)` for `y > 0`, and for `δ = 0`
/// the matching atom residual `Q_s(x,0) + ∫ q_s(x,z) Q_t(z,0) dz − Q_{s+t}(x,0)`.
pub fn chapman_kolmogorov_residual(
    delta: u32,
    s: f64,
    t: f64,
    x: f64,
    y: f64,
    quad: &QuadConfig,
) -> Result<(Residual, Option<Residual>)> {
    let dim = Dimension::from_u32(delta)?;
    require_positive("s", s)?;
    require_positive("t", t)?;
    require_nonnegative("x", x)?;
    require_positive("y", y)?;
    let scale = 1.0 + x + y + s + t;
    let f = |z: f64| density_raw(dim, x, s, z) * density_raw(dim, z, t, y);
    let (lhs, tail, z_max) = integrate_truncated(f, scale, quad)?;
    let continuous = Residual {
        residual: lhs - density_raw(dim, x, s + t, y),
        truncation: tail,
        z_max,
    };
    let atom = if dim == Dimension::Zero {
        let g = |z: f64| density_raw(dim, x, s, z) * zero_probability(z, t);
        let (lhs, tail, z_max) = integrate_truncated(g, scale, quad)?;
        Some(Residual {
            residual: zero_probability(x, s) + lhs - zero_probability(x, s + t),
            truncation: tail,
            z_max,
        })
    } else {
        None
    };
    Ok((continuous, atom))
}

/// Durations `y1, y2` of the built-in identity grid.
pub const IDENTITY_DURATIONS: [f64; 3] = [0.5, 1.0, 2.0];
/// End points `z1, z2` of the built-in identity grid.
pub const IDENTITY_STATES: [f64; 3] = [0.5, 1.0, 2.0];

/// Residuals of the density identities at one `(y1, y2, z1, z2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentityResiduals {
    pub y1: f64,
    pub y2: f64,
    pub z1: f64,
    pub z2: f64,
    pub convolution: f64,
    pub atom_convolution: f64,
    pub reversed_convolution: f64,
    /// `q0_{y1}(z1, z2) − q4_{y1}(z2, z1)`.
    pub time_reversal: f64,
    pub truncation: f64,
}

impl IdentityResiduals {
    pub fn max_abs(&self) -> f64 {
        [self.convolution, self.atom_convolution, self.reversed_convolution, self.time_reversal]
            .iter()
            .fold(0.0, |m, r| m.max(r.abs()))
    }
}

/// All density identities over `IDENTITY_DURATIONS² × IDENTITY_STATES²`.
pub fn identity_grid(quad: &QuadConfig) -> Result<Vec<IdentityResiduals>> {
    let mut rows = Vec::with_capacity(81);
    for &y1 in &IDENTITY_DURATIONS {
        for &y2 in &IDENTITY_DURATIONS {
            for &z1 in &IDENTITY_STATES {
                for &z2 in &IDENTITY_STATES {
                    let (a, b) = convolution_identity_residual(y1, y2, z1, z2, quad)?;
                    let r = convolution_residual_reversed(y1, y2, z1, z2, quad)?;
                    rows.push(IdentityResiduals {
                        y1,
                        y2,
                        z1,
                        z2,
                        convolution: a.residual,
                        atom_convolution: b.residual,
                        reversed_convolution: r.residual,
                        time_reversal: time_reversal_residual(y1, z1, z2)?,
                        truncation: a.truncation.max(b.truncation).max(r.truncation),
                    });
                }
            }
        }
    }
    Ok(rows)
}

/// One row of a density table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityRow {
    pub delta: u32,
    pub x: f64,
    pub t: f64,
    pub y: f64,
    pub density: f64,
    pub atom: f64,
}

/// Density table on the product of the given `x`, `t` and `y` values.
pub fn density_table(deltas: &[u32], xs: &[f64], ts: &[f64], ys: &[f64]) -> Result<Vec<DensityRow>> {
    let mut rows = Vec::new();
    for &delta in deltas {
        for &x in xs {
            for &t in ts {
                let p = BesqParams::new(delta, x, t)?;
                for &y in ys {
                    let d = density(&p, y)?;
                    rows.push(DensityRow {
                        delta,
                        x,
                        t,
                        y,
                        density: d.value,
                        atom: d.atom,
                    });
                }
            }
        }
    }
    Ok(rows)
}

/// Writes rows as CSV with columns `delta,x,t,y,density,atom`.
pub fn write_density_csv<W: Write>(rows: &[DensityRow], out: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row).map_err(std::io::Error::other)?;
    }
    w.flush()
}
