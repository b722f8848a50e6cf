//! Parameter functions of the built-in functionals: profiles `φ`, envelopes
//! `h`, and potentials `V`.

use std::fmt;
use std::sync::Arc;

use crate::error::{invalid, require_nonnegative, require_positive, Error, Result};
use crate::quadrature::{adaptive, integrate_half_line, integrate_line};

pub type Fn1 = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type Fn2 = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

const QUAD_TOL: f64 = 1e-12;

/// Points used to spot-check monotonicity.
const MONOTONE_CHECK_POINTS: usize = 1024;
const MONOTONE_CHECK_SPAN: f64 = 64.0;

/// A nonnegative function of one level, `φ: [0, ∞] → [0, ∞)` with `φ(∞) = 0`.
#[derive(Clone)]
pub enum Profile {
    /// `scale · e^{-rate·x}`
    Exp { scale: f64, rate: f64 },
    /// `scale · 1_{[0, upper)}(x)`
    Indicator { scale: f64, upper: f64 },
    /// User function; must be decreasing (it serves as its own envelope).
    Custom { name: String, f: Fn1 },
}

impl fmt::Debug for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Exp { scale, rate } => write!(f, "Exp({scale}, {rate})"),
            Self::Indicator { scale, upper } => write!(f, "Indicator({scale}, {upper})"),
            Self::Custom { name, .. } => write!(f, "Custom({name})"),
        }
    }
}

impl Profile {
    pub fn exp(scale: f64, rate: f64) -> Result<Self> {
        require_nonnegative("phi_scale", scale)?;
        require_positive("phi_rate", rate)?;
        Ok(Self::Exp { scale, rate })
    }

    pub fn indicator(scale: f64, upper: f64) -> Result<Self> {
        require_nonnegative("phi_scale", scale)?;
        require_positive("phi_upper", upper)?;
        Ok(Self::Indicator { scale, upper })
    }

    pub fn custom(name: &str, f: Fn1) -> Result<Self> {
        let p = Self::Custom {
            name: name.to_string(),
            f,
        };
        p.envelope().check_decreasing()?;
        Ok(p)
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x.is_infinite() {
            return 0.0;
        }
        match self {
            Self::Exp { scale, rate } => scale * (-rate * x).exp(),
            Self::Indicator { scale, upper } => {
                if x < *upper {
                    *scale
                } else {
                    0.0
                }
            }
            Self::Custom { f, .. } => f(x),
        }
    }

    /// `Φ(x) = ∫_x^∞ φ`.
    pub fn tail(&self, x: f64) -> Result<f64> {
        Ok(match self {
            Self::Exp { scale, rate } => scale / rate * (-rate * x).exp(),
            Self::Indicator { scale, upper } => scale * (upper - x).max(0.0),
            Self::Custom { f, .. } => integrate_half_line(|u| f(x + u), QUAD_TOL)?,
        })
    }

    /// Decreasing envelope `ψ >= φ`.
    pub fn envelope(&self) -> Envelope {
        match self {
            Self::Exp { scale, rate } => Envelope::Exp {
                scale: *scale,
                rate: *rate,
            },
            Self::Indicator { scale, upper } => Envelope::Indicator {
                scale: *scale,
                upper: *upper,
            },
            Self::Custom { name, f } => Envelope::Custom {
                name: name.clone(),
                f: f.clone(),
            },
        }
    }
}

/// A nonnegative function of two levels with a decreasing envelope `h` such
/// that `φ(l1, l2) <= h(l1 ∧ l2)`.
#[derive(Clone)]
pub enum Profile2 {
    /// `scale · e^{-rate1·l1 - rate2·l2}`
    Exp { scale: f64, rate1: f64, rate2: f64 },
    Custom { name: String, f: Fn2, envelope: Envelope },
}

impl fmt::Debug for Profile2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Exp { scale, rate1, rate2 } => write!(f, "Exp2({scale}, {rate1}, {rate2})"),
            Self::Custom { name, .. } => write!(f, "Custom2({name})"),
        }
    }
}

impl Profile2 {
    pub fn exp(scale: f64, rate1: f64, rate2: f64) -> Result<Self> {
        require_nonnegative("phi_scale", scale)?;
        require_positive("phi_rate1", rate1)?;
        require_positive("phi_rate2", rate2)?;
        Ok(Self::Exp { scale, rate1, rate2 })
    }

    pub fn custom(name: &str, f: Fn2, envelope: Envelope) -> Result<Self> {
        envelope.check_decreasing()?;
        Ok(Self::Custom {
            name: name.to_string(),
            f,
            envelope,
        })
    }

    pub fn eval(&self, l1: f64, l2: f64) -> f64 {
        match self {
            Self::Exp { scale, rate1, rate2 } => scale * (-rate1 * l1 - rate2 * l2).exp(),
            Self::Custom { f, .. } => f(l1, l2),
        }
    }

    pub fn envelope(&self) -> Envelope {
        match self {
            // e^{-a l1 - b l2} <= e^{-2 min(a,b) (l1 ∧ l2)}
            Self::Exp { scale, rate1, rate2 } => Envelope::Exp {
                scale: *scale,
                rate: 2.0 * rate1.min(*rate2),
            },
            Self::Custom { envelope, .. } => envelope.clone(),
        }
    }

    /// `(l1, l2) ↦ φ(a + l1, b + l2)`.
    pub fn offset(&self, a: f64, b: f64) -> impl Fn(f64, f64) -> f64 + '_ {
        move |l1, l2| self.eval(a + l1, b + l2)
    }
}

/// Decreasing function `h` on `[0, ∞)` used in domination certificates.
#[derive(Clone)]
pub enum Envelope {
    /// `scale · e^{-rate·l}`
    Exp { scale: f64, rate: f64 },
    /// `value · 1_{l = 0}`
    AtZero { value: f64 },
    /// `scale · 1_{[0, upper)}(l)`
    Indicator { scale: f64, upper: f64 },
    /// `scale · (l + shift) · e^{-rate·l}`
    LinearExp { scale: f64, shift: f64, rate: f64 },
    /// `factor · inner(l)`
    Scaled { factor: f64, inner: Box<Envelope> },
    Custom { name: String, f: Fn1 },
}

impl fmt::Debug for Envelope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Exp { scale, rate } => write!(f, "{scale}·exp(-{rate} l)"),
            Self::AtZero { value } => write!(f, "{value}·1{{0}}"),
            Self::Indicator { scale, upper } => write!(f, "{scale}·1[0,{upper})"),
            Self::LinearExp { scale, shift, rate } => write!(f, "{scale}·(l+{shift})·exp(-{rate} l)"),
            Self::Scaled { factor, inner } => write!(f, "{factor}·({inner:?})"),
            Self::Custom { name, .. } => write!(f, "{name}"),
        }
    }
}

impl Envelope {
    pub fn eval(&self, l: f64) -> f64 {
        match self {
            Self::Exp { scale, rate } => scale * (-rate * l).exp(),
            Self::AtZero { value } => {
                if l == 0.0 {
                    *value
                } else {
                    0.0
                }
            }
            Self::Indicator { scale, upper } => {
                if l < *upper {
                    *scale
                } else {
                    0.0
                }
            }
            Self::LinearExp { scale, shift, rate } => scale * (l + shift) * (-rate * l).exp(),
            Self::Scaled { factor, inner } => factor * inner.eval(l),
            Self::Custom { f, .. } => f(l),
        }
    }

    /// `∫_0^∞ h` by adaptive quadrature.
    pub fn integral(&self) -> Result<f64> {
        match self {
            Self::AtZero { .. } => Ok(0.0),
            Self::Indicator { scale, upper } => Ok(scale * adaptive(&|_| 1.0, 0.0, *upper, QUAD_TOL)),
            Self::Scaled { factor, inner } => Ok(factor * inner.integral()?),
            _ => integrate_half_line(|l| self.eval(l), QUAD_TOL),
        }
    }

    /// Spot-checks that `h` is nonnegative and nonincreasing.
    pub fn check_decreasing(&self) -> Result<()> {
        let mut prev = self.eval(0.0);
        if !(prev.is_finite() && prev >= 0.0) {
            return Err(invalid("envelope", format!("h(0) = {prev} is not a finite nonnegative value")));
        }
        for i in 1..MONOTONE_CHECK_POINTS {
            let l = MONOTONE_CHECK_SPAN * i as f64 / (MONOTONE_CHECK_POINTS - 1) as f64;
            let v = self.eval(l);
            if !(v >= 0.0) || v > prev * (1.0 + 1e-12) + 1e-300 {
                return Err(invalid("envelope", format!("{self:?} is not decreasing near l = {l}")));
            }
            prev = v;
        }
        Ok(())
    }
}

/// A nonnegative potential `V` for exponential penalization.
#[derive(Clone)]
pub enum Potential {
    /// `height · 1_{[lo, hi]}(y)`
    Indicator { height: f64, lo: f64, hi: f64 },
    /// `height · exp(-(y - center)² / (2 width²))`
    Gaussian { height: f64, center: f64, width: f64 },
    /// User function vanishing outside `[lo, hi]`.
    Custom { name: String, f: Fn1, lo: f64, hi: f64 },
}

impl fmt::Debug for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Indicator { height, lo, hi } => write!(f, "{height}·1[{lo},{hi}]"),
            Self::Gaussian { height, center, width } => write!(f, "Gaussian({height}, {center}, {width})"),
            Self::Custom { name, .. } => write!(f, "{name}"),
        }
    }
}

/// Gaussian potentials are truncated at this many widths.
const GAUSSIAN_CUTOFF: f64 = 40.0;

impl Potential {
    pub fn indicator(height: f64, lo: f64, hi: f64) -> Result<Self> {
        require_positive("v_height", height)?;
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(invalid("v_lo", "need finite lo < hi"));
        }
        Ok(Self::Indicator { height, lo, hi })
    }

    pub fn gaussian(height: f64, center: f64, width: f64) -> Result<Self> {
        require_positive("v_height", height)?;
        require_positive("v_width", width)?;
        if !center.is_finite() {
            return Err(invalid("v_center", "must be finite"));
        }
        Ok(Self::Gaussian { height, center, width })
    }

    pub fn eval(&self, y: f64) -> f64 {
        match self {
            Self::Indicator { height, lo, hi } => {
                if y >= *lo && y <= *hi {
                    *height
                } else {
                    0.0
                }
            }
            Self::Gaussian { height, center, width } => {
                let z = (y - center) / width;
                if z.abs() > GAUSSIAN_CUTOFF {
                    0.0
                } else {
                    height * (-0.5 * z * z).exp()
                }
            }
            Self::Custom { f, lo, hi, .. } => {
                if y >= *lo && y <= *hi {
                    f(y)
                } else {
                    0.0
                }
            }
        }
    }

    /// Interval outside which `V` vanishes.
    pub fn support(&self) -> (f64, f64) {
        match self {
            Self::Indicator { lo, hi, .. } | Self::Custom { lo, hi, .. } => (*lo, *hi),
            Self::Gaussian { center, width, .. } => (center - GAUSSIAN_CUTOFF * width, center + GAUSSIAN_CUTOFF * width),
        }
    }

    /// `∫_a^b V`.
    pub fn mass(&self, a: f64, b: f64) -> f64 {
        let (lo, hi) = self.support();
        let (a, b) = (a.max(lo), b.min(hi));
        if a >= b {
            return 0.0;
        }
        match self {
            Self::Indicator { height, .. } => height * (b - a),
            _ => adaptive(&|y| self.eval(y), a, b, QUAD_TOL),
        }
    }

    /// `∫ (1 + y²) V(y) dy`; fails if the weighted integral diverges.
    pub fn weighted_mass(&self) -> Result<f64> {
        let (lo, hi) = self.support();
        let v = match self {
            Self::Indicator { height, .. } => height * ((hi - lo) + (hi.powi(3) - lo.powi(3)) / 3.0),
            _ => {
                let (lo, hi) = (lo.max(-1e12), hi.min(1e12));
                if hi - lo > 1e6 {
                    integrate_line(|y| (1.0 + y * y) * self.eval(y), QUAD_TOL)?
                } else {
                    adaptive(&|y| (1.0 + y * y) * self.eval(y), lo, hi, QUAD_TOL)
                }
            }
        };
        if !v.is_finite() {
            return Err(Error::Divergent("(1 + y²) V(y) is not integrable".into()));
        }
        Ok(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tails_match_quadrature() {
        let p = Profile::exp(2.0, 0.5).unwrap();
        assert!((p.tail(1.0).unwrap() - 4.0 * (-0.5f64).exp()).abs() < 1e-14);
        let c = Profile::custom("e", Arc::new(|x: f64| 2.0 * (-0.5 * x).exp())).unwrap();
        assert!((c.tail(1.0).unwrap() - p.tail(1.0).unwrap()).abs() < 1e-10);
        let i = Profile::indicator(1.0, 3.0).unwrap();
        assert_eq!(i.tail(1.0).unwrap(), 2.0);
        assert_eq!(i.eval(f64::INFINITY), 0.0);
    }

    #[test]
    fn custom_profile_must_decrease() {
        assert!(Profile::custom("bump", Arc::new(|x: f64| (-(x - 2.0).powi(2)).exp())).is_err());
    }

    #[test]
    fn envelope_integrals() {
        assert!((Envelope::Exp { scale: 1.0, rate: 1.0 }.integral().unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(Envelope::AtZero { value: 3.0 }.integral().unwrap(), 0.0);
        let le = Envelope::LinearExp { scale: 1.0, shift: 2.0, rate: 1.0 };
        assert!((le.integral().unwrap() - 3.0).abs() < 1e-10);
        assert!(le.check_decreasing().is_ok());
    }

    #[test]
    fn two_level_envelope_dominates() {
        let p = Profile2::exp(1.0, 1.0, 2.0).unwrap();
        let h = p.envelope();
        for &(a, b) in &[(0.0, 0.0), (1.0, 5.0), (3.0, 0.5), (10.0, 10.0)] {
            assert!(p.eval(a, b) <= h.eval(f64::min(a, b)) + 1e-15);
        }
    }

    #[test]
    fn potential_masses() {
        let v = Potential::indicator(2.0, -1.0, 1.0).unwrap();
        assert_eq!(v.mass(-0.5, 3.0), 3.0);
        assert!((v.weighted_mass().unwrap() - 2.0 * (2.0 + 2.0 / 3.0)).abs() < 1e-12);
        let g = Potential::gaussian(1.0, 0.0, 1.0).unwrap();
        let want = 2.0 * (2.0 * std::f64::consts::PI).sqrt();
        assert!((g.weighted_mass().unwrap() - want).abs() < 1e-9);
    }
}
