//! Closed forms of `I(F)` and of the limit density for the built-in examples.

use crate::besq::{density_raw, zero_probability, Dimension};
use crate::error::{invalid, Error, Result};
use crate::field::{FieldView, LocalTimeField};
use crate::quadrature::{integrate_half_line, GaussLegendre};

use super::{Builtin, FunctionalSpec};

const QUAD_TOL: f64 = 1e-12;
const PLANE_TOL: f64 = 1e-10;
const PLANE_ORDER: usize = 8;

/// State of a path prefix up to time `s`: endpoint `X_s` and the local-time
/// field `(l_s^y)` (with its support `[inf X, sup X]` when known).
#[derive(Debug, Clone)]
pub struct PrefixState {
    pub x: f64,
    pub field: LocalTimeField,
}

impl PrefixState {
    /// The state at time 0.
    pub fn origin() -> Self {
        Self {
            x: 0.0,
            field: LocalTimeField::zero(),
        }
    }

    fn level(&self, y: f64) -> Result<f64> {
        let v = self.field.value_at(y);
        if v.is_finite() && v >= 0.0 {
            Ok(v)
        } else {
            Err(Error::InconsistentState(format!("prefix local time unknown at level {y}")))
        }
    }

    fn supremum(&self) -> Result<f64> {
        let s = self
            .field
            .support()
            .ok_or_else(|| Error::InconsistentState("prefix supremum unknown".into()))?;
        if s.hi < self.x || s.hi < 0.0 || s.lo > self.x || s.lo > 0.0 {
            return Err(Error::InconsistentState(format!(
                "support [{}, {}] must contain 0 and X_s = {}",
                s.lo, s.hi, self.x
            )));
        }
        Ok(s.hi)
    }
}

/// `I(F)` for the local-time-at-zero, supremum and two-level functionals (and `F ≡ 0`).
pub fn closed_form_i(f: &FunctionalSpec) -> Result<f64> {
    match f.builtin() {
        Some(Builtin::LocalTimeZero(phi)) | Some(Builtin::Supremum(phi)) => Ok(2.0 * phi.tail(0.0)?),
        Some(Builtin::TwoLevel { phi, y1, y2 }) => two_level_integral(&|a, b| phi.eval(a, b), *y1, *y2),
        Some(Builtin::Zero) => Ok(0.0),
        _ => Err(Error::NoClosedForm {
            name: f.name().to_string(),
            what: "I(F)",
        }),
    }
}

/// Limit density `I(F^{(l_s), X_s}) / I(F)` for the same three functionals.
pub fn closed_form_density(f: &FunctionalSpec, state: &PrefixState) -> Result<f64> {
    if !state.x.is_finite() {
        return Err(Error::InconsistentState("non-finite endpoint".into()));
    }
    let x = state.x;
    let ratio = |num: f64, den: f64| {
        if den > 0.0 {
            Ok(num / den)
        } else {
            Err(Error::Degenerate(format!("I({}) = 0", f.name())))
        }
    };
    match f.builtin() {
        Some(Builtin::LocalTimeZero(phi)) => {
            let l0 = state.level(0.0)?;
            ratio(x.abs() * phi.eval(l0) + phi.tail(l0)?, phi.tail(0.0)?)
        }
        Some(Builtin::Supremum(phi)) => {
            let s = state.supremum()?;
            ratio((s - x) * phi.eval(s) + phi.tail(s)?, phi.tail(0.0)?)
        }
        Some(Builtin::TwoLevel { phi, y1, y2 }) => {
            let (a, b) = (state.level(*y1)?, state.level(*y2)?);
            let num = two_level_integral(&|l1, l2| phi.eval(a + l1, b + l2), y1 - x, y2 - x)?;
            ratio(num, two_level_integral(&|l1, l2| phi.eval(l1, l2), *y1, *y2)?)
        }
        _ => Err(Error::NoClosedForm {
            name: f.name().to_string(),
            what: "limit density",
        }),
    }
}

/// `I(φ(l^{u1}, l^{u2}))` for `u1 < u2` in every sign configuration, reduced
/// to a plane integral against squared Bessel kernels of duration `u2 − u1`
/// plus boundary terms carried by the atom at 0.
pub fn two_level_integral(phi: &(dyn Fn(f64, f64) -> f64 + Sync), u1: f64, u2: f64) -> Result<f64> {
    if !(u1 < u2) || !u1.is_finite() || !u2.is_finite() {
        return Err(invalid("y1", format!("need finite y1 < y2, got {u1}, {u2}")));
    }
    let d = u2 - u1;
    let q2 = |a: f64, b: f64| density_raw(Dimension::Two, a, d, b);
    let q0 = |a: f64, b: f64| density_raw(Dimension::Zero, a, d, b);
    let atom = |a: f64| zero_probability(a, d);

    if u1 >= 0.0 {
        let plane = plane_integral(&|l1, l2| (q2(l1, l2) + q0(l1, l2)) * phi(l1, l2), d)?;
        let edge = integrate_half_line(|l1| atom(l1) * phi(l1, 0.0), QUAD_TOL)?;
        Ok(plane + edge + 2.0 * u1 * phi(0.0, 0.0))
    } else if u2 <= 0.0 {
        let plane = plane_integral(&|l1, l2| (q2(l2, l1) + q0(l2, l1)) * phi(l1, l2), d)?;
        let edge = integrate_half_line(|l2| atom(l2) * phi(0.0, l2), QUAD_TOL)?;
        Ok(plane + edge + 2.0 * u2.abs() * phi(0.0, 0.0))
    } else {
        let (wl, wr) = (u1.abs() / d, u2 / d);
        let plane = plane_integral(&|l1, l2| (q2(l1, l2) + wl * q0(l2, l1) + wr * q0(l1, l2)) * phi(l1, l2), d)?;
        let right = integrate_half_line(|l1| atom(l1) * phi(l1, 0.0), QUAD_TOL)?;
        let left = integrate_half_line(|l2| atom(l2) * phi(0.0, l2), QUAD_TOL)?;
        Ok(plane + wr * right + wl * left)
    }
}

/// `∫∫_{[0,∞)²} g` by tensor Gauss–Legendre on `[0, Z]²`, doubling `Z` until
/// two successive boxes agree.
fn plane_integral(g: &(dyn Fn(f64, f64) -> f64 + Sync), d: f64) -> Result<f64> {
    let rule = GaussLegendre::new(PLANE_ORDER);
    let width = 0.5 * d.sqrt().clamp(0.05, 1.0);
    let mut z = 8.0 * (1.0 + d);
    let mut prev = box_integral(&rule, g, z, width);
    for _ in 0..8 {
        z *= 2.0;
        let next = box_integral(&rule, g, z, width);
        if (next - prev).abs() <= PLANE_TOL * next.abs().max(1.0) {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::Divergent(format!("plane integral still changing at box size {z}")))
}

fn box_integral(rule: &GaussLegendre, g: &(dyn Fn(f64, f64) -> f64 + Sync), z: f64, width: f64) -> f64 {
    let panels = (z / width).ceil() as usize;
    let h = z / panels as f64;
    let nodes: Vec<(f64, f64)> = (0..panels)
        .flat_map(|p| rule.mapped(p as f64 * h, (p + 1) as f64 * h).collect::<Vec<_>>())
        .collect();
    nodes
        .iter()
        .map(|&(a, wa)| wa * nodes.iter().map(|&(b, wb)| wb * g(a, b)).sum::<f64>())
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Support;
    use crate::functionals::{builtin_local_time_zero, builtin_supremum, builtin_two_level, Profile, Profile2};
    use crate::grid::SpaceGrid;
    use std::sync::Arc;

    /// `I(e^{-a l1 - b l2})` from the Laplace transforms of the squared Bessel
    /// transitions, independent of the kernel reduction.
    fn laplace_oracle(a: f64, b: f64, u1: f64, u2: f64) -> f64 {
        if u2 <= 0.0 {
            return laplace_oracle(b, a, -u2, -u1);
        }
        if u1 >= 0.0 {
            let d = u2 - u1;
            let mu = a + b / (1.0 + 2.0 * b * d);
            (1.0 / (1.0 + 2.0 * b * d) + 1.0 + 2.0 * mu * u1) / mu
        } else {
            let (pa, pb) = (1.0 + 2.0 * a * u1.abs(), 1.0 + 2.0 * b * u2);
            (1.0 / pb + 1.0 / pa) / (b / pb + a / pa)
        }
    }

    #[test]
    fn two_level_matches_laplace_oracle() {
        let cases = [
            (1.0, 1.0, -0.5, 0.5),
            (1.0, 1.0, 0.0, 1.0),
            (0.7, 1.3, 0.25, 1.5),
            (2.0, 0.5, -1.5, -0.2),
            (1.0, 2.0, -1.0, 0.0),
            (0.5, 0.5, -0.3, 2.0),
        ];
        for (a, b, u1, u2) in cases {
            let got = two_level_integral(&|l1, l2| (-a * l1 - b * l2).exp(), u1, u2).unwrap();
            let want = laplace_oracle(a, b, u1, u2);
            assert!((got - want).abs() < 1e-8, "({a},{b},{u1},{u2}): {got} vs {want}");
        }
    }

    #[test]
    fn symmetric_example_integrates_to_one() {
        let f = builtin_two_level(Profile2::exp(1.0, 1.0, 1.0).unwrap(), -0.5, 0.5).unwrap();
        assert!((closed_form_i(&f).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn local_time_zero_density() {
        let f = builtin_local_time_zero(Profile::exp(1.0, 1.0).unwrap()).unwrap();
        assert!((closed_form_i(&f).unwrap() - 2.0).abs() < 1e-15);
        assert_eq!(closed_form_density(&f, &PrefixState::origin()).unwrap(), 1.0);
        let grid = Arc::new(SpaceGrid::new(vec![0.0]).unwrap());
        let field = LocalTimeField::new(grid, vec![0.8]).unwrap();
        let d = closed_form_density(&f, &PrefixState { x: -1.3, field }).unwrap();
        assert!((d - 2.3 * (-0.8f64).exp()).abs() < 1e-14);
    }

    #[test]
    fn example_two_density() {
        let f = builtin_supremum(Profile::exp(1.0, 1.0).unwrap()).unwrap();
        assert_eq!(closed_form_density(&f, &PrefixState::origin()).unwrap(), 1.0);
        let grid = Arc::new(SpaceGrid::new(vec![0.0]).unwrap());
        let field = LocalTimeField::new(grid, vec![0.8]).unwrap().with_support(Support { lo: -0.2, hi: 1.5 });
        let d = closed_form_density(&f, &PrefixState { x: 0.5, field: field.clone() }).unwrap();
        assert!((d - 2.0 * (-1.5f64).exp()).abs() < 1e-14);
        assert!(closed_form_density(&f, &PrefixState { x: 2.0, field }).is_err());
    }

    #[test]
    fn example_four_density_matches_oracle() {
        let f = builtin_two_level(Profile2::exp(1.0, 1.0, 1.0).unwrap(), -0.5, 0.5).unwrap();
        let grid = Arc::new(SpaceGrid::new(vec![-0.5, 0.0, 0.5]).unwrap());
        let field = LocalTimeField::new(grid, vec![0.3, 0.9, 0.2]).unwrap();
        for x in [-0.9, -0.1, 0.4, 1.2] {
            let d = closed_form_density(&f, &PrefixState { x, field: field.clone() }).unwrap();
            let want = (-0.5f64).exp() * laplace_oracle(1.0, 1.0, -0.5 - x, 0.5 - x);
            assert!((d - want).abs() < 1e-8, "x={x}: {d} vs {want}");
        }
    }
}
