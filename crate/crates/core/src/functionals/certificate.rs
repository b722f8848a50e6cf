//! Domination certificates `C(c, n, h)` and their budgets `N_c(h)`.

use std::fmt;

use crate::error::{require_nonnegative, Result};
use crate::field::{extrema, FieldView};

use super::profile::Envelope;

/// Window `c`, exponent `n` and decreasing envelope `h` such that the
/// functional depends only on `[-c, c]` and is bounded by
/// `((sup + c)/(inf + c))^n · h(inf)` with sup/inf over the window.
#[derive(Clone)]
pub struct DominationCertificate {
    pub c: f64,
    pub n: f64,
    pub h: Envelope,
}

impl fmt::Debug for DominationCertificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "C({}, {}, {:?})", self.c, self.n, self.h)
    }
}

impl DominationCertificate {
    pub fn new(c: f64, n: f64, h: Envelope) -> Result<Self> {
        require_nonnegative("c", c)?;
        require_nonnegative("n", n)?;
        h.check_decreasing()?;
        Ok(Self { c, n, h })
    }

    /// `N_c(h) = c·h(0) + ∫_0^∞ h`.
    pub fn budget(&self) -> Result<f64> {
        Ok(self.c * self.h.eval(0.0) + self.h.integral()?)
    }

    /// Right-hand side of the domination inequality for a field.
    pub fn bound(&self, field: &dyn FieldView) -> f64 {
        let (inf, sup) = extrema(field, -self.c, self.c);
        let ratio = if sup + self.c > 0.0 {
            (sup + self.c) / (inf + self.c)
        } else {
            1.0
        };
        let factor = if self.n == 0.0 { 1.0 } else { ratio.powf(self.n) };
        factor * self.h.eval(inf)
    }

    /// Whether `value` obeys the domination inequality on `field`.
    pub fn holds(&self, field: &dyn FieldView, value: f64) -> bool {
        let b = self.bound(field);
        value <= b * (1.0 + 1e-12) + 1e-300
    }

    /// Certificate of the shifted functional `l ↦ F(l0 + l(· − x))` where
    /// `sup_base = sup l0`: `(c + |x|, n, 2^n (sup_base^n + (1+|x|)^n) h)`.
    pub fn transport(&self, sup_base: f64, x: f64) -> Self {
        let n = self.n;
        let factor = 2f64.powf(n) * (sup_base.powf(n) + (1.0 + x.abs()).powf(n));
        Self {
            c: self.c + x.abs(),
            n,
            h: Envelope::Scaled {
                factor,
                inner: Box::new(self.h.clone()),
            },
        }
    }

    /// Upper bound `2^n (1 + sup_base^n) (1+|x|)^{n+1} N_c(h)` on the budget
    /// of the transported certificate (valid for `c >= 1`).
    pub fn transported_budget_bound(&self, sup_base: f64, x: f64) -> Result<f64> {
        let n = self.n;
        Ok(2f64.powf(n) * (1.0 + sup_base.powf(n)) * (1.0 + x.abs()).powf(n + 1.0) * self.budget()?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::LocalTimeField;
    use crate::grid::SpaceGrid;
    use std::sync::Arc;

    #[test]
    fn budget_of_unit_exponential() {
        let cert = DominationCertificate::new(1.0, 0.0, Envelope::Exp { scale: 1.0, rate: 1.0 }).unwrap();
        assert!((cert.budget().unwrap() - 2.0).abs() < 1e-12);
        let c0 = DominationCertificate::new(0.0, 0.0, Envelope::Exp { scale: 1.0, rate: 2.0 }).unwrap();
        assert!((c0.budget().unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn rejects_increasing_envelope() {
        let h = Envelope::LinearExp { scale: 1.0, shift: -5.0, rate: 0.0 };
        assert!(DominationCertificate::new(1.0, 0.0, h).is_err());
    }

    #[test]
    fn bound_uses_window_extrema() {
        let grid = Arc::new(SpaceGrid::new(vec![-2.0, -1.0, 0.0, 1.0, 2.0]).unwrap());
        let f = LocalTimeField::new(grid, vec![100.0, 1.0, 3.0, 2.0, 100.0]).unwrap();
        let cert = DominationCertificate::new(1.0, 1.0, Envelope::Exp { scale: 1.0, rate: 1.0 }).unwrap();
        let want = (3.0 + 1.0) / (1.0 + 1.0) * (-1.0f64).exp();
        assert!((cert.bound(&f) - want).abs() < 1e-15);
    }

    #[test]
    fn transported_budget_obeys_bound() {
        let cert = DominationCertificate::new(1.5, 1.0, Envelope::Exp { scale: 1.0, rate: 0.5 }).unwrap();
        for &(s, x) in &[(0.0, 0.0), (2.0, -1.5), (0.3, 4.0)] {
            let moved = cert.transport(s, x);
            assert!(moved.budget().unwrap() <= cert.transported_budget_bound(s, x).unwrap() * (1.0 + 1e-12));
        }
    }
}
