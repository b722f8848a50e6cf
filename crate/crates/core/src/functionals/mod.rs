//! Functionals of local-time fields, their domination certificates, the
//! space shift, and the built-in examples.

mod certificate;
mod closed_form;
mod profile;

use std::fmt;
use std::sync::Arc;

pub use certificate::DominationCertificate;
pub use closed_form::{closed_form_density, closed_form_i, two_level_integral, PrefixState};
pub use profile::{Envelope, Fn1, Fn2, Potential, Profile, Profile2};

use crate::error::{invalid, Error, Result};
use crate::field::{integrate_weighted, FieldView, LocalTimeField, ShiftedField};

/// The cutoff `φ(x)`: 1 on `[0, 1/3]`, `2 − 3x` on `[1/3, 2/3]`, 0 beyond.
pub fn cutoff_phi(x: f64) -> f64 {
    if x <= 1.0 / 3.0 {
        1.0
    } else if x <= 2.0 / 3.0 {
        2.0 - 3.0 * x
    } else {
        0.0
    }
}

/// Which parts of a field a functional reads; used to build sampling grids.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Reads {
    /// Levels read pointwise.
    pub levels: Vec<f64>,
    /// Interval read as a whole (integrals, extrema).
    pub window: Option<(f64, f64)>,
    /// Whether the exact zero set (support) is needed.
    pub support: bool,
    /// Whether the functional reads the entire known range of the field.
    pub whole: bool,
}

/// Closed-form identity of a built-in functional.
#[derive(Debug, Clone)]
pub enum Builtin {
    /// `φ(l^0)`
    LocalTimeZero(Profile),
    /// `φ(inf{y >= 0 : l^y = 0})`
    Supremum(Profile),
    /// `exp(-∫ V(y) l^y dy)`
    ExpIntegral { v: Potential },
    /// `φ(l^{y1}, l^{y2})`
    TwoLevel { phi: Profile2, y1: f64, y2: f64 },
    /// `exp(-∫ (l^y)² dy)`
    Edwards,
    Zero,
}

type EvalFn = Arc<dyn Fn(&dyn FieldView) -> f64 + Send + Sync>;

/// One stage of a staged approximation: `F_k` and a certificate for `|F_k − F_{k-1}|`.
#[derive(Clone, Debug)]
pub struct Stage {
    pub functional: FunctionalSpec,
    pub certificate: DominationCertificate,
}

/// Staged approximation `0 = F_0, F_1, F_2, …` with total budget `Σ N_{c_k}(h_k)`.
#[derive(Clone, Debug)]
pub struct ApproximationSequence {
    pub stages: Vec<Stage>,
    pub budget_sum: f64,
}

impl ApproximationSequence {
    pub fn new(stages: Vec<Stage>) -> Result<Self> {
        let budget_sum = stages
            .iter()
            .map(|s| s.certificate.budget())
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .sum();
        Ok(Self { stages, budget_sum })
    }
}

/// An evaluatable functional with optional certificate and closed forms.
#[derive(Clone)]
pub struct FunctionalSpec {
    name: String,
    eval: EvalFn,
    certificate: Option<DominationCertificate>,
    stages: Option<ApproximationSequence>,
    reads: Reads,
    builtin: Option<Builtin>,
}

impl fmt::Debug for FunctionalSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FunctionalSpec")
            .field("name", &self.name)
            .field("certificate", &self.certificate)
            .field("reads", &self.reads)
            .field("builtin", &self.builtin)
            .finish()
    }
}

impl FunctionalSpec {
    /// A user functional with explicit read set.
    pub fn new<F>(name: &str, reads: Reads, eval: F) -> Self
    where
        F: Fn(&dyn FieldView) -> f64 + Send + Sync + 'static,
    {
        Self {
            name: name.to_string(),
            eval: Arc::new(eval),
            certificate: None,
            stages: None,
            reads,
            builtin: None,
        }
    }

    pub fn with_certificate(mut self, cert: DominationCertificate) -> Self {
        self.certificate = Some(cert);
        self
    }

    pub fn with_stages(mut self, stages: ApproximationSequence) -> Self {
        self.stages = Some(stages);
        self
    }

    fn with_builtin(mut self, b: Builtin) -> Self {
        self.builtin = Some(b);
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn evaluate(&self, field: &dyn FieldView) -> f64 {
        (self.eval)(field)
    }

    pub fn certificate(&self) -> Option<&DominationCertificate> {
        self.certificate.as_ref()
    }

    pub fn stages(&self) -> Option<&ApproximationSequence> {
        self.stages.as_ref()
    }

    pub fn reads(&self) -> &Reads {
        &self.reads
    }

    pub fn builtin(&self) -> Option<&Builtin> {
        self.builtin.as_ref()
    }

    /// Upper bound on `N^{(n)}(F)`: the certificate budget, else the staged
    /// budget sum.
    pub fn budget_bound(&self) -> Option<f64> {
        if let Some(c) = &self.certificate {
            return c.budget().ok();
        }
        self.stages.as_ref().map(|s| s.budget_sum)
    }

    /// Window half-width of the certificate (or the largest stage window).
    pub fn window(&self) -> Option<f64> {
        self.certificate
            .as_ref()
            .map(|c| c.c)
            .or_else(|| self.stages.as_ref().and_then(|s| s.stages.last().map(|st| st.certificate.c)))
    }

    /// Grid points the functional reads pointwise, including window ends.
    pub fn required_points(&self) -> Vec<f64> {
        let mut pts = self.reads.levels.clone();
        if let Some((a, b)) = self.reads.window {
            pts.push(a);
            pts.push(b);
        }
        pts
    }
}

/// `F ≡ 0`.
pub fn builtin_zero() -> FunctionalSpec {
    FunctionalSpec::new("zero", Reads::default(), |_| 0.0)
        .with_certificate(DominationCertificate {
            c: 0.0,
            n: 0.0,
            h: Envelope::Exp { scale: 0.0, rate: 1.0 },
        })
        .with_builtin(Builtin::Zero)
}

/// Local time at zero: `F(l) = φ(l^0)` with certificate `C(1, 0, ψ)`.
pub fn builtin_local_time_zero(phi: Profile) -> Result<FunctionalSpec> {
    let cert = DominationCertificate::new(1.0, 0.0, phi.envelope())?;
    let p = phi.clone();
    let reads = Reads {
        levels: vec![0.0],
        ..Reads::default()
    };
    Ok(FunctionalSpec::new("local_time_zero", reads, move |f| p.eval(f.value_at(0.0)))
        .with_certificate(cert)
        .with_builtin(Builtin::LocalTimeZero(phi)))
}

fn first_zero_right(f: &dyn FieldView) -> f64 {
    f.first_zero_from(0.0).unwrap_or(f64::NAN)
}

/// Maximum number of stages kept for staged approximations.
const MAX_STAGES: usize = 40;

/// Supremum: `F(l) = φ(inf{y >= 0 : l^y = 0})`, with the staged sequence
/// `F_k = φ·1_{[0, 2^k − 1)}` and stage certificates
/// `C(2^k − 1, 0, ψ(2^{k-1} − 1)·1_{0})`. Fields that never vanish evaluate
/// to `φ(∞) = 0`.
pub fn builtin_supremum(phi: Profile) -> Result<FunctionalSpec> {
    let psi = phi.envelope();
    psi.check_decreasing()?;
    let mut stages = Vec::new();
    for k in 1..=MAX_STAGES {
        let cut = 2f64.powi(k as i32) - 1.0;
        let value = psi.eval(2f64.powi(k as i32 - 1) - 1.0);
        let p = phi.clone();
        let reads = Reads {
            window: Some((-cut, cut)),
            support: true,
            ..Reads::default()
        };
        let fk = FunctionalSpec::new(&format!("supremum_stage_{k}"), reads, move |f| {
            match f.first_zero_from(0.0) {
                Some(z) if z < cut => p.eval(z),
                Some(_) => 0.0,
                None if f.known_range().1 >= cut => 0.0,
                None => f64::NAN,
            }
        });
        stages.push(Stage {
            functional: fk,
            certificate: DominationCertificate {
                c: cut,
                n: 0.0,
                h: Envelope::AtZero { value },
            },
        });
        if value * (cut + 1.0) < 1e-300 || (k > 1 && value * cut < 1e-17) {
            break;
        }
    }
    let p = phi.clone();
    let reads = Reads {
        support: true,
        ..Reads::default()
    };
    Ok(FunctionalSpec::new("supremum", reads, move |f| p.eval(first_zero_right(f)))
        .with_stages(ApproximationSequence::new(stages)?)
        .with_builtin(Builtin::Supremum(phi)))
}

/// Smallest `c ∈ {1, 2, 4, …}` with `∫_{-c}^c V > 0`.
fn base_window(v: &Potential) -> Result<f64> {
    let mut c = 1.0;
    for _ in 0..64 {
        if v.mass(-c, c) > 0.0 {
            return Ok(c);
        }
        c *= 2.0;
    }
    Err(invalid("potential", "V vanishes on every window"))
}

/// Exponential potential: `F(l) = exp(-∫ V l)` with stages
/// `F_k = exp(-∫_{-2^k c}^{2^k c} V l)` and certificates `C(2^k c, 1, h_k)`,
/// `h_k(l) = (1_{k=1} + ∫_{ring_k} V)(l + 2^k c + ρ^{-1}) e^{-ρ l}`.
pub fn builtin_exp_integral(v: Potential) -> Result<FunctionalSpec> {
    v.weighted_mass()?;
    let c = base_window(&v)?;
    let rho = v.mass(-c, c);
    let (vlo, vhi) = v.support();
    let reach = vlo.abs().max(vhi.abs());
    let mut stages = Vec::new();
    let mut k = 1;
    loop {
        let w = 2f64.powi(k) * c;
        let ring = v.mass(-w, w) - v.mass(-w / 2.0, w / 2.0);
        let lead = if k == 1 { 1.0 } else { 0.0 } + ring.max(0.0);
        let vk = v.clone();
        let reads = Reads {
            window: Some((-w, w)),
            ..Reads::default()
        };
        let fk = FunctionalSpec::new(&format!("exp_integral_stage_{k}"), reads, move |f| {
            (-integrate_weighted(f, -w, w, |y| vk.eval(y))).exp()
        });
        stages.push(Stage {
            functional: fk,
            certificate: DominationCertificate::new(
                w,
                1.0,
                Envelope::LinearExp {
                    scale: lead,
                    shift: w + 1.0 / rho,
                    rate: rho,
                },
            )?,
        });
        if w / 2.0 >= reach || k as usize >= MAX_STAGES {
            break;
        }
        k += 1;
    }
    let vv = v.clone();
    let reads = Reads {
        window: Some((vlo, vhi)),
        ..Reads::default()
    };
    Ok(FunctionalSpec::new("exp_integral", reads, move |f| {
        (-integrate_weighted(f, vlo, vhi, |y| vv.eval(y))).exp()
    })
    .with_stages(ApproximationSequence::new(stages)?)
    .with_builtin(Builtin::ExpIntegral { v }))
}

/// The bound `4 (1 + ρ^{-1} + ρ^{-2}) (c² + ∫(1+y²)V)` on the staged budget of the exponential potential.
pub fn exp_integral_budget_bound(v: &Potential) -> Result<f64> {
    let c = base_window(v)?;
    let rho = v.mass(-c, c);
    Ok(4.0 * (1.0 + 1.0 / rho + 1.0 / (rho * rho)) * (c * c + v.weighted_mass()?))
}

/// Two levels: `F(l) = φ(l^{y1}, l^{y2})` with certificate `C(|y1| ∨ |y2|, 0, h)`.
pub fn builtin_two_level(phi: Profile2, y1: f64, y2: f64) -> Result<FunctionalSpec> {
    if !(y1 < y2) || !y1.is_finite() || !y2.is_finite() {
        return Err(invalid("y1", format!("need finite y1 < y2, got {y1}, {y2}")));
    }
    let cert = DominationCertificate::new(y1.abs().max(y2.abs()), 0.0, phi.envelope())?;
    let p = phi.clone();
    let reads = Reads {
        levels: vec![y1, y2],
        ..Reads::default()
    };
    Ok(FunctionalSpec::new("two_level", reads, move |f| p.eval(f.value_at(y1), f.value_at(y2)))
        .with_certificate(cert)
        .with_builtin(Builtin::TwoLevel { phi, y1, y2 }))
}

/// Edwards' functional `exp(-∫ (l^y)² dy)`, integrated over the known range
/// of the field. No certificate.
pub fn builtin_edwards() -> FunctionalSpec {
    let reads = Reads {
        whole: true,
        ..Reads::default()
    };
    FunctionalSpec::new("edwards", reads, |f| {
        let (lo, hi) = f.known_range();
        let nodes = f.nodes_in(lo, hi);
        let sq: Vec<f64> = nodes.iter().map(|&y| f.value_at(y).powi(2)).collect();
        let integral: f64 = nodes
            .windows(2)
            .zip(sq.windows(2))
            .map(|(y, v)| 0.5 * (v[0] + v[1]) * (y[1] - y[0]))
            .sum();
        (-integral).exp()
    })
    .with_builtin(Builtin::Edwards)
}

/// The shifted functional `l ↦ F((l0^y + l^{y−x})_y)`; a certificate
/// `(c, n, h)` is transported to `(c + |x|, n, 2^n((sup l0)^n + (1+|x|)^n) h)`.
pub fn shift(f: &FunctionalSpec, base: Arc<LocalTimeField>, x: f64) -> Result<FunctionalSpec> {
    if !x.is_finite() {
        return Err(invalid("offset", "must be finite"));
    }
    for y in f.required_points() {
        if !base.value_at(y).is_finite() {
            return Err(Error::Grid(format!("base field unknown at level {y}")));
        }
    }
    if let Some((a, b)) = f.reads.window {
        // Parts of the window outside the grid must lie outside the support.
        let (ga, gb) = (base.grid().lo(), base.grid().hi());
        let covered = match base.support() {
            Some(s) => a.max(s.lo) >= ga && b.min(s.hi) <= gb,
            None => base.grid().spans(a, b),
        };
        if !covered {
            return Err(Error::Grid(format!("base field does not cover the window [{a}, {b}]")));
        }
    }
    if f.reads.support && base.support().is_none() {
        return Err(Error::Grid("functional needs the exact support of the base field".into()));
    }
    let sup_base = base.values().iter().copied().fold(0.0, f64::max);
    let inner = f.clone();
    let base_ref = base.clone();
    let reads = Reads {
        levels: f.reads.levels.iter().map(|y| y - x).collect(),
        window: f.reads.window.map(|(a, b)| (a - x, b - x)),
        support: f.reads.support,
        whole: f.reads.whole,
    };
    let mut out = FunctionalSpec::new(&format!("{}@shift({x})", f.name), reads, move |l| {
        inner.evaluate(&ShiftedField::new(&*base_ref, l, x))
    });
    out.certificate = f.certificate.as_ref().map(|c| c.transport(sup_base, x));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Support;
    use crate::grid::SpaceGrid;

    fn field(points: &[f64], values: &[f64]) -> LocalTimeField {
        LocalTimeField::new(Arc::new(SpaceGrid::new(points.to_vec()).unwrap()), values.to_vec()).unwrap()
    }

    #[test]
    fn cutoff_values() {
        assert_eq!(cutoff_phi(0.2), 1.0);
        assert!((cutoff_phi(0.5) - 0.5).abs() < 1e-15);
        assert_eq!(cutoff_phi(0.9), 0.0);
        assert_eq!(cutoff_phi(2.0 / 3.0), 0.0);
    }

    #[test]
    fn local_time_zero_reads_level_zero() {
        let f = builtin_local_time_zero(Profile::exp(1.0, 1.0).unwrap()).unwrap();
        let l = field(&[-1.0, 0.0, 1.0], &[5.0, 0.5, 7.0]);
        assert!((f.evaluate(&l) - (-0.5f64).exp()).abs() < 1e-15);
        assert!((f.budget_bound().unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn supremum_reads_first_zero() {
        let f = builtin_supremum(Profile::exp(1.0, 1.0).unwrap()).unwrap();
        let l = field(&[-1.0, 0.0, 1.0, 1.5, 2.0], &[0.0, 1.0, 0.3, 0.0, 0.0]);
        assert!((f.evaluate(&l) - (-1.5f64).exp()).abs() < 1e-15);
        let never = field(&[0.0, 1.0], &[1.0, 1.0]).with_support(Support { lo: -1.0, hi: f64::INFINITY });
        assert_eq!(f.evaluate(&never), 0.0);
    }

    #[test]
    fn supremum_budget_is_below_closed_bound() {
        let f = builtin_supremum(Profile::exp(1.0, 1.0).unwrap()).unwrap();
        let s = f.stages().unwrap();
        assert!(s.budget_sum <= 5.0);
        // Σ (2^k − 1) e^{-(2^{k-1} − 1)}, summed directly.
        let direct: f64 = (1..30).map(|k| (2f64.powi(k) - 1.0) * (-(2f64.powi(k - 1) - 1.0)).exp()).sum();
        assert!((s.budget_sum - direct).abs() < 1e-12);
    }

    #[test]
    fn exp_integral_budget_below_bound() {
        let v = Potential::indicator(1.0, -0.5, 3.0).unwrap();
        let f = builtin_exp_integral(v.clone()).unwrap();
        let s = f.stages().unwrap();
        assert!(s.budget_sum <= exp_integral_budget_bound(&v).unwrap());
        assert!(s.stages.len() >= 2);
    }

    #[test]
    fn edwards_has_no_certificate() {
        let f = builtin_edwards();
        assert!(f.certificate().is_none());
        let l = field(&[-1.0, 0.0, 1.0], &[1.0, 1.0, 1.0]);
        assert!((f.evaluate(&l) - (-2.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn shift_by_zero_field_is_identity() {
        let f = builtin_two_level(Profile2::exp(1.0, 1.0, 1.0).unwrap(), -0.5, 0.5).unwrap();
        let g = shift(&f, Arc::new(LocalTimeField::zero()), 0.0).unwrap();
        let l = field(&[-1.0, -0.5, 0.0, 0.5, 1.0], &[0.1, 0.2, 0.3, 0.4, 0.5]);
        assert_eq!(f.evaluate(&l), g.evaluate(&l));
    }

    #[test]
    fn shifted_local_time_zero() {
        let f = builtin_local_time_zero(Profile::exp(1.0, 1.0).unwrap()).unwrap();
        let base = Arc::new(field(&[-1.0, 0.0, 1.0], &[0.0, 0.7, 0.0]));
        let g = shift(&f, base, 0.4).unwrap();
        assert_eq!(g.reads().levels, vec![-0.4]);
        let l = field(&[-1.0, -0.4, 0.0, 1.0], &[0.0, 1.1, 2.0, 0.0]);
        assert!((g.evaluate(&l) - (-(0.7f64 + 1.1)).exp()).abs() < 1e-15);
        let cert = g.certificate().unwrap();
        assert!((cert.c - 1.4).abs() < 1e-15);
    }

    #[test]
    fn shift_rejects_uncovered_base() {
        let f = builtin_two_level(Profile2::exp(1.0, 1.0, 1.0).unwrap(), -0.5, 2.0).unwrap();
        let base = Arc::new(field(&[-1.0, 0.0, 1.0], &[0.0, 0.7, 0.0]));
        assert!(shift(&f, base, 0.0).is_err());
    }
}
