//! Deterministic quadrature: composite and adaptive Gauss–Legendre rules.

use crate::error::{Error, Result};

/// Nodes and weights of an `n`-point Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Tricomi initial guess, then Newton on P_n.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Integral of `f` over `[a, b]` with a single application of the rule.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }

    /// Mapped nodes and weights on `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, w * half))
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let (pn, pn1) = if n == 0 { (1.0, 0.0) } else { (p1, p0) };
    let d = if n == 0 {
        0.0
    } else {
        n as f64 * (x * pn - pn1) / (x * x - 1.0)
    };
    (pn, d)
}

/// Composite Gauss–Legendre rule: `panels` equal panels of `order` nodes.
#[derive(Debug, Clone)]
pub struct Composite {
    rule: GaussLegendre,
    panels: usize,
}

impl Composite {
    pub fn new(total_nodes: usize, order: usize) -> Self {
        let panels = (total_nodes / order).max(1);
        Self {
            rule: GaussLegendre::new(order),
            panels,
        }
    }

    pub fn total_nodes(&self) -> usize {
        self.panels * self.rule.len()
    }

    /// All nodes and weights for `[a, b]`.
    pub fn nodes(&self, a: f64, b: f64) -> Vec<(f64, f64)> {
        let h = (b - a) / self.panels as f64;
        (0..self.panels)
            .flat_map(|p| {
                let lo = a + p as f64 * h;
                self.rule.mapped(lo, lo + h).collect::<Vec<_>>()
            })
            .collect()
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let h = (b - a) / self.panels as f64;
        (0..self.panels)
            .map(|p| {
                let lo = a + p as f64 * h;
                self.rule.integrate(lo, lo + h, &mut f)
            })
            .sum()
    }
}

/// Smallest point `z >= start` (found by doubling) beyond which `|f|` stays
/// below `tol` on a probe grid over `[z, 4z]`.
pub fn truncation_point<F: Fn(f64) -> f64>(f: F, start: f64, tol: f64) -> Result<f64> {
    let mut z = start.max(1e-3);
    for _ in 0..64 {
        let quiet = (0..=64).all(|i| {
            let y = z * (1.0 + 3.0 * i as f64 / 64.0);
            f(y).abs() < tol
        });
        if quiet {
            return Ok(z);
        }
        z *= 2.0;
    }
    Err(Error::Divergent(format!(
        "integrand does not fall below {tol} before {z}"
    )))
}

/// Adaptive Gauss–Legendre (16-point rule, bisection until the two-panel
/// estimate agrees with the one-panel estimate to `tol`).
pub fn adaptive<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    thread_local! {
        static RULE: GaussLegendre = GaussLegendre::new(16);
    }
    RULE.with(|rule| {
        let whole = rule.integrate(a, b, f);
        adaptive_step(rule, f, a, b, whole, tol, 40)
    })
}

fn adaptive_step<F: Fn(f64) -> f64>(
    rule: &GaussLegendre,
    f: &F,
    a: f64,
    b: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let mid = 0.5 * (a + b);
    let left = rule.integrate(a, mid, f);
    let right = rule.integrate(mid, b, f);
    let split = left + right;
    if depth == 0 || (split - whole).abs() <= tol.max(1e-15 * split.abs()) {
        return split;
    }
    adaptive_step(rule, f, a, mid, left, 0.5 * tol, depth - 1)
        + adaptive_step(rule, f, mid, b, right, 0.5 * tol, depth - 1)
}

/// `∫_0^∞ f`, integrated on dyadic panels `[0,1], [1,2], [2,4], …` until two
/// consecutive panels contribute less than `tol`. Fails on a divergent tail.
pub fn integrate_half_line<F: Fn(f64) -> f64>(f: F, tol: f64) -> Result<f64> {
    let mut total = adaptive(&f, 0.0, 1.0, tol);
    let mut lo = 1.0_f64;
    let mut quiet = 0;
    for _ in 0..90 {
        let hi = 2.0 * lo;
        let part = adaptive(&f, lo, hi, tol);
        if !part.is_finite() {
            return Err(Error::Divergent(format!("non-finite integrand on [{lo}, {hi}]")));
        }
        total += part;
        if part.abs() <= tol * total.abs().max(1.0) {
            quiet += 1;
            if quiet >= 2 {
                return Ok(total);
            }
        } else {
            quiet = 0;
        }
        lo = hi;
    }
    Err(Error::Divergent(format!(
        "tail still contributing beyond {lo:e}"
    )))
}

/// `∫_{-∞}^{∞} f` as two half-line integrals.
pub fn integrate_line<F: Fn(f64) -> f64>(f: F, tol: f64) -> Result<f64> {
    let right = integrate_half_line(&f, tol)?;
    let left = integrate_half_line(|y| f(-y), tol)?;
    Ok(left + right)
}
