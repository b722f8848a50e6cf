//! Moment accumulators, standard errors, and a few classical test statistics.

use serde::{Deserialize, Serialize};

/// A point estimate with its Monte Carlo standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
}

impl Estimate {
    pub fn new(value: f64, std_error: f64) -> Self {
        Self { value, std_error }
    }

    pub fn exact(value: f64) -> Self {
        Self::new(value, 0.0)
    }

    pub fn scale(self, k: f64) -> Self {
        Self::new(self.value * k, self.std_error * k.abs())
    }

    /// Standard error of the difference of two independent estimates.
    pub fn joint_se(self, other: Estimate) -> f64 {
        self.std_error.hypot(other.std_error)
    }

    /// `|self - other| <= k · joint SE`.
    pub fn agrees_with(self, other: Estimate, k: f64) -> bool {
        (self.value - other.value).abs() <= k * self.joint_se(other)
    }

    /// `|self - target| <= k · SE` for an exact target.
    pub fn agrees_with_value(self, target: f64, k: f64) -> bool {
        (self.value - target).abs() <= k * self.std_error
    }
}

/// Running sums for `K` jointly observed quantities (means and covariances).
#[derive(Debug, Clone, PartialEq)]
pub struct Moments {
    count: u64,
    sum: Vec<f64>,
    cross: Vec<f64>,
}

impl Moments {
    pub fn new(k: usize) -> Self {
        Self {
            count: 0,
            sum: vec![0.0; k],
            cross: vec![0.0; k * k],
        }
    }

    pub fn dim(&self) -> usize {
        self.sum.len()
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn push(&mut self, xs: &[f64]) {
        let k = self.dim();
        debug_assert_eq!(xs.len(), k);
        self.count += 1;
        for i in 0..k {
            self.sum[i] += xs[i];
            for j in i..k {
                self.cross[i * k + j] += xs[i] * xs[j];
            }
        }
    }

    pub fn merge(&mut self, other: &Moments) {
        debug_assert_eq!(self.dim(), other.dim());
        self.count += other.count;
        for (a, b) in self.sum.iter_mut().zip(&other.sum) {
            *a += b;
        }
        for (a, b) in self.cross.iter_mut().zip(&other.cross) {
            *a += b;
        }
    }

    pub fn mean(&self, i: usize) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.sum[i] / self.count as f64
        }
    }

    /// Unbiased sample covariance of quantities `i` and `j`.
    pub fn covariance(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        let n = self.count as f64;
        if self.count < 2 {
            return 0.0;
        }
        let k = self.dim();
        let c = (self.cross[i * k + j] - self.sum[i] * self.sum[j] / n) / (n - 1.0);
        if i == j {
            c.max(0.0)
        } else {
            c
        }
    }

    pub fn variance(&self, i: usize) -> f64 {
        self.covariance(i, i)
    }

    /// Mean of quantity `i` with the standard error of the mean.
    pub fn estimate(&self, i: usize) -> Estimate {
        let se = if self.count < 2 {
            0.0
        } else {
            (self.variance(i) / self.count as f64).sqrt()
        };
        Estimate::new(self.mean(i), se)
    }

    /// Mean of `x_i - x_j` with its standard error (paired samples).
    pub fn difference(&self, i: usize, j: usize) -> Estimate {
        let var = self.variance(i) + self.variance(j) - 2.0 * self.covariance(i, j);
        let se = if self.count < 2 {
            0.0
        } else {
            (var.max(0.0) / self.count as f64).sqrt()
        };
        Estimate::new(self.mean(i) - self.mean(j), se)
    }
}

/// Combines blocks in a fixed pairwise order so the floating-point result is
/// independent of how the blocks were scheduled.
pub fn pairwise_merge(mut blocks: Vec<Moments>, k: usize) -> Moments {
    if blocks.is_empty() {
        return Moments::new(k);
    }
    while blocks.len() > 1 {
        let mut next = Vec::with_capacity(blocks.len().div_ceil(2));
        let mut it = blocks.into_iter();
        while let Some(mut a) = it.next() {
            if let Some(b) = it.next() {
                a.merge(&b);
            }
            next.push(a);
        }
        blocks = next;
    }
    blocks.pop().unwrap()
}

/// Delta-method standard error of `a / b` given variances and covariance of
/// the two estimators.
pub fn ratio_estimate(a: f64, b: f64, var_a: f64, var_b: f64, cov_ab: f64) -> Estimate {
    let r = a / b;
    let var = (var_a - 2.0 * r * cov_ab + r * r * var_b) / (b * b);
    Estimate::new(r, var.max(0.0).sqrt())
}

/// One-sample Kolmogorov–Smirnov statistic of a sorted sample against `cdf`.
///
/// Ties are grouped, and the empirical CDF just below a tied value is compared
/// with the left limit of `cdf`, so distributions with atoms are handled.
pub fn ks_statistic<F: Fn(f64) -> f64>(sorted: &[f64], cdf: F) -> f64 {
    let n = sorted.len() as f64;
    let mut d = 0.0_f64;
    let mut i = 0;
    while i < sorted.len() {
        let x = sorted[i];
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == x {
            j += 1;
        }
        let below = i as f64 / n;
        let at = (j + 1) as f64 / n;
        d = d.max((at - cdf(x)).abs()).max((cdf(x.next_down()) - below).abs());
        i = j + 1;
    }
    d
}

/// Asymptotic critical value of the one-sample KS statistic at level `alpha`.
pub fn ks_critical(n: usize, alpha: f64) -> f64 {
    (-0.5 * (alpha / 2.0).ln()).sqrt() / (n as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moments_match_direct_formulas() {
        let data = [[1.0, 2.0], [2.0, 1.0], [4.0, 5.0], [3.0, 3.0]];
        let mut m = Moments::new(2);
        for row in &data {
            m.push(row);
        }
        assert_eq!(m.mean(0), 2.5);
        assert!((m.variance(0) - 5.0 / 3.0).abs() < 1e-12);
        assert!((m.covariance(0, 1) - 5.5 / 3.0).abs() < 1e-12);
        let d = m.difference(0, 1);
        assert!((d.value - (-0.25)).abs() < 1e-12);
    }

    #[test]
    fn pairwise_merge_equals_sequential_sums() {
        let mut blocks = Vec::new();
        let mut all = Moments::new(1);
        for b in 0..7 {
            let mut m = Moments::new(1);
            for i in 0..5 {
                let x = (b * 5 + i) as f64;
                m.push(&[x]);
                all.push(&[x]);
            }
            blocks.push(m);
        }
        let merged = pairwise_merge(blocks, 1);
        assert_eq!(merged.count(), all.count());
        assert_eq!(merged.mean(0), all.mean(0));
    }

    #[test]
    fn ks_on_uniform_grid_is_small() {
        let n = 1000;
        let xs: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let d = ks_statistic(&xs, |x| x.clamp(0.0, 1.0));
        assert!(d <= 0.5 / n as f64 + 1e-12);
        assert!((ks_critical(100_000, 0.001) - 0.00617).abs() < 1e-4);
    }

    #[test]
    fn ratio_se_of_exact_ratio_is_zero() {
        let e = ratio_estimate(2.0, 4.0, 0.0, 0.0, 0.0);
        assert_eq!(e, Estimate::new(0.5, 0.0));
    }
}
