//! Modified Bessel functions of the first kind for integer order.
//!
//! Only integer orders are needed: the squared Bessel densities of dimension
//! 0, 2 and 4 use ν = -1, 0, 1 and `I_{-n} = I_n` for integer `n`.

/// Argument at which the power series hands over to the large-argument expansion.
pub const SERIES_ASYMPTOTIC_SWITCH: f64 = 30.0;

const REL_TOL: f64 = 1e-16;

/// `e^{-z} I_n(z)` for integer `n` and `z >= 0`.
///
/// The scaled form keeps densities like `exp(-(x+y)/2t) I_ν(√(xy)/t)` finite
/// for arguments where `I_n` itself overflows.
pub fn bessel_i_scaled(order: i32, z: f64) -> f64 {
    debug_assert!(z >= 0.0, "bessel_i_scaled needs z >= 0, got {z}");
    let n = order.unsigned_abs();
    if z == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    if z < SERIES_ASYMPTOTIC_SWITCH {
        series(n, z) * (-z).exp()
    } else {
        asymptotic_scaled(n, z)
    }
}

/// `I_n(z)` for integer `n`; overflows to `inf` past `z ≈ 710`.
pub fn bessel_i(order: i32, z: f64) -> f64 {
    let n = order.unsigned_abs();
    if z < SERIES_ASYMPTOTIC_SWITCH {
        if z == 0.0 {
            return if n == 0 { 1.0 } else { 0.0 };
        }
        series(n, z)
    } else {
        asymptotic_scaled(n, z) * z.exp()
    }
}

fn series(n: u32, z: f64) -> f64 {
    let half = 0.5 * z;
    let mut term = 1.0;
    for j in 1..=n {
        term *= half / j as f64;
    }
    let q = half * half;
    let mut sum = term;
    let mut k = 0.0_f64;
    loop {
        k += 1.0;
        term *= q / (k * (k + n as f64));
        sum += term;
        if term <= REL_TOL * sum {
            break;
        }
    }
    sum
}

fn asymptotic_scaled(n: u32, z: f64) -> f64 {
    let mu = 4.0 * (n as f64) * (n as f64);
    let mut term = 1.0_f64;
    let mut sum = 1.0_f64;
    let mut k = 0.0_f64;
    loop {
        k += 1.0;
        let odd = 2.0 * k - 1.0;
        let next = -term * (mu - odd * odd) / (8.0 * k * z);
        if next.abs() >= term.abs() || next == 0.0 {
            break;
        }
        term = next;
        sum += term;
        if term.abs() <= REL_TOL * sum.abs() {
            break;
        }
    }
    sum / (2.0 * std::f64::consts::PI * z).sqrt()
}
