//! Standard normal distribution function and the Gaussian box integral it
//! feeds.

use std::f64::consts::{PI, SQRT_2};

/// Standard normal CDF, `Phi(x) = erfc(-x / sqrt 2) / 2`.
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / SQRT_2)
}

/// `Phi(hi) - Phi(lo)` evaluated on whichever tail keeps full precision.
pub fn normal_interval(lo: f64, hi: f64) -> f64 {
    if lo >= 0.0 {
        std_normal_cdf(-lo) - std_normal_cdf(-hi)
    } else if hi <= 0.0 {
        std_normal_cdf(hi) - std_normal_cdf(lo)
    } else {
        1.0 - std_normal_cdf(lo) - std_normal_cdf(-hi)
    }
}

/// `int_0^1 exp(-theta (u - center)^2) du` for `theta > 0`.
pub fn gaussian_box_integral(center: f64, theta: f64) -> f64 {
    let scale = (2.0 * theta).sqrt();
    (PI / theta).sqrt() * normal_interval(-scale * center, scale * (1.0 - center))
}
