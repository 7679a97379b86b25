//! Gamma-function helpers used by the measure reduction and the Sobolev
//! constant.

use std::f64::consts::PI;

/// Natural log of the Gamma function.
pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// Surface area of the unit sphere S^{d-1} in R^d.
///
/// `area(1) = 2` (two points), `area(2) = 2*pi`, `area(3) = 4*pi`.
pub fn sphere_area(d: usize) -> f64 {
    assert!(d >= 1, "sphere_area needs d >= 1");
    if d == 1 {
        return 2.0;
    }
    let d = d as f64;
    2.0 * (0.5 * d * PI.ln() - ln_gamma(0.5 * d)).exp()
}

/// B(a, b) = Gamma(a)Gamma(b)/Gamma(a+b).
pub fn beta_fn(a: f64, b: f64) -> f64 {
    (ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)).exp()
}

/// Integral over S^{d-1} of (w_1^2 + ... + w_j^2)^{p/2} for 1 <= j <= d.
///
/// Closed form: area(d) * B((j+p)/2, (d-j)/2) / B(j/2, (d-j)/2) for j < d;
/// the radицand needs j + p > 0, otherwise the integral diverges (weight not
/// integrable on the sphere) and `None` is returned.
pub fn sphere_moment(d: usize, j: usize, p: f64) -> Option<f64> {
    assert!(j >= 1 && j <= d);
    if (j as f64) + p <= 0.0 {
        return None;
    }
    if j == d || p == 0.0 {
        return Some(sphere_area(d));
    }
    let (jf, df) = (j as f64, d as f64);
    let ratio = (ln_gamma(0.5 * (jf + p)) - ln_gamma(0.5 * jf) + ln_gamma(0.5 * df)
        - ln_gamma(0.5 * (df + p)))
    .exp();
    Some(sphere_area(d) * ratio)
}
