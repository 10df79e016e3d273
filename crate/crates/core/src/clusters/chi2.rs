//! Chi-squared distribution with five degrees of freedom.
//!
//! `P(5/2, t)` is evaluated through the half-integer recurrence
//! `P(a + 1, t) = P(a, t) - t^a e^-t / Γ(a + 1)` starting from `P(1/2, t) = erf(√t)`,
//! which needs only `erf`, `erfc` and the exact constants `Γ(3/2)` and `Γ(5/2)`.

use crate::error::{Error, Result};
use libm::{erf, erfc};

/// `Γ(3/2) = √π / 2`.
pub const GAMMA_3_2: f64 = 0.886_226_925_452_758_0;
/// `Γ(5/2) = 3√π / 4`.
pub const GAMMA_5_2: f64 = 1.329_340_388_179_137_0;

#[inline]
fn tail_terms(t: f64) -> f64 {
    let s = t.sqrt();
    (-t).exp() * (s / GAMMA_3_2 + s * t / GAMMA_5_2)
}

/// CDF of χ²₅, i.e. the regularized lower incomplete gamma `P(2.5, x / 2)`.
pub fn chi2_cdf5(x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::NegativeChiSquare(x));
    }
    if x == f64::INFINITY {
        return Ok(1.0);
    }
    let t = 0.5 * x;
    Ok((erf(t.sqrt()) - tail_terms(t)).clamp(0.0, 1.0))
}

/// Survival function `1 - F(x)` of χ²₅, accurate in the far tail. `x` must be non-negative.
#[inline]
pub fn chi2_sf5(x: f64) -> f64 {
    debug_assert!(x >= 0.0);
    if x == f64::INFINITY {
        return 0.0;
    }
    let t = 0.5 * x;
    (erfc(t.sqrt()) + tail_terms(t)).clamp(0.0, 1.0)
}

/// Probability that a cluster at Mahalanobis distance `d` is the closest of `eta`
/// i.i.d. χ²₅ competitors: `(1 - F(d))^eta`.
#[inline]
pub fn assignment_probability(d: f64, eta: u32) -> f64 {
    debug_assert!(d >= 0.0 && eta >= 1);
    chi2_sf5(d.max(0.0)).powi(eta as i32)
}
