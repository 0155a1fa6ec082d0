//! Float helpers routed through `libm` so results do not depend on `std`.

pub(crate) const TWO_PI: f64 = 2.0 * core::f64::consts::PI;

#[inline]
pub(crate) fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub(crate) fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub(crate) fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub(crate) fn ceil(x: f64) -> f64 {
    libm::ceil(x)
}

#[inline]
pub(crate) fn powi(base: f64, n: i32) -> f64 {
    libm::pow(base, n as f64)
}

#[inline]
pub(crate) fn abs(x: f64) -> f64 {
    libm::fabs(x)
}

/// `⌈log_base(x)⌉` for `base > 1`, `x > 0`, clamped at zero.
///
/// The quotient of logarithms can land a hair above an exact integer, so
/// values within 1e-12 of one are snapped before taking the ceiling.
pub(crate) fn ceil_log(x: f64, base: f64) -> usize {
    let q = ln(x) / ln(base);
    let r = libm::round(q);
    let q = if abs(q - r) <= 1e-12 * r.max(1.0) { r } else { q };
    if q <= 0.0 {
        0
    } else {
        ceil(q) as usize
    }
}

/// Binomial coefficient, saturating.
pub(crate) fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) stays integral at every step.
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}
