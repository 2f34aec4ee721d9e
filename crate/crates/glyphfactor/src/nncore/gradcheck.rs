//! Central-difference helpers used to verify analytic gradients.
//!
//! These stay independent of the backward passes they check: they only ever
//! evaluate forward losses.

/// (f(x0 + h) - f(x0 - h)) / 2h.
pub fn central_diff(mut f: impl FnMut(f64) -> f64, x0: f64, h: f64) -> f64 {
    (f(x0 + h) - f(x0 - h)) / (2.0 * h)
}

/// Difference step for losses that pass through relu behind instance norm.
/// Normalization keeps pre-activations packed around zero, so wider steps
/// routinely straddle a kink and corrupt the quotient; 1e-6 makes crossings
/// rare while 64-bit arithmetic keeps roundoff far below the tolerance.
pub const DEEP_NET_STEP: f64 = 1e-6;

/// Error measure for deep-net checks: relative above 1e-2, absolute (at
/// 1e-6) below. The floor covers gradients that are analytically zero, such
/// as a conv bias whose constant shift the following instance norm removes,
/// where the difference quotient only measures noise.
pub fn deep_net_error(analytic: f64, numeric: f64) -> f64 {
    relative_error_floored(analytic, numeric, 1e-2)
}

/// |a - b| / max(|a|, |b|, 1e-6). The floor keeps near-zero pairs from
/// reporting spurious blow-ups.
pub fn relative_error(a: f64, b: f64) -> f64 {
    relative_error_floored(a, b, 1e-6)
}

pub fn relative_error_floored(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}
