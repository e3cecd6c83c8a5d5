//! Floating point comparison rules shared by every equilibrium test.
//!
//! Costs such as `d^(1/z)` are irrational, so all strict comparisons go
//! through a relative tolerance.

/// Relative tolerance for "strictly better" decisions.
pub const REL_TOL: f64 = 1e-9;

/// `new` improves over `old`: `new < old * (1 - REL_TOL)`.
#[inline]
pub fn improves(new: f64, old: f64) -> bool {
    new < old * (1.0 - REL_TOL)
}

/// Strict `a < b` with a relative margin, usable for values of either sign.
#[inline]
pub fn strictly_less(a: f64, b: f64) -> bool {
    a < b - REL_TOL * a.abs().max(b.abs())
}

/// `a <= b` up to the relative margin.
#[inline]
pub fn at_most(a: f64, b: f64) -> bool {
    !strictly_less(b, a)
}

/// Values equal up to the relative margin (plus an absolute floor for zero).
#[inline]
pub fn same_value(a: f64, b: f64) -> bool {
    (a - b).abs() <= REL_TOL * a.abs().max(b.abs()) + 1e-12
}
