//! Atomic congestion games whose players aggregate resource costs with
//! player-specific `L_p` norms or general aggregation functions.
//!
//! The crate covers the game model and its JSON format ([`game`]),
//! aggregation functions and their monotonicity classes ([`aggregation`]),
//! improvement dynamics and equilibrium solvers ([`dynamics`]), brute-force
//! analysis and closed-form bounds ([`analysis`]), matroid strategy spaces
//! ([`matroid`]) and fixture constructions ([`generators`]).

pub mod aggregation;
pub mod analysis;
pub mod dynamics;
mod error;
pub mod game;
pub mod generators;
pub mod matroid;
pub mod tolerance;

pub use aggregation::{AggregationFunction, Monotonicity, NonMonotoneWitness, SwapPreorder};
pub use dynamics::{Step, Termination, Trace};
pub use error::{Error, Result};
pub use game::{load_game, serialize_game, Aggregation, CostTable, Game, State};

/// Formats with six significant digits, dropping trailing zeros.
pub fn fmt6(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let exp = x.abs().log10().floor() as i32;
    let trim = |s: String| {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    };
    if !(-4..6).contains(&exp) {
        let s = format!("{x:.5e}");
        let (mantissa, e) = s.split_once('e').expect("exponent");
        return format!("{}e{e}", trim(mantissa.to_string()));
    }
    let decimals = (5 - exp).max(0) as usize;
    let s = trim(format!("{x:.decimals$}"));
    // Rounding can carry into a seventh digit (999999.5 -> 1000000).
    if s.trim_start_matches('-').split('.').next().map_or(0, str::len) > 6 {
        return fmt6(s.parse().expect("formatted number"));
    }
    s
}
