//! Browser bindings for the demo page in `www/`. Every export returns a JSON
//! string; the plain functions behind them are usable natively.

use congestion_core::analysis::{
    approx_guarantee, first_approach_factor, min_beta, poa_bound, second_approach_factor, smoothness_params,
};
use congestion_core::dynamics::{beta_improvement_dynamics, certify_beta};
use congestion_core::game::DEFAULT_BUDGET;
use congestion_core::generators::{gen_random, gen_thm5, RandomGameSpec};
use congestion_core::{State, Termination};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

/// Largest `d` the bounds explorer tabulates.
const MAX_D: usize = 64;

/// JSON number; infinities become `"inf"`, NaN becomes null.
fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else if x == f64::INFINITY {
        json!("inf")
    } else {
        Value::Null
    }
}

fn check_exponents(p: f64, q: f64) -> Result<(), String> {
    if !(p >= 1.0) || !(q >= p) {
        return Err(format!("need 1 <= p <= q, got p = {p}, q = {q}"));
    }
    Ok(())
}

/// Approximation factors and the price-of-anarchy bound for `d = 1..=d_max`.
pub fn bounds_series(p: f64, q: f64, d_max: usize) -> Result<Value, String> {
    check_exponents(p, q)?;
    if d_max == 0 || d_max > MAX_D {
        return Err(format!("d_max must be in 1..={MAX_D}"));
    }
    let rows: Vec<Value> = (1..=d_max)
        .map(|d| {
            let s = smoothness_params(d, q);
            json!({
                "d": d,
                "guarantee": num(approx_guarantee(p, q, d)),
                "first": num(first_approach_factor(q, d, 0.0)),
                "second": num(second_approach_factor(p, q, d)),
                "poa": poa_bound(d, q).map_or(Value::Null, num),
                "z": s.z,
            })
        })
        .collect();
    Ok(json!({ "p": num(p), "q": num(q), "rows": rows }))
}

/// Exhaustive smallest approximation factor of the tightness fixture next
/// to its closed form.
pub fn tightness(p: f64, q: f64, d: usize) -> Result<Value, String> {
    check_exponents(p, q)?;
    if !(2..=16).contains(&d) {
        return Err("d must be in 2..=16".into());
    }
    let game = gen_thm5(p, q, d).map_err(|e| e.to_string())?;
    let (beta, state) = min_beta(&game, DEFAULT_BUDGET).map_err(|e| e.to_string())?;
    let costs = game.player_costs(&state).map_err(|e| e.to_string())?;
    Ok(json!({
        "players": game.n_players(),
        "resources": game.n_resources(),
        "states": game.state_count() as u64,
        "min_beta": num(beta),
        "closed_form": num(approx_guarantee(p, q, d)),
        "state": state.0,
        "costs": costs.into_iter().map(num).collect::<Vec<_>>(),
    }))
}

/// Beta-improvement dynamics on a seeded random game, with the potential
/// after every step.
pub fn random_dynamics(seed: u64, players: usize, resources: usize, p: f64, q: f64, beta: f64) -> Result<Value, String> {
    check_exponents(p, q)?;
    if !(1..=8).contains(&players) || !(1..=16).contains(&resources) {
        return Err("players must be in 1..=8 and resources in 1..=16".into());
    }
    let spec = RandomGameSpec::new(players, resources, 3, 3.min(resources), (p, q), 10, seed);
    let game = gen_random(&spec).map_err(|e| e.to_string())?;
    let start = State(vec![0; players]);
    let trace = beta_improvement_dynamics(&game, &start, beta, 10_000).map_err(|e| e.to_string())?;
    let first = trace.steps.first().and_then(|s| s.potential_before);
    let potentials: Vec<Value> = first
        .into_iter()
        .chain(trace.steps.iter().filter_map(|s| s.potential_after))
        .map(num)
        .collect();
    let termination = match trace.termination {
        Termination::Equilibrium => "equilibrium",
        Termination::StepBudget => "step budget",
        Termination::Cycle => "cycle",
    };
    let exponents: Vec<Value> = game
        .aggregations()
        .iter()
        .map(|a| a.lp().map_or(Value::Null, num))
        .collect();
    Ok(json!({
        "exponents": exponents,
        "steps": trace.steps.iter().map(|s| json!({
            "player": s.player, "from": s.from, "to": s.to, "factor": num(s.factor),
        })).collect::<Vec<_>>(),
        "potentials": potentials,
        "termination": termination,
        "terminal": trace.terminal.0,
        "certified_beta": num(certify_beta(&game, &trace.terminal).map_err(|e| e.to_string())?),
    }))
}

fn to_js(v: Result<Value, String>) -> Result<String, JsValue> {
    v.map(|v| v.to_string()).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = boundsSeries)]
pub fn bounds_series_js(p: f64, q: f64, d_max: usize) -> Result<String, JsValue> {
    to_js(bounds_series(p, q, d_max))
}

#[wasm_bindgen(js_name = tightness)]
pub fn tightness_js(p: f64, q: f64, d: usize) -> Result<String, JsValue> {
    to_js(tightness(p, q, d))
}

#[wasm_bindgen(js_name = randomDynamics)]
pub fn random_dynamics_js(seed: u32, players: usize, resources: usize, p: f64, q: f64, beta: f64) -> Result<String, JsValue> {
    to_js(random_dynamics(u64::from(seed), players, resources, p, q, beta))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn series_has_one_row_per_d() {
        let v = bounds_series(1.0, 2.0, 10).unwrap();
        let rows = v["rows"].as_array().unwrap();
        assert_eq!(rows.len(), 10);
        assert_eq!(rows[0]["poa"].as_f64(), Some(2.5));
        let g = rows[9]["guarantee"].as_f64().unwrap();
        assert!((g - 10f64.powf(0.25)).abs() < 1e-12);
        assert!(bounds_series(2.0, 1.0, 3).is_err());
        assert!(bounds_series(1.0, 2.0, 0).is_err());
    }

    #[test]
    fn infinite_q_is_accepted() {
        let v = bounds_series(1.0, f64::INFINITY, 4).unwrap();
        assert_eq!(v["q"], "inf");
        assert_eq!(v["rows"][3]["first"].as_f64(), Some(8.0));
    }

    #[test]
    fn tightness_matches_closed_form() {
        for (p, q, d) in [(1.0, 2.0, 4), (2.0, f64::INFINITY, 3)] {
            let v = tightness(p, q, d).unwrap();
            let a = v["min_beta"].as_f64().unwrap();
            let b = v["closed_form"].as_f64().unwrap();
            assert!((a - b).abs() < 1e-9, "{v}");
        }
        assert!(tightness(1.0, 2.0, 1).is_err());
    }

    #[test]
    fn dynamics_potential_decreases() {
        // Strategies have at most 3 resources.
        let beta = approx_guarantee(1.0, 3.0, 3);
        for seed in 0..20 {
            let v = random_dynamics(seed, 3, 6, 1.0, 3.0, beta).unwrap();
            let pot: Vec<f64> = v["potentials"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
            assert!(pot.windows(2).all(|w| w[1] < w[0]), "{v}");
            assert_eq!(v["termination"], "equilibrium");
            assert!(v["certified_beta"].as_f64().unwrap() <= beta * (1.0 + 1e-9));
        }
    }

    #[test]
    fn dynamics_is_deterministic() {
        let a = random_dynamics(9, 4, 8, 1.0, 2.0, 1.1).unwrap();
        let b = random_dynamics(9, 4, 8, 1.0, 2.0, 1.1).unwrap();
        assert_eq!(a, b);
        assert!(random_dynamics(0, 0, 4, 1.0, 2.0, 1.0).is_err());
    }
}
