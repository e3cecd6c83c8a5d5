//! Equilibrium detection, approximation factors, price of anarchy,
//! smoothness checks and the closed-form bounds.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dynamics::{certify_beta, float_or_inf};
use crate::error::{Error, Result};
use crate::game::{Game, State};
use crate::tolerance::{improves, REL_TOL};

/// Aggregation range and size parameters of an `L_p` game.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GameParams {
    #[serde(with = "float_or_inf")]
    pub p: f64,
    #[serde(with = "float_or_inf")]
    pub q: f64,
    pub d: usize,
    /// Largest integer `z` with `z^2 / (z+1) <= d^(1 - 1/q)`.
    pub z_smooth: u64,
    /// `(1/2 (1/p + 1/q))^-1`.
    #[serde(with = "float_or_inf")]
    pub z_pot: f64,
}

pub fn game_params(game: &Game) -> Result<GameParams> {
    let mut p = f64::INFINITY;
    let mut q: f64 = 1.0;
    for agg in game.aggregations() {
        let pi = agg.lp().ok_or(Error::GeneralAggregation)?;
        p = p.min(pi);
        q = q.max(pi);
    }
    let d = game.max_strategy_size();
    Ok(GameParams {
        p,
        q,
        d,
        z_smooth: smoothness_params(d, q).z,
        z_pot: potential_exponent(p, q),
    })
}

/// `(1/2 (1/p + 1/q))^-1`, with `1/inf = 0`.
pub fn potential_exponent(p: f64, q: f64) -> f64 {
    1.0 / (0.5 * (1.0 / p + 1.0 / q))
}

/// `d^(1/2 (1/p - 1/q))`.
pub fn approx_guarantee(p: f64, q: f64, d: usize) -> f64 {
    (d as f64).powf(0.5 * (1.0 / p - 1.0 / q))
}

/// No player can improve by more than a factor `beta`.
pub fn is_beta_pne(game: &Game, state: &State, beta: f64) -> Result<bool> {
    game.check_state(state)?;
    let cong = game.congestion(state);
    for i in 0..game.n_players() {
        let current = game.deviation_cost(state, &cong, i, state.choice(i))?;
        for s in 0..game.strategies(i).len() {
            if s != state.choice(i) && improves(beta * game.deviation_cost(state, &cong, i, s)?, current) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

pub fn is_pne(game: &Game, state: &State) -> Result<bool> {
    is_beta_pne(game, state, 1.0)
}

/// Evaluates `f` on every state in enumeration order.
fn scan_states<T, F>(game: &Game, budget: u128, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(State) -> Result<T> + Sync + Send,
{
    let count = game.state_count();
    if count > budget {
        return Err(Error::BudgetExceeded { required: count, budget });
    }
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..count as u64)
            .into_par_iter()
            .map(|k| f(game.state_at(u128::from(k))))
            .collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        game.enumerate_states(budget)?.map(f).collect()
    }
}

pub fn find_all_pne(game: &Game, budget: u128) -> Result<Vec<State>> {
    let flags = scan_states(game, budget, |s| Ok(is_pne(game, &s)?.then_some(s)))?;
    Ok(flags.into_iter().flatten().collect())
}

/// `min_S certify_beta(S)` and the first state attaining it.
pub fn min_beta(game: &Game, budget: u128) -> Result<(f64, State)> {
    let betas = scan_states(game, budget, |s| certify_beta(game, &s))?;
    let (k, beta) = betas
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::INFINITY), |best, (k, b)| if b < best.1 { (k, b) } else { best });
    Ok((beta, game.state_at(k as u128)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Smoothness {
    pub z: u64,
    pub lambda: f64,
    pub mu: f64,
    /// `2z + 1 > d^(1 - 1/q)`, i.e. `mu < 1`.
    pub valid: bool,
}

/// The `(lambda, mu)` pair for linear costs with `D = d^(1 - 1/q_eff)`:
/// `lambda = D (z^2 + 3z + 1) / (2z + 1)`, `mu = D / (2z + 1)`.
pub fn smoothness_params(d: usize, q_eff: f64) -> Smoothness {
    let big_d = smoothness_scale(d, q_eff);
    let dm1 = big_d - 1.0;
    let closed = (0.5 * (big_d + (5.0 + 6.0 * dm1 + dm1 * dm1).sqrt())).floor();
    let mut z = closed.max(1.0) as u64;
    // Repair rounding at exact boundaries against the defining inequality.
    let fits = |z: u64| {
        let z = z as f64;
        z * z / (z + 1.0) <= big_d * (1.0 + REL_TOL)
    };
    while fits(z + 1) {
        z += 1;
    }
    while z > 1 && !fits(z) {
        z -= 1;
    }
    let zf = z as f64;
    Smoothness {
        z,
        lambda: big_d * (zf * zf + 3.0 * zf + 1.0) / (2.0 * zf + 1.0),
        mu: big_d / (2.0 * zf + 1.0),
        valid: 2.0 * zf + 1.0 > big_d,
    }
}

/// `d^(1 - 1/q)`.
pub fn smoothness_scale(d: usize, q_eff: f64) -> f64 {
    (d.max(1) as f64).powf(1.0 - 1.0 / q_eff)
}

/// `D (z^2 + 3z + 1) / (2z + 1 - D)`.
pub fn poa_bound(d: usize, q_eff: f64) -> Result<f64> {
    let s = smoothness_params(d, q_eff);
    let big_d = smoothness_scale(d, q_eff);
    let zf = s.z as f64;
    if !s.valid {
        return Err(Error::VacuousBound {
            lhs: 2.0 * zf + 1.0,
            rhs: big_d,
        });
    }
    Ok(big_d * (zf * zf + 3.0 * zf + 1.0) / (2.0 * zf + 1.0 - big_d))
}

/// Exhaustive check of
/// `sum_i c_i(S_i', S_-i) <= lambda cost(S') + mu cost(S)` over all pairs.
pub fn verify_smoothness(game: &Game, lambda: f64, mu: f64, budget: u128) -> Result<bool> {
    let count = game.state_count();
    let pairs = count.saturating_mul(count);
    if pairs > budget {
        return Err(Error::BudgetExceeded { required: pairs, budget });
    }
    let totals = scan_states(game, budget, |s| game.total_cost(&s))?;
    let holds = scan_states(game, budget, |s| {
        let cong = game.congestion(&s);
        let cost_s = totals[index_of(game, &s)];
        for k in 0..count {
            let target = game.state_at(k);
            let mut lhs = 0.0;
            for i in 0..game.n_players() {
                lhs += game.deviation_cost(&s, &cong, i, target.choice(i))?;
            }
            let rhs = lambda * totals[k as usize] + mu * cost_s;
            if lhs > rhs * (1.0 + REL_TOL) + 1e-12 {
                return Ok(false);
            }
        }
        Ok(true)
    })?;
    Ok(holds.into_iter().all(|h| h))
}

fn index_of(game: &Game, state: &State) -> usize {
    let mut idx = 0usize;
    for (i, &s) in state.as_slice().iter().enumerate() {
        idx = idx * game.strategies(i).len() + s;
    }
    idx
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriceOfAnarchy {
    Ratio(f64),
    NoEquilibrium,
    /// The optimum costs zero while some equilibrium does not.
    Unbounded,
}

impl fmt::Display for PriceOfAnarchy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PriceOfAnarchy::Ratio(r) => write!(f, "{}", crate::fmt6(*r)),
            PriceOfAnarchy::NoEquilibrium => f.write_str("no PNE"),
            PriceOfAnarchy::Unbounded => f.write_str("inf (zero-cost optimum)"),
        }
    }
}

/// Worst equilibrium social cost over optimal social cost.
pub fn exact_poa(game: &Game, budget: u128) -> Result<PriceOfAnarchy> {
    let scanned = scan_states(game, budget, |s| Ok((game.total_cost(&s)?, is_pne(game, &s)?)))?;
    let optimum = scanned.iter().map(|x| x.0).fold(f64::INFINITY, f64::min);
    let worst = scanned
        .iter()
        .filter(|x| x.1)
        .map(|x| x.0)
        .fold(None, |acc: Option<f64>, c| Some(acc.map_or(c, |a| a.max(c))));
    Ok(match worst {
        None => PriceOfAnarchy::NoEquilibrium,
        Some(w) if optimum == 0.0 && w == 0.0 => PriceOfAnarchy::Ratio(1.0),
        Some(_) if optimum == 0.0 => PriceOfAnarchy::Unbounded,
        Some(w) => PriceOfAnarchy::Ratio(w / optimum),
    })
}

/// `(2 + epsilon) d^(1 - 1/q)`: summation-projection approach.
pub fn first_approach_factor(q: f64, d: usize, epsilon: f64) -> f64 {
    (2.0 + epsilon) * (d as f64).powf(1.0 - 1.0 / q)
}

/// `z d^(1/2 (1/p - 1/q))` with the constant factor taken as `z`.
pub fn second_approach_factor(p: f64, q: f64, d: usize) -> f64 {
    potential_exponent(p, q) * approx_guarantee(p, q, d)
}

/// Rows `(p, q)` of the reference table.
pub const REFERENCE_ROWS: [(f64, f64); 5] = [
    (1.0, 2.0),
    (2.0, 3.0),
    (1.0, f64::INFINITY),
    (2.0, f64::INFINITY),
    (10.0, f64::INFINITY),
];

pub const REFERENCE_DS: [usize; 2] = [2, 10];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    #[serde(with = "float_or_inf")]
    pub p: f64,
    #[serde(with = "float_or_inf")]
    pub q: f64,
    pub first: Vec<f64>,
    pub second: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundTable {
    pub ds: Vec<usize>,
    pub rows: Vec<BoundRow>,
}

/// Half-up rounding to two decimals.
pub fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

/// Two-decimal rendering without trailing zeros: `4`, `2.8`, `20.71`.
pub fn format2(x: f64) -> String {
    let s = format!("{:.2}", round2(x));
    let s = s.trim_end_matches('0').trim_end_matches('.');
    s.to_string()
}

fn format_q(q: f64) -> String {
    if q.is_infinite() {
        "inf".into()
    } else {
        format!("{q}")
    }
}

pub fn bound_table(rows: &[(f64, f64)], ds: &[usize]) -> BoundTable {
    BoundTable {
        ds: ds.to_vec(),
        rows: rows
            .iter()
            .map(|&(p, q)| BoundRow {
                p,
                q,
                first: ds.iter().map(|&d| round2(first_approach_factor(q, d, 0.0))).collect(),
                second: ds.iter().map(|&d| round2(second_approach_factor(p, q, d))).collect(),
            })
            .collect(),
    }
}

impl BoundTable {
    pub fn reference() -> Self {
        bound_table(&REFERENCE_ROWS, &REFERENCE_DS)
    }

    /// All value cells, row by row: first approach then second approach.
    pub fn cells(&self) -> Vec<f64> {
        self.rows
            .iter()
            .flat_map(|r| r.first.iter().chain(&r.second).copied())
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("p,q");
        for d in &self.ds {
            out.push_str(&format!(",first_d{d}"));
        }
        for d in &self.ds {
            out.push_str(&format!(",second_d{d}"));
        }
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!("{},{}", format_q(r.p), format_q(r.q)));
            for v in r.first.iter().chain(&r.second) {
                out.push(',');
                out.push_str(&format2(*v));
            }
            out.push('\n');
        }
        out
    }
}

impl fmt::Display for BoundTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = 10;
        write!(f, "{:>4} {:>4} |", "p", "q")?;
        for d in &self.ds {
            write!(f, "{:>width$}", format!("1st d={d}"))?;
        }
        write!(f, " |")?;
        for d in &self.ds {
            write!(f, "{:>width$}", format!("2nd d={d}"))?;
        }
        writeln!(f)?;
        for r in &self.rows {
            write!(f, "{:>4} {:>4} |", format_q(r.p), format_q(r.q))?;
            for v in &r.first {
                write!(f, "{:>width$}", format2(*v))?;
            }
            write!(f, " |")?;
            for v in &r.second {
                write!(f, "{:>width$}", format2(*v))?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{Aggregation, CostTable};

    /// Largest integer z with z^2/(z+1) <= D, by direct search.
    fn z_by_search(big_d: f64) -> u64 {
        (1..1000u64).filter(|&z| (z * z) as f64 / (z + 1) as f64 <= big_d).max().unwrap()
    }

    #[test]
    fn smoothness_closed_form_matches_search() {
        for d in 1..=40 {
            for q in [1.0, 1.5, 2.0, 3.0, 7.0, f64::INFINITY] {
                let s = smoothness_params(d, q);
                assert_eq!(s.z, z_by_search(smoothness_scale(d, q)), "d={d} q={q}");
                assert!(s.valid);
            }
        }
    }

    #[test]
    fn smoothness_examples() {
        let s = smoothness_params(1, 3.0);
        assert_eq!(s.z, 1);
        assert!((s.lambda - 5.0 / 3.0).abs() < 1e-15);
        assert!((s.mu - 1.0 / 3.0).abs() < 1e-15);
        // D = sqrt 2: 4/3 <= sqrt 2 < 9/4, so z = 2.
        assert_eq!(smoothness_params(2, 2.0).z, 2);
    }

    #[test]
    fn poa_bound_examples() {
        assert_eq!(poa_bound(1, 2.0).unwrap(), 2.5);
        assert_eq!(poa_bound(7, 1.0).unwrap(), 2.5);
        let r2 = 2f64.sqrt();
        assert!((poa_bound(2, 2.0).unwrap() - r2 * 11.0 / (5.0 - r2)).abs() < 1e-12);
    }

    #[test]
    fn guarantee_examples() {
        assert_eq!(approx_guarantee(2.0, 2.0, 9), 1.0);
        assert!((approx_guarantee(1.0, 2.0, 2) - 2f64.powf(0.25)).abs() < 1e-15);
        assert_eq!(approx_guarantee(1.0, f64::INFINITY, 16), 4.0);
        assert!((potential_exponent(1.0, 2.0) - 4.0 / 3.0).abs() < 1e-15);
        assert_eq!(potential_exponent(2.0, f64::INFINITY), 4.0);
    }

    #[test]
    fn reference_table_cells() {
        let t = BoundTable::reference();
        assert_eq!(
            t.cells(),
            vec![
                2.83, 6.32, 1.59, 2.37, 3.17, 9.28, 2.54, 2.91, 4.0, 20.0, 2.83, 6.32, 4.0, 20.0, 4.76, 7.11, 4.0, 20.0,
                20.71, 22.44
            ]
        );
        assert!(t.to_string().contains("20.71"));
        assert!(t.to_csv().starts_with("p,q,first_d2,first_d10,second_d2,second_d10\n1,2,2.83,6.32,1.59,2.37\n"));
    }

    #[test]
    fn formatting() {
        assert_eq!(format2(4.0), "4");
        assert_eq!(format2(2.8), "2.8");
        assert_eq!(format2(22.4449), "22.44");
    }

    #[test]
    fn single_player_poa_is_one() {
        let g = Game::new(
            vec![vec![vec![0], vec![1]]],
            vec![CostTable::new(vec![3.0]).unwrap(), CostTable::new(vec![2.0]).unwrap()],
            vec![Aggregation::Lp(1.0)],
        )
        .unwrap();
        assert_eq!(exact_poa(&g, 100).unwrap(), PriceOfAnarchy::Ratio(1.0));
        assert_eq!(find_all_pne(&g, 100).unwrap(), vec![State(vec![1])]);
        assert!(is_pne(&g, &State(vec![1])).unwrap());
        assert!(!verify_smoothness(&g, 0.0, 0.0, 100).unwrap());
        assert_eq!(min_beta(&g, 100).unwrap(), (1.0, State(vec![1])));
    }

    #[test]
    fn single_state_smoothness() {
        let g = Game::new(
            vec![vec![vec![0]], vec![vec![0]]],
            vec![CostTable::new(vec![1.0, 2.0]).unwrap()],
            vec![Aggregation::Lp(1.0); 2],
        )
        .unwrap();
        assert!(verify_smoothness(&g, 1.0, 0.0, 10).unwrap());
        assert!(!verify_smoothness(&g, 0.9, 0.0, 10).unwrap());
    }

    #[test]
    fn general_aggregation_has_no_params() {
        let g = Game::new(
            vec![vec![vec![0]]],
            vec![CostTable::new(vec![1.0]).unwrap()],
            vec![Aggregation::General(crate::aggregation::AggregationFunction::sum())],
        )
        .unwrap();
        assert_eq!(game_params(&g), Err(Error::GeneralAggregation));
    }
}
