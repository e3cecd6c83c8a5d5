//! Best-response and beta-improvement dynamics, the generalized Rosenthal
//! potential, the swap-rank potential, and the two power-transform solvers.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::aggregation::SwapPreorder;
use crate::analysis::game_params;
use crate::error::{Error, Result};
use crate::game::{Aggregation, CongestionProfile, Game, State};
use crate::tolerance::improves;

/// Default step budget for descent-based solvers.
pub const DEFAULT_MAX_STEPS: usize = 1_000_000;

/// Number of `(state, next player)` keys remembered for cycle detection.
const CYCLE_MEMORY: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub player: usize,
    pub from: usize,
    pub to: usize,
    /// `c_i(S) / c_i(S')`; infinite when the new cost is zero.
    #[serde(with = "float_or_inf")]
    pub factor: f64,
    pub potential_before: Option<f64>,
    pub potential_after: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Equilibrium,
    StepBudget,
    Cycle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub start: State,
    pub steps: Vec<Step>,
    pub terminal: State,
    pub termination: Termination,
}

impl Trace {
    /// One JSON object per step, newline separated.
    pub fn to_json_lines(&self) -> String {
        let mut out = String::new();
        for step in &self.steps {
            out.push_str(&serde_json::to_string(step).expect("step serializes"));
            out.push('\n');
        }
        out
    }

    pub fn reached_equilibrium(&self) -> bool {
        self.termination == Termination::Equilibrium
    }
}

pub(crate) mod float_or_inf {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() {
            s.serialize_str(if *v > 0.0 { "inf" } else { "-inf" })
        } else {
            s.serialize_f64(*v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Text(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) if t == "inf" => Ok(f64::INFINITY),
            Repr::Text(t) if t == "-inf" => Ok(f64::NEG_INFINITY),
            Repr::Text(t) => Err(serde::de::Error::custom(format!("expected number or \"inf\", got {t:?}"))),
        }
    }
}

/// `old / new` with the zero conventions used throughout: `0/0 = 1`,
/// `x/0 = inf` for `x > 0`.
pub fn improvement_factor(old: f64, new: f64) -> f64 {
    if new == 0.0 {
        if old == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        old / new
    }
}

/// Lowest-cost strategy of player `i` and its cost; ties go to the lowest
/// index.
fn cheapest(game: &Game, state: &State, cong: &CongestionProfile, i: usize) -> Result<(usize, f64)> {
    let mut best = (0, game.deviation_cost(state, cong, i, 0)?);
    for s in 1..game.strategies(i).len() {
        let c = game.deviation_cost(state, cong, i, s)?;
        if improves(c, best.1) {
            best = (s, c);
        }
    }
    Ok(best)
}

/// `argmin_{S_i'} c_i(S_i', S_-i)`, ties broken by lowest strategy index.
pub fn best_response(game: &Game, state: &State, i: usize) -> Result<usize> {
    game.check_state(state)?;
    let cong = game.congestion(state);
    Ok(cheapest(game, state, &cong, i)?.0)
}

/// A move chosen for player `i`: new strategy and improvement factor.
pub(crate) type Move = Option<(usize, f64)>;

/// Round-robin improvement engine shared by every dynamics variant.
///
/// Players are scanned cyclically starting after the last mover; the run
/// stops when a full pass finds no move, the step budget is spent, or a
/// `(state, next player)` pair repeats.
pub(crate) fn run_round_robin(
    game: &Game,
    start: &State,
    max_steps: usize,
    mut choose: impl FnMut(&State, &CongestionProfile, usize) -> Result<Move>,
    mut potential: impl FnMut(&State) -> Result<Option<f64>>,
) -> Result<Trace> {
    game.check_state(start)?;
    let n = game.n_players();
    let mut state = start.clone();
    let mut steps = Vec::new();
    let mut seen: HashSet<(State, usize)> = HashSet::new();
    let mut next = 0usize;
    let mut current_potential = potential(&state)?;

    let termination = 'run: loop {
        if !seen.insert((state.clone(), next)) {
            break 'run Termination::Cycle;
        }
        if seen.len() >= CYCLE_MEMORY {
            seen.clear();
        }
        let cong = game.congestion(&state);
        let mut moved = false;
        for offset in 0..n {
            let i = (next + offset) % n;
            if let Some((to, factor)) = choose(&state, &cong, i)? {
                if steps.len() >= max_steps {
                    break 'run Termination::StepBudget;
                }
                let from = state.choice(i);
                state = state.with(i, to);
                let after = potential(&state)?;
                steps.push(Step {
                    player: i,
                    from,
                    to,
                    factor,
                    potential_before: current_potential,
                    potential_after: after,
                });
                current_potential = after;
                next = (i + 1) % n;
                moved = true;
                break;
            }
        }
        if !moved {
            break 'run Termination::Equilibrium;
        }
    };
    Ok(Trace {
        start: start.clone(),
        steps,
        terminal: state,
        termination,
    })
}

/// `Phi_z` when every player aggregates with an `L_p` norm and the
/// potential exponent is finite.
fn default_potential_exponent(game: &Game) -> Option<f64> {
    let params = game_params(game).ok()?;
    params.z_pot.is_finite().then_some(params.z_pot)
}

/// Runs beta-improvement dynamics: a player moves only if their best
/// alternative improves their cost by more than a factor `beta`, and
/// they take the move with the largest improvement factor.
pub fn beta_improvement_dynamics(game: &Game, start: &State, beta: f64, max_steps: usize) -> Result<Trace> {
    if !(beta >= 1.0) || !beta.is_finite() {
        return Err(Error::InvalidParameters(format!("beta must be a finite value >= 1, got {beta}")));
    }
    let z = default_potential_exponent(game);
    run_round_robin(
        game,
        start,
        max_steps,
        |state, cong, i| {
            let current = game.deviation_cost(state, cong, i, state.choice(i))?;
            let (to, cost) = cheapest(game, state, cong, i)?;
            Ok((to != state.choice(i) && improves(beta * cost, current))
                .then(|| (to, improvement_factor(current, cost))))
        },
        |s| Ok(z.map(|z| rosenthal_potential_z(game, s, z))),
    )
}

/// Best-response dynamics (beta = 1) with an optional potential log.
pub fn best_response_dynamics(game: &Game, start: &State, max_steps: usize) -> Result<Trace> {
    beta_improvement_dynamics(game, start, 1.0, max_steps)
}

/// `Phi_z(S) = sum_r sum_{k=1}^{n_r(S)} c_r(k)^z`; `z = 1` is Rosenthal's potential.
pub fn rosenthal_potential_z(game: &Game, state: &State, z: f64) -> f64 {
    let cong = game.congestion(state);
    cong.counts()
        .iter()
        .enumerate()
        .map(|(r, &n)| {
            let table = game.cost_table(r);
            (1..=n).map(|k| table.cost(k).powf(z)).sum::<f64>()
        })
        .sum()
}

/// `sum_r sum_{k=1}^{n_r(S)} pi(c_r(k))`.
pub fn pi_potential(game: &Game, state: &State, pre: &SwapPreorder) -> Result<u64> {
    let cong = game.congestion(state);
    let mut total = 0u64;
    for (r, &n) in cong.counts().iter().enumerate() {
        let table = game.cost_table(r);
        for k in 1..=n {
            let v = table.cost(k);
            total += u64::from(pre.rank(v).ok_or(Error::MissingRank(v))?);
        }
    }
    Ok(total)
}

/// Descending costs of all used resources, each repeated once per user;
/// bottleneck improvements decrease it lexicographically. The repetition
/// matters for flat tables, where the resource a player leaves keeps its
/// cost.
fn bottleneck_profile(game: &Game, state: &State) -> Vec<f64> {
    let cong = game.congestion(state);
    let mut v: Vec<f64> = cong
        .counts()
        .iter()
        .enumerate()
        .flat_map(|(r, &n)| std::iter::repeat_n(game.cost_table(r).cost(n.max(1)), n))
        .collect();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

/// The shared `p` when every player uses the same `L_p` aggregation.
fn identical_exponent(game: &Game) -> Result<f64> {
    let p = game.aggregation(0).lp().ok_or(Error::GeneralAggregation)?;
    for agg in game.aggregations() {
        match agg {
            Aggregation::Lp(q) if *q == p => {}
            Aggregation::Lp(_) => return Err(Error::HeterogeneousExponent),
            Aggregation::General(_) => return Err(Error::GeneralAggregation),
        }
    }
    Ok(p)
}

/// Exact PNE of a game where all players share one `L_p` aggregation.
///
/// Best responses under `L_p` coincide with best responses in the game with
/// costs `c^p` and summation, so best-response descent decreases `Phi_p`.
/// For `p = inf` the descending profile of used-resource costs decreases
/// lexicographically instead.
pub fn compute_pne_identical_p(game: &Game) -> Result<State> {
    compute_pne_identical_p_from(game, &State(vec![0; game.n_players()]), DEFAULT_MAX_STEPS)
}

pub fn compute_pne_identical_p_from(game: &Game, start: &State, max_steps: usize) -> Result<State> {
    let p = identical_exponent(game)?;
    let trace = if p.is_finite() {
        let trace = beta_descent(game, start, max_steps, |s| rosenthal_potential_z(game, s, p))?;
        for (k, step) in trace.steps.iter().enumerate() {
            let (before, after) = (step.potential_before.unwrap(), step.potential_after.unwrap());
            if !(after < before) {
                return Err(Error::PotentialNotDecreasing { step: k, before, after });
            }
        }
        trace
    } else {
        let trace = best_response_dynamics(game, start, max_steps)?;
        let mut state = trace.start.clone();
        let mut profile = bottleneck_profile(game, &state);
        for (k, step) in trace.steps.iter().enumerate() {
            state = state.with(step.player, step.to);
            let next = bottleneck_profile(game, &state);
            if next >= profile {
                return Err(Error::PotentialNotDecreasing {
                    step: k,
                    before: profile.first().copied().unwrap_or(0.0),
                    after: next.first().copied().unwrap_or(0.0),
                });
            }
            profile = next;
        }
        trace
    };
    match trace.termination {
        Termination::Equilibrium => Ok(trace.terminal),
        _ => Err(Error::StepBudget(max_steps)),
    }
}

/// Best-response descent logging a caller-supplied potential.
fn beta_descent(game: &Game, start: &State, max_steps: usize, phi: impl Fn(&State) -> f64) -> Result<Trace> {
    run_round_robin(
        game,
        start,
        max_steps,
        |state, cong, i| {
            let current = game.deviation_cost(state, cong, i, state.choice(i))?;
            let (to, cost) = cheapest(game, state, cong, i)?;
            Ok((to != state.choice(i) && improves(cost, current)).then(|| (to, improvement_factor(current, cost))))
        },
        |s| Ok(Some(phi(s))),
    )
}

/// Smallest `beta >= 1` for which `state` is a beta-approximate PNE:
/// `max_i max_{S_i'} c_i(S) / c_i(S_i', S_-i)`, infinite when some player has
/// a free alternative while paying a positive cost.
pub fn certify_beta(game: &Game, state: &State) -> Result<f64> {
    game.check_state(state)?;
    let cong = game.congestion(state);
    let mut beta: f64 = 1.0;
    for i in 0..game.n_players() {
        let current = game.deviation_cost(state, &cong, i, state.choice(i))?;
        if current == 0.0 {
            continue;
        }
        for s in 0..game.strategies(i).len() {
            let c = game.deviation_cost(state, &cong, i, s)?;
            beta = beta.max(improvement_factor(current, c));
        }
    }
    Ok(beta)
}

/// Result of one of the power-transform approximation solvers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApproxSolution {
    pub state: State,
    /// Certified approximation factor under the true aggregations.
    #[serde(with = "float_or_inf")]
    pub beta: f64,
    /// The a-priori factor for an exact inner equilibrium.
    pub bound: f64,
    /// Exponent applied to every cost table before the `L_1` descent.
    pub z: f64,
    pub inner_steps: usize,
}

/// Exact PNE of `game` with tables raised to `z` and summed costs, then
/// certified under the original aggregations.
fn solve_transformed(game: &Game, z: f64, bound: f64) -> Result<ApproxSolution> {
    if !z.is_finite() || z < 1.0 {
        return Err(Error::ZOverflow(z));
    }
    let mut tables = Vec::with_capacity(game.n_resources());
    for t in game.cost_tables() {
        let powered = t.map(|c| c.powf(z)).map_err(|_| Error::ZOverflow(z))?;
        if powered.values().iter().any(|v| !v.is_finite()) {
            return Err(Error::ZOverflow(z));
        }
        tables.push(powered);
    }
    let transformed = game
        .with_costs(tables)
        .and_then(|g| g.with_aggregations(vec![Aggregation::Lp(1.0); game.n_players()]))
        .map_err(|_| Error::ZOverflow(z))?;
    let start = State(vec![0; game.n_players()]);
    let trace = beta_descent(&transformed, &start, DEFAULT_MAX_STEPS, |s| rosenthal_potential_z(&transformed, s, 1.0))?;
    if trace.termination != Termination::Equilibrium {
        return Err(Error::StepBudget(DEFAULT_MAX_STEPS));
    }
    let beta = certify_beta(game, &trace.terminal)?;
    Ok(ApproxSolution {
        state: trace.terminal,
        beta,
        bound,
        z,
        inner_steps: trace.steps.len(),
    })
}

/// First approach: equilibrium of the game with every aggregation replaced
/// by summation. Certified factor is at most `d^(1 - 1/q)`.
pub fn solve_approx_first(game: &Game) -> Result<ApproxSolution> {
    let params = game_params(game)?;
    let bound = (params.d as f64).powf(1.0 - 1.0 / params.q);
    solve_transformed(game, 1.0, bound)
}

/// Second approach: equilibrium of the game with costs `c(x)^z`,
/// `z = (1/2 (1/p + 1/q))^-1`, summed. Certified factor is at most
/// `d^(1/2 (1/p - 1/q))`.
///
/// When every player uses `p = inf` the exponent is infinite; the game is
/// then solved exactly by bottleneck descent.
pub fn solve_approx_second(game: &Game) -> Result<ApproxSolution> {
    let params = game_params(game)?;
    let bound = crate::analysis::approx_guarantee(params.p, params.q, params.d);
    if params.z_pot.is_infinite() {
        let state = compute_pne_identical_p(game)?;
        let beta = certify_beta(game, &state)?;
        return Ok(ApproxSolution {
            state,
            beta,
            bound,
            z: params.z_pot,
            inner_steps: 0,
        });
    }
    solve_transformed(game, params.z_pot, bound)
}
