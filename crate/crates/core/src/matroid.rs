//! Matroid strategy spaces: basis-family validation, greedy minimum-weight
//! bases, exchange matchings, and equilibrium dynamics for matroid games
//! with monotone or weakly monotone aggregation.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::aggregation::{classify, derive_swap_preorder, Monotonicity, SwapPreorder};
use crate::dynamics::{improvement_factor, pi_potential, run_round_robin, Trace, Termination};
use crate::error::{Error, Result};
use crate::game::{Aggregation, Game, State};
use crate::tolerance::{at_most, improves};

/// Why a candidate family is not the basis family of a matroid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatroidViolation {
    Empty,
    UnequalCardinality { first: Vec<usize>, other: Vec<usize> },
    /// No `y` in `b_prime \ b` makes `b - x + y` a basis.
    Exchange { b: Vec<usize>, b_prime: Vec<usize>, x: usize },
}

impl std::fmt::Display for MatroidViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MatroidViolation::Empty => f.write_str("no bases"),
            MatroidViolation::UnequalCardinality { first, other } => {
                write!(f, "bases {first:?} and {other:?} differ in size")
            }
            MatroidViolation::Exchange { b, b_prime, x } => {
                write!(f, "exchange fails for B={b:?}, B'={b_prime:?}, x={x}")
            }
        }
    }
}

fn normalized(bases: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = bases
        .iter()
        .map(|b| {
            let mut b = b.clone();
            b.sort_unstable();
            b.dedup();
            b
        })
        .collect();
    out.sort();
    out.dedup();
    out
}

/// Exhaustive check of equal cardinality and the basis-exchange axiom.
pub fn validate_matroid(candidates: &[Vec<usize>]) -> std::result::Result<(), MatroidViolation> {
    let bases = normalized(candidates);
    let Some(first) = bases.first() else {
        return Err(MatroidViolation::Empty);
    };
    if let Some(other) = bases.iter().find(|b| b.len() != first.len()) {
        return Err(MatroidViolation::UnequalCardinality {
            first: first.clone(),
            other: other.clone(),
        });
    }
    let family: HashSet<&Vec<usize>> = bases.iter().collect();
    for b in &bases {
        for b2 in &bases {
            for &x in b.iter().filter(|x| b2.binary_search(x).is_err()) {
                let ok = b2.iter().filter(|y| b.binary_search(y).is_err()).any(|&y| {
                    let mut c: Vec<usize> = b.iter().copied().filter(|&e| e != x).collect();
                    c.push(y);
                    c.sort_unstable();
                    family.contains(&c)
                });
                if !ok {
                    return Err(MatroidViolation::Exchange {
                        b: b.clone(),
                        b_prime: b2.clone(),
                        x,
                    });
                }
            }
        }
    }
    Ok(())
}

/// A matroid given by its explicit (validated) basis family.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Matroid {
    ground: Vec<usize>,
    bases: Vec<Vec<usize>>,
    rank: usize,
}

impl Matroid {
    pub fn from_bases(bases: &[Vec<usize>]) -> Result<Self> {
        validate_matroid(bases).map_err(|v| Error::InvalidMatroid(v.to_string()))?;
        let bases = normalized(bases);
        let mut ground: Vec<usize> = bases.iter().flatten().copied().collect();
        ground.sort_unstable();
        ground.dedup();
        let rank = bases[0].len();
        Ok(Matroid { ground, bases, rank })
    }

    /// `U(d, m)`: every `d`-subset of `0..m`.
    pub fn uniform(d: usize, m: usize) -> Result<Self> {
        if d > m {
            return Err(Error::InvalidMatroid(format!("U({d},{m}) needs d <= m")));
        }
        let mut bases = Vec::new();
        let mut cur: Vec<usize> = (0..d).collect();
        loop {
            bases.push(cur.clone());
            let mut i = d;
            while i > 0 && cur[i - 1] == m - d + i - 1 {
                i -= 1;
            }
            if i == 0 {
                break;
            }
            cur[i - 1] += 1;
            for j in i..d {
                cur[j] = cur[j - 1] + 1;
            }
        }
        Self::from_bases(&bases)
    }

    /// Bases pick every element of each fixed block and one element of each
    /// `one_of` block.
    pub fn partition(blocks: &[PartitionBlock]) -> Result<Self> {
        let mut bases: Vec<Vec<usize>> = vec![Vec::new()];
        for block in blocks {
            match block {
                PartitionBlock::Fixed(items) => {
                    for b in &mut bases {
                        b.extend_from_slice(items);
                    }
                }
                PartitionBlock::OneOf(items) => {
                    if items.is_empty() {
                        return Err(Error::InvalidMatroid("empty one_of block".into()));
                    }
                    bases = bases
                        .iter()
                        .flat_map(|b| {
                            items.iter().map(move |&e| {
                                let mut nb = b.clone();
                                nb.push(e);
                                nb
                            })
                        })
                        .collect();
                }
            }
        }
        let all: Vec<usize> = bases.iter().flatten().copied().collect();
        let distinct: HashSet<usize> = blocks
            .iter()
            .flat_map(|b| match b {
                PartitionBlock::Fixed(v) | PartitionBlock::OneOf(v) => v.iter().copied(),
            })
            .collect();
        let listed: usize = blocks
            .iter()
            .map(|b| match b {
                PartitionBlock::Fixed(v) | PartitionBlock::OneOf(v) => v.len(),
            })
            .sum();
        if listed != distinct.len() || all.is_empty() && !blocks.is_empty() {
            return Err(Error::InvalidMatroid("partition blocks must be disjoint".into()));
        }
        Self::from_bases(&bases)
    }

    pub fn ground(&self) -> &[usize] {
        &self.ground
    }

    pub fn bases(&self) -> &[Vec<usize>] {
        &self.bases
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn is_basis(&self, set: &[usize]) -> bool {
        let mut s = set.to_vec();
        s.sort_unstable();
        self.bases.binary_search(&s).is_ok()
    }

    /// Contained in some basis.
    pub fn is_independent(&self, set: &[usize]) -> bool {
        self.bases
            .iter()
            .any(|b| set.iter().all(|e| b.binary_search(e).is_ok()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartitionBlock {
    Fixed(Vec<usize>),
    OneOf(Vec<usize>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum MatroidDocument {
    Explicit { ground: Vec<usize>, bases: Vec<Vec<usize>> },
    Uniform { uniform: UniformDocument },
    Partition { partition: Vec<PartitionBlock> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct UniformDocument {
    d: usize,
    m: usize,
}

/// Reads `{"ground":..,"bases":..}`, `{"uniform":{"d":..,"m":..}}` or
/// `{"partition":[{"fixed":[..]},{"one_of":[..]}]}`.
pub fn load_matroid(document: &str) -> Result<Matroid> {
    let doc: MatroidDocument =
        serde_json::from_str(document).map_err(|e| Error::schema("$", e.to_string()))?;
    match doc {
        MatroidDocument::Explicit { ground, bases } => {
            let m = Matroid::from_bases(&bases)?;
            if let Some(e) = m.ground.iter().find(|e| !ground.contains(e)) {
                return Err(Error::schema("ground", format!("basis element {e} is not in the ground set")));
            }
            let mut ground = ground;
            ground.sort_unstable();
            ground.dedup();
            Ok(Matroid { ground, ..m })
        }
        MatroidDocument::Uniform { uniform } => Matroid::uniform(uniform.d, uniform.m),
        MatroidDocument::Partition { partition } => Matroid::partition(&partition),
    }
}

pub fn serialize_matroid(m: &Matroid) -> String {
    serde_json::to_string(&MatroidDocument::Explicit {
        ground: m.ground.clone(),
        bases: m.bases.clone(),
    })
    .expect("matroid serializes")
}

/// Greedy minimum-weight basis: elements in `(weight, id)` order, kept when
/// the selection stays independent. Equal weights yield the
/// lexicographically first basis.
pub fn min_weight_basis(m: &Matroid, weight: impl Fn(usize) -> f64) -> Vec<usize> {
    let mut order = m.ground.clone();
    order.sort_by(|&a, &b| weight(a).total_cmp(&weight(b)).then(a.cmp(&b)));
    let mut chosen = Vec::with_capacity(m.rank);
    for e in order {
        if chosen.len() == m.rank {
            break;
        }
        chosen.push(e);
        if !m.is_independent(&chosen) {
            chosen.pop();
        }
    }
    chosen.sort_unstable();
    chosen
}

fn sorted_weights(basis: &[usize], weight: &impl Fn(usize) -> f64) -> Vec<f64> {
    let mut w: Vec<f64> = basis.iter().map(|&e| weight(e)).collect();
    w.sort_by(f64::total_cmp);
    w
}

/// The min-sum basis' sorted weight vector is componentwise at most that of
/// every other basis.
pub fn componentwise_dominance(m: &Matroid, weight: impl Fn(usize) -> f64) -> bool {
    let best = sorted_weights(&min_weight_basis(m, &weight), &weight);
    m.bases.iter().all(|b| {
        let other = sorted_weights(b, &weight);
        best.iter().zip(&other).all(|(a, c)| at_most(*a, *c))
    })
}

/// Perfect matching of the exchange graph between `b \ b2` and `b2 \ b`:
/// `{r, r'}` is an edge when `b2 - r' + r` is a basis.
pub fn exchange_matching(m: &Matroid, b: &[usize], b2: &[usize]) -> Result<Vec<(usize, usize)>> {
    if !m.is_basis(b) || !m.is_basis(b2) {
        return Err(Error::InvalidMatroid("exchange matching needs two bases".into()));
    }
    let left: Vec<usize> = b.iter().copied().filter(|e| !b2.contains(e)).collect();
    let right: Vec<usize> = b2.iter().copied().filter(|e| !b.contains(e)).collect();
    let adj: Vec<Vec<usize>> = left
        .iter()
        .map(|&r| {
            (0..right.len())
                .filter(|&j| {
                    let mut c: Vec<usize> = b2.iter().copied().filter(|&e| e != right[j]).collect();
                    c.push(r);
                    m.is_basis(&c)
                })
                .collect()
        })
        .collect();

    fn augment(u: usize, adj: &[Vec<usize>], seen: &mut [bool], mate: &mut [Option<usize>]) -> bool {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                if mate[v].is_none_or(|w| augment(w, adj, seen, mate)) {
                    mate[v] = Some(u);
                    return true;
                }
            }
        }
        false
    }

    let mut mate: Vec<Option<usize>> = vec![None; right.len()];
    for u in 0..left.len() {
        let mut seen = vec![false; right.len()];
        if !augment(u, &adj, &mut seen, &mut mate) {
            return Err(Error::NoPerfectMatching);
        }
    }
    let mut pairs: Vec<(usize, usize)> = mate
        .iter()
        .enumerate()
        .map(|(j, u)| (left[u.expect("perfect")], right[j]))
        .collect();
    pairs.sort_unstable();
    Ok(pairs)
}

/// Player `i`'s strategy set as a matroid.
pub fn player_matroid(game: &Game, i: usize) -> Result<Matroid> {
    let strategies = game.strategies(i);
    validate_matroid(strategies).map_err(|v| Error::NotMatroid {
        player: i,
        reason: v.to_string(),
    })?;
    if normalized(strategies).len() != strategies.len() {
        return Err(Error::NotMatroid {
            player: i,
            reason: "duplicate strategies".into(),
        });
    }
    Matroid::from_bases(strategies)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatroidBestResponse {
    pub strategy: usize,
    /// Set when strong monotonicity of the player's aggregation could not be
    /// confirmed on the game's reachable cost values.
    pub warning: Option<String>,
}

/// Best response of a player whose strategies form a matroid basis family:
/// the greedy basis minimizing the sum of own-inclusive resource costs.
pub fn strong_monotone_best_response(game: &Game, state: &State, i: usize) -> Result<MatroidBestResponse> {
    game.check_state(state)?;
    let m = player_matroid(game, i)?;
    let cong = game.congestion(state);
    let current = game.strategy(i, state.choice(i));
    let weight = |r: usize| {
        let others = cong.get(r) - usize::from(current.binary_search(&r).is_ok());
        game.cost_table(r).cost(others + 1)
    };
    let basis = min_weight_basis(&m, weight);
    let strategy = game
        .strategies(i)
        .iter()
        .position(|s| *s == basis)
        .expect("greedy basis is one of the player's strategies");
    let warning = match game.aggregation(i) {
        Aggregation::Lp(_) => None,
        Aggregation::General(f) => match classify(f, &game.reachable_costs(), m.rank()) {
            Ok(v) if v.class == Monotonicity::StronglyMonotone => None,
            Ok(v) => Some(format!("aggregation {} is {} on reachable costs", f.name(), v.class)),
            Err(e) => Some(format!("monotonicity of {} unverified: {e}", f.name())),
        },
    };
    Ok(MatroidBestResponse { strategy, warning })
}

/// Swap preorder of player 0's aggregation over the game's reachable costs.
pub fn game_swap_preorder(game: &Game) -> Result<SwapPreorder> {
    let m = player_matroid(game, 0)?;
    derive_swap_preorder(&game.aggregation(0).as_function(), &game.reachable_costs(), m.rank())
}

/// `n^2 m^2` step bound for weakly monotone matroid dynamics.
pub fn weak_step_bound(game: &Game) -> usize {
    let n = game.n_players();
    let m = game.n_resources();
    n * n * m * m
}

/// Best-response dynamics for matroid games whose aggregations are weakly
/// monotone with one shared swap order. Among tied best responses the one
/// with the smallest swap-rank potential is taken, so the potential drops on
/// every step.
pub fn weak_monotone_dynamics(game: &Game, pre: &SwapPreorder, start: &State, budget: usize) -> Result<Trace> {
    let values = game.reachable_costs();
    let mut matroids = Vec::with_capacity(game.n_players());
    for i in 0..game.n_players() {
        let m = player_matroid(game, i)?;
        let f = game.aggregation(i).as_function();
        let verdict = classify(&f, &values, m.rank())?;
        if verdict.class == Monotonicity::StronglyNonMonotone {
            return Err(Error::StronglyNonMonotone(i));
        }
        let own = derive_swap_preorder(&f, &values, m.rank())?;
        for &v in &values {
            for &w in &values {
                let expected = pre.precedes(v, w).ok_or(Error::MissingRank(if pre.rank(v).is_none() { v } else { w }))?;
                if own.precedes(v, w) != Some(expected) {
                    return Err(Error::InconsistentSwapOrder(v, w));
                }
            }
        }
        matroids.push(m);
    }

    let potential = |s: &State| pi_potential(game, s, pre);
    let mut matching_error = None;
    let trace = run_round_robin(
        game,
        start,
        budget,
        |state, cong, i| {
            let current = game.deviation_cost(state, cong, i, state.choice(i))?;
            let costs = (0..game.strategies(i).len())
                .map(|s| game.deviation_cost(state, cong, i, s))
                .collect::<Result<Vec<_>>>()?;
            let best = costs.iter().copied().fold(f64::INFINITY, f64::min);
            if !improves(best, current) {
                return Ok(None);
            }
            let mut choice: Option<(usize, u64)> = None;
            for (s, &c) in costs.iter().enumerate() {
                if improves(best, c) {
                    continue;
                }
                let phi = potential(&state.with(i, s))?;
                if choice.is_none_or(|(_, p)| phi < p) {
                    choice = Some((s, phi));
                }
            }
            let (to, _) = choice.expect("some strategy attains the minimum");
            if let Err(e) = exchange_matching(&matroids[i], game.strategy(i, state.choice(i)), game.strategy(i, to)) {
                matching_error.get_or_insert(e);
            }
            Ok(Some((to, improvement_factor(current, costs[to]))))
        },
        |s| Ok(Some(potential(s)? as f64)),
    )?;
    if let Some(e) = matching_error {
        return Err(e);
    }
    if trace.termination != Termination::Equilibrium {
        return Err(Error::StepBudget(budget));
    }
    let bound = weak_step_bound(game);
    if trace.steps.len() > bound {
        return Err(Error::StepBudget(bound));
    }
    for (k, step) in trace.steps.iter().enumerate() {
        let (before, after) = (step.potential_before.unwrap(), step.potential_after.unwrap());
        if !(after < before) {
            return Err(Error::PotentialNotDecreasing { step: k, before, after });
        }
    }
    Ok(trace)
}
