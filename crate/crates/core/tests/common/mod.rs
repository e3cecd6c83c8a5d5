//! Brute-force oracles written independently of the library's evaluation
//! paths. They recompute congestion, norms, potentials and equilibrium
//! conditions straight from the definitions.

#![allow(dead_code)]

use congestion_core::aggregation::{AggregationFunction, NonMonotoneWitness, ValueTable};
use congestion_core::{Aggregation, Game, State};

pub const TOL: f64 = 1e-9;

/// Every state, first player slowest.
pub fn all_states(game: &Game) -> Vec<State> {
    let sizes: Vec<usize> = (0..game.n_players()).map(|i| game.strategies(i).len()).collect();
    let mut out = vec![State(vec![0; sizes.len()])];
    for i in (0..sizes.len()).rev() {
        out = out
            .into_iter()
            .flat_map(|s| {
                (0..sizes[i]).map(move |k| {
                    let mut v = s.0.clone();
                    v[i] = k;
                    State(v)
                })
            })
            .collect();
    }
    out.sort_by(|a, b| a.0.cmp(&b.0));
    out
}

pub fn counts(game: &Game, state: &State) -> Vec<usize> {
    let mut n = vec![0; game.n_resources()];
    for (i, &s) in state.0.iter().enumerate() {
        for &r in game.strategy(i, s) {
            n[r] += 1;
        }
    }
    n
}

/// Plain `(sum v^p)^(1/p)`, or the maximum for `p = inf`.
pub fn norm(v: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        v.iter().copied().fold(0.0, f64::max)
    } else {
        v.iter().map(|x| x.powf(p)).sum::<f64>().powf(1.0 / p)
    }
}

pub fn own_costs(game: &Game, state: &State, i: usize) -> Vec<f64> {
    let n = counts(game, state);
    let mut v: Vec<f64> = game
        .strategy(i, state.0[i])
        .iter()
        .map(|&r| game.cost_table(r).values()[n[r] - 1])
        .collect();
    v.sort_by(f64::total_cmp);
    v
}

pub fn cost(game: &Game, state: &State, i: usize) -> f64 {
    let v = own_costs(game, state, i);
    match game.aggregation(i) {
        Aggregation::Lp(p) => norm(&v, *p),
        Aggregation::General(f) => f.eval(&v).unwrap(),
    }
}

pub fn deviation(game: &Game, state: &State, i: usize, s: usize) -> f64 {
    cost(game, &state.with(i, s), i)
}

/// Largest ratio current / best alternative over all players.
pub fn certify(game: &Game, state: &State) -> f64 {
    let mut beta: f64 = 1.0;
    for i in 0..game.n_players() {
        let cur = cost(game, state, i);
        let best = (0..game.strategies(i).len())
            .map(|s| deviation(game, state, i, s))
            .fold(f64::INFINITY, f64::min);
        let ratio = if best == 0.0 {
            if cur == 0.0 {
                1.0
            } else {
                f64::INFINITY
            }
        } else {
            cur / best
        };
        beta = beta.max(ratio);
    }
    beta
}

pub fn is_pne(game: &Game, state: &State) -> bool {
    (0..game.n_players()).all(|i| {
        let cur = cost(game, state, i);
        (0..game.strategies(i).len()).all(|s| deviation(game, state, i, s) >= cur * (1.0 - TOL))
    })
}

pub fn pne_set(game: &Game) -> Vec<State> {
    all_states(game).into_iter().filter(|s| is_pne(game, s)).collect()
}

pub fn min_beta(game: &Game) -> f64 {
    all_states(game)
        .iter()
        .map(|s| certify(game, s))
        .fold(f64::INFINITY, f64::min)
}

pub fn best_cost(game: &Game, state: &State, i: usize) -> f64 {
    (0..game.strategies(i).len())
        .map(|s| deviation(game, state, i, s))
        .fold(f64::INFINITY, f64::min)
}

pub fn rosenthal(game: &Game, state: &State, z: f64) -> f64 {
    counts(game, state)
        .iter()
        .enumerate()
        .map(|(r, &n)| (1..=n).map(|k| game.cost_table(r).values()[k - 1].powf(z)).sum::<f64>())
        .sum()
}

pub fn total(game: &Game, state: &State) -> f64 {
    (0..game.n_players()).map(|i| cost(game, state, i)).sum()
}

/// Some `k` nodes pairwise non-adjacent.
pub fn has_independent_set(nodes: usize, edges: &[(usize, usize)], k: usize) -> bool {
    (0u32..1 << nodes).any(|mask| {
        mask.count_ones() as usize == k
            && edges
                .iter()
                .all(|&(u, v)| mask & (1 << u) == 0 || mask & (1 << v) == 0)
    })
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for at in 0..=p.len() {
            let mut q = p.clone();
            q.insert(at, n - 1);
            out.push(q);
        }
    }
    out
}

/// One representative per isomorphism class of simple graphs on `nodes`
/// nodes with maximum degree at most `max_degree`.
pub fn graphs_up_to_isomorphism(nodes: usize, max_degree: usize) -> Vec<Vec<(usize, usize)>> {
    let pairs: Vec<(usize, usize)> = (0..nodes)
        .flat_map(|u| (u + 1..nodes).map(move |v| (u, v)))
        .collect();
    let perms = permutations(nodes);
    let mut index = vec![vec![0usize; nodes]; nodes];
    for (e, &(u, v)) in pairs.iter().enumerate() {
        index[u][v] = e;
        index[v][u] = e;
    }
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    for mask in 0u32..1 << pairs.len() {
        let edges: Vec<(usize, usize)> = (0..pairs.len()).filter(|&e| mask & (1 << e) != 0).map(|e| pairs[e]).collect();
        let mut degree = vec![0; nodes];
        for &(u, v) in &edges {
            degree[u] += 1;
            degree[v] += 1;
        }
        if degree.iter().any(|&d| d > max_degree) {
            continue;
        }
        let canonical = perms
            .iter()
            .map(|p| edges.iter().map(|&(u, v)| 1u32 << index[p[u]][p[v]]).sum::<u32>())
            .min()
            .unwrap();
        if seen.insert(canonical) {
            out.push(edges);
        }
    }
    out
}

/// Largest integer `z` with `z^2/(z+1) <= D`, found by counting up.
pub fn smoothness_z(d: usize, q: f64) -> u64 {
    let big_d = (d as f64).powf(1.0 - 1.0 / q);
    let mut z = 1u64;
    while ((z + 1) * (z + 1)) as f64 / (z + 2) as f64 <= big_d * (1.0 + TOL) {
        z += 1;
    }
    z
}

/// Value cells of the published bound table, row by row:
/// first approach (d = 2, 10), then second approach (d = 2, 10).
pub const PUBLISHED_TABLE: [[f64; 4]; 5] = [
    [2.83, 6.32, 1.59, 2.37],
    [3.17, 9.28, 2.54, 2.91],
    [4.0, 20.0, 2.83, 6.32],
    [4.0, 20.0, 4.76, 7.11],
    [4.0, 20.0, 20.71, 22.44],
];

fn sorted_insert(v: &[f64], x: f64) -> Vec<f64> {
    let mut w = v.to_vec();
    w.push(x);
    w.sort_by(f64::total_cmp);
    w
}

/// Scans every `(x, y, z)` over `values` for a strong non-monotonicity
/// witness of `f` with vectors of length `d`, straight from the definition.
pub fn find_reversal(f: &AggregationFunction, values: &[f64], d: usize) -> Option<NonMonotoneWitness> {
    let contexts = |len: usize| -> Vec<Vec<f64>> {
        let mut out = vec![vec![]];
        for _ in 0..len {
            out = out
                .into_iter()
                .flat_map(|v: Vec<f64>| {
                    let last = v.last().copied();
                    values
                        .iter()
                        .filter(move |&&x| last.is_none_or(|l| l <= x))
                        .map(move |&x| {
                            let mut w = v.clone();
                            w.push(x);
                            w
                        })
                })
                .collect();
        }
        out
    };
    let rests = contexts(d - 1);
    for &a in values {
        for &b in values.iter().filter(|&&b| b > a) {
            for rest in &rests {
                let x = sorted_insert(rest, a);
                let y = sorted_insert(rest, b);
                if f.eval(&y).unwrap() >= f.eval(&x).unwrap() {
                    continue;
                }
                for z in &rests {
                    if f.eval(&sorted_insert(z, a)).unwrap() < f.eval(&sorted_insert(z, b)).unwrap() {
                        let j = x.iter().position(|&v| v == a).unwrap();
                        let k = y.iter().position(|&v| v == b).unwrap();
                        return Some(NonMonotoneWitness {
                            x,
                            y,
                            z: z.clone(),
                            j,
                            k,
                        });
                    }
                }
            }
        }
    }
    None
}

/// Table-defined function on sorted length-`d` vectors over `values`, with
/// entries drawn by `next`.
pub fn random_table(values: &[f64], d: usize, mut next: impl FnMut() -> f64) -> AggregationFunction {
    let table = ValueTable::from_fn(d, values, |_| next()).unwrap();
    AggregationFunction::table("random", table)
}

/// Direct check of the defining conditions of a reversal witness.
pub fn witness_holds(f: &AggregationFunction, w: &NonMonotoneWitness) -> bool {
    let d = w.x.len();
    if w.y.len() != d || w.z.len() + 1 != d || w.j >= d || w.k >= d {
        return false;
    }
    let (a, b) = (w.x[w.j], w.y[w.k]);
    let mut rest_x = w.x.clone();
    rest_x.remove(w.j);
    let mut rest_y = w.y.clone();
    rest_y.remove(w.k);
    a < b
        && rest_x == rest_y
        && f.eval(&w.y).unwrap() < f.eval(&w.x).unwrap()
        && f.eval(&sorted_insert(&w.z, a)).unwrap() < f.eval(&sorted_insert(&w.z, b)).unwrap()
}

/// Descending costs of used resources, one entry per user.
pub fn bottleneck_profile(game: &Game, state: &State) -> Vec<f64> {
    let mut v: Vec<f64> = counts(game, state)
        .iter()
        .enumerate()
        .flat_map(|(r, &n)| (0..n).map(move |_| game.cost_table(r).values()[n - 1]))
        .collect();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

/// `a` is lexicographically smaller than `b` (equal-length vectors).
pub fn lex_less(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).find(|(x, y)| x != y).is_some_and(|(x, y)| x < y)
}
