//! Fixture constructions (equilibrium non-existence, approximation
//! tightness, the independent-set reduction, matching pennies from a
//! non-monotone aggregation) and seeded random games.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::aggregation::{AggregationFunction, NonMonotoneWitness};
use crate::analysis::potential_exponent;
use crate::error::{Error, Result};
use crate::game::{Aggregation, CostTable, Game};
use crate::matroid::{Matroid, PartitionBlock};

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameters(msg.into())
}

/// Extends `values` with its last entry up to length `n`.
fn padded(mut values: Vec<f64>, n: usize) -> Result<CostTable> {
    let last = *values.last().expect("non-empty table");
    while values.len() < n {
        values.push(last);
    }
    CostTable::new(values)
}

/// Two players, six resources, no pure Nash equilibrium whenever `p < q`.
pub fn gen_thm2(p: u32, q: u32) -> Result<Game> {
    if p < 1 || p >= q {
        return Err(invalid(format!("need 1 <= p < q, got p={p}, q={q}")));
    }
    let z = f64::from(p + q) / 2.0;
    let heavy = 2f64.powf(1.0 / z);
    let mut costs = vec![CostTable::new(vec![0.0, 1.0])?; 4];
    costs.push(CostTable::new(vec![0.0, heavy])?);
    costs.push(CostTable::new(vec![0.0, heavy])?);
    Game::new(
        vec![vec![vec![0, 2, 4], vec![1, 3, 5]], vec![vec![0, 2, 5], vec![1, 3, 4]]],
        costs,
        vec![Aggregation::Lp(f64::from(p)), Aggregation::Lp(f64::from(q))],
    )
}

/// Resource id of copy `k` (0 or 1) of the `j`-th resource in the two-copy
/// sub-game; `j = d - 1` is the special resource.
fn copy_id(base: usize, d: usize, k: usize, j: usize) -> usize {
    base + k * d + j
}

/// Strategy sets of the two sub-game players: the first picks a whole copy,
/// the second a whole copy with the special resource of the other copy.
fn subgame_strategies(base: usize, d: usize) -> [Vec<Vec<usize>>; 2] {
    let whole = |k: usize| (0..d).map(|j| copy_id(base, d, k, j)).collect::<Vec<_>>();
    let crossed = |k: usize| {
        let mut s: Vec<usize> = (0..d - 1).map(|j| copy_id(base, d, k, j)).collect();
        s.push(copy_id(base, d, 1 - k, d - 1));
        s
    };
    [vec![whole(0), whole(1)], vec![crossed(0), crossed(1)]]
}

fn check_pq(p: f64, q: f64) -> Result<()> {
    if !(p >= 1.0) || !p.is_finite() || !(q > p) {
        return Err(invalid(format!("need 1 <= p < q, got p={p}, q={q}")));
    }
    Ok(())
}

/// Two-player game with `2d` resources in which no state is a
/// `beta`-approximate equilibrium for `beta < d^(1/2 (1/p - 1/q))`.
pub fn gen_thm5(p: f64, q: f64, d: usize) -> Result<Game> {
    check_pq(p, q)?;
    if d < 2 {
        return Err(invalid(format!("need d >= 2, got {d}")));
    }
    let z = potential_exponent(p, q);
    let special = (d as f64).powf(1.0 / z);
    let mut costs = Vec::with_capacity(2 * d);
    for _ in 0..2 {
        for _ in 0..d - 1 {
            costs.push(CostTable::new(vec![0.0, 1.0])?);
        }
        costs.push(CostTable::new(vec![1.0, special])?);
    }
    let [s1, s2] = subgame_strategies(0, d);
    Game::new(vec![s1, s2], costs, vec![Aggregation::Lp(p), Aggregation::Lp(q)])
}

/// A simple undirected graph given by its node count and edge list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphInstance {
    pub nodes: usize,
    pub edges: Vec<(usize, usize)>,
}

impl GraphInstance {
    pub fn new(nodes: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for &(u, v) in &edges {
            if u >= nodes || v >= nodes {
                return Err(invalid(format!("edge ({u},{v}) leaves the node range 0..{nodes}")));
            }
            if u == v {
                return Err(invalid(format!("self-loop at node {u}")));
            }
            if !seen.insert((u.min(v), u.max(v))) {
                return Err(invalid(format!("duplicate edge ({u},{v})")));
            }
        }
        Ok(GraphInstance { nodes, edges })
    }

    /// Indices of the edges incident to `v`, ascending.
    pub fn incident(&self, v: usize) -> Vec<usize> {
        (0..self.edges.len())
            .filter(|&e| self.edges[e].0 == v || self.edges[e].1 == v)
            .collect()
    }

    pub fn max_degree(&self) -> usize {
        (0..self.nodes).map(|v| self.incident(v).len()).max().unwrap_or(0)
    }
}

/// Game built from an independent-set instance: it has a state where no
/// player improves by a factor `d^(1/2 (1/p - 1/q))` iff the graph has an
/// independent set of size `k`.
///
/// Players are ordered: `k` node players, the connection player, the two
/// sub-game players, then (for `d = 2`) one auxiliary player per node of
/// degree 3. Resources are ordered: edges, node resources, `r_c`, then the
/// `2d` sub-game resources.
///
/// Every node `v` owns a resource `r_v` priced like an edge. Node players
/// choosing a degree-0 node use `{r_v}`, so two of them picking the same
/// isolated node still collide. For `d = 2`, a degree-3 node with edges
/// `e1 < e2 < e3` is chosen via `{r_v, r_e1}` and its auxiliary player picks
/// one of `{r_v}`, `{r_e2, r_e3}`, `{r_c}`.
pub fn gen_reduction(g: &GraphInstance, k: usize, p: f64, q: f64, d: usize) -> Result<Game> {
    check_pq(p, q)?;
    if d < 2 {
        return Err(invalid(format!("need d >= 2, got {d}")));
    }
    if k > g.nodes {
        return Err(invalid(format!("k = {k} exceeds the {} nodes", g.nodes)));
    }
    let degree_bound = if d == 2 { 3 } else { d };
    if g.max_degree() > degree_bound {
        return Err(invalid(format!(
            "max degree {} exceeds the bound {degree_bound}",
            g.max_degree()
        )));
    }

    let m_edges = g.edges.len();
    let node_res = |v: usize| m_edges + v;
    let r_c = m_edges + g.nodes;
    let base = r_c + 1;
    let n_resources = base + 2 * d;

    let mut node_strategies: Vec<Vec<usize>> = Vec::with_capacity(g.nodes + 1);
    let mut auxiliary: Vec<Vec<Vec<usize>>> = Vec::new();
    for v in 0..g.nodes {
        let inc = g.incident(v);
        let strategy = if inc.is_empty() {
            vec![node_res(v)]
        } else if d == 2 && inc.len() == 3 {
            auxiliary.push(vec![vec![node_res(v)], vec![inc[1], inc[2]], vec![r_c]]);
            vec![node_res(v), inc[0]]
        } else {
            inc
        };
        node_strategies.push(strategy);
    }
    node_strategies.push(vec![r_c]);

    let mut strategies: Vec<Vec<Vec<usize>>> = vec![node_strategies; k];
    strategies.push(vec![vec![r_c], vec![copy_id(base, d, 0, d - 1), copy_id(base, d, 1, d - 1)]]);
    let [s1, s2] = subgame_strategies(base, d);
    strategies.push(s1);
    strategies.push(s2);
    strategies.extend(auxiliary);

    let n = strategies.len();
    let d3 = 2.0 * (d as f64).powi(3);
    let d2 = 2.0 * (d as f64).powi(2);
    let z = potential_exponent(p, q);
    let mut costs = Vec::with_capacity(n_resources);
    for _ in 0..m_edges + g.nodes {
        costs.push(padded(vec![0.0, d3], n)?);
    }
    costs.push(padded(vec![0.0, d2], n)?);
    for _ in 0..2 {
        for _ in 0..d - 1 {
            costs.push(padded(vec![0.0, 1.0], n)?);
        }
        costs.push(padded(vec![0.0, 1.0, (d as f64).powf(1.0 / z)], n)?);
    }

    let mut aggregation = vec![Aggregation::Lp(p); n];
    aggregation[k + 2] = Aggregation::Lp(q);
    let game = Game::new(strategies, costs, aggregation)?;
    if game.max_strategy_size() != d {
        return Err(invalid(format!(
            "largest strategy has {} resources, expected d = {d}",
            game.max_strategy_size()
        )));
    }
    Ok(game)
}

/// Matching pennies built from a strong non-monotonicity witness of `f`:
/// player 1 wants to share the contested resource, player 2 wants to avoid
/// sharing, so none of the four states is an equilibrium.
///
/// Resources: `d - 1` fixed resources of player 1 (costs `x` without `x_j`),
/// `d - 1` fixed resources of player 2 (costs `z`), then `r_h` and `r_t`
/// costing `x_j` alone and `y_k` shared.
pub fn gen_thm8(f: &AggregationFunction, w: &NonMonotoneWitness) -> Result<Game> {
    w.verify(f)?;
    let d = w.x.len();
    let mut costs = Vec::with_capacity(2 * d);
    for (i, &c) in w.x.iter().enumerate() {
        if i != w.j {
            costs.push(CostTable::new(vec![c, c])?);
        }
    }
    for &c in &w.z {
        costs.push(CostTable::new(vec![c, c])?);
    }
    let contested = CostTable::new(vec![w.low(), w.high()])?;
    costs.push(contested.clone());
    costs.push(contested);
    let (h, t) = (2 * (d - 1), 2 * (d - 1) + 1);
    let fixed1: Vec<usize> = (0..d - 1).collect();
    let fixed2: Vec<usize> = (d - 1..2 * (d - 1)).collect();
    let with = |fixed: &[usize], r: usize| {
        let mut s = fixed.to_vec();
        s.push(r);
        s
    };
    Game::new(
        vec![
            vec![with(&fixed1, h), with(&fixed1, t)],
            vec![with(&fixed2, h), with(&fixed2, t)],
        ],
        costs,
        vec![Aggregation::General(f.clone()), Aggregation::General(f.clone())],
    )
}

/// Parameters of a seeded random game.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomGameSpec {
    pub players: usize,
    pub resources: usize,
    pub strategies_per_player: usize,
    /// Maximum strategy size.
    pub d: usize,
    /// Inclusive range of exponents. A finite range draws integers from it;
    /// an infinite upper end draws from `lo..=lo+3` and `inf`.
    pub p_range: (f64, f64),
    pub cost_cap: u32,
    pub seed: u64,
}

impl RandomGameSpec {
    pub fn new(players: usize, resources: usize, strategies_per_player: usize, d: usize, p_range: (f64, f64), cost_cap: u32, seed: u64) -> Self {
        RandomGameSpec {
            players,
            resources,
            strategies_per_player,
            d,
            p_range,
            cost_cap,
            seed,
        }
    }
}

fn draw_exponent(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        return lo;
    }
    let lo_i = lo.ceil() as u64;
    if hi.is_infinite() {
        let k = rng.gen_range(0..=4u64);
        return if k == 4 { f64::INFINITY } else { (lo_i + k) as f64 };
    }
    let hi_i = (hi.floor() as u64).max(lo_i);
    rng.gen_range(lo_i..=hi_i) as f64
}

/// Non-decreasing integer table of length `n` in `[0, cap]`, built as a
/// prefix sum of non-negative increments of at most `cap / n` (rounded up).
fn random_table(rng: &mut ChaCha8Rng, n: usize, cap: u32) -> CostTable {
    let step = cap.div_ceil(n as u32);
    let mut acc = 0u32;
    let values = (0..n)
        .map(|_| {
            acc = (acc + rng.gen_range(0..=step)).min(cap);
            f64::from(acc)
        })
        .collect();
    CostTable::new(values).expect("prefix sums are non-decreasing")
}

fn random_strategies(rng: &mut ChaCha8Rng, m: usize, count: usize, d: usize) -> Vec<Vec<usize>> {
    let ids: Vec<usize> = (0..m).collect();
    let mut out: Vec<Vec<usize>> = Vec::with_capacity(count);
    let mut attempts = 0;
    while out.len() < count && attempts < 50 * count {
        attempts += 1;
        let size = rng.gen_range(1..=d.min(m));
        let mut s: Vec<usize> = ids.choose_multiple(rng, size).copied().collect();
        s.sort_unstable();
        if !out.contains(&s) {
            out.push(s);
        }
    }
    out
}

fn check_sizes(spec: &RandomGameSpec) -> Result<()> {
    if spec.players == 0 || spec.resources == 0 || spec.strategies_per_player == 0 || spec.d == 0 {
        return Err(invalid("random game sizes must be positive"));
    }
    let (lo, hi) = spec.p_range;
    if !(lo >= 1.0) || !(hi >= lo) || lo.is_infinite() && hi != lo {
        return Err(invalid(format!("bad exponent range [{lo}, {hi}]")));
    }
    Ok(())
}

/// Seeded random game with `L_p` players, strategies of size at most `d` and
/// integer cost tables in `[0, cost_cap]`.
pub fn gen_random(spec: &RandomGameSpec) -> Result<Game> {
    check_sizes(spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let strategies = (0..spec.players)
        .map(|_| random_strategies(&mut rng, spec.resources, spec.strategies_per_player, spec.d))
        .collect();
    let costs = (0..spec.resources)
        .map(|_| random_table(&mut rng, spec.players, spec.cost_cap))
        .collect();
    let aggregation = (0..spec.players)
        .map(|_| Aggregation::Lp(draw_exponent(&mut rng, spec.p_range)))
        .collect();
    Game::new(strategies, costs, aggregation)
}

/// Like [`gen_random`] with linear costs `c_r(k) = a_r k`, `a_r` drawn from
/// `1..=cost_cap`.
pub fn gen_random_linear(spec: &RandomGameSpec) -> Result<Game> {
    check_sizes(spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let strategies = (0..spec.players)
        .map(|_| random_strategies(&mut rng, spec.resources, spec.strategies_per_player, spec.d))
        .collect();
    let costs = (0..spec.resources)
        .map(|_| CostTable::affine(f64::from(rng.gen_range(1..=spec.cost_cap.max(1))), 0.0, spec.players))
        .collect::<Result<Vec<_>>>()?;
    let aggregation = (0..spec.players)
        .map(|_| Aggregation::Lp(draw_exponent(&mut rng, spec.p_range)))
        .collect();
    Game::new(strategies, costs, aggregation)
}

/// Parameters of a seeded random matroid game. Every player gets a uniform
/// or partition matroid of rank `rank` over a random subset of the
/// resources; costs are non-decreasing sequences of `cost_values`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatroidGameSpec {
    pub players: usize,
    pub resources: usize,
    pub rank: usize,
    pub cost_values: Vec<f64>,
    pub aggregation: Aggregation,
    pub seed: u64,
}

fn random_matroid(rng: &mut ChaCha8Rng, m: usize, rank: usize) -> Result<Matroid> {
    let mut ids: Vec<usize> = (0..m).collect();
    ids.shuffle(rng);
    if rng.gen_bool(0.5) {
        let size = rng.gen_range(rank..=m);
        let ground = &ids[..size];
        let u = Matroid::uniform(rank, size)?;
        let bases: Vec<Vec<usize>> = u
            .bases()
            .iter()
            .map(|b| b.iter().map(|&e| ground[e]).collect())
            .collect();
        Matroid::from_bases(&bases)
    } else {
        // Split a prefix into `rank` blocks; blocks of size one are fixed.
        let size = rng.gen_range(rank..=m);
        let mut cuts: Vec<usize> = (1..size).collect::<Vec<_>>().choose_multiple(rng, rank - 1).copied().collect();
        cuts.sort_unstable();
        let mut blocks = Vec::with_capacity(rank);
        let mut start = 0;
        for end in cuts.into_iter().chain(std::iter::once(size)) {
            let block = ids[start..end].to_vec();
            blocks.push(if block.len() == 1 {
                PartitionBlock::Fixed(block)
            } else {
                PartitionBlock::OneOf(block)
            });
            start = end;
        }
        Matroid::partition(&blocks)
    }
}

pub fn gen_random_matroid(spec: &MatroidGameSpec) -> Result<Game> {
    if spec.players == 0 || spec.rank == 0 || spec.rank > spec.resources || spec.cost_values.is_empty() {
        return Err(invalid("matroid game needs players, 1 <= rank <= resources and cost values"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let strategies = (0..spec.players)
        .map(|_| random_matroid(&mut rng, spec.resources, spec.rank).map(|m| m.bases().to_vec()))
        .collect::<Result<Vec<_>>>()?;
    let costs = (0..spec.resources)
        .map(|_| {
            let mut v: Vec<f64> = (0..spec.players)
                .map(|_| *spec.cost_values.choose(&mut rng).expect("non-empty"))
                .collect();
            v.sort_by(f64::total_cmp);
            CostTable::new(v)
        })
        .collect::<Result<Vec<_>>>()?;
    Game::new(strategies, costs, vec![spec.aggregation.clone(); spec.players])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{approx_guarantee, find_all_pne, min_beta};
    use crate::game::{load_game, serialize_game, State};

    #[test]
    fn two_exponent_fixture_shape() {
        let g = gen_thm2(1, 3).unwrap();
        assert_eq!(g.state_count(), 4);
        assert!(find_all_pne(&g, 100).unwrap().is_empty());
        assert!(gen_thm2(3, 3).is_err());
    }

    #[test]
    fn tightness_fixture_costs() {
        let (p, q, d) = (1.0, 2.0, 2usize);
        let g = gen_thm5(p, q, d).unwrap();
        let z = potential_exponent(p, q);
        let allowed = [
            (d as f64).powf(1.0 / p),
            (d as f64).powf(1.0 / q),
            (d as f64).powf(1.0 / z),
        ];
        for s in g.enumerate_states(10).unwrap() {
            for c in g.player_costs(&s).unwrap() {
                assert!(allowed.iter().any(|a| (a - c).abs() < 1e-9), "cost {c}");
            }
        }
        let (b, _) = min_beta(&g, 10).unwrap();
        assert!((b - approx_guarantee(p, q, d)).abs() < 1e-9);
    }

    #[test]
    fn reduction_triangle() {
        let tri = GraphInstance::new(3, vec![(0, 1), (1, 2), (0, 2)]).unwrap();
        let threshold = approx_guarantee(1.0, 2.0, 3);
        let g1 = gen_reduction(&tri, 1, 1.0, 2.0, 3).unwrap();
        assert_eq!(g1.state_count(), 32);
        assert!(min_beta(&g1, 1000).unwrap().0 < threshold);
        let g2 = gen_reduction(&tri, 2, 1.0, 2.0, 3).unwrap();
        assert!(min_beta(&g2, 1000).unwrap().0 >= threshold - 1e-9);
        assert!(gen_reduction(&tri, 4, 1.0, 2.0, 3).is_err());
    }

    #[test]
    fn reduction_degree_bound() {
        let star = GraphInstance::new(5, vec![(0, 1), (0, 2), (0, 3), (0, 4)]).unwrap();
        assert!(gen_reduction(&star, 1, 1.0, 2.0, 3).is_err());
        assert!(gen_reduction(&star, 1, 1.0, 2.0, 4).is_ok());
        assert!(gen_reduction(&star, 1, 1.0, 2.0, 2).is_err());
        assert!(GraphInstance::new(2, vec![(0, 1), (1, 0)]).is_err());
    }

    #[test]
    fn random_is_deterministic() {
        let spec = RandomGameSpec::new(3, 5, 3, 2, (1.0, 3.0), 6, 42);
        let a = gen_random(&spec).unwrap();
        assert_eq!(a, gen_random(&spec).unwrap());
        assert_eq!(load_game(&serialize_game(&a)).unwrap(), a);
    }

    #[test]
    fn zero_cap_makes_everything_equilibrium() {
        let spec = RandomGameSpec::new(2, 4, 3, 2, (2.0, 2.0), 0, 7);
        let g = gen_random(&spec).unwrap();
        let all: Vec<State> = g.enumerate_states(1000).unwrap().collect();
        assert_eq!(find_all_pne(&g, 1000).unwrap(), all);
    }

    #[test]
    fn random_matroids_validate() {
        for seed in 0..20 {
            let spec = MatroidGameSpec {
                players: 3,
                resources: 6,
                rank: 1 + (seed as usize % 3),
                cost_values: vec![0.0, 1.0, 2.0],
                aggregation: Aggregation::Lp(2.0),
                seed,
            };
            let g = gen_random_matroid(&spec).unwrap();
            for i in 0..g.n_players() {
                crate::matroid::player_matroid(&g, i).unwrap();
            }
        }
    }
}
