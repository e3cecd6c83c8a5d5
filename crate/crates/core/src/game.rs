//! Game representation, state evaluation and exhaustive state enumeration.
//!
//! Congestion is counted own-inclusively: a player on resource `r` pays
//! `c_r(n_r(S))` with herself included, so tables are 1-indexed and the cost
//! at congestion 0 is never read.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::aggregation::{format_exponent, lp_norm, parse_exponent, AggregationFunction, FunctionKind, TableDocument};
use crate::error::{Error, Result};

/// Default cap on the number of states an exhaustive scan may visit.
pub const DEFAULT_BUDGET: u128 = 10_000_000;

/// `c_r(1), c_r(2), ...`: non-negative and non-decreasing.
#[derive(Debug, Clone, PartialEq)]
pub struct CostTable(Vec<f64>);

impl CostTable {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        Self::validated(values, "costs")
    }

    fn validated(values: Vec<f64>, path: &str) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::schema(path, "cost table is empty"));
        }
        for (k, &v) in values.iter().enumerate() {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::schema(format!("{path}[{k}]"), "cost must be finite and non-negative"));
            }
        }
        if values.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::DecreasingCostTable { path: path.to_string() });
        }
        Ok(CostTable(values))
    }

    /// Linear table `slope * k + offset` for `k = 1..=len`.
    pub fn affine(slope: f64, offset: f64, len: usize) -> Result<Self> {
        Self::new((1..=len).map(|k| slope * k as f64 + offset).collect())
    }

    /// Cost at own-inclusive congestion `k >= 1`.
    #[inline]
    pub fn cost(&self, k: usize) -> f64 {
        debug_assert!(k >= 1, "cost at congestion 0 is never evaluated");
        self.0[k - 1]
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.0.iter().map(|&v| f(v)).collect())
    }
}

/// How a player combines the costs of its resources.
#[derive(Debug, Clone, PartialEq)]
pub enum Aggregation {
    /// `L_p` norm; `p = f64::INFINITY` is the bottleneck (max).
    Lp(f64),
    General(AggregationFunction),
}

impl Aggregation {
    pub fn lp(&self) -> Option<f64> {
        match self {
            Aggregation::Lp(p) => Some(*p),
            Aggregation::General(_) => None,
        }
    }

    /// The aggregation as a function on sorted vectors.
    pub fn as_function(&self) -> AggregationFunction {
        match self {
            Aggregation::Lp(p) => AggregationFunction::lp(*p),
            Aggregation::General(f) => f.clone(),
        }
    }
}

impl fmt::Display for Aggregation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Aggregation::Lp(p) => write!(f, "L_{}", format_exponent(*p)),
            Aggregation::General(g) => write!(f, "{}", g.name()),
        }
    }
}

/// One strategy index per player.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct State(pub Vec<usize>);

impl State {
    pub fn choice(&self, player: usize) -> usize {
        self.0[player]
    }

    pub fn with(&self, player: usize, strategy: usize) -> State {
        let mut s = self.0.clone();
        s[player] = strategy;
        State(s)
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, s) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{s}")?;
        }
        write!(f, ")")
    }
}

/// Per-resource number of players whose strategy contains it.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CongestionProfile(pub Vec<usize>);

impl CongestionProfile {
    pub fn get(&self, resource: usize) -> usize {
        self.0[resource]
    }

    pub fn counts(&self) -> &[usize] {
        &self.0
    }
}

/// An atomic congestion game with per-player aggregation.
#[derive(Debug, Clone, PartialEq)]
pub struct Game {
    strategies: Vec<Vec<Vec<usize>>>,
    costs: Vec<CostTable>,
    aggregation: Vec<Aggregation>,
}

impl Game {
    /// Validates and builds a game. Strategies are stored sorted.
    pub fn new(
        strategies: Vec<Vec<Vec<usize>>>,
        costs: Vec<CostTable>,
        aggregation: Vec<Aggregation>,
    ) -> Result<Self> {
        let n = strategies.len();
        if n == 0 {
            return Err(Error::schema("players", "at least one player is required"));
        }
        if aggregation.len() != n {
            return Err(Error::schema("players", "one aggregation per player is required"));
        }
        if costs.is_empty() {
            return Err(Error::schema("resources", "at least one resource is required"));
        }
        let m = costs.len();
        let mut sorted = Vec::with_capacity(n);
        for (i, sigma) in strategies.into_iter().enumerate() {
            if sigma.is_empty() {
                return Err(Error::schema(format!("players[{i}].strategies"), "strategy set is empty"));
            }
            let mut out = Vec::with_capacity(sigma.len());
            for (s, mut strat) in sigma.into_iter().enumerate() {
                let path = format!("players[{i}].strategies[{s}]");
                if strat.is_empty() {
                    return Err(Error::schema(path, "strategy is empty"));
                }
                for (k, &r) in strat.iter().enumerate() {
                    if r >= m {
                        return Err(Error::DanglingResource {
                            path: format!("{path}[{k}]"),
                            id: r,
                        });
                    }
                }
                strat.sort_unstable();
                if strat.windows(2).any(|w| w[0] == w[1]) {
                    return Err(Error::schema(path, "strategy repeats a resource"));
                }
                out.push(strat);
            }
            sorted.push(out);
        }
        for (r, table) in costs.iter().enumerate() {
            if table.len() < n {
                return Err(Error::schema(
                    format!("resources[{r}].costs"),
                    format!("cost table has {} entries, {n} players need {n}", table.len()),
                ));
            }
        }
        for (i, agg) in aggregation.iter().enumerate() {
            let path = format!("players[{i}].aggregation");
            match agg {
                Aggregation::Lp(p) => {
                    if p.is_nan() || *p < 1.0 {
                        return Err(Error::InvalidExponent { path, p: *p });
                    }
                }
                Aggregation::General(f) => {
                    if let Some(a) = f.arity() {
                        if let Some(bad) = sorted[i].iter().find(|s| s.len() != a) {
                            return Err(Error::ArityMismatch {
                                name: f.name().to_string(),
                                expected: a,
                                actual: bad.len(),
                            });
                        }
                    }
                }
            }
        }
        Ok(Game {
            strategies: sorted,
            costs,
            aggregation,
        })
    }

    pub fn n_players(&self) -> usize {
        self.strategies.len()
    }

    pub fn n_resources(&self) -> usize {
        self.costs.len()
    }

    pub fn strategies(&self, player: usize) -> &[Vec<usize>] {
        &self.strategies[player]
    }

    pub fn strategy(&self, player: usize, index: usize) -> &[usize] {
        &self.strategies[player][index]
    }

    pub fn cost_table(&self, resource: usize) -> &CostTable {
        &self.costs[resource]
    }

    pub fn cost_tables(&self) -> &[CostTable] {
        &self.costs
    }

    pub fn aggregation(&self, player: usize) -> &Aggregation {
        &self.aggregation[player]
    }

    pub fn aggregations(&self) -> &[Aggregation] {
        &self.aggregation
    }

    /// Largest strategy cardinality over all players.
    pub fn max_strategy_size(&self) -> usize {
        self.strategies
            .iter()
            .flat_map(|s| s.iter().map(Vec::len))
            .max()
            .unwrap_or(0)
    }

    /// Same strategies, new cost tables.
    pub fn with_costs(&self, costs: Vec<CostTable>) -> Result<Game> {
        Game::new(self.strategies.clone(), costs, self.aggregation.clone())
    }

    /// Same strategies and costs, new aggregations.
    pub fn with_aggregations(&self, aggregation: Vec<Aggregation>) -> Result<Game> {
        Game::new(self.strategies.clone(), self.costs.clone(), aggregation)
    }

    /// Every cost value `c_r(k)` with `1 <= k <= n`, sorted and deduplicated.
    pub fn reachable_costs(&self) -> Vec<f64> {
        let n = self.n_players();
        let mut v: Vec<f64> = self
            .costs
            .iter()
            .flat_map(|t| t.values()[..n].iter().copied())
            .collect();
        v.sort_by(f64::total_cmp);
        v.dedup_by(|a, b| crate::tolerance::same_value(*a, *b));
        v
    }

    pub fn check_state(&self, state: &State) -> Result<()> {
        if state.0.len() != self.n_players() {
            return Err(Error::InvalidState(format!(
                "state has {} entries for {} players",
                state.0.len(),
                self.n_players()
            )));
        }
        for (i, &s) in state.0.iter().enumerate() {
            if s >= self.strategies[i].len() {
                return Err(Error::InvalidState(format!(
                    "player {i} has {} strategies, state picks {s}",
                    self.strategies[i].len()
                )));
            }
        }
        Ok(())
    }

    /// `n_r(S)` for every resource.
    pub fn congestion(&self, state: &State) -> CongestionProfile {
        let mut counts = vec![0usize; self.n_resources()];
        for (i, &s) in state.0.iter().enumerate() {
            for &r in &self.strategies[i][s] {
                counts[r] += 1;
            }
        }
        CongestionProfile(counts)
    }

    /// Resource costs player `i` would face using `strategy` against the
    /// congestion of `state` (the current strategy removed, the new one added).
    pub fn resource_costs(&self, state: &State, congestion: &CongestionProfile, i: usize, strategy: usize) -> Vec<f64> {
        let current = &self.strategies[i][state.0[i]];
        self.strategies[i][strategy]
            .iter()
            .map(|&r| {
                let others = congestion.0[r] - usize::from(current.binary_search(&r).is_ok());
                self.costs[r].cost(others + 1)
            })
            .collect()
    }

    /// Aggregates a cost vector with player `i`'s aggregation.
    pub fn aggregate(&self, i: usize, mut costs: Vec<f64>) -> Result<f64> {
        match &self.aggregation[i] {
            Aggregation::Lp(p) => Ok(lp_norm(&costs, *p)),
            Aggregation::General(f) => f.eval_unsorted(&mut costs),
        }
    }

    /// Cost of player `i` after switching to `strategy` with everyone else fixed.
    pub fn deviation_cost(&self, state: &State, congestion: &CongestionProfile, i: usize, strategy: usize) -> Result<f64> {
        self.aggregate(i, self.resource_costs(state, congestion, i, strategy))
    }

    /// `c_i(S)`.
    pub fn player_cost(&self, state: &State, i: usize) -> Result<f64> {
        let cong = self.congestion(state);
        self.deviation_cost(state, &cong, i, state.0[i])
    }

    pub fn player_costs(&self, state: &State) -> Result<Vec<f64>> {
        let cong = self.congestion(state);
        (0..self.n_players())
            .map(|i| self.deviation_cost(state, &cong, i, state.0[i]))
            .collect()
    }

    /// Social cost: sum of aggregated player costs.
    pub fn total_cost(&self, state: &State) -> Result<f64> {
        Ok(self.player_costs(state)?.iter().sum())
    }

    /// Number of states `prod_i |Sigma_i|` (saturating).
    pub fn state_count(&self) -> u128 {
        self.strategies
            .iter()
            .fold(1u128, |acc, s| acc.saturating_mul(s.len() as u128))
    }

    /// The state at position `index` of the lexicographic enumeration.
    pub fn state_at(&self, mut index: u128) -> State {
        let mut choice = vec![0usize; self.n_players()];
        for i in (0..self.n_players()).rev() {
            let k = self.strategies[i].len() as u128;
            choice[i] = (index % k) as usize;
            index /= k;
        }
        State(choice)
    }

    /// Every state exactly once, in lexicographic order.
    pub fn enumerate_states(&self, budget: u128) -> Result<StateIter<'_>> {
        let required = self.state_count();
        if required > budget {
            return Err(Error::BudgetExceeded { required, budget });
        }
        Ok(StateIter {
            game: self,
            next: Some(State(vec![0; self.n_players()])),
        })
    }
}

pub struct StateIter<'a> {
    game: &'a Game,
    next: Option<State>,
}

impl Iterator for StateIter<'_> {
    type Item = State;

    fn next(&mut self) -> Option<State> {
        let current = self.next.take()?;
        let mut succ = current.0.clone();
        let mut i = succ.len();
        while i > 0 {
            i -= 1;
            succ[i] += 1;
            if succ[i] < self.game.strategies[i].len() {
                self.next = Some(State(succ));
                return Some(current);
            }
            succ[i] = 0;
        }
        Some(current)
    }
}

// ---------------------------------------------------------------------------
// JSON schema

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GameDocument {
    players: Vec<PlayerDocument>,
    resources: Vec<ResourceDocument>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    functions: BTreeMap<String, TableDocument>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlayerDocument {
    strategies: Vec<Vec<usize>>,
    aggregation: AggregationDocument,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum AggregationDocument {
    Lp(ExponentDocument),
    General(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum ExponentDocument {
    Number(f64),
    Text(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ResourceDocument {
    costs: Vec<f64>,
}

/// Parses and validates a game document.
pub fn load_game(document: &str) -> Result<Game> {
    let doc: GameDocument =
        serde_json::from_str(document).map_err(|e| Error::schema("$", e.to_string()))?;

    let mut costs = Vec::with_capacity(doc.resources.len());
    for (r, res) in doc.resources.into_iter().enumerate() {
        costs.push(CostTable::validated(res.costs, &format!("resources[{r}].costs"))?);
    }

    let mut tables = BTreeMap::new();
    for (name, t) in &doc.functions {
        let table = t.to_table().map_err(|e| match e {
            Error::Schema { path, message } => Error::Schema {
                path: format!("functions.{name}.{path}"),
                message,
            },
            other => other,
        })?;
        tables.insert(name.clone(), AggregationFunction::table(name.clone(), table));
    }

    let mut strategies = Vec::with_capacity(doc.players.len());
    let mut aggregation = Vec::with_capacity(doc.players.len());
    for (i, player) in doc.players.into_iter().enumerate() {
        let path = format!("players[{i}].aggregation");
        let agg = match player.aggregation {
            AggregationDocument::Lp(ExponentDocument::Number(p)) => Aggregation::Lp(p),
            AggregationDocument::Lp(ExponentDocument::Text(s)) => match parse_exponent(&s) {
                Some(p) => Aggregation::Lp(p),
                None => return Err(Error::schema(format!("{path}.lp"), format!("{s:?} is not a number or \"inf\""))),
            },
            AggregationDocument::General(name) => match tables.get(&name) {
                Some(f) => Aggregation::General(f.clone()),
                None => Aggregation::General(
                    AggregationFunction::registered(&name)
                        .map_err(|_| Error::schema(format!("{path}.general"), format!("unknown function {name:?}")))?,
                ),
            },
        };
        strategies.push(player.strategies);
        aggregation.push(agg);
    }
    Game::new(strategies, costs, aggregation)
}

/// Emits the game in the same schema `load_game` reads.
pub fn serialize_game(game: &Game) -> String {
    let mut functions = BTreeMap::new();
    let players = (0..game.n_players())
        .map(|i| PlayerDocument {
            strategies: game.strategies[i].clone(),
            aggregation: match &game.aggregation[i] {
                Aggregation::Lp(p) if p.is_infinite() => AggregationDocument::Lp(ExponentDocument::Text("inf".into())),
                Aggregation::Lp(p) => AggregationDocument::Lp(ExponentDocument::Number(*p)),
                Aggregation::General(f) => {
                    if let FunctionKind::Table(t) = f.kind() {
                        functions.insert(f.name().to_string(), TableDocument::from_table(t));
                    }
                    AggregationDocument::General(f.name().to_string())
                }
            },
        })
        .collect();
    let resources = game
        .costs
        .iter()
        .map(|t| ResourceDocument { costs: t.0.clone() })
        .collect();
    let doc = GameDocument {
        players,
        resources,
        functions,
    };
    serde_json::to_string_pretty(&doc).expect("game document serializes")
}
