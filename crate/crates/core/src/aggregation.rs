//! Aggregation functions over non-decreasingly sorted resource-cost vectors,
//! their monotonicity classification on a finite value set, and the swap
//! preorder that weakly monotone functions induce.
//!
//! All verdicts are relative to the value set they were computed on. A
//! function that is weakly monotone on `V` may still be strongly
//! non-monotone on a larger set.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tolerance::{at_most, same_value, strictly_less};

/// Default limit on `|V|^d` for exhaustive classification.
pub const DEFAULT_CLASSIFY_BUDGET: u128 = 1_000_000;

/// `(sum c^p)^(1/p)`, or the maximum for `p = inf`.
pub fn lp_norm(values: &[f64], p: f64) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    if p.is_infinite() {
        return values.iter().copied().fold(0.0, f64::max);
    }
    if p == 1.0 {
        return values.iter().sum();
    }
    // Scale by the maximum so large exponents do not overflow.
    let scale = values.iter().copied().fold(0.0, f64::max);
    if scale == 0.0 {
        return 0.0;
    }
    let sum: f64 = values.iter().map(|v| (v / scale).powf(p)).sum();
    scale * sum.powf(1.0 / p)
}

/// An explicit value table over sorted `arity`-vectors drawn from `domain`.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueTable {
    arity: usize,
    domain: Vec<f64>,
    values: HashMap<Vec<usize>, f64>,
}

impl ValueTable {
    /// Tabulates `f` on every sorted `arity`-vector over `domain`.
    pub fn from_fn(arity: usize, domain: &[f64], mut f: impl FnMut(&[f64]) -> f64) -> Result<Self> {
        let domain = normalize_domain(domain)?;
        if arity == 0 {
            return Err(Error::InvalidParameters("arity must be positive".into()));
        }
        let mut values = HashMap::new();
        let mut buf = Vec::with_capacity(arity);
        for key in multisets(domain.len(), arity) {
            buf.clear();
            buf.extend(key.iter().map(|&i| domain[i]));
            values.insert(key, f(&buf));
        }
        Ok(ValueTable {
            arity,
            domain,
            values,
        })
    }

    /// Builds a table from entries keyed by sorted value vectors. Every sorted
    /// vector over the domain must be present.
    pub fn from_entries(arity: usize, domain: &[f64], entries: &[(Vec<f64>, f64)]) -> Result<Self> {
        let domain = normalize_domain(domain)?;
        let mut values = HashMap::new();
        for (vector, value) in entries {
            if vector.len() != arity {
                return Err(Error::schema(
                    "table",
                    format!("key {vector:?} does not have arity {arity}"),
                ));
            }
            let mut key = Vec::with_capacity(arity);
            for &v in vector {
                let idx = domain_index(&domain, v).ok_or_else(|| {
                    Error::schema("table", format!("key value {v} is not in the domain"))
                })?;
                key.push(idx);
            }
            key.sort_unstable();
            values.insert(key, *value);
        }
        let expected = multisets(domain.len(), arity).len();
        if values.len() != expected {
            return Err(Error::schema(
                "table",
                format!("table has {} sorted vectors, domain requires {expected}", values.len()),
            ));
        }
        Ok(ValueTable {
            arity,
            domain,
            values,
        })
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn domain(&self) -> &[f64] {
        &self.domain
    }

    fn lookup(&self, name: &str, sorted: &[f64]) -> Result<f64> {
        let mut key = Vec::with_capacity(sorted.len());
        for &v in sorted {
            key.push(domain_index(&self.domain, v).ok_or_else(|| Error::OutsideDomain {
                name: name.to_string(),
                value: v,
            })?);
        }
        Ok(self.values[&key])
    }

    /// Entries in a stable order, keyed by the sorted value vector.
    pub fn entries(&self) -> Vec<(Vec<f64>, f64)> {
        let mut out: Vec<_> = self
            .values
            .iter()
            .map(|(k, &v)| (k.clone(), v))
            .collect();
        out.sort_by(|a, b| a.0.cmp(&b.0));
        out.into_iter()
            .map(|(k, v)| (k.iter().map(|&i| self.domain[i]).collect(), v))
            .collect()
    }
}

fn normalize_domain(domain: &[f64]) -> Result<Vec<f64>> {
    if domain.is_empty() {
        return Err(Error::schema("domain", "domain must be non-empty"));
    }
    if domain.iter().any(|v| !v.is_finite()) {
        return Err(Error::schema("domain", "domain values must be finite"));
    }
    let mut d = domain.to_vec();
    d.sort_by(f64::total_cmp);
    d.dedup_by(|a, b| same_value(*a, *b));
    Ok(d)
}

fn domain_index(domain: &[f64], v: f64) -> Option<usize> {
    domain.iter().position(|&w| same_value(w, v))
}

#[derive(Debug, Clone, PartialEq)]
pub enum FunctionKind {
    Sum,
    Max,
    Lp(f64),
    Table(ValueTable),
}

/// A named aggregation function evaluated on non-decreasingly sorted vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregationFunction {
    name: String,
    kind: FunctionKind,
}

impl AggregationFunction {
    pub fn sum() -> Self {
        AggregationFunction {
            name: "sum".into(),
            kind: FunctionKind::Sum,
        }
    }

    pub fn max() -> Self {
        AggregationFunction {
            name: "max".into(),
            kind: FunctionKind::Max,
        }
    }

    pub fn lp(p: f64) -> Self {
        AggregationFunction {
            name: format!("lp:{}", format_exponent(p)),
            kind: FunctionKind::Lp(p),
        }
    }

    pub fn table(name: impl Into<String>, table: ValueTable) -> Self {
        AggregationFunction {
            name: name.into(),
            kind: FunctionKind::Table(table),
        }
    }

    /// Resolves one of the registered closed forms: `sum`, `max`, `lp:<p>`.
    pub fn registered(name: &str) -> Result<Self> {
        match name {
            "sum" => Ok(Self::sum()),
            "max" => Ok(Self::max()),
            _ => {
                let p = name
                    .strip_prefix("lp:")
                    .and_then(parse_exponent)
                    .ok_or_else(|| Error::UnknownFunction(name.to_string()))?;
                if p < 1.0 {
                    return Err(Error::InvalidExponent {
                        path: name.to_string(),
                        p,
                    });
                }
                Ok(Self::lp(p))
            }
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> &FunctionKind {
        &self.kind
    }

    /// Fixed arity for table functions; closed forms accept any length.
    pub fn arity(&self) -> Option<usize> {
        match &self.kind {
            FunctionKind::Table(t) => Some(t.arity),
            _ => None,
        }
    }

    /// Evaluates on a non-decreasingly sorted vector.
    pub fn eval(&self, sorted: &[f64]) -> Result<f64> {
        if sorted.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::UnsortedInput(self.name.clone()));
        }
        if let Some(a) = self.arity() {
            if a != sorted.len() {
                return Err(Error::ArityMismatch {
                    name: self.name.clone(),
                    expected: a,
                    actual: sorted.len(),
                });
            }
        }
        Ok(match &self.kind {
            FunctionKind::Sum => sorted.iter().sum(),
            FunctionKind::Max => sorted.last().copied().unwrap_or(0.0),
            FunctionKind::Lp(p) => lp_norm(sorted, *p),
            FunctionKind::Table(t) => t.lookup(&self.name, sorted)?,
        })
    }

    /// Sorts `values` in place and evaluates.
    pub fn eval_unsorted(&self, values: &mut [f64]) -> Result<f64> {
        values.sort_by(f64::total_cmp);
        self.eval(values)
    }
}

pub(crate) fn parse_exponent(s: &str) -> Option<f64> {
    match s {
        "inf" | "infinity" | "∞" => Some(f64::INFINITY),
        _ => s.parse::<f64>().ok().filter(|p| !p.is_nan()),
    }
}

pub(crate) fn format_exponent(p: f64) -> String {
    if p.is_infinite() {
        "inf".into()
    } else {
        format!("{p}")
    }
}

/// All non-decreasing index vectors of length `k` over `0..n`, in
/// lexicographic order.
pub fn multisets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if n == 0 && k > 0 {
        return out;
    }
    let mut cur = vec![0usize; k];
    loop {
        out.push(cur.clone());
        // Advance the rightmost position that can still grow.
        let mut pos = k;
        while pos > 0 && cur[pos - 1] == n - 1 {
            pos -= 1;
        }
        if pos == 0 {
            break;
        }
        let v = cur[pos - 1] + 1;
        for c in &mut cur[pos - 1..] {
            *c = v;
        }
    }
    out
}

fn insert_sorted(context: &[usize], elem: usize) -> Vec<usize> {
    let mut v = Vec::with_capacity(context.len() + 1);
    let at = context.partition_point(|&c| c < elem);
    v.extend_from_slice(&context[..at]);
    v.push(elem);
    v.extend_from_slice(&context[at..]);
    v
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Monotonicity {
    StronglyMonotone,
    WeaklyMonotone,
    StronglyNonMonotone,
}

impl fmt::Display for Monotonicity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Monotonicity::StronglyMonotone => "strongly monotone",
            Monotonicity::WeaklyMonotone => "weakly monotone",
            Monotonicity::StronglyNonMonotone => "strongly non-monotone",
        };
        f.write_str(s)
    }
}

/// A single-swap reversal: replacing `x[j]` by the larger `y[k]` lowers `f`
/// on `x`, but raises it when the same swap happens inside context `z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonMonotoneWitness {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
    pub j: usize,
    pub k: usize,
}

impl NonMonotoneWitness {
    pub fn low(&self) -> f64 {
        self.x[self.j]
    }

    pub fn high(&self) -> f64 {
        self.y[self.k]
    }

    /// Re-checks every defining condition by direct evaluation of `f`.
    pub fn verify(&self, f: &AggregationFunction) -> Result<()> {
        let d = self.x.len();
        let fail = |m: &str| Err(Error::InvalidWitness(m.to_string()));
        if d < 2 || self.y.len() != d || self.z.len() != d - 1 {
            return fail("vector lengths must be d, d and d-1 with d >= 2");
        }
        if self.j >= d || self.k >= d {
            return fail("swap indices out of range");
        }
        for v in [&self.x, &self.y, &self.z] {
            if v.windows(2).any(|w| w[0] > w[1]) {
                return fail("vectors must be sorted");
            }
        }
        if !(self.low() < self.high()) {
            return fail("x_j must be smaller than y_k");
        }
        let mut rest_x = self.x.clone();
        rest_x.remove(self.j);
        let mut rest_y = self.y.clone();
        rest_y.remove(self.k);
        if rest_x.iter().zip(&rest_y).any(|(a, b)| !same_value(*a, *b)) {
            return fail("x and y must differ in exactly one element");
        }
        if !strictly_less(f.eval(&self.y)?, f.eval(&self.x)?) {
            return fail("f(y) < f(x) does not hold");
        }
        let with = |v: f64| {
            let mut w = self.z.clone();
            let at = w.partition_point(|&c| c < v);
            w.insert(at, v);
            w
        };
        if !strictly_less(f.eval(&with(self.low()))?, f.eval(&with(self.high()))?) {
            return fail("context z does not reverse the swap");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MonotonicityWitness {
    /// Strong non-monotonicity: a swap whose direction depends on context.
    Reversal(NonMonotoneWitness),
    /// Failure of strong monotonicity alone: `lower <= upper` componentwise
    /// but `f(upper) < f(lower)`.
    Dominated { lower: Vec<f64>, upper: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityVerdict {
    pub class: Monotonicity,
    pub witness: Option<MonotonicityWitness>,
}

/// Values of `f` on every sorted `d`-vector over `values`, keyed by index vector.
struct Tabulated {
    values: Vec<f64>,
    table: HashMap<Vec<usize>, f64>,
}

impl Tabulated {
    fn new(f: &AggregationFunction, domain: &[f64], arity: usize, budget: u128) -> Result<Self> {
        if arity == 0 {
            return Err(Error::InvalidParameters("arity must be positive".into()));
        }
        if let Some(a) = f.arity() {
            if a != arity {
                return Err(Error::ArityMismatch {
                    name: f.name().to_string(),
                    expected: a,
                    actual: arity,
                });
            }
        }
        let values = normalize_domain(domain)?;
        let required = (values.len() as u128).saturating_pow(arity as u32);
        if required > budget {
            return Err(Error::BudgetExceeded { required, budget });
        }
        let mut table = HashMap::new();
        let mut buf = Vec::with_capacity(arity);
        for key in multisets(values.len(), arity) {
            buf.clear();
            buf.extend(key.iter().map(|&i| values[i]));
            let v = f.eval(&buf)?;
            table.insert(key, v);
        }
        Ok(Tabulated { values, table })
    }

    fn with(&self, context: &[usize], elem: usize) -> f64 {
        self.table[&insert_sorted(context, elem)]
    }

    fn to_values(&self, idx: &[usize]) -> Vec<f64> {
        idx.iter().map(|&i| self.values[i]).collect()
    }
}

/// Classifies `f` on sorted `arity`-vectors over the finite value set `domain`.
pub fn classify(f: &AggregationFunction, domain: &[f64], arity: usize) -> Result<MonotonicityVerdict> {
    classify_with_budget(f, domain, arity, DEFAULT_CLASSIFY_BUDGET)
}

pub fn classify_with_budget(
    f: &AggregationFunction,
    domain: &[f64],
    arity: usize,
    budget: u128,
) -> Result<MonotonicityVerdict> {
    let tab = Tabulated::new(f, domain, arity, budget)?;
    let n = tab.values.len();
    let contexts = multisets(n, arity - 1);
    let mut dominated = None;

    // Componentwise order on sorted vectors is generated by single-element
    // increases, so checking swaps a -> b (a < b) covers strong monotonicity.
    for a in 0..n {
        for b in a + 1..n {
            let mut lowers = None;
            let mut raises = None;
            for w in &contexts {
                let fa = tab.with(w, a);
                let fb = tab.with(w, b);
                if lowers.is_none() && strictly_less(fb, fa) {
                    lowers = Some(w);
                }
                if raises.is_none() && strictly_less(fa, fb) {
                    raises = Some(w);
                }
                if lowers.is_some() && raises.is_some() {
                    break;
                }
            }
            match (lowers, raises) {
                (Some(wl), Some(wr)) => {
                    let x = insert_sorted(wl, a);
                    let y = insert_sorted(wl, b);
                    let j = x.iter().position(|&i| i == a).expect("inserted");
                    let k = y.iter().position(|&i| i == b).expect("inserted");
                    let witness = NonMonotoneWitness {
                        x: tab.to_values(&x),
                        y: tab.to_values(&y),
                        z: tab.to_values(wr),
                        j,
                        k,
                    };
                    return Ok(MonotonicityVerdict {
                        class: Monotonicity::StronglyNonMonotone,
                        witness: Some(MonotonicityWitness::Reversal(witness)),
                    });
                }
                (Some(wl), None) if dominated.is_none() => {
                    dominated = Some(MonotonicityWitness::Dominated {
                        lower: tab.to_values(&insert_sorted(wl, a)),
                        upper: tab.to_values(&insert_sorted(wl, b)),
                    });
                }
                _ => {}
            }
        }
    }
    Ok(match dominated {
        Some(w) => MonotonicityVerdict {
            class: Monotonicity::WeaklyMonotone,
            witness: Some(w),
        },
        None => MonotonicityVerdict {
            class: Monotonicity::StronglyMonotone,
            witness: None,
        },
    })
}

/// The context-independent swap order of a weakly monotone function on a
/// finite value set, with dense ranks starting at 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwapPreorder {
    values: Vec<f64>,
    ranks: Vec<u32>,
}

impl SwapPreorder {
    /// Builds a preorder from explicit `(value, rank)` pairs.
    pub fn from_ranks(pairs: &[(f64, u32)]) -> Result<Self> {
        let mut pairs = pairs.to_vec();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        if pairs.windows(2).any(|w| same_value(w[0].0, w[1].0)) {
            return Err(Error::InvalidParameters("duplicate value in preorder".into()));
        }
        if pairs.iter().any(|p| p.1 == 0) {
            return Err(Error::InvalidParameters("ranks start at 1".into()));
        }
        Ok(SwapPreorder {
            values: pairs.iter().map(|p| p.0).collect(),
            ranks: pairs.iter().map(|p| p.1).collect(),
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn ranks(&self) -> &[u32] {
        &self.ranks
    }

    pub fn rank(&self, value: f64) -> Option<u32> {
        domain_index(&self.values, value).map(|i| self.ranks[i])
    }

    /// `x <=' y`.
    pub fn precedes(&self, x: f64, y: f64) -> Option<bool> {
        Some(self.rank(x)? <= self.rank(y)?)
    }

    pub fn max_rank(&self) -> u32 {
        self.ranks.iter().copied().max().unwrap_or(0)
    }

    /// Same order on the shared value set.
    pub fn same_order(&self, other: &SwapPreorder) -> bool {
        if self.values.len() != other.values.len() {
            return false;
        }
        self.values.iter().enumerate().all(|(i, &v)| {
            self.values.iter().enumerate().all(|(j, &w)| {
                let mine = self.ranks[i] <= self.ranks[j];
                match other.precedes(v, w) {
                    Some(theirs) => mine == theirs,
                    None => false,
                }
            })
        })
    }
}

/// Derives `<='` on `domain`: `x <=' y` iff `f(w+x) <= f(w+y)` in every
/// context `w` of `arity - 1` values.
pub fn derive_swap_preorder(f: &AggregationFunction, domain: &[f64], arity: usize) -> Result<SwapPreorder> {
    let tab = Tabulated::new(f, domain, arity, DEFAULT_CLASSIFY_BUDGET)?;
    let n = tab.values.len();
    let contexts = multisets(n, arity - 1);
    let mut le = vec![vec![true; n]; n];
    for x in 0..n {
        for y in 0..n {
            if x != y {
                le[x][y] = contexts.iter().all(|w| at_most(tab.with(w, x), tab.with(w, y)));
            }
        }
    }
    for x in 0..n {
        for y in x + 1..n {
            if !le[x][y] && !le[y][x] {
                return Err(Error::InconsistentSwapOrder(tab.values[x], tab.values[y]));
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| match (le[x][y], le[y][x]) {
        (true, false) => Ordering::Less,
        (false, true) => Ordering::Greater,
        _ => x.cmp(&y),
    });
    let mut ranks = vec![0u32; n];
    let mut rank = 0;
    for (pos, &v) in order.iter().enumerate() {
        if pos == 0 || !le[v][order[pos - 1]] {
            rank += 1;
        }
        ranks[v] = rank;
    }
    Ok(SwapPreorder {
        values: tab.values,
        ranks,
    })
}

/// True iff every function induces the same swap preorder on `domain`.
pub fn consistent_swap_order(fs: &[AggregationFunction], domain: &[f64], arity: usize) -> Result<bool> {
    let mut first: Option<SwapPreorder> = None;
    for f in fs {
        let pre = derive_swap_preorder(f, domain, arity)?;
        match &first {
            None => first = Some(pre),
            Some(p) if !p.same_order(&pre) => return Ok(false),
            Some(_) => {}
        }
    }
    Ok(true)
}

/// JSON form of a table-defined function:
/// `{"arity":d, "domain":[v...], "table":{"v1,v2,...": value}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableDocument {
    pub arity: usize,
    pub domain: Vec<f64>,
    pub table: BTreeMap<String, f64>,
}

impl TableDocument {
    pub fn from_table(table: &ValueTable) -> Self {
        TableDocument {
            arity: table.arity,
            domain: table.domain.clone(),
            table: table
                .entries()
                .into_iter()
                .map(|(k, v)| (vector_key(&k), v))
                .collect(),
        }
    }

    pub fn to_table(&self) -> Result<ValueTable> {
        let mut entries = Vec::with_capacity(self.table.len());
        for (key, &value) in &self.table {
            let vector = key
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| Error::schema(format!("table.{key}"), "key is not a list of numbers"))?;
            entries.push((vector, value));
        }
        ValueTable::from_entries(self.arity, &self.domain, &entries)
    }
}

/// Comma-separated key of a sorted vector, e.g. `"0,1.5"`.
pub fn vector_key(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(",")
}
