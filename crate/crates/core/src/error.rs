use thiserror::Error;

/// Errors produced by game construction, analysis and the fixture generators.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("schema violation at {path}: {message}")]
    Schema { path: String, message: String },

    #[error("decreasing cost table at {path}")]
    DecreasingCostTable { path: String },

    #[error("dangling resource id {id} at {path}")]
    DanglingResource { path: String, id: usize },

    #[error("aggregation value p = {p} < 1 at {path}")]
    InvalidExponent { path: String, p: f64 },

    #[error("state is invalid for this game: {0}")]
    InvalidState(String),

    #[error("aggregation {name} has arity {expected} but strategy has {actual} resources")]
    ArityMismatch {
        name: String,
        expected: usize,
        actual: usize,
    },

    #[error("value {value} is outside the domain of aggregation function {name}")]
    OutsideDomain { name: String, value: f64 },

    #[error("unsorted input passed to aggregation function {0}")]
    UnsortedInput(String),

    #[error("unknown aggregation function {0}")]
    UnknownFunction(String),

    #[error("enumeration budget exceeded: {required} > {budget}")]
    BudgetExceeded { required: u128, budget: u128 },

    #[error("players do not share one finite aggregation value")]
    HeterogeneousExponent,

    #[error("operation requires L_p aggregation for every player")]
    GeneralAggregation,

    #[error("power transform exponent is not usable: z = {0}")]
    ZOverflow(f64),

    #[error("step budget of {0} exhausted before reaching an equilibrium")]
    StepBudget(usize),

    #[error("potential did not decrease on step {step}: {before} -> {after}")]
    PotentialNotDecreasing { step: usize, before: f64, after: f64 },

    #[error("inconsistent swap order between {0} and {1}")]
    InconsistentSwapOrder(f64, f64),

    #[error("no swap rank for cost value {0}")]
    MissingRank(f64),

    #[error("strategy set of player {player} is not a matroid basis family: {reason}")]
    NotMatroid { player: usize, reason: String },

    #[error("invalid matroid: {0}")]
    InvalidMatroid(String),

    #[error("exchange graph has no perfect matching")]
    NoPerfectMatching,

    #[error("aggregation of player {0} is strongly non-monotone on the reachable cost values")]
    StronglyNonMonotone(usize),

    #[error("bound vacuous: 2z+1 = {lhs} <= d^(1-1/q) = {rhs}")]
    VacuousBound { lhs: f64, rhs: f64 },

    #[error("invalid parameters: {0}")]
    InvalidParameters(String),

    #[error("witness does not verify: {0}")]
    InvalidWitness(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Schema {
            path: path.into(),
            message: message.into(),
        }
    }
}
