mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use congestion_core::aggregation::{classify, derive_swap_preorder, MonotonicityWitness, TableDocument};
use congestion_core::analysis::{
    approx_guarantee, exact_poa, find_all_pne, first_approach_factor, game_params, is_pne, min_beta,
    poa_bound, second_approach_factor, smoothness_params, BoundTable, PriceOfAnarchy,
};
use congestion_core::dynamics::{
    beta_improvement_dynamics, best_response_dynamics, certify_beta, solve_approx_first, solve_approx_second,
    DEFAULT_MAX_STEPS,
};
use congestion_core::game::DEFAULT_BUDGET;
use congestion_core::generators::{
    gen_random, gen_random_linear, gen_reduction, gen_thm2, gen_thm5, gen_thm8, GraphInstance, RandomGameSpec,
};
use congestion_core::matroid::{
    componentwise_dominance, game_swap_preorder, load_matroid, min_weight_basis, weak_monotone_dynamics,
    weak_step_bound,
};
use congestion_core::{fmt6, load_game, serialize_game, AggregationFunction, Game, Monotonicity, State, Trace};
use serde_json::{json, Value};

use report::{fail, num, parse_exponent, parse_floats, parse_state, write_file, Failure, Outcome, Run};

/// Congestion games with L_p and general cost aggregation.
#[derive(Parser)]
#[command(name = "congestion", version)]
struct Cli {
    /// Write a JSON run report to PATH.
    #[arg(long, global = true, value_name = "PATH")]
    json: Option<PathBuf>,

    /// Worker threads for exhaustive state scans.
    #[arg(long, global = true, value_name = "INT", value_parser = clap::value_parser!(u16).range(1..))]
    threads: Option<u16>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exhaustive equilibrium analysis of a game.
    Analyze(AnalyzeArgs),
    /// Best-response or beta-improvement dynamics with potential logging.
    Dynamics(DynamicsArgs),
    /// Emit a game in the JSON format.
    #[command(subcommand)]
    Generate(Generate),
    /// Monotonicity class of an aggregation function on a finite value set.
    Classify(ClassifyArgs),
    /// Matroid strategy spaces.
    #[command(subcommand)]
    Matroid(MatroidCmd),
    /// Closed-form bounds.
    #[command(subcommand)]
    Bounds(Bounds),
    /// Approximation factors of both approaches for the reference (p, q) rows.
    Table(TableArgs),
    /// Approximate equilibrium by one of the two power-transform approaches.
    Solve(SolveArgs),
}

#[derive(Args)]
#[command(group(clap::ArgGroup::new("action").required(true).multiple(true)))]
struct AnalyzeArgs {
    /// Game file.
    #[arg(long, value_name = "PATH")]
    game: PathBuf,
    /// Check whether STATE (comma-separated strategy indices) is a PNE.
    #[arg(long, value_name = "STATE", group = "action")]
    is_pne: Option<String>,
    /// List every pure Nash equilibrium.
    #[arg(long, group = "action")]
    find_pne: bool,
    /// Smallest beta for which some state is a beta-approximate PNE.
    #[arg(long, group = "action")]
    min_beta: bool,
    /// Worst equilibrium total cost over optimal total cost.
    #[arg(long, group = "action")]
    exact_poa: bool,
    /// Smallest beta for which STATE is a beta-approximate PNE.
    #[arg(long, value_name = "STATE", group = "action")]
    certify: Option<String>,
    /// Maximum number of states to enumerate.
    #[arg(long, value_name = "INT", default_value_t = DEFAULT_BUDGET as u64)]
    budget: u64,
}

#[derive(Args)]
struct DynamicsArgs {
    /// Game file.
    #[arg(long, value_name = "PATH")]
    game: PathBuf,
    /// Move only on improvements by more than this factor; best response when absent.
    #[arg(long, value_name = "FLOAT")]
    beta: Option<f64>,
    /// Step budget.
    #[arg(long, value_name = "INT", default_value_t = DEFAULT_MAX_STEPS)]
    max_steps: usize,
    /// Start state; all zeros by default.
    #[arg(long, value_name = "STATE")]
    start: Option<String>,
    /// Write the steps as JSON lines to PATH.
    #[arg(long, value_name = "PATH")]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct Output {
    /// Write the game to PATH instead of standard output.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Generate {
    /// Two-player game without a PNE for integers p < q.
    Thm2 {
        #[arg(long, value_name = "INT")]
        p: u32,
        #[arg(long, value_name = "INT")]
        q: u32,
        #[command(flatten)]
        output: Output,
    },
    /// Two-player game whose best approximate equilibrium is d^(1/2 (1/p - 1/q)).
    Thm5 {
        #[arg(long, value_name = "FLOAT|inf", value_parser = parse_exponent)]
        p: f64,
        #[arg(long, value_name = "FLOAT|inf", value_parser = parse_exponent)]
        q: f64,
        #[arg(long, value_name = "INT")]
        d: usize,
        #[command(flatten)]
        output: Output,
    },
    /// Game that has a good approximate equilibrium iff the graph has an independent set of size k.
    Reduction {
        /// Graph file: {"nodes": n, "edges": [[u, v], ...]}.
        #[arg(long, value_name = "PATH")]
        graph: PathBuf,
        #[arg(long, value_name = "INT")]
        k: usize,
        #[arg(long, value_name = "FLOAT|inf", value_parser = parse_exponent)]
        p: f64,
        #[arg(long, value_name = "FLOAT|inf", value_parser = parse_exponent)]
        q: f64,
        #[arg(long, value_name = "INT")]
        d: usize,
        #[command(flatten)]
        output: Output,
    },
    /// Matroid game without a PNE for a strongly non-monotone table function.
    Thm8 {
        /// Function file: {"arity": d, "domain": [...], "table": {"v1,v2": value, ...}}.
        #[arg(long, value_name = "PATH")]
        function: PathBuf,
        #[command(flatten)]
        output: Output,
    },
    /// Seeded random L_p game.
    Random(RandomArgs),
}

#[derive(Args)]
struct RandomArgs {
    #[arg(long, value_name = "INT", default_value_t = 3)]
    players: usize,
    #[arg(long, value_name = "INT", default_value_t = 6)]
    resources: usize,
    /// Strategies per player.
    #[arg(long, value_name = "INT", default_value_t = 3)]
    strategies: usize,
    /// Maximum strategy size.
    #[arg(long, value_name = "INT", default_value_t = 2)]
    d: usize,
    /// Smallest exponent.
    #[arg(long, value_name = "FLOAT|inf", value_parser = parse_exponent, default_value = "1")]
    p: f64,
    /// Largest exponent.
    #[arg(long, value_name = "FLOAT|inf", value_parser = parse_exponent, default_value = "2")]
    q: f64,
    #[arg(long, value_name = "INT", default_value_t = 10)]
    cost_cap: u32,
    #[arg(long, value_name = "INT", default_value_t = 0)]
    seed: u64,
    /// Linear costs c(k) = a k.
    #[arg(long)]
    linear: bool,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
#[command(group(clap::ArgGroup::new("source").required(true)))]
struct ClassifyArgs {
    /// Classify every player's aggregation on the game's reachable costs.
    #[arg(long, value_name = "PATH", group = "source")]
    game: Option<PathBuf>,
    /// Table function file.
    #[arg(long, value_name = "PATH", group = "source")]
    function: Option<PathBuf>,
    /// Registered function: sum, max or lp:<p>.
    #[arg(long, value_name = "NAME", group = "source")]
    registered: Option<String>,
    /// Comma-separated value set; defaults to the table's domain.
    #[arg(long, value_name = "LIST")]
    domain: Option<String>,
    /// Vector length; defaults to the table's arity.
    #[arg(long, value_name = "INT")]
    d: Option<usize>,
}

#[derive(Subcommand)]
enum MatroidCmd {
    /// Check the basis axioms.
    Validate {
        #[arg(long, value_name = "PATH")]
        matroid: PathBuf,
    },
    /// Greedy minimum-weight basis.
    MinBasis {
        #[arg(long, value_name = "PATH")]
        matroid: PathBuf,
        /// Comma-separated weights indexed by element id.
        #[arg(long, value_name = "LIST")]
        weights: String,
    },
    /// Dynamics with the swap-rank potential for weakly monotone matroid games.
    WeakDynamics {
        #[arg(long, value_name = "PATH")]
        game: PathBuf,
        /// Start state; all zeros by default.
        #[arg(long, value_name = "STATE")]
        start: Option<String>,
        /// Step budget; n^2 m^2 by default.
        #[arg(long, value_name = "INT")]
        max_steps: Option<usize>,
    },
}

#[derive(Subcommand)]
enum Bounds {
    /// Smoothness parameters for linear costs.
    Smoothness {
        #[arg(long, value_name = "INT")]
        d: usize,
        #[arg(long, value_name = "FLOAT|inf", value_parser = parse_exponent)]
        q: f64,
    },
    /// Upper bound on the price of anarchy for linear costs.
    PoaBound {
        #[arg(long, value_name = "INT")]
        d: usize,
        #[arg(long, value_name = "FLOAT|inf", value_parser = parse_exponent)]
        q: f64,
    },
    /// Approximation factors for exponents in [p, q].
    ApproxGuarantee {
        #[arg(long, value_name = "FLOAT|inf", value_parser = parse_exponent)]
        p: f64,
        #[arg(long, value_name = "FLOAT|inf", value_parser = parse_exponent)]
        q: f64,
        #[arg(long, value_name = "INT")]
        d: usize,
        /// Slack of the first approach.
        #[arg(long, value_name = "FLOAT", default_value_t = 0.0)]
        epsilon: f64,
    },
}

#[derive(Args)]
struct TableArgs {
    /// Print CSV instead of aligned text.
    #[arg(long)]
    csv: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Approach {
    First,
    Second,
}

#[derive(Args)]
struct SolveArgs {
    approach: Approach,
    #[arg(long, value_name = "PATH")]
    game: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let argv: Vec<String> = std::env::args().skip(1).collect();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.into()).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let started = Instant::now();
    let mut run = Run::new();
    let result = dispatch(&cli.command, &mut run).and_then(|()| {
        print!("{}", run.text);
        match &cli.json {
            Some(path) => {
                let report = serde_json::to_string_pretty(&run.into_report(&argv)).expect("report serializes");
                write_file(path, &(report + "\n"))
            }
            None => Ok(()),
        }
    });
    match result {
        Ok(()) => {
            eprintln!("elapsed: {} s", fmt6(started.elapsed().as_secs_f64()));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(command: &Command, run: &mut Run) -> Outcome {
    match command {
        Command::Analyze(a) => analyze(a, run),
        Command::Dynamics(a) => dynamics(a, run),
        Command::Generate(g) => generate(g, run),
        Command::Classify(a) => classify_cmd(a, run),
        Command::Matroid(m) => matroid(m, run),
        Command::Bounds(b) => bounds(b, run),
        Command::Table(a) => table(a, run),
        Command::Solve(a) => solve(a, run),
    }
}

fn read_game(run: &mut Run, path: &Path) -> Outcome<Game> {
    let text = run.read(path)?;
    load_game(&text).map_err(|e| Failure(format!("{}: {e}", path.display())))
}

fn state_arg(s: &str) -> Outcome<State> {
    parse_state(s).map_err(Failure)
}

fn states_json(states: &[State]) -> Value {
    json!(states.iter().map(|s| &s.0).collect::<Vec<_>>())
}

fn analyze(a: &AnalyzeArgs, run: &mut Run) -> Outcome {
    let game = read_game(run, &a.game)?;
    let budget = u128::from(a.budget);
    if let Some(s) = &a.is_pne {
        let state = state_arg(s)?;
        let yes = is_pne(&game, &state)?;
        run.line(format!("{state} is {}a pure Nash equilibrium", if yes { "" } else { "not " }));
        run.set("is_pne", json!({ "state": state.0, "pne": yes }));
    }
    if a.find_pne {
        let pne = find_all_pne(&game, budget)?;
        let noun = if pne.len() == 1 { "equilibrium" } else { "equilibria" };
        run.line(format!("{} pure Nash {noun}", pne.len()));
        for s in &pne {
            run.line(format!("  {s}"));
        }
        run.set("pne", states_json(&pne));
    }
    if a.min_beta {
        let (beta, state) = min_beta(&game, budget)?;
        run.line(format!("min beta: {} at {state}", fmt6(beta)));
        run.set("min_beta", json!({ "beta": num(beta), "state": state.0 }));
    }
    if a.exact_poa {
        let poa = exact_poa(&game, budget)?;
        run.line(format!("price of anarchy: {poa}"));
        let v = match poa {
            PriceOfAnarchy::Ratio(r) => num(r),
            PriceOfAnarchy::NoEquilibrium => json!("no_equilibrium"),
            PriceOfAnarchy::Unbounded => json!("unbounded"),
        };
        run.set("exact_poa", v);
    }
    if let Some(s) = &a.certify {
        let state = state_arg(s)?;
        let beta = certify_beta(&game, &state)?;
        run.line(format!("{state} is a {}-approximate pure Nash equilibrium", fmt6(beta)));
        run.set("certify", json!({ "state": state.0, "beta": num(beta) }));
    }
    Ok(())
}

fn potential_text(p: Option<f64>) -> String {
    p.map_or_else(|| "-".into(), fmt6)
}

fn report_trace(run: &mut Run, game: &Game, trace: &Trace) -> Outcome {
    for (k, s) in trace.steps.iter().enumerate() {
        run.line(format!(
            "step {}: player {} {} -> {} factor {} potential {} -> {}",
            k + 1,
            s.player,
            s.from,
            s.to,
            fmt6(s.factor),
            potential_text(s.potential_before),
            potential_text(s.potential_after),
        ));
    }
    let termination = serde_json::to_value(trace.termination).expect("termination serializes");
    let beta = certify_beta(game, &trace.terminal)?;
    run.line(format!(
        "termination: {} after {} steps",
        termination.as_str().unwrap_or_default(),
        trace.steps.len()
    ));
    run.line(format!("terminal state: {} (certified beta {})", trace.terminal, fmt6(beta)));
    run.set(
        "trace",
        json!({
            "start": trace.start.0,
            "terminal": trace.terminal.0,
            "termination": termination,
            "step_count": trace.steps.len(),
            "certified_beta": num(beta),
            "steps": serde_json::to_value(&trace.steps).expect("steps serialize"),
        }),
    );
    Ok(())
}

fn start_state(game: &Game, start: &Option<String>) -> Outcome<State> {
    match start {
        Some(s) => state_arg(s),
        None => Ok(State(vec![0; game.n_players()])),
    }
}

fn dynamics(a: &DynamicsArgs, run: &mut Run) -> Outcome {
    let game = read_game(run, &a.game)?;
    let start = start_state(&game, &a.start)?;
    let trace = match a.beta {
        Some(beta) => beta_improvement_dynamics(&game, &start, beta, a.max_steps)?,
        None => best_response_dynamics(&game, &start, a.max_steps)?,
    };
    if let Some(path) = &a.trace {
        write_file(path, &trace.to_json_lines())?;
    }
    report_trace(run, &game, &trace)
}

fn emit_game(run: &mut Run, game: &Game, output: &Output) -> Outcome {
    let doc = serialize_game(game);
    match &output.out {
        Some(path) => {
            write_file(path, &(doc.clone() + "\n"))?;
            run.line(format!(
                "wrote {} ({} players, {} resources)",
                path.display(),
                game.n_players(),
                game.n_resources()
            ));
        }
        None => run.line(&doc),
    }
    run.set("game", serde_json::from_str(&doc).expect("game document is JSON"));
    Ok(())
}

fn generate(g: &Generate, run: &mut Run) -> Outcome {
    match g {
        Generate::Thm2 { p, q, output } => emit_game(run, &gen_thm2(*p, *q)?, output),
        Generate::Thm5 { p, q, d, output } => emit_game(run, &gen_thm5(*p, *q, *d)?, output),
        Generate::Reduction {
            graph,
            k,
            p,
            q,
            d,
            output,
        } => {
            let text = run.read(graph)?;
            let raw: GraphInstance =
                serde_json::from_str(&text).map_err(|e| Failure(format!("{}: {e}", graph.display())))?;
            let g = GraphInstance::new(raw.nodes, raw.edges)?;
            emit_game(run, &gen_reduction(&g, *k, *p, *q, *d)?, output)
        }
        Generate::Thm8 { function, output } => {
            let f = read_function(run, function)?;
            let table = match f.kind() {
                congestion_core::aggregation::FunctionKind::Table(t) => t.clone(),
                _ => unreachable!("read_function builds tables"),
            };
            let verdict = classify(&f, table.domain(), table.arity())?;
            let Some(MonotonicityWitness::Reversal(w)) = verdict.witness else {
                return fail(format!("{} is {} on its domain; no reversal witness", f.name(), verdict.class));
            };
            emit_game(run, &gen_thm8(&f, &w)?, output)
        }
        Generate::Random(r) => {
            let spec = RandomGameSpec::new(
                r.players,
                r.resources,
                r.strategies,
                r.d,
                (r.p, r.q),
                r.cost_cap,
                r.seed,
            );
            let game = if r.linear {
                gen_random_linear(&spec)?
            } else {
                gen_random(&spec)?
            };
            emit_game(run, &game, &r.output)
        }
    }
}

fn read_function(run: &mut Run, path: &Path) -> Outcome<AggregationFunction> {
    let text = run.read(path)?;
    let doc: TableDocument = serde_json::from_str(&text).map_err(|e| Failure(format!("{}: {e}", path.display())))?;
    let table = doc.to_table().map_err(|e| Failure(format!("{}: {e}", path.display())))?;
    let name = path.file_stem().map_or("table".into(), |s| s.to_string_lossy().into_owned());
    Ok(AggregationFunction::table(name, table))
}

fn classify_one(run: &mut Run, f: &AggregationFunction, domain: &[f64], arity: usize) -> Outcome<Value> {
    let verdict = classify(f, domain, arity)?;
    run.line(format!("{} (d = {arity}): {}", f.name(), verdict.class));
    match &verdict.witness {
        Some(MonotonicityWitness::Reversal(w)) => run.line(format!(
            "  witness: x = {:?}, y = {:?}, z = {:?}, j = {}, k = {}",
            w.x, w.y, w.z, w.j, w.k
        )),
        Some(MonotonicityWitness::Dominated { lower, upper }) => {
            run.line(format!("  f({upper:?}) < f({lower:?}) although {lower:?} <= {upper:?}"))
        }
        None => {}
    }
    let mut out = json!({
        "function": f.name(),
        "arity": arity,
        "class": verdict.class,
        "witness": verdict.witness,
    });
    if verdict.class != Monotonicity::StronglyNonMonotone {
        let pre = derive_swap_preorder(f, domain, arity)?;
        let ranks: Vec<String> = pre
            .values()
            .iter()
            .zip(pre.ranks())
            .map(|(v, r)| format!("{}:{r}", fmt6(*v)))
            .collect();
        run.line(format!("  swap ranks: {}", ranks.join(" ")));
        out["swap_ranks"] = json!(pre.values().iter().zip(pre.ranks()).map(|(v, r)| json!([v, r])).collect::<Vec<_>>());
    }
    Ok(out)
}

fn classify_cmd(a: &ClassifyArgs, run: &mut Run) -> Outcome {
    let domain = a.domain.as_deref().map(parse_floats).transpose().map_err(Failure)?;
    let mut verdicts = Vec::new();
    if let Some(path) = &a.game {
        let game = read_game(run, path)?;
        let values = domain.unwrap_or_else(|| game.reachable_costs());
        let mut done: Vec<(String, usize)> = Vec::new();
        for i in 0..game.n_players() {
            let f = game.aggregation(i).as_function();
            let longest = game.strategies(i).iter().map(Vec::len).max().unwrap_or(1);
            let arity = a.d.or(f.arity()).unwrap_or(longest);
            let key = (f.name().to_string(), arity);
            if !done.contains(&key) {
                verdicts.push(classify_one(run, &f, &values, arity)?);
                done.push(key);
            }
        }
    } else if let Some(path) = &a.function {
        let f = read_function(run, path)?;
        let (table_domain, table_arity) = match f.kind() {
            congestion_core::aggregation::FunctionKind::Table(t) => (t.domain().to_vec(), t.arity()),
            _ => unreachable!("read_function builds tables"),
        };
        let values = domain.unwrap_or(table_domain);
        verdicts.push(classify_one(run, &f, &values, a.d.unwrap_or(table_arity))?);
    } else if let Some(name) = &a.registered {
        let f = AggregationFunction::registered(name)?;
        let (Some(values), Some(arity)) = (domain, a.d) else {
            return fail("--registered needs --domain and --d");
        };
        verdicts.push(classify_one(run, &f, &values, arity)?);
    }
    run.set("classification", json!(verdicts));
    Ok(())
}

fn matroid(m: &MatroidCmd, run: &mut Run) -> Outcome {
    match m {
        MatroidCmd::Validate { matroid } => {
            let text = run.read(matroid)?;
            let mat = load_matroid(&text).map_err(|e| Failure(format!("{}: {e}", matroid.display())))?;
            run.line(format!(
                "valid matroid: rank {}, {} elements, {} bases",
                mat.rank(),
                mat.ground().len(),
                mat.bases().len()
            ));
            run.set(
                "matroid",
                json!({ "rank": mat.rank(), "ground": mat.ground(), "bases": mat.bases().len() }),
            );
            Ok(())
        }
        MatroidCmd::MinBasis { matroid, weights } => {
            let text = run.read(matroid)?;
            let mat = load_matroid(&text).map_err(|e| Failure(format!("{}: {e}", matroid.display())))?;
            let w = parse_floats(weights).map_err(Failure)?;
            if let Some(&e) = mat.ground().iter().find(|&&e| e >= w.len()) {
                return fail(format!("no weight for element {e}"));
            }
            let weight = |e: usize| w[e];
            let basis = min_weight_basis(&mat, weight);
            let total: f64 = basis.iter().map(|&e| w[e]).sum();
            let dominant = componentwise_dominance(&mat, weight);
            run.line(format!("minimum basis: {basis:?} (weight {})", fmt6(total)));
            run.line(format!(
                "componentwise dominance over all bases: {}",
                if dominant { "holds" } else { "fails" }
            ));
            run.set(
                "min_basis",
                json!({ "basis": basis, "weight": num(total), "componentwise_dominance": dominant }),
            );
            Ok(())
        }
        MatroidCmd::WeakDynamics { game, start, max_steps } => {
            let game = read_game(run, game)?;
            let start = start_state(&game, start)?;
            let pre = game_swap_preorder(&game)?;
            let budget = max_steps.unwrap_or_else(|| weak_step_bound(&game));
            let trace = weak_monotone_dynamics(&game, &pre, &start, budget)?;
            report_trace(run, &game, &trace)
        }
    }
}

fn bounds(b: &Bounds, run: &mut Run) -> Outcome {
    match *b {
        Bounds::Smoothness { d, q } => {
            let s = smoothness_params(d, q);
            run.line(format!(
                "z = {}, lambda = {}, mu = {}{}",
                s.z,
                fmt6(s.lambda),
                fmt6(s.mu),
                if s.valid { "" } else { " (mu >= 1, no bound)" }
            ));
            run.set(
                "smoothness",
                json!({ "d": d, "q": num(q), "z": s.z, "lambda": num(s.lambda), "mu": num(s.mu), "valid": s.valid }),
            );
        }
        Bounds::PoaBound { d, q } => {
            let bound = poa_bound(d, q)?;
            run.line(format!("price of anarchy <= {}", fmt6(bound)));
            run.set("poa_bound", json!({ "d": d, "q": num(q), "bound": num(bound) }));
        }
        Bounds::ApproxGuarantee { p, q, d, epsilon } => {
            if p > q {
                return fail(format!("need p <= q, got p = {p}, q = {q}"));
            }
            if !(epsilon >= 0.0) {
                return fail("epsilon must be non-negative");
            }
            let g = approx_guarantee(p, q, d);
            let first = first_approach_factor(q, d, epsilon);
            let second = second_approach_factor(p, q, d);
            run.line(format!("guarantee d^(1/2 (1/p - 1/q)) = {}", fmt6(g)));
            run.line(format!("first approach factor = {}", fmt6(first)));
            run.line(format!("second approach factor = {}", fmt6(second)));
            run.set(
                "approx_guarantee",
                json!({
                    "p": num(p), "q": num(q), "d": d, "epsilon": num(epsilon),
                    "guarantee": num(g), "first": num(first), "second": num(second),
                }),
            );
        }
    }
    Ok(())
}

fn table(a: &TableArgs, run: &mut Run) -> Outcome {
    let t = BoundTable::reference();
    if a.csv {
        run.text.push_str(&t.to_csv());
    } else {
        run.text.push_str(&t.to_string());
    }
    run.set("table", serde_json::to_value(&t).expect("table serializes"));
    Ok(())
}

fn solve(a: &SolveArgs, run: &mut Run) -> Outcome {
    let game = read_game(run, &a.game)?;
    let params = game_params(&game)?;
    let (name, sol) = match a.approach {
        Approach::First => ("first", solve_approx_first(&game)?),
        Approach::Second => ("second", solve_approx_second(&game)?),
    };
    run.line(format!("{name} approach: state {}", sol.state));
    run.line(format!(
        "certified beta {} (bound {}), z = {}, inner steps {}",
        fmt6(sol.beta),
        fmt6(sol.bound),
        fmt6(sol.z),
        sol.inner_steps
    ));
    run.set(
        "solve",
        json!({
            "approach": name,
            "p": num(params.p),
            "q": num(params.q),
            "d": params.d,
            "state": sol.state.0,
            "beta": num(sol.beta),
            "bound": num(sol.bound),
            "z": num(sol.z),
            "inner_steps": sol.inner_steps,
        }),
    );
    Ok(())
}
