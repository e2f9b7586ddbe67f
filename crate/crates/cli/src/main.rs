use std::io::{Read, Write};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use efx_core::fairness::{achieved_alpha, check_efx};
use efx_core::forge::{self, FamilyKind, FamilySpec, RandomSpec, Shape};
use efx_core::oracle::{self, OracleOptions, Target};
use efx_core::pipeline::{complete_efx, half_efx_orientation};
use efx_core::rational::{format_rational, parse_rational};
use efx_core::solvers::{solve_multicycle, solve_multistar, solve_multitree_d4_q2};
use efx_core::structure::{analyze_structure, Bipartition, Family};
use efx_core::{Allocation, Error, Instance, Rational};

const OPEN_CONJECTURE: &str = "no solver covers this structure; existence of EFX allocations on general multi-graphs is an open conjecture (try `decide --target allocation`)";

#[derive(Parser)]
#[command(name = "efx", version, about = "EFX allocations and orientations on multi-graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Complete EFX allocation.
    Solve {
        /// Instance JSON file, or `-` for stdin.
        #[arg(default_value = "-")]
        instance: String,
        #[arg(long, value_enum, default_value_t = SolveMethod::Auto)]
        method: SolveMethod,
        /// Embed stage snapshots and events (bipartite pipeline only).
        #[arg(long)]
        trace: bool,
    },
    /// EFX (or 1/2-EFX) orientation with the per-agent achieved alpha.
    Orient {
        #[arg(default_value = "-")]
        instance: String,
        #[arg(long, value_enum)]
        method: OrientMethod,
    },
    /// Check an allocation; exits 2 when the check fails.
    Verify {
        instance: String,
        allocation: String,
        #[arg(long, default_value = "1", value_parser = rational_arg)]
        alpha: Rational,
        /// Also require every item to sit with one of its endpoints.
        #[arg(long)]
        orientation: bool,
    },
    /// Exhaustive search.
    Decide {
        #[arg(default_value = "-")]
        instance: String,
        #[arg(long, value_enum)]
        target: TargetArg,
        #[arg(long)]
        count: bool,
        #[arg(long, env = "EFX_ORACLE_BUDGET", default_value_t = oracle::DEFAULT_BUDGET)]
        budget: u64,
        #[arg(long)]
        jobs: Option<usize>,
        /// Check every leaf with the plain verifier.
        #[arg(long)]
        no_prune: bool,
    },
    /// Emit an instance of a named family.
    Gen(GenArgs),
    /// Emit the Partition gadget for a multiset.
    ReducePartition {
        #[arg(long, value_delimiter = ',', required = true)]
        set: Vec<u64>,
        #[arg(long, value_parser = rational_arg)]
        eps: Option<Rational>,
        #[arg(long, value_parser = rational_arg)]
        delta: Option<Rational>,
    },
    /// Structure report.
    Analyze {
        #[arg(default_value = "-")]
        instance: String,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SolveMethod {
    Auto,
    Bipartite,
    Star,
    Tree4,
    Cycle,
}

#[derive(Clone, Copy, ValueEnum)]
enum OrientMethod {
    Star,
    Tree4,
    HalfEfx,
}

#[derive(Clone, Copy, ValueEnum)]
enum TargetArg {
    Orientation,
    Allocation,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    C4Counter,
    #[value(name = "p4-q3")]
    P4Q3,
    #[value(name = "p4-qn")]
    P4Qn,
    P3Block,
    P6Counter,
    NpGadget,
    RunningExample,
    Random,
}

#[derive(clap::Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    family: FamilyArg,
    #[arg(long, value_parser = rational_arg)]
    eps: Option<Rational>,
    #[arg(long, value_parser = rational_arg)]
    delta: Option<Rational>,
    /// Multiplicity for p4-qn.
    #[arg(long, default_value_t = 4)]
    q: usize,
    /// Multiset for np-gadget.
    #[arg(long, value_delimiter = ',')]
    set: Vec<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 6)]
    n: usize,
    #[arg(long, default_value_t = 10)]
    m: usize,
    #[arg(long, default_value_t = 2)]
    q_max: usize,
    #[arg(long, default_value = "bipartite")]
    shape: Shape,
    #[arg(long, default_value_t = 1000)]
    max_numer: u64,
    #[arg(long, default_value_t = 1)]
    max_denom: u64,
    #[arg(long)]
    symmetric: bool,
}

fn rational_arg(s: &str) -> Result<Rational, String> {
    parse_rational(s).map_err(|e| e.to_string())
}

/// A failure carrying its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::BudgetExceeded { .. } => 3,
            Error::Structure(_) | Error::NotBipartite | Error::TriangleUnsupported => 4,
            _ => 1,
        };
        Failure { code, message: e.to_string() }
    }
}

fn mismatch(message: impl Into<String>) -> Failure {
    Failure { code: 4, message: message.into() }
}

fn read_text(path: &str) -> Result<String, Failure> {
    let text = if path == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s).map(|_| s)
    } else {
        std::fs::read_to_string(path)
    };
    text.map_err(|e| Failure { code: 1, message: format!("{path}: {e}") })
}

fn load(path: &str) -> Result<Instance, Failure> {
    Ok(Instance::from_json_str(&read_text(path)?)?)
}

fn to_value(v: &impl Serialize) -> Value {
    serde_json::to_value(v).expect("serializable")
}

fn alphas(inst: &Instance, x: &Allocation) -> Vec<String> {
    (0..inst.n()).map(|a| format_rational(&achieved_alpha(inst, x, a))).collect()
}

fn auto_solve(inst: &Instance, trace: bool) -> Result<(Allocation, &'static str, Option<Value>), Failure> {
    if Bipartition::canonical(inst).is_some() {
        let (x, t) = complete_efx(inst)?;
        return Ok((x, "bipartite", trace.then(|| to_value(&t))));
    }
    let report = analyze_structure(inst);
    if !report.component_families.iter().all(|f| *f == Family::MultiCycle) {
        return Err(mismatch(OPEN_CONJECTURE));
    }
    match solve_multicycle(inst) {
        Ok(x) => Ok((x, "cycle", None)),
        Err(Error::TriangleUnsupported) => {
            eprintln!("odd 3-cycle: falling back to the exhaustive oracle");
            let budget = std::env::var("EFX_ORACLE_BUDGET")
                .ok()
                .and_then(|s| s.parse().ok())
                .unwrap_or(oracle::DEFAULT_BUDGET);
            let r = oracle::decide_efx_allocation(inst, budget)?;
            let x = r.witness.ok_or_else(|| mismatch("oracle found no EFX allocation"))?;
            Ok((x, "oracle", None))
        }
        Err(e) => Err(e.into()),
    }
}

fn run(cli: Cli) -> Result<(Value, u8), Failure> {
    match cli.command {
        Command::Solve { instance, method, trace } => {
            let inst = load(&instance)?;
            let (x, name, trace) = match method {
                SolveMethod::Auto => auto_solve(&inst, trace)?,
                SolveMethod::Bipartite => {
                    let (x, t) = complete_efx(&inst)?;
                    (x, "bipartite", trace.then(|| to_value(&t)))
                }
                SolveMethod::Star => (solve_multistar(&inst)?, "star", None),
                SolveMethod::Tree4 => (solve_multitree_d4_q2(&inst)?, "tree4", None),
                SolveMethod::Cycle => (solve_multicycle(&inst)?, "cycle", None),
            };
            let mut out = json!({ "method": name, "bundles": x.to_lists() });
            if let Some(t) = trace {
                out["trace"] = t;
            }
            Ok((out, 0))
        }
        Command::Orient { instance, method } => {
            let inst = load(&instance)?;
            let (x, name) = match method {
                OrientMethod::Star => (solve_multistar(&inst)?, "star"),
                OrientMethod::Tree4 => (solve_multitree_d4_q2(&inst)?, "tree4"),
                OrientMethod::HalfEfx => (half_efx_orientation(&inst)?, "half-efx"),
            };
            Ok((json!({ "method": name, "bundles": x.to_lists(), "alpha": alphas(&inst, &x) }), 0))
        }
        Command::Verify { instance, allocation, alpha, orientation } => {
            let inst = load(&instance)?;
            let x = Allocation::from_json_str(&inst, &read_text(&allocation)?)?;
            if !(alpha > Rational::from_integer(0.into()) && alpha <= Rational::from_integer(1.into())) {
                return Err(Failure { code: 1, message: "alpha must lie in (0, 1]".into() });
            }
            let verdict = check_efx(&inst, &x, &alpha);
            let oriented = x.is_orientation(&inst);
            let pass = verdict.pass && (!orientation || oriented);
            let mut out = to_value(&verdict);
            out["pass"] = json!(pass);
            out["complete"] = json!(x.is_complete());
            out["orientation"] = json!(oriented);
            Ok((out, if pass { 0 } else { 2 }))
        }
        Command::Decide { instance, target, count, budget, jobs, no_prune } => {
            let inst = load(&instance)?;
            let target = match target {
                TargetArg::Orientation => Target::Orientation,
                TargetArg::Allocation => Target::Allocation,
            };
            let opts = OracleOptions { budget, count, prune: !no_prune, jobs };
            let r = oracle::decide(&inst, target, &opts)?;
            let mut out = to_value(&r);
            out["witness"] = r.witness.as_ref().map_or(Value::Null, |w| json!({ "bundles": w.to_lists() }));
            Ok((out, 0))
        }
        Command::Gen(args) => {
            let family = match args.family {
                FamilyArg::C4Counter => FamilyKind::C4Counter,
                FamilyArg::P4Q3 => FamilyKind::P4Q3,
                FamilyArg::P4Qn => FamilyKind::P4Qn { q: args.q },
                FamilyArg::P3Block => FamilyKind::P3Block,
                FamilyArg::P6Counter => FamilyKind::P6Counter,
                FamilyArg::NpGadget => FamilyKind::NpGadget { set: args.set.clone() },
                FamilyArg::RunningExample => FamilyKind::RunningExample,
                FamilyArg::Random => FamilyKind::Random(RandomSpec {
                    n: args.n,
                    m: args.m,
                    q_max: args.q_max,
                    shape: args.shape,
                    max_numer: args.max_numer,
                    max_denom: args.max_denom,
                    symmetric: args.symmetric,
                }),
            };
            let spec = FamilySpec {
                family,
                eps: args.eps.unwrap_or_else(forge::default_eps),
                delta: args.delta.unwrap_or_else(forge::default_delta),
                seed: args.seed,
            };
            Ok((instance_value(&forge::generate(&spec)?), 0))
        }
        Command::ReducePartition { set, eps, delta } => {
            let inst = forge::reduce_partition(
                &set,
                &eps.unwrap_or_else(forge::default_eps),
                &delta.unwrap_or_else(forge::default_delta),
            )?;
            Ok((instance_value(&inst), 0))
        }
        Command::Analyze { instance } => Ok((to_value(&analyze_structure(&load(&instance)?)), 0)),
    }
}

fn instance_value(inst: &Instance) -> Value {
    serde_json::from_str(&inst.to_json()).expect("instance JSON")
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok((out, code)) => {
            let text = serde_json::to_string_pretty(&out).expect("JSON");
            let mut stdout = std::io::stdout().lock();
            // A closed pipe (e.g. `| head`) is not an error.
            let _ = writeln!(stdout, "{text}");
            ExitCode::from(code)
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
