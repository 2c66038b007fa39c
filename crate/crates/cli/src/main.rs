use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use amalgam::identities::{verify_chain, ChainVerdict, JonssonChain, OperationDoc, OperationTable};
use amalgam::obstruction::{derive_obstruction_with, verify_certificate, Certificate, DEFAULT_BUDGET};
use amalgam::oracle::{oracle_solve_capped, OracleVerdict, DEFAULT_ORACLE_CAP};
use amalgam::relation::{load_relations, ImplicationWitness};
use amalgam::solver::{establish_minimality, load_instance, solve_with, Instance, Outcome, Solution, Strategy, DEFAULT_GRAPH_BUDGET};
use amalgam::template::ColoredStructure;
use amalgam::uniformity::{check_uniformity, Uniformity};
use amalgam::{OrbitRelation, Template};

#[derive(Parser)]
#[command(name = "amalgam", version, about = "CSP solving and clone analysis over free amalgamation classes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Also print a human-readable summary to standard error.
    #[arg(long, global = true)]
    pretty: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Solve an instance with the local-consistency solver.
    Solve {
        #[command(flatten)]
        input: InstanceArgs,
        #[arg(long, value_enum, default_value_t = StrategyArg::Greedy)]
        strategy: StrategyArg,
        /// Consistency level; defaults to the template's bound.
        #[arg(long)]
        l: Option<usize>,
        /// Closure steps for the instance graph of the paper-faithful strategy.
        #[arg(long, default_value_t = DEFAULT_GRAPH_BUDGET)]
        budget: usize,
    },
    /// Print the (k, l)-minimal form of an instance.
    Minimality {
        #[command(flatten)]
        input: InstanceArgs,
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long)]
        l: Option<usize>,
    },
    /// Search the closure of a relation set for non-uniform implications.
    Analyze {
        #[command(flatten)]
        input: RelationArgs,
        #[arg(long, default_value_t = 10_000)]
        budget: usize,
    },
    /// Derive an obstruction certificate from a non-uniform relation set.
    Derive {
        #[command(flatten)]
        input: RelationArgs,
        #[arg(long, default_value_t = 10_000)]
        budget: usize,
        /// Candidate evaluations for the derivation search.
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        derivation_budget: usize,
    },
    /// Replay and check an obstruction certificate.
    Verify {
        #[arg(long)]
        template: PathBuf,
        #[arg(long)]
        certificate: PathBuf,
    },
    /// Check the chain identities for a list of finite operation tables.
    CheckChain {
        /// Files holding one operation document or a list of them, in chain order.
        #[arg(long, required = true, num_args = 1..)]
        ops: Vec<PathBuf>,
    },
    /// Solve an instance by exhaustive search.
    Oracle {
        #[command(flatten)]
        input: InstanceArgs,
        #[arg(long, default_value_t = DEFAULT_ORACLE_CAP)]
        oracle_cap: usize,
    },
    /// List the orbit labels of a given arity.
    Orbits {
        #[arg(long)]
        template: PathBuf,
        #[arg(long, default_value_t = 2)]
        k: usize,
    },
}

#[derive(Args)]
struct InstanceArgs {
    #[arg(long)]
    template: PathBuf,
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    relations: Vec<PathBuf>,
}

#[derive(Args)]
struct RelationArgs {
    #[arg(long)]
    template: PathBuf,
    #[arg(long, required = true)]
    relations: Vec<PathBuf>,
}

#[derive(Copy, Clone, ValueEnum)]
enum StrategyArg {
    Greedy,
    PaperFaithful,
}

/// A failure to read or validate input; exit code 2.
struct InputError(String);

impl<E: std::fmt::Display> From<E> for InputError {
    fn from(e: E) -> Self {
        InputError(e.to_string())
    }
}

struct Report {
    code: u8,
    verdict: &'static str,
    artifacts: Value,
    complete: bool,
    summary: String,
}

fn read(path: &Path) -> Result<String, InputError> {
    std::fs::read_to_string(path).map_err(|e| InputError(format!("{}: {e}", path.display())))
}

fn template(path: &Path) -> Result<Template, InputError> {
    Ok(Template::load(&read(path)?)?)
}

fn relations(t: &Template, paths: &[PathBuf]) -> Result<Vec<(String, OrbitRelation)>, InputError> {
    let mut out = Vec::new();
    for p in paths {
        out.extend(load_relations(t, &read(p)?)?);
    }
    Ok(out)
}

fn instance(input: &InstanceArgs) -> Result<(Template, Vec<(String, OrbitRelation)>, Instance), InputError> {
    let t = template(&input.template)?;
    let rels = relations(&t, &input.relations)?;
    let i = load_instance(&t, &read(&input.instance)?, &rels)?;
    Ok((t, rels, i))
}

fn structure_json(t: &Template, s: &ColoredStructure) -> Value {
    let mut edges = Vec::new();
    for a in 0..s.size() {
        for b in a + 1..s.size() {
            edges.push(json!([a, b, t.name(s.get(a, b))]));
        }
    }
    json!({ "size": s.size(), "edges": edges })
}

fn solution_json(t: &Template, i: &Instance, s: &Solution) -> Value {
    let quotient: serde_json::Map<String, Value> =
        i.variables().iter().zip(&s.quotient).map(|(v, &c)| (v.clone(), json!(c))).collect();
    json!({ "quotient": quotient, "structure": structure_json(t, &s.structure) })
}

fn witness_json(t: &Template, w: &ImplicationWitness, name: &str) -> Value {
    json!({
        "from": w.from.names(t),
        "to": w.to.names(t),
        "relation": w.relation.to_doc(t, name),
    })
}

fn run(cli: &Cli) -> Result<Report, InputError> {
    Ok(match &cli.command {
        Command::Solve { input, strategy, l, budget } => {
            let (t, _, i) = instance(input)?;
            let strategy = match strategy {
                StrategyArg::Greedy => Strategy::Greedy,
                StrategyArg::PaperFaithful => Strategy::PaperFaithful,
            };
            match solve_with(&t, &i, strategy, l.unwrap_or(t.bound()), *budget)? {
                Outcome::Sat(s) => Report {
                    code: 0,
                    verdict: "Sat",
                    summary: format!("satisfiable with {} classes", s.structure.size()),
                    artifacts: json!({ "solution": solution_json(&t, &i, &s) }),
                    complete: true,
                },
                Outcome::Unsat => Report {
                    code: 1,
                    verdict: "Unsat",
                    summary: "unsatisfiable".into(),
                    artifacts: json!({}),
                    complete: true,
                },
                Outcome::Incomplete(reason) => Report {
                    code: 3,
                    verdict: "Incomplete",
                    summary: format!("incomplete: {reason}"),
                    artifacts: json!({ "reason": reason }),
                    complete: false,
                },
            }
        }
        Command::Minimality { input, k, l } => {
            let (t, rels, i) = instance(input)?;
            let m = establish_minimality(&t, &i, *k, l.unwrap_or(t.bound()))?;
            let constraints: Vec<Value> = m
                .constraints()
                .iter()
                .map(|c| {
                    let name = rels.iter().find(|(_, r)| *r == c.relation).map(|(n, _)| n.as_str()).unwrap_or("");
                    json!({
                        "scope": c.scope.iter().map(|&v| &i.variables()[v]).collect::<Vec<_>>(),
                        "relation": c.relation.to_doc(&t, name),
                    })
                })
                .collect();
            let pairs: Vec<Value> = m
                .pair_projections()
                .into_iter()
                .map(|((a, b), s)| json!([i.variables()[a], i.variables()[b], s.names(&t)]))
                .collect();
            let trivial = m.is_trivial();
            Report {
                code: if trivial { 1 } else { 0 },
                verdict: if trivial { "Trivial" } else { "NonTrivial" },
                summary: format!("{} constraints, size {}, trivial: {trivial}", m.constraints().len(), m.size()),
                artifacts: json!({ "constraints": constraints, "pairProjections": pairs }),
                complete: true,
            }
        }
        Command::Analyze { input, budget } => {
            let t = template(&input.template)?;
            let gens: Vec<OrbitRelation> = relations(&t, &input.relations)?.into_iter().map(|(_, r)| r).collect();
            let rep = check_uniformity(&t, &gens, *budget)?;
            let base = json!({ "closureSize": rep.closure.len(), "steps": rep.steps });
            match rep.verdict {
                Uniformity::Uniform { closure_size } => Report {
                    code: 0,
                    verdict: "Uniform",
                    summary: format!("uniform, closure of {closure_size} relations"),
                    artifacts: base,
                    complete: true,
                },
                Uniformity::NonUniform { first, second, members } => Report {
                    code: 1,
                    verdict: "NonUniform",
                    summary: format!(
                        "non-uniform: {:?} -> {:?} and back",
                        first.from.names(&t),
                        first.to.names(&t)
                    ),
                    artifacts: json!({
                        "closureSize": rep.closure.len(),
                        "steps": rep.steps,
                        "members": [members.0, members.1],
                        "witness": [witness_json(&t, &first, "first"), witness_json(&t, &second, "second")],
                    }),
                    complete: true,
                },
                Uniformity::BudgetExhausted { partial } => Report {
                    code: 3,
                    verdict: "BudgetExhausted",
                    summary: format!("budget exhausted after {partial} relations"),
                    artifacts: base,
                    complete: false,
                },
            }
        }
        Command::Derive { input, budget, derivation_budget } => {
            let t = template(&input.template)?;
            let gens: Vec<OrbitRelation> = relations(&t, &input.relations)?.into_iter().map(|(_, r)| r).collect();
            let rep = check_uniformity(&t, &gens, *budget)?;
            match rep.verdict {
                Uniformity::NonUniform { first, second, .. } => {
                    match derive_obstruction_with(&t, &first, &second, *derivation_budget) {
                        Ok(c) => Report {
                            code: 0,
                            verdict: "Derived",
                            summary: format!("certificate of case {:?} with {} steps", c.case_tag, c.derivation.len()),
                            artifacts: json!({ "certificate": c }),
                            complete: true,
                        },
                        Err(e) => Report {
                            code: 3,
                            verdict: "BudgetExhausted",
                            summary: e.to_string(),
                            artifacts: json!({ "reason": e.to_string() }),
                            complete: false,
                        },
                    }
                }
                Uniformity::Uniform { .. } => Report {
                    code: 1,
                    verdict: "NoObstruction",
                    summary: "the closure is uniform; nothing to derive".into(),
                    artifacts: json!({}),
                    complete: true,
                },
                Uniformity::BudgetExhausted { partial } => Report {
                    code: 3,
                    verdict: "BudgetExhausted",
                    summary: format!("budget exhausted after {partial} relations"),
                    artifacts: json!({}),
                    complete: false,
                },
            }
        }
        Command::Verify { template: tp, certificate } => {
            let t = template(tp)?;
            let c: Certificate = serde_json::from_str(&read(certificate)?)?;
            let (ok, reason) = match verify_certificate(&t, &[], &c) {
                Ok(true) => (true, None),
                Ok(false) => (false, Some("the case condition does not hold".to_string())),
                Err(e) => (false, Some(e.to_string())),
            };
            Report {
                code: if ok { 0 } else { 1 },
                verdict: if ok { "Valid" } else { "Invalid" },
                summary: reason.clone().unwrap_or_else(|| format!("valid {:?} certificate", c.case_tag)),
                artifacts: json!({ "caseTag": c.case_tag, "reason": reason }),
                complete: true,
            }
        }
        Command::CheckChain { ops } => {
            let mut tables = Vec::new();
            for p in ops {
                let value: Value = serde_json::from_str(&read(p)?)?;
                let docs: Vec<OperationDoc> = if value.is_array() {
                    serde_json::from_value(value)?
                } else {
                    vec![serde_json::from_value(value)?]
                };
                for d in &docs {
                    tables.push(OperationTable::from_doc(d)?);
                }
            }
            let chain = JonssonChain::new(tables)?;
            let v = verify_chain(&chain);
            let summary = match &v {
                ChainVerdict::Valid => format!("valid chain of length {}", chain.ops().len()),
                ChainVerdict::Invalid { equation, index, x, y, .. } => {
                    format!("identity ({equation}) fails for operation {index} at x = {x}, y = {y}")
                }
            };
            let valid = v == ChainVerdict::Valid;
            Report {
                code: if valid { 0 } else { 1 },
                verdict: if valid { "Valid" } else { "Invalid" },
                summary,
                artifacts: json!({ "result": v }),
                complete: true,
            }
        }
        Command::Oracle { input, oracle_cap } => {
            let (t, _, i) = instance(input)?;
            match oracle_solve_capped(&t, &i, *oracle_cap)? {
                OracleVerdict::Sat(s) => Report {
                    code: 0,
                    verdict: "Sat",
                    summary: format!("satisfiable with {} classes", s.structure.size()),
                    artifacts: json!({ "solution": solution_json(&t, &i, &s) }),
                    complete: true,
                },
                OracleVerdict::Unsat => Report {
                    code: 1,
                    verdict: "Unsat",
                    summary: "unsatisfiable".into(),
                    artifacts: json!({}),
                    complete: true,
                },
            }
        }
        Command::Orbits { template: tp, k } => {
            let t = template(tp)?;
            let r = t.enumerate_orbits(*k)?;
            let shapes: Vec<String> = r.iter().map(|l| t.shape(l)).collect();
            Report {
                code: 0,
                verdict: "OK",
                summary: format!("{} orbits of arity {k}", r.len()),
                artifacts: json!({ "count": r.len(), "shapes": shapes, "relation": r.to_doc(&t, "all") }),
                complete: true,
            }
        }
    })
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Solve { .. } => "solve",
        Command::Minimality { .. } => "minimality",
        Command::Analyze { .. } => "analyze",
        Command::Derive { .. } => "derive",
        Command::Verify { .. } => "verify",
        Command::CheckChain { .. } => "check-chain",
        Command::Oracle { .. } => "oracle",
        Command::Orbits { .. } => "orbits",
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let start = Instant::now();
    match run(&cli) {
        Ok(r) => {
            let out = json!({
                "command": command_name(&cli.command),
                "verdict": r.verdict,
                "artifacts": r.artifacts,
                "complete": r.complete,
                "timingMs": start.elapsed().as_millis() as u64,
            });
            // A closed pipe is not an error worth reporting.
            let _ = writeln!(std::io::stdout(), "{out}");
            if cli.pretty {
                eprintln!("{}: {} ({})", command_name(&cli.command), r.verdict, r.summary);
            }
            ExitCode::from(r.code)
        }
        Err(InputError(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
