use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use aldiag::action::RecordedHistory;
use aldiag::diagnosis::Selection;
use aldiag::logic::{enumerate_answer_sets, parse_program, Engine, GroundProgram, Literal};
use aldiag::scenario::{run, RunOptions, RunReport, Scenario};
use aldiag::transform::{extended_eval, partial_eval, recompose, trim, TransformReport};
use aldiag::translate::{Compiler, DiagnosticParams, Module};
use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "aldiag", version, about = "Diagnose dynamic systems described by causal laws")]
struct Cli {
    /// Answer-set engine.
    #[arg(long, global = true, default_value = "search")]
    engine: Engine,
    /// Seed for the seeded selection policy.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Ground over time points 0..=N instead of the scenario's own extent.
    #[arg(long, global = true)]
    horizon: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ModuleArgs {
    /// Diagnostic module.
    #[arg(long)]
    module: Option<ModuleName>,
    /// Window for module d2.
    #[arg(long)]
    window: Option<usize>,
    /// Reject explanations with at least K occurrences at the last step.
    #[arg(long)]
    max_actions: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModuleName {
    D0,
    D1,
    D2,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProgramKind {
    /// Laws only.
    Alpha,
    /// The domain-independent rules.
    Pi,
    /// Laws, rules, history and later observations.
    Conf,
    /// The configuration with a diagnostic module.
    Diagnostic,
    /// One rule per law.
    Direct,
}

#[derive(Clone, Copy, ValueEnum)]
enum TransformOp {
    Eval,
    Extended,
    Trim,
    Split,
}

#[derive(Subcommand)]
enum Command {
    /// Check scenarios for a symptom and diagnose it against their world.
    #[command(alias = "diagnose")]
    Run {
        #[arg(required = true)]
        scenarios: Vec<PathBuf>,
        #[command(flatten)]
        module: ModuleArgs,
        /// first, last, minimal or seeded:N.
        #[arg(long)]
        selection: Option<Selection>,
        /// List every candidate of the initial configuration.
        #[arg(long)]
        all_candidates: bool,
        /// Print the full trace, not just the summary.
        #[arg(long)]
        trace: bool,
    },
    /// Print the answer sets of a program, one per line.
    Solve {
        /// Program file; standard input when absent or `-`.
        program: Option<PathBuf>,
    },
    /// Print the ground program for a scenario.
    Translate {
        scenario: PathBuf,
        #[arg(long, value_enum, default_value = "diagnostic")]
        program: ProgramKind,
        #[command(flatten)]
        module: ModuleArgs,
        /// Keep instances that can never fire.
        #[arg(long)]
        raw: bool,
        /// Leave out the awareness rules.
        #[arg(long)]
        no_awareness: bool,
    },
    /// Print the models of a scenario's recorded history.
    Models {
        scenario: PathBuf,
        /// Include the later observations.
        #[arg(long)]
        all_records: bool,
    },
    /// Apply a transformation and compare answer sets.
    Transform {
        program: PathBuf,
        #[arg(long, value_enum)]
        op: TransformOp,
        /// Literals to evaluate or trim, or the splitting set.
        #[arg(long = "literal", num_args = 1..)]
        literals: Vec<String>,
    },
}

fn module_of(args: &ModuleArgs, base: Module) -> Result<Module> {
    let module = match args.module {
        None => base,
        Some(ModuleName::D0) => Module::D0,
        Some(ModuleName::D1) => Module::D1,
        Some(ModuleName::D2) => match base {
            Module::D2 { window } => Module::D2 { window },
            _ => Module::D2 { window: 1 },
        },
    };
    match (module, args.window) {
        (Module::D2 { .. }, Some(window)) => Ok(Module::D2 { window }),
        (_, Some(_)) => bail!("--window applies to module d2 only"),
        (m, None) => Ok(m),
    }
}

fn read_scenario(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Scenario::parse(&text).with_context(|| format!("{}", path.display()))
}

fn literal(s: &str) -> Result<Literal> {
    let p = parse_program(&format!("{s}.")).with_context(|| format!("literal {s:?}"))?;
    match p.rules.first().and_then(|r| r.head_literal()) {
        Some(l) if p.rules.len() == 1 => Ok(l.clone()),
        _ => bail!("{s:?} is not a ground literal"),
    }
}

fn print_sets(p: &GroundProgram, engine: Engine) -> Result<()> {
    let sets = enumerate_answer_sets(p, engine)?;
    if sets.is_empty() {
        println!("UNSAT");
    }
    for s in sets {
        println!("{s}");
    }
    Ok(())
}

fn name_of(path: &Path) -> String {
    path.file_stem().map_or("scenario".into(), |s| s.to_string_lossy().into_owned())
}

fn run_one(cli: &Cli, path: &Path, module: &ModuleArgs, selection: &Option<Selection>, all: bool) -> Result<RunReport> {
    let mut scenario = read_scenario(path)?;
    let config = &mut scenario.config;
    config.module = module_of(module, config.module)?;
    if module.max_actions.is_some() {
        config.max_actions = module.max_actions;
    }
    if let Some(s) = selection {
        config.selection = s.clone();
    }
    if let (Some(seed), Selection::Seeded(_)) = (cli.seed, &config.selection) {
        config.selection = Selection::Seeded(seed);
    }
    let opts = RunOptions {
        engine: cli.engine,
        all_candidates: all,
    };
    Ok(run(&name_of(path), &scenario, &opts)?)
}

fn execute(cli: &Cli) -> Result<u8> {
    match &cli.command {
        Command::Run {
            scenarios,
            module,
            selection,
            all_candidates,
            trace,
        } => {
            let reports: Vec<Result<RunReport>> = std::thread::scope(|s| {
                let handles: Vec<_> = scenarios
                    .iter()
                    .map(|p| s.spawn(move || run_one(cli, p, module, selection, *all_candidates)))
                    .collect();
                handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
            });
            let mut code = 0;
            for report in reports {
                match report {
                    Ok(r) => {
                        for line in &r.trace {
                            let keep = *trace
                                || line.starts_with("summary")
                                || line.starts_with("candidate")
                                || line.starts_with("scenario");
                            if keep {
                                println!("{line}");
                            }
                        }
                        code = code.max(r.status.exit_code() as u8);
                    }
                    Err(e) => {
                        eprintln!("error: {}", describe(&e));
                        code = code.max(1);
                    }
                }
            }
            Ok(code)
        }
        Command::Solve { program } => {
            let text = match program {
                Some(p) if p.as_os_str() != "-" => {
                    std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?
                }
                _ => {
                    let mut s = String::new();
                    std::io::stdin().read_to_string(&mut s)?;
                    s
                }
            };
            print_sets(&parse_program(&text)?, cli.engine)?;
            Ok(0)
        }
        Command::Translate {
            scenario,
            program,
            module,
            raw,
            no_awareness,
        } => {
            let sc = read_scenario(scenario)?;
            let c = sc.configuration()?;
            let sd = sc.system.with_repair_actions();
            let horizon = cli.horizon.unwrap_or(c.current_time());
            let mut compiler = Compiler::new(&sd, horizon);
            if *raw {
                compiler = compiler.raw();
            }
            let awareness = !no_awareness && sc.config.awareness;
            let p = match program {
                ProgramKind::Alpha => compiler.alpha()?,
                ProgramKind::Pi => compiler.pi()?,
                ProgramKind::Conf => compiler.conf(&c.history.records, &c.observations, awareness)?,
                ProgramKind::Direct => compiler.direct_program(&c.records(), awareness)?,
                ProgramKind::Diagnostic => {
                    let params = DiagnosticParams {
                        module: module_of(module, sc.config.module)?,
                        current_time: c.history_end(),
                        max_actions: module.max_actions.or(sc.config.max_actions),
                    };
                    compiler.diagnostic(&c.history.records, &c.observations, &params, awareness)?
                }
            };
            print!("{p}");
            Ok(0)
        }
        Command::Models { scenario, all_records } => {
            let sc = read_scenario(scenario)?;
            let c = sc.configuration()?;
            let history = if *all_records {
                RecordedHistory::new(c.current_time(), c.records())?
            } else {
                c.history.clone()
            };
            let horizon = cli.horizon.unwrap_or(history.horizon).max(history.horizon);
            let models = sc.system.models(horizon, &history.records)?;
            if models.is_empty() {
                println!("no models");
            }
            for m in models {
                println!("{m}");
            }
            Ok(0)
        }
        Command::Transform { program, op, literals } => {
            let text = std::fs::read_to_string(program).with_context(|| format!("reading {}", program.display()))?;
            let p = parse_program(&text)?;
            let qs = literals.iter().map(|s| literal(s)).collect::<Result<Vec<_>>>()?;
            match op {
                TransformOp::Split => {
                    let u = qs.into_iter().collect();
                    let split = recompose(&p, &u, cli.engine)?;
                    let direct = enumerate_answer_sets(&p, cli.engine)?;
                    println!("answer sets: {}", direct.len());
                    println!("recomposed: {}", split.len());
                    println!("equivalent: {}", split == direct);
                }
                _ => {
                    let out = match op {
                        TransformOp::Eval => match qs.as_slice() {
                            [q] => partial_eval(&p, q)?,
                            _ => bail!("--op eval takes exactly one literal"),
                        },
                        TransformOp::Extended => extended_eval(&p, &qs)?,
                        _ => trim(&p, &qs)?,
                    };
                    print!("{}", TransformReport::new(p, out, qs, cli.engine)?);
                }
            }
            Ok(0)
        }
    }
}

// library errors often repeat their source in their own message
fn describe(e: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in e.chain() {
        let s = cause.to_string();
        if out.ends_with(&s) {
            continue;
        }
        if !out.is_empty() {
            out.push_str(": ");
        }
        out.push_str(&s);
    }
    out
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::from(1)
        }
    }
}
