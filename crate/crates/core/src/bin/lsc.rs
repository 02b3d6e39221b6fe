use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write as _};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use lsc::calculus::{run_calculus, Strategy};
use lsc::distillery::{verify_trace, DEFAULT_BUDGET};
use lsc::equivalence::{struct_equiv, EqTheory};
use lsc::harness::{differential_run, gen_closed_term, run_named_suite, suite_seed, GenConfig, SUITE_NAMES};
use lsc::machines::{run_machine, MachineId};
use lsc::syntax::{parse, render, PureTerm, Term};

/// Strategies of the linear substitution calculus, their abstract machines,
/// and the step-by-step verifier relating them.
#[derive(Parser)]
#[command(name = "lsc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Jsonl,
    Text,
}

#[derive(Subcommand)]
enum Command {
    /// Run a machine on a closed pure term. Fuel counts machine transitions of every label.
    Run {
        #[arg(long)]
        machine: MachineId,
        #[arg(long)]
        term: String,
        #[arg(long, default_value_t = 1000)]
        fuel: usize,
        #[arg(long, value_enum, default_value_t = Format::Jsonl)]
        format: Format,
        /// Write the trace here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Reduce a term in the calculus. Steps counts principal (m and e) steps.
    Calc {
        #[arg(long)]
        strategy: Strategy,
        #[arg(long)]
        term: String,
        #[arg(long, default_value_t = 100)]
        steps: usize,
    },
    /// Search for a structural-equivalence path between two terms.
    Equiv {
        #[arg(long)]
        theory: EqTheory,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: usize,
        left: String,
        right: String,
    },
    /// Run a machine and check every transition against the calculus.
    Verify {
        #[arg(long)]
        machine: MachineId,
        #[arg(long)]
        term: String,
        #[arg(long, default_value_t = 1000)]
        fuel: usize,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: usize,
    },
    /// Run every machine of a strategy and compare them with the calculus.
    Diff {
        /// The strategy whose machines are compared.
        #[arg(long)]
        group: Strategy,
        #[arg(long)]
        term: String,
        #[arg(long, default_value_t = 1000)]
        fuel: usize,
    },
    /// Print random closed terms, one per line, from consecutive seeds.
    Gen {
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        max_size: usize,
        #[arg(long, default_value_t = 1)]
        count: usize,
    },
    /// Run acceptance suites: traces, determinism, corpus, bisimulation, reflection or acceptance.
    /// The seed comes from LSC_SEED when set.
    Suite {
        #[arg(long)]
        name: String,
        /// Write the suite results here as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum Failure {
    Usage(String),
    Run(String),
    /// Standard output was closed by the reader.
    Closed,
}

fn pure(text: &str) -> Result<PureTerm, Failure> {
    PureTerm::parse(text).map_err(|e| Failure::Usage(format!("{text}: {e}")))
}

fn term(text: &str) -> Result<Term, Failure> {
    parse(text).map_err(|e| Failure::Usage(format!("{text}: {e}")))
}

fn json<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("reports serialize")
}

fn emit(text: &str) -> Result<(), Failure> {
    let mut out = io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|()| out.flush()) {
        Ok(()) => Ok(()),
        Err(e) if e.kind() == io::ErrorKind::BrokenPipe => Err(Failure::Closed),
        Err(e) => Err(Failure::Run(format!("standard output: {e}"))),
    }
}

/// Prints a report; the verdict decides the exit status even when the
/// reader stops early.
fn check(ok: bool, out: String) -> Result<bool, Failure> {
    match emit(&format!("{out}\n")) {
        Ok(()) | Err(Failure::Closed) => Ok(ok),
        Err(e) => Err(e),
    }
}

fn execute(cmd: Command) -> Result<bool, Failure> {
    match cmd {
        Command::Run {
            machine,
            term,
            fuel,
            format,
            out,
        } => {
            let t = pure(&term)?;
            let tr = run_machine(machine, &t, fuel).map_err(|e| Failure::Usage(e.to_string()))?;
            let text = match format {
                Format::Jsonl => tr.to_jsonl(),
                Format::Text => tr.to_text(),
            };
            match out {
                Some(path) => fs::write(&path, text).map_err(|e| Failure::Run(format!("{}: {e}", path.display())))?,
                None => emit(&text)?,
            }
            Ok(true)
        }
        Command::Calc {
            strategy,
            term: text,
            steps,
        } => {
            let t = term(&text)?;
            let mut out = format!("0 {}\n", render(&t));
            for (i, (label, next)) in run_calculus(&t, strategy, steps).iter().enumerate() {
                let _ = writeln!(out, "{} {label} {}", i + 1, render(next));
            }
            emit(&out)?;
            Ok(true)
        }
        Command::Equiv {
            theory,
            budget,
            left,
            right,
        } => {
            let verdict = struct_equiv(&term(&left)?, &term(&right)?, theory, budget);
            check(verdict.is_equivalent(), json(&verdict))
        }
        Command::Verify {
            machine,
            term,
            fuel,
            budget,
        } => {
            let t = pure(&term)?;
            let tr = run_machine(machine, &t, fuel).map_err(|e| Failure::Usage(e.to_string()))?;
            let report = verify_trace(&tr, budget);
            check(report.all_pass() && report.counts_agree(), report.to_json())
        }
        Command::Diff { group, term, fuel } => {
            let report = differential_run(&pure(&term)?, group, fuel).map_err(|e| Failure::Usage(e.to_string()))?;
            check(report.agrees(), json(&report))
        }
        Command::Gen { seed, max_size, count } => {
            if max_size < 2 {
                return Err(Failure::Usage("--max-size must be at least 2".into()));
            }
            for i in 0..count as u64 {
                emit(&format!(
                    "{}\n",
                    gen_closed_term(&GenConfig::new(seed.wrapping_add(i), max_size))
                ))?;
            }
            Ok(true)
        }
        Command::Suite { name, out } => {
            let seed = suite_seed();
            let Some(mut criteria) = run_named_suite(&name, seed) else {
                return Err(Failure::Usage(format!(
                    "unknown suite `{name}`; one of {}",
                    SUITE_NAMES.join(", ")
                )));
            };
            if let Some(path) = &out {
                for part in criteria.iter_mut().flat_map(|c| c.parts.iter_mut()) {
                    part.artifacts.push(path.display().to_string());
                }
                fs::write(path, json(&criteria)).map_err(|e| Failure::Run(format!("{}: {e}", path.display())))?;
            }
            let mut text = format!("seed {seed}\n");
            for c in &criteria {
                let _ = writeln!(text, "{}", c.line());
                for part in c.parts.iter().filter(|p| !p.passed()) {
                    for note in &part.notes {
                        let _ = writeln!(text, "    {note}");
                    }
                }
            }
            check(criteria.iter().all(|c| c.passed()), text.trim_end().to_string())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(true) | Err(Failure::Closed) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Run(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
