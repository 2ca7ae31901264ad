use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use uconj_cli::report::{analyze, instance_to_json, parse_instance};
use uconj_cli::verify::{outcomes_to_json, run_suite};
use uconj_cli::{generate, parse_field_flag, read_json, write_output, DEFAULT_BUDGET};
use uconj_core::coefficients::FieldPair;
use uconj_core::explorer::{conjugate_census, enumerate_unitary, lattice_stabilizer_layers};
use uconj_core::hermitian::HermitianSpace;
use uconj_core::{Error, Result};

#[derive(Parser)]
#[command(
    name = "uconj",
    version,
    about = "Exact conjugacy analysis for unitary groups over quadratic field pairs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analyze an instance document: module profile, reduction, flags,
    /// centralizer dimensions, and consistency checks.
    Analyze {
        /// Path to the instance JSON.
        instance: String,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<String>,
    },
    /// Generate an instance realizing a divisor specification.
    Generate {
        /// Path to the divisor-spec JSON.
        spec: String,
        /// Override the seed recorded in the spec.
        #[arg(long)]
        seed: Option<u64>,
        /// Lift the generated finite instance to the local pair at this
        /// precision.
        #[arg(long)]
        precision: Option<i64>,
        #[arg(long)]
        out: Option<String>,
    },
    /// Run a named verification suite (quick | extended).
    Verify {
        #[arg(long, default_value = "quick")]
        suite: String,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: u64,
        /// Repository root holding anchors.json (found by search if absent).
        #[arg(long)]
        root: Option<PathBuf>,
    },
    /// Conjugate census of an instance over lattice-stabilizer levels.
    Explore {
        /// Path to a local-pair instance JSON.
        instance: String,
        /// Census truncation depth (matrices compared mod t^TRUNC).
        #[arg(long, default_value_t = 2)]
        trunc: i64,
        /// Stabilizer levels to census, e.g. 2,3,4.
        #[arg(long, default_value = "2,3")]
        levels: String,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: u64,
        #[arg(long)]
        out: Option<String>,
    },
    /// Exhaustive enumeration of a unitary group or lattice stabilizer.
    Oracle {
        /// Field descriptor: finite:q or local:q:precision.
        #[arg(long)]
        field: String,
        /// Space dimension (split form).
        #[arg(long)]
        dim: usize,
        /// Enumeration level for the local pair.
        #[arg(long, default_value_t = 1)]
        level: i64,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: u64,
        /// Write the element list here as newline-delimited JSON.
        #[arg(long)]
        out: Option<String>,
    },
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Analyze { instance, out } => {
            let doc = read_json(&instance)?;
            let inst = parse_instance(&doc)?;
            match analyze(&inst) {
                Ok(report) => {
                    let pass = report["consistent"].as_bool().unwrap_or(false);
                    write_output(out.as_deref(), &report)?;
                    if !pass {
                        return Err(Error::InternalInvariantViolation(
                            "report contains failed consistency flags".into(),
                        ));
                    }
                    Ok(())
                }
                Err(e @ Error::InternalInvariantViolation(_))
                | Err(e @ Error::SplittingSearchFailed(_)) => {
                    // emit a reproducer for the violated invariant
                    eprintln!(
                        "invariant violation; reproducer instance follows:\n{}",
                        serde_json::to_string_pretty(&instance_to_json(&inst)).unwrap()
                    );
                    Err(e)
                }
                Err(e) => Err(e),
            }
        }
        Command::Generate {
            spec,
            seed,
            precision,
            out,
        } => {
            let mut doc = read_json(&spec)?;
            if let Some(seed) = seed {
                doc["seed"] = json!(seed);
            }
            let (mut instance, profile) = generate::generate(&doc)?;
            if let Some(n) = precision {
                instance = generate::lift_to_local(&instance, n)?;
            }
            write_output(out.as_deref(), &instance)?;
            eprintln!("profile: {profile}");
            Ok(())
        }
        Command::Verify {
            suite,
            budget,
            root,
        } => {
            let outcomes = run_suite(&suite, budget, root.as_deref())?;
            let summary = outcomes_to_json(&outcomes);
            println!("{}", serde_json::to_string_pretty(&summary).unwrap());
            if outcomes.iter().all(|o| o.pass) {
                Ok(())
            } else {
                Err(Error::InternalInvariantViolation(format!(
                    "suite {suite} has failing checks"
                )))
            }
        }
        Command::Explore {
            instance,
            trunc,
            levels,
            budget,
            out,
        } => {
            let doc = read_json(&instance)?;
            let inst = parse_instance(&doc)?;
            let levels: Vec<i64> = levels
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse()
                        .map_err(|_| Error::InvalidInput(format!("bad level {s:?}")))
                })
                .collect::<Result<_>>()?;
            let census = conjugate_census(
                &inst.field,
                &inst.space,
                &inst.gamma.mat,
                trunc,
                &levels,
                budget,
            )?;
            write_output(out.as_deref(), &census.to_json())?;
            Ok(())
        }
        Command::Oracle {
            field,
            dim,
            level,
            budget,
            out,
        } => {
            let desc = parse_field_flag(&field)?;
            let k = FieldPair::from_descriptor(&desc)?;
            let space = HermitianSpace::split(&k, dim);
            let enumeration = match k.kind {
                uconj_core::coefficients::PairKind::Finite => {
                    enumerate_unitary(&k, &space, budget)?
                }
                uconj_core::coefficients::PairKind::TruncatedLocal => {
                    lattice_stabilizer_layers(&k, &space, level, budget)?
                }
            };
            println!(
                "{}",
                json!({
                    "schema": "uconj-oracle/1",
                    "field": k.descriptor(),
                    "dim": dim,
                    "level": enumeration.level,
                    "cardinality": enumeration.cardinality(),
                })
            );
            if let Some(path) = out {
                let mut lines = String::new();
                for g in &enumeration.elements {
                    lines.push_str(&g.to_json(&k).to_string());
                    lines.push('\n');
                }
                std::fs::write(&path, lines)
                    .map_err(|e| Error::InvalidInput(format!("cannot write {path}: {e}")))?;
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
