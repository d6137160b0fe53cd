use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mechlab::commands::{self, CheckName, CliError, RuleName};
use mechlab::config::{parse_rational, CliOverrides, Config, ConfigError};
use mechlab::suite::{self, Suite};
use mechlab_core::domain::{default_epsilon, Params};

/// Black-box mechanism-design testbed: adversarial instances, transformations and incentive verifiers.
#[derive(Debug, Parser)]
#[command(name = "mechlab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment configuration (TOML). For `reproduce`, a fixture ladder file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    samples: Option<usize>,
    #[arg(long, global = true)]
    budget: Option<usize>,
    #[arg(long, global = true, value_parser = ["range-only", "downward-closed"])]
    mode: Option<String>,
    /// JSON-lines output; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// CSV output of attack rows.
    #[arg(long, global = true)]
    csv: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check MIDR and the matching condition for a transformation applied to a rule.
    Verify {
        #[arg(long, value_enum, default_value = "adversarial")]
        rule: RuleName,
        #[arg(long, value_enum, default_value = "both")]
        check: CheckName,
        /// Transformation id; overrides the configuration.
        #[arg(long)]
        transformation: Option<String>,
        #[arg(long)]
        q: Option<usize>,
    },
    /// Estimate the expected welfare of a rule and of the transformed mechanism.
    Welfare {
        #[arg(long, value_enum, default_value = "adversarial")]
        rule: RuleName,
        #[arg(long, value_parser = ["exact", "monte-carlo"])]
        method: Option<String>,
        #[arg(long)]
        transformation: Option<String>,
        #[arg(long)]
        q: Option<usize>,
        /// Write the mechanism's billed oracle queries as JSON lines.
        #[arg(long)]
        query_log: Option<PathBuf>,
    },
    /// Run the attack experiment over sampled adversarial instances.
    Attack {
        #[arg(long)]
        transformation: Option<String>,
        #[arg(long)]
        q: Option<usize>,
        #[arg(long)]
        rows: Option<usize>,
    },
    /// Run the full fixture-ladder suite.
    Reproduce,
    /// Derive the instance parameters for `n` and `epsilon`.
    Params {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        epsilon: Option<String>,
    },
}

fn load(cli: &Cli, overrides: &CliOverrides, transformation: &Option<String>, q: Option<usize>) -> Result<Config, CliError> {
    let path = cli.config.as_deref().ok_or(ConfigError::Value { key: "config", message: "this command needs --config <file>".into() })?;
    let mut config = Config::load(path, overrides)?;
    if let Some(t) = transformation {
        config.experiment.transformation = t.clone();
    }
    if let Some(q) = q {
        config.experiment.q = q;
    }
    config.transformation()?;
    Ok(config)
}

fn execute(cli: &Cli) -> Result<bool, CliError> {
    let overrides = CliOverrides { seed: cli.seed, samples: cli.samples, budget: cli.budget, mode: cli.mode.clone() };
    let out = cli.out.as_deref();
    match &cli.command {
        Command::Verify { rule, check, transformation, q } => {
            let config = load(cli, &overrides, transformation, *q)?;
            commands::verify(&config, *rule, *check, out)
        }
        Command::Welfare { rule, method, transformation, q, query_log } => {
            let mut config = load(cli, &overrides, transformation, *q)?;
            if let Some(m) = method {
                config.experiment.welfare = m.clone();
            }
            commands::welfare(&config, *rule, out, query_log.as_deref())
        }
        Command::Attack { transformation, q, rows } => {
            let mut config = load(cli, &overrides, transformation, *q)?;
            if let Some(r) = rows {
                config.experiment.rows = *r;
            }
            commands::attack(&config, out, cli.csv.as_deref())
        }
        Command::Reproduce => {
            let suite = Suite::load(cli.config.as_deref(), &overrides)?;
            let records = suite::reproduce(&suite)?;
            commands::emit(out, &records)?;
            Ok(records.iter().filter_map(|r| r.passed()).all(|p| p))
        }
        Command::Params { n, epsilon } => {
            let params = match (n, &cli.config) {
                (Some(n), _) => {
                    let eps = match epsilon {
                        Some(e) => {
                            parse_rational(e).ok_or(ConfigError::Value { key: "epsilon", message: format!("`{e}` is not a rational") })?
                        }
                        None => default_epsilon(),
                    };
                    Params::resolve(*n, eps, &Default::default()).map_err(ConfigError::from)?
                }
                (None, Some(_)) => load(cli, &overrides, &None, None)?.params,
                (None, None) => return Err(ConfigError::Value { key: "n", message: "give --n or --config".into() }.into()),
            };
            commands::params(&params, out)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
