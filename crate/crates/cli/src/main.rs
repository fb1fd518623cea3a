use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use inflate_lab_cli::{envelope, parse_config_text, run, CliError, Command, ExperimentConfig, Format, OutputSpec};

/// Inflation certificates, maximal volumes and measure experiments.
#[derive(Parser, Debug)]
#[command(name = "inflate-lab", version)]
struct Args {
    #[arg(value_enum)]
    command: Command,
    /// JSON config: `{"command", "params", "seed", "output"}`.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Report path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long, env = "INFLATE_LAB_THREADS")]
    threads: Option<usize>,
}

fn resolve(args: &Args) -> Result<ExperimentConfig, CliError> {
    let file = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
            Some(parse_config_text(&text)?)
        }
        None => None,
    };
    let mut config = ExperimentConfig {
        command: args.command,
        params: serde_json::json!({}),
        seed: 0,
        output: OutputSpec::default(),
    };
    if let Some(f) = file {
        if let Some(c) = f.command {
            if c != args.command {
                return Err(CliError::Schema {
                    pointer: "command".into(),
                    message: format!("config is for `{}`, not `{}`", c.name(), args.command.name()),
                });
            }
        }
        config.params = f.params;
        config.seed = f.seed.unwrap_or(0);
        config.output = f.output.unwrap_or_default();
    }
    if let Some(s) = args.seed {
        config.seed = s;
    }
    if let Some(o) = &args.out {
        config.output.path = Some(o.clone());
    }
    if let Some(f) = args.format {
        config.output.format = f;
    }
    Ok(config)
}

fn execute(args: &Args) -> Result<(), CliError> {
    if let Some(t) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::Precondition(format!("thread pool: {e}")))?;
    }
    let config = resolve(args)?;
    let text = envelope(&config, run(&config)?).render(config.output.format)?;
    match &config.output.path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Io(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let err = CliError::Schema {
                pointer: "argv".into(),
                message: e.to_string().trim().to_string(),
            };
            eprintln!("{}", err.to_json());
            return ExitCode::from(2);
        }
    };
    match execute(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
