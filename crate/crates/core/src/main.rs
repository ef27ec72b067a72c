use clap::{Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;

use ekfluid::config::parse_config;
use ekfluid::runner::{self, exit_code, EXIT_CONFIG, EXIT_NUMERIC};
use ekfluid::snapshot::Snapshot;
use ekfluid::verify::{self, Suite};
use ekfluid::{Error, PhysicalParams};

/// Euler-Korteweg vortex fluid: scenario runner and acceptance checks.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    /// Worker threads for ensemble integration (default: all cores).
    #[arg(long, global = true, env = runner::THREADS_ENV)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario file into its output directory.
    Run {
        config: PathBuf,
        /// Directory that relative `output` paths are resolved against (default: current directory).
        #[arg(long, env = runner::OUTPUT_ROOT_ENV)]
        output_root: Option<PathBuf>,
    },
    /// Run the acceptance criteria and print a pass/fail table.
    Verify {
        #[arg(value_enum)]
        suite: SuiteArg,
    },
    /// Print the characteristic scales as JSON.
    Scales {
        /// "natural" or comma-separated hbar=..,m=..,c=..[,rho_ref=..]
        #[arg(long, default_value = "natural")]
        params: String,
    },
    /// Convert a field snapshot to JSON or CSV on stdout.
    Export {
        snapshot: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    /// Reduced double-slit ensembles (about 2 minutes).
    Quick,
    /// Every criterion at full size.
    Full,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

fn parse_params(spec: &str) -> ekfluid::Result<PhysicalParams> {
    if spec == "natural" {
        return Ok(PhysicalParams::natural());
    }
    let mut p = PhysicalParams::natural();
    for item in spec.split(',') {
        let (k, v) = item.split_once('=').ok_or_else(|| Error::InvalidParameter(format!("expected key=value, got {item}")))?;
        let v: f64 = v.trim().parse().map_err(|_| Error::InvalidParameter(format!("{k}: not a number: {v}")))?;
        match k.trim() {
            "hbar" => p.hbar = v,
            "m" => p.m = v,
            "c" => p.c = v,
            "rho_ref" => p.rho_ref = v,
            other => return Err(Error::InvalidParameter(format!("unknown parameter {other}"))),
        }
    }
    p.validate()?;
    Ok(p)
}

fn execute(cli: Cli) -> ekfluid::Result<i32> {
    match cli.command {
        Command::Run { config, output_root } => {
            let text = std::fs::read_to_string(&config)
                .map_err(|e| Error::InvalidParameter(format!("cannot read {}: {e}", config.display())))?;
            let cfg = parse_config(&text)?;
            let outcome = runner::run(&cfg, output_root.as_deref())?;
            println!("{}: {}", outcome.output_dir.display(), outcome.summary);
            Ok(outcome.exit_code())
        }
        Command::Verify { suite } => {
            let suite = match suite {
                SuiteArg::Quick => Suite::Quick,
                SuiteArg::Full => Suite::Full,
            };
            println!("{}", verify::header());
            let results = verify::run_suite(suite, |r| println!("{}", r.row()));
            let failed = results.iter().filter(|r| !r.pass).count();
            println!("{} of {} criteria passed", results.len() - failed, results.len());
            Ok(if failed == 0 { 0 } else { EXIT_NUMERIC })
        }
        Command::Scales { params } => {
            let p = parse_params(&params)?;
            println!("{}", serde_json::to_string_pretty(&p.scales())?);
            Ok(0)
        }
        Command::Export { snapshot, format } => {
            let snap = Snapshot::load(&snapshot)?;
            match format {
                Format::Json => println!("{}", snap.to_json()?),
                Format::Csv => snap.write_csv(std::io::stdout().lock())?,
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG as u8);
        }
    }
    match execute(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
