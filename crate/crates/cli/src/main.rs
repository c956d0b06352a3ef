use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use cvqkd_cli::config::RunConfig;
use cvqkd_cli::reports::{run_estimation_demo, run_lemma_checks, write_fidelity_csv};
use cvqkd_cli::sweep::run_sweep;
use cvqkd_cli::CliError;

#[derive(Parser)]
#[command(name = "cvqkd", version, about = "Key rates for phase-encoded CV-QKD")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Asymptotic and composable key rates over a list of attenuations.
    RateSweep {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Built-in parameter set; a --config file is laid over it.
        #[arg(long, value_parser = ["fig1", "fig2", "fig4"])]
        preset: Option<String>,
        /// Overrides output.csv_path; `-` writes to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulated parameter estimation at one channel setting.
    Estimate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_parser = ["fig1", "fig2", "fig4"])]
        preset: Option<String>,
        #[arg(long)]
        m: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Defaults to the first attenuation of the config.
        #[arg(long)]
        attenuation_db: Option<f64>,
    },
    /// Random-instance checks of the trace-distance and min-entropy lemmas.
    LemmaCheck {
        #[arg(long, default_value_t = 1000)]
        instances: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Flip a sign in one identity to show that violations are caught.
        #[arg(long)]
        corrupt: bool,
    },
    /// Fidelity of the two binary signal states against preparation noise.
    FidelitySweep {
        #[arg(long, value_delimiter = ',', default_value = "0.5,1,2")]
        alpha: Vec<f64>,
        #[arg(long, default_value_t = 2.0)]
        nu_th_max: f64,
        #[arg(long, default_value_t = 201)]
        points: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn output(path: Option<&PathBuf>) -> Result<Box<dyn Write>, CliError> {
    match path {
        Some(p) if p.as_os_str() != "-" => Ok(Box::new(BufWriter::new(File::create(p)?))),
        _ => Ok(Box::new(io::stdout().lock())),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::RateSweep { config, preset, out } => {
            let cfg = RunConfig::load(config.as_deref(), preset.as_deref())?;
            let plan = cfg.plan()?;
            let result = run_sweep(&plan);
            let path = out.or_else(|| plan.csv_path.as_ref().map(PathBuf::from));
            result.write_csv(output(path.as_ref())?)?;
            let failed = result.failures();
            if failed > 0 {
                return Err(CliError::Numeric(format!("{failed} row(s) failed, see the status column")));
            }
        }
        Command::Estimate { config, preset, m, seed, attenuation_db } => {
            let cfg = RunConfig::load(config.as_deref(), preset.as_deref())?;
            let report = run_estimation_demo(&cfg, m, seed, attenuation_db)?;
            print!("{}", report.text);
        }
        Command::LemmaCheck { instances, seed, corrupt } => {
            let (report, text) = run_lemma_checks(instances, seed, corrupt)?;
            print!("{text}");
            if report.violations() > 0 {
                return Err(CliError::LemmaViolation(report.violations()));
            }
        }
        Command::FidelitySweep { alpha, nu_th_max, points, out } => {
            write_fidelity_csv(&alpha, nu_th_max, points, output(out.as_ref())?)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // usage errors share the config-error code; --help and --version succeed
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
