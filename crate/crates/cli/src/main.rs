use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use ssmopt_core::harness::{self, write_outputs, HarnessError, OutputKind, RunResult};
use ssmopt_core::{analyze_adamssm, fmt_f64, load_config, Method};

/// State-space adaptive optimizers: experiments, flows, and analysis.
#[derive(Debug, Parser)]
#[command(name = "ssmopt", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run every optimizer on every objective and write trajectories and reports.
    Run { config: PathBuf },
    /// Like `run`, plus per-objective summary tables sorted by best f.
    Compare { config: PathBuf },
    /// Poles, zeros, p and DC gain of the AdamSSM second-moment dynamic, as JSON.
    Analyze {
        #[arg(long, allow_negative_numbers = true)]
        b2: f64,
        #[arg(long, allow_negative_numbers = true)]
        b3: f64,
    },
    /// Integrate the continuous flows of the configured optimizers.
    Flow {
        config: PathBuf,
        #[arg(long)]
        dt: f64,
        #[arg(long = "t-end")]
        t_end: f64,
        #[arg(long, value_enum, default_value_t = Integrator::Rk4)]
        integrator: Integrator,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Integrator {
    Euler,
    Rk4,
}

impl From<Integrator> for Method {
    fn from(i: Integrator) -> Method {
        match i {
            Integrator::Euler => Method::Euler,
            Integrator::Rk4 => Method::Rk4,
        }
    }
}

const EXIT_INPUT: u8 = 1;
const EXIT_RUNTIME: u8 = 2;

fn harness_exit(e: &HarnessError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(if e.is_input_error() { EXIT_INPUT } else { EXIT_RUNTIME })
}

/// Prints one line per run and returns the runtime exit code if any run failed.
fn report_runs(results: &[RunResult]) -> ExitCode {
    let mut failed = 0;
    for r in results {
        let rep = &r.report;
        let reached = rep
            .iters_to_threshold
            .map_or_else(|| "unreached".to_string(), |k| k.to_string());
        println!(
            "{}\t{}\tbest_f={}\tepoch_of_best={}\tfinal_grad_norm={}\titers_to_threshold={}",
            r.objective,
            r.optimizer,
            fmt_f64(rep.best_f),
            rep.epoch_of_best,
            fmt_f64(rep.final_grad_norm),
            reached
        );
        if let Some(err) = &rep.error {
            eprintln!("run {} ({} on {}) failed: {err}", r.index, r.optimizer, r.objective);
            failed += 1;
        }
    }
    if failed > 0 {
        ExitCode::from(EXIT_RUNTIME)
    } else {
        ExitCode::SUCCESS
    }
}

fn execute(config: &PathBuf, kind: OutputKind, flow: Option<(Method, f64, f64)>) -> ExitCode {
    let cfg = match load_config(config) {
        Ok(c) => c,
        Err(e) => return harness_exit(&e),
    };
    let results = match flow {
        Some((method, dt, t_end)) => match harness::run_flows(&cfg, method, dt, t_end) {
            Ok(r) => r,
            Err(e) => return harness_exit(&e),
        },
        None => harness::run_experiments(&cfg),
    };
    let dir = cfg.resolved_output_dir();
    if let Err(e) = write_outputs(&cfg, &results, &dir, kind) {
        return harness_exit(&e);
    }
    eprintln!("wrote {} runs to {}", results.len(), dir.display());
    report_runs(&results)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match cli.command {
        Command::Run { config } => execute(&config, OutputKind::Runs, None),
        Command::Compare { config } => execute(&config, OutputKind::Compare, None),
        Command::Flow {
            config,
            dt,
            t_end,
            integrator,
        } => execute(&config, OutputKind::Flows, Some((integrator.into(), dt, t_end))),
        Command::Analyze { b2, b3 } => match analyze_adamssm(b2, b3) {
            Ok(a) => {
                println!("{}", serde_json::to_string_pretty(&a).expect("analysis serializes"));
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(EXIT_INPUT)
            }
        },
    }
}
