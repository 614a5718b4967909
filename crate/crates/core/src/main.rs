use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use driftlimit::app::{self, AppError, RunConfig};

#[derive(Parser)]
#[command(name = "driftlimit", version, about = "Large-drift limits of principal eigenvalues")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `out_dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Final-gap bound (overrides `gap_tol`).
    #[arg(long, global = true)]
    tol: Option<f64>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Classify the limit set and print the predicted limit.
    Analyze,
    /// Compute lambda(A) over the configured drift rates.
    Sweep,
    /// Dump the closed-orbit family reduction.
    Reduce,
    /// Evaluate declared degenerate regions and sweep.
    Degenerate,
    /// Re-derive report.json from sweep.csv and components.json.
    Report,
}

fn run(cli: &Cli) -> Result<i32, AppError> {
    let path = cli.config.as_ref().ok_or_else(|| AppError::Config("--config is required".into()))?;
    let mut cfg = RunConfig::load(path)?;
    if let Some(t) = cli.tol {
        cfg.gap_tol = Some(t);
    }
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build_global()
            .map_err(|e| AppError::Config(e.to_string()))?;
    }
    let out = cli.out.clone().or_else(|| cfg.out_dir.clone()).unwrap_or_else(|| PathBuf::from("out"));
    let print_report = |r: &app::Report| {
        println!("predicted {:.6} ({:?})", r.predicted, r.case);
        for row in &r.table {
            match (row.lambda, row.gap) {
                (Some(l), Some(g)) => println!("A = {:>8}  lambda = {l:.6}  gap = {g:.3e}", row.a),
                _ => println!("A = {:>8}  failed: {}", row.a, row.error.as_deref().unwrap_or("?")),
            }
        }
        for v in &r.verdicts {
            println!("{:?} {}: {}", v.status, v.name, v.detail);
        }
    };
    match cli.command {
        Command::Analyze => {
            let a = app::analyze(&cfg)?;
            app::write_analysis(&cfg, &a, &out)?;
            for (s, k) in a.summaries().iter().zip(&a.components.components) {
                let v = s.value.map_or("inf".to_string(), |v| format!("{v:.6}"));
                println!("{:<20} {v:>12}  {:?}", k.name(), s.case);
            }
            for w in &a.components.warnings {
                println!("warning: {w}");
            }
            println!("predicted {:.6}", a.predicted());
            Ok(0)
        }
        Command::Sweep => {
            let r = app::sweep(&cfg, Some(&out))?;
            print_report(&r);
            Ok(app::verdict_code(&r.verdicts))
        }
        Command::Degenerate => {
            let r = app::degenerate(&cfg, Some(&out))?;
            for d in &r.degenerate {
                println!("{} {:?} {:.6}", d.label, d.case, d.value);
            }
            print_report(&r);
            Ok(app::verdict_code(&r.verdicts))
        }
        Command::Reduce => {
            let (r, _) = app::reduce(&cfg, Some(&out))?;
            println!("reduced eigenvalue {:.8} (every other station {:.8})", r.lambda, r.lambda_coarse);
            if let (Some(l2), Some(rel)) = (r.lambda_2d, r.relative_difference_2d) {
                println!("2D constrained check {l2:.8} (relative difference {rel:.2e})");
            }
            Ok(0)
        }
        Command::Report => {
            let r = app::report(&cfg, &out)?;
            print_report(&r);
            Ok(app::verdict_code(&r.verdicts))
        }
    }
}

fn main() -> ExitCode {
    // clap's own exit code 2 would read as a failed verdict
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 4 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
