//! `morseham`: radial solutions and Morse-index bounds from the command line.
//!
//! Every subcommand reads a JSON config. `solve`, `spectrum` and `morse` run
//! the pipeline up to the named stage; `verify` either runs the full
//! pipeline and checks every bound, or re-verifies stored reports without
//! recomputation; `sweep` runs a parameter grid. Exit codes: 0 verified,
//! 1 verification failure, 2 config error, 3 solver error, 4 inconclusive.
//! Set `MORSEHAM_LOG={error|info|debug}` for stderr diagnostics.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use morseham_core::harness::{
    error_exit_code, load_config, load_sweep_config, render_table, run_config, sweep,
    verify_theorems, ExperimentConfig, Task,
};
use morseham_core::report::{RunReport, VerifyCheck};
use morseham_core::CoreError;

#[derive(Parser)]
#[command(
    name = "morseham",
    version,
    about = "Sign-changing radial solutions of Hamiltonian elliptic systems and their Morse-index bounds"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Find the target nodal solution and write solution.csv.
    Solve(RunArgs),
    /// Solve, then compute the scalar a/b spectra and plot data.
    Spectrum(RunArgs),
    /// Solve, then assemble the full Morse-index report.
    Morse(RunArgs),
    /// Run the whole pipeline and check every bound, or re-verify stored
    /// reports from their persisted numbers.
    Verify(VerifyArgs),
    /// Run a parameter grid, one isolated directory per cell.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides the config's out_dir.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the spectral grid node count.
    #[arg(long, value_name = "M")]
    grid_size: Option<usize>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Experiment config (JSON) to run and verify.
    #[arg(long, required_unless_present = "reports", conflicts_with = "reports")]
    config: Option<PathBuf>,
    /// Stored report.json files to re-verify without recomputation.
    #[arg(long, num_args = 1.., value_name = "REPORT")]
    reports: Vec<PathBuf>,
    /// Output directory; overrides the config's out_dir. In report mode the
    /// machine-readable table goes here as verify.json.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the spectral grid node count.
    #[arg(long, value_name = "M")]
    grid_size: Option<usize>,
}

#[derive(Args)]
struct SweepArgs {
    /// Sweep config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory for cells and sweep.csv.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the spectral grid node count for every cell.
    #[arg(long, value_name = "M")]
    grid_size: Option<usize>,
    /// Concurrent sweep cells; 0 means one per core.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match dispatch(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("[morseham error] {err}");
            error_exit_code(&err)
        }
    };
    ExitCode::from(code as u8)
}

fn dispatch(cli: Cli) -> Result<i32, CoreError> {
    match cli.command {
        Command::Solve(args) => run_stage(Task::Solve, args),
        Command::Spectrum(args) => run_stage(Task::Spectrum, args),
        Command::Morse(args) => run_stage(Task::Morse, args),
        Command::Verify(args) => {
            if args.reports.is_empty() {
                run_stage(
                    Task::Verify,
                    RunArgs {
                        config: args.config.expect("clap enforces config xor reports"),
                        out: args.out,
                        grid_size: args.grid_size,
                    },
                )
            } else {
                verify_reports(&args)
            }
        }
        Command::Sweep(args) => run_sweep(args),
    }
}

fn resolve_out(cli_out: Option<PathBuf>, config: &ExperimentConfig) -> PathBuf {
    cli_out
        .or_else(|| config.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("morseham_out"))
}

/// Run the pipeline up to `task` and print a stage-appropriate summary.
fn run_stage(task: Task, args: RunArgs) -> Result<i32, CoreError> {
    let mut config = load_config(&args.config)?;
    config.tasks = vec![task];
    if let Some(m) = args.grid_size {
        config.grid.spectral_nodes = m;
    }
    let out = resolve_out(args.out, &config);
    let report = run_config(&config, &out)?;
    print_summary(&report);
    println!("report: {}", out.join("report.json").display());
    Ok(report_exit(&report))
}

fn print_summary(report: &RunReport) {
    if let Some(sol) = &report.solution {
        println!(
            "solution: m={} alpha={:.10e} beta={:.10e} residual={:.3e} bc_defect={:.3e}",
            sol.m, sol.alpha, sol.beta, sol.residual_norm, sol.bc_defect
        );
    }
    if let Some(profile) = &report.profile {
        println!(
            "profile: {} ({} checks)",
            if profile.all_pass { "all checks pass" } else { "CHECKS FAILED" },
            profile.checks.len()
        );
    }
    if let Some(spectra) = &report.spectra {
        println!(
            "a-spectrum: {} values, {} negative; b-spectrum: {} values, {} negative (min b = {:.3e})",
            spectra.a.values.len(),
            spectra.a.negative_count,
            spectra.b.values.len(),
            spectra.b.negative_count,
            spectra.b_pointwise_min
        );
    }
    if let Some(morse) = &report.morse {
        let hats: Vec<String> = morse.lambda_hats.iter().map(|v| format!("{v:.6e}")).collect();
        println!(
            "morse: m_lin_rad={} m_lin={} lambda_hats=[{}] uno={} due={} tre={}",
            morse.m_lin_rad,
            morse.indices.m_lin,
            hats.join(", "),
            morse.flags.uno,
            morse.flags.due,
            morse.flags.tre.map(|b| b.to_string()).unwrap_or_else(|| "n/a".into())
        );
    }
    if let Some(oracle) = &report.oracle {
        println!(
            "oracle: union gaps {:.3e}/{:.3e}, eigvec diag {:.3e}, quad-form gap {:.3e}, pair residual {:.3e}",
            oracle.union_gap_regular,
            oracle.union_gap_singular,
            oracle.eigenvector_diag_max,
            oracle.quad_form_identity_gap,
            oracle.pair_residual.residual
        );
    }
    if let Some(verify) = &report.verify {
        print!("{}", render_checks(&verify.checks));
        println!("verdict: {:?}", verify.verdict);
    }
    if let Some(failed_at) = &report.failed_at {
        println!(
            "FAILED at {failed_at}: {}",
            report.failed_message.as_deref().unwrap_or("unknown")
        );
    }
}

fn render_checks(checks: &[VerifyCheck]) -> String {
    let mut out = format!("{:<28} {:<6} {:>12}\n", "check", "pass", "margin");
    for c in checks {
        out.push_str(&format!(
            "{:<28} {:<6} {:>12.4e}    {}\n",
            c.name,
            if c.pass { "yes" } else { "NO" },
            c.margin,
            c.detail
        ));
    }
    out
}

fn report_exit(report: &RunReport) -> i32 {
    if let Some(kind) = report.failed_kind.as_deref() {
        return match kind {
            "config" => 2,
            "inconclusive" => 4,
            _ => 3,
        };
    }
    match &report.verify {
        Some(verify) => verify.verdict.exit_code(),
        None => 0,
    }
}

/// Re-verify stored reports from their persisted numbers.
fn verify_reports(args: &VerifyArgs) -> Result<i32, CoreError> {
    let table = verify_theorems(&args.reports)?;
    print!("{}", render_table(&table));
    if let Some(out) = &args.out {
        std::fs::create_dir_all(out)?;
        let path = out.join("verify.json");
        let mut f = std::io::BufWriter::new(std::fs::File::create(&path)?);
        serde_json::to_writer_pretty(&mut f, &table)?;
        use std::io::Write;
        f.write_all(b"\n")?;
        println!("table: {}", path.display());
    }
    Ok(table.verdict.exit_code())
}

fn run_sweep(args: SweepArgs) -> Result<i32, CoreError> {
    let mut config = load_sweep_config(&args.config)?;
    if let Some(m) = args.grid_size {
        config.grid.spectral_nodes = m;
    }
    let out = args.out.unwrap_or_else(|| PathBuf::from("morseham_out"));
    let rows = sweep(&config, &out, args.jobs)?;
    let failed = rows.iter().filter(|r| r.status != "ok").count();
    println!("sweep: {} cells, {} ok, {failed} failed", rows.len(), rows.len() - failed);
    println!("summary: {}", out.join("sweep.csv").display());
    Ok(0)
}
