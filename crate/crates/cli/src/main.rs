use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dgroups::analysis::RunSummary;
use dgroups_cli::Overrides;

#[derive(Parser)]
#[command(name = "dgroups", version, about = "Availability-aware group formation simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configuration or a sweep and write CSV results
    Run(Overrides),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let Command::Run(flags) = cli.command;
    match dgroups_cli::run(&flags) {
        Ok(report) => {
            for (cell, m) in &report.runs {
                let s = RunSummary::of(m);
                println!(
                    "{}: {} groups, rounds {}, below 0.6 {:.4}, median {:.4}",
                    cell.name,
                    m.group_count(),
                    m.rounds_to_convergence,
                    s.frac_below_one,
                    s.median_one
                );
            }
            println!("wrote {}", report.comparison.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
