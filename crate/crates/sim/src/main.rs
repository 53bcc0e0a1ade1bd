// SPDX-License-Identifier: Apache-2.0

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rawebs_sim::{run_scenario, ScenarioName, ScenarioSpec};

#[derive(Parser)]
#[command(name = "rawebs-sim", about = "Replay RA-WEBs scenarios under a simulated clock")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario, or `all`.
    Run {
        #[arg(long)]
        scenario: String,
        /// Maximum merge delay of the CT log, seconds.
        #[arg(long, default_value_t = 86_400)]
        mmd: u64,
        /// Verifier polling interval, seconds.
        #[arg(long, default_value_t = 600)]
        poll: u64,
        /// Delay between log merge and monitor visibility, seconds.
        #[arg(long, default_value_t = 0)]
        lag: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Simulated seconds per tick.
        #[arg(long, default_value_t = 60)]
        step: u64,
        /// Write reports here instead of stdout.
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let Command::Run { scenario, mmd, poll, lag, seed, step, report } = Cli::parse().command;
    let names = if scenario == "all" {
        ScenarioName::ALL.to_vec()
    } else {
        match scenario.parse() {
            Ok(name) => vec![name],
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
        }
    };

    let mut out = String::new();
    let mut failed = false;
    for name in names {
        let spec = ScenarioSpec { name, mmd, monitor_lag: lag, poll_interval: poll, seed, step };
        match run_scenario(&spec) {
            Ok(r) => {
                out.push_str(&r.to_json());
                out.push('\n');
            }
            Err(e) => {
                eprintln!("FAILED {e}");
                failed = true;
            }
        }
    }
    let written = match report {
        Some(path) => std::fs::write(&path, &out),
        None => std::io::stdout().write_all(out.as_bytes()),
    };
    if let Err(e) = written {
        eprintln!("error: writing report: {e}");
        return ExitCode::FAILURE;
    }
    if failed {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
