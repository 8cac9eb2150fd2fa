use clap::{Parser, Subcommand};
use std::net::TcpListener;
use std::path::PathBuf;
use std::process::ExitCode;
use vanetsim::control;
use vanetsim::engine::Simulation;
use vanetsim::error::Error;
use vanetsim::plot;
use vanetsim::runner::{self, RunOptions};
use vanetsim::scenario::load_scenario;
use vanetsim::signals::LengthMode;

#[derive(Parser)]
#[command(name = "vanetsim", about = "Coupled traffic / V2V network simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario start to end, writing CSV artifacts.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Write a per-step vehicle trace CSV.
        #[arg(long)]
        trace: bool,
        /// Serve the TCP control protocol on this port instead of
        /// free-running; the client drives the clock.
        #[arg(long)]
        control_port: Option<u16>,
        /// Pad or truncate tlLogic state strings instead of rejecting
        /// length mismatches.
        #[arg(long)]
        permissive: bool,
    },
    /// Run the same scenario with static and adaptive signal control
    /// and report the difference.
    Compare {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Render a bar chart (SVG) from a metrics CSV.
    Plot {
        #[arg(long)]
        metrics: PathBuf,
        #[arg(long, default_value = "pdf")]
        column: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Load and validate a scenario without running it.
    Validate {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        permissive: bool,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io { .. } => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn run(cli: Cli) -> vanetsim::Result<()> {
    match cli.command {
        Command::Run {
            scenario,
            seed,
            out,
            trace,
            control_port,
            permissive,
        } => {
            let mode = if permissive {
                LengthMode::Permissive
            } else {
                LengthMode::Strict
            };
            match control_port {
                None => {
                    let report = runner::run(
                        &scenario,
                        &RunOptions {
                            seed,
                            out_dir: out,
                            trace,
                            adaptive: true,
                            length_mode: mode,
                        },
                    )?;
                    print!("{}", runner::summary_text(&report));
                }
                Some(port) => {
                    let mut sc = load_scenario(&scenario, mode)?;
                    if let Some(seed) = seed {
                        sc.config.seed = seed;
                    }
                    for w in &sc.warnings {
                        eprintln!("warning: {w}");
                    }
                    let mut sim = Simulation::new(sc, true)?;
                    let listener = TcpListener::bind(("127.0.0.1", port))
                        .map_err(|e| Error::io(format!("bind port {port}"), e))?;
                    eprintln!("control server listening on 127.0.0.1:{port}");
                    control::serve(listener, &mut sim)?;
                }
            }
            Ok(())
        }
        Command::Compare { scenario, seed, out } => {
            let report = runner::compare(
                &scenario,
                &RunOptions {
                    seed,
                    out_dir: out,
                    ..Default::default()
                },
            )?;
            print!("{}", runner::compare_text(&report));
            Ok(())
        }
        Command::Plot { metrics, column, out } => {
            if !plot::COLUMNS.contains(&column.as_str()) {
                return Err(Error::Validation(format!(
                    "column must be one of {:?}",
                    plot::COLUMNS
                )));
            }
            let text = std::fs::read_to_string(&metrics)
                .map_err(|e| Error::io(metrics.display(), e))?;
            let svg = plot::render_bar_chart(&text, &column)?;
            std::fs::write(&out, svg).map_err(|e| Error::io(out.display(), e))?;
            Ok(())
        }
        Command::Validate { scenario, permissive } => {
            let mode = if permissive {
                LengthMode::Permissive
            } else {
                LengthMode::Strict
            };
            let sc = load_scenario(&scenario, mode)?;
            for w in &sc.warnings {
                println!("warning: {w}");
            }
            println!(
                "ok: {} nodes, {} edges, {} connections, {} routes, {} flows, {} detectors, {} programs",
                sc.network.nodes.len(),
                sc.network.edges.len(),
                sc.network.connections.len(),
                sc.routes.len(),
                sc.flows.len(),
                sc.detectors.len(),
                sc.programs.len()
            );
            Ok(())
        }
    }
}
