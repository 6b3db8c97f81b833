use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use orgtree_cli::field::field_run;
use orgtree_cli::run::{detect_offline, render_trace, simulate};
use orgtree_cli::{Config, RunError};

/// Adaptive quadtree simulations with emergent organization detection.
#[derive(Parser)]
#[command(name = "orgtree", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the boids simulation, writing trace.jsonl and SVG snapshots.
    Simulate(SimulateArgs),
    /// Re-run detection on a recorded frame.
    Detect(DetectArgs),
    /// Compare direct and tree-code fields over the initial placement.
    Field(FieldArgs),
    /// Render recorded frames to SVG.
    Render(RenderArgs),
}

/// Flags shared by commands that read a config; they override the file.
#[derive(Args)]
struct ConfigArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
}

impl ConfigArgs {
    fn load(&self) -> Result<Config, RunError> {
        let mut c = Config::load(&self.config)?;
        if let Some(s) = self.seed {
            c.seed = s;
        }
        Ok(c)
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long)]
    steps: Option<u64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    svg_every: Option<u64>,
    /// Record modularity in every frame.
    #[arg(long)]
    metrics: bool,
}

#[derive(Args)]
struct DetectArgs {
    #[arg(long)]
    trace: PathBuf,
    #[arg(long)]
    step: u64,
    /// Depth threshold; the recorded one when absent.
    #[arg(long)]
    depth: Option<u32>,
}

#[derive(Args)]
struct FieldArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long)]
    theta: Option<f64>,
    /// Directory for field.jsonl; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RenderArgs {
    #[arg(long)]
    trace: PathBuf,
    /// Only this step; every recorded frame when absent.
    #[arg(long)]
    step: Option<u64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<(), RunError> {
    let mut stdout = io::stdout().lock();
    serde_json::to_writer(&mut stdout, value).map_err(io::Error::from)?;
    stdout.write_all(b"\n")?;
    Ok(())
}

fn run(cli: Cli) -> Result<(), RunError> {
    match cli.command {
        Command::Simulate(a) => {
            let mut c = a.config.load()?;
            if let Some(s) = a.steps {
                c.steps = s;
            }
            if let Some(k) = a.svg_every {
                c.output.svg_every = k;
            }
            if a.metrics {
                c.output.metrics = true;
            }
            let summary = simulate(&c, &a.out)?;
            print_json(&summary)
        }
        Command::Detect(a) => print_json(&detect_offline(&a.trace, a.step, a.depth)?),
        Command::Field(a) => {
            let mut c = a.config.load()?;
            if let Some(t) = a.theta {
                c.kernels.theta = t;
            }
            let summary = match &a.out {
                Some(dir) => {
                    std::fs::create_dir_all(dir)?;
                    field_run(&c, BufWriter::new(File::create(dir.join("field.jsonl"))?))?
                }
                None => field_run(&c, BufWriter::new(io::stdout().lock()))?,
            };
            if a.out.is_some() {
                print_json(&summary)?;
            }
            Ok(())
        }
        Command::Render(a) => {
            for p in render_trace(&a.trace, a.step, &a.out)? {
                println!("{}", p.display());
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("orgtree: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
