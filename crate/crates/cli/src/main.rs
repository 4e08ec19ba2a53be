use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use dyntrack_core::ga::GaConfig;
use dyntrack_core::layout::{FramesDocument, LayoutMode, DEFAULT_ANCHOR_STIFFNESS};
use dyntrack_core::pipeline::{run, AlgorithmChoice, RunConfig};
use dyntrack_core::synth::synth;
use tiny_http::{Header, Method, Response, Server};

#[derive(Parser)]
#[command(
    name = "dyntrack",
    version,
    about = "Community tracking and stable layouts for weighted dynamic graphs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, ValueEnum)]
enum Algo {
    Dyci,
    Ga,
    Both,
}

#[derive(Copy, Clone, ValueEnum)]
enum Mode {
    Free,
    Fixed,
    Anchored,
}

#[derive(Subcommand)]
enum Command {
    /// Detect communities over a snapshot directory and export layouts.
    Run {
        #[arg(long = "in", value_name = "DIR")]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "both")]
        algo: Algo,
        #[arg(long, value_enum, default_value = "anchored")]
        mode: Mode,
        /// Anchor spring stiffness, anchored mode only.
        #[arg(long, default_value_t = DEFAULT_ANCHOR_STIFFNESS)]
        stiffness: f64,
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        pop: usize,
        #[arg(long, default_value_t = 50)]
        gens: usize,
        #[arg(long, default_value_t = 0.9)]
        pc: f64,
        #[arg(long, default_value_t = 0.1)]
        pm: f64,
        #[arg(long, default_value_t = 0.2)]
        elite: f64,
    },
    /// Generate a planted-partition dynamic sequence from a JSON spec.
    Synth {
        #[arg(long, value_name = "FILE")]
        spec: PathBuf,
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
    },
    /// Serve a frames file over HTTP for the viewer.
    Serve {
        #[arg(long, value_name = "FILE")]
        frames: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
    },
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run {
            input,
            algo,
            mode,
            stiffness,
            out,
            seed,
            pop,
            gens,
            pc,
            pm,
            elite,
        } => {
            let cfg = RunConfig {
                input_dir: input,
                algorithm: match algo {
                    Algo::Dyci => AlgorithmChoice::Dyci,
                    Algo::Ga => AlgorithmChoice::Ga,
                    Algo::Both => AlgorithmChoice::Both,
                },
                layout_mode: match mode {
                    Mode::Free => LayoutMode::Free,
                    Mode::Fixed => LayoutMode::Fixed,
                    Mode::Anchored => LayoutMode::Anchored { stiffness },
                },
                layout: Default::default(),
                ga: GaConfig {
                    population_size: pop,
                    crossover_prob: pc,
                    mutation_prob: pm,
                    elite_fraction: elite,
                    generations: gens,
                    rng_seed: seed,
                },
                out_dir: out,
                seed,
            };
            let summary = run(&cfg).with_context(|| format!("run over {} failed", cfg.input_dir.display()))?;
            for t in &summary.unconverged {
                eprintln!("warning: layout of snapshot {t} hit the iteration cap");
            }
            println!("algorithm  snapshots  modularity  communities  elapsed_ms");
            for a in &summary.averages {
                println!(
                    "{:<9}  {:>9}  {:>10.4}  {:>11.2}  {:>10.3}",
                    a.algorithm.to_string(),
                    a.snapshots,
                    a.modularity,
                    a.community_count,
                    a.elapsed_ms
                );
            }
        }
        Command::Synth { spec, out } => {
            let s = synth(&spec, &out).with_context(|| format!("cannot generate from {}", spec.display()))?;
            let (nodes, edges) = s.cumulative_counts();
            println!(
                "wrote {} snapshots to {} ({nodes} nodes, {edges} edges overall)",
                s.graphs.len(),
                out.display()
            );
        }
        Command::Serve { frames, port } => serve(&frames, port)?,
    }
    Ok(())
}

fn load_frames(path: &Path) -> Result<Vec<u8>> {
    let bytes = fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    serde_json::from_slice::<FramesDocument>(&bytes)
        .with_context(|| format!("{} is not a frames document", path.display()))?;
    Ok(bytes)
}

fn serve(frames: &Path, port: u16) -> Result<()> {
    load_frames(frames)?;
    let server = match Server::http(("127.0.0.1", port)) {
        Ok(s) => s,
        Err(e) => bail!("cannot listen on port {port}: {e}"),
    };
    let addr = server.server_addr().to_ip().context("server has no IP address")?;
    println!("serving {} on http://{addr}/frames.json", frames.display());
    std::io::stdout().flush()?;

    let json: Header = "Content-Type: application/json".parse().unwrap();
    let cors: Header = "Access-Control-Allow-Origin: *".parse().unwrap();
    for request in server.incoming_requests() {
        let path = request.url().split('?').next().unwrap_or("");
        let response = match (request.method(), path) {
            (Method::Get, "/" | "/frames.json") => match load_frames(frames) {
                Ok(body) => Response::from_data(body)
                    .with_header(json.clone())
                    .with_header(cors.clone()),
                Err(e) => Response::from_string(format!("{e:#}\n")).with_status_code(500),
            },
            (Method::Get, _) => Response::from_string("not found\n").with_status_code(404),
            _ => Response::from_string("method not allowed\n").with_status_code(405),
        };
        if let Err(e) = request.respond(response) {
            eprintln!("warning: failed to answer request: {e}");
        }
    }
    Ok(())
}
