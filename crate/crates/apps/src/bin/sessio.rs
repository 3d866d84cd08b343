use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use log::warn;
use sessio::net::{bind_address, peer_address};
use sessio_apps::travel::{self, CustomerOutcome, Decision};
use sessio_apps::{clip, download, miner, tak};

#[derive(Parser)]
#[command(name = "sessio", version, about = "Session-typed example programs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the Takeuchi function with a cancellation timeout.
    Tak {
        #[arg(long, allow_hyphen_values = true)]
        x: i64,
        #[arg(long, allow_hyphen_values = true)]
        y: i64,
        #[arg(long, allow_hyphen_values = true)]
        z: i64,
        #[arg(long, default_value_t = 10_000)]
        timeout_ms: u64,
    },
    /// Mine blocks (one hex header per line) with several workers.
    Miner {
        #[arg(long, default_value_t = 4)]
        threads: usize,
        #[arg(long, default_value_t = 8)]
        difficulty: u8,
        /// Defaults to two built-in sample headers.
        #[arg(long)]
        blocks_file: Option<PathBuf>,
    },
    /// Clip a polygon by a convex polygon (one `x y` pair per line).
    Clip {
        #[arg(long)]
        subject_file: PathBuf,
        #[arg(long)]
        clipper_file: PathBuf,
    },
    /// Download URLs (one per line) with a pool of workers.
    Fetch {
        #[arg(long)]
        urls_file: PathBuf,
        #[arg(long, default_value_t = 4)]
        workers: usize,
        #[arg(long, default_value_t = 30_000)]
        timeout_ms: u64,
    },
    /// Run one role of the travel agency.
    Travel {
        #[arg(long, value_enum)]
        role: Role,
        /// Address to serve on (agency, airline); falls back to SESSIO_BIND.
        #[arg(long)]
        listen: Option<String>,
        /// Address to connect to (customer: agency, agency: airline);
        /// falls back to SESSIO_PEER.
        #[arg(long)]
        peer: Option<String>,
        #[arg(long, default_value = "Paris")]
        dest: String,
        /// Comma-separated decisions: accept, reject, quit.
        #[arg(long, default_value = "accept", value_delimiter = ',')]
        plan: Vec<Decision>,
        /// Airline answer delay, for fault-injection.
        #[arg(long, default_value_t = 0)]
        delay_ms: u64,
        /// Stop serving after this many sessions.
        #[arg(long)]
        sessions: Option<usize>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Role {
    Customer,
    Agency,
    Airline,
}

fn read(path: &PathBuf) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Tak { x, y, z, timeout_ms } => {
            if timeout_ms == 0 {
                bail!("--timeout-ms must be positive");
            }
            let report = tak::run_tak(x, y, z, Duration::from_millis(timeout_ms))?;
            match report.outcome {
                tak::TakOutcome::Value(v) => println!("Tak({x},{y},{z}) = {v}"),
                tak::TakOutcome::Cancelled => println!("Cancelled"),
            }
        }
        Command::Miner {
            threads,
            difficulty,
            blocks_file,
        } => {
            if threads == 0 {
                bail!("--threads must be at least 1");
            }
            if difficulty > miner::MAX_DIFFICULTY {
                bail!("--difficulty must be at most {}", miner::MAX_DIFFICULTY);
            }
            let blocks = match blocks_file {
                Some(path) => read(&path)?
                    .lines()
                    .filter(|l| !l.trim().is_empty())
                    .map(|l| miner::Block::from_hex(l, difficulty))
                    .collect::<Result<Vec<_>, _>>()?,
                None => miner::sample_blocks(2, difficulty),
            };
            let report = miner::run_miner(threads, &blocks, false)?;
            for f in report.found {
                println!("block {} nonce {} worker {}", f.block, f.nonce, f.worker);
            }
        }
        Command::Clip {
            subject_file,
            clipper_file,
        } => {
            let subject = clip::parse_polygon(&read(&subject_file)?).map_err(anyhow::Error::msg)?;
            let clipper = clip::parse_polygon(&read(&clipper_file)?).map_err(anyhow::Error::msg)?;
            if clipper.len() < 3 {
                bail!("the clipper needs at least three vertices");
            }
            for v in clip::run_clip(&subject, &clipper)? {
                println!("{} {}", v.x, v.y);
            }
        }
        Command::Fetch {
            urls_file,
            workers,
            timeout_ms,
        } => {
            if workers == 0 {
                bail!("--workers must be at least 1");
            }
            let urls: Vec<String> = read(&urls_file)?
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .map(String::from)
                .collect();
            let fetcher = Arc::new(download::HttpFetcher::new(Duration::from_millis(timeout_ms)));
            let report = download::run_downloader(&urls, workers, fetcher)?;
            for (url, body) in report.results {
                match body {
                    Some(b) => println!("{url} {} bytes", b.len()),
                    None => println!("{url} failed"),
                }
            }
        }
        Command::Travel {
            role,
            listen,
            peer,
            dest,
            plan,
            delay_ms,
            sessions,
        } => match role {
            Role::Customer => {
                let agency = peer_address(peer.as_deref(), "127.0.0.1:8888");
                let report = travel::run_customer(&agency, &dest, &plan)?;
                for q in &report.quotes {
                    println!("quote {q}");
                }
                match report.outcome {
                    CustomerOutcome::Booked(date) => println!("booked {dest} on {date}"),
                    CustomerOutcome::Quit => println!("quit"),
                    CustomerOutcome::Cancelled => println!("cancelled"),
                }
            }
            Role::Agency => {
                let addr = bind_address(listen.as_deref(), "127.0.0.1:8888");
                let airline = peer_address(peer.as_deref(), "127.0.0.1:9999");
                let listener = travel::serve_agency(&addr, &airline, |_, _| {})?;
                serve_until(&listener, sessions);
            }
            Role::Airline => {
                let addr = bind_address(listen.as_deref(), "127.0.0.1:9999");
                let listener = travel::serve_airline(&addr, Duration::from_millis(delay_ms))?;
                serve_until(&listener, sessions);
            }
        },
    }
    Ok(())
}

fn serve_until(listener: &sessio::Listener, sessions: Option<usize>) {
    use std::io::Write;
    println!("listening on {}", listener.local_addr());
    let _ = std::io::stdout().flush();
    listener.wait_served(sessions.unwrap_or(usize::MAX), None);
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let result = run(Cli::parse());
    let pending = sessio::pending_tokens();
    if pending > 0 {
        warn!("{pending} delayed receptions never completed");
    }
    result
}
