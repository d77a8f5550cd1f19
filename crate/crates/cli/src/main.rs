use std::fs;
use std::net::{TcpListener, TcpStream};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use secinfer::bench::{self, BenchConfig, BenchReport};
use secinfer::modarith::{PrimeSearch, Reducer, RingParams};
use secinfer::protocol::{classify, random_image, serve, FixedPoint, Network, SessionConfig};
use secinfer::reference;

#[derive(Parser)]
#[command(
    name = "secinfer",
    version,
    about = "Two-party neural network inference: parameters, server, client and benchmarks"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parameter utilities.
    Params {
        #[command(subcommand)]
        cmd: ParamsCmd,
    },
    /// Serve inference requests for a network (server role).
    Serve {
        #[arg(long)]
        network: PathBuf,
        #[arg(long, default_value = "127.0.0.1:7700")]
        listen: String,
        /// Exit after one session.
        #[arg(long)]
        once: bool,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        dump_transcript: Option<PathBuf>,
    },
    /// Classify an input against a remote server (client role).
    Classify {
        /// JSON array of integers (residues or signed values).
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "127.0.0.1:7700")]
        connect: String,
        #[arg(long)]
        seed: Option<u64>,
        /// Write the message log as JSON lines.
        #[arg(long)]
        dump_transcript: Option<PathBuf>,
        /// Print the output as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Write a desk-scale example network with random weights.
    Network {
        #[arg(value_enum)]
        kind: DeskNet,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a random MNIST-shaped input for a network.
    Image {
        #[arg(long)]
        network: PathBuf,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate a network on an input in the clear.
    Reference {
        #[arg(long)]
        network: PathBuf,
        #[arg(long)]
        input: PathBuf,
    },
    /// Run a benchmark suite.
    Bench {
        #[arg(value_enum)]
        suite: Suite,
        /// One JSON object per line instead of a table.
        #[arg(long)]
        json: bool,
        #[arg(long, default_value_t = 5)]
        trials: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Let kernels use all cores (default: one thread per timed body).
        #[arg(long)]
        parallel: bool,
    },
}

#[derive(Subcommand)]
enum ParamsCmd {
    /// Search for a reduction-friendly (p, q) pair.
    Find {
        #[arg(long)]
        log_p: u32,
        /// Cyclotomic order (twice the ring degree).
        #[arg(long, default_value_t = 4096)]
        m: u64,
        #[arg(long, default_value_t = 4)]
        r_bound: u32,
    },
    /// Print the standard parameter set.
    Show,
}

#[derive(Clone, Copy, ValueEnum)]
enum DeskNet {
    A,
    D,
}

#[derive(Clone, Copy, ValueEnum)]
enum Suite {
    Primitives,
    Matvec,
    Conv,
    Act,
    Net,
}

type Res<T> = Result<T, Box<dyn std::error::Error>>;

fn read_network(path: &PathBuf) -> Res<Network> {
    Ok(Network::from_json(&fs::read_to_string(path)?)?)
}

fn read_input(path: &PathBuf, p: u64) -> Res<Vec<u64>> {
    let vals: Vec<i64> = serde_json::from_str(&fs::read_to_string(path)?)?;
    let fp = FixedPoint::new(p, 0);
    vals.iter()
        .map(|&v| {
            fp.encode_int(v)
                .ok_or_else(|| format!("input value {v} out of range for p = {p}").into())
        })
        .collect()
}

/// `q` as `2^60 - 2^k·c + 1` with `2^k` the 2-part of `m`.
fn q_form(q: u64, m: u64) -> String {
    let delta = (1u64 << 60) - q + 1;
    let k = m.trailing_zeros().min(delta.trailing_zeros());
    format!("2^60 - 2^{k}*{} + 1", delta >> k)
}

fn print_reports(reports: &[BenchReport], json: bool) {
    if json {
        print!("{}", bench::json_lines(reports));
    } else {
        let cpu = fs::read_to_string("/proc/cpuinfo")
            .ok()
            .and_then(|s| {
                s.lines()
                    .find(|l| l.starts_with("model name"))
                    .and_then(|l| l.split(':').nth(1))
                    .map(|s| s.trim().to_string())
            })
            .unwrap_or_else(|| "unknown cpu".into());
        println!("# {cpu}, {} worker threads", secinfer::par::threads());
        print!("{}", bench::table(reports));
    }
}

fn run(cli: Cli) -> Res<()> {
    match cli.cmd {
        Cmd::Params {
            cmd: ParamsCmd::Find { log_p, m, r_bound },
        } => {
            let start = std::time::Instant::now();
            let pair = PrimeSearch::new(log_p, m, r_bound).run()?;
            let q = pair.q.value();
            println!(
                "log_p={log_p} m={m} p={} q={q} ({}) |r|={} candidates={} time_ms={:.0}",
                pair.p.value(),
                q_form(q, m),
                pair.r.abs(),
                pair.candidates_examined,
                start.elapsed().as_secs_f64() * 1e3
            );
        }
        Cmd::Params {
            cmd: ParamsCmd::Show,
        } => {
            let params = RingParams::standard();
            println!(
                "n={} p={} q={} ({}) r={} sigma={} line_bits={:.2}",
                params.n,
                params.p.value(),
                params.q.value(),
                q_form(params.q.value(), params.m as u64),
                params.r,
                params.sigma,
                params.correctness_line_bits()
            );
        }
        Cmd::Serve {
            network,
            listen,
            once,
            seed,
            dump_transcript,
        } => {
            let net = read_network(&network)?;
            let listener = TcpListener::bind(&listen)?;
            eprintln!("listening on {}", listener.local_addr()?);
            for stream in listener.incoming() {
                let stream = stream?;
                let peer = stream.peer_addr()?;
                stream.set_nodelay(true)?;
                let cfg = SessionConfig {
                    seed,
                    ..Default::default()
                };
                match serve(&net, stream, &cfg) {
                    Ok(report) => {
                        eprintln!("{peer}: session complete");
                        for r in &report.sent {
                            eprintln!(
                                "  step {} ct {}: noise {:.1} of {:.1} bits",
                                r.step, r.ct, r.bits, report.line_bits
                            );
                        }
                        if let Some(path) = &dump_transcript {
                            fs::write(path, report.transcript.to_json_lines())?;
                        }
                    }
                    Err(e) => eprintln!("{peer}: {e}"),
                }
                if once {
                    break;
                }
            }
        }
        Cmd::Classify {
            input,
            connect,
            seed,
            dump_transcript,
            json,
        } => {
            let cfg = SessionConfig {
                seed,
                ..Default::default()
            };
            let x = read_input(&input, cfg.params.p.value())?;
            let stream = TcpStream::connect(&connect)?;
            stream.set_nodelay(true)?;
            let report = classify(&x, stream, &cfg)?;
            if let Some(path) = &dump_transcript {
                fs::write(path, report.transcript.to_json_lines())?;
            }
            let fp = FixedPoint::new(cfg.params.p.value(), 0);
            let signed: Vec<i64> = report.output.iter().map(|&v| fp.decode_int(v)).collect();
            if json {
                println!("{}", serde_json::to_string(&signed)?);
            } else {
                let best = signed
                    .iter()
                    .enumerate()
                    .max_by_key(|(_, v)| **v)
                    .map(|(i, _)| i)
                    .unwrap_or(0);
                println!("output: {signed:?}");
                println!("class: {best}");
            }
        }
        Cmd::Network { kind, seed, out } => {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let p = RingParams::standard().p.value();
            let net = match kind {
                DeskNet::A => Network::desk_a(p, &mut rng),
                DeskNet::D => Network::desk_d(p, &mut rng),
            };
            fs::write(out, net.to_json())?;
        }
        Cmd::Image { network, seed, out } => {
            let net = read_network(&network)?;
            let x = random_image(net.input, &mut ChaCha20Rng::seed_from_u64(seed));
            fs::write(out, serde_json::to_string(&x)?)?;
        }
        Cmd::Reference { network, input } => {
            let net = read_network(&network)?;
            let x = read_input(&input, net.modulus)?;
            let fp = FixedPoint::new(net.modulus, 0);
            let out: Vec<i64> = reference::evaluate(&net, &x)?
                .into_iter()
                .map(|v| fp.decode_int(v))
                .collect();
            println!("{}", serde_json::to_string(&out)?);
        }
        Cmd::Bench {
            suite,
            json,
            trials,
            seed,
            parallel,
        } => {
            let cfg = BenchConfig {
                trials,
                seed,
                parallel,
            };
            let reports = match suite {
                Suite::Primitives => bench::bench_primitives(&cfg)?,
                Suite::Matvec => bench::bench_matvec(&cfg)?,
                Suite::Conv => bench::bench_conv(&cfg)?,
                Suite::Act => bench::bench_activations(&cfg)?,
                Suite::Net => bench::bench_net(&cfg)?,
            };
            print_reports(&reports, json);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
