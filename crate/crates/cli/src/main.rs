// SPDX-License-Identifier: Apache-2.0

//! `pepsi` command-line tool.
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 on protocol or format errors.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pepsi_core::authority::{export_key, IssuedKey, Ledger, MasterSecret, RegistrationAuthority};
use pepsi_core::bench::{bench_report, DEFAULT_TRIALS};
use pepsi_core::broker::{Delivery, SubscriptionTable};
use pepsi_core::label::canonicalize;
use pepsi_core::node::MobileNode;
use pepsi_core::querier::Querier;
use pepsi_core::sim::{run_scenario, ScenarioConfig};
use pepsi_core::wire::REPORT_MAGIC;
use pepsi_core::{Error, NodeKey, QuerierKey};
use rand::rngs::OsRng;
use rand::{CryptoRng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

#[derive(Parser)]
#[command(name = "pepsi", version, about = "Privacy-enhanced participatory sensing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Registration authority (offline).
    #[command(subcommand)]
    Ra(RaCommand),
    /// Mobile node.
    #[command(subcommand)]
    Node(NodeCommand),
    /// Querier.
    #[command(subcommand)]
    Querier(QuerierCommand),
    /// Service provider.
    #[command(subcommand)]
    Sp(SpCommand),
    /// End-to-end simulation.
    #[command(subcommand)]
    Sim(SimCommand),
    /// Benchmarks.
    #[command(subcommand)]
    Bench(BenchCommand),
}

#[derive(Args)]
struct Passphrase {
    /// Passphrase protecting the master key file.
    #[arg(long, env = "PEPSI_PASSPHRASE", default_value = "", hide_env_values = true)]
    passphrase: String,
}

#[derive(Args)]
struct Registration {
    /// Master key file written by `ra setup`.
    #[arg(long)]
    master: PathBuf,
    /// One keyword; repeat for multi-keyword labels.
    #[arg(long = "label", required = true)]
    keywords: Vec<String>,
    /// Party identifier recorded in the ledger.
    #[arg(long)]
    id: String,
    #[arg(long)]
    out: PathBuf,
    /// Append-only issuance ledger.
    #[arg(long)]
    ledger: Option<PathBuf>,
    #[command(flatten)]
    passphrase: Passphrase,
}

#[derive(Subcommand)]
enum RaCommand {
    /// Generate a master secret.
    Setup {
        /// Seed for reproducible output; omit to use the OS rng.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        passphrase: Passphrase,
    },
    /// Issue a node (tagging) key for a label.
    RegisterNode(Registration),
    /// Issue a querier (decryption) key for a label.
    RegisterQuerier(Registration),
}

#[derive(Subcommand)]
enum NodeCommand {
    /// Tag and encrypt one measurement into a report frame.
    Report {
        #[arg(long)]
        key: PathBuf,
        #[arg(long, conflicts_with = "payload_file", required_unless_present = "payload_file")]
        payload: Option<String>,
        #[arg(long)]
        payload_file: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Seed for the nonce; omit to use the OS rng.
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Subcommand)]
enum QuerierCommand {
    /// Write a subscription frame for the key's label.
    Subscribe {
        #[arg(long)]
        key: PathBuf,
        #[arg(long)]
        endpoint: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Decrypt a report frame or a delivery file.
    Decrypt {
        #[arg(long)]
        key: PathBuf,
        #[arg(long)]
        report: PathBuf,
        /// Write the raw payload here instead of printing it.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum SpCommand {
    /// Load subscriptions, match reports in order, and emit deliveries.
    Run {
        #[arg(long = "subscription")]
        subscriptions: Vec<PathBuf>,
        #[arg(long = "report")]
        reports: Vec<PathBuf>,
        /// Directory for delivery files (u64 subscription id + report frame).
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum SimCommand {
    /// Run a scenario file and compare against the plaintext oracle.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Subcommand)]
enum BenchCommand {
    /// Time report construction.
    Report {
        #[arg(long, default_value_t = DEFAULT_TRIALS)]
        trials: usize,
        #[arg(long, default_value_t = 4)]
        payload_size: usize,
        /// Reuse the cached shared secret instead of pairing per report.
        #[arg(long)]
        warm: bool,
    },
}

enum Failure {
    Usage(String),
    Protocol(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::EmptyLabel
            | Error::KeywordTooLong(_)
            | Error::TooManyKeywords(_)
            | Error::InvalidPartyId(_)
            | Error::EmptyPayload
            | Error::PayloadTooLarge(_)
            | Error::ConfigInvalid(_) => Failure::Usage(e.to_string()),
            _ => Failure::Protocol(e.to_string()),
        }
    }
}

fn read(path: &Path) -> Result<Vec<u8>, Failure> {
    fs::read(path).map_err(|e| Failure::Protocol(format!("{}: {e}", path.display())))
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    fs::write(path, bytes).map_err(|e| Failure::Protocol(format!("{}: {e}", path.display())))
}

fn rng_for(seed: Option<u64>) -> Box<dyn RngCoreCrypto> {
    match seed {
        Some(s) => Box::new(ChaCha20Rng::seed_from_u64(s)),
        None => Box::new(OsRng),
    }
}

trait RngCoreCrypto: RngCore + CryptoRng {}
impl<T: RngCore + CryptoRng> RngCoreCrypto for T {}

fn register(reg: &Registration, role_is_node: bool) -> Result<(), Failure> {
    let label = canonicalize(&reg.keywords)?;
    let master = MasterSecret::unseal(&read(&reg.master)?, reg.passphrase.passphrase.as_bytes())?;
    let ledger = match &reg.ledger {
        Some(p) => Ledger::open(p)?,
        None => Ledger::in_memory(),
    };
    let mut ra = RegistrationAuthority::new(master, ledger);
    let key: IssuedKey = if role_is_node {
        ra.register_node(&label, &reg.id)?.into()
    } else {
        ra.register_querier(&label, &reg.id)?.into()
    };
    export_key(&key, &reg.out)?;
    println!("role={}", key.role());
    println!("label={}", label);
    println!("out={}", reg.out.display());
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Ra(RaCommand::Setup {
            seed,
            out,
            passphrase,
        }) => {
            let mut rng = rng_for(seed);
            let (master, params) = pepsi_core::authority::setup(&mut rng);
            master.save(&out, passphrase.passphrase.as_bytes(), &mut rng)?;
            println!("curve={}", params.curve_id);
            println!("protocol_version={}", params.protocol_version);
            println!("out={}", out.display());
        }
        Command::Ra(RaCommand::RegisterNode(reg)) => register(&reg, true)?,
        Command::Ra(RaCommand::RegisterQuerier(reg)) => register(&reg, false)?,

        Command::Node(NodeCommand::Report {
            key,
            payload,
            payload_file,
            out,
            seed,
        }) => {
            let key = NodeKey::from_bytes(&read(&key)?)?;
            let payload = match (payload, payload_file) {
                (Some(p), _) => p.into_bytes(),
                (None, Some(path)) => read(&path)?,
                (None, None) => unreachable!("clap requires one payload source"),
            };
            let node = MobileNode::new(key);
            let frame = node.report_frame(&payload, &mut rng_for(seed))?;
            write(&out, &frame)?;
            println!("tag={}", node.tag());
            println!("bytes={}", frame.len());
            println!("out={}", out.display());
        }

        Command::Querier(QuerierCommand::Subscribe { key, endpoint, out }) => {
            let querier = Querier::new(QuerierKey::from_bytes(&read(&key)?)?);
            let frame = querier.subscription(endpoint)?.encode();
            write(&out, &frame)?;
            println!("tag={}", querier.tag());
            println!("out={}", out.display());
        }
        Command::Querier(QuerierCommand::Decrypt { key, report, out }) => {
            let querier = Querier::new(QuerierKey::from_bytes(&read(&key)?)?);
            let bytes = read(&report)?;
            // Accept either a bare report frame or an SP delivery file.
            let frame = match Delivery::split(&bytes) {
                Some((id, frame)) if !bytes.starts_with(&REPORT_MAGIC) => {
                    println!("subscription_id={id}");
                    frame
                }
                _ => &bytes[..],
            };
            let m = querier.decrypt_frame(frame)?;
            match out {
                Some(path) => {
                    write(&path, m.as_bytes())?;
                    println!("out={}", path.display());
                }
                None => match std::str::from_utf8(m.as_bytes()) {
                    Ok(text) => println!("payload={text}"),
                    Err(_) => println!("payload_hex={}", hex::encode(m.as_bytes())),
                },
            }
        }

        Command::Sp(SpCommand::Run {
            subscriptions,
            reports,
            out_dir,
        }) => {
            let table = SubscriptionTable::new();
            for path in &subscriptions {
                let id = table
                    .subscribe(&read(path)?)
                    .map_err(|e| Failure::Protocol(format!("{}: {e}", path.display())))?;
                println!("subscribed={id} file={}", path.display());
            }
            if let Some(dir) = &out_dir {
                fs::create_dir_all(dir)
                    .map_err(|e| Failure::Protocol(format!("{}: {e}", dir.display())))?;
            }
            let mut seq = 0usize;
            for path in &reports {
                let deliveries = table
                    .match_report(&read(path)?)
                    .map_err(|e| Failure::Protocol(format!("{}: {e}", path.display())))?;
                for d in deliveries {
                    seq += 1;
                    let endpoint = String::from_utf8_lossy(&d.endpoint);
                    match &out_dir {
                        Some(dir) => {
                            let file = dir.join(format!("delivery-{seq}.bin"));
                            write(&file, &d.encode())?;
                            println!(
                                "delivery={seq} subscription_id={} endpoint={endpoint} file={}",
                                d.subscription_id,
                                file.display()
                            );
                        }
                        None => println!(
                            "delivery={seq} subscription_id={} endpoint={endpoint}",
                            d.subscription_id
                        ),
                    }
                }
            }
            let stats = table.stats();
            println!("reports_seen={}", stats.reports_seen);
            println!("matches_made={}", stats.matches_made);
            println!("subs_active={}", stats.subs_active);
        }

        Command::Sim(SimCommand::Run { config }) => {
            let cfg = ScenarioConfig::load(&config).map_err(|e| match e {
                Error::Io(io) => Failure::Usage(format!("{}: {io}", config.display())),
                other => other.into(),
            })?;
            let result = run_scenario(&cfg)?;
            println!("{}", result.to_kv_lines());
            if !result.is_sound() {
                return Err(Failure::Protocol("scenario deviated from the oracle".into()));
            }
        }

        Command::Bench(BenchCommand::Report {
            trials,
            payload_size,
            warm,
        }) => {
            let result = bench_report(trials, payload_size, !warm)?;
            println!("{}", result.to_kv_lines());
        }
    }
    Ok(())
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
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Protocol(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
