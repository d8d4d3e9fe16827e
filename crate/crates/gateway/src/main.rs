use std::fs::File;
use std::io::{BufWriter, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{anyhow, bail, Context, Result};
use bookbot_core::circulation::{mint_token, parse_log, replay, CirculationEvent, EventLog, LoanStatus, Millis};
use bookbot_core::scenario::Scenario;
use bookbot_core::symbology::{
    decode_ean13, decode_qr, encode_ean13, encode_qr, read_pbm, read_pgm, write_pbm, write_pgm, EcLevel,
};
use bookbot_core::teleop::AuthToken;
use bookbot_gateway::engine::{rfc3339, Engine, EngineOptions, Store, TICK_MS};
use bookbot_gateway::{api, runtime, script, teleop_server};
use chrono::DateTime;
use clap::{Parser, Subcommand};
use serde_json::json;
use tokio::sync::watch;

#[derive(Parser)]
#[command(name = "bookbot", version, about = "Library book bot gateway and tools")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the simulation with the HTTP API and teleop listener, or headless with --script.
    Serve(ServeArgs),
    /// Barcode and QR tools.
    #[command(subcommand)]
    Codec(CodecCmd),
    /// Print a signed student QR token.
    MintToken {
        #[arg(long)]
        student: String,
        /// Lifetime in seconds.
        #[arg(long)]
        ttl: i64,
        /// Issue time (RFC 3339); defaults to now.
        #[arg(long)]
        now: Option<String>,
        #[arg(long, default_value = "BOOKBOT_TOKEN")]
        token_env: String,
        /// Also write the token as a QR code (PBM).
        #[arg(long)]
        qr_out: Option<PathBuf>,
    },
    /// Rebuild circulation state from an event log and print it.
    Replay {
        #[arg(long)]
        store: PathBuf,
        /// Scenario whose catalog and roster seed the replay.
        #[arg(long)]
        scenario: Option<PathBuf>,
    },
    /// Validate a scenario file and its catalog and roster.
    ScenarioCheck { file: PathBuf },
}

#[derive(clap::Args)]
struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:8080")]
    listen: SocketAddr,
    #[arg(long, default_value_t = 9443)]
    teleop_port: u16,
    #[arg(long)]
    scenario: PathBuf,
    /// Append-only event log; in-memory when omitted.
    #[arg(long)]
    store: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Environment variable holding the 32-character gateway token.
    #[arg(long, default_value = "BOOKBOT_TOKEN")]
    token_env: String,
    /// Simulated clock at tick 0 (RFC 3339). Defaults to the scenario's
    /// clock_start, then to the wall clock when serving.
    #[arg(long)]
    clock_start: Option<String>,
    /// Run a command file headless instead of serving.
    #[arg(long)]
    script: Option<PathBuf>,
    /// Telemetry JSON lines from a --script run.
    #[arg(long, requires = "script")]
    telemetry_out: Option<PathBuf>,
    /// Reply JSON lines from a --script run; stdout when omitted.
    #[arg(long, requires = "script")]
    replies_out: Option<PathBuf>,
    /// Static console build to serve at /.
    #[arg(long)]
    console_dir: Option<PathBuf>,
}

#[derive(Subcommand)]
enum CodecCmd {
    /// Render 13 digits as a PGM scanline.
    EncodeEan13 {
        digits: String,
        #[arg(long, default_value_t = 2)]
        module_width: usize,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Decode a PGM scanline.
    DecodeEan13 { file: PathBuf },
    /// Render text as a QR code (PBM).
    EncodeQr {
        text: String,
        #[arg(long, default_value_t = 2)]
        version: u8,
        #[arg(long, default_value = "M", value_parser = parse_ec)]
        ec: EcLevel,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Decode a PBM QR code.
    DecodeQr { file: PathBuf },
}

fn parse_ec(s: &str) -> Result<EcLevel, String> {
    match s {
        "L" | "l" => Ok(EcLevel::L),
        "M" | "m" => Ok(EcLevel::M),
        "Q" | "q" => Ok(EcLevel::Q),
        "H" | "h" => Ok(EcLevel::H),
        _ => Err(format!("unknown EC level {s:?}; use L, M, Q or H")),
    }
}

fn parse_time(s: &str) -> Result<Millis> {
    Ok(DateTime::parse_from_rfc3339(s)
        .with_context(|| format!("bad timestamp {s:?}"))?
        .timestamp_millis())
}

fn load_token(var: &str) -> Result<AuthToken> {
    let raw = std::env::var(var).with_context(|| format!("environment variable {var} is not set"))?;
    AuthToken::new(&raw).map_err(|e| anyhow!("{var}: {e}"))
}

fn load_scenario(path: &Path) -> Result<(Scenario, bookbot_core::circulation::Seed)> {
    let scenario = Scenario::load(path).with_context(|| format!("loading scenario {}", path.display()))?;
    let seed = scenario.load_seed().context("loading catalog and roster")?;
    Ok((scenario, seed))
}

fn build_engine(args: &ServeArgs, token: &AuthToken, headless: bool) -> Result<Engine> {
    let (scenario, seed) = load_scenario(&args.scenario)?;
    let clock_start = match (&args.clock_start, scenario.clock_start) {
        (Some(s), _) => parse_time(s)?,
        (None, Some(t)) => t,
        (None, None) if headless => bail!("--script needs --clock-start or a scenario clock_start"),
        (None, None) => chrono::Utc::now().timestamp_millis(),
    };
    let (store, existing) = match &args.store {
        Some(path) => {
            let (log, events) = EventLog::open(path).with_context(|| format!("opening store {}", path.display()))?;
            (Store::File(log), events)
        }
        None => (Store::Memory(Vec::new()), Vec::new()),
    };
    let opts = EngineOptions {
        seed: args.seed,
        clock_start_ms: clock_start,
        secret: token.as_str().as_bytes().to_vec(),
    };
    Engine::new(scenario, &seed, store, &existing, opts).context("replaying the event log")
}

fn run_script(args: &ServeArgs, path: &Path) -> Result<()> {
    let token = load_token(&args.token_env)?;
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let lines = script::parse_script(&text).with_context(|| format!("parsing {}", path.display()))?;
    let mut engine = build_engine(args, &token, true)?;
    let mut telemetry: Box<dyn Write> = match &args.telemetry_out {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(std::io::sink()),
    };
    let mut replies: Box<dyn Write> = match &args.replies_out {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(std::io::stdout().lock()),
    };
    let ticks = script::run_script(&mut engine, &lines, &mut telemetry, &mut replies)?;
    tracing::info!(ticks, "script finished");
    Ok(())
}

async fn serve(args: ServeArgs) -> Result<()> {
    let token = load_token(&args.token_env)?;
    let engine = build_engine(&args, &token, false)?;
    let http = tokio::net::TcpListener::bind(args.listen)
        .await
        .with_context(|| format!("binding {}", args.listen))?;
    let teleop_addr = SocketAddr::new(args.listen.ip(), args.teleop_port);
    let teleop = tokio::net::TcpListener::bind(teleop_addr)
        .await
        .with_context(|| format!("binding {teleop_addr}"))?;
    tracing::info!(http = %http.local_addr()?, teleop = %teleop.local_addr()?, "gateway listening");

    let (stop_tx, stop_rx) = watch::channel(false);
    let (hub, sim) = runtime::spawn(engine, Duration::from_millis(TICK_MS as u64), stop_rx.clone());
    let teleop_task = tokio::spawn(teleop_server::serve(teleop, hub.clone(), token, stop_rx.clone()));
    let app = api::router(hub, args.console_dir.clone());
    let mut http_stop = stop_rx.clone();
    let http_task = tokio::spawn(async move {
        axum::serve(http, app)
            .with_graceful_shutdown(async move {
                let _ = http_stop.wait_for(|s| *s).await;
            })
            .await
    });

    shutdown_signal().await;
    tracing::info!("shutting down");
    let _ = stop_tx.send(true);
    let _ = teleop_task.await;
    // Streaming responses never finish on their own.
    if tokio::time::timeout(Duration::from_secs(2), http_task).await.is_err() {
        tracing::warn!("http connections still open at shutdown");
    }
    let engine = sim.await.context("simulation task panicked")?;
    drop(engine);
    Ok(())
}

async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let term = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending().await,
        }
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {}
        _ = term => {}
    }
}

fn codec(cmd: CodecCmd) -> Result<()> {
    match cmd {
        CodecCmd::EncodeEan13 {
            digits,
            module_width,
            out,
        } => {
            let scan = encode_ean13(&digits, module_width)?;
            std::fs::write(&out, write_pgm(&scan)).with_context(|| format!("writing {}", out.display()))?;
        }
        CodecCmd::DecodeEan13 { file } => {
            let bytes = std::fs::read(&file).with_context(|| format!("reading {}", file.display()))?;
            let r = decode_ean13(&read_pgm(&bytes)?)?;
            println!("{}", String::from_utf8_lossy(&r.data));
        }
        CodecCmd::EncodeQr { text, version, ec, out } => {
            let m = encode_qr(text.as_bytes(), version, ec)?;
            std::fs::write(&out, write_pbm(&m)).with_context(|| format!("writing {}", out.display()))?;
        }
        CodecCmd::DecodeQr { file } => {
            let bytes = std::fs::read(&file).with_context(|| format!("reading {}", file.display()))?;
            let r = decode_qr(&read_pbm(&bytes)?)?;
            println!("{}", String::from_utf8_lossy(&r.data));
        }
    }
    Ok(())
}

fn replay_cmd(store: &Path, scenario: Option<&Path>) -> Result<()> {
    let bytes = std::fs::read(store).with_context(|| format!("reading {}", store.display()))?;
    let parsed = parse_log(&bytes)?;
    if parsed.dropped_tail {
        eprintln!("warning: ignoring a torn final line");
    }
    let out = match scenario {
        Some(path) => {
            let (_, seed) = load_scenario(path)?;
            let lib = replay(&seed, &parsed.events)?;
            let state = lib.state();
            let loans: Vec<_> = state
                .loans
                .values()
                .map(|l| {
                    json!({
                        "loan_id": l.loan_id,
                        "student_id": l.student_id,
                        "barcode": l.barcode,
                        "status": status_str(l.status),
                        "issued_at": rfc3339(l.issued_at),
                        "due_at": rfc3339(l.due_at),
                        "renewal_count": l.renewal_count,
                    })
                })
                .collect();
            json!({
                "events": parsed.events.len(),
                "loans": loans,
                "held": state.held,
                "inventory_grams": state.inventory_grams,
            })
        }
        None => log_only_summary(&parsed.events),
    };
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(())
}

fn status_str(s: LoanStatus) -> &'static str {
    match s {
        LoanStatus::Active => "active",
        LoanStatus::Submitted => "submitted",
    }
}

/// Loan outcomes visible from the log alone, without the seed.
fn log_only_summary(events: &[CirculationEvent]) -> serde_json::Value {
    let mut loans = std::collections::BTreeMap::new();
    let mut held: Vec<String> = Vec::new();
    for e in events {
        match e {
            CirculationEvent::Submitted {
                loan_id,
                student_id,
                book_barcode,
                timestamp,
                ..
            } => {
                loans.insert(
                    loan_id.clone(),
                    json!({
                        "loan_id": loan_id,
                        "student_id": student_id,
                        "barcode": book_barcode,
                        "status": "submitted",
                        "submitted_at": rfc3339(*timestamp),
                    }),
                );
                held.push(book_barcode.clone());
            }
            CirculationEvent::ReIssued {
                loan_id,
                student_id,
                book_barcode,
                due_at,
                ..
            } => {
                loans.insert(
                    loan_id.clone(),
                    json!({
                        "loan_id": loan_id,
                        "student_id": student_id,
                        "barcode": book_barcode,
                        "status": "active",
                        "due_at": rfc3339(*due_at),
                    }),
                );
            }
            CirculationEvent::Unloaded { books, .. } => held.retain(|b| !books.contains(b)),
        }
    }
    json!({
        "events": events.len(),
        "loans": loans.into_values().collect::<Vec<_>>(),
        "held": held,
    })
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Cmd::Serve(args) => match args.script.clone() {
            Some(path) => run_script(&args, &path),
            None => tokio::runtime::Builder::new_multi_thread()
                .enable_all()
                .build()?
                .block_on(serve(args)),
        },
        Cmd::Codec(c) => codec(c),
        Cmd::MintToken {
            student,
            ttl,
            now,
            token_env,
            qr_out,
        } => {
            let token = load_token(&token_env)?;
            let now_ms = match now {
                Some(s) => parse_time(&s)?,
                None => chrono::Utc::now().timestamp_millis(),
            };
            let text = mint_token(&student, now_ms.div_euclid(1000) + ttl, token.as_str().as_bytes())?;
            if let Some(path) = qr_out {
                let m = encode_qr(text.as_bytes(), 3, EcLevel::M)?;
                std::fs::write(&path, write_pbm(&m)).with_context(|| format!("writing {}", path.display()))?;
            }
            println!("{text}");
            Ok(())
        }
        Cmd::Replay { store, scenario } => replay_cmd(&store, scenario.as_deref()),
        Cmd::ScenarioCheck { file } => {
            let (scenario, seed) = load_scenario(&file)?;
            println!(
                "ok: {} ({} books, {} students, {} loans, {} obstacles)",
                scenario.bot_id,
                seed.books.len(),
                seed.students.len(),
                seed.loans.len(),
                scenario.world.obstacles.len()
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .with_writer(std::io::stderr)
        .init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
