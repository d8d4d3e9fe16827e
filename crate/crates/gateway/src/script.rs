//! Headless runs driven by a command file.
//!
//! One command per line, scheduled by tick:
//!
//! ```text
//! # comment
//! @0    kiosk-qr mint:grace2019:120
//! @0    kiosk-barcode 9780262033848
//! @1    kiosk-action L1 submit
//! @10   drive N
//! @40   drive STOP
//! @41   dock
//! @41   unload
//! @60   end
//! ```
//!
//! Commands scheduled for tick `t` run before tick `t + 1` is simulated.
//! `kiosk-qr` accepts `mint:<student>:<ttl_s>` (signed at the simulated
//! time) or `token:<text>`. Later kiosk commands use the most recent
//! session.

use std::io::Write;

use bookbot_core::botsim::Direction;
use bookbot_core::circulation::mint_token;
use thiserror::Error;

use crate::engine::{ApiError, BarcodeInput, Command, Engine, KioskAction, QrInput, Reply};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ScriptError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("script has no `end` line")]
    MissingEnd,
    #[error("output error: {0}")]
    Output(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScriptAction {
    Drive(Direction),
    KioskQrMint { student: String, ttl_s: i64 },
    KioskQrToken(String),
    KioskBarcode(String),
    KioskAction { loan_id: String, action: KioskAction },
    Dock(bool),
    Unload,
    DeviceDrop,
    End,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScriptLine {
    pub line: usize,
    pub tick: u64,
    pub action: ScriptAction,
}

pub fn parse_script(text: &str) -> Result<Vec<ScriptLine>, ScriptError> {
    let mut out: Vec<ScriptLine> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let err = |message: String| ScriptError::Syntax { line, message };
        let mut words = content.split_whitespace();
        let at = words.next().expect("non-empty line");
        let tick: u64 = at
            .strip_prefix('@')
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| err(format!("expected @<tick>, got {at:?}")))?;
        if out.last().is_some_and(|l| l.tick > tick) {
            return Err(err("ticks must not decrease".into()));
        }
        let verb = words.next().ok_or_else(|| err("missing command".into()))?;
        let args: Vec<&str> = words.collect();
        let want = |n: usize| {
            if args.len() == n {
                Ok(())
            } else {
                Err(err(format!("{verb} takes {n} argument(s)")))
            }
        };
        let action = match verb {
            "drive" => {
                want(1)?;
                ScriptAction::Drive(args[0].parse().map_err(|e| err(format!("{e}")))?)
            }
            "kiosk-qr" => {
                want(1)?;
                if let Some(rest) = args[0].strip_prefix("mint:") {
                    let (student, ttl) = rest
                        .rsplit_once(':')
                        .ok_or_else(|| err("expected mint:<student>:<ttl_s>".into()))?;
                    ScriptAction::KioskQrMint {
                        student: student.to_string(),
                        ttl_s: ttl.parse().map_err(|_| err(format!("bad ttl {ttl:?}")))?,
                    }
                } else if let Some(tok) = args[0].strip_prefix("token:") {
                    ScriptAction::KioskQrToken(tok.to_string())
                } else {
                    return Err(err("kiosk-qr takes mint:<student>:<ttl_s> or token:<text>".into()));
                }
            }
            "kiosk-barcode" => {
                want(1)?;
                ScriptAction::KioskBarcode(args[0].to_string())
            }
            "kiosk-action" => {
                want(2)?;
                let action = match args[1] {
                    "submit" => KioskAction::Submit,
                    "renew" => KioskAction::Renew,
                    other => return Err(err(format!("unknown kiosk action {other:?}"))),
                };
                ScriptAction::KioskAction {
                    loan_id: args[0].to_string(),
                    action,
                }
            }
            "dock" => {
                want(0)?;
                ScriptAction::Dock(true)
            }
            "undock" => {
                want(0)?;
                ScriptAction::Dock(false)
            }
            "unload" => {
                want(0)?;
                ScriptAction::Unload
            }
            "device-drop" => {
                want(0)?;
                ScriptAction::DeviceDrop
            }
            "end" => {
                want(0)?;
                ScriptAction::End
            }
            other => return Err(err(format!("unknown command {other:?}"))),
        };
        out.push(ScriptLine { line, tick, action });
    }
    if !out.iter().any(|l| l.action == ScriptAction::End) {
        return Err(ScriptError::MissingEnd);
    }
    Ok(out)
}

#[derive(serde::Serialize)]
struct ReplyLine<'a> {
    tick: u64,
    line: usize,
    status: u16,
    #[serde(skip_serializing_if = "Option::is_none")]
    body: Option<&'a Reply>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<&'a ApiError>,
}

/// Runs `script` to its `end` line. Telemetry snapshots go to `telemetry`
/// and one reply document per command goes to `replies`, both as JSON lines.
pub fn run_script(
    engine: &mut Engine,
    script: &[ScriptLine],
    telemetry: &mut dyn Write,
    replies: &mut dyn Write,
) -> Result<u64, ScriptError> {
    let io = |e: std::io::Error| ScriptError::Output(e.to_string());
    let mut session: Option<String> = None;
    let mut pending = script.iter().peekable();
    loop {
        let tick = engine.tick_count();
        while let Some(l) = pending.next_if(|l| l.tick <= tick) {
            let cmd = match &l.action {
                ScriptAction::End => {
                    telemetry.flush().map_err(io)?;
                    replies.flush().map_err(io)?;
                    return Ok(tick);
                }
                ScriptAction::Drive(d) => Command::Drive(*d),
                ScriptAction::KioskQrMint { student, ttl_s } => {
                    let expiry = engine.now().div_euclid(1000) + ttl_s;
                    match mint_token(student, expiry, engine.secret()) {
                        Ok(tok) => Command::KioskQr(QrInput::Token(tok)),
                        Err(e) => Command::KioskQr(QrInput::Token(format!("unmintable:{e}"))),
                    }
                }
                ScriptAction::KioskQrToken(t) => Command::KioskQr(QrInput::Token(t.clone())),
                ScriptAction::KioskBarcode(d) => Command::KioskBarcode {
                    session: session.clone().unwrap_or_default(),
                    input: BarcodeInput::Digits(d.clone()),
                },
                ScriptAction::KioskAction { loan_id, action } => Command::KioskAction {
                    session: session.clone().unwrap_or_default(),
                    loan_id: loan_id.clone(),
                    action: *action,
                },
                ScriptAction::Dock(d) => Command::Dock(*d),
                ScriptAction::Unload => Command::Unload,
                ScriptAction::DeviceDrop => Command::DeviceDrop,
            };
            let result = engine.execute(cmd);
            if let Ok(Reply::KioskQr(r)) = &result {
                session = Some(r.session.clone());
            }
            let doc = match &result {
                Ok(body) => ReplyLine {
                    tick,
                    line: l.line,
                    status: 200,
                    body: Some(body),
                    error: None,
                },
                Err(e) => ReplyLine {
                    tick,
                    line: l.line,
                    status: e.status,
                    body: None,
                    error: Some(e),
                },
            };
            serde_json::to_writer(&mut *replies, &doc).map_err(|e| ScriptError::Output(e.to_string()))?;
            replies.write_all(b"\n").map_err(io)?;
        }
        let out = engine.tick();
        if let Some(s) = out.snapshot {
            serde_json::to_writer(&mut *telemetry, &s).map_err(|e| ScriptError::Output(e.to_string()))?;
            telemetry.write_all(b"\n").map_err(io)?;
        }
    }
}
