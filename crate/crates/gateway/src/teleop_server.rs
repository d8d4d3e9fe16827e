//! TCP transport for teleop sessions.
//!
//! Each connection runs its own [`Session`]. Devices publish pin values that
//! are pushed to every app connection; apps drive the bot through V0.

use std::sync::OnceLock;
use std::time::{Duration, Instant};

use bookbot_core::teleop::{
    decode_frame_limited, AuthToken, Effect, Frame, FrameError, HardwareMsg, Pin, Role, Session, CMD_HARDWARE,
};
use bookbot_core::teleop::session::STATUS_BAD_VALUE;
use tokio::io::{AsyncReadExt, AsyncWriteExt};
use tokio::net::{TcpListener, TcpStream};
use tokio::sync::{broadcast, watch};

use crate::engine::{Command, Reply};
use crate::runtime::Hub;

/// Largest body accepted from a peer. Real traffic is a few dozen bytes.
pub const MAX_TELEOP_BODY: usize = 1024;
const HEARTBEAT_POLL: Duration = Duration::from_millis(250);

fn monotonic_ms() -> u64 {
    static START: OnceLock<Instant> = OnceLock::new();
    START.get_or_init(Instant::now).elapsed().as_millis() as u64
}

pub async fn serve(listener: TcpListener, hub: Hub, token: AuthToken, mut shutdown: watch::Receiver<bool>) {
    loop {
        tokio::select! {
            _ = shutdown.changed() => {
                if *shutdown.borrow() {
                    return;
                }
            }
            accepted = listener.accept() => match accepted {
                Ok((stream, peer)) => {
                    let hub = hub.clone();
                    let token = token.clone();
                    let shutdown = shutdown.clone();
                    tokio::spawn(async move {
                        tracing::debug!(%peer, "teleop connection");
                        if let Err(e) = connection(stream, hub, token, shutdown).await {
                            tracing::debug!(%peer, error = %e, "teleop connection ended with error");
                        }
                    });
                }
                Err(e) => tracing::warn!(error = %e, "teleop accept failed"),
            }
        }
    }
}

fn pin_push(pin: Pin, value: String) -> Frame {
    Frame::new(CMD_HARDWARE, 0, HardwareMsg::Write { pin, value }.encode())
}

async fn write_frame(stream: &mut TcpStream, frame: &Frame) -> std::io::Result<()> {
    let bytes = frame
        .encode()
        .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e.to_string()))?;
    stream.write_all(&bytes).await
}

/// Carries out session effects. Returns false once the connection should close.
async fn apply(stream: &mut TcpStream, hub: &Hub, effects: Vec<Effect>) -> std::io::Result<bool> {
    let mut open = true;
    for effect in effects {
        match effect {
            Effect::Reply(f) => write_frame(stream, &f).await?,
            Effect::Drive(d) => {
                if let Err(e) = hub.execute(Command::Drive(d)).await {
                    tracing::warn!(error = %e, "drive command failed");
                }
            }
            Effect::Publish { pin, value } => hub.publish_pin(pin, value),
            Effect::Read { pin, msg_id } => {
                if let Ok(Reply::Pin { value, .. }) = hub.execute(Command::ReadPin(pin)).await {
                    let body = HardwareMsg::Write { pin, value }.encode();
                    write_frame(stream, &Frame::new(CMD_HARDWARE, msg_id, body)).await?;
                }
            }
            Effect::FailSafeStop => {
                tracing::warn!("device link lost; stopping the bot");
                let _ = hub.execute(Command::DeviceDrop).await;
            }
            Effect::Close => open = false,
        }
    }
    Ok(open)
}

async fn connection(
    mut stream: TcpStream,
    hub: Hub,
    token: AuthToken,
    mut shutdown: watch::Receiver<bool>,
) -> std::io::Result<()> {
    stream.set_nodelay(true)?;
    let mut session = Session::new(monotonic_ms());
    let mut pins = hub.pins.subscribe();
    let mut heartbeat = tokio::time::interval(HEARTBEAT_POLL);
    let mut buf: Vec<u8> = Vec::with_capacity(256);
    let mut chunk = [0u8; 4096];

    // Any exit path, including I/O errors, must reach the disconnect below.
    let result: std::io::Result<()> = async { loop {
        let is_app = session.role() == Some(Role::App);
        tokio::select! {
            read = stream.read(&mut chunk) => {
                let n = match read {
                    Ok(0) => return Ok(()),
                    Ok(n) => n,
                    Err(e) => return Err(e),
                };
                buf.extend_from_slice(&chunk[..n]);
                let mut consumed = 0;
                let mut open = true;
                while open {
                    match decode_frame_limited(&buf[consumed..], MAX_TELEOP_BODY) {
                        Ok((frame, used)) => {
                            consumed += used;
                            let effects = session.handle(&frame, monotonic_ms(), &token);
                            open = apply(&mut stream, &hub, effects).await?;
                        }
                        Err(FrameError::NeedMoreBytes(_)) => break,
                        Err(FrameError::OversizeBody { .. }) => {
                            // The stream cannot be resynchronised past a body we refuse to buffer.
                            let msg_id = u16::from_be_bytes([buf[consumed + 1], buf[consumed + 2]]);
                            write_frame(&mut stream, &Frame::response(msg_id, STATUS_BAD_VALUE)).await?;
                            open = false;
                        }
                    }
                }
                buf.drain(..consumed);
                if !open {
                    return Ok(());
                }
            }
            pushed = pins.recv(), if is_app => match pushed {
                Ok((pin, value)) => write_frame(&mut stream, &pin_push(pin, value)).await?,
                Err(broadcast::error::RecvError::Lagged(n)) => {
                    tracing::debug!(skipped = n, "slow app session");
                }
                Err(broadcast::error::RecvError::Closed) => return Ok(()),
            },
            _ = heartbeat.tick() => {
                let effects = session.poll_timeout(monotonic_ms());
                if !apply(&mut stream, &hub, effects).await? {
                    return Ok(());
                }
            }
            _ = shutdown.changed() => {
                if *shutdown.borrow() {
                    return Ok(());
                }
            }
        }
    } }.await;
    let effects = session.disconnect();
    apply(&mut stream, &hub, effects).await.ok();
    let _ = stream.shutdown().await;
    result
}
