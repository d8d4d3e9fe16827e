//! Runs an [`Engine`] on a tokio task and fans its output out to clients.
//!
//! The engine task is the only owner of simulation state. Clients send
//! [`Command`]s over an mpsc channel and get the reply on a oneshot. Output
//! is published on broadcast channels, so a slow subscriber loses its oldest
//! messages instead of holding up the tick loop.

use std::sync::Arc;
use std::time::Duration;

use bookbot_core::teleop::Pin;
use tokio::sync::{broadcast, mpsc, oneshot, watch};
use tokio::task::JoinHandle;
use tokio::time::MissedTickBehavior;

use crate::engine::{ApiError, Command, Engine, Reply, TelemetrySnapshot};

const COMMAND_QUEUE: usize = 256;
const TELEMETRY_BUFFER: usize = 64;
const PIN_BUFFER: usize = 256;

struct Envelope {
    cmd: Command,
    reply: oneshot::Sender<Result<Reply, ApiError>>,
}

/// Cheap-to-clone handle onto a running engine.
#[derive(Clone)]
pub struct Hub {
    commands: mpsc::Sender<Envelope>,
    /// Serialized [`TelemetrySnapshot`] JSON.
    pub telemetry: broadcast::Sender<Arc<str>>,
    /// NMEA sentences, each terminated by CRLF.
    pub nmea: broadcast::Sender<Arc<str>>,
    /// Device-to-app pin writes from the simulator and from device sessions.
    pub pins: broadcast::Sender<(Pin, String)>,
    latest: watch::Receiver<Option<Arc<TelemetrySnapshot>>>,
}

impl Hub {
    pub async fn execute(&self, cmd: Command) -> Result<Reply, ApiError> {
        let (tx, rx) = oneshot::channel();
        let unavailable = || ApiError::new(503, "Unavailable", "simulation is shutting down");
        self.commands
            .send(Envelope { cmd, reply: tx })
            .await
            .map_err(|_| unavailable())?;
        rx.await.map_err(|_| unavailable())?
    }

    pub fn latest(&self) -> Option<Arc<TelemetrySnapshot>> {
        self.latest.borrow().clone()
    }

    pub fn publish_pin(&self, pin: Pin, value: String) {
        // No subscribers is fine.
        let _ = self.pins.send((pin, value));
    }
}

/// Starts the tick loop. It stops when `shutdown` flips to true, after
/// answering any commands already queued, and hands the engine back.
pub fn spawn(mut engine: Engine, period: Duration, mut shutdown: watch::Receiver<bool>) -> (Hub, JoinHandle<Engine>) {
    let (cmd_tx, mut cmd_rx) = mpsc::channel::<Envelope>(COMMAND_QUEUE);
    let (telemetry, _) = broadcast::channel(TELEMETRY_BUFFER);
    let (nmea, _) = broadcast::channel(TELEMETRY_BUFFER);
    let (pins, _) = broadcast::channel(PIN_BUFFER);
    let (latest_tx, latest_rx) = watch::channel(Some(Arc::new(engine.snapshot())));
    let hub = Hub {
        commands: cmd_tx,
        telemetry: telemetry.clone(),
        nmea: nmea.clone(),
        pins: pins.clone(),
        latest: latest_rx,
    };

    let task = tokio::spawn(async move {
        let mut interval = tokio::time::interval(period);
        interval.set_missed_tick_behavior(MissedTickBehavior::Delay);
        interval.tick().await;
        loop {
            tokio::select! {
                biased;
                _ = shutdown.changed() => {
                    if *shutdown.borrow() {
                        break;
                    }
                }
                Some(env) = cmd_rx.recv() => {
                    let _ = env.reply.send(engine.execute(env.cmd));
                }
                _ = interval.tick() => {
                    let out = engine.tick();
                    if let Some(snap) = out.snapshot {
                        match serde_json::to_string(&snap) {
                            Ok(json) => {
                                let _ = telemetry.send(json.into());
                            }
                            Err(e) => tracing::error!(error = %e, "telemetry serialization failed"),
                        }
                        let _ = latest_tx.send(Some(Arc::new(snap)));
                    }
                    for line in out.nmea {
                        let _ = nmea.send(line.into());
                    }
                    for p in out.pins {
                        let _ = pins.send(p);
                    }
                    if out.blocked {
                        tracing::info!(tick = engine.tick_count(), "collision guard stopped the bot");
                    }
                }
            }
        }
        cmd_rx.close();
        while let Ok(env) = cmd_rx.try_recv() {
            let _ = env.reply.send(engine.execute(env.cmd));
        }
        engine
    });
    (hub, task)
}
