//! The simulation and circulation state, advanced one 50 ms tick at a time.
//!
//! The engine is synchronous and owns every piece of mutable state. Given
//! the same seed, clock start and command sequence it produces the same
//! telemetry and the same event log byte for byte.

use std::collections::BTreeMap;

use bookbot_core::botsim::{dpad_to_motors, ultrasonic_range, BotState, Direction, Echo, MotorCommand, Pose};
use bookbot_core::circulation::{
    replay, CirculationError, CirculationEvent, EventLog, EventSink, Library, LoanView, Millis, Seed, Student,
};
use bookbot_core::geolocation::{
    emit_gga, emit_rmc, random_shell_satellites, synthesize_obs, trilaterate, GgaFix, RmcFix,
};
use bookbot_core::scenario::Scenario;
use bookbot_core::symbology::{
    decode_ean13, decode_qr, is_valid_ean13, read_pbm, read_pgm, Rect, ScanResult, SymbolType, SymbologyError,
};
use bookbot_core::teleop::Pin;
use bookbot_core::weighscale::{raw_to_grams, simulate_bridge, BridgeNoise, Calibration};
use chrono::{DateTime, SecondsFormat, Timelike};
use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

pub const TICK_MS: Millis = 50;
/// Telemetry every second tick: 10 Hz.
pub const TELEMETRY_EVERY: u64 = 2;
/// GPS fix every twentieth tick: 1 Hz.
pub const GPS_EVERY: u64 = 20;
pub const KIOSK_TTL_MS: Millis = 120_000;

/// Receiver clock bias used when synthesizing pseudoranges.
const GPS_CLOCK_BIAS_M: f64 = 25.0;
const MIN_ELEVATION_DEG: f64 = 10.0;
const SCALE_OFFSET_COUNTS: f64 = 8_388.0;
const SCALE_COUNTS_PER_GRAM: f64 = 420.0;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ApiError {
    #[serde(skip)]
    pub status: u16,
    pub error: String,
    pub message: String,
}

impl ApiError {
    pub fn new(status: u16, error: &str, message: impl Into<String>) -> ApiError {
        ApiError {
            status,
            error: error.to_string(),
            message: message.into(),
        }
    }

    pub fn bad_request(message: impl Into<String>) -> ApiError {
        ApiError::new(400, "BadRequest", message)
    }
}

impl std::fmt::Display for ApiError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} {}: {}", self.status, self.error, self.message)
    }
}

impl std::error::Error for ApiError {}

impl From<CirculationError> for ApiError {
    fn from(e: CirculationError) -> Self {
        use CirculationError::*;
        let (status, code) = match &e {
            MalformedToken => (401, "MalformedToken"),
            BadMac => (401, "BadMac"),
            TokenExpired => (401, "TokenExpired"),
            UnknownStudent(_) => (404, "UnknownStudent"),
            UnknownLoan(_) => (404, "UnknownLoan"),
            LoanNotActive(_) => (409, "LoanNotActive"),
            BarcodeMismatch { .. } => (409, "BarcodeMismatch"),
            WrongSymbology { .. } => (400, "WrongSymbology"),
            PayloadFull { .. } => (409, "PayloadFull"),
            NotDocked => (409, "NotDocked"),
            CorruptLog { .. } => (500, "CorruptLog"),
            InvalidSeed(_) => (500, "InvalidSeed"),
            Storage(_) => (500, "Storage"),
        };
        ApiError::new(status, code, e.to_string())
    }
}

impl From<SymbologyError> for ApiError {
    fn from(e: SymbologyError) -> Self {
        ApiError::new(400, "UndecodableSymbol", e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum QrInput {
    Token(String),
    Pbm(Vec<u8>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BarcodeInput {
    Digits(String),
    Pgm(Vec<u8>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum KioskAction {
    Submit,
    Renew,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Command {
    Drive(Direction),
    KioskQr(QrInput),
    KioskBarcode {
        session: String,
        input: BarcodeInput,
    },
    KioskAction {
        session: String,
        loan_id: String,
        action: KioskAction,
    },
    Inventory,
    Dock(bool),
    Unload,
    /// The device teleop link dropped.
    DeviceDrop,
    ReadPin(Pin),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DriveReply {
    pub direction: Direction,
    pub motors: MotorsJson,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KioskQrReply {
    pub session: String,
    pub student: Student,
    pub expires_at: String,
    pub loans: Vec<LoanJson>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LoanJson {
    pub loan_id: String,
    pub barcode: String,
    pub title: String,
    pub issued_at: String,
    pub due_at: String,
    pub status: &'static str,
    pub renewal_count: u32,
    pub overdue: bool,
}

impl From<&LoanView> for LoanJson {
    fn from(v: &LoanView) -> Self {
        LoanJson {
            loan_id: v.loan.loan_id.clone(),
            barcode: v.loan.barcode.clone(),
            title: v.title.clone(),
            issued_at: rfc3339(v.loan.issued_at),
            due_at: rfc3339(v.loan.due_at),
            status: match v.loan.status {
                bookbot_core::circulation::LoanStatus::Active => "active",
                bookbot_core::circulation::LoanStatus::Submitted => "submitted",
            },
            renewal_count: v.loan.renewal_count,
            overdue: v.overdue,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BarcodeReply {
    pub session: String,
    pub barcode: String,
    pub title: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ActionReply {
    pub action: KioskAction,
    pub loan_id: String,
    pub event: CirculationEvent,
    pub loans: Vec<LoanJson>,
    pub inventory: InventoryReply,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeldBook {
    pub barcode: String,
    pub title: String,
    pub weight_grams: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InventoryReply {
    pub books: Vec<HeldBook>,
    pub weight_g: u32,
    pub threshold_g: f64,
    pub warn_state: bool,
    pub docked: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UnloadReply {
    pub unloaded: Vec<String>,
    pub inventory: InventoryReply,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Reply {
    Drive(DriveReply),
    KioskQr(KioskQrReply),
    Barcode(BarcodeReply),
    Action(Box<ActionReply>),
    Inventory(InventoryReply),
    Unload(UnloadReply),
    Pin { pin: String, value: String },
    Ok { ok: bool },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PoseJson {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MotorsJson {
    pub left: f64,
    pub right: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TelemetrySnapshot {
    pub tick: u64,
    pub time: String,
    pub pose: PoseJson,
    pub lat: f64,
    pub lon: f64,
    pub distance_cm: Option<i64>,
    pub weight_g: u32,
    pub inventory_count: usize,
    pub warn_state: bool,
    pub docked: bool,
    pub motors: MotorsJson,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TickOutput {
    pub snapshot: Option<TelemetrySnapshot>,
    pub nmea: Vec<String>,
    pub pins: Vec<(Pin, String)>,
    pub blocked: bool,
}

/// Durable or in-memory event storage.
#[derive(Debug)]
pub enum Store {
    Memory(Vec<CirculationEvent>),
    File(EventLog),
}

impl EventSink for Store {
    fn record(&mut self, event: &CirculationEvent) -> Result<(), CirculationError> {
        match self {
            Store::Memory(v) => v.record(event),
            Store::File(log) => log.record(event),
        }
    }
}

#[derive(Debug, Clone)]
pub struct EngineOptions {
    pub seed: u64,
    pub clock_start_ms: Millis,
    /// Key for student QR token MACs.
    pub secret: Vec<u8>,
}

#[derive(Debug, Clone)]
struct KioskSession {
    student: Student,
    qr_text: String,
    created_at: Millis,
    barcode: Option<String>,
}

#[derive(Debug, Clone)]
struct GpsState {
    satellites: Vec<Vector3<f64>>,
    lat: f64,
    lon: f64,
    alt: f64,
    quality: u8,
}

pub struct Engine {
    scenario: Scenario,
    library: Library,
    store: Store,
    bot: BotState,
    tick: u64,
    clock_start: Millis,
    docked: bool,
    secret: Vec<u8>,
    session_rng: ChaCha8Rng,
    gps_rng: ChaCha8Rng,
    gps: GpsState,
    scale_cal: Calibration,
    scale_noise: BridgeNoise,
    sessions: BTreeMap<String, KioskSession>,
}

pub fn rfc3339(ms: Millis) -> String {
    DateTime::from_timestamp_millis(ms)
        .map(|t| t.to_rfc3339_opts(SecondsFormat::Millis, true))
        .unwrap_or_default()
}

impl Engine {
    /// Builds the engine, replaying `existing` events over the seed.
    pub fn new(
        scenario: Scenario,
        seed: &Seed,
        store: Store,
        existing: &[CirculationEvent],
        opts: EngineOptions,
    ) -> Result<Engine, CirculationError> {
        let library = replay(seed, existing)?;
        let mut gps_rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x6770_7300);
        let satellites = random_shell_satellites(
            &mut gps_rng,
            scenario.gps.satellites,
            scenario.gps.shell_radius_m,
            MIN_ELEVATION_DEG,
        );
        let gps = GpsState {
            satellites,
            lat: scenario.gps.anchor_lat,
            lon: scenario.gps.anchor_lon,
            alt: 0.0,
            quality: 0,
        };
        let mut engine = Engine {
            bot: BotState::new(scenario.start),
            library,
            store,
            tick: 0,
            clock_start: opts.clock_start_ms,
            docked: false,
            secret: opts.secret,
            session_rng: ChaCha8Rng::seed_from_u64(opts.seed),
            gps_rng,
            gps,
            scale_cal: Calibration::new(SCALE_OFFSET_COUNTS, SCALE_COUNTS_PER_GRAM).expect("valid constants"),
            scale_noise: BridgeNoise::seeded(opts.seed ^ 0x5ca1e),
            sessions: BTreeMap::new(),
            scenario,
        };
        engine.update_gps();
        Ok(engine)
    }

    pub fn now(&self) -> Millis {
        self.clock_start + self.tick as Millis * TICK_MS
    }

    pub fn tick_count(&self) -> u64 {
        self.tick
    }

    pub fn bot(&self) -> &BotState {
        &self.bot
    }

    pub fn library(&self) -> &Library {
        &self.library
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn secret(&self) -> &[u8] {
        &self.secret
    }

    pub fn store(&self) -> &Store {
        &self.store
    }

    pub fn tick(&mut self) -> TickOutput {
        self.tick += 1;
        let blocked = self.bot.tick(&self.scenario.world, &self.scenario.drive);
        let mut out = TickOutput {
            blocked,
            ..TickOutput::default()
        };
        if self.tick % GPS_EVERY == 0 {
            out.nmea = self.update_gps();
            let now = self.now();
            self.sessions.retain(|_, s| now - s.created_at <= KIOSK_TTL_MS);
        }
        if self.tick % TELEMETRY_EVERY == 0 {
            out.snapshot = Some(self.snapshot());
            out.pins = self.pin_values();
        }
        out
    }

    fn echo(&self) -> Echo {
        ultrasonic_range(&self.bot.pose, &self.scenario.world, &self.scenario.drive)
    }

    pub fn snapshot(&self) -> TelemetrySnapshot {
        let Pose { x, y, heading } = self.bot.pose;
        TelemetrySnapshot {
            tick: self.tick,
            time: rfc3339(self.now()),
            pose: PoseJson { x, y, heading },
            lat: self.gps.lat,
            lon: self.gps.lon,
            distance_cm: match self.echo() {
                Echo::Distance(d) => Some((d * 100.0).round() as i64),
                Echo::OutOfRange => None,
            },
            weight_g: self.library.state().inventory_grams,
            inventory_count: self.library.state().held.len(),
            warn_state: self.library.warn_state(),
            docked: self.docked,
            motors: MotorsJson {
                left: self.bot.cmd.left(),
                right: self.bot.cmd.right(),
            },
        }
    }

    /// Current values of the device-to-app pins.
    pub fn pin_values(&self) -> Vec<(Pin, String)> {
        vec![
            (Pin::V1, self.echo().pin_text()),
            (Pin::V2, format!("{:.6},{:.6}", self.gps.lat, self.gps.lon)),
            (Pin::V3, self.library.state().inventory_grams.to_string()),
            (Pin::V4, self.library.state().held.len().to_string()),
        ]
    }

    /// Solves a fresh fix from synthesized pseudoranges and returns the
    /// GGA and RMC lines for it.
    fn update_gps(&mut self) -> Vec<String> {
        let truth = Vector3::new(self.bot.pose.x, self.bot.pose.y, 0.0);
        let noise_seed = self.gps_rng.random();
        let fix = synthesize_obs(
            &truth,
            GPS_CLOCK_BIAS_M,
            &self.gps.satellites,
            self.scenario.gps.noise_sigma_m,
            noise_seed,
        )
        .and_then(|obs| trilaterate(&obs, true));
        match fix {
            Ok(fix) => {
                let (lat, lon, alt) = self.scenario.gps.frame().to_geodetic(&fix.position);
                self.gps.lat = lat;
                self.gps.lon = lon;
                self.gps.alt = alt;
                self.gps.quality = 1;
            }
            Err(e) => {
                tracing::warn!(error = %e, "gps fix failed; holding last position");
                self.gps.quality = 0;
            }
        }
        let now = self.now();
        let Some(t) = DateTime::from_timestamp_millis(now) else {
            return Vec::new();
        };
        let ms_of_day = t.num_seconds_from_midnight() * 1000 + t.timestamp_subsec_millis();
        let speed_mps = (self.bot.cmd.left() + self.bot.cmd.right()) / 200.0 * self.scenario.drive.max_wheel_speed;
        let course = (90.0 - self.bot.pose.heading.to_degrees()).rem_euclid(360.0);
        let gga = emit_gga(&GgaFix {
            time_of_day_ms: ms_of_day,
            lat: self.gps.lat,
            lon: self.gps.lon,
            quality: self.gps.quality,
            sat_count: self.gps.satellites.len() as u8,
            hdop: 1.0,
            altitude_m: self.gps.alt,
        });
        let rmc = emit_rmc(&RmcFix {
            utc_ms: now,
            valid: self.gps.quality > 0,
            lat: self.gps.lat,
            lon: self.gps.lon,
            speed_knots: speed_mps.abs() * 1.943_844,
            course_deg: course,
        });
        [gga, rmc].into_iter().filter_map(Result::ok).map(|s| s.to_string()).collect()
    }

    pub fn execute(&mut self, cmd: Command) -> Result<Reply, ApiError> {
        match cmd {
            Command::Drive(direction) => {
                self.bot.cmd = dpad_to_motors(direction);
                Ok(Reply::Drive(DriveReply {
                    direction,
                    motors: MotorsJson {
                        left: self.bot.cmd.left(),
                        right: self.bot.cmd.right(),
                    },
                }))
            }
            Command::DeviceDrop => {
                self.bot.cmd = MotorCommand::STOP;
                Ok(Reply::Ok { ok: true })
            }
            Command::KioskQr(input) => self.kiosk_qr(input),
            Command::KioskBarcode { session, input } => self.kiosk_barcode(&session, input),
            Command::KioskAction {
                session,
                loan_id,
                action,
            } => self.kiosk_action(&session, &loan_id, action),
            Command::Inventory => Ok(Reply::Inventory(self.inventory())),
            Command::Dock(docked) => {
                self.docked = docked;
                Ok(Reply::Inventory(self.inventory()))
            }
            Command::Unload => {
                let now = self.now();
                let unloaded =
                    self.library
                        .unload(self.docked, now, &self.scenario.bot_id, &mut self.store)?;
                Ok(Reply::Unload(UnloadReply {
                    unloaded,
                    inventory: self.inventory(),
                }))
            }
            Command::ReadPin(pin) => {
                let value = match pin {
                    Pin::V0 => direction_of(&self.bot.cmd).to_string(),
                    other => self
                        .pin_values()
                        .into_iter()
                        .find(|(p, _)| *p == other)
                        .map(|(_, v)| v)
                        .expect("every device pin has a value"),
                };
                Ok(Reply::Pin {
                    pin: pin.to_string(),
                    value,
                })
            }
        }
    }

    pub fn inventory(&self) -> InventoryReply {
        InventoryReply {
            books: self
                .library
                .held_books()
                .into_iter()
                .map(|b| HeldBook {
                    barcode: b.barcode.clone(),
                    title: b.title.clone(),
                    weight_grams: b.weight_grams,
                })
                .collect(),
            weight_g: self.library.state().inventory_grams,
            threshold_g: self.library.threshold_grams(),
            warn_state: self.library.warn_state(),
            docked: self.docked,
        }
    }

    fn loans_json(&self, student_id: &str) -> Result<Vec<LoanJson>, ApiError> {
        Ok(self
            .library
            .list_loans(student_id, self.now())?
            .iter()
            .map(LoanJson::from)
            .collect())
    }

    fn kiosk_qr(&mut self, input: QrInput) -> Result<Reply, ApiError> {
        let scan = match input {
            QrInput::Token(text) => synthetic_scan(text.into_bytes(), SymbolType::QrCode),
            QrInput::Pbm(bytes) => decode_qr(&read_pbm(&bytes)?)?,
        };
        let now = self.now();
        let (student, qr_text) = self.library.verify_student(&scan, now, &self.secret)?;
        let id = format!("{:016x}", self.session_rng.random::<u64>());
        let loans = self.loans_json(&student.student_id)?;
        self.sessions.insert(
            id.clone(),
            KioskSession {
                student: student.clone(),
                qr_text,
                created_at: now,
                barcode: None,
            },
        );
        Ok(Reply::KioskQr(KioskQrReply {
            session: id,
            student,
            expires_at: rfc3339(now + KIOSK_TTL_MS),
            loans,
        }))
    }

    fn session(&mut self, id: &str) -> Result<&mut KioskSession, ApiError> {
        let now = self.now();
        match self.sessions.get(id) {
            None => Err(ApiError::new(404, "UnknownSession", format!("no kiosk session {id:?}"))),
            Some(s) if now - s.created_at > KIOSK_TTL_MS => {
                self.sessions.remove(id);
                Err(ApiError::new(401, "SessionExpired", "kiosk session expired; scan the QR code again"))
            }
            Some(_) => Ok(self.sessions.get_mut(id).expect("present")),
        }
    }

    fn kiosk_barcode(&mut self, session: &str, input: BarcodeInput) -> Result<Reply, ApiError> {
        self.session(session)?;
        let barcode = match input {
            BarcodeInput::Digits(d) => {
                if !is_valid_ean13(&d) {
                    return Err(ApiError::bad_request(format!("{d:?} is not a valid EAN-13")));
                }
                d
            }
            BarcodeInput::Pgm(bytes) => String::from_utf8_lossy(&decode_ean13(&read_pgm(&bytes)?)?.data).into_owned(),
        };
        let title = self.library.book(&barcode).map(|b| b.title.clone());
        self.session(session)?.barcode = Some(barcode.clone());
        Ok(Reply::Barcode(BarcodeReply {
            session: session.to_string(),
            barcode,
            title,
        }))
    }

    fn kiosk_action(&mut self, session: &str, loan_id: &str, action: KioskAction) -> Result<Reply, ApiError> {
        let s = self.session(session)?.clone();
        let now = self.now();
        let bot_id = self.scenario.bot_id.clone();
        let event = match action {
            KioskAction::Renew => {
                self.library
                    .renew(loan_id, &s.student, &s.qr_text, now, &bot_id, &mut self.store)?
            }
            KioskAction::Submit => {
                let barcode = s.barcode.clone().ok_or_else(|| {
                    ApiError::new(409, "NoBarcodeScan", "scan the book's barcode before submitting")
                })?;
                let weight = self.library.book(&barcode).map(|b| b.weight_grams);
                let measured = weight.map(|g| self.measure_delta(g));
                let scan = synthetic_scan(barcode.into_bytes(), SymbolType::Ean13);
                let event = self.library.submit(
                    loan_id,
                    &s.student,
                    &s.qr_text,
                    &scan,
                    measured,
                    now,
                    &bot_id,
                    &mut self.store,
                )?;
                self.session(session)?.barcode = None;
                event
            }
        };
        Ok(Reply::Action(Box::new(ActionReply {
            action,
            loan_id: loan_id.to_string(),
            event,
            loans: self.loans_json(&s.student.student_id)?,
            inventory: self.inventory(),
        })))
    }

    /// Weight change the load cell would report when `grams` are added.
    fn measure_delta(&mut self, grams: u32) -> f64 {
        let before = self.library.state().inventory_grams as f64;
        let mut read = |load: f64| {
            simulate_bridge(load, &self.scale_cal, &mut self.scale_noise)
                .and_then(|s| raw_to_grams(&s, &self.scale_cal))
                .unwrap_or(load)
        };
        let delta = read(before + grams as f64) - read(before);
        (delta * 10.0).round() / 10.0
    }

    /// Fail-safe entry for callers that only know a device vanished.
    pub fn stop(&mut self) {
        self.bot.cmd = MotorCommand::STOP;
    }

    pub fn motors(&self) -> MotorCommand {
        self.bot.cmd
    }
}

fn direction_of(cmd: &MotorCommand) -> Direction {
    [Direction::N, Direction::S, Direction::E, Direction::W]
        .into_iter()
        .find(|d| dpad_to_motors(*d) == *cmd)
        .unwrap_or(Direction::Stop)
}

fn synthetic_scan(data: Vec<u8>, symbol_type: SymbolType) -> ScanResult {
    ScanResult {
        data,
        symbol_type,
        rect: Rect {
            left: 0,
            top: 0,
            width: 0,
            height: 0,
        },
        polygon: Vec::new(),
    }
}
