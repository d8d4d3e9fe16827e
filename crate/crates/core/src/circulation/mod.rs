//! Library circulation: student verification, loan listing, renewal,
//! submission into the bot's payload bay, and unloading at the library.
//!
//! State changes are event sourced. Every mutating operation validates
//! against the current state, hands the resulting [`CirculationEvent`] to an
//! [`EventSink`], and only then folds it into the state through
//! [`Library::apply`], the same function replay uses.

pub mod eventlog;
pub mod seed;
pub mod token;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::symbology::{ScanResult, SymbolType};
use crate::weighscale::{Decision, PayloadPolicy};

pub use eventlog::{parse_log, replay, EventLog, ParsedLog};
pub use seed::Seed;
pub use token::{mint_token, QrToken};

/// Milliseconds since the Unix epoch, UTC.
pub type Millis = i64;

pub const RENEWAL_PERIOD_MS: Millis = 7 * 24 * 3600 * 1000;
pub const DAY_MS: Millis = 86_400_000;
/// Measured weight deltas further than this from the catalog weight are
/// logged as suspicious.
pub const WEIGHT_TOLERANCE_GRAMS: f64 = 50.0;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CirculationError {
    #[error("malformed QR token")]
    MalformedToken,
    #[error("QR token signature does not verify")]
    BadMac,
    #[error("QR token has expired")]
    TokenExpired,
    #[error("unknown student {0:?}")]
    UnknownStudent(String),
    #[error("unknown loan {0:?}")]
    UnknownLoan(String),
    #[error("loan {0:?} is not active")]
    LoanNotActive(String),
    #[error("scanned book {scanned:?} is not the book on loan {expected:?}")]
    BarcodeMismatch { expected: String, scanned: String },
    #[error("expected a {expected} scan, got {got}")]
    WrongSymbology { expected: &'static str, got: &'static str },
    #[error("payload would reach {total_grams} g, over the {threshold_grams} g limit")]
    PayloadFull { total_grams: u32, threshold_grams: u32 },
    #[error("bot is not docked at the library")]
    NotDocked,
    #[error("event log line {line} is corrupt: {reason}")]
    CorruptLog { line: usize, reason: String },
    #[error("invalid seed data: {0}")]
    InvalidSeed(String),
    #[error("storage error: {0}")]
    Storage(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Student {
    pub student_id: String,
    pub display_name: String,
    #[serde(default)]
    pub hostel: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Book {
    pub barcode: String,
    pub title: String,
    pub weight_grams: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LoanStatus {
    Active,
    Submitted,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Loan {
    pub loan_id: String,
    pub student_id: String,
    pub barcode: String,
    pub issued_at: Millis,
    pub due_at: Millis,
    pub status: LoanStatus,
    pub renewal_count: u32,
}

/// One stored document per line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event")]
pub enum CirculationEvent {
    #[serde(rename = "submitted")]
    Submitted {
        student_qr_data: String,
        book_barcode: String,
        timestamp: Millis,
        bot_id: String,
        loan_id: String,
        student_id: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        measured_grams: Option<f64>,
    },
    #[serde(rename = "re-issued")]
    ReIssued {
        student_qr_data: String,
        book_barcode: String,
        timestamp: Millis,
        bot_id: String,
        loan_id: String,
        student_id: String,
        due_at: Millis,
    },
    #[serde(rename = "unloaded")]
    Unloaded {
        timestamp: Millis,
        bot_id: String,
        books: Vec<String>,
        total_grams: u32,
    },
}

impl CirculationEvent {
    pub fn kind(&self) -> &'static str {
        match self {
            CirculationEvent::Submitted { .. } => "submitted",
            CirculationEvent::ReIssued { .. } => "re-issued",
            CirculationEvent::Unloaded { .. } => "unloaded",
        }
    }

    pub fn timestamp(&self) -> Millis {
        match self {
            CirculationEvent::Submitted { timestamp, .. }
            | CirculationEvent::ReIssued { timestamp, .. }
            | CirculationEvent::Unloaded { timestamp, .. } => *timestamp,
        }
    }
}

/// Where events go before they take effect.
pub trait EventSink {
    fn record(&mut self, event: &CirculationEvent) -> Result<(), CirculationError>;
}

impl EventSink for Vec<CirculationEvent> {
    fn record(&mut self, event: &CirculationEvent) -> Result<(), CirculationError> {
        self.push(event.clone());
        Ok(())
    }
}

/// Everything replay must reproduce.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CirculationState {
    pub loans: BTreeMap<String, Loan>,
    /// Barcodes in the payload bay, in order of submission.
    pub held: Vec<String>,
    pub inventory_grams: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LoanView {
    #[serde(flatten)]
    pub loan: Loan,
    pub title: String,
    pub overdue: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Reminder {
    pub student_id: String,
    pub loan_id: String,
    pub days_overdue: i64,
}

#[derive(Debug, Clone)]
pub struct Library {
    students: BTreeMap<String, Student>,
    books: BTreeMap<String, Book>,
    state: CirculationState,
    policy: PayloadPolicy,
}

impl Library {
    pub fn new(seed: &Seed) -> Library {
        Library {
            students: seed.students.iter().map(|s| (s.student_id.clone(), s.clone())).collect(),
            books: seed.books.iter().map(|b| (b.barcode.clone(), b.clone())).collect(),
            state: CirculationState {
                loans: seed.loans.iter().map(|l| (l.loan_id.clone(), l.clone())).collect(),
                held: Vec::new(),
                inventory_grams: 0,
            },
            policy: PayloadPolicy::default(),
        }
    }

    pub fn state(&self) -> &CirculationState {
        &self.state
    }

    pub fn warn_state(&self) -> bool {
        self.policy.warn_state
    }

    pub fn threshold_grams(&self) -> f64 {
        self.policy.threshold_grams
    }

    pub fn student(&self, id: &str) -> Option<&Student> {
        self.students.get(id)
    }

    pub fn book(&self, barcode: &str) -> Option<&Book> {
        self.books.get(barcode)
    }

    pub fn loan(&self, id: &str) -> Option<&Loan> {
        self.state.loans.get(id)
    }

    pub fn held_books(&self) -> Vec<&Book> {
        self.state.held.iter().filter_map(|b| self.books.get(b)).collect()
    }

    /// Decodes, authenticates and resolves a student QR scan. Returns the
    /// student and the token text as scanned.
    pub fn verify_student(
        &self,
        scan: &ScanResult,
        now: Millis,
        secret: &[u8],
    ) -> Result<(Student, String), CirculationError> {
        if scan.symbol_type != SymbolType::QrCode {
            return Err(CirculationError::WrongSymbology {
                expected: SymbolType::QrCode.as_str(),
                got: scan.symbol_type.as_str(),
            });
        }
        let text = std::str::from_utf8(&scan.data).map_err(|_| CirculationError::MalformedToken)?;
        let token = QrToken::verify(text, now, secret)?;
        let student = self
            .students
            .get(&token.student_id)
            .ok_or_else(|| CirculationError::UnknownStudent(token.student_id.clone()))?;
        Ok((student.clone(), text.to_string()))
    }

    /// Active loans of `student_id`, earliest due first.
    pub fn list_loans(&self, student_id: &str, now: Millis) -> Result<Vec<LoanView>, CirculationError> {
        if !self.students.contains_key(student_id) {
            return Err(CirculationError::UnknownStudent(student_id.to_string()));
        }
        let mut out: Vec<LoanView> = self
            .state
            .loans
            .values()
            .filter(|l| l.student_id == student_id && l.status == LoanStatus::Active)
            .map(|l| LoanView {
                loan: l.clone(),
                title: self.books.get(&l.barcode).map(|b| b.title.clone()).unwrap_or_default(),
                overdue: now > l.due_at,
            })
            .collect();
        out.sort_by(|a, b| (a.loan.due_at, &a.loan.loan_id).cmp(&(b.loan.due_at, &b.loan.loan_id)));
        Ok(out)
    }

    /// Active loan owned by `student_id`. Loans of other students look
    /// unknown.
    fn owned_active_loan(&self, loan_id: &str, student_id: &str) -> Result<&Loan, CirculationError> {
        let loan = self
            .state
            .loans
            .get(loan_id)
            .filter(|l| l.student_id == student_id)
            .ok_or_else(|| CirculationError::UnknownLoan(loan_id.to_string()))?;
        if loan.status != LoanStatus::Active {
            return Err(CirculationError::LoanNotActive(loan_id.to_string()));
        }
        Ok(loan)
    }

    /// Extends the loan to one week after `now`.
    pub fn renew(
        &mut self,
        loan_id: &str,
        student: &Student,
        student_qr_data: &str,
        now: Millis,
        bot_id: &str,
        sink: &mut dyn EventSink,
    ) -> Result<CirculationEvent, CirculationError> {
        let loan = self.owned_active_loan(loan_id, &student.student_id)?;
        let event = CirculationEvent::ReIssued {
            student_qr_data: student_qr_data.to_string(),
            book_barcode: loan.barcode.clone(),
            timestamp: now,
            bot_id: bot_id.to_string(),
            loan_id: loan_id.to_string(),
            student_id: student.student_id.clone(),
            due_at: now + RENEWAL_PERIOD_MS,
        };
        self.commit(event, sink)
    }

    /// Takes the book into the payload bay and closes the loan.
    #[allow(clippy::too_many_arguments)]
    pub fn submit(
        &mut self,
        loan_id: &str,
        student: &Student,
        student_qr_data: &str,
        book_scan: &ScanResult,
        measured_delta_grams: Option<f64>,
        now: Millis,
        bot_id: &str,
        sink: &mut dyn EventSink,
    ) -> Result<CirculationEvent, CirculationError> {
        let loan = self.owned_active_loan(loan_id, &student.student_id)?.clone();
        if book_scan.symbol_type != SymbolType::Ean13 {
            return Err(CirculationError::WrongSymbology {
                expected: SymbolType::Ean13.as_str(),
                got: book_scan.symbol_type.as_str(),
            });
        }
        let scanned = String::from_utf8_lossy(&book_scan.data).into_owned();
        if scanned != loan.barcode {
            return Err(CirculationError::BarcodeMismatch {
                expected: loan.barcode.clone(),
                scanned,
            });
        }
        let weight = self
            .books
            .get(&loan.barcode)
            .ok_or_else(|| CirculationError::InvalidSeed(format!("book {} missing from catalog", loan.barcode)))?
            .weight_grams;
        let current = self.state.inventory_grams;
        if self.policy.accept_book(current as f64, weight as f64) == Decision::RejectThreshold {
            return Err(CirculationError::PayloadFull {
                total_grams: current + weight,
                threshold_grams: self.policy.threshold_grams as u32,
            });
        }
        if let Some(m) = measured_delta_grams {
            if (m - weight as f64).abs() > WEIGHT_TOLERANCE_GRAMS {
                tracing::warn!(
                    loan_id,
                    measured = m,
                    catalog = weight,
                    "measured weight differs from catalog weight"
                );
            }
        }
        let event = CirculationEvent::Submitted {
            student_qr_data: student_qr_data.to_string(),
            book_barcode: loan.barcode.clone(),
            timestamp: now,
            bot_id: bot_id.to_string(),
            loan_id: loan_id.to_string(),
            student_id: student.student_id.clone(),
            measured_grams: measured_delta_grams,
        };
        self.commit(event, sink)
    }

    /// Empties the payload bay. Returns the unloaded barcodes; an empty bay
    /// yields an empty batch and records nothing.
    pub fn unload(
        &mut self,
        docked: bool,
        now: Millis,
        bot_id: &str,
        sink: &mut dyn EventSink,
    ) -> Result<Vec<String>, CirculationError> {
        if !docked {
            return Err(CirculationError::NotDocked);
        }
        self.policy.clear_warning();
        if self.state.held.is_empty() {
            return Ok(Vec::new());
        }
        let books = self.state.held.clone();
        let event = CirculationEvent::Unloaded {
            timestamp: now,
            bot_id: bot_id.to_string(),
            books: books.clone(),
            total_grams: self.state.inventory_grams,
        };
        self.commit(event, sink)?;
        Ok(books)
    }

    pub fn overdue_reminders(&self, now: Millis) -> Vec<Reminder> {
        let mut out: Vec<Reminder> = self
            .state
            .loans
            .values()
            .filter(|l| l.status == LoanStatus::Active && l.due_at < now)
            .map(|l| Reminder {
                student_id: l.student_id.clone(),
                loan_id: l.loan_id.clone(),
                days_overdue: (now - l.due_at + DAY_MS - 1).div_euclid(DAY_MS),
            })
            .collect();
        out.sort_by(|a, b| (&a.student_id, &a.loan_id).cmp(&(&b.student_id, &b.loan_id)));
        out
    }

    fn commit(&mut self, event: CirculationEvent, sink: &mut dyn EventSink) -> Result<CirculationEvent, CirculationError> {
        // validate the transition on a scratch copy before it becomes durable
        let mut next = self.state.clone();
        self.fold(&mut next, &event)?;
        sink.record(&event)?;
        self.state = next;
        Ok(event)
    }

    /// Folds a stored event into the state.
    pub fn apply(&mut self, event: &CirculationEvent) -> Result<(), CirculationError> {
        let mut next = self.state.clone();
        self.fold(&mut next, event)?;
        self.state = next;
        Ok(())
    }

    fn fold(&self, state: &mut CirculationState, event: &CirculationEvent) -> Result<(), CirculationError> {
        let inconsistent = |why: String| CirculationError::CorruptLog { line: 0, reason: why };
        match event {
            CirculationEvent::Submitted {
                loan_id, book_barcode, ..
            } => {
                let loan = state
                    .loans
                    .get_mut(loan_id)
                    .ok_or_else(|| inconsistent(format!("unknown loan {loan_id}")))?;
                if loan.status != LoanStatus::Active || &loan.barcode != book_barcode {
                    return Err(inconsistent(format!("loan {loan_id} cannot be submitted")));
                }
                let weight = self
                    .books
                    .get(book_barcode)
                    .ok_or_else(|| inconsistent(format!("unknown book {book_barcode}")))?
                    .weight_grams;
                loan.status = LoanStatus::Submitted;
                state.held.push(book_barcode.clone());
                state.inventory_grams += weight;
            }
            CirculationEvent::ReIssued { loan_id, due_at, .. } => {
                let loan = state
                    .loans
                    .get_mut(loan_id)
                    .ok_or_else(|| inconsistent(format!("unknown loan {loan_id}")))?;
                if loan.status != LoanStatus::Active || *due_at <= loan.issued_at {
                    return Err(inconsistent(format!("loan {loan_id} cannot be renewed")));
                }
                loan.due_at = *due_at;
                loan.renewal_count += 1;
            }
            CirculationEvent::Unloaded { books, .. } => {
                if books != &state.held {
                    return Err(inconsistent("unloaded books differ from the payload bay".into()));
                }
                state.held.clear();
                state.inventory_grams = 0;
            }
        }
        Ok(())
    }
}
