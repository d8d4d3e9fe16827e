//! Catalog and roster seed files.
//!
//! ```toml
//! # catalog
//! [[book]]
//! barcode = "9780262033848"
//! title = "Introduction to Algorithms"
//! weight_grams = 800
//!
//! # roster
//! [[student]]
//! student_id = "grace2019"
//! display_name = "Grace"
//! hostel = "North"
//!
//! [[loan]]
//! loan_id = "L1"
//! student_id = "grace2019"
//! barcode = "9780262033848"
//! issued_at = "2024-01-01T00:00:00Z"
//! due_at = "2024-01-15T00:00:00Z"
//! ```

use std::collections::BTreeSet;
use std::path::Path;

use chrono::DateTime;
use serde::Deserialize;

use super::{Book, CirculationError, Loan, LoanStatus, Millis, Student};
use crate::symbology::is_valid_ean13;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Seed {
    pub books: Vec<Book>,
    pub students: Vec<Student>,
    pub loans: Vec<Loan>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CatalogFile {
    #[serde(default)]
    book: Vec<Book>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RosterFile {
    #[serde(default)]
    student: Vec<Student>,
    #[serde(default)]
    loan: Vec<LoanRecord>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LoanRecord {
    loan_id: String,
    student_id: String,
    barcode: String,
    issued_at: String,
    due_at: String,
    #[serde(default)]
    renewal_count: u32,
}

fn invalid(msg: impl Into<String>) -> CirculationError {
    CirculationError::InvalidSeed(msg.into())
}

fn parse_time(field: &str, text: &str) -> Result<Millis, CirculationError> {
    DateTime::parse_from_rfc3339(text)
        .map(|t| t.timestamp_millis())
        .map_err(|e| invalid(format!("{field} {text:?}: {e}")))
}

impl Seed {
    pub fn from_toml(catalog: &str, roster: &str) -> Result<Seed, CirculationError> {
        let catalog: CatalogFile = toml::from_str(catalog).map_err(|e| invalid(format!("catalog: {e}")))?;
        let roster: RosterFile = toml::from_str(roster).map_err(|e| invalid(format!("roster: {e}")))?;
        let loans = roster
            .loan
            .into_iter()
            .map(|r| {
                Ok(Loan {
                    issued_at: parse_time("issued_at", &r.issued_at)?,
                    due_at: parse_time("due_at", &r.due_at)?,
                    loan_id: r.loan_id,
                    student_id: r.student_id,
                    barcode: r.barcode,
                    status: LoanStatus::Active,
                    renewal_count: r.renewal_count,
                })
            })
            .collect::<Result<Vec<_>, CirculationError>>()?;
        let seed = Seed {
            books: catalog.book,
            students: roster.student,
            loans,
        };
        seed.validate()?;
        Ok(seed)
    }

    pub fn load(catalog: &Path, roster: &Path) -> Result<Seed, CirculationError> {
        let read = |p: &Path| {
            std::fs::read_to_string(p).map_err(|e| CirculationError::Storage(format!("{}: {e}", p.display())))
        };
        Seed::from_toml(&read(catalog)?, &read(roster)?)
    }

    pub fn validate(&self) -> Result<(), CirculationError> {
        let mut barcodes = BTreeSet::new();
        for b in &self.books {
            if !is_valid_ean13(&b.barcode) {
                return Err(invalid(format!("book barcode {:?} is not a valid EAN-13", b.barcode)));
            }
            if b.weight_grams == 0 {
                return Err(invalid(format!("book {} has zero weight", b.barcode)));
            }
            if !barcodes.insert(b.barcode.as_str()) {
                return Err(invalid(format!("duplicate book {}", b.barcode)));
            }
        }
        let mut students = BTreeSet::new();
        for s in &self.students {
            if s.student_id.is_empty() || s.student_id.contains('|') {
                return Err(invalid(format!("bad student id {:?}", s.student_id)));
            }
            if !students.insert(s.student_id.as_str()) {
                return Err(invalid(format!("duplicate student {}", s.student_id)));
            }
        }
        let mut loans = BTreeSet::new();
        for l in &self.loans {
            if l.loan_id.is_empty() || !loans.insert(l.loan_id.as_str()) {
                return Err(invalid(format!("bad or duplicate loan id {:?}", l.loan_id)));
            }
            if !students.contains(l.student_id.as_str()) {
                return Err(invalid(format!("loan {} names unknown student {}", l.loan_id, l.student_id)));
            }
            if !barcodes.contains(l.barcode.as_str()) {
                return Err(invalid(format!("loan {} names unknown book {}", l.loan_id, l.barcode)));
            }
            if l.due_at <= l.issued_at {
                return Err(invalid(format!("loan {} is due before it was issued", l.loan_id)));
            }
        }
        Ok(())
    }
}
