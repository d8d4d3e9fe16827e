//! NMEA 0183 sentences: `$<address>,<f1>,...,<fn>*HH\r\n`.

use std::fmt;

use chrono::{DateTime, Datelike, NaiveDate, NaiveTime, Timelike};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NmeaError {
    #[error("illegal character {0:?} in sentence body")]
    IllegalCharacter(char),
    #[error("sentence framing is malformed")]
    Malformed,
    #[error("checksum mismatch: computed {computed:02X}, sentence says {found:02X}")]
    ChecksumMismatch { computed: u8, found: u8 },
    #[error("field {0} is malformed")]
    MalformedField(&'static str),
    #[error("expected a {expected} sentence, got {got}")]
    WrongSentence { expected: &'static str, got: String },
    #[error("{0} out of range")]
    OutOfRange(&'static str),
}

/// XOR of every byte of `body` (the text between `$` and `*`).
pub fn nmea_checksum(body: &str) -> Result<u8, NmeaError> {
    body.chars().try_fold(0u8, |acc, c| match c {
        '$' | '*' | '\r' | '\n' => Err(NmeaError::IllegalCharacter(c)),
        c if !c.is_ascii() => Err(NmeaError::IllegalCharacter(c)),
        c => Ok(acc ^ c as u8),
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NmeaSentence {
    /// Talker and type, e.g. `GPGGA`.
    pub address: String,
    pub fields: Vec<String>,
}

impl NmeaSentence {
    pub fn new(address: &str, fields: Vec<String>) -> Result<NmeaSentence, NmeaError> {
        let s = NmeaSentence {
            address: address.to_string(),
            fields,
        };
        if address.len() != 5 || !address.bytes().all(|b| b.is_ascii_uppercase() || b.is_ascii_digit()) {
            return Err(NmeaError::MalformedField("address"));
        }
        if s.fields.iter().any(|f| f.contains(',')) {
            return Err(NmeaError::IllegalCharacter(','));
        }
        nmea_checksum(&s.body())?;
        Ok(s)
    }

    pub fn body(&self) -> String {
        let mut b = self.address.clone();
        for f in &self.fields {
            b.push(',');
            b.push_str(f);
        }
        b
    }

    pub fn checksum(&self) -> u8 {
        nmea_checksum(&self.body()).expect("validated on construction")
    }

    pub fn kind(&self) -> &str {
        &self.address[2..]
    }

    /// Parses one line; the trailing CR LF is optional.
    pub fn parse(line: &str) -> Result<NmeaSentence, NmeaError> {
        let line = line.strip_suffix("\r\n").or_else(|| line.strip_suffix('\n')).unwrap_or(line);
        let rest = line.strip_prefix('$').ok_or(NmeaError::Malformed)?;
        let (body, hex) = rest.rsplit_once('*').ok_or(NmeaError::Malformed)?;
        if hex.len() != 2 {
            return Err(NmeaError::Malformed);
        }
        let found = u8::from_str_radix(hex, 16).map_err(|_| NmeaError::Malformed)?;
        let computed = nmea_checksum(body)?;
        if computed != found {
            return Err(NmeaError::ChecksumMismatch { computed, found });
        }
        let mut parts = body.split(',');
        let address = parts.next().expect("split yields at least one item");
        NmeaSentence::new(address, parts.map(str::to_string).collect())
    }
}

impl fmt::Display for NmeaSentence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "${}*{:02X}\r\n", self.body(), self.checksum())
    }
}

/// Position fix carried by GGA.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GgaFix {
    pub time_of_day_ms: u32,
    pub lat: f64,
    pub lon: f64,
    pub quality: u8,
    pub sat_count: u8,
    pub hdop: f64,
    pub altitude_m: f64,
}

/// Recommended minimum data carried by RMC.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RmcFix {
    /// Unix epoch milliseconds, resolved to centiseconds on the wire.
    pub utc_ms: i64,
    pub valid: bool,
    pub lat: f64,
    pub lon: f64,
    pub speed_knots: f64,
    pub course_deg: f64,
}

fn fmt_coord(value: f64, deg_width: usize, pos: char, neg: char) -> (String, String) {
    let hemi = if value < 0.0 { neg } else { pos };
    let mut deg = value.abs().trunc();
    let mut min = ((value.abs() - deg) * 60.0 * 1e4).round() / 1e4;
    if min >= 60.0 {
        deg += 1.0;
        min -= 60.0;
    }
    (
        format!("{:0dw$}{:07.4}", deg as u32, min, dw = deg_width),
        hemi.to_string(),
    )
}

fn parse_coord(
    text: &str,
    hemi: &str,
    deg_width: usize,
    pos: &str,
    neg: &str,
    field: &'static str,
) -> Result<f64, NmeaError> {
    let bad = || NmeaError::MalformedField(field);
    if text.len() < deg_width + 2 || !text.is_char_boundary(deg_width) {
        return Err(bad());
    }
    let (d, m) = text.split_at(deg_width);
    if !d.bytes().all(|b| b.is_ascii_digit()) {
        return Err(bad());
    }
    let deg: f64 = d.parse().map_err(|_| bad())?;
    let min: f64 = m.parse().map_err(|_| bad())?;
    if !(0.0..60.0).contains(&min) {
        return Err(bad());
    }
    let v = deg + min / 60.0;
    match hemi {
        h if h == pos => Ok(v),
        h if h == neg => Ok(-v),
        _ => Err(bad()),
    }
}

fn fmt_time(ms_of_day: u32) -> String {
    let cs = ms_of_day / 10;
    format!(
        "{:02}{:02}{:02}.{:02}",
        cs / 360_000,
        cs / 6_000 % 60,
        cs / 100 % 60,
        cs % 100
    )
}

fn parse_time(text: &str) -> Result<u32, NmeaError> {
    let bad = || NmeaError::MalformedField("utc time");
    if text.len() < 6 || !text.is_char_boundary(6) || !text[..6].bytes().all(|b| b.is_ascii_digit()) {
        return Err(bad());
    }
    let num = |r: std::ops::Range<usize>| text[r].parse::<u32>().map_err(|_| bad());
    let (h, m) = (num(0..2)?, num(2..4)?);
    let secs: f64 = text[4..].parse().map_err(|_| bad())?;
    if h > 23 || m > 59 || !(0.0..60.0).contains(&secs) {
        return Err(bad());
    }
    Ok((h * 3600 + m * 60) * 1000 + (secs * 1000.0).round() as u32)
}

fn check_lat_lon(lat: f64, lon: f64) -> Result<(), NmeaError> {
    if !(-90.0..=90.0).contains(&lat) {
        return Err(NmeaError::OutOfRange("latitude"));
    }
    if !(-180.0..=180.0).contains(&lon) {
        return Err(NmeaError::OutOfRange("longitude"));
    }
    Ok(())
}

fn expect_kind(s: &NmeaSentence, kind: &'static str, min_fields: usize) -> Result<(), NmeaError> {
    if s.kind() != kind {
        return Err(NmeaError::WrongSentence {
            expected: kind,
            got: s.address.clone(),
        });
    }
    if s.fields.len() < min_fields {
        return Err(NmeaError::MalformedField("field count"));
    }
    Ok(())
}

pub fn emit_gga(fix: &GgaFix) -> Result<NmeaSentence, NmeaError> {
    check_lat_lon(fix.lat, fix.lon)?;
    if fix.time_of_day_ms >= 86_400_000 {
        return Err(NmeaError::OutOfRange("time of day"));
    }
    let (lat, ns) = fmt_coord(fix.lat, 2, 'N', 'S');
    let (lon, ew) = fmt_coord(fix.lon, 3, 'E', 'W');
    NmeaSentence::new(
        "GPGGA",
        vec![
            fmt_time(fix.time_of_day_ms),
            lat,
            ns,
            lon,
            ew,
            fix.quality.to_string(),
            format!("{:02}", fix.sat_count),
            format!("{:.1}", fix.hdop),
            format!("{:.1}", fix.altitude_m),
            "M".into(),
            "0.0".into(),
            "M".into(),
            String::new(),
            String::new(),
        ],
    )
}

pub fn parse_gga(s: &NmeaSentence) -> Result<GgaFix, NmeaError> {
    expect_kind(s, "GGA", 9)?;
    let f = &s.fields;
    Ok(GgaFix {
        time_of_day_ms: parse_time(&f[0])?,
        lat: parse_coord(&f[1], &f[2], 2, "N", "S", "latitude")?,
        lon: parse_coord(&f[3], &f[4], 3, "E", "W", "longitude")?,
        quality: f[5].parse().map_err(|_| NmeaError::MalformedField("fix quality"))?,
        sat_count: f[6].parse().map_err(|_| NmeaError::MalformedField("satellite count"))?,
        hdop: parse_opt_f64(&f[7], "hdop")?,
        altitude_m: parse_opt_f64(&f[8], "altitude")?,
    })
}

fn parse_opt_f64(text: &str, field: &'static str) -> Result<f64, NmeaError> {
    if text.is_empty() {
        return Ok(0.0);
    }
    text.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or(NmeaError::MalformedField(field))
}

pub fn emit_rmc(fix: &RmcFix) -> Result<NmeaSentence, NmeaError> {
    check_lat_lon(fix.lat, fix.lon)?;
    let dt = DateTime::from_timestamp_millis(fix.utc_ms).ok_or(NmeaError::OutOfRange("utc"))?;
    if !(2000..2100).contains(&dt.year()) {
        return Err(NmeaError::OutOfRange("utc"));
    }
    let ms_of_day = dt.num_seconds_from_midnight() * 1000 + dt.timestamp_subsec_millis();
    let (lat, ns) = fmt_coord(fix.lat, 2, 'N', 'S');
    let (lon, ew) = fmt_coord(fix.lon, 3, 'E', 'W');
    NmeaSentence::new(
        "GPRMC",
        vec![
            fmt_time(ms_of_day),
            if fix.valid { "A" } else { "V" }.into(),
            lat,
            ns,
            lon,
            ew,
            format!("{:.2}", fix.speed_knots),
            format!("{:.2}", fix.course_deg),
            format!("{:02}{:02}{:02}", dt.day(), dt.month(), dt.year() % 100),
            String::new(),
            String::new(),
        ],
    )
}

pub fn parse_rmc(s: &NmeaSentence) -> Result<RmcFix, NmeaError> {
    expect_kind(s, "RMC", 9)?;
    let f = &s.fields;
    let ms_of_day = parse_time(&f[0])?;
    let valid = match f[1].as_str() {
        "A" => true,
        "V" => false,
        _ => return Err(NmeaError::MalformedField("status")),
    };
    let bad_date = || NmeaError::MalformedField("date");
    let d = &f[8];
    if d.len() != 6 || !d.bytes().all(|b| b.is_ascii_digit()) {
        return Err(bad_date());
    }
    let num = |r: std::ops::Range<usize>| d[r].parse::<u32>().expect("ascii digits");
    let date = NaiveDate::from_ymd_opt(2000 + num(4..6) as i32, num(2..4), num(0..2)).ok_or_else(bad_date)?;
    let midnight = date.and_time(NaiveTime::MIN).and_utc().timestamp_millis();
    Ok(RmcFix {
        utc_ms: midnight + ms_of_day as i64,
        valid,
        lat: parse_coord(&f[2], &f[3], 2, "N", "S", "latitude")?,
        lon: parse_coord(&f[4], &f[5], 3, "E", "W", "longitude")?,
        speed_knots: parse_opt_f64(&f[6], "speed")?,
        course_deg: parse_opt_f64(&f[7], "course")?,
    })
}
