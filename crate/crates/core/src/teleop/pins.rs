//! Virtual pins and the HARDWARE body grammar
//! (`vw\0V<k>\0<value>` writes, `vr\0V<k>` reads).

use std::fmt;
use std::str::FromStr;

use crate::botsim::Direction;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pin {
    /// D-pad drive command.
    V0,
    /// Ultrasonic distance, whole cm or `OOR`.
    V1,
    /// GPS position, `lat,lon`.
    V2,
    /// Payload weight, grams.
    V3,
    /// Books on board.
    V4,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PinDirection {
    AppToDevice,
    DeviceToApp,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PinError {
    UnknownPin,
    WrongDirection,
    BadValueGrammar,
}

impl Pin {
    pub const ALL: [Pin; 5] = [Pin::V0, Pin::V1, Pin::V2, Pin::V3, Pin::V4];

    pub fn direction(self) -> PinDirection {
        match self {
            Pin::V0 => PinDirection::AppToDevice,
            _ => PinDirection::DeviceToApp,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Pin::V0 => "V0",
            Pin::V1 => "V1",
            Pin::V2 => "V2",
            Pin::V3 => "V3",
            Pin::V4 => "V4",
        }
    }

    /// Checks `value` against this pin's grammar.
    pub fn validate(self, value: &str) -> Result<(), PinError> {
        let ok = match self {
            Pin::V0 => value.parse::<Direction>().is_ok(),
            Pin::V1 => value == "OOR" || is_uint(value),
            Pin::V2 => value.split_once(',').is_some_and(|(lat, lon)| {
                matches!(parse_decimal(lat), Some(v) if (-90.0..=90.0).contains(&v))
                    && matches!(parse_decimal(lon), Some(v) if (-180.0..=180.0).contains(&v))
            }),
            Pin::V3 => parse_decimal(value).is_some_and(|v| v >= 0.0),
            Pin::V4 => is_uint(value),
        };
        if ok {
            Ok(())
        } else {
            Err(PinError::BadValueGrammar)
        }
    }
}

fn is_uint(s: &str) -> bool {
    !s.is_empty() && s.len() <= 9 && s.bytes().all(|b| b.is_ascii_digit())
}

/// Plain decimal: optional '-', digits, optional fraction. No exponents.
fn parse_decimal(s: &str) -> Option<f64> {
    let body = s.strip_prefix('-').unwrap_or(s);
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    let digits = |p: &str| p.bytes().all(|b| b.is_ascii_digit());
    if int.is_empty() || !digits(int) || !digits(frac) || (body.contains('.') && frac.is_empty()) {
        return None;
    }
    s.parse().ok()
}

impl fmt::Display for Pin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Pin {
    type Err = PinError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Pin::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or(PinError::UnknownPin)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HardwareMsg {
    Write { pin: Pin, value: String },
    Read { pin: Pin },
}

impl HardwareMsg {
    pub fn parse(body: &[u8]) -> Result<HardwareMsg, PinError> {
        let text = std::str::from_utf8(body).map_err(|_| PinError::BadValueGrammar)?;
        let parts: Vec<&str> = text.split('\0').collect();
        match parts.as_slice() {
            ["vw", pin, value] => {
                let pin = parse_pin(pin)?;
                pin.validate(value)?;
                Ok(HardwareMsg::Write {
                    pin,
                    value: value.to_string(),
                })
            }
            ["vr", pin] => Ok(HardwareMsg::Read { pin: parse_pin(pin)? }),
            _ => Err(PinError::BadValueGrammar),
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        match self {
            HardwareMsg::Write { pin, value } => format!("vw\0{pin}\0{value}").into_bytes(),
            HardwareMsg::Read { pin } => format!("vr\0{pin}").into_bytes(),
        }
    }
}

fn parse_pin(s: &str) -> Result<Pin, PinError> {
    match s.strip_prefix('V') {
        Some(n) if !n.is_empty() && n.bytes().all(|b| b.is_ascii_digit()) => s.parse(),
        _ => Err(PinError::BadValueGrammar),
    }
}
