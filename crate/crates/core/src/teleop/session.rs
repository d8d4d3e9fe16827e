//! Connection state machine, independent of any transport. The caller feeds
//! decoded frames and clock readings in and carries out the returned effects.

use std::fmt;

use subtle::ConstantTimeEq;
use thiserror::Error;

use super::frame::{Frame, CMD_HARDWARE, CMD_LOGIN, CMD_PING, CMD_RESPONSE};
use super::pins::{HardwareMsg, Pin, PinDirection, PinError};
use crate::botsim::Direction;

pub const STATUS_OK: u8 = 0;
pub const STATUS_INVALID_TOKEN: u8 = 1;
pub const STATUS_ILLEGAL_COMMAND: u8 = 2;
pub const STATUS_UNKNOWN_PIN: u8 = 3;
pub const STATUS_WRONG_DIRECTION: u8 = 4;
pub const STATUS_BAD_VALUE: u8 = 5;

/// Silence longer than this closes the session.
pub const HEARTBEAT_TIMEOUT_MS: u64 = 10_000;

pub const TOKEN_LEN: usize = 32;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("auth token must be {TOKEN_LEN} printable ASCII characters")]
pub struct BadToken;

/// Shared secret for LOGIN.
#[derive(Clone, PartialEq, Eq)]
pub struct AuthToken(String);

impl AuthToken {
    pub fn new(token: &str) -> Result<AuthToken, BadToken> {
        if token.len() != TOKEN_LEN || !token.bytes().all(|b| b.is_ascii_graphic()) {
            return Err(BadToken);
        }
        Ok(AuthToken(token.to_string()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn matches(&self, candidate: &[u8]) -> bool {
        candidate.len() == self.0.len() && bool::from(self.0.as_bytes().ct_eq(candidate))
    }
}

impl fmt::Debug for AuthToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("AuthToken(..)")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    Device,
    App,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SessionState {
    AwaitingLogin,
    Active(Role),
    Closed,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Effect {
    Reply(Frame),
    /// An app wrote the d-pad pin.
    Drive(Direction),
    /// A device wrote one of its pins; fan out to every app session.
    Publish { pin: Pin, value: String },
    /// Answer with the cached value of `pin`, echoing `msg_id`.
    Read { pin: Pin, msg_id: u16 },
    /// The device link is gone; the bot must stop.
    FailSafeStop,
    Close,
}

#[derive(Debug, Clone)]
pub struct Session {
    state: SessionState,
    last_heard_ms: u64,
}

impl Session {
    pub fn new(now_ms: u64) -> Session {
        Session {
            state: SessionState::AwaitingLogin,
            last_heard_ms: now_ms,
        }
    }

    pub fn state(&self) -> SessionState {
        self.state
    }

    pub fn role(&self) -> Option<Role> {
        match self.state {
            SessionState::Active(r) => Some(r),
            _ => None,
        }
    }

    pub fn is_authenticated(&self) -> bool {
        self.role().is_some()
    }

    pub fn is_closed(&self) -> bool {
        self.state == SessionState::Closed
    }

    pub fn handle(&mut self, frame: &Frame, now_ms: u64, token: &AuthToken) -> Vec<Effect> {
        let role = match self.state {
            SessionState::Closed => return Vec::new(),
            SessionState::AwaitingLogin => {
                self.last_heard_ms = now_ms;
                return self.handle_login(frame, token);
            }
            SessionState::Active(role) => role,
        };
        self.last_heard_ms = now_ms;
        let reply = |status| Effect::Reply(Frame::response(frame.msg_id, status));
        match frame.command {
            CMD_PING => vec![reply(STATUS_OK)],
            CMD_RESPONSE => Vec::new(),
            CMD_HARDWARE => match HardwareMsg::parse(&frame.body) {
                Ok(HardwareMsg::Read { pin }) => vec![Effect::Read {
                    pin,
                    msg_id: frame.msg_id,
                }],
                Ok(HardwareMsg::Write { pin, value }) => {
                    let allowed = match role {
                        Role::App => PinDirection::AppToDevice,
                        Role::Device => PinDirection::DeviceToApp,
                    };
                    if pin.direction() != allowed {
                        return vec![reply(STATUS_WRONG_DIRECTION)];
                    }
                    let effect = match pin {
                        Pin::V0 => Effect::Drive(value.parse().expect("validated grammar")),
                        _ => Effect::Publish { pin, value },
                    };
                    vec![effect, reply(STATUS_OK)]
                }
                Err(PinError::UnknownPin) => vec![reply(STATUS_UNKNOWN_PIN)],
                Err(PinError::WrongDirection) => vec![reply(STATUS_WRONG_DIRECTION)],
                Err(PinError::BadValueGrammar) => vec![reply(STATUS_BAD_VALUE)],
            },
            _ => vec![reply(STATUS_ILLEGAL_COMMAND)],
        }
    }

    fn handle_login(&mut self, frame: &Frame, token: &AuthToken) -> Vec<Effect> {
        let reply = |status| Effect::Reply(Frame::response(frame.msg_id, status));
        if frame.command != CMD_LOGIN {
            self.state = SessionState::Closed;
            return vec![reply(STATUS_ILLEGAL_COMMAND), Effect::Close];
        }
        // token, or token NUL role
        let (secret, role) = match frame.body.iter().position(|&b| b == 0) {
            None => (&frame.body[..], Some(Role::Device)),
            Some(i) => (
                &frame.body[..i],
                match &frame.body[i + 1..] {
                    b"device" => Some(Role::Device),
                    b"app" => Some(Role::App),
                    _ => None,
                },
            ),
        };
        let token_ok = token.matches(secret);
        match (token_ok, role) {
            (true, Some(role)) => {
                self.state = SessionState::Active(role);
                vec![reply(STATUS_OK)]
            }
            (true, None) => vec![reply(STATUS_ILLEGAL_COMMAND)],
            (false, _) => vec![reply(STATUS_INVALID_TOKEN)],
        }
    }

    /// Closes the session when nothing has arrived for longer than
    /// [`HEARTBEAT_TIMEOUT_MS`].
    pub fn poll_timeout(&mut self, now_ms: u64) -> Vec<Effect> {
        if self.is_closed() || now_ms.saturating_sub(self.last_heard_ms) <= HEARTBEAT_TIMEOUT_MS {
            return Vec::new();
        }
        let mut effects = self.disconnect();
        effects.push(Effect::Close);
        effects
    }

    /// The transport went away.
    pub fn disconnect(&mut self) -> Vec<Effect> {
        let was = std::mem::replace(&mut self.state, SessionState::Closed);
        if was == SessionState::Active(Role::Device) {
            vec![Effect::FailSafeStop]
        } else {
            Vec::new()
        }
    }
}
