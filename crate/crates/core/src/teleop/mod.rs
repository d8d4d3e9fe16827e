//! Token-authenticated binary protocol between the bot, the gateway and
//! operator apps.

pub mod frame;
pub mod pins;
pub mod session;

pub use frame::{
    decode_frame, decode_frame_limited, encode_frame, next_msg_id, Frame, FrameError, CMD_HARDWARE, CMD_LOGIN,
    CMD_PING, CMD_RESPONSE,
};
pub use pins::{HardwareMsg, Pin, PinDirection, PinError};
pub use session::{AuthToken, BadToken, Effect, Role, Session, SessionState, HEARTBEAT_TIMEOUT_MS};
