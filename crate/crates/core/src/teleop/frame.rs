//! Wire framing: `cmd:u8 | msg_id:u16 BE | len:u16 BE | body[len]`.

use thiserror::Error;

pub const HEADER_LEN: usize = 5;
pub const MAX_BODY: usize = u16::MAX as usize;

pub const CMD_RESPONSE: u8 = 0x00;
pub const CMD_LOGIN: u8 = 0x02;
pub const CMD_PING: u8 = 0x06;
pub const CMD_HARDWARE: u8 = 0x14;

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum FrameError {
    #[error("need at least {0} more bytes")]
    NeedMoreBytes(usize),
    #[error("body of {len} bytes exceeds the {max}-byte limit")]
    OversizeBody { len: usize, max: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Frame {
    pub command: u8,
    pub msg_id: u16,
    pub body: Vec<u8>,
}

impl Frame {
    pub fn new(command: u8, msg_id: u16, body: impl Into<Vec<u8>>) -> Frame {
        Frame {
            command,
            msg_id,
            body: body.into(),
        }
    }

    pub fn response(msg_id: u16, status: u8) -> Frame {
        Frame::new(CMD_RESPONSE, msg_id, vec![status])
    }

    /// Status byte of a RESPONSE frame.
    pub fn status(&self) -> Option<u8> {
        (self.command == CMD_RESPONSE && self.body.len() == 1).then(|| self.body[0])
    }

    pub fn encode(&self) -> Result<Vec<u8>, FrameError> {
        encode_frame(self.command, self.msg_id, &self.body)
    }
}

pub fn encode_frame(command: u8, msg_id: u16, body: &[u8]) -> Result<Vec<u8>, FrameError> {
    if body.len() > MAX_BODY {
        return Err(FrameError::OversizeBody {
            len: body.len(),
            max: MAX_BODY,
        });
    }
    let mut out = Vec::with_capacity(HEADER_LEN + body.len());
    out.push(command);
    out.extend_from_slice(&msg_id.to_be_bytes());
    out.extend_from_slice(&(body.len() as u16).to_be_bytes());
    out.extend_from_slice(body);
    Ok(out)
}

/// Decodes the first frame in `bytes`, returning it with the number of
/// bytes consumed.
pub fn decode_frame(bytes: &[u8]) -> Result<(Frame, usize), FrameError> {
    decode_frame_limited(bytes, MAX_BODY)
}

/// Like [`decode_frame`] but rejects headers announcing more than
/// `max_body` bytes before waiting for them.
pub fn decode_frame_limited(bytes: &[u8], max_body: usize) -> Result<(Frame, usize), FrameError> {
    if bytes.len() < HEADER_LEN {
        return Err(FrameError::NeedMoreBytes(HEADER_LEN - bytes.len()));
    }
    let len = u16::from_be_bytes([bytes[3], bytes[4]]) as usize;
    if len > max_body {
        return Err(FrameError::OversizeBody { len, max: max_body });
    }
    let total = HEADER_LEN + len;
    if bytes.len() < total {
        return Err(FrameError::NeedMoreBytes(total - bytes.len()));
    }
    let frame = Frame {
        command: bytes[0],
        msg_id: u16::from_be_bytes([bytes[1], bytes[2]]),
        body: bytes[HEADER_LEN..total].to_vec(),
    };
    Ok((frame, total))
}

/// Next outgoing message id: 1..=65535, wrapping past 0.
pub fn next_msg_id(id: u16) -> u16 {
    if id == u16::MAX {
        1
    } else {
        id + 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ping_bytes() {
        assert_eq!(encode_frame(CMD_PING, 1, &[]).unwrap(), [0x06, 0x00, 0x01, 0x00, 0x00]);
    }

    #[test]
    fn short_input() {
        assert_eq!(decode_frame(&[0x06, 0, 1]), Err(FrameError::NeedMoreBytes(2)));
        assert_eq!(decode_frame(&[0x14, 0, 1, 0, 3, b'v']), Err(FrameError::NeedMoreBytes(2)));
    }

    #[test]
    fn oversize() {
        let big = vec![0u8; MAX_BODY + 1];
        assert!(matches!(encode_frame(CMD_HARDWARE, 1, &big), Err(FrameError::OversizeBody { .. })));
        assert_eq!(
            decode_frame_limited(&[0x14, 0, 1, 0x10, 0x00], 1024),
            Err(FrameError::OversizeBody { len: 4096, max: 1024 })
        );
    }

    #[test]
    fn msg_id_wraps_to_one() {
        assert_eq!(next_msg_id(65535), 1);
        assert_eq!(next_msg_id(0), 1);
        assert_eq!(next_msg_id(41), 42);
    }

    fn any_frame() -> impl Strategy<Value = Frame> {
        (any::<u8>(), any::<u16>(), proptest::collection::vec(any::<u8>(), 0..300))
            .prop_map(|(c, id, b)| Frame::new(c, id, b))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(2000))]

        #[test]
        fn round_trip(f in any_frame()) {
            let bytes = f.encode().unwrap();
            prop_assert_eq!(decode_frame(&bytes).unwrap(), (f, bytes.len()));
        }

        #[test]
        fn concatenation_splits_exactly(frames in proptest::collection::vec(any_frame(), 0..10)) {
            let stream: Vec<u8> = frames.iter().flat_map(|f| f.encode().unwrap()).collect();
            let mut rest = &stream[..];
            let mut out = Vec::new();
            while !rest.is_empty() {
                let (f, n) = decode_frame(rest).unwrap();
                out.push(f);
                rest = &rest[n..];
            }
            prop_assert_eq!(out, frames);
        }

        #[test]
        fn decode_is_total(bytes in proptest::collection::vec(any::<u8>(), 0..64)) {
            match decode_frame(&bytes) {
                Ok((f, n)) => prop_assert_eq!(n, HEADER_LEN + f.body.len()),
                Err(FrameError::NeedMoreBytes(k)) => prop_assert!(k > 0),
                Err(e) => prop_assert!(false, "{e}"),
            }
        }
    }
}
