//! Student QR tokens: `BB1|<student_id>|<expiry_unix>|<mac_hex16>`, where the
//! MAC is the first 8 bytes of HMAC-SHA-256 over `BB1|<student_id>|<expiry>`.

use hmac::{Hmac, Mac};
use sha2::Sha256;

use super::CirculationError;

type HmacSha256 = Hmac<Sha256>;

pub const TOKEN_PREFIX: &str = "BB1";
pub const MAC_HEX_LEN: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QrToken {
    pub student_id: String,
    pub expiry_unix: i64,
    pub mac: [u8; 8],
}

fn mac_for(secret: &[u8], signed: &str) -> HmacSha256 {
    let mut mac = HmacSha256::new_from_slice(secret).expect("HMAC accepts any key length");
    mac.update(signed.as_bytes());
    mac
}

fn valid_id(id: &str) -> bool {
    !id.is_empty() && id.len() <= 64 && id.bytes().all(|b| b.is_ascii_graphic() && b != b'|')
}

/// Signs a token for `student_id` valid until `expiry_unix` (seconds).
pub fn mint_token(student_id: &str, expiry_unix: i64, secret: &[u8]) -> Result<String, CirculationError> {
    if !valid_id(student_id) || expiry_unix < 0 {
        return Err(CirculationError::MalformedToken);
    }
    let signed = format!("{TOKEN_PREFIX}|{student_id}|{expiry_unix}");
    let tag = mac_for(secret, &signed).finalize().into_bytes();
    Ok(format!("{signed}|{}", hex::encode(&tag[..8])))
}

impl QrToken {
    /// Splits the token text without checking the MAC.
    pub fn parse(text: &str) -> Result<QrToken, CirculationError> {
        let parts: Vec<&str> = text.split('|').collect();
        let [prefix, id, expiry, mac] = parts.as_slice() else {
            return Err(CirculationError::MalformedToken);
        };
        if *prefix != TOKEN_PREFIX
            || !valid_id(id)
            || expiry.is_empty()
            || expiry.len() > 18
            || !expiry.bytes().all(|b| b.is_ascii_digit())
            || mac.len() != MAC_HEX_LEN
            || !mac.bytes().all(|b| b.is_ascii_hexdigit())
        {
            return Err(CirculationError::MalformedToken);
        }
        let mut bytes = [0u8; 8];
        if mac.bytes().any(|b| b.is_ascii_uppercase()) {
            // only the lowercase rendering is ever minted
            return Err(CirculationError::BadMac);
        }
        hex::decode_to_slice(mac, &mut bytes).map_err(|_| CirculationError::MalformedToken)?;
        Ok(QrToken {
            student_id: id.to_string(),
            expiry_unix: expiry.parse().map_err(|_| CirculationError::MalformedToken)?,
            mac: bytes,
        })
    }

    /// Checks the MAC, then expiry. The token is valid while
    /// `now < expiry`.
    pub fn verify(text: &str, now_ms: i64, secret: &[u8]) -> Result<QrToken, CirculationError> {
        let token = QrToken::parse(text)?;
        let signed = format!("{TOKEN_PREFIX}|{}|{}", token.student_id, token.expiry_unix);
        mac_for(secret, &signed)
            .verify_truncated_left(&token.mac)
            .map_err(|_| CirculationError::BadMac)?;
        if token.expiry_unix.saturating_mul(1000) <= now_ms {
            return Err(CirculationError::TokenExpired);
        }
        Ok(token)
    }
}
