#![no_main]

use bookbot_core::circulation::QrToken;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let _ = QrToken::parse(text);
    let _ = QrToken::verify(text, 1_700_000_000_000, b"0123456789abcdef0123456789abcdef");
});
