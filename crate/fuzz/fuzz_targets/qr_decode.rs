#![no_main]

use bookbot_core::symbology::{decode_qr, read_pbm};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(m) = read_pbm(data) {
        let _ = decode_qr(&m);
    }
});
