#![no_main]

use bookbot_core::symbology::{decode_ean13, is_valid_ean13, read_pgm};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(scan) = read_pgm(data) {
        if let Ok(r) = decode_ean13(&scan) {
            assert!(is_valid_ean13(r.text().unwrap()));
        }
    }
});
