#![no_main]

use bookbot_core::symbology::{read_pbm, read_pgm, write_pbm, write_pgm};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(m) = read_pbm(data) {
        assert_eq!(read_pbm(&write_pbm(&m)).unwrap(), m);
    }
    if let Ok(s) = read_pgm(data) {
        assert_eq!(read_pgm(&write_pgm(&s)).unwrap(), s);
    }
});
