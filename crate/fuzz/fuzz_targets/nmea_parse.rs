#![no_main]

use bookbot_core::geolocation::{parse_gga, parse_rmc, NmeaSentence};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(line) = std::str::from_utf8(data) else { return };
    if let Ok(s) = NmeaSentence::parse(line) {
        let _ = parse_gga(&s);
        let _ = parse_rmc(&s);
        let text = s.to_string();
        assert_eq!(NmeaSentence::parse(text.trim_end()).as_ref(), Ok(&s));
    }
});
