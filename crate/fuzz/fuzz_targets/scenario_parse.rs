#![no_main]

use std::path::Path;

use bookbot_core::scenario::Scenario;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = Scenario::from_toml(text, Path::new("."));
    }
});
