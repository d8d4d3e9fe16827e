#![no_main]

use bookbot_core::circulation::Seed;
use libfuzzer_sys::fuzz_target;

// Catalog and roster separated by a NUL byte.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let (catalog, roster) = text.split_once('\0').unwrap_or((text, ""));
    if let Ok(seed) = Seed::from_toml(catalog, roster) {
        assert!(seed.validate().is_ok());
    }
});
