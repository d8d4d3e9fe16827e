#![no_main]

use bookbot_core::circulation::{parse_log, replay, Seed};
use libfuzzer_sys::fuzz_target;

const CATALOG: &str = include_str!("../../scenarios/campus/catalog.toml");
const ROSTER: &str = include_str!("../../scenarios/campus/roster.toml");

fuzz_target!(|data: &[u8]| {
    let seed = Seed::from_toml(CATALOG, ROSTER).unwrap();
    if let Ok(parsed) = parse_log(data) {
        assert!(parsed.valid_len <= data.len());
        let _ = replay(&seed, &parsed.events);
    }
});
