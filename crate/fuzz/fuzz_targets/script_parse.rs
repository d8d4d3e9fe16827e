#![no_main]

use bookbot_gateway::script::parse_script;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(lines) = parse_script(text) {
            assert!(lines.windows(2).all(|w| w[0].tick <= w[1].tick));
        }
    }
});
