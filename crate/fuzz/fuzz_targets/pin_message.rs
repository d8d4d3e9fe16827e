#![no_main]

use bookbot_core::teleop::HardwareMsg;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(msg) = HardwareMsg::parse(data) {
        assert_eq!(HardwareMsg::parse(&msg.encode()), Ok(msg));
    }
});
