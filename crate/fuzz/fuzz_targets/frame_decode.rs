#![no_main]

use bookbot_core::teleop::{decode_frame, encode_frame};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok((frame, used)) = decode_frame(data) {
        let again = encode_frame(frame.command, frame.msg_id, &frame.body).unwrap();
        assert_eq!(&again[..], &data[..used]);
    }
});
