#![no_main]

use bookbot_core::teleop::{decode_frame, AuthToken, Effect, Session};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let token = AuthToken::new("0123456789abcdef0123456789abcdef").unwrap();
    let mut session = Session::new(0);
    let mut rest = data;
    let mut now = 0;
    while let Ok((frame, used)) = decode_frame(rest) {
        rest = &rest[used..];
        now += 100;
        let authed = session.is_authenticated();
        for effect in session.handle(&frame, now, &token) {
            assert!(authed || matches!(effect, Effect::Reply(_) | Effect::Close));
        }
    }
    session.poll_timeout(now + 20_000);
    session.disconnect();
});
