#![allow(dead_code)]

use std::path::PathBuf;

use bookbot_core::circulation::{mint_token, Seed};
use bookbot_core::scenario::Scenario;
use bookbot_gateway::engine::{Engine, EngineOptions, Store};

pub const TOKEN: &str = "0123456789abcdef0123456789abcdef";

pub fn campus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/campus")
}

pub fn campus() -> (Scenario, Seed) {
    let scenario = Scenario::load(&campus_dir().join("scenario.toml")).expect("campus scenario");
    let seed = scenario.load_seed().expect("campus seed");
    (scenario, seed)
}

pub fn engine(seed: u64) -> Engine {
    let (scenario, lib_seed) = campus();
    let clock = scenario.clock_start.expect("campus clock");
    Engine::new(
        scenario,
        &lib_seed,
        Store::Memory(Vec::new()),
        &[],
        EngineOptions {
            seed,
            clock_start_ms: clock,
            secret: TOKEN.as_bytes().to_vec(),
        },
    )
    .expect("engine")
}

/// A token for `student` valid for `ttl_s` seconds after `engine.now()`.
pub fn token_for(engine: &Engine, student: &str, ttl_s: i64) -> String {
    mint_token(student, engine.now() / 1000 + ttl_s, TOKEN.as_bytes()).unwrap()
}
