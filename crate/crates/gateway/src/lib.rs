//! Gateway for the book bot: a deterministic tick engine, an HTTP API with
//! telemetry streams, a teleop TCP listener and a headless script runner.

pub mod api;
pub mod engine;
pub mod runtime;
pub mod script;
pub mod teleop_server;
