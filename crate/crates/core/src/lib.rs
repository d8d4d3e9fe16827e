//! Hardware-free library book bot.
//!
//! The crate bundles every piece of the bot that does not need a network
//! runtime: the barcode and QR codec, the load-cell model, GPS simulation
//! and trilateration, the differential-drive simulator, the teleoperation
//! wire protocol, and the circulation workflow with its event log.

pub mod symbology;
pub mod weighscale;
pub mod geolocation;
pub mod botsim;
pub mod teleop;
pub mod circulation;
pub mod scenario;
