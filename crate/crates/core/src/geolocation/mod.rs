//! Simulated GPS receiver: satellite scenes, pseudorange trilateration and
//! NMEA 0183 framing of the resulting fixes.

pub mod nmea;
pub mod solver;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use nmea::{emit_gga, emit_rmc, nmea_checksum, parse_gga, parse_rmc, GgaFix, NmeaError, NmeaSentence, RmcFix};
pub use solver::{random_shell_satellites, synthesize_obs, trilaterate, SolverConfig};

/// Neo-6M characteristics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReceiverSpec {
    pub channels: u32,
    pub sensitivity_dbm: i32,
    pub supply_ma: u32,
    pub max_tracked: usize,
}

pub const NEO6M: ReceiverSpec = ReceiverSpec {
    channels: 50,
    sensitivity_dbm: -161,
    supply_ma: 45,
    max_tracked: 22,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SatelliteObs {
    pub position: Vector3<f64>,
    pub pseudorange: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixSolution {
    pub position: Vector3<f64>,
    /// Receiver clock offset times c, in metres.
    pub clock_bias_m: f64,
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeoError {
    #[error("need at least {needed} satellites, got {got}")]
    InsufficientSatellites { needed: usize, got: usize },
    #[error("satellite geometry is singular (condition number {0:e})")]
    SingularGeometry(f64),
    #[error("satellite coincides with the receiver position")]
    DegenerateGeometry,
    #[error("solver did not converge after {} iterations", .0.iterations)]
    NonConvergence(FixSolution),
    #[error("invalid observation: {0}")]
    InvalidObservation(&'static str),
}

/// Mean equatorial radius used for the flat-frame projection.
pub const EARTH_RADIUS_M: f64 = 6_378_137.0;

/// Equirectangular mapping between the local scene frame (x east, y north,
/// z up, metres) and latitude/longitude around a fixed anchor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalFrame {
    pub anchor_lat: f64,
    pub anchor_lon: f64,
}

impl LocalFrame {
    pub fn new(anchor_lat: f64, anchor_lon: f64) -> LocalFrame {
        LocalFrame {
            anchor_lat,
            anchor_lon,
        }
    }

    /// (lat°, lon°, altitude m)
    pub fn to_geodetic(&self, p: &Vector3<f64>) -> (f64, f64, f64) {
        let lat = self.anchor_lat + (p.y / EARTH_RADIUS_M).to_degrees();
        let lon = self.anchor_lon
            + (p.x / (EARTH_RADIUS_M * self.anchor_lat.to_radians().cos())).to_degrees();
        (lat, lon, p.z)
    }

    pub fn to_local(&self, lat: f64, lon: f64, alt: f64) -> Vector3<f64> {
        let y = (lat - self.anchor_lat).to_radians() * EARTH_RADIUS_M;
        let x = (lon - self.anchor_lon).to_radians()
            * EARTH_RADIUS_M
            * self.anchor_lat.to_radians().cos();
        Vector3::new(x, y, alt)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frame_round_trip() {
        let f = LocalFrame::new(12.9916, 80.2336);
        let p = Vector3::new(123.4, -56.7, 8.0);
        let (lat, lon, alt) = f.to_geodetic(&p);
        let back = f.to_local(lat, lon, alt);
        assert!((back - p).norm() < 1e-6);
        assert_eq!(f.to_geodetic(&Vector3::zeros()), (12.9916, 80.2336, 0.0));
    }

    #[test]
    fn receiver_constants() {
        assert_eq!(NEO6M.channels, 50);
        assert_eq!(NEO6M.sensitivity_dbm, -161);
        assert_eq!(NEO6M.supply_ma, 45);
        assert_eq!(NEO6M.max_tracked, 22);
    }
}
