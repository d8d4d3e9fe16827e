//! Scenario files: the world, the bot's start, the GPS anchor, and where to
//! find the catalog and roster.
//!
//! ```toml
//! bot_id = "bookbot-01"
//! clock_start = "2024-01-12T09:00:00Z"
//! catalog = "catalog.toml"
//! roster = "roster.toml"
//!
//! [world]
//! bounds = [0.0, 0.0, 20.0, 12.0]
//! obstacles = [[6.0, 3.0, 7.0, 9.0]]
//!
//! [start]
//! x = 1.0
//! y = 1.0
//! heading = 0.0
//!
//! [gps]
//! anchor_lat = 12.9916
//! anchor_lon = 80.2336
//! ```

use std::path::{Path, PathBuf};

use chrono::DateTime;
use serde::Deserialize;
use thiserror::Error;

use crate::botsim::{DriveParams, Pose, World};
use crate::circulation::{Millis, Seed};
use crate::geolocation::{LocalFrame, NEO6M};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("scenario parse error: {0}")]
    Parse(String),
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error(transparent)]
    Seed(#[from] crate::circulation::CirculationError),
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GpsConfig {
    pub anchor_lat: f64,
    pub anchor_lon: f64,
    #[serde(default = "default_satellites")]
    pub satellites: usize,
    #[serde(default = "default_noise")]
    pub noise_sigma_m: f64,
    #[serde(default = "default_shell")]
    pub shell_radius_m: f64,
}

fn default_satellites() -> usize {
    8
}

fn default_noise() -> f64 {
    0.0
}

fn default_shell() -> f64 {
    20_000.0
}

impl GpsConfig {
    pub fn frame(&self) -> LocalFrame {
        LocalFrame::new(self.anchor_lat, self.anchor_lon)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    bot_id: String,
    #[serde(default)]
    clock_start: Option<String>,
    catalog: PathBuf,
    roster: PathBuf,
    world: World,
    start: Pose,
    gps: GpsConfig,
    #[serde(default)]
    drive: Option<DriveParams>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub bot_id: String,
    pub clock_start: Option<Millis>,
    pub catalog_path: PathBuf,
    pub roster_path: PathBuf,
    pub world: World,
    pub start: Pose,
    pub gps: GpsConfig,
    pub drive: DriveParams,
}

impl Scenario {
    /// Parses scenario text; relative seed paths resolve against `base_dir`.
    pub fn from_toml(text: &str, base_dir: &Path) -> Result<Scenario, ScenarioError> {
        let f: ScenarioFile = toml::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))?;
        let invalid = |m: String| ScenarioError::Invalid(m);
        if f.bot_id.is_empty() {
            return Err(invalid("bot_id is empty".into()));
        }
        f.world.validate().map_err(|e| invalid(e.to_string()))?;
        let drive = f.drive.unwrap_or_default();
        drive.validate().map_err(|e| invalid(e.to_string()))?;
        let start = Pose::new(f.start.x, f.start.y, f.start.heading);
        if !(start.x.is_finite() && start.y.is_finite() && start.heading.is_finite()) {
            return Err(invalid("start pose is not finite".into()));
        }
        if f.world.clearance(start.x, start.y, drive.bot_radius) < 0.0 {
            return Err(invalid("start pose overlaps an obstacle or the world edge".into()));
        }
        let g = &f.gps;
        if !(-90.0..=90.0).contains(&g.anchor_lat) || !(-180.0..=180.0).contains(&g.anchor_lon) {
            return Err(invalid("gps anchor outside lat/lon range".into()));
        }
        if g.anchor_lat.abs() > 89.0 {
            return Err(invalid("gps anchor too close to a pole for the flat frame".into()));
        }
        if !(4..=NEO6M.max_tracked).contains(&g.satellites) {
            return Err(invalid(format!("gps satellites must be 4..={}", NEO6M.max_tracked)));
        }
        if !(g.noise_sigma_m >= 0.0 && g.noise_sigma_m.is_finite()) || !(g.shell_radius_m > 0.0) {
            return Err(invalid("gps noise or shell radius out of range".into()));
        }
        let clock_start = f
            .clock_start
            .as_deref()
            .map(|s| {
                DateTime::parse_from_rfc3339(s)
                    .map(|t| t.timestamp_millis())
                    .map_err(|e| invalid(format!("clock_start: {e}")))
            })
            .transpose()?;
        Ok(Scenario {
            bot_id: f.bot_id,
            clock_start,
            catalog_path: base_dir.join(f.catalog),
            roster_path: base_dir.join(f.roster),
            world: f.world,
            start,
            gps: f.gps,
            drive,
        })
    }

    pub fn load(path: &Path) -> Result<Scenario, ScenarioError> {
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Scenario::from_toml(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn load_seed(&self) -> Result<Seed, ScenarioError> {
        Ok(Seed::load(&self.catalog_path, &self.roster_path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
        bot_id = "bookbot-01"
        clock_start = "2024-01-12T09:00:00Z"
        catalog = "catalog.toml"
        roster = "roster.toml"

        [world]
        bounds = [0.0, 0.0, 20.0, 12.0]
        obstacles = [[6.0, 3.0, 7.0, 9.0]]

        [start]
        x = 1.0
        y = 1.0
        heading = 0.0

        [gps]
        anchor_lat = 12.9916
        anchor_lon = 80.2336
    "#;

    #[test]
    fn parses_and_resolves_paths() {
        let s = Scenario::from_toml(BASE, Path::new("/data/campus")).unwrap();
        assert_eq!(s.catalog_path, Path::new("/data/campus/catalog.toml"));
        assert_eq!(s.clock_start, Some(1_705_050_000_000));
        assert_eq!(s.world.obstacles.len(), 1);
        assert_eq!(s.drive, DriveParams::default());
        assert_eq!(s.gps.satellites, 8);
    }

    #[test]
    fn rejects_bad_worlds() {
        let outside = BASE.replace("[[6.0, 3.0, 7.0, 9.0]]", "[[6.0, 3.0, 27.0, 9.0]]");
        assert!(matches!(Scenario::from_toml(&outside, Path::new(".")), Err(ScenarioError::Invalid(_))));
        let in_wall = BASE.replace("x = 1.0", "x = 6.5").replace("y = 1.0", "y = 5.0");
        assert!(Scenario::from_toml(&in_wall, Path::new(".")).is_err());
        let flat = BASE.replace("[0.0, 0.0, 20.0, 12.0]", "[0.0, 0.0, 0.0, 12.0]");
        assert!(matches!(Scenario::from_toml(&flat, Path::new(".")), Err(ScenarioError::Parse(_))));
        let extra = format!("{BASE}\nwat = 1\n");
        assert!(Scenario::from_toml(&extra, Path::new(".")).is_err());
    }
}
