//! Kinematic differential-drive simulator with a forward ultrasonic ranger.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WorldError {
    #[error("degenerate rectangle {0:?}")]
    DegenerateRect([f64; 4]),
    #[error("obstacle {0:?} lies outside the world bounds")]
    ObstacleOutOfBounds([f64; 4]),
    #[error("unknown direction {0:?}")]
    UnknownDirection(String),
    #[error("invalid drive parameter {0}")]
    InvalidParam(&'static str),
}

/// Wraps an angle into (−π, π].
pub fn normalize_angle(a: f64) -> f64 {
    let h = a.rem_euclid(2.0 * PI);
    if h > PI {
        h - 2.0 * PI
    } else {
        h
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, heading: f64) -> Pose {
        Pose {
            x,
            y,
            heading: normalize_angle(heading),
        }
    }
}

/// Wheel duties in percent; the sign is the H-bridge direction pin.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MotorCommand {
    left_duty: f64,
    right_duty: f64,
}

impl MotorCommand {
    pub const STOP: MotorCommand = MotorCommand {
        left_duty: 0.0,
        right_duty: 0.0,
    };

    pub fn new(left: f64, right: f64) -> MotorCommand {
        let clamp = |d: f64| if d.is_nan() { 0.0 } else { d.clamp(-100.0, 100.0) };
        MotorCommand {
            left_duty: clamp(left),
            right_duty: clamp(right),
        }
    }

    pub fn left(&self) -> f64 {
        self.left_duty
    }

    pub fn right(&self) -> f64 {
        self.right_duty
    }

    pub fn is_stopped(&self) -> bool {
        self.left_duty == 0.0 && self.right_duty == 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Direction {
    N,
    S,
    E,
    W,
    Stop,
}

impl Direction {
    pub fn as_str(&self) -> &'static str {
        match self {
            Direction::N => "N",
            Direction::S => "S",
            Direction::E => "E",
            Direction::W => "W",
            Direction::Stop => "STOP",
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Direction {
    type Err = WorldError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "N" => Ok(Direction::N),
            "S" => Ok(Direction::S),
            "E" => Ok(Direction::E),
            "W" => Ok(Direction::W),
            "STOP" => Ok(Direction::Stop),
            other => Err(WorldError::UnknownDirection(other.to_string())),
        }
    }
}

pub fn dpad_to_motors(direction: Direction) -> MotorCommand {
    match direction {
        Direction::N => MotorCommand::new(100.0, 100.0),
        Direction::S => MotorCommand::new(-100.0, -100.0),
        Direction::W => MotorCommand::new(-60.0, 60.0),
        Direction::E => MotorCommand::new(60.0, -60.0),
        Direction::Stop => MotorCommand::STOP,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriveParams {
    pub wheel_base: f64,
    pub max_wheel_speed: f64,
    pub bot_radius: f64,
    pub max_range: f64,
    pub speed_of_sound: f64,
    pub tick_seconds: f64,
}

impl Default for DriveParams {
    fn default() -> Self {
        DriveParams {
            wheel_base: 0.20,
            max_wheel_speed: 0.5,
            bot_radius: 0.15,
            max_range: 4.0,
            speed_of_sound: 343.0,
            tick_seconds: 0.05,
        }
    }
}

impl DriveParams {
    pub fn validate(&self) -> Result<(), WorldError> {
        let fields = [
            (self.wheel_base, "wheel_base"),
            (self.max_wheel_speed, "max_wheel_speed"),
            (self.bot_radius, "bot_radius"),
            (self.max_range, "max_range"),
            (self.speed_of_sound, "speed_of_sound"),
            (self.tick_seconds, "tick_seconds"),
        ];
        for (v, name) in fields {
            if !(v > 0.0 && v.is_finite()) {
                return Err(WorldError::InvalidParam(name));
            }
        }
        Ok(())
    }
}

/// Axis-aligned rectangle, serialized as `[xmin, ymin, xmax, ymax]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 4]", into = "[f64; 4]")]
pub struct Aabb {
    pub xmin: f64,
    pub ymin: f64,
    pub xmax: f64,
    pub ymax: f64,
}

impl Aabb {
    pub fn new(xmin: f64, ymin: f64, xmax: f64, ymax: f64) -> Result<Aabb, WorldError> {
        let r = [xmin, ymin, xmax, ymax];
        if !r.iter().all(|v| v.is_finite()) || xmin >= xmax || ymin >= ymax {
            return Err(WorldError::DegenerateRect(r));
        }
        Ok(Aabb {
            xmin,
            ymin,
            xmax,
            ymax,
        })
    }

    pub fn distance_to(&self, x: f64, y: f64) -> f64 {
        let dx = (self.xmin - x).max(0.0).max(x - self.xmax);
        let dy = (self.ymin - y).max(0.0).max(y - self.ymax);
        dx.hypot(dy)
    }

    fn contains_rect(&self, o: &Aabb) -> bool {
        o.xmin >= self.xmin && o.xmax <= self.xmax && o.ymin >= self.ymin && o.ymax <= self.ymax
    }

    /// Smallest t ≥ 0 where the ray `origin + t·dir` is inside the box.
    fn ray_entry(&self, ox: f64, oy: f64, dx: f64, dy: f64) -> Option<f64> {
        let mut t0 = 0.0f64;
        let mut t1 = f64::INFINITY;
        for (o, d, lo, hi) in [(ox, dx, self.xmin, self.xmax), (oy, dy, self.ymin, self.ymax)] {
            if d.abs() < 1e-15 {
                if o < lo || o > hi {
                    return None;
                }
            } else {
                let (a, b) = ((lo - o) / d, (hi - o) / d);
                t0 = t0.max(a.min(b));
                t1 = t1.min(a.max(b));
            }
        }
        (t0 <= t1).then_some(t0)
    }

    /// Distance along the ray from an interior point to the boundary.
    fn ray_exit(&self, ox: f64, oy: f64, dx: f64, dy: f64) -> f64 {
        let mut t = f64::INFINITY;
        for (o, d, lo, hi) in [(ox, dx, self.xmin, self.xmax), (oy, dy, self.ymin, self.ymax)] {
            if d > 1e-15 {
                t = t.min((hi - o) / d);
            } else if d < -1e-15 {
                t = t.min((lo - o) / d);
            }
        }
        t.max(0.0)
    }
}

impl TryFrom<[f64; 4]> for Aabb {
    type Error = WorldError;

    fn try_from(r: [f64; 4]) -> Result<Self, Self::Error> {
        Aabb::new(r[0], r[1], r[2], r[3])
    }
}

impl From<Aabb> for [f64; 4] {
    fn from(r: Aabb) -> Self {
        [r.xmin, r.ymin, r.xmax, r.ymax]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct World {
    pub bounds: Aabb,
    #[serde(default)]
    pub obstacles: Vec<Aabb>,
}

impl World {
    pub fn new(bounds: Aabb, obstacles: Vec<Aabb>) -> Result<World, WorldError> {
        let w = World { bounds, obstacles };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<(), WorldError> {
        for o in &self.obstacles {
            if !self.bounds.contains_rect(o) {
                return Err(WorldError::ObstacleOutOfBounds((*o).into()));
            }
        }
        Ok(())
    }

    /// Clearance between a disc of `radius` at (x, y) and the nearest
    /// obstacle or wall; negative when overlapping.
    pub fn clearance(&self, x: f64, y: f64, radius: f64) -> f64 {
        let b = &self.bounds;
        let walls = (x - b.xmin).min(b.xmax - x).min(y - b.ymin).min(b.ymax - y);
        self.obstacles
            .iter()
            .map(|o| o.distance_to(x, y))
            .fold(walls, f64::min)
            - radius
    }
}

/// Advances the pose along the exact constant-twist arc.
/// A non-positive or non-finite `dt` leaves the pose unchanged.
pub fn step(pose: &Pose, cmd: &MotorCommand, dt: f64, params: &DriveParams) -> Pose {
    if !(dt > 0.0 && dt.is_finite()) {
        return *pose;
    }
    let vl = cmd.left() / 100.0 * params.max_wheel_speed;
    let vr = cmd.right() / 100.0 * params.max_wheel_speed;
    let v = (vl + vr) / 2.0;
    let omega = (vr - vl) / params.wheel_base;
    let th = pose.heading;
    if omega.abs() < 1e-9 {
        return Pose::new(
            pose.x + v * dt * th.cos(),
            pose.y + v * dt * th.sin(),
            th + omega * dt,
        );
    }
    let th1 = th + omega * dt;
    let r = v / omega;
    Pose::new(
        pose.x + r * (th1.sin() - th.sin()),
        pose.y - r * (th1.cos() - th.cos()),
        th1,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "meters", rename_all = "snake_case")]
pub enum Echo {
    Distance(f64),
    OutOfRange,
}

impl Echo {
    /// Whole centimetres, or `OOR`.
    pub fn pin_text(&self) -> String {
        match self {
            Echo::Distance(d) => format!("{}", (d * 100.0).round() as i64),
            Echo::OutOfRange => "OOR".to_string(),
        }
    }
}

/// Single forward ray from the bot centre to the first obstacle or wall.
pub fn ultrasonic_range(pose: &Pose, world: &World, params: &DriveParams) -> Echo {
    let (dx, dy) = (pose.heading.cos(), pose.heading.sin());
    let d = world
        .obstacles
        .iter()
        .filter_map(|o| o.ray_entry(pose.x, pose.y, dx, dy))
        .fold(world.bounds.ray_exit(pose.x, pose.y, dx, dy), f64::min)
        .max(0.0);
    let echo_seconds = 2.0 * d / params.speed_of_sound;
    let measured = echo_seconds * params.speed_of_sound / 2.0;
    if measured > params.max_range {
        Echo::OutOfRange
    } else {
        Echo::Distance(measured)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GuardOutcome {
    pub pose: Pose,
    pub blocked: bool,
}

/// First fraction of the segment at which an obstacle inflated by `radius`
/// is touched. The clearance along a line is convex, so its minimiser is
/// found by golden-section search and the contact by bisection before it.
fn obstacle_contact(o: &Aabb, from: (f64, f64), to: (f64, f64), radius: f64) -> f64 {
    let at = |t: f64| (from.0 + (to.0 - from.0) * t, from.1 + (to.1 - from.1) * t);
    let d = |t: f64| {
        let (x, y) = at(t);
        o.distance_to(x, y) - radius
    };
    let d0 = d(0.0);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (0.0f64, 1.0f64);
    for _ in 0..80 {
        let m1 = b - g * (b - a);
        let m2 = a + g * (b - a);
        if d(m1) <= d(m2) {
            b = m2;
        } else {
            a = m1;
        }
    }
    let tm = (a + b) / 2.0;
    let d1 = d(1.0);
    if d(tm).min(d1).min(d0) > 0.0 {
        return 1.0;
    }
    if d0 <= 0.0 {
        // already touching: only motion that does not deepen contact passes
        return if d(tm) >= d0 - 1e-12 && d1 >= d0 - 1e-12 { 1.0 } else { 0.0 };
    }
    let hi_end = if d(tm) <= 0.0 { tm } else { 1.0 };
    let (mut lo, mut hi) = (0.0, hi_end);
    for _ in 0..100 {
        let mid = (lo + hi) / 2.0;
        if d(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

fn bounds_contact(b: &Aabb, from: (f64, f64), to: (f64, f64), radius: f64) -> f64 {
    let mut t = 1.0f64;
    for (p0, p1, lo, hi) in [
        (from.0, to.0, b.xmin + radius, b.xmax - radius),
        (from.1, to.1, b.ymin + radius, b.ymax - radius),
    ] {
        let dp = p1 - p0;
        if dp > 0.0 && p1 > hi {
            t = t.min(((hi - p0) / dp).max(0.0));
        } else if dp < 0.0 && p1 < lo {
            t = t.min(((lo - p0) / dp).max(0.0));
        }
    }
    t
}

/// Clips the straight segment `pose → proposed` at the first contact with
/// an inflated obstacle or the shrunken bounds. Heading is interpolated by
/// the same fraction.
pub fn collision_guard(pose: &Pose, proposed: &Pose, world: &World, params: &DriveParams) -> GuardOutcome {
    let from = (pose.x, pose.y);
    let to = (proposed.x, proposed.y);
    let r = params.bot_radius;
    let t = world
        .obstacles
        .iter()
        .map(|o| obstacle_contact(o, from, to, r))
        .fold(bounds_contact(&world.bounds, from, to, r), f64::min);
    if t >= 1.0 {
        return GuardOutcome {
            pose: *proposed,
            blocked: false,
        };
    }
    let turn = normalize_angle(proposed.heading - pose.heading);
    GuardOutcome {
        pose: Pose::new(
            from.0 + (to.0 - from.0) * t,
            from.1 + (to.1 - from.1) * t,
            pose.heading + turn * t,
        ),
        blocked: true,
    }
}

/// Pose plus the motor command currently applied.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BotState {
    pub pose: Pose,
    pub cmd: MotorCommand,
}

impl BotState {
    pub fn new(pose: Pose) -> BotState {
        BotState {
            pose,
            cmd: MotorCommand::STOP,
        }
    }

    /// One simulation tick. A blocked move zeroes the motors; returns true
    /// when that happened.
    pub fn tick(&mut self, world: &World, params: &DriveParams) -> bool {
        if self.cmd.is_stopped() {
            return false;
        }
        let proposed = step(&self.pose, &self.cmd, params.tick_seconds, params);
        let out = collision_guard(&self.pose, &proposed, world, params);
        self.pose = out.pose;
        if out.blocked {
            self.cmd = MotorCommand::STOP;
        }
        out.blocked
    }
}
