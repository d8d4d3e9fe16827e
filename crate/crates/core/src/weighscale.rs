//! Load-cell chain model: strain bridge → 24-bit ADC counts → grams, plus
//! the payload threshold the bot enforces before accepting a book.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const RAW_MAX: i32 = (1 << 23) - 1;
pub const RAW_MIN: i32 = -(1 << 23);

/// Bot payload limit in grams.
pub const DEFAULT_THRESHOLD_GRAMS: f64 = 5000.0;

/// Minimum zero-load samples for a tare.
pub const MIN_TARE_SAMPLES: usize = 8;

/// Jitter bound of the simulated ADC, in counts.
pub const NOISE_COUNTS: i64 = 2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScaleError {
    #[error("reading is at an ADC rail; weight unknown")]
    SaturatedReading,
    #[error("tare needs at least {MIN_TARE_SAMPLES} samples, got {0}")]
    InsufficientSamples(usize),
    #[error("scale must be positive and finite, got {0}")]
    InvalidScale(f64),
    #[error("weight must be non-negative, got {0}")]
    NegativeWeight(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Gain {
    #[default]
    A128,
    A64,
    B32,
}

impl Gain {
    pub fn factor(self) -> u32 {
        match self {
            Gain::A128 => 128,
            Gain::A64 => 64,
            Gain::B32 => 32,
        }
    }
}

/// One conversion result: a sign-extended 24-bit two's-complement value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hx711Sample {
    raw: i32,
    pub gain: Gain,
}

impl Hx711Sample {
    /// Clamps `raw` into the 24-bit range.
    pub fn new(raw: i64, gain: Gain) -> Hx711Sample {
        Hx711Sample {
            raw: raw.clamp(RAW_MIN as i64, RAW_MAX as i64) as i32,
            gain,
        }
    }

    pub fn raw(&self) -> i32 {
        self.raw
    }

    pub fn is_saturated(&self) -> bool {
        self.raw == RAW_MAX || self.raw == RAW_MIN
    }

    /// Interprets the 24 data bits shifted out by the converter.
    pub fn from_bits(bits: u32, gain: Gain) -> Hx711Sample {
        let v = ((bits << 8) as i32) >> 8;
        Hx711Sample { raw: v, gain }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub offset_counts: f64,
    scale_counts_per_gram: f64,
}

impl Calibration {
    pub fn new(offset_counts: f64, scale_counts_per_gram: f64) -> Result<Calibration, ScaleError> {
        if !(scale_counts_per_gram.is_finite() && scale_counts_per_gram > 0.0) {
            return Err(ScaleError::InvalidScale(scale_counts_per_gram));
        }
        Ok(Calibration {
            offset_counts,
            scale_counts_per_gram,
        })
    }

    pub fn scale_counts_per_gram(&self) -> f64 {
        self.scale_counts_per_gram
    }
}

/// Seeded ADC jitter. `None` gives a noiseless bridge.
#[derive(Debug, Clone)]
pub struct BridgeNoise {
    rng: Option<ChaCha8Rng>,
}

impl BridgeNoise {
    pub fn seeded(seed: u64) -> BridgeNoise {
        BridgeNoise {
            rng: Some(ChaCha8Rng::seed_from_u64(seed)),
        }
    }

    pub fn disabled() -> BridgeNoise {
        BridgeNoise { rng: None }
    }

    fn next(&mut self) -> i64 {
        match &mut self.rng {
            Some(rng) => rng.random_range(-NOISE_COUNTS..=NOISE_COUNTS),
            None => 0,
        }
    }
}

/// Converter output for `load_grams` on the bridge.
pub fn simulate_bridge(
    load_grams: f64,
    cal: &Calibration,
    noise: &mut BridgeNoise,
) -> Result<Hx711Sample, ScaleError> {
    if load_grams.is_nan() || load_grams < 0.0 {
        return Err(ScaleError::NegativeWeight(load_grams));
    }
    let ideal = cal.offset_counts + cal.scale_counts_per_gram * load_grams;
    // saturating float→int cast keeps huge loads on the rail
    let raw = (ideal.round() as i64).saturating_add(noise.next());
    Ok(Hx711Sample::new(raw, Gain::A128))
}

pub fn raw_to_grams(sample: &Hx711Sample, cal: &Calibration) -> Result<f64, ScaleError> {
    if sample.is_saturated() {
        return Err(ScaleError::SaturatedReading);
    }
    Ok((sample.raw as f64 - cal.offset_counts) / cal.scale_counts_per_gram)
}

/// Median of zero-load samples as the new offset; the scale is kept.
pub fn tare(samples: &[Hx711Sample], cal: &Calibration) -> Result<Calibration, ScaleError> {
    if samples.len() < MIN_TARE_SAMPLES {
        return Err(ScaleError::InsufficientSamples(samples.len()));
    }
    let mut raws: Vec<i64> = samples.iter().map(|s| s.raw as i64).collect();
    raws.sort_unstable();
    let n = raws.len();
    let median = if n % 2 == 1 {
        raws[n / 2] as f64
    } else {
        (raws[n / 2 - 1] + raws[n / 2]) as f64 / 2.0
    };
    Ok(Calibration {
        offset_counts: median,
        ..*cal
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Decision {
    Accept,
    RejectThreshold,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PayloadPolicy {
    pub threshold_grams: f64,
    pub warn_state: bool,
}

impl Default for PayloadPolicy {
    fn default() -> Self {
        PayloadPolicy {
            threshold_grams: DEFAULT_THRESHOLD_GRAMS,
            warn_state: false,
        }
    }
}

impl PayloadPolicy {
    /// Accepts iff the new total stays at or under the threshold. A
    /// rejection raises the warning, which stays up until [`clear_warning`].
    ///
    /// [`clear_warning`]: PayloadPolicy::clear_warning
    pub fn accept_book(&mut self, current_total_grams: f64, book_grams: f64) -> Decision {
        if current_total_grams + book_grams <= self.threshold_grams {
            Decision::Accept
        } else {
            self.warn_state = true;
            Decision::RejectThreshold
        }
    }

    pub fn clear_warning(&mut self) {
        self.warn_state = false;
    }
}
