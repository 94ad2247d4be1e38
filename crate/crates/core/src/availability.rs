//! Slot model and availability-vector arithmetic.
//!
//! A day is split into `K` equal slots. An [`AvailabilityVector`] holds, per
//! slot, the probability that a peer (or at least one member of a group) is
//! online. Members are assumed to be independent, so combining vectors is the
//! complement of the product of the per-member offline probabilities.

use std::f64::consts::PI;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Lower clamp applied to every generated or ingested availability.
pub const EPSILON: f64 = 1e-6;

/// Default number of slots per day (2-hour slots).
pub const DEFAULT_SLOTS: usize = 12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AvailabilityError {
    #[error("vector length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("availability {value} at slot {index} is outside [0, 1]")]
    OutOfRange { index: usize, value: f64 },
    #[error("slot {slot} is out of range for {slots} slots")]
    InvalidSlot { slot: usize, slots: usize },
    #[error("roster is empty")]
    EmptyRoster,
    #[error("alpha must be at least 1, got {0}")]
    InvalidAlpha(usize),
    #[error("invalid generator parameters: {0}")]
    InvalidParams(String),
}

/// Position of a slot within the day, always below the slot count it was
/// created for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SlotIndex(usize);

impl SlotIndex {
    pub fn new(slot: usize, slots: usize) -> Result<Self, AvailabilityError> {
        if slot < slots {
            Ok(SlotIndex(slot))
        } else {
            Err(AvailabilityError::InvalidSlot { slot, slots })
        }
    }

    pub fn get(self) -> usize {
        self.0
    }
}

/// Checks that `values` has `slots` entries, all within `[0, 1]`.
pub fn validate(values: &[f64], slots: usize) -> Result<(), AvailabilityError> {
    if values.len() != slots {
        return Err(AvailabilityError::LengthMismatch {
            expected: slots,
            found: values.len(),
        });
    }
    for (index, &value) in values.iter().enumerate() {
        if !(0.0..=1.0).contains(&value) {
            return Err(AvailabilityError::OutOfRange { index, value });
        }
    }
    Ok(())
}

/// Per-slot presence probabilities of a peer or a group.
#[derive(Debug, Clone, PartialEq)]
pub struct AvailabilityVector {
    slots: Vec<f64>,
}

impl AvailabilityVector {
    /// Builds a vector after validating every element lies in `[0, 1]`.
    pub fn new(values: Vec<f64>) -> Result<Self, AvailabilityError> {
        validate(&values, values.len())?;
        Ok(AvailabilityVector { slots: values })
    }

    /// Builds a vector, requiring exactly `slots` elements.
    pub fn with_slots(values: Vec<f64>, slots: usize) -> Result<Self, AvailabilityError> {
        validate(&values, slots)?;
        Ok(AvailabilityVector { slots: values })
    }

    /// Constant vector, `value` clamped into `[0, 1]`.
    pub fn uniform(value: f64, slots: usize) -> Self {
        AvailabilityVector {
            slots: vec![value.clamp(0.0, 1.0); slots],
        }
    }

    /// Returns a copy with every element clamped into `[EPSILON, 1]`.
    pub fn clamped(&self) -> Self {
        AvailabilityVector {
            slots: self.slots.iter().map(|v| clamp_probability(*v)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.slots
    }

    pub fn get(&self, slot: SlotIndex) -> f64 {
        self.slots[slot.0]
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.slots.iter().copied()
    }

    /// True when every slot of `self` is at least the matching slot of `other`.
    pub fn dominates(&self, other: &AvailabilityVector) -> bool {
        self.len() == other.len() && self.iter().zip(other.iter()).all(|(a, b)| a >= b)
    }

    /// Largest absolute slot-wise difference; `None` on length mismatch.
    pub fn max_abs_diff(&self, other: &AvailabilityVector) -> Option<f64> {
        if self.len() != other.len() {
            return None;
        }
        Some(
            self.iter()
                .zip(other.iter())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max),
        )
    }
}

impl fmt::Display for AvailabilityVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, v) in self.slots.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{v:.6}")?;
        }
        write!(f, "}}")
    }
}

pub fn clamp_probability(value: f64) -> f64 {
    if value.is_nan() {
        return EPSILON;
    }
    value.clamp(EPSILON, 1.0)
}

fn check_same_len(a: &AvailabilityVector, b: &AvailabilityVector) -> Result<(), AvailabilityError> {
    if a.len() != b.len() {
        return Err(AvailabilityError::LengthMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    Ok(())
}

/// Availability of the union of two independent groups:
/// `1 - (1 - a[k]) * (1 - b[k])` per slot.
pub fn merge_vectors(a: &AvailabilityVector, b: &AvailabilityVector) -> Result<AvailabilityVector, AvailabilityError> {
    check_same_len(a, b)?;
    let slots = a
        .iter()
        .zip(b.iter())
        .map(|(x, y)| (1.0 - (1.0 - x) * (1.0 - y)).clamp(0.0, 1.0))
        .collect();
    Ok(AvailabilityVector { slots })
}

/// Probability that at least one member is online, per slot.
pub fn group_vector<'a, I>(members: I) -> Result<AvailabilityVector, AvailabilityError>
where
    I: IntoIterator<Item = &'a AvailabilityVector>,
{
    let mut iter = members.into_iter();
    let first = iter.next().ok_or(AvailabilityError::EmptyRoster)?;
    let Some(second) = iter.next() else {
        return Ok(first.clone());
    };
    let iter = std::iter::once(second).chain(iter);
    let mut offline: Vec<f64> = first.iter().map(|v| 1.0 - v).collect();
    for member in iter {
        check_same_len(first, member)?;
        for (acc, v) in offline.iter_mut().zip(member.iter()) {
            *acc *= 1.0 - v;
        }
    }
    Ok(AvailabilityVector {
        slots: offline.into_iter().map(|q| (1.0 - q).clamp(0.0, 1.0)).collect(),
    })
}

/// Probability that at least `alpha` of the members are online in `slot`.
///
/// Exact Poisson-binomial tail: a dynamic program over the probability of
/// exactly `j < alpha` members being online, so the cost is `O(n * alpha)`.
pub fn alpha_availability<'a, I>(members: I, alpha: usize, slot: SlotIndex) -> Result<f64, AvailabilityError>
where
    I: IntoIterator<Item = &'a AvailabilityVector>,
{
    if alpha < 1 {
        return Err(AvailabilityError::InvalidAlpha(alpha));
    }
    let probs: Vec<f64> = members
        .into_iter()
        .map(|m| {
            m.as_slice().get(slot.0).copied().ok_or(AvailabilityError::InvalidSlot {
                slot: slot.0,
                slots: m.len(),
            })
        })
        .collect::<Result<_, _>>()?;
    if probs.is_empty() {
        return Err(AvailabilityError::EmptyRoster);
    }
    if alpha > probs.len() {
        return Ok(0.0);
    }
    // below[j] = P(exactly j of the members seen so far are online), j < alpha
    let mut below = vec![0.0; alpha];
    below[0] = 1.0;
    for p in probs {
        for j in (0..alpha).rev() {
            let stay = below[j] * (1.0 - p);
            let step_in = if j > 0 { below[j - 1] * p } else { 0.0 };
            below[j] = stay + step_in;
        }
    }
    let below_total: f64 = below.iter().sum();
    Ok((1.0 - below_total).clamp(0.0, 1.0))
}

/// Shape parameters for [`generate_diurnal`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratorParams {
    /// Availability at the peak slot before noise.
    pub peak_level: f64,
    /// Availability far from the peak before noise.
    pub base_level: f64,
    /// Half-width of the raised-cosine bump, in slots.
    pub spread: f64,
    /// Amplitude of the uniform per-slot noise.
    pub noise: f64,
}

impl Default for GeneratorParams {
    fn default() -> Self {
        GeneratorParams {
            peak_level: 0.9,
            base_level: 0.1,
            spread: 3.0,
            noise: 0.05,
        }
    }
}

impl GeneratorParams {
    pub fn validate(&self) -> Result<(), AvailabilityError> {
        let bad = |msg: &str| Err(AvailabilityError::InvalidParams(msg.to_string()));
        if !(0.0..=1.0).contains(&self.peak_level) {
            return bad("peak level must lie in [0, 1]");
        }
        if !(0.0..=self.peak_level).contains(&self.base_level) {
            return bad("base level must lie in [0, peak level]");
        }
        if !self.spread.is_finite() || self.spread < 1.0 {
            return bad("spread must be at least one slot");
        }
        if !self.noise.is_finite() || self.noise < 0.0 {
            return bad("noise amplitude must be non-negative");
        }
        Ok(())
    }
}

/// Circular distance between two slots on a day of `slots` slots.
pub fn circular_distance(a: usize, b: usize, slots: usize) -> usize {
    let d = a.abs_diff(b) % slots;
    d.min(slots - d)
}

/// Draws a diurnal availability profile peaking at `peak`.
///
/// The profile is a raised-cosine bump `0.5 * (1 + cos(pi * d / spread))`
/// over the circular distance `d` from the peak (zero once `d >= spread`),
/// scaled between the base and peak levels, plus uniform noise in
/// `[-noise, noise]`, clamped to `[EPSILON, 1]`. Consecutive slots differ by
/// at most the bump slope plus twice the noise amplitude.
pub fn generate_diurnal(
    seed: u64,
    peak: SlotIndex,
    slots: usize,
    params: &GeneratorParams,
) -> Result<AvailabilityVector, AvailabilityError> {
    params.validate()?;
    if peak.0 >= slots {
        return Err(AvailabilityError::InvalidSlot { slot: peak.0, slots });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let amplitude = params.peak_level - params.base_level;
    let values = (0..slots)
        .map(|k| {
            let d = circular_distance(k, peak.0, slots) as f64;
            let bump = if d < params.spread {
                0.5 * (1.0 + (PI * d / params.spread).cos())
            } else {
                0.0
            };
            let jitter = if params.noise > 0.0 {
                rng.random_range(-params.noise..=params.noise)
            } else {
                0.0
            };
            clamp_probability(params.base_level + amplitude * bump + jitter)
        })
        .collect();
    Ok(AvailabilityVector { slots: values })
}
