//! Pairing scores between two groups.
//!
//! Two metrics are provided. [`Metric::RatioExponent`] scores each slot by
//! `J^(min/max) - J` with `J` the joint availability, rewarding complementary
//! slots. [`Metric::AlphaUtility`] scores the summed 1-availability gain both
//! groups would see after merging. Both divide by the merged group size so
//! that smaller groups are preferred.

use crate::availability::{clamp_probability, merge_vectors, AvailabilityError, AvailabilityVector};
use crate::ids::GroupId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Metric {
    RatioExponent,
    AlphaUtility,
}

/// What a group advertises about itself during gossip.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupSummary {
    pub group_id: GroupId,
    pub size: usize,
    pub vector: AvailabilityVector,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Contribution {
    pub value: f64,
    pub metric: Metric,
}

pub fn joint_availability(a: f64, b: f64) -> f64 {
    a * b
}

/// Slot score `J^r - J` where `r = min/max` and `J = a * b`.
///
/// Inputs are clamped to `[EPSILON, 1]` so the ratio is always defined.
/// Evaluated as `J * expm1((r - 1) * ln J)`, which is exactly zero for equal
/// inputs and keeps precision when they are close.
pub fn slot_contribution_eq2(a: f64, b: f64) -> f64 {
    let a = clamp_probability(a);
    let b = clamp_probability(b);
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    let joint = joint_availability(lo, hi);
    let ratio_minus_one = (lo - hi) / hi;
    joint * (ratio_minus_one * joint.ln()).exp_m1()
}

fn check_pair(gi: &GroupSummary, gj: &GroupSummary) -> Result<(), AvailabilityError> {
    if gi.vector.len() != gj.vector.len() {
        return Err(AvailabilityError::LengthMismatch {
            expected: gi.vector.len(),
            found: gj.vector.len(),
        });
    }
    Ok(())
}

/// Orders a pair canonically so the symmetric metrics are bit-identical in
/// either argument order.
fn canonical<'a>(gi: &'a GroupSummary, gj: &'a GroupSummary) -> (&'a GroupSummary, &'a GroupSummary) {
    let key = |g: &GroupSummary| (g.group_id, g.size);
    if key(gi) <= key(gj) {
        (gi, gj)
    } else {
        (gj, gi)
    }
}

pub fn contribution_eq2(gi: &GroupSummary, gj: &GroupSummary) -> Result<Contribution, AvailabilityError> {
    check_pair(gi, gj)?;
    let (x, y) = canonical(gi, gj);
    let sum: f64 = x
        .vector
        .iter()
        .zip(y.vector.iter())
        .map(|(a, b)| slot_contribution_eq2(a, b))
        .sum();
    Ok(Contribution {
        value: sum / (x.size + y.size) as f64,
        metric: Metric::RatioExponent,
    })
}

/// Summed per-slot 1-availability gain from `before` to `merged`.
pub fn utility(before: &AvailabilityVector, merged: &AvailabilityVector) -> Result<f64, AvailabilityError> {
    if before.len() != merged.len() {
        return Err(AvailabilityError::LengthMismatch {
            expected: before.len(),
            found: merged.len(),
        });
    }
    Ok(merged.iter().zip(before.iter()).map(|(m, b)| m - b).sum())
}

pub fn contribution_eq3(gi: &GroupSummary, gj: &GroupSummary) -> Result<Contribution, AvailabilityError> {
    check_pair(gi, gj)?;
    let (x, y) = canonical(gi, gj);
    let merged = merge_vectors(&x.vector, &y.vector)?;
    let gain = utility(&x.vector, &merged)? + utility(&y.vector, &merged)?;
    Ok(Contribution {
        value: gain.max(0.0) / (x.size + y.size) as f64,
        metric: Metric::AlphaUtility,
    })
}

pub fn contribution(metric: Metric, gi: &GroupSummary, gj: &GroupSummary) -> Result<Contribution, AvailabilityError> {
    match metric {
        Metric::RatioExponent => contribution_eq2(gi, gj),
        Metric::AlphaUtility => contribution_eq3(gi, gj),
    }
}
