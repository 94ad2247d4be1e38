//! Cumulative-frequency histograms and run comparisons.

use std::collections::BTreeMap;

use crate::simulator::RunMetrics;

/// Bucket count used when Scott's rule is undefined for a sample.
pub const FALLBACK_BUCKETS: usize = 20;
/// Upper bound on Scott's-rule bucket counts.
pub const MAX_BUCKETS: usize = 1000;
/// Availability threshold used when reporting low-availability slots.
pub const LOW_AVAILABILITY: f64 = 0.6;

const SCOTT_CONSTANT: f64 = 3.49;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AnalysisError {
    #[error("sample of {count} values with standard deviation {sigma} is degenerate")]
    DegenerateSample { count: usize, sigma: f64 },
    #[error("no values to bucket")]
    EmptyInput,
    #[error("bucket count must be positive")]
    ZeroBuckets,
    #[error("runs are not comparable: {0}")]
    ConfigMismatch(String),
}

/// Sample standard deviation (divisor `N - 1`).
pub fn sample_std_dev(values: &[f64]) -> Option<f64> {
    if values.len() < 2 {
        return None;
    }
    if values.iter().all(|v| *v == values[0]) {
        return Some(0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
    Some((ss / (n - 1.0)).sqrt())
}

/// Bucket count over `[0, 1]` for bin width `3.49 * sigma * N^(-1/3)`.
pub fn scott_buckets_for(sigma: f64, count: usize) -> Result<usize, AnalysisError> {
    if count < 2 || !sigma.is_finite() || sigma <= 0.0 {
        return Err(AnalysisError::DegenerateSample { count, sigma });
    }
    let width = SCOTT_CONSTANT * sigma * (count as f64).powf(-1.0 / 3.0);
    let n = (1.0 / width).ceil();
    Ok((n as usize).clamp(1, MAX_BUCKETS))
}

pub fn scott_bucket_count(values: &[f64]) -> Result<usize, AnalysisError> {
    let sigma = sample_std_dev(values).unwrap_or(0.0);
    scott_buckets_for(sigma, values.len())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Buckets {
    /// Scott's rule, falling back to [`FALLBACK_BUCKETS`] when degenerate.
    Scott,
    Fixed(usize),
}

/// Equal-width histogram over `[0, 1]`; bucket `j` (1-based) covers
/// `((j - 1) / n, j / n]`, with 0 itself falling in the first bucket.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub counts: Vec<usize>,
    pub cumulative_percent: Vec<f64>,
}

impl Histogram {
    pub fn build(values: &[f64], buckets: usize) -> Result<Histogram, AnalysisError> {
        if buckets == 0 {
            return Err(AnalysisError::ZeroBuckets);
        }
        if values.is_empty() {
            return Err(AnalysisError::EmptyInput);
        }
        let mut counts = vec![0usize; buckets];
        for &v in values {
            let j = (v * buckets as f64).ceil() as isize;
            let j = j.clamp(1, buckets as isize) as usize;
            counts[j - 1] += 1;
        }
        let total = values.len() as f64;
        let mut running = 0usize;
        let cumulative_percent = counts
            .iter()
            .map(|c| {
                running += c;
                running as f64 * 100.0 / total
            })
            .collect();
        Ok(Histogram {
            counts,
            cumulative_percent,
        })
    }

    pub fn buckets(&self) -> usize {
        self.counts.len()
    }

    pub fn upper_bound(&self, bucket: usize) -> f64 {
        (bucket + 1) as f64 / self.buckets() as f64
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }
}

pub fn histogram(values: &[f64], buckets: Buckets) -> Result<Histogram, AnalysisError> {
    let n = match buckets {
        Buckets::Fixed(n) => n,
        Buckets::Scott => match scott_bucket_count(values) {
            Ok(n) => n,
            Err(AnalysisError::DegenerateSample { .. }) => FALLBACK_BUCKETS,
            Err(e) => return Err(e),
        },
    };
    Histogram::build(values, n)
}

/// Cumulative-frequency histogram of a run's final 1- or 2-availability
/// values.
pub fn availability_cdf(metrics: &RunMetrics, alpha: u8, buckets: Buckets) -> Result<Histogram, AnalysisError> {
    let values = match alpha {
        1 => &metrics.one_availability,
        _ => &metrics.two_availability,
    };
    histogram(values, buckets)
}

fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

pub fn fraction_below(values: &[f64], threshold: f64) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.iter().filter(|v| **v < threshold).count() as f64 / values.len() as f64
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let v = sorted(values);
    let mid = v.len() / 2;
    if v.len().is_multiple_of(2) {
        (v[mid - 1] + v[mid]) / 2.0
    } else {
        v[mid]
    }
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

/// True when the empirical CDF of `a` never exceeds that of `b`, i.e. `a`
/// first-order stochastically dominates `b`.
pub fn cdf_below(a: &[f64], b: &[f64]) -> bool {
    if a.is_empty() || b.is_empty() {
        return false;
    }
    let a = sorted(a);
    let b = sorted(b);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let mut points: Vec<f64> = a.iter().chain(b.iter()).copied().collect();
    points.sort_by(f64::total_cmp);
    points.dedup();
    let (mut i, mut j) = (0, 0);
    for x in points {
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        // F_a(x) <= F_b(x), cross-multiplied to stay exact
        if i as f64 * nb > j as f64 * na {
            return false;
        }
    }
    true
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub frac_below_one: f64,
    pub median_one: f64,
    pub mean_one: f64,
    pub frac_below_two: f64,
    pub mean_two: f64,
    pub group_sizes: BTreeMap<usize, usize>,
}

impl RunSummary {
    pub fn of(metrics: &RunMetrics) -> RunSummary {
        RunSummary {
            frac_below_one: fraction_below(&metrics.one_availability, LOW_AVAILABILITY),
            median_one: median(&metrics.one_availability),
            mean_one: mean(&metrics.one_availability),
            frac_below_two: fraction_below(&metrics.two_availability, LOW_AVAILABILITY),
            mean_two: mean(&metrics.two_availability),
            group_sizes: metrics.group_size_histogram.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub a: RunSummary,
    pub b: RunSummary,
    /// `b - a` for the fraction of 1-availability values below 0.6.
    pub delta_frac_below: f64,
    pub delta_median: f64,
    pub delta_mean: f64,
    pub delta_mean_two: f64,
    /// `a`'s 1-availability CDF lies on or below `b`'s everywhere.
    pub a_dominates: bool,
}

pub fn compare_runs(a: &RunMetrics, b: &RunMetrics) -> Result<ComparisonReport, AnalysisError> {
    if a.seed != b.seed {
        return Err(AnalysisError::ConfigMismatch(format!(
            "seeds {} and {}",
            a.seed, b.seed
        )));
    }
    if a.slots != b.slots {
        return Err(AnalysisError::ConfigMismatch(format!(
            "slot counts {} and {}",
            a.slots, b.slots
        )));
    }
    let sa = RunSummary::of(a);
    let sb = RunSummary::of(b);
    Ok(ComparisonReport {
        delta_frac_below: sb.frac_below_one - sa.frac_below_one,
        delta_median: sb.median_one - sa.median_one,
        delta_mean: sb.mean_one - sa.mean_one,
        delta_mean_two: sb.mean_two - sa.mean_two,
        a_dominates: cdf_below(&a.one_availability, &b.one_availability),
        a: sa,
        b: sb,
    })
}
