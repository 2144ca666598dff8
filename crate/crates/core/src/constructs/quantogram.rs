//! Cosine quantogram: how nearly a set of lengths are integer multiples of a
//! candidate quantum q.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::measurement::Measurement;

pub const MIN_LENGTHS: usize = 5;
pub const DEFAULT_STEPS: usize = 2000;
pub const DEFAULT_RANGE: (f64, f64) = (10.0, 60.0);

/// `s(q) = √(2/N)·Σ cos(2π·εᵢ/q)`, with εᵢ the distance from lengthᵢ to the
/// nearest multiple of q.
pub fn quantogram_score(lengths: &[f64], q: f64) -> f64 {
    let n = lengths.len() as f64;
    let sum: f64 = lengths
        .iter()
        .map(|&l| {
            let eps = l - q * (l / q).round();
            (std::f64::consts::TAU * eps / q).cos()
        })
        .sum();
    (2.0 / n).sqrt() * sum
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuantogramScan {
    pub q_best: f64,
    pub score_best: f64,
    /// `(q, score)` for each grid point, ascending in q.
    pub curve: Vec<(f64, f64)>,
}

/// Scores `steps + 1` evenly spaced quanta from `q_min` to `q_max`
/// inclusive. Ties go to the smallest q.
pub fn quantogram_scan(
    lengths: &[Measurement],
    q_min: f64,
    q_max: f64,
    steps: usize,
) -> Result<QuantogramScan> {
    let values: Vec<f64> = lengths.iter().map(|m| m.value).collect();
    scan_values(&values, q_min, q_max, steps)
}

pub fn scan_values(
    lengths: &[f64],
    q_min: f64,
    q_max: f64,
    steps: usize,
) -> Result<QuantogramScan> {
    check_range(q_min, q_max, steps)?;
    if lengths.len() < MIN_LENGTHS {
        return Err(Error::invalid(format!(
            "quantogram needs at least {MIN_LENGTHS} lengths, got {}",
            lengths.len()
        )));
    }
    if lengths.iter().any(|l| !l.is_finite()) {
        return Err(Error::invalid("quantogram lengths must be finite"));
    }
    let span = q_max - q_min;
    let curve: Vec<(f64, f64)> = (0..=steps)
        .into_par_iter()
        .map(|i| {
            let q = q_min + span * i as f64 / steps as f64;
            (q, quantogram_score(lengths, q))
        })
        .collect();
    let (q_best, score_best) =
        curve
            .iter()
            .copied()
            .fold((f64::NAN, f64::NEG_INFINITY), |best, p| {
                if p.1 > best.1 {
                    p
                } else {
                    best
                }
            });
    Ok(QuantogramScan {
        q_best,
        score_best,
        curve,
    })
}

fn check_range(q_min: f64, q_max: f64, steps: usize) -> Result<()> {
    if !(q_min.is_finite() && q_max.is_finite() && q_min > 0.0 && q_max > q_min) {
        return Err(Error::invalid(format!(
            "quantum range must satisfy 0 < q_min < q_max, got [{q_min}, {q_max}]"
        )));
    }
    if steps == 0 {
        return Err(Error::invalid("quantogram needs at least one step"));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuantogramNull {
    pub trials: usize,
    pub seed: u64,
    /// Peak score of each null trial, in trial order.
    pub peak_scores: Vec<f64>,
    pub p95: f64,
    pub observed: f64,
    /// Fraction of null peaks at or above the observed peak.
    pub p_value: f64,
}

/// Null distribution of the peak score. Each trial replaces the lengths
/// with as many values drawn uniformly over their observed range and
/// rescans the same grid. Trial `t` uses its own ChaCha stream, so the
/// result does not depend on thread count.
pub fn quantogram_null(
    lengths: &[f64],
    q_min: f64,
    q_max: f64,
    steps: usize,
    trials: usize,
    seed: u64,
) -> Result<QuantogramNull> {
    let observed = scan_values(lengths, q_min, q_max, steps)?.score_best;
    if trials == 0 {
        return Err(Error::invalid("null needs at least one trial"));
    }
    let lo = lengths.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = lengths.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return Err(Error::invalid("null needs lengths with a nonzero range"));
    }
    let peak_scores: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(t as u64);
            let sample: Vec<f64> = (0..lengths.len())
                .map(|_| rng.random_range(lo..hi))
                .collect();
            scan_values(&sample, q_min, q_max, steps).map(|s| s.score_best)
        })
        .collect::<Result<_>>()?;
    let mut sorted = peak_scores.clone();
    sorted.sort_by(f64::total_cmp);
    let idx = ((0.95 * trials as f64).ceil() as usize).clamp(1, trials) - 1;
    let p95 = sorted[idx];
    let p_value = peak_scores.iter().filter(|&&s| s >= observed).count() as f64 / trials as f64;
    Ok(QuantogramNull {
        trials,
        seed,
        peak_scores,
        p95,
        observed,
        p_value,
    })
}
