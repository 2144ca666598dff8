//! Deterministic fixtures shared by the benchmarks.

use geomprobe_core::circle_fit::DigitizedSet;

/// `n` rim points on a circle of radius `r`, jittered radially by a fixed
/// pseudo-random pattern of amplitude `jitter`.
pub fn rim_points(n: usize, r: f64, jitter: f64) -> DigitizedSet {
    let points = (0..n)
        .map(|i| {
            let t = std::f64::consts::TAU * i as f64 / n as f64;
            let rr = r + jitter * (7.3 * i as f64).sin();
            (250.0 + rr * t.cos(), 180.0 + rr * t.sin())
        })
        .collect();
    DigitizedSet {
        feature_id: "bench".into(),
        pass_id: "1".into(),
        points,
        image_id: None,
    }
}

/// Lengths near multiples of `q`, offset by a fixed pattern.
pub fn quantised_lengths(n: usize, q: f64) -> Vec<f64> {
    (0..n)
        .map(|i| (5 + (i * 13) % 60) as f64 * q + 0.4 * (3.1 * i as f64).sin())
        .collect()
}
