//! χ² machinery: agreement between two measurements, agreement of a
//! measurement with an exact constant, mutual consistency of several
//! measurements, Bonferroni thresholds and scatter averaging.

use serde::Serialize;
use statrs::function::erf::erfc;
use statrs::function::gamma::gamma_ur;

use crate::error::{Error, Result};
use crate::geometry::TargetConstant;
use crate::measurement::{Measurement, Unit};

/// Survival function of χ² with one degree of freedom, i.e. the two-sided
/// normal tail of √x.
pub fn chi2_sf_1dof(x: f64) -> Result<f64> {
    if x.is_nan() || x < 0.0 {
        return Err(Error::invalid(format!(
            "chi-square statistic must be >= 0, got {x}"
        )));
    }
    if x.is_infinite() {
        return Ok(0.0);
    }
    Ok(erfc((x / 2.0).sqrt()).clamp(0.0, 1.0))
}

/// Survival function of χ² with `dof` degrees of freedom.
pub fn chi2_sf(x: f64, dof: u32) -> Result<f64> {
    if dof == 0 {
        return Err(Error::invalid("dof must be >= 1"));
    }
    if dof == 1 {
        return chi2_sf_1dof(x);
    }
    if x.is_nan() || x < 0.0 {
        return Err(Error::invalid(format!(
            "chi-square statistic must be >= 0, got {x}"
        )));
    }
    if x == 0.0 {
        return Ok(1.0);
    }
    if x.is_infinite() {
        return Ok(0.0);
    }
    Ok(gamma_ur(dof as f64 / 2.0, x / 2.0).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Target {
    Constant {
        constant: TargetConstant,
        value: f64,
    },
    Measurement {
        measurement: Measurement,
    },
    /// Weighted common mean of a consistency test.
    CommonMean {
        value: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Rejected,
    NotRejected,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TestResult {
    pub chi2: f64,
    pub dof: u32,
    pub p: f64,
    pub observed: Measurement,
    pub target: Target,
    /// Zero total sigma: p is exactly 0 or 1.
    pub degenerate: bool,
}

impl TestResult {
    pub fn decide(&self, alpha_prime: f64) -> Decision {
        if self.p < alpha_prime {
            Decision::Rejected
        } else {
            Decision::NotRejected
        }
    }

    /// Signed deviation in units of sigma, for one-dof tests.
    pub fn z(&self) -> f64 {
        let target = match self.target {
            Target::Constant { value, .. } | Target::CommonMean { value } => value,
            Target::Measurement { measurement } => measurement.value,
        };
        (self.observed.value - target).signum() * self.chi2.sqrt()
    }
}

fn degenerate_result(diff: f64, observed: Measurement, target: Target) -> TestResult {
    let (chi2, p) = if diff == 0.0 {
        (0.0, 1.0)
    } else {
        (f64::INFINITY, 0.0)
    };
    TestResult {
        chi2,
        dof: 1,
        p,
        observed,
        target,
        degenerate: true,
    }
}

/// χ² test that two measurements share the same underlying value.
pub fn test_equal(m1: &Measurement, m2: &Measurement) -> Result<TestResult> {
    if m1.unit != m2.unit {
        return Err(Error::UnitMismatch {
            left: m1.unit,
            right: m2.unit,
        });
    }
    let var = m1.sigma.powi(2) + m2.sigma.powi(2);
    let diff = m1.value - m2.value;
    let target = Target::Measurement { measurement: *m2 };
    if var == 0.0 {
        return Ok(degenerate_result(diff, *m1, target));
    }
    let chi2 = diff * diff / var;
    Ok(TestResult {
        chi2,
        dof: 1,
        p: chi2_sf_1dof(chi2)?,
        observed: *m1,
        target,
        degenerate: false,
    })
}

pub fn test_against_constant(m: &Measurement, c: &TargetConstant) -> Result<TestResult> {
    let value = c.value();
    let diff = m.value - value;
    let target = Target::Constant {
        constant: *c,
        value,
    };
    if m.sigma == 0.0 {
        return Ok(degenerate_result(diff, *m, target));
    }
    let chi2 = (diff / m.sigma).powi(2);
    Ok(TestResult {
        chi2,
        dof: 1,
        p: chi2_sf_1dof(chi2)?,
        observed: *m,
        target,
        degenerate: false,
    })
}

/// χ² test that `members` share one value, with n − 1 degrees of freedom
/// about their inverse-variance weighted mean. The reported observation is
/// that mean with sigma √(n / Σσ⁻²), the harmonic-mean member uncertainty.
pub fn test_consistent(members: &[Measurement]) -> Result<TestResult> {
    if members.len() < 2 {
        return Err(Error::invalid(
            "consistency test needs at least two measurements",
        ));
    }
    let unit = members[0].unit;
    if let Some(m) = members.iter().find(|m| m.unit != unit) {
        return Err(Error::UnitMismatch {
            left: unit,
            right: m.unit,
        });
    }
    let dof = (members.len() - 1) as u32;
    if members.iter().any(|m| m.sigma == 0.0) {
        let v0 = members[0].value;
        let same = members.iter().all(|m| m.value == v0);
        let observed = Measurement {
            value: v0,
            sigma: 0.0,
            unit,
        };
        let mut r = degenerate_result(
            if same { 0.0 } else { 1.0 },
            observed,
            Target::CommonMean { value: v0 },
        );
        r.dof = dof;
        return Ok(r);
    }
    let wsum: f64 = members.iter().map(|m| m.sigma.powi(-2)).sum();
    let mean = members
        .iter()
        .map(|m| m.value * m.sigma.powi(-2))
        .sum::<f64>()
        / wsum;
    let chi2: f64 = members
        .iter()
        .map(|m| ((m.value - mean) / m.sigma).powi(2))
        .sum();
    let observed = Measurement {
        value: mean,
        sigma: (members.len() as f64 / wsum).sqrt(),
        unit,
    };
    Ok(TestResult {
        chi2,
        dof,
        p: chi2_sf(chi2, dof)?,
        observed,
        target: Target::CommonMean { value: mean },
        degenerate: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BonferroniPlan {
    pub alpha: f64,
    pub k: usize,
    pub alpha_prime: f64,
}

pub fn bonferroni(alpha: f64, k: usize) -> Result<BonferroniPlan> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    if k < 1 {
        return Err(Error::invalid("number of tests must be >= 1"));
    }
    Ok(BonferroniPlan {
        alpha,
        k,
        alpha_prime: alpha / k as f64,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    #[default]
    Unweighted,
    InverseVariance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Denominator {
    #[default]
    Population,
    Sample,
}

/// Mean of `values` with the scatter (standard deviation of the values,
/// not the standard error of the mean) as sigma.
pub fn scatter_average(
    values: &[Measurement],
    weighting: Weighting,
    denominator: Denominator,
) -> Result<Measurement> {
    if values.len() < 2 {
        return Err(Error::invalid("scatter average needs at least two values"));
    }
    let unit = values[0].unit;
    if let Some(m) = values.iter().find(|m| m.unit != unit) {
        return Err(Error::UnitMismatch {
            left: unit,
            right: m.unit,
        });
    }
    let equal_sigmas = values.iter().all(|m| m.sigma == values[0].sigma);
    if weighting == Weighting::Unweighted || equal_sigmas {
        let n = values.len() as f64;
        let mean = values.iter().map(|m| m.value).sum::<f64>() / n;
        let ss: f64 = values.iter().map(|m| (m.value - mean).powi(2)).sum();
        let div = match denominator {
            Denominator::Population => n,
            Denominator::Sample => n - 1.0,
        };
        return Ok(Measurement {
            value: mean,
            sigma: (ss / div).sqrt(),
            unit,
        });
    }
    if values.iter().any(|m| m.sigma == 0.0) {
        return Err(Error::invalid(
            "inverse-variance weighting with a zero sigma among unequal sigmas",
        ));
    }
    let w: Vec<f64> = values.iter().map(|m| m.sigma.powi(-2)).collect();
    let wsum: f64 = w.iter().sum();
    let mean = values.iter().zip(&w).map(|(m, w)| w * m.value).sum::<f64>() / wsum;
    let ss: f64 = values
        .iter()
        .zip(&w)
        .map(|(m, w)| w * (m.value - mean).powi(2))
        .sum();
    let div = match denominator {
        Denominator::Population => wsum,
        // Reliability-weight correction.
        Denominator::Sample => wsum - w.iter().map(|w| w * w).sum::<f64>() / wsum,
    };
    Ok(Measurement {
        value: mean,
        sigma: (ss / div).sqrt(),
        unit,
    })
}

/// Rounds half away from zero at `digits` decimals.
pub fn round_half_away(x: f64, digits: i32) -> f64 {
    let k = 10f64.powi(digits);
    let scaled = x * k;
    // Nudge values sitting a rounding error below a .5 boundary.
    let nudged = scaled + scaled.signum() * scaled.abs() * 4.0 * f64::EPSILON;
    nudged.round() / k
}

pub fn dimensionless(value: f64, sigma: f64) -> Measurement {
    Measurement {
        value,
        sigma,
        unit: Unit::Dimensionless,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn sf_examples() {
        assert_eq!(chi2_sf_1dof(0.0).unwrap(), 1.0);
        // Values from a quadrature of the χ²(1) density (see tests/oracles.rs).
        assert_abs_diff_eq!(chi2_sf_1dof(3.841459).unwrap(), 0.0500000, epsilon = 1e-6);
        assert_abs_diff_eq!(
            chi2_sf_1dof(1.0).unwrap(),
            0.31731050786291404,
            epsilon = 1e-10
        );
        assert!(chi2_sf_1dof(-1.0).is_err());
        assert_eq!(chi2_sf_1dof(f64::INFINITY).unwrap(), 0.0);
        assert_abs_diff_eq!(chi2_sf(2.0, 2).unwrap(), (-1.0f64).exp(), epsilon = 1e-14);
    }

    #[test]
    fn equal_examples() {
        let r = test_equal(&Measurement::cm(265.0, 2.0), &Measurement::cm(264.0, 2.0)).unwrap();
        assert_eq!(round_half_away(r.p, 2), 0.72);
        let r = test_equal(&Measurement::cm(360.0, 3.0), &Measurement::cm(355.0, 3.0)).unwrap();
        assert_eq!(round_half_away(r.p, 2), 0.24);
        let r = test_equal(&Measurement::cm(5.0, 1.0), &Measurement::cm(5.0, 1.0)).unwrap();
        assert_eq!((r.chi2, r.p), (0.0, 1.0));
    }

    #[test]
    fn equal_degenerate_flags() {
        let r = test_equal(&Measurement::cm(5.0, 0.0), &Measurement::cm(6.0, 0.0)).unwrap();
        assert!(r.degenerate);
        assert_eq!(r.p, 0.0);
        let r = test_equal(&Measurement::cm(5.0, 0.0), &Measurement::cm(5.0, 0.0)).unwrap();
        assert!(r.degenerate);
        assert_eq!(r.p, 1.0);
        assert!(test_equal(&Measurement::cm(5.0, 1.0), &Measurement::degrees(5.0, 1.0)).is_err());
    }

    #[test]
    fn constant_examples() {
        let golden = crate::geometry::ratio(
            &Measurement::cm(3200.0, 8.0),
            &Measurement::cm(1948.0, 15.0),
        )
        .unwrap();
        let r = test_against_constant(&golden, &TargetConstant::Golden).unwrap();
        assert_eq!(round_half_away(r.p, 2), 0.06);
        let r = test_against_constant(
            &dimensionless(5.337, 0.060),
            &TargetConstant::rational(16, 3).unwrap(),
        )
        .unwrap();
        assert_eq!(round_half_away(r.p, 2), 0.95);
        let c = TargetConstant::sqrt(2).unwrap();
        let r = test_against_constant(&dimensionless(c.value(), 0.1), &c).unwrap();
        assert_eq!(r.p, 1.0);
        let r =
            test_against_constant(&dimensionless(1.0, 0.0), &TargetConstant::integer(2)).unwrap();
        assert!(r.degenerate && r.p == 0.0);
    }

    #[test]
    fn consistency_uses_n_minus_one_dof() {
        let r = test_consistent(&[
            Measurement::cm(270.0, 2.0),
            Measurement::cm(271.0, 2.0),
            Measurement::cm(268.0, 2.0),
        ])
        .unwrap();
        assert_eq!(r.dof, 2);
        assert_abs_diff_eq!(r.chi2, 7.0 / 6.0, epsilon = 1e-12);
        assert_eq!(round_half_away(r.p, 2), 0.56);
        assert_eq!(round_half_away(r.observed.value, 0), 270.0);
        assert_abs_diff_eq!(r.observed.sigma, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn bonferroni_examples() {
        assert_abs_diff_eq!(
            bonferroni(0.05, 48).unwrap().alpha_prime,
            0.00104,
            epsilon = 5e-6
        );
        assert_eq!(bonferroni(0.05, 1).unwrap().alpha_prime, 0.05);
        assert_abs_diff_eq!(
            bonferroni(0.01, 10).unwrap().alpha_prime,
            0.001,
            epsilon = 1e-15
        );
        assert!(bonferroni(0.0, 3).is_err());
        assert!(bonferroni(1.0, 3).is_err());
        assert!(bonferroni(0.05, 0).is_err());
    }

    #[test]
    fn scatter_examples() {
        // Printed aerial column of the unit table.
        let printed = [
            1948., 1978., 1920., 1947., 1927., 1936., 1906., 1921., 1977., 1992., 1948., 1942.,
            2013., 1974., 1968., 1959., 1944., 1934.,
        ];
        let values: Vec<_> = printed.iter().map(|&v| Measurement::cm(v, 10.0)).collect();
        let x = scatter_average(&values, Weighting::Unweighted, Denominator::Population).unwrap();
        assert_abs_diff_eq!(x.value, 1951.888888888889, epsilon = 1e-9);
        assert_abs_diff_eq!(x.sigma, 26.809801045490165, epsilon = 1e-9);
        let same = vec![Measurement::cm(12.0, 1.0); 4];
        assert_eq!(
            scatter_average(&same, Weighting::Unweighted, Denominator::Population).unwrap(),
            Measurement::cm(12.0, 0.0)
        );
        assert!(
            scatter_average(&same[..1], Weighting::Unweighted, Denominator::Population).is_err()
        );
    }

    #[test]
    fn rounding_half_away_from_zero() {
        assert_eq!(round_half_away(0.125, 2), 0.13);
        assert_eq!(round_half_away(-0.125, 2), -0.13);
        assert_eq!(round_half_away(0.345, 2), 0.35);
        assert_eq!(round_half_away(0.3449, 2), 0.34);
    }

    proptest! {
        #[test]
        fn sf_strictly_decreasing(a in 0.0f64..60.0, d in 1e-3f64..5.0) {
            prop_assert!(chi2_sf_1dof(a + d).unwrap() < chi2_sf_1dof(a).unwrap());
        }

        #[test]
        fn equal_is_symmetric(v1 in -1e3f64..1e3, v2 in -1e3f64..1e3, s1 in 0.01f64..50.0, s2 in 0.01f64..50.0) {
            let a = Measurement::cm(v1, s1);
            let b = Measurement::cm(v2, s2);
            let r1 = test_equal(&a, &b).unwrap();
            let r2 = test_equal(&b, &a).unwrap();
            prop_assert_eq!(r1.chi2, r2.chi2);
            prop_assert_eq!(r1.p, r2.p);
        }

        #[test]
        fn constant_test_scale_invariant(v in 0.5f64..10.0, s in 0.01f64..1.0, k in 0.01f64..100.0) {
            let c = TargetConstant::rational(16, 3).unwrap();
            let base = test_against_constant(&dimensionless(v, s), &c).unwrap();
            // (v, σ, c) all scaled by k: χ² = ((kv − kc)/kσ)².
            let chi2 = ((k * v - k * c.value()) / (k * s)).powi(2);
            prop_assert!((chi2_sf_1dof(chi2).unwrap() - base.p).abs() < 1e-12);
        }

        #[test]
        fn scatter_permutation_invariant(vals in proptest::collection::vec((1.0f64..100.0, 0.1f64..5.0), 2..12), seed in any::<u64>()) {
            let ms: Vec<_> = vals.iter().map(|&(v, s)| Measurement::cm(v, s)).collect();
            let mut shuffled = ms.clone();
            let n = shuffled.len();
            shuffled.rotate_left((seed as usize) % n);
            shuffled.reverse();
            for w in [Weighting::Unweighted, Weighting::InverseVariance] {
                let a = scatter_average(&ms, w, Denominator::Population).unwrap();
                let b = scatter_average(&shuffled, w, Denominator::Population).unwrap();
                prop_assert!((a.value - b.value).abs() < 1e-9 * a.value.abs().max(1.0));
                prop_assert!((a.sigma - b.sigma).abs() < 1e-9 * a.sigma.max(1.0));
            }
        }

        #[test]
        fn equal_sigmas_make_weighting_irrelevant(vals in proptest::collection::vec(1.0f64..100.0, 2..12), s in 0.0f64..5.0) {
            let ms: Vec<_> = vals.iter().map(|&v| Measurement::cm(v, s)).collect();
            prop_assert_eq!(
                scatter_average(&ms, Weighting::Unweighted, Denominator::Population).unwrap(),
                scatter_average(&ms, Weighting::InverseVariance, Denominator::Population).unwrap()
            );
        }
    }
}
