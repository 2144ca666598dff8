//! Scalar measurements with 1σ Gaussian uncertainty.
//!
//! Errors of distinct measurements are treated as independent, so sums and
//! differences combine sigmas in quadrature.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Unit {
    #[serde(rename = "cm")]
    Centimeters,
    #[serde(rename = "deg")]
    Degrees,
    #[serde(rename = "dimensionless")]
    Dimensionless,
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Unit::Centimeters => "cm",
            Unit::Degrees => "deg",
            Unit::Dimensionless => "dimensionless",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Measurement {
    pub value: f64,
    pub sigma: f64,
    pub unit: Unit,
}

impl Measurement {
    /// Builds a validated measurement: finite value, finite non-negative sigma.
    pub fn new(value: f64, sigma: f64, unit: Unit) -> Result<Self> {
        let m = Measurement { value, sigma, unit };
        m.validate()?;
        Ok(m)
    }

    pub fn cm(value: f64, sigma: f64) -> Self {
        Measurement {
            value,
            sigma,
            unit: Unit::Centimeters,
        }
    }

    pub fn degrees(value: f64, sigma: f64) -> Self {
        Measurement {
            value,
            sigma,
            unit: Unit::Degrees,
        }
    }

    pub fn dimensionless(value: f64, sigma: f64) -> Self {
        Measurement {
            value,
            sigma,
            unit: Unit::Dimensionless,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.value.is_finite() {
            return Err(Error::invalid(format!("non-finite value {}", self.value)));
        }
        if !self.sigma.is_finite() || self.sigma < 0.0 {
            return Err(Error::invalid(format!(
                "sigma must be finite and >= 0, got {}",
                self.sigma
            )));
        }
        Ok(())
    }

    pub fn relative_sigma(&self) -> f64 {
        if self.value == 0.0 {
            f64::INFINITY
        } else {
            (self.sigma / self.value).abs()
        }
    }

    fn same_unit(&self, other: &Measurement) -> Result<()> {
        if self.unit != other.unit {
            return Err(Error::UnitMismatch {
                left: self.unit,
                right: other.unit,
            });
        }
        Ok(())
    }

    pub fn checked_add(&self, other: &Measurement) -> Result<Measurement> {
        self.same_unit(other)?;
        Ok(Measurement {
            value: self.value + other.value,
            sigma: self.sigma.hypot(other.sigma),
            unit: self.unit,
        })
    }

    pub fn checked_sub(&self, other: &Measurement) -> Result<Measurement> {
        self.same_unit(other)?;
        Ok(Measurement {
            value: self.value - other.value,
            sigma: self.sigma.hypot(other.sigma),
            unit: self.unit,
        })
    }

    /// Multiplication by an exact constant; sigma scales by |k|.
    pub fn scaled(&self, k: f64) -> Measurement {
        Measurement {
            value: self.value * k,
            sigma: self.sigma * k.abs(),
            unit: self.unit,
        }
    }
}

impl fmt::Display for Measurement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ± {} {}", self.value, self.sigma, self.unit)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_negative_sigma() {
        assert!(Measurement::new(1.0, -1.0, Unit::Centimeters).is_err());
        assert!(Measurement::new(f64::NAN, 1.0, Unit::Centimeters).is_err());
        assert!(Measurement::new(1.0, f64::INFINITY, Unit::Centimeters).is_err());
    }

    #[test]
    fn quadrature_difference() {
        let a = Measurement::cm(1043.0, 10.0);
        let b = Measurement::cm(385.0, 3.0);
        let d = a.checked_sub(&b).unwrap();
        assert_eq!(d.value, 658.0);
        assert!((d.sigma - 109f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn mismatched_units_rejected() {
        let a = Measurement::cm(1.0, 0.0);
        let b = Measurement::degrees(1.0, 0.0);
        assert_eq!(
            a.checked_add(&b),
            Err(Error::UnitMismatch {
                left: Unit::Centimeters,
                right: Unit::Degrees
            })
        );
    }

    #[test]
    fn unit_serde_tokens() {
        let m: Measurement =
            serde_json::from_str(r#"{"value":1,"sigma":0.5,"unit":"deg"}"#).unwrap();
        assert_eq!(m.unit, Unit::Degrees);
        assert!(serde_json::from_str::<Measurement>(
            r#"{"value":1,"sigma":0.5,"unit":"cm","x":1}"#
        )
        .is_err());
    }
}
