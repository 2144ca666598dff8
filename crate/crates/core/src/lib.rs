//! Detection and statistical validation of geometric constructs and common
//! length units in archaeological site surveys.
//!
//! Measurements carry Gaussian 1σ uncertainties ([`Measurement`]); sites are
//! loaded from JSON survey files ([`SurveySite`]); hypotheses pairing a
//! measured expression with an exact target ([`TargetConstant`]) are tested
//! with χ² statistics and a Bonferroni threshold ([`run_battery`]).

pub mod circle_fit;
pub mod constructs;
pub mod error;
pub mod geometry;
pub mod measurement;
pub mod nullmodel;
pub mod report;
pub mod stats;
pub mod survey;

pub use circle_fit::{fit_circle, CircleEstimate, DigitizedSet};
pub use constructs::{
    builtin_catalog, estimate_unit, evaluate_hypothesis, quantogram_scan, run_battery,
    BatteryReport, Hypothesis, UnitEstimate,
};
pub use error::{Error, Result};
pub use geometry::{Point2D, TargetConstant};
pub use measurement::{Measurement, Unit};
pub use stats::{BonferroniPlan, Decision, TestResult};
pub use survey::{Level, Source, SurveySite};
