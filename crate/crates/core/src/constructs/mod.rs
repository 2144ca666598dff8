//! Construct hypotheses, the battery that tests them, the module-width and
//! base-unit estimate, and the quantogram scan.

mod battery;
mod catalog;
mod quantogram;
mod unit;

pub use battery::{run_battery, BatteryEntry, BatteryReport};
pub use catalog::{
    builtin_catalog, check_references, evaluate_hypothesis, parse_catalog, Expression, Hypothesis,
    Outcome, Selector, SourceSelector,
};
pub use quantogram::{
    quantogram_null, quantogram_scan, quantogram_score, scan_values, QuantogramNull,
    QuantogramScan, DEFAULT_RANGE, DEFAULT_STEPS, MIN_LENGTHS,
};
pub use unit::{
    base_unit, estimate_unit, unit_terms, SkippedTerm, UnitEstimate, UnitTerm, UnitTermSpec,
    UNITS_PER_MODULE,
};
