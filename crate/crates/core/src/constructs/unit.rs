//! Estimate of the module width X from every length hypothesised to be a
//! fixed multiple of it, and the base unit L = X/64.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::TargetConstant;
use crate::measurement::Measurement;
use crate::stats::{self, Denominator, Weighting};
use crate::survey::{Level, Source, SurveySite};

/// Number of base units in the module width.
pub const UNITS_PER_MODULE: u32 = 64;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UnitTermSpec {
    pub description: &'static str,
    pub feature: &'static str,
    pub multiplier: TargetConstant,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UnitTerm {
    /// Position in the term list, stable across sources.
    pub row: usize,
    pub description: String,
    pub feature: String,
    pub multiplier: TargetConstant,
    pub base: Measurement,
    pub value: Measurement,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkippedTerm {
    pub row: usize,
    pub description: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UnitEstimate {
    pub source: Source,
    pub weighting: Weighting,
    pub denominator: Denominator,
    /// Module width.
    pub x: Measurement,
    /// Base unit, `x / 64`.
    pub l: Measurement,
    pub terms: Vec<UnitTerm>,
    pub skipped: Vec<SkippedTerm>,
}

/// The eighteen terms, each a length times the multiplier that the
/// hypothesised constructs say turns it into X.
pub fn unit_terms() -> Vec<UnitTermSpec> {
    let q = |p, q| TargetConstant::rational(p, q).expect("valid constant");
    let s = |p, q, d| TargetConstant::surd(p, q, d).expect("valid constant");
    let n = TargetConstant::integer;
    let t = |description, feature, multiplier| UnitTermSpec {
        description,
        feature,
        multiplier,
    };
    vec![
        t(
            "Width of the rectangle encasing outer D",
            "outer_d_width",
            n(1),
        ),
        t(
            "1/φ times the length of the rectangle encasing outer D",
            "outer_d_length",
            TargetConstant::InverseGolden,
        ),
        t(
            "64/9 times the inner radius of Kiva A",
            "kiva_a_inner_radius",
            q(64, 9),
        ),
        t(
            "64/9 times the inner radius of Kiva B",
            "kiva_b_inner_radius",
            q(64, 9),
        ),
        t(
            "64/9 times the inner radius of Kiva C",
            "kiva_c_inner_radius",
            q(64, 9),
        ),
        t(
            "6√2 times the inner radius of Kiva D",
            "kiva_d_inner_radius",
            s(6, 1, 2),
        ),
        t(
            "16/3 times the outer radius of Kiva A",
            "kiva_a_outer_radius",
            q(16, 3),
        ),
        t(
            "64/(9√2) times the outer radius of Kiva B",
            "kiva_b_outer_radius",
            s(32, 9, 2),
        ),
        t(
            "64/(9√2) times the outer radius of Kiva C",
            "kiva_c_outer_radius",
            s(32, 9, 2),
        ),
        t(
            "6 times the outer radius of Kiva D",
            "kiva_d_outer_radius",
            n(6),
        ),
        t(
            "2 times distance outer wall Kiva B to SW corner of outer D",
            "kiva_b_to_sw_corner",
            n(2),
        ),
        t(
            "2 times distance outer wall Kiva C to SE corner of outer D",
            "kiva_c_to_se_corner",
            n(2),
        ),
        t(
            "3 times distance outer wall Kiva D to SE corner of outer D",
            "kiva_d_to_se_corner",
            n(3),
        ),
        t(
            "3 times distance outer wall Kiva B to south wall of outer D",
            "kiva_b_to_south_wall",
            n(3),
        ),
        t(
            "2 times distance center Kiva D to SE corner of outer D",
            "kiva_d_center_to_se_corner",
            n(2),
        ),
        t(
            "3 times nearest distance between outer walls of Kivas B and C",
            "kiva_bc_gap",
            n(3),
        ),
        t(
            "2 times distance center Kiva A to Sun Shrine",
            "sun_shrine_to_kiva_a_center",
            n(2),
        ),
        t(
            "2 times distance center Kiva A to south wall",
            "kiva_a_center_to_south_wall",
            n(2),
        ),
    ]
}

/// Resolves every term (at ground level) for `source` and averages them.
/// Terms the site cannot supply are listed in `skipped`.
pub fn estimate_unit(
    site: &SurveySite,
    source: Source,
    weighting: Weighting,
    denominator: Denominator,
) -> Result<UnitEstimate> {
    let mut terms = Vec::new();
    let mut skipped = Vec::new();
    for (row, spec) in unit_terms().into_iter().enumerate() {
        match site.resolve(spec.feature, source, Level::AtGround) {
            Ok(base) => terms.push(UnitTerm {
                row,
                description: spec.description.to_string(),
                feature: spec.feature.to_string(),
                multiplier: spec.multiplier,
                value: base.scaled(spec.multiplier.value()),
                base,
            }),
            Err(e) => skipped.push(SkippedTerm {
                row,
                description: spec.description.to_string(),
                reason: e.to_string(),
            }),
        }
    }
    if terms.len() < 2 {
        return Err(Error::invalid(format!(
            "{source}: only {} unit term(s) resolvable, need at least 2",
            terms.len()
        )));
    }
    let values: Vec<Measurement> = terms.iter().map(|t| t.value).collect();
    let x = stats::scatter_average(&values, weighting, denominator)?;
    Ok(UnitEstimate {
        source,
        weighting,
        denominator,
        x,
        l: base_unit(&x),
        terms,
        skipped,
    })
}

pub fn base_unit(x: &Measurement) -> Measurement {
    Measurement {
        value: x.value / UNITS_PER_MODULE as f64,
        sigma: x.sigma / UNITS_PER_MODULE as f64,
        unit: x.unit,
    }
}
