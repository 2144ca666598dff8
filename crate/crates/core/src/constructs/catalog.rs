//! Hypothesis catalog: each entry pairs a measured expression over survey
//! features with the exact value a geometric construct predicts for it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{self, TargetConstant};
use crate::stats::{self, TestResult};
use crate::survey::{Level, Source, SurveySite};

/// A feature or derived-span id together with the level to resolve it at.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Selector {
    pub feature: String,
    pub level: Level,
}

impl Selector {
    pub fn at_ground(feature: &str) -> Self {
        Selector {
            feature: feature.to_string(),
            level: Level::AtGround,
        }
    }

    pub fn resolve(
        &self,
        site: &SurveySite,
        source: Source,
    ) -> Result<crate::measurement::Measurement> {
        site.resolve(&self.feature, source, self.level)
    }
}

impl<'de> Deserialize<'de> for Selector {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Id(String),
            Full {
                feature: String,
                #[serde(default)]
                level: Level,
            },
        }
        Ok(match Repr::deserialize(d)? {
            Repr::Id(feature) => Selector {
                feature,
                level: Level::AtGround,
            },
            Repr::Full { feature, level } => Selector { feature, level },
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceSelector {
    Aerial,
    Ground,
    Both,
}

impl SourceSelector {
    pub fn includes(&self, source: Source) -> bool {
        matches!(
            (self, source),
            (SourceSelector::Both, _)
                | (SourceSelector::Aerial, Source::Aerial)
                | (SourceSelector::Ground, Source::Ground)
        )
    }

    pub fn sources(&self) -> Vec<Source> {
        Source::ALL
            .into_iter()
            .filter(|s| self.includes(*s))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Expression {
    Ratio {
        numerator: Selector,
        denominator: Selector,
    },
    /// The members share one value (χ² with n − 1 dof).
    Consistency { members: Vec<Selector> },
    /// Angle between line `first.0 → first.1` and line `second.0 → second.1`.
    /// Lines sharing their first point measure the angle at that vertex.
    /// Uses site coordinates, which are the same for every source.
    Angle {
        first: (String, String),
        second: (String, String),
        undirected: bool,
    },
}

impl Expression {
    pub fn is_coordinate_based(&self) -> bool {
        matches!(self, Expression::Angle { .. })
    }

    /// Every feature id the expression reads.
    pub fn references(&self) -> Vec<&str> {
        match self {
            Expression::Ratio {
                numerator,
                denominator,
            } => vec![&numerator.feature, &denominator.feature],
            Expression::Consistency { members } => {
                members.iter().map(|m| m.feature.as_str()).collect()
            }
            Expression::Angle { first, second, .. } => {
                vec![&first.0, &first.1, &second.0, &second.1]
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Hypothesis {
    pub id: String,
    pub description: String,
    /// Construct family the claim belongs to.
    pub construct: String,
    pub sources: SourceSelector,
    pub expression: Expression,
    /// Absent for consistency tests, which have no external target.
    pub target: Option<TargetConstant>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Outcome {
    Evaluated { result: TestResult },
    Skipped { reason: String },
}

impl Outcome {
    pub fn result(&self) -> Option<&TestResult> {
        match self {
            Outcome::Evaluated { result } => Some(result),
            Outcome::Skipped { .. } => None,
        }
    }
}

fn ratio_h(
    id: &str,
    construct: &str,
    description: &str,
    num: &str,
    den: &str,
    target: TargetConstant,
) -> Hypothesis {
    Hypothesis {
        id: id.to_string(),
        description: description.to_string(),
        construct: construct.to_string(),
        sources: SourceSelector::Both,
        expression: Expression::Ratio {
            numerator: Selector::at_ground(num),
            denominator: Selector::at_ground(den),
        },
        target: Some(target),
    }
}

fn angle_h(
    id: &str,
    construct: &str,
    description: &str,
    first: (&str, &str),
    second: (&str, &str),
    undirected: bool,
    deg: i64,
) -> Hypothesis {
    Hypothesis {
        id: id.to_string(),
        description: description.to_string(),
        construct: construct.to_string(),
        sources: SourceSelector::Both,
        expression: Expression::Angle {
            first: (first.0.to_string(), first.1.to_string()),
            second: (second.0.to_string(), second.1.to_string()),
            undirected,
        },
        target: Some(TargetConstant::integer(deg)),
    }
}

/// The built-in catalog for the D-shaped site layout: golden rectangle,
/// 3:4:5 triangles, squares with inscribed and circumscribed circles,
/// common-unit ratios and coordinate-based angle claims.
pub fn builtin_catalog() -> Vec<Hypothesis> {
    let q = |p, q| TargetConstant::rational(p, q).expect("valid constant");
    let sqrt2 = TargetConstant::sqrt(2).expect("valid constant");
    let n = TargetConstant::integer;
    const W: &str = "outer_d_width";
    let mut c = vec![
        ratio_h(
            "golden_length_width",
            "golden rectangle",
            "Length over width of the rectangle encasing the outer D",
            "outer_d_length",
            W,
            TargetConstant::Golden,
        ),
        ratio_h(
            "width_over_kiva_a_outer",
            "Pythagorean 3:4:5",
            "Width of outer D over outer radius of Kiva A (ground level)",
            W,
            "kiva_a_outer_radius",
            q(16, 3),
        ),
        ratio_h(
            "width_over_kiva_a_inner",
            "Pythagorean 3:4:5",
            "Width of outer D over inner radius of Kiva A (ground level)",
            W,
            "kiva_a_inner_radius",
            q(64, 9),
        ),
        ratio_h(
            "kiva_a_wall_ratio",
            "Pythagorean 3:4:5",
            "Outer over inner radius of Kiva A (ground level)",
            "kiva_a_outer_radius",
            "kiva_a_inner_radius",
            q(4, 3),
        ),
        ratio_h(
            "kiva_b_wall_ratio",
            "inscribed/circumscribed square",
            "Outer over inner radius of Kiva B",
            "kiva_b_outer_radius",
            "kiva_b_inner_radius",
            sqrt2,
        ),
        ratio_h(
            "kiva_c_wall_ratio",
            "inscribed/circumscribed square",
            "Outer over inner radius of Kiva C",
            "kiva_c_outer_radius",
            "kiva_c_inner_radius",
            sqrt2,
        ),
        ratio_h(
            "kiva_d_wall_ratio",
            "inscribed/circumscribed square",
            "Outer over inner radius of Kiva D",
            "kiva_d_outer_radius",
            "kiva_d_inner_radius",
            sqrt2,
        ),
        ratio_h(
            "bc_centers_over_b_south",
            "Pythagorean 3:4:5",
            "Kiva B-C center distance over Kiva B center to south wall",
            "kiva_bc_centers",
            "kiva_b_center_to_south_wall",
            q(4, 3),
        ),
        ratio_h(
            "width_over_kiva_d_outer",
            "common unit",
            "Width of outer D over outer radius of Kiva D",
            W,
            "kiva_d_outer_radius",
            n(6),
        ),
        ratio_h(
            "width_over_b_to_sw",
            "common unit",
            "Width of outer D over Kiva B outer wall to SW corner",
            W,
            "kiva_b_to_sw_corner",
            n(2),
        ),
        ratio_h(
            "width_over_c_to_se",
            "common unit",
            "Width of outer D over Kiva C outer wall to SE corner",
            W,
            "kiva_c_to_se_corner",
            n(2),
        ),
        ratio_h(
            "width_over_d_to_se",
            "common unit",
            "Width of outer D over Kiva D outer wall to SE corner",
            W,
            "kiva_d_to_se_corner",
            n(3),
        ),
        ratio_h(
            "width_over_d_center_to_se",
            "common unit",
            "Width of outer D over Kiva D center to SE corner",
            W,
            "kiva_d_center_to_se_corner",
            n(2),
        ),
        ratio_h(
            "width_over_b_to_south_wall",
            "common unit",
            "Width of outer D over Kiva B outer wall to south wall",
            W,
            "kiva_b_to_south_wall",
            n(3),
        ),
        ratio_h(
            "width_over_bc_gap",
            "common unit",
            "Width of outer D over gap between Kivas B and C",
            W,
            "kiva_bc_gap",
            n(3),
        ),
        ratio_h(
            "width_over_shrine_to_a",
            "common unit",
            "Width of outer D over Sun Shrine to Kiva A center",
            W,
            "sun_shrine_to_kiva_a_center",
            n(2),
        ),
        ratio_h(
            "width_over_a_to_south_wall",
            "common unit",
            "Width of outer D over Kiva A center to south wall",
            W,
            "kiva_a_center_to_south_wall",
            n(2),
        ),
        Hypothesis {
            id: "inner_radii_abc_equal".into(),
            description: "Inner radii of Kivas A, B and C are equal (ground level)".into(),
            construct: "common unit".into(),
            sources: SourceSelector::Both,
            expression: Expression::Consistency {
                members: vec![
                    Selector::at_ground("kiva_a_inner_radius"),
                    Selector::at_ground("kiva_b_inner_radius"),
                    Selector::at_ground("kiva_c_inner_radius"),
                ],
            },
            target: None,
        },
        angle_h(
            "angle_shrine_a_south_wall",
            "equilateral triangle",
            "Sun Shrine to Kiva A center against the south wall",
            ("sun_shrine", "kiva_a_center"),
            ("sw_corner", "se_corner"),
            true,
            60,
        ),
        angle_h(
            "angle_kiva_b_diagonal",
            "45° diagonal",
            "Kiva B center on the 45° diagonal of the square at the SW corner",
            ("sw_corner", "se_corner"),
            ("sw_corner", "kiva_b_center"),
            false,
            45,
        ),
        angle_h(
            "angle_diagonal_shrine_basin",
            "right angle",
            "Kiva B diagonal perpendicular to Sun Shrine to pecked basin",
            ("sw_corner", "kiva_b_center"),
            ("sun_shrine", "pecked_basin"),
            true,
            90,
        ),
        angle_h(
            "angle_shrine_basin_kiva_d",
            "Pythagorean 3:4:5",
            "Sun Shrine to pecked basin perpendicular to pecked basin to Kiva D center",
            ("pecked_basin", "sun_shrine"),
            ("pecked_basin", "kiva_d_center"),
            false,
            90,
        ),
    ];
    c.sort_by(|a, b| a.id.cmp(&b.id));
    c
}

/// Evaluates one hypothesis for one source. Anything that prevents
/// evaluation (missing source, missing coordinates, degenerate geometry) is
/// returned as a skip with its reason.
pub fn evaluate_hypothesis(site: &SurveySite, h: &Hypothesis, source: Source) -> Outcome {
    match try_evaluate(site, h, source) {
        Ok(result) => Outcome::Evaluated { result },
        Err(e) => Outcome::Skipped {
            reason: e.to_string(),
        },
    }
}

fn try_evaluate(site: &SurveySite, h: &Hypothesis, source: Source) -> Result<TestResult> {
    if !h.expression.is_coordinate_based() && !h.sources.includes(source) {
        return Err(Error::invalid(format!(
            "hypothesis not defined for {source} source"
        )));
    }
    let need_target = || {
        h.target
            .ok_or_else(|| Error::invalid(format!("hypothesis `{}` has no target", h.id)))
    };
    match &h.expression {
        Expression::Ratio {
            numerator,
            denominator,
        } => {
            let r = geometry::ratio(
                &numerator.resolve(site, source)?,
                &denominator.resolve(site, source)?,
            )?;
            stats::test_against_constant(&r, &need_target()?)
        }
        Expression::Consistency { members } => {
            let ms = members
                .iter()
                .map(|m| m.resolve(site, source))
                .collect::<Result<Vec<_>>>()?;
            stats::test_consistent(&ms)
        }
        Expression::Angle {
            first,
            second,
            undirected,
        } => {
            let p = |id: &str| site.position(id);
            let angle = if first.0 == second.0 {
                let a = geometry::angle_at(&p(&first.0)?, &p(&first.1)?, &p(&second.1)?)?;
                if *undirected && a.value > 90.0 {
                    crate::measurement::Measurement {
                        value: 180.0 - a.value,
                        ..a
                    }
                } else {
                    a
                }
            } else {
                geometry::angle_between_lines(
                    &p(&first.0)?,
                    &p(&first.1)?,
                    &p(&second.0)?,
                    &p(&second.1)?,
                    *undirected,
                )?
            };
            stats::test_against_constant(&angle, &need_target()?)
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct OverrideEntry {
    id: String,
    #[serde(default)]
    description: Option<String>,
    numerator: Selector,
    denominator: Selector,
    target: TargetConstant,
    #[serde(default = "both")]
    source: SourceSelector,
}

fn both() -> SourceSelector {
    SourceSelector::Both
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct OverrideFile {
    hypotheses: Vec<OverrideEntry>,
}

/// Parses a catalog override file: `{"hypotheses": [{"id", "numerator",
/// "denominator", "target", "source"}]}`. Selectors are feature ids or
/// `{"feature", "level"}` objects.
pub fn parse_catalog(text: &str) -> Result<Vec<Hypothesis>> {
    let file: OverrideFile = serde_json::from_str(text).map_err(|e| Error::Parse {
        location: format!("line {} column {}", e.line(), e.column()),
        message: e.to_string(),
    })?;
    let mut out: Vec<Hypothesis> = file
        .hypotheses
        .into_iter()
        .map(|e| Hypothesis {
            description: e
                .description
                .unwrap_or_else(|| format!("{} / {}", e.numerator.feature, e.denominator.feature)),
            id: e.id,
            construct: "user".into(),
            sources: e.source,
            expression: Expression::Ratio {
                numerator: e.numerator,
                denominator: e.denominator,
            },
            target: Some(e.target),
        })
        .collect();
    out.sort_by(|a, b| a.id.cmp(&b.id));
    if let Some(w) = out.windows(2).find(|w| w[0].id == w[1].id) {
        return Err(Error::DuplicateId(w[0].id.clone()));
    }
    Ok(out)
}

/// Checks that every referenced feature exists in `site`.
pub fn check_references(site: &SurveySite, catalog: &[Hypothesis]) -> Result<()> {
    for h in catalog {
        for r in h.expression.references() {
            if !site.contains(r) {
                return Err(Error::DanglingReference {
                    referrer: h.id.clone(),
                    missing: r.to_string(),
                });
            }
        }
    }
    Ok(())
}
