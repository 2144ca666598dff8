//! Site survey data model and the JSON survey file format.
//!
//! A [`SurveySite`] holds named features, each carrying up to two
//! measurements (aerial imagery and ground survey), optional site-frame
//! coordinates, declared additive adjustments and derived spans. Sites are
//! immutable once loaded.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point2D;
use crate::measurement::{Measurement, Unit};

/// The Sun Temple survey (Mesa Verde), aerial and ground columns.
pub const SUN_TEMPLE_SURVEY: &str = include_str!("../data/sun_temple.survey");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Aerial,
    Ground,
}

impl Source {
    pub const ALL: [Source; 2] = [Source::Aerial, Source::Ground];

    pub fn as_str(&self) -> &'static str {
        match self {
            Source::Aerial => "aerial",
            Source::Ground => "ground",
        }
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Whether declared adjustments are applied when resolving a measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    AsMeasured,
    #[default]
    AtGround,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Point,
    Circle,
    Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Feature {
    pub id: String,
    pub kind: FeatureKind,
    pub label: Option<String>,
    pub aerial: Option<Measurement>,
    pub ground: Option<Measurement>,
    pub position: Option<Point2D>,
}

impl Feature {
    pub fn measurement(&self, source: Source) -> Option<&Measurement> {
        match source {
            Source::Aerial => self.aerial.as_ref(),
            Source::Ground => self.ground.as_ref(),
        }
    }

    pub fn has_measurements(&self) -> bool {
        self.aerial.is_some() || self.ground.is_some()
    }

    pub fn display_label(&self) -> &str {
        self.label.as_deref().unwrap_or(&self.id)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Adjustment {
    pub feature: String,
    pub delta: Measurement,
    pub note: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpanOp {
    #[serde(rename = "-")]
    Difference,
    #[serde(rename = "+")]
    Sum,
}

/// How the sigma of a derived span is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SpanSigma {
    /// Independent errors combined in quadrature.
    #[default]
    Quadrature,
    /// The left operand's sigma alone; the right operand is taken as a
    /// correlated part of the same measurement.
    Minuend,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DerivedSpanRule {
    pub id: String,
    pub left: String,
    pub op: SpanOp,
    pub right: String,
    pub sigma: SpanSigma,
}

impl DerivedSpanRule {
    pub fn parse(id: &str, expr: &str, sigma: SpanSigma) -> Result<Self> {
        let parts: Vec<&str> = expr.split_whitespace().collect();
        let (left, op, right) = match parts.as_slice() {
            [l, "-", r] => (l, SpanOp::Difference, r),
            [l, "+", r] => (l, SpanOp::Sum, r),
            _ => {
                return Err(Error::Parse {
                    location: format!("derived `{id}`"),
                    message: format!("expression must be `A - B` or `A + B`, got `{expr}`"),
                })
            }
        };
        Ok(DerivedSpanRule {
            id: id.to_string(),
            left: left.to_string(),
            op,
            right: right.to_string(),
            sigma,
        })
    }

    pub fn expr(&self) -> String {
        let op = match self.op {
            SpanOp::Difference => "-",
            SpanOp::Sum => "+",
        };
        format!("{} {} {}", self.left, op, self.right)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurveySite {
    pub name: String,
    pub scale_cm_per_px: Option<f64>,
    features: Vec<Feature>,
    adjustments: Vec<Adjustment>,
    derived: Vec<DerivedSpanRule>,
    index: HashMap<String, usize>,
}

// On-disk representation. Every field is written on save, so a saved file
// is the canonical form of whatever was loaded.

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SurveyFile {
    site: String,
    #[serde(default)]
    scale_cm_per_px: Option<f64>,
    features: Vec<FeatureRecord>,
    #[serde(default)]
    adjustments: Vec<AdjustmentRecord>,
    #[serde(default)]
    derived: Vec<DerivedRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FeatureRecord {
    id: String,
    kind: FeatureKind,
    #[serde(default)]
    label: Option<String>,
    #[serde(default)]
    measurements: SourcesRecord,
    #[serde(default)]
    xy_cm: Option<[f64; 2]>,
    #[serde(default)]
    xy_sigma_cm: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct SourcesRecord {
    #[serde(default)]
    aerial: Option<Measurement>,
    #[serde(default)]
    ground: Option<Measurement>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AdjustmentRecord {
    id: String,
    delta_cm: f64,
    #[serde(default)]
    note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DerivedRecord {
    id: String,
    expr: String,
    #[serde(default)]
    sigma: SpanSigma,
}

fn valid_identifier(id: &str) -> bool {
    !id.is_empty()
        && id
            .bytes()
            .all(|b| b.is_ascii_alphanumeric() || matches!(b, b'_' | b'-' | b'.'))
}

impl SurveySite {
    /// Validates and assembles a site from its parts.
    pub fn new(
        name: impl Into<String>,
        scale_cm_per_px: Option<f64>,
        features: Vec<Feature>,
        adjustments: Vec<Adjustment>,
        derived: Vec<DerivedSpanRule>,
    ) -> Result<Self> {
        let name = name.into();
        if let Some(s) = scale_cm_per_px {
            if !(s.is_finite() && s > 0.0) {
                return Err(Error::Invariant {
                    feature: name,
                    message: format!("scale must be > 0, got {s}"),
                });
            }
        }
        let mut index = HashMap::with_capacity(features.len());
        for (i, f) in features.iter().enumerate() {
            if !valid_identifier(&f.id) {
                return Err(Error::Invariant {
                    feature: f.id.clone(),
                    message: "identifier must be an ASCII token".into(),
                });
            }
            if index.insert(f.id.clone(), i).is_some() {
                return Err(Error::DuplicateId(f.id.clone()));
            }
            for m in [&f.aerial, &f.ground].into_iter().flatten() {
                m.validate().map_err(|e| Error::Invariant {
                    feature: f.id.clone(),
                    message: e.to_string(),
                })?;
            }
            if let Some(p) = &f.position {
                Point2D::new(p.x, p.y, p.sigma).map_err(|e| Error::Invariant {
                    feature: f.id.clone(),
                    message: e.to_string(),
                })?;
            }
        }
        for a in &adjustments {
            let Some(&i) = index.get(&a.feature) else {
                return Err(Error::DanglingReference {
                    referrer: "adjustment".into(),
                    missing: a.feature.clone(),
                });
            };
            a.delta.validate().map_err(|e| Error::Invariant {
                feature: a.feature.clone(),
                message: e.to_string(),
            })?;
            for m in [&features[i].aerial, &features[i].ground]
                .into_iter()
                .flatten()
            {
                if m.unit != a.delta.unit {
                    return Err(Error::Invariant {
                        feature: a.feature.clone(),
                        message: format!(
                            "adjustment unit {} does not match measurement unit {}",
                            a.delta.unit, m.unit
                        ),
                    });
                }
            }
        }
        for d in &derived {
            if !valid_identifier(&d.id) {
                return Err(Error::Invariant {
                    feature: d.id.clone(),
                    message: "identifier must be an ASCII token".into(),
                });
            }
            if index.contains_key(&d.id) || derived.iter().filter(|o| o.id == d.id).count() > 1 {
                return Err(Error::DuplicateId(d.id.clone()));
            }
            for r in [&d.left, &d.right] {
                if !index.contains_key(r) {
                    return Err(Error::DanglingReference {
                        referrer: d.id.clone(),
                        missing: r.clone(),
                    });
                }
            }
            for src in Source::ALL {
                let l = features[index[&d.left]].measurement(src);
                let r = features[index[&d.right]].measurement(src);
                if let (Some(l), Some(r)) = (l, r) {
                    if l.unit != r.unit {
                        return Err(Error::UnitMismatch {
                            left: l.unit,
                            right: r.unit,
                        });
                    }
                }
            }
        }
        Ok(SurveySite {
            name,
            scale_cm_per_px,
            features,
            adjustments,
            derived,
            index,
        })
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: SurveyFile = serde_json::from_str(text).map_err(|e| Error::Parse {
            location: format!("line {} column {}", e.line(), e.column()),
            message: e.to_string(),
        })?;
        let features = file
            .features
            .into_iter()
            .map(|r| {
                let position = match (r.xy_cm, r.xy_sigma_cm) {
                    (Some([x, y]), s) => Some(Point2D {
                        x,
                        y,
                        sigma: s.unwrap_or(0.0),
                    }),
                    (None, Some(_)) => {
                        return Err(Error::Invariant {
                            feature: r.id,
                            message: "xy_sigma_cm given without xy_cm".into(),
                        })
                    }
                    (None, None) => None,
                };
                Ok(Feature {
                    id: r.id,
                    kind: r.kind,
                    label: r.label,
                    aerial: r.measurements.aerial,
                    ground: r.measurements.ground,
                    position,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let adjustments = file
            .adjustments
            .into_iter()
            .map(|a| Adjustment {
                feature: a.id,
                delta: Measurement::cm(a.delta_cm, 0.0),
                note: a.note,
            })
            .collect();
        let derived = file
            .derived
            .iter()
            .map(|d| DerivedSpanRule::parse(&d.id, &d.expr, d.sigma))
            .collect::<Result<Vec<_>>>()?;
        SurveySite::new(
            file.site,
            file.scale_cm_per_px,
            features,
            adjustments,
            derived,
        )
    }

    pub fn to_json_string(&self) -> String {
        let file = SurveyFile {
            site: self.name.clone(),
            scale_cm_per_px: self.scale_cm_per_px,
            features: self
                .features
                .iter()
                .map(|f| FeatureRecord {
                    id: f.id.clone(),
                    kind: f.kind,
                    label: f.label.clone(),
                    measurements: SourcesRecord {
                        aerial: f.aerial,
                        ground: f.ground,
                    },
                    xy_cm: f.position.map(|p| [p.x, p.y]),
                    xy_sigma_cm: f.position.map(|p| p.sigma),
                })
                .collect(),
            adjustments: self
                .adjustments
                .iter()
                .map(|a| AdjustmentRecord {
                    id: a.feature.clone(),
                    delta_cm: a.delta.value,
                    note: a.note.clone(),
                })
                .collect(),
            derived: self
                .derived
                .iter()
                .map(|d| DerivedRecord {
                    id: d.id.clone(),
                    expr: d.expr(),
                    sigma: d.sigma,
                })
                .collect(),
        };
        let mut s = serde_json::to_string_pretty(&file).expect("survey file serializes");
        s.push('\n');
        s
    }

    pub fn sun_temple() -> Self {
        SurveySite::from_json_str(SUN_TEMPLE_SURVEY).expect("bundled survey is valid")
    }

    pub fn features(&self) -> &[Feature] {
        &self.features
    }

    pub fn adjustments(&self) -> &[Adjustment] {
        &self.adjustments
    }

    pub fn derived(&self) -> &[DerivedSpanRule] {
        &self.derived
    }

    pub fn feature(&self, id: &str) -> Option<&Feature> {
        self.index.get(id).map(|&i| &self.features[i])
    }

    pub fn derived_rule(&self, id: &str) -> Option<&DerivedSpanRule> {
        self.derived.iter().find(|d| d.id == id)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.index.contains_key(id) || self.derived_rule(id).is_some()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    /// Features that carry at least one measurement, in file order.
    pub fn measured_features(&self) -> impl Iterator<Item = &Feature> {
        self.features.iter().filter(|f| f.has_measurements())
    }

    /// A measurement by feature (or derived span) id.
    pub fn resolve(&self, id: &str, source: Source, level: Level) -> Result<Measurement> {
        if let Some(f) = self.feature(id) {
            return resolve_measurement(self, f, source, level);
        }
        if let Some(rule) = self.derived_rule(id) {
            return evaluate_derived_span(self, rule, source, level);
        }
        Err(Error::DanglingReference {
            referrer: "lookup".into(),
            missing: id.to_string(),
        })
    }

    pub fn position(&self, id: &str) -> Result<Point2D> {
        let f = self.feature(id).ok_or_else(|| Error::DanglingReference {
            referrer: "lookup".into(),
            missing: id.to_string(),
        })?;
        f.position
            .ok_or_else(|| Error::MissingCoordinates(id.to_string()))
    }

    /// Every length, sigma, adjustment and coordinate multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor.is_finite() && factor > 0.0) {
            return Err(Error::invalid("scale factor must be > 0"));
        }
        let scale_len = |m: Measurement| {
            if m.unit == Unit::Centimeters {
                m.scaled(factor)
            } else {
                m
            }
        };
        let features = self
            .features
            .iter()
            .map(|f| Feature {
                aerial: f.aerial.map(scale_len),
                ground: f.ground.map(scale_len),
                position: f.position.map(|p| Point2D {
                    x: p.x * factor,
                    y: p.y * factor,
                    sigma: p.sigma * factor,
                }),
                ..f.clone()
            })
            .collect();
        let adjustments = self
            .adjustments
            .iter()
            .map(|a| Adjustment {
                delta: scale_len(a.delta),
                ..a.clone()
            })
            .collect();
        SurveySite::new(
            self.name.clone(),
            self.scale_cm_per_px.map(|s| s * factor),
            features,
            adjustments,
            self.derived.clone(),
        )
    }
}

pub fn load_site(path: impl AsRef<Path>) -> Result<SurveySite> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    SurveySite::from_json_str(&text)
}

pub fn save_site(site: &SurveySite, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, site.to_json_string()).map_err(|e| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

/// The raw measurement, or at ground level with every declared adjustment
/// for the feature added (sigmas in quadrature).
pub fn resolve_measurement(
    site: &SurveySite,
    feature: &Feature,
    source: Source,
    level: Level,
) -> Result<Measurement> {
    let raw = *feature
        .measurement(source)
        .ok_or_else(|| Error::MissingSource {
            feature: feature.id.clone(),
            column: source.to_string(),
        })?;
    match level {
        Level::AsMeasured => Ok(raw),
        Level::AtGround => site
            .adjustments
            .iter()
            .filter(|a| a.feature == feature.id)
            .try_fold(raw, |acc, a| acc.checked_add(&a.delta)),
    }
}

pub fn evaluate_derived_span(
    site: &SurveySite,
    rule: &DerivedSpanRule,
    source: Source,
    level: Level,
) -> Result<Measurement> {
    let get = |id: &str| {
        let f = site.feature(id).ok_or_else(|| Error::DanglingReference {
            referrer: rule.id.clone(),
            missing: id.to_string(),
        })?;
        resolve_measurement(site, f, source, level)
    };
    let l = get(&rule.left)?;
    let r = get(&rule.right)?;
    let combined = match rule.op {
        SpanOp::Difference => l.checked_sub(&r)?,
        SpanOp::Sum => l.checked_add(&r)?,
    };
    Ok(match rule.sigma {
        SpanSigma::Quadrature => combined,
        SpanSigma::Minuend => Measurement {
            sigma: l.sigma,
            ..combined
        },
    })
}
