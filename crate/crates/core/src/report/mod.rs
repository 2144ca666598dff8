//! Report assembly: consistency and ratio tables, the battery listing, the
//! module-width tables and a deviations section comparing against published
//! reference values. Numbers stay unrounded until rendering.

mod svg;

use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::constructs::{BatteryReport, Outcome, UnitEstimate};
use crate::error::{Error, Result};
use crate::measurement::Measurement;
use crate::stats::{self, round_half_away, Decision, TestResult};
use crate::survey::{Source, SurveySite};

pub use svg::{render_overlay, Layer, OverlayOptions, RenderedOverlay};

pub const SUN_TEMPLE_REFERENCE: &str = include_str!("../../data/sun_temple.reference.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceConsistencyRow {
    pub row: usize,
    pub feature: String,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceRatio {
    pub hypothesis: String,
    pub source: Source,
    pub ratio: f64,
    pub sigma: f64,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceMean {
    pub hypothesis: String,
    pub source: Source,
    pub mean: f64,
    pub sigma: f64,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceUnitRow {
    pub row: usize,
    pub value: f64,
    pub sigma: f64,
    /// Rows sharing a group are compared as a multiset as well.
    #[serde(default)]
    pub group: Option<String>,
    /// Known disagreement with the published value, with the reason.
    #[serde(default)]
    pub expected_deviation: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceUnitSummary {
    pub x: f64,
    pub x_sigma: f64,
    pub l: f64,
    pub l_sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnitReferences {
    pub aerial: Vec<ReferenceUnitRow>,
    pub ground: Vec<ReferenceUnitRow>,
}

/// Published values a report is checked against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Reference {
    pub site: String,
    pub table1: Vec<ReferenceConsistencyRow>,
    pub ratios: Vec<ReferenceRatio>,
    pub consistency: Vec<ReferenceMean>,
    pub unit_terms: UnitReferences,
    pub unit_summary: std::collections::BTreeMap<Source, ReferenceUnitSummary>,
    /// Printed values are whole centimetres; larger gaps are flagged.
    pub row_tolerance_cm: f64,
}

impl Reference {
    pub fn from_json_str(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse {
            location: format!("line {} column {}", e.line(), e.column()),
            message: e.to_string(),
        })
    }

    pub fn sun_temple() -> Self {
        Self::from_json_str(SUN_TEMPLE_REFERENCE).expect("bundled reference parses")
    }

    pub fn unit_rows(&self, source: Source) -> &[ReferenceUnitRow] {
        match source {
            Source::Aerial => &self.unit_terms.aerial,
            Source::Ground => &self.unit_terms.ground,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Markdown,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConsistencyRow {
    pub row: usize,
    pub feature: String,
    pub label: String,
    pub aerial: Measurement,
    pub ground: Measurement,
    pub result: TestResult,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UnitRow {
    pub row: usize,
    pub description: String,
    pub multiplier: String,
    pub value: Measurement,
    pub printed: Option<Measurement>,
    /// Percent difference from the printed value.
    pub deviation_percent: Option<f64>,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UnitTable {
    pub estimate: UnitEstimate,
    pub rows: Vec<UnitRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Deviation {
    pub section: String,
    pub item: String,
    pub source: Option<Source>,
    pub computed: f64,
    pub printed: f64,
    /// Present when the reference documents this disagreement.
    pub expected: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportBundle {
    pub site: String,
    /// `None` leaves the aerial vs ground section out.
    pub table1: Option<Vec<ConsistencyRow>>,
    pub battery: Option<BatteryReport>,
    pub units: Vec<UnitTable>,
    pub deviations: Vec<Deviation>,
    pub notes: Vec<String>,
    /// Whether a reference was supplied; without one there is no
    /// deviations section.
    pub compared: bool,
}

const P_TOL: f64 = 0.01 + 1e-9;
const RATIO_TOL: f64 = 0.002 + 1e-9;

/// Aerial vs ground agreement for every feature measured by both.
pub fn consistency_table(site: &SurveySite) -> Result<Vec<ConsistencyRow>> {
    let mut rows = Vec::new();
    for (i, f) in site.measured_features().enumerate() {
        if let (Some(a), Some(g)) = (f.aerial, f.ground) {
            rows.push(ConsistencyRow {
                row: i + 1,
                feature: f.id.clone(),
                label: f.display_label().to_string(),
                aerial: a,
                ground: g,
                result: stats::test_equal(&a, &g)?,
            });
        }
    }
    Ok(rows)
}

fn unit_table(est: &UnitEstimate, reference: Option<&Reference>) -> UnitTable {
    let printed_rows = reference.map(|r| r.unit_rows(est.source)).unwrap_or(&[]);
    let tol = reference
        .map(|r| r.row_tolerance_cm)
        .unwrap_or(f64::INFINITY);
    let rows = est
        .terms
        .iter()
        .map(|t| {
            let printed = printed_rows
                .iter()
                .find(|r| r.row == t.row)
                .map(|r| Measurement::cm(r.value, r.sigma));
            let deviation_percent = printed.map(|p| 100.0 * (t.value.value - p.value) / p.value);
            let gap = printed.map(|p| (t.value.value - p.value).abs());
            UnitRow {
                row: t.row,
                description: t.description.clone(),
                multiplier: t.multiplier.to_string(),
                value: t.value,
                printed,
                flagged: gap.is_some_and(|g| g > tol),
                deviation_percent,
            }
        })
        .collect();
    UnitTable {
        estimate: est.clone(),
        rows,
    }
}

/// Collects every table and, given a reference, every disagreement with it.
pub fn build_report(
    site: &SurveySite,
    battery: Option<&BatteryReport>,
    units: &[UnitEstimate],
    reference: Option<&Reference>,
) -> Result<ReportBundle> {
    let table1 = consistency_table(site)?;
    let units: Vec<UnitTable> = units.iter().map(|u| unit_table(u, reference)).collect();
    let mut deviations = Vec::new();
    let mut notes = Vec::new();
    if let Some(r) = reference {
        for refrow in &r.table1 {
            if let Some(row) = table1.iter().find(|t| t.feature == refrow.feature) {
                let p = round_half_away(row.result.p, 2);
                if (p - refrow.p).abs() > P_TOL {
                    deviations.push(Deviation {
                        section: "aerial vs ground".into(),
                        item: format!("{} p", row.feature),
                        source: None,
                        computed: p,
                        printed: refrow.p,
                        expected: None,
                    });
                }
            }
        }
        if let Some(b) = battery {
            for rr in &r.ratios {
                let Some(res) = b
                    .find(&rr.hypothesis, Some(rr.source))
                    .and_then(|e| e.outcome.result())
                else {
                    continue;
                };
                let ratio = round_half_away(res.observed.value, 3);
                let p = round_half_away(res.p, 2);
                let mut push = |what: &str, computed: f64, printed: f64| {
                    deviations.push(Deviation {
                        section: "battery".into(),
                        item: format!("{} {what}", rr.hypothesis),
                        source: Some(rr.source),
                        computed,
                        printed,
                        expected: None,
                    })
                };
                if (ratio - rr.ratio).abs() > RATIO_TOL {
                    push("ratio", ratio, rr.ratio);
                }
                if (p - rr.p).abs() > P_TOL {
                    push("p", p, rr.p);
                }
            }
            for rm in &r.consistency {
                let Some(res) = b
                    .find(&rm.hypothesis, Some(rm.source))
                    .and_then(|e| e.outcome.result())
                else {
                    continue;
                };
                let mean = round_half_away(res.observed.value, 0);
                let p = round_half_away(res.p, 2);
                if (mean - rm.mean).abs() > 0.5 {
                    deviations.push(Deviation {
                        section: "battery".into(),
                        item: format!("{} mean", rm.hypothesis),
                        source: Some(rm.source),
                        computed: mean,
                        printed: rm.mean,
                        expected: None,
                    });
                }
                if (p - rm.p).abs() > P_TOL {
                    deviations.push(Deviation {
                        section: "battery".into(),
                        item: format!("{} p", rm.hypothesis),
                        source: Some(rm.source),
                        computed: p,
                        printed: rm.p,
                        expected: None,
                    });
                }
            }
        }
        for table in &units {
            let source = table.estimate.source;
            let refs = r.unit_rows(source);
            for row in table.rows.iter().filter(|row| row.flagged) {
                let refrow = refs.iter().find(|x| x.row == row.row);
                deviations.push(Deviation {
                    section: "module width".into(),
                    item: format!("row {}: {}", row.row + 1, row.description),
                    source: Some(source),
                    computed: row.value.value,
                    printed: row.printed.map(|p| p.value).unwrap_or(f64::NAN),
                    expected: refrow.and_then(|x| x.expected_deviation.clone()),
                });
            }
            notes.extend(multiset_notes(table, refs));
        }
    }
    Ok(ReportBundle {
        site: site.name.clone(),
        table1: Some(table1),
        battery: battery.cloned(),
        units,
        deviations,
        notes,
        compared: reference.is_some(),
    })
}

/// For each group of reference rows: if the computed values, rounded to
/// whole centimetres, equal the printed column as a multiset but not row
/// by row, say so.
fn multiset_notes(table: &UnitTable, refs: &[ReferenceUnitRow]) -> Vec<String> {
    let mut groups: Vec<&str> = refs.iter().filter_map(|r| r.group.as_deref()).collect();
    groups.dedup();
    let mut out = Vec::new();
    for g in groups {
        let members: Vec<&ReferenceUnitRow> = refs
            .iter()
            .filter(|r| r.group.as_deref() == Some(g))
            .collect();
        let mut computed = Vec::new();
        let mut printed = Vec::new();
        for m in &members {
            let Some(row) = table.rows.iter().find(|r| r.row == m.row) else {
                continue;
            };
            computed.push(round_half_away(row.value.value, 0) as i64);
            printed.push(m.value.round() as i64);
        }
        if computed.len() != members.len() || computed == printed {
            continue;
        }
        let first = members.iter().map(|m| m.row).min().unwrap_or(0) + 1;
        let last = members.iter().map(|m| m.row).max().unwrap_or(0) + 1;
        computed.sort_unstable();
        printed.sort_unstable();
        if computed == printed {
            out.push(format!(
                "{} rows {first}-{last} ({g}): computed values equal the printed column as a set; the printed rows are in a different order",
                table.estimate.source
            ));
        }
    }
    out
}

pub fn emit_tables(
    site: &SurveySite,
    battery: Option<&BatteryReport>,
    units: &[UnitEstimate],
    reference: Option<&Reference>,
    format: Format,
) -> Result<String> {
    Ok(render(
        &build_report(site, battery, units, reference)?,
        format,
    ))
}

fn fmt_fixed(x: f64, digits: i32) -> String {
    let r = round_half_away(x, digits);
    let s = format!("{:.*}", digits.max(0) as usize, r);
    if s.trim_start_matches('-')
        .chars()
        .all(|c| c == '0' || c == '.')
    {
        s.trim_start_matches('-').to_string()
    } else {
        s
    }
}

fn fmt_p(p: f64) -> String {
    fmt_fixed(p, 2)
}

fn fmt_len(m: &Measurement) -> String {
    format!("{}±{}", fmt_fixed(m.value, 0), fmt_fixed(m.sigma, 0))
}

fn fmt_ratio(m: &Measurement) -> String {
    format!("{}±{}", fmt_fixed(m.value, 3), fmt_fixed(m.sigma, 3))
}

/// Renders an observed value by unit: lengths in whole cm, angles to one
/// decimal, ratios to three.
fn fmt_observed(m: &Measurement) -> String {
    match m.unit {
        crate::measurement::Unit::Centimeters => fmt_len(m),
        crate::measurement::Unit::Degrees => {
            format!("{}±{}", fmt_fixed(m.value, 1), fmt_fixed(m.sigma, 1))
        }
        crate::measurement::Unit::Dimensionless => fmt_ratio(m),
    }
}

struct Table {
    title: String,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn write_table(out: &mut String, t: &Table, format: Format) {
    match format {
        Format::Markdown => {
            let _ = writeln!(out, "## {}\n", t.title);
            let _ = writeln!(out, "| {} |", t.header.join(" | "));
            let _ = writeln!(out, "|{}", "---|".repeat(t.header.len()));
            for r in &t.rows {
                let cells: Vec<String> = r.iter().map(|c| c.replace('|', "\\|")).collect();
                let _ = writeln!(out, "| {} |", cells.join(" | "));
            }
            out.push('\n');
        }
        Format::Csv => {
            let _ = writeln!(out, "# {}", t.title);
            let _ = writeln!(
                out,
                "{}",
                t.header
                    .iter()
                    .map(|h| csv_field(h))
                    .collect::<Vec<_>>()
                    .join(",")
            );
            for r in &t.rows {
                let _ = writeln!(
                    out,
                    "{}",
                    r.iter().map(|c| csv_field(c)).collect::<Vec<_>>().join(",")
                );
            }
            out.push('\n');
        }
    }
}

fn h(cols: &[&str]) -> Vec<String> {
    cols.iter().map(|s| s.to_string()).collect()
}

/// Renders a bundle. Output depends only on the bundle.
pub fn render(bundle: &ReportBundle, format: Format) -> String {
    let mut out = String::new();
    if format == Format::Markdown {
        let _ = writeln!(out, "# {}\n", bundle.site);
    }
    let mut tables = Vec::new();
    if let Some(table1) = &bundle.table1 {
        tables.push(Table {
            title: "Aerial vs ground".into(),
            header: h(&["line", "feature", "aerial (cm)", "ground (cm)", "chi2", "p"]),
            rows: table1
                .iter()
                .map(|r| {
                    vec![
                        r.row.to_string(),
                        r.label.clone(),
                        fmt_len(&r.aerial),
                        fmt_len(&r.ground),
                        fmt_fixed(r.result.chi2, 3),
                        fmt_p(r.result.p),
                    ]
                })
                .collect(),
        });
    }
    if let Some(b) = &bundle.battery {
        let wall: Vec<Vec<String>> = b
            .entries
            .iter()
            .filter(|e| e.hypothesis.ends_with("_wall_ratio"))
            .filter_map(|e| {
                let r = e.outcome.result()?;
                let target = match &r.target {
                    stats::Target::Constant { constant, value } => {
                        format!("{constant} ≈ {}", fmt_fixed(*value, 3))
                    }
                    _ => String::new(),
                };
                Some(vec![
                    e.source.map(|s| s.to_string()).unwrap_or_default(),
                    format!(
                        "Kiva {}",
                        e.hypothesis.split('_').nth(1).unwrap_or("?").to_uppercase()
                    ),
                    fmt_ratio(&r.observed),
                    target,
                    fmt_p(r.p),
                ])
            })
            .collect();
        tables.push(Table {
            title: "Outer over inner kiva radii".into(),
            header: h(&["source", "kiva", "ratio", "target", "p"]),
            rows: wall,
        });
        let plan = match &b.plan {
            Some(p) => format!(
                "k = {}, alpha = {}, alpha' = {}",
                p.k,
                p.alpha,
                fmt_fixed(p.alpha_prime, 6)
            ),
            None => format!("k = 0, alpha = {}; no test could be evaluated", b.alpha),
        };
        tables.push(Table {
            title: format!("Battery ({plan})"),
            header: h(&[
                "hypothesis",
                "source",
                "observed",
                "target",
                "chi2",
                "dof",
                "p",
                "decision",
            ]),
            rows: b
                .entries
                .iter()
                .map(|e| {
                    let source = e
                        .source
                        .map(|s| s.to_string())
                        .unwrap_or_else(|| "coordinates".into());
                    match e.outcome.result() {
                        Some(r) => vec![
                            e.hypothesis.clone(),
                            source,
                            fmt_observed(&r.observed),
                            match &r.target {
                                stats::Target::Constant { constant, .. } => constant.to_string(),
                                stats::Target::CommonMean { .. } => "common mean".into(),
                                stats::Target::Measurement { measurement } => {
                                    fmt_observed(measurement)
                                }
                            },
                            fmt_fixed(r.chi2, 3),
                            r.dof.to_string(),
                            fmt_p(r.p),
                            match e.decision {
                                Some(Decision::Rejected) => "rejected".into(),
                                _ => "not rejected".into(),
                            },
                        ],
                        None => {
                            let reason = match &e.outcome {
                                Outcome::Skipped { reason } => reason.clone(),
                                _ => String::new(),
                            };
                            vec![
                                e.hypothesis.clone(),
                                source,
                                String::new(),
                                String::new(),
                                String::new(),
                                String::new(),
                                String::new(),
                                format!("skipped: {reason}"),
                            ]
                        }
                    }
                })
                .collect(),
        });
    }
    for u in &bundle.units {
        let est = &u.estimate;
        let mut rows: Vec<Vec<String>> = u
            .rows
            .iter()
            .map(|r| {
                vec![
                    (r.row + 1).to_string(),
                    r.description.clone(),
                    r.multiplier.clone(),
                    fmt_len(&r.value),
                    r.printed.as_ref().map(fmt_len).unwrap_or_default(),
                    r.deviation_percent
                        .map(|d| fmt_fixed(d, 2))
                        .unwrap_or_default(),
                    if r.flagged {
                        "deviation".into()
                    } else {
                        String::new()
                    },
                ]
            })
            .collect();
        rows.push(vec![
            String::new(),
            "Module width X".into(),
            String::new(),
            fmt_len(&est.x),
            String::new(),
            String::new(),
            String::new(),
        ]);
        rows.push(vec![
            String::new(),
            "Base unit L = X/64".into(),
            String::new(),
            format!(
                "{}±{}",
                fmt_fixed(est.l.value, 2),
                fmt_fixed(est.l.sigma, 2)
            ),
            String::new(),
            String::new(),
            String::new(),
        ]);
        let weighting = match est.weighting {
            stats::Weighting::Unweighted => "unweighted",
            stats::Weighting::InverseVariance => "inverse-variance",
        };
        tables.push(Table {
            title: format!(
                "Module width, {} ({weighting} mean, {} terms)",
                est.source,
                est.terms.len()
            ),
            header: h(&[
                "row",
                "term",
                "multiplier",
                "value (cm)",
                "printed (cm)",
                "deviation %",
                "flag",
            ]),
            rows,
        });
    }
    if bundle.compared {
        tables.push(Table {
            title: "Deviations".into(),
            header: h(&["section", "item", "source", "computed", "printed", "status"]),
            rows: bundle
                .deviations
                .iter()
                .map(|d| {
                    let digits = if d.section == "module width" {
                        0
                    } else if d.item.ends_with("ratio") {
                        3
                    } else {
                        2
                    };
                    vec![
                        d.section.clone(),
                        d.item.clone(),
                        d.source.map(|s| s.to_string()).unwrap_or_default(),
                        fmt_fixed(d.computed, digits),
                        fmt_fixed(d.printed, digits),
                        match &d.expected {
                            Some(why) => format!("documented: {why}"),
                            None => "unexpected".into(),
                        },
                    ]
                })
                .collect(),
        });
    }
    for t in &tables {
        write_table(&mut out, t, format);
    }
    if !bundle.notes.is_empty() {
        match format {
            Format::Markdown => {
                let _ = writeln!(out, "## Notes\n");
                for n in &bundle.notes {
                    let _ = writeln!(out, "- {n}");
                }
            }
            Format::Csv => {
                for n in &bundle.notes {
                    let _ = writeln!(out, "# note: {n}");
                }
            }
        }
    }
    out
}
