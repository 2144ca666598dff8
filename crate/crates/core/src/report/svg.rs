//! SVG overlay of construct layers over a site plan.

use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::geometry::{self, Point2D};
use crate::measurement::Measurement;
use crate::survey::{Level, Source, SurveySite};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Layer {
    /// Inner and outer wall circles of each kiva.
    Circles,
    GoldenRectangle,
    /// Equilateral triangle on the Sun Shrine to Kiva A line.
    Triangles,
    /// Square on each kiva's inner diameter with its inscribed and
    /// circumscribed circles.
    InscribedCircumscribed,
    /// Bars of length X, X/2, X/3 and 3X/8.
    UnitLines,
}

impl Layer {
    pub const ALL: [Layer; 5] = [
        Layer::Circles,
        Layer::GoldenRectangle,
        Layer::Triangles,
        Layer::InscribedCircumscribed,
        Layer::UnitLines,
    ];

    fn id(&self) -> &'static str {
        match self {
            Layer::Circles => "circles",
            Layer::GoldenRectangle => "golden-rectangle",
            Layer::Triangles => "triangles",
            Layer::InscribedCircumscribed => "inscribed-circumscribed",
            Layer::UnitLines => "unit-lines",
        }
    }

    fn color(&self) -> &'static str {
        match self {
            Layer::Circles => "#d62728",
            Layer::GoldenRectangle => "#bcbd22",
            Layer::Triangles => "#1f77b4",
            Layer::InscribedCircumscribed => "#e377c2",
            Layer::UnitLines => "#8c564b",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OverlayOptions {
    /// Document pixels per centimetre.
    pub px_per_cm: f64,
    pub source: Source,
    pub padding_px: f64,
}

impl Default for OverlayOptions {
    fn default() -> Self {
        OverlayOptions {
            px_per_cm: 0.25,
            source: Source::Aerial,
            padding_px: 20.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderedOverlay {
    pub svg: String,
    pub warnings: Vec<String>,
}

enum Shape {
    Circle {
        c: (f64, f64),
        r: f64,
    },
    Polygon(Vec<(f64, f64)>),
    Line((f64, f64), (f64, f64)),
    Arc {
        r: f64,
        from: (f64, f64),
        to: (f64, f64),
    },
}

impl Shape {
    fn extent(&self) -> Vec<(f64, f64)> {
        match self {
            Shape::Circle { c, r } => vec![(c.0 - r, c.1 - r), (c.0 + r, c.1 + r)],
            // The golden arc is monotone between its endpoints.
            Shape::Arc { from, to, .. } => vec![*from, *to],
            Shape::Polygon(p) => p.clone(),
            Shape::Line(a, b) => vec![*a, *b],
        }
    }
}

const KIVAS: [char; 4] = ['a', 'b', 'c', 'd'];

fn xy(p: &Point2D) -> (f64, f64) {
    (p.x, p.y)
}

fn measured(site: &SurveySite, id: &str, source: Source) -> Result<Measurement, String> {
    site.resolve(id, source, Level::AtGround)
        .map_err(|e| e.to_string())
}

fn layer_shapes(
    site: &SurveySite,
    layer: Layer,
    opts: &OverlayOptions,
    warnings: &mut Vec<String>,
) -> Vec<Shape> {
    let mut shapes = Vec::new();
    let src = opts.source;
    let mut warn = |w: String| warnings.push(format!("{}: {w}", layer.id()));
    match layer {
        Layer::Circles | Layer::InscribedCircumscribed => {
            for k in KIVAS {
                let center = match site.position(&format!("kiva_{k}_center")) {
                    Ok(p) => p,
                    Err(e) => {
                        warn(e.to_string());
                        continue;
                    }
                };
                let c = xy(&center);
                if layer == Layer::Circles {
                    for wall in ["inner", "outer"] {
                        match measured(site, &format!("kiva_{k}_{wall}_radius"), src) {
                            Ok(m) => shapes.push(Shape::Circle { c, r: m.value }),
                            Err(e) => warn(e),
                        }
                    }
                } else {
                    let side = match measured(site, &format!("kiva_{k}_inner_radius"), src) {
                        Ok(m) => 2.0 * m.value,
                        Err(e) => {
                            warn(e);
                            continue;
                        }
                    };
                    let Ok((r_in, r_out)) = geometry::inscribed_circumscribed(side) else {
                        warn(format!("kiva {k}: non-positive radius"));
                        continue;
                    };
                    let h = side / 2.0;
                    shapes.push(Shape::Polygon(vec![
                        (c.0 - h, c.1 - h),
                        (c.0 + h, c.1 - h),
                        (c.0 + h, c.1 + h),
                        (c.0 - h, c.1 + h),
                    ]));
                    shapes.push(Shape::Circle { c, r: r_in });
                    shapes.push(Shape::Circle { c, r: r_out });
                }
            }
        }
        Layer::GoldenRectangle => {
            let width = match measured(site, "outer_d_width", src) {
                Ok(m) => m.value,
                Err(e) => {
                    warn(e);
                    return shapes;
                }
            };
            let origin = site.position("sw_corner").unwrap_or_else(|_| {
                warn("no coordinates for sw_corner; drawn at the origin".into());
                Point2D::exact(0.0, 0.0)
            });
            let orientation = match (site.position("sw_corner"), site.position("se_corner")) {
                (Ok(a), Ok(b)) => (b.y - a.y).atan2(b.x - a.x),
                _ => 0.0,
            };
            if let Ok(g) = geometry::construct_golden_rectangle(width, origin, orientation) {
                shapes.push(Shape::Polygon(g.corners.iter().map(xy).collect()));
                // Square the rectangle grows from, and the arc that sets its length.
                let (s, c) = orientation.sin_cos();
                let at = |t: f64, up: f64| (origin.x + t * c - up * s, origin.y + t * s + up * c);
                shapes.push(Shape::Line(at(width, 0.0), at(width, width)));
                shapes.push(Shape::Arc {
                    r: g.arc_radius,
                    from: at(width, width),
                    to: at(g.length, 0.0),
                });
            }
        }
        Layer::Triangles => match (site.position("sun_shrine"), site.position("kiva_a_center")) {
            (Ok(a), Ok(b)) => match geometry::construct_equilateral(&a, &b) {
                Ok(apex) => shapes.push(Shape::Polygon(vec![xy(&a), xy(&b), xy(&apex)])),
                Err(e) => warn(e.to_string()),
            },
            (Err(e), _) | (_, Err(e)) => warn(e.to_string()),
        },
        Layer::UnitLines => {
            let x = match measured(site, "outer_d_width", src) {
                Ok(m) => m.value,
                Err(e) => {
                    warn(e);
                    return shapes;
                }
            };
            // Stacked below the site frame.
            for (i, frac) in [1.0, 0.5, 1.0 / 3.0, 0.375].into_iter().enumerate() {
                let y = -200.0 - 100.0 * i as f64;
                shapes.push(Shape::Line((0.0, y), (x * frac, y)));
            }
        }
    }
    shapes
}

fn n(v: f64) -> String {
    let s = format!("{v:.2}");
    if s == "-0.00" {
        "0.00".into()
    } else {
        s
    }
}

/// Draws the requested layers. Features without coordinates (or without
/// the needed measurements) are skipped; each skip becomes a warning, listed
/// in a comment in the document and returned to the caller.
///
/// Geometry is written in survey centimetres (y up) inside a group whose
/// transform maps it to screen pixels (y down).
pub fn render_overlay(
    site: &SurveySite,
    layers: &[Layer],
    opts: &OverlayOptions,
) -> RenderedOverlay {
    let mut layers = layers.to_vec();
    layers.sort();
    layers.dedup();
    let mut warnings = Vec::new();
    let drawn: Vec<(Layer, Vec<Shape>)> = layers
        .iter()
        .map(|&l| (l, layer_shapes(site, l, opts, &mut warnings)))
        .collect();

    let pts: Vec<(f64, f64)> = drawn
        .iter()
        .flat_map(|(_, s)| s.iter().flat_map(Shape::extent))
        .collect();
    let (mut x0, mut y0, mut x1, mut y1) = (0.0f64, 0.0f64, 100.0f64, 100.0f64);
    if !pts.is_empty() {
        x0 = pts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
        x1 = pts.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
        y0 = pts.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
        y1 = pts.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    }
    let s = opts.px_per_cm;
    let pad = opts.padding_px;
    let width = (x1 - x0) * s + 2.0 * pad;
    let height = (y1 - y0) * s + 2.0 * pad + 30.0;
    // Screen = (s·(x − x0) + pad, s·(y1 − y) + pad).
    let tx = pad - s * x0;
    let ty = pad + s * y1;

    let mut out = String::new();
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#,
        w = n(width),
        h = n(height)
    );
    let _ = writeln!(out, "<title>{}</title>", escape(&site.name));
    let _ = writeln!(
        out,
        "<desc>Survey frame in cm, y up. Screen frame in px, y down. Scale {} px per cm ({} px per m). Source: {}.</desc>",
        n(s),
        n(100.0 * s),
        opts.source
    );
    for w in &warnings {
        let _ = writeln!(out, "<!-- warning: {} -->", w.replace("--", "- -"));
    }
    let _ = writeln!(
        out,
        r#"<g id="survey" transform="matrix({} 0 0 {} {} {})" fill="none">"#,
        n(s),
        n(-s),
        n(tx),
        n(ty)
    );
    let stroke = n(1.5 / s);
    for (layer, shapes) in &drawn {
        let _ = writeln!(
            out,
            r#"<g id="{}" stroke="{}" stroke-width="{stroke}">"#,
            layer.id(),
            layer.color()
        );
        for sh in shapes {
            let _ = match sh {
                Shape::Circle { c, r } => writeln!(
                    out,
                    r#"<circle cx="{}" cy="{}" r="{}"/>"#,
                    n(c.0),
                    n(c.1),
                    n(*r)
                ),
                Shape::Polygon(p) => {
                    let pts: Vec<String> =
                        p.iter().map(|q| format!("{},{}", n(q.0), n(q.1))).collect();
                    writeln!(out, r#"<polygon points="{}"/>"#, pts.join(" "))
                }
                Shape::Line(a, b) => {
                    writeln!(
                        out,
                        r#"<line x1="{}" y1="{}" x2="{}" y2="{}"/>"#,
                        n(a.0),
                        n(a.1),
                        n(b.0),
                        n(b.1)
                    )
                }
                Shape::Arc { r, from, to, .. } => writeln!(
                    out,
                    // Sweep flag 0: clockwise in the y-up frame.
                    r#"<path d="M {} {} A {r} {r} 0 0 0 {} {}"/>"#,
                    n(from.0),
                    n(from.1),
                    n(to.0),
                    n(to.1),
                    r = n(*r)
                ),
            };
        }
        let _ = writeln!(out, "</g>");
    }
    let _ = writeln!(out, "</g>");
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12">y ↑ (survey north), 1 m = {} px</text>"#,
        n(pad),
        n(height - 10.0),
        n(100.0 * s)
    );
    let _ = writeln!(out, "</svg>");
    RenderedOverlay { svg: out, warnings }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}
