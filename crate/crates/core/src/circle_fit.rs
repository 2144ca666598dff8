//! Circle fitting for digitized rim points, pass aggregation and image
//! scale calibration.
//!
//! Each pass is fitted in two stages: an algebraic (Kåsa) linear least
//! squares fit seeds a damped Gauss–Newton refinement of the geometric
//! objective Σ(‖pᵢ − c‖ − r)².

use std::collections::BTreeMap;

use nalgebra::{Matrix3, Vector3};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::Point2D;
use crate::measurement::{Measurement, Unit};

#[derive(Debug, Clone, PartialEq)]
pub struct DigitizedSet {
    pub feature_id: String,
    pub pass_id: String,
    pub points: Vec<(f64, f64)>,
    pub image_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CircleEstimate {
    pub feature_id: String,
    pub pass_id: String,
    pub center: Point2D,
    pub radius: f64,
    pub rms_residual: f64,
    pub n_points: usize,
    /// Standard error of the radius from the fit covariance.
    pub radius_std_error: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    /// Drop this many largest-residual points and refit. Off by default.
    pub trim: usize,
    pub max_iterations: usize,
    /// Convergence when the parameter step is below `tolerance · radius`.
    pub tolerance: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            trim: 0,
            max_iterations: 100,
            tolerance: 1e-10,
        }
    }
}

/// Pixel scale in cm per pixel from a scale bar of known ground length.
pub fn calibrate_scale(pixel_length: f64, ground_length: &Measurement) -> Result<Measurement> {
    if !(pixel_length > 0.0 && pixel_length.is_finite()) {
        return Err(Error::invalid("pixel length must be > 0"));
    }
    if ground_length.unit != Unit::Centimeters {
        return Err(Error::UnitMismatch {
            left: ground_length.unit,
            right: Unit::Centimeters,
        });
    }
    if !(ground_length.value > 0.0) {
        return Err(Error::invalid("ground length must be > 0"));
    }
    ground_length.validate()?;
    Ok(ground_length.scaled(1.0 / pixel_length))
}

fn check_points(points: &[(f64, f64)]) -> Result<(f64, f64, f64)> {
    if points.len() < 3 {
        return Err(Error::Degenerate(format!(
            "{} points; at least 3 required",
            points.len()
        )));
    }
    if points.iter().any(|p| !(p.0.is_finite() && p.1.is_finite())) {
        return Err(Error::invalid("non-finite point coordinate"));
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for p in points {
        let (dx, dy) = (p.0 - mx, p.1 - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    let tr = sxx + syy;
    let det = sxx * syy - sxy * sxy;
    // Smallest/largest eigenvalue of the scatter matrix.
    if tr == 0.0 || det <= 1e-12 * tr * tr {
        return Err(Error::Degenerate("points are collinear".into()));
    }
    let spread = (tr / n).sqrt();
    Ok((mx, my, spread))
}

/// Kåsa fit in centroid-centred, spread-normalised coordinates.
fn algebraic_fit(points: &[(f64, f64)], mx: f64, my: f64, spread: f64) -> Result<(f64, f64, f64)> {
    let mut ata = Matrix3::<f64>::zeros();
    let mut atb = Vector3::<f64>::zeros();
    for p in points {
        let x = (p.0 - mx) / spread;
        let y = (p.1 - my) / spread;
        let row = Vector3::new(x, y, 1.0);
        ata += row * row.transpose();
        atb += row * -(x * x + y * y);
    }
    let sol = ata
        .cholesky()
        .ok_or_else(|| Error::Degenerate("singular algebraic system".into()))?
        .solve(&atb);
    let (cx, cy) = (-sol[0] / 2.0, -sol[1] / 2.0);
    let r2 = cx * cx + cy * cy - sol[2];
    if !(r2 > 0.0) {
        return Err(Error::Degenerate(
            "algebraic fit produced no real circle".into(),
        ));
    }
    Ok((cx * spread + mx, cy * spread + my, r2.sqrt() * spread))
}

fn objective(points: &[(f64, f64)], c: (f64, f64, f64)) -> f64 {
    points
        .iter()
        .map(|p| ((p.0 - c.0).hypot(p.1 - c.1) - c.2).powi(2))
        .sum()
}

fn normal_equations(points: &[(f64, f64)], c: (f64, f64, f64)) -> (Matrix3<f64>, Vector3<f64>) {
    let mut jtj = Matrix3::zeros();
    let mut jtr = Vector3::zeros();
    for p in points {
        let (dx, dy) = (p.0 - c.0, p.1 - c.1);
        let d = dx.hypot(dy);
        let row = if d > 0.0 {
            Vector3::new(-dx / d, -dy / d, -1.0)
        } else {
            Vector3::new(0.0, 0.0, -1.0)
        };
        jtj += row * row.transpose();
        jtr += row * (d - c.2);
    }
    (jtj, jtr)
}

struct Refined {
    params: (f64, f64, f64),
    iterations: usize,
    trace: Vec<f64>,
}

fn refine(points: &[(f64, f64)], start: (f64, f64, f64), opts: &FitOptions) -> Result<Refined> {
    let mut c = start;
    let mut cost = objective(points, c);
    let mut trace = vec![cost];
    let mut lambda = 1e-3;
    for it in 1..=opts.max_iterations {
        let (jtj, jtr) = normal_equations(points, c);
        loop {
            let mut damped = jtj;
            for k in 0..3 {
                damped[(k, k)] += lambda * jtj[(k, k)].max(1e-300);
            }
            let step = match damped.cholesky() {
                Some(ch) => ch.solve(&-jtr),
                None => {
                    lambda *= 10.0;
                    if lambda > 1e16 {
                        return Err(Error::NonConvergence { iterations: it });
                    }
                    continue;
                }
            };
            let cand = (c.0 + step[0], c.1 + step[1], c.2 + step[2]);
            let cand_cost = objective(points, cand);
            if cand_cost <= cost {
                c = cand;
                cost = cand_cost;
                trace.push(cost);
                lambda = (lambda / 10.0).max(1e-12);
                if step.norm() < opts.tolerance * c.2.abs() {
                    return Ok(Refined {
                        params: c,
                        iterations: it,
                        trace,
                    });
                }
                break;
            }
            lambda *= 10.0;
            // No downhill step exists at machine precision: at the optimum.
            if lambda > 1e16 || step.norm() < opts.tolerance * c.2.abs() {
                return Ok(Refined {
                    params: c,
                    iterations: it,
                    trace,
                });
            }
        }
    }
    Err(Error::NonConvergence {
        iterations: opts.max_iterations,
    })
}

fn estimate(
    set: &DigitizedSet,
    points: &[(f64, f64)],
    opts: &FitOptions,
) -> Result<(CircleEstimate, Vec<f64>)> {
    let (mx, my, spread) = check_points(points)?;
    let start = algebraic_fit(points, mx, my, spread)?;
    let refined = refine(points, start, opts)?;
    let (cx, cy, r) = refined.params;
    if !(r > 0.0) {
        return Err(Error::Degenerate("fitted radius is not positive".into()));
    }
    let n = points.len();
    let ss = objective(points, refined.params);
    let radius_std_error = if n > 3 {
        let (jtj, _) = normal_equations(points, refined.params);
        jtj.try_inverse()
            .map(|inv| (ss / (n - 3) as f64 * inv[(2, 2)]).sqrt())
            .unwrap_or(f64::NAN)
    } else {
        0.0
    };
    Ok((
        CircleEstimate {
            feature_id: set.feature_id.clone(),
            pass_id: set.pass_id.clone(),
            center: Point2D::exact(cx, cy),
            radius: r,
            rms_residual: (ss / n as f64).sqrt(),
            n_points: n,
            radius_std_error,
            iterations: refined.iterations,
        },
        refined.trace,
    ))
}

pub fn fit_circle(set: &DigitizedSet) -> Result<CircleEstimate> {
    fit_circle_with(set, &FitOptions::default())
}

pub fn fit_circle_with(set: &DigitizedSet, opts: &FitOptions) -> Result<CircleEstimate> {
    fit_circle_traced(set, opts).map(|(e, _)| e)
}

/// Like [`fit_circle_with`], also returning the objective after each
/// accepted refinement step of the final fit.
pub fn fit_circle_traced(
    set: &DigitizedSet,
    opts: &FitOptions,
) -> Result<(CircleEstimate, Vec<f64>)> {
    let (first, trace) = estimate(set, &set.points, opts)?;
    if opts.trim == 0 {
        return Ok((first, trace));
    }
    if set.points.len() < opts.trim + 3 {
        return Err(Error::invalid(format!(
            "cannot trim {} of {} points",
            opts.trim,
            set.points.len()
        )));
    }
    let c = (first.center.x, first.center.y);
    let mut ranked: Vec<(f64, (f64, f64))> = set
        .points
        .iter()
        .map(|p| (((p.0 - c.0).hypot(p.1 - c.1) - first.radius).abs(), *p))
        .collect();
    ranked.sort_by(|a, b| a.0.total_cmp(&b.0));
    let kept: Vec<(f64, f64)> = ranked[..ranked.len() - opts.trim]
        .iter()
        .map(|r| r.1)
        .collect();
    estimate(set, &kept, opts)
}

/// Aggregated radius and centre of one feature over repeated passes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregatedCircle {
    pub feature_id: String,
    pub passes: usize,
    pub radius: Measurement,
    pub center: Point2D,
}

/// Mean over passes with the sample standard deviation (n − 1) as scatter,
/// converted to cm and combined in quadrature with the scale uncertainty.
pub fn aggregate_passes(
    estimates: &[CircleEstimate],
    scale: &Measurement,
) -> Result<AggregatedCircle> {
    if estimates.len() < 2 {
        return Err(Error::invalid(
            "at least two passes are needed to estimate scatter",
        ));
    }
    let feature = &estimates[0].feature_id;
    if let Some(e) = estimates.iter().find(|e| &e.feature_id != feature) {
        return Err(Error::invalid(format!(
            "mixed features `{}` and `{}`",
            feature, e.feature_id
        )));
    }
    scale.validate()?;
    let n = estimates.len() as f64;
    // Sorted sums keep the result independent of pass order.
    let mean_sd = |mut v: Vec<f64>| {
        v.sort_by(f64::total_cmp);
        let m = v.iter().sum::<f64>() / n;
        let mut dev: Vec<f64> = v.iter().map(|x| (x - m).powi(2)).collect();
        dev.sort_by(f64::total_cmp);
        (m, (dev.iter().sum::<f64>() / (n - 1.0)).sqrt())
    };
    let (r, r_sd) = mean_sd(estimates.iter().map(|e| e.radius).collect());
    let (cx, cx_sd) = mean_sd(estimates.iter().map(|e| e.center.x).collect());
    let (cy, cy_sd) = mean_sd(estimates.iter().map(|e| e.center.y).collect());
    let s = scale.value;
    let radius = Measurement::cm(r * s, (r_sd * s).hypot(r * scale.sigma));
    let scatter = ((cx_sd * cx_sd + cy_sd * cy_sd) / 2.0).sqrt() * s;
    let from_scale = ((cx * cx + cy * cy) / 2.0).sqrt() * scale.sigma;
    Ok(AggregatedCircle {
        feature_id: feature.clone(),
        passes: estimates.len(),
        radius,
        center: Point2D {
            x: cx * s,
            y: cy * s,
            sigma: scatter.hypot(from_scale),
        },
    })
}

/// Parses the digitized-points CSV (`feature_id,pass_id,x_px,y_px`) into
/// one set per (feature, pass), ordered by feature then pass.
pub fn parse_points_csv(text: &str) -> Result<Vec<DigitizedSet>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = rdr
        .headers()
        .map_err(|e| Error::Parse {
            location: "header".into(),
            message: e.to_string(),
        })?
        .clone();
    let expected = ["feature_id", "pass_id", "x_px", "y_px"];
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(Error::Parse {
            location: "line 1".into(),
            message: format!("header must be `{}`", expected.join(",")),
        });
    }
    let mut sets: BTreeMap<(String, String), Vec<(f64, f64)>> = BTreeMap::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::Parse {
            location: format!("line {line}"),
            message: e.to_string(),
        })?;
        let num = |k: usize, name: &str| -> Result<f64> {
            let v: f64 = rec[k].parse().map_err(|_| Error::Parse {
                location: format!("line {line}, field {name}"),
                message: format!("not a number: `{}`", &rec[k]),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    location: format!("line {line}, field {name}"),
                    message: "non-finite".into(),
                });
            }
            Ok(v)
        };
        let p = (num(2, "x_px")?, num(3, "y_px")?);
        sets.entry((rec[0].to_string(), rec[1].to_string()))
            .or_default()
            .push(p);
    }
    Ok(sets
        .into_iter()
        .map(|((feature_id, pass_id), points)| DigitizedSet {
            feature_id,
            pass_id,
            points,
            image_id: None,
        })
        .collect())
}
