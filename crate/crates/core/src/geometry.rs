//! Uncertainty-propagated 2D primitives and straightedge-and-compass
//! constructions.
//!
//! All propagation is first order with independent isotropic point errors.
//! [`monte_carlo_propagate`] gives a sampling estimate of the same
//! quantity and is used to validate the analytic sigmas.

use std::cmp::Ordering;
use std::f64::consts::PI;
use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measurement::{Measurement, Unit};

/// The golden ratio, (1 + √5) / 2.
pub fn golden_ratio() -> f64 {
    (1.0 + 5f64.sqrt()) / 2.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point2D {
    pub x: f64,
    pub y: f64,
    /// Isotropic 1σ positional uncertainty, cm.
    pub sigma: f64,
}

impl Point2D {
    pub fn new(x: f64, y: f64, sigma: f64) -> Result<Self> {
        if !(x.is_finite() && y.is_finite()) {
            return Err(Error::invalid("point coordinates must be finite"));
        }
        if !sigma.is_finite() || sigma < 0.0 {
            return Err(Error::invalid("point sigma must be finite and >= 0"));
        }
        Ok(Point2D { x, y, sigma })
    }

    pub fn exact(x: f64, y: f64) -> Self {
        Point2D { x, y, sigma: 0.0 }
    }

    fn sub(&self, other: &Point2D) -> (f64, f64) {
        (self.x - other.x, self.y - other.y)
    }
}

/// An exact target value: `(num/den)·√radicand`, or the golden ratio and
/// its reciprocal, which are not of that form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TargetConstant {
    Surd { num: i64, den: u64, radicand: u64 },
    Golden,
    InverseGolden,
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl TargetConstant {
    /// Builds `(num/den)·√radicand` in lowest terms with a square-free radicand.
    pub fn surd(num: i64, den: u64, radicand: u64) -> Result<Self> {
        if den == 0 {
            return Err(Error::invalid("target denominator must be > 0"));
        }
        if radicand == 0 {
            return Err(Error::invalid("target radicand must be >= 1"));
        }
        let mut num = num;
        let mut rad = radicand;
        let mut f = 2u64;
        while f * f <= rad {
            while rad % (f * f) == 0 {
                rad /= f * f;
                num = num
                    .checked_mul(f as i64)
                    .ok_or_else(|| Error::invalid("target constant overflow"))?;
            }
            f += 1;
        }
        let g = gcd(num.unsigned_abs(), den).max(1);
        Ok(TargetConstant::Surd {
            num: num / g as i64,
            den: den / g,
            radicand: rad,
        })
    }

    pub fn rational(num: i64, den: u64) -> Result<Self> {
        Self::surd(num, den, 1)
    }

    pub fn integer(n: i64) -> Self {
        TargetConstant::Surd {
            num: n,
            den: 1,
            radicand: 1,
        }
    }

    pub fn sqrt(radicand: u64) -> Result<Self> {
        Self::surd(1, 1, radicand)
    }

    /// Evaluated to double precision only here.
    pub fn value(&self) -> f64 {
        match *self {
            TargetConstant::Surd { num, den, radicand } => {
                let r = num as f64 / den as f64;
                if radicand == 1 {
                    r
                } else {
                    r * (radicand as f64).sqrt()
                }
            }
            TargetConstant::Golden => golden_ratio(),
            TargetConstant::InverseGolden => golden_ratio() - 1.0,
        }
    }

    pub fn decimal(&self, digits: usize) -> String {
        format!("{:.*}", digits, self.value())
    }
}

/// Parses `phi`, `1/phi`, `n`, `n/d`, `sqrt(r)` and products such as
/// `32/9*sqrt(2)`. `φ` and `√r` are accepted too.
impl std::str::FromStr for TargetConstant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let bad = || Error::invalid(format!("cannot parse target constant `{s}`"));
        match t.to_ascii_lowercase().as_str() {
            "phi" | "φ" => return Ok(TargetConstant::Golden),
            "1/phi" | "1/φ" => return Ok(TargetConstant::InverseGolden),
            _ => {}
        }
        let (coef, root) = if let Some(i) = t.find("sqrt(") {
            let rest = &t[i + 5..];
            let r = rest.strip_suffix(')').ok_or_else(bad)?;
            (t[..i].trim_end_matches(['*', '·']), r)
        } else if let Some(i) = t.find('√') {
            (
                t[..i].trim_end_matches(['*', '·']),
                &t[i + '√'.len_utf8()..],
            )
        } else {
            (t.as_str(), "1")
        };
        let radicand: u64 = root.parse().map_err(|_| bad())?;
        let (num, den) = match coef {
            "" => (1, 1),
            c => match c.split_once('/') {
                Some((n, d)) => (n.parse().map_err(|_| bad())?, d.parse().map_err(|_| bad())?),
                None => (c.parse().map_err(|_| bad())?, 1),
            },
        };
        TargetConstant::surd(num, den, radicand)
    }
}

impl fmt::Display for TargetConstant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            TargetConstant::Golden => f.write_str("φ"),
            TargetConstant::InverseGolden => f.write_str("1/φ"),
            TargetConstant::Surd { num, den, radicand } => {
                let root = if radicand == 1 {
                    String::new()
                } else {
                    format!("√{radicand}")
                };
                match (num, den, radicand) {
                    (n, 1, 1) => write!(f, "{n}"),
                    (1, 1, _) => f.write_str(&root),
                    (n, 1, _) => write!(f, "{n}{root}"),
                    (n, d, 1) => write!(f, "{n}/{d}"),
                    (n, d, _) => write!(f, "({n}/{d})·{root}"),
                }
            }
        }
    }
}

impl PartialOrd for TargetConstant {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.value().partial_cmp(&other.value())
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum TargetRepr {
    Symbol(String),
    Surd {
        p: i64,
        q: u64,
        #[serde(default = "one")]
        d: u64,
    },
}

fn one() -> u64 {
    1
}

impl Serialize for TargetConstant {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match *self {
            TargetConstant::Golden => TargetRepr::Symbol("phi".into()),
            TargetConstant::InverseGolden => TargetRepr::Symbol("1/phi".into()),
            TargetConstant::Surd { num, den, radicand } => TargetRepr::Surd {
                p: num,
                q: den,
                d: radicand,
            },
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for TargetConstant {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        match TargetRepr::deserialize(d)? {
            TargetRepr::Symbol(s) => match s.as_str() {
                "phi" => Ok(TargetConstant::Golden),
                "1/phi" => Ok(TargetConstant::InverseGolden),
                other => Err(D::Error::custom(format!("unknown target symbol `{other}`"))),
            },
            TargetRepr::Surd { p, q, d } => TargetConstant::surd(p, q, d).map_err(D::Error::custom),
        }
    }
}

/// `a / b` with first-order relative-error propagation.
pub fn ratio(a: &Measurement, b: &Measurement) -> Result<Measurement> {
    if a.unit != b.unit {
        return Err(Error::UnitMismatch {
            left: a.unit,
            right: b.unit,
        });
    }
    if b.value == 0.0 {
        return Err(Error::DivisionByZero);
    }
    let r = a.value / b.value;
    // |r|·√((σa/a)² + (σb/b)²), written so that a = 0 is allowed.
    let sigma = ((a.sigma / b.value).powi(2) + (r * b.sigma / b.value).powi(2)).sqrt();
    Ok(Measurement::dimensionless(r, sigma))
}

pub fn distance(p: &Point2D, q: &Point2D) -> Measurement {
    let (dx, dy) = p.sub(q);
    Measurement::cm(dx.hypot(dy), p.sigma.hypot(q.sigma))
}

/// Unsigned angle between direction vectors `u` and `v`, radians, with
/// the gradients with respect to `u` and `v`.
fn angle_and_gradients(u: (f64, f64), v: (f64, f64)) -> (f64, (f64, f64), (f64, f64)) {
    let cross = u.0 * v.1 - u.1 * v.0;
    let dot = u.0 * v.0 + u.1 * v.1;
    let theta = cross.abs().atan2(dot);
    let norm2 = (u.0 * u.0 + u.1 * u.1) * (v.0 * v.0 + v.1 * v.1);
    let s = cross.signum() * if cross == 0.0 { 0.0 } else { 1.0 };
    let ac = cross.abs();
    // d|c| = s·dc; dθ = (dot·d|c| − |c|·d dot) / (c² + dot²)
    let gu = (
        (dot * s * v.1 - ac * v.0) / norm2,
        (dot * s * -v.0 - ac * v.1) / norm2,
    );
    let gv = (
        (dot * s * -u.1 - ac * u.0) / norm2,
        (dot * s * u.0 - ac * u.1) / norm2,
    );
    (theta, gu, gv)
}

fn norm2(g: (f64, f64)) -> f64 {
    g.0 * g.0 + g.1 * g.1
}

/// Interior angle at `vertex` between the arms to `p` and `q`, degrees in
/// [0, 180].
pub fn angle_at(vertex: &Point2D, p: &Point2D, q: &Point2D) -> Result<Measurement> {
    let u = p.sub(vertex);
    let v = q.sub(vertex);
    if norm2(u) == 0.0 || norm2(v) == 0.0 {
        return Err(Error::Degenerate("zero-length angle arm".into()));
    }
    let (theta, gu, gv) = angle_and_gradients(u, v);
    // The vertex enters both arms with a minus sign.
    let gvert = (-(gu.0 + gv.0), -(gu.1 + gv.1));
    let var = norm2(gu) * p.sigma.powi(2)
        + norm2(gv) * q.sigma.powi(2)
        + norm2(gvert) * vertex.sigma.powi(2);
    Ok(Measurement::degrees(
        theta.to_degrees(),
        var.sqrt().to_degrees(),
    ))
}

/// Angle between line `a0→a1` and line `b0→b1` (four distinct points).
/// With `undirected`, the result is folded into [0, 90].
pub fn angle_between_lines(
    a0: &Point2D,
    a1: &Point2D,
    b0: &Point2D,
    b1: &Point2D,
    undirected: bool,
) -> Result<Measurement> {
    let u = a1.sub(a0);
    let v = b1.sub(b0);
    if norm2(u) == 0.0 || norm2(v) == 0.0 {
        return Err(Error::Degenerate("zero-length line".into()));
    }
    let (theta, gu, gv) = angle_and_gradients(u, v);
    let var = norm2(gu) * (a0.sigma.powi(2) + a1.sigma.powi(2))
        + norm2(gv) * (b0.sigma.powi(2) + b1.sigma.powi(2));
    let mut deg = theta.to_degrees();
    if undirected && deg > 90.0 {
        deg = 180.0 - deg;
    }
    Ok(Measurement::degrees(deg, var.sqrt().to_degrees()))
}

/// Apex of the equilateral triangle on base `a→b`, on the left of the
/// base (counterclockwise orientation): the intersection of the two
/// radius-|ab| circles centred at `a` and `b`.
pub fn construct_equilateral(a: &Point2D, b: &Point2D) -> Result<Point2D> {
    let (dx, dy) = b.sub(a);
    let base = dx.hypot(dy);
    if base == 0.0 {
        return Err(Error::Degenerate("zero-length base".into()));
    }
    let h = 3f64.sqrt() / 2.0;
    let mx = (a.x + b.x) / 2.0;
    let my = (a.y + b.y) / 2.0;
    // The apex map is a rotation-scaling with unit gain on each endpoint.
    Ok(Point2D {
        x: mx - h * dy,
        y: my + h * dx,
        sigma: a.sigma.hypot(b.sigma),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GoldenRectangle {
    /// Counterclockwise from the origin corner.
    pub corners: [Point2D; 4],
    pub width: f64,
    pub length: f64,
    /// Midpoint of the square's base, where the compass is set.
    pub arc_center: Point2D,
    pub arc_radius: f64,
}

/// Golden rectangle grown from a square of side `side` with its base along
/// `orientation` (radians, counterclockwise from +x) starting at `origin`.
///
/// The compass is set at the base midpoint and opened to the far top corner
/// of the square; the arc meets the extended base at the rectangle's length.
pub fn construct_golden_rectangle(
    side: f64,
    origin: Point2D,
    orientation: f64,
) -> Result<GoldenRectangle> {
    if !(side > 0.0) || !side.is_finite() {
        return Err(Error::invalid("square side must be positive"));
    }
    let (s, c) = orientation.sin_cos();
    let along = |t: f64, up: f64| Point2D {
        x: origin.x + t * c - up * s,
        y: origin.y + t * s + up * c,
        sigma: origin.sigma,
    };
    let half = side / 2.0;
    let arc_radius = half.hypot(side);
    let length = half + arc_radius;
    Ok(GoldenRectangle {
        corners: [
            along(0.0, 0.0),
            along(length, 0.0),
            along(length, side),
            along(0.0, side),
        ],
        width: side,
        length,
        arc_center: along(half, 0.0),
        arc_radius,
    })
}

/// Radii of the circles inscribed in and circumscribed about a square.
pub fn inscribed_circumscribed(side: f64) -> Result<(f64, f64)> {
    if !(side > 0.0) || !side.is_finite() {
        return Err(Error::invalid("square side must be positive"));
    }
    Ok((side / 2.0, side * std::f64::consts::SQRT_2 / 2.0))
}

/// Sampling estimate of `f` under independent Gaussian inputs. Returns the
/// sample mean and standard deviation.
pub fn monte_carlo_propagate<F>(
    inputs: &[Measurement],
    samples: usize,
    seed: u64,
    unit: Unit,
    f: F,
) -> Result<Measurement>
where
    F: Fn(&[f64]) -> f64,
{
    if samples < 2 {
        return Err(Error::invalid("at least two samples required"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = vec![0.0; inputs.len()];
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for i in 0..samples {
        for (slot, m) in draw.iter_mut().zip(inputs) {
            let z: f64 = StandardNormal.sample(&mut rng);
            *slot = m.value + m.sigma * z;
        }
        let y = f(&draw);
        let delta = y - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (y - mean);
    }
    Ok(Measurement {
        value: mean,
        sigma: (m2 / (samples - 1) as f64).sqrt(),
        unit,
    })
}

/// Sampling counterpart of [`distance`].
pub fn monte_carlo_distance(
    p: &Point2D,
    q: &Point2D,
    samples: usize,
    seed: u64,
) -> Result<Measurement> {
    let inputs = [
        Measurement::cm(p.x, p.sigma),
        Measurement::cm(p.y, p.sigma),
        Measurement::cm(q.x, q.sigma),
        Measurement::cm(q.y, q.sigma),
    ];
    monte_carlo_propagate(&inputs, samples, seed, Unit::Centimeters, |v| {
        (v[0] - v[2]).hypot(v[1] - v[3])
    })
}

pub fn monte_carlo_ratio(
    a: &Measurement,
    b: &Measurement,
    samples: usize,
    seed: u64,
) -> Result<Measurement> {
    monte_carlo_propagate(&[*a, *b], samples, seed, Unit::Dimensionless, |v| {
        v[0] / v[1]
    })
}

pub fn degrees_to_radians(deg: f64) -> f64 {
    deg * PI / 180.0
}
