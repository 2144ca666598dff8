//! Monte Carlo null model: synthetic sites with no intended geometry, laid
//! out at random within declared ranges, run through the same catalog to
//! see how many hypotheses pass by chance.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constructs::{evaluate_hypothesis, Hypothesis};
use crate::error::{Error, Result};
use crate::geometry::Point2D;
use crate::measurement::Measurement;
use crate::stats::chi2_sf_1dof;
use crate::survey::{
    Adjustment, DerivedSpanRule, Feature, FeatureKind, Source, SpanSigma, SurveySite,
};

/// Closed interval `[lo, hi]`; `lo == hi` pins the value.
pub type Interval = [f64; 2];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Region {
    pub x: Interval,
    pub y: Interval,
}

/// Ranges a synthetic site is drawn from. The site frame puts the SW corner
/// of the enclosing rectangle at the origin with the south wall along +x.
/// Kivas B and C sit in the western part of the rectangle, D in the eastern
/// zone, A in an annex west of the rectangle. Shrine and basin regions are
/// fractions of (length, width).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NullPrior {
    pub width_cm: Interval,
    /// Length over width.
    pub aspect: Interval,
    /// Inner radius of kivas A, B and C, drawn independently.
    pub inner_radius_cm: Interval,
    pub kiva_d_inner_radius_cm: Interval,
    /// Outer over inner radius, drawn per kiva.
    pub wall_ratio: Interval,
    /// Width of the west annex holding kiva A, as a fraction of length.
    pub annex_fraction: f64,
    /// Width of the eastern zone holding kiva D's center, as a fraction of length.
    pub east_fraction: f64,
    pub shrine_region: Region,
    pub basin_region: Region,
    /// Sigma of each measurement as a fraction of its true value, drawn
    /// per feature and shared by both sources.
    pub relative_sigma: Interval,
    /// Kiva A radii are recorded this much short and corrected by an
    /// adjustment, like the shipped survey.
    pub kiva_a_adjustment_cm: f64,
    /// Minimum clearance between walls, and between walls and the rectangle.
    pub margin_cm: f64,
    /// Layout attempts per site before the prior is declared infeasible.
    pub max_attempts: u32,
    /// Write feature coordinates so coordinate-based hypotheses run too.
    pub emit_coordinates: bool,
    pub position_sigma_cm: f64,
}

fn around(value: f64, frac: f64) -> Interval {
    [value * (1.0 - frac), value * (1.0 + frac)]
}

impl Default for NullPrior {
    fn default() -> Self {
        NullPrior {
            width_cm: around(1948.0, 0.3),
            aspect: around(1.643, 0.3),
            inner_radius_cm: around(268.0, 0.3),
            kiva_d_inner_radius_cm: around(234.0, 0.3),
            wall_ratio: [1.2, 1.6],
            annex_fraction: 0.35,
            east_fraction: 0.35,
            shrine_region: Region {
                x: [-0.3, 0.0],
                y: [0.0, 0.3],
            },
            basin_region: Region {
                x: [0.2, 0.8],
                y: [1.2, 2.0],
            },
            relative_sigma: [0.005, 0.01],
            kiva_a_adjustment_cm: 5.0,
            margin_cm: 30.0,
            max_attempts: 10_000,
            emit_coordinates: false,
            position_sigma_cm: 10.0,
        }
    }
}

fn check_interval(name: &str, r: Interval, positive: bool) -> Result<()> {
    let ok = r[0].is_finite()
        && r[1].is_finite()
        && r[0] <= r[1]
        && (!positive || r[0] > 0.0)
        && r[0] >= 0.0;
    if ok {
        Ok(())
    } else {
        Err(Error::InfeasiblePrior(format!(
            "{name}: bad range [{}, {}]",
            r[0], r[1]
        )))
    }
}

impl NullPrior {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let p: NullPrior = serde_json::from_str(text).map_err(|e| Error::Parse {
            location: format!("line {} column {}", e.line(), e.column()),
            message: e.to_string(),
        })?;
        p.validate()?;
        Ok(p)
    }

    /// Range sanity plus a feasibility check on the most favourable draw
    /// (largest rectangle, smallest kivas). If even that cannot hold the
    /// layout, rejection sampling could never terminate.
    pub fn validate(&self) -> Result<()> {
        check_interval("width_cm", self.width_cm, true)?;
        check_interval("aspect", self.aspect, true)?;
        check_interval("inner_radius_cm", self.inner_radius_cm, true)?;
        check_interval("kiva_d_inner_radius_cm", self.kiva_d_inner_radius_cm, true)?;
        check_interval("wall_ratio", self.wall_ratio, true)?;
        check_interval("relative_sigma", self.relative_sigma, false)?;
        for (name, r) in [
            ("shrine_region", &self.shrine_region),
            ("basin_region", &self.basin_region),
        ] {
            for iv in [r.x, r.y] {
                if !(iv[0].is_finite() && iv[1].is_finite() && iv[0] <= iv[1]) {
                    return Err(Error::InfeasiblePrior(format!(
                        "{name}: bad range [{}, {}]",
                        iv[0], iv[1]
                    )));
                }
            }
        }
        if self.wall_ratio[0] < 1.0 {
            return Err(Error::InfeasiblePrior("wall_ratio must be >= 1".into()));
        }
        for (name, f) in [
            ("annex_fraction", self.annex_fraction),
            ("east_fraction", self.east_fraction),
        ] {
            if !(f > 0.0 && f < 1.0) {
                return Err(Error::InfeasiblePrior(format!(
                    "{name} must lie in (0, 1), got {f}"
                )));
            }
        }
        for (name, v) in [
            ("margin_cm", self.margin_cm),
            ("kiva_a_adjustment_cm", self.kiva_a_adjustment_cm),
            ("position_sigma_cm", self.position_sigma_cm),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InfeasiblePrior(format!(
                    "{name} must be finite and >= 0, got {v}"
                )));
            }
        }
        if self.max_attempts == 0 {
            return Err(Error::InfeasiblePrior("max_attempts must be >= 1".into()));
        }
        if self.inner_radius_cm[0] <= self.kiva_a_adjustment_cm {
            return Err(Error::InfeasiblePrior(
                "kiva A adjustment exceeds the smallest inner radius".into(),
            ));
        }

        let w = self.width_cm[1];
        let len = w * self.aspect[1];
        let m = self.margin_cm;
        let r_abc = self.inner_radius_cm[0] * self.wall_ratio[0] + m;
        let r_d = self.kiva_d_inner_radius_cm[0] * self.wall_ratio[0] + m;
        let fits = 2.0 * r_abc <= w
            && 2.0 * r_d <= w
            && 2.0 * r_abc <= self.annex_fraction * len
            && r_d <= self.east_fraction * len;
        // B and C placed corner to corner in the western zone.
        let west = (1.0 - self.east_fraction) * len;
        let d = 2.0 * r_abc;
        let bc_fit = west >= r_abc && {
            let dx = (west - r_abc).max(0.0);
            let dy = w - d;
            dx * dx + dy * dy >= d * d
        };
        if !(fits && bc_fit) {
            return Err(Error::InfeasiblePrior(
                "kivas cannot be placed even in the largest rectangle with the smallest radii"
                    .into(),
            ));
        }
        Ok(())
    }
}

/// The RNG for trial `trial` of a run seeded with `seed`.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

fn draw(rng: &mut ChaCha8Rng, r: Interval) -> f64 {
    if r[0] == r[1] {
        r[0]
    } else {
        rng.random_range(r[0]..r[1])
    }
}

#[derive(Debug, Clone, Copy)]
struct Kiva {
    center: (f64, f64),
    inner: f64,
    outer: f64,
}

struct Layout {
    width: f64,
    length: f64,
    kivas: [Kiva; 4],
    shrine: (f64, f64),
    basin: (f64, f64),
}

fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).hypot(a.1 - b.1)
}

fn try_layout(prior: &NullPrior, rng: &mut ChaCha8Rng) -> Option<Layout> {
    let width = draw(rng, prior.width_cm);
    let length = width * draw(rng, prior.aspect);
    let m = prior.margin_cm;
    let mut radii = [(0.0, 0.0); 4];
    for (i, r) in radii.iter_mut().enumerate() {
        let inner = draw(
            rng,
            if i == 3 {
                prior.kiva_d_inner_radius_cm
            } else {
                prior.inner_radius_cm
            },
        );
        *r = (inner, inner * draw(rng, prior.wall_ratio));
    }
    let annex = prior.annex_fraction * length;
    let east = (1.0 - prior.east_fraction) * length;
    // Center x-range per kiva: A in the annex, B and C west of the eastern
    // zone, D inside it; all walls inside their enclosure with margin.
    let x_ranges = [
        (-annex + radii[0].1 + m, -radii[0].1 - m),
        (radii[1].1 + m, east.min(length - radii[1].1 - m)),
        (radii[2].1 + m, east.min(length - radii[2].1 - m)),
        (east.max(radii[3].1 + m), length - radii[3].1 - m),
    ];
    let mut kivas = [Kiva {
        center: (0.0, 0.0),
        inner: 0.0,
        outer: 0.0,
    }; 4];
    for i in 0..4 {
        let (x0, x1) = x_ranges[i];
        let (y0, y1) = (radii[i].1 + m, width - radii[i].1 - m);
        // Always consume the same draws so attempts stay aligned.
        let ux: f64 = rng.random();
        let uy: f64 = rng.random();
        if x0 > x1 || y0 > y1 {
            return None;
        }
        kivas[i] = Kiva {
            center: (x0 + ux * (x1 - x0), y0 + uy * (y1 - y0)),
            inner: radii[i].0,
            outer: radii[i].1,
        };
    }
    for i in 1..4 {
        for j in (i + 1)..4 {
            if dist(kivas[i].center, kivas[j].center) < kivas[i].outer + kivas[j].outer + m {
                return None;
            }
        }
    }
    let mut point_in = |r: &Region| {
        let x = draw(rng, r.x) * length;
        let y = draw(rng, r.y) * width;
        (x, y)
    };
    let shrine = point_in(&prior.shrine_region);
    let basin = point_in(&prior.basin_region);
    Some(Layout {
        width,
        length,
        kivas,
        shrine,
        basin,
    })
}

fn layout_for(prior: &NullPrior, rng: &mut ChaCha8Rng) -> Result<Layout> {
    for _ in 0..prior.max_attempts {
        if let Some(l) = try_layout(prior, rng) {
            return Ok(l);
        }
    }
    Err(Error::InfeasiblePrior(format!(
        "no valid layout within {} attempts",
        prior.max_attempts
    )))
}

/// Every span in the shipped schema, computed from a layout.
fn true_spans(l: &Layout) -> Vec<(&'static str, f64)> {
    let [a, b, c, d] = l.kivas;
    let se = (l.length, 0.0);
    vec![
        ("outer_d_length", l.length),
        ("outer_d_width", l.width),
        ("kiva_bc_gap", dist(b.center, c.center) - b.outer - c.outer),
        ("kiva_bc_centers", dist(b.center, c.center)),
        ("kiva_b_center_to_south_wall", b.center.1),
        ("kiva_b_to_sw_corner", dist(b.center, (0.0, 0.0)) - b.outer),
        ("kiva_c_to_se_corner", dist(c.center, se) - c.outer),
        ("kiva_d_to_se_corner", dist(d.center, se) - d.outer),
        ("kiva_d_center_to_se_corner", dist(d.center, se)),
        ("sun_shrine_to_kiva_a_center", dist(l.shrine, a.center)),
        ("kiva_a_center_to_south_wall", a.center.1),
    ]
}

const AERIAL_ONLY: [&str; 2] = ["sun_shrine_to_kiva_a_center", "kiva_a_center_to_south_wall"];

fn noisy(rng: &mut ChaCha8Rng, truth: f64, rel: f64) -> Measurement {
    let sigma = truth.abs() * rel;
    let z: f64 = StandardNormal.sample(rng);
    Measurement::cm(truth + sigma * z, sigma)
}

fn site_from_layout(prior: &NullPrior, l: &Layout, rng: &mut ChaCha8Rng) -> Result<SurveySite> {
    let mut features = Vec::new();
    let letters = ['a', 'b', 'c', 'd'];
    let mut measured = |id: String,
                        kind: FeatureKind,
                        truth: f64,
                        offset: f64,
                        aerial_only: bool,
                        rng: &mut ChaCha8Rng| {
        let rel = draw(rng, prior.relative_sigma);
        let aerial = noisy(rng, truth - offset, rel);
        let ground = noisy(rng, truth - offset, rel);
        features.push(Feature {
            id,
            kind,
            label: None,
            aerial: Some(aerial),
            ground: (!aerial_only).then_some(ground),
            position: None,
        });
    };
    for (k, letter) in l.kivas.iter().zip(letters) {
        let offset = if letter == 'a' {
            prior.kiva_a_adjustment_cm
        } else {
            0.0
        };
        measured(
            format!("kiva_{letter}_inner_radius"),
            FeatureKind::Circle,
            k.inner,
            offset,
            false,
            rng,
        );
        measured(
            format!("kiva_{letter}_outer_radius"),
            FeatureKind::Circle,
            k.outer,
            offset,
            false,
            rng,
        );
    }
    for (id, truth) in true_spans(l) {
        measured(
            id.to_string(),
            FeatureKind::Span,
            truth,
            0.0,
            AERIAL_ONLY.contains(&id),
            rng,
        );
    }
    let mut points = vec![("sw_corner", (0.0, 0.0)), ("se_corner", (l.length, 0.0))];
    for (k, letter) in l.kivas.iter().zip([
        "kiva_a_center",
        "kiva_b_center",
        "kiva_c_center",
        "kiva_d_center",
    ]) {
        points.push((letter, k.center));
    }
    points.push(("sun_shrine", l.shrine));
    points.push(("pecked_basin", l.basin));
    for (id, (x, y)) in points {
        let position = if prior.emit_coordinates {
            Some(Point2D::new(x, y, prior.position_sigma_cm)?)
        } else {
            None
        };
        features.push(Feature {
            id: id.to_string(),
            kind: FeatureKind::Point,
            label: None,
            aerial: None,
            ground: None,
            position,
        });
    }
    let adjustments = ["kiva_a_inner_radius", "kiva_a_outer_radius"]
        .iter()
        .map(|f| Adjustment {
            feature: f.to_string(),
            delta: Measurement::cm(prior.kiva_a_adjustment_cm, 0.0),
            note: "recorded at the top of the wall".into(),
        })
        .collect();
    let derived = vec![DerivedSpanRule::parse(
        "kiva_b_to_south_wall",
        "kiva_b_center_to_south_wall - kiva_b_outer_radius",
        SpanSigma::Minuend,
    )?];
    SurveySite::new("null", None, features, adjustments, derived)
}

/// One synthetic site with the shipped feature schema.
pub fn sample_null_site(prior: &NullPrior, seed: u64) -> Result<SurveySite> {
    prior.validate()?;
    sample_trial(prior, &mut trial_rng(seed, 0))
}

fn sample_trial(prior: &NullPrior, rng: &mut ChaCha8Rng) -> Result<SurveySite> {
    let layout = layout_for(prior, rng)?;
    site_from_layout(prior, &layout, rng)
}

/// What counts as a test "consistent with its target".
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", content = "value", rename_all = "snake_case")]
pub enum HitRule {
    /// |measured − target|/σ ≤ value, applied to every test through the
    /// equivalent one-degree-of-freedom p threshold.
    MaxZ(f64),
    /// p ≥ value.
    MinP(f64),
}

impl Default for HitRule {
    fn default() -> Self {
        HitRule::MaxZ(2.0)
    }
}

impl HitRule {
    pub fn p_threshold(&self) -> Result<f64> {
        match *self {
            HitRule::MaxZ(z) if z.is_finite() && z >= 0.0 => chi2_sf_1dof(z * z),
            HitRule::MaxZ(z) if z == f64::INFINITY => Ok(0.0),
            HitRule::MinP(p) if !p.is_nan() => Ok(p),
            _ => Err(Error::invalid(format!("bad hit rule {self:?}"))),
        }
    }
}

impl std::fmt::Display for HitRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            HitRule::MaxZ(z) => write!(f, "|z| <= {z}"),
            HitRule::MinP(p) => write!(f, "p >= {p}"),
        }
    }
}

/// Number of evaluated tests in `catalog` with p at or above `threshold`.
pub fn count_hits(site: &SurveySite, catalog: &[Hypothesis], threshold: f64) -> u32 {
    let mut hits = 0;
    for h in catalog {
        let sources: &[Source] = if h.expression.is_coordinate_based() {
            &[Source::Aerial]
        } else {
            &Source::ALL
        };
        for &s in sources {
            if !h.expression.is_coordinate_based() && !h.sources.includes(s) {
                continue;
            }
            if let Some(r) = evaluate_hypothesis(site, h, s).result() {
                if r.p >= threshold {
                    hits += 1;
                }
            }
        }
    }
    hits
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailProbability {
    pub min_hits: u32,
    pub count: usize,
    pub p: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NullReport {
    pub n_trials: usize,
    pub seed: u64,
    pub rule: HitRule,
    pub p_threshold: f64,
    pub prior: NullPrior,
    /// Hits on the site the catalog was compared against.
    pub observed_hits: u32,
    /// Hit count per trial, in trial order.
    pub hits: Vec<u32>,
    /// P(hits ≥ observed_hits) with a 95% Wilson interval.
    pub tail: TailProbability,
    /// P(hits ≥ k) for k = 0..=max(observed, max trial hits) + 1.
    pub tail_table: Vec<TailProbability>,
}

const Z95: f64 = 1.959_963_984_540_054;

/// Wilson score interval for `successes` out of `n` at 95%.
pub fn wilson_interval(successes: usize, n: usize) -> (f64, f64) {
    let n_f = n as f64;
    let p = successes as f64 / n_f;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n_f;
    let center = (p + z2 / (2.0 * n_f)) / denom;
    let half = Z95 * (p * (1.0 - p) / n_f + z2 / (4.0 * n_f * n_f)).sqrt() / denom;
    let lo = if successes == 0 {
        0.0
    } else {
        (center - half).max(0.0)
    };
    let hi = if successes == n {
        1.0
    } else {
        (center + half).min(1.0)
    };
    (lo.min(p), hi.max(p))
}

fn tail_at(hits: &[u32], k: u32) -> TailProbability {
    let count = hits.iter().filter(|&&h| h >= k).count();
    let (ci_low, ci_high) = wilson_interval(count, hits.len());
    TailProbability {
        min_hits: k,
        count,
        p: count as f64 / hits.len() as f64,
        ci_low,
        ci_high,
    }
}

/// Runs `n_trials` synthetic sites through `catalog` and compares their hit
/// counts with `observed_site`'s. `threads = 0` uses rayon's default pool;
/// the result is the same for any thread count.
pub fn estimate_fpr(
    prior: &NullPrior,
    catalog: &[Hypothesis],
    observed_site: &SurveySite,
    rule: HitRule,
    n_trials: usize,
    seed: u64,
    threads: usize,
) -> Result<NullReport> {
    if n_trials == 0 {
        return Err(Error::invalid("n_trials must be >= 1"));
    }
    prior.validate()?;
    let threshold = rule.p_threshold()?;
    let run = || -> Result<Vec<u32>> {
        (0..n_trials)
            .into_par_iter()
            .map(|t| {
                let site = sample_trial(prior, &mut trial_rng(seed, t as u64))?;
                Ok(count_hits(&site, catalog, threshold))
            })
            .collect()
    };
    let hits = if threads == 0 {
        run()?
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::invalid(format!("thread pool: {e}")))?
            .install(run)?
    };
    let observed_hits = count_hits(observed_site, catalog, threshold);
    let top = hits.iter().copied().max().unwrap_or(0).max(observed_hits) + 1;
    let tail_table = (0..=top).map(|k| tail_at(&hits, k)).collect();
    Ok(NullReport {
        n_trials,
        seed,
        rule,
        p_threshold: threshold,
        prior: prior.clone(),
        observed_hits,
        tail: tail_at(&hits, observed_hits),
        hits,
        tail_table,
    })
}

/// `trial,hits` rows followed by a `#`-prefixed summary block.
pub fn null_report_csv(report: &NullReport) -> String {
    use std::fmt::Write;
    let mut out = String::from("trial,hits\n");
    for (t, h) in report.hits.iter().enumerate() {
        let _ = writeln!(out, "{t},{h}");
    }
    let _ = writeln!(out, "# n_trials,{}", report.n_trials);
    let _ = writeln!(out, "# seed,{}", report.seed);
    let _ = writeln!(out, "# hit_rule,{}", report.rule);
    let _ = writeln!(out, "# p_threshold,{:.6}", report.p_threshold);
    let _ = writeln!(out, "# observed_hits,{}", report.observed_hits);
    let t = &report.tail;
    let _ = writeln!(out, "# p_tail,{:.6}", t.p);
    let _ = writeln!(out, "# ci95_low,{:.6}", t.ci_low);
    let _ = writeln!(out, "# ci95_high,{:.6}", t.ci_high);
    let _ = writeln!(out, "# min_hits,count,p,ci95_low,ci95_high");
    for r in &report.tail_table {
        let _ = writeln!(
            out,
            "# {},{},{:.6},{:.6},{:.6}",
            r.min_hits, r.count, r.p, r.ci_low, r.ci_high
        );
    }
    let prior = serde_json::to_string(&report.prior).unwrap_or_default();
    let _ = writeln!(out, "# prior,{prior}");
    out
}
