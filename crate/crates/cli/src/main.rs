use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use geomprobe_core::circle_fit::{self, AggregatedCircle, CircleEstimate, FitOptions};
use geomprobe_core::constructs::{
    self, builtin_catalog, estimate_unit, parse_catalog, quantogram_null, run_battery, scan_values,
    Expression, Hypothesis, Outcome, Selector, SourceSelector,
};
use geomprobe_core::nullmodel::{self, HitRule, NullPrior};
use geomprobe_core::report::{self, Format, Layer, OverlayOptions, Reference};
use geomprobe_core::stats::{round_half_away, Denominator, Weighting};
use geomprobe_core::{Error, Measurement, Source, SurveySite, TargetConstant};

#[derive(Parser, Debug)]
#[command(
    name = "geomprobe",
    version,
    about = "Test geometric constructs and common length units in site surveys"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Survey file (JSON). Defaults to the bundled Sun Temple survey.
    #[arg(long, global = true)]
    site: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = SourceArg::Both)]
    source: SourceArg,
    /// Family-wise significance level.
    #[arg(long, global = true, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = FormatArg::Markdown)]
    format: FormatArg,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SourceArg {
    Aerial,
    Ground,
    Both,
}

impl SourceArg {
    fn sources(self) -> Vec<Source> {
        match self {
            SourceArg::Aerial => vec![Source::Aerial],
            SourceArg::Ground => vec![Source::Ground],
            SourceArg::Both => Source::ALL.to_vec(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Markdown,
    Csv,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Markdown => Format::Markdown,
            FormatArg::Csv => Format::Csv,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum WeightingArg {
    Unweighted,
    InverseVariance,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum DenominatorArg {
    Population,
    Sample,
}

#[derive(Args, Debug, Clone)]
struct ReferenceArgs {
    /// Published values to compare against. The bundled reference is used
    /// automatically for the bundled site.
    #[arg(long)]
    reference: Option<PathBuf>,
    /// Skip the comparison and the deviations section.
    #[arg(long, conflicts_with = "reference")]
    no_reference: bool,
}

#[derive(Args, Debug, Clone)]
struct UnitArgs {
    #[arg(long, value_enum, default_value_t = WeightingArg::Unweighted)]
    weighting: WeightingArg,
    #[arg(long, value_enum, default_value_t = DenominatorArg::Population)]
    denominator: DenominatorArg,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit circles to digitized rim points (feature_id,pass_id,x_px,y_px).
    Fit {
        #[arg(long)]
        points: PathBuf,
        /// Scale bar length in pixels.
        #[arg(long, requires = "scale_cm")]
        scale_px: Option<f64>,
        /// Scale bar ground length in cm.
        #[arg(long, requires = "scale_px")]
        scale_cm: Option<f64>,
        /// 1σ of the scale bar ground length in cm.
        #[arg(long, default_value_t = 0.0)]
        scale_sigma_cm: f64,
        /// Drop this many worst points per pass and refit.
        #[arg(long, default_value_t = 0)]
        trim: usize,
    },
    /// Test one hypothesis: a catalog id, or an ad hoc ratio.
    Test {
        /// Hypothesis id from the catalog.
        #[arg(long, conflicts_with_all = ["numerator", "denominator", "target"])]
        hypothesis: Option<String>,
        #[arg(long, requires_all = ["denominator", "target"])]
        numerator: Option<String>,
        #[arg(long, requires_all = ["numerator", "target"])]
        denominator: Option<String>,
        /// Exact target: `phi`, `16/3`, `sqrt(2)`, `32/9*sqrt(2)`, ...
        #[arg(long, requires_all = ["numerator", "denominator"])]
        target: Option<String>,
        #[arg(long)]
        catalog: Option<PathBuf>,
    },
    /// Run the whole catalog with a Bonferroni threshold, plus the
    /// aerial/ground and module-width tables.
    Battery {
        /// Catalog override file replacing the built-in catalog.
        #[arg(long)]
        catalog: Option<PathBuf>,
        #[command(flatten)]
        reference: ReferenceArgs,
        #[command(flatten)]
        unit: UnitArgs,
    },
    /// Estimate the module width X and the base unit L = X/64.
    Unit {
        #[command(flatten)]
        reference: ReferenceArgs,
        #[command(flatten)]
        unit: UnitArgs,
    },
    /// Scan candidate quanta with the cosine quantogram.
    Quantogram {
        /// Lengths in cm, one per line or first CSV column. Defaults to the
        /// module-width terms of the first selected source.
        #[arg(long)]
        lengths: Option<PathBuf>,
        /// Scan the X-scaled terms instead of the raw base lengths.
        #[arg(long)]
        raw: bool,
        #[arg(long, default_value_t = constructs::DEFAULT_RANGE.0)]
        q_min: f64,
        #[arg(long, default_value_t = constructs::DEFAULT_RANGE.1)]
        q_max: f64,
        #[arg(long, default_value_t = constructs::DEFAULT_STEPS)]
        steps: usize,
        /// Null trials for the peak-score p-value; 0 skips the null.
        #[arg(long, default_value_t = 0)]
        null_trials: usize,
        /// Print the full curve, not only the peak.
        #[arg(long)]
        curve: bool,
    },
    /// Monte Carlo null model: how many catalog hits random layouts score.
    Simulate {
        /// Prior config (JSON). Defaults to the built-in prior.
        #[arg(long)]
        prior: Option<PathBuf>,
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        /// Worker threads; 0 uses all cores. Results do not depend on it.
        #[arg(long, default_value_t = 0)]
        threads: usize,
        /// Hit when |z| <= this.
        #[arg(long, conflicts_with = "hit_p")]
        hit_z: Option<f64>,
        /// Hit when p >= this.
        #[arg(long)]
        hit_p: Option<f64>,
        #[arg(long)]
        catalog: Option<PathBuf>,
    },
    /// Draw construct layers as SVG.
    Render {
        /// Comma-separated layers; all by default.
        #[arg(long, value_delimiter = ',', value_enum)]
        layers: Vec<LayerArg>,
        /// Document pixels per cm.
        #[arg(long, default_value_t = 0.25)]
        px_per_cm: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum LayerArg {
    Circles,
    GoldenRectangle,
    Triangles,
    InscribedCircumscribed,
    UnitLines,
}

impl From<LayerArg> for Layer {
    fn from(l: LayerArg) -> Self {
        match l {
            LayerArg::Circles => Layer::Circles,
            LayerArg::GoldenRectangle => Layer::GoldenRectangle,
            LayerArg::Triangles => Layer::Triangles,
            LayerArg::InscribedCircumscribed => Layer::InscribedCircumscribed,
            LayerArg::UnitLines => Layer::UnitLines,
        }
    }
}

/// A failure with its process exit code.
#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

const EXIT_USAGE: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_NUMERIC: u8 = 3;
const EXIT_PRIOR: u8 = 4;

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::NonConvergence { .. } | Error::Degenerate(_) | Error::DivisionByZero => {
                EXIT_NUMERIC
            }
            Error::InfeasiblePrior(_) => EXIT_PRIOR,
            _ => EXIT_INPUT,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn input_error(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_INPUT,
        message: message.into(),
    }
}

fn read_text(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| input_error(format!("{}: {e}", path.display())))
}

fn load_site(g: &Global) -> Result<SurveySite, Failure> {
    match &g.site {
        Some(p) => Ok(SurveySite::from_json_str(&read_text(p)?)?),
        None => Ok(SurveySite::sun_temple()),
    }
}

fn load_catalog(path: Option<&PathBuf>) -> Result<Vec<Hypothesis>, Failure> {
    match path {
        Some(p) => Ok(parse_catalog(&read_text(p)?)?),
        None => Ok(builtin_catalog()),
    }
}

fn load_reference(site: &SurveySite, args: &ReferenceArgs) -> Result<Option<Reference>, Failure> {
    if args.no_reference {
        return Ok(None);
    }
    if let Some(p) = &args.reference {
        return Ok(Some(Reference::from_json_str(&read_text(p)?)?));
    }
    let bundled = Reference::sun_temple();
    Ok((bundled.site == site.name).then_some(bundled))
}

fn unit_mode(u: &UnitArgs) -> (Weighting, Denominator) {
    let w = match u.weighting {
        WeightingArg::Unweighted => Weighting::Unweighted,
        WeightingArg::InverseVariance => Weighting::InverseVariance,
    };
    let d = match u.denominator {
        DenominatorArg::Population => Denominator::Population,
        DenominatorArg::Sample => Denominator::Sample,
    };
    (w, d)
}

fn fixed(x: f64, digits: i32) -> String {
    format!("{:.*}", digits.max(0) as usize, round_half_away(x, digits))
}

fn table(format: Format, title: &str, header: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = String::new();
    match format {
        Format::Markdown => {
            out.push_str(&format!(
                "## {title}\n\n| {} |\n|{}\n",
                header.join(" | "),
                "---|".repeat(header.len())
            ));
            for r in rows {
                out.push_str(&format!("| {} |\n", r.join(" | ")));
            }
        }
        Format::Csv => {
            out.push_str(&format!("# {title}\n{}\n", header.join(",")));
            for r in rows {
                out.push_str(&r.join(","));
                out.push('\n');
            }
        }
    }
    out
}

fn cmd_fit(
    g: &Global,
    points: &Path,
    scale: Option<(f64, f64)>,
    scale_sigma: f64,
    trim: usize,
) -> Result<String, Failure> {
    let sets = circle_fit::parse_points_csv(&read_text(points)?)?;
    let (scale, unit) = match scale {
        Some((px, cm)) => (
            circle_fit::calibrate_scale(
                px,
                &Measurement::new(cm, scale_sigma, geomprobe_core::Unit::Centimeters)?,
            )?,
            "cm",
        ),
        None => match g
            .site
            .as_ref()
            .map(|_| load_site(g))
            .transpose()?
            .and_then(|s| s.scale_cm_per_px)
        {
            Some(s) => (Measurement::cm(s, 0.0), "cm"),
            None => (Measurement::cm(1.0, 0.0), "px"),
        },
    };
    let opts = FitOptions {
        trim,
        ..FitOptions::default()
    };
    let estimates: Vec<CircleEstimate> = sets
        .iter()
        .map(|s| circle_fit::fit_circle_with(s, &opts))
        .collect::<Result<_, _>>()?;
    let format = Format::from(g.format);
    let rows: Vec<Vec<String>> = estimates
        .iter()
        .map(|e| {
            vec![
                e.feature_id.clone(),
                e.pass_id.clone(),
                fixed(e.center.x, 3),
                fixed(e.center.y, 3),
                fixed(e.radius, 3),
                fixed(e.radius_std_error, 3),
                fixed(e.rms_residual, 3),
                e.n_points.to_string(),
            ]
        })
        .collect();
    let mut out = table(
        format,
        "Passes (px)",
        &[
            "feature",
            "pass",
            "cx",
            "cy",
            "radius",
            "radius_se",
            "rms",
            "points",
        ],
        &rows,
    );
    out.push('\n');
    let mut features: Vec<&str> = estimates.iter().map(|e| e.feature_id.as_str()).collect();
    features.dedup();
    let mut agg_rows = Vec::new();
    for f in features {
        let group: Vec<CircleEstimate> = estimates
            .iter()
            .filter(|e| e.feature_id == f)
            .cloned()
            .collect();
        let row = if group.len() >= 2 {
            let a: AggregatedCircle = circle_fit::aggregate_passes(&group, &scale)?;
            vec![
                f.to_string(),
                a.passes.to_string(),
                fixed(a.radius.value, 1),
                fixed(a.radius.sigma, 1),
                fixed(a.center.x, 1),
                fixed(a.center.y, 1),
            ]
        } else {
            let e = &group[0];
            let s = scale.value;
            vec![
                f.to_string(),
                "1".into(),
                fixed(e.radius * s, 1),
                fixed((e.radius_std_error * s).hypot(e.radius * scale.sigma), 1),
                fixed(e.center.x * s, 1),
                fixed(e.center.y * s, 1),
            ]
        };
        agg_rows.push(row);
    }
    out.push_str(&table(
        format,
        &format!("Circles ({unit})"),
        &["feature", "passes", "radius", "sigma", "cx", "cy"],
        &agg_rows,
    ));
    Ok(out)
}

fn cmd_test(
    g: &Global,
    id: Option<&str>,
    ratio: Option<(&str, &str, &str)>,
    catalog: Option<&PathBuf>,
) -> Result<String, Failure> {
    let site = load_site(g)?;
    let h = match (id, ratio) {
        (Some(id), _) => load_catalog(catalog)?
            .into_iter()
            .find(|h| h.id == id)
            .ok_or_else(|| input_error(format!("no hypothesis `{id}` in the catalog")))?,
        (None, Some((num, den, target))) => Hypothesis {
            id: format!("{num}/{den}"),
            description: format!("{num} over {den}"),
            construct: "user".into(),
            sources: SourceSelector::Both,
            expression: Expression::Ratio {
                numerator: Selector::at_ground(num),
                denominator: Selector::at_ground(den),
            },
            target: Some(target.parse::<TargetConstant>()?),
        },
        (None, None) => {
            return Err(Failure {
                code: EXIT_USAGE,
                message: "give --hypothesis, or --numerator, --denominator and --target".into(),
            })
        }
    };
    constructs::check_references(&site, std::slice::from_ref(&h))?;
    let sources = if h.expression.is_coordinate_based() {
        vec![Source::Aerial]
    } else {
        g.source.sources()
    };
    let rows: Vec<Vec<String>> = sources
        .iter()
        .map(|&s| {
            let src = if h.expression.is_coordinate_based() {
                "coordinates".to_string()
            } else {
                s.to_string()
            };
            match constructs::evaluate_hypothesis(&site, &h, s) {
                Outcome::Evaluated { result: r } => vec![
                    h.id.clone(),
                    src,
                    format!(
                        "{}±{}",
                        fixed(r.observed.value, 3),
                        fixed(r.observed.sigma, 3)
                    ),
                    h.target
                        .map(|t| t.to_string())
                        .unwrap_or_else(|| "common mean".into()),
                    fixed(r.chi2, 3),
                    r.dof.to_string(),
                    fixed(r.p, 2),
                    if r.p < g.alpha {
                        "rejected".into()
                    } else {
                        "not rejected".into()
                    },
                ],
                Outcome::Skipped { reason } => {
                    vec![
                        h.id.clone(),
                        src,
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
        .collect();
    Ok(table(
        g.format.into(),
        &format!("{} (alpha = {})", h.description, g.alpha),
        &[
            "hypothesis",
            "source",
            "observed",
            "target",
            "chi2",
            "dof",
            "p",
            "decision",
        ],
        &rows,
    ))
}

fn cmd_battery(
    g: &Global,
    catalog: Option<&PathBuf>,
    refs: &ReferenceArgs,
    unit: &UnitArgs,
) -> Result<String, Failure> {
    let site = load_site(g)?;
    let catalog = load_catalog(catalog)?;
    let sources = g.source.sources();
    let battery = run_battery(&site, &catalog, g.alpha, &sources)?;
    let (w, d) = unit_mode(unit);
    let units: Vec<_> = sources
        .iter()
        .filter_map(|&s| estimate_unit(&site, s, w, d).ok())
        .collect();
    let reference = load_reference(&site, refs)?;
    Ok(report::emit_tables(
        &site,
        Some(&battery),
        &units,
        reference.as_ref(),
        g.format.into(),
    )?)
}

fn cmd_unit(g: &Global, refs: &ReferenceArgs, unit: &UnitArgs) -> Result<String, Failure> {
    let site = load_site(g)?;
    let (w, d) = unit_mode(unit);
    let units = g
        .source
        .sources()
        .into_iter()
        .map(|s| estimate_unit(&site, s, w, d))
        .collect::<Result<Vec<_>, _>>()?;
    let reference = load_reference(&site, refs)?;
    let bundle = report::build_report(&site, None, &units, reference.as_ref())?;
    // The unit command shows only the module-width tables and deviations.
    let bundle = report::ReportBundle {
        table1: None,
        ..bundle
    };
    Ok(report::render(&bundle, g.format.into()))
}

fn read_lengths(path: &Path) -> Result<Vec<f64>, Failure> {
    let text = read_text(path)?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| input_error(format!("{}: {e}", path.display())))?;
        let Some(first) = rec.get(0).filter(|s| !s.is_empty() && !s.starts_with('#')) else {
            continue;
        };
        match first.parse::<f64>() {
            Ok(v) => out.push(v),
            // A header line is allowed.
            Err(_) if i == 0 => continue,
            Err(_) => {
                return Err(input_error(format!(
                    "{} line {}: not a number: `{first}`",
                    path.display(),
                    i + 1
                )))
            }
        }
    }
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn cmd_quantogram(
    g: &Global,
    lengths: Option<&PathBuf>,
    raw: bool,
    q_min: f64,
    q_max: f64,
    steps: usize,
    null_trials: usize,
    curve: bool,
) -> Result<String, Failure> {
    let (values, label) = match lengths {
        Some(p) => (read_lengths(p)?, p.display().to_string()),
        None => {
            let site = load_site(g)?;
            let source = g.source.sources()[0];
            let est = estimate_unit(
                &site,
                source,
                Weighting::Unweighted,
                Denominator::Population,
            )?;
            let v = est
                .terms
                .iter()
                .map(|t| if raw { t.base.value } else { t.value.value })
                .collect();
            (
                v,
                format!(
                    "{source} module-width {}",
                    if raw { "base lengths" } else { "terms" }
                ),
            )
        }
    };
    let scan = scan_values(&values, q_min, q_max, steps)?;
    let format = Format::from(g.format);
    let mut rows = vec![vec![
        label,
        values.len().to_string(),
        fixed(q_min, 3),
        fixed(q_max, 3),
        steps.to_string(),
        fixed(scan.q_best, 3),
        fixed(scan.score_best, 4),
    ]];
    let mut header = vec!["lengths", "n", "q_min", "q_max", "steps", "q_best", "score"];
    if null_trials > 0 {
        let null = quantogram_null(&values, q_min, q_max, steps, null_trials, g.seed)?;
        header.extend(["null_trials", "null_p95", "p_value"]);
        rows[0].extend([
            null_trials.to_string(),
            fixed(null.p95, 4),
            fixed(null.p_value, 4),
        ]);
    }
    let mut out = table(format, "Quantogram", &header, &rows);
    if curve {
        out.push('\n');
        let rows: Vec<Vec<String>> = scan
            .curve
            .iter()
            .map(|(q, s)| vec![fixed(*q, 4), fixed(*s, 6)])
            .collect();
        out.push_str(&table(format, "Curve", &["q", "score"], &rows));
    }
    Ok(out)
}

fn cmd_simulate(
    g: &Global,
    prior: Option<&PathBuf>,
    trials: usize,
    threads: usize,
    hit_z: Option<f64>,
    hit_p: Option<f64>,
    catalog: Option<&PathBuf>,
) -> Result<String, Failure> {
    let prior = match prior {
        Some(p) => NullPrior::from_json_str(&read_text(p)?)?,
        None => NullPrior::default(),
    };
    let rule = match (hit_z, hit_p) {
        (Some(z), _) => HitRule::MaxZ(z),
        (None, Some(p)) => HitRule::MinP(p),
        (None, None) => HitRule::default(),
    };
    let site = load_site(g)?;
    let catalog = load_catalog(catalog)?;
    let report = nullmodel::estimate_fpr(&prior, &catalog, &site, rule, trials, g.seed, threads)?;
    Ok(nullmodel::null_report_csv(&report))
}

fn cmd_render(g: &Global, layers: &[LayerArg], px_per_cm: f64) -> Result<String, Failure> {
    if !(px_per_cm > 0.0 && px_per_cm.is_finite()) {
        return Err(input_error("--px-per-cm must be > 0"));
    }
    let site = load_site(g)?;
    let layers: Vec<Layer> = if layers.is_empty() {
        Layer::ALL.to_vec()
    } else {
        layers.iter().map(|&l| l.into()).collect()
    };
    let source = g.source.sources()[0];
    let out = report::render_overlay(
        &site,
        &layers,
        &OverlayOptions {
            px_per_cm,
            source,
            ..OverlayOptions::default()
        },
    );
    for w in &out.warnings {
        eprintln!("warning: {w}");
    }
    Ok(out.svg)
}

fn run(cli: &Cli) -> Result<String, Failure> {
    let g = &cli.global;
    if !(g.alpha > 0.0 && g.alpha < 1.0) {
        return Err(Failure {
            code: EXIT_USAGE,
            message: format!("--alpha must lie in (0, 1), got {}", g.alpha),
        });
    }
    match &cli.command {
        Command::Fit {
            points,
            scale_px,
            scale_cm,
            scale_sigma_cm,
            trim,
        } => cmd_fit(g, points, scale_px.zip(*scale_cm), *scale_sigma_cm, *trim),
        Command::Test {
            hypothesis,
            numerator,
            denominator,
            target,
            catalog,
        } => {
            let ratio = match (numerator, denominator, target) {
                (Some(n), Some(d), Some(t)) => Some((n.as_str(), d.as_str(), t.as_str())),
                _ => None,
            };
            cmd_test(g, hypothesis.as_deref(), ratio, catalog.as_ref())
        }
        Command::Battery {
            catalog,
            reference,
            unit,
        } => cmd_battery(g, catalog.as_ref(), reference, unit),
        Command::Unit { reference, unit } => cmd_unit(g, reference, unit),
        Command::Quantogram {
            lengths,
            raw,
            q_min,
            q_max,
            steps,
            null_trials,
            curve,
        } => cmd_quantogram(
            g,
            lengths.as_ref(),
            *raw,
            *q_min,
            *q_max,
            *steps,
            *null_trials,
            *curve,
        ),
        Command::Simulate {
            prior,
            trials,
            threads,
            hit_z,
            hit_p,
            catalog,
        } => cmd_simulate(
            g,
            prior.as_ref(),
            *trials,
            *threads,
            *hit_z,
            *hit_p,
            catalog.as_ref(),
        ),
        Command::Render { layers, px_per_cm } => cmd_render(g, layers, *px_per_cm),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    let result = run(&cli).and_then(|text| match &cli.global.out {
        Some(p) => {
            std::fs::write(p, text).map_err(|e| input_error(format!("{}: {e}", p.display())))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
