use rayon::prelude::*;
use serde::Serialize;

use super::catalog::{evaluate_hypothesis, Hypothesis, Outcome};
use crate::error::Result;
use crate::stats::{self, BonferroniPlan, Decision};
use crate::survey::{Source, SurveySite};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatteryEntry {
    pub hypothesis: String,
    pub description: String,
    pub construct: String,
    /// `None` for coordinate-based hypotheses, which do not depend on source.
    pub source: Option<Source>,
    pub outcome: Outcome,
    pub decision: Option<Decision>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatteryReport {
    pub alpha: f64,
    /// Number of tests actually run.
    pub k: usize,
    /// `None` when nothing could be evaluated.
    pub plan: Option<BonferroniPlan>,
    pub empty: bool,
    pub entries: Vec<BatteryEntry>,
}

impl BatteryReport {
    pub fn rejections(&self) -> impl Iterator<Item = &BatteryEntry> {
        self.entries
            .iter()
            .filter(|e| e.decision == Some(Decision::Rejected))
    }

    pub fn evaluated(&self) -> impl Iterator<Item = &BatteryEntry> {
        self.entries.iter().filter(|e| e.outcome.result().is_some())
    }

    pub fn skipped(&self) -> impl Iterator<Item = &BatteryEntry> {
        self.entries.iter().filter(|e| e.outcome.result().is_none())
    }

    pub fn find(&self, hypothesis: &str, source: Option<Source>) -> Option<&BatteryEntry> {
        self.entries
            .iter()
            .find(|e| e.hypothesis == hypothesis && e.source == source)
    }
}

/// Evaluates every hypothesis for each requested source, then applies a
/// Bonferroni threshold over the tests that ran. Entries are ordered by
/// hypothesis id, then source.
pub fn run_battery(
    site: &SurveySite,
    catalog: &[Hypothesis],
    alpha: f64,
    sources: &[Source],
) -> Result<BatteryReport> {
    // Validates alpha even when nothing ends up running.
    stats::bonferroni(alpha, 1)?;
    let mut jobs: Vec<(&Hypothesis, Option<Source>)> = Vec::new();
    for h in catalog {
        if h.expression.is_coordinate_based() {
            jobs.push((h, None));
        } else {
            let mut srcs: Vec<Source> = sources
                .iter()
                .copied()
                .filter(|s| h.sources.includes(*s))
                .collect();
            srcs.sort();
            srcs.dedup();
            jobs.extend(srcs.into_iter().map(|s| (h, Some(s))));
        }
    }
    jobs.sort_by(|a, b| (&a.0.id, a.1).cmp(&(&b.0.id, b.1)));

    let outcomes: Vec<Outcome> = jobs
        .par_iter()
        .map(|(h, s)| evaluate_hypothesis(site, h, s.unwrap_or(Source::Aerial)))
        .collect();

    let k = outcomes.iter().filter(|o| o.result().is_some()).count();
    let plan = if k > 0 {
        Some(stats::bonferroni(alpha, k)?)
    } else {
        None
    };
    let entries = jobs
        .into_iter()
        .zip(outcomes)
        .map(|((h, source), outcome)| BatteryEntry {
            hypothesis: h.id.clone(),
            description: h.description.clone(),
            construct: h.construct.clone(),
            source,
            decision: match (&plan, outcome.result()) {
                (Some(p), Some(r)) => Some(r.decide(p.alpha_prime)),
                _ => None,
            },
            outcome,
        })
        .collect();
    Ok(BatteryReport {
        alpha,
        k,
        plan,
        empty: k == 0,
        entries,
    })
}
