//! The `estimate` and `compare-metrics` commands.

use entrolab_core::estimators::{
    bowen_entropy_estimate, d_entropy_estimate, ks_entropy_estimate, topological_entropy_estimate, CHAIN_TOLERANCE,
};
use entrolab_core::{Bound, EntropyReport, Estimator, Metric};
use serde::Serialize;

use crate::config::{ExperimentConfig, Plan};
use crate::output::{file_stem, OutputDir};
use crate::CliError;

/// One headline line of a run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Headline {
    pub metric: String,
    pub estimator: String,
    pub headline: f64,
    pub residual: f64,
    pub bound: Bound,
    /// Report file, relative to the output directory.
    pub report: String,
}

#[derive(Serialize)]
struct Summary<'a> {
    command: &'a str,
    config: &'a ExperimentConfig,
    headlines: &'a [Headline],
    #[serde(skip_serializing_if = "Option::is_none")]
    failure: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    comparison: Option<&'a [Verdict]>,
}

/// Whether the compactified metric attains the smallest headline for one
/// estimator.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verdict {
    pub estimator: String,
    pub compactified: f64,
    pub minimum: f64,
    pub minimizer: String,
    pub tolerance: f64,
    pub attains_minimum: bool,
}

fn uses_metric(e: Estimator) -> bool {
    matches!(e, Estimator::DEntropy | Estimator::Bowen)
}

fn run_one(plan: &Plan, estimator: Estimator, metric: Option<&Metric>) -> Result<EntropyReport, CliError> {
    let cfg = &plan.config;
    let (sys, eps, n_max, window) = (&plan.system, &cfg.epsilons, cfg.n_max, cfg.window);
    let report = match (estimator, metric) {
        (Estimator::DEntropy, Some(m)) => d_entropy_estimate(sys, m, &plan.sample, eps, n_max, window)?,
        (Estimator::Bowen, Some(m)) => bowen_entropy_estimate(sys, m, &plan.compacts()?, eps, n_max, window)?,
        (Estimator::Topological, _) => topological_entropy_estimate(sys, &plan.covers()?, &plan.sample, n_max, window)?,
        (Estimator::KolmogorovSinai, _) => {
            ks_entropy_estimate(sys, &plan.partitions()?, &plan.measures()?, n_max, window, cfg.defect_threshold)?
        }
        (e, None) => unreachable!("{} needs a metric", e.name()),
    };
    Ok(report)
}

/// Runs every requested (metric, estimator) pair, writing each report and its
/// series as soon as it is done. Metric-free estimators run once.
fn run_jobs(plan: &Plan, estimators: &[Estimator], out: &OutputDir) -> Result<Vec<Headline>, (Vec<Headline>, CliError)> {
    let mut jobs: Vec<(Estimator, Option<&Metric>)> = Vec::new();
    for &e in estimators {
        if uses_metric(e) {
            jobs.extend(plan.metrics.iter().map(|m| (e, Some(m))));
        } else {
            jobs.push((e, None));
        }
    }
    let mut done = Vec::with_capacity(jobs.len());
    for (estimator, metric) in jobs {
        let stem = match metric {
            Some(m) => format!("{}-{}", estimator.name(), m.name()),
            None => estimator.name().to_string(),
        };
        let report = match run_one(plan, estimator, metric) {
            Ok(r) => r,
            Err(e) => return Err((done, e)),
        };
        let written = (|| {
            out.write(&format!("{stem}.json"), format!("{}\n", report.to_json()).as_bytes())?;
            for run in &report.runs {
                out.write(&format!("{stem}/{}.csv", file_stem(&run.label)), run.series.to_csv().as_bytes())?;
            }
            Ok::<_, CliError>(())
        })();
        if let Err(e) = written {
            return Err((done, e));
        }
        let line = Headline {
            metric: metric.map_or_else(|| "-".to_string(), |m| m.name().to_string()),
            estimator: estimator.name().to_string(),
            headline: report.headline,
            residual: report.headline_residual,
            bound: report.bound,
            report: format!("{stem}.json"),
        };
        println!("{:<17} {:<13} {:.6}  ({})", line.estimator, line.metric, line.headline, bound_word(line.bound));
        done.push(line);
    }
    Ok(done)
}

fn bound_word(b: Bound) -> &'static str {
    match b {
        Bound::Lower => "lower bound",
        Bound::Exact => "exact",
    }
}

fn finish(
    command: &str,
    plan: &Plan,
    out: &OutputDir,
    result: Result<Vec<Headline>, (Vec<Headline>, CliError)>,
    comparison: Option<&[Verdict]>,
) -> Result<Vec<Headline>, CliError> {
    let (headlines, failure) = match result {
        Ok(h) => (h, None),
        Err((h, e)) => (h, Some(e)),
    };
    out.write_csv("headlines.csv", &headlines)?;
    let summary = Summary {
        command,
        config: &plan.config,
        headlines: &headlines,
        failure: failure.as_ref().map(ToString::to_string),
        comparison,
    };
    out.write_json("summary.json", &summary)?;
    match failure {
        Some(e) => Err(e),
        None => Ok(headlines),
    }
}

/// `entrolab estimate`: every configured estimator, once per metric.
pub fn estimate(plan: &Plan, out: &OutputDir) -> Result<Vec<Headline>, CliError> {
    let estimators = plan.config.estimators.clone().unwrap_or_else(|| vec![Estimator::DEntropy]);
    let result = run_jobs(plan, &estimators, out);
    finish("estimate", plan, out, result, None)
}

/// `entrolab compare-metrics`: the metric-based estimators on every listed
/// metric, with a verdict on whether the compactified metric gives the
/// smallest value.
pub fn compare_metrics(plan: &Plan, out: &OutputDir) -> Result<(Vec<Headline>, Vec<Verdict>), CliError> {
    if plan.config.metrics.as_ref().map_or(0, Vec::len) < 2 {
        return Err(CliError::Config("`metrics` must list at least two metrics to compare".into()));
    }
    let estimators: Vec<Estimator> = match &plan.config.estimators {
        Some(list) => list.iter().copied().filter(|&e| uses_metric(e)).collect(),
        None => vec![Estimator::DEntropy, Estimator::Bowen],
    };
    if estimators.is_empty() {
        return Err(CliError::Config("`estimators` lists no metric-based estimator (d_entropy, bowen)".into()));
    }
    let result = run_jobs(plan, &estimators, out);
    let verdicts = match &result {
        Ok(headlines) => verdicts(headlines),
        Err(_) => Vec::new(),
    };
    let headlines = finish("compare-metrics", plan, out, result, Some(&verdicts))?;
    let table: Vec<_> = headlines.iter().map(|h| (&h.metric, &h.estimator, h.headline, h.bound)).collect();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["metric", "estimator", "headline", "bound"]).map_err(|e| CliError::Io(e.to_string()))?;
    for (m, e, h, b) in table {
        w.write_record([m.as_str(), e.as_str(), &h.to_string(), bound_word(b)]).map_err(|e| CliError::Io(e.to_string()))?;
    }
    out.write("comparison.csv", &w.into_inner().map_err(|e| CliError::Io(e.to_string()))?)?;
    if verdicts.is_empty() {
        println!("compactified metric not among those tested");
    }
    for v in &verdicts {
        println!(
            "compactified metric attains the minimum for {}: {} ({:.6} vs {:.6} for {})",
            v.estimator,
            if v.attains_minimum { "yes" } else { "no" },
            v.compactified,
            v.minimum,
            v.minimizer
        );
    }
    Ok((headlines, verdicts))
}

fn verdicts(headlines: &[Headline]) -> Vec<Verdict> {
    let compact_name = Metric::Compactified.name();
    let mut out = Vec::new();
    let mut names: Vec<&str> = headlines.iter().map(|h| h.estimator.as_str()).collect();
    names.dedup();
    for name in names {
        let rows: Vec<&Headline> = headlines.iter().filter(|h| h.estimator == name).collect();
        let Some(c) = rows.iter().find(|h| h.metric == compact_name) else { continue };
        let best = rows
            .iter()
            .min_by(|a, b| a.headline.total_cmp(&b.headline))
            .expect("at least the compactified row");
        let tolerance = CHAIN_TOLERANCE + c.residual + best.residual;
        out.push(Verdict {
            estimator: name.to_string(),
            compactified: c.headline,
            minimum: best.headline,
            minimizer: best.metric.clone(),
            tolerance,
            attains_minimum: c.headline <= best.headline + tolerance,
        });
    }
    out
}
