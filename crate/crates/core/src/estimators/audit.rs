//! Cross-checks between estimators: the sandwich of separated counts between
//! spanning counts, scaling under iterates, and the chain
//! `h_KS ≤ h_top ≤ h_B ≤ h^d`.

use serde::{Deserialize, Serialize};

use super::{
    bowen_entropy_estimate, d_entropy_estimate, greedy_maximal_separated, ks_entropy_estimate, separated_rows,
    spanning_count, topological_entropy_estimate, EntropyReport,
};
use crate::covers::{Compact, Cover};
use crate::error::{Error, Result};
use crate::measures::{empirical_measures, FiniteMeasure};
use crate::metrics::{Metric, OrbitTable};
use crate::sample::WitnessSample;
use crate::systems::{DynamicalSystem, Point, Space};

/// Headlines at or below this are treated as zero entropy.
pub const NULL_ENTROPY: f64 = 0.02;

/// Default slack for the entropy chain, before fit residuals are added.
pub const CHAIN_TOLERANCE: f64 = 0.05;

/// `N(B_{d_n}(ε)) ≤ s_n(ε) ≤ N(B_{d_n}(ε/2))` on one sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SandwichReport {
    pub n: usize,
    pub epsilon: f64,
    pub spanning: usize,
    pub spanning_exact: bool,
    pub separated: usize,
    pub spanning_half: usize,
    pub spanning_half_exact: bool,
    pub holds: bool,
}

pub fn sandwich_on_table(table: &OrbitTable, n: usize, eps: f64) -> Result<SandwichReport> {
    let outer = spanning_count(table, n, eps)?;
    let separated = separated_rows(table, n, eps)?.len();
    let inner = spanning_count(table, n, eps / 2.0)?;
    Ok(SandwichReport {
        n,
        epsilon: eps,
        spanning: outer.count,
        spanning_exact: outer.exact,
        separated,
        spanning_half: inner.count,
        spanning_half_exact: inner.exact,
        holds: outer.count <= separated && separated <= inner.count,
    })
}

pub fn sandwich_check(
    sample: &WitnessSample,
    metric: &Metric,
    sys: &DynamicalSystem,
    n: usize,
    eps: f64,
) -> Result<SandwichReport> {
    if n == 0 {
        return Err(Error::EmptyOrbit);
    }
    let table = OrbitTable::build(metric, sys, sample.points(), n)?;
    sandwich_on_table(&table, n, eps)
}

/// Estimator run on both `T` and `T^k`.
#[derive(Clone, Debug)]
pub enum ScalingEstimator {
    DEntropy {
        metric: Metric,
        sample: WitnessSample,
        epsilons: Vec<f64>,
        n_max: usize,
        window: Option<(usize, usize)>,
    },
    Topological {
        family: Vec<Cover>,
        sample: WitnessSample,
        n_max: usize,
        window: Option<(usize, usize)>,
    },
}

impl ScalingEstimator {
    fn run(&self, sys: &DynamicalSystem) -> Result<EntropyReport> {
        match self {
            ScalingEstimator::DEntropy { metric, sample, epsilons, n_max, window } => {
                d_entropy_estimate(sys, metric, sample, epsilons, *n_max, *window)
            }
            ScalingEstimator::Topological { family, sample, n_max, window } => {
                topological_entropy_estimate(sys, family, sample, *n_max, *window)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub k: usize,
    pub base: f64,
    pub iterate: f64,
    /// `h(T^k) / h(T)`, when `h(T)` is not null.
    pub ratio: Option<f64>,
    pub tolerance: f64,
    /// `k·h(T) ≥ h(T^k) − tolerance`.
    pub bounded: bool,
    pub base_report: EntropyReport,
    pub iterate_report: EntropyReport,
}

pub fn iterate_scaling_check(sys: &DynamicalSystem, estimator: &ScalingEstimator, k: usize) -> Result<ScalingReport> {
    if k < 2 {
        return Err(Error::InvalidParameter(format!("iterate power must be at least 2, got {k}")));
    }
    let base_report = estimator.run(sys)?;
    let iterate_report = estimator.run(&sys.power(k)?)?;
    let (base, iterate) = (base_report.headline, iterate_report.headline);
    let tolerance =
        CHAIN_TOLERANCE + k as f64 * base_report.headline_residual + iterate_report.headline_residual;
    Ok(ScalingReport {
        k,
        base,
        iterate,
        ratio: (base > NULL_ENTROPY).then(|| iterate / base),
        tolerance,
        bounded: k as f64 * base >= iterate - tolerance,
        base_report,
        iterate_report,
    })
}

/// Finite measures to try in the Kolmogorov-Sinai estimate: uniform weights
/// on the sample, the Dirac mass at the origin when the origin is fixed, and
/// the orbit average `μ_n` of the given separated set.
pub fn invariant_candidates(
    sys: &DynamicalSystem,
    sample: &WitnessSample,
    separated: Option<(&[Point], usize)>,
) -> Result<Vec<(String, FiniteMeasure)>> {
    let mut out = vec![("uniform".to_string(), FiniteMeasure::uniform(sample.points())?)];
    let origin = match sys.space() {
        Space::Euclidean { dim } => Some(Point::euclidean(vec![0.0; dim])),
        Space::Circle => Some(Point::circle(0.0)),
        Space::Torus { dim } => Some(Point::torus(vec![0.0; dim])),
        Space::Word { .. } => None,
    };
    if let Some(o) = origin {
        if sys.apply(&o)? == o {
            out.push(("dirac_origin".to_string(), FiniteMeasure::dirac(o)));
        }
    }
    if let Some((e, n)) = separated {
        let (_, mu_n) = empirical_measures(e, sys, n)?;
        out.push((format!("empirical_n{n}"), mu_n));
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct AuditConfig {
    /// Metric of the Bowen and `d`-entropy links.
    pub metric: Metric,
    /// Further metrics whose Bowen estimates are reported for comparison.
    pub comparison_metrics: Vec<Metric>,
    pub partitions: Vec<Cover>,
    pub covers: Vec<Cover>,
    /// Whole-space witness sample.
    pub sample: WitnessSample,
    pub compacts: Vec<(Compact, WitnessSample)>,
    pub epsilons: Vec<f64>,
    pub n_max: usize,
    pub window: Option<(usize, usize)>,
    pub tolerance: f64,
    pub defect_threshold: f64,
}

impl AuditConfig {
    pub fn new(
        metric: Metric,
        sample: WitnessSample,
        compacts: Vec<(Compact, WitnessSample)>,
        partitions: Vec<Cover>,
        covers: Vec<Cover>,
        epsilons: Vec<f64>,
        n_max: usize,
    ) -> Self {
        AuditConfig {
            metric,
            comparison_metrics: Vec::new(),
            partitions,
            covers,
            sample,
            compacts,
            epsilons,
            n_max,
            window: None,
            tolerance: CHAIN_TOLERANCE,
            defect_threshold: 1e-9,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainLink {
    pub lower: String,
    pub upper: String,
    pub lower_value: f64,
    pub upper_value: f64,
    pub tolerance: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub kolmogorov_sinai: EntropyReport,
    pub topological: EntropyReport,
    pub bowen: EntropyReport,
    pub d_entropy: EntropyReport,
    pub comparisons: Vec<EntropyReport>,
    pub chain: Vec<ChainLink>,
    /// For the compactified metric: whether `h^d` agrees with `h_top`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub minimal: Option<bool>,
    pub holds: bool,
}

fn link(lower: &EntropyReport, upper: &EntropyReport, slack: f64) -> ChainLink {
    let tolerance = slack + lower.headline_residual + upper.headline_residual;
    ChainLink {
        lower: lower.estimator.name().to_string(),
        upper: upper.estimator.name().to_string(),
        lower_value: lower.headline,
        upper_value: upper.headline,
        tolerance,
        holds: lower.headline <= upper.headline + tolerance,
    }
}

/// Runs all four estimators and checks `h_KS ≤ h_top ≤ h_B ≤ h^d`.
///
/// A broken link is an [`Error::AuditFailure`] carrying the whole report as
/// JSON.
pub fn variational_audit(sys: &DynamicalSystem, cfg: &AuditConfig) -> Result<AuditReport> {
    let eps = *cfg
        .epsilons
        .last()
        .ok_or_else(|| Error::InvalidParameter("epsilon grid is empty".into()))?;
    let n_mid = (cfg.n_max / 2).max(1);
    let e = greedy_maximal_separated(&cfg.sample, &cfg.metric, sys, n_mid, eps)?;
    let measures = invariant_candidates(sys, &cfg.sample, Some((&e, n_mid)))?;
    let kolmogorov_sinai =
        ks_entropy_estimate(sys, &cfg.partitions, &measures, cfg.n_max, cfg.window, cfg.defect_threshold)?;
    let topological = topological_entropy_estimate(sys, &cfg.covers, &cfg.sample, cfg.n_max, cfg.window)?;
    let bowen = bowen_entropy_estimate(sys, &cfg.metric, &cfg.compacts, &cfg.epsilons, cfg.n_max, cfg.window)?;
    let d_entropy = d_entropy_estimate(sys, &cfg.metric, &cfg.sample, &cfg.epsilons, cfg.n_max, cfg.window)?;
    let comparisons = cfg
        .comparison_metrics
        .iter()
        .map(|m| bowen_entropy_estimate(sys, m, &cfg.compacts, &cfg.epsilons, cfg.n_max, cfg.window))
        .collect::<Result<Vec<_>>>()?;
    let chain = vec![
        link(&kolmogorov_sinai, &topological, cfg.tolerance),
        link(&topological, &bowen, cfg.tolerance),
        link(&bowen, &d_entropy, cfg.tolerance),
    ];
    let minimal = matches!(cfg.metric, Metric::Compactified).then(|| {
        let slack = cfg.tolerance + d_entropy.headline_residual + topological.headline_residual;
        (d_entropy.headline - topological.headline).abs() <= slack
    });
    let holds = chain.iter().all(|l| l.holds);
    let report = AuditReport { kolmogorov_sinai, topological, bowen, d_entropy, comparisons, chain, minimal, holds };
    if !holds {
        let json = serde_json::to_string(&report).expect("reports contain only finite numbers and strings");
        return Err(Error::AuditFailure(json));
    }
    Ok(report)
}
