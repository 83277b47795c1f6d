//! Entropy estimators. Each produces growth series `n ↦ log count` (or
//! `n ↦ H_μ(P^n)`) over a parameter grid, fits their rates, and reports the
//! largest rate as the headline. Every headline is a finite-sample lower
//! estimate of a supremum; it is exact only for symbolic cylinder counts.

mod audit;
mod separated;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::covers::{is_admissible, iterated_cover_counts, symbolic_shift, Compact, Cover};
use crate::error::{Error, Result};
use crate::measures::{ks_entropy_over_partition, FiniteMeasure};
use crate::metrics::{Metric, OrbitTable};
use crate::sample::WitnessSample;
use crate::series::GrowthSeries;
use crate::systems::{DynamicalSystem, Point, SystemDescriptor};

pub use audit::{
    invariant_candidates, iterate_scaling_check, sandwich_check, sandwich_on_table, variational_audit, AuditConfig,
    AuditReport, ChainLink, SandwichReport, ScalingEstimator, ScalingReport, CHAIN_TOLERANCE, NULL_ENTROPY,
};
pub use separated::{ball_supports, covers_table, separated_rows, spanning_count};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    DEntropy,
    Bowen,
    Topological,
    KolmogorovSinai,
}

impl Estimator {
    pub fn name(&self) -> &'static str {
        match self {
            Estimator::DEntropy => "d_entropy",
            Estimator::Bowen => "bowen",
            Estimator::Topological => "topological",
            Estimator::KolmogorovSinai => "kolmogorov_sinai",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    Lower,
    Exact,
}

/// What the series were measured with.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Setting {
    Metric { metric: Metric },
    Covers { covers: Vec<Cover> },
    Partitions { partitions: Vec<Cover>, measures: Vec<String> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesRun {
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compact: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cover: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measure: Option<String>,
    /// Invariance defect of the measure on the partition.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub defect: Option<f64>,
    /// Whether the run enters the headline.
    pub counted: bool,
    pub series: GrowthSeries,
}

impl SeriesRun {
    fn new(label: String, series: GrowthSeries) -> Self {
        SeriesRun { label, epsilon: None, compact: None, cover: None, measure: None, defect: None, counted: true, series }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checks {
    pub nondecreasing_in_n: bool,
    /// Counts never increase as `ε` grows (metric estimators only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub antitone_in_epsilon: Option<bool>,
    /// Whether the raw greedy set sizes were already monotone in `n` and
    /// `ε`, before taking running maxima (metric estimators only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub greedy_monotone: Option<bool>,
    /// Sample points whose orbit norm passed the escape threshold.
    pub escaped_points: usize,
    pub all_exact: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyReport {
    pub system: SystemDescriptor,
    pub setting: Setting,
    pub estimator: Estimator,
    pub epsilons: Vec<f64>,
    pub compacts: Vec<Compact>,
    pub n_max: usize,
    pub runs: Vec<SeriesRun>,
    pub headline: f64,
    /// Fit residual of the run attaining the headline.
    pub headline_residual: f64,
    pub bound: Bound,
    pub checks: Checks,
}

impl EntropyReport {
    /// The counted run with the largest rate (first one on ties).
    pub fn best_run(&self) -> Option<&SeriesRun> {
        self.runs
            .iter()
            .filter(|r| r.counted)
            .fold(None, |best: Option<&SeriesRun>, r| match best {
                Some(b) if b.series.rate() >= r.series.rate() => Some(b),
                _ => Some(r),
            })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports contain only finite numbers and strings")
    }
}

struct Draft {
    system: SystemDescriptor,
    setting: Setting,
    estimator: Estimator,
    epsilons: Vec<f64>,
    compacts: Vec<Compact>,
    n_max: usize,
    bound: Bound,
    greedy_monotone: Option<bool>,
    escaped_points: usize,
}

impl Draft {
    fn finish(self, runs: Vec<SeriesRun>) -> Result<EntropyReport> {
        let mut report = EntropyReport {
            system: self.system,
            setting: self.setting,
            estimator: self.estimator,
            epsilons: self.epsilons,
            compacts: self.compacts,
            n_max: self.n_max,
            headline: 0.0,
            headline_residual: 0.0,
            bound: self.bound,
            checks: Checks {
                nondecreasing_in_n: runs.iter().all(|r| r.series.is_nondecreasing()),
                antitone_in_epsilon: self.greedy_monotone.map(|_| antitone_runs(&runs)),
                greedy_monotone: self.greedy_monotone,
                escaped_points: self.escaped_points,
                all_exact: runs.iter().all(|r| r.series.all_exact()),
            },
            runs,
        };
        let best = report
            .best_run()
            .map(|r| (r.series.rate(), r.series.fit.residual))
            .ok_or_else(|| Error::InvalidParameter(format!("{} estimate has no usable run", self.estimator.name())))?;
        (report.headline, report.headline_residual) = best;
        Ok(report)
    }
}

fn check_epsilons(epsilons: &[f64]) -> Result<()> {
    if epsilons.is_empty() {
        return Err(Error::InvalidParameter("epsilon grid is empty".into()));
    }
    if epsilons.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
        return Err(Error::InvalidParameter(format!("epsilon grid {epsilons:?} has a non-positive entry")));
    }
    if epsilons.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidParameter(format!("epsilon grid {epsilons:?} is not decreasing")));
    }
    Ok(())
}

/// Runs sharing a compact, in grid order, never lose points as `ε` shrinks.
fn antitone_runs(runs: &[SeriesRun]) -> bool {
    runs.windows(2)
        .filter(|w| w[0].compact == w[1].compact)
        .all(|w| w[0].series.values().iter().zip(w[1].series.values()).all(|(coarse, fine)| *coarse <= fine))
}

fn monotone(counts: &[Vec<usize>]) -> bool {
    counts.iter().all(|row| row.windows(2).all(|w| w[0] <= w[1]))
        && counts.windows(2).all(|w| w[0].iter().zip(&w[1]).all(|(coarse, fine)| coarse <= fine))
}

/// Points of a greedy maximal `(n, ε)`-separated subset of the sample, taken
/// in sample order.
pub fn greedy_maximal_separated(
    sample: &WitnessSample,
    metric: &Metric,
    sys: &DynamicalSystem,
    n: usize,
    eps: f64,
) -> Result<Vec<Point>> {
    if n == 0 {
        return Err(Error::EmptyOrbit);
    }
    let table = OrbitTable::build(metric, sys, sample.points(), n)?;
    let rows = separated_rows(&table, n, eps)?;
    Ok(rows.into_iter().map(|r| sample.points()[r].clone()).collect())
}

/// Greedy separated-set sizes for a decreasing `ε` grid and `n = 1..=n_max`,
/// before and after taking running maxima.
///
/// The maximum at `(ε, n)` runs over all greedy sets found at `ε' ≥ ε` and
/// `n' ≤ n`. Each of them is `(n, ε)`-separated as well, so the result is
/// still a lower bound for `s_n(ε)`, and it is monotone in both parameters.
pub fn separated_count_grid(table: &OrbitTable, epsilons: &[f64], n_max: usize) -> Result<(Vec<Vec<usize>>, Vec<Vec<usize>>)> {
    let raw = epsilons
        .par_iter()
        .map(|&eps| {
            let mut counts = Vec::with_capacity(n_max);
            for n in 1..=n_max {
                // once all rows are pairwise separated they stay so for larger n
                let c = match counts.last() {
                    Some(&last) if last == table.len() => last,
                    _ => separated_rows(table, n, eps)?.len(),
                };
                counts.push(c);
            }
            Ok(counts)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut best = raw.clone();
    for k in 0..best.len() {
        for n in 0..n_max {
            if n > 0 {
                best[k][n] = best[k][n].max(best[k][n - 1]);
            }
            if k > 0 {
                best[k][n] = best[k][n].max(best[k - 1][n]);
            }
        }
    }
    Ok((raw, best))
}

fn count_series(counts: &[usize], sample_size: usize, window: Option<(usize, usize)>) -> Result<GrowthSeries> {
    let triples: Vec<(usize, usize, bool)> = counts.iter().enumerate().map(|(i, &c)| (i + 1, c, false)).collect();
    GrowthSeries::from_counts("separated", &triples, Some(sample_size), window)
}

/// `n ↦ log|E_n|` for greedy maximal `(n, ε)`-separated sets, `n = 1..=n_max`.
pub fn separated_count_series(
    sample: &WitnessSample,
    metric: &Metric,
    sys: &DynamicalSystem,
    eps: f64,
    n_max: usize,
    window: Option<(usize, usize)>,
) -> Result<GrowthSeries> {
    let table = OrbitTable::build(metric, sys, sample.points(), n_max)?;
    let (_, best) = separated_count_grid(&table, &[eps], n_max)?;
    count_series(&best[0], table.len(), window)
}

/// `n ↦ log r_n`, `r_n` the fewest `d_n`-balls of radius `ε` centred at
/// sample points covering the sample.
pub fn spanning_count_series(
    sample: &WitnessSample,
    metric: &Metric,
    sys: &DynamicalSystem,
    eps: f64,
    n_max: usize,
    window: Option<(usize, usize)>,
) -> Result<GrowthSeries> {
    let table = OrbitTable::build(metric, sys, sample.points(), n_max)?;
    let mut triples = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let sol = spanning_count(&table, n, eps)?;
        triples.push((n, sol.count, sol.exact));
    }
    GrowthSeries::from_counts("spanning", &triples, Some(sample.len()), window)
}

/// Separated-count runs over the `ε` grid on one table.
fn epsilon_runs(
    table: &OrbitTable,
    epsilons: &[f64],
    n_max: usize,
    window: Option<(usize, usize)>,
    prefix: &str,
) -> Result<(Vec<SeriesRun>, bool)> {
    let (raw, best) = separated_count_grid(table, epsilons, n_max)?;
    let mut runs = Vec::with_capacity(epsilons.len());
    for (&eps, counts) in epsilons.iter().zip(&best) {
        let mut run = SeriesRun::new(format!("{prefix}eps={eps}"), count_series(counts, table.len(), window)?);
        run.epsilon = Some(eps);
        runs.push(run);
    }
    Ok((runs, monotone(&raw)))
}

/// Whole-space `d`-entropy: the largest separated-count rate over the `ε` grid.
pub fn d_entropy_estimate(
    sys: &DynamicalSystem,
    metric: &Metric,
    sample: &WitnessSample,
    epsilons: &[f64],
    n_max: usize,
    window: Option<(usize, usize)>,
) -> Result<EntropyReport> {
    check_epsilons(epsilons)?;
    let table = OrbitTable::build(metric, sys, sample.points(), n_max)?;
    let (runs, greedy_monotone) = epsilon_runs(&table, epsilons, n_max, window, "")?;
    Draft {
        system: sys.descriptor(),
        setting: Setting::Metric { metric: *metric },
        estimator: Estimator::DEntropy,
        epsilons: epsilons.to_vec(),
        compacts: Vec::new(),
        n_max,
        bound: Bound::Lower,
        greedy_monotone: Some(greedy_monotone),
        escaped_points: table.escaped_count(),
    }
    .finish(runs)
}

/// Bowen entropy: separated counts whose starting points lie in a compact
/// `K`, maximised over `K` and `ε`. Orbits may leave `K`.
pub fn bowen_entropy_estimate(
    sys: &DynamicalSystem,
    metric: &Metric,
    compacts: &[(Compact, WitnessSample)],
    epsilons: &[f64],
    n_max: usize,
    window: Option<(usize, usize)>,
) -> Result<EntropyReport> {
    check_epsilons(epsilons)?;
    if compacts.is_empty() {
        return Err(Error::InvalidParameter("no compact sets given".into()));
    }
    let mut runs = Vec::new();
    let mut all_monotone = true;
    let mut escaped = 0;
    for (k, (compact, sample)) in compacts.iter().enumerate() {
        compact.validate()?;
        if let Some(p) = sample.points().iter().find(|p| !compact.contains(p)) {
            return Err(Error::InvalidParameter(format!("witness {p} of compact #{k} lies outside it")));
        }
        let table = OrbitTable::build(metric, sys, sample.points(), n_max)?;
        escaped += table.escaped_count();
        let (mut k_runs, ok) = epsilon_runs(&table, epsilons, n_max, window, &format!("K{k} "))?;
        for run in &mut k_runs {
            run.compact = Some(k);
        }
        all_monotone &= ok;
        runs.extend(k_runs);
    }
    Draft {
        system: sys.descriptor(),
        setting: Setting::Metric { metric: *metric },
        estimator: Estimator::Bowen,
        epsilons: epsilons.to_vec(),
        compacts: compacts.iter().map(|(c, _)| c.clone()).collect(),
        n_max,
        bound: Bound::Lower,
        greedy_monotone: Some(all_monotone),
        escaped_points: escaped,
    }
    .finish(runs)
}

/// Topological entropy over a finite family of admissible covers: the
/// largest rate of `n ↦ log N(A^n)`.
///
/// Cylinder partitions under a shift are counted exactly without the
/// sample; other covers are counted on the sample.
pub fn topological_entropy_estimate(
    sys: &DynamicalSystem,
    family: &[Cover],
    sample: &WitnessSample,
    n_max: usize,
    window: Option<(usize, usize)>,
) -> Result<EntropyReport> {
    if family.is_empty() {
        return Err(Error::InvalidParameter("cover family is empty".into()));
    }
    if let Some(i) = family.iter().position(|a| !is_admissible(a).admissible) {
        return Err(Error::NonAdmissible(i));
    }
    let mut runs = Vec::with_capacity(family.len());
    let mut symbolic = true;
    for (i, a) in family.iter().enumerate() {
        let exact_words = symbolic_shift(a, sys).is_some();
        symbolic &= exact_words;
        let counts = iterated_cover_counts(a, sys, sample.points(), n_max)?;
        let triples: Vec<(usize, usize, bool)> = counts.iter().map(|c| (c.n, c.count, c.exact)).collect();
        let ceiling = (!exact_words).then_some(sample.len());
        let series = GrowthSeries::from_counts("subcover", &triples, ceiling, window)?;
        let mut run = SeriesRun::new(format!("cover{i}"), series);
        run.cover = Some(i);
        runs.push(run);
    }
    let exact = symbolic && runs.iter().all(|r| r.series.all_exact());
    Draft {
        system: sys.descriptor(),
        setting: Setting::Covers { covers: family.to_vec() },
        estimator: Estimator::Topological,
        epsilons: Vec::new(),
        compacts: Vec::new(),
        n_max,
        bound: if exact { Bound::Exact } else { Bound::Lower },
        greedy_monotone: None,
        escaped_points: 0,
    }
    .finish(runs)
}

/// Kolmogorov-Sinai entropy over each (partition, measure) pair. Measures
/// whose invariance defect on the partition exceeds `defect_threshold` are
/// reported but left out of the headline.
pub fn ks_entropy_estimate(
    sys: &DynamicalSystem,
    partitions: &[Cover],
    measures: &[(String, FiniteMeasure)],
    n_max: usize,
    window: Option<(usize, usize)>,
    defect_threshold: f64,
) -> Result<EntropyReport> {
    if partitions.is_empty() || measures.is_empty() {
        return Err(Error::InvalidParameter("need at least one partition and one measure".into()));
    }
    let jobs: Vec<(usize, usize)> =
        (0..partitions.len()).flat_map(|p| (0..measures.len()).map(move |m| (p, m))).collect();
    let results: Vec<Result<SeriesRun>> = jobs
        .par_iter()
        .map(|&(p, m)| {
            let (name, mu) = &measures[m];
            let mut ks = ks_entropy_over_partition(mu, sys, &partitions[p], n_max, defect_threshold)?;
            if window.is_some() {
                ks.series.refit(window)?;
            }
            let mut run = SeriesRun::new(format!("partition{p} {name}"), ks.series);
            run.cover = Some(p);
            run.measure = Some(name.clone());
            run.defect = Some(ks.defect);
            run.counted = !ks.defect_warning;
            Ok(run)
        })
        .collect();
    let runs = results.into_iter().collect::<Result<Vec<_>>>()?;
    if !runs.iter().any(|r| r.counted) {
        return Err(Error::InvalidMeasure(format!(
            "no candidate measure has invariance defect at most {defect_threshold}"
        )));
    }
    Draft {
        system: sys.descriptor(),
        setting: Setting::Partitions {
            partitions: partitions.to_vec(),
            measures: measures.iter().map(|(n, _)| n.clone()).collect(),
        },
        estimator: Estimator::KolmogorovSinai,
        epsilons: Vec::new(),
        compacts: Vec::new(),
        n_max,
        bound: Bound::Lower,
        greedy_monotone: None,
        escaped_points: 0,
    }
    .finish(runs)
}
