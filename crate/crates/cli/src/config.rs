//! Experiment configuration: the JSON schema and its resolution into core
//! objects. Missing optional fields get defaults that depend on the system's
//! state space.

use std::path::{Path, PathBuf};

use entrolab_core::covers::{build_admissible_cover, is_admissible};
use entrolab_core::estimators::{greedy_maximal_separated, invariant_candidates};
use entrolab_core::{
    distance, Compact, Cover, CoverElement, DynamicalSystem, Estimator, FiniteMeasure, Interval, IntervalSet, Metric, Sft, Space, SystemDescriptor,
    WitnessSample,
};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Points per default grid: `2^12` on one-dimensional spaces.
const GRID_POINTS: usize = 4096;

/// Upper bound on the size of default multi-dimensional grids and word samples.
const SAMPLE_BUDGET: usize = 1 << 16;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub system: SystemDescriptor,
    /// Defaults to the natural metric of the state space.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metrics: Option<Vec<Metric>>,
    /// Defaults to `d_entropy` for `estimate` and to `d_entropy` and `bowen`
    /// for `compare-metrics`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimators: Option<Vec<Estimator>>,
    #[serde(default = "dyadic_epsilons")]
    pub epsilons: Vec<f64>,
    #[serde(default = "default_n_max")]
    pub n_max: usize,
    /// Fit window `[lo, hi]`; by default the unsaturated tail.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<(usize, usize)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample: Option<SampleSpec>,
    /// Compact parts for the Bowen estimate and the default cover family.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compacts: Option<Vec<CompactSpec>>,
    /// Mesh sizes of the default admissible covers.
    #[serde(default = "default_meshes")]
    pub meshes: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub covers: Option<Vec<CoverSpec>>,
    /// Depth `D` of the default dyadic partition family.
    #[serde(default = "default_partition_depth")]
    pub partition_depth: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partitions: Option<Vec<PartitionSpec>>,
    #[serde(default = "default_defect_threshold")]
    pub defect_threshold: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

fn dyadic_epsilons() -> Vec<f64> {
    (1..=6).map(|k| 0.5f64.powi(k)).collect()
}

fn default_n_max() -> usize {
    12
}

fn default_meshes() -> Vec<f64> {
    vec![0.25, 0.125]
}

fn default_partition_depth() -> usize {
    2
}

fn default_defect_threshold() -> f64 {
    1e-9
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SampleSpec {
    CircleGrid { count: usize },
    TorusGrid { per_dim: usize },
    /// Product grid on a box of `R^d`, ends included.
    Grid { lo: Vec<f64>, hi: Vec<f64>, per_dim: usize },
    /// Points of `R` evenly spaced in angle on the compactifying circle.
    Stereographic { count: usize },
    RandomBox { lo: Vec<f64>, hi: Vec<f64>, count: usize },
    RandomCircle { count: usize },
    /// All admissible words of one length.
    Words { len: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompactSpec {
    pub compact: Compact,
    /// Witness points in the compact; defaults to a grid on a box, or the
    /// main sample points lying in the compact.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample: Option<SampleSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CoverSpec {
    /// Mesh cover of a compact plus a neighbourhood of infinity.
    Admissible { compact: Compact, mesh: f64 },
    /// `count` equal half-open arcs of the circle.
    Arcs { count: usize },
    Cylinders { depth: usize },
    Explicit { cover: Cover },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PartitionSpec {
    Arcs { count: usize },
    /// Half-open intervals between the cuts, plus the two outer rays.
    Cuts { cuts: Vec<f64> },
    /// Products of `per_axis` equal arcs on each coordinate of the torus.
    TorusBoxes { per_axis: usize },
    Cylinders { depth: usize },
    Explicit { cover: Cover },
}

fn config_error(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

/// Reads and validates a config file; errors name the offending field.
pub fn load(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| config_error(format!("cannot read {}: {e}", path.display())))?;
    parse(&text)
}

pub fn parse(text: &str) -> Result<ExperimentConfig, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        if path == "." {
            config_error(e.into_inner().to_string())
        } else {
            config_error(format!("at `{path}`: {}", e.into_inner()))
        }
    })?;
    cfg.validate()?;
    Ok(cfg)
}

impl ExperimentConfig {
    fn validate(&self) -> Result<(), CliError> {
        if self.n_max < 4 {
            return Err(config_error(format!("`n_max` must be at least 4, got {}", self.n_max)));
        }
        if self.epsilons.is_empty() {
            return Err(config_error("`epsilons` is empty"));
        }
        if self.epsilons.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
            return Err(config_error("`epsilons` must be positive"));
        }
        if self.epsilons.windows(2).any(|w| w[1] >= w[0]) {
            return Err(config_error("`epsilons` must be strictly decreasing"));
        }
        if self.meshes.is_empty() || self.meshes.iter().any(|&d| !(d > 0.0 && d.is_finite())) {
            return Err(config_error("`meshes` must be a nonempty list of positive numbers"));
        }
        if self.partition_depth == 0 {
            return Err(config_error("`partition_depth` must be at least 1"));
        }
        for (field, empty) in [
            ("metrics", self.metrics.as_ref().is_some_and(Vec::is_empty)),
            ("estimators", self.estimators.as_ref().is_some_and(Vec::is_empty)),
            ("compacts", self.compacts.as_ref().is_some_and(Vec::is_empty)),
            ("covers", self.covers.as_ref().is_some_and(Vec::is_empty)),
            ("partitions", self.partitions.as_ref().is_some_and(Vec::is_empty)),
        ] {
            if empty {
                return Err(config_error(format!("`{field}` is empty")));
            }
        }
        if let Some((lo, hi)) = self.window {
            if lo == 0 || lo >= hi || hi > self.n_max {
                return Err(config_error(format!("`window` [{lo}, {hi}] must satisfy 1 <= lo < hi <= n_max")));
            }
        }
        Ok(())
    }
}

/// A config resolved against its system: every default filled in.
pub struct Plan {
    pub config: ExperimentConfig,
    pub system: DynamicalSystem,
    pub metrics: Vec<Metric>,
    pub sample: WitnessSample,
}

fn natural_metric(space: Space) -> Metric {
    match space {
        Space::Euclidean { .. } => Metric::Euclidean,
        Space::Circle => Metric::CircleArc,
        Space::Torus { .. } => Metric::TorusMax,
        Space::Word { .. } => Metric::symbolic(),
    }
}

/// Largest per-axis count keeping a `dim`-dimensional grid within budget.
fn per_axis(dim: usize) -> usize {
    let mut k = 2usize;
    while (k + 1).checked_pow(dim as u32).is_some_and(|t| t <= SAMPLE_BUDGET) && k < GRID_POINTS {
        k += 1;
    }
    k
}

fn default_sample(space: Space, sft: Option<&Sft>, n_max: usize) -> SampleSpec {
    match space {
        Space::Circle => SampleSpec::CircleGrid { count: GRID_POINTS },
        Space::Torus { dim } => SampleSpec::TorusGrid { per_dim: per_axis(dim) },
        Space::Euclidean { dim: 1 } => SampleSpec::Stereographic { count: GRID_POINTS },
        Space::Euclidean { dim } => SampleSpec::Grid { lo: vec![-4.0; dim], hi: vec![4.0; dim], per_dim: per_axis(dim) },
        Space::Word { .. } => {
            let sft = sft.expect("word spaces come from shifts");
            let mut len = n_max + 2;
            while len > 1 && sft.admissible_words(len) > SAMPLE_BUDGET as u128 {
                len -= 1;
            }
            SampleSpec::Words { len }
        }
    }
}

fn build_sample(spec: &SampleSpec, space: Space, sft: Option<&Sft>, seed: u64) -> Result<WitnessSample, CliError> {
    let sample = match spec {
        SampleSpec::CircleGrid { count } => WitnessSample::circle_grid(*count),
        SampleSpec::TorusGrid { per_dim } => match space {
            Space::Torus { dim } => WitnessSample::torus_grid(dim, *per_dim),
            _ => return Err(config_error(format!("a torus grid does not fit the state space {space}"))),
        },
        SampleSpec::Grid { lo, hi, per_dim } => WitnessSample::grid_box(lo, hi, *per_dim),
        SampleSpec::Stereographic { count } => WitnessSample::stereographic_grid(*count),
        SampleSpec::RandomBox { lo, hi, count } => WitnessSample::random_box(lo, hi, *count, seed),
        SampleSpec::RandomCircle { count } => WitnessSample::random_circle(*count, seed),
        SampleSpec::Words { len } => match sft {
            Some(sft) => WitnessSample::words(sft, *len),
            None => return Err(config_error("a word sample needs a shift system")),
        },
    }
    .map_err(|e| config_error(format!("at `sample`: {e}")))?;
    if sample.space() != space {
        return Err(config_error(format!("sample lies in {} but the system acts on {space}", sample.space())));
    }
    Ok(sample)
}

impl Plan {
    pub fn new(config: ExperimentConfig) -> Result<Self, CliError> {
        let system = DynamicalSystem::try_from(config.system.clone())
            .map_err(|e| config_error(format!("at `system`: {e}")))?;
        let space = system.space();
        let metrics = config.metrics.clone().unwrap_or_else(|| vec![natural_metric(space)]);
        let spec = config.sample.clone().unwrap_or_else(|| default_sample(space, system.sft(), config.n_max));
        let sample = build_sample(&spec, space, system.sft(), config.seed)?;
        let probe = &sample.points()[0];
        for m in &metrics {
            distance(m, probe, probe)
                .map_err(|e| config_error(format!("metric `{}` does not fit {space}: {e}", m.name())))?;
        }
        Ok(Plan { config, system, metrics, sample })
    }

    pub fn space(&self) -> Space {
        self.system.space()
    }

    fn default_compacts(&self) -> Vec<Compact> {
        match self.space() {
            Space::Euclidean { dim } => {
                [1.0, 4.0].iter().map(|&r| Compact::Box { lo: vec![-r; dim], hi: vec![r; dim] }).collect()
            }
            _ => vec![Compact::Whole],
        }
    }

    /// Compact parts with their witness samples.
    pub fn compacts(&self) -> Result<Vec<(Compact, WitnessSample)>, CliError> {
        let specs: Vec<CompactSpec> = match &self.config.compacts {
            Some(list) => list.clone(),
            None => self.default_compacts().into_iter().map(|compact| CompactSpec { compact, sample: None }).collect(),
        };
        let mut out = Vec::with_capacity(specs.len());
        for (i, spec) in specs.into_iter().enumerate() {
            spec.compact.validate().map_err(|e| config_error(format!("at `compacts[{i}]`: {e}")))?;
            let sample = match (&spec.sample, &spec.compact) {
                (Some(s), _) => build_sample(s, self.space(), self.system.sft(), self.config.seed)?,
                (None, Compact::Box { lo, hi }) => {
                    let dim = lo.len();
                    let per_dim = if dim == 1 { GRID_POINTS + 1 } else { per_axis(dim) };
                    WitnessSample::grid_box(lo, hi, per_dim).map_err(|e| config_error(e.to_string()))?
                }
                (None, compact) => {
                    let inside: Vec<_> = self.sample.points().iter().filter(|p| compact.contains(p)).cloned().collect();
                    WitnessSample::new(inside, self.sample.provenance().clone())
                        .map_err(|_| config_error(format!("at `compacts[{i}]`: no sample point lies in the compact")))?
                }
            };
            out.push((spec.compact, sample));
        }
        Ok(out)
    }

    /// The admissible cover family of the topological estimate.
    pub fn covers(&self) -> Result<Vec<Cover>, CliError> {
        let specs: Vec<CoverSpec> = match &self.config.covers {
            Some(list) => list.clone(),
            None => match self.space() {
                Space::Word { .. } => vec![CoverSpec::Cylinders { depth: 1 }],
                _ => self
                    .default_compacts()
                    .into_iter()
                    .flat_map(|compact| {
                        self.config.meshes.iter().map(move |&mesh| CoverSpec::Admissible { compact: compact.clone(), mesh })
                    })
                    .collect(),
            },
        };
        let mut out = Vec::with_capacity(specs.len());
        for (i, spec) in specs.iter().enumerate() {
            let cover = match spec {
                CoverSpec::Admissible { compact, mesh } => build_admissible_cover(self.space(), compact, *mesh),
                CoverSpec::Arcs { count } => Ok(arcs(*count)),
                CoverSpec::Cylinders { depth } => Cover::cylinders(&self.system, *depth),
                CoverSpec::Explicit { cover } => Ok(cover.clone()),
            }
            .map_err(|e| config_error(format!("at `covers[{i}]`: {e}")))?;
            if cover.space() != self.space() {
                return Err(config_error(format!("at `covers[{i}]`: cover lies in {}", cover.space())));
            }
            if !is_admissible(&cover).admissible {
                return Err(config_error(format!("at `covers[{i}]`: cover is not admissible")));
            }
            out.push(cover);
        }
        Ok(out)
    }

    /// The partition family of the Kolmogorov-Sinai estimate.
    pub fn partitions(&self) -> Result<Vec<Cover>, CliError> {
        let depth = self.config.partition_depth;
        let specs: Vec<PartitionSpec> = match &self.config.partitions {
            Some(list) => list.clone(),
            None => match self.space() {
                Space::Circle => (1..=depth).map(|d| PartitionSpec::Arcs { count: 1 << d }).collect(),
                Space::Word { .. } => (1..=depth).map(|depth| PartitionSpec::Cylinders { depth }).collect(),
                Space::Euclidean { dim: 1 } => (1..=depth)
                    .map(|d| {
                        let half = 1i64 << (d - 1);
                        PartitionSpec::Cuts { cuts: (-half..=half).map(|j| j as f64 / half as f64).collect() }
                    })
                    .collect(),
                Space::Torus { .. } => (1..=depth).map(|d| PartitionSpec::TorusBoxes { per_axis: 1 << d }).collect(),
                space => {
                    return Err(config_error(format!(
                        "no default partitions on {space}; list them under `partitions`"
                    )))
                }
            },
        };
        let mut out = Vec::with_capacity(specs.len());
        for (i, spec) in specs.iter().enumerate() {
            let p = match spec {
                PartitionSpec::Arcs { count } => Ok(arcs(*count)),
                PartitionSpec::Cuts { cuts } => {
                    if cuts.windows(2).any(|w| w[1] <= w[0]) || cuts.iter().any(|c| !c.is_finite()) {
                        Err(config_error(format!("at `partitions[{i}]`: cuts must be finite and increasing")))
                    } else {
                        Ok(Cover::line_cuts(cuts))
                    }
                }
                PartitionSpec::TorusBoxes { per_axis } => match self.space() {
                    Space::Torus { dim } => Ok(torus_boxes(dim, *per_axis)),
                    space => Err(config_error(format!("at `partitions[{i}]`: torus boxes do not fit {space}"))),
                },
                PartitionSpec::Cylinders { depth } => Cover::cylinders(&self.system, *depth)
                    .map_err(|e| config_error(format!("at `partitions[{i}]`: {e}"))),
                PartitionSpec::Explicit { cover } => Ok(cover.clone()),
            }?;
            if !p.is_partition() || p.space() != self.space() {
                return Err(config_error(format!("at `partitions[{i}]`: not a partition of {}", self.space())));
            }
            out.push(p);
        }
        Ok(out)
    }

    /// Candidate invariant measures: uniform on the sample, the Dirac mass
    /// at a fixed origin, and the orbit average over a greedy separated set
    /// at `n_max / 2` and the finest `ε`.
    pub fn measures(&self) -> Result<Vec<(String, FiniteMeasure)>, CliError> {
        let eps = *self.config.epsilons.last().expect("validated nonempty");
        let n_mid = self.config.n_max / 2;
        let e = greedy_maximal_separated(&self.sample, &self.metrics[0], &self.system, n_mid, eps)
            .map_err(CliError::from)?;
        invariant_candidates(&self.system, &self.sample, Some((&e, n_mid))).map_err(CliError::from)
    }
}

fn arcs(count: usize) -> Cover {
    Cover::circle_arcs(count.max(1))
}

fn torus_boxes(dim: usize, per_axis: usize) -> Cover {
    let k = per_axis.max(1);
    let axis: Vec<IntervalSet> = (0..k)
        .map(|i| IntervalSet::circle([Interval::half_open(i as f64 / k as f64, (i + 1) as f64 / k as f64)]).unwrap())
        .collect();
    let mut products: Vec<Vec<IntervalSet>> = vec![Vec::new()];
    for _ in 0..dim {
        products = products
            .into_iter()
            .flat_map(|prefix| {
                axis.iter().map(move |a| {
                    let mut p = prefix.clone();
                    p.push(a.clone());
                    p
                })
            })
            .collect();
    }
    let elements = products.into_iter().map(|factors| CoverElement::Product { factors }).collect();
    Cover::partition(Space::Torus { dim }, elements)
}
