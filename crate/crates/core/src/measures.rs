//! Finitely supported measures, partition and conditional entropy, the
//! Kolmogorov-Sinai entropy over a partition, and the empirical measures
//! built from a separated set.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::covers::Cover;
use crate::error::{Error, Result};
use crate::metrics::{distance, iterated_distance, Metric};
use crate::series::{GrowthSeries, Quantity, SeriesEntry};
use crate::systems::{DynamicalSystem, Point, Sft};

/// Atoms closer than this (per coordinate) are merged.
pub const MERGE_TOLERANCE: f64 = 1e-12;

/// Slack allowed when checking exact inequalities between sums of logarithms.
pub const EXACT_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Atom {
    pub point: Point,
    pub weight: f64,
}

/// Positive weights on finitely many distinct points, total mass at most 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMeasure")]
pub struct FiniteMeasure {
    atoms: Vec<Atom>,
    total: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMeasure {
    atoms: Vec<Atom>,
    #[allow(dead_code)]
    total: Option<f64>,
}

impl TryFrom<RawMeasure> for FiniteMeasure {
    type Error = Error;

    fn try_from(raw: RawMeasure) -> Result<Self> {
        FiniteMeasure::new(raw.atoms.into_iter().map(|a| (a.point, a.weight)))
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
enum AtomKey {
    Real(Vec<i64>),
    Circle(Vec<i64>),
    Word(Vec<u16>),
}

fn atom_key(p: &Point) -> AtomKey {
    let q = |x: f64| (x / MERGE_TOLERANCE).round() as i64;
    match p {
        Point::Euclidean { coords } => AtomKey::Real(coords.iter().map(|&x| q(x)).collect()),
        Point::Circle { angle } => AtomKey::Circle(vec![q(*angle) % q(1.0)]),
        Point::Torus { coords } => AtomKey::Circle(coords.iter().map(|&x| q(x) % q(1.0)).collect()),
        Point::Word { symbols, .. } => AtomKey::Word(symbols.clone()),
    }
}

impl FiniteMeasure {
    /// Merges atoms at (nearly) equal locations; zero weights are dropped.
    pub fn new(atoms: impl IntoIterator<Item = (Point, f64)>) -> Result<Self> {
        let mut merged: Vec<(Point, Vec<f64>)> = Vec::new();
        let mut index: HashMap<AtomKey, usize> = HashMap::new();
        let mut space = None;
        for (p, w) in atoms {
            if !(w >= 0.0 && w.is_finite()) {
                return Err(Error::InvalidMeasure(format!("weight {w} at {p}")));
            }
            match space {
                None => space = Some(p.space()),
                Some(s) => s.check(&p)?,
            }
            if w == 0.0 {
                continue;
            }
            let k = atom_key(&p);
            match index.get(&k) {
                Some(&i) => merged[i].1.push(w),
                None => {
                    index.insert(k, merged.len());
                    merged.push((p, vec![w]));
                }
            }
        }
        let atoms: Vec<Atom> = merged.into_iter().map(|(point, ws)| Atom { point, weight: pairwise_sum(&ws) }).collect();
        let total = pairwise_sum(&atoms.iter().map(|a| a.weight).collect::<Vec<_>>());
        if total > 1.0 + EXACT_TOLERANCE {
            return Err(Error::NotProbability(total));
        }
        Ok(FiniteMeasure { atoms, total })
    }

    pub fn dirac(p: Point) -> Self {
        FiniteMeasure { atoms: vec![Atom { point: p, weight: 1.0 }], total: 1.0 }
    }

    /// Equal weights summing to 1.
    pub fn uniform(points: &[Point]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidMeasure("uniform measure on no points".into()));
        }
        let w = 1.0 / points.len() as f64;
        Self::new(points.iter().map(|p| (p.clone(), w)))
    }

    /// `α·μ` for `0 < α ≤ 1`.
    pub fn scaled(&self, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::InvalidParameter(format!("scale {alpha} outside (0, 1]")));
        }
        Self::new(self.atoms.iter().map(|a| (a.point.clone(), alpha * a.weight)))
    }

    /// `α·γ + β·ν`.
    pub fn combine(alpha: f64, gamma: &FiniteMeasure, beta: f64, nu: &FiniteMeasure) -> Result<Self> {
        if alpha < 0.0 || beta < 0.0 {
            return Err(Error::InvalidParameter("negative combination weight".into()));
        }
        let left = gamma.atoms.iter().map(|a| (a.point.clone(), alpha * a.weight));
        let right = nu.atoms.iter().map(|a| (a.point.clone(), beta * a.weight));
        Self::new(left.chain(right))
    }

    /// Atoms selected by `keep`.
    pub fn restricted(&self, keep: impl Fn(&Point) -> bool) -> Self {
        let atoms: Vec<Atom> = self.atoms.iter().filter(|a| keep(&a.point)).cloned().collect();
        let total = pairwise_sum(&atoms.iter().map(|a| a.weight).collect::<Vec<_>>());
        FiniteMeasure { atoms, total }
    }

    /// Image measure `μ∘T^{-j}`.
    pub fn pushforward(&self, sys: &DynamicalSystem, j: usize) -> Result<Self> {
        let moved = self
            .atoms
            .iter()
            .map(|a| Ok((iterate(sys, &a.point, j)?, a.weight)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(moved)
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn is_probability(&self) -> bool {
        (self.total - 1.0).abs() <= EXACT_TOLERANCE
    }
}

fn iterate(sys: &DynamicalSystem, p: &Point, j: usize) -> Result<Point> {
    let mut q = p.clone();
    for _ in 0..j {
        q = sys.apply(&q)?;
    }
    Ok(q)
}

/// Tree summation; the result does not depend on thread scheduling.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let (a, b) = xs.split_at(xs.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

/// `Σ m log(1/m)` over positive masses.
pub fn entropy_of_masses(masses: &[f64]) -> f64 {
    let terms: Vec<f64> = masses.iter().filter(|&&m| m > 0.0).map(|&m| -m * m.ln()).collect();
    pairwise_sum(&terms)
}

/// `μ(C)` for every cell `C` of `p`.
pub fn cell_masses(mu: &FiniteMeasure, p: &Cover) -> Result<Vec<f64>> {
    let mut per_cell: Vec<Vec<f64>> = vec![Vec::new(); p.len()];
    for a in &mu.atoms {
        per_cell[p.cell_of(&a.point)?].push(a.weight);
    }
    Ok(per_cell.iter().map(|ws| pairwise_sum(ws)).collect())
}

/// `H_μ(P) = Σ_C μ(C) log(1/μ(C))`.
pub fn partition_entropy(mu: &FiniteMeasure, p: &Cover) -> Result<f64> {
    Ok(entropy_of_masses(&cell_masses(mu, p)?))
}

/// Masses of the nonempty cells of `P^n = P ∨ T^{-1}P ∨ … ∨ T^{-(n-1)}P`,
/// keyed by itinerary.
pub fn itinerary_masses(mu: &FiniteMeasure, sys: &DynamicalSystem, p: &Cover, n: usize) -> Result<BTreeMap<Vec<usize>, f64>> {
    let mut groups: BTreeMap<Vec<usize>, Vec<f64>> = BTreeMap::new();
    for a in &mu.atoms {
        groups.entry(itinerary(sys, p, &a.point, n)?).or_default().push(a.weight);
    }
    Ok(groups.into_iter().map(|(k, ws)| (k, pairwise_sum(&ws))).collect())
}

/// Cells of `p` visited by `x, Tx, …, T^{n-1}x`.
pub fn itinerary(sys: &DynamicalSystem, p: &Cover, x: &Point, n: usize) -> Result<Vec<usize>> {
    let mut out = Vec::with_capacity(n);
    let mut q = x.clone();
    for j in 0..n {
        if j > 0 {
            q = sys.apply(&q)?;
        }
        out.push(p.cell_of(&q)?);
    }
    Ok(out)
}

/// `H_μ(P^n)`.
pub fn iterated_partition_entropy(mu: &FiniteMeasure, sys: &DynamicalSystem, p: &Cover, n: usize) -> Result<f64> {
    let masses: Vec<f64> = itinerary_masses(mu, sys, p, n)?.into_values().collect();
    Ok(entropy_of_masses(&masses))
}

/// `H_μ(D | C) = Σ_C μ(C) H_{μ(·|C)}(D)`; cells of zero mass contribute nothing.
pub fn conditional_entropy(mu: &FiniteMeasure, d: &Cover, c: &Cover) -> Result<f64> {
    if !mu.is_probability() {
        return Err(Error::NotProbability(mu.total));
    }
    let mut joint: BTreeMap<(usize, usize), Vec<f64>> = BTreeMap::new();
    for a in &mu.atoms {
        joint.entry((c.cell_of(&a.point)?, d.cell_of(&a.point)?)).or_default().push(a.weight);
    }
    let joint: Vec<((usize, usize), f64)> = joint.into_iter().map(|(k, ws)| (k, pairwise_sum(&ws))).collect();
    let mut marginal = vec![Vec::new(); c.len()];
    for &((ci, _), m) in &joint {
        marginal[ci].push(m);
    }
    let marginal: Vec<f64> = marginal.iter().map(|ws| pairwise_sum(ws)).collect();
    let terms: Vec<f64> = joint
        .iter()
        .filter(|(_, m)| *m > 0.0)
        .map(|&((ci, _), m)| m * (marginal[ci] / m).ln())
        .collect();
    Ok(pairwise_sum(&terms))
}

/// Cell masses of `μ∘T^{-j}`.
pub fn pushforward_mass(mu: &FiniteMeasure, sys: &DynamicalSystem, p: &Cover, j: usize) -> Result<Vec<f64>> {
    let mut per_cell: Vec<Vec<f64>> = vec![Vec::new(); p.len()];
    for a in &mu.atoms {
        per_cell[p.cell_of(&iterate(sys, &a.point, j)?)?].push(a.weight);
    }
    Ok(per_cell.iter().map(|ws| pairwise_sum(ws)).collect())
}

/// `max_C |μ(C) − μ(T^{-1}C)|`.
pub fn invariance_defect(mu: &FiniteMeasure, sys: &DynamicalSystem, p: &Cover) -> Result<f64> {
    let before = pushforward_mass(mu, sys, p, 0)?;
    let after = pushforward_mass(mu, sys, p, 1)?;
    Ok(before.iter().zip(&after).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KsSeries {
    /// `H_μ(P^n)` against `n`; its fitted slope estimates `h_μ(P, T)`.
    pub series: GrowthSeries,
    /// `h_n = H_μ(P^n) / n`.
    pub h: Vec<f64>,
    pub defect: f64,
    /// Set when the invariance defect exceeds the threshold.
    pub defect_warning: bool,
}

/// `h_n = (1/n) H_μ(P^n)` for `n = 1..=n_max` with a fitted rate.
///
/// The series saturates at the entropy of the atom weights, beyond which
/// every cell holds a single atom.
pub fn ks_entropy_over_partition(
    mu: &FiniteMeasure,
    sys: &DynamicalSystem,
    p: &Cover,
    n_max: usize,
    defect_threshold: f64,
) -> Result<KsSeries> {
    let defect = invariance_defect(mu, sys, p)?;
    let mut entries = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        entries.push(SeriesEntry { n, value: iterated_partition_entropy(mu, sys, p, n)?, exact: true });
    }
    let ceiling = entropy_of_masses(&mu.atoms.iter().map(|a| a.weight).collect::<Vec<_>>());
    let h = entries.iter().map(|e| e.value / e.n as f64).collect();
    let series = GrowthSeries::new("kolmogorov_sinai", Quantity::Entropy, entries, Some(ceiling), None)?;
    Ok(KsSeries { series, h, defect, defect_warning: defect > defect_threshold })
}

/// `σ_n`, uniform on `E`, and `μ_n = (1/n) Σ_{j<n} σ_n∘T^{-j}`.
pub fn empirical_measures(e: &[Point], sys: &DynamicalSystem, n: usize) -> Result<(FiniteMeasure, FiniteMeasure)> {
    if e.is_empty() || n == 0 {
        return Err(Error::InvalidParameter("empirical measures need a nonempty set and n ≥ 1".into()));
    }
    let sigma = FiniteMeasure::uniform(e)?;
    let w = 1.0 / (n * e.len()) as f64;
    let mut atoms = Vec::with_capacity(n * e.len());
    for x in e {
        for q in sys.orbit(x, n)? {
            atoms.push((q, w));
        }
    }
    Ok((sigma, FiniteMeasure::new(atoms)?))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainReport {
    pub n: usize,
    pub q: usize,
    /// `|E_n|`
    pub separated: usize,
    /// `q log|E_n|`
    pub lhs: f64,
    /// `2q log|Z^q| + Σ_{p<n} H_{σ_n∘T^{-p}}(Z^q)`
    pub middle: f64,
    /// `2q log|Z^q| + n H_{μ_n}(Z^q)`
    pub rhs: f64,
    /// Number of `Z^q` cells met by `T^p E_n`, `p < n`.
    pub zq_cells: usize,
    pub h_sigma_n: f64,
    pub log_separated: f64,
    pub h_mu_n: f64,
    pub pass: bool,
}

/// Checks `q log|E| ≤ 2q log|Z^q| + n H_{μ_n}(Z^q)` and
/// `H_{σ_n}(Z^n) = log|E|` on a separated set `E`.
///
/// `E` must be `(n, eps)`-separated and every cell of `p` must have diameter
/// below `eps` on the orbit points involved; then each cell of `Z^n` holds at
/// most one point of `E`.
pub fn misiurewicz_chain_check(
    e: &[Point],
    sys: &DynamicalSystem,
    metric: &Metric,
    p: &Cover,
    n: usize,
    q: usize,
    eps: f64,
) -> Result<ChainReport> {
    if !(1 < q && q < n) {
        return Err(Error::InvalidParameter(format!("need 1 < q < n, got q = {q}, n = {n}")));
    }
    if e.is_empty() {
        return Err(Error::InvalidParameter("empty separated set".into()));
    }
    for (i, x) in e.iter().enumerate() {
        for y in &e[i + 1..] {
            if iterated_distance(metric, sys, n, x, y)? < eps {
                return Err(Error::InvalidParameter(format!("{x} and {y} are not ({n}, {eps})-separated")));
            }
        }
    }
    // orbit points T^t x for t < n + q - 1 carry every itinerary used below
    let horizon = n + q - 1;
    let mut by_cell: Vec<Vec<Point>> = vec![Vec::new(); p.len()];
    let mut itineraries = Vec::with_capacity(e.len());
    for x in e {
        let orbit = sys.orbit(x, horizon)?;
        let mut cells = Vec::with_capacity(horizon);
        for y in orbit {
            let c = p.cell_of(&y)?;
            cells.push(c);
            by_cell[c].push(y);
        }
        itineraries.push(cells);
    }
    let diameter = cell_diameter(metric, &by_cell)?;
    if diameter >= eps {
        return Err(Error::PartitionTooCoarse { diameter, epsilon: eps });
    }

    let (sigma, mu_n) = empirical_measures(e, sys, n)?;
    let h_sigma_n = iterated_partition_entropy(&sigma, sys, p, n)?;
    let h_mu_n = iterated_partition_entropy(&mu_n, sys, p, q)?;
    let zq: BTreeSet<&[usize]> = itineraries
        .iter()
        .flat_map(|it| (0..n).map(move |s| &it[s..s + q]))
        .collect();
    let mut pushed = Vec::with_capacity(n);
    for s in 0..n {
        pushed.push(iterated_partition_entropy(&sigma.pushforward(sys, s)?, sys, p, q)?);
    }
    let log_separated = (e.len() as f64).ln();
    let leftover = 2.0 * q as f64 * (zq.len() as f64).ln();
    let lhs = q as f64 * log_separated;
    let middle = leftover + pairwise_sum(&pushed);
    let rhs = leftover + n as f64 * h_mu_n;
    let pass = lhs <= middle + EXACT_TOLERANCE
        && middle <= rhs + EXACT_TOLERANCE
        && (h_sigma_n - log_separated).abs() <= EXACT_TOLERANCE;
    Ok(ChainReport {
        n,
        q,
        separated: e.len(),
        lhs,
        middle,
        rhs,
        zq_cells: zq.len(),
        h_sigma_n,
        log_separated,
        h_mu_n,
        pass,
    })
}

fn cell_diameter(metric: &Metric, cells: &[Vec<Point>]) -> Result<f64> {
    let mut worst = 0.0f64;
    for pts in cells {
        for (i, a) in pts.iter().enumerate() {
            for b in &pts[i + 1..] {
                worst = worst.max(distance(metric, a, b)?);
            }
        }
    }
    Ok(worst)
}

/// Weights of the Parry (maximal entropy Markov) measure on the admissible
/// words of length `len`.
pub fn parry_word_measure(sft: &Sft, len: usize) -> Result<FiniteMeasure> {
    let perron = sft.perron()?;
    let k = sft.alphabet() as usize;
    let norm: f64 = (0..k).map(|i| perron.left[i] * perron.right[i]).sum();
    let stationary: Vec<f64> = (0..k).map(|i| perron.left[i] * perron.right[i] / norm).collect();
    let step = |a: u16, b: u16| perron.right[b as usize] / (perron.root * perron.right[a as usize]);
    let atoms = sft
        .enumerate_words(len)
        .into_iter()
        .map(|w| {
            let weight = w.windows(2).fold(stationary[w[0] as usize], |acc, ab| acc * step(ab[0], ab[1]));
            Ok((Point::word(w, k as u16)?, weight))
        })
        .collect::<Result<Vec<_>>>()?;
    FiniteMeasure::new(atoms)
}

#[cfg(test)]
mod tests;
