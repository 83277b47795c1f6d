//! Invariant suites behind `entrolab verify`. Each suite runs fixed-seed
//! instances and counts every inequality it checks.

use std::time::Instant;

use entrolab_core::covers::{
    build_admissible_cover, iterated_cover_counts, join, min_subcover_cardinality, refines, Domain,
};
use entrolab_core::estimators::{
    greedy_maximal_separated, sandwich_on_table, variational_audit, AuditConfig, AuditReport, NULL_ENTROPY,
};
use entrolab_core::measures::{
    iterated_partition_entropy, misiurewicz_chain_check, partition_entropy, EXACT_TOLERANCE,
};
use entrolab_core::{
    Compact, Cover, CoverElement, DynamicalSystem, FiniteMeasure, Interval, IntervalSet, Metric, OrbitTable, Point,
    Sft, Space, WitnessSample,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::CliError;

/// Random instances per suite.
pub const INSTANCES: u64 = 100;

const GOLDEN_ROTATION: f64 = 0.381_966_011_250_105_1;

/// Bounds for estimates of `log 2`.
pub const LOG2_BAND: (f64, f64) = (0.62, 0.77);

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Suite {
    /// Refinement, join and subcover laws of covers.
    Lattice,
    /// Entropy inequalities for finite measures.
    Measures,
    /// Spanning and separated counts sandwich.
    Sandwich,
    /// Empirical-measure chain of the variational principle.
    Chain,
    /// Ordering of the four entropy estimates.
    Variational,
}

impl Suite {
    pub fn name(&self) -> &'static str {
        match self {
            Suite::Lattice => "lattice",
            Suite::Measures => "measures",
            Suite::Sandwich => "sandwich",
            Suite::Chain => "chain",
            Suite::Variational => "variational",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub instances: usize,
    pub checks: usize,
    pub violations: Vec<String>,
    pub seconds: f64,
}

impl SuiteReport {
    fn new(suite: Suite) -> Self {
        SuiteReport { suite: suite.name().into(), instances: 0, checks: 0, violations: Vec::new(), seconds: 0.0 }
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.violations.push(what());
        }
    }

    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Runs a suite with instance seeds `seed, seed + 1, …`.
pub fn run(suite: Suite, seed: u64) -> Result<SuiteReport, CliError> {
    let start = Instant::now();
    let mut r = SuiteReport::new(suite);
    match suite {
        Suite::Lattice => lattice(&mut r, seed)?,
        Suite::Measures => measures(&mut r, seed)?,
        Suite::Sandwich => sandwich(&mut r, seed)?,
        Suite::Chain => chain(&mut r)?,
        Suite::Variational => variational(&mut r)?,
    }
    r.seconds = start.elapsed().as_secs_f64();
    Ok(r)
}

fn line_cover(rng: &mut ChaCha8Rng) -> Cover {
    // overlapping pieces between random cuts of [0, 1)
    let k = rng.gen_range(1..6);
    let mut ends: Vec<f64> = (0..k).map(|_| (rng.gen::<f64>() * 64.0).floor() / 64.0).collect();
    ends.push(0.0);
    ends.push(1.0);
    ends.sort_by(f64::total_cmp);
    let elements = ends
        .windows(2)
        .map(|w| {
            let pad = rng.gen_range(0..3) as f64 / 128.0;
            let piece = Interval { lo: w[0] - pad, hi: w[1] + pad, lo_closed: true, hi_closed: false };
            CoverElement::intervals(IntervalSet::line([piece]).unwrap())
        })
        .collect();
    Cover::cover(Space::Euclidean { dim: 1 }, elements)
}

fn random_cuts(rng: &mut ChaCha8Rng, max: usize) -> Vec<f64> {
    let k = rng.gen_range(0..=max);
    let mut cuts: Vec<f64> = (0..k).map(|_| rng.gen_range(1..64) as f64 / 64.0).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    cuts
}

/// Half-open arcs between consecutive cuts, wrapping around.
fn arc_partition(cuts: &[f64]) -> Cover {
    if cuts.len() < 2 {
        return Cover::partition(Space::Circle, vec![CoverElement::intervals(IntervalSet::whole(Domain::Circle))]);
    }
    let elements = (0..cuts.len())
        .map(|i| {
            let (lo, hi) = if i + 1 < cuts.len() { (cuts[i], cuts[i + 1]) } else { (cuts[i], cuts[0] + 1.0) };
            CoverElement::intervals(IntervalSet::circle([Interval::half_open(lo, hi)]).unwrap())
        })
        .collect();
    Cover::partition(Space::Circle, elements)
}

fn lattice(r: &mut SuiteReport, seed: u64) -> Result<(), CliError> {
    let grid: Vec<Point> = (0..512).map(|k| Point::euclidean(vec![k as f64 / 512.0])).collect();
    let circle = WitnessSample::circle_grid(256)?;
    let dbl = DynamicalSystem::doubling();
    for s in seed..seed + INSTANCES {
        let mut rng = ChaCha8Rng::seed_from_u64(s);
        r.instances += 1;
        let (a, b, c) = (line_cover(&mut rng), line_cover(&mut rng), line_cover(&mut rng));
        let ab = join(&a, &b, &[])?;
        let abc = join(&ab, &c, &[])?;
        r.check(refines(&a, &a, &[])?, || format!("seed {s}: refinement is not reflexive"));
        r.check(refines(&ab, &a, &[])? && refines(&ab, &b, &[])?, || format!("seed {s}: join does not refine its factors"));
        r.check(ab.len() <= a.len() * b.len(), || format!("seed {s}: join has too many elements"));
        r.check(refines(&abc, &ab, &[])? && refines(&abc, &a, &[])?, || format!("seed {s}: refinement is not transitive"));

        let na = min_subcover_cardinality(&a, &grid)?;
        let nb = min_subcover_cardinality(&b, &grid)?;
        let nab = min_subcover_cardinality(&ab, &grid)?;
        r.check(nab.count <= na.count * nb.count, || {
            format!("seed {s}: N(a v b) = {} > {} * {}", nab.count, na.count, nb.count)
        });
        if na.exact && nab.exact {
            r.check(na.count <= nab.count, || format!("seed {s}: refinement lowered N from {} to {}", na.count, nab.count));
        }
        let half = min_subcover_cardinality(&a, &grid[..256])?;
        if half.exact && na.exact {
            r.check(half.count <= na.count, || format!("seed {s}: restriction raised N"));
        }

        let cuts = random_cuts(&mut rng, 5);
        let p = Cover::line_cuts(&cuts);
        let met = {
            let mut cells: Vec<usize> = grid.iter().map(|x| p.cell_of(x)).collect::<Result<_, _>>()?;
            cells.sort_unstable();
            cells.dedup();
            cells.len()
        };
        let np = min_subcover_cardinality(&p, &grid)?;
        r.check(np.exact && np.count == met, || format!("seed {s}: partition count {} but {met} cells met", np.count));

        let coarse = arc_partition(&random_cuts(&mut rng, 3));
        let fine = join(&coarse, &arc_partition(&random_cuts(&mut rng, 3)), circle.points())?;
        let cc = iterated_cover_counts(&coarse, &dbl, circle.points(), 4)?;
        let cf = iterated_cover_counts(&fine, &dbl, circle.points(), 4)?;
        for (x, y) in cc.iter().zip(&cf) {
            r.check(x.count <= y.count, || format!("seed {s}: N(b^{}) = {} > N(a^{}) = {}", x.n, x.count, y.n, y.count));
        }
    }
    Ok(())
}

fn random_measure(rng: &mut ChaCha8Rng, total: f64) -> Result<FiniteMeasure, CliError> {
    let k = rng.gen_range(1..24);
    let raw: Vec<(u32, f64)> = (0..k).map(|_| (rng.gen_range(0..64), rng.gen_range(0.01..1.0))).collect();
    let sum: f64 = raw.iter().map(|a| a.1).sum();
    let atoms = raw.into_iter().map(|(x, w)| (Point::circle(x as f64 / 64.0), w * total / sum));
    Ok(FiniteMeasure::new(atoms)?)
}

fn measures(r: &mut SuiteReport, seed: u64) -> Result<(), CliError> {
    let dbl = DynamicalSystem::doubling();
    let tol = EXACT_TOLERANCE;
    for s in seed..seed + INSTANCES {
        let mut rng = ChaCha8Rng::seed_from_u64(s);
        r.instances += 1;
        let mu = random_measure(&mut rng, 1.0)?;
        let (c, d) = (arc_partition(&random_cuts(&mut rng, 5)), arc_partition(&random_cuts(&mut rng, 5)));
        let hc = partition_entropy(&mu, &c)?;

        let hcd = partition_entropy(&mu, &join(&c, &d, &[])?)?;
        let hd = partition_entropy(&mu, &d)?;
        r.check(hcd <= hc + hd + tol, || format!("seed {s}: H(C v D) = {hcd} > {hc} + {hd}"));

        let support: Vec<Point> = mu.atoms().iter().map(|a| a.point.clone()).collect();
        let cells = min_subcover_cardinality(&c, &support)?.count;
        r.check(hc <= (cells as f64).ln() + tol, || format!("seed {s}: H = {hc} > log {cells}"));

        let nu = random_measure(&mut rng, 1.0)?;
        let alpha: f64 = rng.gen();
        let mix = FiniteMeasure::combine(alpha, &mu, 1.0 - alpha, &nu)?;
        let lhs = alpha * hc + (1.0 - alpha) * partition_entropy(&nu, &c)?;
        let hmix = partition_entropy(&mix, &c)?;
        r.check(lhs <= hmix + tol, || format!("seed {s}: convex combination {lhs} > {hmix}"));

        let total = rng.gen_range(0.05..=1.0);
        let sub = random_measure(&mut rng, total)?;
        let lo = rng.gen_range(0..64) as f64 / 64.0;
        let len = rng.gen_range(0..64) as f64 / 64.0;
        let y = IntervalSet::circle([Interval::half_open(lo, lo + len)])?;
        let inside = sub.restricted(|q| y.contains(q.real_coords().unwrap()[0]));
        let outside = sub.restricted(|q| !y.contains(q.real_coords().unwrap()[0]));
        let whole = partition_entropy(&sub, &c)?;
        let split = partition_entropy(&inside, &c)? + partition_entropy(&outside, &c)?;
        r.check(whole <= split + tol, || format!("seed {s}: split {whole} > {split}"));

        let a = rng.gen_range(0.01..=1.0);
        let n = rng.gen_range(1..=5);
        let scaled = sub.scaled(a)?;
        let lhs = iterated_partition_entropy(&scaled, &dbl, &c, n)? / n as f64;
        let rhs = a * iterated_partition_entropy(&sub, &dbl, &c, n)? / n as f64
            + a / n as f64 * sub.total() * (1.0 / a).ln();
        r.check((lhs - rhs).abs() <= tol, || format!("seed {s}: scaling identity {lhs} vs {rhs}"));
    }
    Ok(())
}

fn sandwich(r: &mut SuiteReport, seed: u64) -> Result<(), CliError> {
    let systems = [
        DynamicalSystem::identity(Space::Circle),
        DynamicalSystem::rotation(GOLDEN_ROTATION)?,
        DynamicalSystem::doubling(),
    ];
    let id_plane = DynamicalSystem::identity(Space::Euclidean { dim: 2 });
    for s in seed..seed + INSTANCES {
        let sample = WitnessSample::random_circle(64, s)?;
        for sys in &systems {
            let table = OrbitTable::build(&Metric::CircleArc, sys, sample.points(), 8)?;
            for k in 1..=5 {
                let eps = 0.5f64.powi(k);
                for n in 1..=8 {
                    let rep = sandwich_on_table(&table, n, eps)?;
                    r.instances += 1;
                    r.checks += 1;
                    if !rep.holds {
                        r.violations.push(format!("seed {s} {:?} n {n} eps {eps}: {rep:?}", sys.descriptor()));
                    }
                }
            }
        }
        let square = WitnessSample::random_box(&[0.0, 0.0], &[1.0, 1.0], 200, s)?;
        let table = OrbitTable::build(&Metric::Euclidean, &id_plane, square.points(), 1)?;
        let rep = sandwich_on_table(&table, 1, 0.1)?;
        r.instances += 1;
        r.check(rep.holds, || format!("seed {s} unit square: {rep:?}"));
    }
    Ok(())
}

/// `(n, q)` pairs of the chain instances.
pub const CHAIN_PAIRS: [(usize, usize); 3] = [(6, 2), (8, 2), (8, 4)];

fn chain(r: &mut SuiteReport) -> Result<(), CliError> {
    let dbl = DynamicalSystem::doubling();
    let grid = WitnessSample::circle_grid(4096)?;
    let quarters = Cover::circle_arcs(4);
    let full = Sft::full(2);
    let shift = DynamicalSystem::shift(full.clone());
    let cylinders = Cover::cylinders(&shift, 1)?;
    for (n, q) in CHAIN_PAIRS {
        let e = greedy_maximal_separated(&grid, &Metric::CircleArc, &dbl, n, 0.25)?;
        let rep = misiurewicz_chain_check(&e, &dbl, &Metric::CircleArc, &quarters, n, q, 0.25)?;
        r.instances += 1;
        r.check(rep.pass, || format!("doubling n {n} q {q}: {rep:?}"));

        let words = WitnessSample::words(&full, n + q)?;
        let e = greedy_maximal_separated(&words, &Metric::symbolic(), &shift, n, 1.0)?;
        let rep = misiurewicz_chain_check(&e, &shift, &Metric::symbolic(), &cylinders, n, q, 1.0)?;
        r.instances += 1;
        r.check(rep.pass, || format!("2-shift n {n} q {q}: {rep:?}"));
    }
    Ok(())
}

fn dyadic(k: i32) -> Vec<f64> {
    (1..=k).map(|j| 0.5f64.powi(j)).collect()
}

/// Doubling map on a 4096-point grid with `n_max = 12`.
pub fn doubling_audit() -> Result<AuditReport, CliError> {
    let grid = WitnessSample::circle_grid(4096)?;
    let covers = vec![
        build_admissible_cover(Space::Circle, &Compact::Whole, 0.25)?,
        build_admissible_cover(Space::Circle, &Compact::Whole, 0.125)?,
    ];
    let partitions = vec![Cover::circle_arcs(2), Cover::circle_arcs(4)];
    let cfg =
        AuditConfig::new(Metric::CircleArc, grid.clone(), vec![(Compact::Whole, grid)], partitions, covers, dyadic(4), 12);
    Ok(variational_audit(&DynamicalSystem::doubling(), &cfg)?)
}

/// `x ↦ 2x` on the line with the compactified metric, and the Euclidean
/// Bowen estimate on `[0, 1]` for comparison.
pub fn linear_audit() -> Result<AuditReport, CliError> {
    let line = Space::Euclidean { dim: 1 };
    let mut covers = Vec::new();
    for k in [Compact::interval(-1.0, 1.0), Compact::interval(-4.0, 4.0)] {
        for delta in [0.25, 0.125] {
            covers.push(build_admissible_cover(line, &k, delta)?);
        }
    }
    let partitions = vec![Cover::line_cuts(&[-1.0, 0.0, 1.0]), Cover::line_cuts(&[-1.0, -0.5, 0.0, 0.5, 1.0])];
    let unit = WitnessSample::grid_line(0.0, 1.0, (1 << 14) + 1)?;
    let mut cfg = AuditConfig::new(
        Metric::Compactified,
        WitnessSample::stereographic_grid(4096)?,
        vec![(Compact::interval(0.0, 1.0), unit)],
        partitions,
        covers,
        dyadic(4),
        12,
    );
    cfg.comparison_metrics = vec![Metric::Euclidean];
    Ok(variational_audit(&DynamicalSystem::linear(vec![vec![2.0]])?, &cfg)?)
}

fn identity_audit() -> Result<AuditReport, CliError> {
    let grid = WitnessSample::circle_grid(1024)?;
    let covers = vec![build_admissible_cover(Space::Circle, &Compact::Whole, 0.25)?];
    let cfg = AuditConfig::new(
        Metric::CircleArc,
        grid.clone(),
        vec![(Compact::Whole, grid)],
        vec![Cover::circle_arcs(4)],
        covers,
        dyadic(4),
        8,
    );
    Ok(variational_audit(&DynamicalSystem::identity(Space::Circle), &cfg)?)
}

fn four(a: &AuditReport) -> [(&'static str, f64); 4] {
    [
        ("h_KS", a.kolmogorov_sinai.headline),
        ("h_top", a.topological.headline),
        ("h_B", a.bowen.headline),
        ("h^d", a.d_entropy.headline),
    ]
}

fn audit_or_violation(r: &mut SuiteReport, name: &str, audit: Result<AuditReport, CliError>) -> Option<AuditReport> {
    r.instances += 1;
    r.checks += 1;
    match audit {
        Ok(a) => Some(a),
        Err(e) => {
            r.violations.push(format!("{name}: {e}"));
            None
        }
    }
}

fn variational(r: &mut SuiteReport) -> Result<(), CliError> {
    let (lo, hi) = LOG2_BAND;
    if let Some(a) = audit_or_violation(r, "doubling", doubling_audit()) {
        for (name, v) in four(&a) {
            r.check((lo..=hi).contains(&v), || format!("doubling {name} = {v} outside [{lo}, {hi}]"));
        }
    }
    if let Some(a) = audit_or_violation(r, "identity", identity_audit()) {
        for (name, v) in four(&a) {
            r.check(v <= NULL_ENTROPY, || format!("identity {name} = {v}"));
        }
    }
    if let Some(a) = audit_or_violation(r, "linear", linear_audit()) {
        for (name, v) in [four(&a)[0], four(&a)[1], four(&a)[3]] {
            r.check(v <= 0.1, || format!("linear {name} = {v} above 0.1"));
        }
        let euclid = a.comparisons[0].headline;
        r.check((lo..=hi).contains(&euclid), || format!("linear Euclidean h_B = {euclid} outside [{lo}, {hi}]"));
        r.check(a.minimal == Some(true), || "linear: compactified h^d does not match h_top".into());
    }
    Ok(())
}
