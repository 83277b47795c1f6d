//! Invariants of metrics, covers and estimators on random and constructed
//! instances.

use entrolab_core::covers::{join, refines};
use entrolab_core::estimators::{
    d_entropy_estimate, greedy_maximal_separated, sandwich_check, separated_count_grid, spanning_count,
    topological_entropy_estimate,
};
use entrolab_core::measures::misiurewicz_chain_check;
use entrolab_core::*;
use proptest::prelude::*;

const GOLDEN_ROTATION: f64 = 0.381_966_011_250_105_1;

fn circle_system(kind: u8) -> DynamicalSystem {
    match kind % 3 {
        0 => DynamicalSystem::identity(Space::Circle),
        1 => DynamicalSystem::rotation(GOLDEN_ROTATION).unwrap(),
        _ => DynamicalSystem::doubling(),
    }
}

fn image_sample(sample: &WitnessSample, sys: &DynamicalSystem, q: usize) -> Vec<Point> {
    sample.points().iter().map(|p| sys.orbit(p, q + 1).unwrap().pop().unwrap()).collect()
}

fn arc_partition(cuts: &[u32]) -> Cover {
    let mut c: Vec<f64> = cuts.iter().map(|&k| k as f64 / 64.0).collect();
    c.sort_by(f64::total_cmp);
    c.dedup();
    if c.is_empty() {
        return Cover::trivial(Space::Circle);
    }
    let mut elements = Vec::with_capacity(c.len());
    for (i, &lo) in c.iter().enumerate() {
        let hi = if i + 1 < c.len() { c[i + 1] } else { c[0] + 1.0 };
        let arc = if hi - lo >= 1.0 { IntervalSet::whole(covers::Domain::Circle) } else {
            IntervalSet::circle([Interval::half_open(lo, hi)]).unwrap()
        };
        elements.push(CoverElement::intervals(arc));
    }
    Cover::partition(Space::Circle, elements)
}

fn assert_metric_axioms(metric: &Metric, x: &Point, y: &Point, z: &Point) {
    let d = |a: &Point, b: &Point| distance(metric, a, b).unwrap();
    assert_eq!(d(x, x), 0.0);
    assert!(d(x, y) >= 0.0);
    assert_eq!(d(x, y), d(y, x));
    assert!(d(x, z) <= d(x, y) + d(y, z) + 1e-12, "{metric:?}: {x} {y} {z}");
}

fn unit() -> impl Strategy<Value = f64> {
    0.0f64..1.0
}

fn real() -> impl Strategy<Value = f64> {
    -50.0f64..50.0
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn metrics_satisfy_the_axioms(
        c in prop::array::uniform3(unit()),
        t in prop::array::uniform6(unit()),
        e in prop::array::uniform6(real()),
        w in prop::array::uniform3(prop::collection::vec(0u16..3, 6)),
    ) {
        let circle: Vec<Point> = c.iter().map(|&a| Point::circle(a)).collect();
        let torus: Vec<Point> = t.chunks(2).map(|p| Point::torus(p.to_vec())).collect();
        let plane: Vec<Point> = e.chunks(2).map(|p| Point::euclidean(p.to_vec())).collect();
        let words: Vec<Point> = w.iter().map(|s| Point::word(s.clone(), 3).unwrap()).collect();
        for (metric, pts) in [
            (Metric::CircleArc, &circle),
            (Metric::Compactified, &circle),
            (Metric::TorusMax, &torus),
            (Metric::Compactified, &torus),
            (Metric::Euclidean, &plane),
            (Metric::Compactified, &plane),
            (Metric::symbolic(), &words),
        ] {
            assert_metric_axioms(&metric, &pts[0], &pts[1], &pts[2]);
        }
    }

    #[test]
    fn iterated_distance_grows_with_n(a in unit(), b in unit(), kind in 0u8..3) {
        let sys = circle_system(kind);
        let (x, y) = (Point::circle(a), Point::circle(b));
        let mut last = distance(&Metric::CircleArc, &x, &y).unwrap();
        for n in 1..=8 {
            let d = iterated_distance(&Metric::CircleArc, &sys, n, &x, &y).unwrap();
            prop_assert!(d >= last);
            last = d;
        }
    }

    #[test]
    fn sandwich_holds_on_random_samples(seed in 0u64..10_000, kind in 0u8..3, k in 1i32..=5, n in 1usize..=8) {
        let sample = WitnessSample::random_circle(60, seed).unwrap();
        let r = sandwich_check(&sample, &Metric::CircleArc, &circle_system(kind), n, 0.5f64.powi(k)).unwrap();
        prop_assert!(r.holds, "{:?}", r);
    }

    #[test]
    fn greedy_sets_are_separated_and_maximal(seed in 0u64..10_000, kind in 0u8..3, k in 1i32..=5, n in 1usize..=6) {
        let sys = circle_system(kind);
        let eps = 0.5f64.powi(k);
        let sample = WitnessSample::random_circle(80, seed).unwrap();
        let e = greedy_maximal_separated(&sample, &Metric::CircleArc, &sys, n, eps).unwrap();
        for (i, x) in e.iter().enumerate() {
            for y in &e[i + 1..] {
                prop_assert!(iterated_distance(&Metric::CircleArc, &sys, n, x, y).unwrap() >= eps);
            }
        }
        for p in sample.points() {
            prop_assert!(e.iter().any(|x| iterated_distance(&Metric::CircleArc, &sys, n, x, p).unwrap() < eps));
        }
    }

    #[test]
    fn separated_counts_are_monotone(seed in 0u64..10_000, kind in 0u8..3) {
        let sample = WitnessSample::random_circle(120, seed).unwrap();
        let table = OrbitTable::build(&Metric::CircleArc, &circle_system(kind), sample.points(), 8).unwrap();
        let eps = [0.5, 0.25, 0.125, 0.0625, 0.03125];
        let (_, best) = separated_count_grid(&table, &eps, 8).unwrap();
        for row in &best {
            prop_assert!(row.windows(2).all(|w| w[0] <= w[1]));
        }
        for pair in best.windows(2) {
            prop_assert!(pair[0].iter().zip(&pair[1]).all(|(coarse, fine)| coarse <= fine));
        }
    }

    #[test]
    fn spanning_counts_are_antitone_in_epsilon(seed in 0u64..10_000, kind in 0u8..3, n in 1usize..=6) {
        let sample = WitnessSample::random_circle(60, seed).unwrap();
        let table = OrbitTable::build(&Metric::CircleArc, &circle_system(kind), sample.points(), n).unwrap();
        let counts: Vec<usize> =
            (1..=5).map(|k| spanning_count(&table, n, 0.5f64.powi(k)).unwrap().count).collect();
        prop_assert!(counts.windows(2).all(|w| w[0] <= w[1]), "{:?}", counts);
    }

    /// `N_Y(B_{d_n}(ε)) ≤ N_Y(B_{d_q}(ε/2)) · N_{T^q Y}(B_{d_{n-q}}(ε/2))`:
    /// points of `Y` sharing a `d_q`-ball and a pulled-back `d_{n−q}`-ball of
    /// radius `ε/2` lie in one `d_n`-ball of radius `ε`.
    #[test]
    fn spanning_counts_submultiply_at_half_radius(seed in 0u64..10_000, kind in 0u8..3, k in 1i32..=4) {
        let sys = circle_system(kind);
        let eps = 0.5f64.powi(k);
        let sample = WitnessSample::random_circle(50, seed).unwrap();
        let table = OrbitTable::build(&Metric::CircleArc, &sys, sample.points(), 8).unwrap();
        for n in 2..=8 {
            let whole = spanning_count(&table, n, eps).unwrap().count;
            for q in 1..n {
                let head = spanning_count(&table, q, eps / 2.0).unwrap().count;
                let images = OrbitTable::build(&Metric::CircleArc, &sys, &image_sample(&sample, &sys, q), n - q).unwrap();
                let tail = spanning_count(&images, n - q, eps / 2.0).unwrap().count;
                prop_assert!(whole <= head * tail, "n {} q {}: {} > {} * {}", n, q, whole, head, tail);
            }
        }
    }
}

/// At equal radius the product bound can fail: on this sample nine
/// `d_3`-balls of radius ¼ are needed while `N_1 · N_2 = 2 · 4`.
#[test]
fn ball_covers_at_equal_radius_need_not_submultiply() {
    let dbl = DynamicalSystem::doubling();
    let sample = WitnessSample::random_circle(60, 1).unwrap();
    let table = OrbitTable::build(&Metric::CircleArc, &dbl, sample.points(), 3).unwrap();
    let n3 = spanning_count(&table, 3, 0.25).unwrap();
    let n1 = spanning_count(&table, 1, 0.25).unwrap();
    let n2 = spanning_count(&table, 2, 0.25).unwrap();
    assert!(n1.exact && n2.exact && n3.exact);
    assert_eq!((n1.count, n2.count, n3.count), (2, 4, 9));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// A join refines both factors, so its iterates need at least as many
    /// cells and its fitted rate is not smaller beyond fit noise.
    #[test]
    fn finer_partitions_have_larger_rates(
        b in prop::collection::vec(1u32..64, 1..4),
        c in prop::collection::vec(1u32..64, 1..4),
    ) {
        let dbl = DynamicalSystem::doubling();
        let grid = WitnessSample::circle_grid(1024).unwrap();
        let coarse = arc_partition(&b);
        let fine = join(&coarse, &arc_partition(&c), grid.points()).unwrap();
        prop_assert!(refines(&fine, &coarse, grid.points()).unwrap());
        let rc = topological_entropy_estimate(&dbl, &[coarse], &grid, 8, None).unwrap();
        let rf = topological_entropy_estimate(&dbl, &[fine], &grid, 8, None).unwrap();
        for (ec, ef) in rc.runs[0].series.entries.iter().zip(&rf.runs[0].series.entries) {
            prop_assert!(ec.value <= ef.value);
        }
        let tol = 0.05 + rc.headline_residual + rf.headline_residual;
        prop_assert!(rc.headline <= rf.headline + tol, "{} vs {}", rc.headline, rf.headline);
    }
}

#[test]
fn compactified_d_entropy_stays_below_euclidean() {
    let eps = [0.5, 0.25, 0.125, 0.0625];
    let line = WitnessSample::stereographic_grid(2048).unwrap();
    for matrix in [vec![vec![2.0]], vec![vec![-3.0]], vec![vec![0.5]]] {
        let sys = DynamicalSystem::linear(matrix.clone()).unwrap();
        let euclid = d_entropy_estimate(&sys, &Metric::Euclidean, &line, &eps, 10, None).unwrap();
        let compact = d_entropy_estimate(&sys, &Metric::Compactified, &line, &eps, 10, None).unwrap();
        let tol = 0.05 + euclid.headline_residual + compact.headline_residual;
        assert!(compact.headline <= euclid.headline + tol, "{matrix:?}: {} vs {}", compact.headline, euclid.headline);
    }
    let plane = WitnessSample::grid_box(&[-4.0, -4.0], &[4.0, 4.0], 48).unwrap();
    let sys = DynamicalSystem::linear(vec![vec![2.0, 1.0], vec![0.0, 0.5]]).unwrap();
    let euclid = d_entropy_estimate(&sys, &Metric::Euclidean, &plane, &eps, 8, None).unwrap();
    let compact = d_entropy_estimate(&sys, &Metric::Compactified, &plane, &eps, 8, None).unwrap();
    let tol = 0.05 + euclid.headline_residual + compact.headline_residual;
    assert!(compact.headline <= euclid.headline + tol, "{} vs {}", compact.headline, euclid.headline);
}

#[test]
fn misiurewicz_chain_on_doubling_and_full_shift() {
    let dbl = DynamicalSystem::doubling();
    let grid = WitnessSample::circle_grid(4096).unwrap();
    let quarters = Cover::circle_arcs(4);
    let full = Sft::full(2);
    let shift = DynamicalSystem::shift(full.clone());
    let cylinders = Cover::cylinders(&shift, 1).unwrap();
    for (n, q) in [(6, 2), (8, 2), (8, 4)] {
        let e = greedy_maximal_separated(&grid, &Metric::CircleArc, &dbl, n, 0.25).unwrap();
        assert_eq!(e.len(), 1 << (n + 1));
        let r = misiurewicz_chain_check(&e, &dbl, &Metric::CircleArc, &quarters, n, q, 0.25).unwrap();
        assert!(r.pass, "doubling {r:?}");

        let words = WitnessSample::words(&full, n + q).unwrap();
        let e = greedy_maximal_separated(&words, &Metric::symbolic(), &shift, n, 1.0).unwrap();
        assert_eq!(e.len(), 1 << n);
        let r = misiurewicz_chain_check(&e, &shift, &Metric::symbolic(), &cylinders, n, q, 1.0).unwrap();
        assert!(r.pass, "shift {r:?}");
        assert_eq!(r.h_sigma_n, r.log_separated);
    }
}
