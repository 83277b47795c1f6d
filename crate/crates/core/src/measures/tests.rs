use proptest::prelude::*;
use std::f64::consts::LN_2;

use super::*;
use crate::covers::{iterate_cover, join, min_subcover_cardinality, CoverElement, Interval, IntervalSet};
use crate::sample::WitnessSample;
use crate::systems::Space;

fn arcs(cuts: &[f64]) -> Cover {
    // half-open arcs between consecutive cuts of [0, 1)
    let mut ends = vec![0.0];
    ends.extend(cuts.iter().copied().filter(|&c| c > 0.0 && c < 1.0));
    ends.push(1.0);
    ends.dedup();
    let elements = ends
        .windows(2)
        .map(|w| CoverElement::intervals(IntervalSet::circle([Interval::half_open(w[0], w[1])]).unwrap()))
        .collect();
    Cover::partition(Space::Circle, elements)
}

fn circle_measure(atoms: &[(u32, f64)], total: f64) -> FiniteMeasure {
    let sum: f64 = atoms.iter().map(|a| a.1).sum();
    FiniteMeasure::new(atoms.iter().map(|&(k, w)| (Point::circle(k as f64 / 64.0), total * w / sum))).unwrap()
}

#[test]
fn partition_entropy_examples() {
    let halves = Cover::circle_arcs(2);
    let dirac = FiniteMeasure::dirac(Point::circle(0.3));
    assert_eq!(partition_entropy(&dirac, &halves).unwrap(), 0.0);
    let even = FiniteMeasure::new([(Point::circle(0.1), 0.5), (Point::circle(0.6), 0.5)]).unwrap();
    assert!((partition_entropy(&even, &halves).unwrap() - LN_2).abs() < 1e-15);
    let three = FiniteMeasure::new([
        (Point::circle(0.1), 0.5),
        (Point::circle(0.3), 0.25),
        (Point::circle(0.6), 0.25),
    ])
    .unwrap();
    let quarters = Cover::circle_arcs(4);
    assert!((partition_entropy(&three, &quarters).unwrap() - 1.5 * LN_2).abs() < 1e-15);
}

#[test]
fn uncovered_atom() {
    let left = Cover::partition(
        Space::Circle,
        vec![CoverElement::intervals(IntervalSet::circle([Interval::half_open(0.0, 0.5)]).unwrap())],
    );
    let mu = FiniteMeasure::dirac(Point::circle(0.75));
    let err = partition_entropy(&mu, &left).unwrap_err();
    assert!(err.to_string().starts_with("partition does not cover support"));
}

#[test]
fn construction_merges_and_validates() {
    let mu = FiniteMeasure::new([(Point::circle(0.25), 0.25), (Point::circle(0.25 + 1e-14), 0.25)]).unwrap();
    assert_eq!(mu.len(), 1);
    assert_eq!(mu.total(), 0.5);
    let wrapped = FiniteMeasure::new([(Point::circle(0.0), 0.5), (Point::circle(1.0 - 1e-13), 0.5)]).unwrap();
    assert_eq!(wrapped.len(), 1);
    assert!(matches!(FiniteMeasure::new([(Point::circle(0.1), 0.7), (Point::circle(0.2), 0.7)]), Err(Error::NotProbability(_))));
    assert!(FiniteMeasure::new([(Point::circle(0.1), -0.1)]).is_err());
    let json = serde_json::to_string(&mu).unwrap();
    assert_eq!(serde_json::from_str::<FiniteMeasure>(&json).unwrap(), mu);
}

#[test]
fn conditional_examples() {
    let pts: Vec<Point> = [0.125, 0.375, 0.625, 0.875].iter().map(|&x| Point::circle(x)).collect();
    let mu = FiniteMeasure::uniform(&pts).unwrap();
    let halves = Cover::circle_arcs(2);
    let odd = arcs(&[0.25, 0.5, 0.75]);
    // cells {0,1}{2,3} against {0,2}{1,3}
    let interleaved = Cover::partition(
        Space::Circle,
        vec![
            CoverElement::intervals(
                IntervalSet::circle([Interval::half_open(0.0, 0.25), Interval::half_open(0.5, 0.75)]).unwrap(),
            ),
            CoverElement::intervals(
                IntervalSet::circle([Interval::half_open(0.25, 0.5), Interval::half_open(0.75, 1.0)]).unwrap(),
            ),
        ],
    );
    assert_eq!(conditional_entropy(&mu, &halves, &halves).unwrap(), 0.0);
    let trivial = Cover::trivial(Space::Circle);
    let h = partition_entropy(&mu, &odd).unwrap();
    assert!((conditional_entropy(&mu, &odd, &trivial).unwrap() - h).abs() < 1e-15);
    assert!((conditional_entropy(&mu, &interleaved, &halves).unwrap() - LN_2).abs() < 1e-15);
    let half = mu.scaled(0.5).unwrap();
    assert!(matches!(conditional_entropy(&half, &halves, &halves), Err(Error::NotProbability(_))));
}

#[test]
fn pushforward_examples() {
    let halves = Cover::circle_arcs(2);
    let dbl = DynamicalSystem::doubling();
    let mu = FiniteMeasure::new([(Point::circle(0.1), 0.25), (Point::circle(0.6), 0.75)]).unwrap();
    assert_eq!(pushforward_mass(&mu, &dbl, &halves, 0).unwrap(), cell_masses(&mu, &halves).unwrap());
    let id = DynamicalSystem::identity(Space::Circle);
    assert_eq!(pushforward_mass(&mu, &id, &halves, 5).unwrap(), vec![0.25, 0.75]);
    let d = FiniteMeasure::dirac(Point::circle(0.3));
    assert_eq!(pushforward_mass(&d, &dbl, &halves, 1).unwrap(), vec![0.0, 1.0]);
}

#[test]
fn invariance_defect_examples() {
    let halves = Cover::circle_arcs(2);
    let dbl = DynamicalSystem::doubling();
    let mu = FiniteMeasure::new([(Point::circle(0.1), 0.25), (Point::circle(0.6), 0.75)]).unwrap();
    assert_eq!(invariance_defect(&mu, &DynamicalSystem::identity(Space::Circle), &halves).unwrap(), 0.0);
    assert_eq!(invariance_defect(&FiniteMeasure::dirac(Point::circle(0.0)), &dbl, &halves).unwrap(), 0.0);
    // 0.1, 0.2, 0.3 all lie left; their images 0.2, 0.4, 0.6 put a third on the right
    let pts: Vec<Point> = [0.1, 0.2, 0.3].iter().map(|&x| Point::circle(x)).collect();
    let sigma = FiniteMeasure::uniform(&pts).unwrap();
    assert!((invariance_defect(&sigma, &dbl, &halves).unwrap() - 1.0 / 3.0).abs() < 1e-15);
}

#[test]
fn ks_examples() {
    let dbl = DynamicalSystem::doubling();
    let fixed = ks_entropy_over_partition(&FiniteMeasure::dirac(Point::circle(0.0)), &dbl, &Cover::circle_arcs(2), 6, 1e-9)
        .unwrap();
    assert!(fixed.h.iter().all(|&h| h == 0.0));
    assert!(!fixed.defect_warning);

    let full = DynamicalSystem::shift(Sft::full(2));
    let words = WitnessSample::words(&Sft::full(2), 12).unwrap();
    let bernoulli = FiniteMeasure::uniform(words.points()).unwrap();
    let cyl = Cover::cylinders(&full, 1).unwrap();
    let ks = ks_entropy_over_partition(&bernoulli, &full, &cyl, 8, 1e-9).unwrap();
    for &h in &ks.h {
        assert!((h - LN_2).abs() < 1e-12, "{h}");
    }
    assert!((ks.series.rate() - LN_2).abs() < 1e-12);
}

#[test]
fn parry_measure_entropy() {
    let golden = Sft::golden_mean();
    let sys = DynamicalSystem::shift(golden.clone());
    let mu = parry_word_measure(&golden, 14).unwrap();
    assert!(mu.is_probability());
    // closed-form Parry chain of the golden-mean shift
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let p00 = 1.0 / phi;
    let p01 = 1.0 / (phi * phi);
    let pi0 = phi * phi / (1.0 + phi * phi);
    let markov = -pi0 * (p00 * p00.ln() + p01 * p01.ln());
    assert!((markov - phi.ln()).abs() < 1e-12);

    let cyl = Cover::cylinders(&sys, 1).unwrap();
    let ks = ks_entropy_over_partition(&mu, &sys, &cyl, 8, 1e-9).unwrap();
    assert!(ks.defect < 1e-12, "Parry weights are shift invariant");
    assert!((ks.h[7] - phi.ln()).abs() < 0.02);
    assert!((ks.series.rate() - markov).abs() < 1e-9);
}

#[test]
fn empirical_examples() {
    let dbl = DynamicalSystem::doubling();
    let e = vec![Point::circle(0.25), Point::circle(0.5)];
    let (s1, m1) = empirical_measures(&e, &dbl, 1).unwrap();
    assert_eq!(s1, m1);
    let (_, m5) = empirical_measures(&[Point::circle(0.0)], &dbl, 5).unwrap();
    assert_eq!(m5, FiniteMeasure::dirac(Point::circle(0.0)));
    let (_, m3) = empirical_measures(&[Point::circle(0.1)], &dbl, 3).unwrap();
    let got: Vec<(f64, f64)> = m3.atoms().iter().map(|a| (a.point.real_coords().unwrap()[0], a.weight)).collect();
    assert_eq!(got.len(), 3);
    for ((x, w), want) in got.iter().zip([0.1, 0.2, 0.4]) {
        assert!((x - want).abs() < 1e-15);
        assert!((w - 1.0 / 3.0).abs() < 1e-15);
    }
    assert!((m3.total() - 1.0).abs() < 1e-15);
}

#[test]
fn chain_trivial_and_preconditions() {
    let dbl = DynamicalSystem::doubling();
    let quarters = Cover::circle_arcs(4);
    let single = vec![Point::circle(0.3)];
    let r = misiurewicz_chain_check(&single, &dbl, &Metric::CircleArc, &quarters, 6, 2, 0.25).unwrap();
    assert!(r.pass);
    assert_eq!(r.h_sigma_n, 0.0);
    assert!(misiurewicz_chain_check(&single, &dbl, &Metric::CircleArc, &quarters, 6, 1, 0.25).is_err());
    assert!(misiurewicz_chain_check(&single, &dbl, &Metric::CircleArc, &quarters, 6, 6, 0.25).is_err());
    let halves = Cover::circle_arcs(2);
    let err = misiurewicz_chain_check(&[Point::circle(0.0), Point::circle(0.3)], &dbl, &Metric::CircleArc, &halves, 4, 2, 0.25)
        .unwrap_err();
    assert!(matches!(err, Error::PartitionTooCoarse { .. }), "{err}");
    let close = vec![Point::circle(0.0), Point::circle(0.01)];
    assert!(misiurewicz_chain_check(&close, &dbl, &Metric::CircleArc, &quarters, 3, 2, 0.25).is_err());
}

#[test]
fn ks_of_power_matches_longer_itineraries() {
    // (1/n) H_μ((P^k)^n under T^k) = (1/(kn)) k H_μ(P^{kn} under T)
    let dbl = DynamicalSystem::doubling();
    let base = WitnessSample::random_circle(40, 5).unwrap();
    let mu = FiniteMeasure::uniform(base.points()).unwrap();
    let p = Cover::circle_arcs(2);
    for k in 2..=3 {
        let tk = dbl.power(k).unwrap();
        let witnesses = base.with_orbits(&dbl, 4 * k).unwrap();
        let pk = iterate_cover(&p, &dbl, k, witnesses.points()).unwrap();
        for n in 1..=4 {
            let lhs = iterated_partition_entropy(&mu, &tk, &pk, n).unwrap() / n as f64;
            let rhs = k as f64 * iterated_partition_entropy(&mu, &dbl, &p, k * n).unwrap() / (k * n) as f64;
            assert!((lhs - rhs).abs() < 1e-12, "k {k} n {n}: {lhs} vs {rhs}");
        }
    }
}

fn atoms_strategy() -> impl Strategy<Value = Vec<(u32, f64)>> {
    prop::collection::vec((0u32..64, 0.01f64..1.0), 1..24)
}

fn cuts_strategy() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec((1u32..64).prop_map(|k| k as f64 / 64.0), 0..6).prop_map(|mut v| {
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn join_is_subadditive(atoms in atoms_strategy(), c in cuts_strategy(), d in cuts_strategy()) {
        let mu = circle_measure(&atoms, 1.0);
        let (pc, pd) = (arcs(&c), arcs(&d));
        let joined = join(&pc, &pd, &[]).unwrap();
        let lhs = partition_entropy(&mu, &joined).unwrap();
        let rhs = partition_entropy(&mu, &pc).unwrap() + partition_entropy(&mu, &pd).unwrap();
        prop_assert!(lhs <= rhs + EXACT_TOLERANCE);
    }

    #[test]
    fn entropy_below_log_cell_count(atoms in atoms_strategy(), c in cuts_strategy()) {
        let mu = circle_measure(&atoms, 1.0);
        let p = arcs(&c);
        let support: Vec<Point> = mu.atoms().iter().map(|a| a.point.clone()).collect();
        let n = min_subcover_cardinality(&p, &support).unwrap().count;
        prop_assert!(partition_entropy(&mu, &p).unwrap() <= (n as f64).ln() + EXACT_TOLERANCE);
    }

    #[test]
    fn entropy_is_concave(g in atoms_strategy(), v in atoms_strategy(), c in cuts_strategy(), alpha in 0.0f64..=1.0) {
        let (gamma, nu) = (circle_measure(&g, 1.0), circle_measure(&v, 1.0));
        let p = arcs(&c);
        let mix = FiniteMeasure::combine(alpha, &gamma, 1.0 - alpha, &nu).unwrap();
        let lhs = alpha * partition_entropy(&gamma, &p).unwrap() + (1.0 - alpha) * partition_entropy(&nu, &p).unwrap();
        prop_assert!(lhs <= partition_entropy(&mix, &p).unwrap() + EXACT_TOLERANCE);
    }

    #[test]
    fn splitting_by_a_set_does_not_lower_entropy(
        atoms in atoms_strategy(), c in cuts_strategy(), total in 0.05f64..=1.0, lo in 0u32..64, len in 0u32..64,
    ) {
        let mu = circle_measure(&atoms, total);
        let p = arcs(&c);
        let y = IntervalSet::circle([Interval::half_open(lo as f64 / 64.0, (lo + len) as f64 / 64.0)]).unwrap();
        let inside = mu.restricted(|q| y.contains(q.real_coords().unwrap()[0]));
        let outside = mu.restricted(|q| !y.contains(q.real_coords().unwrap()[0]));
        let lhs = partition_entropy(&mu, &p).unwrap();
        let rhs = partition_entropy(&inside, &p).unwrap() + partition_entropy(&outside, &p).unwrap();
        prop_assert!(lhs <= rhs + EXACT_TOLERANCE);
    }

    #[test]
    fn scaling_identity(atoms in atoms_strategy(), c in cuts_strategy(), total in 0.05f64..=1.0, alpha in 0.01f64..=1.0, n in 1usize..6) {
        let mu = circle_measure(&atoms, total);
        let scaled = mu.scaled(alpha).unwrap();
        let p = arcs(&c);
        let dbl = DynamicalSystem::doubling();
        let lhs = iterated_partition_entropy(&scaled, &dbl, &p, n).unwrap() / n as f64;
        let rhs = alpha * iterated_partition_entropy(&mu, &dbl, &p, n).unwrap() / n as f64
            + alpha / n as f64 * mu.total() * (1.0 / alpha).ln();
        prop_assert!((lhs - rhs).abs() <= EXACT_TOLERANCE, "{} vs {}", lhs, rhs);
    }
}
