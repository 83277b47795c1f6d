//! Distances on state spaces, the dynamical metric `d_n`, and the metric
//! induced by the one-point compactification.
//!
//! Every metric is evaluated through an *embedding* of points into flat
//! coordinates plus a [`Kernel`] acting on two embeddings. The pointwise
//! [`distance`] and the cached [`OrbitTable`] share that code path, so table
//! lookups agree bit-for-bit with direct evaluation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::systems::{DynamicalSystem, Point, Space};

/// Orbit points whose Euclidean norm exceeds this are flagged as escaping.
pub const ESCAPE_NORM: f64 = 1e12;

/// Analytic diameter of the compactified metrics.
pub const COMPACTIFIED_DIAMETER: f64 = 2.0;

fn default_lambda() -> f64 {
    0.5
}

/// A distance on one of the supported spaces.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Metric {
    Euclidean,
    /// Shortest arc length on the unit-length circle.
    CircleArc,
    /// Maximum of per-coordinate arc distances.
    TorusMax,
    /// `λ^k` where `k` is the first index at which two words disagree.
    Symbolic {
        #[serde(default = "default_lambda")]
        lambda: f64,
    },
    /// Chordal distance after embedding into a sphere; extends to the
    /// point at infinity on `R^d`.
    Compactified,
}

impl Metric {
    pub fn symbolic() -> Self {
        Metric::Symbolic { lambda: 0.5 }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Metric::Euclidean => "euclidean",
            Metric::CircleArc => "circle_arc",
            Metric::TorusMax => "torus_max",
            Metric::Symbolic { .. } => "symbolic",
            Metric::Compactified => "compactified",
        }
    }

    /// Whether the metric is bounded with the given space's topology.
    pub fn is_bounded_on(&self, space: Space) -> bool {
        space.is_compact() || matches!(self, Metric::Compactified)
    }

    fn kernel_for(&self, space: Space) -> Result<Kernel> {
        let wrong = || Error::WrongSpace {
            expected: format!("a space carrying the {} metric", self.name()),
            found: space.to_string(),
        };
        match (self, space) {
            (Metric::Euclidean, Space::Euclidean { .. }) => Ok(Kernel::L2),
            (Metric::CircleArc, Space::Circle) => Ok(Kernel::ArcMax),
            (Metric::TorusMax, Space::Torus { .. }) => Ok(Kernel::ArcMax),
            (Metric::Symbolic { lambda }, Space::Word { .. }) => symbolic_kernel(*lambda),
            // words are already compact; the compactified metric is the default symbolic one
            (Metric::Compactified, Space::Word { .. }) => symbolic_kernel(0.5),
            (Metric::Compactified, Space::Euclidean { .. }) => Ok(Kernel::L2),
            (Metric::Compactified, Space::Circle) => Ok(Kernel::L2),
            (Metric::Compactified, Space::Torus { .. }) => Ok(Kernel::PairMax),
            _ => Err(wrong()),
        }
    }

    fn embed(&self, p: &Point) -> Vec<f64> {
        match (self, p) {
            (Metric::Compactified, Point::Euclidean { coords }) => stereographic_lift(coords),
            (Metric::Compactified, Point::Circle { angle }) => circle_lift(*angle).to_vec(),
            (Metric::Compactified, Point::Torus { coords }) => {
                coords.iter().flat_map(|&c| circle_lift(c)).collect()
            }
            _ => p.real_coords().map(<[f64]>::to_vec).unwrap_or_default(),
        }
    }
}

fn symbolic_kernel(lambda: f64) -> Result<Kernel> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::InvalidParameter(format!("symbolic base {lambda} outside (0, 1)")));
    }
    Ok(Kernel::Symbolic { lambda })
}

/// Pairwise distance on embedded coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Kernel {
    L2,
    ArcMax,
    /// Maximum of Euclidean norms over consecutive coordinate pairs.
    PairMax,
    Symbolic { lambda: f64 },
}

impl Kernel {
    #[inline]
    pub fn real(&self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Kernel::L2 => a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt(),
            Kernel::ArcMax => a
                .iter()
                .zip(b)
                .map(|(x, y)| arc(*x, *y))
                .fold(0.0, f64::max),
            Kernel::PairMax => a
                .chunks_exact(2)
                .zip(b.chunks_exact(2))
                .map(|(p, q)| ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt())
                .fold(0.0, f64::max),
            Kernel::Symbolic { .. } => unreachable!("symbolic kernel on real coordinates"),
        }
    }

    #[inline]
    pub fn symbolic(lambda: f64, u: &[u16], v: &[u16]) -> f64 {
        match u.iter().zip(v).position(|(a, b)| a != b) {
            Some(k) => lambda.powi(k as i32),
            None => 0.0,
        }
    }

    /// Whether the first embedded coordinates wrap around at 1.
    pub fn is_periodic(&self) -> bool {
        matches!(self, Kernel::ArcMax)
    }
}

#[inline]
fn arc(x: f64, y: f64) -> f64 {
    let d = (x - y).abs();
    d.min(1.0 - d)
}

fn norm(x: &[f64]) -> f64 {
    let m = x.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    if m == 0.0 || !m.is_finite() {
        return m;
    }
    m * x.iter().map(|v| (v / m) * (v / m)).sum::<f64>().sqrt()
}

/// Inverse stereographic image of `x ∈ R^d` on the unit sphere `S^d ⊂ R^{d+1}`.
///
/// The origin maps to the south pole and non-finite points to the north pole
/// (the point at infinity).
pub fn stereographic_lift(x: &[f64]) -> Vec<f64> {
    let d = x.len();
    let mut out = vec![0.0; d + 1];
    let r = norm(x);
    if !r.is_finite() || x.iter().any(|v| v.is_nan()) {
        out[d] = 1.0;
        return out;
    }
    if r <= 1.0 {
        let r2 = r * r;
        let s = 2.0 / (1.0 + r2);
        for (o, v) in out.iter_mut().zip(x) {
            *o = v * s;
        }
        out[d] = (r2 - 1.0) / (r2 + 1.0);
    } else {
        let inv = 1.0 / r;
        for (o, v) in out.iter_mut().zip(x) {
            *o = 2.0 * (v / r) / (r + inv);
        }
        let inv2 = inv * inv;
        out[d] = (1.0 - inv2) / (1.0 + inv2);
    }
    out
}

fn circle_lift(angle: f64) -> [f64; 2] {
    let t = std::f64::consts::TAU * angle;
    [t.cos(), t.sin()]
}

/// `d(x, y)` under `metric`.
pub fn distance(metric: &Metric, x: &Point, y: &Point) -> Result<f64> {
    let space = x.space();
    space.check(y)?;
    let kernel = metric.kernel_for(space)?;
    Ok(match kernel {
        Kernel::Symbolic { lambda } => {
            Kernel::symbolic(lambda, x.symbols().unwrap(), y.symbols().unwrap())
        }
        k => k.real(&metric.embed(x), &metric.embed(y)),
    })
}

/// Chordal distance between two points of `R^d` after inverse stereographic
/// projection onto `S^d`.
pub fn compactified_distance(x: &Point, y: &Point) -> Result<f64> {
    match (x, y) {
        (Point::Euclidean { coords: a }, Point::Euclidean { coords: b }) => {
            if a.len() != b.len() {
                return Err(Error::DimensionMismatch(a.len(), b.len()));
            }
            Ok(Kernel::L2.real(&stereographic_lift(a), &stereographic_lift(b)))
        }
        _ => Err(Error::WrongSpace {
            expected: "R^d".into(),
            found: format!("{} / {}", x.space(), y.space()),
        }),
    }
}

/// `d_n(x, y) = max_{0 ≤ j < n} d(T^j x, T^j y)`.
pub fn iterated_distance(
    metric: &Metric,
    sys: &DynamicalSystem,
    n: usize,
    x: &Point,
    y: &Point,
) -> Result<f64> {
    let ox = sys.orbit(x, n)?;
    let oy = sys.orbit(y, n)?;
    let mut best = 0.0f64;
    for (a, b) in ox.iter().zip(&oy) {
        best = best.max(distance(metric, a, b)?);
    }
    Ok(best)
}

/// Whether `q` lies in the open `d_n`-ball of radius `eps` around `center`.
pub fn dn_ball_contains(
    metric: &Metric,
    sys: &DynamicalSystem,
    n: usize,
    center: &Point,
    eps: f64,
    q: &Point,
) -> Result<bool> {
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!("ball radius {eps} must be positive")));
    }
    Ok(iterated_distance(metric, sys, n, center, q)? < eps)
}

/// Cached orbits of a point sample, embedded for one metric.
///
/// `d_n` queries become running maxima over the first `n` time slices of two
/// rows, with early exit as soon as a slice reaches the threshold.
#[derive(Clone, Debug)]
pub struct OrbitTable {
    kernel: Kernel,
    width: usize,
    horizon: usize,
    len: usize,
    data: Vec<f64>,
    words: Vec<Vec<u16>>,
    escaped: Vec<bool>,
}

impl OrbitTable {
    pub fn build(
        metric: &Metric,
        sys: &DynamicalSystem,
        points: &[Point],
        horizon: usize,
    ) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::EmptyOrbit);
        }
        let space = sys.space();
        let kernel = metric.kernel_for(space)?;
        for p in points {
            space.check(p)?;
        }
        let compactified = matches!(metric, Metric::Compactified);
        let rows: Vec<Result<(Vec<Point>, bool)>> = points
            .par_iter()
            .map(|p| {
                let mut orbit = Vec::with_capacity(horizon);
                orbit.push(p.clone());
                let mut escaped = false;
                for step in 1..horizon {
                    match sys.apply(&orbit[step - 1]) {
                        Ok(next) => orbit.push(next),
                        Err(Error::Overflow { .. }) if compactified => {
                            let dim = p.real_coords().map_or(0, <[f64]>::len);
                            let infinity = Point::euclidean(vec![f64::INFINITY; dim]);
                            orbit.resize(horizon, infinity);
                            escaped = true;
                            break;
                        }
                        Err(Error::Overflow { .. }) => return Err(Error::Overflow { step }),
                        Err(e) => return Err(e),
                    }
                }
                if let Space::Euclidean { .. } = space {
                    escaped |= orbit
                        .iter()
                        .any(|q| norm(q.real_coords().unwrap()) > ESCAPE_NORM);
                }
                Ok((orbit, escaped))
            })
            .collect();

        let mut table = OrbitTable {
            kernel,
            width: 0,
            horizon,
            len: points.len(),
            data: Vec::new(),
            words: Vec::new(),
            escaped: Vec::with_capacity(points.len()),
        };
        for row in rows {
            let (orbit, escaped) = row?;
            table.escaped.push(escaped);
            for q in orbit {
                match kernel {
                    Kernel::Symbolic { .. } => table.words.push(q.symbols().unwrap().to_vec()),
                    _ => {
                        let e = metric.embed(&q);
                        table.width = e.len();
                        table.data.extend_from_slice(&e);
                    }
                }
            }
        }
        Ok(table)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn kernel(&self) -> Kernel {
        self.kernel
    }

    /// Embedded coordinates of `T^j x_i` (empty for symbolic tables).
    #[inline]
    pub fn coords(&self, i: usize, j: usize) -> &[f64] {
        let start = (i * self.horizon + j) * self.width;
        &self.data[start..start + self.width]
    }

    /// Symbols of `T^j x_i` (symbolic tables only).
    #[inline]
    pub fn word(&self, i: usize, j: usize) -> &[u16] {
        &self.words[i * self.horizon + j]
    }

    /// `d(T^j x_a, T^j x_b)`.
    #[inline]
    pub fn step_distance(&self, a: usize, b: usize, j: usize) -> f64 {
        match self.kernel {
            Kernel::Symbolic { lambda } => Kernel::symbolic(
                lambda,
                &self.words[a * self.horizon + j],
                &self.words[b * self.horizon + j],
            ),
            k => k.real(self.coords(a, j), self.coords(b, j)),
        }
    }

    /// `d_n(x_a, x_b)`.
    pub fn dn(&self, a: usize, b: usize, n: usize) -> f64 {
        (0..n.min(self.horizon))
            .map(|j| self.step_distance(a, b, j))
            .fold(0.0, f64::max)
    }

    /// Whether `d_n(x_a, x_b) < eps`.
    #[inline]
    pub fn within(&self, a: usize, b: usize, n: usize, eps: f64) -> bool {
        (0..n.min(self.horizon)).all(|j| self.step_distance(a, b, j) < eps)
    }

    pub fn escaped(&self) -> &[bool] {
        &self.escaped
    }

    pub fn escaped_count(&self) -> usize {
        self.escaped.iter().filter(|&&e| e).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::Sft;

    #[test]
    fn basic_distances() {
        let d = distance(&Metric::Euclidean, &Point::euclidean(vec![1.0]), &Point::euclidean(vec![4.0]));
        assert_eq!(d.unwrap(), 3.0);
        let d = distance(&Metric::CircleArc, &Point::circle(0.1), &Point::circle(0.9)).unwrap();
        assert!((d - 0.2).abs() < 1e-12);
        let u = Point::word(vec![0, 1, 0], 2).unwrap();
        let v = Point::word(vec![0, 1, 1], 2).unwrap();
        assert_eq!(distance(&Metric::symbolic(), &u, &v).unwrap(), 0.25);
        assert_eq!(distance(&Metric::symbolic(), &u, &u).unwrap(), 0.0);
    }

    #[test]
    fn wrong_space_distance() {
        let err = distance(&Metric::CircleArc, &Point::euclidean(vec![0.0]), &Point::euclidean(vec![1.0]));
        assert!(matches!(err, Err(Error::WrongSpace { .. })));
        let err = distance(&Metric::Euclidean, &Point::circle(0.0), &Point::euclidean(vec![1.0]));
        assert!(matches!(err, Err(Error::WrongSpace { .. })));
    }

    #[test]
    fn compactified_examples() {
        let x = Point::euclidean(vec![3.7]);
        assert_eq!(compactified_distance(&x, &x).unwrap(), 0.0);
        let far = compactified_distance(&Point::euclidean(vec![0.0]), &Point::euclidean(vec![1e9])).unwrap();
        // closed form 2t / sqrt(1 + t^2) at t = 1e9
        let t: f64 = 1e9;
        let closed = 2.0 * t / (1.0 + t * t).sqrt();
        assert!(far > 1.99);
        assert!((far - closed).abs() < 1e-9);
        let mut prev = 0.0;
        for t in [1.0, 10.0, 100.0, 1000.0] {
            let d = compactified_distance(&Point::euclidean(vec![0.0]), &Point::euclidean(vec![t])).unwrap();
            assert!(d >= prev);
            prev = d;
        }
        let err = compactified_distance(&Point::euclidean(vec![0.0]), &Point::euclidean(vec![0.0, 1.0]));
        assert_eq!(err, Err(Error::DimensionMismatch(1, 2)));
    }

    #[test]
    fn lift_lands_on_sphere() {
        for x in [vec![0.0, 0.0], vec![0.5, -2.0], vec![1e300, 1e300], vec![-7.0, 1e-9]] {
            let s = stereographic_lift(&x);
            let r: f64 = s.iter().map(|v| v * v).sum();
            assert!((r - 1.0).abs() < 1e-12, "{x:?} -> {s:?}");
        }
        assert_eq!(stereographic_lift(&[f64::INFINITY]), vec![0.0, 1.0]);
    }

    #[test]
    fn iterated_distance_examples() {
        let dbl = DynamicalSystem::doubling();
        let d = iterated_distance(&Metric::CircleArc, &dbl, 4, &Point::circle(0.0), &Point::circle(0.01)).unwrap();
        assert!((d - 0.08).abs() < 1e-12);
        let d1 = iterated_distance(&Metric::CircleArc, &dbl, 1, &Point::circle(0.2), &Point::circle(0.7)).unwrap();
        assert!((d1 - 0.5).abs() < 1e-12);
        let id = DynamicalSystem::identity(Space::Euclidean { dim: 2 });
        let (x, y) = (Point::euclidean(vec![0.0, 0.0]), Point::euclidean(vec![3.0, 4.0]));
        assert_eq!(iterated_distance(&Metric::Euclidean, &id, 7, &x, &y).unwrap(), 5.0);
        assert_eq!(
            iterated_distance(&Metric::Euclidean, &id, 0, &x, &y),
            Err(Error::EmptyOrbit)
        );
    }

    #[test]
    fn ball_membership_is_strict() {
        let id = DynamicalSystem::identity(Space::Euclidean { dim: 1 });
        let c = Point::euclidean(vec![0.0]);
        assert!(dn_ball_contains(&Metric::Euclidean, &id, 1, &c, 1.0, &c).unwrap());
        assert!(!dn_ball_contains(&Metric::Euclidean, &id, 1, &c, 1.0, &Point::euclidean(vec![1.0])).unwrap());
        let dbl = DynamicalSystem::doubling();
        assert!(!dn_ball_contains(&Metric::CircleArc, &dbl, 4, &Point::circle(0.0), 0.1, &Point::circle(0.02)).unwrap());
        assert!(dn_ball_contains(&Metric::CircleArc, &dbl, 1, &Point::circle(0.0), 0.0, &Point::circle(0.0)).is_err());
    }

    #[test]
    fn table_agrees_with_direct_evaluation() {
        let sys = DynamicalSystem::torus_endomorphism(vec![vec![2, 1], vec![1, 1]]).unwrap();
        let pts: Vec<Point> = (0..12)
            .map(|i| Point::torus(vec![i as f64 * 0.0831, 1.0 - i as f64 * 0.057]))
            .collect();
        for metric in [Metric::TorusMax, Metric::Compactified] {
            let table = OrbitTable::build(&metric, &sys, &pts, 5).unwrap();
            for a in 0..pts.len() {
                for b in 0..pts.len() {
                    for n in 1..=5 {
                        let direct = iterated_distance(&metric, &sys, n, &pts[a], &pts[b]).unwrap();
                        assert_eq!(table.dn(a, b, n), direct);
                    }
                }
            }
        }
        let shift = DynamicalSystem::shift(Sft::golden_mean());
        let words: Vec<Point> = Sft::golden_mean()
            .enumerate_words(8)
            .into_iter()
            .map(|w| Point::word(w, 2).unwrap())
            .collect();
        let table = OrbitTable::build(&Metric::symbolic(), &shift, &words, 4).unwrap();
        for a in 0..words.len() {
            for b in 0..words.len() {
                let direct = iterated_distance(&Metric::symbolic(), &shift, 4, &words[a], &words[b]).unwrap();
                assert_eq!(table.dn(a, b, 4), direct);
            }
        }
    }

    #[test]
    fn escaping_orbits_are_flagged_and_tamed() {
        let sys = DynamicalSystem::linear(vec![vec![1e10]]).unwrap();
        let pts = vec![Point::euclidean(vec![0.0]), Point::euclidean(vec![1.0])];
        let t = OrbitTable::build(&Metric::Compactified, &sys, &pts, 40).unwrap();
        assert_eq!(t.escaped(), &[false, true]);
        assert!(t.dn(0, 1, 40) <= COMPACTIFIED_DIAMETER);
        assert!(matches!(
            OrbitTable::build(&Metric::Euclidean, &sys, &pts, 40),
            Err(Error::Overflow { .. })
        ));
    }

    #[test]
    fn metric_descriptors() {
        let m: Metric = serde_json::from_str(r#"{"kind":"symbolic","lambda":0.5}"#).unwrap();
        assert_eq!(m, Metric::symbolic());
        let m: Metric = serde_json::from_str(r#"{"kind":"symbolic"}"#).unwrap();
        assert_eq!(m, Metric::symbolic());
        let m: Metric = serde_json::from_str(r#"{"kind":"compactified"}"#).unwrap();
        assert_eq!(m, Metric::Compactified);
        assert!(serde_json::from_str::<Metric>(r#"{"kind":"manhattan"}"#).is_err());
    }
}
