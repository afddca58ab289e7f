//! Flat-torus geometry on T^d = R^d / Z^d for d in {2, 3, 4}.
//!
//! Points are stored by their coordinates in the fundamental domain [0,1)^d.
//! Displacements and tangent vectors live in the universal cover and are
//! plain `DVector<f64>` values measured in units of the torus side length.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Displacement in the universal cover R^d.
pub type LiftVector = DVector<f64>;

pub const MIN_DIM: usize = 2;
pub const MAX_DIM: usize = 4;

/// A point of T^d with every coordinate in [0, 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct TorusPoint {
    coords: Vec<f64>,
}

impl TorusPoint {
    /// Builds a point from coordinates that are already reduced into [0, 1).
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        check_dim(coords.len())?;
        if let Some(c) = coords.iter().find(|c| !(0.0..1.0).contains(*c)) {
            return invalid(format!("coordinate {c} outside [0,1)"));
        }
        Ok(Self { coords })
    }

    pub fn origin(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self {
            coords: vec![0.0; dim],
        })
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn to_vector(&self) -> LiftVector {
        DVector::from_column_slice(&self.coords)
    }

    /// `wrap(self + v)`.
    pub fn translate(&self, v: &LiftVector) -> Result<TorusPoint> {
        if v.len() != self.dim() {
            return invalid(format!(
                "dimension mismatch: point {} vs vector {}",
                self.dim(),
                v.len()
            ));
        }
        wrap_iter(self.coords.iter().zip(v.iter()).map(|(a, b)| a + b))
    }
}

impl TryFrom<Vec<f64>> for TorusPoint {
    type Error = crate::error::Error;

    fn try_from(coords: Vec<f64>) -> Result<Self> {
        TorusPoint::new(coords)
    }
}

impl From<TorusPoint> for Vec<f64> {
    fn from(p: TorusPoint) -> Vec<f64> {
        p.coords
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if !(MIN_DIM..=MAX_DIM).contains(&dim) {
        return invalid(format!("torus dimension {dim} not in {{2,3,4}}"));
    }
    Ok(())
}

#[inline]
pub(crate) fn reduce(c: f64) -> f64 {
    let r = c - c.floor();
    // c slightly below an integer can round up to exactly 1.0
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

fn wrap_iter(values: impl Iterator<Item = f64>) -> Result<TorusPoint> {
    let mut coords = Vec::with_capacity(MAX_DIM);
    for v in values {
        if !v.is_finite() {
            return invalid(format!("non-finite coordinate {v}"));
        }
        coords.push(reduce(v));
    }
    check_dim(coords.len())?;
    Ok(TorusPoint { coords })
}

/// Reduces each component mod 1 into [0, 1).
pub fn wrap(v: &[f64]) -> Result<TorusPoint> {
    wrap_iter(v.iter().copied())
}

pub fn wrap_vector(v: &LiftVector) -> Result<TorusPoint> {
    wrap_iter(v.iter().copied())
}

fn check_pair(p: &TorusPoint, q: &TorusPoint) -> Result<()> {
    if p.dim() != q.dim() {
        return invalid(format!("dimension mismatch: {} vs {}", p.dim(), q.dim()));
    }
    Ok(())
}

/// Shortest displacement from `p` to `q` in the cover.
///
/// The Euclidean norm separates over coordinates, so the minimum over the
/// 3^d neighbouring translates is attained coordinate by coordinate. An exact
/// tie (difference of 1/2) resolves to -1/2, which is the lexicographically
/// smallest minimizing translate.
pub fn log_map(p: &TorusPoint, q: &TorusPoint) -> Result<LiftVector> {
    check_pair(p, q)?;
    Ok(DVector::from_iterator(
        p.dim(),
        p.coords.iter().zip(&q.coords).map(|(a, b)| shortest(b - a)),
    ))
}

#[inline]
pub(crate) fn shortest(delta: f64) -> f64 {
    // delta in (-1, 1) because both coordinates lie in [0, 1)
    let candidates = [delta - 1.0, delta, delta + 1.0];
    let mut best = candidates[0];
    for &c in &candidates[1..] {
        if c.abs() < best.abs() {
            best = c;
        }
    }
    best
}

/// Flat distance on T^d.
pub fn dist(p: &TorusPoint, q: &TorusPoint) -> Result<f64> {
    Ok(log_map(p, q)?.norm())
}

/// Unit vector in the direction of `v`; `None` for (numerically) zero input.
pub fn normalized(v: &LiftVector) -> Option<LiftVector> {
    let n = v.norm();
    (n > 0.0 && n.is_finite()).then(|| v / n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pt(c: &[f64]) -> TorusPoint {
        TorusPoint::new(c.to_vec()).unwrap()
    }

    #[test]
    fn wrap_examples() {
        assert_eq!(wrap(&[1.25, -0.5]).unwrap().coords(), &[0.25, 0.5]);
        assert_eq!(wrap(&[0.0, 0.0, 0.0]).unwrap().coords(), &[0.0, 0.0, 0.0]);
        assert_eq!(
            wrap(&[2.0, 3.0, 4.0, 5.0]).unwrap().coords(),
            &[0.0, 0.0, 0.0, 0.0]
        );
    }

    #[test]
    fn wrap_rejects_non_finite_and_bad_dims() {
        assert!(wrap(&[f64::NAN, 0.0]).is_err());
        assert!(wrap(&[f64::INFINITY, 0.0]).is_err());
        assert!(wrap(&[0.5]).is_err());
        assert!(wrap(&[0.5; 5]).is_err());
    }

    #[test]
    fn wrap_tiny_negative_stays_in_range() {
        let p = wrap(&[-1e-18, 0.3]).unwrap();
        assert!(p.coords()[0] >= 0.0 && p.coords()[0] < 1.0);
    }

    #[test]
    fn dist_examples() {
        let d = dist(&pt(&[0.1, 0.1]), &pt(&[0.9, 0.9])).unwrap();
        assert!((d - 2f64.sqrt() * 0.2).abs() < 1e-12);
        assert_eq!(dist(&pt(&[0.3, 0.7]), &pt(&[0.3, 0.7])).unwrap(), 0.0);
        let d = dist(&pt(&[0.0, 0.0, 0.0]), &pt(&[0.5, 0.5, 0.5])).unwrap();
        assert!((d - 3f64.sqrt() / 2.0).abs() < 1e-12);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        assert!(dist(&pt(&[0.1, 0.1]), &pt(&[0.1, 0.1, 0.1])).is_err());
        assert!(log_map(&pt(&[0.1, 0.1]), &pt(&[0.1, 0.1, 0.1])).is_err());
    }

    #[test]
    fn log_map_examples() {
        let v = log_map(&pt(&[0.9, 0.0]), &pt(&[0.1, 0.0])).unwrap();
        assert!((v[0] - 0.2).abs() < 1e-12 && v[1] == 0.0);
        let v = log_map(&pt(&[0.4, 0.6]), &pt(&[0.4, 0.6])).unwrap();
        assert_eq!(v.norm(), 0.0);
    }

    /// Brute-force oracle: enumerate every translate in {-1,0,1}^d, keep the
    /// minimum norm, break ties lexicographically.
    fn log_map_oracle(p: &[f64], q: &[f64]) -> Vec<f64> {
        let d = p.len();
        let mut best: Option<(f64, Vec<f64>)> = None;
        for code in 0..3usize.pow(d as u32) {
            let mut c = code;
            let v: Vec<f64> = (0..d)
                .map(|i| {
                    let k = (c % 3) as f64 - 1.0;
                    c /= 3;
                    q[i] - p[i] + k
                })
                .collect();
            let n: f64 = v.iter().map(|x| x * x).sum();
            let better = match &best {
                None => true,
                Some((bn, bv)) => n < *bn || (n == *bn && v < *bv),
            };
            if better {
                best = Some((n, v));
            }
        }
        best.unwrap().1
    }

    #[test]
    fn log_map_tie_break_matches_enumeration() {
        let p = [0.25, 0.75];
        let q = [0.75, 0.25];
        let oracle = log_map_oracle(&p, &q);
        assert_eq!(oracle, vec![-0.5, -0.5]);
        let v = log_map(&pt(&p), &pt(&q)).unwrap();
        assert_eq!(v.as_slice(), oracle.as_slice());
    }

    fn point_strategy(d: usize) -> impl Strategy<Value = TorusPoint> {
        proptest::collection::vec(0.0f64..1.0, d).prop_map(|c| TorusPoint::new(c).unwrap())
    }

    proptest! {
        #[test]
        fn log_map_agrees_with_enumeration(
            (p, q) in (2usize..=4).prop_flat_map(|d| (point_strategy(d), point_strategy(d)))
        ) {
            let v = log_map(&p, &q).unwrap();
            let oracle = log_map_oracle(p.coords(), q.coords());
            for (a, b) in v.iter().zip(&oracle) {
                prop_assert!((a - b).abs() < 1e-15);
            }
            let back = p.translate(&v).unwrap();
            prop_assert!(dist(&back, &q).unwrap() < 1e-12);
            prop_assert!((v.norm() - dist(&p, &q).unwrap()).abs() < 1e-15);
        }

        #[test]
        fn metric_axioms(
            (p, q, r) in (2usize..=4).prop_flat_map(|d| (point_strategy(d), point_strategy(d), point_strategy(d)))
        ) {
            let pq = dist(&p, &q).unwrap();
            prop_assert!((pq - dist(&q, &p).unwrap()).abs() < 1e-15);
            prop_assert!(pq <= dist(&p, &r).unwrap() + dist(&r, &q).unwrap() + 1e-12);
            prop_assert!(pq <= (p.dim() as f64).sqrt() / 2.0 + 1e-15);
        }

        #[test]
        fn wrap_is_idempotent(v in proptest::collection::vec(-1e6f64..1e6, 2..=4)) {
            let once = wrap(&v).unwrap();
            let twice = wrap(once.coords()).unwrap();
            prop_assert_eq!(once, twice);
        }
    }

    #[test]
    fn triangle_inequality_on_random_triples() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10_000 {
            let d = rng.random_range(2..=4);
            let mut draw =
                || TorusPoint::new((0..d).map(|_| rng.random::<f64>()).collect()).unwrap();
            let (p, q, r) = (draw(), draw(), draw());
            let pq = dist(&p, &q).unwrap();
            assert!(pq <= dist(&p, &r).unwrap() + dist(&r, &q).unwrap() + 1e-12);
        }
    }
}
