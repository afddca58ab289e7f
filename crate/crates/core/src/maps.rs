//! Closed-form diffeomorphisms of T^d with analytic Jacobians.
//!
//! A [`MapSpec`] is the serializable description of a map; [`ToralMap`] is
//! the validated, precompiled form every numerical routine works with. All
//! evaluation happens on lifts to R^d so that orbits, Jacobians and periodic
//! point equations share one code path; torus-level calls wrap the result.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg;
use crate::torus::{self, TorusPoint};

/// Serializable description of a toral diffeomorphism.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant")]
pub enum MapSpec {
    /// `p -> M p mod 1` for an integer matrix with |det M| = 1.
    LinearToral { matrix: Vec<Vec<i64>> },
    /// `base` followed by `p -> p + amplitude * bump(dist(p, center) / support_radius) * direction`.
    ShearPerturbation {
        base: Box<MapSpec>,
        center: Vec<f64>,
        support_radius: f64,
        amplitude: f64,
        direction: Vec<f64>,
        #[serde(default)]
        profile: BumpProfile,
    },
    /// On T^4 = T^2 x T^2 with coordinates (x, y):
    /// `(x, y) -> (F x + coupling_amplitude * sin(2 pi <h, y>) e1, B y)`
    /// where F is `fiber_matrix`, B is `base_matrix` and h is `coupling_harmonic`.
    SkewProduct {
        base_matrix: [[i64; 2]; 2],
        fiber_matrix: [[i64; 2]; 2],
        coupling_amplitude: f64,
        coupling_harmonic: [i64; 2],
    },
    /// Applies `maps[0]` first.
    Composition { maps: Vec<MapSpec> },
    /// Rigid rotation `p -> p + offset`.
    Translation { offset: Vec<f64> },
    /// The inverse of `map`, evaluated by swapping forward and backward routines.
    Inverse { map: Box<MapSpec> },
}

/// Compactly supported C-infinity bump `t -> exp(1 - 1/(1 - t^2))` on |t| < 1.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BumpProfile {
    #[default]
    Bump,
}

impl BumpProfile {
    pub fn value(self, t: f64) -> f64 {
        let t2 = t * t;
        if t2 >= 1.0 {
            0.0
        } else {
            (1.0 - 1.0 / (1.0 - t2)).exp()
        }
    }

    pub fn derivative(self, t: f64) -> f64 {
        let t2 = t * t;
        if t2 >= 1.0 {
            0.0
        } else {
            let s = 1.0 - t2;
            self.value(t) * (-2.0 * t / (s * s))
        }
    }

    /// `max |phi'|`, attained where phi'' = 0, i.e. at t^4 = 1/3.
    pub fn lipschitz(self) -> f64 {
        let t = 3f64.powf(-0.25);
        self.derivative(t).abs()
    }
}

/// Derivative of a map at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobianMatrix {
    pub entries: DMatrix<f64>,
    pub basepoint: TorusPoint,
}

impl JacobianMatrix {
    fn new(entries: DMatrix<f64>, basepoint: TorusPoint) -> Result<Self> {
        let det = entries.determinant();
        if !det.is_finite() || det.abs() < 1e-10 {
            return Err(Error::NumericalFailure(format!(
                "Jacobian determinant {det:e} at {:?}",
                basepoint.coords()
            )));
        }
        Ok(Self { entries, basepoint })
    }
}

/// Parameters of a localized shear used to perturb a base map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShearTemplate {
    pub center: Vec<f64>,
    pub support_radius: f64,
    pub direction: Vec<f64>,
}

impl ShearTemplate {
    /// Largest |amplitude| keeping the shear invertible.
    pub fn amplitude_bound(&self) -> f64 {
        self.support_radius / BumpProfile::Bump.lipschitz()
    }

    pub fn spec(&self, base: &MapSpec, amplitude: f64) -> MapSpec {
        MapSpec::ShearPerturbation {
            base: Box::new(base.clone()),
            center: self.center.clone(),
            support_radius: self.support_radius,
            amplitude,
            direction: self.direction.clone(),
            profile: BumpProfile::Bump,
        }
    }
}

#[derive(Debug, Clone)]
struct Shear {
    base: ToralMap,
    center: Vec<f64>,
    radius: f64,
    amplitude: f64,
    direction: DVector<f64>,
    profile: BumpProfile,
}

#[derive(Debug, Clone)]
struct Skew {
    fiber: Matrix2<f64>,
    fiber_inv: Matrix2<f64>,
    base: Matrix2<f64>,
    base_inv: Matrix2<f64>,
    coupling: f64,
    harmonic: Vector2<f64>,
}

#[derive(Debug, Clone)]
enum Kind {
    Linear {
        matrix: DMatrix<f64>,
        inverse: DMatrix<f64>,
        integer_inverse: Vec<Vec<i64>>,
    },
    Shear(Box<Shear>),
    Skew(Skew),
    Composition(Vec<ToralMap>),
    Translation(DVector<f64>),
    Inverse(Box<ToralMap>),
}

/// Validated toral diffeomorphism. Immutable and cheap to share.
#[derive(Debug, Clone)]
pub struct ToralMap {
    spec: MapSpec,
    dim: usize,
    kind: Kind,
}

const SHEAR_NEWTON_TOL: f64 = 1e-12;
const SHEAR_NEWTON_MAX_ITERS: usize = 100;

fn unit_direction(direction: &[f64], dim: usize) -> Result<DVector<f64>> {
    if direction.len() != dim {
        return Err(Error::InvalidSpec(format!(
            "shear direction has {} components, map dimension is {dim}",
            direction.len()
        )));
    }
    let v = DVector::from_column_slice(direction);
    if !v.iter().all(|c| c.is_finite()) || (v.norm() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidSpec(format!(
            "shear direction must be a unit vector (norm {})",
            v.norm()
        )));
    }
    Ok(v)
}

fn matrix2(m: &[[i64; 2]; 2]) -> Result<(Matrix2<f64>, Matrix2<f64>)> {
    let rows = vec![m[0].to_vec(), m[1].to_vec()];
    let inv = linalg::unimodular_inverse(&rows)?;
    let f = |r: &[Vec<i64>]| {
        Matrix2::new(
            r[0][0] as f64,
            r[0][1] as f64,
            r[1][0] as f64,
            r[1][1] as f64,
        )
    };
    Ok((f(&rows), f(&inv)))
}

impl ToralMap {
    pub fn new(spec: MapSpec) -> Result<Self> {
        let (dim, kind) = match &spec {
            MapSpec::LinearToral { matrix } => {
                let n = matrix.len();
                if !(torus::MIN_DIM..=torus::MAX_DIM).contains(&n)
                    || matrix.iter().any(|r| r.len() != n)
                {
                    return Err(Error::InvalidSpec(format!(
                        "LinearToral needs a square d x d matrix with d in {{2,3,4}}, got {n} rows"
                    )));
                }
                let integer_inverse = linalg::unimodular_inverse(matrix)?;
                (
                    n,
                    Kind::Linear {
                        matrix: linalg::integer_matrix(matrix),
                        inverse: linalg::integer_matrix(&integer_inverse),
                        integer_inverse,
                    },
                )
            }
            MapSpec::ShearPerturbation {
                base,
                center,
                support_radius,
                amplitude,
                direction,
                profile,
            } => {
                let base = ToralMap::new((**base).clone())?;
                let dim = base.dim;
                let center_pt = TorusPoint::new(center.clone())
                    .map_err(|e| Error::InvalidSpec(format!("shear center: {e}")))?;
                if center_pt.dim() != dim {
                    return Err(Error::InvalidSpec("shear center dimension mismatch".into()));
                }
                if !(*support_radius > 0.0 && *support_radius < 0.5) {
                    return Err(Error::InvalidSpec(format!(
                        "support_radius {support_radius} not in (0, 0.5)"
                    )));
                }
                if !amplitude.is_finite() {
                    return Err(Error::InvalidSpec("non-finite amplitude".into()));
                }
                let lip = amplitude.abs() * profile.lipschitz() / support_radius;
                if lip >= 1.0 {
                    return Err(Error::InvalidSpec(format!(
                        "shear not invertible: |amplitude| * Lip(profile) / radius = {lip} >= 1"
                    )));
                }
                let direction = unit_direction(direction, dim)?;
                (
                    dim,
                    Kind::Shear(Box::new(Shear {
                        base,
                        center: center.clone(),
                        radius: *support_radius,
                        amplitude: *amplitude,
                        direction,
                        profile: *profile,
                    })),
                )
            }
            MapSpec::SkewProduct {
                base_matrix,
                fiber_matrix,
                coupling_amplitude,
                coupling_harmonic,
            } => {
                let (base, base_inv) = matrix2(base_matrix)?;
                let (fiber, fiber_inv) = matrix2(fiber_matrix)?;
                if !coupling_amplitude.is_finite() {
                    return Err(Error::InvalidSpec("non-finite coupling amplitude".into()));
                }
                (
                    4,
                    Kind::Skew(Skew {
                        fiber,
                        fiber_inv,
                        base,
                        base_inv,
                        coupling: *coupling_amplitude,
                        harmonic: Vector2::new(
                            coupling_harmonic[0] as f64,
                            coupling_harmonic[1] as f64,
                        ),
                    }),
                )
            }
            MapSpec::Composition { maps } => {
                if maps.is_empty() {
                    return Err(Error::InvalidSpec("empty composition".into()));
                }
                let parts = maps
                    .iter()
                    .map(|m| ToralMap::new(m.clone()))
                    .collect::<Result<Vec<_>>>()?;
                let dim = parts[0].dim;
                if parts.iter().any(|p| p.dim != dim) {
                    return Err(Error::InvalidSpec("composition dimension mismatch".into()));
                }
                (dim, Kind::Composition(parts))
            }
            MapSpec::Translation { offset } => {
                if !(torus::MIN_DIM..=torus::MAX_DIM).contains(&offset.len())
                    || offset.iter().any(|c| !c.is_finite())
                {
                    return Err(Error::InvalidSpec("bad translation offset".into()));
                }
                (
                    offset.len(),
                    Kind::Translation(DVector::from_column_slice(offset)),
                )
            }
            MapSpec::Inverse { map } => {
                let inner = ToralMap::new((**map).clone())?;
                (inner.dim, Kind::Inverse(Box::new(inner)))
            }
        };
        Ok(Self { spec, dim, kind })
    }

    pub fn spec(&self) -> &MapSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// True when Df is the same matrix at every point.
    pub fn has_constant_jacobian(&self) -> bool {
        match &self.kind {
            Kind::Linear { .. } | Kind::Translation(_) => true,
            Kind::Shear(s) => s.amplitude == 0.0 && s.base.has_constant_jacobian(),
            Kind::Skew(s) => s.coupling == 0.0,
            Kind::Composition(parts) => parts.iter().all(ToralMap::has_constant_jacobian),
            Kind::Inverse(inner) => inner.has_constant_jacobian(),
        }
    }

    /// Explicit inverse. Linear maps, translations and compositions invert in
    /// closed form; other families are wrapped in [`MapSpec::Inverse`].
    pub fn inverse(&self) -> ToralMap {
        let spec = match &self.kind {
            Kind::Linear {
                integer_inverse, ..
            } => MapSpec::LinearToral {
                matrix: integer_inverse.clone(),
            },
            Kind::Translation(v) => MapSpec::Translation {
                offset: v.iter().map(|c| -c).collect(),
            },
            Kind::Composition(parts) => MapSpec::Composition {
                maps: parts.iter().rev().map(|p| p.inverse().spec).collect(),
            },
            Kind::Inverse(inner) => inner.spec.clone(),
            _ => MapSpec::Inverse {
                map: Box::new(self.spec.clone()),
            },
        };
        ToralMap::new(spec).expect("inverse of a valid map is valid")
    }

    /// `f^-1` evaluated through the generic forward/backward swap, whatever the family.
    pub fn inverse_view(&self) -> ToralMap {
        ToralMap {
            spec: MapSpec::Inverse {
                map: Box::new(self.spec.clone()),
            },
            dim: self.dim,
            kind: Kind::Inverse(Box::new(self.clone())),
        }
    }

    /// `f^k` as a composition of k copies (k = 0 gives the identity).
    pub fn iterate(&self, k: usize) -> ToralMap {
        let spec = if k == 0 {
            MapSpec::LinearToral {
                matrix: identity_matrix(self.dim),
            }
        } else {
            MapSpec::Composition {
                maps: vec![self.spec.clone(); k],
            }
        };
        ToralMap::new(spec).expect("iterate of a valid map is valid")
    }

    fn check_dim(&self, n: usize) -> Result<()> {
        if n != self.dim {
            return invalid(format!("dimension mismatch: map {} vs point {n}", self.dim));
        }
        Ok(())
    }

    // ---- lift-level evaluation -------------------------------------------

    /// Lift of the map to R^d evaluated at `x`.
    pub fn lift(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        match &self.kind {
            Kind::Linear { matrix, .. } => Ok(matrix * x),
            Kind::Translation(v) => Ok(x + v),
            Kind::Shear(s) => {
                let y = s.base.lift(x)?;
                Ok(s.displace(&y))
            }
            Kind::Skew(s) => Ok(s.forward(x)),
            Kind::Composition(parts) => {
                let mut y = x.clone();
                for p in parts {
                    y = p.lift(&y)?;
                }
                Ok(y)
            }
            Kind::Inverse(inner) => inner.lift_inverse(x),
        }
    }

    pub fn lift_inverse(&self, y: &DVector<f64>) -> Result<DVector<f64>> {
        match &self.kind {
            Kind::Linear { inverse, .. } => Ok(inverse * y),
            Kind::Translation(v) => Ok(y - v),
            Kind::Shear(s) => {
                let z = s.undisplace(y)?;
                s.base.lift_inverse(&z)
            }
            Kind::Skew(s) => Ok(s.backward(y)),
            Kind::Composition(parts) => {
                let mut x = y.clone();
                for p in parts.iter().rev() {
                    x = p.lift_inverse(&x)?;
                }
                Ok(x)
            }
            Kind::Inverse(inner) => inner.lift(y),
        }
    }

    /// Df at a lift point.
    pub fn jacobian_at(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        match &self.kind {
            Kind::Linear { matrix, .. } => Ok(matrix.clone()),
            Kind::Translation(_) => Ok(DMatrix::identity(self.dim, self.dim)),
            Kind::Shear(s) => {
                let y = s.base.lift(x)?;
                Ok(s.displacement_jacobian(&y) * s.base.jacobian_at(x)?)
            }
            Kind::Skew(s) => Ok(s.jacobian(x)),
            Kind::Composition(parts) => {
                let mut y = x.clone();
                let mut jac = DMatrix::identity(self.dim, self.dim);
                for p in parts {
                    jac = p.jacobian_at(&y)? * jac;
                    y = p.lift(&y)?;
                }
                Ok(jac)
            }
            Kind::Inverse(inner) => {
                let pre = inner.lift_inverse(x)?;
                linalg::inverse(&inner.jacobian_at(&pre)?)
            }
        }
    }

    /// D(f^-1) at a lift point, i.e. `Df(f^-1(y))^-1`.
    pub fn inverse_jacobian_at(&self, y: &DVector<f64>) -> Result<DMatrix<f64>> {
        match &self.kind {
            Kind::Linear { inverse, .. } => Ok(inverse.clone()),
            Kind::Inverse(inner) => inner.jacobian_at(y),
            _ => {
                let pre = self.lift_inverse(y)?;
                linalg::inverse(&self.jacobian_at(&pre)?)
            }
        }
    }

    // ---- torus-level operations ------------------------------------------

    pub fn apply(&self, p: &TorusPoint) -> Result<TorusPoint> {
        self.check_dim(p.dim())?;
        torus::wrap_vector(&self.lift(&p.to_vector())?)
    }

    pub fn apply_inverse(&self, p: &TorusPoint) -> Result<TorusPoint> {
        self.check_dim(p.dim())?;
        torus::wrap_vector(&self.lift_inverse(&p.to_vector())?)
    }

    pub fn jacobian(&self, p: &TorusPoint) -> Result<JacobianMatrix> {
        self.check_dim(p.dim())?;
        JacobianMatrix::new(self.jacobian_at(&p.to_vector())?, p.clone())
    }

    /// D(f^-1)(p); the product with `jacobian(f^-1(p))` is the identity.
    pub fn jacobian_inverse(&self, p: &TorusPoint) -> Result<JacobianMatrix> {
        self.check_dim(p.dim())?;
        JacobianMatrix::new(self.inverse_jacobian_at(&p.to_vector())?, p.clone())
    }

    /// `f^n(p)` by repeated application.
    pub fn orbit_point(&self, p: &TorusPoint, n: usize) -> Result<TorusPoint> {
        let mut q = p.clone();
        for _ in 0..n {
            q = self.apply(&q)?;
        }
        Ok(q)
    }

    pub fn backward_orbit_point(&self, p: &TorusPoint, n: usize) -> Result<TorusPoint> {
        let mut q = p.clone();
        for _ in 0..n {
            q = self.apply_inverse(&q)?;
        }
        Ok(q)
    }
}

pub fn identity_matrix(dim: usize) -> Vec<Vec<i64>> {
    (0..dim)
        .map(|i| (0..dim).map(|j| i64::from(i == j)).collect())
        .collect()
}

impl Shear {
    fn offset_from_center(&self, y: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(
            y.len(),
            y.iter()
                .zip(&self.center)
                .map(|(v, c)| torus::shortest(torus::reduce(*v) - c)),
        )
    }

    fn bump_and_gradient(&self, y: &DVector<f64>) -> (f64, DVector<f64>) {
        let v = self.offset_from_center(y);
        let r = v.norm();
        let t = r / self.radius;
        if t >= 1.0 {
            return (0.0, DVector::zeros(y.len()));
        }
        let value = self.profile.value(t);
        let grad = if r > 0.0 {
            v * (self.profile.derivative(t) / (self.radius * r))
        } else {
            DVector::zeros(y.len())
        };
        (value, grad)
    }

    fn displace(&self, y: &DVector<f64>) -> DVector<f64> {
        let (value, _) = self.bump_and_gradient(y);
        y + &self.direction * (self.amplitude * value)
    }

    fn displacement_jacobian(&self, y: &DVector<f64>) -> DMatrix<f64> {
        let (_, grad) = self.bump_and_gradient(y);
        let n = y.len();
        DMatrix::identity(n, n) + &self.direction * grad.transpose() * self.amplitude
    }

    /// Inverts the shear. The preimage is `target + s v` where `s` solves
    /// `h(s) = s + a bump(target + s v) = 0`; `h' >= 1 - |a| Lip > 0`, so the
    /// root is unique in `[-|a|, |a|]` and bracketed Newton always converges.
    fn undisplace(&self, target: &DVector<f64>) -> Result<DVector<f64>> {
        let a = self.amplitude;
        if a == 0.0 {
            return Ok(target.clone());
        }
        let h = |s: f64| {
            let (value, grad) = self.bump_and_gradient(&(target + &self.direction * s));
            (s + a * value, 1.0 + a * grad.dot(&self.direction))
        };
        let (mut lo, mut hi) = (-a.abs(), a.abs());
        let mut s = 0.0;
        for _ in 0..SHEAR_NEWTON_MAX_ITERS {
            let (value, slope) = h(s);
            if value.abs() < SHEAR_NEWTON_TOL || hi <= lo {
                return Ok(target + &self.direction * s);
            }
            if value > 0.0 {
                hi = s;
            } else {
                lo = s;
            }
            let newton = s - value / slope;
            s = if slope > 0.0 && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
        }
        Err(Error::NumericalFailure(format!(
            "shear inverse did not converge in {SHEAR_NEWTON_MAX_ITERS} steps"
        )))
    }
}

impl Skew {
    fn split(x: &DVector<f64>) -> (Vector2<f64>, Vector2<f64>) {
        (Vector2::new(x[0], x[1]), Vector2::new(x[2], x[3]))
    }

    fn join(a: Vector2<f64>, b: Vector2<f64>) -> DVector<f64> {
        DVector::from_column_slice(&[a[0], a[1], b[0], b[1]])
    }

    fn phase(&self, base: &Vector2<f64>) -> f64 {
        2.0 * PI * self.harmonic.dot(base)
    }

    fn forward(&self, x: &DVector<f64>) -> DVector<f64> {
        let (fib, base) = Self::split(x);
        let mut fib_new = self.fiber * fib;
        fib_new[0] += self.coupling * self.phase(&base).sin();
        Self::join(fib_new, self.base * base)
    }

    fn backward(&self, y: &DVector<f64>) -> DVector<f64> {
        let (fib, base) = Self::split(y);
        let base_old = self.base_inv * base;
        let mut shifted = fib;
        shifted[0] -= self.coupling * self.phase(&base_old).sin();
        Self::join(self.fiber_inv * shifted, base_old)
    }

    fn jacobian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let (_, base) = Self::split(x);
        let mut j = DMatrix::zeros(4, 4);
        for r in 0..2 {
            for c in 0..2 {
                j[(r, c)] = self.fiber[(r, c)];
                j[(r + 2, c + 2)] = self.base[(r, c)];
            }
        }
        let slope = self.coupling * 2.0 * PI * self.phase(&base).cos();
        j[(0, 2)] = slope * self.harmonic[0];
        j[(0, 3)] = slope * self.harmonic[1];
        j
    }
}

/// Sampled C^0 and C^1 distance between two maps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct C1Distance {
    pub c0: f64,
    pub c1: f64,
}

/// `c0 = max dist(f p, g p)`, `c1 = c0 + max ||Df(p) - Dg(p)||` over seeded
/// uniform samples.
pub fn c1_distance_estimate(
    f: &ToralMap,
    g: &ToralMap,
    n_samples: usize,
    seed: u64,
) -> Result<C1Distance> {
    if f.dim() != g.dim() {
        return invalid("maps have different dimensions");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c0: f64 = 0.0;
    let mut d1: f64 = 0.0;
    for _ in 0..n_samples {
        let p = TorusPoint::new((0..f.dim()).map(|_| rng.random::<f64>()).collect())?;
        c0 = c0.max(torus::dist(&f.apply(&p)?, &g.apply(&p)?)?);
        let diff = f.jacobian(&p)?.entries - g.jacobian(&p)?.entries;
        d1 = d1.max(linalg::operator_norm(&diff));
    }
    Ok(C1Distance { c0, c1: c0 + d1 })
}

/// Named maps used throughout the tests and example configs.
pub mod catalog {
    use super::*;

    pub fn cat_map_matrix() -> Vec<Vec<i64>> {
        vec![vec![2, 1], vec![1, 1]]
    }

    pub fn cat_map() -> MapSpec {
        MapSpec::LinearToral {
            matrix: cat_map_matrix(),
        }
    }

    /// Symmetric T^3 automorphism with characteristic polynomial
    /// x^3 - 4x^2 + 3x + 1 (eigenvalues 1 + 2cos(k pi / 7), k = 1, 3, 5).
    pub fn heptagonal_matrix() -> Vec<Vec<i64>> {
        vec![vec![1, -1, -1], vec![-1, 1, 0], vec![-1, 0, 2]]
    }

    pub fn heptagonal() -> MapSpec {
        MapSpec::LinearToral {
            matrix: heptagonal_matrix(),
        }
    }

    /// T^3 automorphism with characteristic polynomial x^3 - 11x^2 + 14x + 1:
    /// eigenvalues -0.0678, 1.5497, 9.5181 with a nearly orthogonal E^c, E^uu.
    pub fn expanding_center_matrix() -> Vec<Vec<i64>> {
        vec![vec![0, 2, 3], vec![1, 9, 2], vec![0, 1, 2]]
    }

    pub fn expanding_center() -> MapSpec {
        MapSpec::LinearToral {
            matrix: expanding_center_matrix(),
        }
    }

    /// Cat map on the first two coordinates, identity on the third.
    pub fn cat_times_identity() -> MapSpec {
        MapSpec::LinearToral {
            matrix: vec![vec![2, 1, 0], vec![1, 1, 0], vec![0, 0, 1]],
        }
    }

    pub fn identity(dim: usize) -> MapSpec {
        MapSpec::LinearToral {
            matrix: identity_matrix(dim),
        }
    }

    pub fn translation(offset: &[f64]) -> MapSpec {
        MapSpec::Translation {
            offset: offset.to_vec(),
        }
    }

    /// Skew product on T^4 whose base block dominates the cat-map fiber.
    pub fn shub_skew(coupling: f64) -> MapSpec {
        MapSpec::SkewProduct {
            base_matrix: [[3, 2], [1, 1]],
            fiber_matrix: [[2, 1], [1, 1]],
            coupling_amplitude: coupling,
            coupling_harmonic: [1, 0],
        }
    }

    /// Shear of `base` supported around the origin (a fixed point of every
    /// linear map) along `direction`.
    pub fn mane_shear(base: MapSpec, direction: &[f64], amplitude: f64, radius: f64) -> MapSpec {
        let dim = direction.len();
        ShearTemplate {
            center: vec![0.0; dim],
            support_radius: radius,
            direction: direction.to_vec(),
        }
        .spec(&base, amplitude)
    }
}
