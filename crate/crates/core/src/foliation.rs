//! Strong stable/unstable leaves, local center-unstable discs, the backward
//! contraction check for those discs, and leaf/disc intersection.
//!
//! Leaves are one-dimensional. They are integrated in the universal cover
//! with RK4 on the unit line field given by the strong bundle, every
//! increment rescaled to exactly the step length so that chord length and
//! recorded arclength agree. Maps with a constant Jacobian skip integration:
//! their leaves are straight lines and vertices are written in closed form.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg;
use crate::maps::ToralMap;
use crate::splitting::{self, Cocycle, StrongBundle, DEFAULT_FRAME_SEED};
use crate::torus::{self, TorusPoint};

/// Cocycle length used when estimating the strong line field along a leaf.
pub const LEAF_FIELD_ITERS: usize = 40;
pub const DISC_RAYS: usize = 24;
pub const DISC_RINGS: usize = 16;
const CONTRACTION_DISC_DEPTH: usize = 4;
/// Newton tolerance relative to the rounding scale of f^n at the node.
const DISC_NEWTON_TOL: f64 = 1e-14;
const DISC_NEWTON_MAX_ITERS: usize = 50;
const BISECTION_TOL: f64 = 1e-9;

/// Unit strong line field with a global orientation convention.
///
/// The reference vector is the strong direction at the origin, signed so its
/// largest component is positive; every other estimate is oriented to have a
/// positive inner product with it, or with the previous tangent when
/// continuing along a curve.
#[derive(Debug, Clone)]
pub struct LineField<'a> {
    f: &'a ToralMap,
    bundle: StrongBundle,
    n_iters: usize,
    reference: DVector<f64>,
    constant: bool,
}

fn canonical_sign(v: DVector<f64>) -> DVector<f64> {
    let (imax, _) =
        v.iter().enumerate().fold(
            (0, 0.0),
            |best, (i, c)| if c.abs() > best.1 { (i, c.abs()) } else { best },
        );
    if v[imax] < 0.0 {
        -v
    } else {
        v
    }
}

fn aligned(v: DVector<f64>, with: &DVector<f64>) -> DVector<f64> {
    if v.dot(with) < 0.0 {
        -v
    } else {
        v
    }
}

impl<'a> LineField<'a> {
    pub fn new(f: &'a ToralMap, bundle: StrongBundle) -> Result<Self> {
        Self::with_iters(f, bundle, LEAF_FIELD_ITERS)
    }

    pub fn with_iters(f: &'a ToralMap, bundle: StrongBundle, n_iters: usize) -> Result<Self> {
        let origin = TorusPoint::origin(f.dim())?;
        let reference = canonical_sign(splitting::strong_direction(f, &origin, bundle, n_iters)?);
        Ok(Self {
            f,
            bundle,
            n_iters,
            reference,
            constant: f.has_constant_jacobian(),
        })
    }

    pub fn bundle(&self) -> StrongBundle {
        self.bundle
    }

    /// Whether the field is the same at every point (straight leaves).
    pub fn is_constant(&self) -> bool {
        self.constant
    }

    fn raw(&self, y: &DVector<f64>) -> Result<DVector<f64>> {
        if self.constant {
            return Ok(self.reference.clone());
        }
        let p = torus::wrap_vector(y)?;
        splitting::strong_direction(self.f, &p, self.bundle, self.n_iters)
    }

    /// Direction at a lift point, oriented by the global reference.
    pub fn canonical(&self, y: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(aligned(self.raw(y)?, &self.reference))
    }

    /// Direction at a lift point, oriented to continue `prev`.
    pub fn continued(&self, y: &DVector<f64>, prev: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(aligned(self.raw(y)?, prev))
    }

    /// One RK4 increment of exact length |h| from `y`, continuing `tangent`.
    fn rk4_step(&self, y: &DVector<f64>, tangent: &DVector<f64>, h: f64) -> Result<DVector<f64>> {
        let k1 = self.continued(y, tangent)?;
        let k2 = self.continued(&(y + &k1 * (0.5 * h)), &k1)?;
        let k3 = self.continued(&(y + &k2 * (0.5 * h)), &k1)?;
        let k4 = self.continued(&(y + &k3 * h), &k1)?;
        let incr = (k1 + k2 * 2.0 + k3 * 2.0 + k4) / 6.0;
        let unit = torus::normalized(&incr)
            .ok_or_else(|| Error::NumericalFailure("vanishing line field".into()))?;
        Ok(unit * h)
    }

    /// Lift points at arclengths 0, h, 2h, ..., |t| (last step shortened)
    /// along the leaf from `start`, in the direction `sign(t) * initial`.
    fn integrate(
        &self,
        start: &DVector<f64>,
        initial: &DVector<f64>,
        t: f64,
        h: f64,
    ) -> std::result::Result<Trace, (Error, Trace)> {
        let sign = if t < 0.0 { -1.0 } else { 1.0 };
        let total = t.abs();
        let dir0 = initial * sign;
        let mut out = vec![(start.clone(), 0.0)];
        if self.constant {
            let steps = (total / h).ceil() as usize;
            for k in 1..=steps {
                let s = (k as f64 * h).min(total);
                out.push((start + &dir0 * s, sign * s));
            }
            return Ok(out);
        }
        let mut y = start.clone();
        let mut tangent = dir0;
        let mut s = 0.0;
        while total - s > 1e-12 {
            let step = h.min(total - s);
            match self.rk4_step(&y, &tangent, step) {
                Ok(incr) => {
                    tangent = incr.normalize();
                    y += incr;
                    s += step;
                    out.push((y.clone(), sign * s));
                }
                Err(e) => return Err((e, out)),
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeafVertex {
    pub point: TorusPoint,
    /// Signed arclength from the base, in torus side units.
    pub arclength: f64,
}

/// Discretized strong leaf, vertices ordered by increasing arclength.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeafSegment {
    pub base: TorusPoint,
    pub bundle: StrongBundle,
    pub vertices: Vec<LeafVertex>,
    pub step: f64,
}

impl LeafSegment {
    fn from_lifts(
        base: &TorusPoint,
        bundle: StrongBundle,
        lifts: Vec<(DVector<f64>, f64)>,
        step: f64,
    ) -> Result<Self> {
        let vertices = lifts
            .into_iter()
            .map(|(y, s)| {
                Ok(LeafVertex {
                    point: torus::wrap_vector(&y)?,
                    arclength: s,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            base: base.clone(),
            bundle,
            vertices,
            step,
        })
    }

    /// Index of the base vertex (arclength 0).
    pub fn base_index(&self) -> usize {
        self.vertices
            .iter()
            .position(|v| v.arclength == 0.0)
            .unwrap_or(0)
    }

    /// Vertices unwrapped into a continuous curve in R^d, with the base at
    /// the base point's own coordinates.
    pub fn lifted(&self) -> Vec<DVector<f64>> {
        let i0 = self.base_index();
        let n = self.vertices.len();
        let mut out = vec![DVector::zeros(self.base.dim()); n];
        out[i0] = self.base.to_vector();
        for i in i0 + 1..n {
            let d = torus::log_map(&self.vertices[i - 1].point, &self.vertices[i].point)
                .expect("same dimension");
            out[i] = &out[i - 1] + d;
        }
        for i in (0..i0).rev() {
            let d = torus::log_map(&self.vertices[i + 1].point, &self.vertices[i].point)
                .expect("same dimension");
            out[i] = &out[i + 1] + d;
        }
        out
    }

    pub fn length(&self) -> f64 {
        match (self.vertices.first(), self.vertices.last()) {
            (Some(a), Some(b)) => b.arclength - a.arclength,
            _ => 0.0,
        }
    }

    /// Rows of (arclength, coordinates...) for export.
    pub fn vertex_rows(&self) -> Vec<Vec<f64>> {
        self.vertices
            .iter()
            .map(|v| {
                let mut row = vec![v.arclength];
                row.extend_from_slice(v.point.coords());
                row
            })
            .collect()
    }
}

fn check_leaf_args(f: &ToralMap, x: &TorusPoint, r: f64, h: f64) -> Result<()> {
    if x.dim() != f.dim() {
        return invalid("point dimension does not match map");
    }
    if !(r >= 0.0 && r.is_finite()) {
        return invalid(format!("leaf radius {r} must be finite and non-negative"));
    }
    if r > 0.0 && !(h > 0.0 && h <= r / 50.0) {
        return invalid(format!("step {h} must lie in (0, r/50] for radius {r}"));
    }
    Ok(())
}

/// Grows F^bundle_r(x): both orientations out to arclength r with step h.
pub fn grow_leaf(
    f: &ToralMap,
    x: &TorusPoint,
    bundle: StrongBundle,
    r: f64,
    h: f64,
) -> Result<LeafSegment> {
    check_leaf_args(f, x, r, h)?;
    if r == 0.0 {
        return Ok(LeafSegment {
            base: x.clone(),
            bundle,
            vertices: vec![LeafVertex {
                point: x.clone(),
                arclength: 0.0,
            }],
            step: h,
        });
    }
    let field = LineField::new(f, bundle)?;
    grow_with_field(&field, x, r, h)
}

pub(crate) fn grow_with_field(
    field: &LineField<'_>,
    x: &TorusPoint,
    r: f64,
    h: f64,
) -> Result<LeafSegment> {
    let y0 = x.to_vector();
    let leaf_failure = |e: Error, partial: Vec<(DVector<f64>, f64)>| -> Error {
        let partial = partial
            .iter()
            .filter_map(|(y, _)| torus::wrap_vector(y).ok())
            .collect();
        Error::LeafGrowthFailure {
            reason: e.to_string(),
            partial,
        }
    };
    let dir = field.canonical(&y0).map_err(|e| leaf_failure(e, vec![]))?;
    let fwd = field
        .integrate(&y0, &dir, r, h)
        .map_err(|(e, p)| leaf_failure(e, p))?;
    let bwd = field
        .integrate(&y0, &dir, -r, h)
        .map_err(|(e, p)| leaf_failure(e, p))?;
    let mut lifts: Vec<(DVector<f64>, f64)> = bwd.into_iter().skip(1).rev().collect();
    lifts.extend(fwd);
    LeafSegment::from_lifts(x, field.bundle, lifts, h)
}

/// Point at signed arclength t along the leaf through x, with the
/// intermediate vertices (step h).
pub fn flow_along_leaf(
    f: &ToralMap,
    x: &TorusPoint,
    bundle: StrongBundle,
    t: f64,
    h: f64,
) -> Result<Vec<TorusPoint>> {
    let field = LineField::new(f, bundle)?;
    flow_with_field(&field, x, t, h)
}

pub(crate) fn flow_with_field(
    field: &LineField<'_>,
    x: &TorusPoint,
    t: f64,
    h: f64,
) -> Result<Vec<TorusPoint>> {
    if !(h > 0.0) || !t.is_finite() {
        return invalid(format!("bad leaf flow arguments t = {t}, h = {h}"));
    }
    let y0 = x.to_vector();
    let dir = field.canonical(&y0)?;
    let steps = if field.constant {
        let y = &y0 + &dir * t;
        vec![(y0.clone(), 0.0), (y, t)]
    } else {
        field
            .integrate(&y0, &dir, t, h)
            .map_err(|(e, partial)| Error::LeafGrowthFailure {
                reason: e.to_string(),
                partial: partial
                    .iter()
                    .filter_map(|(y, _)| torus::wrap_vector(y).ok())
                    .collect(),
            })?
    };
    steps.iter().map(|(y, _)| torus::wrap_vector(y)).collect()
}

/// Strong leaf built by the graph transform: a short seed leaf at f^n(x)
/// (stable case) is pulled back n times and re-parameterized by arclength.
/// Unstable leaves are stable leaves of the inverse map.
pub fn refine_leaf_dynamically(
    f: &ToralMap,
    x: &TorusPoint,
    bundle: StrongBundle,
    r: f64,
    h: f64,
    depth: usize,
) -> Result<LeafSegment> {
    check_leaf_args(f, x, r, h)?;
    match bundle {
        StrongBundle::Uu => {
            let inv = f.inverse();
            let mut leaf = refine_stable(&inv, x, r, h, depth, f, StrongBundle::Uu)?;
            leaf.bundle = StrongBundle::Uu;
            Ok(leaf)
        }
        StrongBundle::Ss => refine_stable(f, x, r, h, depth, f, StrongBundle::Ss),
    }
}

fn refine_stable(
    g: &ToralMap,
    x: &TorusPoint,
    r: f64,
    h: f64,
    depth: usize,
    orient_map: &ToralMap,
    orient_bundle: StrongBundle,
) -> Result<LeafSegment> {
    if r == 0.0 || depth == 0 {
        return grow_leaf(orient_map, x, orient_bundle, r, h);
    }
    let field = LineField::new(g, StrongBundle::Ss)?;
    // contraction of the stable direction over depth iterates
    let v = field.canonical(&x.to_vector())?;
    let mut p = x.clone();
    let mut w = v.clone();
    for _ in 0..depth {
        w = g.jacobian_at(&p.to_vector())? * w;
        p = g.apply(&p)?;
    }
    let growth = w.norm();
    let seed_radius = 2.0 * r * growth;
    let per_side = (4.0 * r / h).ceil().max(50.0);
    let seed = grow_with_field(&field, &p, seed_radius, seed_radius / per_side)?;

    let mut pulled: Vec<TorusPoint> = Vec::with_capacity(seed.vertices.len());
    for vtx in &seed.vertices {
        pulled.push(g.backward_orbit_point(&vtx.point, depth)?);
    }
    let i0 = seed.base_index();
    let mut lifts = vec![DVector::zeros(x.dim()); pulled.len()];
    lifts[i0] = x.to_vector() + torus::log_map(x, &pulled[i0])?;
    for i in i0 + 1..pulled.len() {
        lifts[i] = &lifts[i - 1] + torus::log_map(&pulled[i - 1], &pulled[i])?;
    }
    for i in (0..i0).rev() {
        lifts[i] = &lifts[i + 1] + torus::log_map(&pulled[i + 1], &pulled[i])?;
    }
    let reference = LineField::new(orient_map, orient_bundle)?.canonical(&x.to_vector())?;
    let tangent = &lifts[(i0 + 1).min(lifts.len() - 1)] - &lifts[i0];
    if tangent.dot(&reference) < 0.0 {
        lifts.reverse();
    }
    let i0 = if tangent.dot(&reference) < 0.0 {
        lifts.len() - 1 - i0
    } else {
        i0
    };
    let mut arc = vec![0.0; lifts.len()];
    for i in i0 + 1..lifts.len() {
        arc[i] = arc[i - 1] + (&lifts[i] - &lifts[i - 1]).norm();
    }
    for i in (0..i0).rev() {
        arc[i] = arc[i + 1] - (&lifts[i + 1] - &lifts[i]).norm();
    }
    if arc[0] > -r || arc[arc.len() - 1] < r {
        return Err(Error::LeafGrowthFailure {
            reason: format!(
                "pulled-back seed covers arclength [{}, {}], need [-{r}, {r}]",
                arc[0],
                arc[arc.len() - 1]
            ),
            partial: pulled,
        });
    }
    let steps = (r / h).ceil() as i64;
    let mut out = Vec::with_capacity(2 * steps as usize + 1);
    let mut j = 0;
    for k in -steps..=steps {
        let s = (k as f64 * h).clamp(-r, r);
        while j + 2 < arc.len() && arc[j + 1] < s {
            j += 1;
        }
        let span = arc[j + 1] - arc[j];
        let tau = if span > 0.0 {
            ((s - arc[j]) / span).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let y = &lifts[j] * (1.0 - tau) + &lifts[j + 1] * tau;
        let y = if k == 0 { x.to_vector() } else { y };
        out.push((y, s));
    }
    LeafSegment::from_lifts(x, orient_bundle, out, h)
}

fn point_segment_distance(p: &DVector<f64>, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    let t = if len2 > 0.0 {
        ((p - a).dot(&ab) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (p - (a + ab * t)).norm()
}

/// Distance from a lift point to a lifted polyline.
pub fn distance_to_polyline(p: &DVector<f64>, line: &[DVector<f64>]) -> f64 {
    match line.len() {
        0 => f64::INFINITY,
        1 => (p - &line[0]).norm(),
        _ => line
            .windows(2)
            .map(|w| point_segment_distance(p, &w[0], &w[1]))
            .fold(f64::INFINITY, f64::min),
    }
}

fn one_sided(a: &[DVector<f64>], b: &[DVector<f64>]) -> f64 {
    a.iter()
        .map(|p| distance_to_polyline(p, b))
        .fold(0.0, f64::max)
}

/// Hausdorff distance between two leaves as polylines, compared in a common
/// lift anchored at `a.base`.
pub fn hausdorff_distance(a: &LeafSegment, b: &LeafSegment) -> Result<f64> {
    let la = a.lifted();
    let shift = a.base.to_vector() + torus::log_map(&a.base, &b.base)? - b.base.to_vector();
    let lb: Vec<DVector<f64>> = b.lifted().into_iter().map(|y| y + &shift).collect();
    Ok(one_sided(&la, &lb).max(one_sided(&lb, &la)))
}

/// Local center-unstable disc on T^3 stored as a graph over the eps-ball of
/// E^cu(base): node (ring j, ray k) sits at
/// `base + e_cu * w + psi * e_ss` with `w = (j eps / rings) (cos, sin)(2 pi k / rays)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CuDisc {
    pub base: TorusPoint,
    pub radius: f64,
    pub depth: usize,
    pub e_cu: DMatrix<f64>,
    pub e_ss: DVector<f64>,
    /// `psi[0]` is the center; `psi[1 + (j - 1) * rays + k]` is ring j, ray k.
    pub psi: Vec<f64>,
    pub grid: Vec<TorusPoint>,
}

impl CuDisc {
    pub fn rings(&self) -> usize {
        DISC_RINGS
    }

    pub fn rays(&self) -> usize {
        DISC_RAYS
    }

    /// Radial spacing of the grid.
    pub fn resolution(&self) -> f64 {
        self.radius / DISC_RINGS as f64
    }

    fn node_w(&self, j: usize, k: usize) -> nalgebra::Vector2<f64> {
        let rho = self.radius * j as f64 / DISC_RINGS as f64;
        let th = 2.0 * PI * k as f64 / DISC_RAYS as f64;
        nalgebra::Vector2::new(rho * th.cos(), rho * th.sin())
    }

    fn psi_at(&self, j: usize, k: usize) -> f64 {
        if j == 0 {
            self.psi[0]
        } else {
            self.psi[1 + (j - 1) * DISC_RAYS + k % DISC_RAYS]
        }
    }

    /// Graph height at polar position (rho <= radius), bilinear in (rho, theta).
    fn psi_interp(&self, w: &nalgebra::Vector2<f64>) -> f64 {
        if self.radius == 0.0 {
            return 0.0;
        }
        let rho = w.norm() / self.resolution();
        let th = w[1].atan2(w[0]).rem_euclid(2.0 * PI) / (2.0 * PI / DISC_RAYS as f64);
        let j = (rho.floor() as usize).min(DISC_RINGS - 1);
        let k = th.floor() as usize % DISC_RAYS;
        let a = (rho - j as f64).clamp(0.0, 1.0);
        let b = th - th.floor();
        let inner = self.psi_at(j, k) * (1.0 - b) + self.psi_at(j, k + 1) * b;
        let outer = self.psi_at(j + 1, k) * (1.0 - b) + self.psi_at(j + 1, k + 1) * b;
        inner * (1.0 - a) + outer * a
    }

    fn chart(&self) -> Matrix3<f64> {
        let mut m = Matrix3::zeros();
        for r in 0..3 {
            m[(r, 0)] = self.e_cu[(r, 0)];
            m[(r, 1)] = self.e_cu[(r, 1)];
            m[(r, 2)] = self.e_ss[r];
        }
        m
    }

    /// Chart coordinates (w, s) of a displacement v from the base.
    fn coordinates(&self, v: &Vector3<f64>) -> Result<(nalgebra::Vector2<f64>, f64)> {
        let c = self
            .chart()
            .lu()
            .solve(v)
            .ok_or_else(|| Error::NumericalFailure("degenerate disc chart".into()))?;
        Ok((nalgebra::Vector2::new(c[0], c[1]), c[2]))
    }

    /// Displacement from the disc surface to `p`, with the graph coordinate
    /// clamped radially to the disc.
    pub fn offset_to(&self, p: &TorusPoint) -> Result<DVector<f64>> {
        let v = torus::log_map(&self.base, p)?;
        let v = Vector3::new(v[0], v[1], v[2]);
        let (w, _) = self.coordinates(&v)?;
        let off = v - self.surface(&w.cap_magnitude(self.radius));
        Ok(DVector::from_column_slice(off.as_slice()))
    }

    pub fn distance_to(&self, p: &TorusPoint) -> Result<f64> {
        Ok(self.offset_to(p)?.norm())
    }

    fn surface(&self, w: &nalgebra::Vector2<f64>) -> Vector3<f64> {
        let m = self.chart();
        m * Vector3::new(w[0], w[1], self.psi_interp(w))
    }

    /// Angle between the least-squares plane through the base and the first
    /// ring, and E^cu(base).
    pub fn tangency_error(&self) -> f64 {
        if self.radius == 0.0 {
            return 0.0;
        }
        let cols: Vec<DVector<f64>> = (0..DISC_RAYS)
            .map(|k| {
                let w = self.node_w(1, k);
                let v = self.chart() * Vector3::new(w[0], w[1], self.psi_at(1, k));
                DVector::from_column_slice(v.as_slice())
            })
            .collect();
        let m = DMatrix::from_columns(&cols);
        let svd = m.svd(true, false);
        let u = svd.u.expect("requested U");
        let mut idx: Vec<usize> = (0..3).collect();
        idx.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
        let plane =
            DMatrix::from_columns(&[u.column(idx[0]).into_owned(), u.column(idx[1]).into_owned()]);
        linalg::subspace_angle(&plane, &self.e_cu)
    }

    /// Rows of (radial parameter, coordinates...) for export, center first.
    pub fn vertex_rows(&self) -> Vec<Vec<f64>> {
        let mut rows = Vec::with_capacity(self.grid.len());
        for (i, p) in self.grid.iter().enumerate() {
            let j = if i == 0 { 0 } else { 1 + (i - 1) / DISC_RAYS };
            let mut row = vec![self.radius * j as f64 / DISC_RINGS as f64];
            row.extend_from_slice(p.coords());
            rows.push(row);
        }
        rows
    }
}

fn lift_iterate(f: &ToralMap, y: &DVector<f64>, n: usize) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let mut y = y.clone();
    let mut jac = DMatrix::identity(y.len(), y.len());
    for _ in 0..n {
        jac = f.jacobian_at(&y)? * jac;
        y = f.lift(&y)?;
    }
    Ok((y, jac))
}

/// W^cu_eps(x): the image under f^n of the flat E^cu patch at f^-n(x),
/// written as a graph over the eps-ball of E^cu(x). Each node is found by
/// Newton on the lift of f^n, continued outward along its ray.
pub fn local_cu_disc(f: &ToralMap, x: &TorusPoint, eps: f64, depth: usize) -> Result<CuDisc> {
    if f.dim() != 3 || x.dim() != 3 {
        return invalid("center-unstable discs are built on T^3 only");
    }
    if !(0.0..0.25).contains(&eps) {
        return invalid(format!("disc radius {eps} not in [0, 0.25)"));
    }
    let e_cu = splitting::dominant_subspace(
        f,
        x,
        2,
        LEAF_FIELD_ITERS,
        Cocycle::Forward,
        DEFAULT_FRAME_SEED,
    )?;
    let e_ss = splitting::strong_direction(f, x, StrongBundle::Ss, LEAF_FIELD_ITERS)?;
    if linalg::angle_to_span(&e_ss, &e_cu) < 1e-6 {
        return Err(Error::DegenerateSplitting {
            point: x.coords().to_vec(),
            reason: "E^ss lies in E^cu".into(),
        });
    }
    let mut disc = CuDisc {
        base: x.clone(),
        radius: eps,
        depth,
        e_cu,
        e_ss,
        psi: vec![0.0; 1 + DISC_RINGS * DISC_RAYS],
        grid: Vec::new(),
    };
    if depth > 0 && eps > 0.0 {
        solve_disc_heights(f, &mut disc)?;
    }
    let chart = disc.chart();
    let x_lift = x.to_vector();
    let mut grid = Vec::with_capacity(disc.psi.len());
    grid.push(x.clone());
    for j in 1..=DISC_RINGS {
        for k in 0..DISC_RAYS {
            let w = disc.node_w(j, k);
            let v = chart * Vector3::new(w[0], w[1], disc.psi_at(j, k));
            grid.push(torus::wrap_vector(
                &(&x_lift + DVector::from_column_slice(v.as_slice())),
            )?);
        }
    }
    disc.grid = grid;
    Ok(disc)
}

fn solve_disc_heights(f: &ToralMap, disc: &mut CuDisc) -> Result<()> {
    let n = disc.depth;
    let z = f.backward_orbit_point(&disc.base, n)?;
    let b_z = splitting::dominant_subspace(
        f,
        &z,
        2,
        LEAF_FIELD_ITERS,
        Cocycle::Forward,
        DEFAULT_FRAME_SEED,
    )?;
    let z_lift = z.to_vector();
    let (fz, jz) = lift_iterate(f, &z_lift, n)?;
    // lift of the base compatible with f^n(z)
    let x_lift = fz;
    let chart = disc.chart();
    let e_ss = DVector::from_column_slice(disc.e_ss.as_slice());

    let newton_matrix = |jac: &DMatrix<f64>| -> DMatrix<f64> {
        let cols = jac * &b_z;
        splitting::hstack(
            &cols,
            &DMatrix::from_column_slice(3, 1, (-&e_ss).as_slice()),
        )
    };
    let lin = newton_matrix(&jz);

    for k in 0..DISC_RAYS {
        let mut prev: Option<(DVector<f64>, f64)> = None;
        let mut prev_norm = 0.0;
        for j in 1..=DISC_RINGS {
            let w = disc.node_w(j, k);
            let target_v = chart * Vector3::new(w[0], w[1], 0.0);
            let target = &x_lift + DVector::from_column_slice(target_v.as_slice());
            let mut unknown = match &prev {
                Some((u, psi)) => {
                    let scale = j as f64 / (j - 1) as f64;
                    let mut g = DVector::zeros(3);
                    g.rows_mut(0, 2).copy_from(&(u * scale));
                    g[2] = psi * scale * scale;
                    g
                }
                None => linalg::solve(&lin, &DVector::from_column_slice(target_v.as_slice()))?,
            };
            let mut converged = false;
            for _ in 0..DISC_NEWTON_MAX_ITERS {
                let u = unknown.rows(0, 2).into_owned();
                let (img, jac) = lift_iterate(f, &(&z_lift + &b_z * &u), n)?;
                let scale = 1.0 + linalg::operator_norm(&jac) * (1.0 + z_lift.norm());
                let resid = img - &target - &e_ss * unknown[2];
                if resid.norm() < DISC_NEWTON_TOL * scale {
                    converged = true;
                    break;
                }
                let step = linalg::solve(&newton_matrix(&jac), &resid).map_err(|_| {
                    Error::DiscConstructionFailure(format!(
                        "singular Newton system at ring {j}, ray {k}"
                    ))
                })?;
                unknown -= step;
                if !unknown.iter().all(|c| c.is_finite()) {
                    break;
                }
            }
            if !converged {
                return Err(Error::DiscConstructionFailure(format!(
                    "graph point at ring {j}, ray {k} did not converge"
                )));
            }
            let u = unknown.rows(0, 2).into_owned();
            // pre-image parameters must move outward along each ray
            if u.norm() <= prev_norm {
                return Err(Error::DiscConstructionFailure(format!(
                    "patch folds at ring {j}, ray {k}"
                )));
            }
            prev_norm = u.norm();
            disc.psi[1 + (j - 1) * DISC_RAYS + k] = unknown[2];
            prev = Some((u, unknown[2]));
        }
    }
    Ok(())
}

/// Lift points with their arclengths.
type Trace = Vec<(DVector<f64>, f64)>;

/// Outcome of the backward contraction check for center-unstable discs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ContractionOutcome {
    Holds,
    Fails,
    PreconditionNotMet,
}

/// `max_{1<=k<=m} ||Df^-k|E^cu(x)||^(1/k)`, the backward contraction rate of
/// the center-unstable bundle along the orbit.
pub fn backward_cu_rate(f: &ToralMap, x: &TorusPoint, m: usize) -> Result<f64> {
    let e_cu = splitting::dominant_subspace(
        f,
        x,
        x.dim() - 1,
        LEAF_FIELD_ITERS,
        Cocycle::Forward,
        DEFAULT_FRAME_SEED,
    )?;
    let mut p = x.clone();
    let mut frame = e_cu.clone();
    let mut worst: f64 = 0.0;
    for k in 1..=m {
        frame = f.inverse_jacobian_at(&p.to_vector())? * frame;
        p = f.apply_inverse(&p)?;
        let norm = linalg::operator_norm(&frame);
        worst = worst.max(norm.powf(1.0 / k as f64));
    }
    Ok(worst)
}

/// Checks `f^-m(W^cu_r0(x)) ⊂ W^cu_{lambda1^m r0}(f^-m(x))` on the disc grid.
pub fn check_contraction_lemma(
    f: &ToralMap,
    x: &TorusPoint,
    r0: f64,
    lambda1: f64,
    m: usize,
) -> Result<ContractionOutcome> {
    if m == 0 {
        return Ok(ContractionOutcome::Holds);
    }
    if !(lambda1 > 0.0 && lambda1 < 1.0) {
        return invalid(format!("lambda1 = {lambda1} not in (0, 1)"));
    }
    if backward_cu_rate(f, x, m)? >= 1.0 {
        return Ok(ContractionOutcome::PreconditionNotMet);
    }
    let source = local_cu_disc(f, x, r0, CONTRACTION_DISC_DEPTH)?;
    let back = f.backward_orbit_point(x, m)?;
    let target = local_cu_disc(
        f,
        &back,
        lambda1.powi(m as i32) * r0,
        CONTRACTION_DISC_DEPTH,
    )?;
    let tol = target.resolution();
    for p in &source.grid {
        let q = f.backward_orbit_point(p, m)?;
        if target.distance_to(&q)? >= tol {
            return Ok(ContractionOutcome::Fails);
        }
    }
    Ok(ContractionOutcome::Holds)
}

/// The single point where a strong stable leaf crosses a center-unstable
/// disc, located on the leaf polyline and refined by bisection.
pub fn transversal_intersection(leaf: &LeafSegment, disc: &CuDisc) -> Result<Option<TorusPoint>> {
    if leaf.base.dim() != 3 {
        return invalid("intersection is defined on T^3");
    }
    let height = |v: &DVector<f64>| -> Result<(f64, f64)> {
        let v3 = Vector3::new(v[0], v[1], v[2]);
        let (w, s) = disc.coordinates(&v3)?;
        Ok((s - disc.psi_interp(&w.cap_magnitude(disc.radius)), w.norm()))
    };
    let base_lift = disc.base.to_vector();
    let mut crossings: Vec<DVector<f64>> = Vec::new();
    let verts = &leaf.vertices;
    if verts.len() == 1 {
        let v = torus::log_map(&disc.base, &verts[0].point)?;
        let (g, rho) = height(&v)?;
        if g == 0.0 && rho <= disc.radius {
            return Ok(Some(verts[0].point.clone()));
        }
        return Ok(None);
    }
    for i in 0..verts.len() - 1 {
        let a = torus::log_map(&disc.base, &verts[i].point)?;
        let b = &a + torus::log_map(&verts[i].point, &verts[i + 1].point)?;
        let (ga, _) = height(&a)?;
        let (gb, rho_b) = height(&b)?;
        if gb == 0.0 {
            if rho_b <= disc.radius {
                crossings.push(b);
            }
            continue;
        }
        if i == 0 && ga == 0.0 {
            if height(&a)?.1 <= disc.radius {
                crossings.push(a);
            }
            continue;
        }
        if ga * gb >= 0.0 {
            continue;
        }
        let (mut lo, mut hi) = (0.0, 1.0);
        let len = (&b - &a).norm();
        while (hi - lo) * len > BISECTION_TOL {
            let mid = 0.5 * (lo + hi);
            let (gm, _) = height(&(&a + (&b - &a) * mid))?;
            if (gm < 0.0) == (ga < 0.0) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let p = &a + (&b - &a) * (0.5 * (lo + hi));
        if height(&p)?.1 <= disc.radius {
            crossings.push(p);
        }
    }
    match crossings.len() {
        0 => Ok(None),
        1 => Ok(Some(torus::wrap_vector(&(base_lift + &crossings[0]))?)),
        n => Err(Error::NonCylinderRegime { crossings: n }),
    }
}
