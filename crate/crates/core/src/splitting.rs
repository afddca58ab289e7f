//! Invariant splitting E^ss + E^c + E^uu, domination constants, Lyapunov
//! exponents and the minimum-norm primitive `m{L} = ||L^-1||^-1`.
//!
//! E^uu and E^cu are the dominant subspaces of the forward Jacobian cocycle,
//! obtained by pushing a generic frame from f^-n(x) to x with QR
//! re-orthonormalization. E^ss and E^cs come from the inverse cocycle along
//! the forward orbit. E^c is the intersection of the two flags, read off the
//! principal angles between E^cu and E^cs.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg;
use crate::maps::ToralMap;
use crate::torus::{self, TorusPoint};

pub const DEFAULT_ITERS: usize = 60;
pub const DEFAULT_FRAME_SEED: u64 = 0x5eed;
const PRINCIPAL_GAP_MIN: f64 = 1e-6;

/// One of the two one-dimensional strong bundles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StrongBundle {
    Ss,
    Uu,
}

impl StrongBundle {
    pub fn other(self) -> Self {
        match self {
            StrongBundle::Ss => StrongBundle::Uu,
            StrongBundle::Uu => StrongBundle::Ss,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            StrongBundle::Ss => "ss",
            StrongBundle::Uu => "uu",
        }
    }
}

/// Dimensions (d_ss, d_c, d_uu) of the splitting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BundleDims {
    pub ss: usize,
    pub c: usize,
    pub uu: usize,
}

impl BundleDims {
    pub fn new(ss: usize, c: usize, uu: usize) -> Self {
        Self { ss, c, uu }
    }

    pub fn total(&self) -> usize {
        self.ss + self.c + self.uu
    }

    /// Dimensions of the splitting of f^-1.
    pub fn reversed(&self) -> Self {
        Self::new(self.uu, self.c, self.ss)
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.ss == 0 || self.c == 0 || self.uu == 0 {
            return invalid(format!(
                "every bundle must be non-trivial, got dims ({}, {}, {})",
                self.ss, self.c, self.uu
            ));
        }
        if self.total() != dim {
            return invalid(format!(
                "bundle dims sum to {}, map dimension is {dim}",
                self.total()
            ));
        }
        Ok(())
    }
}

/// Finite-time expansion rates, as log of the one-step volume expansion per unit dimension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BundleRates {
    pub ss: f64,
    pub c: f64,
    pub uu: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplittingFrame {
    pub point: TorusPoint,
    pub e_ss: DMatrix<f64>,
    pub e_c: DMatrix<f64>,
    pub e_uu: DMatrix<f64>,
    pub rates: BundleRates,
    /// Max over bundles of the angle between Df(E(x)) and E(f(x)).
    pub invariance_residual: f64,
    /// Gap between the last center cosine and the next principal cosine.
    pub principal_gap: f64,
}

impl SplittingFrame {
    pub fn dims(&self) -> BundleDims {
        BundleDims::new(self.e_ss.ncols(), self.e_c.ncols(), self.e_uu.ncols())
    }

    pub fn e_cu(&self) -> DMatrix<f64> {
        linalg::orthonormalize(&hstack(&self.e_c, &self.e_uu)).0
    }

    pub fn e_cs(&self) -> DMatrix<f64> {
        linalg::orthonormalize(&hstack(&self.e_ss, &self.e_c)).0
    }

    pub fn strong(&self, bundle: StrongBundle) -> &DMatrix<f64> {
        match bundle {
            StrongBundle::Ss => &self.e_ss,
            StrongBundle::Uu => &self.e_uu,
        }
    }
}

pub(crate) fn hstack(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(a.nrows(), a.ncols() + b.ncols());
    m.columns_mut(0, a.ncols()).copy_from(a);
    m.columns_mut(a.ncols(), b.ncols()).copy_from(b);
    m
}

/// Which cocycle a dominant subspace is taken from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cocycle {
    /// Most expanded k-plane of Df^n, pushed from f^-n(x).
    Forward,
    /// Most expanded k-plane of Df^-n, pulled back from f^n(x).
    Backward,
}

fn random_frame(d: usize, k: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = DMatrix::from_fn(d, k, |_, _| rng.random::<f64>() * 2.0 - 1.0);
    linalg::orthonormalize(&m).0
}

/// Lift coordinates of f^-j(x) for j = 0..=n (index 0 is x).
fn backward_orbit(f: &ToralMap, x: &TorusPoint, n: usize) -> Result<Vec<DVector<f64>>> {
    let mut out = Vec::with_capacity(n + 1);
    let mut p = x.clone();
    out.push(p.to_vector());
    for _ in 0..n {
        p = f.apply_inverse(&p)?;
        out.push(p.to_vector());
    }
    Ok(out)
}

fn forward_orbit(f: &ToralMap, x: &TorusPoint, n: usize) -> Result<Vec<DVector<f64>>> {
    let mut out = Vec::with_capacity(n + 1);
    let mut p = x.clone();
    out.push(p.to_vector());
    for _ in 0..n {
        p = f.apply(&p)?;
        out.push(p.to_vector());
    }
    Ok(out)
}

fn push_along(
    f: &ToralMap,
    backward: &[DVector<f64>],
    mut frame: DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    for b in backward[1..].iter().rev() {
        frame = linalg::orthonormalize(&(f.jacobian_at(b)? * frame)).0;
    }
    Ok(frame)
}

fn pull_along(
    f: &ToralMap,
    forward: &[DVector<f64>],
    mut frame: DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    for c in forward[..forward.len() - 1].iter().rev() {
        let inv = linalg::inverse(&f.jacobian_at(c)?)?;
        frame = linalg::orthonormalize(&(inv * frame)).0;
    }
    Ok(frame)
}

/// Dominant k-dimensional subspace at `x` of the forward or backward cocycle
/// after `n` iterates, started from a seeded generic frame.
pub fn dominant_subspace(
    f: &ToralMap,
    x: &TorusPoint,
    k: usize,
    n: usize,
    cocycle: Cocycle,
    seed: u64,
) -> Result<DMatrix<f64>> {
    if k == 0 || k > f.dim() {
        return invalid(format!("subspace dimension {k} out of range"));
    }
    let frame = random_frame(f.dim(), k, seed);
    match cocycle {
        Cocycle::Forward => push_along(f, &backward_orbit(f, x, n)?, frame),
        Cocycle::Backward => pull_along(f, &forward_orbit(f, x, n)?, frame),
    }
}

/// Unit vector spanning a one-dimensional strong bundle at `x` (sign arbitrary).
pub fn strong_direction(
    f: &ToralMap,
    x: &TorusPoint,
    bundle: StrongBundle,
    n: usize,
) -> Result<DVector<f64>> {
    let cocycle = match bundle {
        StrongBundle::Uu => Cocycle::Forward,
        StrongBundle::Ss => Cocycle::Backward,
    };
    let m = dominant_subspace(f, x, 1, n, cocycle, DEFAULT_FRAME_SEED)?;
    Ok(m.column(0).into_owned())
}

struct RawSplitting {
    e_ss: DMatrix<f64>,
    e_c: DMatrix<f64>,
    e_uu: DMatrix<f64>,
    gap: f64,
}

fn raw_splitting(
    f: &ToralMap,
    x: &TorusPoint,
    dims: BundleDims,
    n: usize,
    seed: u64,
) -> Result<RawSplitting> {
    let d = f.dim();
    let backward = backward_orbit(f, x, n)?;
    let forward = forward_orbit(f, x, n)?;
    let mut seeds = ChaCha8Rng::seed_from_u64(seed);
    let mut frame = |k: usize| random_frame(d, k, seeds.random());
    let e_uu = push_along(f, &backward, frame(dims.uu))?;
    let e_cu = push_along(f, &backward, frame(dims.c + dims.uu))?;
    let e_ss = pull_along(f, &forward, frame(dims.ss))?;
    let e_cs = pull_along(f, &forward, frame(dims.ss + dims.c))?;

    let (cosines, vectors) = linalg::principal_cosines(&e_cu, &e_cs);
    let gap = cosines[dims.c - 1] - cosines.get(dims.c).copied().unwrap_or(0.0);
    if gap < PRINCIPAL_GAP_MIN {
        return Err(Error::DegenerateSplitting {
            point: x.coords().to_vec(),
            reason: format!("principal-angle gap {gap:e} below {PRINCIPAL_GAP_MIN:e}"),
        });
    }
    let e_c = linalg::orthonormalize(&vectors.columns(0, dims.c).into_owned()).0;

    let stacked = hstack(&hstack(&e_ss, &e_c), &e_uu);
    let span = linalg::smallest_singular_value(&stacked);
    if span < 1e-8 {
        return Err(Error::DegenerateSplitting {
            point: x.coords().to_vec(),
            reason: format!("bundles do not span (smallest singular value {span:e})"),
        });
    }
    Ok(RawSplitting {
        e_ss,
        e_c,
        e_uu,
        gap,
    })
}

/// Orthonormal E^c bases at f^j(y) for j = 0..=len from a single pass:
/// E^cu is pushed forward from f^-n(y) through the whole segment and E^cs
/// is pulled back from f^(len+n)(y).
pub(crate) fn center_along_orbit(
    f: &ToralMap,
    y: &TorusPoint,
    dims: BundleDims,
    len: usize,
    n: usize,
    seed: u64,
) -> Result<Vec<DMatrix<f64>>> {
    dims.validate(f.dim())?;
    if n == 0 {
        return invalid("n_iters must be at least 1");
    }
    let d = f.dim();
    let backward = backward_orbit(f, y, n)?;
    let forward = forward_orbit(f, y, len + n)?;
    let mut seeds = ChaCha8Rng::seed_from_u64(seed);
    let cu_frame = random_frame(d, dims.c + dims.uu, seeds.random());
    let cs_frame = random_frame(d, dims.ss + dims.c, seeds.random());

    let mut cu = Vec::with_capacity(len + 1);
    let mut frame = push_along(f, &backward, cu_frame)?;
    cu.push(frame.clone());
    for p in &forward[..len] {
        frame = linalg::orthonormalize(&(f.jacobian_at(p)? * frame)).0;
        cu.push(frame.clone());
    }

    let mut cs = vec![DMatrix::zeros(0, 0); len + 1];
    let mut frame = pull_along(f, &forward[len..], cs_frame)?;
    cs[len] = frame.clone();
    for j in (0..len).rev() {
        let inv = linalg::inverse(&f.jacobian_at(&forward[j])?)?;
        frame = linalg::orthonormalize(&(inv * frame)).0;
        cs[j] = frame.clone();
    }

    cu.iter()
        .zip(&cs)
        .zip(&forward)
        .map(|((a, b), p)| {
            let (cosines, vectors) = linalg::principal_cosines(a, b);
            let gap = cosines[dims.c - 1] - cosines.get(dims.c).copied().unwrap_or(0.0);
            if gap < PRINCIPAL_GAP_MIN {
                return Err(Error::DegenerateSplitting {
                    point: p.iter().copied().collect(),
                    reason: format!("principal-angle gap {gap:e} below {PRINCIPAL_GAP_MIN:e}"),
                });
            }
            Ok(linalg::orthonormalize(&vectors.columns(0, dims.c).into_owned()).0)
        })
        .collect()
}

fn log_volume_rate(jac: &DMatrix<f64>, basis: &DMatrix<f64>) -> f64 {
    let sv = linalg::singular_values(&(jac * basis));
    sv.iter().map(|s| s.ln()).sum::<f64>() / basis.ncols() as f64
}

pub fn estimate_splitting(
    f: &ToralMap,
    x: &TorusPoint,
    dims: BundleDims,
    n_iters: usize,
) -> Result<SplittingFrame> {
    estimate_splitting_seeded(f, x, dims, n_iters, DEFAULT_FRAME_SEED)
}

pub fn estimate_splitting_seeded(
    f: &ToralMap,
    x: &TorusPoint,
    dims: BundleDims,
    n_iters: usize,
    seed: u64,
) -> Result<SplittingFrame> {
    dims.validate(f.dim())?;
    if x.dim() != f.dim() {
        return invalid("point dimension does not match map");
    }
    if n_iters == 0 {
        return invalid("n_iters must be at least 1");
    }
    let here = raw_splitting(f, x, dims, n_iters, seed)?;
    let fx = f.apply(x)?;
    let there = raw_splitting(f, &fx, dims, n_iters, seed)?;
    let jac = f.jacobian_at(&x.to_vector())?;

    let mut residual: f64 = 0.0;
    for (e, e_next) in [
        (&here.e_ss, &there.e_ss),
        (&here.e_c, &there.e_c),
        (&here.e_uu, &there.e_uu),
    ] {
        let image = linalg::orthonormalize(&(&jac * e)).0;
        residual = residual.max(linalg::subspace_angle(&image, e_next));
    }
    Ok(SplittingFrame {
        point: x.clone(),
        rates: BundleRates {
            ss: log_volume_rate(&jac, &here.e_ss),
            c: log_volume_rate(&jac, &here.e_c),
            uu: log_volume_rate(&jac, &here.e_uu),
        },
        e_ss: here.e_ss,
        e_c: here.e_c,
        e_uu: here.e_uu,
        invariance_residual: residual,
        principal_gap: here.gap,
    })
}

/// `m{L}`: smallest singular value of `jac` restricted to the span of the
/// orthonormal columns of `basis`.
pub fn min_norm(jac: &DMatrix<f64>, basis: &DMatrix<f64>) -> Result<f64> {
    let m = linalg::smallest_singular_value(&(jac * basis));
    if !(m > 1e-14) {
        return Err(Error::NumericalFailure(format!(
            "restriction is singular (m = {m:e})"
        )));
    }
    Ok(m)
}

/// Constants of the dominated splitting estimated over a sample of points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhConstants {
    /// max of ||Df|E^ss|| and ||Df^-1|E^uu||.
    pub lambda: f64,
    /// min of m{Df|E^c} and m{Df^-1|E^c}.
    pub mu: f64,
    pub lambda1: f64,
    pub mu1: f64,
    /// lambda < mu and lambda < 1.
    pub verified: bool,
    /// Pointwise three-way domination: ||Df|E^ss|| < m{Df|E^c} and
    /// ||Df|E^c|| < m{Df|E^uu} at every sample.
    pub dominated: bool,
    /// The center bound mu reaches 1 (neutral center).
    pub boundary: bool,
}

struct PointConstants {
    lambda: f64,
    mu: f64,
    dominated: bool,
}

fn point_constants(f: &ToralMap, frame: &SplittingFrame) -> Result<PointConstants> {
    let x = frame.point.to_vector();
    let jac = f.jacobian_at(&x)?;
    let jac_inv = f.inverse_jacobian_at(&x)?;
    let ss = linalg::operator_norm(&(&jac * &frame.e_ss));
    let uu_back = linalg::operator_norm(&(&jac_inv * &frame.e_uu));
    let c_fwd = min_norm(&jac, &frame.e_c)?;
    let c_back = min_norm(&jac_inv, &frame.e_c)?;
    let c_max = linalg::operator_norm(&(&jac * &frame.e_c));
    let uu_min = min_norm(&jac, &frame.e_uu)?;
    Ok(PointConstants {
        lambda: ss.max(uu_back),
        mu: c_fwd.min(c_back),
        dominated: ss < c_fwd && c_max < uu_min,
    })
}

fn assemble(lambda: f64, mu: f64, dominated: bool) -> PhConstants {
    PhConstants {
        lambda,
        mu,
        lambda1: 0.5 * (lambda + mu),
        mu1: (0.5 * (mu + 1.0)).min(1.0),
        verified: lambda < mu && lambda < 1.0,
        dominated,
        boundary: mu >= 1.0 - 1e-9,
    }
}

pub fn verify_ph_constants(
    f: &ToralMap,
    samples: &[TorusPoint],
    dims: BundleDims,
    n: usize,
) -> Result<PhConstants> {
    if samples.is_empty() {
        return invalid("no sample points");
    }
    let per_point = samples
        .par_iter()
        .map(|x| point_constants(f, &estimate_splitting(f, x, dims, n)?))
        .collect::<Result<Vec<_>>>()?;
    let lambda = per_point.iter().map(|p| p.lambda).fold(0.0, f64::max);
    let mu = per_point.iter().map(|p| p.mu).fold(f64::INFINITY, f64::min);
    Ok(assemble(lambda, mu, per_point.iter().all(|p| p.dominated)))
}

/// Worst-case constants over an explicit family of maps (a finite stand-in
/// for a C^1 neighbourhood): lambda is the max and mu the min over members.
pub fn neighborhood_constants(
    family: &[ToralMap],
    samples: &[TorusPoint],
    dims: BundleDims,
    n: usize,
) -> Result<PhConstants> {
    if family.is_empty() {
        return invalid("empty map family");
    }
    let per_map = family
        .iter()
        .map(|g| verify_ph_constants(g, samples, dims, n))
        .collect::<Result<Vec<_>>>()?;
    let lambda = per_map.iter().map(|c| c.lambda).fold(0.0, f64::max);
    let mu = per_map.iter().map(|c| c.mu).fold(f64::INFINITY, f64::min);
    Ok(assemble(lambda, mu, per_map.iter().all(|c| c.dominated)))
}

/// Finite-time Lyapunov exponents by the QR method, in decreasing order.
///
/// The frame is first carried from f^-n(x) to x so that it is aligned with the
/// Oseledets flag, then the logs of the R diagonals are averaged over n
/// forward steps.
pub fn lyapunov_exponents(f: &ToralMap, x: &TorusPoint, n: usize) -> Result<Vec<f64>> {
    if n < 10 {
        return invalid(format!("lyapunov_exponents needs n >= 10, got {n}"));
    }
    let d = f.dim();
    let start = DMatrix::identity(d, d);
    let mut q = push_along(f, &backward_orbit(f, x, n)?, start)?;
    let mut sums = vec![0.0; d];
    let mut p = x.clone();
    for _ in 0..n {
        let (q_next, r) = linalg::orthonormalize(&(f.jacobian_at(&p.to_vector())? * &q));
        for (s, r_ii) in sums.iter_mut().zip(r.iter()) {
            *s += r_ii.abs().ln();
        }
        q = q_next;
        p = f.apply(&p)?;
    }
    let mut exps: Vec<f64> = sums.iter().map(|s| s / n as f64).collect();
    exps.sort_by(|a, b| b.total_cmp(a));
    Ok(exps)
}

/// Average of log|det Df| along the forward orbit of length n.
pub fn mean_log_det(f: &ToralMap, x: &TorusPoint, n: usize) -> Result<f64> {
    let mut p = x.clone();
    let mut total = 0.0;
    for _ in 0..n {
        total += f.jacobian_at(&p.to_vector())?.determinant().abs().ln();
        p = f.apply(&p)?;
    }
    Ok(total / n as f64)
}

/// Uniform grid of k^d points with coordinates (i + 0.5) / k.
pub fn sample_grid(dim: usize, k: usize) -> Vec<TorusPoint> {
    let total = k.pow(dim as u32);
    (0..total)
        .map(|mut idx| {
            let coords: Vec<f64> = (0..dim)
                .map(|_| {
                    let i = idx % k;
                    idx /= k;
                    (i as f64 + 0.5) / k as f64
                })
                .collect();
            torus::wrap(&coords).expect("grid point")
        })
        .collect()
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::maps::catalog::*;
    use crate::maps::{MapSpec, ShearTemplate};
    use nalgebra::SymmetricEigen;

    pub(crate) fn map(spec: MapSpec) -> ToralMap {
        ToralMap::new(spec).unwrap()
    }

    /// Eigenvectors of the symmetric heptagonal matrix, ascending eigenvalues.
    fn heptagonal_eigen() -> (Vec<f64>, Vec<DMatrix<f64>>) {
        let a = linalg::integer_matrix(&heptagonal_matrix());
        let eig = SymmetricEigen::new(a);
        let mut idx: Vec<usize> = (0..3).collect();
        idx.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        (
            idx.iter().map(|&i| eig.eigenvalues[i]).collect(),
            idx.iter()
                .map(|&i| DMatrix::from_iterator(3, 1, eig.eigenvectors.column(i).iter().copied()))
                .collect(),
        )
    }

    #[test]
    fn two_dimensional_maps_cannot_have_three_bundles() {
        let f = map(cat_map());
        let x = TorusPoint::new(vec![0.1, 0.2]).unwrap();
        let err = estimate_splitting(&f, &x, BundleDims::new(1, 0, 1), 60).unwrap_err();
        assert!(matches!(err, Error::InvalidInput(_)));
    }

    #[test]
    fn heptagonal_bundles_match_eigenvectors() {
        let f = map(heptagonal());
        let (vals, vecs) = heptagonal_eigen();
        // ascending eigenvalues -0.247, 1.445, 2.802: ss, c, uu
        assert!((vals[0] + 0.2470).abs() < 1e-3 && (vals[2] - 2.8019).abs() < 1e-3);
        let x = TorusPoint::new(vec![0.2, 0.7, 0.4]).unwrap();
        let frame = estimate_splitting(&f, &x, BundleDims::new(1, 1, 1), 60).unwrap();
        assert!(linalg::subspace_angle(&frame.e_ss, &vecs[0]) < 1e-6);
        assert!(linalg::subspace_angle(&frame.e_c, &vecs[1]) < 1e-6);
        assert!(linalg::subspace_angle(&frame.e_uu, &vecs[2]) < 1e-6);
        assert!(frame.invariance_residual < 1e-5);
        assert!((frame.rates.uu - vals[2].ln()).abs() < 1e-9);
        assert!((frame.rates.c - vals[1].ln()).abs() < 1e-9);
    }

    #[test]
    fn cat_times_identity_center_is_third_axis() {
        let f = map(cat_times_identity());
        let x = TorusPoint::new(vec![0.3, 0.1, 0.8]).unwrap();
        let frame = estimate_splitting(&f, &x, BundleDims::new(1, 1, 1), 60).unwrap();
        let axis = DMatrix::from_column_slice(3, 1, &[0.0, 0.0, 1.0]);
        assert!(linalg::subspace_angle(&frame.e_c, &axis) < 1e-12);
    }

    #[test]
    fn uncoupled_skew_bundles_are_block_eigendirections() {
        let f = map(shub_skew(0.0));
        let x = TorusPoint::new(vec![0.3, 0.1, 0.8, 0.5]).unwrap();
        let frame = estimate_splitting(&f, &x, BundleDims::new(1, 2, 1), 100).unwrap();
        // base [[3,2],[1,1]] eigenvalues 2 +- sqrt(3)
        let s3 = 3f64.sqrt();
        let uu = DVector::from_column_slice(&[0.0, 0.0, 1.0 + s3, 1.0]).normalize();
        let ss = DVector::from_column_slice(&[0.0, 0.0, 1.0 - s3, 1.0]).normalize();
        let as_mat = |v: DVector<f64>| DMatrix::from_column_slice(4, 1, v.as_slice());
        assert!(linalg::subspace_angle(&frame.e_uu, &as_mat(uu)) < 1e-9);
        assert!(linalg::subspace_angle(&frame.e_ss, &as_mat(ss)) < 1e-9);
        let fiber_plane =
            DMatrix::from_column_slice(4, 2, &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        assert!(linalg::subspace_angle(&frame.e_c, &fiber_plane) < 1e-9);
    }

    #[test]
    fn splitting_independent_of_initial_frame() {
        let template = ShearTemplate {
            center: vec![0.0; 3],
            support_radius: 0.3,
            direction: vec![0.0, 0.0, 1.0],
        };
        let f = map(template.spec(&heptagonal(), 0.05));
        let x = TorusPoint::new(vec![0.05, 0.02, 0.9]).unwrap();
        let dims = BundleDims::new(1, 1, 1);
        let a = estimate_splitting_seeded(&f, &x, dims, 60, 1).unwrap();
        let b = estimate_splitting_seeded(&f, &x, dims, 60, 2).unwrap();
        assert!(linalg::subspace_angle(&a.e_ss, &b.e_ss) < 1e-6);
        assert!(linalg::subspace_angle(&a.e_c, &b.e_c) < 1e-6);
        assert!(linalg::subspace_angle(&a.e_uu, &b.e_uu) < 1e-6);
        assert!(a.invariance_residual < 1e-5);
    }

    #[test]
    fn heptagonal_constants() {
        let f = map(heptagonal());
        let c = verify_ph_constants(&f, &sample_grid(3, 2), BundleDims::new(1, 1, 1), 60).unwrap();
        let (vals, _) = heptagonal_eigen();
        let lambda = vals[0].abs().max(1.0 / vals[2]);
        let mu = vals[1].min(1.0 / vals[1]);
        assert!((c.lambda - lambda).abs() < 1e-9 && (c.lambda - 0.3569).abs() < 1e-4);
        assert!((c.mu - mu).abs() < 1e-9 && (c.mu - 0.6920).abs() < 1e-4);
        assert!(c.verified && c.dominated && !c.boundary);
        assert!(c.lambda < c.lambda1 && c.lambda1 < c.mu && c.mu < c.mu1 && c.mu1 < 1.0);
    }

    #[test]
    fn neutral_center_is_boundary_case() {
        let f = map(cat_times_identity());
        let c = verify_ph_constants(&f, &sample_grid(3, 2), BundleDims::new(1, 1, 1), 60).unwrap();
        let golden = (3.0 - 5f64.sqrt()) / 2.0;
        assert!((c.lambda - golden).abs() < 1e-9);
        assert!((c.mu - 1.0).abs() < 1e-12);
        assert!(c.boundary && c.verified);
    }

    #[test]
    fn zero_amplitude_shear_has_base_constants() {
        let template = ShearTemplate {
            center: vec![0.5; 3],
            support_radius: 0.2,
            direction: vec![1.0, 0.0, 0.0],
        };
        let base = map(heptagonal());
        let g = map(template.spec(&heptagonal(), 0.0));
        let samples = sample_grid(3, 2);
        let dims = BundleDims::new(1, 1, 1);
        assert_eq!(
            verify_ph_constants(&base, &samples, dims, 60).unwrap(),
            verify_ph_constants(&g, &samples, dims, 60).unwrap()
        );
        let nbhd = neighborhood_constants(
            &[base.clone(), map(template.spec(&heptagonal(), 0.02))],
            &samples,
            dims,
            60,
        )
        .unwrap();
        let own = verify_ph_constants(&base, &samples, dims, 60).unwrap();
        assert!(nbhd.lambda >= own.lambda && nbhd.mu <= own.mu);
    }

    #[test]
    fn lyapunov_exponents_match_log_eigenvalues() {
        let f = map(heptagonal());
        let x = TorusPoint::new(vec![0.1, 0.5, 0.3]).unwrap();
        let exps = lyapunov_exponents(&f, &x, 100).unwrap();
        let (vals, _) = heptagonal_eigen();
        let mut oracle: Vec<f64> = vals.iter().map(|v| v.abs().ln()).collect();
        oracle.sort_by(|a, b| b.total_cmp(a));
        for (e, o) in exps.iter().zip(&oracle) {
            assert!((e - o).abs() < 1e-6, "{e} vs {o}");
        }
        assert!(exps.iter().sum::<f64>().abs() < 1e-8);
        assert!(lyapunov_exponents(&f, &x, 9).is_err());
    }

    #[test]
    fn identity_axis_has_zero_exponent() {
        let f = map(cat_times_identity());
        let x = TorusPoint::new(vec![0.1, 0.5, 0.3]).unwrap();
        let exps = lyapunov_exponents(&f, &x, 50).unwrap();
        assert!(exps[1].abs() < 1e-9);
    }

    #[test]
    fn exponent_sum_matches_mean_log_det() {
        let template = ShearTemplate {
            center: vec![0.0; 3],
            support_radius: 0.3,
            direction: vec![0.0, 0.6, 0.8],
        };
        let f = map(template.spec(&heptagonal(), 0.1));
        let x = TorusPoint::new(vec![0.02, 0.01, 0.03]).unwrap();
        let exps = lyapunov_exponents(&f, &x, 40).unwrap();
        let mean = mean_log_det(&f, &x, 40).unwrap();
        assert!((exps.iter().sum::<f64>() - mean).abs() < 1e-8);
    }

    #[test]
    fn min_norm_examples() {
        let scalar = DMatrix::from_element(1, 1, 1.55);
        let basis1 = DMatrix::from_element(1, 1, 1.0);
        assert!((min_norm(&scalar, &basis1).unwrap() - 1.55).abs() < 1e-15);
        let id = DMatrix::<f64>::identity(3, 3);
        let plane = linalg::orthonormalize(&DMatrix::from_column_slice(
            3,
            2,
            &[1.0, 2.0, 0.5, -1.0, 0.0, 3.0],
        ))
        .0;
        assert!((min_norm(&id, &plane).unwrap() - 1.0).abs() < 1e-12);
        let diag = DMatrix::from_row_slice(2, 2, &[3.0, 0.0, 0.0, 0.5]);
        assert!((min_norm(&diag, &DMatrix::identity(2, 2)).unwrap() - 0.5).abs() < 1e-15);
        let singular = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        assert!(min_norm(&singular, &DMatrix::identity(2, 2)).is_err());
    }
}
