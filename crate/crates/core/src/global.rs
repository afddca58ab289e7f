//! Set-oriented global dynamics on a uniform box grid: transition graphs,
//! transitivity, mixing and non-wandering proxies, periodic-point search on
//! the lift, and strong-leaf coverage as a minimality proxy.
//!
//! Box images are sampled on a fixed sub-grid per box rather than enclosed
//! rigorously, so thin intersections can be missed.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::accessibility;
use crate::error::{invalid, Result};
use crate::foliation;
use crate::linalg;
use crate::maps::ToralMap;
use crate::splitting::StrongBundle;
use crate::torus::{self, TorusPoint};

pub const ALLOWED_DIVISIONS: [usize; 4] = [8, 16, 32, 64];
pub const DEFAULT_PERIODIC_TOL: f64 = 1e-10;

const NEWTON_MAX_ITERS: usize = 50;
/// Smallest singular value of Df^k - I below which a root is degenerate.
const DEGENERATE_SV: f64 = 1e-8;

/// Uniform grid of `divisions^d` boxes of side `1 / divisions`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoxGrid {
    pub dim: usize,
    pub divisions: usize,
    /// Samples per box along each axis.
    pub samples_per_box: usize,
}

impl BoxGrid {
    pub fn new(dim: usize, divisions: usize, samples_per_box: usize) -> Result<Self> {
        let g = Self {
            dim,
            divisions,
            samples_per_box,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(torus::MIN_DIM..=torus::MAX_DIM).contains(&self.dim) {
            return invalid(format!("torus dimension {} not in {{2,3,4}}", self.dim));
        }
        if !ALLOWED_DIVISIONS.contains(&self.divisions) {
            return invalid(format!("1/eps = {} not in {{8,16,32,64}}", self.divisions));
        }
        if self.samples_per_box < 4 {
            return invalid(format!(
                "samples_per_box = {} is below 4",
                self.samples_per_box
            ));
        }
        Ok(())
    }

    pub fn eps(&self) -> f64 {
        1.0 / self.divisions as f64
    }

    pub fn len(&self) -> usize {
        self.divisions.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Integer cell coordinates of box `i`, coordinate 0 fastest.
    pub fn cell(&self, mut i: usize) -> Vec<usize> {
        (0..self.dim)
            .map(|_| {
                let c = i % self.divisions;
                i /= self.divisions;
                c
            })
            .collect()
    }

    pub fn index_of(&self, p: &TorusPoint) -> usize {
        let n = self.divisions;
        p.coords().iter().rev().fold(0, |acc, &c| {
            let k = ((c * n as f64).floor() as usize).min(n - 1);
            acc * n + k
        })
    }

    /// Whether `p` lies in the closed box `i` enlarged by `slack`.
    pub fn contains(&self, i: usize, p: &TorusPoint, slack: f64) -> bool {
        let half = 0.5 * self.eps() + slack;
        self.center(i)
            .coords()
            .iter()
            .zip(p.coords())
            .all(|(c, x)| torus::shortest(x - c).abs() <= half)
    }

    pub fn center(&self, i: usize) -> TorusPoint {
        let coords: Vec<f64> = self
            .cell(i)
            .into_iter()
            .map(|c| (c as f64 + 0.5) * self.eps())
            .collect();
        torus::wrap(&coords).expect("box center")
    }

    /// Box corners `k / divisions`, one per box.
    pub fn vertices(&self) -> Vec<TorusPoint> {
        (0..self.len())
            .map(|i| {
                let coords: Vec<f64> = self
                    .cell(i)
                    .into_iter()
                    .map(|c| c as f64 * self.eps())
                    .collect();
                torus::wrap(&coords).expect("grid vertex")
            })
            .collect()
    }

    /// Fixed sub-grid of box `i` at offsets (k + 1/2) / samples_per_box.
    pub fn samples(&self, i: usize) -> Vec<TorusPoint> {
        let s = self.samples_per_box;
        let cell = self.cell(i);
        (0..s.pow(self.dim as u32))
            .map(|mut j| {
                let coords: Vec<f64> = cell
                    .iter()
                    .map(|&c| {
                        let k = j % s;
                        j /= s;
                        (c as f64 + (k as f64 + 0.5) / s as f64) * self.eps()
                    })
                    .collect();
                torus::wrap(&coords).expect("box sample")
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransitionGraph {
    pub grid: BoxGrid,
    pub iterate: usize,
    /// Sorted targets of each box.
    pub adjacency: Vec<Vec<usize>>,
}

impl TransitionGraph {
    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adjacency[i].binary_search(&j).is_ok()
    }
}

fn check_grid(f: &ToralMap, grid: &BoxGrid) -> Result<()> {
    grid.validate()?;
    if grid.dim != f.dim() {
        return invalid("grid dimension does not match map");
    }
    Ok(())
}

/// For every box, the sorted set of boxes hit by its samples after each of
/// `1..=n` iterates. `out[i][m - 1]` are the targets at iterate m.
fn sampled_targets(f: &ToralMap, grid: &BoxGrid, n: usize) -> Result<Vec<Vec<Vec<usize>>>> {
    (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let mut per_iterate = vec![Vec::new(); n];
            for mut p in grid.samples(i) {
                for targets in per_iterate.iter_mut() {
                    p = f.apply(&p)?;
                    targets.push(grid.index_of(&p));
                }
            }
            for t in per_iterate.iter_mut() {
                t.sort_unstable();
                t.dedup();
            }
            Ok(per_iterate)
        })
        .collect()
}

/// Edge i -> j iff some sample of box i lands in box j under f^n.
pub fn transition_graph(f: &ToralMap, grid: &BoxGrid, n: usize) -> Result<TransitionGraph> {
    check_grid(f, grid)?;
    if n == 0 {
        return invalid("iterate count must be at least 1");
    }
    let targets = sampled_targets(f, grid, n)?;
    Ok(TransitionGraph {
        grid: *grid,
        iterate: n,
        adjacency: targets.into_iter().map(|mut t| t.pop().unwrap()).collect(),
    })
}

fn reaches_all(adjacency: &[Vec<usize>], start: usize) -> bool {
    let mut seen = vec![false; adjacency.len()];
    let mut stack = vec![start];
    seen[start] = true;
    while let Some(i) = stack.pop() {
        for &j in &adjacency[i] {
            if !seen[j] {
                seen[j] = true;
                stack.push(j);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

fn is_strongly_connected(adjacency: &[Vec<usize>]) -> bool {
    let mut reverse = vec![Vec::new(); adjacency.len()];
    for (i, targets) in adjacency.iter().enumerate() {
        for &j in targets {
            reverse[j].push(i);
        }
    }
    reaches_all(adjacency, 0) && reaches_all(&reverse, 0)
}

/// Strong connectivity of the union of the sampled graphs for f^1..f^n_union.
pub fn transitivity_test(f: &ToralMap, grid: &BoxGrid, n_union: usize) -> Result<bool> {
    check_grid(f, grid)?;
    if n_union == 0 {
        return invalid("n_union must be at least 1");
    }
    let union: Vec<Vec<usize>> = sampled_targets(f, grid, n_union)?
        .into_iter()
        .map(|per_iterate| {
            let mut all: Vec<usize> = per_iterate.into_iter().flatten().collect();
            all.sort_unstable();
            all.dedup();
            all
        })
        .collect();
    Ok(is_strongly_connected(&union))
}

/// Square boolean matrix stored as packed rows.
#[derive(Debug, Clone, PartialEq, Eq)]
struct BitMatrix {
    n: usize,
    words: usize,
    bits: Vec<u64>,
}

impl BitMatrix {
    fn from_adjacency(adjacency: &[Vec<usize>]) -> Self {
        let n = adjacency.len();
        let words = n.div_ceil(64);
        let mut bits = vec![0; n * words];
        for (i, targets) in adjacency.iter().enumerate() {
            for &j in targets {
                bits[i * words + j / 64] |= 1 << (j % 64);
            }
        }
        Self { n, words, bits }
    }

    fn row(&self, i: usize) -> &[u64] {
        &self.bits[i * self.words..(i + 1) * self.words]
    }

    fn get(&self, i: usize, j: usize) -> bool {
        self.row(i)[j / 64] >> (j % 64) & 1 == 1
    }

    fn row_count(&self, i: usize) -> usize {
        self.row(i).iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Boolean product self * other.
    fn times(&self, other: &BitMatrix) -> BitMatrix {
        let words = self.words;
        let bits: Vec<u64> = (0..self.n)
            .into_par_iter()
            .flat_map_iter(|i| {
                let mut acc = vec![0u64; words];
                for (w, &word) in self.row(i).iter().enumerate() {
                    let mut rest = word;
                    while rest != 0 {
                        let j = w * 64 + rest.trailing_zeros() as usize;
                        rest &= rest - 1;
                        for (a, b) in acc.iter_mut().zip(other.row(j)) {
                            *a |= b;
                        }
                    }
                }
                acc
            })
            .collect();
        BitMatrix {
            n: self.n,
            words,
            bits,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixingReport {
    /// Least n with every power G^m, n <= m <= n_max, full.
    pub n0: Option<usize>,
    /// Fraction of box pairs (i, j) with a path of length m, for m = 1..=n_max.
    pub coverage: Vec<f64>,
    /// Number of boxes reached from each box by paths of length n_max.
    pub tail_row_counts: Vec<usize>,
}

/// Boolean powers of the one-step transition graph.
pub fn mixing_test(f: &ToralMap, grid: &BoxGrid, n_max: usize) -> Result<MixingReport> {
    if n_max < 2 {
        return invalid("n_max must be at least 2");
    }
    let g = BitMatrix::from_adjacency(&transition_graph(f, grid, 1)?.adjacency);
    let n = g.n;
    let total = (n * n) as f64;
    let mut power = g.clone();
    let mut coverage = Vec::with_capacity(n_max);
    for m in 1..=n_max {
        if m > 1 {
            power = power.times(&g);
        }
        let ones: usize = (0..n).map(|i| power.row_count(i)).sum();
        coverage.push(ones as f64 / total);
    }
    let full_tail = coverage.iter().rev().take_while(|&&c| c == 1.0).count();
    let n0 = (full_tail > 0).then(|| n_max - full_tail + 1);
    Ok(MixingReport {
        n0,
        coverage,
        tail_row_counts: (0..n).map(|i| power.row_count(i)).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonwanderingReport {
    pub fraction: f64,
    /// First return time of each box in the graph, if within n_max.
    pub return_times: Vec<Option<usize>>,
}

/// Fraction of boxes with a closed path of length in [1, n_max] through
/// them in the sampled one-step graph of `f`.
pub fn nonwandering_test(f: &ToralMap, grid: &BoxGrid, n_max: usize) -> Result<NonwanderingReport> {
    if n_max == 0 {
        return invalid("n_max must be at least 1");
    }
    let g = BitMatrix::from_adjacency(&transition_graph(f, grid, 1)?.adjacency);
    let n = g.n;
    let mut return_times = vec![None; n];
    let mut power = g.clone();
    for m in 1..=n_max {
        if m > 1 {
            power = power.times(&g);
        }
        for (i, t) in return_times.iter_mut().enumerate() {
            if t.is_none() && power.get(i, i) {
                *t = Some(m);
            }
        }
        if return_times.iter().all(Option::is_some) {
            break;
        }
    }
    let returned = return_times.iter().filter(|t| t.is_some()).count();
    Ok(NonwanderingReport {
        fraction: returned as f64 / n as f64,
        return_times,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicPoint {
    pub point: TorusPoint,
    pub period: usize,
    /// Df^k - I is singular to tolerance at the root.
    pub degenerate: bool,
    /// Independently recomputed dist(f^k(x), x).
    pub residual: f64,
}

impl PeriodicPoint {
    pub fn hyperbolic(&self) -> bool {
        !self.degenerate
    }
}

/// Lift of f^k and its Jacobian at `x`.
fn lift_iterate(f: &ToralMap, x: &DVector<f64>, k: usize) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let d = f.dim();
    let mut y = x.clone();
    let mut jac = DMatrix::identity(d, d);
    for _ in 0..k {
        jac = f.jacobian_at(&y)? * jac;
        y = f.lift(&y)?;
    }
    Ok((y, jac))
}

/// Least-squares step for (J - I) delta = -g, tolerant of singular J - I.
fn newton_step(jac: &DMatrix<f64>, g: &DVector<f64>) -> Option<(DVector<f64>, f64)> {
    let a = jac - DMatrix::identity(jac.nrows(), jac.ncols());
    let svd = a.svd(true, true);
    let smallest = svd.singular_values.min();
    let eps = svd.singular_values.max() * 1e-12;
    let step = svd.solve(&(-g), eps).ok()?;
    Some((step, smallest))
}

struct Root {
    x: DVector<f64>,
    smallest_sv: f64,
}

fn newton_root(
    f: &ToralMap,
    x0: &DVector<f64>,
    m: &DVector<f64>,
    k: usize,
    tol: f64,
) -> Result<Option<Root>> {
    let mut x = x0.clone();
    for _ in 0..NEWTON_MAX_ITERS {
        let (y, jac) = lift_iterate(f, &x, k)?;
        let g = &y - &x - m;
        let Some((step, smallest_sv)) = newton_step(&jac, &g) else {
            return Ok(None);
        };
        if !step.iter().all(|s| s.is_finite()) || step.norm() > 1.0 {
            return Ok(None);
        }
        x += &step;
        if g.norm() < 1e-2 * tol || step.norm() < 1e-3 * tol {
            return Ok(Some(Root { x, smallest_sv }));
        }
    }
    Ok(None)
}

/// Bound on the Lipschitz constant of x -> F^k(x) - x: exact for constant
/// Jacobians, otherwise from the largest sampled ||Df|| with 10% slack.
fn displacement_lipschitz(f: &ToralMap, seeds: &[TorusPoint], k: usize) -> Result<f64> {
    if f.has_constant_jacobian() {
        let (_, jac) = lift_iterate(f, &seeds[0].to_vector(), k)?;
        let d = f.dim();
        return Ok(linalg::operator_norm(&(jac - DMatrix::identity(d, d))));
    }
    let mut l: f64 = 0.0;
    for s in seeds {
        l = l.max(linalg::operator_norm(&f.jacobian_at(&s.to_vector())?));
    }
    Ok((1.1 * l).powi(k as i32) + 1.0)
}

/// All fixed points of f^k found by Newton on F^k(x) - x - m from the box
/// centers of `seed_grid`. Each seed tries every translate m within reach
/// of its box and keeps only roots that land in (the closure of) that box.
pub fn find_periodic_points(
    f: &ToralMap,
    k: usize,
    seed_grid: &BoxGrid,
    tol: f64,
) -> Result<Vec<PeriodicPoint>> {
    check_grid(f, seed_grid)?;
    if k == 0 {
        return invalid("period must be at least 1");
    }
    if !(tol > 0.0) {
        return invalid("tolerance must be positive");
    }
    let d = f.dim();
    let seeds: Vec<TorusPoint> = (0..seed_grid.len()).map(|i| seed_grid.center(i)).collect();
    let lip = displacement_lipschitz(f, &seeds, k)?;
    let half_diag = 0.5 * seed_grid.eps() * (d as f64).sqrt();
    let reach = (lip * half_diag).ceil() as i64 + 1;

    let per_seed: Vec<Vec<PeriodicPoint>> = seeds
        .par_iter()
        .enumerate()
        .map(|(i, seed)| {
            let x0 = seed.to_vector();
            let (y0, _) = lift_iterate(f, &x0, k)?;
            let centre: Vec<i64> = (&y0 - &x0).iter().map(|v| v.round() as i64).collect();
            let mut found: Vec<PeriodicPoint> = Vec::new();
            let side = (2 * reach + 1) as usize;
            for code in 0..side.pow(d as u32) {
                let mut c = code;
                let m = DVector::from_iterator(
                    d,
                    centre.iter().map(|&m0| {
                        let off = (c % side) as i64 - reach;
                        c /= side;
                        (m0 + off) as f64
                    }),
                );
                let Some(root) = newton_root(f, &x0, &m, k, tol)? else {
                    continue;
                };
                let point = torus::wrap_vector(&root.x)?;
                if !seed_grid.contains(i, &point, 1e-9) {
                    continue;
                }
                let residual = torus::dist(&f.orbit_point(&point, k)?, &point)?;
                if residual >= tol {
                    continue;
                }
                if found
                    .iter()
                    .any(|q| torus::dist(&q.point, &point).unwrap_or(f64::INFINITY) < 10.0 * tol)
                {
                    continue;
                }
                found.push(PeriodicPoint {
                    point,
                    period: k,
                    degenerate: root.smallest_sv < DEGENERATE_SV,
                    residual,
                });
            }
            Ok(found)
        })
        .collect::<Result<_>>()?;

    // roots on a box boundary can be claimed by two seeds
    let mut out: Vec<PeriodicPoint> = Vec::new();
    for p in per_seed.into_iter().flatten() {
        if !out
            .iter()
            .any(|q| torus::dist(&q.point, &p.point).unwrap_or(f64::INFINITY) < 10.0 * tol)
        {
            out.push(p);
        }
    }
    out.sort_by(|a, b| {
        a.point
            .coords()
            .partial_cmp(b.point.coords())
            .expect("finite coordinates")
    });
    Ok(out)
}

/// Covering radius of the periodic points over the vertices of `reference`.
pub fn periodic_density_gap(points: &[PeriodicPoint], reference: &BoxGrid) -> Result<f64> {
    reference.validate()?;
    let pts: Vec<TorusPoint> = points.iter().map(|p| p.point.clone()).collect();
    accessibility::covering_radius(&pts, &reference.vertices())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimalityReport {
    /// min over box centers x of (boxes visited by F_r(x)) / (total boxes).
    pub covered_fraction: f64,
    pub worst_box: usize,
    /// Boxes visited from each box center; None where leaf growth failed.
    pub visited: Vec<Option<usize>>,
}

/// Grows the strong leaf of radius `leaf_radius` through every box center
/// and counts the boxes it visits.
pub fn minimality_test(
    f: &ToralMap,
    bundle: StrongBundle,
    leaf_radius: f64,
    grid: &BoxGrid,
) -> Result<MinimalityReport> {
    check_grid(f, grid)?;
    if !(leaf_radius >= 1.0 && leaf_radius.is_finite()) {
        return invalid(format!("leaf radius {leaf_radius} must be at least 1"));
    }
    let h = (leaf_radius / 50.0).min(grid.eps() / 4.0);
    let visited: Vec<Option<usize>> = (0..grid.len())
        .into_par_iter()
        .map(
            |i| match foliation::grow_leaf(f, &grid.center(i), bundle, leaf_radius, h) {
                Ok(leaf) => {
                    let mut hit = vec![false; grid.len()];
                    for v in &leaf.vertices {
                        hit[grid.index_of(&v.point)] = true;
                    }
                    Some(hit.into_iter().filter(|&b| b).count())
                }
                Err(e) => {
                    log::warn!("leaf through box {i} dropped: {e}");
                    None
                }
            },
        )
        .collect();
    let total = grid.len() as f64;
    let (worst_box, worst) = visited
        .iter()
        .enumerate()
        .filter_map(|(i, v)| v.map(|v| (i, v)))
        .min_by_key(|&(i, v)| (v, i))
        .ok_or_else(|| crate::Error::Undefined("every leaf failed to grow".into()))?;
    Ok(MinimalityReport {
        covered_fraction: worst as f64 / total,
        worst_box,
        visited,
    })
}
