//! us-paths: chains of strong stable and strong unstable leaf arcs.
//!
//! `endpoint_map` composes leaf flows for given signed leg lengths;
//! `solve_us_path` shoots for a target with multistart Levenberg-Marquardt on
//! the leg lengths, using finite-difference Jacobians of the endpoint map. A
//! failed search only means no path was found within the budget.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::foliation::{self, CuDisc, LineField};
use crate::maps::ToralMap;
use crate::splitting::{self, StrongBundle};
use crate::torus::{self, TorusPoint};

const FD_STEP: f64 = 1e-4;
const LM_MAX_ITERS: usize = 200;
const LM_MAX_DAMPING: f64 = 1e12;
const CONNECT_DISC_DEPTH: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Leg {
    pub bundle: StrongBundle,
    /// Signed arclength along the leaf.
    pub t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UsPath {
    pub start: TorusPoint,
    pub legs: Vec<Leg>,
    /// z_0 = start, z_i = end of leg i.
    pub vertices: Vec<TorusPoint>,
    pub endpoint: TorusPoint,
    /// Distance from the endpoint to the requested target; infinite when no
    /// target was given.
    pub residual: f64,
}

impl UsPath {
    pub fn total_length(&self) -> f64 {
        self.legs.iter().map(|l| l.t.abs()).sum()
    }

    /// Legs retraced in reverse order with negated lengths.
    pub fn reversed_legs(&self) -> Vec<Leg> {
        self.legs
            .iter()
            .rev()
            .map(|l| Leg {
                bundle: l.bundle,
                t: -l.t,
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSearchBudget {
    pub max_legs: usize,
    /// Bound R on each |t_i|.
    pub max_leg_length: f64,
    /// Success threshold delta on the endpoint residual.
    pub tolerance: f64,
    pub multistarts: usize,
    pub seed: u64,
    /// Leaf integration step.
    #[serde(default = "default_step")]
    pub step: f64,
}

fn default_step() -> f64 {
    0.01
}

impl PathSearchBudget {
    pub fn default_for(dim: usize) -> Self {
        Self {
            max_legs: if dim >= 4 { 6 } else { 4 },
            max_leg_length: 1.0,
            tolerance: 0.05,
            multistarts: 8,
            seed: 0,
            step: default_step(),
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.max_legs + 1 < dim {
            return invalid(format!(
                "max_legs = {} is below d - 1 = {}",
                self.max_legs,
                dim - 1
            ));
        }
        if !(self.tolerance > 0.0) {
            return invalid("tolerance must be positive");
        }
        if !(self.max_leg_length > 0.0 && self.max_leg_length.is_finite()) {
            return invalid("max_leg_length must be positive and finite");
        }
        if !(self.step > 0.0) {
            return invalid("leaf step must be positive");
        }
        Ok(())
    }
}

/// Leaf flows for both strong bundles of one map.
pub struct PathEngine<'a> {
    f: &'a ToralMap,
    ss: LineField<'a>,
    uu: LineField<'a>,
    step: f64,
}

impl<'a> PathEngine<'a> {
    pub fn new(f: &'a ToralMap, step: f64) -> Result<Self> {
        Ok(Self {
            f,
            ss: LineField::new(f, StrongBundle::Ss)?,
            uu: LineField::new(f, StrongBundle::Uu)?,
            step,
        })
    }

    fn field(&self, bundle: StrongBundle) -> &LineField<'a> {
        match bundle {
            StrongBundle::Ss => &self.ss,
            StrongBundle::Uu => &self.uu,
        }
    }

    pub fn map(&self) -> &ToralMap {
        self.f
    }

    /// Applies the legs in order starting from `p`.
    pub fn run(&self, p: &TorusPoint, legs: &[Leg]) -> Result<UsPath> {
        let mut vertices = vec![p.clone()];
        let mut z = p.clone();
        for leg in legs {
            if leg.t != 0.0 {
                let pts = foliation::flow_with_field(self.field(leg.bundle), &z, leg.t, self.step)
                    .map_err(|e| match e {
                        Error::LeafGrowthFailure { reason, .. } => Error::LeafGrowthFailure {
                            reason,
                            partial: vertices.clone(),
                        },
                        other => other,
                    })?;
                z = pts.last().expect("flow returns the start").clone();
            }
            vertices.push(z.clone());
        }
        Ok(UsPath {
            start: p.clone(),
            legs: legs.to_vec(),
            endpoint: z,
            vertices,
            residual: f64::INFINITY,
        })
    }
}

pub fn endpoint_map(f: &ToralMap, p: &TorusPoint, legs: &[Leg], step: f64) -> Result<UsPath> {
    PathEngine::new(f, step)?.run(p, legs)
}

fn pattern(k: usize, first: StrongBundle) -> Vec<StrongBundle> {
    (0..k)
        .map(|i| if i % 2 == 0 { first } else { first.other() })
        .collect()
}

fn legs_from(pattern: &[StrongBundle], t: &[f64]) -> Vec<Leg> {
    pattern
        .iter()
        .zip(t)
        .map(|(b, t)| Leg { bundle: *b, t: *t })
        .collect()
}

/// Damped Gauss-Newton on `|r(t)|^2` with t clamped to [-bound, bound].
/// Returns the final parameters and residual norm.
fn levenberg_marquardt(
    residual: &dyn Fn(&[f64]) -> Result<DVector<f64>>,
    t0: Vec<f64>,
    bound: f64,
    target: f64,
) -> Option<(Vec<f64>, f64)> {
    let k = t0.len();
    let mut t = t0;
    let mut r = residual(&t).ok()?;
    let mut cost = r.norm();
    let mut damping = 1e-3;
    for _ in 0..LM_MAX_ITERS {
        if cost <= target {
            break;
        }
        let mut jac = DMatrix::zeros(r.len(), k);
        for i in 0..k {
            let mut tp = t.clone();
            // step inward at the box boundary
            let h = if tp[i] + FD_STEP > bound {
                -FD_STEP
            } else {
                FD_STEP
            };
            tp[i] += h;
            let rp = residual(&tp).ok()?;
            jac.set_column(i, &((rp - &r) / h));
        }
        let jtj = jac.transpose() * &jac;
        let grad = jac.transpose() * &r;
        let mut improved = false;
        while damping < LM_MAX_DAMPING {
            let mut a = jtj.clone();
            for i in 0..k {
                a[(i, i)] += damping * (jtj[(i, i)] + 1e-9);
            }
            let Some(delta) = a.lu().solve(&(-&grad)) else {
                damping *= 4.0;
                continue;
            };
            let trial: Vec<f64> = t
                .iter()
                .zip(delta.iter())
                .map(|(ti, di)| (ti + di).clamp(-bound, bound))
                .collect();
            match residual(&trial) {
                Ok(rt) if rt.norm() < cost => {
                    t = trial;
                    r = rt;
                    cost = r.norm();
                    damping = (damping / 3.0).max(1e-12);
                    improved = true;
                    break;
                }
                _ => damping *= 4.0,
            }
        }
        if !improved {
            break;
        }
    }
    Some((t, cost))
}

struct Candidate {
    t: Vec<f64>,
    pattern: Vec<StrongBundle>,
    order: usize,
}

fn better(a: &Candidate, b: &Candidate) -> bool {
    let la: f64 = a.t.iter().map(|x| x.abs()).sum();
    let lb: f64 = b.t.iter().map(|x| x.abs()).sum();
    la < lb || (la == lb && a.order < b.order)
}

/// Generic shooting driver: `residual(endpoint)` is the vector whose norm
/// must drop below `threshold`; `last` restricts the bundle of the final leg.
fn shoot(
    engine: &PathEngine<'_>,
    p: &TorusPoint,
    budget: &PathSearchBudget,
    threshold: f64,
    residual: &(dyn Fn(&TorusPoint) -> Result<DVector<f64>> + Sync),
    last: Option<StrongBundle>,
    warm: &[UsPath],
) -> Result<Option<UsPath>> {
    let zero = engine.run(p, &[])?;
    let zero_res = residual(&zero.endpoint)?.norm();
    if zero_res <= threshold {
        return Ok(Some(UsPath {
            residual: zero_res,
            ..zero
        }));
    }
    let r = budget.max_leg_length;
    for k in 1..=budget.max_legs {
        let mut best: Option<Candidate> = None;
        let mut order = 0;
        for w in warm
            .iter()
            .filter(|w| w.legs.len() == k && w.legs.iter().all(|l| l.t.abs() <= r) && w.start == *p)
        {
            let t: Vec<f64> = w.legs.iter().map(|l| l.t).collect();
            let pat: Vec<StrongBundle> = w.legs.iter().map(|l| l.bundle).collect();
            if last.is_some_and(|b| pat.last() != Some(&b)) {
                continue;
            }
            if let Ok(path) = engine.run(p, &legs_from(&pat, &t)) {
                if residual(&path.endpoint)?.norm() <= threshold {
                    let c = Candidate {
                        t,
                        pattern: pat,
                        order,
                    };
                    if best.as_ref().is_none_or(|b| better(&c, b)) {
                        best = Some(c);
                    }
                }
            }
            order += 1;
        }
        for first in [StrongBundle::Uu, StrongBundle::Ss] {
            let pat = pattern(k, first);
            if last.is_some_and(|b| pat.last() != Some(&b)) {
                continue;
            }
            let eval = |t: &[f64]| -> Result<DVector<f64>> {
                let path = engine.run(p, &legs_from(&pat, t))?;
                residual(&path.endpoint)
            };
            let mut rng = ChaCha8Rng::seed_from_u64(budget.seed);
            rng.set_stream((k as u64) << 1 | u64::from(first == StrongBundle::Ss));
            let starts: Vec<Vec<f64>> = (0..budget.multistarts.max(1))
                .map(|s| {
                    if s == 0 {
                        vec![0.0; k]
                    } else {
                        (0..k).map(|_| rng.random_range(-r..=r)).collect()
                    }
                })
                .collect();
            for start in starts {
                if let Some((t, cost)) = levenberg_marquardt(&eval, start, r, threshold) {
                    if cost <= threshold {
                        let c = Candidate {
                            t,
                            pattern: pat.clone(),
                            order,
                        };
                        if best.as_ref().is_none_or(|b| better(&c, b)) {
                            best = Some(c);
                        }
                    }
                }
                order += 1;
            }
        }
        if let Some(c) = best {
            let path = engine.run(p, &legs_from(&c.pattern, &c.t))?;
            let res = residual(&path.endpoint)?.norm();
            return Ok(Some(UsPath {
                residual: res,
                ..path
            }));
        }
    }
    Ok(None)
}

/// us-path from p ending within `budget.tolerance` of q, with the fewest legs
/// found and, among those, the smallest total length.
pub fn solve_us_path(
    f: &ToralMap,
    p: &TorusPoint,
    q: &TorusPoint,
    budget: &PathSearchBudget,
) -> Result<Option<UsPath>> {
    solve_us_path_warm(f, p, q, budget, &[])
}

/// As [`solve_us_path`], also trying previously found paths that fit the budget.
pub fn solve_us_path_warm(
    f: &ToralMap,
    p: &TorusPoint,
    q: &TorusPoint,
    budget: &PathSearchBudget,
    warm: &[UsPath],
) -> Result<Option<UsPath>> {
    budget.validate(f.dim())?;
    let engine = PathEngine::new(f, budget.step)?;
    solve_with_engine(&engine, p, q, budget, warm)
}

fn solve_with_engine(
    engine: &PathEngine<'_>,
    p: &TorusPoint,
    q: &TorusPoint,
    budget: &PathSearchBudget,
    warm: &[UsPath],
) -> Result<Option<UsPath>> {
    let residual = |e: &TorusPoint| torus::log_map(q, e);
    shoot(engine, p, budget, budget.tolerance, &residual, None, warm)
}

/// us-path from p to the center-unstable disc W^cu_r(q), last leg stable;
/// success once the endpoint is within the disc's grid resolution.
pub fn connect_to_cu_disc(
    f: &ToralMap,
    p: &TorusPoint,
    q: &TorusPoint,
    r: f64,
    budget: &PathSearchBudget,
) -> Result<Option<(UsPath, CuDisc)>> {
    budget.validate(f.dim())?;
    let disc = foliation::local_cu_disc(f, q, r, CONNECT_DISC_DEPTH)?;
    let engine = PathEngine::new(f, budget.step)?;
    let residual = |e: &TorusPoint| disc.offset_to(e);
    let found = shoot(
        &engine,
        p,
        budget,
        disc.resolution(),
        &residual,
        Some(StrongBundle::Ss),
        &[],
    )?;
    Ok(found.map(|path| (path, disc)))
}

/// Random us-paths from p with `budget.max_legs` alternating legs (first
/// leg unstable) and lengths uniform in [-R, R].
pub fn accessibility_class_paths(
    f: &ToralMap,
    p: &TorusPoint,
    n_paths: usize,
    budget: &PathSearchBudget,
) -> Result<Vec<UsPath>> {
    budget.validate(f.dim())?;
    if n_paths == 0 {
        return Ok(Vec::new());
    }
    let engine = PathEngine::new(f, budget.step)?;
    let pat = pattern(budget.max_legs, StrongBundle::Uu);
    let r = budget.max_leg_length;
    let results: Vec<Result<UsPath>> = (0..n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(budget.seed);
            rng.set_stream(i as u64);
            let t: Vec<f64> = (0..pat.len()).map(|_| rng.random_range(-r..=r)).collect();
            engine.run(p, &legs_from(&pat, &t))
        })
        .collect();
    let mut out = Vec::with_capacity(n_paths);
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(path) => out.push(path),
            Err(e) => log::warn!("accessibility sample {i} dropped: {e}"),
        }
    }
    Ok(out)
}

pub fn accessibility_class_sample(
    f: &ToralMap,
    p: &TorusPoint,
    n_paths: usize,
    budget: &PathSearchBudget,
) -> Result<Vec<TorusPoint>> {
    Ok(accessibility_class_paths(f, p, n_paths, budget)?
        .into_iter()
        .map(|path| path.endpoint)
        .collect())
}

/// Max over reference points of the distance to the nearest sample.
pub fn covering_radius(samples: &[TorusPoint], reference: &[TorusPoint]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Undefined(
            "covering radius of an empty sample".into(),
        ));
    }
    let per_ref = reference
        .par_iter()
        .map(|x| {
            samples
                .iter()
                .map(|s| torus::dist(x, s))
                .try_fold(f64::INFINITY, |m, d| d.map(|d| m.min(d)))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(per_ref.into_iter().fold(0.0, f64::max))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpenSetReport {
    pub divisions: usize,
    pub delta: f64,
    /// `success[i][j]`: residual of the path from box i to box j, or -1.
    pub success: Vec<Vec<f64>>,
    pub failures: Vec<(usize, usize)>,
    pub success_rate: f64,
}

/// Tries to connect every ordered pair of box centers of the 1/grid_eps grid.
pub fn open_set_accessibility_test(
    f: &ToralMap,
    grid_eps: f64,
    delta: f64,
    budget: &PathSearchBudget,
) -> Result<OpenSetReport> {
    let divisions = (1.0 / grid_eps).round() as usize;
    if divisions == 0 || ((divisions as f64) * grid_eps - 1.0).abs() > 1e-9 {
        return invalid(format!(
            "1/grid_eps must be a positive integer, got {grid_eps}"
        ));
    }
    let budget = PathSearchBudget {
        tolerance: delta,
        ..budget.clone()
    };
    budget.validate(f.dim())?;
    let engine = PathEngine::new(f, budget.step)?;
    let centers = splitting::sample_grid(f.dim(), divisions);
    let n = centers.len();
    let cells: Vec<f64> = (0..n * n)
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx / n, idx % n);
            match solve_with_engine(&engine, &centers[i], &centers[j], &budget, &[]) {
                Ok(Some(path)) => path.residual,
                Ok(None) => -1.0,
                Err(e) => {
                    log::warn!("pair ({i}, {j}) failed: {e}");
                    -1.0
                }
            }
        })
        .collect();
    let success: Vec<Vec<f64>> = cells.chunks(n).map(|c| c.to_vec()).collect();
    let failures: Vec<(usize, usize)> = (0..n * n)
        .filter(|&idx| cells[idx] < 0.0)
        .map(|idx| (idx / n, idx % n))
        .collect();
    Ok(OpenSetReport {
        divisions,
        delta,
        success_rate: 1.0 - failures.len() as f64 / (n * n) as f64,
        success,
        failures,
    })
}

/// Largest distance from a reported vertex to the leaf regrown from the
/// previous vertex with step `h`. Along-leaf drift is projected out, so this
/// measures how far each vertex sits off its stated leaf.
pub fn verify_path(f: &ToralMap, path: &UsPath, h: f64) -> Result<f64> {
    let engine = PathEngine::new(f, h)?;
    let mut worst: f64 = 0.0;
    for (i, leg) in path.legs.iter().enumerate() {
        let field = engine.field(leg.bundle);
        let target = &path.vertices[i + 1];
        let mut anchor = engine.run(&path.vertices[i], &[*leg])?.endpoint;
        for _ in 0..3 {
            let tangent = field.canonical(&anchor.to_vector())?;
            let sigma = torus::log_map(&anchor, target)?.dot(&tangent);
            if sigma.abs() < 1e-15 {
                break;
            }
            let pts = foliation::flow_with_field(field, &anchor, sigma, h)?;
            anchor = pts.last().expect("flow returns the start").clone();
        }
        worst = worst.max(torus::dist(&anchor, target)?);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::catalog::*;
    use crate::maps::{MapSpec, ShearTemplate};

    fn map(spec: MapSpec) -> ToralMap {
        ToralMap::new(spec).unwrap()
    }

    fn pt(c: &[f64]) -> TorusPoint {
        TorusPoint::new(c.to_vec()).unwrap()
    }

    fn budget(max_legs: usize, r: f64, delta: f64) -> PathSearchBudget {
        PathSearchBudget {
            max_legs,
            max_leg_length: r,
            tolerance: delta,
            multistarts: 12,
            seed: 7,
            step: 0.01,
        }
    }

    #[test]
    fn zero_path_cases() {
        let f = map(heptagonal());
        let p = pt(&[0.2, 0.3, 0.4]);
        let path = endpoint_map(
            &f,
            &p,
            &[
                Leg {
                    bundle: StrongBundle::Uu,
                    t: 0.0,
                },
                Leg {
                    bundle: StrongBundle::Ss,
                    t: 0.0,
                },
            ],
            0.01,
        )
        .unwrap();
        assert_eq!(path.endpoint, p);
        assert!(path.vertices.iter().all(|v| *v == p));
        assert!(path.residual.is_infinite());

        let solved = solve_us_path(&f, &p, &p, &budget(4, 1.0, 0.05))
            .unwrap()
            .unwrap();
        assert!(solved.legs.is_empty() && solved.residual == 0.0);
    }

    #[test]
    fn linear_endpoint_closed_form() {
        let f = map(heptagonal());
        let p = pt(&[0.2, 0.3, 0.4]);
        let engine = PathEngine::new(&f, 0.01).unwrap();
        let origin = pt(&[0.0; 3]);
        let vu = engine.uu.canonical(&origin.to_vector()).unwrap();
        let vs = engine.ss.canonical(&origin.to_vector()).unwrap();
        let path = engine
            .run(
                &p,
                &[
                    Leg {
                        bundle: StrongBundle::Uu,
                        t: 0.7,
                    },
                    Leg {
                        bundle: StrongBundle::Ss,
                        t: -1.3,
                    },
                ],
            )
            .unwrap();
        let expected = torus::wrap_vector(&(p.to_vector() + vu * 0.7 - vs * 1.3)).unwrap();
        assert!(torus::dist(&path.endpoint, &expected).unwrap() < 1e-8);
    }

    #[test]
    fn reversed_legs_return_to_start() {
        let template = ShearTemplate {
            center: vec![0.0; 3],
            support_radius: 0.3,
            direction: vec![0.0, 0.6, 0.8],
        };
        let g = map(template.spec(&heptagonal(), 0.05));
        let p = pt(&[0.05, 0.02, 0.96]);
        let engine = PathEngine::new(&g, 0.01).unwrap();
        let legs = [
            Leg {
                bundle: StrongBundle::Uu,
                t: 0.3,
            },
            Leg {
                bundle: StrongBundle::Ss,
                t: -0.25,
            },
            Leg {
                bundle: StrongBundle::Uu,
                t: 0.15,
            },
        ];
        let there = engine.run(&p, &legs).unwrap();
        let back = engine.run(&there.endpoint, &there.reversed_legs()).unwrap();
        assert!(torus::dist(&back.endpoint, &p).unwrap() < 1e-6);
        let off = verify_path(&g, &there, 0.01).unwrap();
        assert!(off < 1e-7, "{off}");
    }

    #[test]
    fn one_leg_target_recovered() {
        let template = ShearTemplate {
            center: vec![0.0; 3],
            support_radius: 0.3,
            direction: vec![0.0, 0.6, 0.8],
        };
        let g = map(template.spec(&heptagonal(), 0.05));
        let p = pt(&[0.02, 0.01, 0.99]);
        let q = endpoint_map(
            &g,
            &p,
            &[Leg {
                bundle: StrongBundle::Uu,
                t: 0.3,
            }],
            0.01,
        )
        .unwrap()
        .endpoint;
        let b = PathSearchBudget {
            tolerance: 1e-6,
            ..budget(4, 1.0, 1e-6)
        };
        let path = solve_us_path(&g, &p, &q, &b).unwrap().unwrap();
        assert_eq!(path.legs.len(), 1);
        assert_eq!(path.legs[0].bundle, StrongBundle::Uu);
        assert!((path.legs[0].t - 0.3).abs() < 1e-5);
        assert!(path.residual < 1e-6);
    }

    #[test]
    fn budget_validation() {
        let f = map(shub_skew(0.0));
        let b = budget(2, 1.0, 0.05);
        let p = pt(&[0.1; 4]);
        assert!(solve_us_path(&f, &p, &p, &b).is_err());
        assert_eq!(PathSearchBudget::default_for(4).max_legs, 6);
        assert_eq!(PathSearchBudget::default_for(3).max_legs, 4);
    }

    #[test]
    fn enlarging_budget_keeps_success() {
        let f = map(heptagonal());
        let p = pt(&[0.1, 0.1, 0.1]);
        let q = pt(&[0.6, 0.3, 0.8]);
        let small = budget(4, 2.0, 0.05);
        let found = solve_us_path(&f, &p, &q, &small).unwrap().unwrap();
        let larger = PathSearchBudget {
            max_legs: 6,
            max_leg_length: 3.0,
            multistarts: 2,
            ..small
        };
        let again = solve_us_path_warm(&f, &p, &q, &larger, std::slice::from_ref(&found)).unwrap();
        assert!(again.unwrap().legs.len() <= found.legs.len());
    }

    #[test]
    fn disc_connection_on_linear_map() {
        let f = map(heptagonal());
        let p = pt(&[0.1, 0.2, 0.3]);
        let (zero, _) = connect_to_cu_disc(&f, &p, &p, 0.1, &budget(4, 1.0, 0.05))
            .unwrap()
            .unwrap();
        assert!(zero.legs.is_empty());
        let q = pt(&[0.7, 0.5, 0.9]);
        let (path, disc) = connect_to_cu_disc(&f, &p, &q, 0.2, &budget(4, 2.0, 0.05))
            .unwrap()
            .unwrap();
        assert_eq!(path.legs.last().unwrap().bundle, StrongBundle::Ss);
        assert!(disc.distance_to(&path.endpoint).unwrap() <= disc.resolution());
    }

    #[test]
    fn class_samples_on_linear_map() {
        let f = map(heptagonal());
        let p = pt(&[0.3, 0.3, 0.3]);
        let b = budget(4, 1.0, 0.05);
        assert!(accessibility_class_sample(&f, &p, 0, &b)
            .unwrap()
            .is_empty());
        let paths = accessibility_class_paths(&f, &p, 200, &b).unwrap();
        let again = accessibility_class_paths(&f, &p, 200, &b).unwrap();
        assert_eq!(paths, again);
        let engine = PathEngine::new(&f, 0.01).unwrap();
        let o = pt(&[0.0; 3]).to_vector();
        let vu = engine.uu.canonical(&o).unwrap();
        let vs = engine.ss.canonical(&o).unwrap();
        for path in &paths {
            let (tu, ts) = path
                .legs
                .iter()
                .fold((0.0, 0.0), |(u, s), l| match l.bundle {
                    StrongBundle::Uu => (u + l.t, s),
                    StrongBundle::Ss => (u, s + l.t),
                });
            let expected = torus::wrap_vector(&(p.to_vector() + &vu * tu + &vs * ts)).unwrap();
            assert!(torus::dist(&expected, &path.endpoint).unwrap() < 1e-7);
        }
    }

    #[test]
    fn open_set_test_small_grid() {
        let f = map(heptagonal());
        let trivial = open_set_accessibility_test(&f, 0.5, 0.9, &budget(4, 1.0, 0.05)).unwrap();
        assert_eq!(trivial.success_rate, 1.0);
        assert!(trivial.success.iter().flatten().all(|r| *r >= 0.0));
        let report = open_set_accessibility_test(&f, 0.5, 0.07, &budget(4, 3.0, 0.07)).unwrap();
        assert!(report.failures.is_empty(), "{:?}", report.failures);
        assert_eq!(report.success.len(), 8);
    }

    #[test]
    fn rational_subtorus_blocks_pairs() {
        // strong leaves of cat x identity never leave the horizontal 2-torus
        let f = map(cat_times_identity());
        let report = open_set_accessibility_test(&f, 0.5, 0.07, &budget(4, 3.0, 0.07)).unwrap();
        for (i, row) in report.success.iter().enumerate() {
            for (j, cell) in row.iter().enumerate() {
                let same_layer = (i / 4) == (j / 4);
                assert_eq!(*cell >= 0.0, same_layer, "pair ({i}, {j})");
            }
        }
    }

    #[test]
    fn covering_radius_examples() {
        let origin = [pt(&[0.0, 0.0])];
        let corners = [pt(&[0.5, 0.5])];
        assert!((covering_radius(&origin, &corners).unwrap() - 0.5f64.sqrt()).abs() < 1e-15);
        assert!(matches!(
            covering_radius(&[], &corners),
            Err(Error::Undefined(_))
        ));
    }
}
