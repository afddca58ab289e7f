//! Finite-horizon certificates for uniform central expansion along strong
//! unstable leaves.
//!
//! For a point x we sample F^uu_1(x), and for each sample y we measure
//! `m{Df^n | E^c(f^l y)}` over `0 <= l <= l_max`, `1 <= n <= n_max`. The
//! certificate keeps the sample with the best worst-case per-iterate rate.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::foliation;
use crate::linalg;
use crate::maps::{c1_distance_estimate, ShearTemplate, ToralMap};
use crate::splitting::{self, BundleDims, StrongBundle};
use crate::torus::TorusPoint;

/// Largest leaf integration step used when sampling F^uu_1(x).
const MAX_LEAF_STEP: f64 = 0.02;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShParams {
    pub dims: BundleDims,
    #[serde(default = "defaults::leaf_samples")]
    pub leaf_samples: usize,
    #[serde(default = "defaults::n_max")]
    pub n_max: usize,
    #[serde(default = "defaults::l_max")]
    pub l_max: usize,
    #[serde(default = "defaults::margin")]
    pub margin: f64,
    /// Cocycle iterates used to estimate the bundles.
    #[serde(default = "defaults::n_iters")]
    pub n_iters: usize,
}

mod defaults {
    pub fn leaf_samples() -> usize {
        8
    }
    pub fn n_max() -> usize {
        40
    }
    pub fn l_max() -> usize {
        20
    }
    pub fn margin() -> f64 {
        0.02
    }
    pub fn n_iters() -> usize {
        crate::splitting::DEFAULT_ITERS
    }
}

impl ShParams {
    pub fn new(dims: BundleDims) -> Self {
        Self {
            dims,
            leaf_samples: defaults::leaf_samples(),
            n_max: defaults::n_max(),
            l_max: defaults::l_max(),
            margin: defaults::margin(),
            n_iters: defaults::n_iters(),
        }
    }

    /// Parameters for f^-1: the strong bundles trade places.
    pub fn for_inverse(&self) -> Self {
        Self {
            dims: self.dims.reversed(),
            ..self.clone()
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        self.dims.validate(dim)?;
        if self.leaf_samples < 8 {
            return invalid(format!("leaf_samples = {} is below 8", self.leaf_samples));
        }
        if self.n_max == 0 {
            return invalid("n_max must be at least 1");
        }
        if self.n_iters == 0 {
            return invalid("n_iters must be at least 1");
        }
        if !(self.margin >= 0.0 && self.margin.is_finite()) {
            return invalid("margin must be finite and non-negative");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShCertificate {
    pub x: TorusPoint,
    pub y_u: TorusPoint,
    pub arc_pos: f64,
    pub sigma_est: f64,
    /// min over tested (n, l) of m{Df^n|E^c(f^l y_u)} / s^n, with s the
    /// rate measured at the longest horizon n_max.
    #[serde(rename = "C_est")]
    pub c_est: f64,
    pub n_max: usize,
    pub l_max: usize,
    pub pass: bool,
}

/// Restrictions of Df to E^c along the orbit of `y`, written in the
/// orthonormal center bases at consecutive points.
fn central_cocycle(
    f: &ToralMap,
    y: &TorusPoint,
    dims: BundleDims,
    len: usize,
    n_iters: usize,
) -> Result<Vec<DMatrix<f64>>> {
    let bases =
        splitting::center_along_orbit(f, y, dims, len, n_iters, splitting::DEFAULT_FRAME_SEED)?;
    let mut p = y.clone();
    let mut out = Vec::with_capacity(len);
    for j in 0..len {
        let jac = f.jacobian_at(&p.to_vector())?;
        out.push(bases[j + 1].transpose() * jac * &bases[j]);
        p = f.apply(&p)?;
    }
    Ok(out)
}

fn checked_min_norm(m: &DMatrix<f64>) -> Result<f64> {
    let s = linalg::smallest_singular_value(m);
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::NumericalFailure(format!(
            "central cocycle degenerate (m = {s:e})"
        )));
    }
    Ok(s)
}

/// `m{Df^n | E^c(f^l y)}`; 1 for n = 0.
pub fn central_expansion(
    f: &ToralMap,
    y: &TorusPoint,
    n: usize,
    l: usize,
    dims: BundleDims,
    n_iters: usize,
) -> Result<f64> {
    if y.dim() != f.dim() {
        return invalid("point dimension does not match map");
    }
    dims.validate(f.dim())?;
    if n == 0 {
        return Ok(1.0);
    }
    let cocycle = central_cocycle(f, y, dims, l + n, n_iters)?;
    let product = cocycle[l..]
        .iter()
        .fold(DMatrix::identity(dims.c, dims.c), |acc, c| c * acc);
    checked_min_norm(&product)
}

struct Rate {
    /// min over (n, l) of log m / n.
    rate: f64,
    /// Every log m{Df^n|E^c(f^l y)}, indexed [l][n - 1].
    logs: Vec<Vec<f64>>,
}

fn rate_at(f: &ToralMap, y: &TorusPoint, params: &ShParams) -> Result<Rate> {
    let cocycle = central_cocycle(
        f,
        y,
        params.dims,
        params.l_max + params.n_max,
        params.n_iters,
    )?;
    let c = params.dims.c;
    let mut rate = f64::INFINITY;
    let mut logs = Vec::with_capacity(params.l_max + 1);
    for l in 0..=params.l_max {
        let mut product = DMatrix::identity(c, c);
        let mut row = Vec::with_capacity(params.n_max);
        for (k, step) in cocycle[l..l + params.n_max].iter().enumerate() {
            product = step * product;
            let log_m = checked_min_norm(&product)?.ln();
            rate = rate.min(log_m / (k + 1) as f64);
            row.push(log_m);
        }
        logs.push(row);
    }
    Ok(Rate { rate, logs })
}

/// Arclengths -1 + 2i/(k-1) of the leaf samples and an integration step
/// that divides their spacing.
fn leaf_sampling(k: usize) -> (Vec<f64>, f64) {
    let spacing = 2.0 / (k - 1) as f64;
    let sub = (spacing / MAX_LEAF_STEP).ceil();
    let positions = (0..k).map(|i| -1.0 + spacing * i as f64).collect();
    (positions, spacing / sub)
}

pub fn check_sh_at(f: &ToralMap, x: &TorusPoint, params: &ShParams) -> Result<ShCertificate> {
    params.validate(f.dim())?;
    if x.dim() != f.dim() {
        return invalid("point dimension does not match map");
    }
    let (positions, h) = leaf_sampling(params.leaf_samples);
    let leaf = foliation::grow_leaf(f, x, StrongBundle::Uu, 1.0, h)?;

    let mut best: Option<(f64, &foliation::LeafVertex, Rate)> = None;
    for s in positions {
        let vertex = leaf
            .vertices
            .iter()
            .min_by(|a, b| (a.arclength - s).abs().total_cmp(&(b.arclength - s).abs()))
            .expect("grown leaf has vertices");
        let r = rate_at(f, &vertex.point, params)?;
        if best.as_ref().is_none_or(|(b, _, _)| r.rate > *b) {
            best = Some((r.rate, vertex, r));
        }
    }
    let (rate, vertex, r) = best.expect("at least eight samples");
    let sigma = rate.exp();

    let n_max = params.n_max as f64;
    let asymptotic = r
        .logs
        .iter()
        .map(|row| row[params.n_max - 1] / n_max)
        .fold(f64::INFINITY, f64::min);
    let log_c = r
        .logs
        .iter()
        .flat_map(|row| {
            row.iter()
                .enumerate()
                .map(|(k, v)| v - (k + 1) as f64 * asymptotic)
        })
        .fold(f64::INFINITY, f64::min);

    Ok(ShCertificate {
        x: x.clone(),
        y_u: vertex.point.clone(),
        arc_pos: vertex.arclength,
        sigma_est: sigma,
        c_est: log_c.exp(),
        n_max: params.n_max,
        l_max: params.l_max,
        pass: sigma > 1.0 + params.margin,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurveyFailure {
    pub index: usize,
    pub x: TorusPoint,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShSurvey {
    /// NaN when no certificate could be computed.
    pub min_sigma: f64,
    pub certificates: Vec<ShCertificate>,
    pub failures: Vec<SurveyFailure>,
    pub pass: bool,
}

pub fn sh_survey(f: &ToralMap, grid: &[TorusPoint], params: &ShParams) -> Result<ShSurvey> {
    if grid.is_empty() {
        return invalid("sample grid is empty");
    }
    params.validate(f.dim())?;
    let results: Vec<Result<ShCertificate>> =
        grid.par_iter().map(|x| check_sh_at(f, x, params)).collect();
    let mut certificates = Vec::with_capacity(grid.len());
    let mut failures = Vec::new();
    for (index, r) in results.into_iter().enumerate() {
        match r {
            Ok(c) => certificates.push(c),
            Err(e) => {
                log::warn!("SH check at grid point {index} failed: {e}");
                failures.push(SurveyFailure {
                    index,
                    x: grid[index].clone(),
                    reason: e.to_string(),
                });
            }
        }
    }
    let min_sigma = if certificates.is_empty() {
        f64::NAN
    } else {
        certificates
            .iter()
            .map(|c| c.sigma_est)
            .fold(f64::INFINITY, f64::min)
    };
    let pass = failures.is_empty() && certificates.iter().all(|c| c.pass);
    Ok(ShSurvey {
        min_sigma,
        certificates,
        failures,
        pass,
    })
}

/// Survey of f^-1, whose strong unstable leaves are the strong stable
/// leaves of f.
pub fn sh_inverse_survey(f: &ToralMap, grid: &[TorusPoint], params: &ShParams) -> Result<ShSurvey> {
    sh_survey(&f.inverse_view(), grid, &params.for_inverse())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub amplitude: f64,
    pub c1: Option<f64>,
    pub min_sigma: Option<f64>,
    pub pass: bool,
    /// Grid points whose certificate could not be computed.
    pub failures: usize,
    /// "ok", or "invalid-spec" / "failed" with the reason appended.
    pub status: String,
}

/// Samples used for the C^1 distance column of a scan.
pub const SCAN_C1_SAMPLES: usize = 2000;

fn scan_row(
    f: &ToralMap,
    template: &ShearTemplate,
    amplitude: f64,
    grid: &[TorusPoint],
    params: &ShParams,
    seed: u64,
) -> ScanRow {
    let rejected = |status: String| ScanRow {
        amplitude,
        c1: None,
        min_sigma: None,
        pass: false,
        failures: 0,
        status,
    };
    let g = match ToralMap::new(template.spec(f.spec(), amplitude)) {
        Ok(g) => g,
        Err(e) => return rejected(format!("invalid-spec: {e}")),
    };
    let outcome = c1_distance_estimate(f, &g, SCAN_C1_SAMPLES, seed)
        .and_then(|c1| Ok((c1, sh_survey(&g, grid, params)?)));
    match outcome {
        Ok((c1, survey)) => ScanRow {
            amplitude,
            c1: Some(c1.c1),
            min_sigma: (!survey.min_sigma.is_nan()).then_some(survey.min_sigma),
            pass: survey.pass,
            failures: survey.failures.len(),
            status: "ok".into(),
        },
        Err(e) => rejected(format!("failed: {e}")),
    }
}

/// One survey per amplitude of `template` applied to `f`, sorted by amplitude.
pub fn sh_robustness_scan(
    f: &ToralMap,
    amplitudes: &[f64],
    template: &ShearTemplate,
    grid: &[TorusPoint],
    params: &ShParams,
    seed: u64,
) -> Result<Vec<ScanRow>> {
    if grid.is_empty() {
        return invalid("sample grid is empty");
    }
    params.validate(f.dim())?;
    let mut sorted = amplitudes.to_vec();
    if sorted.iter().any(|a| !a.is_finite()) {
        return invalid("amplitudes must be finite");
    }
    sorted.sort_by(f64::total_cmp);
    Ok(sorted
        .into_iter()
        .map(|a| scan_row(f, template, a, grid, params, seed))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PassThreshold {
    /// Largest amplitude found to pass.
    pub a_star: f64,
    /// Smallest amplitude found to fail, if any below the invertibility bound.
    pub a_fail: Option<f64>,
    pub evaluations: Vec<ScanRow>,
}

/// Bisection for the largest amplitude in [0, bound) whose survey passes,
/// assuming the verdict is monotone in the amplitude.
pub fn pass_threshold(
    f: &ToralMap,
    template: &ShearTemplate,
    grid: &[TorusPoint],
    params: &ShParams,
    tol: f64,
    seed: u64,
) -> Result<PassThreshold> {
    if !(tol > 0.0) {
        return invalid("bisection tolerance must be positive");
    }
    let mut evaluations = Vec::new();
    let mut eval = |a: f64| {
        let row = scan_row(f, template, a, grid, params, seed);
        let pass = row.pass;
        evaluations.push(row);
        pass
    };
    if !eval(0.0) {
        return Ok(PassThreshold {
            a_star: 0.0,
            a_fail: Some(0.0),
            evaluations,
        });
    }
    let top = template.amplitude_bound() * (1.0 - 1e-6);
    if eval(top) {
        return Ok(PassThreshold {
            a_star: top,
            a_fail: None,
            evaluations,
        });
    }
    let (mut lo, mut hi) = (0.0, top);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if eval(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(PassThreshold {
        a_star: lo,
        a_fail: Some(hi),
        evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::catalog;
    use crate::splitting::sample_grid;

    fn pt(c: &[f64]) -> TorusPoint {
        TorusPoint::new(c.to_vec()).unwrap()
    }

    fn dims3() -> BundleDims {
        BundleDims::new(1, 1, 1)
    }

    /// Middle eigenvalue modulus from a dense eigensolve.
    fn center_modulus(m: &[Vec<i64>]) -> f64 {
        let mut moduli: Vec<f64> = linalg::integer_matrix(m)
            .complex_eigenvalues()
            .iter()
            .map(|z| z.norm())
            .collect();
        moduli.sort_by(f64::total_cmp);
        moduli[1]
    }

    #[test]
    fn central_expansion_is_power_of_central_eigenvalue() {
        let spec = catalog::expanding_center();
        let c = center_modulus(&catalog::expanding_center_matrix());
        let f = ToralMap::new(spec).unwrap();
        let y = pt(&[0.31, 0.72, 0.05]);
        for (n, l) in [(1, 0), (5, 3), (17, 11), (40, 20)] {
            let m = central_expansion(&f, &y, n, l, dims3(), 60).unwrap();
            let expected = c.powi(n as i32);
            assert!(
                (m - expected).abs() / expected < 1e-10,
                "{n} {l}: {m} vs {expected}"
            );
        }
        assert_eq!(central_expansion(&f, &y, 0, 4, dims3(), 60).unwrap(), 1.0);
    }

    #[test]
    fn central_expansion_composes_for_one_dimensional_center() {
        let f = ToralMap::new(catalog::mane_shear(
            catalog::expanding_center(),
            &[1.0, 0.0, 0.0],
            0.03,
            0.2,
        ))
        .unwrap();
        let y = pt(&[0.05, 0.02, 0.97]);
        let (n1, n2, l) = (4, 7, 2);
        let whole = central_expansion(&f, &y, n1 + n2, l, dims3(), 60).unwrap();
        let a = central_expansion(&f, &y, n1, l, dims3(), 60).unwrap();
        let b = central_expansion(&f, &y, n2, l + n1, dims3(), 60).unwrap();
        assert!((whole - a * b).abs() / whole < 1e-10);
    }

    #[test]
    fn zero_amplitude_shear_matches_base() {
        let base = ToralMap::new(catalog::expanding_center()).unwrap();
        let sheared = ToralMap::new(catalog::mane_shear(
            catalog::expanding_center(),
            &[0.0, 0.0, 1.0],
            0.0,
            0.2,
        ))
        .unwrap();
        let y = pt(&[0.4, 0.1, 0.6]);
        let a = central_expansion(&base, &y, 12, 3, dims3(), 60).unwrap();
        let b = central_expansion(&sheared, &y, 12, 3, dims3(), 60).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn neutral_center_fails() {
        let f = ToralMap::new(catalog::cat_times_identity()).unwrap();
        let cert = check_sh_at(&f, &pt(&[0.2, 0.3, 0.4]), &ShParams::new(dims3())).unwrap();
        assert!((cert.sigma_est - 1.0).abs() < 1e-9);
        assert!(!cert.pass);
    }

    #[test]
    fn linear_rate_is_central_eigenvalue_everywhere() {
        let f = ToralMap::new(catalog::expanding_center()).unwrap();
        let c = center_modulus(&catalog::expanding_center_matrix());
        let params = ShParams::new(dims3());
        let sigmas: Vec<f64> = sample_grid(3, 2)
            .iter()
            .map(|x| check_sh_at(&f, x, &params).unwrap())
            .inspect(|cert| {
                assert!(cert.pass);
                assert!(cert.arc_pos.abs() <= 1.0 + 1e-12);
            })
            .map(|cert| cert.sigma_est)
            .collect();
        let lo = sigmas.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = sigmas.iter().cloned().fold(0.0, f64::max);
        assert!(hi - lo < 1e-9);
        assert!((lo - c).abs() < 1e-3);

        let short = ShParams {
            l_max: 3,
            ..params.clone()
        };
        let s = check_sh_at(&f, &sample_grid(3, 2)[0], &short).unwrap();
        assert!((s.sigma_est - lo).abs() < 1e-9);
    }

    #[test]
    fn witness_lies_on_the_grown_leaf() {
        let f = ToralMap::new(catalog::mane_shear(
            catalog::expanding_center(),
            &[0.0, 0.0, 1.0],
            0.04,
            0.25,
        ))
        .unwrap();
        let x = pt(&[0.1, 0.05, 0.9]);
        let cert = check_sh_at(&f, &x, &ShParams::new(dims3())).unwrap();
        let (_, h) = leaf_sampling(8);
        let leaf = foliation::grow_leaf(&f, &x, StrongBundle::Uu, 1.0, h).unwrap();
        let d = leaf
            .vertices
            .iter()
            .map(|v| crate::torus::dist(&cert.y_u, &v.point).unwrap())
            .fold(f64::INFINITY, f64::min);
        assert!(d < 1e-7, "{d}");
    }

    #[test]
    fn doubling_n_max_never_increases_sigma() {
        let f = ToralMap::new(catalog::mane_shear(
            catalog::expanding_center(),
            &[0.0, 0.0, 1.0],
            0.05,
            0.25,
        ))
        .unwrap();
        let params = ShParams {
            n_max: 10,
            ..ShParams::new(dims3())
        };
        let doubled = ShParams {
            n_max: 20,
            ..params.clone()
        };
        for x in sample_grid(3, 2).iter().take(3) {
            let a = check_sh_at(&f, x, &params).unwrap();
            let b = check_sh_at(&f, x, &doubled).unwrap();
            assert!(b.sigma_est <= a.sigma_est + 1e-12);
        }
    }

    #[test]
    fn inverse_survey_matches_explicit_inverse() {
        let f = ToralMap::new(catalog::expanding_center()).unwrap();
        let explicit = f.inverse();
        let grid = sample_grid(3, 2);
        let params = ShParams::new(dims3());
        let a = sh_inverse_survey(&f, &grid, &params).unwrap();
        let b = sh_survey(&explicit, &grid, &params.for_inverse()).unwrap();
        assert!((a.min_sigma - b.min_sigma).abs() < 1e-9);
        let c = center_modulus(&catalog::expanding_center_matrix());
        assert!((a.min_sigma - 1.0 / c).abs() < 1e-3);
        assert!(!a.pass && !b.pass);
    }

    #[test]
    fn single_point_survey_equals_check() {
        let f = ToralMap::new(catalog::expanding_center()).unwrap();
        let x = pt(&[0.7, 0.2, 0.3]);
        let params = ShParams::new(dims3());
        let s = sh_survey(&f, std::slice::from_ref(&x), &params).unwrap();
        let c = check_sh_at(&f, &x, &params).unwrap();
        assert_eq!(s.certificates, vec![c.clone()]);
        assert_eq!(s.min_sigma, c.sigma_est);
        assert_eq!(s.pass, c.pass);
        assert!(sh_survey(&f, &[], &params).is_err());
    }

    #[test]
    fn scan_rejects_non_invertible_amplitudes_and_sorts() {
        let f = ToralMap::new(catalog::expanding_center()).unwrap();
        let template = ShearTemplate {
            center: vec![0.0; 3],
            support_radius: 0.2,
            direction: vec![0.0, 0.0, 1.0],
        };
        let too_big = template.amplitude_bound() * 1.5;
        let grid = vec![pt(&[0.3, 0.3, 0.3])];
        let params = ShParams::new(dims3());
        let rows = sh_robustness_scan(&f, &[too_big, 0.0], &template, &grid, &params, 1).unwrap();
        assert_eq!(rows[0].amplitude, 0.0);
        assert_eq!(rows[0].status, "ok");
        assert_eq!(rows[0].c1, Some(0.0));
        let direct = sh_survey(&f, &grid, &params).unwrap();
        assert_eq!(rows[0].min_sigma, Some(direct.min_sigma));
        assert!(rows[1].status.starts_with("invalid-spec"));
        assert!(!rows[1].pass);
    }

    #[test]
    fn parameter_validation() {
        let f = ToralMap::new(catalog::expanding_center()).unwrap();
        let x = pt(&[0.1, 0.1, 0.1]);
        let mut p = ShParams::new(dims3());
        p.leaf_samples = 7;
        assert!(check_sh_at(&f, &x, &p).is_err());
        let p = ShParams::new(BundleDims::new(1, 2, 1));
        assert!(check_sh_at(&f, &x, &p).is_err());
    }
}
