//! Gaussian barriers on annuli, the strong maximum principle and boundary slopes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponent::ExponentField;
use crate::geometry::{distance, dot, norm};
use crate::grid::{Grid, GridFunction};
use crate::solver::pointwise::{p_laplacian_bracket, p_laplacian_pointwise, SmoothFunction};

const DIRECTION_SEED: u64 = 0xba77;

/// `w(x) = A (e^{-μ|x-x0|²/δ²} - e^{-μ}) / (e^{-μ/4} - e^{-μ})`, so `w = A` on
/// `|x - x0| = δ/2` and `w = 0` on `|x - x0| = δ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BarrierParams {
    pub x0: Vec<f64>,
    pub delta: f64,
    pub mu: f64,
    pub a_level: f64,
}

impl BarrierParams {
    pub fn new(x0: Vec<f64>, delta: f64, mu: f64, a_level: f64) -> Result<Self> {
        if !(delta > 0.0) || !(mu > 0.0) || !(a_level >= 0.0) || !delta.is_finite() || !mu.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "need delta > 0, mu > 0, A >= 0; got delta = {delta}, mu = {mu}, A = {a_level}"
            )));
        }
        Ok(Self { x0, delta, mu, a_level })
    }

    /// `A e^{μ(1 - s)} / (e^{3μ/4} - 1)` with `s = |x - x0|²/δ²`; the common factor of all derivatives.
    fn scale(&self, s: f64) -> f64 {
        self.a_level * (self.mu * (1.0 - s)).exp() / (0.75 * self.mu).exp_m1()
    }

    fn offset(&self, x: &[f64]) -> (Vec<f64>, f64) {
        let d: Vec<f64> = x.iter().zip(&self.x0).map(|(a, c)| a - c).collect();
        let s = dot(&d, &d) / (self.delta * self.delta);
        (d, s)
    }
}

impl SmoothFunction for BarrierParams {
    fn dim(&self) -> usize {
        self.x0.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let (_, s) = self.offset(x);
        // numerator and denominator multiplied by e^μ
        self.a_level * (self.mu * (1.0 - s)).exp_m1() / (0.75 * self.mu).exp_m1()
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let (d, s) = self.offset(x);
        let k = -2.0 * self.mu / (self.delta * self.delta) * self.scale(s);
        d.iter().map(|v| k * v).collect()
    }

    fn hessian(&self, x: &[f64]) -> Vec<f64> {
        let (d, s) = self.offset(x);
        let n = d.len();
        let e = self.scale(s);
        let k = self.mu / (self.delta * self.delta);
        let mut h = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let delta_ij = if i == j { 1.0 } else { 0.0 };
                h[i * n + j] = e * (4.0 * k * k * d[i] * d[j] - 2.0 * k * delta_ij);
            }
        }
        h
    }
}

pub fn barrier_eval(params: &BarrierParams, x: &[f64]) -> (f64, Vec<f64>) {
    (params.value(x), params.gradient(x))
}

/// Points on `resolution` spheres of radius `r_in .. r_out` (both included).
fn annulus_samples(center: &[f64], r_in: f64, r_out: f64, resolution: usize) -> Vec<Vec<f64>> {
    let n = center.len();
    let shells = resolution.max(2);
    let dirs = directions(n, 4 * resolution.max(1));
    let mut out = Vec::with_capacity(shells * dirs.len());
    for i in 0..shells {
        let r = if i + 1 == shells { r_out } else { r_in + (r_out - r_in) * i as f64 / (shells - 1) as f64 };
        for d in &dirs {
            out.push(center.iter().zip(d).map(|(c, v)| c + r * v).collect());
        }
    }
    out
}

/// Unit directions: `±1` in 1D, equally spaced angles in 2D, axes plus seeded
/// random directions otherwise.
fn directions(n: usize, count: usize) -> Vec<Vec<f64>> {
    match n {
        0 => vec![vec![]],
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..count)
            .map(|k| {
                let t = std::f64::consts::TAU * k as f64 / count as f64;
                vec![t.cos(), t.sin()]
            })
            .collect(),
        _ => {
            let mut out = Vec::new();
            for sign in [1.0, -1.0] {
                for k in 0..n {
                    let mut e = vec![0.0; n];
                    e[k] = sign;
                    out.push(e);
                }
            }
            let mut rng = ChaCha8Rng::seed_from_u64(DIRECTION_SEED);
            while out.len() < count.max(2 * n) {
                let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let m = norm(&v);
                if m > 1e-3 && m <= 1.0 {
                    out.push(v.iter().map(|c| c / m).collect());
                }
            }
            out
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BarrierScan {
    pub params: BarrierParams,
    pub min_operator_value: f64,
    pub argmin: Vec<f64>,
    pub samples: usize,
}

/// Minimum of `Δ_{p(x)} w` over the closed annulus `δ/2 <= |x - x0| <= δ`.
pub fn barrier_subsolution_scan(
    params: &BarrierParams,
    field: &ExponentField,
    resolution: usize,
    reg_eps: f64,
) -> Result<BarrierScan> {
    let pts = annulus_samples(&params.x0, 0.5 * params.delta, params.delta, resolution);
    let mut min = f64::INFINITY;
    let mut argmin = params.x0.clone();
    for x in &pts {
        let v = p_laplacian_pointwise(params, field, x, reg_eps)?;
        if !v.is_finite() {
            return Err(Error::NonFinite(0));
        }
        if v < min {
            min = v;
            argmin = x.clone();
        }
    }
    Ok(BarrierScan { params: params.clone(), min_operator_value: min, argmin, samples: pts.len() })
}

/// Scans over a list of rates; returns every scan and the first rate whose
/// minimum is at least `-tol`.
pub fn barrier_sweep(
    x0: &[f64],
    delta: f64,
    a_level: f64,
    mus: &[f64],
    field: &ExponentField,
    resolution: usize,
    tol: f64,
) -> Result<(Vec<BarrierScan>, Option<f64>)> {
    let mut scans = Vec::with_capacity(mus.len());
    let mut found = None;
    for &mu in mus {
        let params = BarrierParams::new(x0.to_vec(), delta, mu, a_level)?;
        let scan = barrier_subsolution_scan(&params, field, resolution, 0.0)?;
        if found.is_none() && scan.min_operator_value >= -tol {
            found = Some(mu);
        }
        scans.push(scan);
    }
    Ok((scans, found))
}

/// Bisect the rate at which the scan minimum changes sign, given a bracket
/// `[lo, hi]` with a negative minimum at `lo` and a nonnegative one at `hi`.
pub fn subsolution_threshold(
    x0: &[f64],
    delta: f64,
    field: &ExponentField,
    resolution: usize,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
) -> Result<f64> {
    let min_at = |mu: f64| -> Result<f64> {
        let p = BarrierParams::new(x0.to_vec(), delta, mu, 1.0)?;
        Ok(barrier_subsolution_scan(&p, field, resolution, 0.0)?.min_operator_value)
    };
    if !(min_at(lo)? < 0.0) || !(min_at(hi)? >= 0.0) {
        return Err(Error::BracketNotFound { lo, hi, iterations: 0 });
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if min_at(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianOperatorReport {
    pub m: f64,
    pub mu: f64,
    pub r_inner: f64,
    pub r_outer: f64,
    /// Minimum of `μ^{-1} e^{μ|x|²} M^{-1} |∇w|^{2-p} Δ_{p(x)} w` for `w = M e^{-μ|x|²}`.
    pub lhs_min: f64,
    pub argmin: Vec<f64>,
    pub grad_p_sup: f64,
    pub log_m_abs: f64,
    pub samples: usize,
}

/// The normalized operator of the origin-centered Gaussian `M e^{-μ|x|²}` over
/// the annulus `r_inner <= |x| <= r_outer`.
///
/// With `G = M e^{-μ|x|²}` factored out, `∇w = G ĝ`, `D²w = G Ĥ` and the
/// bracket becomes `tr Ĥ + (p-2) ĝᵀĤĝ/|ĝ|² + (∇p·ĝ)(log|ĝ| + log M - μ|x|²)`,
/// which stays finite for any rate.
pub fn gaussian_operator_bound(
    m: f64,
    mu: f64,
    field: &ExponentField,
    annulus: (f64, f64),
    dim: usize,
    resolution: usize,
) -> Result<GaussianOperatorReport> {
    let (r_inner, r_outer) = annulus;
    if !(r_inner > 0.0) || !(r_outer >= r_inner) {
        return Err(Error::InvalidArgument(format!("need 0 < r2 <= r1, got ({r_inner}, {r_outer})")));
    }
    if !(m > 0.0) || !(mu > 0.0) {
        return Err(Error::InvalidArgument(format!("need M > 0 and mu > 0, got M = {m}, mu = {mu}")));
    }
    let origin = vec![0.0; dim];
    let pts = annulus_samples(&origin, r_inner, r_outer, resolution);
    let mut lhs_min = f64::INFINITY;
    let mut argmin = origin.clone();
    let mut grad_p_sup: f64 = 0.0;
    let mut hess = vec![0.0; dim * dim];
    for x in &pts {
        let g: Vec<f64> = x.iter().map(|v| -2.0 * mu * v).collect();
        for i in 0..dim {
            for j in 0..dim {
                hess[i * dim + j] = 4.0 * mu * mu * x[i] * x[j] - if i == j { 2.0 * mu } else { 0.0 };
            }
        }
        let p = field.value(x);
        let grad_p = field.gradient(x);
        grad_p_sup = grad_p_sup.max(norm(&grad_p));
        let (bracket, _) = p_laplacian_bracket(&g, &hess, p, &grad_p, 0.0)
            .ok_or_else(|| Error::Undefined(format!("vanishing gradient at {x:?}")))?;
        let r2 = dot(x, x);
        let v = (bracket + dot(&grad_p, &g) * (m.ln() - mu * r2)) / mu;
        if v < lhs_min {
            lhs_min = v;
            argmin = x.clone();
        }
    }
    Ok(GaussianOperatorReport {
        m,
        mu,
        r_inner,
        r_outer,
        lhs_min,
        argmin,
        grad_p_sup,
        log_m_abs: m.ln().abs(),
        samples: pts.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxPrincipleClass {
    IdenticallyZero,
    StrictlyPositive,
    Violation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxPrincipleReport {
    pub classification: MaxPrincipleClass,
    pub max_abs: f64,
    pub min_interior: f64,
    pub argmin_interior: Vec<f64>,
    pub zero_tol: f64,
    pub interior_nodes: usize,
}

/// Default zero tolerance, `1e-10 max|u|`.
pub fn default_zero_tol(u: &GridFunction) -> f64 {
    1e-10 * u.max_abs()
}

/// Classify a nonnegative grid function as identically zero, strictly positive
/// on the nodes at distance `>= interior_margin` from the boundary, or neither.
pub fn strong_max_principle_check(
    u: &GridFunction,
    interior_margin: f64,
    zero_tol: Option<f64>,
) -> Result<MaxPrincipleReport> {
    let zero_tol = zero_tol.unwrap_or_else(|| default_zero_tol(u));
    if !(zero_tol >= 0.0) || !(interior_margin >= 0.0) {
        return Err(Error::InvalidArgument("zero_tol and interior_margin must be >= 0".into()));
    }
    let grid = u.grid();
    let vals = u.values();
    if let Some(i) = (0..grid.len()).find(|&i| vals[i] < -zero_tol) {
        return Err(Error::HypothesisViolated(format!("u = {} < 0 at {:?}", vals[i], grid.node(i))));
    }
    let max_abs = u.max_abs();
    let mut min_interior = f64::INFINITY;
    let mut argmin_interior = Vec::new();
    let mut interior_nodes = 0;
    let mut x = vec![0.0; grid.ndim()];
    for (i, v) in vals.iter().enumerate() {
        if grid.is_boundary(i) {
            continue;
        }
        grid.node_into(i, &mut x);
        if grid.distance_to_boundary(&x) + 1e-12 * grid.spacing()[0] < interior_margin {
            continue;
        }
        interior_nodes += 1;
        if *v < min_interior {
            min_interior = *v;
            argmin_interior = x.clone();
        }
    }
    if interior_nodes == 0 {
        return Err(Error::EmptySampleSet(format!("no interior node at distance >= {interior_margin}")));
    }
    let classification = if max_abs <= zero_tol {
        MaxPrincipleClass::IdenticallyZero
    } else if min_interior > zero_tol {
        MaxPrincipleClass::StrictlyPositive
    } else {
        MaxPrincipleClass::Violation
    };
    Ok(MaxPrincipleReport { classification, max_abs, min_interior, argmin_interior, zero_tol, interior_nodes })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HopfReport {
    pub y: Vec<f64>,
    pub nu: Vec<f64>,
    pub steps: Vec<f64>,
    pub slopes: Vec<f64>,
    pub c0_estimate: f64,
}

/// Difference quotients `(u(y + hν) - u(y))/h` at a boundary zero `y`.
pub fn hopf_slope(u: &GridFunction, y: &[f64], nu: &[f64], steps: &[f64], zero_tol: f64) -> Result<HopfReport> {
    let grid = u.grid();
    if y.len() != grid.ndim() || nu.len() != grid.ndim() {
        return Err(Error::InvalidArgument("point and direction must match the grid dimension".into()));
    }
    if steps.is_empty() || steps.iter().any(|h| !(*h > 0.0)) {
        return Err(Error::InvalidArgument("steps must be positive".into()));
    }
    let len = norm(nu);
    if !((len - 1.0).abs() < 1e-9) {
        return Err(Error::InvalidArgument(format!("direction must be a unit vector, |nu| = {len}")));
    }
    let uy = u.interpolate(y)?;
    if uy.abs() > zero_tol {
        return Err(Error::HypothesisViolated(format!("u(y) = {uy} is not zero")));
    }
    let mut slopes = Vec::with_capacity(steps.len());
    for &h in steps {
        let x: Vec<f64> = y.iter().zip(nu).map(|(a, b)| a + h * b).collect();
        if !grid.contains(&x, 1e-12) {
            return Err(Error::OutsideDomain(format!("y + {h} nu = {x:?} leaves the domain")));
        }
        slopes.push((u.interpolate(&x)? - uy) / h);
    }
    let c0_estimate = slopes.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(HopfReport { y: y.to_vec(), nu: nu.to_vec(), steps: steps.to_vec(), slopes, c0_estimate })
}

/// `u(x) = max(0, 1 - |x - c|/ρ)`, handy as a Hopf reference.
pub fn cone(grid: &Grid, center: &[f64], rho: f64) -> Result<GridFunction> {
    GridFunction::from_fn(grid.clone(), |x| (1.0 - distance(x, center) / rho).max(0.0))
}
