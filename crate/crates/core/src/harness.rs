//! Empirical Harnack-type inequalities on discrete solutions.
//!
//! The constants in these inequalities are existential, so most checks report
//! measured ratios instead of verdicts. Sup and inf are taken over lattice
//! nodes in closed balls; averages and norms use cell quadrature.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponent::{band, ExponentField};
use crate::geometry::{nodes_in, Ball, Region};
use crate::grid::{Grid, GridFunction};
use crate::lebesgue::lt_average;
use crate::quadrature::{integrate_domain, lq_norm_region, CellRule};

/// Oscillations below this are treated as zero by the Hölder fit.
pub const OSC_FLOOR: f64 = 1e-13;
/// Drift factor over nested radii beyond which `c_emp` is flagged.
pub const STABILITY_DRIFT: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarnackReport {
    pub ball: Ball,
    pub sup_u: f64,
    pub inf_u: f64,
    pub mu: f64,
    /// `sup / (inf + R + R μ)`
    pub c_emp: f64,
    /// `sup / (inf + R μ)`, invariant under `(u, f) -> (t u, t^{p-1} f)` for constant `p`.
    pub reduced_ratio: f64,
    pub p_minus: f64,
    pub p_plus: f64,
}

fn extremes(u: &GridFunction, region: &Region) -> Result<(f64, f64)> {
    let nodes = nodes_in(u.grid(), region);
    if nodes.is_empty() {
        return Err(Error::EmptySampleSet("region contains no lattice node".into()));
    }
    let vals = u.values();
    let lo = nodes.iter().map(|&i| vals[i]).fold(f64::INFINITY, f64::min);
    let hi = nodes.iter().map(|&i| vals[i]).fold(f64::NEG_INFINITY, f64::max);
    Ok((lo, hi))
}

/// `[R^{1-N/q0} ‖f‖_{L^{q0}(B_{4R})}]^{1/(p_-^{4R} - 1)}`.
pub fn harnack_mu(f: &GridFunction, ball: &Ball, q0: f64, field: &ExponentField) -> Result<f64> {
    let grid = f.grid();
    let r = ball.radius;
    if r > 1.0 {
        return Err(Error::InvalidArgument(format!("radius {r} exceeds 1")));
    }
    let big = ball.dilate(4.0);
    big.ensure_inside(grid, "harnack_mu")?;
    let (p_minus, _) = band(field, &big, grid)?;
    let n = grid.ndim() as f64;
    if !(q0 > 1.0) {
        return Err(Error::InvalidArgument(format!("q0 = {q0} must exceed 1")));
    }
    if !(q0 > n / p_minus) {
        return Err(Error::InvalidArgument(format!("q0 = {q0} must exceed N / p_- = {}", n / p_minus)));
    }
    let nrm = lq_norm_region(f, q0, &Region::Ball(big));
    if nrm == 0.0 {
        return Ok(0.0);
    }
    Ok((r.powf(1.0 - n / q0) * nrm).powf(1.0 / (p_minus - 1.0)))
}

/// Measure `sup_{B_R} u / (inf_{B_R} u + R + R μ)`.
///
/// `u` must be nonnegative at every node of `B_{4R}` inside the domain.
pub fn harnack_check(u: &GridFunction, ball: &Ball, mu: f64, field: &ExponentField) -> Result<HarnackReport> {
    if !(mu >= 0.0) {
        return Err(Error::InvalidArgument(format!("mu must be >= 0, got {mu}")));
    }
    let big = Region::Ball(ball.dilate(4.0));
    let vals = u.values();
    if let Some(&i) = nodes_in(u.grid(), &big).iter().find(|&&i| vals[i] < 0.0) {
        return Err(Error::HypothesisViolated(format!("u = {} < 0 at {:?} inside B_4R", vals[i], u.grid().node(i))));
    }
    let (inf_u, sup_u) = extremes(u, &Region::Ball(ball.clone()))?;
    let big_ball = ball.dilate(4.0);
    let (p_minus, p_plus) = band(field, &big_ball, u.grid())?;
    let r = ball.radius;
    Ok(HarnackReport {
        ball: ball.clone(),
        sup_u,
        inf_u,
        mu,
        c_emp: sup_u / (inf_u + r + r * mu),
        reduced_ratio: sup_u / (inf_u + r * mu),
        p_minus,
        p_plus,
    })
}

/// `c_emp` at `R`, `R/2`, `R/4` around one center.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub reports: Vec<HarnackReport>,
    /// `max c_emp / min c_emp`
    pub drift: f64,
    pub anomaly: bool,
}

/// Harnack reports over nested radii with `μ` recomputed from `f` at each scale.
pub fn harnack_stability(
    u: &GridFunction,
    f: &GridFunction,
    ball: &Ball,
    q0: f64,
    field: &ExponentField,
    levels: usize,
) -> Result<StabilityReport> {
    if levels == 0 {
        return Err(Error::InvalidArgument("need at least one level".into()));
    }
    let mut reports = Vec::with_capacity(levels);
    for k in 0..levels {
        let b = ball.dilate(0.5f64.powi(k as i32));
        let mu = harnack_mu(f, &b, q0, field)?;
        reports.push(harnack_check(u, &b, mu, field)?);
    }
    let hi = reports.iter().map(|r| r.c_emp).fold(f64::NEG_INFINITY, f64::max);
    let lo = reports.iter().map(|r| r.c_emp).fold(f64::INFINITY, f64::min);
    let drift = hi / lo;
    Ok(StabilityReport { reports, drift, anomaly: !(drift <= STABILITY_DRIFT) })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trend {
    Increasing,
    Decreasing,
    Constant,
    Mixed,
}

pub fn trend(values: &[f64]) -> Trend {
    let up = values.windows(2).all(|w| w[1] >= w[0]);
    let down = values.windows(2).all(|w| w[1] <= w[0]);
    match (up, down) {
        (true, true) => Trend::Constant,
        (true, false) => Trend::Increasing,
        (false, true) => Trend::Decreasing,
        (false, false) => Trend::Mixed,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DependenceProbe {
    pub scales: Vec<f64>,
    pub c_emp: Vec<f64>,
    pub trend: Trend,
}

impl DependenceProbe {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("k,c_emp\n");
        for (k, c) in self.scales.iter().zip(&self.c_emp) {
            s.push_str(&format!("{k:e},{c:.17e}\n"));
        }
        s
    }
}

/// `c_emp(k)` for the family `u_k = k v` at a fixed `μ`.
pub fn dependence_probe(
    v: &GridFunction,
    scales: &[f64],
    ball: &Ball,
    mu: f64,
    field: &ExponentField,
) -> Result<DependenceProbe> {
    let mut c = Vec::with_capacity(scales.len());
    for &k in scales {
        if !(k > 0.0) {
            return Err(Error::InvalidArgument(format!("scale {k} must be positive")));
        }
        c.push(harnack_check(&v.scaled(k)?, ball, mu, field)?.c_emp);
    }
    Ok(DependenceProbe { scales: scales.to_vec(), trend: trend(&c), c_emp: c })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeakHarnackReport {
    pub center: Vec<f64>,
    pub radius: f64,
    pub t: f64,
    pub shifted: bool,
    /// Whether `u >= 1` held on `B_2r` (after the shift, if any).
    pub hypothesis_met: bool,
    /// `inf_{B_r} u`
    pub lhs: f64,
    /// `(⨍_{B_2r} u^t)^{1/t}`
    pub rhs: f64,
    pub ratio: f64,
}

/// Compare `inf_{B_r} u` with `(⨍_{B_{2r}} u^t)^{1/t}`.
///
/// The estimate assumes `u >= 1` on `B_{2r}`; `shift` evaluates `u + 1`
/// instead. Inputs below 1 are still measured and flagged in the report.
pub fn weak_harnack_check(
    u: &GridFunction,
    center: &[f64],
    radius: f64,
    t: f64,
    shift: bool,
) -> Result<WeakHarnackReport> {
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!("t must be positive, got {t}")));
    }
    let inner = Ball::new(center.to_vec(), radius)?;
    let outer = inner.dilate(2.0);
    outer.ensure_inside(u.grid(), "weak_harnack_check")?;
    let shifted;
    let w = if shift {
        shifted = u.map(|v| v + 1.0)?;
        &shifted
    } else {
        u
    };
    let (lo, _) = extremes(w, &Region::Ball(outer.clone()))?;
    let (lhs, _) = extremes(w, &Region::Ball(inner))?;
    let rhs = lt_average(w, t, &outer)?;
    Ok(WeakHarnackReport {
        center: center.to_vec(),
        radius,
        t,
        shifted: shift,
        hypothesis_met: lo >= 1.0,
        lhs,
        rhs,
        ratio: lhs / rhs,
    })
}

/// Upper end of the improved weak Harnack range, `N(p_- - 1)/(N - p_-)`; infinite when `p_- >= N`.
pub fn improved_t_limit(n: usize, p_minus: f64) -> f64 {
    let n = n as f64;
    if p_minus >= n {
        f64::INFINITY
    } else {
        n * (p_minus - 1.0) / (n - p_minus)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaccioppoliReport {
    pub gamma: f64,
    pub p_minus: f64,
    pub p_plus: f64,
    /// `∫ u^{γ-1} |∇u|^{p_-} η^{p_+}`
    pub lhs: f64,
    /// `∫ u^{γ-1} η^{p_+}`
    pub zero_order: f64,
    /// `∫ u^{γ+p-1} η^{p_+-p} |∇η|^p`
    pub cutoff_term: f64,
    /// `∫ H u^{γ+p-1} η^{p_+}`
    pub potential_term: f64,
    pub c_probe: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Evaluate both sides of the Caccioppoli estimate on `ball` with probe constant `c_probe`.
///
/// `p_±` are taken over the lattice nodes in the closed ball. The caller
/// asserts that the sign of `γ` matches the differential inequality satisfied by `u`.
#[allow(clippy::too_many_arguments)]
pub fn caccioppoli_check(
    u: &GridFunction,
    gamma: f64,
    eta: &GridFunction,
    h: &GridFunction,
    field: &ExponentField,
    ball: &Ball,
    c_probe: f64,
) -> Result<CaccioppoliReport> {
    if gamma == 0.0 || !gamma.is_finite() {
        return Err(Error::InvalidArgument(format!("gamma must be nonzero, got {gamma}")));
    }
    let grid = u.grid();
    grid.ensure_same(eta.grid(), "caccioppoli: u vs eta")?;
    grid.ensure_same(h.grid(), "caccioppoli: u vs H")?;
    let region = Region::Ball(ball.clone());
    for i in 0..grid.len() {
        let e = eta.values()[i];
        if e < 0.0 {
            return Err(Error::InvalidArgument("eta must be nonnegative".into()));
        }
        if e > 0.0 {
            let x = grid.node(i);
            if !region.contains(&x) {
                return Err(Error::InvalidArgument(format!("eta is positive at {x:?} outside the ball")));
            }
            if u.values()[i] < 1.0 {
                return Err(Error::HypothesisViolated(format!(
                    "u = {} < 1 at {x:?} on the support of eta",
                    u.values()[i]
                )));
            }
        }
        if h.values()[i] < 0.0 {
            return Err(Error::InvalidArgument("H must be nonnegative".into()));
        }
    }
    let (p_minus, p_plus) = band(field, ball, grid)?;
    let mut zero_order = 0.0;
    let mut cutoff_term = 0.0;
    let mut potential_term = 0.0;
    let lhs = integrate_domain(&[u, eta, h], CellRule::Gauss2, |q| {
        let (uv, ev, hv) = (q.values[0], q.values[1].max(0.0), q.values[2]);
        if ev == 0.0 {
            return 0.0;
        }
        let p = field.value(q.x);
        let du = crate::geometry::norm(&q.gradients[0]);
        let de = crate::geometry::norm(&q.gradients[1]);
        let w = q.weight;
        zero_order += w * uv.powf(gamma - 1.0) * ev.powf(p_plus);
        cutoff_term += w * uv.powf(gamma + p - 1.0) * ev.powf(p_plus - p) * de.powf(p);
        potential_term += w * hv * uv.powf(gamma + p - 1.0) * ev.powf(p_plus);
        uv.powf(gamma - 1.0) * du.powf(p_minus) * ev.powf(p_plus)
    });
    let g = gamma.abs();
    let rhs = zero_order + c_probe * g.powf(-p_plus) * cutoff_term + c_probe / g * potential_term;
    Ok(CaccioppoliReport {
        gamma,
        p_minus,
        p_plus,
        lhs,
        zero_order,
        cutoff_term,
        potential_term,
        c_probe,
        rhs,
        holds: lhs <= rhs,
    })
}

/// A constant that makes the Caccioppoli estimate hold, from the Young
/// inequality with `ε = min(1, |γ| / (2(p_+ - 1)))`.
pub fn caccioppoli_sufficient_constant(p_minus: f64, p_plus: f64, gamma: f64) -> f64 {
    let g = gamma.abs();
    let eps = f64::min(1.0, g / (2.0 * (p_plus - 1.0)));
    let young = p_plus / (eps.powf(p_plus - 1.0) * p_minus);
    f64::max(2.0 * young * g.powf(p_plus - 1.0), 2.0)
}

/// `(1 - (|x - x0|/ρ)^2)^2` clipped at zero.
pub fn bump_cutoff(grid: &Grid, center: &[f64], rho: f64) -> Result<GridFunction> {
    if !(rho > 0.0) {
        return Err(Error::InvalidArgument(format!("rho must be positive, got {rho}")));
    }
    GridFunction::from_fn(grid.clone(), |x| {
        let r2 = crate::geometry::distance(x, center).powi(2) / (rho * rho);
        if r2 >= 1.0 {
            0.0
        } else {
            (1.0 - r2) * (1.0 - r2)
        }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalBoundReport {
    pub sup_inner: f64,
    pub lt_norm_outer: f64,
    pub bound: f64,
    pub holds: bool,
}

/// `sup_{inner} u` against `C (1 + ‖u‖_{L^t(outer)})`.
pub fn local_bound_check(
    u: &GridFunction,
    inner: &Region,
    outer: &Region,
    t: f64,
    c_probe: f64,
) -> Result<LocalBoundReport> {
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!("t must be positive, got {t}")));
    }
    if !inner.compactly_inside(outer) {
        return Err(Error::InvalidArgument("inner region is not compactly inside the outer one".into()));
    }
    let (_, sup_inner) = extremes(u, inner)?;
    let lt_norm_outer = lq_norm_region(u, t, outer);
    let bound = c_probe * (1.0 + lt_norm_outer);
    Ok(LocalBoundReport { sup_inner, lt_norm_outer, bound, holds: sup_inner <= bound })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OscillationTrace {
    pub center: Vec<f64>,
    pub radii: Vec<f64>,
    pub oscillations: Vec<f64>,
    /// Least-squares slope of `log osc` against `log r`; absent for constant data.
    pub fitted_exponent: Option<f64>,
    /// Root mean square residual of the fit.
    pub fit_residual: Option<f64>,
    pub constant: bool,
}

/// Oscillation decay over a decreasing sequence of balls and its power-law fit.
pub fn holder_estimate(u: &GridFunction, center: &[f64], radii: &[f64]) -> Result<OscillationTrace> {
    if radii.len() < 4 {
        return Err(Error::InvalidArgument(format!("need at least 4 radii, got {}", radii.len())));
    }
    if radii.windows(2).any(|w| !(w[1] < w[0])) || !(radii[radii.len() - 1] > 0.0) {
        return Err(Error::InvalidArgument("radii must be positive and strictly decreasing".into()));
    }
    let mut oscillations = Vec::with_capacity(radii.len());
    for (k, &r) in radii.iter().enumerate() {
        let ball = Ball::new(center.to_vec(), r)?;
        ball.ensure_inside(u.grid(), "holder_estimate")?;
        let region = Region::Ball(ball);
        if k + 1 == radii.len() && nodes_in(u.grid(), &region).len() < 2 {
            return Err(Error::EmptySampleSet(format!("ball of radius {r} holds fewer than 2 nodes")));
        }
        let (lo, hi) = extremes(u, &region)?;
        oscillations.push(hi - lo);
    }
    let pts: Vec<(f64, f64)> =
        radii.iter().zip(&oscillations).filter(|(_, o)| **o >= OSC_FLOOR).map(|(r, o)| (r.ln(), o.ln())).collect();
    if pts.is_empty() {
        return Ok(OscillationTrace {
            center: center.to_vec(),
            radii: radii.to_vec(),
            oscillations,
            fitted_exponent: None,
            fit_residual: None,
            constant: true,
        });
    }
    if pts.len() < 2 {
        return Err(Error::Undefined("fewer than two radii with positive oscillation".into()));
    }
    let (slope, rms) = least_squares(&pts);
    Ok(OscillationTrace {
        center: center.to_vec(),
        radii: radii.to_vec(),
        oscillations,
        fitted_exponent: Some(slope),
        fit_residual: Some(rms),
        constant: false,
    })
}

/// Slope and RMS residual of the ordinary least-squares line through `pts`.
pub fn least_squares(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let slope = sxy / sxx;
    let rms = (pts.iter().map(|p| (p.1 - my - slope * (p.0 - mx)).powi(2)).sum::<f64>() / n).sqrt();
    (slope, rms)
}

/// Hölder exponent predicted for bounded sources, `1 + (1 - N/q0)/(p - 1)`.
pub fn delta_candidate(n: usize, q0: f64, p: f64) -> f64 {
    1.0 + (1.0 - n as f64 / q0) / (p - 1.0)
}
