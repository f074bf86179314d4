//! Variable exponents `p(x)`, their per-ball bands and log-Hölder certificates.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{distance, nodes_in, Ball, Region};
use crate::grid::{Grid, GridFunction};

type PointFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type PointVecFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// Step for central-difference gradients of profiles without a closed form.
const FD_STEP: f64 = 1e-6;

/// Closed-form or sampled description of `p(x)`.
#[derive(Clone)]
pub enum Profile {
    Constant(f64),
    /// `offset + gradient · x`
    Affine {
        offset: f64,
        gradient: Vec<f64>,
    },
    /// `offset + slope * |x - center|`
    Radial {
        center: Vec<f64>,
        offset: f64,
        slope: f64,
    },
    /// `below` where `x[axis] < threshold`, `above` elsewhere.
    Piecewise {
        axis: usize,
        threshold: f64,
        below: f64,
        above: f64,
    },
    /// Multilinear interpolation of nodal exponent values.
    Sampled(GridFunction),
    /// The conjugate exponent `p / (p - 1)` of another profile.
    Dual(Box<Profile>),
    Custom {
        value: PointFn,
        gradient: Option<PointVecFn>,
    },
}

impl fmt::Debug for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Profile::Constant(p) => write!(f, "Constant({p})"),
            Profile::Affine { offset, gradient } => {
                write!(f, "Affine {{ offset: {offset}, gradient: {gradient:?} }}")
            }
            Profile::Radial { center, offset, slope } => {
                write!(f, "Radial {{ center: {center:?}, offset: {offset}, slope: {slope} }}")
            }
            Profile::Piecewise { axis, threshold, below, above } => {
                write!(f, "Piecewise {{ axis: {axis}, threshold: {threshold}, below: {below}, above: {above} }}")
            }
            Profile::Sampled(g) => write!(f, "Sampled({:?})", g.grid().dims()),
            Profile::Dual(inner) => write!(f, "Dual({inner:?})"),
            Profile::Custom { .. } => write!(f, "Custom"),
        }
    }
}

impl Profile {
    pub fn custom(value: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Profile::Custom { value: Arc::new(value), gradient: None }
    }

    pub fn custom_with_gradient(
        value: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        Profile::Custom { value: Arc::new(value), gradient: Some(Arc::new(gradient)) }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            Profile::Constant(p) => *p,
            Profile::Affine { offset, gradient } => offset + gradient.iter().zip(x).map(|(g, xi)| g * xi).sum::<f64>(),
            Profile::Radial { center, offset, slope } => offset + slope * distance(center, x),
            Profile::Piecewise { axis, threshold, below, above } => {
                if x[*axis] < *threshold {
                    *below
                } else {
                    *above
                }
            }
            // the grid may be queried slightly outside its box by differencing
            Profile::Sampled(g) => g.interpolate(x).unwrap_or_else(|_| {
                let clamped: Vec<f64> = x
                    .iter()
                    .zip(g.grid().origin().iter().zip(g.grid().upper()))
                    .map(|(xi, (lo, hi))| xi.clamp(*lo, hi))
                    .collect();
                g.interpolate(&clamped).unwrap_or(f64::NAN)
            }),
            Profile::Dual(inner) => {
                let p = inner.value(x);
                p / (p - 1.0)
            }
            Profile::Custom { value, .. } => value(x),
        }
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Profile::Constant(_) | Profile::Piecewise { .. } => vec![0.0; x.len()],
            Profile::Affine { gradient, .. } => gradient.clone(),
            Profile::Radial { center, slope, .. } => {
                let r = distance(center, x);
                if r == 0.0 {
                    vec![0.0; x.len()]
                } else {
                    x.iter().zip(center).map(|(a, c)| slope * (a - c) / r).collect()
                }
            }
            Profile::Dual(inner) => {
                let p = inner.value(x);
                let s = -1.0 / ((p - 1.0) * (p - 1.0));
                inner.gradient(x).into_iter().map(|g| s * g).collect()
            }
            Profile::Custom { gradient: Some(grad), .. } => grad(x),
            Profile::Sampled(_) | Profile::Custom { gradient: None, .. } => central_difference(|y| self.value(y), x),
        }
    }
}

fn central_difference(f: impl Fn(&[f64]) -> f64, x: &[f64]) -> Vec<f64> {
    let mut y = x.to_vec();
    (0..x.len())
        .map(|k| {
            y[k] = x[k] + FD_STEP;
            let fp = f(&y);
            y[k] = x[k] - FD_STEP;
            let fm = f(&y);
            y[k] = x[k];
            (fp - fm) / (2.0 * FD_STEP)
        })
        .collect()
}

/// A variable exponent with certified bounds `1 < p1 <= p(x) <= p2 < ∞`.
#[derive(Debug, Clone)]
pub struct ExponentField {
    profile: Profile,
    p1: f64,
    p2: f64,
}

impl ExponentField {
    /// Field with declared bounds. Use [`ExponentField::check_on`] to confirm
    /// them on a lattice, or [`ExponentField::fit`] to measure them.
    pub fn new(profile: Profile, p1: f64, p2: f64) -> Result<Self> {
        validate_bounds(p1, p2)?;
        Ok(Self { profile, p1, p2 })
    }

    pub fn constant(p: f64) -> Result<Self> {
        Self::new(Profile::Constant(p), p, p)
    }

    /// Bounds measured over the nodes and cell centers of `grid`.
    pub fn fit(profile: Profile, grid: &Grid) -> Result<Self> {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for_each_sample_point(grid, |x| {
            let p = profile.value(x);
            lo = lo.min(p);
            hi = hi.max(p);
            if !p.is_finite() {
                hi = f64::NAN;
            }
        });
        if hi.is_nan() {
            return Err(Error::InvalidExponent("non-finite exponent sample".into()));
        }
        Self::new(profile, lo, hi)
    }

    /// Confirm `p1 <= p(x) <= p2` at every node and cell center of `grid`.
    pub fn check_on(&self, grid: &Grid) -> Result<()> {
        let mut bad = None;
        for_each_sample_point(grid, |x| {
            let p = self.profile.value(x);
            if bad.is_none() && !(p >= self.p1 && p <= self.p2) {
                bad = Some((x.to_vec(), p));
            }
        });
        match bad {
            None => Ok(()),
            Some((x, p)) => Err(Error::InvalidExponent(format!("p({x:?}) = {p} outside [{}, {}]", self.p1, self.p2))),
        }
    }

    pub fn profile(&self) -> &Profile {
        &self.profile
    }

    pub fn p1(&self) -> f64 {
        self.p1
    }

    pub fn p2(&self) -> f64 {
        self.p2
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.profile.value(x)
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.profile.gradient(x)
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.profile, Profile::Constant(_)) || self.p1 == self.p2
    }

    /// The conjugate exponent `p'(x) = p(x) / (p(x) - 1)`.
    pub fn dual(&self) -> Result<ExponentField> {
        let p1 = self.p2 / (self.p2 - 1.0);
        let p2 = self.p1 / (self.p1 - 1.0);
        Self::new(Profile::Dual(Box::new(self.profile.clone())), p1, p2)
    }

    /// Largest `|∇p|` over the nodes of `grid` inside `region` (all nodes when `None`).
    pub fn lipschitz_sup(&self, grid: &Grid, region: Option<&Region>) -> f64 {
        let nodes: Vec<usize> = match region {
            Some(r) => nodes_in(grid, r),
            None => (0..grid.len()).collect(),
        };
        nodes.into_iter().map(|i| crate::geometry::norm(&self.gradient(&grid.node(i)))).fold(0.0, f64::max)
    }
}

fn validate_bounds(p1: f64, p2: f64) -> Result<()> {
    if !(p1 > 1.0) || !p2.is_finite() || p1 > p2 {
        return Err(Error::InvalidExponent(format!("need 1 < p1 <= p2 < inf, got p1 = {p1}, p2 = {p2}")));
    }
    Ok(())
}

fn for_each_sample_point(grid: &Grid, mut f: impl FnMut(&[f64])) {
    let n = grid.ndim();
    let mut x = vec![0.0; n];
    for i in 0..grid.len() {
        grid.node_into(i, &mut x);
        f(&x);
    }
    for (_, multi) in grid.cell_bases() {
        for k in 0..n {
            x[k] = grid.origin()[k] + (multi[k] as f64 + 0.5) * grid.spacing()[k];
        }
        f(&x);
    }
}

/// `(p_-, p_+)`: min and max of `p` over the lattice nodes in the closed ball.
pub fn band(field: &ExponentField, ball: &Ball, grid: &Grid) -> Result<(f64, f64)> {
    let nodes = nodes_in(grid, &Region::Ball(ball.clone()));
    if nodes.is_empty() {
        return Err(Error::EmptySampleSet(format!(
            "ball of radius {} at {:?} contains no lattice node",
            ball.radius, ball.center
        )));
    }
    let mut x = vec![0.0; grid.ndim()];
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in nodes {
        grid.node_into(i, &mut x);
        let p = field.value(&x);
        lo = lo.min(p);
        hi = hi.max(p);
    }
    Ok((lo, hi))
}

/// Estimated constants of the log-Hölder modulus `C_R / |log r|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogHolderCertificate {
    /// `max |p(x) - p(y)| |log |x - y||` over sampled pairs with `|x - y| <= 1/2`.
    pub c_r: f64,
    /// `max r^{-(p_+^r - p_-^r)}` over sampled balls with `r <= R`.
    pub k_r: f64,
    pub radius: f64,
    /// Number of point pairs examined.
    pub sample_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogHolderOptions {
    pub pair_budget: usize,
    /// Largest ball radius `R` in the scale bound.
    pub radius: f64,
    pub seed: u64,
    /// Cap on the number of ball centers used for `K_R`.
    pub max_centers: usize,
}

impl Default for LogHolderOptions {
    fn default() -> Self {
        Self { pair_budget: 1_000_000, radius: 0.5, seed: 0x5eed, max_centers: 4096 }
    }
}

/// Separations above this are outside the log-Hölder modulus.
pub const MAX_SEPARATION: f64 = 0.5;

pub fn log_holder_estimate(field: &ExponentField, grid: &Grid, pair_budget: usize) -> Result<LogHolderCertificate> {
    log_holder_estimate_with(field, grid, &LogHolderOptions { pair_budget, ..Default::default() })
}

pub fn log_holder_estimate_with(
    field: &ExponentField,
    grid: &Grid,
    opts: &LogHolderOptions,
) -> Result<LogHolderCertificate> {
    if opts.pair_budget == 0 {
        return Err(Error::InvalidArgument("pair_budget must be at least 1".into()));
    }
    if !(opts.radius > 0.0) {
        return Err(Error::InvalidArgument("radius must be positive".into()));
    }
    let n = grid.ndim();
    let nodes: Vec<Vec<f64>> = (0..grid.len()).map(|i| grid.node(i)).collect();
    let p: Vec<f64> = nodes.iter().map(|x| field.value(x)).collect();
    let score = |i: usize, j: usize| -> Option<f64> {
        let d = distance(&nodes[i], &nodes[j]);
        (d > 0.0 && d <= MAX_SEPARATION).then(|| (p[i] - p[j]).abs() * d.ln().abs())
    };

    // node offsets within the separation cap, as signed multi-index steps
    let reach: Vec<i64> = grid.spacing().iter().map(|h| (MAX_SEPARATION / h).floor() as i64).collect();
    let offsets = lattice_offsets(&reach, grid.spacing());
    let total_pairs: usize = (0..grid.len())
        .map(|i| {
            let mi = grid.multi_index(i);
            offsets.iter().filter(|o| shifted(grid, &mi, o).is_some_and(|j| j > i)).count()
        })
        .sum();

    let mut c_r: f64 = 0.0;
    let mut count = 0usize;
    if total_pairs <= opts.pair_budget {
        for i in 0..grid.len() {
            let mi = grid.multi_index(i);
            for o in &offsets {
                if let Some(j) = shifted(grid, &mi, o).filter(|&j| j > i) {
                    if let Some(s) = score(i, j) {
                        c_r = c_r.max(s);
                        count += 1;
                    }
                }
            }
        }
    } else {
        // stratified over the first point: node i = k mod len, partner drawn
        // uniformly from the capped offset set
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let mut k = 0usize;
        while count < opts.pair_budget {
            let i = k % grid.len();
            k += 1;
            let o = &offsets[rng.gen_range(0..offsets.len())];
            let Some(j) = shifted(grid, &grid.multi_index(i), o) else { continue };
            if let Some(s) = score(i, j) {
                c_r = c_r.max(s);
                count += 1;
            }
            if k > opts.pair_budget.saturating_mul(64) {
                break;
            }
        }
    }

    // scale bound over dyadic radii R, R/2, ... down to the lattice spacing
    let h_min = grid.spacing().iter().cloned().fold(f64::INFINITY, f64::min);
    let stride = grid.len().div_ceil(opts.max_centers).max(1);
    let mut k_r: f64 = 1.0;
    let mut r = opts.radius;
    while r >= h_min * (1.0 - 1e-12) {
        for c in (0..grid.len()).step_by(stride) {
            let ball = Ball { center: nodes[c].clone(), radius: r };
            let (lo, hi) = band(field, &ball, grid)?;
            k_r = k_r.max(r.powf(-(hi - lo)));
        }
        r *= 0.5;
    }
    let _ = n;
    Ok(LogHolderCertificate { c_r, k_r, radius: opts.radius, sample_count: count })
}

fn lattice_offsets(reach: &[i64], spacing: &[f64]) -> Vec<Vec<i64>> {
    let n = reach.len();
    let mut out = Vec::new();
    let mut cur: Vec<i64> = reach.iter().map(|r| -r).collect();
    loop {
        let d2: f64 = (0..n).map(|k| (cur[k] as f64 * spacing[k]).powi(2)).sum();
        if d2 > 0.0 && d2.sqrt() <= MAX_SEPARATION * (1.0 + 1e-12) {
            out.push(cur.clone());
        }
        let mut k = n;
        loop {
            if k == 0 {
                return out;
            }
            k -= 1;
            if cur[k] < reach[k] {
                cur[k] += 1;
                break;
            }
            cur[k] = -reach[k];
        }
    }
}

fn shifted(grid: &Grid, multi: &[usize], offset: &[i64]) -> Option<usize> {
    let mut idx = 0;
    for k in 0..multi.len() {
        let m = multi[k] as i64 + offset[k];
        if m < 0 || m >= grid.dims()[k] as i64 {
            return None;
        }
        idx += m as usize * grid.strides()[k];
    }
    Some(idx)
}
