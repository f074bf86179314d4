//! Structure conditions for general quasilinear pairs `div A(x,u,∇u) = B(x,u,∇u)`.
//!
//! With `p = p(x)` the checked inequalities are
//!
//! ```text
//! coercivity     A·ξ ≥ α|ξ|^p − C0|s|^p − g0
//! flux growth    |A| ≤ g1 + C1|s|^{p−1} + K1|ξ|^{p−1}
//! source growth  |B| ≤ f + C2|s|^{p−1} + K2|ξ|^{p−1}     (+ b|ξ|^p in the primed form)
//! ```
//!
//! on a finite lattice of samples `(x, s, ξ)`.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponent::{band, ExponentField};
use crate::geometry::{dot, norm, Ball, Region};
use crate::grid::{Grid, GridFunction};
use crate::quadrature::lq_norm_region;

/// Relative slack below which a failed inequality counts as rounding noise.
pub const SLACK_TOL: f64 = 1e-12;

pub type VectorMap = Arc<dyn Fn(&[f64], f64, &[f64]) -> Vec<f64> + Send + Sync>;
pub type ScalarMap = Arc<dyn Fn(&[f64], f64, &[f64]) -> f64 + Send + Sync>;

/// A flux `A(x, s, ξ)` and a source `B(x, s, ξ)`.
#[derive(Clone)]
pub struct FluxPair {
    pub a: VectorMap,
    pub b: ScalarMap,
}

impl fmt::Debug for FluxPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("FluxPair { .. }")
    }
}

impl FluxPair {
    pub fn new(
        a: impl Fn(&[f64], f64, &[f64]) -> Vec<f64> + Send + Sync + 'static,
        b: impl Fn(&[f64], f64, &[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self { a: Arc::new(a), b: Arc::new(b) }
    }

    /// `A = |ξ|^{p(x)-2} ξ`, `B = 0`.
    pub fn p_laplacian(field: &ExponentField) -> Self {
        Self::scaled_p_laplacian(field, 1.0)
    }

    /// `A = c |ξ|^{p(x)-2} ξ`, `B = 0`.
    pub fn scaled_p_laplacian(field: &ExponentField, c: f64) -> Self {
        let field = field.clone();
        Self::new(
            move |x, _, xi| {
                let m = norm(xi);
                if m == 0.0 {
                    return vec![0.0; xi.len()];
                }
                let k = c * m.powf(field.value(x) - 2.0);
                xi.iter().map(|v| k * v).collect()
            },
            |_, _, _| 0.0,
        )
    }

    pub fn zero() -> Self {
        Self::new(|_, _, xi| vec![0.0; xi.len()], |_, _, _| 0.0)
    }

    /// Replace the source by `B(x, s, ξ) = f(x)` with `f` interpolated from the lattice.
    pub fn with_source(self, f: GridFunction) -> Self {
        Self { a: self.a, b: Arc::new(move |x, _, _| f.interpolate(x).unwrap_or(0.0)) }
    }

    pub fn with_source_map(self, b: impl Fn(&[f64], f64, &[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self { a: self.a, b: Arc::new(b) }
    }
}

/// Coefficients and integrability exponents of the structure conditions.
#[derive(Debug, Clone)]
pub struct StructureBounds {
    pub alpha: f64,
    pub g0: GridFunction,
    pub g1: GridFunction,
    pub f_src: GridFunction,
    pub c0: GridFunction,
    pub c1: GridFunction,
    pub c2: GridFunction,
    pub k1: GridFunction,
    pub k2: GridFunction,
    pub b: f64,
    pub m0: f64,
    pub q0: f64,
    pub q1: f64,
    pub q2: f64,
    pub t2: f64,
}

impl StructureBounds {
    /// All coefficient functions zero, `b = 0`, every exponent `∞`.
    pub fn new(grid: &Grid, alpha: f64, m0: f64, field: &ExponentField) -> Result<Self> {
        let zero = GridFunction::zeros(grid.clone());
        let inf = f64::INFINITY;
        let out = Self {
            alpha,
            g0: zero.clone(),
            g1: zero.clone(),
            f_src: zero.clone(),
            c0: zero.clone(),
            c1: zero.clone(),
            c2: zero.clone(),
            k1: zero.clone(),
            k2: zero,
            b: 0.0,
            m0,
            q0: inf,
            q1: inf,
            q2: inf,
            t2: inf,
        };
        out.validate(field)?;
        Ok(out)
    }

    pub fn with_exponents(mut self, q0: f64, q1: f64, q2: f64, t2: f64, field: &ExponentField) -> Result<Self> {
        self.q0 = q0;
        self.q1 = q1;
        self.q2 = q2;
        self.t2 = t2;
        self.validate(field)?;
        Ok(self)
    }

    pub fn validate(&self, field: &ExponentField) -> Result<()> {
        if !(self.alpha > 0.0) || !self.alpha.is_finite() {
            return Err(Error::InvalidArgument(format!("alpha must be positive, got {}", self.alpha)));
        }
        if !(self.m0 >= 0.0) || !(self.b >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "need m0 >= 0 and b >= 0, got m0 = {}, b = {}",
                self.m0, self.b
            )));
        }
        let grid = self.g0.grid();
        for (name, g) in self.functions() {
            grid.ensure_same(g.grid(), name)?;
            if g.values().iter().any(|v| *v < 0.0) {
                return Err(Error::InvalidArgument(format!("{name} must be nonnegative")));
            }
        }
        let n = grid.ndim() as f64;
        let p1 = field.p1();
        let lower_a = f64::max(1.0, n / (p1 - 1.0));
        let lower_b = f64::max(1.0, n / p1);
        for (name, q, lower) in
            [("q0", self.q0, lower_a), ("q1", self.q1, lower_a), ("q2", self.q2, lower_b), ("t2", self.t2, lower_b)]
        {
            if !(q > lower) {
                return Err(Error::InvalidArgument(format!("{name} = {q} must exceed {lower}")));
            }
        }
        Ok(())
    }

    fn functions(&self) -> [(&'static str, &GridFunction); 8] {
        [
            ("g0", &self.g0),
            ("g1", &self.g1),
            ("f", &self.f_src),
            ("c0", &self.c0),
            ("c1", &self.c1),
            ("c2", &self.c2),
            ("k1", &self.k1),
            ("k2", &self.k2),
        ]
    }

    pub fn grid(&self) -> &Grid {
        self.g0.grid()
    }
}

/// One evaluation point `(x, s, ξ)`; `node` indexes the coefficient lattice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub node: usize,
    pub x: Vec<f64>,
    pub s: f64,
    pub xi: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleOptions {
    /// Number of `s` values in `[0, M0]` (zero plus a log ladder up to `M0`).
    pub s_levels: usize,
    /// `|ξ|` ladder from `10^-3` to `10^3`.
    pub radii: usize,
    pub directions: usize,
    /// Use every `node_stride`-th lattice node.
    pub node_stride: usize,
    pub seed: u64,
}

impl Default for SampleOptions {
    fn default() -> Self {
        Self { s_levels: 5, radii: 13, directions: 4, node_stride: 1, seed: 0x5eed }
    }
}

/// Tensor lattice of nodes, states and gradients.
pub fn sample_lattice(grid: &Grid, m0: f64, opts: &SampleOptions) -> Result<Vec<Sample>> {
    if opts.s_levels == 0 || opts.radii < 2 || opts.directions == 0 || opts.node_stride == 0 {
        return Err(Error::InvalidArgument(format!("degenerate sample options {opts:?}")));
    }
    let n = grid.ndim();
    let mut states = vec![0.0];
    if m0 > 0.0 && opts.s_levels > 1 {
        // M0 * 10^{-k}, k = L-2 .. 0
        for k in (0..opts.s_levels - 1).rev() {
            states.push(m0 * 10f64.powi(-(k as i32)));
        }
    }
    let radii: Vec<f64> =
        (0..opts.radii).map(|i| 10f64.powf(-3.0 + 6.0 * i as f64 / (opts.radii - 1) as f64)).collect();
    let dirs = unit_directions(n, opts.directions, opts.seed);
    let mut out = Vec::new();
    for node in (0..grid.len()).step_by(opts.node_stride) {
        let x = grid.node(node);
        for &s in &states {
            for &r in &radii {
                for d in &dirs {
                    out.push(Sample { node, x: x.clone(), s, xi: d.iter().map(|v| r * v).collect() });
                }
            }
        }
    }
    Ok(out)
}

/// Coordinate axes (both signs) first, then seeded random unit vectors.
fn unit_directions(n: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(count);
    'axes: for sign in [1.0, -1.0] {
        for k in 0..n {
            if out.len() == count {
                break 'axes;
            }
            let mut e = vec![0.0; n];
            e[k] = sign;
            out.push(e);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    while out.len() < count {
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let m = norm(&v);
        if m > 1e-3 && m <= 1.0 {
            out.push(v.iter().map(|c| c / m).collect());
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    Coercivity,
    FluxGrowth,
    SourceGrowth,
    SourceGrowthPrime,
}

/// A failed inequality `lhs <= rhs` with `slack = rhs - lhs < 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub condition: Condition,
    pub sample: usize,
    pub x: Vec<f64>,
    pub s: f64,
    pub xi: Vec<f64>,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ViolationReport {
    pub samples: usize,
    /// Smallest slack seen per checked condition, in order of `conditions`.
    pub conditions: Vec<Condition>,
    pub min_slack: Vec<f64>,
    pub violations: Vec<Violation>,
}

impl ViolationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn count(&self, condition: Condition) -> usize {
        self.violations.iter().filter(|v| v.condition == condition).count()
    }
}

fn is_violation(lhs: f64, rhs: f64) -> bool {
    let slack = rhs - lhs;
    !(slack >= -SLACK_TOL * 1f64.max(lhs.abs()).max(rhs.abs()))
}

fn check(
    pair: &FluxPair,
    bounds: &StructureBounds,
    field: &ExponentField,
    samples: &[Sample],
    conditions: &[Condition],
) -> Result<ViolationReport> {
    bounds.validate(field)?;
    let grid = bounds.grid();
    let mut report = ViolationReport {
        samples: samples.len(),
        conditions: conditions.to_vec(),
        min_slack: vec![f64::INFINITY; conditions.len()],
        violations: Vec::new(),
    };
    for (idx, smp) in samples.iter().enumerate() {
        if smp.s.abs() > bounds.m0 * (1.0 + SLACK_TOL) {
            return Err(Error::InvalidArgument(format!("sample {idx} has |s| = {} > M0 = {}", smp.s.abs(), bounds.m0)));
        }
        if smp.node >= grid.len() || smp.xi.len() != grid.ndim() {
            return Err(Error::InvalidArgument(format!("sample {idx} does not match the lattice")));
        }
        let i = smp.node;
        let p = field.value(&smp.x);
        let m = norm(&smp.xi);
        let s = smp.s.abs();
        for (c, &cond) in conditions.iter().enumerate() {
            let (lhs, rhs) = match cond {
                Condition::Coercivity => {
                    let a = (pair.a)(&smp.x, smp.s, &smp.xi);
                    // written as lhs <= rhs
                    (
                        bounds.alpha * m.powf(p) - bounds.c0.values()[i] * s.powf(p) - bounds.g0.values()[i],
                        dot(&a, &smp.xi),
                    )
                }
                Condition::FluxGrowth => {
                    let a = (pair.a)(&smp.x, smp.s, &smp.xi);
                    (
                        norm(&a),
                        bounds.g1.values()[i]
                            + bounds.c1.values()[i] * s.powf(p - 1.0)
                            + bounds.k1.values()[i] * m.powf(p - 1.0),
                    )
                }
                Condition::SourceGrowth | Condition::SourceGrowthPrime => {
                    let b = (pair.b)(&smp.x, smp.s, &smp.xi);
                    let mut rhs = bounds.f_src.values()[i]
                        + bounds.c2.values()[i] * s.powf(p - 1.0)
                        + bounds.k2.values()[i] * m.powf(p - 1.0);
                    if cond == Condition::SourceGrowthPrime {
                        rhs += bounds.b * m.powf(p);
                    }
                    (b.abs(), rhs)
                }
            };
            let slack = rhs - lhs;
            report.min_slack[c] = report.min_slack[c].min(slack);
            if is_violation(lhs, rhs) {
                report.violations.push(Violation {
                    condition: cond,
                    sample: idx,
                    x: smp.x.clone(),
                    s: smp.s,
                    xi: smp.xi.clone(),
                    lhs,
                    rhs,
                    slack,
                });
            }
        }
    }
    Ok(report)
}

/// Coercivity, flux growth and source growth on every sample.
pub fn check_conditions(
    pair: &FluxPair,
    bounds: &StructureBounds,
    field: &ExponentField,
    samples: &[Sample],
) -> Result<ViolationReport> {
    check(pair, bounds, field, samples, &[Condition::Coercivity, Condition::FluxGrowth, Condition::SourceGrowth])
}

/// The source condition with the extra `b|ξ|^p` allowance.
pub fn check_source_growth_prime(
    pair: &FluxPair,
    bounds: &StructureBounds,
    field: &ExponentField,
    samples: &[Sample],
) -> Result<ViolationReport> {
    check(pair, bounds, field, samples, &[Condition::SourceGrowthPrime])
}

/// Only the coercivity inequality.
pub fn check_coercivity(
    pair: &FluxPair,
    bounds: &StructureBounds,
    field: &ExponentField,
    samples: &[Sample],
) -> Result<ViolationReport> {
    check(pair, bounds, field, samples, &[Condition::Coercivity])
}

/// `[R^{1-N/q2} ‖f‖_{q2}]^{1/(p_- - 1)} + [R^{-N/q0} ‖g0‖_{q0}]^{..} + [R^{-N/q1} ‖g1‖_{q1}]^{..}`
/// with norms and `p_-` over `B_{4R}`.
pub fn mu_general(bounds: &StructureBounds, ball: &Ball, field: &ExponentField) -> Result<f64> {
    bounds.validate(field)?;
    let grid = bounds.grid();
    let r = ball.radius;
    if r > 1.0 {
        return Err(Error::InvalidArgument(format!("radius {r} exceeds 1")));
    }
    let big = ball.dilate(4.0);
    big.ensure_inside(grid, "mu_general")?;
    let (p_minus, _) = band(field, &big, grid)?;
    let n = grid.ndim() as f64;
    let region = Region::Ball(big);
    let term = |g: &GridFunction, q: f64, shift: f64| {
        let nrm = lq_norm_region(g, q, &region);
        if nrm == 0.0 {
            return 0.0;
        }
        (r.powf(shift - n / q) * nrm).powf(1.0 / (p_minus - 1.0))
    };
    Ok(term(&bounds.f_src, bounds.q2, 1.0) + term(&bounds.g0, bounds.q0, 0.0) + term(&bounds.g1, bounds.q1, 0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransformDirection {
    /// `e^{(b/α)(s - M0)} A`
    Sub,
    /// `e^{(b/α)(M0 - s)} A`
    Super,
}

/// Scale the flux by `e^{±(b/α)(s - M0)}`; the source is unchanged.
pub fn exponential_transform(
    pair: &FluxPair,
    bounds: &StructureBounds,
    direction: TransformDirection,
) -> Result<FluxPair> {
    if !(bounds.alpha > 0.0) {
        return Err(Error::InvalidArgument(format!("alpha must be positive, got {}", bounds.alpha)));
    }
    let k = bounds.b / bounds.alpha;
    let m0 = bounds.m0;
    let sign = match direction {
        TransformDirection::Sub => 1.0,
        TransformDirection::Super => -1.0,
    };
    let a = pair.a.clone();
    Ok(FluxPair {
        a: Arc::new(move |x, s, xi| {
            let factor = (sign * k * (s - m0)).exp();
            a(x, s, xi).into_iter().map(|v| factor * v).collect()
        }),
        b: pair.b.clone(),
    })
}

/// Ellipticity constant `α e^{-(b/α) M0}` inherited by the sub-transform on `0 <= s <= M0`.
pub fn transformed_alpha(bounds: &StructureBounds) -> f64 {
    bounds.alpha * (-(bounds.b / bounds.alpha) * bounds.m0).exp()
}
