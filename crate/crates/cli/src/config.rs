//! TOML run configuration.
//!
//! ```toml
//! seed = 7
//! output = "reports"
//!
//! [problem]
//! lower = [0.0]
//! upper = [1.0]
//! cells = [256]
//! exponent = { kind = "constant", value = 2.0 }
//! rhs = { kind = "constant", value = -2.0 }
//!
//! [[checks]]
//! check = "harnack"
//! center = [0.5]
//! radius = 0.125
//! ```

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use pxlap_core::exponent::{ExponentField, Profile};
use pxlap_core::grid::{Grid, GridFunction};
use pxlap_core::solver::ProblemSpec;
use pxlap_core::structure::TransformDirection;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: Option<ProblemConfig>,
    #[serde(default)]
    pub checks: Vec<CheckSpec>,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default)]
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self { problem: None, checks: Vec::new(), output: default_output(), seed: 0 }
    }
}

fn default_output() -> PathBuf {
    PathBuf::from("reports")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub cells: Vec<usize>,
    pub exponent: ExponentSpec,
    #[serde(default)]
    pub rhs: ScalarSpec,
    #[serde(default)]
    pub boundary: ScalarSpec,
    #[serde(default = "default_reg_eps")]
    pub reg_eps: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default)]
    pub continuation_from: Option<f64>,
}

fn default_reg_eps() -> f64 {
    1e-8
}

fn default_tol() -> f64 {
    1e-9
}

fn default_max_iter() -> usize {
    200
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ExponentSpec {
    Constant {
        value: f64,
    },
    Affine {
        offset: f64,
        gradient: Vec<f64>,
    },
    Radial {
        center: Vec<f64>,
        offset: f64,
        slope: f64,
    },
    Piecewise {
        axis: usize,
        threshold: f64,
        below: f64,
        above: f64,
    },
    /// Nodal exponent values on the problem lattice.
    Pxgrid {
        path: PathBuf,
    },
}

/// Closed-form or file-backed scalar data for the source and boundary values.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ScalarSpec {
    Constant {
        value: f64,
    },
    /// `offset + gradient · x`
    Affine {
        offset: f64,
        gradient: Vec<f64>,
    },
    /// `max(0, offset + gradient · x)`
    Ramp {
        offset: f64,
        gradient: Vec<f64>,
    },
    /// `offset + scale |x - center|^exponent`
    Power {
        center: Vec<f64>,
        #[serde(default)]
        offset: f64,
        #[serde(default = "one")]
        scale: f64,
        exponent: f64,
    },
    Pxgrid {
        path: PathBuf,
    },
}

impl Default for ScalarSpec {
    fn default() -> Self {
        ScalarSpec::Constant { value: 0.0 }
    }
}

fn one() -> f64 {
    1.0
}

fn infinity() -> f64 {
    f64::INFINITY
}

fn affine_value(offset: f64, gradient: &[f64], x: &[f64]) -> f64 {
    offset + gradient.iter().zip(x).map(|(g, v)| g * v).sum::<f64>()
}

fn check_len(what: &str, got: usize, dim: usize) -> Result<()> {
    if got != dim {
        bail!("{what} has {got} components, the grid has dimension {dim}");
    }
    Ok(())
}

impl ScalarSpec {
    pub fn sample(&self, grid: &Grid, base: &Path) -> Result<GridFunction> {
        let dim = grid.ndim();
        let out = match self {
            ScalarSpec::Constant { value } => GridFunction::constant(grid.clone(), *value),
            ScalarSpec::Affine { offset, gradient } => {
                check_len("gradient", gradient.len(), dim)?;
                GridFunction::from_fn(grid.clone(), |x| affine_value(*offset, gradient, x))?
            }
            ScalarSpec::Ramp { offset, gradient } => {
                check_len("gradient", gradient.len(), dim)?;
                GridFunction::from_fn(grid.clone(), |x| affine_value(*offset, gradient, x).max(0.0))?
            }
            ScalarSpec::Power { center, offset, scale, exponent } => {
                check_len("center", center.len(), dim)?;
                GridFunction::from_fn(grid.clone(), |x| {
                    offset + scale * pxlap_core::geometry::distance(x, center).powf(*exponent)
                })?
            }
            ScalarSpec::Pxgrid { path } => load_on(grid, &resolve(base, path))?,
        };
        Ok(out)
    }
}

impl ExponentSpec {
    pub fn field(&self, grid: &Grid, base: &Path) -> Result<ExponentField> {
        let profile = match self {
            ExponentSpec::Constant { value } => Profile::Constant(*value),
            ExponentSpec::Affine { offset, gradient } => {
                check_len("exponent gradient", gradient.len(), grid.ndim())?;
                Profile::Affine { offset: *offset, gradient: gradient.clone() }
            }
            ExponentSpec::Radial { center, offset, slope } => {
                check_len("exponent center", center.len(), grid.ndim())?;
                Profile::Radial { center: center.clone(), offset: *offset, slope: *slope }
            }
            ExponentSpec::Piecewise { axis, threshold, below, above } => {
                Profile::Piecewise { axis: *axis, threshold: *threshold, below: *below, above: *above }
            }
            ExponentSpec::Pxgrid { path } => Profile::Sampled(load_on(grid, &resolve(base, path))?),
        };
        Ok(ExponentField::fit(profile, grid)?)
    }
}

fn resolve(base: &Path, path: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        base.join(path)
    }
}

fn load_on(grid: &Grid, path: &Path) -> Result<GridFunction> {
    let u = GridFunction::load(path).with_context(|| format!("reading grid file {}", path.display()))?;
    if !u.grid().same_lattice(grid) {
        bail!("grid file {} does not match the problem lattice", path.display());
    }
    Ok(u)
}

/// A problem with every file reference resolved.
pub struct Problem {
    pub grid: Grid,
    pub spec: ProblemSpec,
}

impl ProblemConfig {
    pub fn grid(&self) -> Result<Grid> {
        Ok(Grid::uniform(&self.lower, &self.upper, &self.cells)?)
    }

    pub fn build(&self, base: &Path) -> Result<Problem> {
        let grid = self.grid()?;
        let field = self.exponent.field(&grid, base).context("exponent")?;
        let rhs = self.rhs.sample(&grid, base).context("rhs")?;
        let boundary = self.boundary.sample(&grid, base).context("boundary")?;
        let mut spec = ProblemSpec::new(field, rhs, boundary);
        spec.reg_eps = self.reg_eps;
        spec.tol = self.tol;
        spec.max_iter = self.max_iter;
        spec.continuation_from = self.continuation_from;
        spec.validate()?;
        Ok(Problem { grid, spec })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormTarget {
    Solution,
    Gradient,
    Sobolev,
    Rhs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Transform {
    Sub,
    Super,
}

impl From<Transform> for TransformDirection {
    fn from(t: Transform) -> Self {
        match t {
            Transform::Sub => TransformDirection::Sub,
            Transform::Super => TransformDirection::Super,
        }
    }
}

/// One requested check. The `check` key selects the variant.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "check", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CheckSpec {
    Harnack {
        center: Vec<f64>,
        radius: f64,
        #[serde(default = "infinity")]
        q0: f64,
        /// Radii R, R/2, ... for the stability sweep.
        #[serde(default = "one_level")]
        levels: usize,
    },
    WeakHarnack {
        center: Vec<f64>,
        radius: f64,
        t: f64,
        #[serde(default)]
        shift: bool,
    },
    Caccioppoli {
        center: Vec<f64>,
        radius: f64,
        gamma: f64,
        /// Defaults to the sufficient constant for `gamma` and the exponent bounds.
        #[serde(default)]
        c_probe: Option<f64>,
        #[serde(default)]
        h: ScalarSpec,
    },
    Holder {
        center: Vec<f64>,
        radii: Vec<f64>,
    },
    LocalBound {
        center: Vec<f64>,
        inner_radius: f64,
        outer_radius: f64,
        t: f64,
        c_probe: f64,
    },
    Barrier {
        center: Vec<f64>,
        delta: f64,
        mus: Vec<f64>,
        #[serde(default = "one")]
        a_level: f64,
        #[serde(default = "default_resolution")]
        resolution: usize,
        #[serde(default = "default_barrier_tol")]
        tol: f64,
    },
    MaxPrinciple {
        margin: f64,
        #[serde(default)]
        zero_tol: Option<f64>,
    },
    Hopf {
        point: Vec<f64>,
        direction: Vec<f64>,
        steps: Vec<f64>,
        #[serde(default = "default_zero_tol")]
        zero_tol: f64,
    },
    Structure {
        #[serde(default = "one")]
        alpha: f64,
        #[serde(default = "one")]
        m0: f64,
        /// Flux `scale · |ξ|^{p-2} ξ`.
        #[serde(default = "one")]
        flux_scale: f64,
        #[serde(default = "one")]
        k1: f64,
        #[serde(default)]
        transform: Option<Transform>,
        #[serde(default)]
        b: f64,
        #[serde(default = "default_s_levels")]
        s_levels: usize,
        #[serde(default = "default_radii")]
        radii: usize,
        #[serde(default = "default_directions")]
        directions: usize,
        #[serde(default = "one_level")]
        node_stride: usize,
    },
    Norm {
        target: NormTarget,
    },
}

fn one_level() -> usize {
    1
}

fn default_resolution() -> usize {
    32
}

fn default_barrier_tol() -> f64 {
    1e-10
}

fn default_zero_tol() -> f64 {
    1e-12
}

fn default_s_levels() -> usize {
    5
}

fn default_radii() -> usize {
    13
}

fn default_directions() -> usize {
    4
}

impl CheckSpec {
    pub fn name(&self) -> &'static str {
        match self {
            CheckSpec::Harnack { .. } => "harnack",
            CheckSpec::WeakHarnack { .. } => "weak-harnack",
            CheckSpec::Caccioppoli { .. } => "caccioppoli",
            CheckSpec::Holder { .. } => "holder",
            CheckSpec::LocalBound { .. } => "local-bound",
            CheckSpec::Barrier { .. } => "barrier",
            CheckSpec::MaxPrinciple { .. } => "max-principle",
            CheckSpec::Hopf { .. } => "hopf",
            CheckSpec::Structure { .. } => "structure",
            CheckSpec::Norm { .. } => "norm",
        }
    }

    /// Whether the check reads the solved `u`.
    pub fn needs_solution(&self) -> bool {
        !matches!(
            self,
            CheckSpec::Barrier { .. } | CheckSpec::Structure { .. } | CheckSpec::Norm { target: NormTarget::Rhs }
        )
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }
}

/// Command-line values that replace their config counterparts.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub output: Option<PathBuf>,
    pub seed: Option<u64>,
    pub lower: Option<Vec<f64>>,
    pub upper: Option<Vec<f64>>,
    pub cells: Option<Vec<usize>>,
    pub p: Option<f64>,
    pub rhs: Option<f64>,
    pub boundary: Option<f64>,
    pub reg_eps: Option<f64>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub continuation_from: Option<f64>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut RunConfig) -> Result<()> {
        if let Some(o) = &self.output {
            cfg.output = o.clone();
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        let touches_problem = self.lower.is_some()
            || self.upper.is_some()
            || self.cells.is_some()
            || self.p.is_some()
            || self.rhs.is_some()
            || self.boundary.is_some()
            || self.reg_eps.is_some()
            || self.tol.is_some()
            || self.max_iter.is_some()
            || self.continuation_from.is_some();
        if !touches_problem {
            return Ok(());
        }
        let problem = match cfg.problem.take() {
            Some(p) => p,
            None => match (&self.lower, &self.upper, &self.cells, self.p) {
                (Some(lower), Some(upper), Some(cells), Some(p)) => ProblemConfig {
                    lower: lower.clone(),
                    upper: upper.clone(),
                    cells: cells.clone(),
                    exponent: ExponentSpec::Constant { value: p },
                    rhs: ScalarSpec::default(),
                    boundary: ScalarSpec::default(),
                    reg_eps: default_reg_eps(),
                    tol: default_tol(),
                    max_iter: default_max_iter(),
                    continuation_from: None,
                },
                _ => bail!("without a [problem] table, --lower, --upper, --cells and --p are all required"),
            },
        };
        let mut problem = problem;
        if let Some(v) = &self.lower {
            problem.lower = v.clone();
        }
        if let Some(v) = &self.upper {
            problem.upper = v.clone();
        }
        if let Some(v) = &self.cells {
            problem.cells = v.clone();
        }
        if let Some(p) = self.p {
            problem.exponent = ExponentSpec::Constant { value: p };
        }
        if let Some(v) = self.rhs {
            problem.rhs = ScalarSpec::Constant { value: v };
        }
        if let Some(v) = self.boundary {
            problem.boundary = ScalarSpec::Constant { value: v };
        }
        if let Some(v) = self.reg_eps {
            problem.reg_eps = v;
        }
        if let Some(v) = self.tol {
            problem.tol = v;
        }
        if let Some(v) = self.max_iter {
            problem.max_iter = v;
        }
        if let Some(v) = self.continuation_from {
            problem.continuation_from = Some(v);
        }
        cfg.problem = Some(problem);
        Ok(())
    }
}
