//! Dirichlet problems for `div(|∇u|^{p(x)-2} ∇u) = f` by energy minimization.
//!
//! Each lattice cell is split into `N!` Kuhn simplices carrying piecewise
//! linear interpolants, so gradients are forward differences along the
//! simplex edges. The discrete energy
//!
//! ```text
//! E(u) = Σ_K |K| |∇u_K|_ε^{p_K} / p_K + Σ_i w_i f_i u_i
//! ```
//!
//! uses `p_K = p(centroid of K)`, `|g|_ε = sqrt(|g|² + ε²)` and lumped nodal
//! weights `w_i`. Its gradient is the weak residual tested against the nodal
//! hat functions, so a stationary point is a discrete weak solution.

mod banded;
pub mod pointwise;

pub use banded::{BandedCholesky, BandedSpd};
pub use pointwise::{p_laplacian_bracket, p_laplacian_pointwise, SmoothFunction};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponent::ExponentField;
use crate::grid::{Grid, GridFunction, KuhnSimplex};
use crate::quadrature::Sum;

pub const DEFAULT_REG_EPS: f64 = 1e-8;

/// Sufficient-decrease constant of the Armijo test.
const ARMIJO_C: f64 = 1e-4;
const MIN_STEP: f64 = 1e-14;

/// A Dirichlet problem on the lattice of `rhs`.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub field: ExponentField,
    /// Source `f` at the nodes.
    pub rhs: GridFunction,
    /// Boundary nodes carry the Dirichlet data; interior values seed the
    /// iteration when `warm_start` is off.
    pub dirichlet: GridFunction,
    pub reg_eps: f64,
    pub tol: f64,
    pub max_iter: usize,
    /// Start the regularization here and divide by 10 until `reg_eps`.
    pub continuation_from: Option<f64>,
    /// Seed the iteration with the `p = 2` solution of the same data.
    pub warm_start: bool,
}

impl ProblemSpec {
    pub fn new(field: ExponentField, rhs: GridFunction, dirichlet: GridFunction) -> Self {
        Self {
            field,
            rhs,
            dirichlet,
            reg_eps: DEFAULT_REG_EPS,
            tol: 1e-9,
            max_iter: 200,
            continuation_from: None,
            warm_start: true,
        }
    }

    pub fn grid(&self) -> &Grid {
        self.rhs.grid()
    }

    pub fn validate(&self) -> Result<()> {
        self.rhs.grid().ensure_same(self.dirichlet.grid(), "rhs vs dirichlet")?;
        if !(self.reg_eps >= 0.0) || !self.reg_eps.is_finite() {
            return Err(Error::InvalidArgument(format!("reg_eps must be >= 0, got {}", self.reg_eps)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidArgument(format!("tol must be > 0, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidArgument("max_iter must be >= 1".into()));
        }
        if self.reg_eps == 0.0 && self.field.p1() < 2.0 {
            return Err(Error::InvalidArgument(format!(
                "p1 = {} < 2 is singular at vanishing gradients; use reg_eps > 0",
                self.field.p1()
            )));
        }
        if let Some(e0) = self.continuation_from {
            if !(e0 > self.reg_eps) {
                return Err(Error::InvalidArgument(format!(
                    "continuation start {e0} must exceed reg_eps {}",
                    self.reg_eps
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub solution: GridFunction,
    pub energy_trace: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Serializable digest of a [`SolveResult`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveSummary {
    pub converged: bool,
    pub iterations: usize,
    pub residual: f64,
    pub final_energy: f64,
    pub energy_trace: Vec<f64>,
}

impl SolveResult {
    pub fn summary(&self) -> SolveSummary {
        SolveSummary {
            converged: self.converged,
            iterations: self.iterations,
            residual: self.residual,
            final_energy: self.energy_trace.last().copied().unwrap_or(f64::NAN),
            energy_trace: self.energy_trace.clone(),
        }
    }
}

/// The discrete energy and its derivatives on one lattice.
pub struct Discretization<'a> {
    grid: &'a Grid,
    simplices: Vec<KuhnSimplex>,
    simplex_volume: f64,
    /// Exponent per (cell, simplex), cell-major.
    exponents: Vec<f64>,
    cell_bases: Vec<usize>,
    /// Lumped nodal weights.
    lumped: Vec<f64>,
    /// Precomputed `(∫ φ^p)` structure: patch size and hat gradient norms.
    hat_patch: Vec<f64>,
}

impl<'a> Discretization<'a> {
    pub fn new(grid: &'a Grid, field: &ExponentField) -> Self {
        let n = grid.ndim();
        let simplices = grid.simplices();
        let factorial: usize = (1..=n).product();
        let simplex_volume = grid.cell_volume() / factorial as f64;
        let centroids: Vec<Vec<f64>> = simplices.iter().map(|s| s.centroid_local()).collect();
        let mut exponents = Vec::with_capacity(grid.num_cells() * simplices.len());
        let mut cell_bases = Vec::with_capacity(grid.num_cells());
        let corners = grid.corner_offsets();
        let mut lumped = vec![0.0; grid.len()];
        let corner_w = grid.cell_volume() / corners.len() as f64;
        let mut x = vec![0.0; n];
        for (base, multi) in grid.cell_bases() {
            cell_bases.push(base);
            for c in &centroids {
                for k in 0..n {
                    x[k] = grid.origin()[k] + (multi[k] as f64 + c[k]) * grid.spacing()[k];
                }
                exponents.push(field.value(&x));
            }
            for off in &corners {
                lumped[base + off] += corner_w;
            }
        }
        let hat_patch = hat_gradient_patch(grid, &simplices);
        Self { grid, simplices, simplex_volume, exponents, cell_bases, lumped, hat_patch }
    }

    pub fn grid(&self) -> &Grid {
        self.grid
    }

    pub fn lumped_weights(&self) -> &[f64] {
        &self.lumped
    }

    pub fn energy(&self, u: &[f64], f: &[f64], reg_eps: f64) -> f64 {
        let n = self.grid.ndim();
        let eps2 = reg_eps * reg_eps;
        let mut g = vec![0.0; n];
        let mut total = Sum::default();
        let ns = self.simplices.len();
        for (c, &base) in self.cell_bases.iter().enumerate() {
            for (s, simplex) in self.simplices.iter().enumerate() {
                simplex.gradient(base, u, self.grid.spacing(), &mut g);
                let p = self.exponents[c * ns + s];
                let g2: f64 = g.iter().map(|v| v * v).sum::<f64>() + eps2;
                if g2 > 0.0 {
                    total.add(self.simplex_volume * g2.powf(0.5 * p) / p);
                }
            }
        }
        for i in 0..u.len() {
            total.add(self.lumped[i] * f[i] * u[i]);
        }
        total.value()
    }

    /// Energy gradient: `∫ |∇u|_ε^{p-2} ∇u · ∇φ_i + w_i f_i` for every node.
    pub fn gradient(&self, u: &[f64], f: &[f64], reg_eps: f64, out: &mut [f64]) {
        self.assemble(u, f, reg_eps, out, None, None);
    }

    fn assemble(
        &self,
        u: &[f64],
        f: &[f64],
        reg_eps: f64,
        grad_out: &mut [f64],
        mut hess: Option<&mut BandedSpd>,
        fixed_p: Option<f64>,
    ) {
        let n = self.grid.ndim();
        let h = self.grid.spacing();
        let eps2 = reg_eps * reg_eps;
        let mut g = vec![0.0; n];
        // gradient of the simplex interpolant w.r.t. its N+1 vertex values
        let mut local = vec![0.0; (n + 1) * (n + 1)];
        for (i, v) in grad_out.iter_mut().enumerate() {
            *v = self.lumped[i] * f[i];
        }
        let ns = self.simplices.len();
        for (c, &base) in self.cell_bases.iter().enumerate() {
            for (s, simplex) in self.simplices.iter().enumerate() {
                simplex.gradient(base, u, h, &mut g);
                let p = fixed_p.unwrap_or(self.exponents[c * ns + s]);
                let g2: f64 = g.iter().map(|v| v * v).sum::<f64>() + eps2;
                if g2 == 0.0 {
                    continue;
                }
                let a = g2.powf(0.5 * p - 1.0);
                let vol = self.simplex_volume;
                for (j, &axis) in simplex.axes.iter().enumerate() {
                    let flux = vol * a * g[axis] / h[axis];
                    grad_out[base + simplex.offsets[j + 1]] += flux;
                    grad_out[base + simplex.offsets[j]] -= flux;
                }
                if let Some(hm) = hess.as_deref_mut() {
                    // M = a I + b g gᵀ; local = Bᵀ M B with B[axis_j] = (e_{j+1} - e_j) / h
                    let b = (p - 2.0) * g2.powf(0.5 * p - 2.0);
                    local.iter_mut().for_each(|v| *v = 0.0);
                    for (j, &aj) in simplex.axes.iter().enumerate() {
                        for (k, &ak) in simplex.axes.iter().enumerate() {
                            let m = if j == k { a } else { 0.0 } + b * g[aj] * g[ak];
                            let m = vol * m / (h[aj] * h[ak]);
                            local[(j + 1) * (n + 1) + (k + 1)] += m;
                            local[(j + 1) * (n + 1) + k] -= m;
                            local[j * (n + 1) + (k + 1)] -= m;
                            local[j * (n + 1) + k] += m;
                        }
                    }
                    for r in 0..=n {
                        let gr = base + simplex.offsets[r];
                        if self.grid.is_boundary(gr) {
                            continue;
                        }
                        for q in 0..=r {
                            let gq = base + simplex.offsets[q];
                            if !self.grid.is_boundary(gq) {
                                hm.add(gr, gq, local[r * (n + 1) + q]);
                            }
                        }
                    }
                }
            }
        }
    }

    /// Normalized weak residual: `max_i |∂E/∂u_i| / ‖φ_i‖_{1,p_i}` over interior nodes.
    pub fn residual_from_gradient(&self, grad: &[f64], field: &ExponentField) -> f64 {
        let mut x = vec![0.0; self.grid.ndim()];
        let mut worst: f64 = 0.0;
        for (i, gi) in grad.iter().enumerate() {
            if self.grid.is_boundary(i) {
                continue;
            }
            self.grid.node_into(i, &mut x);
            let p = field.value(&x);
            worst = worst.max(gi.abs() / self.hat_sobolev_norm(p));
        }
        worst
    }

    /// `‖φ‖_{L^p} + ‖∇φ‖_{L^p}` of an interior nodal hat with constant `p`.
    pub fn hat_sobolev_norm(&self, p: f64) -> f64 {
        let n = self.grid.ndim();
        let patch = self.hat_patch.len() as f64;
        // ∫_K λ^p = |K| N! / ((p+1)(p+2)...(p+N))
        let factorial: f64 = (1..=n).map(|k| k as f64).product();
        let denom: f64 = (1..=n).map(|j| p + j as f64).product();
        let lp = (patch * self.simplex_volume * factorial / denom).powf(1.0 / p);
        let grad: f64 = self.hat_patch.iter().map(|m| self.simplex_volume * m.powf(p)).sum::<f64>();
        lp + grad.powf(1.0 / p)
    }
}

/// `|∇φ|` on every simplex of an interior hat's support.
fn hat_gradient_patch(grid: &Grid, simplices: &[KuhnSimplex]) -> Vec<f64> {
    let n = grid.ndim();
    let h = grid.spacing();
    let mut out = Vec::new();
    for corner in 0..1usize << n {
        let bits = corner.count_ones() as usize;
        for s in simplices {
            let first: usize = s.axes[..bits].iter().map(|a| 1usize << a).sum();
            if first != corner {
                continue;
            }
            let mut g2 = 0.0;
            if bits >= 1 {
                g2 += 1.0 / (h[s.axes[bits - 1]] * h[s.axes[bits - 1]]);
            }
            if bits < n {
                g2 += 1.0 / (h[s.axes[bits]] * h[s.axes[bits]]);
            }
            out.push(f64::sqrt(g2));
        }
    }
    out
}

/// Discrete energy `∫ |∇u|_ε^{p}/p + f u`.
pub fn energy(u: &GridFunction, field: &ExponentField, f: &GridFunction, reg_eps: f64) -> Result<f64> {
    u.grid().ensure_same(f.grid(), "energy: u vs f")?;
    if !(reg_eps >= 0.0) {
        return Err(Error::InvalidArgument(format!("reg_eps must be >= 0, got {reg_eps}")));
    }
    let disc = Discretization::new(u.grid(), field);
    Ok(disc.energy(u.values(), f.values(), reg_eps))
}

/// Weak residual of `u` for the problem `spec`.
pub fn weak_residual(u: &GridFunction, spec: &ProblemSpec) -> Result<f64> {
    u.grid().ensure_same(spec.grid(), "weak_residual: u vs problem")?;
    let disc = Discretization::new(u.grid(), &spec.field);
    let mut grad = vec![0.0; u.grid().len()];
    disc.gradient(u.values(), spec.rhs.values(), spec.reg_eps, &mut grad);
    Ok(disc.residual_from_gradient(&grad, &spec.field))
}

/// Raw weak pairing `∫ |∇u|^{p-2} ∇u · ∇φ_i` for one node (no source term).
pub fn weak_pairing(u: &GridFunction, field: &ExponentField, node: usize, reg_eps: f64) -> f64 {
    let disc = Discretization::new(u.grid(), field);
    let zero = vec![0.0; u.grid().len()];
    let mut grad = vec![0.0; u.grid().len()];
    disc.gradient(u.values(), &zero, reg_eps, &mut grad);
    grad[node]
}

/// Minimize the discrete energy with boundary nodes pinned to the Dirichlet data.
///
/// Newton directions from the banded Hessian, safeguarded by an Armijo
/// backtracking line search, so the recorded energies never increase.
pub fn solve_dirichlet(spec: &ProblemSpec) -> Result<SolveResult> {
    spec.validate()?;
    let grid = spec.grid();
    let disc = Discretization::new(grid, &spec.field);
    let f = spec.rhs.values();
    let mut u = spec.dirichlet.values().to_vec();

    if spec.warm_start {
        // p = 2 problem: quadratic, one Newton step from any start
        for (i, v) in u.iter_mut().enumerate() {
            if !grid.is_boundary(i) {
                *v = 0.0;
            }
        }
        let mut grad = vec![0.0; grid.len()];
        let mut hess = BandedSpd::zeros(grid.len(), grid.bandwidth());
        // with p = 2 the flux does not depend on eps; eps > 0 keeps u = 0 simplices in the Hessian
        disc.assemble(&u, f, 1.0, &mut grad, Some(&mut hess), Some(2.0));
        if let Some(step) = newton_direction(grid, hess, &grad) {
            for (v, d) in u.iter_mut().zip(step) {
                *v += d;
            }
        }
    }

    let mut schedule = Vec::new();
    if let Some(mut e) = spec.continuation_from {
        while e > spec.reg_eps * 10.0 * (1.0 + 1e-12) {
            schedule.push(e);
            e /= 10.0;
        }
    }
    schedule.push(spec.reg_eps);

    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    let mut residual = f64::INFINITY;
    for (stage, &eps) in schedule.iter().enumerate() {
        let last = stage + 1 == schedule.len();
        let out = newton_stage(&disc, &spec.field, f, &mut u, eps, spec.tol, spec.max_iter, &mut trace)?;
        iterations += out.iterations;
        residual = out.residual;
        if last {
            converged = out.converged;
        }
    }
    let solution = GridFunction::new(grid.clone(), u)?;
    Ok(SolveResult { solution, energy_trace: trace, residual, iterations, converged })
}

struct StageOutcome {
    iterations: usize,
    residual: f64,
    converged: bool,
}

#[allow(clippy::too_many_arguments)]
fn newton_stage(
    disc: &Discretization,
    field: &ExponentField,
    f: &[f64],
    u: &mut Vec<f64>,
    eps: f64,
    tol: f64,
    max_iter: usize,
    trace: &mut Vec<f64>,
) -> Result<StageOutcome> {
    let grid = disc.grid();
    let len = grid.len();
    let mut grad = vec![0.0; len];
    let mut energy = disc.energy(u, f, eps);
    trace.push(energy);
    let mut trial = vec![0.0; len];
    let mut trial_grad = vec![0.0; len];
    for it in 0..max_iter {
        let mut hess = BandedSpd::zeros(len, grid.bandwidth());
        disc.assemble(u, f, eps, &mut grad, Some(&mut hess), None);
        zero_boundary(grid, &mut grad);
        let residual = disc.residual_from_gradient(&grad, field);
        if !residual.is_finite() {
            return Err(Error::NonFinite(it));
        }
        if residual <= tol {
            return Ok(StageOutcome { iterations: it, residual, converged: true });
        }
        let mut dir = newton_direction(grid, hess, &grad).unwrap_or_else(|| grad.iter().map(|g| -g).collect());
        let mut slope: f64 = grad.iter().zip(&dir).map(|(g, d)| g * d).sum();
        if !(slope < 0.0) {
            dir = grad.iter().map(|g| -g).collect();
            slope = -grad.iter().map(|g| g * g).sum::<f64>();
        }

        let mut t = 1.0;
        let mut accepted = false;
        while t >= MIN_STEP {
            for i in 0..len {
                trial[i] = u[i] + t * dir[i];
            }
            let e = disc.energy(&trial, f, eps);
            if !e.is_finite() {
                t *= 0.5;
                continue;
            }
            if e <= energy + ARMIJO_C * t * slope {
                accepted = true;
                energy = e;
                break;
            }
            // rounding floor: accept a non-increasing full step that lowers the residual
            if t == 1.0 && e <= energy {
                disc.gradient(&trial, f, eps, &mut trial_grad);
                zero_boundary(grid, &mut trial_grad);
                if disc.residual_from_gradient(&trial_grad, field) < residual {
                    accepted = true;
                    energy = e;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            return Ok(StageOutcome { iterations: it, residual, converged: false });
        }
        if trial.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(it + 1));
        }
        std::mem::swap(u, &mut trial);
        trace.push(energy);
    }
    disc.gradient(u, f, eps, &mut grad);
    zero_boundary(grid, &mut grad);
    let residual = disc.residual_from_gradient(&grad, field);
    Ok(StageOutcome { iterations: max_iter, residual, converged: residual <= tol })
}

fn zero_boundary(grid: &Grid, v: &mut [f64]) {
    for (i, x) in v.iter_mut().enumerate() {
        if grid.is_boundary(i) {
            *x = 0.0;
        }
    }
}

/// Solve `H d = -grad` on interior nodes; pinned rows become identity.
/// Shifts the diagonal when the factorization breaks down.
fn newton_direction(grid: &Grid, mut hess: BandedSpd, grad: &[f64]) -> Option<Vec<f64>> {
    for i in 0..grid.len() {
        if grid.is_boundary(i) {
            hess.set_diagonal(i, 1.0);
        }
    }
    let rhs: Vec<f64> = grad.iter().enumerate().map(|(i, g)| if grid.is_boundary(i) { 0.0 } else { -g }).collect();
    let scale = hess.max_diagonal().max(f64::MIN_POSITIVE);
    let mut shift = 0.0;
    for _ in 0..12 {
        let mut m = hess.clone();
        if shift > 0.0 {
            m.add_to_diagonal(shift);
        }
        if let Some(chol) = m.cholesky() {
            let d = chol.solve(&rhs);
            if d.iter().all(|v| v.is_finite()) {
                return Some(d);
            }
        }
        shift = if shift == 0.0 { 1e-12 * scale } else { shift * 100.0 };
    }
    None
}
