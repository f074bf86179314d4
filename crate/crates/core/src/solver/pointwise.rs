//! Chain-rule evaluation of `div(|∇w|^{p(x)-2} ∇w)` for closed-form `w`.

use crate::error::{Error, Result};
use crate::exponent::ExponentField;
use crate::geometry::{dot, norm};

/// A closed-form function with exact first and second derivatives.
pub trait SmoothFunction {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64]) -> Vec<f64>;
    /// Row-major `N x N` Hessian.
    fn hessian(&self, x: &[f64]) -> Vec<f64>;
}

/// `c + a · x`
#[derive(Debug, Clone)]
pub struct AffineFunction {
    pub constant: f64,
    pub slope: Vec<f64>,
}

impl SmoothFunction for AffineFunction {
    fn dim(&self) -> usize {
        self.slope.len()
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.constant + dot(&self.slope, x)
    }
    fn gradient(&self, _: &[f64]) -> Vec<f64> {
        self.slope.clone()
    }
    fn hessian(&self, _: &[f64]) -> Vec<f64> {
        vec![0.0; self.slope.len() * self.slope.len()]
    }
}

/// `scale * |x - center|^2`
#[derive(Debug, Clone)]
pub struct RadialQuadratic {
    pub center: Vec<f64>,
    pub scale: f64,
}

impl SmoothFunction for RadialQuadratic {
    fn dim(&self) -> usize {
        self.center.len()
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.scale * x.iter().zip(&self.center).map(|(a, c)| (a - c) * (a - c)).sum::<f64>()
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.center).map(|(a, c)| 2.0 * self.scale * (a - c)).collect()
    }
    fn hessian(&self, _: &[f64]) -> Vec<f64> {
        let n = self.center.len();
        let mut h = vec![0.0; n * n];
        for k in 0..n {
            h[k * n + k] = 2.0 * self.scale;
        }
        h
    }
}

/// `scale * exp(-rate * |x - center|^2)`
#[derive(Debug, Clone)]
pub struct Gaussian {
    pub center: Vec<f64>,
    pub scale: f64,
    pub rate: f64,
}

impl SmoothFunction for Gaussian {
    fn dim(&self) -> usize {
        self.center.len()
    }
    fn value(&self, x: &[f64]) -> f64 {
        let r2: f64 = x.iter().zip(&self.center).map(|(a, c)| (a - c) * (a - c)).sum();
        self.scale * (-self.rate * r2).exp()
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let v = self.value(x);
        x.iter().zip(&self.center).map(|(a, c)| -2.0 * self.rate * (a - c) * v).collect()
    }
    fn hessian(&self, x: &[f64]) -> Vec<f64> {
        let n = self.center.len();
        let v = self.value(x);
        let d: Vec<f64> = x.iter().zip(&self.center).map(|(a, c)| a - c).collect();
        let mut h = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let delta = if i == j { 1.0 } else { 0.0 };
                h[i * n + j] = v * (4.0 * self.rate * self.rate * d[i] * d[j] - 2.0 * self.rate * delta);
            }
        }
        h
    }
}

/// The bracket `Δw + (p-2) ∇wᵀD²w∇w / |∇w|² + (∇p·∇w) log|∇w|` with `|∇w|`
/// regularized to `sqrt(|∇w|² + eps²)`. Returns the bracket and the
/// regularized gradient magnitude. `None` when the magnitude is zero.
pub fn p_laplacian_bracket(grad_w: &[f64], hess_w: &[f64], p: f64, grad_p: &[f64], reg_eps: f64) -> Option<(f64, f64)> {
    let n = grad_w.len();
    let g2 = dot(grad_w, grad_w) + reg_eps * reg_eps;
    if g2 == 0.0 {
        return None;
    }
    let mag = g2.sqrt();
    let laplacian: f64 = (0..n).map(|k| hess_w[k * n + k]).sum();
    let mut quad = 0.0;
    for i in 0..n {
        for j in 0..n {
            quad += grad_w[i] * hess_w[i * n + j] * grad_w[j];
        }
    }
    let bracket = laplacian + (p - 2.0) * quad / g2 + dot(grad_p, grad_w) * mag.ln();
    Some((bracket, mag))
}

/// `Δ_{p(x)} w (x) = |∇w|^{p-2} [ bracket ]`.
pub fn p_laplacian_pointwise(w: &dyn SmoothFunction, field: &ExponentField, x: &[f64], reg_eps: f64) -> Result<f64> {
    if reg_eps < 0.0 {
        return Err(Error::InvalidArgument(format!("reg_eps must be >= 0, got {reg_eps}")));
    }
    let grad = w.gradient(x);
    let hess = w.hessian(x);
    let p = field.value(x);
    let grad_p = field.gradient(x);
    match p_laplacian_bracket(&grad, &hess, p, &grad_p, reg_eps) {
        Some((bracket, mag)) => Ok(mag.powf(p - 2.0) * bracket),
        None if p < 2.0 => {
            Err(Error::Undefined(format!("p(x) = {p} < 2 with vanishing gradient at {x:?} and no regularization")))
        }
        None if p == 2.0 => Ok((0..x.len()).map(|k| hess[k * x.len() + k]).sum()),
        // |∇w|^{p-2} -> 0 dominates the bounded bracket and the |∇w| log|∇w| term
        None => {
            debug_assert!(norm(&grad) == 0.0);
            Ok(0.0)
        }
    }
}
