//! Modulars, Luxemburg and Sobolev norms, and ball averages `(⨍_B |u|^t)^{1/t}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponent::ExponentField;
use crate::geometry::{nodes_in, Ball, Region};
use crate::grid::GridFunction;
use crate::quadrature::{integrate_domain, integrate_region, CellRule, Sum};

/// Bisection cap once a bracket is known.
const MAX_BISECTIONS: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormConfig {
    /// Relative width of the final bracket.
    pub bisection_tol: f64,
    /// Maximum number of doublings/halvings while bracketing. The default
    /// spans the full `f64` exponent range.
    pub max_iter: usize,
    #[serde(skip)]
    pub rule: CellRule,
}

impl Default for NormConfig {
    fn default() -> Self {
        Self { bisection_tol: 1e-12, max_iter: 2100, rule: CellRule::Midpoint }
    }
}

impl NormConfig {
    fn validate(&self) -> Result<()> {
        if !(self.bisection_tol > 0.0) || self.max_iter == 0 {
            return Err(Error::InvalidArgument(format!("need bisection_tol > 0 and max_iter >= 1, got {self:?}")));
        }
        Ok(())
    }
}

/// Quadrature samples `(w_i, |v_i|, p_i)` of a modular `Σ w_i (|v_i|/λ)^{p_i}`.
#[derive(Debug, Clone, Default)]
pub struct ModularSamples {
    pub weights: Vec<f64>,
    pub magnitudes: Vec<f64>,
    pub exponents: Vec<f64>,
}

impl ModularSamples {
    /// Samples of `|u|`.
    pub fn of_values(u: &GridFunction, field: &ExponentField, rule: CellRule) -> Self {
        Self::collect(u, field, rule, |v, _| v.abs())
    }

    /// Samples of `|∇u|`.
    pub fn of_gradient(u: &GridFunction, field: &ExponentField, rule: CellRule) -> Self {
        Self::collect(u, field, rule, |_, g| crate::geometry::norm(g))
    }

    fn collect(u: &GridFunction, field: &ExponentField, rule: CellRule, pick: impl Fn(f64, &[f64]) -> f64) -> Self {
        let mut s = ModularSamples::default();
        integrate_domain(&[u], rule, |q| {
            s.weights.push(q.weight);
            s.magnitudes.push(pick(q.values[0], &q.gradients[0]));
            s.exponents.push(field.value(q.x));
            0.0
        });
        s
    }

    pub fn is_zero(&self) -> bool {
        self.magnitudes.iter().zip(&self.weights).all(|(m, w)| *m == 0.0 || *w == 0.0)
    }

    pub fn modular(&self, lambda: f64) -> f64 {
        let mut sum = Sum::default();
        for i in 0..self.weights.len() {
            if self.magnitudes[i] > 0.0 {
                sum.add(self.weights[i] * (self.magnitudes[i] / lambda).powf(self.exponents[i]));
            }
        }
        sum.value()
    }

    /// Smallest `λ` with `modular(λ) <= 1`, to relative tolerance.
    pub fn luxemburg(&self, cfg: &NormConfig) -> Result<f64> {
        cfg.validate()?;
        if self.is_zero() {
            return Ok(0.0);
        }
        let (mut lo, mut hi);
        if self.modular(1.0) > 1.0 {
            lo = 1.0;
            hi = 2.0;
            let mut it = 0;
            while self.modular(hi) > 1.0 {
                it += 1;
                if it >= cfg.max_iter || !hi.is_finite() {
                    return Err(Error::BracketNotFound { lo, hi, iterations: it });
                }
                lo = hi;
                hi *= 2.0;
            }
        } else {
            hi = 1.0;
            lo = 0.5;
            let mut it = 0;
            while self.modular(lo) <= 1.0 {
                it += 1;
                if it >= cfg.max_iter || lo == 0.0 {
                    return Err(Error::BracketNotFound { lo, hi, iterations: it });
                }
                hi = lo;
                lo *= 0.5;
            }
        }
        for _ in 0..MAX_BISECTIONS {
            if hi - lo <= cfg.bisection_tol * hi {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.modular(mid) > 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(hi)
    }
}

/// `∫_Ω (|u|/λ)^{p(x)} dx` by cell quadrature.
pub fn modular(u: &GridFunction, field: &ExponentField, lambda: f64) -> Result<f64> {
    modular_with(u, field, lambda, CellRule::Midpoint)
}

pub fn modular_with(u: &GridFunction, field: &ExponentField, lambda: f64, rule: CellRule) -> Result<f64> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidArgument(format!("lambda must be positive, got {lambda}")));
    }
    Ok(ModularSamples::of_values(u, field, rule).modular(lambda))
}

/// `‖u‖_{p(·)} = inf { λ > 0 : ∫ (|u|/λ)^{p(x)} <= 1 }`.
pub fn luxemburg_norm(u: &GridFunction, field: &ExponentField, cfg: &NormConfig) -> Result<f64> {
    ModularSamples::of_values(u, field, cfg.rule).luxemburg(cfg)
}

/// `‖|∇u|‖_{p(·)}` with the gradient of the multilinear interpolant.
pub fn gradient_norm(u: &GridFunction, field: &ExponentField, cfg: &NormConfig) -> Result<f64> {
    ModularSamples::of_gradient(u, field, cfg.rule).luxemburg(cfg)
}

/// `‖u‖_{1,p(·)} = ‖u‖_{p(·)} + ‖∇u‖_{p(·)}`.
pub fn sobolev_norm(u: &GridFunction, field: &ExponentField, cfg: &NormConfig) -> Result<f64> {
    Ok(luxemburg_norm(u, field, cfg)? + gradient_norm(u, field, cfg)?)
}

/// Classical `(∫ |u|^p)^{1/p}` with the same quadrature, for constant `p`.
pub fn classical_lp_norm(u: &GridFunction, p: f64, rule: CellRule) -> f64 {
    integrate_domain(&[u], rule, |q| q.values[0].abs().powf(p)).powf(1.0 / p)
}

/// `φ(u, t, B) = (⨍_B |u|^t)^{1/t}`.
pub fn lt_average(u: &GridFunction, t: f64, ball: &Ball) -> Result<f64> {
    region_average(u, t, &Region::Ball(ball.clone()))
}

pub fn region_average(u: &GridFunction, t: f64, region: &Region) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!("t must be positive, got {t}")));
    }
    let nodes = nodes_in(u.grid(), region);
    if nodes.is_empty() {
        return Err(Error::EmptySampleSet("averaging region contains no lattice node".into()));
    }
    let (integral, measure) = integrate_region(u.grid(), region, |x| u.interpolate(x).map_or(0.0, |v| v.abs().powf(t)));
    let mean = if measure > 0.0 {
        integral / measure
    } else {
        nodes.iter().map(|&i| u.values()[i].abs().powf(t)).sum::<f64>() / nodes.len() as f64
    };
    Ok(mean.powf(1.0 / t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exponent::Profile;
    use crate::grid::Grid;

    fn unit_line(cells: usize) -> Grid {
        Grid::uniform(&[0.0], &[1.0], &[cells]).unwrap()
    }

    fn two_piece() -> (GridFunction, ExponentField) {
        let g = Grid::uniform(&[0.0], &[2.0], &[64]).unwrap();
        let f = ExponentField::fit(Profile::Piecewise { axis: 0, threshold: 1.0, below: 2.0, above: 4.0 }, &g).unwrap();
        (GridFunction::constant(g, 1.0), f)
    }

    #[test]
    fn modular_trivial_values() {
        let g = unit_line(16);
        let f = ExponentField::fit(Profile::Affine { offset: 2.0, gradient: vec![1.0] }, &g).unwrap();
        let one = GridFunction::constant(g.clone(), 1.0);
        assert!((modular(&one, &f, 1.0).unwrap() - 1.0).abs() < 1e-14);
        let zero = GridFunction::zeros(g);
        assert_eq!(modular(&zero, &f, 0.1).unwrap(), 0.0);
        assert!(modular(&one, &f, 0.0).is_err());
        assert!(modular(&one, &f, -1.0).is_err());
    }

    #[test]
    fn modular_of_two_piece_exponent() {
        let (u, f) = two_piece();
        assert!((modular(&u, &f, 2.0).unwrap() - 0.3125).abs() < 1e-14);
    }

    #[test]
    fn luxemburg_of_two_piece_exponent_solves_the_quartic() {
        // (1/λ)^2 + (1/λ)^4 = 1  =>  1/λ^2 = (√5 - 1)/2
        let oracle = 1.0 / ((5f64.sqrt() - 1.0) / 2.0).sqrt();
        let (u, f) = two_piece();
        let lam = luxemburg_norm(&u, &f, &NormConfig::default()).unwrap();
        assert!((lam - oracle).abs() < 1e-9, "{lam} vs {oracle}");
        assert!((lam - 1.2720).abs() < 1e-4);
    }

    #[test]
    fn luxemburg_trivial_cases() {
        let g = unit_line(32);
        let f = ExponentField::constant(2.0).unwrap();
        let cfg = NormConfig::default();
        assert_eq!(luxemburg_norm(&GridFunction::zeros(g.clone()), &f, &cfg).unwrap(), 0.0);
        let three = GridFunction::constant(g, 3.0);
        assert!((luxemburg_norm(&three, &f, &cfg).unwrap() - 3.0).abs() < 1e-11);
    }

    #[test]
    fn tiny_and_huge_functions_bracket() {
        let g = unit_line(8);
        let f = ExponentField::constant(3.0).unwrap();
        let cfg = NormConfig::default();
        for c in [1e-200, 1e200] {
            let u = GridFunction::constant(g.clone(), c);
            let n = luxemburg_norm(&u, &f, &cfg).unwrap();
            assert!((n / c - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn bracket_failure_reports_last_bracket() {
        let g = unit_line(8);
        let f = ExponentField::constant(2.0).unwrap();
        let u = GridFunction::constant(g, 1e6);
        let cfg = NormConfig { max_iter: 3, ..Default::default() };
        match luxemburg_norm(&u, &f, &cfg).unwrap_err() {
            Error::BracketNotFound { lo, hi, iterations } => {
                assert_eq!(iterations, 3);
                assert!(lo < hi && hi <= 16.0);
            }
            e => panic!("unexpected {e}"),
        }
        assert!(luxemburg_norm(
            &GridFunction::constant(unit_line(2), 1.0),
            &f,
            &NormConfig { bisection_tol: 0.0, ..Default::default() }
        )
        .is_err());
    }

    #[test]
    fn sobolev_norm_of_identity() {
        let g = unit_line(1024);
        let u = GridFunction::from_fn(g, |x| x[0]).unwrap();
        let f = ExponentField::constant(2.0).unwrap();
        let n = sobolev_norm(&u, &f, &NormConfig::default()).unwrap();
        let exact = 1.0 / 3f64.sqrt() + 1.0;
        assert!((n - exact).abs() < 1e-6, "{n} vs {exact}");
    }

    #[test]
    fn sobolev_norm_of_constants() {
        let g = unit_line(16);
        let f = ExponentField::constant(3.5).unwrap();
        let cfg = NormConfig::default();
        assert_eq!(sobolev_norm(&GridFunction::zeros(g.clone()), &f, &cfg).unwrap(), 0.0);
        let c = GridFunction::constant(g, 2.5);
        assert!((sobolev_norm(&c, &f, &cfg).unwrap() - 2.5).abs() < 1e-11);
    }

    #[test]
    fn lt_average_examples() {
        let g = unit_line(1024);
        let ball = Ball::new(vec![0.5], 0.5).unwrap();
        let c = GridFunction::constant(g.clone(), 1.7);
        for t in [0.3, 1.0, 4.0] {
            assert!((lt_average(&c, t, &ball).unwrap() - 1.7).abs() < 1e-12);
        }
        let x = GridFunction::from_fn(g, |x| x[0]).unwrap();
        assert!((lt_average(&x, 1.0, &ball).unwrap() - 0.5).abs() < 1e-12);
        assert!((lt_average(&x, 2.0, &ball).unwrap() - (1.0f64 / 3.0).sqrt()).abs() < 1e-6);
        assert!(lt_average(&x, 0.0, &ball).is_err());
    }

    #[test]
    fn lt_average_of_empty_ball_is_an_error() {
        let g = unit_line(4);
        let u = GridFunction::constant(g, 1.0);
        let ball = Ball::new(vec![0.1], 0.01).unwrap();
        assert!(matches!(lt_average(&u, 1.0, &ball), Err(Error::EmptySampleSet(_))));
    }
}
