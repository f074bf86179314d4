//! Cell quadrature on the lattice.
//!
//! Integrands see the multilinear interpolant of nodal data. Cells that are
//! cut by a region boundary are integrated by uniform subsampling.

use crate::geometry::Region;
use crate::grid::{Grid, GridFunction};

/// Subsamples per axis for cells cut by a region boundary.
pub const CUT_CELL_SUBSAMPLES: usize = 8;

/// Per-cell quadrature rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CellRule {
    /// One point at the cell center.
    #[default]
    Midpoint,
    /// Tensor two-point Gauss-Legendre; exact for cubics along each axis.
    Gauss2,
}

impl CellRule {
    /// Local points in `[0,1]^n` and their share of the cell volume.
    pub fn points(self, n: usize) -> (Vec<Vec<f64>>, f64) {
        match self {
            CellRule::Midpoint => (vec![vec![0.5; n]], 1.0),
            CellRule::Gauss2 => {
                let a = 0.5 - 0.5 / 3f64.sqrt();
                let b = 0.5 + 0.5 / 3f64.sqrt();
                let pts =
                    (0..1usize << n).map(|c| (0..n).map(|k| if c >> k & 1 == 1 { b } else { a }).collect()).collect();
                (pts, 1.0 / (1usize << n) as f64)
            }
        }
    }
}

/// What an integrand sees at one quadrature point.
pub struct QuadPoint<'a> {
    pub x: &'a [f64],
    /// Interpolated values of each input field.
    pub values: &'a [f64],
    /// Interpolated gradients, one slice of length `N` per input field.
    pub gradients: &'a [Vec<f64>],
    pub weight: f64,
}

/// Integrate over the whole domain. `fields` share one lattice; the closure
/// returns the integrand value at each point (already excluding the weight).
pub fn integrate_domain(fields: &[&GridFunction], rule: CellRule, mut integrand: impl FnMut(&QuadPoint) -> f64) -> f64 {
    let grid = fields[0].grid();
    let n = grid.ndim();
    let corners = grid.corner_offsets();
    let (pts, share) = rule.points(n);
    let weight = share * grid.cell_volume();
    let mut x = vec![0.0; n];
    let mut values = vec![0.0; fields.len()];
    let mut gradients = vec![vec![0.0; n]; fields.len()];
    let mut total = Sum::default();
    for (base, multi) in grid.cell_bases() {
        for local in &pts {
            for k in 0..n {
                x[k] = grid.origin()[k] + (multi[k] as f64 + local[k]) * grid.spacing()[k];
            }
            for (j, f) in fields.iter().enumerate() {
                values[j] = f.multilinear(&corners, base, local, &mut gradients[j]);
            }
            let q = QuadPoint { x: &x, values: &values, gradients: &gradients, weight };
            total.add(weight * integrand(&q));
        }
    }
    total.value()
}

/// Integrate a pointwise function over `region ∩ domain`.
/// Returns `(integral, measure)`.
pub fn integrate_region(grid: &Grid, region: &Region, mut integrand: impl FnMut(&[f64]) -> f64) -> (f64, f64) {
    let n = grid.ndim();
    let (lo, hi) = region.bounding_box();
    let h = grid.spacing();
    let mut ranges = Vec::with_capacity(n);
    for k in 0..n {
        let cells = grid.dims()[k] - 1;
        let a = ((lo[k] - grid.origin()[k]) / h[k]).floor().max(0.0);
        let b = ((hi[k] - grid.origin()[k]) / h[k]).ceil();
        if b <= 0.0 || a >= cells as f64 {
            return (0.0, 0.0);
        }
        ranges.push((a as usize, (b as usize).min(cells)));
    }
    let sub = CUT_CELL_SUBSAMPLES;
    let sub_pts = sub.pow(n as u32);
    let cell_vol = grid.cell_volume();
    let mut integral = Sum::default();
    let mut measure = Sum::default();
    let mut multi: Vec<usize> = ranges.iter().map(|r| r.0).collect();
    let mut corner = vec![0.0; n];
    let mut x = vec![0.0; n];
    if ranges.iter().any(|r| r.0 >= r.1) {
        return (0.0, 0.0);
    }
    loop {
        let inside = (0..1usize << n).all(|c| {
            for k in 0..n {
                let i = multi[k] + (c >> k & 1);
                corner[k] = grid.origin()[k] + i as f64 * h[k];
            }
            region.contains(&corner)
        });
        if inside {
            for k in 0..n {
                x[k] = grid.origin()[k] + (multi[k] as f64 + 0.5) * h[k];
            }
            integral.add(cell_vol * integrand(&x));
            measure.add(cell_vol);
        } else {
            let w = cell_vol / sub_pts as f64;
            for s in 0..sub_pts {
                let mut rem = s;
                for k in 0..n {
                    let j = rem % sub;
                    rem /= sub;
                    x[k] = grid.origin()[k] + (multi[k] as f64 + (j as f64 + 0.5) / sub as f64) * h[k];
                }
                if region.contains(&x) {
                    integral.add(w * integrand(&x));
                    measure.add(w);
                }
            }
        }
        let mut k = n;
        loop {
            if k == 0 {
                return (integral.value(), measure.value());
            }
            k -= 1;
            if multi[k] + 1 < ranges[k].1 {
                multi[k] += 1;
                break;
            }
            multi[k] = ranges[k].0;
        }
    }
}

/// `(∫_region |u|^q)^{1/q}`; `q = ∞` is the max over nodes in the region.
pub fn lq_norm_region(u: &GridFunction, q: f64, region: &Region) -> f64 {
    if q.is_infinite() {
        return crate::geometry::nodes_in(u.grid(), region)
            .into_iter()
            .map(|i| u.values()[i].abs())
            .fold(0.0, f64::max);
    }
    let (integral, _) =
        integrate_region(u.grid(), region, |x| u.interpolate(x).map(|v| v.abs().powf(q)).unwrap_or(0.0));
    integral.powf(1.0 / q)
}

/// Neumaier-compensated running sum.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct Sum {
    sum: f64,
    comp: f64,
}

impl Sum {
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        // the compensation of an overflowed sum is inf - inf
        if self.sum.is_finite() {
            self.sum + self.comp
        } else {
            self.sum
        }
    }
}
