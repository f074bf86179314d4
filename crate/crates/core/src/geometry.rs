use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Relative slack used when deciding whether a lattice node lies on a ball.
pub(crate) const MEMBERSHIP_TOL: f64 = 1e-12;

pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// A closed Euclidean ball `B_r(center)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: Vec<f64>, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidArgument(format!("ball radius must be positive, got {radius}")));
        }
        if center.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument("ball center must be finite".into()));
        }
        Ok(Self { center, radius })
    }

    /// The concentric ball with radius scaled by `factor`.
    pub fn dilate(&self, factor: f64) -> Ball {
        Ball { center: self.center.clone(), radius: self.radius * factor }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        distance(&self.center, x) <= self.radius * (1.0 + MEMBERSHIP_TOL)
    }

    /// Whether the closed ball lies inside the closed domain box.
    pub fn inside(&self, grid: &Grid) -> bool {
        let upper = grid.upper();
        let slack = self.radius * MEMBERSHIP_TOL;
        self.center.len() == grid.ndim()
            && (0..grid.ndim()).all(|k| {
                self.center[k] - self.radius >= grid.origin()[k] - slack
                    && self.center[k] + self.radius <= upper[k] + slack
            })
    }

    pub fn ensure_inside(&self, grid: &Grid, what: &str) -> Result<()> {
        if self.inside(grid) {
            Ok(())
        } else {
            Err(Error::OutsideDomain(format!(
                "{what}: ball of radius {} at {:?} is not contained in the domain",
                self.radius, self.center
            )))
        }
    }
}

/// An axis-aligned box `[lower, upper]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxRegion {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

/// Integration and sampling regions used by the harness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Region {
    Ball(Ball),
    Box(BoxRegion),
}

impl Region {
    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            Region::Ball(b) => b.contains(x),
            Region::Box(b) => (0..x.len()).all(|k| {
                let slack = MEMBERSHIP_TOL * (b.upper[k] - b.lower[k]).abs().max(1.0);
                x[k] >= b.lower[k] - slack && x[k] <= b.upper[k] + slack
            }),
        }
    }

    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            Region::Ball(b) => {
                (b.center.iter().map(|c| c - b.radius).collect(), b.center.iter().map(|c| c + b.radius).collect())
            }
            Region::Box(b) => (b.lower.clone(), b.upper.clone()),
        }
    }

    /// Whether the closure of `self` lies in the interior of `outer`.
    pub fn compactly_inside(&self, outer: &Region) -> bool {
        match (self, outer) {
            (Region::Ball(a), Region::Ball(b)) => distance(&a.center, &b.center) + a.radius < b.radius,
            (Region::Box(a), Region::Box(b)) => {
                (0..a.lower.len()).all(|k| a.lower[k] > b.lower[k] && a.upper[k] < b.upper[k])
            }
            (Region::Ball(a), Region::Box(b)) => {
                (0..a.center.len()).all(|k| a.center[k] - a.radius > b.lower[k] && a.center[k] + a.radius < b.upper[k])
            }
            (Region::Box(a), Region::Ball(b)) => {
                // farthest corner of a convex box from the center
                let far: Vec<f64> = (0..a.lower.len())
                    .map(|k| {
                        if (a.lower[k] - b.center[k]).abs() > (a.upper[k] - b.center[k]).abs() {
                            a.lower[k]
                        } else {
                            a.upper[k]
                        }
                    })
                    .collect();
                distance(&far, &b.center) < b.radius
            }
        }
    }
}

impl From<Ball> for Region {
    fn from(b: Ball) -> Self {
        Region::Ball(b)
    }
}

/// Indices of lattice nodes in the closed region.
pub fn nodes_in(grid: &Grid, region: &Region) -> Vec<usize> {
    let (lo, hi) = region.bounding_box();
    let n = grid.ndim();
    let mut ranges = Vec::with_capacity(n);
    for k in 0..n {
        let h = grid.spacing()[k];
        let a = ((lo[k] - grid.origin()[k]) / h - 1e-9).ceil().max(0.0) as usize;
        let b = ((hi[k] - grid.origin()[k]) / h + 1e-9).floor();
        if b < 0.0 {
            return Vec::new();
        }
        let b = (b as usize).min(grid.dims()[k] - 1);
        if a > b {
            return Vec::new();
        }
        ranges.push((a, b));
    }
    let mut out = Vec::new();
    let mut multi: Vec<usize> = ranges.iter().map(|r| r.0).collect();
    let mut x = vec![0.0; n];
    loop {
        let idx = grid.index(&multi);
        grid.node_into(idx, &mut x);
        if region.contains(&x) {
            out.push(idx);
        }
        let mut k = n;
        loop {
            if k == 0 {
                return out;
            }
            k -= 1;
            if multi[k] < ranges[k].1 {
                multi[k] += 1;
                break;
            }
            multi[k] = ranges[k].0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ball_validation() {
        assert!(Ball::new(vec![0.0], 0.0).is_err());
        assert!(Ball::new(vec![0.0], -1.0).is_err());
        assert!(Ball::new(vec![f64::NAN], 1.0).is_err());
    }

    #[test]
    fn closed_ball_includes_rim_nodes() {
        let g = Grid::uniform(&[0.0], &[1.0], &[4]).unwrap();
        let b = Ball::new(vec![0.5], 0.25).unwrap();
        let nodes = nodes_in(&g, &b.into());
        assert_eq!(nodes, vec![1, 2, 3]);
    }

    #[test]
    fn nodes_in_disk() {
        let g = Grid::uniform(&[-1.0, -1.0], &[1.0, 1.0], &[4, 4]).unwrap();
        let b = Ball::new(vec![0.0, 0.0], 0.5).unwrap();
        // center plus the four axis neighbours
        assert_eq!(nodes_in(&g, &b.into()).len(), 5);
    }

    #[test]
    fn containment_in_domain() {
        let g = Grid::uniform(&[0.0, 0.0], &[1.0, 1.0], &[8, 8]).unwrap();
        assert!(Ball::new(vec![0.5, 0.5], 0.5).unwrap().inside(&g));
        assert!(!Ball::new(vec![0.5, 0.5], 0.51).unwrap().inside(&g));
    }

    #[test]
    fn compact_nesting() {
        let outer = Region::Ball(Ball::new(vec![0.0, 0.0], 1.0).unwrap());
        let inner = Region::Ball(Ball::new(vec![0.1, 0.0], 0.5).unwrap());
        assert!(inner.compactly_inside(&outer));
        assert!(!outer.compactly_inside(&inner));
        let bx = Region::Box(BoxRegion { lower: vec![-0.5, -0.5], upper: vec![0.5, 0.5] });
        assert!(bx.compactly_inside(&outer));
        let touching = Region::Box(BoxRegion { lower: vec![-1.0, -0.5], upper: vec![0.5, 0.5] });
        assert!(!touching.compactly_inside(&outer));
    }
}
