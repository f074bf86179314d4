//! Uniform tensor lattices and the scalar fields sampled on them.
//!
//! Node `i` along axis `k` sits at `origin[k] + i * spacing[k]`. Values are
//! stored row-major: axis 0 varies slowest, the last axis fastest.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Magic token on the first line of a grid file.
pub const PXGRID_MAGIC: &str = "PXGRID";
pub const PXGRID_VERSION: &str = "v1";

/// A uniform tensor lattice over an axis-aligned box.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    dims: Vec<usize>,
    origin: Vec<f64>,
    spacing: Vec<f64>,
    strides: Vec<usize>,
}

impl Grid {
    pub fn new(dims: Vec<usize>, origin: Vec<f64>, spacing: Vec<f64>) -> Result<Self> {
        let n = dims.len();
        if n == 0 {
            return Err(Error::InvalidGrid("dimension must be at least 1".into()));
        }
        if origin.len() != n || spacing.len() != n {
            return Err(Error::InvalidGrid(format!(
                "dims/origin/spacing lengths differ ({}, {}, {})",
                n,
                origin.len(),
                spacing.len()
            )));
        }
        if let Some(d) = dims.iter().find(|&&d| d < 2) {
            return Err(Error::InvalidGrid(format!("extent {d} < 2")));
        }
        if spacing.iter().any(|&h| !(h > 0.0) || !h.is_finite()) {
            return Err(Error::InvalidGrid(format!("spacing must be positive, got {spacing:?}")));
        }
        if origin.iter().any(|o| !o.is_finite()) {
            return Err(Error::InvalidGrid("origin must be finite".into()));
        }
        let strides = strides_for(&dims);
        Ok(Self { dims, origin, spacing, strides })
    }

    /// Lattice with `cells[k]` cells along axis `k` spanning `[lower, upper]`.
    pub fn uniform(lower: &[f64], upper: &[f64], cells: &[usize]) -> Result<Self> {
        if lower.len() != upper.len() || lower.len() != cells.len() {
            return Err(Error::InvalidGrid("lower/upper/cells lengths differ".into()));
        }
        let mut spacing = Vec::with_capacity(cells.len());
        for k in 0..cells.len() {
            if cells[k] == 0 || !(upper[k] > lower[k]) {
                return Err(Error::InvalidGrid(format!("axis {k}: need upper > lower and at least one cell")));
            }
            spacing.push((upper[k] - lower[k]) / cells[k] as f64);
        }
        Self::new(cells.iter().map(|c| c + 1).collect(), lower.to_vec(), spacing)
    }

    pub fn ndim(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    /// Number of nodes.
    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Upper corner of the domain box.
    pub fn upper(&self) -> Vec<f64> {
        (0..self.ndim()).map(|k| self.origin[k] + (self.dims[k] - 1) as f64 * self.spacing[k]).collect()
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing.iter().product()
    }

    pub fn domain_volume(&self) -> f64 {
        (0..self.ndim()).map(|k| (self.dims[k] - 1) as f64 * self.spacing[k]).product()
    }

    pub fn num_cells(&self) -> usize {
        self.dims.iter().map(|d| d - 1).product()
    }

    pub fn index(&self, multi: &[usize]) -> usize {
        multi.iter().zip(&self.strides).map(|(i, s)| i * s).sum()
    }

    pub fn multi_index(&self, mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.ndim()];
        for k in 0..self.ndim() {
            out[k] = idx / self.strides[k];
            idx %= self.strides[k];
        }
        out
    }

    /// Coordinates of node `idx`.
    pub fn node(&self, idx: usize) -> Vec<f64> {
        let mut x = vec![0.0; self.ndim()];
        self.node_into(idx, &mut x);
        x
    }

    pub fn node_into(&self, mut idx: usize, x: &mut [f64]) {
        for k in 0..self.ndim() {
            let i = idx / self.strides[k];
            idx %= self.strides[k];
            x[k] = self.origin[k] + i as f64 * self.spacing[k];
        }
    }

    pub fn is_boundary(&self, idx: usize) -> bool {
        let mut idx = idx;
        for k in 0..self.ndim() {
            let i = idx / self.strides[k];
            idx %= self.strides[k];
            if i == 0 || i + 1 == self.dims[k] {
                return true;
            }
        }
        false
    }

    /// Whether `x` lies in the closed domain box, up to `tol` per axis.
    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        let upper = self.upper();
        x.len() == self.ndim() && (0..self.ndim()).all(|k| x[k] >= self.origin[k] - tol && x[k] <= upper[k] + tol)
    }

    /// Distance from `x` to the boundary of the domain box (0 outside).
    pub fn distance_to_boundary(&self, x: &[f64]) -> f64 {
        let upper = self.upper();
        (0..self.ndim()).map(|k| (x[k] - self.origin[k]).min(upper[k] - x[k])).fold(f64::INFINITY, f64::min).max(0.0)
    }

    pub fn same_lattice(&self, other: &Grid) -> bool {
        self.dims == other.dims && self.origin == other.origin && self.spacing == other.spacing
    }

    pub fn ensure_same(&self, other: &Grid, what: &str) -> Result<()> {
        if self.same_lattice(other) {
            Ok(())
        } else {
            Err(Error::LatticeMismatch(format!("{what}: {:?} vs {:?}", self.dims, other.dims)))
        }
    }

    /// Base multi-indices of every cell, in row-major order.
    pub fn cell_bases(&self) -> CellBases<'_> {
        CellBases { grid: self, next: Some(vec![0; self.ndim()]) }
    }

    /// Linear offsets of the `2^N` corners of a cell relative to its base node.
    /// Corner `c` steps along axis `k` iff bit `k` of `c` is set.
    pub fn corner_offsets(&self) -> Vec<usize> {
        let n = self.ndim();
        (0..1usize << n).map(|c| (0..n).filter(|k| c >> k & 1 == 1).map(|k| self.strides[k]).sum()).collect()
    }

    /// The Kuhn (Freudenthal) split of a cell into `N!` simplices.
    pub fn simplices(&self) -> Vec<KuhnSimplex> {
        permutations(self.ndim())
            .into_iter()
            .map(|perm| {
                let mut offsets = Vec::with_capacity(perm.len() + 1);
                let mut acc = 0usize;
                offsets.push(acc);
                for &axis in &perm {
                    acc += self.strides[axis];
                    offsets.push(acc);
                }
                KuhnSimplex { axes: perm, offsets }
            })
            .collect()
    }

    /// Bandwidth of the nodal coupling induced by the Kuhn simplices.
    pub fn bandwidth(&self) -> usize {
        self.strides.iter().sum()
    }

    /// Locate the cell containing `x` and the local coordinates in `[0, 1]^N`.
    /// Points outside the box (beyond `tol`) return `None`.
    pub fn locate(&self, x: &[f64], tol: f64) -> Option<(usize, Vec<f64>)> {
        if !self.contains(x, tol) {
            return None;
        }
        let mut base = 0;
        let mut local = vec![0.0; self.ndim()];
        for k in 0..self.ndim() {
            let t = (x[k] - self.origin[k]) / self.spacing[k];
            let cells = self.dims[k] - 1;
            let mut i = t.floor();
            if i < 0.0 {
                i = 0.0;
            }
            let mut i = i as usize;
            if i >= cells {
                i = cells - 1;
            }
            local[k] = (t - i as f64).clamp(0.0, 1.0);
            base += i * self.strides[k];
        }
        Some((base, local))
    }
}

fn strides_for(dims: &[usize]) -> Vec<usize> {
    let mut strides = vec![1; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        strides[k] = strides[k + 1] * dims[k + 1];
    }
    strides
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn go(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for k in 0..used.len() {
            if !used[k] {
                used[k] = true;
                prefix.push(k);
                go(prefix, used, out);
                prefix.pop();
                used[k] = false;
            }
        }
    }
    let mut out = Vec::new();
    go(&mut Vec::with_capacity(n), &mut vec![false; n], &mut out);
    out
}

/// One simplex of the Kuhn split: the vertex path `v_0 -> v_N` stepping
/// along `axes[0], axes[1], ...`. `offsets[j]` is the linear offset of `v_j`
/// from the cell base.
#[derive(Debug, Clone)]
pub struct KuhnSimplex {
    pub axes: Vec<usize>,
    pub offsets: Vec<usize>,
}

impl KuhnSimplex {
    /// Gradient of the linear interpolant on this simplex.
    pub fn gradient(&self, base: usize, values: &[f64], spacing: &[f64], out: &mut [f64]) {
        for (j, &axis) in self.axes.iter().enumerate() {
            out[axis] = (values[base + self.offsets[j + 1]] - values[base + self.offsets[j]]) / spacing[axis];
        }
    }

    /// Local coordinates of the centroid in the unit cell.
    pub fn centroid_local(&self) -> Vec<f64> {
        let n = self.axes.len();
        let mut c = vec![0.0; n];
        for (j, &axis) in self.axes.iter().enumerate() {
            c[axis] = (n - j) as f64 / (n + 1) as f64;
        }
        c
    }
}

/// Iterator over cell base multi-indices.
pub struct CellBases<'a> {
    grid: &'a Grid,
    next: Option<Vec<usize>>,
}

impl Iterator for CellBases<'_> {
    type Item = (usize, Vec<usize>);

    fn next(&mut self) -> Option<Self::Item> {
        let current = self.next.take()?;
        let mut succ = current.clone();
        let mut k = succ.len();
        loop {
            if k == 0 {
                self.next = None;
                break;
            }
            k -= 1;
            succ[k] += 1;
            if succ[k] + 1 < self.grid.dims[k] {
                self.next = Some(succ);
                break;
            }
            succ[k] = 0;
        }
        Some((self.grid.index(&current), current))
    }
}

/// A scalar field sampled at every node of a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!("expected {} values, got {}", grid.len(), values.len())));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidGrid(format!("non-finite value at node {i}")));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        let n = grid.len();
        Self { grid, values: vec![0.0; n] }
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        let n = grid.len();
        Self { grid, values: vec![c; n] }
    }

    /// Sample `f` at every node.
    pub fn from_fn(grid: Grid, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let mut x = vec![0.0; grid.ndim()];
        let values = (0..grid.len())
            .map(|i| {
                grid.node_into(i, &mut x);
                f(&x)
            })
            .collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.grid.clone(), self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn scaled(&self, t: f64) -> Result<Self> {
        self.map(|v| t * v)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Value and gradient of the multilinear interpolant at local coordinates
    /// of the cell with base node `base`.
    pub fn multilinear(&self, corners: &[usize], base: usize, local: &[f64], grad: &mut [f64]) -> f64 {
        let n = self.grid.ndim();
        let h = &self.grid.spacing;
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut value = 0.0;
        for (c, off) in corners.iter().enumerate() {
            let u = self.values[base + off];
            let mut w = 1.0;
            for k in 0..n {
                w *= if c >> k & 1 == 1 { local[k] } else { 1.0 - local[k] };
            }
            value += w * u;
            for k in 0..n {
                let mut wk = if c >> k & 1 == 1 { 1.0 } else { -1.0 } / h[k];
                for j in 0..n {
                    if j != k {
                        wk *= if c >> j & 1 == 1 { local[j] } else { 1.0 - local[j] };
                    }
                }
                grad[k] += wk * u;
            }
        }
        value
    }

    /// Multilinear interpolation at an arbitrary point of the domain box.
    pub fn interpolate(&self, x: &[f64]) -> Result<f64> {
        let (base, local) = self
            .grid
            .locate(x, 1e-12)
            .ok_or_else(|| Error::OutsideDomain(format!("point {x:?} lies outside the grid")))?;
        let corners = self.grid.corner_offsets();
        let mut grad = vec![0.0; self.grid.ndim()];
        Ok(self.multilinear(&corners, base, &local, &mut grad))
    }

    /// Interpolated value and gradient at `x`.
    pub fn interpolate_with_gradient(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        let (base, local) = self
            .grid
            .locate(x, 1e-12)
            .ok_or_else(|| Error::OutsideDomain(format!("point {x:?} lies outside the grid")))?;
        let corners = self.grid.corner_offsets();
        let mut grad = vec![0.0; self.grid.ndim()];
        let v = self.multilinear(&corners, base, &local, &mut grad);
        Ok((v, grad))
    }

    /// Serialize in the `PXGRID v1` text format.
    pub fn to_pxgrid(&self) -> String {
        let g = &self.grid;
        let mut s = format!("{PXGRID_MAGIC} {PXGRID_VERSION} {}", g.ndim());
        for d in &g.dims {
            write!(s, " {d}").unwrap();
        }
        for v in g.origin.iter().chain(&g.spacing) {
            write!(s, " {}", fmt17(*v)).unwrap();
        }
        s.push('\n');
        let last = *g.dims.last().unwrap();
        for (i, v) in self.values.iter().enumerate() {
            s.push_str(&fmt17(*v));
            s.push(if (i + 1) % last == 0 { '\n' } else { ' ' });
        }
        s
    }

    pub fn write_pxgrid<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(self.to_pxgrid().as_bytes())?;
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_pxgrid())?;
        Ok(())
    }

    pub fn read_pxgrid<R: Read>(r: R) -> Result<Self> {
        let mut reader = BufReader::new(r);
        let mut header = String::new();
        reader.read_line(&mut header)?;
        let mut tok = header.split_whitespace();
        if tok.next() != Some(PXGRID_MAGIC) || tok.next() != Some(PXGRID_VERSION) {
            return Err(Error::Parse(format!("bad header line {:?}", header.trim_end())));
        }
        let n: usize = parse_tok(tok.next(), "dimension")?;
        if n == 0 {
            return Err(Error::Parse("dimension must be positive".into()));
        }
        let dims = (0..n).map(|_| parse_tok(tok.next(), "extent")).collect::<Result<Vec<usize>>>()?;
        let origin = (0..n).map(|_| parse_tok(tok.next(), "origin")).collect::<Result<Vec<f64>>>()?;
        let spacing = (0..n).map(|_| parse_tok(tok.next(), "spacing")).collect::<Result<Vec<f64>>>()?;
        if tok.next().is_some() {
            return Err(Error::Parse("trailing tokens in header".into()));
        }
        let grid = Grid::new(dims, origin, spacing)?;
        let mut body = String::new();
        reader.read_to_string(&mut body)?;
        let values = body
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|e| Error::Parse(format!("value {t:?}: {e}"))))
            .collect::<Result<Vec<f64>>>()?;
        Self::new(grid, values)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        Self::read_pxgrid(file)
    }
}

fn parse_tok<T: std::str::FromStr>(tok: Option<&str>, what: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    let t = tok.ok_or_else(|| Error::Parse(format!("missing {what} in header")))?;
    t.parse().map_err(|e| Error::Parse(format!("{what} {t:?}: {e}")))
}

/// Decimal with 17 significant digits.
fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strides_are_row_major() {
        let g = Grid::new(vec![3, 4], vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        assert_eq!(g.strides(), &[4, 1]);
        assert_eq!(g.index(&[2, 3]), 11);
        assert_eq!(g.multi_index(11), vec![2, 3]);
        assert_eq!(g.node(6), vec![1.0, 2.0]);
    }

    #[test]
    fn rejects_degenerate_grids() {
        assert!(Grid::new(vec![1], vec![0.0], vec![1.0]).is_err());
        assert!(Grid::new(vec![3], vec![0.0], vec![0.0]).is_err());
        assert!(Grid::new(vec![3, 3], vec![0.0], vec![1.0]).is_err());
        let g = Grid::uniform(&[0.0], &[1.0], &[4]).unwrap();
        assert!(GridFunction::new(g.clone(), vec![0.0; 4]).is_err());
        assert!(GridFunction::new(g, vec![0.0, 1.0, f64::NAN, 0.0, 0.0]).is_err());
    }

    #[test]
    fn cell_iteration_visits_every_cell_once() {
        let g = Grid::uniform(&[0.0, 0.0, 0.0], &[1.0, 1.0, 1.0], &[2, 3, 4]).unwrap();
        let bases: Vec<_> = g.cell_bases().collect();
        assert_eq!(bases.len(), g.num_cells());
        assert_eq!(bases.last().unwrap().1, vec![1, 2, 3]);
    }

    #[test]
    fn kuhn_split_has_factorial_simplices() {
        let g = Grid::uniform(&[0.0, 0.0], &[1.0, 1.0], &[2, 2]).unwrap();
        let s = g.simplices();
        assert_eq!(s.len(), 2);
        for simplex in &s {
            assert_eq!(*simplex.offsets.last().unwrap(), 3 + 1);
        }
        let g3 = Grid::uniform(&[0.0; 3], &[1.0; 3], &[2, 2, 2]).unwrap();
        assert_eq!(g3.simplices().len(), 6);
    }

    #[test]
    fn simplex_gradient_is_exact_for_affine() {
        let g = Grid::uniform(&[0.0, 0.0], &[1.0, 1.0], &[4, 4]).unwrap();
        let u = GridFunction::from_fn(g.clone(), |x| 3.0 * x[0] - 2.0 * x[1] + 1.0).unwrap();
        let mut grad = [0.0; 2];
        for s in g.simplices() {
            s.gradient(g.index(&[1, 2]), u.values(), g.spacing(), &mut grad);
            assert!((grad[0] - 3.0).abs() < 1e-12 && (grad[1] + 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn interpolation_reproduces_multilinear_functions() {
        let g = Grid::uniform(&[-1.0, 0.0], &[1.0, 2.0], &[8, 5]).unwrap();
        let f = |x: &[f64]| 1.0 + 2.0 * x[0] - x[1] + 0.5 * x[0] * x[1];
        let u = GridFunction::from_fn(g, f).unwrap();
        for x in [[0.13, 1.7], [-1.0, 0.0], [1.0, 2.0], [0.5, 0.4]] {
            let (v, grad) = u.interpolate_with_gradient(&x).unwrap();
            assert!((v - f(&x)).abs() < 1e-12);
            assert!((grad[0] - (2.0 + 0.5 * x[1])).abs() < 1e-12);
        }
        assert!(u.interpolate(&[1.5, 0.0]).is_err());
    }

    #[test]
    fn pxgrid_header_and_bit_exact_round_trip() {
        let g = Grid::new(vec![3, 2], vec![-0.1, 1.0 / 3.0], vec![0.1, 0.7]).unwrap();
        let u = GridFunction::new(g, vec![1.0 / 3.0, -2.5e-300, 0.1 + 0.2, 7.0, f64::MAX, -0.0]).unwrap();
        let text = u.to_pxgrid();
        assert!(text.starts_with("PXGRID v1 2 3 2 "));
        let back = GridFunction::read_pxgrid(text.as_bytes()).unwrap();
        assert_eq!(back.grid(), u.grid());
        for (a, b) in back.values().iter().zip(u.values()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn pxgrid_rejects_malformed_input() {
        assert!(GridFunction::read_pxgrid("PXGRID v2 1 2 0 1\n0 0".as_bytes()).is_err());
        assert!(GridFunction::read_pxgrid("PXGRID v1 1 3 0 1\n0 0".as_bytes()).is_err());
        assert!(GridFunction::read_pxgrid("PXGRID v1 1 2 0\n0 0".as_bytes()).is_err());
        assert!(GridFunction::read_pxgrid("PXGRID v1 1 2 0 1\n0 x".as_bytes()).is_err());
    }
}
