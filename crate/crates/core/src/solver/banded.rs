//! Symmetric banded storage with an in-place Cholesky factorization.

#[derive(Debug, Clone)]
pub struct BandedSpd {
    n: usize,
    bw: usize,
    /// `data[i * (bw + 1) + k] = A[i][i - k]`
    data: Vec<f64>,
}

impl BandedSpd {
    pub fn zeros(n: usize, bw: usize) -> Self {
        Self { n, bw, data: vec![0.0; n * (bw + 1)] }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn clear(&mut self) {
        self.data.iter_mut().for_each(|v| *v = 0.0);
    }

    /// Add `v` to `A[i][j]` (and implicitly `A[j][i]`).
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        debug_assert!(i - j <= self.bw);
        self.data[i * (self.bw + 1) + (i - j)] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        if i - j > self.bw {
            0.0
        } else {
            self.data[i * (self.bw + 1) + (i - j)]
        }
    }

    pub fn set_diagonal(&mut self, i: usize, v: f64) {
        self.data[i * (self.bw + 1)] = v;
    }

    pub fn add_to_diagonal(&mut self, shift: f64) {
        for i in 0..self.n {
            self.data[i * (self.bw + 1)] += shift;
        }
    }

    pub fn max_diagonal(&self) -> f64 {
        (0..self.n).map(|i| self.data[i * (self.bw + 1)].abs()).fold(0.0, f64::max)
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let lo = i.saturating_sub(self.bw);
            for j in lo..=i {
                let a = self.data[i * (self.bw + 1) + (i - j)];
                y[i] += a * x[j];
                if j != i {
                    y[j] += a * x[i];
                }
            }
        }
        y
    }

    /// Factor `A = L Lᵀ` in place. Returns `None` when a pivot is not positive.
    pub fn cholesky(mut self) -> Option<BandedCholesky> {
        let w = self.bw + 1;
        for j in 0..self.n {
            let lo = j.saturating_sub(self.bw);
            let mut d = self.data[j * w];
            for k in lo..j {
                let l = self.data[j * w + (j - k)];
                d -= l * l;
            }
            if !(d > 0.0) || !d.is_finite() {
                return None;
            }
            let d = d.sqrt();
            self.data[j * w] = d;
            let hi = (j + self.bw + 1).min(self.n);
            for i in j + 1..hi {
                let lo_i = i.saturating_sub(self.bw);
                let mut s = self.data[i * w + (i - j)];
                for k in lo_i.max(lo)..j {
                    s -= self.data[i * w + (i - k)] * self.data[j * w + (j - k)];
                }
                self.data[i * w + (i - j)] = s / d;
            }
        }
        Some(BandedCholesky { inner: self })
    }
}

#[derive(Debug, Clone)]
pub struct BandedCholesky {
    inner: BandedSpd,
}

impl BandedCholesky {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let BandedSpd { n, bw, data } = &self.inner;
        let (n, bw, w) = (*n, *bw, *bw + 1);
        let mut y = b.to_vec();
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            let mut s = y[i];
            for k in lo..i {
                s -= data[i * w + (i - k)] * y[k];
            }
            y[i] = s / data[i * w];
        }
        for i in (0..n).rev() {
            let hi = (i + bw + 1).min(n);
            let mut s = y[i];
            for k in i + 1..hi {
                s -= data[k * w + (k - i)] * y[k];
            }
            y[i] = s / data[i * w];
        }
        y
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn tridiagonal_solve() {
        let n = 6;
        let mut a = BandedSpd::zeros(n, 1);
        for i in 0..n {
            a.add(i, i, 2.0);
            if i > 0 {
                a.add(i, i - 1, -1.0);
            }
        }
        let x: Vec<f64> = (0..n).map(|i| i as f64 - 2.5).collect();
        let b = a.mul_vec(&x);
        let sol = a.cholesky().unwrap().solve(&b);
        for (s, e) in sol.iter().zip(&x) {
            assert!((s - e).abs() < 1e-12);
        }
    }

    #[test]
    fn indefinite_matrix_is_rejected() {
        let mut a = BandedSpd::zeros(2, 1);
        a.add(0, 0, 1.0);
        a.add(1, 1, 1.0);
        a.add(1, 0, 2.0);
        assert!(a.cholesky().is_none());
    }

    proptest! {
        #[test]
        fn random_spd_band_systems(seed in 0u64..1000, n in 2usize..30, bw in 1usize..5) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut a = BandedSpd::zeros(n, bw);
            for i in 0..n {
                for j in i.saturating_sub(bw)..i {
                    a.add(i, j, rng.gen_range(-1.0..1.0));
                }
            }
            // diagonal dominance makes it SPD
            for i in 0..n {
                a.add(i, i, 2.0 * bw as f64 + 1.0);
            }
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let b = a.mul_vec(&x);
            let sol = a.clone().cholesky().unwrap().solve(&b);
            for (s, e) in sol.iter().zip(&x) {
                prop_assert!((s - e).abs() < 1e-10);
            }
        }
    }
}
