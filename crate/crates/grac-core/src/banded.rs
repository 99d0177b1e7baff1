//! Symmetric banded storage with an `LDLᵀ` factorisation, and the interleaved
//! ordering that turns a cyclic band of half-width `w` into an ordinary band
//! of half-width `2w + 1`.

use crate::error::{Error, Result};

/// Lower band of a symmetric matrix: `data[i·(w+1) + d] = A[i][i−d]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymBand {
    n: usize,
    w: usize,
    data: Vec<f64>,
}

impl SymBand {
    pub fn zeros(n: usize, w: usize) -> Self {
        let w = w.min(n.saturating_sub(1));
        Self {
            n,
            w,
            data: vec![0.0; n * (w + 1)],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.w
    }

    /// `A[i][j]` for `i ≥ j`; callers must stay inside the band.
    fn slot(&self, i: usize, j: usize) -> usize {
        debug_assert!(
            i >= j && i - j <= self.w,
            "({i},{j}) outside band {}",
            self.w
        );
        i * (self.w + 1) + (i - j)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        if i - j > self.w {
            0.0
        } else {
            self.data[self.slot(i, j)]
        }
    }

    /// Adds `v` to the symmetric pair `(i, j)`, `(j, i)`.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        let s = self.slot(i, j);
        self.data[s] += v;
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        let s = self.slot(i, j);
        self.data[s] = v;
    }

    /// Replaces row and column `k` by the identity.
    pub fn pin(&mut self, k: usize) {
        let lo = k.saturating_sub(self.w);
        let hi = (k + self.w).min(self.n - 1);
        for j in lo..=hi {
            if j != k {
                self.set(k, j, 0.0);
            }
        }
        self.set(k, k, 1.0);
    }

    pub fn shift_diagonal(&mut self, mu: f64) {
        for i in 0..self.n {
            let s = self.slot(i, i);
            self.data[s] += mu;
        }
    }

    pub fn max_abs_diagonal(&self) -> f64 {
        (0..self.n)
            .map(|i| self.get(i, i).abs())
            .fold(0.0, f64::max)
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            for j in i.saturating_sub(self.w)..=i {
                let a = self.data[self.slot(i, j)];
                y[i] += a * x[j];
                if i != j {
                    y[j] += a * x[i];
                }
            }
        }
        y
    }

    /// `A − σB` for matrices of equal shape.
    pub fn sub_scaled(&self, sigma: f64, b: &SymBand) -> SymBand {
        assert_eq!((self.n, self.w), (b.n, b.w));
        let data = self
            .data
            .iter()
            .zip(&b.data)
            .map(|(a, b)| a - sigma * b)
            .collect();
        SymBand {
            n: self.n,
            w: self.w,
            data,
        }
    }

    /// `LDLᵀ` without pivoting. With `require_pd`, fails on the first pivot
    /// that is not safely positive.
    pub fn ldlt(&self, require_pd: bool) -> Result<Ldlt> {
        let (n, w) = (self.n, self.w);
        let mut l = self.data.clone();
        let mut d = vec![0.0; n];
        let scale = self.max_abs_diagonal().max(f64::MIN_POSITIVE);
        let mut negative = 0usize;
        for i in 0..n {
            let lo = i.saturating_sub(w);
            for j in lo..i {
                let mut s = l[i * (w + 1) + (i - j)];
                let klo = lo.max(j.saturating_sub(w));
                for k in klo..j {
                    s -= l[i * (w + 1) + (i - k)] * l[j * (w + 1) + (j - k)] * d[k];
                }
                l[i * (w + 1) + (i - j)] = s / d[j];
            }
            let mut s = l[i * (w + 1)];
            for k in lo..i {
                let lik = l[i * (w + 1) + (i - k)];
                s -= lik * lik * d[k];
            }
            if require_pd && !(s > 1e-14 * scale) {
                return Err(Error::Solver(format!(
                    "non-positive pivot {s:e} at row {i}"
                )));
            }
            if s == 0.0 || !s.is_finite() {
                return Err(Error::Solver(format!("singular pivot at row {i}")));
            }
            if s < 0.0 {
                negative += 1;
            }
            d[i] = s;
            l[i * (w + 1)] = 1.0;
        }
        Ok(Ldlt {
            n,
            w,
            l,
            d,
            negative,
        })
    }
}

#[derive(Debug, Clone)]
pub struct Ldlt {
    n: usize,
    w: usize,
    l: Vec<f64>,
    d: Vec<f64>,
    negative: usize,
}

impl Ldlt {
    /// Number of negative pivots (the inertia index of the factored matrix).
    pub fn negative_pivots(&self) -> usize {
        self.negative
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let (n, w) = (self.n, self.w);
        let mut x = b.to_vec();
        for i in 0..n {
            for k in i.saturating_sub(w)..i {
                x[i] -= self.l[i * (w + 1) + (i - k)] * x[k];
            }
        }
        for i in 0..n {
            x[i] /= self.d[i];
        }
        for i in (0..n).rev() {
            for k in i + 1..=(i + w).min(n - 1) {
                x[i] -= self.l[k * (w + 1) + (k - i)] * x[k];
            }
        }
        x
    }
}

/// Interleaved ordering `0, n−1, 1, n−2, …`: position of node `i`.
pub fn interleave_position(n: usize, i: usize) -> usize {
    if 2 * i < n {
        2 * i
    } else {
        2 * (n - 1 - i) + 1
    }
}

/// A symmetric matrix whose nonzeros satisfy cyclic distance `≤ w`, stored as
/// an ordinary band in the interleaved ordering.
#[derive(Debug, Clone)]
pub struct CyclicBand {
    n: usize,
    w: usize,
    pos: Vec<usize>,
    band: SymBand,
}

impl CyclicBand {
    pub fn zeros(n: usize, w: usize) -> Self {
        let pos = (0..n).map(|i| interleave_position(n, i)).collect();
        Self {
            n,
            w,
            pos,
            band: SymBand::zeros(n, 2 * w + 1),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn cyclic_width(&self) -> usize {
        self.w
    }

    fn check(&self, i: usize, j: usize) {
        let d = i.abs_diff(j);
        debug_assert!(
            d.min(self.n - d) <= self.w,
            "({i},{j}) outside cyclic band {}",
            self.w
        );
    }

    /// Adds `v` to `(i, j)`; callers add each unordered pair once (or the
    /// diagonal once).
    pub fn add_sym(&mut self, i: usize, j: usize, v: f64) {
        self.check(i, j);
        self.band.add(self.pos[i], self.pos[j], v);
    }

    /// Adds the `(i, j)` entry of a full (both-triangle) sum; strictly upper
    /// entries in the interleaved order are skipped since their transpose is
    /// also visited.
    pub fn add_full(&mut self, i: usize, j: usize, v: f64) {
        self.check(i, j);
        let (p, q) = (self.pos[i], self.pos[j]);
        if p >= q {
            self.band.add(p, q, v);
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.band.get(self.pos[i], self.pos[j])
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let xp = self.permute(x);
        self.unpermute(&self.band.matvec(&xp))
    }

    pub fn permute(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            y[self.pos[i]] = x[i];
        }
        y
    }

    pub fn unpermute(&self, y: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| y[self.pos[i]]).collect()
    }

    pub fn band(&self) -> &SymBand {
        &self.band
    }

    pub fn band_mut(&mut self) -> &mut SymBand {
        &mut self.band
    }

    pub fn position(&self, i: usize) -> usize {
        self.pos[i]
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j)).collect())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_cyclic(n: usize, w: usize, rng: &mut ChaCha8Rng) -> (CyclicBand, DMatrix<f64>) {
        let mut c = CyclicBand::zeros(n, w);
        let mut dense = DMatrix::zeros(n, n);
        for i in 0..n {
            for d in 1..=w {
                let j = (i + d) % n;
                let v: f64 = rng.gen_range(-1.0..1.0);
                c.add_sym(i, j, v);
                dense[(i, j)] += v;
                dense[(j, i)] += v;
            }
        }
        for i in 0..n {
            let v = 4.0 * w as f64 + rng.gen_range(0.0..1.0);
            c.add_sym(i, i, v);
            dense[(i, i)] += v;
        }
        (c, dense)
    }

    #[test]
    fn interleaving_is_a_permutation_with_bounded_band() {
        for n in [5usize, 8, 9, 16, 33] {
            let mut seen = vec![false; n];
            for i in 0..n {
                seen[interleave_position(n, i)] = true;
            }
            assert!(seen.iter().all(|&s| s));
            for w in 1..4 {
                for i in 0..n {
                    for d in 1..=w {
                        let j = (i + d) % n;
                        let dist = interleave_position(n, i).abs_diff(interleave_position(n, j));
                        assert!(dist <= 2 * w + 1);
                    }
                }
            }
        }
    }

    #[test]
    fn cyclic_solve_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for (n, w) in [(12usize, 2usize), (40, 4), (9, 4), (101, 3)] {
            let (c, dense) = random_cyclic(n, w, &mut rng);
            for i in 0..n {
                for j in 0..n {
                    assert_eq!(c.get(i, j), dense[(i, j)]);
                }
            }
            let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let f = c.band().ldlt(true).unwrap();
            let x = c.unpermute(&f.solve(&c.permute(&b)));
            let xd = dense
                .clone()
                .lu()
                .solve(&DVector::from_vec(b.clone()))
                .unwrap();
            for i in 0..n {
                assert!((x[i] - xd[i]).abs() < 1e-10);
            }
            let ax = c.matvec(&x);
            for i in 0..n {
                assert!((ax[i] - b[i]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn negative_pivots_count_negative_eigenvalues() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (c, dense) = random_cyclic(30, 3, &mut rng);
        let eig = dense.clone().symmetric_eigen().eigenvalues;
        let mut sorted: Vec<f64> = eig.iter().copied().collect();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let sigma = 0.5 * (sorted[4] + sorted[5]);
        let mut shifted = c.band().clone();
        shifted.shift_diagonal(-sigma);
        assert_eq!(shifted.ldlt(false).unwrap().negative_pivots(), 5);
        assert!(shifted.ldlt(true).is_err());
    }

    #[test]
    fn pin_replaces_row_and_column() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (mut c, _) = random_cyclic(10, 2, &mut rng);
        let p = c.position(3);
        c.band_mut().pin(p);
        for j in 0..10 {
            assert_eq!(c.get(3, j), if j == 3 { 1.0 } else { 0.0 });
        }
    }

    #[test]
    fn add_full_counts_each_pair_once() {
        let mut c = CyclicBand::zeros(6, 1);
        for (i, j) in [(0usize, 5usize), (5, 0), (2, 3), (3, 2), (4, 4)] {
            c.add_full(i, j, 1.5);
        }
        assert_eq!(c.get(0, 5), 1.5);
        assert_eq!(c.get(3, 2), 1.5);
        assert_eq!(c.get(4, 4), 1.5);
    }
}
