use serde::{Deserialize, Serialize};

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix<V> {
    rows: usize,
    cols: usize,
    data: Vec<V>,
}

impl<V> Matrix<V> {
    pub fn from_vec(rows: usize, cols: usize, data: Vec<V>) -> Self {
        assert_eq!(rows * cols, data.len(), "matrix shape mismatch");
        Self { rows, cols, data }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> V) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &V {
        &self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[V] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[V] {
        &self.data
    }

    pub fn map<W>(&self, f: impl FnMut(&V) -> W) -> Matrix<W> {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(f).collect() }
    }

    pub fn iter_indexed(&self) -> impl Iterator<Item = (usize, usize, &V)> {
        let cols = self.cols;
        self.data.iter().enumerate().map(move |(k, v)| (k / cols, k % cols, v))
    }
}

/// `n` evenly spaced points covering `[lo, hi]` inclusive.
pub fn linspace<T: crate::scalar::Real>(lo: T, hi: T, n: usize) -> Vec<T> {
    if n == 1 {
        return vec![lo];
    }
    let span = hi - lo;
    let last = T::lit((n - 1) as f64);
    (0..n)
        .map(|k| if k + 1 == n { hi } else { lo + span * T::lit(k as f64) / last })
        .collect()
}
