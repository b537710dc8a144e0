use super::embeddings::Points;
use crate::error::{Result, WsiError};

/// Symmetric pairwise distance matrix stored in full.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    d: Vec<f64>,
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

impl DistanceMatrix {
    pub fn euclidean(points: &Points) -> Self {
        let n = points.len();
        let mut d = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let v = euclidean(points.row(i), points.row(j));
                d[i * n + j] = v;
                d[j * n + i] = v;
            }
        }
        DistanceMatrix { n, d }
    }

    /// From a full row-major matrix; must be square, symmetric, finite, non-negative
    /// and zero on the diagonal.
    pub fn from_full(n: usize, d: Vec<f64>) -> Result<Self> {
        if d.len() != n * n {
            return Err(WsiError::InvalidClustering(format!(
                "distance matrix has {} entries, expected {}",
                d.len(),
                n * n
            )));
        }
        for i in 0..n {
            if d[i * n + i] != 0.0 {
                return Err(WsiError::InvalidClustering("non-zero diagonal".into()));
            }
            for j in 0..n {
                let v = d[i * n + j];
                if !v.is_finite() || v < 0.0 || v != d[j * n + i] {
                    return Err(WsiError::InvalidClustering(format!(
                        "bad distance at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(DistanceMatrix { n, d })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.d[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.d[i * self.n + j] = v;
        self.d[j * self.n + i] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.d[i * self.n..(i + 1) * self.n]
    }

    /// Sets each must-link pair to distance zero.
    pub fn apply_must_link(&mut self, pairs: &[(usize, usize)]) -> Result<()> {
        for &(i, j) in pairs {
            if i >= self.n || j >= self.n {
                return Err(WsiError::InvalidClustering(format!(
                    "must-link pair ({i}, {j}) out of range"
                )));
            }
            if i != j {
                self.set(i, j, 0.0);
            }
        }
        Ok(())
    }

    pub fn all_zero(&self) -> bool {
        self.d.iter().all(|&v| v == 0.0)
    }
}
