//! X-means: k-means with BIC-guided 2-way splits.
//!
//! Each round runs k-means to convergence, then tries to split every cluster in
//! two with a local 2-means. A split is kept when the children's BIC beats the
//! parent's. The BIC is that of a spherical Gaussian mixture with one shared
//! variance per model:
//!
//! ```text
//! σ² = Σ ||x − μ(x)||² / (M · (R − K))
//! l  = Σ_k R_k ln(R_k / R) − R·M/2 · ln(2π σ²) − M·(R − K)/2
//! BIC = l − p/2 · ln R,   p = (K − 1) + M·K + 1
//! ```

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::distance::euclidean;
use super::embeddings::Points;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct XMeansConfig {
    pub k_min: usize,
    pub k_max: usize,
    pub tolerance: f64,
    pub max_iter: usize,
}

impl Default for XMeansConfig {
    fn default() -> Self {
        XMeansConfig {
            k_min: 1,
            k_max: 15,
            tolerance: 0.003,
            max_iter: 300,
        }
    }
}

fn sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn kmeans_pp(points: &Points, members: &[usize], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut centers = vec![points.row(members[rng.gen_range(0..members.len())]).to_vec()];
    while centers.len() < k {
        let d2: Vec<f64> = members
            .iter()
            .map(|&i| {
                centers
                    .iter()
                    .map(|c| sq(points.row(i), c))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut t = rng.gen_range(0.0..total);
            let mut chosen = members.len() - 1;
            for (idx, &w) in d2.iter().enumerate() {
                if t < w {
                    chosen = idx;
                    break;
                }
                t -= w;
            }
            chosen
        } else {
            rng.gen_range(0..members.len())
        };
        centers.push(points.row(members[pick]).to_vec());
    }
    centers
}

/// Lloyd iterations over `members`; returns centers and per-member labels.
/// Stops when no center moves more than `tolerance`. Empty clusters keep their center.
fn kmeans(
    points: &Points,
    members: &[usize],
    mut centers: Vec<Vec<f64>>,
    tolerance: f64,
    max_iter: usize,
) -> (Vec<Vec<f64>>, Vec<usize>) {
    let dim = points.dim;
    let mut labels = vec![0; members.len()];
    for _ in 0..max_iter.max(1) {
        for (l, &i) in labels.iter_mut().zip(members) {
            let row = points.row(i);
            let mut best = (f64::INFINITY, 0);
            for (c, center) in centers.iter().enumerate() {
                let d = sq(row, center);
                if d < best.0 {
                    best = (d, c);
                }
            }
            *l = best.1;
        }
        let mut sums = vec![vec![0.0; dim]; centers.len()];
        let mut counts = vec![0usize; centers.len()];
        for (&l, &i) in labels.iter().zip(members) {
            counts[l] += 1;
            for (s, v) in sums[l].iter_mut().zip(points.row(i)) {
                *s += v;
            }
        }
        let mut shift: f64 = 0.0;
        for ((center, sum), &count) in centers.iter_mut().zip(sums).zip(&counts) {
            if count == 0 {
                continue;
            }
            let new: Vec<f64> = sum.into_iter().map(|s| s / count as f64).collect();
            shift = shift.max(euclidean(center, &new));
            *center = new;
        }
        if shift < tolerance {
            break;
        }
    }
    (centers, labels)
}

/// BIC of a spherical Gaussian mixture fitted to `members`; `labels` index `centers`.
pub fn bic(points: &Points, members: &[usize], centers: &[Vec<f64>], labels: &[usize]) -> f64 {
    let r = members.len() as f64;
    let k = centers.len() as f64;
    let m = points.dim as f64;
    if r <= k {
        return f64::NEG_INFINITY;
    }
    let mut counts = vec![0usize; centers.len()];
    let mut sse = 0.0;
    for (&l, &i) in labels.iter().zip(members) {
        counts[l] += 1;
        sse += sq(points.row(i), &centers[l]);
    }
    let sigma2 = sse / (m * (r - k));
    if sigma2 <= 0.0 {
        return f64::INFINITY;
    }
    let mixing: f64 = counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| c as f64 * (c as f64 / r).ln())
        .sum();
    let ll = mixing - r * m / 2.0 * (2.0 * std::f64::consts::PI * sigma2).ln() - m * (r - k) / 2.0;
    let p = (k - 1.0) + m * k + 1.0;
    ll - p / 2.0 * r.ln()
}

fn try_split(
    points: &Points,
    members: &[usize],
    center: &[f64],
    config: &XMeansConfig,
    rng: &mut ChaCha8Rng,
) -> Option<[Vec<f64>; 2]> {
    if members.len() < 2 {
        return None;
    }
    let parent = bic(points, members, &[center.to_vec()], &vec![0; members.len()]);
    if parent == f64::INFINITY {
        return None;
    }
    let seeds = kmeans_pp(points, members, 2, rng);
    if seeds[0] == seeds[1] {
        return None;
    }
    let (children, labels) = kmeans(points, members, seeds, config.tolerance, config.max_iter);
    if !labels.contains(&0) || !labels.contains(&1) {
        return None;
    }
    let child = bic(points, members, &children, &labels);
    if child > parent {
        let [a, b]: [Vec<f64>; 2] = children.try_into().ok()?;
        Some([a, b])
    } else {
        None
    }
}

/// X-means labels, numbered by first appearance.
pub fn xmeans_labels(points: &Points, config: &XMeansConfig, seed: u64) -> Vec<usize> {
    let n = points.len();
    if n == 0 {
        return Vec::new();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let all: Vec<usize> = (0..n).collect();
    let k_max = config.k_max.max(1).min(n);
    let k0 = config.k_min.clamp(1, k_max);
    let mut centers = kmeans_pp(points, &all, k0, &mut rng);
    let mut labels;
    loop {
        (centers, labels) = kmeans(points, &all, centers, config.tolerance, config.max_iter);
        if centers.len() >= k_max {
            break;
        }
        let mut next = Vec::with_capacity(centers.len() * 2);
        for (c, center) in centers.iter().enumerate() {
            let members: Vec<usize> = all.iter().copied().filter(|&i| labels[i] == c).collect();
            let room = k_max - (centers.len() - c - 1) - next.len();
            match (room >= 2).then(|| try_split(points, &members, center, config, &mut rng)).flatten() {
                Some([a, b]) => {
                    next.push(a);
                    next.push(b);
                }
                None => next.push(center.clone()),
            }
        }
        if next.len() == centers.len() {
            break;
        }
        centers = next;
    }
    renumber(&labels)
}

pub(crate) fn renumber(labels: &[usize]) -> Vec<usize> {
    let mut map = std::collections::HashMap::new();
    labels
        .iter()
        .map(|&l| {
            let next = map.len();
            *map.entry(l).or_insert(next)
        })
        .collect()
}
