//! Silhouette scores along an average-linkage dendrogram.
//!
//! Per-point distance sums to each cluster are kept up to date as merges are
//! replayed, so every cut costs `O(n · c)` instead of `O(n²)`.

use super::agglomerative::Dendrogram;
use super::distance::DistanceMatrix;

/// Mean silhouette of a labelling; `None` when it is undefined (fewer than two
/// clusters, as many clusters as points, or all distances zero).
pub fn silhouette(dist: &DistanceMatrix, labels: &[usize]) -> Option<f64> {
    let n = dist.len();
    let k = labels.iter().copied().max().map_or(0, |m| m + 1);
    if k < 2 || k >= n || dist.all_zero() {
        return None;
    }
    let mut sizes = vec![0usize; k];
    for &l in labels {
        sizes[l] += 1;
    }
    let total: f64 = (0..n)
        .map(|i| {
            let mut sums = vec![0.0; k];
            for (j, &l) in labels.iter().enumerate() {
                sums[l] += dist.get(i, j);
            }
            point_score(&sums, &sizes, labels[i])
        })
        .sum();
    Some(total / n as f64)
}

fn point_score(sums: &[f64], sizes: &[usize], own: usize) -> f64 {
    if sizes[own] <= 1 {
        return 0.0;
    }
    let a = sums[own] / (sizes[own] - 1) as f64;
    let b = sums
        .iter()
        .zip(sizes)
        .enumerate()
        .filter(|&(c, (_, &s))| c != own && s > 0)
        .map(|(_, (&sum, &s))| sum / s as f64)
        .fold(f64::INFINITY, f64::min);
    let m = a.max(b);
    if m > 0.0 {
        (b - a) / m
    } else {
        0.0
    }
}

/// Silhouette of every dendrogram cut with `2 ≤ c ≤ n − 1` clusters; entry `c`
/// of the result holds the score for `c` clusters.
pub fn silhouette_profile(dist: &DistanceMatrix, dendrogram: &Dendrogram) -> Vec<Option<f64>> {
    let n = dist.len();
    let mut out = vec![None; n + 1];
    if n < 3 || dist.all_zero() {
        return out;
    }
    // sums[i * n + r]: distance from point i to all members of cluster r.
    let mut sums: Vec<f64> = (0..n).flat_map(|i| dist.row(i).to_vec()).collect();
    let mut size = vec![1usize; n];
    let mut owner: Vec<usize> = (0..n).collect();
    let mut active: Vec<usize> = (0..n).collect();

    for (step, m) in dendrogram.merges.iter().enumerate() {
        let c = n - step - 1;
        if c < 2 {
            break;
        }
        sums.chunks_mut(n).for_each(|row| row[m.a] += row[m.b]);
        size[m.a] += size[m.b];
        size[m.b] = 0;
        for o in owner.iter_mut() {
            if *o == m.b {
                *o = m.a;
            }
        }
        active.retain(|&r| r != m.b);

        let total: f64 = (0..n)
            .map(|i| {
                let row = &sums[i * n..(i + 1) * n];
                let own = owner[i];
                if size[own] <= 1 {
                    return 0.0;
                }
                let a = row[own] / (size[own] - 1) as f64;
                let b = active
                    .iter()
                    .filter(|&&r| r != own)
                    .map(|&r| row[r] / size[r] as f64)
                    .fold(f64::INFINITY, f64::min);
                let mx = a.max(b);
                if mx > 0.0 {
                    (b - a) / mx
                } else {
                    0.0
                }
            })
            .sum();
        out[c] = Some(total / n as f64);
    }
    out
}

/// Number of clusters with the highest silhouette over `k_min..=n−1` (ties to the
/// smaller count), capped at `k_max`. One cluster when `n ≤ 2` or no cut has a
/// defined score.
pub fn select_k(dist: &DistanceMatrix, dendrogram: &Dendrogram, k_min: usize, k_max: usize) -> usize {
    let n = dist.len();
    if n <= 2 {
        return 1;
    }
    let profile = silhouette_profile(dist, dendrogram);
    let mut best: Option<(usize, f64)> = None;
    for (c, score) in profile.iter().enumerate().take(n).skip(k_min.max(2)) {
        if let Some(s) = *score {
            if best.is_none_or(|(_, b)| s > b) {
                best = Some((c, s));
            }
        }
    }
    match best {
        Some((c, _)) => c.min(k_max.max(1)),
        None => 1,
    }
}

#[cfg(test)]
mod tests {
    use super::super::agglomerative::agglomerate;
    use super::super::embeddings::Points;
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dist_of(dim: usize, data: Vec<f64>) -> DistanceMatrix {
        let ids = (0..data.len() / dim).map(|i| i.to_string()).collect();
        DistanceMatrix::euclidean(&Points::new(ids, dim, data).unwrap())
    }

    #[test]
    fn profile_matches_direct_silhouette() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let n = rng.gen_range(3..=12);
            let data: Vec<f64> = (0..n * 2).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let d = dist_of(2, data);
            let dg = agglomerate(&d);
            let profile = silhouette_profile(&d, &dg);
            for c in 2..n {
                let direct = silhouette(&d, &dg.cut(c)).unwrap();
                assert!((profile[c].unwrap() - direct).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn hand_computed_silhouette() {
        // points 0, 1, 4: clusters {0,1}, {4}
        // s0 = (4 - 1) / 4, s1 = (3 - 1) / 3, s2 = 0
        let d = dist_of(1, vec![0.0, 1.0, 4.0]);
        let s = silhouette(&d, &[0, 0, 1]).unwrap();
        assert!((s - (0.75 + 2.0 / 3.0) / 3.0).abs() < 1e-15);
    }

    #[test]
    fn two_blobs_give_two() {
        let d = dist_of(1, vec![0.0, 0.1, 0.2, 10.0, 10.1, 10.2]);
        assert_eq!(select_k(&d, &agglomerate(&d), 2, 15), 2);
    }

    #[test]
    fn degenerate_inputs_give_one() {
        let d = dist_of(1, vec![0.0, 3.0]);
        assert_eq!(select_k(&d, &agglomerate(&d), 2, 15), 1);
        let d = dist_of(2, vec![1.0; 10]);
        assert_eq!(select_k(&d, &agglomerate(&d), 2, 15), 1);
    }

    #[test]
    fn capped_at_k_max() {
        let data: Vec<f64> = (0..20).map(|i| (i * 100) as f64).flat_map(|x| [x, x + 0.5]).collect();
        let d = dist_of(1, data);
        let dg = agglomerate(&d);
        assert_eq!(select_k(&d, &dg, 2, 100), 20);
        assert_eq!(select_k(&d, &dg, 2, 15), 15);
    }
}
