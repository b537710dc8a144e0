//! Average-linkage agglomerative clustering.
//!
//! Clusters are named by their smallest member index. Each step merges the pair
//! with the smallest average distance; ties go to the smallest `(a, b)` pair.
//! Distances between merged clusters follow the Lance-Williams update, and the
//! nearest neighbour of each row (over higher-indexed clusters) is cached.

use super::distance::DistanceMatrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Merge {
    /// Surviving cluster (the smaller index).
    pub a: usize,
    /// Absorbed cluster.
    pub b: usize,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dendrogram {
    pub n: usize,
    pub merges: Vec<Merge>,
}

impl Dendrogram {
    /// Labels after cutting at `k` clusters, numbered by first appearance.
    pub fn cut(&self, k: usize) -> Vec<usize> {
        let k = k.clamp(1.min(self.n), self.n);
        let mut parent: Vec<usize> = (0..self.n).collect();
        for m in &self.merges[..self.n - k] {
            parent[m.b] = m.a;
        }
        let root = |mut i: usize| {
            while parent[i] != i {
                i = parent[i];
            }
            i
        };
        let mut names = vec![usize::MAX; self.n];
        let mut next = 0;
        (0..self.n)
            .map(|i| {
                let r = root(i);
                if names[r] == usize::MAX {
                    names[r] = next;
                    next += 1;
                }
                names[r]
            })
            .collect()
    }
}

pub fn agglomerate(dist: &DistanceMatrix) -> Dendrogram {
    let n = dist.len();
    let mut d = dist.clone();
    let mut active = vec![true; n];
    let mut size = vec![1usize; n];
    let mut nn = vec![usize::MAX; n];
    let mut nn_d = vec![f64::INFINITY; n];

    let refresh = |i: usize, d: &DistanceMatrix, active: &[bool], nn: &mut [usize], nn_d: &mut [f64]| {
        nn[i] = usize::MAX;
        nn_d[i] = f64::INFINITY;
        let row = d.row(i);
        for j in i + 1..n {
            if active[j] && row[j] < nn_d[i] {
                nn[i] = j;
                nn_d[i] = row[j];
            }
        }
    };
    for i in 0..n {
        refresh(i, &d, &active, &mut nn, &mut nn_d);
    }

    let mut merges = Vec::with_capacity(n.saturating_sub(1));
    for _ in 1..n {
        let mut a = usize::MAX;
        for i in 0..n {
            if active[i] && nn[i] != usize::MAX && (a == usize::MAX || nn_d[i] < nn_d[a]) {
                a = i;
            }
        }
        let b = nn[a];
        merges.push(Merge {
            a,
            b,
            distance: nn_d[a],
        });

        let (sa, sb) = (size[a] as f64, size[b] as f64);
        for j in 0..n {
            if active[j] && j != a && j != b {
                let v = (sa * d.get(a, j) + sb * d.get(b, j)) / (sa + sb);
                d.set(a, j, v);
            }
        }
        active[b] = false;
        size[a] += size[b];

        for i in 0..b {
            if !active[i] || i == a {
                continue;
            }
            if nn[i] == a || nn[i] == b {
                refresh(i, &d, &active, &mut nn, &mut nn_d);
            } else if i < a {
                let v = d.get(i, a);
                if v < nn_d[i] || (v == nn_d[i] && a < nn[i]) {
                    nn[i] = a;
                    nn_d[i] = v;
                }
            }
        }
        refresh(a, &d, &active, &mut nn, &mut nn_d);
    }
    Dendrogram { n, merges }
}

/// Average-linkage labels for exactly `min(k, n)` clusters.
pub fn ag_labels(dist: &DistanceMatrix, k: usize) -> Vec<usize> {
    agglomerate(dist).cut(k)
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::clustering::embeddings::Points;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn line(xs: &[f64]) -> DistanceMatrix {
        let ids = (0..xs.len()).map(|i| i.to_string()).collect();
        DistanceMatrix::euclidean(&Points::new(ids, 1, xs.to_vec()).unwrap())
    }

    #[test]
    fn merges_closest_first() {
        let dg = agglomerate(&line(&[0.0, 1.0, 10.0, 10.5]));
        assert_eq!((dg.merges[0].a, dg.merges[0].b), (2, 3));
        assert_eq!((dg.merges[1].a, dg.merges[1].b), (0, 1));
        assert_eq!(dg.cut(2), vec![0, 0, 1, 1]);
        assert_eq!(dg.cut(1), vec![0; 4]);
        assert_eq!(dg.cut(4), vec![0, 1, 2, 3]);
    }

    #[test]
    fn average_distance_after_merge() {
        // {0,1} vs 3: mean(3, 2) = 2.5
        let dg = agglomerate(&line(&[0.0, 1.0, 3.0]));
        assert_eq!(dg.merges[1].distance, 2.5);
    }

    #[test]
    fn ties_take_smallest_pair() {
        let dg = agglomerate(&line(&[0.0, 1.0, 2.0, 3.0]));
        assert_eq!((dg.merges[0].a, dg.merges[0].b), (0, 1));
    }

    #[test]
    fn matches_naive_oracle_on_small_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for trial in 0..300 {
            let n = rng.gen_range(1..=8);
            let dim = rng.gen_range(1..=3);
            let data: Vec<f64> = (0..n * dim).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let ids = (0..n).map(|i| i.to_string()).collect();
            let dist = DistanceMatrix::euclidean(&Points::new(ids, dim, data).unwrap());
            let dg = agglomerate(&dist);
            for k in 1..=n {
                assert_eq!(dg.cut(k), oracle::naive_cut(&dist, k), "trial {trial} k {k}");
            }
        }
    }

    #[test]
    fn must_link_pairs_merge_first() {
        let mut d = line(&[0.0, 1.0, 5.0, 9.0]);
        d.apply_must_link(&[(0, 3)]).unwrap();
        assert_eq!(ag_labels(&d, 3), vec![0, 1, 2, 0]);
    }
}
