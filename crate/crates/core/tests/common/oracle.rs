//! Naive pair-loop and contingency reference implementations.

use std::collections::BTreeMap;

use wsi_core::metrics::{score_all, HardClustering, MetricName};

/// Every set partition of `n` items as a restricted growth string.
pub fn partitions(n: usize) -> Vec<Vec<usize>> {
    fn grow(prefix: &mut Vec<usize>, max: usize, n: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == n {
            out.push(prefix.clone());
            return;
        }
        for label in 0..=max + 1 {
            prefix.push(label);
            grow(prefix, max.max(label), n, out);
            prefix.pop();
        }
    }
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    grow(&mut vec![0], 0, n, &mut out);
    out
}

fn f(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

fn entropy(labels: &[usize]) -> f64 {
    let n = labels.len() as f64;
    let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
    for &l in labels {
        *counts.entry(l).or_default() += 1.0;
    }
    counts.values().map(|&c| -(c / n) * (c / n).log2()).sum()
}

fn joint(a: &[usize], b: &[usize]) -> Vec<usize> {
    a.iter().zip(b).map(|(&x, &y)| x * 64 + y).collect()
}

fn distinct(labels: &[usize]) -> usize {
    labels.iter().collect::<std::collections::BTreeSet<_>>().len()
}

pub fn naive(gold: &[usize], sys: &[usize]) -> BTreeMap<MetricName, f64> {
    let n = gold.len();
    let nf = n as f64;
    let (mut p, mut r) = (0.0, 0.0);
    for i in 0..n {
        let same_sys = (0..n).filter(|&j| sys[j] == sys[i]).count() as f64;
        let same_gold = (0..n).filter(|&j| gold[j] == gold[i]).count() as f64;
        let both = (0..n).filter(|&j| sys[j] == sys[i] && gold[j] == gold[i]).count() as f64;
        p += both / same_sys;
        r += both / same_gold;
    }
    let (p, r) = (p / nf, r / nf);
    let b3f = f(p, r);

    let hg = entropy(gold);
    let hs = entropy(sys);
    let hj = entropy(&joint(gold, sys));
    let mi = hg + hs - hj;
    let nmi = if hg.max(hs) == 0.0 { 0.0 } else { mi / hg.max(hs) };
    let v = if distinct(sys) < 2 {
        0.0
    } else {
        let h = if hg == 0.0 { 1.0 } else { 1.0 - (hj - hs) / hg };
        let c = if hs == 0.0 { 1.0 } else { 1.0 - (hj - hg) / hs };
        f(h, c)
    };

    let (mut both, mut sp, mut gp, mut agree, mut total) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for i in 0..n {
        for j in i + 1..n {
            let s = sys[i] == sys[j];
            let g = gold[i] == gold[j];
            total += 1.0;
            if s {
                sp += 1.0;
            }
            if g {
                gp += 1.0;
            }
            if s && g {
                both += 1.0;
            }
            if s == g {
                agree += 1.0;
            }
        }
    }
    let paired = if sp == 0.0 || gp == 0.0 { 0.0 } else { f(both / sp, both / gp) };
    let rand = if total == 0.0 { 1.0 } else { agree / total };

    BTreeMap::from([
        (MetricName::B3Precision, p),
        (MetricName::B3Recall, r),
        (MetricName::B3F, b3f),
        (MetricName::FuzzyB3F, b3f),
        (MetricName::Nmi, nmi),
        (MetricName::FuzzyNmi, nmi),
        (MetricName::VMeasure, v),
        (MetricName::PairedF, paired),
        (MetricName::RandIndex, rand),
        (MetricName::GeoMeanFb3Nmi, (b3f * nmi).sqrt()),
    ])
}

pub fn clustering(labels: &[usize], prefix: &str) -> HardClustering {
    labels
        .iter()
        .enumerate()
        .map(|(i, l)| (format!("i{i}"), format!("{prefix}{l}")))
        .collect()
}

/// Largest deviation between the library and the oracle over all pairs of
/// partitions of 1..=max_n items, with the number of pairs checked.
pub fn exhaustive(max_n: usize) -> (usize, f64, Option<String>) {
    let mut checked = 0;
    let mut worst = 0.0f64;
    let mut worst_case = None;
    for n in 1..=max_n {
        let parts = partitions(n);
        for g in &parts {
            for s in &parts {
                let gold = clustering(g, "g").to_graded();
                let sys = clustering(s, "s").to_graded();
                let (got, _) = score_all(&gold, &sys).expect("scoring");
                for (m, want) in naive(g, s) {
                    let err = (got[&m] - want).abs();
                    if err > worst {
                        worst = err;
                        worst_case = Some(format!("{m} gold={g:?} sys={s:?}: {} vs {want}", got[&m]));
                    }
                }
                checked += 1;
            }
        }
    }
    (checked, worst, worst_case)
}
