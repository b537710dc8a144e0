use std::collections::BTreeMap;

use super::{align_hard, harmonic, HardClustering};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BCubed {
    pub precision: f64,
    pub recall: f64,
    pub f: f64,
}

/// Gold/system contingency over (gold label, system label) cells with f64 mass.
#[derive(Debug, Clone)]
pub(crate) struct Contingency {
    pub cells: BTreeMap<(usize, usize), f64>,
    pub rows: Vec<f64>,
    pub cols: Vec<f64>,
    pub total: f64,
}

impl Contingency {
    pub fn from_cells(cells: BTreeMap<(usize, usize), f64>) -> Self {
        let n_rows = cells.keys().map(|k| k.0 + 1).max().unwrap_or(0);
        let n_cols = cells.keys().map(|k| k.1 + 1).max().unwrap_or(0);
        let mut rows = vec![0.0; n_rows];
        let mut cols = vec![0.0; n_cols];
        let mut total = 0.0;
        for (&(g, s), &m) in &cells {
            rows[g] += m;
            cols[s] += m;
            total += m;
        }
        Contingency {
            cells,
            rows,
            cols,
            total,
        }
    }

    pub fn from_labels(gold: &[usize], system: &[usize]) -> Self {
        let mut cells = BTreeMap::new();
        for (&g, &s) in gold.iter().zip(system) {
            *cells.entry((g, s)).or_insert(0.0) += 1.0;
        }
        Self::from_cells(cells)
    }

    fn entropy(masses: &[f64], total: f64) -> f64 {
        masses
            .iter()
            .filter(|&&m| m > 0.0)
            .map(|&m| {
                let p = m / total;
                -p * p.ln()
            })
            .sum()
    }

    pub fn gold_entropy(&self) -> f64 {
        Self::entropy(&self.rows, self.total)
    }

    pub fn system_entropy(&self) -> f64 {
        Self::entropy(&self.cols, self.total)
    }

    fn nonzero(masses: &[f64]) -> usize {
        masses.iter().filter(|&&m| m > 0.0).count()
    }

    pub fn mutual_information(&self) -> f64 {
        let n = self.total;
        self.cells
            .iter()
            .filter(|(_, &m)| m > 0.0)
            .map(|(&(g, s), &m)| (m / n) * ((n * m) / (self.rows[g] * self.cols[s])).ln())
            .sum()
    }

    /// Mutual information over the larger of the two entropies; 0 when either side
    /// has a single label.
    pub fn nmi(&self) -> f64 {
        if Self::nonzero(&self.rows) < 2 || Self::nonzero(&self.cols) < 2 {
            return 0.0;
        }
        let denom = self.gold_entropy().max(self.system_entropy());
        if denom <= 0.0 {
            return 0.0;
        }
        (self.mutual_information() / denom).clamp(0.0, 1.0)
    }

    /// Harmonic mean of homogeneity and completeness; 0 for a single system cluster.
    pub fn v_measure(&self) -> f64 {
        if Self::nonzero(&self.cols) < 2 {
            return 0.0;
        }
        let n = self.total;
        let h_gold = self.gold_entropy();
        let h_sys = self.system_entropy();
        let mut h_gold_given_sys = 0.0;
        let mut h_sys_given_gold = 0.0;
        for (&(g, s), &m) in &self.cells {
            if m > 0.0 {
                h_gold_given_sys -= (m / n) * (m / self.cols[s]).ln();
                h_sys_given_gold -= (m / n) * (m / self.rows[g]).ln();
            }
        }
        let homogeneity = if h_gold <= 0.0 {
            1.0
        } else {
            1.0 - h_gold_given_sys / h_gold
        };
        let completeness = if h_sys <= 0.0 {
            1.0
        } else {
            1.0 - h_sys_given_gold / h_sys
        };
        harmonic(homogeneity.clamp(0.0, 1.0), completeness.clamp(0.0, 1.0))
    }
}

/// B-Cubed over dense label vectors. Per-instance precision and recall count the
/// instance itself and are averaged uniformly over instances.
///
/// Panics if the slices differ in length.
pub fn b_cubed_labels(gold: &[usize], system: &[usize]) -> BCubed {
    assert_eq!(gold.len(), system.len(), "label vectors differ in length");
    let n = gold.len();
    if n == 0 {
        return BCubed {
            precision: 0.0,
            recall: 0.0,
            f: 0.0,
        };
    }
    let mut cluster_size: BTreeMap<usize, usize> = BTreeMap::new();
    let mut class_size: BTreeMap<usize, usize> = BTreeMap::new();
    let mut cell: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for (&g, &s) in gold.iter().zip(system) {
        *cluster_size.entry(s).or_default() += 1;
        *class_size.entry(g).or_default() += 1;
        *cell.entry((g, s)).or_default() += 1;
    }
    let mut p = 0.0;
    let mut r = 0.0;
    for (&g, &s) in gold.iter().zip(system) {
        let both = cell[&(g, s)] as f64;
        p += both / cluster_size[&s] as f64;
        r += both / class_size[&g] as f64;
    }
    let precision = p / n as f64;
    let recall = r / n as f64;
    BCubed {
        precision,
        recall,
        f: harmonic(precision, recall),
    }
}

pub fn b_cubed(gold: &HardClustering, system: &HardClustering) -> Result<BCubed> {
    let (g, s) = align_hard(gold, system)?;
    Ok(b_cubed_labels(&g, &s))
}

pub fn nmi_labels(gold: &[usize], system: &[usize]) -> f64 {
    assert_eq!(gold.len(), system.len(), "label vectors differ in length");
    Contingency::from_labels(gold, system).nmi()
}

pub fn nmi(gold: &HardClustering, system: &HardClustering) -> Result<f64> {
    let (g, s) = align_hard(gold, system)?;
    Ok(nmi_labels(&g, &s))
}

pub fn v_measure_labels(gold: &[usize], system: &[usize]) -> f64 {
    assert_eq!(gold.len(), system.len(), "label vectors differ in length");
    Contingency::from_labels(gold, system).v_measure()
}

pub fn v_measure(gold: &HardClustering, system: &HardClustering) -> Result<f64> {
    let (g, s) = align_hard(gold, system)?;
    Ok(v_measure_labels(&g, &s))
}

/// Unordered-pair counts shared by paired F-score and Rand index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairCounts {
    /// Pairs together in both gold and system.
    pub both: u64,
    pub system_pairs: u64,
    pub gold_pairs: u64,
    pub total_pairs: u64,
}

fn choose2(k: u64) -> u64 {
    k * k.saturating_sub(1) / 2
}

impl PairCounts {
    pub fn from_labels(gold: &[usize], system: &[usize]) -> Self {
        assert_eq!(gold.len(), system.len(), "label vectors differ in length");
        let mut cluster_size: BTreeMap<usize, u64> = BTreeMap::new();
        let mut class_size: BTreeMap<usize, u64> = BTreeMap::new();
        let mut cell: BTreeMap<(usize, usize), u64> = BTreeMap::new();
        for (&g, &s) in gold.iter().zip(system) {
            *cluster_size.entry(s).or_default() += 1;
            *class_size.entry(g).or_default() += 1;
            *cell.entry((g, s)).or_default() += 1;
        }
        PairCounts {
            both: cell.values().map(|&k| choose2(k)).sum(),
            system_pairs: cluster_size.values().map(|&k| choose2(k)).sum(),
            gold_pairs: class_size.values().map(|&k| choose2(k)).sum(),
            total_pairs: choose2(gold.len() as u64),
        }
    }

    /// No positive pair on one side: precision or recall is undefined.
    pub fn degenerate(&self) -> bool {
        self.system_pairs == 0 || self.gold_pairs == 0
    }

    pub fn precision(&self) -> f64 {
        if self.system_pairs == 0 {
            0.0
        } else {
            self.both as f64 / self.system_pairs as f64
        }
    }

    pub fn recall(&self) -> f64 {
        if self.gold_pairs == 0 {
            0.0
        } else {
            self.both as f64 / self.gold_pairs as f64
        }
    }

    /// Paired F-score; 0 when degenerate.
    pub fn f(&self) -> f64 {
        if self.degenerate() {
            0.0
        } else {
            harmonic(self.precision(), self.recall())
        }
    }

    pub fn agreements(&self) -> u64 {
        self.total_pairs + 2 * self.both - self.system_pairs - self.gold_pairs
    }
}

pub fn paired_f_labels(gold: &[usize], system: &[usize]) -> PairCounts {
    PairCounts::from_labels(gold, system)
}

/// Paired F-score with its pair counts; check [`PairCounts::degenerate`] for the
/// undefined case.
pub fn paired_f(gold: &HardClustering, system: &HardClustering) -> Result<PairCounts> {
    let (g, s) = align_hard(gold, system)?;
    Ok(paired_f_labels(&g, &s))
}

/// Rand index and whether it is undefined (fewer than two instances; reported as 1).
pub fn rand_index_labels(gold: &[usize], system: &[usize]) -> (f64, bool) {
    let counts = PairCounts::from_labels(gold, system);
    if counts.total_pairs == 0 {
        return (1.0, true);
    }
    (
        counts.agreements() as f64 / counts.total_pairs as f64,
        false,
    )
}

pub fn rand_index(gold: &HardClustering, system: &HardClustering) -> Result<f64> {
    let (g, s) = align_hard(gold, system)?;
    Ok(rand_index_labels(&g, &s).0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hc(pairs: &[(&str, &str)]) -> HardClustering {
        pairs.iter().copied().collect()
    }

    fn three_item() -> (HardClustering, HardClustering) {
        (
            hc(&[("a", "1"), ("b", "1"), ("c", "2")]),
            hc(&[("a", "x"), ("b", "y"), ("c", "y")]),
        )
    }

    #[test]
    fn identity_scores_one() {
        let (gold, _) = three_item();
        let b = b_cubed(&gold, &gold).unwrap();
        assert_eq!((b.precision, b.recall, b.f), (1.0, 1.0, 1.0));
        assert!((nmi(&gold, &gold).unwrap() - 1.0).abs() < 1e-12);
        assert!((v_measure(&gold, &gold).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(paired_f(&gold, &gold).unwrap().f(), 1.0);
        assert_eq!(rand_index(&gold, &gold).unwrap(), 1.0);
    }

    #[test]
    fn three_item_case() {
        // per item: a P=1 R=1/2, b P=1/2 R=1/2, c P=1/2 R=1
        let (gold, sys) = three_item();
        let b = b_cubed(&gold, &sys).unwrap();
        assert!((b.precision - 2.0 / 3.0).abs() < 1e-15);
        assert!((b.recall - 2.0 / 3.0).abs() < 1e-15);
        assert!((b.f - 2.0 / 3.0).abs() < 1e-15);
        // pairs: ab gold-only, bc system-only, ac neither
        let pf = paired_f(&gold, &sys).unwrap();
        assert_eq!(pf.both, 0);
        assert_eq!(pf.f(), 0.0);
        assert!(!pf.degenerate());
        assert!((rand_index(&gold, &sys).unwrap() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn one_cluster_per_lemma_conventions() {
        let gold = hc(&[("a", "1"), ("b", "1"), ("c", "2"), ("d", "3")]);
        let sys = hc(&[("a", "0"), ("b", "0"), ("c", "0"), ("d", "0")]);
        assert_eq!(nmi(&gold, &sys).unwrap(), 0.0);
        assert_eq!(v_measure(&gold, &sys).unwrap(), 0.0);
        assert_eq!(b_cubed(&gold, &sys).unwrap().recall, 1.0);
    }

    #[test]
    fn singleton_system_is_pure_and_paired_f_degenerate() {
        let gold = hc(&[("a", "1"), ("b", "1"), ("c", "2")]);
        let sys = hc(&[("a", "0"), ("b", "1"), ("c", "2")]);
        assert_eq!(b_cubed(&gold, &sys).unwrap().precision, 1.0);
        let pf = paired_f(&gold, &sys).unwrap();
        assert!(pf.degenerate());
        assert_eq!(pf.f(), 0.0);
        assert!((rand_index(&gold, &sys).unwrap() - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn single_item_rand_is_flagged() {
        assert_eq!(rand_index_labels(&[0], &[0]), (1.0, true));
    }
}
