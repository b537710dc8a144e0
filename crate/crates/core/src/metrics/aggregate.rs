use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::MetricName;
use crate::corpus::{LemmaKey, Pos};
use crate::error::{Result, WsiError};

/// Part-of-speech weights for the corpus-proportion average. Renormalized over the
/// parts of speech present when averaging.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosWeights(pub BTreeMap<Pos, f64>);

impl PosWeights {
    /// Proportions of nouns, adjectives and verbs in SemCor 3.0 (Brown1 + Brown2).
    pub fn semcor() -> Self {
        PosWeights(BTreeMap::from([
            (Pos::Noun, 0.49),
            (Pos::Adj, 0.22),
            (Pos::Verb, 0.30),
        ]))
    }

    pub fn get(&self, pos: Pos) -> Result<f64> {
        self.0.get(&pos).copied().ok_or(WsiError::UnknownPos(pos))
    }
}

impl Default for PosWeights {
    fn default() -> Self {
        Self::semcor()
    }
}

pub type MetricMap = BTreeMap<MetricName, f64>;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AggregateReport {
    pub per_lemma: BTreeMap<LemmaKey, MetricMap>,
    pub per_pos: BTreeMap<Pos, MetricMap>,
    pub all_pos: MetricMap,
    pub weighted_avg: MetricMap,
}

fn instance_weighted<'a>(
    items: impl Iterator<Item = (&'a MetricMap, f64)> + Clone,
) -> MetricMap {
    let mut sums: BTreeMap<MetricName, (f64, f64)> = BTreeMap::new();
    for (values, size) in items {
        for (&metric, &v) in values {
            let e = sums.entry(metric).or_insert((0.0, 0.0));
            e.0 += size * v;
            e.1 += size;
        }
    }
    sums.into_iter().map(|(m, (num, den))| (m, num / den)).collect()
}

/// `Σ w_pos · value_pos / Σ w_pos` over the parts of speech present.
pub fn weighted_average(per_pos: &BTreeMap<Pos, MetricMap>, weights: &PosWeights) -> Result<MetricMap> {
    let mut sums: BTreeMap<MetricName, (f64, f64)> = BTreeMap::new();
    for (&pos, values) in per_pos {
        let w = weights.get(pos)?;
        for (&metric, &v) in values {
            let e = sums.entry(metric).or_insert((0.0, 0.0));
            e.0 += w * v;
            e.1 += w;
        }
    }
    Ok(sums
        .into_iter()
        .map(|(m, (num, den))| (m, if den > 0.0 { num / den } else { 0.0 }))
        .collect())
}

/// Instance-weighted aggregation of per-lemma metric values.
///
/// `all_pos` and each `per_pos` entry weight lemmas by their instance counts;
/// `weighted_avg` then combines the per-POS values with `pos_weights`.
pub fn aggregate(
    per_lemma: &BTreeMap<LemmaKey, MetricMap>,
    lemma_sizes: &BTreeMap<LemmaKey, usize>,
    pos_weights: &PosWeights,
) -> Result<AggregateReport> {
    let mut sized = Vec::with_capacity(per_lemma.len());
    for (key, values) in per_lemma {
        let size = *lemma_sizes
            .get(key)
            .ok_or_else(|| WsiError::InvalidAggregate(format!("no size for lemma {key}")))?;
        if size == 0 {
            return Err(WsiError::InvalidAggregate(format!("lemma {key} has size 0")));
        }
        pos_weights.get(key.pos)?;
        sized.push((key, values, size as f64));
    }

    let all_pos = instance_weighted(sized.iter().map(|(_, v, s)| (*v, *s)));
    let mut per_pos = BTreeMap::new();
    for pos in Pos::ALL {
        let items = sized.iter().filter(|(k, _, _)| k.pos == pos);
        if items.clone().next().is_some() {
            per_pos.insert(pos, instance_weighted(items.map(|(_, v, s)| (*v, *s))));
        }
    }
    let weighted_avg = weighted_average(&per_pos, pos_weights)?;
    Ok(AggregateReport {
        per_lemma: per_lemma.clone(),
        per_pos,
        all_pos,
        weighted_avg,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one(metric: MetricName, v: f64) -> MetricMap {
        BTreeMap::from([(metric, v)])
    }

    #[test]
    fn instance_weighting() {
        let a = LemmaKey::new("a", Pos::Noun);
        let b = LemmaKey::new("b", Pos::Noun);
        let per_lemma = BTreeMap::from([
            (a.clone(), one(MetricName::B3F, 0.5)),
            (b.clone(), one(MetricName::B3F, 1.0)),
        ]);
        let sizes = BTreeMap::from([(a, 10), (b, 30)]);
        let r = aggregate(&per_lemma, &sizes, &PosWeights::semcor()).unwrap();
        assert_eq!(r.all_pos[&MetricName::B3F], 0.875);
        assert_eq!(r.per_pos[&Pos::Noun][&MetricName::B3F], 0.875);
        assert!((r.weighted_avg[&MetricName::B3F] - 0.875).abs() < 1e-15);
    }

    #[test]
    fn corpus_proportion_average_of_one_cluster_per_lemma() {
        let per_pos = BTreeMap::from([
            (Pos::Noun, one(MetricName::B3F, 75.2)),
            (Pos::Adj, one(MetricName::B3F, 80.0)),
            (Pos::Verb, one(MetricName::B3F, 65.7)),
        ]);
        let avg = weighted_average(&per_pos, &PosWeights::semcor()).unwrap();
        assert!((avg[&MetricName::B3F] - 73.4).abs() < 0.05);
    }

    #[test]
    fn single_lemma_is_its_own_aggregate() {
        let k = LemmaKey::new("x", Pos::Verb);
        let per_lemma = BTreeMap::from([(k.clone(), one(MetricName::Nmi, 0.3))]);
        let r = aggregate(&per_lemma, &BTreeMap::from([(k, 7)]), &PosWeights::semcor()).unwrap();
        assert_eq!(r.all_pos[&MetricName::Nmi], 0.3);
        assert!((r.weighted_avg[&MetricName::Nmi] - 0.3).abs() < 1e-15);
    }

    #[test]
    fn unknown_pos_is_an_error() {
        let k = LemmaKey::new("x", Pos::Verb);
        let per_lemma = BTreeMap::from([(k.clone(), one(MetricName::Nmi, 0.3))]);
        let weights = PosWeights(BTreeMap::from([(Pos::Noun, 1.0)]));
        assert!(matches!(
            aggregate(&per_lemma, &BTreeMap::from([(k, 7)]), &weights),
            Err(WsiError::UnknownPos(Pos::Verb))
        ));
    }
}
