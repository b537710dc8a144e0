//! Scoring a system clustering of a split against its gold labels.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::corpus::{GoldStandard, LabelMode, LemmaGroup, LemmaKey};
use crate::error::{Result, WsiError};
use crate::metrics::{aggregate, AggregateReport, MetricMap, PosWeights};
use crate::metrics::Flag;
use crate::metrics::{score_all, GradedClustering, MetricName};

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub aggregate: AggregateReport,
    pub flags: Vec<Flag>,
}

impl Evaluation {
    pub fn all_pos(&self, metric: MetricName) -> f64 {
        self.aggregate.all_pos.get(&metric).copied().unwrap_or(0.0)
    }
}

/// Scores one lemma on its original instances only.
pub fn score_group(
    group: &LemmaGroup,
    system: &GradedClustering,
    mode: LabelMode,
) -> Result<(MetricMap, Vec<Flag>)> {
    let gold = GoldStandard::for_group(group, mode)?.as_graded();
    let originals: Vec<&str> = group.originals().map(|i| i.id.as_str()).collect();
    let missing: Vec<String> = originals
        .iter()
        .filter(|id| system.get(id).is_none())
        .map(|s| s.to_string())
        .collect();
    if !missing.is_empty() {
        return Err(WsiError::CoverageMismatch {
            missing_in_system: missing,
            missing_in_gold: Vec::new(),
        });
    }
    let sys = system.restrict(originals.iter().copied());
    let (scores, flags) = score_all(&gold, &sys)?;
    let lemma = group.key().to_string();
    let mut out = Vec::new();
    if flags.paired_f_undefined {
        out.push(Flag {
            lemma: lemma.clone(),
            metric: MetricName::PairedF,
            reason: "ND: system has no same-cluster pairs".into(),
        });
    }
    if flags.rand_undefined {
        out.push(Flag {
            lemma,
            metric: MetricName::RandIndex,
            reason: "fewer than two instances".into(),
        });
    }
    Ok((scores, out))
}

/// Per-lemma scores, instance-weighted POS and all-POS aggregates, and the
/// POS-proportion average. Extra system ids (augmented instances) are ignored.
pub fn evaluate_groups(
    groups: &[LemmaGroup],
    system: &GradedClustering,
    mode: LabelMode,
    weights: &PosWeights,
) -> Result<Evaluation> {
    let scored: Vec<(LemmaKey, usize, MetricMap, Vec<Flag>)> = groups
        .par_iter()
        .map(|g| {
            let (scores, flags) = score_group(g, system, mode)?;
            Ok((g.key(), g.original_count(), scores, flags))
        })
        .collect::<Result<_>>()?;
    let mut per_lemma = BTreeMap::new();
    let mut sizes = BTreeMap::new();
    let mut flags = Vec::new();
    for (key, size, scores, f) in scored {
        per_lemma.insert(key.clone(), scores);
        sizes.insert(key, size);
        flags.extend(f);
    }
    flags.sort();
    Ok(Evaluation {
        aggregate: aggregate(&per_lemma, &sizes, weights)?,
        flags,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clustering::{baseline_1cpex, baseline_1cpl};
    use crate::corpus::{Instance, Origin, Pos, SenseLabel};

    fn inst(id: &str, sense: &str, origin: Origin) -> Instance {
        Instance {
            id: id.into(),
            lemma: "key".into(),
            pos: Pos::Noun,
            tokens: vec!["key".into()],
            span: [0, 0],
            gold: if sense.is_empty() { vec![] } else { vec![SenseLabel::hard(sense)] },
            origin,
        }
    }

    fn group() -> LemmaGroup {
        LemmaGroup {
            lemma: "key".into(),
            pos: Pos::Noun,
            instances: vec![
                inst("a", "s1", Origin::Original),
                inst("b", "s1", Origin::Original),
                inst("c", "s2", Origin::Original),
                inst("x", "", Origin::CorpusAug),
            ],
        }
    }

    #[test]
    fn augmented_instances_are_not_scored() {
        let g = group();
        let r = evaluate_groups(
            std::slice::from_ref(&g),
            &baseline_1cpl(&g).to_graded(),
            LabelMode::FirstSense,
            &PosWeights::semcor(),
        )
        .unwrap();
        let recall = r.aggregate.all_pos[&MetricName::B3Recall];
        assert_eq!(recall, 1.0);
        // precision over {a, b, c}: (2/3 + 2/3 + 1/3) / 3
        assert!((r.aggregate.all_pos[&MetricName::B3Precision] - 5.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn singletons_flag_paired_f() {
        let g = group();
        let r = evaluate_groups(
            std::slice::from_ref(&g),
            &baseline_1cpex(&g).to_graded(),
            LabelMode::FirstSense,
            &PosWeights::semcor(),
        )
        .unwrap();
        assert_eq!(r.flags.len(), 1);
        assert_eq!(r.flags[0].metric, MetricName::PairedF);
        assert_eq!(r.aggregate.all_pos[&MetricName::B3Precision], 1.0);
    }

    #[test]
    fn missing_original_is_a_coverage_error() {
        let g = group();
        let sys = baseline_1cpl(&g).restrict(["a", "b"]).to_graded();
        assert!(matches!(
            evaluate_groups(&[g], &sys, LabelMode::FirstSense, &PosWeights::semcor()),
            Err(WsiError::CoverageMismatch { .. })
        ));
    }
}
