//! Metric sensitivity to homogeneity, completeness, rag bag and size-vs-quantity.
//!
//! Each property is realized as a 20-item scenario: a gold standard and two system
//! clusterings, one that the property says is better than the other. A metric is
//! sensitive to the property iff it scores the better clustering strictly higher.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::{align_hard, b_cubed_labels, nmi_labels, paired_f_labels, rand_index_labels, v_measure_labels};
use super::{HardClustering, MetricName};
use crate::error::{Result, WsiError};

/// Differences below this are treated as ties.
const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Property {
    Homogeneity,
    Completeness,
    RagBag,
    SizeVsQuantity,
}

impl Property {
    pub const ALL: [Property; 4] = [
        Property::Homogeneity,
        Property::Completeness,
        Property::RagBag,
        Property::SizeVsQuantity,
    ];

    pub fn short(self) -> &'static str {
        match self {
            Property::Homogeneity => "H",
            Property::Completeness => "C",
            Property::RagBag => "RB",
            Property::SizeVsQuantity => "SQ",
        }
    }
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Sensitive,
    NotSensitive,
}

impl Verdict {
    pub fn mark(self) -> &'static str {
        match self {
            Verdict::Sensitive => "✓",
            Verdict::NotSensitive => "✗",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropertyScenario {
    pub property: Property,
    pub gold: HardClustering,
    pub better: HardClustering,
    pub worse: HardClustering,
}

/// Metrics covered by the sensitivity matrix, in row order.
pub const PROPERTY_METRICS: [MetricName; 7] = [
    MetricName::RandIndex,
    MetricName::PairedF,
    MetricName::Nmi,
    MetricName::VMeasure,
    MetricName::B3Precision,
    MetricName::B3Recall,
    MetricName::B3F,
];

/// Builds a scenario from `(gold class, better cluster, worse cluster)` per item.
fn build(property: Property, items: &[(&str, &str, &str)]) -> PropertyScenario {
    let mut gold = HardClustering::new();
    let mut better = HardClustering::new();
    let mut worse = HardClustering::new();
    for (i, (g, b, w)) in items.iter().enumerate() {
        let id = format!("i{i:02}");
        gold.assign(id.clone(), *g);
        better.assign(id.clone(), *b);
        worse.assign(id, *w);
    }
    PropertyScenario {
        property,
        gold,
        better,
        worse,
    }
}

fn repeat<'a>(n: usize, item: (&'a str, &'a str, &'a str)) -> impl Iterator<Item = (&'a str, &'a str, &'a str)> {
    std::iter::repeat_n(item, n)
}

/// The default 20-item scenario for a property.
///
/// - H: a cluster mixing two whole classes (worse) versus the two classes in
///   separate clusters (better).
/// - C: one class split across two pure clusters (worse) versus kept together
///   (better); the rest of the items share one mixed cluster.
/// - RB: a singleton-class item added to a clean cluster (worse) versus to an
///   equally sized mixed cluster (better).
/// - SQ: one item split off a 7-item cluster (better) versus six 2-item clusters
///   each split into singletons (worse).
pub fn scenario(property: Property) -> PropertyScenario {
    let mut items: Vec<(&str, &str, &str)> = Vec::with_capacity(20);
    match property {
        Property::Homogeneity => {
            items.extend(repeat(5, ("A", "A", "AB")));
            items.extend(repeat(5, ("B", "B", "AB")));
            items.extend(repeat(5, ("C", "C", "C")));
            items.extend(repeat(5, ("D", "D", "D")));
        }
        Property::Completeness => {
            items.extend(repeat(2, ("A", "A", "A1")));
            items.extend(repeat(2, ("A", "A", "A2")));
            for class in ["B", "C", "D", "E"] {
                items.extend(repeat(4, (class, "rest", "rest")));
            }
        }
        Property::RagBag => {
            items.extend(repeat(5, ("Q", "clean", "clean")));
            items.extend(repeat(3, ("R", "mixed", "mixed")));
            items.extend(repeat(2, ("T", "mixed", "mixed")));
            items.extend(repeat(9, ("U", "big", "big")));
            items.push(("S", "mixed", "clean"));
        }
        Property::SizeVsQuantity => {
            items.extend(repeat(6, ("A", "A", "A")));
            items.push(("A", "A-split", "A"));
            let pairs = [
                ("P1", "P1a", "P1b"),
                ("P2", "P2a", "P2b"),
                ("P3", "P3a", "P3b"),
                ("P4", "P4a", "P4b"),
                ("P5", "P5a", "P5b"),
                ("P6", "P6a", "P6b"),
            ];
            for (class, first, second) in pairs {
                items.push((class, class, first));
                items.push((class, class, second));
            }
            items.push(("Z", "Z", "Z"));
        }
    }
    build(property, &items)
}

fn metric_on(metric: MetricName, gold: &[usize], system: &[usize]) -> Result<f64> {
    Ok(match metric {
        MetricName::RandIndex => rand_index_labels(gold, system).0,
        MetricName::PairedF => paired_f_labels(gold, system).f(),
        MetricName::Nmi | MetricName::FuzzyNmi => nmi_labels(gold, system),
        MetricName::VMeasure => v_measure_labels(gold, system),
        MetricName::B3Precision => b_cubed_labels(gold, system).precision,
        MetricName::B3Recall => b_cubed_labels(gold, system).recall,
        MetricName::B3F | MetricName::FuzzyB3F => b_cubed_labels(gold, system).f,
        MetricName::GeoMeanFb3Nmi => {
            super::geo_mean(b_cubed_labels(gold, system).f, nmi_labels(gold, system))
        }
    })
}

pub fn check_property(metric: MetricName, scenario: &PropertyScenario) -> Result<Verdict> {
    if scenario.better == scenario.worse {
        return Err(WsiError::MalformedScenario(format!(
            "{}: better and worse clusterings are identical",
            scenario.property
        )));
    }
    let malformed = |e: WsiError| WsiError::MalformedScenario(format!("{}: {e}", scenario.property));
    let (g_b, better) = align_hard(&scenario.gold, &scenario.better).map_err(malformed)?;
    let (g_w, worse) = align_hard(&scenario.gold, &scenario.worse).map_err(malformed)?;
    let better_score = metric_on(metric, &g_b, &better)?;
    let worse_score = metric_on(metric, &g_w, &worse)?;
    Ok(if better_score > worse_score + TIE_TOLERANCE {
        Verdict::Sensitive
    } else {
        Verdict::NotSensitive
    })
}

/// Reference sensitivity matrix (rows as in [`PROPERTY_METRICS`], columns H, C, RB, SQ).
pub fn expected_sensitivity(metric: MetricName) -> Option<[Verdict; 4]> {
    use Verdict::{NotSensitive as N, Sensitive as S};
    Some(match metric {
        MetricName::RandIndex => [S, S, N, N],
        MetricName::PairedF => [S, S, N, N],
        MetricName::Nmi => [S, N, N, S],
        MetricName::VMeasure => [S, S, N, S],
        MetricName::B3Precision => [S, N, S, N],
        MetricName::B3Recall => [N, S, N, S],
        MetricName::B3F => [S, S, S, S],
        _ => return None,
    })
}

/// Verdicts of every metric in [`PROPERTY_METRICS`] on the default scenarios.
pub fn sensitivity_matrix() -> Result<Vec<(MetricName, [Verdict; 4])>> {
    let scenarios = Property::ALL.map(scenario);
    PROPERTY_METRICS
        .iter()
        .map(|&m| {
            let mut row = [Verdict::NotSensitive; 4];
            for (cell, sc) in row.iter_mut().zip(&scenarios) {
                *cell = check_property(m, sc)?;
            }
            Ok((m, row))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scenarios_have_twenty_items() {
        for p in Property::ALL {
            let s = scenario(p);
            assert_eq!(s.gold.len(), 20, "{p}");
            assert_eq!(s.better.len(), 20, "{p}");
            assert_eq!(s.worse.len(), 20, "{p}");
        }
    }

    #[test]
    fn matrix_matches_reference() {
        for (metric, row) in sensitivity_matrix().unwrap() {
            assert_eq!(Some(row), expected_sensitivity(metric), "{metric}");
        }
    }

    #[test]
    fn only_b_cubed_f_is_sensitive_to_all_four() {
        let all_four: Vec<_> = sensitivity_matrix()
            .unwrap()
            .into_iter()
            .filter(|(_, row)| row.iter().all(|v| *v == Verdict::Sensitive))
            .map(|(m, _)| m)
            .collect();
        assert_eq!(all_four, vec![MetricName::B3F]);
    }

    #[test]
    fn identical_systems_are_malformed() {
        let mut s = scenario(Property::RagBag);
        s.worse = s.better.clone();
        assert!(matches!(
            check_property(MetricName::B3F, &s),
            Err(WsiError::MalformedScenario(_))
        ));
    }

    #[test]
    fn coverage_gap_is_malformed() {
        let mut s = scenario(Property::Homogeneity);
        s.worse = s.worse.restrict(["i00", "i01"]);
        assert!(matches!(
            check_property(MetricName::Nmi, &s),
            Err(WsiError::MalformedScenario(_))
        ));
    }
}
