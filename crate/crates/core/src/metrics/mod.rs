//! Clustering evaluation: B-Cubed, NMI, V-measure, paired F-score, Rand index,
//! their graded ("fuzzy") counterparts, instance-weighted aggregation and the
//! metric-property harness.
//!
//! Every metric is computed per lemma. Hard metrics take a hard gold standard and a
//! hard system clustering over the same instance ids; graded metrics take
//! weighted memberships on both sides and reduce exactly to their hard versions
//! when every instance carries a single label of weight 1.

mod aggregate;
mod fuzzy;
mod hard;
mod properties;
mod report;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Result, WsiError};

pub use aggregate::{aggregate, weighted_average, AggregateReport, MetricMap, PosWeights};
pub use fuzzy::{fuzzy_b_cubed, fuzzy_b_cubed_detail, fuzzy_nmi};
pub use hard::{
    b_cubed, b_cubed_labels, nmi, nmi_labels, paired_f, paired_f_labels, rand_index,
    rand_index_labels, v_measure, v_measure_labels, BCubed, PairCounts,
};
pub use properties::{
    check_property, expected_sensitivity, scenario, sensitivity_matrix, Property,
    PropertyScenario, Verdict, PROPERTY_METRICS,
};
pub use report::{EvalReport, FixedMetrics, Flag};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricName {
    B3Precision,
    B3Recall,
    B3F,
    FuzzyB3F,
    Nmi,
    FuzzyNmi,
    VMeasure,
    PairedF,
    RandIndex,
    GeoMeanFb3Nmi,
}

impl MetricName {
    pub const ALL: [MetricName; 10] = [
        MetricName::B3Precision,
        MetricName::B3Recall,
        MetricName::B3F,
        MetricName::FuzzyB3F,
        MetricName::Nmi,
        MetricName::FuzzyNmi,
        MetricName::VMeasure,
        MetricName::PairedF,
        MetricName::RandIndex,
        MetricName::GeoMeanFb3Nmi,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MetricName::B3Precision => "b3_precision",
            MetricName::B3Recall => "b3_recall",
            MetricName::B3F => "b3_f",
            MetricName::FuzzyB3F => "fuzzy_b3_f",
            MetricName::Nmi => "nmi",
            MetricName::FuzzyNmi => "fuzzy_nmi",
            MetricName::VMeasure => "v_measure",
            MetricName::PairedF => "paired_f",
            MetricName::RandIndex => "rand_index",
            MetricName::GeoMeanFb3Nmi => "geo_mean_fb3_nmi",
        }
    }
}

impl fmt::Display for MetricName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for MetricName {
    type Err = WsiError;

    fn from_str(s: &str) -> Result<Self> {
        MetricName::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| WsiError::Config(format!("unknown metric `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricValue {
    pub name: MetricName,
    pub value: f64,
}

/// Instance id to cluster id.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct HardClustering {
    assignments: BTreeMap<String, String>,
}

impl HardClustering {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn assign(&mut self, id: impl Into<String>, cluster: impl Into<String>) {
        self.assignments.insert(id.into(), cluster.into());
    }

    pub fn get(&self, id: &str) -> Option<&str> {
        self.assignments.get(id).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.assignments.iter().map(|(a, b)| (a.as_str(), b.as_str()))
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.assignments.keys().map(String::as_str)
    }

    pub fn cluster_count(&self) -> usize {
        self.assignments.values().collect::<BTreeSet<_>>().len()
    }

    /// Groups of instance ids, in order of first appearance over sorted ids.
    pub fn clusters(&self) -> Vec<Vec<&str>> {
        let mut index: HashMap<&str, usize> = HashMap::new();
        let mut out: Vec<Vec<&str>> = Vec::new();
        for (id, c) in &self.assignments {
            let k = *index.entry(c.as_str()).or_insert_with(|| {
                out.push(Vec::new());
                out.len() - 1
            });
            out[k].push(id.as_str());
        }
        out
    }

    /// Keeps only the listed ids.
    pub fn restrict<'a>(&self, ids: impl IntoIterator<Item = &'a str>) -> HardClustering {
        let mut out = HardClustering::new();
        for id in ids {
            if let Some(c) = self.assignments.get(id) {
                out.assign(id, c.clone());
            }
        }
        out
    }

    pub fn to_graded(&self) -> GradedClustering {
        let mut g = GradedClustering::default();
        for (id, c) in &self.assignments {
            g.assign(id.clone(), vec![Membership::new(c.clone(), 1.0)]);
        }
        g
    }
}

impl<I: Into<String>, C: Into<String>> FromIterator<(I, C)> for HardClustering {
    fn from_iter<T: IntoIterator<Item = (I, C)>>(iter: T) -> Self {
        let mut h = HardClustering::new();
        for (i, c) in iter {
            h.assign(i, c);
        }
        h
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Membership {
    #[serde(rename = "c")]
    pub cluster: String,
    #[serde(rename = "w")]
    pub weight: f64,
}

impl Membership {
    pub fn new(cluster: impl Into<String>, weight: f64) -> Self {
        Membership {
            cluster: cluster.into(),
            weight,
        }
    }
}

/// Instance id to a non-empty list of weighted cluster memberships.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GradedClustering {
    memberships: BTreeMap<String, Vec<Membership>>,
}

impl GradedClustering {
    pub fn assign(&mut self, id: impl Into<String>, memberships: Vec<Membership>) {
        self.memberships.insert(id.into(), memberships);
    }

    pub fn get(&self, id: &str) -> Option<&[Membership]> {
        self.memberships.get(id).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.memberships.len()
    }

    pub fn is_empty(&self) -> bool {
        self.memberships.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[Membership])> {
        self.memberships
            .iter()
            .map(|(a, b)| (a.as_str(), b.as_slice()))
    }

    pub fn restrict<'a>(&self, ids: impl IntoIterator<Item = &'a str>) -> GradedClustering {
        let mut out = GradedClustering::default();
        for id in ids {
            if let Some(m) = self.memberships.get(id) {
                out.assign(id, m.clone());
            }
        }
        out
    }

    /// Highest-weight membership per instance; ties go to the first listed.
    pub fn harden(&self) -> HardClustering {
        let mut h = HardClustering::new();
        for (id, ms) in &self.memberships {
            let mut best: Option<&Membership> = None;
            for m in ms {
                if best.is_none_or(|b| m.weight > b.weight) {
                    best = Some(m);
                }
            }
            if let Some(b) = best {
                h.assign(id.clone(), b.cluster.clone());
            }
        }
        h
    }

    pub fn validate(&self) -> Result<()> {
        for (id, ms) in &self.memberships {
            if ms.is_empty() {
                return Err(WsiError::InvalidClustering(format!(
                    "instance `{id}` has no cluster membership"
                )));
            }
            if let Some(m) = ms.iter().find(|m| !(m.weight > 0.0 && m.weight.is_finite())) {
                return Err(WsiError::InvalidClustering(format!(
                    "instance `{id}` has non-positive weight {} for `{}`",
                    m.weight, m.cluster
                )));
            }
        }
        Ok(())
    }
}

fn check_coverage<'a>(
    gold: impl Iterator<Item = &'a str>,
    system: impl Iterator<Item = &'a str>,
) -> Result<Vec<&'a str>> {
    let gold: BTreeSet<&str> = gold.collect();
    let system: BTreeSet<&str> = system.collect();
    if gold != system {
        return Err(WsiError::CoverageMismatch {
            missing_in_system: gold.difference(&system).map(|s| s.to_string()).collect(),
            missing_in_gold: system.difference(&gold).map(|s| s.to_string()).collect(),
        });
    }
    if gold.is_empty() {
        return Err(WsiError::InvalidClustering("empty instance set".into()));
    }
    Ok(gold.into_iter().collect())
}

/// Maps opaque label strings to dense indices in order of first appearance.
#[derive(Default)]
struct Interner<'a> {
    index: HashMap<&'a str, usize>,
}

impl<'a> Interner<'a> {
    fn get(&mut self, label: &'a str) -> usize {
        let next = self.index.len();
        *self.index.entry(label).or_insert(next)
    }
}

/// Aligns gold and system over the sorted common id set as dense label vectors.
pub(crate) fn align_hard(
    gold: &HardClustering,
    system: &HardClustering,
) -> Result<(Vec<usize>, Vec<usize>)> {
    let ids = check_coverage(gold.ids(), system.ids())?;
    let mut gi = Interner::default();
    let mut si = Interner::default();
    let g = ids.iter().map(|id| gi.get(gold.get(id).unwrap())).collect();
    let s = ids.iter().map(|id| si.get(system.get(id).unwrap())).collect();
    Ok((g, s))
}

/// Per-instance `(label index, weight)` lists, duplicates summed, sorted by label.
pub(crate) type WeightedLabels = Vec<Vec<(usize, f64)>>;

pub(crate) fn align_graded(
    gold: &GradedClustering,
    system: &GradedClustering,
) -> Result<(WeightedLabels, WeightedLabels)> {
    gold.validate()?;
    system.validate()?;
    let ids = check_coverage(
        gold.memberships.keys().map(String::as_str),
        system.memberships.keys().map(String::as_str),
    )?;
    let mut gi = Interner::default();
    let mut si = Interner::default();
    let g = ids
        .iter()
        .map(|id| weighted(&gold.memberships[*id], &mut gi))
        .collect();
    let s = ids
        .iter()
        .map(|id| weighted(&system.memberships[*id], &mut si))
        .collect();
    Ok((g, s))
}

fn weighted<'a>(ms: &'a [Membership], interner: &mut Interner<'a>) -> Vec<(usize, f64)> {
    let mut out: Vec<(usize, f64)> = Vec::with_capacity(ms.len());
    for m in ms {
        let label = interner.get(&m.cluster);
        match out.iter_mut().find(|(l, _)| *l == label) {
            Some(entry) => entry.1 += m.weight,
            None => out.push((label, m.weight)),
        }
    }
    out.sort_by_key(|(l, _)| *l);
    out
}

/// Geometric mean of fuzzy B-Cubed F and fuzzy NMI.
pub fn geo_mean(fb3: f64, nmi: f64) -> f64 {
    (fb3.clamp(0.0, 1.0) * nmi.clamp(0.0, 1.0)).sqrt()
}

pub(crate) fn harmonic(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Degeneracy markers raised while scoring one lemma.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScoreFlags {
    pub paired_f_undefined: bool,
    pub rand_undefined: bool,
}

/// All ten metrics for one lemma. Hard metrics use the hardened views of both sides.
pub fn score_all(
    gold: &GradedClustering,
    system: &GradedClustering,
) -> Result<(BTreeMap<MetricName, f64>, ScoreFlags)> {
    let hard_gold = gold.harden();
    let hard_sys = system.harden();
    let (g, s) = align_hard(&hard_gold, &hard_sys)?;
    let b3 = b_cubed_labels(&g, &s);
    let pf = paired_f_labels(&g, &s);
    let (rand, rand_degenerate) = rand_index_labels(&g, &s);
    let fb3 = fuzzy_b_cubed(gold, system)?;
    let fnmi = fuzzy_nmi(gold, system)?;
    let mut out = BTreeMap::new();
    out.insert(MetricName::B3Precision, b3.precision);
    out.insert(MetricName::B3Recall, b3.recall);
    out.insert(MetricName::B3F, b3.f);
    out.insert(MetricName::FuzzyB3F, fb3);
    out.insert(MetricName::Nmi, nmi_labels(&g, &s));
    out.insert(MetricName::FuzzyNmi, fnmi);
    out.insert(MetricName::VMeasure, v_measure_labels(&g, &s));
    out.insert(MetricName::PairedF, pf.f());
    out.insert(MetricName::RandIndex, rand);
    out.insert(MetricName::GeoMeanFb3Nmi, geo_mean(fb3, fnmi));
    Ok((
        out,
        ScoreFlags {
            paired_f_undefined: pf.degenerate(),
            rand_undefined: rand_degenerate,
        },
    ))
}
