//! Bootstrap comparison of two deterministic clustering pipelines.
//!
//! Each resample draws as many instances as the split has, with replacement,
//! from all original instances. Drawn instances stay with their lemma; a lemma
//! drawn zero times is left out of that resample. Both pipelines re-cluster every
//! resampled lemma from scratch.

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::clustering::{cluster_lemma, Algorithm, ClusteringConfig, EmbeddingStore};
use crate::corpus::{Instance, LabelMode, LemmaGroup};
use crate::error::{Result, WsiError};
use crate::evaluate::evaluate_groups;
use crate::metrics::{GradedClustering, HardClustering, MetricName, PosWeights};

/// How the p-value is computed from the resample differences.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecisionRule {
    /// Share of resamples with `Δ_s ≤ 2·Δ_obs`.
    #[default]
    TwiceObserved,
    /// Share of resamples with `Δ_s ≤ 0` (one-sided percentile bootstrap).
    Percentile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BootstrapConfig {
    pub resamples: usize,
    pub seed: u64,
    pub alpha: f64,
    pub metric: MetricName,
    pub rule: DecisionRule,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        BootstrapConfig {
            resamples: 1000,
            seed: 0,
            alpha: 0.05,
            metric: MetricName::B3F,
            rule: DecisionRule::TwiceObserved,
        }
    }
}

impl BootstrapConfig {
    pub fn validate(&self) -> Result<()> {
        if self.resamples == 0 {
            return Err(WsiError::Config("resamples must be at least 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(WsiError::Config("alpha must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

/// A clustering procedure that can be re-run on resampled lemma groups.
///
/// Resampled groups may hold several copies of an instance under fresh ids;
/// `source_ids[i]` is the original id of `group.instances[i]`.
pub trait ClusterPipeline: Sync {
    fn name(&self) -> String;
    fn deterministic(&self) -> bool;
    fn cluster(&self, group: &LemmaGroup, source_ids: &[String]) -> Result<HardClustering>;
}

/// One of the two trivial baselines.
pub struct BaselinePipeline(pub Algorithm);

impl ClusterPipeline for BaselinePipeline {
    fn name(&self) -> String {
        format!("{:?}", self.0)
    }

    fn deterministic(&self) -> bool {
        true
    }

    fn cluster(&self, group: &LemmaGroup, _: &[String]) -> Result<HardClustering> {
        let config = ClusteringConfig {
            algorithm: self.0,
            ..Default::default()
        };
        match self.0 {
            Algorithm::OneClusterPerLemma | Algorithm::OneClusterPerInstance => cluster_lemma(group, None, &config, None),
            other => Err(WsiError::Config(format!("{other:?} is not a baseline"))),
        }
    }
}

/// Clusters by first gold sense.
pub struct GoldPipeline;

impl ClusterPipeline for GoldPipeline {
    fn name(&self) -> String {
        "gold".into()
    }

    fn deterministic(&self) -> bool {
        true
    }

    fn cluster(&self, group: &LemmaGroup, _: &[String]) -> Result<HardClustering> {
        group
            .instances
            .iter()
            .map(|i| {
                let sense = i.gold.first().ok_or_else(|| WsiError::MissingGold(i.id.clone()))?;
                Ok((i.id.clone(), sense.sense.clone()))
            })
            .collect()
    }
}

/// Clustering of embedding vectors looked up by source id.
pub struct EmbeddingPipeline<'a> {
    pub store: &'a EmbeddingStore,
    pub config: ClusteringConfig,
}

impl ClusterPipeline for EmbeddingPipeline<'_> {
    fn name(&self) -> String {
        format!("{}@{}:{:?}", self.store.model_id, self.store.layer, self.config.algorithm)
    }

    fn deterministic(&self) -> bool {
        self.config.algorithm != Algorithm::Xmeans
    }

    fn cluster(&self, group: &LemmaGroup, source_ids: &[String]) -> Result<HardClustering> {
        let mut points = self.store.points(source_ids.iter().map(String::as_str))?;
        points.ids = group.instances.iter().map(|i| i.id.clone()).collect();
        let mut local = EmbeddingStore::new(self.store.model_id.clone(), self.store.layer, points.dim)?;
        for (i, id) in points.ids.iter().enumerate() {
            let row: Vec<f32> = points.row(i).iter().map(|&v| v as f32).collect();
            local.insert(id.clone(), &row)?;
        }
        cluster_lemma(group, Some(&local), &self.config, None)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapResult {
    pub config: BootstrapConfig,
    pub system_a: String,
    pub system_b: String,
    pub score_a: f64,
    pub score_b: f64,
    pub delta_obs: f64,
    pub delta_samples: Vec<f64>,
    pub p_value: f64,
    pub reject: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

pub fn histogram(values: &[f64], bins: usize) -> Histogram {
    let bins = bins.max(1);
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = if !lo.is_finite() {
        (0.0, 1.0)
    } else if lo == hi {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    };
    let width = (hi - lo) / bins as f64;
    let edges = (0..=bins).map(|i| lo + width * i as f64).collect();
    let mut counts = vec![0; bins];
    for &v in values {
        let b = (((v - lo) / width) as usize).min(bins - 1);
        counts[b] += 1;
    }
    Histogram { edges, counts }
}

impl BootstrapResult {
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "config": self.config,
            "system_a": self.system_a,
            "system_b": self.system_b,
            "score_a": self.score_a,
            "score_b": self.score_b,
            "delta_obs": self.delta_obs,
            "p_value": self.p_value,
            "reject": self.reject,
            "histogram": histogram(&self.delta_samples, 50),
        })
    }
}

/// Resample `r`: instance draws with replacement, regrouped by lemma. Returns the
/// groups and, per group, the source id of each instance.
pub fn resample(groups: &[LemmaGroup], seed: u64, r: u64) -> Vec<(LemmaGroup, Vec<String>)> {
    let pool: Vec<(usize, &Instance)> = groups
        .iter()
        .enumerate()
        .flat_map(|(g, group)| group.originals().map(move |i| (g, i)))
        .collect();
    let n = pool.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(r);
    let mut draws: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for _ in 0..n {
        let k = rng.gen_range(0..n);
        draws.entry(pool[k].0).or_default().push(k);
    }
    let mut out = Vec::with_capacity(draws.len());
    let mut copies: BTreeMap<usize, usize> = BTreeMap::new();
    for (g, mut picks) in draws {
        picks.sort_unstable();
        let mut instances = Vec::with_capacity(picks.len());
        let mut sources = Vec::with_capacity(picks.len());
        for k in picks {
            let inst = pool[k].1;
            let c = copies.entry(k).or_insert(0);
            *c += 1;
            instances.push(Instance {
                id: format!("{}#{}", inst.id, c),
                ..inst.clone()
            });
            sources.push(inst.id.clone());
        }
        out.push((
            LemmaGroup {
                lemma: groups[g].lemma.clone(),
                pos: groups[g].pos,
                instances,
            },
            sources,
        ));
    }
    debug_assert_eq!(out.iter().map(|(g, _)| g.len()).sum::<usize>(), n);
    out
}

fn score(
    pipeline: &dyn ClusterPipeline,
    groups: &[(LemmaGroup, Vec<String>)],
    metric: MetricName,
) -> Result<f64> {
    let mut system = GradedClustering::default();
    for (group, sources) in groups {
        for (id, cluster) in pipeline.cluster(group, sources)?.iter() {
            system.assign(id, vec![crate::metrics::Membership::new(cluster, 1.0)]);
        }
    }
    let plain: Vec<LemmaGroup> = groups.iter().map(|(g, _)| g.clone()).collect();
    let eval = evaluate_groups(&plain, &system, LabelMode::FirstSense, &PosWeights::semcor())?;
    Ok(eval.all_pos(metric))
}

pub fn bootstrap_compare(
    groups: &[LemmaGroup],
    system_a: &dyn ClusterPipeline,
    system_b: &dyn ClusterPipeline,
    config: &BootstrapConfig,
) -> Result<BootstrapResult> {
    config.validate()?;
    for s in [system_a, system_b] {
        if !s.deterministic() {
            return Err(WsiError::NonDeterministic(s.name()));
        }
    }
    let originals: Vec<(LemmaGroup, Vec<String>)> = groups
        .iter()
        .map(|g| {
            let only = LemmaGroup {
                instances: g.originals().cloned().collect(),
                ..g.clone()
            };
            let ids = only.instances.iter().map(|i| i.id.clone()).collect();
            (only, ids)
        })
        .collect();
    let score_a = score(system_a, &originals, config.metric)?;
    let score_b = score(system_b, &originals, config.metric)?;
    let delta_obs = score_a - score_b;

    let delta_samples: Vec<f64> = (0..config.resamples as u64)
        .into_par_iter()
        .map(|r| {
            let sample = resample(groups, config.seed, r);
            Ok(score(system_a, &sample, config.metric)? - score(system_b, &sample, config.metric)?)
        })
        .collect::<Result<_>>()?;

    let hits = match config.rule {
        DecisionRule::TwiceObserved => delta_samples.iter().filter(|&&d| d <= 2.0 * delta_obs).count(),
        DecisionRule::Percentile => delta_samples.iter().filter(|&&d| d <= 0.0).count(),
    };
    let p_value = hits as f64 / config.resamples as f64;
    Ok(BootstrapResult {
        config: config.clone(),
        system_a: system_a.name(),
        system_b: system_b.name(),
        score_a,
        score_b,
        delta_obs,
        delta_samples,
        p_value,
        reject: p_value < config.alpha,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Origin, Pos, SenseLabel};

    fn split(lemmas: usize, per: usize) -> Vec<LemmaGroup> {
        (0..lemmas)
            .map(|l| LemmaGroup {
                lemma: format!("w{l}"),
                pos: Pos::ALL[l % 3],
                instances: (0..per)
                    .map(|i| Instance {
                        id: format!("w{l}_{i}"),
                        lemma: format!("w{l}"),
                        pos: Pos::ALL[l % 3],
                        tokens: vec![format!("w{l}")],
                        span: [0, 0],
                        gold: vec![SenseLabel::hard(if i % 2 == 0 { "a" } else { "b" })],
                        origin: Origin::Original,
                    })
                    .collect(),
            })
            .collect()
    }

    #[test]
    fn resample_keeps_size_and_lemmas() {
        let groups = split(4, 5);
        let s = resample(&groups, 9, 3);
        assert_eq!(s.iter().map(|(g, _)| g.len()).sum::<usize>(), 20);
        for (g, sources) in &s {
            assert!(sources.iter().all(|id| id.starts_with(&format!("{}_", g.lemma))));
        }
        assert_eq!(s, resample(&groups, 9, 3));
        assert_ne!(s, resample(&groups, 9, 4));
    }

    #[test]
    fn self_comparison_has_p_one() {
        let groups = split(6, 6);
        let config = BootstrapConfig {
            resamples: 50,
            ..Default::default()
        };
        let pipe = BaselinePipeline(Algorithm::OneClusterPerLemma);
        let r = bootstrap_compare(&groups, &pipe, &pipe, &config).unwrap();
        assert_eq!(r.delta_obs, 0.0);
        assert_eq!(r.p_value, 1.0);
        assert!(!r.reject);
    }

    #[test]
    fn single_resample_gives_zero_or_one() {
        let groups = split(3, 4);
        let config = BootstrapConfig {
            resamples: 1,
            ..Default::default()
        };
        let r = bootstrap_compare(&groups, &GoldPipeline, &BaselinePipeline(Algorithm::OneClusterPerInstance), &config).unwrap();
        assert!(r.p_value == 0.0 || r.p_value == 1.0);
    }

    #[test]
    fn gold_versus_singletons() {
        let groups = split(10, 8);
        let base = BootstrapConfig {
            resamples: 200,
            seed: 1,
            ..Default::default()
        };
        let singletons = BaselinePipeline(Algorithm::OneClusterPerInstance);
        let twice = bootstrap_compare(&groups, &GoldPipeline, &singletons, &base).unwrap();
        assert!(twice.delta_obs > 0.3);
        // Every resample difference stays below twice the observed one.
        assert_eq!(twice.p_value, 1.0);
        let pct = bootstrap_compare(
            &groups,
            &GoldPipeline,
            &singletons,
            &BootstrapConfig {
                rule: DecisionRule::Percentile,
                ..base
            },
        )
        .unwrap();
        assert_eq!(pct.p_value, 0.0);
        assert!(pct.reject);
    }

    #[test]
    fn nondeterministic_pipeline_rejected() {
        let store = EmbeddingStore::new("m", 0, 1).unwrap();
        let x = EmbeddingPipeline {
            store: &store,
            config: ClusteringConfig {
                algorithm: Algorithm::Xmeans,
                ..Default::default()
            },
        };
        let groups = split(1, 2);
        assert!(matches!(
            bootstrap_compare(&groups, &x, &GoldPipeline, &BootstrapConfig::default()),
            Err(WsiError::NonDeterministic(_))
        ));
    }

    #[test]
    fn histogram_bins() {
        let h = histogram(&[0.0, 0.5, 1.0], 2);
        assert_eq!(h.counts, vec![1, 2]);
        assert_eq!(h.edges, vec![0.0, 0.5, 1.0]);
        let flat = histogram(&[0.0; 4], 50);
        assert_eq!(flat.counts.iter().sum::<usize>(), 4);
        assert_eq!(flat.edges.len(), 51);
    }
}
