//! Per-lemma sense induction from embedding vectors.

pub mod agglomerative;
pub mod distance;
pub mod embeddings;
pub mod silhouette;
pub mod xmeans;

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use agglomerative::{agglomerate, Dendrogram, Merge};
pub use distance::DistanceMatrix;
pub use embeddings::{list_layers, EmbeddingStore, Points};
pub use xmeans::XMeansConfig;

use crate::corpus::LemmaGroup;
use crate::error::{Result, WsiError};
use crate::lexicon::{Lexicon, LexiconEntry};
use crate::metrics::{GradedClustering, HardClustering, Membership};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    AgSilhouette,
    AgFixedK,
    Xmeans,
    #[serde(alias = "1cpl")]
    OneClusterPerLemma,
    #[serde(alias = "1cpex")]
    OneClusterPerInstance,
}

impl std::str::FromStr for Algorithm {
    type Err = WsiError;

    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| WsiError::Config(format!("unknown algorithm `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Linkage {
    #[default]
    Average,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Distance {
    #[default]
    Euclidean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusteringConfig {
    pub algorithm: Algorithm,
    pub k_min: usize,
    pub k_max: usize,
    pub linkage: Linkage,
    pub distance: Distance,
    pub xmeans_k_min: usize,
    pub xmeans_k_max: usize,
    pub xmeans_tolerance: f64,
    /// Explicit must-link pairs by instance id.
    pub must_link: Vec<(String, String)>,
    /// Link lexicon exemplars that share a sense.
    pub lexicon_must_link: bool,
    /// Cluster count for `ag_fixed_k` when no lexicon entry is given.
    pub fixed_k: Option<usize>,
    pub seed: u64,
}

impl Default for ClusteringConfig {
    fn default() -> Self {
        ClusteringConfig {
            algorithm: Algorithm::AgSilhouette,
            k_min: 2,
            k_max: 15,
            linkage: Linkage::Average,
            distance: Distance::Euclidean,
            xmeans_k_min: 1,
            xmeans_k_max: 15,
            xmeans_tolerance: 0.003,
            must_link: Vec::new(),
            lexicon_must_link: false,
            fixed_k: None,
            seed: 0,
        }
    }
}

impl ClusteringConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k_min > self.k_max {
            return Err(WsiError::Config(format!("k_min {} > k_max {}", self.k_min, self.k_max)));
        }
        if self.xmeans_k_min > self.xmeans_k_max {
            return Err(WsiError::Config("xmeans_k_min > xmeans_k_max".into()));
        }
        if !(self.xmeans_tolerance > 0.0) {
            return Err(WsiError::Config("xmeans_tolerance must be positive".into()));
        }
        Ok(())
    }

    pub fn xmeans(&self) -> XMeansConfig {
        XMeansConfig {
            k_min: self.xmeans_k_min,
            k_max: self.xmeans_k_max,
            tolerance: self.xmeans_tolerance,
            ..XMeansConfig::default()
        }
    }
}

fn labels_to_clustering(ids: &[String], labels: &[usize]) -> HardClustering {
    ids.iter()
        .zip(labels)
        .map(|(id, l)| (id.clone(), l.to_string()))
        .collect()
}

fn must_link_indices(points: &Points, pairs: &[(String, String)]) -> Result<Vec<(usize, usize)>> {
    let index: HashMap<&str, usize> = points.ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
    pairs
        .iter()
        .map(|(a, b)| match (index.get(a.as_str()), index.get(b.as_str())) {
            (Some(&i), Some(&j)) => Ok((i, j)),
            _ => Err(WsiError::InvalidClustering(format!(
                "must-link pair ({a}, {b}) names an unknown instance"
            ))),
        })
        .collect()
}

fn constrained_distances(points: &Points, must_link: &[(String, String)]) -> Result<DistanceMatrix> {
    let mut dist = DistanceMatrix::euclidean(points);
    dist.apply_must_link(&must_link_indices(points, must_link)?)?;
    Ok(dist)
}

/// Average-linkage clustering into exactly `k` clusters on the must-link-modified
/// euclidean distances. Cluster names are `"0"`, `"1"`, … by first appearance.
pub fn ag_cluster(points: &Points, k: usize, must_link: &[(String, String)]) -> Result<HardClustering> {
    let n = points.len();
    if n == 0 || k == 0 || k > n {
        return Err(WsiError::InvalidClustering(format!("cannot form {k} clusters from {n} points")));
    }
    let dist = constrained_distances(points, must_link)?;
    Ok(labels_to_clustering(&points.ids, &agglomerative::ag_labels(&dist, k)))
}

/// Silhouette-selected cluster count over `k_min..=n−1`, capped at `k_max`.
pub fn select_k_silhouette(
    points: &Points,
    must_link: &[(String, String)],
    k_min: usize,
    k_max: usize,
) -> Result<usize> {
    if points.len() < 2 {
        return Err(WsiError::InvalidClustering("silhouette needs at least 2 points".into()));
    }
    let dist = constrained_distances(points, must_link)?;
    Ok(silhouette::select_k(&dist, &agglomerate(&dist), k_min, k_max))
}

/// AG with silhouette-selected k, sharing one dendrogram for selection and cut.
pub fn ag_silhouette(
    points: &Points,
    must_link: &[(String, String)],
    k_min: usize,
    k_max: usize,
) -> Result<HardClustering> {
    if points.is_empty() {
        return Err(WsiError::InvalidClustering("no points".into()));
    }
    let dist = constrained_distances(points, must_link)?;
    let dendrogram = agglomerate(&dist);
    let k = silhouette::select_k(&dist, &dendrogram, k_min, k_max);
    Ok(labels_to_clustering(&points.ids, &dendrogram.cut(k)))
}

pub fn xmeans(points: &Points, config: &XMeansConfig, seed: u64) -> Result<HardClustering> {
    if points.is_empty() {
        return Err(WsiError::InvalidClustering("no points".into()));
    }
    Ok(labels_to_clustering(&points.ids, &xmeans::xmeans_labels(points, config, seed)))
}

pub fn baseline_1cpl(group: &LemmaGroup) -> HardClustering {
    group.instances.iter().map(|i| (i.id.clone(), "0".to_string())).collect()
}

pub fn baseline_1cpex(group: &LemmaGroup) -> HardClustering {
    group
        .instances
        .iter()
        .enumerate()
        .map(|(n, i)| (i.id.clone(), n.to_string()))
        .collect()
}

/// Lexicon information for one lemma: its entry and the lexicon sense of each
/// exemplar instance in the group.
#[derive(Debug, Clone, Copy)]
pub struct LexiconGuidance<'a> {
    pub entry: &'a LexiconEntry,
    pub exemplar_senses: &'a BTreeMap<String, String>,
}

/// Every pair of exemplar instances in `group` that share a lexicon sense.
pub fn lexicon_must_links(group: &LemmaGroup, exemplar_senses: &BTreeMap<String, String>) -> Vec<(String, String)> {
    let mut by_sense: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for inst in &group.instances {
        if let Some(sense) = exemplar_senses.get(&inst.id) {
            by_sense.entry(sense.as_str()).or_default().push(inst.id.as_str());
        }
    }
    let mut pairs = Vec::new();
    for ids in by_sense.values() {
        for (i, a) in ids.iter().enumerate() {
            for b in &ids[i + 1..] {
                pairs.push((a.to_string(), b.to_string()));
            }
        }
    }
    pairs
}

/// Clusters every instance of `group` (original and augmented) per `config`.
pub fn cluster_lemma(
    group: &LemmaGroup,
    store: Option<&EmbeddingStore>,
    config: &ClusteringConfig,
    lexicon: Option<LexiconGuidance<'_>>,
) -> Result<HardClustering> {
    config.validate()?;
    match config.algorithm {
        Algorithm::OneClusterPerLemma => return Ok(baseline_1cpl(group)),
        Algorithm::OneClusterPerInstance => return Ok(baseline_1cpex(group)),
        _ => {}
    }
    let store = store.ok_or_else(|| WsiError::Config("clustering needs an embedding store".into()))?;
    let points = store.points(group.instances.iter().map(|i| i.id.as_str()))?;
    if points.is_empty() {
        return Ok(HardClustering::new());
    }

    let mut must_link = config.must_link.clone();
    if config.lexicon_must_link {
        let guidance = lexicon.ok_or_else(|| WsiError::LexiconRequired(group.key().to_string()))?;
        must_link.extend(lexicon_must_links(group, guidance.exemplar_senses));
    }
    let group_ids: std::collections::HashSet<&str> = points.ids.iter().map(String::as_str).collect();
    must_link.retain(|(a, b)| group_ids.contains(a.as_str()) && group_ids.contains(b.as_str()));

    match config.algorithm {
        Algorithm::AgSilhouette => ag_silhouette(&points, &must_link, config.k_min, config.k_max),
        Algorithm::AgFixedK => {
            let k = match (lexicon, config.fixed_k) {
                (Some(g), _) => g.entry.sense_count(),
                (None, Some(k)) => k,
                (None, None) => return Err(WsiError::LexiconRequired(group.key().to_string())),
            };
            ag_cluster(&points, k.clamp(1, points.len()), &must_link)
        }
        Algorithm::Xmeans => xmeans(&points, &config.xmeans(), config.seed),
        Algorithm::OneClusterPerLemma | Algorithm::OneClusterPerInstance => unreachable!(),
    }
}

/// Runs [`cluster_lemma`] on every group in parallel and joins the results.
/// Cluster names are only meaningful within one lemma.
pub fn cluster_groups(
    groups: &[LemmaGroup],
    store: Option<&EmbeddingStore>,
    config: &ClusteringConfig,
    lexicon: Option<&Lexicon>,
    exemplar_senses: &BTreeMap<String, String>,
) -> Result<HardClustering> {
    let parts: Vec<HardClustering> = groups
        .par_iter()
        .map(|g| {
            let guidance = lexicon.and_then(|lex| lex.get(&g.key())).map(|entry| LexiconGuidance {
                entry,
                exemplar_senses,
            });
            cluster_lemma(g, store, config, guidance)
        })
        .collect::<Result<_>>()?;
    let mut out = HardClustering::new();
    for part in parts {
        for (id, c) in part.iter() {
            out.assign(id, c);
        }
    }
    Ok(out)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ClusterLine {
    id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    cluster: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    clusters: Option<Vec<Membership>>,
}

pub fn write_hard_clustering<W: Write>(mut out: W, clustering: &HardClustering) -> Result<()> {
    for (id, cluster) in clustering.iter() {
        let line = ClusterLine {
            id: id.to_string(),
            cluster: Some(cluster.to_string()),
            clusters: None,
        };
        writeln!(out, "{}", serde_json::to_string(&line)?).map_err(|e| WsiError::io("<clustering>", e))?;
    }
    Ok(())
}

pub fn write_graded_clustering<W: Write>(mut out: W, clustering: &GradedClustering) -> Result<()> {
    for (id, memberships) in clustering.iter() {
        let line = ClusterLine {
            id: id.to_string(),
            cluster: None,
            clusters: Some(memberships.to_vec()),
        };
        writeln!(out, "{}", serde_json::to_string(&line)?).map_err(|e| WsiError::io("<clustering>", e))?;
    }
    Ok(())
}

/// Reads a clustering file; hard lines become a single membership of weight 1.
pub fn parse_clustering<R: BufRead>(reader: R) -> Result<GradedClustering> {
    let mut out = GradedClustering::default();
    for (n, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| WsiError::io("<clustering>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: ClusterLine = serde_json::from_str(&line).map_err(|e| WsiError::MalformedLine {
            line: n + 1,
            message: e.to_string(),
        })?;
        let (id, memberships) = match parsed {
            ClusterLine { id, cluster: Some(c), clusters: None } => (id, vec![Membership::new(c, 1.0)]),
            ClusterLine { id, cluster: None, clusters: Some(cs) } => (id, cs),
            _ => {
                return Err(WsiError::MalformedLine {
                    line: n + 1,
                    message: "expected exactly one of `cluster` or `clusters`".into(),
                })
            }
        };
        if out.get(&id).is_some() {
            return Err(WsiError::DuplicateId(id));
        }
        out.assign(id, memberships);
    }
    out.validate()?;
    Ok(out)
}

pub fn read_clustering(path: impl AsRef<Path>) -> Result<GradedClustering> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| WsiError::io(path, e))?;
    parse_clustering(BufReader::new(file))
}
