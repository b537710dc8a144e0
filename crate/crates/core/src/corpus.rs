//! Instance data model, instance-file ingestion and dev/test split construction.
//!
//! Instance files hold one JSON object per line:
//!
//! ```text
//! {"id":"d001.s004.t002","lemma":"bank","pos":"noun","tokens":["the","bank","closed"],
//!  "span":[1,1],"gold":[{"sense":"bank%1:14:00::","weight":1.0}],"origin":"original"}
//! ```
//!
//! Unknown keys are rejected. Lemma groups are built per `(lemma, pos)` and groups
//! with fewer than two original instances (hapaxes) are dropped with a warning record.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, WsiError};
use crate::metrics::{GradedClustering, HardClustering, Membership};

/// Number of randomized greedy restarts used by [`build_split`].
pub const SPLIT_RESTARTS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pos {
    Adj,
    Noun,
    Verb,
}

impl Pos {
    pub const ALL: [Pos; 3] = [Pos::Adj, Pos::Noun, Pos::Verb];

    pub fn as_str(self) -> &'static str {
        match self {
            Pos::Adj => "adj",
            Pos::Noun => "noun",
            Pos::Verb => "verb",
        }
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Pos {
    type Err = WsiError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "adj" => Ok(Pos::Adj),
            "noun" => Ok(Pos::Noun),
            "verb" => Ok(Pos::Verb),
            other => Err(WsiError::Config(format!("unknown part of speech `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Original,
    CorpusAug,
    LexiconAug,
    LlmAug,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SenseLabel {
    pub sense: String,
    pub weight: f64,
}

impl SenseLabel {
    pub fn hard(sense: impl Into<String>) -> Self {
        SenseLabel {
            sense: sense.into(),
            weight: 1.0,
        }
    }
}

/// One occurrence of a target lemma.
///
/// `gold` keeps every label listed in the source file; [`GoldStandard`] decides
/// how they are used for scoring.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Instance {
    pub id: String,
    pub lemma: String,
    pub pos: Pos,
    pub tokens: Vec<String>,
    pub span: [usize; 2],
    #[serde(default)]
    pub gold: Vec<SenseLabel>,
    pub origin: Origin,
}

impl Instance {
    pub fn sentence(&self) -> String {
        self.tokens.join(" ")
    }

    pub fn key(&self) -> LemmaKey {
        LemmaKey::new(&self.lemma, self.pos)
    }

    pub fn is_original(&self) -> bool {
        self.origin == Origin::Original
    }

    fn validate(&self) -> std::result::Result<(), String> {
        if self.id.is_empty() {
            return Err("empty instance id".into());
        }
        if self.lemma.is_empty() {
            return Err(format!("instance `{}` has an empty lemma", self.id));
        }
        for label in &self.gold {
            if !(label.weight > 0.0 && label.weight <= 1.0) {
                return Err(format!(
                    "instance `{}`: gold weight {} for `{}` outside (0, 1]",
                    self.id, label.weight, label.sense
                ));
            }
        }
        Ok(())
    }
}

/// `(lemma, pos)` pair identifying a lemma group; displayed as `lemma/pos`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LemmaKey {
    pub lemma: String,
    pub pos: Pos,
}

impl LemmaKey {
    pub fn new(lemma: impl Into<String>, pos: Pos) -> Self {
        LemmaKey {
            lemma: lemma.into(),
            pos,
        }
    }
}

impl fmt::Display for LemmaKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.lemma, self.pos)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LemmaGroup {
    pub lemma: String,
    pub pos: Pos,
    pub instances: Vec<Instance>,
}

impl LemmaGroup {
    pub fn key(&self) -> LemmaKey {
        LemmaKey::new(&self.lemma, self.pos)
    }

    pub fn originals(&self) -> impl Iterator<Item = &Instance> {
        self.instances.iter().filter(|i| i.is_original())
    }

    pub fn original_count(&self) -> usize {
        self.originals().count()
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }
}

/// A lemma dropped at load time because it has fewer than two original instances.
#[derive(Debug, Clone, PartialEq)]
pub struct HapaxWarning {
    pub key: LemmaKey,
    pub ids: Vec<String>,
}

#[derive(Debug, Clone, Default)]
pub struct LoadedCorpus {
    pub groups: Vec<LemmaGroup>,
    pub hapaxes: Vec<HapaxWarning>,
}

impl LoadedCorpus {
    pub fn instance_count(&self) -> usize {
        self.groups.iter().map(LemmaGroup::len).sum()
    }
}

/// Parses instance lines, validating every line. Blank lines are skipped.
pub fn parse_instances<R: BufRead>(reader: R) -> Result<Vec<Instance>> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| WsiError::MalformedLine {
            line: line_no,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let inst: Instance = serde_json::from_str(&line).map_err(|e| WsiError::MalformedLine {
            line: line_no,
            message: e.to_string(),
        })?;
        let [start, end] = inst.span;
        if start > end || end >= inst.tokens.len() {
            return Err(WsiError::SpanOutOfBounds {
                line: line_no,
                start,
                end,
                len: inst.tokens.len(),
            });
        }
        inst.validate().map_err(|message| WsiError::MalformedLine {
            line: line_no,
            message,
        })?;
        if !seen.insert(inst.id.clone()) {
            return Err(WsiError::DuplicateId(inst.id));
        }
        out.push(inst);
    }
    Ok(out)
}

/// Reads an instance file without grouping (pool files, occurrence files).
pub fn read_instances(path: impl AsRef<Path>) -> Result<Vec<Instance>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| WsiError::io(path, e))?;
    parse_instances(BufReader::new(file))
}

/// Groups instances by `(lemma, pos)` in lexicographic order and drops hapaxes.
pub fn group_instances(instances: Vec<Instance>) -> Result<LoadedCorpus> {
    let mut seen = HashSet::new();
    let mut by_key: BTreeMap<LemmaKey, Vec<Instance>> = BTreeMap::new();
    for inst in instances {
        if !seen.insert(inst.id.clone()) {
            return Err(WsiError::DuplicateId(inst.id));
        }
        by_key.entry(inst.key()).or_default().push(inst);
    }
    let mut corpus = LoadedCorpus::default();
    for (key, instances) in by_key {
        let originals = instances.iter().filter(|i| i.is_original()).count();
        if originals < 2 {
            log::warn!("dropping hapax lemma {key} ({originals} original instance(s))");
            corpus.hapaxes.push(HapaxWarning {
                key,
                ids: instances.into_iter().map(|i| i.id).collect(),
            });
            continue;
        }
        corpus.groups.push(LemmaGroup {
            lemma: key.lemma,
            pos: key.pos,
            instances,
        });
    }
    Ok(corpus)
}

pub fn load_instances(path: impl AsRef<Path>) -> Result<LoadedCorpus> {
    group_instances(read_instances(path)?)
}

pub fn write_instances_to<'a, W: Write>(
    mut writer: W,
    instances: impl IntoIterator<Item = &'a Instance>,
) -> Result<()> {
    for inst in instances {
        serde_json::to_writer(&mut writer, inst)?;
        writer
            .write_all(b"\n")
            .map_err(|e| WsiError::io("<writer>", e))?;
    }
    writer.flush().map_err(|e| WsiError::io("<writer>", e))
}

pub fn write_instances<'a>(
    path: impl AsRef<Path>,
    instances: impl IntoIterator<Item = &'a Instance>,
) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| WsiError::io(path, e))?;
    write_instances_to(BufWriter::new(file), instances)
}

/// How multi-label gold annotations are turned into scoring labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LabelMode {
    /// Keep only the first listed sense, with weight 1.
    #[default]
    FirstSense,
    /// Keep every listed sense with its weight.
    Graded,
}

/// Scoring labels for the original instances of a set of lemma groups.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GoldStandard {
    pub labels: BTreeMap<String, Vec<SenseLabel>>,
}

impl GoldStandard {
    pub fn from_groups<'a>(
        groups: impl IntoIterator<Item = &'a LemmaGroup>,
        mode: LabelMode,
    ) -> Result<Self> {
        let mut labels = BTreeMap::new();
        for group in groups {
            for inst in group.originals() {
                let first = inst
                    .gold
                    .first()
                    .ok_or_else(|| WsiError::MissingGold(inst.id.clone()))?;
                let kept = match mode {
                    LabelMode::FirstSense => vec![SenseLabel::hard(first.sense.clone())],
                    LabelMode::Graded => inst.gold.clone(),
                };
                if labels.insert(inst.id.clone(), kept).is_some() {
                    return Err(WsiError::DuplicateId(inst.id.clone()));
                }
            }
        }
        Ok(GoldStandard { labels })
    }

    pub fn for_group(group: &LemmaGroup, mode: LabelMode) -> Result<Self> {
        Self::from_groups(std::iter::once(group), mode)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn is_hard(&self) -> bool {
        self.labels
            .values()
            .all(|l| l.len() == 1 && l[0].weight == 1.0)
    }

    /// Hard view; fails if any instance carries more than one sense.
    pub fn as_hard(&self) -> Result<HardClustering> {
        let mut out = HardClustering::default();
        for (id, labels) in &self.labels {
            match labels.as_slice() {
                [only] => out.assign(id.clone(), only.sense.clone()),
                _ => return Err(WsiError::GradedGold(id.clone())),
            }
        }
        Ok(out)
    }

    pub fn as_graded(&self) -> GradedClustering {
        let mut out = GradedClustering::default();
        for (id, labels) in &self.labels {
            out.assign(
                id.clone(),
                labels
                    .iter()
                    .map(|l| Membership::new(l.sense.clone(), l.weight))
                    .collect(),
            );
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitName {
    Dev,
    Test,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PosStats {
    pub instances: usize,
    pub lemmas: usize,
    pub mean_polysemy: f64,
    pub polysemy_stddev: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSplit {
    pub name: SplitName,
    pub groups: Vec<LemmaGroup>,
    pub stats: BTreeMap<Pos, PosStats>,
}

impl DatasetSplit {
    pub fn new(name: SplitName, mut groups: Vec<LemmaGroup>) -> Result<Self> {
        groups.sort_by_key(LemmaGroup::key);
        let stats = compute_stats(&groups)?;
        Ok(DatasetSplit {
            name,
            groups,
            stats,
        })
    }

    pub fn instance_count(&self) -> usize {
        self.groups.iter().map(LemmaGroup::original_count).sum()
    }

    pub fn lemma_keys(&self) -> BTreeSet<LemmaKey> {
        self.groups.iter().map(LemmaGroup::key).collect()
    }

    /// Recomputes the stats from the groups and compares them to the stored ones.
    pub fn stats_consistent(&self) -> Result<bool> {
        Ok(compute_stats(&self.groups)? == self.stats)
    }

    pub fn manifest(&self) -> SplitManifest {
        SplitManifest {
            name: self.name,
            lemmas: self.lemma_keys().into_iter().collect(),
            stats: self.stats.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitManifest {
    pub name: SplitName,
    pub lemmas: Vec<LemmaKey>,
    pub stats: BTreeMap<Pos, PosStats>,
}

/// Number of distinct first-listed gold senses among the group's original instances.
pub fn lemma_polysemy(group: &LemmaGroup) -> Result<usize> {
    let mut senses = BTreeSet::new();
    for inst in group.originals() {
        let first = inst
            .gold
            .first()
            .ok_or_else(|| WsiError::MissingGold(inst.id.clone()))?;
        senses.insert(first.sense.as_str());
    }
    Ok(senses.len())
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn compute_stats(groups: &[LemmaGroup]) -> Result<BTreeMap<Pos, PosStats>> {
    let mut per_pos: BTreeMap<Pos, (usize, Vec<f64>)> = BTreeMap::new();
    for g in groups {
        let entry = per_pos.entry(g.pos).or_default();
        entry.0 += g.original_count();
        entry.1.push(lemma_polysemy(g)? as f64);
    }
    Ok(per_pos
        .into_iter()
        .map(|(pos, (instances, poly))| {
            let (mean_polysemy, polysemy_stddev) = mean_std(&poly);
            (
                pos,
                PosStats {
                    instances,
                    lemmas: poly.len(),
                    mean_polysemy,
                    polysemy_stddev,
                },
            )
        })
        .collect())
}

/// Per-POS `(mean, stddev)` of lemma polysemy (population standard deviation).
pub fn polysemy_stats(split: &DatasetSplit) -> Result<BTreeMap<Pos, (f64, f64)>> {
    Ok(compute_stats(&split.groups)?
        .into_iter()
        .map(|(pos, s)| (pos, (s.mean_polysemy, s.polysemy_stddev)))
        .collect())
}

/// Polysemy over all parts of speech together.
pub fn overall_polysemy(split: &DatasetSplit) -> Result<(f64, f64)> {
    let values = split
        .groups
        .iter()
        .map(|g| lemma_polysemy(g).map(|p| p as f64))
        .collect::<Result<Vec<_>>>()?;
    Ok(mean_std(&values))
}

#[derive(Clone, Copy)]
struct LemmaSize {
    instances: f64,
    polysemy: f64,
}

#[derive(Clone, Copy, Default)]
struct Half {
    instances: f64,
    lemmas: f64,
    polysemy_sum: f64,
}

impl Half {
    fn add(mut self, l: LemmaSize) -> Self {
        self.instances += l.instances;
        self.lemmas += 1.0;
        self.polysemy_sum += l.polysemy;
        self
    }

    fn mean_polysemy(&self) -> f64 {
        if self.lemmas == 0.0 {
            0.0
        } else {
            self.polysemy_sum / self.lemmas
        }
    }
}

struct Norms {
    instances: f64,
    lemmas: f64,
    polysemy: f64,
}

fn imbalance(a: &Half, b: &Half, norms: &Norms) -> f64 {
    (a.instances - b.instances).abs() / norms.instances
        + (a.lemmas - b.lemmas).abs() / norms.lemmas
        + (a.mean_polysemy() - b.mean_polysemy()).abs() / norms.polysemy
}

/// One greedy pass over a shuffled lemma order. Returns the dev mask and its objective.
fn greedy_assignment(sizes: &[LemmaSize], order: &[usize], norms: &Norms) -> (Vec<bool>, f64) {
    let mut dev = Half::default();
    let mut test = Half::default();
    let mut in_dev = vec![false; sizes.len()];
    for &i in order {
        let l = sizes[i];
        let to_dev = imbalance(&dev.add(l), &test, norms);
        let to_test = imbalance(&dev, &test.add(l), norms);
        if to_dev <= to_test {
            dev = dev.add(l);
            in_dev[i] = true;
        } else {
            test = test.add(l);
        }
    }
    if dev.lemmas == 0.0 || test.lemmas == 0.0 {
        return (in_dev, f64::INFINITY);
    }
    (in_dev, imbalance(&dev, &test, norms))
}

fn restart_rng(seed: u64, pos: Pos, restart: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pos_tag = Pos::ALL.iter().position(|p| *p == pos).unwrap_or(0) as u64 + 1;
    rng.set_stream((pos_tag << 32) | restart);
    rng
}

/// Builds disjoint-lemma dev/test splits.
///
/// Per POS, lemmas are drawn in random order until the selected original
/// instances reach `target_instances_per_pos`; the selection is then partitioned by
/// [`SPLIT_RESTARTS`] randomized greedy passes, keeping the pass with the smallest
/// L1 imbalance of (instances, lemmas, mean polysemy), each term normalized by the
/// selection's total instances, total lemmas and mean polysemy. Ties go to the
/// lowest restart index.
pub fn build_split(
    groups: &[LemmaGroup],
    target_instances_per_pos: usize,
    seed: u64,
) -> Result<(DatasetSplit, DatasetSplit)> {
    if groups.is_empty() {
        return Err(WsiError::Config("no lemma groups to split".into()));
    }
    let mut sorted: Vec<&LemmaGroup> = groups.iter().collect();
    sorted.sort_by_key(|g| g.key());

    let mut dev_groups = Vec::new();
    let mut test_groups = Vec::new();
    let present: BTreeSet<Pos> = sorted.iter().map(|g| g.pos).collect();

    for pos in present {
        let candidates: Vec<&LemmaGroup> = sorted.iter().copied().filter(|g| g.pos == pos).collect();
        let available: usize = candidates.iter().map(|g| g.original_count()).sum();
        if available < target_instances_per_pos {
            return Err(WsiError::InsufficientInstances {
                pos,
                target: target_instances_per_pos,
                available,
            });
        }

        let mut order: Vec<usize> = (0..candidates.len()).collect();
        order.shuffle(&mut restart_rng(seed, pos, u32::MAX as u64));
        let mut selected = Vec::new();
        let mut total = 0;
        for idx in order {
            if total >= target_instances_per_pos && !selected.is_empty() {
                break;
            }
            total += candidates[idx].original_count();
            selected.push(candidates[idx]);
        }
        if selected.len() < 2 {
            return Err(WsiError::DegenerateSplit {
                pos,
                message: format!(
                    "{} lemma(s) selected; two disjoint non-empty halves need at least 2",
                    selected.len()
                ),
            });
        }

        let sizes = selected
            .iter()
            .map(|g| {
                Ok(LemmaSize {
                    instances: g.original_count() as f64,
                    polysemy: lemma_polysemy(g)? as f64,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let norms = Norms {
            instances: sizes.iter().map(|s| s.instances).sum(),
            lemmas: sizes.len() as f64,
            polysemy: sizes.iter().map(|s| s.polysemy).sum::<f64>() / sizes.len() as f64,
        };

        let best = (0..SPLIT_RESTARTS as u64)
            .into_par_iter()
            .map(|r| {
                let mut order: Vec<usize> = (0..sizes.len()).collect();
                order.shuffle(&mut restart_rng(seed, pos, r));
                let (mask, objective) = greedy_assignment(&sizes, &order, &norms);
                (objective, r, mask)
            })
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
            .expect("at least one restart");
        if !best.0.is_finite() {
            return Err(WsiError::DegenerateSplit {
                pos,
                message: "no assignment produced two non-empty halves".into(),
            });
        }
        for (group, in_dev) in selected.into_iter().zip(best.2) {
            if in_dev {
                dev_groups.push(group.clone());
            } else {
                test_groups.push(group.clone());
            }
        }
    }

    let dev = DatasetSplit::new(SplitName::Dev, dev_groups)?;
    let test = DatasetSplit::new(SplitName::Test, test_groups)?;
    let shared: Vec<_> = dev.lemma_keys().intersection(&test.lemma_keys()).cloned().collect();
    assert!(shared.is_empty(), "dev and test share lemmas: {shared:?}");
    Ok((dev, test))
}
