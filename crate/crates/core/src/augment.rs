//! Extra unlabeled instances from a raw corpus, a lexicon or a text generator.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::sync::OnceLock;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use regex::Regex;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{Instance, LemmaGroup, LemmaKey, Origin};
use crate::error::{Result, WsiError};
use crate::lexicon::Lexicon;
use crate::llm::{complete_with_retry, Client, CompletionRequest, TRANSPORT_ATTEMPTS};

/// Per-lemma caps studied for corpus sampling.
pub const CORPUS_CAPS: [usize; 4] = [10, 50, 100, 150];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoolSource {
    Corpus,
    Lexicon,
    Llm,
}

impl PoolSource {
    pub fn origin(self) -> Origin {
        match self {
            PoolSource::Corpus => Origin::CorpusAug,
            PoolSource::Lexicon => Origin::LexiconAug,
            PoolSource::Llm => Origin::LlmAug,
        }
    }
}

impl std::str::FromStr for PoolSource {
    type Err = WsiError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "corpus" => Ok(PoolSource::Corpus),
            "lexicon" => Ok(PoolSource::Lexicon),
            "llm" => Ok(PoolSource::Llm),
            other => Err(WsiError::Config(format!("unknown augmentation source `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AugmentationPool {
    pub source: PoolSource,
    pub per_lemma: BTreeMap<LemmaKey, Vec<Instance>>,
    /// Lexicon sense of each lexicon exemplar, for must-link generation only.
    pub lexicon_senses: BTreeMap<String, String>,
}

impl AugmentationPool {
    pub fn new(source: PoolSource) -> Self {
        AugmentationPool {
            source,
            per_lemma: BTreeMap::new(),
            lexicon_senses: BTreeMap::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.per_lemma.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn instances(&self) -> impl Iterator<Item = &Instance> {
        self.per_lemma.values().flatten()
    }

    /// Rebuilds a pool from instances read back from a pool file.
    pub fn from_instances(source: PoolSource, instances: Vec<Instance>) -> Result<Self> {
        let mut pool = AugmentationPool::new(source);
        for inst in instances {
            if inst.origin != source.origin() {
                return Err(WsiError::InvalidInstance {
                    id: inst.id.clone(),
                    message: format!("origin {:?} in a {source:?} pool", inst.origin),
                });
            }
            pool.per_lemma.entry(inst.key()).or_default().push(inst);
        }
        Ok(pool)
    }
}

fn token_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\w+(?:['’-]\w+)*|[^\w\s]").unwrap())
}

pub fn tokenize(text: &str) -> Vec<String> {
    token_re().find_iter(text).map(|m| m.as_str().to_string()).collect()
}

const SUFFIXES: [&str; 6] = ["ing", "est", "es", "ed", "er", "s"];

/// Exact match after lowercasing, or a match once one of the suffixes
/// s/es/ed/ing/er/est is stripped (restoring a final `e` is also tried).
pub fn word_matches(token: &str, lemma_word: &str) -> bool {
    let t = token.to_lowercase();
    let l = lemma_word.to_lowercase();
    if t == l {
        return true;
    }
    SUFFIXES.iter().any(|suffix| {
        t.strip_suffix(suffix)
            .filter(|stem| stem.chars().count() >= 2)
            .is_some_and(|stem| stem == l || format!("{stem}e") == l)
    })
}

/// Inclusive span of the first occurrence of `lemma` in `tokens`. For a multiword
/// lemma the first word may be inflected and the rest must match exactly.
pub fn find_target(tokens: &[String], lemma: &str) -> Option<[usize; 2]> {
    let words: Vec<&str> = lemma.split_whitespace().collect();
    let (first, rest) = words.split_first()?;
    (0..tokens.len()).find_map(|i| {
        let fits = i + rest.len() < tokens.len()
            && word_matches(&tokens[i], first)
            && rest
                .iter()
                .enumerate()
                .all(|(k, w)| tokens[i + 1 + k].eq_ignore_ascii_case(w));
        fits.then_some([i, i + rest.len()])
    })
}

fn lemma_seed(seed: u64, key: &LemmaKey) -> u64 {
    let digest = Sha256::new()
        .chain_update(seed.to_le_bytes())
        .chain_update(key.to_string().as_bytes())
        .finalize();
    u64::from_le_bytes(digest[..8].try_into().unwrap())
}

/// Key under which a lemma's corpus occurrences are indexed: multiword lemmas
/// use their first word.
fn retrieval_key(key: &LemmaKey) -> LemmaKey {
    let first = key.lemma.split_whitespace().next().unwrap_or("").to_lowercase();
    LemmaKey::new(first, key.pos)
}

/// Uniform sample of at most `n_per_lemma` occurrences per lemma. Each lemma's
/// candidates are shuffled once with a seed derived from `(seed, lemma)` and the
/// first `n_per_lemma` are taken, so larger caps extend smaller ones.
pub fn sample_corpus_pool(
    occurrences: &[Instance],
    lemma_set: &BTreeSet<LemmaKey>,
    n_per_lemma: usize,
    seed: u64,
) -> AugmentationPool {
    let mut index: BTreeMap<LemmaKey, Vec<&Instance>> = BTreeMap::new();
    for occ in occurrences {
        index.entry(retrieval_key(&occ.key())).or_default().push(occ);
    }
    let mut pool = AugmentationPool::new(PoolSource::Corpus);
    for key in lemma_set {
        let Some(candidates) = index.get(&retrieval_key(key)) else {
            log::info!("{key}: no corpus occurrences");
            continue;
        };
        let mut candidates = candidates.clone();
        candidates.sort_by(|a, b| a.id.cmp(&b.id));
        let mut rng = ChaCha8Rng::seed_from_u64(lemma_seed(seed, key));
        candidates.shuffle(&mut rng);
        let picked = candidates
            .into_iter()
            .take(n_per_lemma)
            .map(|occ| Instance {
                lemma: key.lemma.clone(),
                pos: key.pos,
                gold: Vec::new(),
                origin: Origin::CorpusAug,
                ..occ.clone()
            })
            .collect();
        pool.per_lemma.insert(key.clone(), picked);
    }
    pool
}

/// Every exemplar of every sense of each lemma in `lemma_set`. Exemplars in
/// which the lemma cannot be located are skipped.
pub fn lexicon_pool(lexicon: &Lexicon, lemma_set: &BTreeSet<LemmaKey>) -> AugmentationPool {
    let mut pool = AugmentationPool::new(PoolSource::Lexicon);
    for key in lemma_set {
        let Some(entry) = lexicon.get(key) else {
            log::info!("{key}: not in lexicon");
            continue;
        };
        let mut added = Vec::new();
        for sense in &entry.senses {
            for (n, example) in sense.examples.iter().enumerate() {
                let tokens = tokenize(example);
                let Some(span) = find_target(&tokens, &key.lemma) else {
                    log::warn!("{key}: lemma not found in exemplar {n} of sense {}", sense.id);
                    continue;
                };
                let id = format!("lex:{key}:{}:{n}", sense.id);
                pool.lexicon_senses.insert(id.clone(), sense.id.clone());
                added.push(Instance {
                    id,
                    lemma: key.lemma.clone(),
                    pos: key.pos,
                    tokens,
                    span,
                    gold: Vec::new(),
                    origin: Origin::LexiconAug,
                });
            }
        }
        pool.per_lemma.insert(key.clone(), added);
    }
    pool
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GenerationRequest {
    pub lemma: String,
    pub seed_sentence: String,
    pub count: usize,
    pub prompt: String,
}

impl GenerationRequest {
    pub fn new(lemma: &str, seed_sentence: &str) -> Self {
        let prompt = format!(
            "Create 3 examples with the target lemma '{lemma}' where this lemma is used in the same sense as in the sentence '{seed_sentence}'.\nSeparate each example by \\n and do not give any explanations."
        );
        GenerationRequest {
            lemma: lemma.to_string(),
            seed_sentence: seed_sentence.to_string(),
            count: 3,
            prompt,
        }
    }
}

fn list_marker_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^\s*(?:\d+[.)]|[-*•])\s*").unwrap())
}

/// Instances from one generated response: non-blank lines that contain the lemma.
pub fn parse_generated(text: &str, source: &Instance) -> Vec<Instance> {
    text.lines()
        .map(|l| list_marker_re().replace(l, "").trim().to_string())
        .filter(|l| !l.is_empty())
        .filter_map(|line| {
            let tokens = tokenize(&line);
            find_target(&tokens, &source.lemma).map(|span| (tokens, span))
        })
        .enumerate()
        .map(|(n, (tokens, span))| Instance {
            id: format!("llm:{}:{n}", source.id),
            lemma: source.lemma.clone(),
            pos: source.pos,
            tokens,
            span,
            gold: Vec::new(),
            origin: Origin::LlmAug,
        })
        .collect()
}

/// One generation request per original instance, at most `in_flight` at a time.
/// Requests failing after three attempts add nothing.
pub fn llm_generate_pool(
    instances: &[Instance],
    client: &dyn Client,
    seed: u64,
    in_flight: usize,
) -> Result<AugmentationPool> {
    let originals: Vec<&Instance> = instances.iter().filter(|i| i.is_original()).collect();
    let threads = rayon::ThreadPoolBuilder::new()
        .num_threads(in_flight.max(1))
        .build()
        .map_err(|e| WsiError::Config(e.to_string()))?;
    let generated: Vec<Vec<Instance>> = threads.install(|| {
        originals
            .par_iter()
            .map(|inst| {
                let request = GenerationRequest::new(&inst.lemma, &inst.sentence());
                let call = CompletionRequest {
                    job_id: format!("gen:{}", inst.id),
                    prompt: request.prompt,
                    max_new_tokens: 512,
                    seed: Some(seed),
                    temperature: None,
                };
                match complete_with_retry(client, &call, TRANSPORT_ATTEMPTS) {
                    Ok(text) => {
                        let out = parse_generated(&text, inst);
                        if out.is_empty() {
                            log::info!("{}: no usable generated line", inst.id);
                        }
                        out
                    }
                    Err(e) => {
                        log::warn!("{}: generation skipped ({e})", inst.id);
                        Vec::new()
                    }
                }
            })
            .collect()
    });
    let mut pool = AugmentationPool::new(PoolSource::Llm);
    for inst in generated.into_iter().flatten() {
        pool.per_lemma.entry(inst.key()).or_default().push(inst);
    }
    Ok(pool)
}

/// Originals first in their order, then each pool's instances for this lemma.
pub fn merge(group: &LemmaGroup, pools: &[&AugmentationPool]) -> Result<LemmaGroup> {
    let mut seen: HashSet<&str> = group.instances.iter().map(|i| i.id.as_str()).collect();
    let mut merged = group.clone();
    let key = group.key();
    for pool in pools {
        for inst in pool.per_lemma.get(&key).into_iter().flatten() {
            if inst.is_original() {
                return Err(WsiError::InvalidInstance {
                    id: inst.id.clone(),
                    message: "pool instance marked original".into(),
                });
            }
            if !seen.insert(inst.id.as_str()) {
                return Err(WsiError::IdCollision(inst.id.clone()));
            }
            merged.instances.push(inst.clone());
        }
    }
    Ok(merged)
}

/// Lexicon senses of every exemplar across pools.
pub fn exemplar_senses(pools: &[&AugmentationPool]) -> BTreeMap<String, String> {
    pools
        .iter()
        .flat_map(|p| p.lexicon_senses.iter().map(|(k, v)| (k.clone(), v.clone())))
        .collect()
}
