//! Direct sense induction by prompting a language model with all instances of a lemma.

pub mod client;
pub mod mock;

use std::collections::BTreeMap;
use std::sync::OnceLock;

use rayon::prelude::*;
use regex::Regex;
use serde::{Deserialize, Serialize};

pub use client::{complete_with_retry, Audited, Client, CompletionRequest, FnClient, HttpClient, TOKEN_ENV};

use crate::corpus::{LabelMode, LemmaGroup};
use crate::error::{Result, WsiError};
use crate::evaluate::{evaluate_groups, Evaluation};
use crate::metrics::{FixedMetrics, MetricMap, PosWeights};
use crate::metrics::{GradedClustering, Membership};

/// Sense given to every sentence the model left unanswered.
pub const DUMMY_SENSE: &str = "UNK";
pub const TRANSPORT_ATTEMPTS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    #[default]
    Hard,
    Graded,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelParams {
    pub max_sequence_length: usize,
    pub max_new_tokens: usize,
    pub run_seed: u64,
    pub temperature: Option<f64>,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            max_sequence_length: 40_000,
            max_new_tokens: 4_000,
            run_seed: 0,
            temperature: None,
        }
    }
}

/// Rough token count of a prompt (four characters per token).
pub fn estimate_tokens(text: &str) -> usize {
    text.chars().count().div_ceil(4)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PromptJob {
    pub lemma: String,
    /// `(index, sentence)` with indices 1, 2, … ; may be shorter than `ids`
    /// when the prompt had to be truncated.
    pub sentences: Vec<(usize, String)>,
    /// Instance id of every index, in order.
    pub ids: Vec<String>,
    pub variant: Variant,
    pub params: ModelParams,
}

const HARD_HEAD: &str = "Given the following examples of sentences using the lemma '{LEMMA}', identify the sense of the target lemma for each sentence.";
const HARD_TAIL: &str = "For each sentence, your response should be in the format: '[sentence_index]. [sense_identifer]'.

Please respond with one sense for each sentence. Please provide answers for all examples. Do not write any explanations. Do not write the sentence in your answer. Only give the sentence index and sense identifier.";
const GRADED_HEAD: &str = "Given the following examples of sentences using the lemma '{LEMMA}', identify the possible senses of the lemma and their level of applicability for each sentence. For each sentence, list the possible senses of the lemma with their corresponding level of applicability (from 0 to 1).";
const GRADED_TAIL: &str = "For each sentence, your response should be in the format: '[sentence_index]. [sense_1/applicability_1] [sense_2/applicability_2']'.
For example, the answer might look like \"100. sense_1/2\", \"100. sense_1/0.8 sense_2/0.4\" or \"100. sense_1/1 sense_2/0.4 sense_3/4\".

Please respond with the possible senses of the lemma and their level of applicability for each sentence. Do not write any explanations. Do not write the sentence in your answer. Only give the sentence index, sense identifiers and their level of applicability.";

fn template(variant: Variant) -> (&'static str, &'static str) {
    match variant {
        Variant::Hard => (HARD_HEAD, HARD_TAIL),
        Variant::Graded => (GRADED_HEAD, GRADED_TAIL),
    }
}

fn render_parts(lemma: &str, variant: Variant, block: &str) -> String {
    let (head, tail) = template(variant);
    format!(
        "{}\n\nExamples:\n-----\n{block}-----\n\n{tail}",
        head.replace("{LEMMA}", lemma)
    )
}

impl PromptJob {
    /// One job over the original instances of `group`. Trailing sentences are
    /// dropped while the prompt would exceed `max_sequence_length` tokens.
    pub fn from_group(group: &LemmaGroup, variant: Variant, params: ModelParams) -> Result<Self> {
        let originals: Vec<_> = group.originals().collect();
        if originals.is_empty() {
            return Err(WsiError::EmptyPrompt);
        }
        let lines: Vec<String> = originals
            .iter()
            .enumerate()
            .map(|(i, inst)| format!("{}. {}\n", i + 1, inst.sentence()))
            .collect();
        let mut budget = params
            .max_sequence_length
            .saturating_mul(4)
            .saturating_sub(render_parts(&group.lemma, variant, "").chars().count());
        let mut keep = 0;
        for line in &lines {
            let len = line.chars().count();
            if len > budget {
                break;
            }
            budget -= len;
            keep += 1;
        }
        if keep < lines.len() {
            log::warn!(
                "{}: prompt truncated to {keep} of {} sentences",
                group.key(),
                lines.len()
            );
        }
        Ok(PromptJob {
            lemma: group.lemma.clone(),
            sentences: originals
                .iter()
                .take(keep)
                .enumerate()
                .map(|(i, inst)| (i + 1, inst.sentence()))
                .collect(),
            ids: originals.iter().map(|i| i.id.clone()).collect(),
            variant,
            params,
        })
    }
}

pub fn render_prompt(job: &PromptJob) -> Result<String> {
    if job.sentences.is_empty() {
        return Err(WsiError::EmptyPrompt);
    }
    let block: String = job
        .sentences
        .iter()
        .map(|(i, s)| format!("{i}. {s}\n"))
        .collect();
    Ok(render_parts(&job.lemma, job.variant, &block))
}

/// Index → `(sense, applicability)` pairs.
pub type ParsedAssignment = BTreeMap<usize, Vec<(String, f64)>>;

fn line_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^[\s*>#-]*(\d+)\s*\.\s*(.*?)\s*$").unwrap())
}

fn graded_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^(.+)/([0-9]+(?:\.[0-9]+)?)$").unwrap())
}

fn clean_token(token: &str) -> &str {
    token.trim_matches(|c: char| matches!(c, '*' | '`' | '\'' | '"' | ',' | ';' | '[' | ']'))
}

/// Extracts `<index>. <sense>` lines (hard) or `<index>. <sense>/<weight> …`
/// lines (graded). Lines that do not parse, indices outside `1..=ids.len()` and
/// non-positive weights are ignored; weights above 1 are clamped to 1; a
/// repeated index keeps its last line.
pub fn parse_response(text: &str, job: &PromptJob) -> ParsedAssignment {
    let mut out = ParsedAssignment::new();
    for line in text.lines() {
        let Some(caps) = line_re().captures(line) else {
            continue;
        };
        let Ok(index) = caps[1].parse::<usize>() else {
            continue;
        };
        if index == 0 || index > job.ids.len() {
            continue;
        }
        let tokens: Vec<&str> = caps[2]
            .split_whitespace()
            .map(clean_token)
            .filter(|t| !t.is_empty())
            .collect();
        let mut senses = Vec::new();
        for token in &tokens {
            if let Some(g) = graded_re().captures(token) {
                let w: f64 = g[2].parse().unwrap_or(0.0);
                if w > 0.0 {
                    senses.push((g[1].to_string(), w.min(1.0)));
                }
            }
        }
        if senses.is_empty() {
            if let Some(first) = tokens.first() {
                senses.push((first.trim_end_matches('.').to_string(), 1.0));
            }
        }
        if job.variant == Variant::Hard {
            senses.truncate(1);
        }
        senses.retain(|(s, _)| !s.is_empty());
        if !senses.is_empty() {
            out.insert(index, senses);
        }
    }
    out
}

/// Covers every job index: unanswered indices get [`DUMMY_SENSE`] with weight 1;
/// the hard variant keeps the single highest-weight sense (ties to the first).
pub fn complete_assignment(parsed: &ParsedAssignment, job: &PromptJob) -> GradedClustering {
    let mut out = GradedClustering::default();
    for (i, id) in job.ids.iter().enumerate() {
        let memberships = match parsed.get(&(i + 1)) {
            Some(senses) if !senses.is_empty() => {
                let ms: Vec<Membership> = senses.iter().map(|(s, w)| Membership::new(s.clone(), *w)).collect();
                match job.variant {
                    Variant::Graded => ms,
                    Variant::Hard => {
                        let best = ms
                            .iter()
                            .fold(&ms[0], |b, m| if m.weight > b.weight { m } else { b });
                        vec![Membership::new(best.cluster.clone(), 1.0)]
                    }
                }
            }
            _ => vec![Membership::new(DUMMY_SENSE, 1.0)],
        };
        out.assign(id.clone(), memberships);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct LlmRun {
    pub seed: u64,
    pub clustering: GradedClustering,
    pub evaluation: Evaluation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LlmReport {
    pub runs: Vec<LlmRun>,
    /// Mean and population standard deviation of the all-POS values across runs.
    pub mean: MetricMap,
    pub stddev: MetricMap,
    pub weighted_mean: MetricMap,
    pub weighted_stddev: MetricMap,
}

impl LlmReport {
    pub fn to_json(&self, config: serde_json::Value) -> Result<String> {
        #[derive(Serialize)]
        struct Run<'a> {
            seed: u64,
            all_pos: FixedMetrics<'a>,
            weighted_avg: FixedMetrics<'a>,
            flags: &'a [crate::metrics::Flag],
        }
        #[derive(Serialize)]
        struct Out<'a> {
            config: serde_json::Value,
            runs: Vec<Run<'a>>,
            mean: FixedMetrics<'a>,
            stddev: FixedMetrics<'a>,
            weighted_mean: FixedMetrics<'a>,
            weighted_stddev: FixedMetrics<'a>,
        }
        let out = Out {
            config,
            runs: self
                .runs
                .iter()
                .map(|r| Run {
                    seed: r.seed,
                    all_pos: FixedMetrics(&r.evaluation.aggregate.all_pos),
                    weighted_avg: FixedMetrics(&r.evaluation.aggregate.weighted_avg),
                    flags: &r.evaluation.flags,
                })
                .collect(),
            mean: FixedMetrics(&self.mean),
            stddev: FixedMetrics(&self.stddev),
            weighted_mean: FixedMetrics(&self.weighted_mean),
            weighted_stddev: FixedMetrics(&self.weighted_stddev),
        };
        Ok(serde_json::to_string_pretty(&out)?)
    }
}

pub fn mean_std(values: &[&MetricMap]) -> (MetricMap, MetricMap) {
    let mut mean = MetricMap::new();
    let mut std = MetricMap::new();
    if values.is_empty() {
        return (mean, std);
    }
    let n = values.len() as f64;
    for metric in values[0].keys() {
        let xs: Vec<f64> = values.iter().filter_map(|m| m.get(metric).copied()).collect();
        let mu = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / n;
        mean.insert(*metric, mu);
        std.insert(*metric, var.sqrt());
    }
    (mean, std)
}

/// Prompts once per lemma per run and scores every run. Run `r` uses seed
/// `params.run_seed + r`. A lemma whose request keeps failing is all-dummy for that run.
pub fn run_llm_wsi(
    groups: &[LemmaGroup],
    client: &dyn Client,
    variant: Variant,
    runs: usize,
    params: ModelParams,
    weights: &PosWeights,
) -> Result<LlmReport> {
    let mode = match variant {
        Variant::Hard => LabelMode::FirstSense,
        Variant::Graded => LabelMode::Graded,
    };
    let mut out = Vec::with_capacity(runs);
    for run in 0..runs {
        let seed = params.run_seed.wrapping_add(run as u64);
        let run_params = ModelParams { run_seed: seed, ..params };
        let parts: Vec<GradedClustering> = groups
            .par_iter()
            .map(|group| {
                let job = PromptJob::from_group(group, variant, run_params)?;
                let request = CompletionRequest {
                    job_id: format!("{}#run{run}", group.key()),
                    prompt: render_prompt(&job)?,
                    max_new_tokens: params.max_new_tokens,
                    seed: Some(seed),
                    temperature: params.temperature,
                };
                let text = complete_with_retry(client, &request, TRANSPORT_ATTEMPTS).unwrap_or_else(|e| {
                    log::warn!("{}: no response in run {run} ({e}); using the dummy sense", group.key());
                    String::new()
                });
                Ok(complete_assignment(&parse_response(&text, &job), &job))
            })
            .collect::<Result<_>>()?;
        let mut clustering = GradedClustering::default();
        for part in parts {
            for (id, ms) in part.iter() {
                clustering.assign(id, ms.to_vec());
            }
        }
        let evaluation = evaluate_groups(groups, &clustering, mode, weights)?;
        out.push(LlmRun {
            seed,
            clustering,
            evaluation,
        });
    }
    let all: Vec<&MetricMap> = out.iter().map(|r| &r.evaluation.aggregate.all_pos).collect();
    let (mean, stddev) = mean_std(&all);
    let weighted: Vec<&MetricMap> = out.iter().map(|r| &r.evaluation.aggregate.weighted_avg).collect();
    let (weighted_mean, weighted_stddev) = mean_std(&weighted);
    Ok(LlmReport {
        runs: out,
        mean,
        stddev,
        weighted_mean,
        weighted_stddev,
    })
}
