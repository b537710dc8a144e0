//! Offline clients for tests and dry runs.

use std::collections::BTreeMap;

use super::client::{Client, CompletionRequest};
use super::Variant;
use crate::corpus::LemmaGroup;
use crate::error::Result;

/// Answers every prompt with the gold senses of its lemma, looked up by the
/// `lemma/pos` prefix of the job id.
#[derive(Debug, Clone)]
pub struct GoldEchoClient {
    answers: BTreeMap<String, String>,
}

impl GoldEchoClient {
    pub fn new(groups: &[LemmaGroup], variant: Variant) -> Self {
        let answers = groups
            .iter()
            .map(|g| {
                let text: String = g
                    .originals()
                    .enumerate()
                    .map(|(i, inst)| {
                        let body = match variant {
                            Variant::Hard => inst.gold.first().map(|l| l.sense.clone()).unwrap_or_default(),
                            Variant::Graded => inst
                                .gold
                                .iter()
                                .map(|l| format!("{}/{}", l.sense, l.weight))
                                .collect::<Vec<_>>()
                                .join(" "),
                        };
                        format!("{}. {body}\n", i + 1)
                    })
                    .collect();
                (g.key().to_string(), text)
            })
            .collect();
        GoldEchoClient { answers }
    }
}

impl Client for GoldEchoClient {
    fn complete(&self, request: &CompletionRequest) -> Result<String> {
        let key = request.job_id.split('#').next().unwrap_or_default();
        Ok(self.answers.get(key).cloned().unwrap_or_default())
    }
}

/// Always returns an empty completion.
#[derive(Debug, Clone, Copy, Default)]
pub struct EmptyClient;

impl Client for EmptyClient {
    fn complete(&self, _: &CompletionRequest) -> Result<String> {
        Ok(String::new())
    }
}

/// Returns the prompt's quoted seed sentence three times, for generation dry runs.
#[derive(Debug, Clone, Copy, Default)]
pub struct EchoClient;

impl Client for EchoClient {
    fn complete(&self, request: &CompletionRequest) -> Result<String> {
        let s = request
            .prompt
            .split("in the sentence '")
            .nth(1)
            .and_then(|rest| rest.rsplit_once("'.\n"))
            .map(|(s, _)| s.to_string())
            .unwrap_or_default();
        Ok(format!("{s}\n{s}\n{s}"))
    }
}
