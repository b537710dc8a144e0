//! Evaluation report file.
//!
//! Metric values are written with exactly six decimals, rounded half to even on
//! the exact binary value.

use std::collections::BTreeMap;

use serde::ser::{SerializeMap, Serializer};
use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;

use super::aggregate::{AggregateReport, MetricMap};
use super::MetricName;
use crate::corpus::{LemmaKey, Pos};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Flag {
    pub lemma: String,
    pub metric: MetricName,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub config: serde_json::Value,
    pub aggregate: AggregateReport,
    pub flags: Vec<Flag>,
}

pub(crate) fn fixed6(v: f64) -> Box<RawValue> {
    let v = if v == 0.0 { 0.0 } else { v };
    RawValue::from_string(format!("{v:.6}")).expect("formatted float is valid JSON")
}

struct Fixed(f64);

impl Serialize for Fixed {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        fixed6(self.0).serialize(s)
    }
}

/// Serializes a metric map with six-decimal values.
pub struct FixedMetrics<'a>(pub &'a MetricMap);

impl Serialize for FixedMetrics<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.0.len()))?;
        for (k, v) in self.0 {
            map.serialize_entry(k.as_str(), &Fixed(*v))?;
        }
        map.end()
    }
}

struct Keyed<'a, K>(&'a BTreeMap<K, MetricMap>);

impl<K: std::fmt::Display> Serialize for Keyed<'_, K> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.0.len()))?;
        for (k, v) in self.0 {
            map.serialize_entry(&k.to_string(), &FixedMetrics(v))?;
        }
        map.end()
    }
}

impl Serialize for EvalReport {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(6))?;
        map.serialize_entry("config", &self.config)?;
        map.serialize_entry("per_lemma", &Keyed(&self.aggregate.per_lemma))?;
        map.serialize_entry("per_pos", &Keyed(&self.aggregate.per_pos))?;
        map.serialize_entry("all_pos", &FixedMetrics(&self.aggregate.all_pos))?;
        map.serialize_entry("weighted_avg", &FixedMetrics(&self.aggregate.weighted_avg))?;
        map.serialize_entry("flags", &self.flags)?;
        map.end()
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawReport {
    config: serde_json::Value,
    per_lemma: BTreeMap<String, MetricMap>,
    per_pos: BTreeMap<Pos, MetricMap>,
    all_pos: MetricMap,
    weighted_avg: MetricMap,
    flags: Vec<Flag>,
}

fn parse_lemma_key(s: &str) -> Option<LemmaKey> {
    let (lemma, pos) = s.rsplit_once('/')?;
    Some(LemmaKey::new(lemma, pos.parse().ok()?))
}

impl EvalReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RawReport = serde_json::from_str(text)?;
        let mut per_lemma = BTreeMap::new();
        for (k, v) in raw.per_lemma {
            let key = parse_lemma_key(&k).ok_or_else(|| {
                crate::error::WsiError::Config(format!("bad lemma key `{k}` in report"))
            })?;
            per_lemma.insert(key, v);
        }
        Ok(EvalReport {
            config: raw.config,
            aggregate: AggregateReport {
                per_lemma,
                per_pos: raw.per_pos,
                all_pos: raw.all_pos,
                weighted_avg: raw.weighted_avg,
            },
            flags: raw.flags,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_decimals_half_even() {
        assert_eq!(fixed6(0.875).get(), "0.875000");
        assert_eq!(fixed6(1.0).get(), "1.000000");
        assert_eq!(fixed6(-0.0).get(), "0.000000");
        assert_eq!(fixed6(0.1234565).get(), format!("{:.6}", 0.1234565));
    }

    #[test]
    fn report_round_trip() {
        let key = LemmaKey::new("bank", Pos::Noun);
        let mut agg = AggregateReport::default();
        agg.per_lemma
            .insert(key.clone(), BTreeMap::from([(MetricName::B3F, 2.0 / 3.0)]));
        agg.per_pos
            .insert(Pos::Noun, BTreeMap::from([(MetricName::B3F, 2.0 / 3.0)]));
        agg.all_pos.insert(MetricName::B3F, 2.0 / 3.0);
        agg.weighted_avg.insert(MetricName::B3F, 2.0 / 3.0);
        let report = EvalReport {
            config: serde_json::json!({"algorithm": "1cpl"}),
            aggregate: agg,
            flags: vec![Flag {
                lemma: key.to_string(),
                metric: MetricName::PairedF,
                reason: "ND".into(),
            }],
        };
        let text = report.to_json().unwrap();
        assert!(text.contains("\"b3_f\": 0.666667"));
        assert!(text.contains("\"bank/noun\""));
        let back = EvalReport::from_json(&text).unwrap();
        assert_eq!(back.aggregate.all_pos[&MetricName::B3F], 0.666667);
        assert_eq!(back.flags, report.flags);
    }
}
