#![allow(dead_code)]

pub mod oracle;

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use wsi_core::clustering::EmbeddingStore;
use wsi_core::corpus::{write_instances, Instance, LemmaGroup, Origin, Pos, SenseLabel};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut impl Rng) -> f64 {
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen::<f64>();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

pub fn instance(id: &str, lemma: &str, pos: Pos, sense: &str, filler: usize) -> Instance {
    Instance {
        id: id.into(),
        lemma: lemma.into(),
        pos,
        tokens: vec!["the".into(), lemma.into(), format!("w{filler}"), ".".into()],
        span: [1, 1],
        gold: vec![SenseLabel::hard(sense)],
        origin: Origin::Original,
    }
}

/// `lemmas` lemmas per part of speech with 2..=max_n instances and 1..=4 senses.
pub fn synthetic_groups(seed: u64, lemmas: usize, max_n: usize) -> Vec<LemmaGroup> {
    let mut r = rng(seed);
    let mut out = Vec::new();
    for pos in [Pos::Noun, Pos::Verb, Pos::Adj] {
        for l in 0..lemmas {
            let lemma = format!("{}{l}", &pos.as_str()[..1]);
            let n = r.gen_range(2..=max_n);
            let senses = r.gen_range(1..=4);
            let instances = (0..n)
                .map(|i| {
                    let s = r.gen_range(0..senses);
                    instance(&format!("{lemma}.{i}"), &lemma, pos, &format!("{lemma}%{s}"), i)
                })
                .collect();
            out.push(LemmaGroup {
                lemma,
                pos,
                instances,
            });
        }
    }
    out
}

/// Vectors around one well-separated center per gold sense.
pub fn sense_store(groups: &[LemmaGroup], dim: usize, spread: f64, seed: u64) -> EmbeddingStore {
    let mut r = rng(seed);
    let mut store = EmbeddingStore::new("synthetic", 0, dim).unwrap();
    for g in groups {
        let mut centers = std::collections::BTreeMap::new();
        for inst in &g.instances {
            let sense = inst.gold.first().map(|s| s.sense.clone()).unwrap_or_default();
            let c = centers
                .entry(sense)
                .or_insert_with(|| (0..dim).map(|_| r.gen_range(-50.0..50.0)).collect::<Vec<f64>>())
                .clone();
            let v: Vec<f32> = c.iter().map(|x| (x + spread * gaussian(&mut r)) as f32).collect();
            store.insert(inst.id.clone(), &v).unwrap();
        }
    }
    store
}

pub fn write_groups(path: &Path, groups: &[LemmaGroup]) {
    write_instances(path, groups.iter().flat_map(|g| &g.instances)).unwrap();
}
