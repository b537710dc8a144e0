//! Acceptance suite: one PASS/FAIL line per criterion. Runs without a test
//! harness so the lines show up in plain `cargo test` output.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use rand::Rng;

use wsi_core::augment::{
    lexicon_pool, llm_generate_pool, merge, sample_corpus_pool, AugmentationPool, PoolSource, CORPUS_CAPS,
};
use wsi_core::clustering::{
    ag_cluster, baseline_1cpex, baseline_1cpl, cluster_groups, select_k_silhouette, xmeans, Algorithm,
    ClusteringConfig, EmbeddingStore, Points, XMeansConfig,
};
use wsi_core::corpus::{build_split, GoldStandard, Instance, LabelMode, LemmaGroup, Origin, Pos};
use wsi_core::evaluate::evaluate_groups;
use wsi_core::lexicon::{Lexicon, LexiconEntry, LexiconSense};
use wsi_core::llm::mock::{EchoClient, EmptyClient, GoldEchoClient};
use wsi_core::llm::{parse_response, run_llm_wsi, ModelParams, PromptJob, Variant};
use wsi_core::metrics::{
    expected_sensitivity, sensitivity_matrix, weighted_average, HardClustering, MetricName, PosWeights, Verdict,
    PROPERTY_METRICS,
};
use wsi_core::significance::{bootstrap_compare, BaselinePipeline, BootstrapConfig, EmbeddingPipeline};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    ensure(elapsed < limit, format!("took {elapsed:.2?}, limit {limit:?}"))
}

fn metric_oracle() -> Outcome {
    let t = Instant::now();
    let (checked, worst, case) = common::oracle::exhaustive(5);
    within(t.elapsed(), Duration::from_secs(60))?;
    ensure(worst <= 1e-9, format!("max deviation {worst:e}: {case:?}"))?;
    Ok(format!("{checked} partition pairs, max deviation {worst:.1e}, {:.2?}", t.elapsed()))
}

fn property_matrix() -> Outcome {
    let t = Instant::now();
    let matrix = sensitivity_matrix().map_err(|e| e.to_string())?;
    within(t.elapsed(), Duration::from_secs(10))?;
    ensure(matrix.len() == 7 && PROPERTY_METRICS.len() == 7, "expected 7 metric rows")?;
    for (metric, row) in &matrix {
        ensure(expected_sensitivity(*metric) == Some(*row), format!("{metric}: {row:?}"))?;
    }
    let all_four: Vec<MetricName> = matrix
        .iter()
        .filter(|(_, row)| row.iter().all(|v| *v == Verdict::Sensitive))
        .map(|(m, _)| *m)
        .collect();
    ensure(all_four == [MetricName::B3F], format!("sensitive to all four: {all_four:?}"))?;
    Ok(format!("7x4 matrix matches, only b3_f sensitive to all four, {:.2?}", t.elapsed()))
}

fn baseline_substitute() -> Outcome {
    let groups = common::synthetic_groups(21, 40, 15);
    let (dev, _) = build_split(&groups, 150, 7).map_err(|e| e.to_string())?;
    let score = |c: &dyn Fn(&LemmaGroup) -> HardClustering| {
        let mut sys = HardClustering::new();
        for g in &dev.groups {
            for (id, cl) in c(g).iter() {
                sys.assign(id, format!("{}:{cl}", g.key()));
            }
        }
        evaluate_groups(&dev.groups, &sys.to_graded(), LabelMode::FirstSense, &PosWeights::semcor())
    };
    let cpl = score(&baseline_1cpl).map_err(|e| e.to_string())?;
    let cpex = score(&baseline_1cpex).map_err(|e| e.to_string())?;
    let recall = cpl.all_pos(MetricName::B3Recall);
    let precision = cpex.all_pos(MetricName::B3Precision);
    ensure(recall == 1.0, format!("1cpl recall {recall}"))?;
    ensure(precision == 1.0, format!("1cpex precision {precision}"))?;
    for (pos, m) in cpl.aggregate.per_pos.iter().chain(&cpex.aggregate.per_pos) {
        ensure(
            m[&MetricName::B3Recall] == 1.0 || m[&MetricName::B3Precision] == 1.0,
            format!("{pos} breaks the baseline identity"),
        )?;
    }
    Ok(format!(
        "synthetic dev split ({} lemmas, {} instances): 1cpl recall = 1, 1cpex precision = 1 (released dataset not available)",
        dev.groups.len(),
        dev.instance_count()
    ))
}

fn aggregation() -> Outcome {
    let per_pos = BTreeMap::from([
        (Pos::Verb, BTreeMap::from([(MetricName::B3F, 0.657)])),
        (Pos::Adj, BTreeMap::from([(MetricName::B3F, 0.800)])),
        (Pos::Noun, BTreeMap::from([(MetricName::B3F, 0.752)])),
    ]);
    let avg = weighted_average(&per_pos, &PosWeights::semcor()).map_err(|e| e.to_string())?[&MetricName::B3F] * 100.0;
    ensure((avg - 73.4).abs() <= 0.05, format!("weighted average {avg:.4}"))?;
    Ok(format!("weighted F-B3 = {avg:.3} (target 73.4 +/- 0.05)"))
}

fn random_points(rng: &mut impl Rng, n: usize, dim: usize) -> Points {
    let ids = (0..n).map(|i| format!("p{i}")).collect();
    let data = (0..n * dim).map(|_| rng.gen_range(-10.0..10.0)).collect();
    Points::new(ids, dim, data).unwrap()
}

fn clustering_contracts() -> Outcome {
    let t = Instant::now();
    let mut rng = common::rng(99);
    for trial in 0..100 {
        let n = rng.gen_range(1..=30);
        let dim = rng.gen_range(1..6);
        let points = random_points(&mut rng, n, dim);
        let one = ag_cluster(&points, 1, &[]).map_err(|e| e.to_string())?;
        let all = ag_cluster(&points, n, &[]).map_err(|e| e.to_string())?;
        ensure(one.cluster_count() == 1 && one.len() == n, format!("trial {trial}: k=1 is not 1cpl"))?;
        ensure(all.cluster_count() == n && all.len() == n, format!("trial {trial}: k=n is not 1cpex"))?;
    }
    for trial in 0..100 {
        let dim = rng.gen_range(1..6);
        let points = random_points(&mut rng, 2, dim);
        let k = select_k_silhouette(&points, &[], 2, 15).map_err(|e| e.to_string())?;
        ensure(k == 1, format!("n=2 trial {trial}: k = {k}"))?;
    }
    for trial in 0..1000 {
        let n = rng.gen_range(2..=10);
        let dim = rng.gen_range(1..5);
        let points = random_points(&mut rng, n, dim);
        let mut order: Vec<usize> = (0..n).collect();
        rand::seq::SliceRandom::shuffle(order.as_mut_slice(), &mut rng);
        let m = rng.gen_range(1..=n / 2);
        let pairs: Vec<(String, String)> = order
            .chunks(2)
            .take(m)
            .map(|c| (format!("p{}", c[0]), format!("p{}", c[1])))
            .collect();
        let k = rng.gen_range(1..=n - m);
        let c = ag_cluster(&points, k, &pairs).map_err(|e| e.to_string())?;
        for (a, b) in &pairs {
            ensure(c.get(a) == c.get(b), format!("must-link trial {trial}: {a}, {b} split at k={k}"))?;
        }
    }
    within(t.elapsed(), Duration::from_secs(60))?;
    Ok(format!(
        "k=1/k=n on 100 lemmas, k=1 on 100 two-point lemmas, 1000 must-link trials, {:.2?}",
        t.elapsed()
    ))
}

fn blobs(rng: &mut impl Rng, centers: &[Vec<f64>], per_blob: usize, sigma: f64) -> Points {
    let dim = centers[0].len();
    let mut data = Vec::new();
    for c in centers {
        for _ in 0..per_blob {
            data.extend(c.iter().map(|x| x + sigma * common::gaussian(rng)));
        }
    }
    let ids = (0..centers.len() * per_blob).map(|i| format!("x{i}")).collect();
    Points::new(ids, dim, data).unwrap()
}

fn xmeans_stability() -> Outcome {
    let mut rng = common::rng(2024);
    let dim = 8;
    let config = XMeansConfig::default();
    let mut two = Vec::new();
    let mut one = Vec::new();
    for seed in 0..5u64 {
        let (mut k2, mut k1) = (0, 0);
        for _ in 0..50 {
            let a: Vec<f64> = (0..dim).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let dir: Vec<f64> = (0..dim).map(|_| common::gaussian(&mut rng)).collect();
            let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
            let b: Vec<f64> = a.iter().zip(&dir).map(|(x, d)| x + 10.0 * d / norm).collect();
            let p = blobs(&mut rng, &[a.clone(), b], 30, 1.0);
            if xmeans(&p, &config, seed).map_err(|e| e.to_string())?.cluster_count() == 2 {
                k2 += 1;
            }
            let p = blobs(&mut rng, &[a], 60, 1.0);
            if xmeans(&p, &config, seed).map_err(|e| e.to_string())?.cluster_count() == 1 {
                k1 += 1;
            }
        }
        two.push(k2);
        one.push(k1);
    }
    ensure(two.iter().all(|&k| k >= 49), format!("two blobs, k=2 counts per seed: {two:?}"))?;
    ensure(one.iter().all(|&k| k >= 49), format!("one blob, k=1 counts per seed: {one:?}"))?;
    Ok(format!("k=2 in {two:?}/50 and k=1 in {one:?}/50 across 5 seeds (10 sigma separation)"))
}

fn bootstrap() -> Outcome {
    let mut picked = Vec::new();
    let mut total = 0;
    for g in common::synthetic_groups(5, 40, 15) {
        let mut take = g.instances.len().min(500 - total);
        if 500 - total - take == 1 {
            take -= 1;
        }
        if take < 2 {
            continue;
        }
        total += take;
        picked.push(LemmaGroup {
            instances: g.instances[..take].to_vec(),
            ..g
        });
    }
    ensure(total == 500, format!("built {total} instances"))?;
    let store = common::sense_store(&picked, 6, 3.0, 8);
    let ag = EmbeddingPipeline {
        store: &store,
        config: ClusteringConfig::default(),
    };
    let cpl = BaselinePipeline(Algorithm::OneClusterPerLemma);

    let quick = BootstrapConfig {
        resamples: 100,
        seed: 1,
        ..Default::default()
    };
    let selfcmp = bootstrap_compare(&picked, &ag, &ag, &quick).map_err(|e| e.to_string())?;
    ensure(selfcmp.p_value == 1.0, format!("self-comparison p = {}", selfcmp.p_value))?;

    let config = BootstrapConfig {
        resamples: 1000,
        seed: 42,
        ..Default::default()
    };
    let t = Instant::now();
    let a = bootstrap_compare(&picked, &ag, &cpl, &config).map_err(|e| e.to_string())?;
    let first = t.elapsed();
    let b = bootstrap_compare(&picked, &ag, &cpl, &config).map_err(|e| e.to_string())?;
    within(first, Duration::from_secs(300))?;
    let bits = |r: &wsi_core::significance::BootstrapResult| -> Vec<u64> {
        r.delta_samples.iter().map(|x| x.to_bits()).chain([r.p_value.to_bits(), r.delta_obs.to_bits()]).collect()
    };
    ensure(bits(&a) == bits(&b), "two runs differ")?;
    Ok(format!(
        "self p = 1.0; 1000 resamples on 500 instances in {first:.2?}, bit-identical rerun (p = {:.3})",
        a.p_value
    ))
}

fn llm_mock() -> Outcome {
    let groups = common::synthetic_groups(31, 6, 20);
    let weights = PosWeights::semcor();
    let gold = run_llm_wsi(&groups, &GoldEchoClient::new(&groups, Variant::Hard), Variant::Hard, 3, ModelParams::default(), &weights)
        .map_err(|e| e.to_string())?;
    ensure(gold.mean[&MetricName::B3F] == 1.0, format!("gold echo F-B3 {}", gold.mean[&MetricName::B3F]))?;
    ensure(gold.stddev[&MetricName::B3F] == 0.0, "gold echo stddev is not 0")?;

    let empty = run_llm_wsi(&groups, &EmptyClient, Variant::Hard, 1, ModelParams::default(), &weights)
        .map_err(|e| e.to_string())?;
    let mut cpl = HardClustering::new();
    for g in &groups {
        for (id, c) in baseline_1cpl(g).iter() {
            cpl.assign(id, c);
        }
    }
    let base = evaluate_groups(&groups, &cpl.to_graded(), LabelMode::FirstSense, &weights).map_err(|e| e.to_string())?;
    let got = &empty.runs[0].evaluation.aggregate;
    ensure(got.per_lemma == base.aggregate.per_lemma, "per-lemma scores differ from 1cpl")?;
    ensure(got.all_pos == base.aggregate.all_pos, "all-POS scores differ from 1cpl")?;

    let line = "100. sense_1/0.8 sense_2/0.4";
    let big = LemmaGroup {
        instances: (0..100).map(|i| common::instance(&format!("z{i}"), "z", Pos::Noun, "s", i)).collect(),
        lemma: "z".into(),
        pos: Pos::Noun,
    };
    let job = PromptJob::from_group(&big, Variant::Graded, ModelParams::default()).map_err(|e| e.to_string())?;
    let parsed = parse_response(line, &job);
    let want = vec![("sense_1".to_string(), 0.8), ("sense_2".to_string(), 0.4)];
    ensure(parsed.get(&100) == Some(&want), format!("parsed {parsed:?}"))?;
    let rendered = format!(
        "100. {}",
        want.iter().map(|(s, w)| format!("{s}/{w}")).collect::<Vec<_>>().join(" ")
    );
    ensure(rendered == line, format!("re-rendered `{rendered}`"))?;
    Ok("gold echo F-B3 = 1.0 (stddev 0), empty client equals 1cpl on all metrics, graded line round-trips".into())
}

fn occurrence(id: String, lemma: &str, pos: Pos, i: usize) -> Instance {
    Instance {
        id,
        lemma: lemma.into(),
        pos,
        tokens: vec!["many".into(), format!("{lemma}s"), format!("c{i}")],
        span: [1, 1],
        gold: Vec::new(),
        origin: Origin::Original,
    }
}

fn augmentation_safety() -> Outcome {
    let groups = common::synthetic_groups(41, 5, 12);
    let keys: BTreeSet<_> = groups.iter().map(LemmaGroup::key).collect();
    let occurrences: Vec<Instance> = groups
        .iter()
        .flat_map(|g| (0..200).map(move |i| occurrence(format!("occ:{}:{i}", g.key()), &g.lemma, g.pos, i)))
        .collect();
    let mut lexicon = Lexicon::default();
    for g in &groups {
        lexicon
            .insert(LexiconEntry {
                lemma: g.lemma.clone(),
                pos: g.pos,
                senses: (0..3)
                    .map(|s| LexiconSense {
                        id: format!("{}.{s}", g.lemma),
                        examples: vec![format!("a {} here", g.lemma), format!("the {} there", g.lemma)],
                    })
                    .collect(),
            })
            .map_err(|e| e.to_string())?;
    }

    let lex = lexicon_pool(&lexicon, &keys);
    let llm = llm_generate_pool(
        &groups.iter().flat_map(|g| g.instances.clone()).collect::<Vec<_>>(),
        &EchoClient,
        3,
        4,
    )
    .map_err(|e| e.to_string())?;
    let corpus: Vec<AugmentationPool> = CORPUS_CAPS.iter().map(|&n| sample_corpus_pool(&occurrences, &keys, n, 17)).collect();

    let mut combos: Vec<(String, Vec<&AugmentationPool>)> = vec![("none".into(), vec![])];
    for (n, p) in CORPUS_CAPS.iter().zip(&corpus) {
        combos.push((format!("corpus:{n}"), vec![p]));
        combos.push((format!("corpus:{n}+lexicon+llm"), vec![p, &lex, &llm]));
    }
    combos.push(("lexicon".into(), vec![&lex]));
    combos.push(("llm".into(), vec![&llm]));
    combos.push(("lexicon+llm".into(), vec![&lex, &llm]));

    let config = ClusteringConfig {
        algorithm: Algorithm::AgSilhouette,
        ..Default::default()
    };
    for (name, pools) in &combos {
        let merged: Vec<LemmaGroup> = groups
            .iter()
            .map(|g| merge(g, pools))
            .collect::<Result<_, _>>()
            .map_err(|e| format!("{name}: {e}"))?;
        let mut store = EmbeddingStore::new("synthetic", 0, 3).map_err(|e| e.to_string())?;
        let mut rng = common::rng(5);
        for inst in merged.iter().flat_map(|g| &g.instances) {
            let v: Vec<f32> = (0..3).map(|_| rng.gen_range(-1.0f32..1.0)).collect();
            store.insert(inst.id.clone(), &v).map_err(|e| e.to_string())?;
        }
        let system = cluster_groups(&merged, Some(&store), &config, None, &BTreeMap::new()).map_err(|e| e.to_string())?;
        for (orig, m) in groups.iter().zip(&merged) {
            let want: BTreeSet<&str> = orig.instances.iter().map(|i| i.id.as_str()).collect();
            let gold = GoldStandard::for_group(m, LabelMode::FirstSense).map_err(|e| e.to_string())?;
            let evaluated: BTreeSet<&str> = gold.labels.keys().map(String::as_str).collect();
            ensure(evaluated == want, format!("{name}: {} evaluates a different id set", orig.key()))?;
        }
        evaluate_groups(&merged, &system.to_graded(), LabelMode::FirstSense, &PosWeights::semcor())
            .map_err(|e| format!("{name}: {e}"))?;
    }

    for key in &keys {
        let samples: Vec<Vec<&str>> = corpus
            .iter()
            .map(|p| p.per_lemma[key].iter().map(|i| i.id.as_str()).collect())
            .collect();
        for w in samples.windows(2) {
            ensure(w[1].starts_with(&w[0]), format!("{key}: samples are not nested"))?;
        }
        ensure(samples[0].len() == 10 && samples[3].len() == 150, format!("{key}: wrong sample sizes"))?;
    }
    let again = sample_corpus_pool(&occurrences, &keys, 50, 17);
    ensure(again == corpus[1], "corpus sample is not reproducible")?;
    ensure(lex.source == PoolSource::Lexicon && !llm.is_empty(), "empty pools")?;
    Ok(format!("{} source/N combinations keep the original id set; samples nested over N in {CORPUS_CAPS:?}", combos.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("metric oracle equivalence", metric_oracle),
        ("property matrix", property_matrix),
        ("baseline reproduction (synthetic substitute)", baseline_substitute),
        ("aggregation check", aggregation),
        ("clustering contracts", clustering_contracts),
        ("x-means stability", xmeans_stability),
        ("bootstrap", bootstrap),
        ("llm harness with mock client", llm_mock),
        ("augmentation safety", augmentation_safety),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        match check() {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL {name}: {why}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
