mod common;

use std::collections::{BTreeMap, HashMap};

use common::{brute_cells, brute_mean, brute_median, build, read_tuples, Entries, Val};
use mwpar::analyze::{
    fraction_with_translation, parallelism_histogram, per_language_stats, stratify_metric,
    Aggregate, BucketSet, CountMode, Corpus, Keying, LengthStrata, Metric, ScoreKind, ScoreTable,
    StratifyOptions,
};
use mwpar::analyze::Histogram;
use mwpar::gen::{planted, PlantedSpec, RandomSpec};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_corpus(dir: &std::path::Path, pairs: u64, seed: u64) -> Corpus {
    let records: Vec<_> = RandomSpec {
        pairs,
        langs: 12,
        reuse: 0.5,
        universe: None,
        seed,
    }
    .records()
    .unwrap()
    .collect();
    build(&records, dir, 3);
    Corpus::open(&dir.join("corpus")).unwrap()
}

#[test]
fn published_histogram_arithmetic() {
    let h = Histogram::from_counts(
        &BucketSet::default(),
        &[(1368, 2736), (573, 1895), (177, 1004), (70, 745)],
    );
    let tuple: Vec<f64> = h.rows.iter().map(|r| r.tuple_pct).collect();
    let sent: Vec<f64> = h.rows.iter().map(|r| r.sentence_pct).collect();
    for (got, want) in tuple.iter().zip([62.5, 26.2, 8.1, 3.2]) {
        assert!((got - want).abs() <= 0.05, "{got} vs {want}");
    }
    for (got, want) in sent.iter().zip([42.9, 29.7, 15.7, 11.7]) {
        assert!((got - want).abs() <= 0.05, "{got} vs {want}");
    }
    assert!((h.multiway_tuple_pct() - 37.5).abs() <= 0.05);
}

#[test]
fn histogram_and_profile_equal_recount() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = random_corpus(dir.path(), 30_000, 12);
    let tuples = read_tuples(corpus.dir());

    let h = parallelism_histogram(&corpus, &BucketSet::default()).unwrap();
    let mut counts = [(0u64, 0u64); 4];
    for (_, size, _) in &tuples {
        let b = common::default_bucket(*size);
        counts[b].0 += 1;
        counts[b].1 += *size as u64;
    }
    for (row, c) in h.rows.iter().zip(counts) {
        assert_eq!((row.tuple_count, row.sentence_count), c);
    }
    let pct: f64 = h.rows.iter().map(|r| r.tuple_pct).sum();
    assert!((pct - 100.0).abs() < 1e-9);
    assert_eq!(h.rows[0].sentence_count, 2 * h.rows[0].tuple_count);

    let profile = per_language_stats(&corpus).unwrap();
    let mut per: BTreeMap<String, (u64, u64)> = BTreeMap::new();
    for (_, size, members) in &tuples {
        for lang in members.keys() {
            let e = per.entry(lang.clone()).or_default();
            e.0 += 1;
            e.1 += *size as u64;
        }
    }
    let total: u64 = profile.languages.iter().map(|l| l.unique_sentences).sum();
    assert_eq!(total, h.total_sentences);
    for (lang, (n, sum)) in per {
        let s = profile.get(&lang).unwrap();
        assert_eq!(s.unique_sentences, n);
        assert!((s.mean_parallelism - sum as f64 / n as f64).abs() < 1e-12);
        assert!(s.mean_parallelism >= 2.0);
    }
    for w in profile.languages.windows(2) {
        assert!(w[0].unique_sentences >= w[1].unique_sentences);
    }
}

fn numeric_entries(tuples: &[(u64, usize, common::Members)], rng: &mut ChaCha8Rng, pair: bool) -> Entries {
    let deltas = [-5.0, 0.0, 0.25, 7.5, 100.0];
    if pair {
        let mut m = HashMap::new();
        for (_, _, members) in tuples {
            let ms: Vec<_> = members.iter().collect();
            if rng.random_bool(0.6) {
                let a = ms.choose(rng).unwrap();
                let b = ms.choose(rng).unwrap();
                if a.0 != b.0 {
                    let v = rng.random_range(0..100) as f64 + deltas.choose(rng).unwrap();
                    m.insert((a.0.clone(), a.1 .0.clone(), b.0.clone(), b.1 .0.clone()), Val::Num(v));
                }
            }
        }
        m.insert(("en".into(), "nowhere".into(), "de".into(), "nichts".into()), Val::Num(1.0));
        Entries::Pair(m)
    } else {
        let mut m = HashMap::new();
        for (_, _, members) in tuples {
            for (l, (t, _)) in members {
                if rng.random_bool(0.5) {
                    let v = rng.random_range(0..100) as f64 + deltas.choose(rng).unwrap();
                    m.insert((l.clone(), t.clone()), Val::Num(v));
                }
            }
        }
        m.insert(("en".into(), "absent sentence".into()), Val::Num(3.0));
        Entries::Sentence(m)
    }
}

#[test]
fn stratified_medians_and_means_equal_brute_force() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = random_corpus(dir.path(), 8000, 5);
    let tuples = read_tuples(corpus.dir());
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let edges = [0u32, 25, 50, 100];
    for case in 0..12 {
        let pair = case % 2 == 1;
        let strata = case % 3 == 0;
        let entries = numeric_entries(&tuples, &mut rng, pair);
        let path = dir.path().join(format!("t{case}.tsv"));
        entries.write_tsv(&path);
        let keying = if pair { Keying::Pair } else { Keying::Sentence };
        let table = ScoreTable::from_path(&path, ScoreKind::Numeric, keying, None).unwrap();
        let expected = brute_cells(&tuples, &entries, strata.then_some(&edges[..]));
        for aggregate in [Aggregate::Mean, Aggregate::Median] {
            let opts = StratifyOptions {
                buckets: BucketSet::default(),
                aggregate,
                strata: strata.then(LengthStrata::default),
                sample: None,
            };
            let r = stratify_metric(&corpus, Metric::Scores(&table), &opts).unwrap();
            for cell in &r.cells {
                let b = common::DEFAULT_BUCKET_LABELS.iter().position(|l| *l == cell.bucket).unwrap();
                let s = match &cell.stratum {
                    None => 0,
                    Some(label) => (0..4).position(|i| &common::stratum_label(i, &edges) == label).unwrap(),
                };
                match expected.get(&(b, s)) {
                    None => assert_eq!((cell.n, cell.value), (0, None)),
                    Some(vals) => {
                        assert_eq!(cell.n, vals.len() as u64);
                        let want = match aggregate {
                            Aggregate::Mean => brute_mean(vals),
                            _ => brute_median(vals),
                        };
                        let got = cell.value.unwrap();
                        if aggregate == Aggregate::Median {
                            assert_eq!(got, want);
                        } else {
                            assert!((got - want).abs() <= 1e-9 * want.abs().max(1.0), "{got} vs {want}");
                        }
                    }
                }
            }
        }
    }
}

#[test]
fn constant_scores_give_the_constant_everywhere() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = random_corpus(dir.path(), 5000, 6);
    let tuples = read_tuples(corpus.dir());
    let mut m = HashMap::new();
    for (_, _, members) in &tuples {
        for (l, (t, _)) in members {
            m.insert((l.clone(), t.clone()), Val::Num(0.1));
        }
    }
    let path = dir.path().join("c.tsv");
    Entries::Sentence(m).write_tsv(&path);
    let table = ScoreTable::from_path(&path, ScoreKind::Numeric, Keying::Sentence, None).unwrap();
    for aggregate in [Aggregate::Mean, Aggregate::Median] {
        let opts = StratifyOptions {
            buckets: BucketSet::default(),
            aggregate,
            strata: Some(LengthStrata::default()),
            sample: None,
        };
        let r = stratify_metric(&corpus, Metric::Scores(&table), &opts).unwrap();
        for c in &r.cells {
            if c.n > 0 {
                assert_eq!(c.value, Some(0.1), "{c:?}");
            }
        }
        assert_eq!(r.coverage.unmatched, 0);
        assert_eq!(r.coverage.corpus_unscored, 0);
    }
}

#[test]
fn categorical_columns_sum_to_100() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = random_corpus(dir.path(), 6000, 7);
    let tuples = read_tuples(corpus.dir());
    let labels = ["News", "Conversation", "Sports", "Other"];
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut m = HashMap::new();
    for (_, _, members) in &tuples {
        for (l, (t, _)) in members {
            if rng.random_bool(0.7) {
                m.insert((l.clone(), t.clone()), Val::Label(labels.choose(&mut rng).unwrap().to_string()));
            }
        }
    }
    let entries = Entries::Sentence(m);
    let path = dir.path().join("cat.tsv");
    entries.write_tsv(&path);
    let table = ScoreTable::from_path(
        &path,
        ScoreKind::Categorical,
        Keying::Sentence,
        Some(labels.iter().map(|s| s.to_string()).collect()),
    )
    .unwrap();
    let opts = StratifyOptions {
        buckets: BucketSet::default(),
        aggregate: Aggregate::Distribution,
        strata: None,
        sample: None,
    };
    let r = stratify_metric(&corpus, Metric::Scores(&table), &opts).unwrap();
    let expected = brute_cells(&tuples, &entries, None);
    for b in common::DEFAULT_BUCKET_LABELS {
        let col: Vec<_> = r.cells.iter().filter(|c| c.bucket == b).collect();
        assert_eq!(col.len(), labels.len());
        let bi = common::DEFAULT_BUCKET_LABELS.iter().position(|l| *l == b).unwrap();
        if let Some(vals) = expected.get(&(bi, 0)) {
            let sum: f64 = col.iter().map(|c| c.value.unwrap()).sum();
            assert!((sum - 100.0).abs() <= 0.1);
            for c in col {
                let k = vals.iter().filter(|v| **v == Val::Label(c.label.clone().unwrap())).count();
                assert_eq!(c.n, k as u64);
            }
        }
    }
    let mean = StratifyOptions {
        aggregate: Aggregate::Mean,
        ..opts
    };
    assert_eq!(stratify_metric(&corpus, Metric::Scores(&table), &mean).unwrap_err().exit_code(), 1);
}

#[test]
fn planted_translation_rate_is_recovered() {
    let dir = tempfile::tempdir().unwrap();
    let spec = PlantedSpec {
        tuples: 5000,
        seed: 3,
        ..PlantedSpec::default()
    };
    let p = planted(&spec).unwrap();
    build(&p.records, dir.path(), 4);
    let corpus = Corpus::open(&dir.path().join("corpus")).unwrap();
    let f = fraction_with_translation(&corpus, &p.truth.totals, CountMode::WithNearDuplicates).unwrap();
    for row in &f.rows {
        assert_eq!(row.translated, p.truth.translated[&row.lang]);
        let n = row.total as f64;
        let r = spec.translation_rate;
        let ci = 3.3 * (r * (1.0 - r) / n).sqrt();
        assert!((row.pct / 100.0 - r).abs() <= ci, "{row:?}");
    }
    let sizes: BTreeMap<u32, u64> = read_tuples(corpus.dir()).iter().fold(BTreeMap::new(), |mut m, t| {
        *m.entry(t.1 as u32).or_default() += 1;
        m
    });
    let planted_sizes: BTreeMap<u32, u64> =
        p.truth.tuples_by_size.iter().filter(|(_, n)| **n > 0).map(|(k, n)| (*k, *n)).collect();
    assert_eq!(sizes, planted_sizes);
}

#[test]
fn reports_are_pure() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = random_corpus(dir.path(), 4000, 1);
    let a = per_language_stats(&corpus).unwrap().to_json().unwrap();
    let b = per_language_stats(&corpus).unwrap().to_json().unwrap();
    assert_eq!(a, b);
    let opts = StratifyOptions {
        buckets: BucketSet::parse("2,3,4+").unwrap(),
        aggregate: Aggregate::Median,
        strata: Some(LengthStrata::default()),
        sample: None,
    };
    let x = stratify_metric(&corpus, Metric::Length { lang: Some("en") }, &opts).unwrap().to_tsv();
    let y = stratify_metric(&corpus, Metric::Length { lang: Some("en") }, &opts).unwrap().to_tsv();
    assert_eq!(x, y);
}
