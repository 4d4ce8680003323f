//! End-to-end acceptance checks. Each check prints one line; the process
//! exits non-zero if any fails.

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use newsedits::analytics::ActionStats;
use newsedits::differ::{diff_corpus, row_count_violations, DiffOptions};
use newsedits::synth::{generate_corpus, SynthOptions};
use newsedits::tasks::{evaluate, Example, Predictor, Task};
use newsedits::{Store, VersionKey};
use newsedits_core::aligner::{
    apply_edits, calibrate_threshold, load_fixtures, match_f1, AnnotatedPair, Edge, EditKind, SentenceTag,
};
use newsedits_core::eval::{bootstrap_eval, macro_micro_f1, EvalReport, RandomBaseline};
use newsedits_core::pipeline::{diff_sentences, diff_texts, DiffConfig, PipelineScorer, DEFAULT_THRESHOLD};
use newsedits_core::refactor::{count_crossings, find_crossings, identify_refactors, min_removal_bruteforce, Direction};
use newsedits_core::segmenter::{normalize_text, split_sentences, SentenceList, TokenSeq};
use newsedits_core::similarity::{sim_asym_max, sim_asym_ngram, sim_bleu, sim_hungarian, WordSim};
use newsedits_core::synth::{mutate, shuffle, MutationRates, Vocabulary};
use newsedits_core::SimMethod;

type Outcome = Result<String, String>;
type Check = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($msg)+));
        }
    };
}

fn within(start: Instant, limit: Duration, what: &str) -> Result<f64, String> {
    let secs = start.elapsed().as_secs_f64();
    ensure!(start.elapsed() < limit, "{what} took {secs:.1}s, limit {}s", limit.as_secs());
    Ok(secs)
}

fn grid() -> Vec<f64> {
    (0..20).map(|i| (i as f64 * 0.05 * 100.0).round() / 100.0).collect()
}

// ---------------------------------------------------------------- refactors

struct OracleTally {
    graphs: usize,
    equal: usize,
    divergent: Vec<(Vec<Edge>, usize, usize)>,
}

fn oracle_check(edges: &[Edge], tally: &mut OracleTally) -> Result<(), String> {
    let removed = identify_refactors(edges);
    let gone: BTreeSet<Edge> = removed.edges().collect();
    let rest: Vec<Edge> = edges.iter().copied().filter(|e| !gone.contains(e)).collect();
    ensure!(count_crossings(&rest) == 0, "crossings left in {edges:?}");
    let original = find_crossings(edges);
    for e in &gone {
        ensure!(original.crossings(*e).is_some(), "{e} removed without crossing in {edges:?}");
    }
    let best = min_removal_bruteforce(edges).map_err(|e| e.to_string())?.len();
    tally.graphs += 1;
    if best == gone.len() {
        tally.equal += 1;
    } else {
        tally.divergent.push((edges.to_vec(), gone.len(), best));
    }
    Ok(())
}

fn refactor_oracle() -> Outcome {
    let start = Instant::now();
    let all: Vec<Edge> = (1..=5).flat_map(|o| (1..=5).map(move |n| Edge::new(o, n))).collect();
    let mut tally = OracleTally {
        graphs: 0,
        equal: 0,
        divergent: Vec::new(),
    };
    for mask in 0u32..(1 << all.len()) {
        if mask.count_ones() > 5 {
            continue;
        }
        let edges: Vec<Edge> = (0..all.len()).filter(|b| mask >> b & 1 == 1).map(|b| all[b]).collect();
        oracle_check(&edges, &mut tally)?;
    }
    let exhaustive = tally.graphs;
    ensure!(exhaustive == 68_406, "expected 68406 graphs, saw {exhaustive}");
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..10_000 {
        let k = rng.gen_range(0..=8);
        let edges: BTreeSet<Edge> = (0..k)
            .map(|_| Edge::new(rng.gen_range(1..=8), rng.gen_range(1..=8)))
            .collect();
        let edges: Vec<Edge> = edges.into_iter().collect();
        oracle_check(&edges, &mut tally)?;
    }
    for (edges, greedy, best) in tally.divergent.iter().take(10) {
        let list: Vec<String> = edges.iter().map(ToString::to_string).collect();
        println!("    divergence: greedy {greedy} vs minimum {best} on [{}]", list.join(" "));
    }
    let rate = tally.equal as f64 / tally.graphs as f64;
    ensure!(rate >= 0.95, "greedy matched the minimum on only {:.2}%", 100.0 * rate);
    let secs = within(start, Duration::from_secs(60), "oracle sweep")?;
    Ok(format!(
        "{} graphs ({exhaustive} exhaustive), no residual crossings, greedy = minimum on {:.2}% ({} divergent), {secs:.1}s",
        tally.graphs,
        100.0 * rate,
        tally.divergent.len()
    ))
}

// --------------------------------------------------------------- similarity

fn random_keys(rng: &mut ChaCha8Rng, min: usize, max: usize) -> Vec<String> {
    const WORDS: &[&str] = &["a", "b", "c", "d", "e", "f", "g"];
    (0..rng.gen_range(min..=max))
        .map(|_| WORDS[rng.gen_range(0..WORDS.len())].to_string())
        .collect()
}

fn similarity_axioms() -> Outcome {
    let start = Instant::now();
    let lex = WordSim::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut violations = Vec::new();
    let mut note = |ok: bool, what: &str, x: &[String], y: &[String]| {
        if !ok {
            violations.push(format!("{what}: x={x:?} y={y:?}"));
        }
    };
    let in_range = |v: f64| (0.0..=1.0).contains(&v);
    for case in 0..10_000 {
        let xk = random_keys(&mut rng, 1, 10);
        let mut yk = random_keys(&mut rng, 0, 10);
        if case % 2 == 0 {
            // make x contained in y
            yk.extend(xk.iter().cloned());
            yk.shuffle(&mut rng);
        }
        let (x, y) = (TokenSeq::from_keys(&xk), TokenSeq::from_keys(&yk));
        let max = sim_asym_max(&x, &y, &lex).map_err(|e| e.to_string())?;
        let hun = sim_hungarian(&x, &y, &lex).map_err(|e| e.to_string())?;
        let bleu = sim_bleu(&x, &y, &[0.5, 0.5]).map_err(|e| e.to_string())?;
        let uni = sim_bleu(&x, &y, &[1.0]).map_err(|e| e.to_string())?;
        note(in_range(max) && in_range(hun) && in_range(bleu) && in_range(uni), "range", &xk, &yk);
        for n in 1..=3 {
            if x.len() >= n {
                let v = sim_asym_ngram(&x, &y, n).map_err(|e| e.to_string())?;
                note(in_range(v), "ngram range", &xk, &yk);
                let s = sim_asym_ngram(&x, &x, n).map_err(|e| e.to_string())?;
                note(s == 1.0, "ngram self", &xk, &xk);
            }
        }
        note(hun <= max + 1e-12, "hungarian <= max", &xk, &yk);
        let self_scores = [
            sim_asym_max(&x, &x, &lex),
            sim_hungarian(&x, &x, &lex),
            sim_bleu(&x, &x, &[0.5, 0.5]),
            sim_bleu(&x, &x, &[1.0]),
        ];
        note(self_scores.iter().all(|s| matches!(s, Ok(v) if *v == 1.0)), "self", &xk, &xk);
        let mut pool = yk.clone();
        let contained = xk.iter().all(|k| match pool.iter().position(|p| p == k) {
            Some(i) => {
                pool.swap_remove(i);
                true
            }
            None => false,
        });
        if contained {
            note(max == 1.0, "containment", &xk, &yk);
        }
        let mut longer = yk.clone();
        longer.extend(random_keys(&mut rng, 1, 4));
        let z = TokenSeq::from_keys(&longer);
        let max2 = sim_asym_max(&x, &z, &lex).map_err(|e| e.to_string())?;
        let hun2 = sim_hungarian(&x, &z, &lex).map_err(|e| e.to_string())?;
        note(max2 >= max && hun2 + 1e-12 >= hun, "monotonicity", &xk, &longer);
        if xk.len() >= yk.len() {
            let mut pool = yk.clone();
            let clipped = xk
                .iter()
                .filter(|k| match pool.iter().position(|p| p == *k) {
                    Some(i) => {
                        pool.swap_remove(i);
                        true
                    }
                    None => false,
                })
                .count();
            note((uni - clipped as f64 / xk.len() as f64).abs() < 1e-12, "bleu-1 precision", &xk, &yk);
        }
    }
    ensure!(violations.is_empty(), "{} violations, first {}", violations.len(), violations[0]);
    let secs = within(start, Duration::from_secs(30), "similarity axioms")?;
    Ok(format!("10000 cases, 0 violations, {secs:.1}s"))
}

// --------------------------------------------------------------------- tags

fn check_tags(d: &newsedits_core::PairDiff) -> Result<(), String> {
    ensure!(d.tags_old.len() == d.old.len() && d.tags_new.len() == d.new.len(), "tag counts differ");
    ensure!(!d.tags_old.contains(&SentenceTag::Added), "A on the old side");
    ensure!(!d.tags_new.contains(&SentenceTag::Removed), "R on the new side");
    for (i, t) in d.tags_old.iter().enumerate() {
        for &j in t.indices() {
            ensure!(d.tags_new[j - 1].indices().contains(&(i + 1)), "old {} -> new {j} not mirrored", i + 1);
        }
    }
    for (j, t) in d.tags_new.iter().enumerate() {
        for &i in t.indices() {
            ensure!(d.tags_old[i - 1].indices().contains(&(j + 1)), "new {} -> old {i} not mirrored", j + 1);
        }
    }
    for t in d.tags_old.iter().chain(&d.tags_new) {
        let back: SentenceTag = t.to_string().parse().map_err(|e| format!("{t}: {e}"))?;
        ensure!(back == *t, "{t} does not round-trip");
    }
    ensure!(d.rows().len() == d.old.len().max(d.new.len()), "row count");
    Ok(())
}

fn tag_round_trip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let vocab = Vocabulary::new(400, &mut rng);
    let config = DiffConfig::default();
    for k in 0..1000 {
        let doc = vocab.document(rng.gen_range(1..=15), &mut rng);
        let mut m = mutate(&doc, &vocab, MutationRates::default(), &mut rng);
        if rng.gen_bool(0.2) {
            shuffle(&mut m.new, &mut rng);
        }
        let d = diff_sentences(SentenceList::new(doc.clone()), SentenceList::new(m.new), &config)
            .map_err(|e| e.to_string())?;
        check_tags(&d).map_err(|e| format!("pair {k}: {e}"))?;
        let same = diff_sentences(SentenceList::new(doc.clone()), SentenceList::new(doc.clone()), &config)
            .map_err(|e| e.to_string())?;
        for (i, t) in same.tags_old.iter().chain(&same.tags_new).enumerate() {
            let want = format!("M {} U", i % doc.len() + 1);
            ensure!(t.to_string() == want, "self-diff of pair {k}: {t} instead of {want}");
        }
    }
    Ok("1000 mutated pairs: partition, mirroring and round-trip hold; 1000 self-diffs all \"M i U\"".into())
}

// ----------------------------------------------------------------- recovery

struct RecoveryCase {
    old: Vec<String>,
    new: Vec<String>,
    added: BTreeSet<usize>,
    deleted: BTreeSet<usize>,
    edited: BTreeSet<usize>,
    edges: BTreeSet<Edge>,
}

fn recovery_cases(seed: u64, n: usize) -> Vec<RecoveryCase> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vocab = Vocabulary::new(300, &mut rng);
    (0..n)
        .map(|_| {
            let old = vocab.document(rng.gen_range(5..=15), &mut rng);
            let m = mutate(&old, &vocab, MutationRates::default(), &mut rng);
            RecoveryCase {
                added: m.truth.added.clone(),
                deleted: m.truth.deleted(),
                edited: m.truth.edited(),
                edges: m.truth.edges(),
                old,
                new: m.new,
            }
        })
        .collect()
}

/// Golden recovery F1 (x100) at the calibrated threshold: additions,
/// deletions, edits.
const GOLDEN_RECOVERY: [f64; 3] = [100.0, 100.0, 100.0];

fn mutation_recovery() -> Outcome {
    let tuning: Vec<AnnotatedPair> = recovery_cases(40, 200)
        .into_iter()
        .enumerate()
        .map(|(i, c)| AnnotatedPair {
            article_id: format!("synth-{i}"),
            old_sentences: c.old,
            new_sentences: c.new,
            gold_edges: c.edges.iter().map(|e| (e.old, e.new)).collect(),
        })
        .collect();
    let method = SimMethod::ngram(2);
    let cal = calibrate_threshold(&tuning, &PipelineScorer(&method), &grid()).map_err(|e| e.to_string())?;
    let best = cal.curve.iter().map(|(_, f)| *f).fold(0.0, f64::max);
    let at_default = cal
        .curve
        .iter()
        .find(|(t, _)| (*t - DEFAULT_THRESHOLD).abs() < 1e-9)
        .map(|(_, f)| *f);
    ensure!(at_default == Some(best), "default threshold {DEFAULT_THRESHOLD} is off the calibrated optimum");

    let config = DiffConfig::new(method, cal.threshold).map_err(|e| e.to_string())?;
    // (predicted, gold) per action
    let mut sets: [[BTreeSet<(usize, usize)>; 2]; 3] = Default::default();
    for (k, c) in recovery_cases(41, 500).into_iter().enumerate() {
        let d = diff_sentences(SentenceList::new(c.old), SentenceList::new(c.new), &config)
            .map_err(|e| e.to_string())?;
        for (j, t) in d.tags_new.iter().enumerate() {
            if *t == SentenceTag::Added {
                sets[0][0].insert((k, j + 1));
            }
        }
        for (i, t) in d.tags_old.iter().enumerate() {
            if *t == SentenceTag::Removed {
                sets[1][0].insert((k, i + 1));
            }
            if t.is_changed_match() {
                sets[2][0].insert((k, i + 1));
            }
        }
        sets[0][1].extend(c.added.iter().map(|&j| (k, j)));
        sets[1][1].extend(c.deleted.iter().map(|&i| (k, i)));
        sets[2][1].extend(c.edited.iter().map(|&i| (k, i)));
    }
    let f1: Vec<f64> = sets.iter().map(|[p, g]| 100.0 * match_f1(p, g).f1).collect();
    ensure!(f1[0] >= 90.0 && f1[1] >= 90.0, "addition/deletion F1 {:.2}/{:.2} below 90", f1[0], f1[1]);
    ensure!(f1[2] >= 80.0, "edit F1 {:.2} below 80", f1[2]);
    for (got, want) in f1.iter().zip(GOLDEN_RECOVERY) {
        ensure!((got - want).abs() <= 0.5, "F1 {got:.2} drifted from golden {want:.2}");
    }
    Ok(format!(
        "calibrated T={} (default {DEFAULT_THRESHOLD} on the optimum), F1 additions {:.2}, deletions {:.2}, edits {:.2}",
        cal.threshold, f1[0], f1[1], f1[2]
    ))
}

// -------------------------------------------------------------- calibration

fn fixture_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/calibration_30.jsonl")
}

fn calibration_fixture() -> Outcome {
    let fixtures = load_fixtures(fixture_path()).map_err(|e| e.to_string())?;
    ensure!(fixtures.len() == 30, "fixture has {} pairs", fixtures.len());
    let method = SimMethod::ngram(2);
    let run = || calibrate_threshold(&fixtures, &PipelineScorer(&method), &grid());
    let a = run().map_err(|e| e.to_string())?;
    let b = run().map_err(|e| e.to_string())?;
    ensure!(a == b, "calibration is not deterministic");
    ensure!(a.tuning_ids.len() == 15 && a.heldout_ids.len() == 15, "split is not 15/15");
    let tune: BTreeSet<_> = a.tuning_ids.iter().collect();
    ensure!(a.heldout_ids.iter().all(|id| !tune.contains(id)), "halves overlap");
    ensure!(a.threshold == 0.5, "recovered T={} instead of 0.5", a.threshold);
    let runner_up = a
        .curve
        .iter()
        .filter(|(t, _)| *t != 0.5)
        .map(|(_, f)| *f)
        .fold(0.0, f64::max);
    ensure!(runner_up < a.tuning_f1, "optimum is not unique on the grid");
    ensure!(a.heldout.f1 == 1.0, "held-out F1 {}", a.heldout.f1);

    let out = Command::new(env!("CARGO_BIN_EXE_newsedits"))
        .args(["calibrate", "--fixtures"])
        .arg(fixture_path())
        .output()
        .map_err(|e| e.to_string())?;
    ensure!(out.status.success(), "calibrate failed: {}", String::from_utf8_lossy(&out.stderr));
    let cli: serde_json::Value = serde_json::from_slice(&out.stdout).map_err(|e| e.to_string())?;
    ensure!(cli["threshold"] == 0.5, "CLI recovered {}", cli["threshold"]);
    Ok(format!(
        "T*=0.5 recovered exactly (tuning F1 {:.3} vs next best {:.3}), held-out F1 {:.3}, CLI agrees",
        a.tuning_f1, runner_up, a.heldout.f1
    ))
}

// --------------------------------------------------------------- evaluation

/// Plain recomputation of one bootstrap median, sharing only the resampling
/// stream with the library.
fn reference_bootstrap(preds: &[&str], golds: &[&str], classes: &[&str], resamples: usize, seed: u64) -> (f64, f64) {
    let f1 = |p: &[&str], g: &[&str]| {
        let per_class: Vec<f64> = classes
            .iter()
            .map(|c| {
                let tp = p.iter().zip(g).filter(|(a, b)| *a == c && *b == c).count() as f64;
                let fp = p.iter().zip(g).filter(|(a, b)| *a == c && *b != c).count() as f64;
                let fnn = p.iter().zip(g).filter(|(a, b)| *a != c && *b == c).count() as f64;
                if tp == 0.0 {
                    0.0
                } else {
                    2.0 * tp / (2.0 * tp + fp + fnn)
                }
            })
            .collect();
        let acc = p.iter().zip(g).filter(|(a, b)| a == b).count() as f64 / p.len() as f64;
        (100.0 * per_class.iter().sum::<f64>() / classes.len() as f64, 100.0 * acc)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = preds.len();
    let (mut ma, mut mi) = (Vec::new(), Vec::new());
    for _ in 0..resamples {
        let idx: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
        let p: Vec<&str> = idx.iter().map(|&i| preds[i]).collect();
        let g: Vec<&str> = idx.iter().map(|&i| golds[i]).collect();
        let (a, b) = f1(&p, &g);
        ma.push(a);
        mi.push(b);
    }
    let med = |v: &mut Vec<f64>| {
        v.sort_by(f64::total_cmp);
        let m = v.len() / 2;
        if v.len() % 2 == 1 {
            v[m]
        } else {
            (v[m - 1] + v[m]) / 2.0
        }
    };
    (med(&mut ma), med(&mut mi))
}

fn evaluation_math() -> Outcome {
    let close = |a: f64, b: f64| (a - b).abs() < 1e-9;
    let ab = ["A", "B"];
    let f = |p: &[&str], g: &[&str]| macro_micro_f1(p, g, &ab).map_err(|e| e.to_string());
    ensure!(f(&["A", "B"], &["A", "B"])? == (100.0, 100.0), "perfect predictions");
    let (ma, mi) = f(&["A", "B", "B"], &["A", "A", "B"])?;
    ensure!(close(ma, 200.0 / 3.0) && close(mi, 200.0 / 3.0), "worked example gave {ma}/{mi}");
    ensure!(f(&["B", "B"], &["A", "A"])? == (0.0, 0.0), "all wrong");
    ensure!(macro_micro_f1(&["A"], &["A", "B"], &["A", "B"]).is_err(), "length mismatch accepted");

    for seed in [0, 1, 99] {
        let b = bootstrap_eval(&["A", "B", "A"], &["A", "B", "A"], &ab, 1000, seed).map_err(|e| e.to_string())?;
        ensure!(b.macro_f1 == 100.0 && b.micro_f1 == 100.0, "perfect bootstrap at seed {seed}");
    }
    let (p, g) = (["A", "B", "B"], ["A", "A", "B"]);
    for (resamples, seed) in [(1, 5), (3, 11), (1000, 7), (10, 2)] {
        let lib = bootstrap_eval(&p, &g, &ab, resamples, seed).map_err(|e| e.to_string())?;
        let (rma, rmi) = reference_bootstrap(&p, &g, &ab, resamples, seed);
        ensure!(close(lib.macro_f1, rma) && close(lib.micro_f1, rmi), "bootstrap ({resamples}, {seed}) differs");
    }
    let one = bootstrap_eval(&["B"], &["A"], &ab, 10_000, 3).map_err(|e| e.to_string())?;
    ensure!(one.macro_f1 == 0.0 && one.micro_f1 == 0.0, "degenerate bootstrap");
    let one = bootstrap_eval(&["A"], &["A"], &ab, 10_000, 3).map_err(|e| e.to_string())?;
    ensure!(one.micro_f1 == 100.0 && one.macro_f1 == 50.0, "degenerate bootstrap");

    let abc = ["A", "B", "C"];
    let rb = RandomBaseline::new(&abc, 13).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let golds: Vec<&str> = (0..100_000).map(|_| abc[rng.gen_range(0..3)]).collect();
    let preds = rb.predict(golds.len());
    ensure!(preds == rb.predict(golds.len()), "random baseline not reproducible");
    let preds: Vec<&str> = preds.iter().map(String::as_str).collect();
    let (_, mi) = macro_micro_f1(&preds, &golds, &abc).map_err(|e| e.to_string())?;
    ensure!((mi - 100.0 / 3.0).abs() < 1.0, "random micro F1 {mi}");

    let report = |seed| -> Result<String, String> {
        let mut r = EvalReport::new("random", seed, 1000);
        let preds = RandomBaseline::new(&abc, seed).map_err(|e| e.to_string())?.predict(500);
        let preds: Vec<&str> = preds.iter().map(String::as_str).collect();
        r.add_subtask("t", &preds, &golds[..500], &abc).map_err(|e| e.to_string())?;
        serde_json::to_string(&r).map_err(|e| e.to_string())
    };
    ensure!(report(21)? == report(21)?, "reports differ for one seed");
    ensure!(report(21)? != report(22)?, "seed has no effect");

    let examples: Vec<Example> = (0..50)
        .map(|i| {
            let mut labels = std::collections::BTreeMap::new();
            labels.insert("next_version".to_string(), Some((i % 2).to_string()));
            Example {
                example_id: format!("x/{i}/0"),
                task: Task::NextVersion,
                source: "x".into(),
                a_id: i.to_string(),
                version_id: 0,
                sentence_id: None,
                sentences: Vec::new(),
                labels,
            }
        })
        .collect();
    let run = || -> Result<String, String> {
        let r = evaluate(&examples, &Predictor::Random, 4, 1000).map_err(|e| e.to_string())?;
        serde_json::to_string_pretty(&r).map_err(|e| e.to_string())
    };
    ensure!(run()? == run()?, "task evaluation not byte-identical");
    Ok(format!(
        "worked F1 examples, bootstrap recomputation and degenerate cases exact to 1e-9; reports byte-identical per seed; random micro F1 {mi:.2}"
    ))
}

// -------------------------------------------------------------------- demos

const DEMO1_OLD: &str = "The Bundesbank would only refer to an interview Mr. Weidmann gave to Der Spiegel magazine last week, in which he said, \u{201c}I can do my job best by staying in office.\u{201d}";
const DEMO1_NEW: &str = "The Bundesbank would only refer to an interview published in Der Spiegel magazine last week, in which Mr. Weidmann said, \u{201c}I can carry out my duty best if I remain in office.\u{201d}";
const DEMO2_OLD: &str = "DALLAS\u{2014}Ebola patient Thomas Eric Duncan told his fiancee the day he was diagnosed last week that he regrets exposing her to the deadly virus and had he known he was carrying Ebola, he would have \u{201c}preferred to stay in Liberia and died than bring this to you,\u{201d} a family friend said";
const DEMO2_NEW: &str = "DALLAS\u{2014}Ebola patient Thomas Eric Duncan told his fiancee the day he was diagnosed last week that he regrets exposing her to the deadly virus. Had he known he was carrying Ebola, he would have \u{201c}preferred to stay in Liberia and died than bring this to you,\u{201d} a family friend said.";
const DEMO3_OLD: &str = "\u{201c}The mother, this was the first time seeing her son since he got to the States. She has not seen him for 12 years, and the first time she saw him was through a monitor,\u{201d} said Lloyd.";
const DEMO3_NEW: &str = "\u{201c}She has not seen him for 12 years, and the first time she saw him was through a monitor,\u{201d} said Lloyd. \u{201c}The mother, this was the first time seeing her son since he got to the States.\u{201d} \u{201c}She wept, and wept, and wept.\u{201d}";

/// Compares op and indices, and C/U only where the expected tag has it.
fn tags_agree(got: &[SentenceTag], want: &[&str]) -> Result<(), String> {
    ensure!(got.len() == want.len(), "{} tags, expected {}", got.len(), want.len());
    for (g, w) in got.iter().zip(want) {
        let w: SentenceTag = w.parse().map_err(|e| format!("{w}: {e}"))?;
        let ok = match (g, &w) {
            (
                SentenceTag::Matched { indices: gi, change: gc },
                SentenceTag::Matched { indices: wi, change: wc },
            ) => gi == wi && (wc.is_none() || gc == wc),
            _ => *g == w,
        };
        ensure!(ok, "got {g}, expected {w}");
    }
    Ok(())
}

fn demos() -> Outcome {
    let cfg = DiffConfig::default();
    let d1 = diff_texts(DEMO1_OLD, DEMO1_NEW, &cfg).map_err(|e| e.to_string())?;
    tags_agree(&d1.tags_old, &["M 1 C"]).map_err(|e| format!("demo 1 old: {e}"))?;
    tags_agree(&d1.tags_new, &["M 1 C"]).map_err(|e| format!("demo 1 new: {e}"))?;
    let edits = &d1.word_edits[0].edits;
    let old_tokens: Vec<String> = newsedits_core::segmenter::tokenize(DEMO1_OLD).tokens().to_vec();
    let first = &edits[0];
    ensure!(
        first.kind == EditKind::Replace
            && old_tokens[first.old.clone()].join(" ") == "Mr. Weidmann gave to"
            && first.replacement.join(" ") == "published in",
        "demo 1 first edit is {first:?}"
    );
    let new_tokens = newsedits_core::segmenter::tokenize(DEMO1_NEW).tokens().to_vec();
    ensure!(apply_edits(&old_tokens, edits) == new_tokens, "demo 1 edits do not rebuild the new sentence");

    let d2 = diff_texts(DEMO2_OLD, DEMO2_NEW, &cfg).map_err(|e| e.to_string())?;
    tags_agree(&d2.tags_old, &["M 1 2 C"]).map_err(|e| format!("demo 2 old: {e}"))?;
    tags_agree(&d2.tags_new, &["M 1", "M 1 C"]).map_err(|e| format!("demo 2 new: {e}"))?;

    let d3 = diff_texts(DEMO3_OLD, DEMO3_NEW, &cfg).map_err(|e| e.to_string())?;
    tags_agree(&d3.tags_old, &["M 2 U", "M 1 U"]).map_err(|e| format!("demo 3 old: {e}"))?;
    tags_agree(&d3.tags_new, &["M 2 U", "M 1 U", "A"]).map_err(|e| format!("demo 3 new: {e}"))?;
    ensure!(d3.refactors.len() == 1, "demo 3 has {} refactors", d3.refactors.len());
    ensure!(d3.refactors.removed[0].direction == Direction::Up, "demo 3 refactor is not Up");
    Ok(format!(
        "demo 1 M 1 C with {} word edits, demo 2 M 1 2 C / M 1 C / M 1 C, demo 3 M 2 U / M 1 U / A with one Up refactor {}",
        edits.len(),
        d3.refactors.removed[0].edge
    ))
}

// ---------------------------------------------------------------------- CLI

fn cli(db: &Path, args: &[&str]) -> Result<String, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_newsedits"))
        .arg("--db")
        .arg(db)
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    ensure!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    Ok(String::from_utf8_lossy(&out.stdout).into_owned())
}

fn end_to_end_cli() -> Outcome {
    let start = Instant::now();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (db, corpus, stats_path) = (dir.path().join("c.db"), dir.path().join("c.jsonl"), dir.path().join("s.json"));
    let s = |p: &Path| p.to_string_lossy().into_owned();
    cli(&db, &["--seed", "8", "synth", "--articles", "50", &s(&corpus)])?;
    cli(&db, &["ingest", &s(&corpus)])?;
    cli(&db, &["--workers", "4", "diff"])?;
    cli(&db, &["stats", "--out", &s(&stats_path)])?;
    let before = std::fs::read(&db).map_err(|e| e.to_string())?;
    let rerun = cli(&db, &["--workers", "4", "diff"])?;
    let after = std::fs::read(&db).map_err(|e| e.to_string())?;
    ensure!(before == after, "diff rerun changed the database: {rerun}");
    cli(&db, &["export", &s(&dir.path().join("csv"))])?;
    let secs = within(start, Duration::from_secs(120), "CLI run")?;

    let stats: serde_json::Value =
        serde_json::from_slice(&std::fs::read(&stats_path).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let actions: ActionStats = serde_json::from_value(stats["actions"].clone()).map_err(|e| e.to_string())?;

    // independent scan: parse every stored tag, re-segment every snapshot
    let store = Store::open(&db).map_err(|e| e.to_string())?;
    let (mut edits, mut adds, mut dels) = (0u64, 0u64, 0u64);
    let mut snapshots = BTreeSet::new();
    for r in store.sentence_diffs().map_err(|e| e.to_string())? {
        if let Ok(t) = r.tag_old.parse::<SentenceTag>() {
            edits += t.is_changed_match() as u64;
            dels += (t == SentenceTag::Removed) as u64;
        }
        if let Ok(t) = r.tag_new.parse::<SentenceTag>() {
            adds += (t == SentenceTag::Added) as u64;
        }
        snapshots.insert(r.pair().old_version());
        snapshots.insert(r.pair().new_version());
    }
    let texts: std::collections::HashMap<VersionKey, String> = store
        .articles()
        .map_err(|e| e.to_string())?
        .into_iter()
        .map(|a| (a.key(), a.text))
        .collect();
    let total: u64 = snapshots
        .iter()
        .map(|k| split_sentences(&normalize_text(&texts[k])).len() as u64)
        .sum();
    let refactors = store.refactors().map_err(|e| e.to_string())?.len() as u64;
    ensure!(
        (actions.edits.count, actions.additions.count, actions.deletions.count, actions.refactors.count)
            == (edits, adds, dels, refactors),
        "summary {actions:?} disagrees with scan ({edits}, {adds}, {dels}, {refactors})"
    );
    ensure!(actions.total_sentences == total, "total {} vs scan {total}", actions.total_sentences);
    for (action, row) in stats["positions"].as_object().into_iter().flatten() {
        let sum: f64 = row.as_array().into_iter().flatten().filter_map(|v| v.as_f64()).sum();
        ensure!((sum - 100.0).abs() < 1e-9, "{action} positions sum to {sum}");
    }
    ensure!(row_count_violations(&store).map_err(|e| e.to_string())?.is_empty(), "row-count invariant");
    Ok(format!(
        "50 articles, {} pairs in {secs:.1}s; summary matches tag scan; positions sum to 100; rerun byte-identical",
        actions.pairs
    ))
}


// --------------------------------------------------------------- throughput

fn throughput() -> Outcome {
    let corpus = generate_corpus(&SynthOptions {
        articles: 1000,
        min_versions: 2,
        max_versions: 2,
        min_sentences: 10,
        max_sentences: 15,
        seed: 9,
        ..SynthOptions::default()
    });
    let mut store = Store::open_in_memory().map_err(|e| e.to_string())?;
    store.upsert_articles(&corpus).map_err(|e| e.to_string())?;
    let opts = DiffOptions {
        workers: 4,
        ..DiffOptions::default()
    };
    let start = Instant::now();
    let report = diff_corpus(&mut store, &DiffConfig::default(), &opts).map_err(|e| e.to_string())?;
    let secs = within(start, Duration::from_secs(30), "1000-pair diff")?;
    ensure!(report.written == 1000 && report.failed.is_empty(), "report {report:?}");
    Ok(format!("1000 pairs, ngram:2, 4 workers in {secs:.2}s"))
}

fn main() {
    let checks: [Check; 9] = [
        ("refactor oracle sweep", refactor_oracle),
        ("similarity axioms", similarity_axioms),
        ("tag round-trip", tag_round_trip),
        ("mutation recovery", mutation_recovery),
        ("calibration fixture", calibration_fixture),
        ("evaluation math", evaluation_math),
        ("demo fidelity", demos),
        ("end-to-end CLI", end_to_end_cli),
        ("throughput", throughput),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, check)) in checks.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        match result {
            Ok(detail) => println!("[{}/9] PASS {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("[{}/9] FAIL {name}: {why}", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance check(s) failed");
        std::process::exit(1);
    }
}
