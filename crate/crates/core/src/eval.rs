//! Classification metrics, constant and random baselines, and bootstrap
//! resampling for the prediction tasks.
//!
//! Scores are reported on a 0-100 scale.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default number of bootstrap resamples.
pub const DEFAULT_RESAMPLES: usize = 1000;

/// Macro and micro F1 over the declared `classes`.
///
/// Per-class F1 is `2TP / (2TP + FP + FN)` with 0 when the denominator is
/// 0; macro averages over every declared class. Micro pools the counts,
/// which for single-label data is accuracy.
pub fn macro_micro_f1<L: AsRef<str>>(preds: &[L], golds: &[L], classes: &[L]) -> Result<(f64, f64)> {
    if preds.len() != golds.len() {
        return Err(Error::InvalidArgument(format!(
            "{} predictions for {} gold labels",
            preds.len(),
            golds.len()
        )));
    }
    let index: BTreeMap<&str, usize> = classes.iter().enumerate().map(|(i, c)| (c.as_ref(), i)).collect();
    let lookup = |l: &L| {
        index
            .get(l.as_ref())
            .copied()
            .ok_or_else(|| Error::InvalidArgument(format!("label {:?} is not a declared class", l.as_ref())))
    };
    let k = classes.len();
    let (mut tp, mut fp, mut fneg) = (vec![0usize; k], vec![0usize; k], vec![0usize; k]);
    for (p, g) in preds.iter().zip(golds) {
        let (p, g) = (lookup(p)?, lookup(g)?);
        if p == g {
            tp[p] += 1;
        } else {
            fp[p] += 1;
            fneg[g] += 1;
        }
    }
    let f1 = |tp: usize, fp: usize, fneg: usize| {
        let denom = 2 * tp + fp + fneg;
        if denom == 0 {
            0.0
        } else {
            2.0 * tp as f64 / denom as f64
        }
    };
    let macro_f1 = if k == 0 {
        0.0
    } else {
        (0..k).map(|c| f1(tp[c], fp[c], fneg[c])).sum::<f64>() / k as f64
    };
    let micro_f1 = f1(tp.iter().sum(), fp.iter().sum(), fneg.iter().sum());
    Ok((100.0 * macro_f1, 100.0 * micro_f1))
}

/// Always predicts the most frequent training label; ties go to the class
/// declared first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MostPopular {
    label: String,
}

impl MostPopular {
    pub fn fit<L: AsRef<str>>(train: &[L], classes: &[L]) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::InvalidArgument("most-popular baseline needs training labels".into()));
        }
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for l in train {
            *counts.entry(l.as_ref()).or_default() += 1;
        }
        let rank = |label: &str| {
            classes
                .iter()
                .position(|c| c.as_ref() == label)
                .unwrap_or(usize::MAX)
        };
        let label = counts
            .iter()
            .max_by(|(a, ca), (b, cb)| ca.cmp(cb).then_with(|| rank(b).cmp(&rank(a))).then_with(|| b.cmp(a)))
            .map(|(l, _)| l.to_string())
            .expect("non-empty");
        Ok(MostPopular { label })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn predict(&self, n: usize) -> Vec<String> {
        vec![self.label.clone(); n]
    }
}

/// Uniform i.i.d. draws from the class list with a seeded ChaCha8 stream.
#[derive(Debug, Clone)]
pub struct RandomBaseline {
    classes: Vec<String>,
    seed: u64,
}

impl RandomBaseline {
    pub fn new<L: AsRef<str>>(classes: &[L], seed: u64) -> Result<Self> {
        if classes.is_empty() {
            return Err(Error::InvalidArgument("random baseline needs at least one class".into()));
        }
        Ok(RandomBaseline {
            classes: classes.iter().map(|c| c.as_ref().to_string()).collect(),
            seed,
        })
    }

    pub fn predict(&self, n: usize) -> Vec<String> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        (0..n)
            .map(|_| self.classes[rng.gen_range(0..self.classes.len())].clone())
            .collect()
    }
}

/// Median of a non-empty sample; the mean of the two middle values when the
/// length is even.
pub fn median(values: &mut [f64]) -> f64 {
    assert!(!values.is_empty(), "median of empty sample");
    values.sort_by(f64::total_cmp);
    let mid = values.len() / 2;
    if values.len() % 2 == 1 {
        values[mid]
    } else {
        (values[mid - 1] + values[mid]) / 2.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapScores {
    pub macro_f1: f64,
    pub micro_f1: f64,
    pub resamples: usize,
}

/// Medians of macro/micro F1 over `n_resamples` with-replacement resamples
/// of the example indices. Resample `r` draws its indices as
/// `gen_range(0..n)` from a `ChaCha8Rng` seeded with `seed`, continuing the
/// same stream across resamples.
pub fn bootstrap_eval<L: AsRef<str>>(
    preds: &[L],
    golds: &[L],
    classes: &[L],
    n_resamples: usize,
    seed: u64,
) -> Result<BootstrapScores> {
    if preds.is_empty() || golds.is_empty() {
        return Err(Error::InvalidArgument("bootstrap needs at least one example".into()));
    }
    if preds.len() != golds.len() {
        return Err(Error::InvalidArgument("prediction and gold lengths differ".into()));
    }
    if n_resamples == 0 {
        return Err(Error::InvalidArgument("bootstrap needs at least one resample".into()));
    }
    let n = preds.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut macros = Vec::with_capacity(n_resamples);
    let mut micros = Vec::with_capacity(n_resamples);
    let mut p = Vec::with_capacity(n);
    let mut g = Vec::with_capacity(n);
    for _ in 0..n_resamples {
        p.clear();
        g.clear();
        for _ in 0..n {
            let i = rng.gen_range(0..n);
            p.push(preds[i].as_ref());
            g.push(golds[i].as_ref());
        }
        let class_refs: Vec<&str> = classes.iter().map(AsRef::as_ref).collect();
        let (ma, mi) = macro_micro_f1(&p, &g, &class_refs)?;
        macros.push(ma);
        micros.push(mi);
    }
    Ok(BootstrapScores {
        macro_f1: median(&mut macros),
        micro_f1: median(&mut micros),
        resamples: n_resamples,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubtaskReport {
    pub classes: Vec<String>,
    pub examples: usize,
    pub macro_f1: f64,
    pub micro_f1: f64,
    pub bootstrap_macro_f1: f64,
    pub bootstrap_micro_f1: f64,
}

/// Scores for every evaluated subtask, keyed by subtask name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub predictor: String,
    pub seed: u64,
    pub resamples: usize,
    pub subtasks: BTreeMap<String, SubtaskReport>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl EvalReport {
    pub fn new(predictor: impl Into<String>, seed: u64, resamples: usize) -> Self {
        EvalReport {
            predictor: predictor.into(),
            seed,
            resamples,
            subtasks: BTreeMap::new(),
            notes: Vec::new(),
        }
    }

    /// Scores one subtask and records it.
    pub fn add_subtask<L: AsRef<str>>(&mut self, name: &str, preds: &[L], golds: &[L], classes: &[L]) -> Result<()> {
        let (macro_f1, micro_f1) = macro_micro_f1(preds, golds, classes)?;
        let boot = bootstrap_eval(preds, golds, classes, self.resamples, self.seed)?;
        self.subtasks.insert(
            name.to_string(),
            SubtaskReport {
                classes: classes.iter().map(|c| c.as_ref().to_string()).collect(),
                examples: preds.len(),
                macro_f1,
                micro_f1,
                bootstrap_macro_f1: boot.macro_f1,
                bootstrap_micro_f1: boot.micro_f1,
            },
        );
        Ok(())
    }
}
