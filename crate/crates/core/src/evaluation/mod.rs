//! Obfuscation metrics and a built-in attribution baseline.

mod classifier;
mod features;

pub use classifier::{AttributionClassifier, NearestCentroid};
pub use features::{style_feature_names, style_features, PUNCTUATION_CLASSES};

use crate::error::{Error, Result};
use crate::scorers::{sequence_logprob, AcceptabilityScorer, EntailmentScorer, NextTokenScorer};
use crate::text::{split_sentences, unigram_f1};

/// Increase in the share of texts not attributed to their true author,
/// from original to obfuscated predictions.
pub fn drop_rate<S: AsRef<str>>(original: &[S], obfuscated: &[S], truth: &[S]) -> Result<f64> {
    if original.len() != truth.len() || obfuscated.len() != truth.len() {
        return Err(Error::Input(format!(
            "prediction lists differ in length: {} original, {} obfuscated, {} labels",
            original.len(),
            obfuscated.len(),
            truth.len()
        )));
    }
    if truth.is_empty() {
        return Err(Error::UndefinedScore("drop rate over zero texts".into()));
    }
    let missed = |preds: &[S]| {
        preds
            .iter()
            .zip(truth)
            .filter(|(p, t)| p.as_ref() != t.as_ref())
            .count() as f64
            / truth.len() as f64
    };
    Ok(missed(obfuscated) - missed(original))
}

/// Mean, over obfuscated sentences, of the best entailment probability from
/// any original sentence.
pub fn content_preservation_nli(original: &str, obfuscated: &str, nli: &dyn EntailmentScorer) -> Result<f64> {
    let obf = split_sentences(obfuscated);
    let orig = split_sentences(original);
    if obf.is_empty() || orig.is_empty() {
        return Err(Error::UndefinedScore("entailment score needs non-empty texts".into()));
    }
    let mut total = 0.0;
    for hyp in &obf {
        let mut best = f64::NEG_INFINITY;
        for premise in &orig {
            best = best.max(nli.entail_prob(premise, hyp)?);
        }
        total += best;
    }
    Ok(total / obf.len() as f64)
}

/// Unigram F1 between the two texts.
pub fn unigram_overlap(original: &str, obfuscated: &str) -> f64 {
    unigram_f1(original, obfuscated)
}

/// Mean acceptability over the sentences of `text`.
pub fn cola_average(text: &str, cola: &dyn AcceptabilityScorer) -> Result<f64> {
    let sentences = split_sentences(text);
    if sentences.is_empty() {
        return Err(Error::UndefinedScore("acceptability of an empty text".into()));
    }
    let mut total = 0.0;
    for s in &sentences {
        total += cola.accept_prob(s)?;
    }
    Ok(total / sentences.len() as f64)
}

/// Unweighted mean of drop rate, entailment and acceptability.
pub fn task_score(drop: f64, nli: f64, cola: f64) -> f64 {
    (drop + nli + cola) / 3.0
}

/// Perplexity of `text` conditioned on the start marker.
pub fn perplexity(text: &str, lm: &dyn NextTokenScorer) -> Result<f64> {
    let ids = lm.tokenize(text.trim())?;
    if ids.is_empty() {
        return Err(Error::UndefinedScore("perplexity of an empty tokenization".into()));
    }
    let lp = sequence_logprob(lm, &ids, &[lm.eos_id()])?;
    Ok((-lp / ids.len() as f64).exp())
}

/// Obfuscated perplexity over original perplexity.
pub fn perplexity_ratio(original: &str, obfuscated: &str, lm: &dyn NextTokenScorer) -> Result<f64> {
    if original.trim() == obfuscated.trim() {
        perplexity(original, lm)?;
        return Ok(1.0);
    }
    Ok(perplexity(obfuscated, lm)? / perplexity(original, lm)?)
}

/// Mean of per-text perplexity ratios over `(original, obfuscated)` pairs.
pub fn mean_perplexity_ratio<S: AsRef<str>>(pairs: &[(S, S)], lm: &dyn NextTokenScorer) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::UndefinedScore("perplexity ratio over zero texts".into()));
    }
    let mut total = 0.0;
    for (o, b) in pairs {
        total += perplexity_ratio(o.as_ref(), b.as_ref(), lm)?;
    }
    Ok(total / pairs.len() as f64)
}
