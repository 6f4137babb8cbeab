//! Threshold cascade over scored candidates: entailment, then acceptability,
//! then a final pick, with either the original sentence or a stylometric
//! rewrite as the fallback.

use std::cmp::Ordering;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::style_features;
use crate::scorers::{AcceptabilityScorer, EntailmentScorer};
use crate::text::FunctionWords;
use crate::types::{Generation, ScoredCandidate};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fallback {
    Identity,
    Stylo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FinalSelection {
    MaxCola,
    /// Farthest from the original in style-feature space.
    StyleDistance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterConfig {
    pub nli_threshold: f64,
    pub cola_threshold: f64,
    /// Acceptability bar for the stylometric rewrite.
    pub second_cola_threshold: f64,
    pub fallback: Fallback,
    pub final_selection: FinalSelection,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterPreset::Amt.config()
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, t) in [
            ("nli_threshold", self.nli_threshold),
            ("cola_threshold", self.cola_threshold),
            ("second_cola_threshold", self.second_cola_threshold),
        ] {
            if !(0.0..=1.0).contains(&t) {
                return Err(Error::Input(format!("{name} must lie in [0,1], got {t}")));
            }
        }
        Ok(())
    }
}

/// Tuned threshold settings for the two benchmark domains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FilterPreset {
    #[serde(rename = "amt")]
    Amt,
    #[serde(rename = "amt-stylo")]
    AmtStylo,
    #[serde(rename = "blog")]
    Blog,
    #[serde(rename = "blog-stylo")]
    BlogStylo,
}

impl FilterPreset {
    pub const ALL: [FilterPreset; 4] = [
        FilterPreset::Amt,
        FilterPreset::AmtStylo,
        FilterPreset::Blog,
        FilterPreset::BlogStylo,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FilterPreset::Amt => "amt",
            FilterPreset::AmtStylo => "amt-stylo",
            FilterPreset::Blog => "blog",
            FilterPreset::BlogStylo => "blog-stylo",
        }
    }

    pub fn config(self) -> FilterConfig {
        let (nli, cola, second, fallback) = match self {
            FilterPreset::Amt => (0.30, 0.30, 0.70, Fallback::Identity),
            FilterPreset::AmtStylo => (0.40, 0.40, 0.70, Fallback::Stylo),
            FilterPreset::Blog => (0.10, 0.10, 0.70, Fallback::Identity),
            FilterPreset::BlogStylo => (0.10, 0.10, 0.70, Fallback::Stylo),
        };
        FilterConfig {
            nli_threshold: nli,
            cola_threshold: cola,
            second_cola_threshold: second,
            fallback,
            final_selection: FinalSelection::MaxCola,
        }
    }
}

impl FromStr for FilterPreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| Error::Input(format!("unknown filter preset {s:?}")))
    }
}

/// Annotates each generation with entailment (original as premise) and
/// acceptability. Candidates that are empty or fail to score are dropped.
pub fn score_candidates(
    candidates: &[Generation],
    original: &str,
    nli: &dyn EntailmentScorer,
    cola: &dyn AcceptabilityScorer,
) -> Vec<ScoredCandidate> {
    let mut out = Vec::with_capacity(candidates.len());
    for cand in candidates {
        if cand.text.trim().is_empty() {
            log::debug!("dropping empty candidate");
            continue;
        }
        let scored = nli
            .entail_prob(original, &cand.text)
            .and_then(|n| Ok((n, cola.accept_prob(&cand.text)?)));
        match scored {
            Ok((n, c)) => out.push(ScoredCandidate {
                text: cand.text.clone(),
                tokens: cand.tokens.clone(),
                nli: n,
                cola: c,
                cum_logprob: cand.cum_logprob,
                provenance: cand.provenance.clone(),
            }),
            Err(e) => log::warn!("candidate {:?} left unscored: {e}", cand.text),
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Generated,
    Original,
    Stylo,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterDecision {
    pub text: String,
    pub outcome: Outcome,
    /// The winning candidate when `outcome` is `Generated`.
    pub chosen: Option<ScoredCandidate>,
    pub survivors: usize,
}

/// Candidates passing both thresholds, in input order.
pub fn survivors<'a>(scored: &'a [ScoredCandidate], cfg: &FilterConfig) -> Vec<&'a ScoredCandidate> {
    scored
        .iter()
        .filter(|c| c.nli >= cfg.nli_threshold)
        .filter(|c| c.cola >= cfg.cola_threshold)
        .collect()
}

fn by_cola(a: &ScoredCandidate, b: &ScoredCandidate) -> Ordering {
    a.cola
        .total_cmp(&b.cola)
        .then(a.nli.total_cmp(&b.nli))
        .then(a.cum_logprob.total_cmp(&b.cum_logprob))
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Rewrites `original` and reports the rewrite's acceptability.
pub type StyloFallback<'a> = dyn Fn(&str) -> Result<(String, f64)> + 'a;

/// Runs the cascade. Never fails: a failing fallback degrades to the
/// original sentence.
pub fn filter_cascade(
    scored: &[ScoredCandidate],
    original: &str,
    cfg: &FilterConfig,
    stylo: Option<&StyloFallback<'_>>,
) -> FilterDecision {
    let passed = survivors(scored, cfg);
    let n = passed.len();
    let best = match cfg.final_selection {
        // max_by keeps the last maximum, so equal keys resolve to the later
        // candidate; reverse to prefer earlier ones.
        FinalSelection::MaxCola => passed.iter().rev().copied().max_by(|a, b| by_cola(a, b)),
        FinalSelection::StyleDistance => {
            let fw = FunctionWords::bundled();
            let reference = style_features(original, fw);
            passed
                .iter()
                .rev()
                .copied()
                .map(|c| (distance(&style_features(&c.text, fw), &reference), c))
                .max_by(|a, b| a.0.total_cmp(&b.0).then_with(|| by_cola(a.1, b.1)))
                .map(|(_, c)| c)
        }
    };
    if let Some(best) = best {
        return FilterDecision {
            text: best.text.clone(),
            outcome: Outcome::Generated,
            chosen: Some(best.clone()),
            survivors: n,
        };
    }
    let keep_original = FilterDecision {
        text: original.to_string(),
        outcome: Outcome::Original,
        chosen: None,
        survivors: 0,
    };
    if cfg.fallback == Fallback::Identity {
        return keep_original;
    }
    let Some(stylo) = stylo else {
        log::warn!("stylometric fallback requested but not available");
        return keep_original;
    };
    match stylo(original) {
        Ok((text, cola)) if cola >= cfg.second_cola_threshold => FilterDecision {
            text,
            outcome: Outcome::Stylo,
            chosen: None,
            survivors: 0,
        },
        Ok(_) => keep_original,
        Err(e) => {
            log::warn!("stylometric fallback failed: {e}");
            keep_original
        }
    }
}
