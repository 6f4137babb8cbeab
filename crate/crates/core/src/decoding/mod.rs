//! Constrained Diverse Beam Search.
//!
//! Each step fetches logits for every live beam, optionally applies
//! [`diverse_preprocess`], expands beams with natural and constraint-forced
//! continuations, prunes by score windows and refills the beam by visiting
//! constraint banks round-robin.
//!
//! Cumulative scores are plain model log-probabilities. Diversity only
//! changes which continuations are proposed; constraints only change which
//! candidates are kept.

mod dpp;
mod expand;
mod prune;
mod search;
mod select;

use serde::{Deserialize, Serialize};

pub use dpp::{argmax, diverse_preprocess};
pub use expand::{blocked_tokens, expand, Candidate, Expansion, Origin, StepContext};
pub use prune::prune;
pub use search::{codibs_generate, generate_from_prompt, prompt_tokens, rank_key_cmp};
pub use select::select_beam;

use crate::error::{Error, Result};
use crate::types::DecodeMode;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecodeConfig {
    pub beam_width: usize,
    /// Defaults to `beam_width`.
    pub num_return: Option<usize>,
    /// Maximum number of generated tokens. Pipelines set this per batch.
    #[serde(skip)]
    pub max_len: usize,
    pub no_repeat_ngram: usize,
    pub likelihood_prune: f64,
    pub constraint_prune: f64,
    /// Logit penalty per earlier beam that chose a token as its argmax.
    pub diversity_lambda: f64,
    pub use_diversity: bool,
    pub mode: DecodeMode,
    pub sample_seed: u64,
    pub early_stop: bool,
}

impl Default for DecodeConfig {
    fn default() -> Self {
        Self {
            beam_width: 50,
            num_return: None,
            max_len: 32,
            no_repeat_ngram: 3,
            likelihood_prune: 0.4,
            constraint_prune: 0.6,
            diversity_lambda: 5000.0,
            use_diversity: true,
            mode: DecodeMode::Greedy,
            sample_seed: 0,
            early_stop: true,
        }
    }
}

impl DecodeConfig {
    pub fn num_return(&self) -> usize {
        self.num_return.unwrap_or(self.beam_width)
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |x: f64| x > 0.0 && x <= 1.0;
        if self.beam_width == 0 {
            return Err(Error::Input("beam_width must be at least 1".into()));
        }
        if !unit(self.likelihood_prune) || !unit(self.constraint_prune) {
            return Err(Error::Input("prune factors must lie in (0,1]".into()));
        }
        if !(self.diversity_lambda >= 0.0 && self.diversity_lambda.is_finite()) {
            return Err(Error::Input("diversity_lambda must be finite and >= 0".into()));
        }
        Ok(())
    }

    /// Continuations proposed per live hypothesis.
    pub fn branching(&self) -> usize {
        2 * self.beam_width
    }
}
