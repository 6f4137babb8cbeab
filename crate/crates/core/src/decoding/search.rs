use std::cmp::Ordering;
use std::collections::HashSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::constraints::ConstraintSet;
use crate::decoding::select::within_bank;
use crate::decoding::{diverse_preprocess, expand, prune, select_beam, DecodeConfig, StepContext};
use crate::error::{Error, Result};
use crate::scorers::{checked_logits, log_softmax, NextTokenScorer};
use crate::types::{Generation, Hypothesis, TokenId, TokenSequence};

/// Output order: more satisfied clauses first, then higher score, then
/// shorter, then lexicographic.
pub fn rank_key_cmp(a: &Hypothesis, b: &Hypothesis) -> Ordering {
    b.bank().cmp(&a.bank()).then_with(|| within_bank(a, b))
}

fn at_step(step: usize, err: Error) -> Error {
    match err {
        Error::Decode { message, .. } => Error::Decode { step, message },
        Error::Input(_) => err,
        other => Error::Backend {
            step,
            source: Box::new(other),
        },
    }
}

/// Decoder prompt for a left context: the end-of-sequence id as a start
/// marker followed by the context tokens.
pub fn prompt_tokens(lm: &dyn NextTokenScorer, left_context: &str) -> Result<TokenSequence> {
    let mut prompt = vec![lm.eos_id()];
    prompt.extend(lm.tokenize(left_context.trim())?);
    Ok(prompt)
}

/// Runs CoDi-BS after `left_context` and returns up to `num_return`
/// finished generations, best first.
pub fn codibs_generate(
    left_context: &str,
    set: &ConstraintSet,
    lm: &dyn NextTokenScorer,
    cfg: &DecodeConfig,
) -> Result<Vec<Generation>> {
    let prompt = prompt_tokens(lm, left_context)?;
    generate_from_prompt(&prompt, set, lm, cfg)
}

/// [`codibs_generate`] with an explicit token prompt.
pub fn generate_from_prompt(
    prompt: &[TokenId],
    set: &ConstraintSet,
    lm: &dyn NextTokenScorer,
    cfg: &DecodeConfig,
) -> Result<Vec<Generation>> {
    cfg.validate()?;
    let finished = search(prompt, set, lm, cfg)?;
    let eos = lm.eos_id();
    finished
        .into_iter()
        .map(|h| {
            let body: Vec<TokenId> = h.tokens.iter().copied().filter(|&t| t != eos).collect();
            Ok(Generation {
                text: lm.detokenize(&body)?.trim().to_string(),
                bank: h.bank(),
                cum_logprob: h.cum_logprob,
                tokens: h.tokens,
                provenance: None,
            })
        })
        .collect()
}

fn search(
    prompt: &[TokenId],
    set: &ConstraintSet,
    lm: &dyn NextTokenScorer,
    cfg: &DecodeConfig,
) -> Result<Vec<Hypothesis>> {
    let ctx = StepContext {
        lm,
        prompt,
        constraints: set,
        cfg,
    };
    let num_return = cfg.num_return();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.sample_seed);
    let mut live = vec![Hypothesis::root(set.len())];
    let mut done: Vec<Hypothesis> = Vec::new();
    let mut seen: HashSet<TokenSequence> = HashSet::new();

    for step in 0..cfg.max_len {
        if live.is_empty() {
            break;
        }
        let mut rows = Vec::with_capacity(live.len());
        for hyp in &live {
            let mut prefix = prompt.to_vec();
            prefix.extend_from_slice(&hyp.tokens);
            rows.push(checked_logits(lm, &prefix).map_err(|e| at_step(step, e))?);
        }
        let processed = if cfg.use_diversity && cfg.diversity_lambda > 0.0 {
            diverse_preprocess(&rows, cfg.diversity_lambda)?
        } else {
            rows.clone()
        };
        let logprobs: Vec<Vec<f64>> = rows.iter().map(|r| log_softmax(r)).collect();

        let expansion =
            expand(&ctx, &live, &processed, &logprobs, &mut rng).map_err(|e| at_step(step, e))?;
        done.extend(expansion.terminated);
        let fresh: Vec<_> = expansion
            .candidates
            .into_iter()
            .filter(|c| !seen.contains(&c.hyp.tokens))
            .collect();
        if fresh.is_empty() {
            live.clear();
            break;
        }
        let kept = prune(fresh, cfg);
        let chosen = select_beam(kept, set.len(), cfg.beam_width).map_err(|e| at_step(step, e))?;

        live = Vec::with_capacity(chosen.len());
        for cand in chosen {
            let mut hyp = cand.hyp;
            seen.insert(hyp.tokens.clone());
            if hyp.finished || hyp.tokens.len() >= cfg.max_len {
                hyp.finished = true;
                done.push(hyp);
            } else {
                live.push(hyp);
            }
        }

        if cfg.early_stop && cannot_improve(&mut done, &live, set.len(), num_return) {
            log::debug!("early stop after step {step}");
            live.clear();
            break;
        }
    }
    // Only reachable when forced children filled the length budget early.
    for mut hyp in live {
        hyp.finished = true;
        done.push(hyp);
    }

    done.sort_by(rank_key_cmp);
    done.dedup_by(|a, b| a.tokens == b.tokens);
    done.truncate(num_return);
    Ok(done)
}

/// True once `num_return` finished hypotheses exist and no live hypothesis,
/// even with every clause satisfied, could outrank the last of them.
fn cannot_improve(done: &mut [Hypothesis], live: &[Hypothesis], clauses: usize, num_return: usize) -> bool {
    if done.len() < num_return {
        return false;
    }
    done.sort_by(rank_key_cmp);
    let cutoff = &done[num_return - 1];
    live.iter().all(|h| {
        cutoff.bank() > clauses || (cutoff.bank() == clauses && cutoff.cum_logprob > h.cum_logprob)
    })
}
