use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::constraints::ConstraintSet;
use crate::decoding::DecodeConfig;
use crate::error::Result;
use crate::scorers::{checked_logits, log_softmax, NextTokenScorer};
use crate::types::{DecodeMode, Hypothesis, TokenId};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    Natural,
    /// Produced by appending a constraint alternative.
    Forced,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub hyp: Hypothesis,
    pub origin: Origin,
}

#[derive(Debug, Default)]
pub struct Expansion {
    pub candidates: Vec<Candidate>,
    /// Live hypotheses whose every continuation was blocked.
    pub terminated: Vec<Hypothesis>,
}

pub struct StepContext<'a> {
    pub lm: &'a dyn NextTokenScorer,
    pub prompt: &'a [TokenId],
    pub constraints: &'a ConstraintSet,
    pub cfg: &'a DecodeConfig,
}

/// Tokens that would complete an n-gram already present in `tokens`.
pub fn blocked_tokens(tokens: &[TokenId], n: usize, vocab: usize) -> Vec<bool> {
    let mut blocked = vec![false; vocab];
    if n == 0 || tokens.len() + 1 < n {
        return blocked;
    }
    if n == 1 {
        for &t in tokens {
            blocked[t as usize] = true;
        }
        return blocked;
    }
    let suffix = &tokens[tokens.len() + 1 - n..];
    for start in 0..tokens.len() + 1 - n {
        if &tokens[start..start + n - 1] == suffix {
            blocked[tokens[start + n - 1] as usize] = true;
        }
    }
    blocked
}

fn repeats_ngram(tokens: &[TokenId], n: usize) -> bool {
    if n == 0 || tokens.len() < n {
        return false;
    }
    let mut seen = HashSet::new();
    tokens.windows(n).any(|w| !seen.insert(w))
}

/// Children of every live hypothesis: natural continuations chosen from the
/// processed rows, plus one forced child per alternative of each clause the
/// hypothesis could satisfy next.
pub fn expand<R: Rng>(
    ctx: &StepContext<'_>,
    hyps: &[Hypothesis],
    processed: &[Vec<f64>],
    logprobs: &[Vec<f64>],
    rng: &mut R,
) -> Result<Expansion> {
    let cfg = ctx.cfg;
    let eos = ctx.lm.eos_id();
    let vocab = ctx.lm.vocab_size();
    let mut out = Expansion::default();
    let mut seen: HashSet<Vec<TokenId>> = HashSet::new();

    for ((hyp, scores), lp) in hyps.iter().zip(processed).zip(logprobs) {
        let blocked = blocked_tokens(&hyp.tokens, cfg.no_repeat_ngram, vocab);
        let allowed: Vec<usize> = (0..vocab).filter(|&t| !blocked[t]).collect();
        if allowed.is_empty() {
            let mut done = hyp.clone();
            done.finished = true;
            out.terminated.push(done);
            continue;
        }

        let want = cfg.branching().min(allowed.len());
        let picks: Vec<usize> = match cfg.mode {
            DecodeMode::Greedy => {
                let mut ranked = allowed.clone();
                ranked.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
                ranked.truncate(want);
                ranked
            }
            DecodeMode::Sample => {
                let max = allowed.iter().map(|&t| scores[t]).fold(f64::NEG_INFINITY, f64::max);
                let weighted: Vec<(usize, f64)> = allowed
                    .iter()
                    .map(|&t| (t, (scores[t] - max).exp()))
                    .filter(|(_, w)| *w > 0.0)
                    .collect();
                let take = want.min(weighted.len());
                weighted
                    .choose_multiple_weighted(rng, take, |item| item.1)
                    .expect("weights are finite and positive")
                    .map(|item| item.0)
                    .collect()
            }
        };

        for t in picks {
            let mut child = hyp.clone();
            child.tokens.push(t as TokenId);
            child.cum_logprob += lp[t];
            child.finished = t as TokenId == eos;
            ctx.constraints
                .advance(&mut child.constraints, &child.tokens, hyp.tokens.len());
            if seen.insert(child.tokens.clone()) {
                out.candidates.push(Candidate {
                    hyp: child,
                    origin: Origin::Natural,
                });
            }
        }

        for clause_idx in pending_clauses(ctx.constraints, hyp) {
            for alt in &ctx.constraints.clauses[clause_idx].alternatives {
                let term = &alt.tokens;
                if term.is_empty()
                    || term.contains(&eos)
                    || hyp.tokens.len() + term.len() > cfg.max_len
                {
                    continue;
                }
                let mut tokens = hyp.tokens.clone();
                tokens.extend_from_slice(term);
                if repeats_ngram(&tokens, cfg.no_repeat_ngram) || seen.contains(&tokens) {
                    continue;
                }
                let mut cum = hyp.cum_logprob + lp[term[0] as usize];
                for j in 1..term.len() {
                    let mut prefix = ctx.prompt.to_vec();
                    prefix.extend_from_slice(&hyp.tokens);
                    prefix.extend_from_slice(&term[..j]);
                    cum += log_softmax(&checked_logits(ctx.lm, &prefix)?)[term[j] as usize];
                }
                let mut child = Hypothesis {
                    tokens,
                    cum_logprob: cum,
                    constraints: hyp.constraints.clone(),
                    finished: false,
                };
                ctx.constraints
                    .advance(&mut child.constraints, &child.tokens, hyp.tokens.len());
                seen.insert(child.tokens.clone());
                out.candidates.push(Candidate {
                    hyp: child,
                    origin: Origin::Forced,
                });
            }
        }
    }
    Ok(out)
}

/// Clauses a forced child could newly satisfy: every unsatisfied clause,
/// or only the next one for ordered sets.
fn pending_clauses(set: &ConstraintSet, hyp: &Hypothesis) -> Vec<usize> {
    if set.ordered {
        (hyp.constraints.next_ordered < set.len())
            .then_some(hyp.constraints.next_ordered)
            .into_iter()
            .collect()
    } else {
        (0..set.len()).filter(|&i| !hyp.constraints.is_set(i)).collect()
    }
}
