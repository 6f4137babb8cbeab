use crate::decoding::{Candidate, DecodeConfig, Origin};

/// Drops candidates outside multiplicative score windows: natural ones below
/// `best_natural + ln(likelihood_prune)`, forced ones below
/// `best_overall + ln(constraint_prune)`.
pub fn prune(candidates: Vec<Candidate>, cfg: &DecodeConfig) -> Vec<Candidate> {
    let best_overall = candidates
        .iter()
        .map(|c| c.hyp.cum_logprob)
        .fold(f64::NEG_INFINITY, f64::max);
    let best_natural = candidates
        .iter()
        .filter(|c| c.origin == Origin::Natural)
        .map(|c| c.hyp.cum_logprob)
        .fold(f64::NEG_INFINITY, f64::max);
    let natural_cut = best_natural + cfg.likelihood_prune.ln();
    let forced_cut = best_overall + cfg.constraint_prune.ln();
    candidates
        .into_iter()
        .filter(|c| match c.origin {
            Origin::Natural => c.hyp.cum_logprob >= natural_cut,
            Origin::Forced => c.hyp.cum_logprob >= forced_cut,
        })
        .collect()
}
