use std::cmp::Ordering;
use std::collections::VecDeque;

use crate::decoding::Candidate;
use crate::error::{Error, Result};
use crate::types::Hypothesis;

/// Within-bank order: score descending, then shorter, then lexicographic.
pub(crate) fn within_bank(a: &Hypothesis, b: &Hypothesis) -> Ordering {
    b.cum_logprob
        .total_cmp(&a.cum_logprob)
        .then(a.tokens.len().cmp(&b.tokens.len()))
        .then_with(|| a.tokens.cmp(&b.tokens))
}

/// Picks up to `k` candidates by cycling through the banks from the most
/// satisfied down, taking each bank's best remaining member per visit.
pub fn select_beam(candidates: Vec<Candidate>, num_clauses: usize, k: usize) -> Result<Vec<Candidate>> {
    if candidates.is_empty() {
        return Err(Error::Decode {
            step: 0,
            message: "no candidates to select from".into(),
        });
    }
    let top = candidates
        .iter()
        .map(|c| c.hyp.bank())
        .max()
        .unwrap_or(0)
        .max(num_clauses);
    let mut banks: Vec<Vec<Candidate>> = (0..=top).map(|_| Vec::new()).collect();
    for c in candidates {
        banks[c.hyp.bank()].push(c);
    }
    let mut banks: Vec<VecDeque<Candidate>> = banks
        .into_iter()
        .rev()
        .map(|mut b| {
            b.sort_by(|x, y| within_bank(&x.hyp, &y.hyp));
            VecDeque::from(b)
        })
        .collect();

    let mut out = Vec::with_capacity(k);
    while out.len() < k {
        let mut progressed = false;
        for bank in banks.iter_mut() {
            if out.len() == k {
                break;
            }
            if let Some(c) = bank.pop_front() {
                out.push(c);
                progressed = true;
            }
        }
        if !progressed {
            break;
        }
    }
    Ok(out)
}
