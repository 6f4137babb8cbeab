//! Disjunctive lexical constraints and their satisfaction semantics.
//!
//! A clause is satisfied when one of its alternatives appears as a contiguous
//! token run. For ordered sets a clause only counts once every earlier clause
//! has been satisfied, and its satisfaction position (the index of the last
//! token of the earliest qualifying occurrence) is no earlier than the
//! previous clause's.

use serde::{Deserialize, Serialize};

use crate::types::TokenId;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintTerm {
    pub surface: String,
    pub tokens: Vec<TokenId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClauseOrigin {
    Original,
    Like,
    Similar,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintClause {
    pub alternatives: Vec<ConstraintTerm>,
    pub origin: ClauseOrigin,
}

impl ConstraintClause {
    /// Whether some alternative's token run ends exactly at `end` (inclusive).
    pub fn ends_at(&self, seq: &[TokenId], end: usize) -> bool {
        self.alternatives.iter().any(|alt| {
            let n = alt.tokens.len();
            n > 0 && end + 1 >= n && end < seq.len() && seq[end + 1 - n..=end] == alt.tokens[..]
        })
    }

    /// Earliest end position `>= from` of any alternative occurrence.
    pub fn first_end_from(&self, seq: &[TokenId], from: usize) -> Option<usize> {
        (from..seq.len()).find(|&end| self.ends_at(seq, end))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintSet {
    pub clauses: Vec<ConstraintClause>,
    pub ordered: bool,
}

impl ConstraintSet {
    pub fn new(clauses: Vec<ConstraintClause>, ordered: bool) -> Self {
        Self { clauses, ordered }
    }

    pub fn len(&self) -> usize {
        self.clauses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clauses.is_empty()
    }

    /// Updates `state` for tokens appended at positions `from..seq.len()`.
    pub fn advance(&self, state: &mut ConstraintState, seq: &[TokenId], from: usize) {
        for end in from..seq.len() {
            if self.ordered {
                while state.next_ordered < self.clauses.len()
                    && self.clauses[state.next_ordered].ends_at(seq, end)
                {
                    state.set(state.next_ordered);
                    state.next_ordered += 1;
                }
            } else {
                for (i, clause) in self.clauses.iter().enumerate() {
                    if !state.is_set(i) && clause.ends_at(seq, end) {
                        state.set(i);
                    }
                }
            }
        }
    }

    /// Constraint state of `seq` computed from scratch.
    pub fn state_of(&self, seq: &[TokenId]) -> ConstraintState {
        let mut state = ConstraintState::new(self.clauses.len());
        self.advance(&mut state, seq, 0);
        state
    }

    /// Satisfaction position of each clause. For ordered sets positions are
    /// assigned greedily along the clause prefix and stop at the first
    /// clause that cannot be placed.
    pub fn satisfaction_positions(&self, seq: &[TokenId]) -> Vec<Option<usize>> {
        if !self.ordered {
            return self
                .clauses
                .iter()
                .map(|c| c.first_end_from(seq, 0))
                .collect();
        }
        let mut out = vec![None; self.clauses.len()];
        let mut from = 0;
        for (i, clause) in self.clauses.iter().enumerate() {
            match clause.first_end_from(seq, from) {
                Some(end) => {
                    out[i] = Some(end);
                    from = end;
                }
                None => break,
            }
        }
        out
    }
}

/// True iff some alternative of `clause` occurs contiguously in `seq`.
pub fn satisfies(clause: &ConstraintClause, seq: &[TokenId]) -> bool {
    debug_assert!(!clause.alternatives.is_empty(), "empty clause");
    clause.first_end_from(seq, 0).is_some()
}

/// Number of satisfied clauses; for ordered sets, the length of the longest
/// clause prefix whose satisfaction positions are non-decreasing.
pub fn satisfied_count(set: &ConstraintSet, seq: &[TokenId]) -> usize {
    set.satisfaction_positions(seq)
        .iter()
        .take_while(|p| p.is_some() || !set.ordered)
        .filter(|p| p.is_some())
        .count()
}

/// Per-hypothesis satisfaction bits.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct ConstraintState {
    bits: Vec<u64>,
    count: usize,
    /// Index of the next clause an ordered set is waiting for.
    pub next_ordered: usize,
}

impl ConstraintState {
    pub fn new(num_clauses: usize) -> Self {
        Self {
            bits: vec![0; num_clauses.div_ceil(64)],
            count: 0,
            next_ordered: 0,
        }
    }

    pub fn is_set(&self, clause: usize) -> bool {
        self.bits[clause / 64] & (1 << (clause % 64)) != 0
    }

    fn set(&mut self, clause: usize) {
        if !self.is_set(clause) {
            self.bits[clause / 64] |= 1 << (clause % 64);
            self.count += 1;
        }
    }

    pub fn count(&self) -> usize {
        self.count
    }
}
