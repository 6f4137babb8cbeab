use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{ConstraintVariant, DecodeMode};

/// The generation settings explored per sentence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub decode_modes: Vec<DecodeMode>,
    pub constraint_variants: Vec<ConstraintVariant>,
    pub ordered_options: Vec<bool>,
    pub diversity_options: Vec<bool>,
}

/// One point of the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridCell {
    pub mode: DecodeMode,
    pub variant: ConstraintVariant,
    pub ordered: bool,
    pub diversity: bool,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self::full()
    }
}

impl GridSpec {
    /// All 24 combinations.
    pub fn full() -> Self {
        Self {
            decode_modes: vec![DecodeMode::Sample, DecodeMode::Greedy],
            constraint_variants: ConstraintVariant::ALL.to_vec(),
            ordered_options: vec![true, false],
            diversity_options: vec![true, false],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.decode_modes.is_empty()
            || self.constraint_variants.is_empty()
            || self.ordered_options.is_empty()
            || self.diversity_options.is_empty()
        {
            return Err(Error::Input("every grid dimension needs at least one value".into()));
        }
        Ok(())
    }

    /// Cells in a fixed nesting order: mode, variant, ordering, diversity.
    pub fn cells(&self) -> Vec<GridCell> {
        let mut out = Vec::new();
        for &mode in &self.decode_modes {
            for &variant in &self.constraint_variants {
                for &ordered in &self.ordered_options {
                    for &diversity in &self.diversity_options {
                        out.push(GridCell { mode, variant, ordered, diversity });
                    }
                }
            }
        }
        out
    }

    /// Parses a comma list such as `greedy,original,unordered,diverse`.
    /// Each value restricts its dimension; dimensions not mentioned keep
    /// every value. `full` alone selects the whole grid.
    pub fn parse(spec: &str) -> Result<Self> {
        let full = Self::full();
        let mut picked = Self {
            decode_modes: Vec::new(),
            constraint_variants: Vec::new(),
            ordered_options: Vec::new(),
            diversity_options: Vec::new(),
        };
        for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            match item {
                "full" => {}
                "sample" => push_unique(&mut picked.decode_modes, DecodeMode::Sample),
                "greedy" => push_unique(&mut picked.decode_modes, DecodeMode::Greedy),
                "ordered" => push_unique(&mut picked.ordered_options, true),
                "unordered" => push_unique(&mut picked.ordered_options, false),
                "diverse" => push_unique(&mut picked.diversity_options, true),
                "plain" => push_unique(&mut picked.diversity_options, false),
                other => {
                    let v = other
                        .parse::<ConstraintVariant>()
                        .map_err(|_| Error::Input(format!("unknown grid value {other:?}")))?;
                    push_unique(&mut picked.constraint_variants, v);
                }
            }
        }
        fill(&mut picked.decode_modes, full.decode_modes);
        fill(&mut picked.constraint_variants, full.constraint_variants);
        fill(&mut picked.ordered_options, full.ordered_options);
        fill(&mut picked.diversity_options, full.diversity_options);
        Ok(picked)
    }
}

fn push_unique<T: PartialEq>(v: &mut Vec<T>, x: T) {
    if !v.contains(&x) {
        v.push(x);
    }
}

fn fill<T>(v: &mut Vec<T>, all: Vec<T>) {
    if v.is_empty() {
        *v = all;
    }
}
