//! Document-level orchestration: segmentation, keyword extraction, grid
//! decoding, filtering and reassembly.

mod checkpoint;
mod grid;
mod preprocess;

use std::collections::{BTreeMap, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use checkpoint::Checkpoint;
pub use grid::{GridCell, GridSpec};
pub use preprocess::{preprocess, segment_document, Document, MIN_WORDS};

use crate::decoding::{codibs_generate, DecodeConfig};
use crate::error::{Error, Result};
use crate::evaluation::{cola_average, content_preservation_nli, unigram_overlap};
use crate::filtering::{filter_cascade, score_candidates, FilterConfig, Outcome};
use crate::keywords::{
    build_constraint_sets, extract_autoregressive_keywords, extract_embedding_keywords,
    extract_infill_keywords, Dictionary, ExpansionContext, KeywordConfig,
};
use crate::scorers::Scorers;
use crate::stylo::{obfuscate_sentence, StyloConfig};
use crate::text::{leading_sentence, FunctionWords};
use crate::types::{Extractor, Generation, Provenance, ScoredCandidate, SentenceUnit};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub keywords: KeywordConfig,
    pub decode: DecodeConfig,
    pub filter: FilterConfig,
    pub stylo: StyloConfig,
    pub grid: GridSpec,
    /// Root of every derived sampling seed.
    pub seed: u64,
    /// How many earlier sentences of the paragraph form the left context.
    /// Unset means all of them.
    pub context_sentences: Option<usize>,
    /// Units are grouped by token length into batches of this size; each
    /// batch decodes up to twice its longest sentence.
    pub batch_size: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            keywords: KeywordConfig::default(),
            decode: DecodeConfig::default(),
            filter: FilterConfig::default(),
            stylo: StyloConfig::default(),
            grid: GridSpec::full(),
            seed: 0,
            context_sentences: None,
            batch_size: 8,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.keywords.validate()?;
        self.decode.validate()?;
        self.filter.validate()?;
        self.stylo.validate()?;
        self.grid.validate()?;
        if self.batch_size == 0 {
            return Err(Error::Input("batch_size must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomeCounts {
    pub generated: usize,
    pub original: usize,
    pub stylo: usize,
}

impl OutcomeCounts {
    fn add(&mut self, outcome: Outcome) {
        match outcome {
            Outcome::Generated => self.generated += 1,
            Outcome::Original => self.original += 1,
            Outcome::Stylo => self.stylo += 1,
        }
    }
}

/// What happened to one sentence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitRecord {
    pub unit: usize,
    pub paragraph: usize,
    pub original: String,
    pub output: String,
    /// Unset for sentences too short to rewrite.
    pub outcome: Option<Outcome>,
    pub survivors: usize,
    pub pool_size: usize,
    pub chosen: Option<ScoredCandidate>,
    pub keywords: BTreeMap<String, Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pool: Option<Vec<ScoredCandidate>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DocumentMetrics {
    pub unigram_overlap: f64,
    pub content_nli: Option<f64>,
    pub cola: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObfuscationResult {
    pub id: String,
    pub obfuscated: String,
    pub outcomes: OutcomeCounts,
    pub metrics: DocumentMetrics,
    pub units: Vec<UnitRecord>,
}

/// The output JSONL record for one document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputRecord {
    pub id: String,
    pub obfuscated: String,
    pub outcomes: OutcomeCounts,
    pub metrics: DocumentMetrics,
    pub provenance: Vec<UnitRecord>,
}

/// The candidate-pool dump record for one sentence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolRecord {
    pub id: String,
    pub unit: usize,
    pub original: String,
    pub candidates: Vec<ScoredCandidate>,
}

impl ObfuscationResult {
    pub fn output_record(&self) -> OutputRecord {
        OutputRecord {
            id: self.id.clone(),
            obfuscated: self.obfuscated.clone(),
            outcomes: self.outcomes,
            metrics: self.metrics.clone(),
            provenance: self
                .units
                .iter()
                .map(|u| UnitRecord { pool: None, ..u.clone() })
                .collect(),
        }
    }

    pub fn pool_records(&self) -> Vec<PoolRecord> {
        self.units
            .iter()
            .filter_map(|u| {
                u.pool.as_ref().map(|pool| PoolRecord {
                    id: self.id.clone(),
                    unit: u.unit,
                    original: u.original.clone(),
                    candidates: pool.clone(),
                })
            })
            .collect()
    }
}

/// Deterministic 64-bit seed from a root seed and a path of labels.
pub fn derive_seed(root: u64, path: &[&str]) -> u64 {
    let mut h = Sha256::new();
    h.update(root.to_le_bytes());
    for part in path {
        h.update((part.len() as u64).to_le_bytes());
        h.update(part.as_bytes());
    }
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

/// Runtime knobs that do not change results.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Worker threads; 0 uses the rayon default.
    pub workers: usize,
    /// Keep every scored candidate in the unit records.
    pub keep_pools: bool,
}

/// Shared, read-only state for obfuscating documents.
pub struct Engine<'a> {
    scorers: Scorers<'a>,
    dictionary: Dictionary,
    function_words: &'a FunctionWords,
    cfg: PipelineConfig,
}

/// Cuts a generation to its first sentence and capitalizes it when the
/// original sentence starts with a capital.
fn tidy_generation(text: &str, original: &str) -> String {
    let first = leading_sentence(text);
    let mut chars = first.chars();
    match (original.chars().next(), chars.next()) {
        (Some(o), Some(c)) if o.is_uppercase() => c.to_uppercase().chain(chars).collect(),
        _ => first.to_string(),
    }
}

impl<'a> Engine<'a> {
    pub fn new(scorers: Scorers<'a>, dictionary: Dictionary, cfg: PipelineConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            scorers,
            dictionary,
            function_words: FunctionWords::bundled(),
            cfg,
        })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.cfg
    }

    fn expansion(&self) -> ExpansionContext<'_> {
        ExpansionContext {
            lm: self.scorers.lm,
            morph: self.scorers.morph,
            embed: self.scorers.embed,
            dictionary: &self.dictionary,
            cfg: &self.cfg.keywords,
        }
    }

    fn keywords(&self, extractor: Extractor, sentence: &str) -> Result<Vec<String>> {
        let s = &self.scorers;
        match extractor {
            Extractor::Embedding => extract_embedding_keywords(sentence, s.embed),
            Extractor::Autoregressive => extract_autoregressive_keywords(sentence, s.lm, &self.cfg.keywords),
            Extractor::Infill => extract_infill_keywords(sentence, s.lm, s.infill, &self.cfg.keywords),
        }
    }

    /// Per-unit decode length: twice the longest sentence, in tokens, of
    /// the unit's length-sorted batch.
    fn max_lengths(&self, units: &[SentenceUnit]) -> Result<Vec<usize>> {
        let mut lengths = Vec::with_capacity(units.len());
        for u in units {
            lengths.push(if u.skip { 0 } else { self.scorers.lm.tokenize(&u.original)?.len() });
        }
        let mut order: Vec<usize> = (0..units.len()).filter(|&i| !units[i].skip).collect();
        order.sort_by_key(|&i| (lengths[i], i));
        let mut out = vec![0; units.len()];
        for batch in order.chunks(self.cfg.batch_size) {
            let longest = batch.iter().map(|&i| lengths[i]).max().unwrap_or(0);
            for &i in batch {
                out[i] = (2 * longest).max(1);
            }
        }
        Ok(out)
    }

    /// All generations for one unit, in (extractor, grid cell) order.
    fn candidate_pool(
        &self,
        doc_seed: u64,
        index: usize,
        unit: &SentenceUnit,
        max_len: usize,
        keywords: &[(Extractor, Vec<String>)],
    ) -> Result<Vec<Generation>> {
        let cells = self.cfg.grid.cells();
        let tasks: Vec<(usize, usize)> = (0..keywords.len())
            .flat_map(|e| (0..cells.len()).map(move |c| (e, c)))
            .collect();
        let pools = tasks
            .par_iter()
            .map(|&(e, c)| {
                let (extractor, words) = &keywords[e];
                let cell = cells[c];
                let set = build_constraint_sets(words, cell.variant, cell.ordered, self.expansion())?;
                let seed = derive_seed(
                    doc_seed,
                    &["decode", &index.to_string(), extractor.as_str(), &c.to_string()],
                );
                let cfg = DecodeConfig {
                    max_len,
                    mode: cell.mode,
                    use_diversity: cell.diversity,
                    sample_seed: seed,
                    ..self.cfg.decode.clone()
                };
                let provenance = Provenance {
                    extractor: *extractor,
                    decode_mode: cell.mode,
                    constraint_variant: cell.variant,
                    ordered: cell.ordered,
                    diversity: cell.diversity,
                    seed,
                };
                let gens = codibs_generate(&unit.left_context, &set, self.scorers.lm, &cfg)?;
                Ok(gens
                    .into_iter()
                    .map(|g| Generation {
                        text: tidy_generation(&g.text, &unit.original),
                        provenance: Some(provenance.clone()),
                        ..g
                    })
                    .collect::<Vec<_>>())
            })
            .collect::<Result<Vec<_>>>()?;
        let mut seen = HashSet::new();
        Ok(pools
            .into_iter()
            .flatten()
            .filter(|g| seen.insert(g.text.clone()))
            .collect())
    }

    fn process_unit(
        &self,
        doc_seed: u64,
        index: usize,
        unit: &SentenceUnit,
        max_len: usize,
        keep_pool: bool,
    ) -> Result<UnitRecord> {
        let mut record = UnitRecord {
            unit: index,
            paragraph: unit.paragraph_index,
            original: unit.original.clone(),
            output: unit.original.clone(),
            outcome: None,
            survivors: 0,
            pool_size: 0,
            chosen: None,
            keywords: BTreeMap::new(),
            pool: None,
        };
        if unit.skip {
            return Ok(record);
        }
        let keywords = Extractor::ALL
            .iter()
            .map(|&e| Ok((e, self.keywords(e, &unit.original)?)))
            .collect::<Result<Vec<_>>>()?;
        let pool = self.candidate_pool(doc_seed, index, unit, max_len, &keywords)?;
        let scored = score_candidates(&pool, &unit.original, self.scorers.nli, self.scorers.cola);

        let stylo_cfg = StyloConfig {
            sample_seed: derive_seed(doc_seed, &["stylo", &index.to_string()]),
            ..self.cfg.stylo.clone()
        };
        let stylo = |s: &str| -> Result<(String, f64)> {
            let text = obfuscate_sentence(s, &self.scorers, &self.dictionary, self.function_words, &stylo_cfg)?;
            let cola = self.scorers.cola.accept_prob(&text)?;
            Ok((text, cola))
        };
        let decision = filter_cascade(&scored, &unit.original, &self.cfg.filter, Some(&stylo));

        record.output = decision.text;
        record.outcome = Some(decision.outcome);
        record.survivors = decision.survivors;
        record.pool_size = scored.len();
        record.chosen = decision.chosen;
        record.keywords = keywords
            .into_iter()
            .map(|(e, w)| (e.as_str().to_string(), w))
            .collect();
        record.pool = keep_pool.then_some(scored);
        Ok(record)
    }

    /// Obfuscates one document. Completed units are appended to
    /// `checkpoint` as they finish, and units already present there are
    /// reused instead of recomputed.
    pub fn run_document(
        &self,
        id: &str,
        text: &str,
        opts: &RunOptions,
        checkpoint: Option<&Checkpoint>,
    ) -> Result<ObfuscationResult> {
        let doc = segment_document(text, self.cfg.context_sentences);
        let max_lens = self.max_lengths(&doc.units)?;
        let doc_seed = derive_seed(self.cfg.seed, &["document", id]);

        let work = || -> Vec<Result<UnitRecord>> {
            doc.units
                .par_iter()
                .enumerate()
                .map(|(i, unit)| {
                    if let Some(done) = checkpoint.and_then(|c| c.get(id, i, &unit.original)) {
                        if done.pool.is_some() || !opts.keep_pools || unit.skip {
                            return Ok(done);
                        }
                    }
                    let rec = self
                        .process_unit(doc_seed, i, unit, max_lens[i], opts.keep_pools)
                        .map_err(|e| Error::Unit { unit: i, source: Box::new(e) })?;
                    if let Some(c) = checkpoint {
                        c.record(id, &rec)?;
                    }
                    Ok(rec)
                })
                .collect()
        };
        let results = if opts.workers == 0 {
            work()
        } else {
            rayon::ThreadPoolBuilder::new()
                .num_threads(opts.workers)
                .build()
                .map_err(|e| Error::Input(format!("cannot start worker pool: {e}")))?
                .install(work)
        };
        let units = results.into_iter().collect::<Result<Vec<_>>>()?;

        let outputs: Vec<String> = units.iter().map(|u| u.output.clone()).collect();
        let obfuscated = doc.reassemble(text, &outputs);
        let mut outcomes = OutcomeCounts::default();
        for o in units.iter().filter_map(|u| u.outcome) {
            outcomes.add(o);
        }
        let metrics = DocumentMetrics {
            unigram_overlap: unigram_overlap(text, &obfuscated),
            content_nli: content_preservation_nli(text, &obfuscated, self.scorers.nli).ok(),
            cola: cola_average(&obfuscated, self.scorers.cola).ok(),
        };
        Ok(ObfuscationResult {
            id: id.to_string(),
            obfuscated,
            outcomes,
            metrics,
            units,
        })
    }
}
