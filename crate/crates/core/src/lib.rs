//! Sentence-level authorship obfuscation by constrained diverse beam search.
//!
//! The engine runs three stages per sentence: keyword extraction,
//! over-generation with Constrained Diverse Beam Search (CoDi-BS), and a
//! threshold filter with an optional stylometric fallback. Every model
//! quantity goes through the traits in [`scorers`], so the whole pipeline
//! runs deterministically against [`scorers::MockModel`] tables.

pub mod constraints;
pub mod decoding;
pub mod error;
pub mod evaluation;
pub mod filtering;
pub mod keywords;
pub mod pipeline;
pub mod scorers;
pub mod stylo;
pub mod text;
pub mod types;

pub use error::{Error, Result};
