//! JSON bodies of the `/v1/*` scoring protocol.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::types::TokenId;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LogitsRequest {
    pub prefix_ids: Vec<TokenId>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LogitsResponse {
    pub logits: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InfillRequest {
    pub ids: Vec<TokenId>,
    pub mask_index: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InfillResponse {
    pub prob: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmbedRequest {
    pub word: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmbedResponse {
    pub vector: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NliRequest {
    pub premise: String,
    pub hypothesis: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NliResponse {
    pub entail: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ColaRequest {
    pub sentence: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ColaResponse {
    pub accept: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MorphRequest {
    pub word: String,
    pub context: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MorphResponse {
    pub lemma: String,
    pub pos: String,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct MetaRequest {}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetaResponse {
    pub vocab_size: usize,
    pub dim: usize,
    #[serde(default)]
    pub model_ids: BTreeMap<String, String>,
    /// Protocol extension; absent means token 0.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eos_id: Option<TokenId>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TokenizeRequest {
    pub text: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TokenizeResponse {
    pub ids: Vec<TokenId>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DetokenizeRequest {
    pub ids: Vec<TokenId>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DetokenizeResponse {
    pub text: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: ErrorDetail,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErrorDetail {
    pub code: String,
    pub message: String,
}

pub const LOGITS: &str = "/v1/logits";
pub const INFILL: &str = "/v1/infill";
pub const EMBED: &str = "/v1/embed";
pub const NLI: &str = "/v1/nli";
pub const COLA: &str = "/v1/cola";
pub const MORPH: &str = "/v1/morph";
pub const META: &str = "/v1/meta";
pub const TOKENIZE: &str = "/v1/tokenize";
pub const DETOKENIZE: &str = "/v1/detokenize";
