//! Blocking HTTP client for the `/v1/*` scoring protocol.

use std::thread;
use std::time::Duration;

use reqwest::blocking::Client;
use reqwest::StatusCode;
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::scorers::wire::{self, *};
use crate::scorers::{
    AcceptabilityScorer, Backend, EmbeddingProvider, EntailmentScorer, InfillScorer,
    MorphologyProvider, NextTokenScorer, PosClass,
};
use crate::types::{TokenId, TokenSequence};

#[derive(Debug, Clone)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub base_delay: Duration,
    pub max_delay: Duration,
    pub timeout: Duration,
    pub max_connections: usize,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_attempts: 4,
            base_delay: Duration::from_millis(200),
            max_delay: Duration::from_secs(10),
            timeout: Duration::from_secs(120),
            max_connections: 8,
        }
    }
}

impl RetryPolicy {
    fn backoff(&self, attempt: u32) -> Duration {
        let factor = 1u32 << attempt.min(16);
        self.base_delay.saturating_mul(factor).min(self.max_delay)
    }
}

pub struct RemoteBackend {
    base: String,
    client: Client,
    policy: RetryPolicy,
    meta: MetaResponse,
}

impl std::fmt::Debug for RemoteBackend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RemoteBackend")
            .field("base", &self.base)
            .field("meta", &self.meta)
            .finish()
    }
}

enum Attempt<T> {
    Done(Result<T>),
    Retry { message: String, wait: Option<Duration> },
}

impl RemoteBackend {
    /// Connects and fetches `/v1/meta`.
    pub fn connect(base_url: &str, policy: RetryPolicy) -> Result<Self> {
        let client = Client::builder()
            .timeout(policy.timeout)
            .pool_max_idle_per_host(policy.max_connections)
            .build()
            .map_err(|e| Error::BackendUnavailable {
                attempts: 0,
                message: e.to_string(),
            })?;
        let mut backend = Self {
            base: base_url.trim_end_matches('/').to_string(),
            client,
            policy,
            meta: MetaResponse {
                vocab_size: 0,
                dim: 0,
                model_ids: Default::default(),
                eos_id: None,
            },
        };
        backend.meta = backend.call(wire::META, &MetaRequest {})?;
        Ok(backend)
    }

    pub fn meta(&self) -> &MetaResponse {
        &self.meta
    }

    pub fn base_url(&self) -> &str {
        &self.base
    }

    /// POSTs `body` to `path`, retrying transport failures and 429/502/503/504
    /// with exponential backoff.
    pub fn call<Req: Serialize, Resp: DeserializeOwned>(&self, path: &str, body: &Req) -> Result<Resp> {
        let url = format!("{}{}", self.base, path);
        let mut last = String::new();
        for attempt in 0..self.policy.max_attempts.max(1) {
            match self.attempt(&url, body) {
                Attempt::Done(result) => return result,
                Attempt::Retry { message, wait } => {
                    log::debug!("{path}: attempt {} failed: {message}", attempt + 1);
                    last = message;
                    if attempt + 1 < self.policy.max_attempts {
                        thread::sleep(wait.unwrap_or_else(|| self.policy.backoff(attempt)).min(self.policy.max_delay));
                    }
                }
            }
        }
        Err(Error::BackendUnavailable {
            attempts: self.policy.max_attempts.max(1),
            message: last,
        })
    }

    fn attempt<Req: Serialize, Resp: DeserializeOwned>(&self, url: &str, body: &Req) -> Attempt<Resp> {
        let response = match self.client.post(url).json(body).send() {
            Ok(r) => r,
            Err(e) => {
                return Attempt::Retry {
                    message: e.to_string(),
                    wait: None,
                }
            }
        };
        let status = response.status();
        let retry_after = response
            .headers()
            .get(reqwest::header::RETRY_AFTER)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.trim().parse::<u64>().ok())
            .map(Duration::from_secs);
        let text = match response.text() {
            Ok(t) => t,
            Err(e) => {
                return Attempt::Retry {
                    message: e.to_string(),
                    wait: None,
                }
            }
        };
        if matches!(
            status,
            StatusCode::TOO_MANY_REQUESTS
                | StatusCode::BAD_GATEWAY
                | StatusCode::SERVICE_UNAVAILABLE
                | StatusCode::GATEWAY_TIMEOUT
        ) {
            return Attempt::Retry {
                message: format!("HTTP {status}"),
                wait: retry_after,
            };
        }
        if !status.is_success() {
            return Attempt::Done(Err(match serde_json::from_str::<ErrorBody>(&text) {
                Ok(e) => Error::Remote {
                    code: e.error.code,
                    message: e.error.message,
                },
                Err(_) => Error::Protocol {
                    message: format!("HTTP {status} without structured error body"),
                    body: text,
                },
            }));
        }
        Attempt::Done(serde_json::from_str(&text).map_err(|e| Error::Protocol {
            message: e.to_string(),
            body: text,
        }))
    }
}

fn check_prob(value: f64, what: &str) -> Result<f64> {
    if value.is_finite() && (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(Error::Protocol {
            message: format!("{what} {value} is not a probability"),
            body: String::new(),
        })
    }
}

impl NextTokenScorer for RemoteBackend {
    fn vocab_size(&self) -> usize {
        self.meta.vocab_size
    }

    fn eos_id(&self) -> TokenId {
        self.meta.eos_id.unwrap_or(0)
    }

    fn logits(&self, prefix: &[TokenId]) -> Result<Vec<f64>> {
        let resp: LogitsResponse = self.call(
            wire::LOGITS,
            &LogitsRequest {
                prefix_ids: prefix.to_vec(),
            },
        )?;
        if resp.logits.len() != self.meta.vocab_size {
            return Err(Error::Protocol {
                message: format!(
                    "logits length {} != vocab size {}",
                    resp.logits.len(),
                    self.meta.vocab_size
                ),
                body: String::new(),
            });
        }
        Ok(resp.logits)
    }

    fn tokenize(&self, text: &str) -> Result<TokenSequence> {
        let resp: TokenizeResponse = self.call(wire::TOKENIZE, &TokenizeRequest { text: text.into() })?;
        Ok(resp.ids)
    }

    fn detokenize(&self, tokens: &[TokenId]) -> Result<String> {
        let resp: DetokenizeResponse = self.call(wire::DETOKENIZE, &DetokenizeRequest { ids: tokens.to_vec() })?;
        Ok(resp.text)
    }
}

impl InfillScorer for RemoteBackend {
    fn infill_prob(&self, ids: &[TokenId], mask_index: usize) -> Result<f64> {
        let resp: InfillResponse = self.call(
            wire::INFILL,
            &InfillRequest {
                ids: ids.to_vec(),
                mask_index,
            },
        )?;
        check_prob(resp.prob, "infill prob")
    }
}

impl EmbeddingProvider for RemoteBackend {
    fn dim(&self) -> usize {
        self.meta.dim
    }

    fn embed(&self, word: &str) -> Result<Vec<f64>> {
        let resp: EmbedResponse = self.call(wire::EMBED, &EmbedRequest { word: word.into() })?;
        if resp.vector.len() != self.meta.dim {
            return Err(Error::Protocol {
                message: format!("embedding dim {} != {}", resp.vector.len(), self.meta.dim),
                body: String::new(),
            });
        }
        Ok(resp.vector)
    }
}

impl EntailmentScorer for RemoteBackend {
    fn entail_prob(&self, premise: &str, hypothesis: &str) -> Result<f64> {
        let resp: NliResponse = self.call(
            wire::NLI,
            &NliRequest {
                premise: premise.into(),
                hypothesis: hypothesis.into(),
            },
        )?;
        check_prob(resp.entail, "entailment")
    }
}

impl AcceptabilityScorer for RemoteBackend {
    fn accept_prob(&self, sentence: &str) -> Result<f64> {
        let resp: ColaResponse = self.call(wire::COLA, &ColaRequest { sentence: sentence.into() })?;
        check_prob(resp.accept, "acceptability")
    }
}

impl MorphologyProvider for RemoteBackend {
    fn lemma(&self, word: &str) -> Result<String> {
        Ok(self.morph(word, word)?.lemma)
    }

    fn pos_class(&self, word: &str, context: &str) -> Result<PosClass> {
        let resp = self.morph(word, context)?;
        resp.pos.parse().map_err(|e: String| Error::Protocol {
            message: e,
            body: resp.pos.clone(),
        })
    }
}

impl RemoteBackend {
    fn morph(&self, word: &str, context: &str) -> Result<MorphResponse> {
        self.call(
            wire::MORPH,
            &MorphRequest {
                word: word.into(),
                context: context.into(),
            },
        )
    }
}

impl Backend for RemoteBackend {
    fn identity(&self) -> String {
        let ids: Vec<String> = self
            .meta
            .model_ids
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect();
        format!("remote:{} [{}]", self.base, ids.join(","))
    }
}
