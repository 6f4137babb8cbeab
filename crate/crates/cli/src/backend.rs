use std::path::Path;

use obfusc_core::keywords::Dictionary;
use obfusc_core::scorers::{Backend, MockModel, RemoteBackend, RetryPolicy, Scorers};

use crate::{io_error, BackendArgs, CliError};

pub enum Loaded {
    Mock(Box<MockModel>),
    Remote(RemoteBackend),
}

impl Loaded {
    pub fn open(spec: Option<&str>) -> Result<Self, CliError> {
        let spec = spec.ok_or_else(|| {
            CliError::Usage("no backend given; pass --backend or set OBFUSC_BACKEND_URL".into())
        })?;
        if let Some(path) = spec.strip_prefix("mock:") {
            let m = MockModel::from_path(Path::new(path))
                .map_err(|e| CliError::Usage(format!("cannot load mock table {path}: {e}")))?;
            Ok(Loaded::Mock(Box::new(m)))
        } else if spec.starts_with("http://") || spec.starts_with("https://") {
            Ok(Loaded::Remote(RemoteBackend::connect(spec, RetryPolicy::default())?))
        } else {
            Err(CliError::Usage(format!("backend {spec:?} is neither mock:PATH nor an http(s) URL")))
        }
    }

    pub fn scorers(&self) -> Scorers<'_> {
        match self {
            Loaded::Mock(m) => Scorers::from_backend(m.as_ref()),
            Loaded::Remote(r) => Scorers::from_backend(r),
        }
    }

    pub fn identity(&self) -> String {
        match self {
            Loaded::Mock(m) => m.identity(),
            Loaded::Remote(r) => r.identity(),
        }
    }

    /// Replacement words: an explicit word list, else the mock vocabulary.
    pub fn dictionary(&self, args: &BackendArgs) -> Result<Dictionary, CliError> {
        let words: Vec<String> = match (&args.dictionary, self) {
            (Some(p), _) => std::fs::read_to_string(p)
                .map_err(|e| io_error("read dictionary", p, e))?
                .lines()
                .map(str::trim)
                .filter(|w| !w.is_empty() && !w.starts_with('#'))
                .map(String::from)
                .collect(),
            (None, Loaded::Mock(m)) => m.word_list(),
            (None, Loaded::Remote(_)) => {
                return Err(CliError::Usage("a remote backend needs --dictionary".into()))
            }
        };
        let s = self.scorers();
        Ok(Dictionary::build(words, s.morph, s.embed)?)
    }
}
