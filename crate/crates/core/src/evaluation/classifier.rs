use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

const HEADER: &str = "nearest-centroid";
const FORMAT_VERSION: u32 = 1;

/// An authorship attribution model over fixed-length feature vectors.
pub trait AttributionClassifier {
    fn fit(&mut self, examples: &[(String, Vec<f64>)]) -> Result<()>;

    fn predict(&self, features: &[f64]) -> Result<String>;
}

/// Assigns the author whose z-scored mean vector is nearest in Euclidean
/// distance. Ties go to the alphabetically first author.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NearestCentroid {
    feature_names: Vec<String>,
    mean: Vec<f64>,
    scale: Vec<f64>,
    /// Sorted by author label.
    centroids: Vec<(String, Vec<f64>)>,
}

impl NearestCentroid {
    pub fn new(feature_names: Vec<String>) -> Self {
        Self {
            feature_names,
            ..Default::default()
        }
    }

    pub fn authors(&self) -> impl Iterator<Item = &str> {
        self.centroids.iter().map(|(a, _)| a.as_str())
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    fn standardize(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.mean)
            .zip(&self.scale)
            .map(|((v, m), s)| (v - m) / s)
            .collect()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }

    /// Tab-separated flat format: header with version, dimension, feature
    /// names, z-score parameters, then one centroid per author.
    pub fn to_text(&self) -> String {
        let row = |xs: &[f64]| xs.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join("\t");
        let mut out = format!("{HEADER}\t{FORMAT_VERSION}\ndim\t{}\n", self.dim());
        let _ = writeln!(out, "features\t{}", self.feature_names.join("\t"));
        let _ = writeln!(out, "mean\t{}", row(&self.mean));
        let _ = writeln!(out, "scale\t{}", row(&self.scale));
        for (author, c) in &self.centroids {
            let _ = writeln!(out, "author\t{author}\t{}", row(c));
        }
        out
    }

    pub fn from_text(source: &str) -> Result<Self> {
        let bad = |m: &str| Error::Input(format!("classifier file: {m}"));
        let mut lines = source.lines();
        let header: Vec<&str> = lines.next().unwrap_or_default().split('\t').collect();
        if header.first() != Some(&HEADER) {
            return Err(bad("missing header"));
        }
        if header.get(1) != Some(&FORMAT_VERSION.to_string().as_str()) {
            return Err(bad(&format!("unsupported version {:?}", header.get(1))));
        }
        let dim: usize = lines
            .next()
            .and_then(|l| l.strip_prefix("dim\t"))
            .and_then(|d| d.parse().ok())
            .ok_or_else(|| bad("missing dimension"))?;
        let floats = |fields: &[&str]| -> Result<Vec<f64>> {
            let v = fields
                .iter()
                .map(|f| f.parse::<f64>().map_err(|_| bad(&format!("bad number {f:?}"))))
                .collect::<Result<Vec<_>>>()?;
            if v.len() != dim {
                return Err(bad(&format!("expected {dim} values, found {}", v.len())));
            }
            Ok(v)
        };
        let mut model = NearestCentroid::default();
        for line in lines.filter(|l| !l.is_empty()) {
            let fields: Vec<&str> = line.split('\t').collect();
            match fields[0] {
                "features" => model.feature_names = fields[1..].iter().map(|s| s.to_string()).collect(),
                "mean" => model.mean = floats(&fields[1..])?,
                "scale" => model.scale = floats(&fields[1..])?,
                "author" if fields.len() >= 2 => {
                    model.centroids.push((fields[1].to_string(), floats(&fields[2..])?))
                }
                other => return Err(bad(&format!("unknown record {other:?}"))),
            }
        }
        if model.mean.len() != dim || model.scale.len() != dim || model.centroids.is_empty() {
            return Err(bad("incomplete model"));
        }
        model.centroids.sort_by(|a, b| a.0.cmp(&b.0));
        Ok(model)
    }
}

impl AttributionClassifier for NearestCentroid {
    fn fit(&mut self, examples: &[(String, Vec<f64>)]) -> Result<()> {
        let Some(first) = examples.first() else {
            return Err(Error::Input("no training examples".into()));
        };
        let dim = first.1.len();
        if let Some((author, _)) = examples.iter().find(|(_, x)| x.len() != dim) {
            return Err(Error::Input(format!("example for {author:?} has the wrong dimension")));
        }
        if !self.feature_names.is_empty() && self.feature_names.len() != dim {
            return Err(Error::Input("feature names do not match the example dimension".into()));
        }
        let n = examples.len() as f64;
        let mut mean = vec![0.0; dim];
        for (_, x) in examples {
            for (m, v) in mean.iter_mut().zip(x) {
                *m += v / n;
            }
        }
        let mut scale = vec![0.0; dim];
        for (_, x) in examples {
            for ((s, v), m) in scale.iter_mut().zip(x).zip(&mean) {
                *s += (v - m).powi(2) / n;
            }
        }
        for s in &mut scale {
            *s = if *s > 0.0 { s.sqrt() } else { 1.0 };
        }
        self.mean = mean;
        self.scale = scale;

        let mut authors: Vec<&str> = examples.iter().map(|(a, _)| a.as_str()).collect();
        authors.sort_unstable();
        authors.dedup();
        if authors.len() < 2 {
            return Err(Error::Input("need at least two authors".into()));
        }
        self.centroids = authors
            .into_iter()
            .map(|author| {
                let rows: Vec<Vec<f64>> = examples
                    .iter()
                    .filter(|(a, _)| a == author)
                    .map(|(_, x)| self.standardize(x))
                    .collect();
                let mut c = vec![0.0; dim];
                for r in &rows {
                    for (ci, v) in c.iter_mut().zip(r) {
                        *ci += v / rows.len() as f64;
                    }
                }
                (author.to_string(), c)
            })
            .collect();
        Ok(())
    }

    fn predict(&self, features: &[f64]) -> Result<String> {
        if self.centroids.is_empty() {
            return Err(Error::Input("classifier has not been fitted".into()));
        }
        if features.len() != self.dim() {
            return Err(Error::Input(format!(
                "feature vector has {} dimensions, model expects {}",
                features.len(),
                self.dim()
            )));
        }
        let z = self.standardize(features);
        let mut best: Option<(&str, f64)> = None;
        for (author, c) in &self.centroids {
            let d: f64 = z.iter().zip(c).map(|(a, b)| (a - b).powi(2)).sum();
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((author, d));
            }
        }
        Ok(best.expect("at least one centroid").0.to_string())
    }
}
