//! Samples, datasets and JSONL ingestion.
//!
//! A dataset file holds one JSON object per line. The first line may be a
//! header declaring the class catalog and the feature dimension:
//!
//! ```text
//! {"classes": ["person", "car", "table"], "feature_dim": 2}
//! {"id": "s001", "features": [0.1, -0.3], "objects": [2, 2, 0], "raw_difficulty": 3.1}
//! ```
//!
//! Without a header the catalog is inferred as `class_0 ..= class_<max id>`.

use std::collections::HashSet;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Index into a dataset's class catalog.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClassId(pub usize);

impl ClassId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for ClassId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// One labelled object inside a sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ObjectAnnotation {
    pub class_id: ClassId,
}

impl ObjectAnnotation {
    pub fn new(class_id: usize) -> Self {
        Self {
            class_id: ClassId(class_id),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub features: Option<Vec<f64>>,
    pub objects: Vec<ObjectAnnotation>,
    /// Unbounded score, larger is harder.
    pub raw_difficulty: f64,
    /// Scaled score in `[-1, 1]`, present once the dataset has been scaled.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub difficulty: Option<f64>,
}

impl Sample {
    pub fn new(id: impl Into<String>, classes: &[usize], raw_difficulty: f64) -> Self {
        Self {
            id: id.into(),
            features: None,
            objects: classes.iter().map(|&c| ObjectAnnotation::new(c)).collect(),
            raw_difficulty,
            difficulty: None,
        }
    }

    pub fn with_features(mut self, features: Vec<f64>) -> Self {
        self.features = Some(features);
        self
    }

    /// The label used by the classifier loss: the first annotated object.
    pub fn primary_class(&self) -> ClassId {
        self.objects[0].class_id
    }

    pub fn class_ids(&self) -> impl Iterator<Item = ClassId> + '_ {
        self.objects.iter().map(|o| o.class_id)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Header {
    classes: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    feature_dim: Option<usize>,
}

/// An immutable, validated collection of samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    samples: Vec<Sample>,
    classes: Vec<String>,
    feature_dim: Option<usize>,
}

impl Dataset {
    /// Validates and builds a dataset. When `feature_dim` is `None` it is
    /// taken from the first sample that carries features.
    pub fn new(
        samples: Vec<Sample>,
        classes: Vec<String>,
        feature_dim: Option<usize>,
    ) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidDataset("no samples".into()));
        }
        let feature_dim = feature_dim.or_else(|| {
            samples
                .iter()
                .find_map(|s| s.features.as_ref().map(Vec::len))
        });

        let mut seen = HashSet::with_capacity(samples.len());
        for s in &samples {
            let bad = |message: String| Error::InvalidSample {
                id: s.id.clone(),
                message,
            };
            if !seen.insert(s.id.as_str()) {
                return Err(bad("duplicate id".into()));
            }
            if s.objects.is_empty() {
                return Err(bad("sample has no objects".into()));
            }
            if let Some(c) = s.class_ids().find(|c| c.0 >= classes.len()) {
                return Err(bad(format!(
                    "class id {c} outside catalog of {} classes",
                    classes.len()
                )));
            }
            if !s.raw_difficulty.is_finite() {
                return Err(bad("raw_difficulty is not finite".into()));
            }
            if let Some(d) = s.difficulty {
                if !(-1.0..=1.0).contains(&d) {
                    return Err(bad(format!("scaled difficulty {d} outside [-1, 1]")));
                }
            }
            if let Some(f) = &s.features {
                if Some(f.len()) != feature_dim {
                    return Err(bad(format!(
                        "feature vector has dimension {}, expected {}",
                        f.len(),
                        feature_dim.unwrap_or(0)
                    )));
                }
                if f.iter().any(|x| !x.is_finite()) {
                    return Err(bad("non-finite feature".into()));
                }
            }
        }
        if classes.is_empty() {
            return Err(Error::InvalidDataset("empty class catalog".into()));
        }
        Ok(Self {
            samples,
            classes,
            feature_dim,
        })
    }

    /// Builds a dataset whose catalog is `class_0 ..= class_<max id>`.
    pub fn with_inferred_classes(samples: Vec<Sample>) -> Result<Self> {
        let n = samples
            .iter()
            .flat_map(|s| s.class_ids())
            .map(|c| c.0 + 1)
            .max()
            .unwrap_or(0);
        Self::new(samples, default_class_names(n), None)
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn sample(&self, index: usize) -> &Sample {
        &self.samples[index]
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn feature_dim(&self) -> Option<usize> {
        self.feature_dim
    }

    /// True when every sample carries a scaled difficulty.
    pub fn is_scaled(&self) -> bool {
        self.samples.iter().all(|s| s.difficulty.is_some())
    }

    /// Returns a copy with `f` applied to every sample, revalidated.
    pub fn map_samples(&self, f: impl FnMut(&Sample) -> Sample) -> Result<Self> {
        Self::new(
            self.samples.iter().map(f).collect(),
            self.classes.clone(),
            self.feature_dim,
        )
    }

    pub fn to_jsonl(&self, mut out: impl Write) -> Result<()> {
        let header = Header {
            classes: self.classes.clone(),
            feature_dim: self.feature_dim,
        };
        serde_json::to_writer(&mut out, &header)?;
        writeln!(out).map_err(|e| Error::io("writing dataset", e))?;
        for s in &self.samples {
            serde_json::to_writer(&mut out, s)?;
            writeln!(out).map_err(|e| Error::io("writing dataset", e))?;
        }
        Ok(())
    }

    pub fn save_jsonl(&self, path: &Path) -> Result<()> {
        let file =
            File::create(path).map_err(|e| Error::io(format!("creating {}", path.display()), e))?;
        let mut w = BufWriter::new(file);
        self.to_jsonl(&mut w)?;
        w.flush()
            .map_err(|e| Error::io(format!("writing {}", path.display()), e))
    }
}

pub(crate) fn default_class_names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("class_{i}")).collect()
}

/// Reads a JSONL dataset file.
pub fn load_dataset(path: &Path) -> Result<Dataset> {
    let file = File::open(path).map_err(|e| Error::io(format!("opening {}", path.display()), e))?;
    read_jsonl(BufReader::new(file), path)
}

/// Parses JSONL from any reader; `origin` is only used in error messages.
pub fn read_jsonl(reader: impl BufRead, origin: &Path) -> Result<Dataset> {
    let mut header: Option<Header> = None;
    let mut samples = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::io(format!("reading {}", origin.display()), e))?;
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            path: origin.to_path_buf(),
            line: lineno,
            message,
        };
        let value: serde_json::Value =
            serde_json::from_str(&line).map_err(|e| parse_err(e.to_string()))?;
        let is_header = value.get("classes").is_some() && value.get("id").is_none();
        if is_header {
            if header.is_some() || !samples.is_empty() {
                return Err(parse_err("header record must be the first line".into()));
            }
            header = Some(serde_json::from_value(value).map_err(|e| parse_err(e.to_string()))?);
        } else {
            let s: Sample = serde_json::from_value(value).map_err(|e| parse_err(e.to_string()))?;
            samples.push(s);
        }
    }
    match header {
        Some(h) => Dataset::new(samples, h.classes, h.feature_dim),
        None => Dataset::with_inferred_classes(samples),
    }
}

/// Number of annotated objects per class across the whole dataset.
pub fn class_histogram(dataset: &Dataset) -> Vec<usize> {
    let mut counts = vec![0usize; dataset.num_classes()];
    for c in dataset.samples().iter().flat_map(|s| s.class_ids()) {
        counts[c.0] += 1;
    }
    counts
}
