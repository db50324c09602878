//! Curriculum sampling that orders training data from easy to hard while
//! keeping rarely visited classes in the mix, together with a small
//! supervised harness for comparing sampling strategies.
//!
//! * [`model`]: samples, datasets, JSONL ingestion.
//! * [`difficulty`]: min-max scaling, easy/medium/hard splits, proxy scores.
//! * [`sampler`]: weight functions, visit state, batch drawing.
//! * [`trainer`]: synthetic data, softmax classifier, training loop.
//! * [`report`]: histograms, sampling traces, run comparisons, SVG charts.

pub mod difficulty;
pub mod error;
pub mod model;
pub mod report;
pub mod rng;
pub mod sampler;
pub mod trainer;

pub use error::{Error, Result};
pub use model::{class_histogram, load_dataset, ClassId, Dataset, ObjectAnnotation, Sample};
pub use sampler::{CurriculumParams, CurriculumSampler, Strategy, VisitState};
