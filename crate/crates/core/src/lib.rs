//! Decision-support engine that reviews a user's decision against a trained
//! model and, instead of announcing its own conclusion, asks at most two
//! clarifying questions. Also hosts the data-error-prevention tooling
//! (follow-up summaries, minimal antisyndrome mining) and the ward-level
//! indexes.

pub mod archive;
pub mod attention;
pub mod classifier;
pub mod dataset;
pub mod error;
pub mod errprev;
pub mod normalization;
pub mod observation;
pub mod question;
pub mod registry;
pub mod representative;
pub mod schema;
pub mod tree;
pub mod ward;

pub use classifier::{Classifier, Prediction};
pub use dataset::{load_dataset, DecisionLabel, EmpiricalMarginal, LabeledDataset, Marginals};
pub use error::{Error, Result};
pub use normalization::{band_of, normalize, severity_distance, Band, NormalizedValue, ThresholdSet};
pub use schema::{FeatureVector, ParameterKind, ParameterSchema, ParameterSpec, PartialObservation, Value};
pub use tree::{train_tree, DecisionTreeModel, TreeConfig};
