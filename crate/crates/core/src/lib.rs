//! Crowdturfing account detection by self-training, plus the forensic
//! analyses that go with it.

pub mod analysis;
pub mod datamodel;
pub mod error;
pub mod eval;
pub mod features;
pub mod learners;
pub mod selftrain;
pub mod synth;
pub mod urlintel;

pub use datamodel::{CommentRecord, Dataset, FeatureMatrix, Label, ProfileRecord};
pub use error::{Error, Result};
pub use learners::{ClassifierSpec, Model, ModelKind};
