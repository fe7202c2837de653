//! Record types shared by every stage of the pipeline, plus their file formats.
//!
//! Profiles and comments travel as JSONL (one object per line), feature
//! matrices as CSV, trained models as a single JSON document.

mod io;
mod matrix;

pub use io::{
    atomic_write, load_model, matrix_to_csv, read_comments, read_matrix, read_profiles, save_model,
    to_jsonl, write_comments, write_matrix, write_profiles,
};
pub use matrix::{Dataset, FeatureMatrix};

use serde::{Deserialize, Serialize};

/// Ground-truth or predicted class of an account.
///
/// Encoded as CT = 1 (positive class) and Real = 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    #[serde(rename = "CT")]
    Ct,
    #[serde(rename = "Real")]
    Real,
}

impl Label {
    pub fn class(self) -> u8 {
        match self {
            Label::Ct => 1,
            Label::Real => 0,
        }
    }

    pub fn from_class(class: u8) -> Option<Label> {
        match class {
            1 => Some(Label::Ct),
            0 => Some(Label::Real),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Ct => "CT",
            Label::Real => "Real",
        }
    }
}

impl std::fmt::Display for Label {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Public profile metadata as exported by a collector.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProfileRecord {
    pub user_id: String,
    pub username: String,
    #[serde(default)]
    pub fullname: String,
    #[serde(default)]
    pub biography: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub external_url: Option<String>,
    pub followers: u64,
    pub following: u64,
    pub posts: u64,
    pub videos: u64,
    #[serde(default)]
    pub is_private: bool,
    #[serde(default)]
    pub is_verified: bool,
    #[serde(default)]
    pub has_clips: bool,
    #[serde(default)]
    pub is_business: bool,
    #[serde(default)]
    pub has_category_name: bool,
    #[serde(default)]
    pub has_multiple_categories: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<Label>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
}

/// One comment left under a post.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommentRecord {
    pub comment_id: String,
    pub author_id: String,
    pub post_id: String,
    #[serde(default)]
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub author_label: Option<Label>,
    /// ISO-639-1 code supplied by the producer; carried through untouched.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub language: Option<String>,
}
