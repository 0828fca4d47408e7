//! Behavioral profiling and compromised-account detection for social-network
//! message streams.
//!
//! The crate learns a per-account [`BehavioralProfile`] (seven feature
//! histograms) from an account's message history, scores new messages
//! against it, and groups similar messages inside tumbling observation
//! windows to find campaigns run over many hijacked accounts at once.
//!
//! Layers, bottom-up:
//!
//! - [`model`]: messages, feature vocabulary, profile containers, JSONL I/O
//! - [`features`]: feature extraction and n-gram language identification
//! - [`profile`]: profile training, time-of-day smoothing
//! - [`store`]: on-disk profile store
//! - [`scoring`]: per-feature anomaly scores and weighted composition
//! - [`cluster`]: 4-gram / URL similarity grouping inside a window
//! - [`campaign`]: suspicious-group thresholds, bulk applications, popularity
//! - [`pipeline`]: train / score / detect drivers used by the CLI
//! - [`simulate`]: synthetic labeled streams for testing

pub mod campaign;
pub mod cluster;
pub mod config;
pub mod error;
pub mod features;
pub mod model;
pub mod pipeline;
pub mod profile;
pub mod scoring;
pub mod simulate;
pub mod store;

pub use campaign::{
    classify_application, group_threshold, judge_group, lev_ratio, levenshtein, AppClass,
    ApplicationRegistry, ApplicationStats, GroupVerdict,
};
pub use cluster::{
    cluster_window, normalize_url_for_similarity, text_shingles, MessageGroup, NormalizedUrl,
    ObservationWindow, SimilarityKind,
};
pub use config::Config;
pub use error::{Error, Result};
pub use features::{detect_language, extract_features, LanguageDetector, LanguageProfile};
pub use model::{
    canonical_url_domain, message_hour, BehavioralProfile, FeatureClass, FeatureKind, FeatureModel,
    FeatureValue, Message,
};
pub use profile::{build_profile, smooth_time_model, DEFAULT_MIN_STREAM};
pub use scoring::{score_mandatory, score_message, score_optional, FeatureWeights, MessageScore};
pub use store::ProfileStore;
