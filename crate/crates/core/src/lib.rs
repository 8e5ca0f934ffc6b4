//! User-profile signals for fake news detection.
//!
//! The library turns a social-sharing corpus (users, labeled news, share
//! events, tweet histories) into per-news aggregate profile features and
//! evaluates how well those features separate fake from real news:
//!
//! 1. [`corpus`] loads and validates the corpus; [`bot`] removes likely
//!    automated accounts by score.
//! 2. [`grouping`] selects balanced groups of fake-news and real-news
//!    spreaders from sharing behavior.
//! 3. [`features`] builds per-user vectors (explicit profile fields plus
//!    predicted age, personality, location, political bias, and compressed
//!    image-class signatures) and averages them into one vector per news item.
//! 4. [`analysis`] compares the two spreader groups feature by feature;
//!    [`ml`] trains and evaluates classifiers on the per-news vectors.
//! 5. [`synth`] generates reproducible synthetic corpora with controllable
//!    group differences, so the whole pipeline can be exercised end to end
//!    without real data.
//!
//! Everything randomized takes an explicit seed and is bit-reproducible;
//! collections iterate in sorted order so no result depends on hash ordering.

pub mod analysis;
pub mod bot;
pub mod config;
pub mod corpus;
pub mod error;
pub mod features;
pub mod grouping;
pub mod ml;
pub mod pipeline;
pub mod synth;
pub mod text;

pub use error::{Error, Result};
