//! Automatic paper reviews from information-extraction knowledge graphs.
//!
//! The pipeline builds a knowledge graph per paper ([`kg`]), indexes the
//! elements of earlier papers ([`background`]), compares the two to collect
//! per-category evidence ([`evidence`]), predicts 1 to 5 scores with small
//! attentional GRU classifiers ([`scoring`]) and writes template comments
//! whose polarity follows the scores ([`review`]).

pub mod background;
pub mod cli;
pub mod corpus;
pub mod error;
pub mod evidence;
pub mod kg;
pub mod review;
pub mod scoring;

pub use error::{Error, Result};
