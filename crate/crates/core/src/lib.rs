//! Pivot-language statistical machine translation.
//!
//! The crate is organised bottom-up:
//!
//! - [`corpus`]: sentences, parallel/monolingual corpora, cleaning, splitting,
//!   statistics and the synthetic trilingual generator.
//! - [`subword`]: joint byte-pair encoding.
//! - [`tm`]: IBM Model 1 lexical tables, phrase extraction, triangulation and pruning.
//! - [`decoder`]: n-gram language model and the monotone phrase-based beam decoder.
//! - [`pivot`]: transfer cascades, synthetic corpora, backtranslation and the
//!   named registry of pivot systems.
//! - [`eval`]: corpus BLEU in tokenized and detokenized modes.
//! - [`config`] / [`experiment`]: the pipeline configuration and the
//!   direct-versus-pivot experiment harness.

pub mod config;
pub mod corpus;
pub mod decoder;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod io;
pub mod pivot;
pub mod seed;
pub mod subword;
pub mod tm;

pub use error::{Error, Result};
