//! Target language model, monotone phrase-based beam decoder, and the
//! [`TranslationModel`] bundle that ties them to a phrase table and a
//! subword model.

mod beam;
mod lm;
mod model;

pub use beam::{decode, Hypothesis, NBestList, Segment, UNBOUNDED_BEAM};
pub use lm::{train_lm, train_lm_weighted, NGramLm, DEFAULT_LM_ORDER, DEFAULT_LM_WEIGHT};
pub use model::{format_nbest, DecoderWeights, TrainingConfig, Translation, TranslationModel};
