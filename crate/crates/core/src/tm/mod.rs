//! Translation-model estimation: IBM Model 1 lexical tables, consistent
//! phrase extraction, phrase-table triangulation through a pivot, and pruning.

mod model1;
mod phrase;
mod triangulate;

pub use model1::{train_model1, viterbi_align, AlignmentMatrix, LexicalTable, Model1Output};
pub use phrase::{extract_phrases, PhraseTable, DEFAULT_MAX_PHRASE_LEN};
pub use triangulate::{prune, triangulate, DEFAULT_TOP_K, DEFAULT_TRIANGULATION_FLOOR};
