//! Pivot strategies: the transfer cascade, synthetic source and target
//! corpora, and backtranslation augmentation. [`systems`] packages them as
//! named, runtime-selectable systems.

pub mod systems;

use crate::corpus::{concat, stats, CorpusStats, MonolingualCorpus, ParallelCorpus, Provenance, SentencePair, Sentence};
use crate::decoder::{NGramLm, TrainingConfig, TranslationModel};
use crate::error::{Error, Result};

pub use systems::{BuildContext, PivotSystem, Registry, SystemData, Translator};

#[derive(Debug, Clone)]
pub struct CascadeConfig {
    /// Pivot hypotheses kept from the first leg.
    pub n: usize,
    /// Target hypotheses kept per pivot.
    pub m: usize,
    /// Optional word-level target LM added to the combined score.
    pub rescore_lm: Option<NGramLm>,
    pub rescore_weight: f64,
}

impl Default for CascadeConfig {
    fn default() -> Self {
        CascadeConfig {
            n: 1,
            m: 1,
            rescore_lm: None,
            rescore_weight: 0.0,
        }
    }
}

impl CascadeConfig {
    pub fn new(n: usize, m: usize) -> Self {
        CascadeConfig {
            n,
            m,
            ..CascadeConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.m == 0 {
            return Err(Error::Config(format!(
                "cascade needs n >= 1 and m >= 1, got n={} m={}",
                self.n, self.m
            )));
        }
        if !self.rescore_weight.is_finite() {
            return Err(Error::Config("rescoring weight must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub pivot: Sentence,
    pub target: Sentence,
    pub leg1: f64,
    pub leg2: f64,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CascadeResult {
    pub best: Sentence,
    /// Best first. Equal scores keep pivot rank, then target rank.
    pub candidates: Vec<Candidate>,
}

/// Translates `s` through the pivot. Each of the `n` pivot hypotheses is
/// detokenized and re-segmented by the second leg's own subword model before
/// it is decoded into `m` targets. A candidate scores leg 1 + leg 2, plus the
/// weighted rescoring LM when one is configured.
pub fn transfer_translate(
    src_to_pivot: &TranslationModel,
    pivot_to_tgt: &TranslationModel,
    s: &Sentence,
    cfg: &CascadeConfig,
) -> CascadeResult {
    let mut candidates = Vec::with_capacity(cfg.n * cfg.m);
    for pivot in src_to_pivot.translate_nbest(s, cfg.n.max(1)) {
        for target in pivot_to_tgt.translate_nbest(&pivot.text, cfg.m.max(1)) {
            let mut score = pivot.score + target.score;
            if let Some(lm) = &cfg.rescore_lm {
                score += cfg.rescore_weight * lm.logprob(&target.text);
            }
            candidates.push(Candidate {
                pivot: pivot.text.clone(),
                target: target.text,
                leg1: pivot.score,
                leg2: target.score,
                score,
            });
        }
    }
    candidates.sort_by(|a, b| b.score.total_cmp(&a.score));
    let best = candidates
        .first()
        .map(|c| c.target.clone())
        .unwrap_or_default();
    CascadeResult { best, candidates }
}

/// `index ||| pivot ||| target ||| combined ||| leg1 ||| leg2` per candidate.
pub fn format_trace(index: usize, result: &CascadeResult) -> String {
    result
        .candidates
        .iter()
        .map(|c| {
            format!(
                "{index} ||| {} ||| {} ||| {:.6} ||| {:.6} ||| {:.6}\n",
                c.pivot, c.target, c.score, c.leg1, c.leg2
            )
        })
        .collect()
}

fn translate_all<'a>(
    model: &TranslationModel,
    sentences: impl Iterator<Item = &'a Sentence>,
) -> Vec<Sentence> {
    sentences.map(|s| model.translate(s).text).collect()
}

fn require_non_empty(len: usize, what: &str) -> Result<()> {
    if len == 0 {
        Err(Error::Data(format!("{what} is empty")))
    } else {
        Ok(())
    }
}

/// Source paired with a machine translation of the pivot side. The source
/// side is copied unchanged.
pub fn synthesize_target(
    pivot_to_tgt: &TranslationModel,
    src_pivot: &ParallelCorpus,
) -> Result<ParallelCorpus> {
    require_non_empty(src_pivot.len(), "source-pivot corpus")?;
    let targets = translate_all(pivot_to_tgt, src_pivot.targets());
    let pairs = src_pivot
        .pairs
        .iter()
        .zip(targets)
        .map(|(p, t)| SentencePair::new(p.src.clone(), t, Provenance::SyntheticTgt))
        .collect();
    Ok(ParallelCorpus::from_pairs(
        src_pivot.src_lang.clone(),
        pivot_to_tgt.tgt_lang.clone(),
        pairs,
    ))
}

/// Machine translation of the pivot side paired with the real target. The
/// target side is copied unchanged.
pub fn synthesize_source(
    pivot_to_src: &TranslationModel,
    pivot_tgt: &ParallelCorpus,
) -> Result<ParallelCorpus> {
    require_non_empty(pivot_tgt.len(), "pivot-target corpus")?;
    let sources = translate_all(pivot_to_src, pivot_tgt.sources());
    let pairs = pivot_tgt
        .pairs
        .iter()
        .zip(sources)
        .map(|(p, s)| SentencePair::new(s, p.tgt.clone(), Provenance::SyntheticSrc))
        .collect();
    Ok(ParallelCorpus::from_pairs(
        pivot_to_src.tgt_lang.clone(),
        pivot_tgt.tgt_lang.clone(),
        pairs,
    ))
}

/// Pairs each real monolingual sentence, as the target, with its translation
/// by the reverse-direction model.
pub fn backtranslate(
    reverse_model: &TranslationModel,
    mono: &MonolingualCorpus,
) -> Result<ParallelCorpus> {
    require_non_empty(mono.len(), "monolingual corpus")?;
    let pairs = mono
        .sentences
        .iter()
        .map(|m| {
            SentencePair::new(
                reverse_model.translate(m).text,
                m.clone(),
                Provenance::Backtranslated,
            )
        })
        .collect();
    Ok(ParallelCorpus::from_pairs(
        reverse_model.tgt_lang.clone(),
        mono.lang.clone(),
        pairs,
    ))
}

/// Whatever turns a parallel corpus into a translation model.
pub trait Trainer {
    fn train(&self, corpus: &ParallelCorpus) -> Result<TranslationModel>;
}

impl Trainer for TrainingConfig {
    fn train(&self, corpus: &ParallelCorpus) -> Result<TranslationModel> {
        TranslationModel::train(corpus, self)
    }
}

/// Trains on real pairs followed by synthetic ones, weighted equally.
/// Returns the model and the statistics of the combined training set.
pub fn augment_and_retrain(
    real: &ParallelCorpus,
    synthetic: &ParallelCorpus,
    trainer: &dyn Trainer,
) -> Result<(TranslationModel, CorpusStats)> {
    let combined = concat(&[real, synthetic])?;
    let model = trainer.train(&combined)?;
    Ok((model, stats(&combined)))
}
