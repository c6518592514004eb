//! Named translation systems selectable at runtime.
//!
//! Every system turns the same [`SystemData`] into a [`Translator`]. Models
//! that several systems share, such as the two cascade legs, are trained once
//! and cached in the [`BuildContext`].

use std::collections::BTreeMap;
use std::sync::Arc;

use super::{augment_and_retrain, backtranslate, synthesize_source, synthesize_target, transfer_translate, CascadeConfig};
use crate::corpus::{concat, stats, CorpusStats, MonolingualCorpus, ParallelCorpus, Sentence};
use crate::decoder::{TrainingConfig, TranslationModel};
use crate::error::{Error, Result};
use crate::subword::decode_symbols;
use crate::tm::{prune, triangulate, PhraseTable};

pub trait Translator: Send + Sync {
    fn translate(&self, s: &Sentence) -> Sentence;

    fn translate_all(&self, sentences: &[Sentence]) -> Vec<Sentence> {
        sentences.iter().map(|s| self.translate(s)).collect()
    }
}

impl Translator for TranslationModel {
    fn translate(&self, s: &Sentence) -> Sentence {
        TranslationModel::translate(self, s).text
    }
}

impl Translator for Arc<TranslationModel> {
    fn translate(&self, s: &Sentence) -> Sentence {
        TranslationModel::translate(self, s).text
    }
}

pub struct CascadeTranslator {
    pub src_to_pivot: Arc<TranslationModel>,
    pub pivot_to_tgt: Arc<TranslationModel>,
    pub cfg: CascadeConfig,
}

impl Translator for CascadeTranslator {
    fn translate(&self, s: &Sentence) -> Sentence {
        transfer_translate(&self.src_to_pivot, &self.pivot_to_tgt, s, &self.cfg).best
    }
}

/// The corpora every system draws from.
pub struct SystemData {
    pub direct: ParallelCorpus,
    pub src_pivot: ParallelCorpus,
    pub pivot_tgt: ParallelCorpus,
    pub pivot_mono: MonolingualCorpus,
}

pub struct BuildContext {
    pub training: TrainingConfig,
    /// Cascade settings of the n-best transfer system.
    pub cascade: CascadeConfig,
    pub triangulation_floor: f64,
    models: BTreeMap<String, Arc<TranslationModel>>,
    training_stats: BTreeMap<String, CorpusStats>,
}

impl BuildContext {
    pub fn new(training: TrainingConfig, cascade: CascadeConfig, triangulation_floor: f64) -> Self {
        BuildContext {
            training,
            cascade,
            triangulation_floor,
            models: BTreeMap::new(),
            training_stats: BTreeMap::new(),
        }
    }

    /// Trains on `corpus` under `key` unless a model with that key exists.
    pub fn model(
        &mut self,
        key: &str,
        corpus: impl FnOnce(&mut Self) -> Result<ParallelCorpus>,
    ) -> Result<Arc<TranslationModel>> {
        if let Some(m) = self.models.get(key) {
            return Ok(Arc::clone(m));
        }
        let corpus = corpus(self)?;
        log::info!("training {key} on {} pairs", corpus.len());
        let model = Arc::new(TranslationModel::train(&corpus, &self.training)?);
        self.training_stats.insert(key.to_owned(), stats(&corpus));
        self.models.insert(key.to_owned(), Arc::clone(&model));
        Ok(model)
    }

    fn insert(&mut self, key: &str, model: TranslationModel, stats: CorpusStats) -> Arc<TranslationModel> {
        let model = Arc::new(model);
        self.training_stats.insert(key.to_owned(), stats);
        self.models.insert(key.to_owned(), Arc::clone(&model));
        model
    }

    /// Training-set statistics of every model trained so far, by key.
    pub fn training_stats(&self) -> &BTreeMap<String, CorpusStats> {
        &self.training_stats
    }

    /// Every model trained so far, by key.
    pub fn models(&self) -> impl Iterator<Item = (&str, &TranslationModel)> {
        self.models.iter().map(|(k, m)| (k.as_str(), m.as_ref()))
    }

    fn src_pivot(&mut self, data: &SystemData) -> Result<Arc<TranslationModel>> {
        self.model("src-pivot", |_| Ok(data.src_pivot.clone()))
    }

    fn pivot_tgt(&mut self, data: &SystemData) -> Result<Arc<TranslationModel>> {
        self.model("pivot-tgt", |_| Ok(data.pivot_tgt.clone()))
    }

    fn pivot_src(&mut self, data: &SystemData) -> Result<Arc<TranslationModel>> {
        self.model("pivot-src", |_| Ok(data.src_pivot.reversed()))
    }
}

pub trait PivotSystem: Send + Sync {
    fn name(&self) -> &'static str;
    fn description(&self) -> &'static str;
    fn build(&self, data: &SystemData, ctx: &mut BuildContext) -> Result<Box<dyn Translator>>;
}

struct Direct;

impl PivotSystem for Direct {
    fn name(&self) -> &'static str {
        "direct"
    }
    fn description(&self) -> &'static str {
        "baseline trained on the direct source-target corpus only"
    }
    fn build(&self, data: &SystemData, ctx: &mut BuildContext) -> Result<Box<dyn Translator>> {
        let model = ctx.model("src-tgt", |_| Ok(data.direct.clone()))?;
        Ok(Box::new(model))
    }
}

struct Transfer;

impl PivotSystem for Transfer {
    fn name(&self) -> &'static str {
        "transfer"
    }
    fn description(&self) -> &'static str {
        "cascade of the source-pivot and pivot-target models, 1-best at each leg"
    }
    fn build(&self, data: &SystemData, ctx: &mut BuildContext) -> Result<Box<dyn Translator>> {
        Ok(Box::new(CascadeTranslator {
            src_to_pivot: ctx.src_pivot(data)?,
            pivot_to_tgt: ctx.pivot_tgt(data)?,
            cfg: CascadeConfig::new(1, 1),
        }))
    }
}

struct TransferNBest;

impl PivotSystem for TransferNBest {
    fn name(&self) -> &'static str {
        "transfer-nbest"
    }
    fn description(&self) -> &'static str {
        "cascade rescoring n pivot hypotheses times m targets each"
    }
    fn build(&self, data: &SystemData, ctx: &mut BuildContext) -> Result<Box<dyn Translator>> {
        ctx.cascade.validate()?;
        Ok(Box::new(CascadeTranslator {
            src_to_pivot: ctx.src_pivot(data)?,
            pivot_to_tgt: ctx.pivot_tgt(data)?,
            cfg: ctx.cascade.clone(),
        }))
    }
}

struct TransferBacktranslated;

impl PivotSystem for TransferBacktranslated {
    fn name(&self) -> &'static str {
        "transfer-bt"
    }
    fn description(&self) -> &'static str {
        "cascade whose source-pivot leg is retrained once with backtranslated pivot text"
    }
    fn build(&self, data: &SystemData, ctx: &mut BuildContext) -> Result<Box<dyn Translator>> {
        let key = "src-pivot+bt";
        let src_to_pivot = match ctx.models.get(key) {
            Some(m) => Arc::clone(m),
            None => {
                let reverse = ctx.pivot_src(data)?;
                log::info!("backtranslating {} pivot sentences", data.pivot_mono.len());
                let synthetic = backtranslate(&reverse, &data.pivot_mono)?;
                let (model, stats) = augment_and_retrain(&data.src_pivot, &synthetic, &ctx.training)?;
                ctx.insert(key, model, stats)
            }
        };
        Ok(Box::new(CascadeTranslator {
            src_to_pivot,
            pivot_to_tgt: ctx.pivot_tgt(data)?,
            cfg: CascadeConfig::new(1, 1),
        }))
    }
}

struct Triangulation;

impl PivotSystem for Triangulation {
    fn name(&self) -> &'static str {
        "triangulation"
    }
    fn description(&self) -> &'static str {
        "source-target phrase table composed through shared pivot phrases"
    }
    fn build(&self, data: &SystemData, ctx: &mut BuildContext) -> Result<Box<dyn Translator>> {
        let sp = ctx.src_pivot(data)?;
        let pt = ctx.pivot_tgt(data)?;
        // The legs segment the pivot with different subword models. Pivot
        // phrases are re-segmented with the second leg's model. Phrases that
        // end inside a word have no counterpart and are skipped.
        let marker = sp.bpe.boundary_marker();
        let mut rekeyed = PhraseTable::new(sp.phrase_table.max_phrase_len());
        for (src, row) in sp.phrase_table.rows() {
            for (pivot, &p) in row {
                if !pivot.ends_with(marker) {
                    continue;
                }
                let words = decode_symbols(&pivot.split(' ').collect::<Vec<_>>(), marker);
                let key = pt.bpe.encode(&words).to_sentence();
                let prev = rekeyed.prob(src, key.text());
                rekeyed.insert(src, key.text(), prev + p);
            }
        }
        let table = triangulate(&rekeyed, &pt.phrase_table, ctx.triangulation_floor);
        let table = prune(&table, ctx.training.top_k, ctx.training.prune_floor);
        log::info!("triangulated table has {} entries", table.len());
        Ok(Box::new(TranslationModel {
            src_lang: sp.src_lang.clone(),
            tgt_lang: pt.tgt_lang.clone(),
            phrase_table: table,
            lm: pt.lm.clone(),
            weights: ctx.training.weights,
            bpe: sp.bpe.clone(),
            beam: ctx.training.beam,
        }))
    }
}

struct SyntheticSource;

impl PivotSystem for SyntheticSource {
    fn name(&self) -> &'static str {
        "synth-src"
    }
    fn description(&self) -> &'static str {
        "direct corpus plus the pivot-target corpus with its pivot side translated into the source"
    }
    fn build(&self, data: &SystemData, ctx: &mut BuildContext) -> Result<Box<dyn Translator>> {
        let model = ctx.model("src-tgt+synth-src", |ctx| {
            let reverse = ctx.pivot_src(data)?;
            let synthetic = synthesize_source(&reverse, &data.pivot_tgt)?;
            concat(&[&data.direct, &synthetic])
        })?;
        Ok(Box::new(model))
    }
}

struct SyntheticTarget;

impl PivotSystem for SyntheticTarget {
    fn name(&self) -> &'static str {
        "synth-tgt"
    }
    fn description(&self) -> &'static str {
        "direct corpus plus the source-pivot corpus with its pivot side translated into the target"
    }
    fn build(&self, data: &SystemData, ctx: &mut BuildContext) -> Result<Box<dyn Translator>> {
        let model = ctx.model("src-tgt+synth-tgt", |ctx| {
            let forward = ctx.pivot_tgt(data)?;
            let synthetic = synthesize_target(&forward, &data.src_pivot)?;
            concat(&[&data.direct, &synthetic])
        })?;
        Ok(Box::new(model))
    }
}

pub struct Registry {
    systems: BTreeMap<&'static str, Box<dyn PivotSystem>>,
}

impl Registry {
    pub fn empty() -> Self {
        Registry {
            systems: BTreeMap::new(),
        }
    }

    pub fn builtin() -> Self {
        let mut r = Registry::empty();
        r.register(Box::new(Direct));
        r.register(Box::new(Transfer));
        r.register(Box::new(TransferNBest));
        r.register(Box::new(TransferBacktranslated));
        r.register(Box::new(Triangulation));
        r.register(Box::new(SyntheticSource));
        r.register(Box::new(SyntheticTarget));
        r
    }

    /// Adds or replaces the system with the same name.
    pub fn register(&mut self, system: Box<dyn PivotSystem>) {
        self.systems.insert(system.name(), system);
    }

    pub fn get(&self, name: &str) -> Result<&dyn PivotSystem> {
        self.systems.get(name).map(|s| s.as_ref()).ok_or_else(|| {
            Error::Config(format!(
                "unknown system `{name}` (known: {})",
                self.names().collect::<Vec<_>>().join(", ")
            ))
        })
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.systems.keys().copied()
    }
}

impl Default for Registry {
    fn default() -> Self {
        Registry::builtin()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_names() {
        let r = Registry::builtin();
        let names: Vec<_> = r.names().collect();
        assert_eq!(
            names,
            ["direct", "synth-src", "synth-tgt", "transfer", "transfer-bt", "transfer-nbest", "triangulation"]
        );
        assert!(matches!(r.get("neural"), Err(Error::Config(_))));
        assert_eq!(r.get("direct").unwrap().name(), "direct");
    }
}
