use std::path::Path;

use super::lm::{train_lm, train_lm_weighted};
use super::{decode, Hypothesis, NGramLm, DEFAULT_LM_ORDER, DEFAULT_LM_WEIGHT};
use crate::corpus::{Lang, MonolingualCorpus, ParallelCorpus, Sentence, SentencePair};
use crate::error::{Error, Result};
use crate::io;
use crate::subword::{decode_symbols, learn_joint_bpe, BpeModel, DEFAULT_NUM_MERGES};
use crate::tm::{
    extract_phrases, prune, train_model1, viterbi_align, PhraseTable, DEFAULT_MAX_PHRASE_LEN,
    DEFAULT_TOP_K,
};

const SETTINGS_FILE: &str = "model.txt";

/// Log-linear feature weights of the decoder.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecoderWeights {
    pub tm: f64,
    pub lm: f64,
    pub word_penalty: f64,
    /// Added once per source token copied through untranslated.
    pub oov_penalty: f64,
}

impl Default for DecoderWeights {
    fn default() -> Self {
        DecoderWeights {
            tm: 1.0,
            lm: 1.0,
            word_penalty: 0.0,
            oov_penalty: -10.0,
        }
    }
}

impl DecoderWeights {
    pub fn validate(&self) -> Result<()> {
        let all = [self.tm, self.lm, self.word_penalty, self.oov_penalty];
        if all.iter().all(|w| w.is_finite()) {
            Ok(())
        } else {
            Err(Error::Config(format!("decoder weights must be finite, got {all:?}")))
        }
    }
}

/// Everything needed to train one translation direction.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingConfig {
    pub num_merges: usize,
    pub em_iterations: usize,
    pub max_phrase_len: usize,
    pub top_k: usize,
    pub prune_floor: f64,
    pub lm_order: usize,
    pub lm_weight: f64,
    pub weights: DecoderWeights,
    pub beam: usize,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            num_merges: DEFAULT_NUM_MERGES,
            em_iterations: 10,
            max_phrase_len: DEFAULT_MAX_PHRASE_LEN,
            top_k: DEFAULT_TOP_K,
            prune_floor: 0.0,
            lm_order: DEFAULT_LM_ORDER,
            lm_weight: DEFAULT_LM_WEIGHT,
            weights: DecoderWeights::default(),
            beam: 50,
        }
    }
}

/// Phrase table, target LM, decoder weights and the subword model that
/// segments both sides.
#[derive(Debug, Clone, PartialEq)]
pub struct TranslationModel {
    pub src_lang: Lang,
    pub tgt_lang: Lang,
    pub phrase_table: PhraseTable,
    pub lm: NGramLm,
    pub weights: DecoderWeights,
    pub bpe: BpeModel,
    pub beam: usize,
}

/// A detokenized hypothesis.
#[derive(Debug, Clone, PartialEq)]
pub struct Translation {
    pub text: Sentence,
    pub score: f64,
    pub hypothesis: Hypothesis,
}

fn encode_pair(bpe: &BpeModel, pair: &SentencePair) -> SentencePair {
    SentencePair::new(
        bpe.encode(&pair.src).to_sentence(),
        bpe.encode(&pair.tgt).to_sentence(),
        pair.provenance,
    )
}

impl TranslationModel {
    /// Joint BPE, Model 1 alignment, phrase extraction, pruning and a target
    /// LM, all over the subword-segmented corpus.
    pub fn train(corpus: &ParallelCorpus, cfg: &TrainingConfig) -> Result<Self> {
        cfg.weights.validate()?;
        let bpe = learn_joint_bpe(&[&corpus.source_side(), &corpus.target_side()], cfg.num_merges)?;
        let encoded = ParallelCorpus::from_pairs(
            corpus.src_lang.clone(),
            corpus.tgt_lang.clone(),
            corpus.pairs.iter().map(|p| encode_pair(&bpe, p)).collect(),
        );
        let model1 = train_model1(&encoded, cfg.em_iterations)?;
        let alignments: Vec<_> = encoded
            .pairs
            .iter()
            .map(|p| viterbi_align(&model1.table, p))
            .collect();
        let phrases = extract_phrases(&encoded, &alignments, cfg.max_phrase_len)?;
        let phrase_table = prune(&phrases, cfg.top_k, cfg.prune_floor);
        let lm = train_lm_weighted(
            &encoded.target_side(),
            cfg.lm_order,
            vec![cfg.lm_weight; cfg.lm_order.saturating_sub(1)],
        )?;
        log::debug!(
            "trained {}-{}: {} merges, {} phrase pairs",
            corpus.src_lang,
            corpus.tgt_lang,
            bpe.merges().len(),
            phrase_table.len()
        );
        Ok(TranslationModel {
            src_lang: corpus.src_lang.clone(),
            tgt_lang: corpus.tgt_lang.clone(),
            phrase_table,
            lm,
            weights: cfg.weights,
            bpe,
            beam: cfg.beam,
        })
    }

    /// Builds a model from a word-level phrase table and target-language
    /// text for the LM. The subword model is learned to exhaustion over every
    /// word involved, so each of those words stays a single symbol.
    pub fn from_word_table(
        src_lang: Lang,
        tgt_lang: Lang,
        table: &PhraseTable,
        target_text: &MonolingualCorpus,
        weights: DecoderWeights,
    ) -> Result<Self> {
        weights.validate()?;
        let mut words: Vec<Sentence> = target_text.sentences.clone();
        for (src, row) in table.rows() {
            words.push(Sentence::new(src));
            words.extend(row.keys().map(Sentence::new));
        }
        let bpe = learn_joint_bpe(&[&MonolingualCorpus::new(tgt_lang.clone(), words)], usize::MAX)?;
        let seg = |p: &str| bpe.encode(&Sentence::new(p)).to_sentence().text().to_owned();
        let phrase_table = table.map_phrases(seg, seg);
        let lm = train_lm(&bpe.encode_corpus(target_text), DEFAULT_LM_ORDER)?;
        Ok(TranslationModel {
            src_lang,
            tgt_lang,
            phrase_table,
            lm,
            weights,
            bpe,
            beam: TrainingConfig::default().beam,
        })
    }

    /// Distinct detokenized translations, best first, at most `k`.
    pub fn translate_nbest(&self, source: &Sentence, k: usize) -> Vec<Translation> {
        let encoded = self.bpe.encode(source);
        let hyps = decode(
            &self.phrase_table,
            &self.lm,
            &self.weights,
            &encoded.symbols,
            k,
            self.beam,
        );
        let mut out: Vec<Translation> = Vec::with_capacity(hyps.len());
        for hyp in hyps {
            let text = decode_symbols(&hyp.tokens, self.bpe.boundary_marker());
            if out.iter().any(|t| t.text == text) {
                continue;
            }
            out.push(Translation {
                text,
                score: hyp.score,
                hypothesis: hyp,
            });
        }
        out
    }

    pub fn translate(&self, source: &Sentence) -> Translation {
        self.translate_nbest(source, 1)
            .into_iter()
            .next()
            .expect("the decoder always returns a hypothesis")
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        self.bpe.save(&dir.join("bpe.model"))?;
        self.phrase_table.save(&dir.join("phrases.txt"))?;
        self.lm.save(&dir.join("lm.txt"))?;
        let w = &self.weights;
        io::write_string(
            &dir.join(SETTINGS_FILE),
            &format!(
                "src_lang = {}\ntgt_lang = {}\ntm = {}\nlm = {}\nword_penalty = {}\noov_penalty = {}\nbeam = {}\n",
                self.src_lang, self.tgt_lang, w.tm, w.lm, w.word_penalty, w.oov_penalty, self.beam
            ),
        )
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let mut weights = DecoderWeights::default();
        let mut beam = TrainingConfig::default().beam;
        let (mut src_lang, mut tgt_lang) = (Lang::new("src"), Lang::new("tgt"));
        let settings = dir.join(SETTINGS_FILE);
        if settings.exists() {
            for (i, line) in io::read_lines(&settings)?.iter().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                let (key, value) = line
                    .split_once('=')
                    .ok_or_else(|| Error::parse(SETTINGS_FILE, i + 1, "expected key = value"))?;
                let value = value.trim();
                let num = || {
                    value
                        .parse::<f64>()
                        .map_err(|_| Error::parse(SETTINGS_FILE, i + 1, "bad number"))
                };
                match key.trim() {
                    "src_lang" => src_lang = Lang::new(value),
                    "tgt_lang" => tgt_lang = Lang::new(value),
                    "tm" => weights.tm = num()?,
                    "lm" => weights.lm = num()?,
                    "word_penalty" => weights.word_penalty = num()?,
                    "oov_penalty" => weights.oov_penalty = num()?,
                    "beam" => {
                        beam = value
                            .parse()
                            .map_err(|_| Error::parse(SETTINGS_FILE, i + 1, "bad beam"))?
                    }
                    other => {
                        return Err(Error::parse(
                            SETTINGS_FILE,
                            i + 1,
                            format!("unknown key `{other}`"),
                        ))
                    }
                }
            }
        }
        weights.validate()?;
        Ok(TranslationModel {
            src_lang,
            tgt_lang,
            phrase_table: PhraseTable::load(&dir.join("phrases.txt"))?,
            lm: NGramLm::load(&dir.join("lm.txt"))?,
            bpe: BpeModel::load(&dir.join("bpe.model"))?,
            weights,
            beam,
        })
    }
}

/// `sentence_index ||| target text ||| score`, one line per hypothesis.
pub fn format_nbest(index: usize, translations: &[Translation]) -> String {
    translations
        .iter()
        .map(|t| format!("{index} ||| {} ||| {:.6}\n", t.text, t.score))
        .collect()
}
