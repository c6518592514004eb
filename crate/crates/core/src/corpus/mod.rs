//! Sentences, parallel and monolingual corpora, and the operations the
//! pipeline runs over them: loading, cleaning, splitting, concatenation and
//! statistics. The synthetic trilingual generator lives in [`generate`].

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::io;

pub mod generate;

pub use generate::{generate_trilingual, Lexicon, TrilingualConfig, TrilingualData, WordOrder};

/// Language tag such as `ne`, `hi` or `en`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Lang(String);

impl Lang {
    pub fn new(tag: impl Into<String>) -> Self {
        Lang(tag.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Lang {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Lang {
    fn from(s: &str) -> Self {
        Lang::new(s)
    }
}

/// A line of text with its whitespace tokens cached.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Sentence {
    text: String,
    tokens: Vec<String>,
}

impl Sentence {
    pub fn new(text: impl Into<String>) -> Self {
        let text = text.into();
        let tokens = text.split_whitespace().map(str::to_owned).collect();
        Sentence { text, tokens }
    }

    pub fn from_tokens<S: AsRef<str>>(tokens: &[S]) -> Self {
        let text = tokens
            .iter()
            .map(AsRef::as_ref)
            .collect::<Vec<_>>()
            .join(" ");
        Sentence::new(text)
    }

    /// The text exactly as it was constructed.
    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Tokens joined by single spaces.
    pub fn normalized(&self) -> String {
        self.tokens.join(" ")
    }
}

impl fmt::Display for Sentence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

/// Where a sentence pair came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Real,
    SyntheticSrc,
    SyntheticTgt,
    Backtranslated,
}

impl Provenance {
    pub const ALL: [Provenance; 4] = [
        Provenance::Real,
        Provenance::SyntheticSrc,
        Provenance::SyntheticTgt,
        Provenance::Backtranslated,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Real => "real",
            Provenance::SyntheticSrc => "synthetic-src",
            Provenance::SyntheticTgt => "synthetic-tgt",
            Provenance::Backtranslated => "backtranslated",
        }
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Provenance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Provenance::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| Error::Data(format!("unknown provenance tag `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SentencePair {
    pub src: Sentence,
    pub tgt: Sentence,
    pub provenance: Provenance,
}

impl SentencePair {
    pub fn new(src: Sentence, tgt: Sentence, provenance: Provenance) -> Self {
        SentencePair {
            src,
            tgt,
            provenance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParallelCorpus {
    pub src_lang: Lang,
    pub tgt_lang: Lang,
    pub pairs: Vec<SentencePair>,
}

impl ParallelCorpus {
    pub fn new(src_lang: Lang, tgt_lang: Lang) -> Self {
        ParallelCorpus {
            src_lang,
            tgt_lang,
            pairs: Vec::new(),
        }
    }

    pub fn from_pairs(src_lang: Lang, tgt_lang: Lang, pairs: Vec<SentencePair>) -> Self {
        ParallelCorpus {
            src_lang,
            tgt_lang,
            pairs,
        }
    }

    /// Builds a corpus of real pairs from string tuples.
    pub fn from_strs<S: AsRef<str>>(src_lang: &str, tgt_lang: &str, pairs: &[(S, S)]) -> Self {
        let pairs = pairs
            .iter()
            .map(|(s, t)| {
                SentencePair::new(
                    Sentence::new(s.as_ref()),
                    Sentence::new(t.as_ref()),
                    Provenance::Real,
                )
            })
            .collect();
        ParallelCorpus::from_pairs(src_lang.into(), tgt_lang.into(), pairs)
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn sources(&self) -> impl Iterator<Item = &Sentence> {
        self.pairs.iter().map(|p| &p.src)
    }

    pub fn targets(&self) -> impl Iterator<Item = &Sentence> {
        self.pairs.iter().map(|p| &p.tgt)
    }

    /// Swaps source and target sides, keeping provenance.
    pub fn reversed(&self) -> ParallelCorpus {
        let pairs = self
            .pairs
            .iter()
            .map(|p| SentencePair::new(p.tgt.clone(), p.src.clone(), p.provenance))
            .collect();
        ParallelCorpus::from_pairs(self.tgt_lang.clone(), self.src_lang.clone(), pairs)
    }

    pub fn source_side(&self) -> MonolingualCorpus {
        MonolingualCorpus::new(self.src_lang.clone(), self.sources().cloned().collect())
    }

    pub fn target_side(&self) -> MonolingualCorpus {
        MonolingualCorpus::new(self.tgt_lang.clone(), self.targets().cloned().collect())
    }

    /// Sub-corpus over a contiguous range of pairs.
    pub fn slice(&self, range: std::ops::Range<usize>) -> ParallelCorpus {
        ParallelCorpus::from_pairs(
            self.src_lang.clone(),
            self.tgt_lang.clone(),
            self.pairs[range].to_vec(),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonolingualCorpus {
    pub lang: Lang,
    pub sentences: Vec<Sentence>,
}

impl MonolingualCorpus {
    pub fn new(lang: Lang, sentences: Vec<Sentence>) -> Self {
        MonolingualCorpus { lang, sentences }
    }

    pub fn from_strs<S: AsRef<str>>(lang: &str, lines: &[S]) -> Self {
        MonolingualCorpus::new(
            lang.into(),
            lines.iter().map(|l| Sentence::new(l.as_ref())).collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    /// Drops empty lines.
    pub fn without_empty(mut self) -> Self {
        self.sentences.retain(|s| !s.is_empty());
        self
    }

    pub fn load(path: &Path, lang: Lang) -> Result<Self> {
        let lines = io::read_lines(path)?;
        Ok(MonolingualCorpus::new(
            lang,
            lines.into_iter().map(Sentence::new).collect(),
        ))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        io::write_lines(path, self.sentences.iter().map(Sentence::text))
    }
}

/// Loads two line-aligned files as a corpus of real pairs.
pub fn load_parallel(
    src_file: &Path,
    tgt_file: &Path,
    src_lang: Lang,
    tgt_lang: Lang,
) -> Result<ParallelCorpus> {
    let src = io::read_lines(src_file)?;
    let tgt = io::read_lines(tgt_file)?;
    if src.len() != tgt.len() {
        return Err(Error::Alignment {
            src_path: src_file.display().to_string(),
            src_lines: src.len(),
            tgt_path: tgt_file.display().to_string(),
            tgt_lines: tgt.len(),
        });
    }
    let pairs = src
        .into_iter()
        .zip(tgt)
        .map(|(s, t)| SentencePair::new(Sentence::new(s), Sentence::new(t), Provenance::Real))
        .collect();
    Ok(ParallelCorpus::from_pairs(src_lang, tgt_lang, pairs))
}

/// `stem.lang`, the per-language file of a corpus stem.
pub fn stem_path(stem: &Path, lang: &Lang) -> PathBuf {
    let mut os = stem.as_os_str().to_owned();
    os.push(".");
    os.push(lang.as_str());
    PathBuf::from(os)
}

fn provenance_path(stem: &Path) -> PathBuf {
    let mut os = stem.as_os_str().to_owned();
    os.push(".prov");
    PathBuf::from(os)
}

/// Loads `stem.<src>` / `stem.<tgt>`, plus per-pair provenance from
/// `stem.prov` when that file exists.
pub fn load_stem(stem: &Path, src_lang: Lang, tgt_lang: Lang) -> Result<ParallelCorpus> {
    let src_path = stem_path(stem, &src_lang);
    let tgt_path = stem_path(stem, &tgt_lang);
    let mut corpus = load_parallel(&src_path, &tgt_path, src_lang, tgt_lang)?;
    let prov_path = provenance_path(stem);
    if prov_path.exists() {
        let tags = io::read_lines(&prov_path)?;
        if tags.len() != corpus.len() {
            return Err(Error::Data(format!(
                "{} has {} tags for {} pairs",
                prov_path.display(),
                tags.len(),
                corpus.len()
            )));
        }
        for (pair, tag) in corpus.pairs.iter_mut().zip(tags) {
            pair.provenance = tag.trim().parse()?;
        }
    }
    Ok(corpus)
}

/// Writes a corpus under a stem. The provenance file is written only when
/// some pair is not real.
pub fn write_stem(corpus: &ParallelCorpus, stem: &Path) -> Result<Vec<PathBuf>> {
    let src_path = stem_path(stem, &corpus.src_lang);
    let tgt_path = stem_path(stem, &corpus.tgt_lang);
    io::write_lines(&src_path, corpus.sources().map(Sentence::text))?;
    io::write_lines(&tgt_path, corpus.targets().map(Sentence::text))?;
    let mut written = vec![src_path, tgt_path];
    let prov_path = provenance_path(stem);
    if corpus.pairs.iter().any(|p| p.provenance != Provenance::Real) {
        io::write_lines(&prov_path, corpus.pairs.iter().map(|p| p.provenance.as_str()))?;
        written.push(prov_path);
    } else if prov_path.exists() {
        std::fs::remove_file(&prov_path).map_err(|e| Error::io(&prov_path, e))?;
    }
    Ok(written)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CleaningConfig {
    pub min_tokens: usize,
    pub max_tokens: usize,
    pub max_len_ratio: f64,
    pub drop_copies: bool,
}

impl Default for CleaningConfig {
    fn default() -> Self {
        CleaningConfig {
            min_tokens: 1,
            max_tokens: 80,
            max_len_ratio: 3.0,
            drop_copies: true,
        }
    }
}

impl CleaningConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_tokens < 1 {
            return Err(Error::Config("min_tokens must be at least 1".into()));
        }
        if self.max_tokens < self.min_tokens {
            return Err(Error::Config(format!(
                "max_tokens {} is below min_tokens {}",
                self.max_tokens, self.min_tokens
            )));
        }
        if !(self.max_len_ratio > 1.0) {
            return Err(Error::Config(format!(
                "max_len_ratio must exceed 1, got {}",
                self.max_len_ratio
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DropReason {
    EmptySide,
    TooShort,
    TooLong,
    Ratio,
    Copy,
}

impl DropReason {
    pub fn as_str(self) -> &'static str {
        match self {
            DropReason::EmptySide => "empty-side",
            DropReason::TooShort => "too-short",
            DropReason::TooLong => "too-long",
            DropReason::Ratio => "ratio",
            DropReason::Copy => "copy",
        }
    }
}

impl fmt::Display for DropReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CleaningReport {
    pub kept: usize,
    pub dropped: BTreeMap<DropReason, usize>,
}

impl CleaningReport {
    pub fn total_dropped(&self) -> usize {
        self.dropped.values().sum()
    }
}

/// First rule a pair violates, in a fixed order.
pub fn drop_reason(pair: &SentencePair, cfg: &CleaningConfig) -> Option<DropReason> {
    let (ls, lt) = (pair.src.len(), pair.tgt.len());
    if ls == 0 || lt == 0 {
        return Some(DropReason::EmptySide);
    }
    if ls < cfg.min_tokens || lt < cfg.min_tokens {
        return Some(DropReason::TooShort);
    }
    if ls > cfg.max_tokens || lt > cfg.max_tokens {
        return Some(DropReason::TooLong);
    }
    let ratio = ls.max(lt) as f64 / ls.min(lt) as f64;
    if ratio > cfg.max_len_ratio {
        return Some(DropReason::Ratio);
    }
    if cfg.drop_copies && pair.src.tokens() == pair.tgt.tokens() {
        return Some(DropReason::Copy);
    }
    None
}

/// Filters ill-formed pairs. Survivors keep their order.
pub fn clean(corpus: &ParallelCorpus, cfg: &CleaningConfig) -> (ParallelCorpus, CleaningReport) {
    let mut report = CleaningReport::default();
    let mut kept = Vec::with_capacity(corpus.len());
    for pair in &corpus.pairs {
        match drop_reason(pair, cfg) {
            Some(reason) => *report.dropped.entry(reason).or_default() += 1,
            None => kept.push(pair.clone()),
        }
    }
    report.kept = kept.len();
    (
        ParallelCorpus::from_pairs(corpus.src_lang.clone(), corpus.tgt_lang.clone(), kept),
        report,
    )
}

/// Monolingual counterpart of [`clean`]: drops empty and out-of-bounds sentences.
pub fn clean_mono(corpus: &MonolingualCorpus, cfg: &CleaningConfig) -> MonolingualCorpus {
    let sentences = corpus
        .sentences
        .iter()
        .filter(|s| !s.is_empty() && s.len() >= cfg.min_tokens && s.len() <= cfg.max_tokens)
        .cloned()
        .collect();
    MonolingualCorpus::new(corpus.lang.clone(), sentences)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitRatios {
    pub train: f64,
    pub valid: f64,
    pub test: f64,
}

impl SplitRatios {
    pub fn new(train: f64, valid: f64, test: f64) -> Self {
        SplitRatios { train, valid, test }
    }

    pub fn validate(&self) -> Result<()> {
        let parts = [self.train, self.valid, self.test];
        if parts.iter().any(|r| !(*r > 0.0) || !r.is_finite()) {
            return Err(Error::Config(format!(
                "split ratios must be positive, got {parts:?}"
            )));
        }
        let sum: f64 = parts.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "split ratios must sum to 1, got {sum}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: ParallelCorpus,
    pub valid: ParallelCorpus,
    pub test: ParallelCorpus,
}

/// Seeded shuffle into train/valid/test. Within each piece the original
/// order is kept.
pub fn split(corpus: &ParallelCorpus, ratios: SplitRatios, seed: u64) -> Result<Split> {
    ratios.validate()?;
    let n = corpus.len();
    let n_train = ((ratios.train * n as f64).round() as usize).min(n);
    let n_valid = ((ratios.valid * n as f64).round() as usize).min(n - n_train);

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut crate::seed::rng(seed));

    let piece = |ids: &[usize]| {
        let mut ids = ids.to_vec();
        ids.sort_unstable();
        ParallelCorpus::from_pairs(
            corpus.src_lang.clone(),
            corpus.tgt_lang.clone(),
            ids.into_iter().map(|i| corpus.pairs[i].clone()).collect(),
        )
    };
    Ok(Split {
        train: piece(&order[..n_train]),
        valid: piece(&order[n_train..n_train + n_valid]),
        test: piece(&order[n_train + n_valid..]),
    })
}

/// Concatenates corpora in argument order. All must share a language pair.
pub fn concat(corpora: &[&ParallelCorpus]) -> Result<ParallelCorpus> {
    let first = corpora
        .first()
        .ok_or_else(|| Error::Config("concat needs at least one corpus".into()))?;
    let mut out = ParallelCorpus::new(first.src_lang.clone(), first.tgt_lang.clone());
    for c in corpora {
        if c.src_lang != first.src_lang || c.tgt_lang != first.tgt_lang {
            return Err(Error::Config(format!(
                "cannot concatenate {}-{} with {}-{}",
                first.src_lang, first.tgt_lang, c.src_lang, c.tgt_lang
            )));
        }
        out.pairs.extend(c.pairs.iter().cloned());
    }
    Ok(out)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct CorpusStats {
    pub n_pairs: usize,
    pub src_tokens: usize,
    pub tgt_tokens: usize,
    pub provenance: BTreeMap<Provenance, usize>,
}

pub fn stats(corpus: &ParallelCorpus) -> CorpusStats {
    let mut out = CorpusStats {
        n_pairs: corpus.len(),
        ..CorpusStats::default()
    };
    for pair in &corpus.pairs {
        out.src_tokens += pair.src.len();
        out.tgt_tokens += pair.tgt.len();
        *out.provenance.entry(pair.provenance).or_default() += 1;
    }
    out
}

impl CorpusStats {
    /// `key: value` lines.
    pub fn to_report(&self) -> String {
        let mut out = format!(
            "n_pairs: {}\nsrc_tokens: {}\ntgt_tokens: {}\n",
            self.n_pairs, self.src_tokens, self.tgt_tokens
        );
        for (prov, count) in &self.provenance {
            out.push_str(&format!("provenance.{prov}: {count}\n"));
        }
        out
    }

    /// One-line JSON record:
    /// `{"n_pairs":N,"src_tokens":N,"tgt_tokens":N,"provenance":{"real":N,...}}`.
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("stats serialize to JSON")
    }
}
