//! Synthetic trilingual data: a source and a pivot language that share word
//! order and part of their vocabulary, and a target language with a
//! different word order.
//!
//! Every sentence comes from one of two templates over an underlying clause:
//!
//! ```text
//! source / pivot (SOV):  S O mk V           Adj S O mk V
//! target (SVO):          the S V mk the O   the Adj S V mk the O
//! ```
//!
//! `mk` is a case marker whose form is fixed by the object noun: a
//! postposition in the source and pivot, a preposition in the target. The
//! target also uses a reserved article. The adjective modifies the subject,
//! so the only reordering is the object-verb swap.

use std::collections::{HashMap, HashSet};
use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{Lang, MonolingualCorpus, ParallelCorpus, Provenance, Sentence, SentencePair};
use crate::error::{Error, Result};
use crate::seed;

/// Reserved target article.
pub const ARTICLE: &str = "the";

/// Number of word categories a template draws from (noun, adjective, verb,
/// postposition).
pub const TEMPLATE_ARITY: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WordOrder {
    Sov,
    Svo,
}

impl fmt::Display for WordOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WordOrder::Sov => "SOV",
            WordOrder::Svo => "SVO",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrilingualConfig {
    pub seed: u64,
    pub n_sentences: usize,
    pub vocab_size: usize,
    /// Fraction of lexicon entries whose source form equals the pivot form.
    pub lexical_overlap: f64,
    pub pivot_word_order: WordOrder,
    pub target_word_order: WordOrder,
    pub src_lang: Lang,
    pub pivot_lang: Lang,
    pub tgt_lang: Lang,
}

impl Default for TrilingualConfig {
    fn default() -> Self {
        TrilingualConfig {
            seed: 7,
            n_sentences: 1000,
            vocab_size: 300,
            lexical_overlap: 0.7,
            pivot_word_order: WordOrder::Sov,
            target_word_order: WordOrder::Svo,
            src_lang: Lang::new("ne"),
            pivot_lang: Lang::new("hi"),
            tgt_lang: Lang::new("en"),
        }
    }
}

impl TrilingualConfig {
    pub fn validate(&self) -> Result<()> {
        if self.vocab_size < TEMPLATE_ARITY {
            return Err(Error::Config(format!(
                "vocab_size {} is smaller than the template arity {TEMPLATE_ARITY}",
                self.vocab_size
            )));
        }
        if !(0.0..=1.0).contains(&self.lexical_overlap) {
            return Err(Error::Config(format!(
                "lexical overlap must lie in [0,1], got {}",
                self.lexical_overlap
            )));
        }
        if self.pivot_word_order != WordOrder::Sov || self.target_word_order != WordOrder::Svo {
            return Err(Error::Config(
                "only SOV pivot and SVO target word orders are supported".into(),
            ));
        }
        let langs = [&self.src_lang, &self.pivot_lang, &self.tgt_lang];
        if langs[0] == langs[1] || langs[1] == langs[2] || langs[0] == langs[2] {
            return Err(Error::Config("language tags must be distinct".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Category {
    Noun,
    Adjective,
    Verb,
    Marker,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Entry {
    source: String,
    pivot: String,
    target: String,
}

/// Ground-truth word maps between the three languages.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lexicon {
    nouns: Vec<Entry>,
    adjectives: Vec<Entry>,
    verbs: Vec<Entry>,
    markers: Vec<Entry>,
    by_source: HashMap<String, (Category, usize)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Clause {
    subject: usize,
    adjective: Option<usize>,
    object: usize,
    verb: usize,
}

fn category_sizes(vocab: usize) -> [(Category, usize); 4] {
    let markers = (vocab / 50).max(1);
    let verbs = (vocab / 50).max(1);
    let adjectives = (vocab * 3 / 10).max(1);
    let nouns = vocab - markers - verbs - adjectives;
    [
        (Category::Noun, nouns),
        (Category::Adjective, adjectives),
        (Category::Verb, verbs),
        (Category::Marker, markers),
    ]
}

const SRC_CONSONANTS: &[&str] = &["k", "g", "ch", "j", "t", "d", "n", "p", "b", "m", "r", "l", "s", "h"];
const SRC_VOWELS: &[&str] = &["a", "aa", "i", "u", "e", "o"];
const TGT_ONSETS: &[&str] = &["b", "br", "c", "cl", "f", "fl", "g", "gr", "p", "pl", "st", "tr", "w", "sh"];
const TGT_NUCLEI: &[&str] = &["a", "e", "i", "o", "u", "ea", "oo"];
const TGT_CODAS: &[&str] = &["", "n", "t", "ck", "ll", "sh", "m", "rd"];

fn syllable(rng: &mut ChaCha8Rng) -> String {
    let c = SRC_CONSONANTS.choose(rng).unwrap();
    let v = SRC_VOWELS.choose(rng).unwrap();
    format!("{c}{v}")
}

fn target_syllable(rng: &mut ChaCha8Rng) -> String {
    let o = TGT_ONSETS.choose(rng).unwrap();
    let n = TGT_NUCLEI.choose(rng).unwrap();
    let c = TGT_CODAS.choose(rng).unwrap();
    format!("{o}{n}{c}")
}

/// Draws a fresh word of `min..=max` syllables not yet in `used`.
fn fresh_word(
    rng: &mut ChaCha8Rng,
    used: &mut HashSet<String>,
    min: usize,
    max: usize,
    syl: fn(&mut ChaCha8Rng) -> String,
) -> Vec<String> {
    loop {
        let n = rng.gen_range(min..=max);
        let sylls: Vec<String> = (0..n).map(|_| syl(rng)).collect();
        let word = sylls.concat();
        if used.insert(word) {
            return sylls;
        }
    }
}

impl Lexicon {
    fn generate(cfg: &TrilingualConfig) -> Lexicon {
        let mut rng = seed::stage_rng(cfg.seed, "trilingual/lexicon");
        let mut used: HashSet<String> = HashSet::new();
        used.insert(ARTICLE.to_owned());
        let mut lex = Lexicon {
            nouns: Vec::new(),
            adjectives: Vec::new(),
            verbs: Vec::new(),
            markers: Vec::new(),
            by_source: HashMap::new(),
        };
        for (cat, size) in category_sizes(cfg.vocab_size) {
            let (min, max) = if cat == Category::Marker { (1, 1) } else { (2, 3) };
            let pivots: Vec<Vec<String>> = (0..size)
                .map(|_| fresh_word(&mut rng, &mut used, min, max, syllable))
                .collect();

            let n_shared = (cfg.lexical_overlap * size as f64).round() as usize;
            let mut ids: Vec<usize> = (0..size).collect();
            ids.shuffle(&mut rng);
            let shared: HashSet<usize> = ids[..n_shared].iter().copied().collect();

            let mut entries = Vec::with_capacity(size);
            for (i, pivot_sylls) in pivots.iter().enumerate() {
                let pivot = pivot_sylls.concat();
                let source = if shared.contains(&i) {
                    pivot.clone()
                } else {
                    // Cognate: same stem, different final syllable.
                    let stem = &pivot_sylls[..pivot_sylls.len() - 1];
                    loop {
                        let candidate = format!("{}{}", stem.concat(), syllable(&mut rng));
                        if used.insert(candidate.clone()) {
                            break candidate;
                        }
                    }
                };
                let max_syllables = if cat == Category::Marker { 1 } else { 2 };
                let target = fresh_word(&mut rng, &mut used, 1, max_syllables, target_syllable).concat();
                lex.by_source.insert(source.clone(), (cat, i));
                entries.push(Entry {
                    source,
                    pivot,
                    target,
                });
            }
            *lex.entries_mut(cat) = entries;
        }
        lex
    }

    fn entries(&self, cat: Category) -> &[Entry] {
        match cat {
            Category::Noun => &self.nouns,
            Category::Adjective => &self.adjectives,
            Category::Verb => &self.verbs,
            Category::Marker => &self.markers,
        }
    }

    fn entries_mut(&mut self, cat: Category) -> &mut Vec<Entry> {
        match cat {
            Category::Noun => &mut self.nouns,
            Category::Adjective => &mut self.adjectives,
            Category::Verb => &mut self.verbs,
            Category::Marker => &mut self.markers,
        }
    }

    pub fn vocab_size(&self) -> usize {
        self.nouns.len() + self.adjectives.len() + self.verbs.len() + self.markers.len()
    }

    /// Number of entries whose source and pivot forms coincide.
    pub fn shared_entries(&self) -> usize {
        [&self.nouns, &self.adjectives, &self.verbs, &self.markers]
            .iter()
            .flat_map(|v| v.iter())
            .filter(|e| e.source == e.pivot)
            .count()
    }

    fn marker_for(&self, object: usize) -> usize {
        object % self.markers.len()
    }

    fn render_sov(&self, clause: &Clause, form: impl Fn(&Entry) -> &str) -> String {
        let mut words = Vec::with_capacity(5);
        if let Some(a) = clause.adjective {
            words.push(form(&self.adjectives[a]));
        }
        words.push(form(&self.nouns[clause.subject]));
        words.push(form(&self.nouns[clause.object]));
        words.push(form(&self.markers[self.marker_for(clause.object)]));
        words.push(form(&self.verbs[clause.verb]));
        words.join(" ")
    }

    fn render_source(&self, clause: &Clause) -> String {
        self.render_sov(clause, |e| &e.source)
    }

    fn render_pivot(&self, clause: &Clause) -> String {
        self.render_sov(clause, |e| &e.pivot)
    }

    fn render_target(&self, clause: &Clause) -> String {
        let t = |e: &Entry| e.target.clone();
        let mut words = vec![ARTICLE.to_owned()];
        if let Some(a) = clause.adjective {
            words.push(t(&self.adjectives[a]));
        }
        words.push(t(&self.nouns[clause.subject]));
        words.push(t(&self.verbs[clause.verb]));
        words.push(t(&self.markers[self.marker_for(clause.object)]));
        words.push(ARTICLE.to_owned());
        words.push(t(&self.nouns[clause.object]));
        words.join(" ")
    }

    /// Recovers the clause of a generated source sentence.
    fn parse_source(&self, sentence: &Sentence) -> Option<Clause> {
        let look = |w: &String, cat: Category| match self.by_source.get(w) {
            Some(&(c, i)) if c == cat => Some(i),
            _ => None,
        };
        let toks = sentence.tokens();
        let (subject, adjective, rest) = match toks.len() {
            4 => (look(&toks[0], Category::Noun)?, None, &toks[1..]),
            5 => (
                look(&toks[1], Category::Noun)?,
                Some(look(&toks[0], Category::Adjective)?),
                &toks[2..],
            ),
            _ => return None,
        };
        let object = look(&rest[0], Category::Noun)?;
        let marker = look(&rest[1], Category::Marker)?;
        let verb = look(&rest[2], Category::Verb)?;
        (marker == self.marker_for(object)).then_some(Clause {
            subject,
            adjective,
            object,
            verb,
        })
    }

    /// Word-by-word ground-truth map from a source sentence to its pivot.
    pub fn source_to_pivot(&self, sentence: &Sentence) -> Option<String> {
        let words: Option<Vec<&str>> = sentence
            .tokens()
            .iter()
            .map(|w| {
                self.by_source
                    .get(w)
                    .map(|&(cat, i)| self.entries(cat)[i].pivot.as_str())
            })
            .collect();
        words.map(|w| w.join(" "))
    }

    /// Ground-truth lexicon map plus SOV to SVO reordering.
    pub fn source_to_target(&self, sentence: &Sentence) -> Option<String> {
        self.parse_source(sentence).map(|c| self.render_target(&c))
    }
}

/// Output of [`generate_trilingual`]: the same underlying sentences rendered
/// as three parallel corpora and one pivot-side monolingual corpus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrilingualData {
    pub src_pivot: ParallelCorpus,
    pub pivot_tgt: ParallelCorpus,
    pub src_tgt: ParallelCorpus,
    pub pivot_mono: MonolingualCorpus,
    pub lexicon: Lexicon,
}

pub fn generate_trilingual(cfg: &TrilingualConfig) -> Result<TrilingualData> {
    cfg.validate()?;
    let lexicon = Lexicon::generate(cfg);
    let mut rng = seed::stage_rng(cfg.seed, "trilingual/sentences");

    let mut src_pivot = ParallelCorpus::new(cfg.src_lang.clone(), cfg.pivot_lang.clone());
    let mut pivot_tgt = ParallelCorpus::new(cfg.pivot_lang.clone(), cfg.tgt_lang.clone());
    let mut src_tgt = ParallelCorpus::new(cfg.src_lang.clone(), cfg.tgt_lang.clone());
    let mut mono = Vec::with_capacity(cfg.n_sentences);

    let n_nouns = lexicon.nouns.len();
    for _ in 0..cfg.n_sentences {
        let subject = rng.gen_range(0..n_nouns);
        let adjective = rng
            .gen_bool(0.5)
            .then(|| rng.gen_range(0..lexicon.adjectives.len()));
        // Subject and object differ whenever there are two nouns to choose
        // from. A repeated word would give the aligner a tie it resolves
        // toward the subject, leaving the object unaligned.
        let object = if n_nouns > 1 {
            (subject + rng.gen_range(1..n_nouns)) % n_nouns
        } else {
            subject
        };
        let clause = Clause {
            subject,
            adjective,
            object,
            verb: rng.gen_range(0..lexicon.verbs.len()),
        };
        let s = Sentence::new(lexicon.render_source(&clause));
        let p = Sentence::new(lexicon.render_pivot(&clause));
        let t = Sentence::new(lexicon.render_target(&clause));
        src_pivot
            .pairs
            .push(SentencePair::new(s.clone(), p.clone(), Provenance::Real));
        pivot_tgt
            .pairs
            .push(SentencePair::new(p.clone(), t.clone(), Provenance::Real));
        src_tgt.pairs.push(SentencePair::new(s, t, Provenance::Real));
        mono.push(p);
    }

    Ok(TrilingualData {
        src_pivot,
        pivot_tgt,
        src_tgt,
        pivot_mono: MonolingualCorpus::new(cfg.pivot_lang.clone(), mono),
        lexicon,
    })
}

/// Fraction of position-aligned tokens that are identical on both sides.
/// Meaningful for same-order corpora such as source-pivot.
pub fn token_overlap(corpus: &ParallelCorpus) -> f64 {
    let (mut shared, mut total) = (0usize, 0usize);
    for pair in &corpus.pairs {
        for (a, b) in pair.src.tokens().iter().zip(pair.tgt.tokens()) {
            total += 1;
            shared += usize::from(a == b);
        }
    }
    if total == 0 {
        0.0
    } else {
        shared as f64 / total as f64
    }
}
