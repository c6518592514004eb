//! Joint byte-pair encoding.
//!
//! Words are split into characters with a word-final boundary marker glued to
//! the last character (`ab` -> `a`, `b</w>`). Learning greedily merges the most
//! frequent adjacent symbol pair over the pooled word counts of all input
//! corpora; ties go to the lexicographically smallest `(left, right)`.
//! Merges never cross word boundaries.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use crate::corpus::{MonolingualCorpus, Sentence};
use crate::error::{Error, Result};
use crate::io;

pub const BOUNDARY_MARKER: &str = "</w>";
pub const DEFAULT_NUM_MERGES: usize = 5000;
const FILE_HEADER: &str = "#pivotmt-bpe version=1";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BpeModel {
    merges: Vec<(String, String)>,
    ranks: HashMap<String, HashMap<String, usize>>,
    vocab: BTreeSet<String>,
    marker: String,
}

/// Subword symbols of one sentence. Word ends carry the boundary marker.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TokenSequence {
    pub symbols: Vec<String>,
}

impl TokenSequence {
    pub fn new(symbols: Vec<String>) -> Self {
        TokenSequence { symbols }
    }

    /// Space-joined symbols, the form phrase tables and LMs operate on.
    pub fn to_sentence(&self) -> Sentence {
        Sentence::from_tokens(&self.symbols)
    }
}

fn initial_symbols(word: &str, marker: &str) -> Vec<String> {
    let chars: Vec<char> = word.chars().collect();
    let last = chars.len() - 1;
    chars
        .iter()
        .enumerate()
        .map(|(i, c)| {
            if i == last {
                format!("{c}{marker}")
            } else {
                c.to_string()
            }
        })
        .collect()
}

/// Replaces every non-overlapping occurrence of `(left, right)`, scanning
/// left to right.
fn merge_in_place(symbols: &mut Vec<String>, left: &str, right: &str) {
    let mut i = 0;
    while i + 1 < symbols.len() {
        if symbols[i] == left && symbols[i + 1] == right {
            let merged = format!("{left}{right}");
            symbols[i] = merged;
            symbols.remove(i + 1);
        }
        i += 1;
    }
}

impl BpeModel {
    fn from_merges(merges: Vec<(String, String)>, mut vocab: BTreeSet<String>) -> Self {
        let mut ranks: HashMap<String, HashMap<String, usize>> = HashMap::new();
        for (rank, (l, r)) in merges.iter().enumerate() {
            ranks.entry(l.clone()).or_default().insert(r.clone(), rank);
            vocab.insert(l.clone());
            vocab.insert(r.clone());
            vocab.insert(format!("{l}{r}"));
        }
        BpeModel {
            merges,
            ranks,
            vocab,
            marker: BOUNDARY_MARKER.to_owned(),
        }
    }

    pub fn merges(&self) -> &[(String, String)] {
        &self.merges
    }

    pub fn vocab(&self) -> &BTreeSet<String> {
        &self.vocab
    }

    pub fn boundary_marker(&self) -> &str {
        &self.marker
    }

    fn rank(&self, left: &str, right: &str) -> Option<usize> {
        self.ranks.get(left).and_then(|m| m.get(right)).copied()
    }

    pub fn encode_word(&self, word: &str) -> Vec<String> {
        let mut symbols = initial_symbols(word, &self.marker);
        loop {
            let best = symbols
                .windows(2)
                .filter_map(|w| self.rank(&w[0], &w[1]))
                .min();
            let Some(rank) = best else { break };
            let (l, r) = &self.merges[rank];
            merge_in_place(&mut symbols, l, r);
        }
        symbols
    }

    pub fn encode(&self, sentence: &Sentence) -> TokenSequence {
        TokenSequence::new(
            sentence
                .tokens()
                .iter()
                .flat_map(|w| self.encode_word(w))
                .collect(),
        )
    }

    pub fn decode(&self, tokens: &TokenSequence) -> Sentence {
        decode_symbols(&tokens.symbols, &self.marker)
    }

    pub fn encode_corpus(&self, corpus: &MonolingualCorpus) -> MonolingualCorpus {
        MonolingualCorpus::new(
            corpus.lang.clone(),
            corpus
                .sentences
                .iter()
                .map(|s| self.encode(s).to_sentence())
                .collect(),
        )
    }

    pub fn to_file_string(&self) -> String {
        let mut out = format!("{FILE_HEADER} boundary={}\n", self.marker);
        for (l, r) in &self.merges {
            out.push_str(l);
            out.push(' ');
            out.push_str(r);
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::parse("bpe model", 1, "missing header"))?;
        let expected = format!("{FILE_HEADER} boundary={BOUNDARY_MARKER}");
        if header.trim_end() != expected {
            return Err(Error::parse(
                "bpe model",
                1,
                format!("expected header `{expected}`"),
            ));
        }
        let mut merges = Vec::new();
        for (i, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split(' ');
            match (parts.next(), parts.next(), parts.next()) {
                (Some(l), Some(r), None) if !l.is_empty() && !r.is_empty() => {
                    merges.push((l.to_owned(), r.to_owned()))
                }
                _ => return Err(Error::parse("bpe model", i + 2, "expected two symbols")),
            }
        }
        Ok(BpeModel::from_merges(merges, BTreeSet::new()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        io::write_string(path, &self.to_file_string())
    }

    pub fn load(path: &Path) -> Result<Self> {
        BpeModel::parse(&io::read_string(path)?)
    }
}

/// Concatenates symbols and starts a new word after each boundary marker.
pub fn decode_symbols<S: AsRef<str>>(symbols: &[S], marker: &str) -> Sentence {
    let mut words = Vec::new();
    let mut current = String::new();
    for sym in symbols {
        let sym = sym.as_ref();
        match sym.strip_suffix(marker) {
            Some(stem) => {
                current.push_str(stem);
                words.push(std::mem::take(&mut current));
            }
            None => current.push_str(sym),
        }
    }
    if !current.is_empty() {
        words.push(current);
    }
    Sentence::new(words.join(" "))
}

/// Symbol interner plus incremental pair statistics for learning.
struct Learner {
    names: Vec<String>,
    ids: HashMap<String, u32>,
    words: Vec<(Vec<u32>, u64)>,
    pair_counts: HashMap<(u32, u32), u64>,
    pair_words: HashMap<(u32, u32), BTreeSet<usize>>,
}

impl Learner {
    fn intern(&mut self, s: &str) -> u32 {
        if let Some(&id) = self.ids.get(s) {
            return id;
        }
        let id = self.names.len() as u32;
        self.names.push(s.to_owned());
        self.ids.insert(s.to_owned(), id);
        id
    }

    fn add_word_pairs(&mut self, w: usize, sign: i64) {
        let (symbols, count) = &self.words[w];
        for pair in symbols.windows(2).map(|p| (p[0], p[1])) {
            let entry = self.pair_counts.entry(pair).or_default();
            if sign > 0 {
                *entry += count;
                self.pair_words.entry(pair).or_default().insert(w);
            } else {
                *entry -= count;
                if *entry == 0 {
                    self.pair_counts.remove(&pair);
                }
            }
        }
    }

    fn best_pair(&self) -> Option<(u32, u32)> {
        self.pair_counts
            .iter()
            .max_by(|(a, ca), (b, cb)| {
                ca.cmp(cb).then_with(|| {
                    // Smaller (left, right) wins the tie, so it must compare greater.
                    let ka = (&self.names[a.0 as usize], &self.names[a.1 as usize]);
                    let kb = (&self.names[b.0 as usize], &self.names[b.1 as usize]);
                    kb.cmp(&ka)
                })
            })
            .map(|(p, _)| *p)
    }

    fn apply(&mut self, pair: (u32, u32)) -> u32 {
        let merged_name = format!(
            "{}{}",
            self.names[pair.0 as usize], self.names[pair.1 as usize]
        );
        let merged = self.intern(&merged_name);
        let affected = self.pair_words.remove(&pair).unwrap_or_default();
        for w in affected {
            let has_pair = self.words[w].0.windows(2).any(|p| (p[0], p[1]) == pair);
            if !has_pair {
                continue;
            }
            self.add_word_pairs(w, -1);
            let symbols = &mut self.words[w].0;
            let mut i = 0;
            while i + 1 < symbols.len() {
                if (symbols[i], symbols[i + 1]) == pair {
                    symbols[i] = merged;
                    symbols.remove(i + 1);
                }
                i += 1;
            }
            self.add_word_pairs(w, 1);
        }
        merged
    }
}

/// Learns one merge list over the pooled word counts of every corpus.
pub fn learn_joint_bpe(corpora: &[&MonolingualCorpus], num_merges: usize) -> Result<BpeModel> {
    let mut word_counts: BTreeMap<&str, u64> = BTreeMap::new();
    for corpus in corpora {
        for sentence in &corpus.sentences {
            for token in sentence.tokens() {
                *word_counts.entry(token).or_default() += 1;
            }
        }
    }
    if word_counts.is_empty() {
        return Err(Error::Data(
            "cannot learn BPE: every input corpus is empty".into(),
        ));
    }

    let mut learner = Learner {
        names: Vec::new(),
        ids: HashMap::new(),
        words: Vec::new(),
        pair_counts: HashMap::new(),
        pair_words: HashMap::new(),
    };
    let mut vocab = BTreeSet::new();
    for (word, count) in word_counts {
        let symbols: Vec<u32> = initial_symbols(word, BOUNDARY_MARKER)
            .iter()
            .map(|s| {
                vocab.insert(s.clone());
                learner.intern(s)
            })
            .collect();
        learner.words.push((symbols, count));
    }
    for w in 0..learner.words.len() {
        learner.add_word_pairs(w, 1);
    }

    let mut merges = Vec::new();
    while merges.len() < num_merges {
        let Some(pair) = learner.best_pair() else {
            break;
        };
        learner.apply(pair);
        merges.push((
            learner.names[pair.0 as usize].clone(),
            learner.names[pair.1 as usize].clone(),
        ));
    }
    Ok(BpeModel::from_merges(merges, vocab))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mono(lines: &[&str]) -> MonolingualCorpus {
        MonolingualCorpus::from_strs("xx", lines)
    }

    #[test]
    fn most_frequent_pair_is_merged_first() {
        let m = learn_joint_bpe(&[&mono(&["ab ab ac"])], 1).unwrap();
        assert_eq!(m.merges(), [("a".to_owned(), "b</w>".to_owned())]);
        assert_eq!(m.encode(&Sentence::new("ab")).symbols, ["ab</w>"]);
    }

    #[test]
    fn zero_merges_yields_characters() {
        let m = learn_joint_bpe(&[&mono(&["ab ab ac"])], 0).unwrap();
        assert!(m.merges().is_empty());
        assert_eq!(m.encode(&Sentence::new("ab")).symbols, ["a", "b</w>"]);
    }

    #[test]
    fn joint_learning_equals_learning_on_concatenation() {
        let a = mono(&["the cat sat", "a cat"]);
        let b = mono(&["kat sit", "the kat"]);
        let both = mono(&["the cat sat", "a cat", "kat sit", "the kat"]);
        assert_eq!(
            learn_joint_bpe(&[&a, &b], 20).unwrap(),
            learn_joint_bpe(&[&both], 20).unwrap()
        );
    }

    #[test]
    fn merge_count_is_capped_by_available_pairs() {
        let m = learn_joint_bpe(&[&mono(&["abc"])], 100).unwrap();
        assert_eq!(m.merges().len(), 2);
        assert_eq!(m.encode(&Sentence::new("abc")).symbols, ["abc</w>"]);
    }

    #[test]
    fn empty_corpora_are_rejected() {
        assert!(matches!(learn_joint_bpe(&[&mono(&[])], 3), Err(Error::Data(_))));
        assert!(matches!(learn_joint_bpe(&[], 3), Err(Error::Data(_))));
    }

    #[test]
    fn decode_examples() {
        let m = learn_joint_bpe(&[&mono(&["ab"])], 0).unwrap();
        let seq = TokenSequence::new(vec!["a".into(), "b</w>".into()]);
        assert_eq!(m.decode(&seq).text(), "ab");
        assert_eq!(m.decode(&TokenSequence::default()).text(), "");
    }

    #[test]
    fn unseen_characters_pass_through() {
        let m = learn_joint_bpe(&[&mono(&["ab ab"])], 5).unwrap();
        let seq = m.encode(&Sentence::new("abz q"));
        assert_eq!(seq.symbols, ["a", "b", "z</w>", "q</w>"]);
        assert_eq!(m.decode(&seq).text(), "abz q");
    }

    #[test]
    fn overlapping_runs_merge_left_to_right() {
        let m = learn_joint_bpe(&[&mono(&["aaa aaa"])], 1).unwrap();
        assert_eq!(m.merges()[0], ("a".to_owned(), "a".to_owned()));
        assert_eq!(m.encode(&Sentence::new("aaa")).symbols, ["aa", "a</w>"]);
    }

    #[test]
    fn model_file_round_trip() {
        let m = learn_joint_bpe(&[&mono(&["lower lowest newer wider"])], 12).unwrap();
        let text = m.to_file_string();
        assert!(text.starts_with("#pivotmt-bpe version=1 boundary=</w>\n"));
        let back = BpeModel::parse(&text).unwrap();
        assert_eq!(back.merges(), m.merges());
        for w in ["lower", "newest", "wide"] {
            assert_eq!(back.encode_word(w), m.encode_word(w));
        }
        assert!(BpeModel::parse("bogus\n").is_err());
        assert!(BpeModel::parse(&format!("{FILE_HEADER} boundary=</w>\na b c\n")).is_err());
    }

    #[test]
    fn vocab_bound() {
        let corpus = mono(&["low lower lowest", "new newer"]);
        let zero = learn_joint_bpe(&[&corpus], 0).unwrap();
        let m = learn_joint_bpe(&[&corpus], 10).unwrap();
        assert!(m.vocab().len() <= zero.vocab().len() + m.merges().len());
    }

    proptest! {
        #[test]
        fn round_trip_normalizes_whitespace(text in "[a-fé ]{0,40}", merges in 0usize..30) {
            let train = mono(&["abc abd cafe dead bee", "fade face"]);
            let m = learn_joint_bpe(&[&train], merges).unwrap();
            let s = Sentence::new(text.clone());
            let back = m.decode(&m.encode(&s));
            prop_assert_eq!(back.text(), s.normalized());
        }

        #[test]
        fn more_merges_never_lengthen_training_encodings(
            lines in prop::collection::vec("[a-d]{1,6}( [a-d]{1,6}){0,4}", 1..8),
            k in 0usize..15,
        ) {
            let corpus = MonolingualCorpus::from_strs("xx", &lines);
            let a = learn_joint_bpe(&[&corpus], k).unwrap();
            let b = learn_joint_bpe(&[&corpus], k + 1).unwrap();
            for s in &corpus.sentences {
                prop_assert!(a.encode(s).symbols.len() >= b.encode(s).symbols.len());
            }
        }
    }
}
