use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use crate::corpus::{MonolingualCorpus, Sentence};
use crate::error::{Error, Result};
use crate::io;

pub const DEFAULT_LM_ORDER: usize = 3;
/// Weight of the higher-order relative frequency at every order above 1.
pub const DEFAULT_LM_WEIGHT: f64 = 0.8;

pub(crate) const UNK: u32 = 0;
pub(crate) const EOS: u32 = 1;
pub(crate) const BOS: u32 = 2;
const RESERVED: [&str; 3] = ["<unk>", "</s>", "<s>"];
const FILE_HEADER: &str = "#pivotmt-lm";

/// Interpolated n-gram model over an add-one unigram floor.
///
/// P_1(w) = (c(w) + 1) / (N + |V|), with V the training words plus `</s>`
/// and `<unk>`. For k > 1 and a history h seen in training,
/// P_k(w|h) = λ_k c(h,w)/c(h) + (1 − λ_k) P_{k−1}(w|h'), where h' drops the
/// oldest word; unseen histories back off to P_{k−1} unchanged.
#[derive(Debug, Clone, PartialEq)]
pub struct NGramLm {
    order: usize,
    weights: Vec<f64>,
    ids: HashMap<String, u32>,
    names: Vec<String>,
    /// `counts[k-1]`: history of length k-1 → (word → count, total).
    counts: Vec<HashMap<Vec<u32>, (HashMap<u32, u64>, u64)>>,
}

impl NGramLm {
    fn empty(order: usize, weights: Vec<f64>) -> Result<Self> {
        if order == 0 {
            return Err(Error::Config("LM order must be at least 1".into()));
        }
        if weights.len() != order - 1 || weights.iter().any(|w| !(0.0..=1.0).contains(w)) {
            return Err(Error::Config(format!(
                "an order-{order} LM needs {} interpolation weights in [0,1], got {weights:?}",
                order - 1
            )));
        }
        Ok(NGramLm {
            order,
            weights,
            ids: RESERVED
                .iter()
                .enumerate()
                .map(|(i, s)| (s.to_string(), i as u32))
                .collect(),
            names: RESERVED.iter().map(|s| s.to_string()).collect(),
            counts: vec![HashMap::new(); order],
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    fn intern(&mut self, w: &str) -> u32 {
        if let Some(&id) = self.ids.get(w) {
            return id;
        }
        let id = self.names.len() as u32;
        self.names.push(w.to_owned());
        self.ids.insert(w.to_owned(), id);
        id
    }

    fn add_ngram(&mut self, ngram: &[u32], count: u64) {
        let k = ngram.len();
        let (history, word) = ngram.split_at(k - 1);
        let (row, total) = self.counts[k - 1].entry(history.to_vec()).or_default();
        *row.entry(word[0]).or_default() += count;
        *total += count;
    }

    fn add_sentence(&mut self, words: &[String]) {
        let mut seq: Vec<u32> = vec![BOS; self.order - 1];
        seq.extend(words.iter().map(|w| self.intern(w)));
        seq.push(EOS);
        for i in (self.order - 1)..seq.len() {
            for k in 1..=self.order {
                self.add_ngram(&seq[i + 1 - k..=i], 1);
            }
        }
    }

    /// Id used when scoring; unknown words map to `<unk>`.
    pub fn id(&self, word: &str) -> u32 {
        match self.ids.get(word) {
            Some(&id) if id != BOS => id,
            _ => UNK,
        }
    }

    /// Predictable outcomes: every word id except `<s>`.
    pub fn outcomes(&self) -> impl Iterator<Item = u32> + '_ {
        (0..self.names.len() as u32).filter(|&id| id != BOS)
    }

    pub fn vocab_size(&self) -> usize {
        self.names.len() - 1
    }

    fn unigram(&self, w: u32) -> f64 {
        let (row, total) = self.counts[0]
            .get(&[][..])
            .map(|(r, t)| (Some(r), *t))
            .unwrap_or((None, 0));
        let c = row.and_then(|r| r.get(&w)).copied().unwrap_or(0);
        (c + 1) as f64 / (total + self.vocab_size() as u64) as f64
    }

    /// P(w | history), using at most the last `order - 1` history ids.
    pub fn prob(&self, history: &[u32], w: u32) -> f64 {
        let start = history.len().saturating_sub(self.order - 1);
        let history = &history[start..];
        let mut p = self.unigram(w);
        for k in 2..=history.len() + 1 {
            let h = &history[history.len() - (k - 1)..];
            if let Some((row, total)) = self.counts[k - 1].get(h) {
                let c = row.get(&w).copied().unwrap_or(0);
                let lambda = self.weights[k - 2];
                p = lambda * c as f64 / *total as f64 + (1.0 - lambda) * p;
            }
        }
        p
    }

    /// Starting history: `order - 1` sentence-start symbols.
    pub fn start_history(&self) -> Vec<u32> {
        vec![BOS; self.order - 1]
    }

    /// Appends `w` to a history, keeping the last `order - 1` ids.
    pub fn advance(&self, history: &mut Vec<u32>, w: u32) {
        if self.order == 1 {
            return;
        }
        history.push(w);
        if history.len() > self.order - 1 {
            history.remove(0);
        }
    }

    /// Natural-log probability of the tokens followed by `</s>`.
    pub fn logprob_tokens<S: AsRef<str>>(&self, tokens: &[S]) -> f64 {
        let mut history = self.start_history();
        let mut total = 0.0;
        for t in tokens {
            let id = self.id(t.as_ref());
            total += self.prob(&history, id).ln();
            self.advance(&mut history, id);
        }
        total + self.prob(&history, EOS).ln()
    }

    pub fn logprob(&self, sentence: &Sentence) -> f64 {
        self.logprob_tokens(sentence.tokens())
    }

    /// exp of the negative mean log-probability per predicted token,
    /// counting the end-of-sentence event.
    pub fn perplexity(&self, sentence: &Sentence) -> f64 {
        (-self.logprob(sentence) / (sentence.len() + 1) as f64).exp()
    }

    /// Header line, then `ngram<TAB>count` lines sorted by order and n-gram.
    pub fn to_file_string(&self) -> String {
        let weights: Vec<String> = self.weights.iter().map(|w| w.to_string()).collect();
        let mut out = format!(
            "{FILE_HEADER} order={} weights={}\n",
            self.order,
            weights.join(",")
        );
        for level in &self.counts {
            let mut lines: BTreeMap<String, u64> = BTreeMap::new();
            for (history, (row, _)) in level {
                for (&w, &c) in row {
                    let words: Vec<&str> = history
                        .iter()
                        .chain(std::iter::once(&w))
                        .map(|&id| self.names[id as usize].as_str())
                        .collect();
                    lines.insert(words.join(" "), c);
                }
            }
            for (ngram, c) in lines {
                out.push_str(&format!("{ngram}\t{c}\n"));
            }
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::parse("language model", 1, "missing header"))?;
        let bad_header = || Error::parse("language model", 1, "expected `#pivotmt-lm order=N weights=...`");
        let mut parts = header.split_whitespace();
        if parts.next() != Some(FILE_HEADER) {
            return Err(bad_header());
        }
        let order: usize = parts
            .next()
            .and_then(|p| p.strip_prefix("order="))
            .and_then(|v| v.parse().ok())
            .ok_or_else(bad_header)?;
        let weights_field = parts
            .next()
            .and_then(|p| p.strip_prefix("weights="))
            .ok_or_else(bad_header)?;
        let weights: Vec<f64> = if weights_field.is_empty() {
            Vec::new()
        } else {
            weights_field
                .split(',')
                .map(|w| w.parse().map_err(|_| bad_header()))
                .collect::<Result<_>>()?
        };
        let mut lm = NGramLm::empty(order, weights)?;
        for (i, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let (ngram, count) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse("language model", i + 2, "expected ngram<TAB>count"))?;
            let count: u64 = count
                .parse()
                .map_err(|_| Error::parse("language model", i + 2, "bad count"))?;
            let ids: Vec<u32> = ngram.split(' ').map(|w| lm.intern(w)).collect();
            if ids.is_empty() || ids.len() > order {
                return Err(Error::parse("language model", i + 2, "n-gram longer than order"));
            }
            lm.add_ngram(&ids, count);
        }
        Ok(lm)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        io::write_string(path, &self.to_file_string())
    }

    pub fn load(path: &Path) -> Result<Self> {
        NGramLm::parse(&io::read_string(path)?)
    }
}

pub fn train_lm(mono: &MonolingualCorpus, order: usize) -> Result<NGramLm> {
    train_lm_weighted(mono, order, vec![DEFAULT_LM_WEIGHT; order.saturating_sub(1)])
}

pub fn train_lm_weighted(mono: &MonolingualCorpus, order: usize, weights: Vec<f64>) -> Result<NGramLm> {
    if mono.is_empty() {
        return Err(Error::Data("cannot train a language model on an empty corpus".into()));
    }
    let mut lm = NGramLm::empty(order, weights)?;
    for s in &mono.sentences {
        lm.add_sentence(s.tokens());
    }
    Ok(lm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn mono(lines: &[&str]) -> MonolingualCorpus {
        MonolingualCorpus::from_strs("en", lines)
    }

    #[test]
    fn symmetric_unigrams() {
        let lm = train_lm(&mono(&["a b"]), 1).unwrap();
        assert_eq!(lm.prob(&[], lm.id("a")), lm.prob(&[], lm.id("b")));
    }

    #[test]
    fn normalizes_for_random_histories() {
        let lm = train_lm(
            &mono(&["a b c a", "b b c", "c a b a c", "d a"]),
            3,
        )
        .unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let ids: Vec<u32> = lm.outcomes().chain([BOS]).collect();
        for _ in 0..100 {
            let len = rng.gen_range(0..4);
            let h: Vec<u32> = (0..len).map(|_| ids[rng.gen_range(0..ids.len())]).collect();
            let sum: f64 = lm.outcomes().map(|w| lm.prob(&h, w)).sum();
            assert!((sum - 1.0).abs() < 1e-9, "history {h:?} sums to {sum}");
        }
    }

    #[test]
    fn repeated_sentence_has_low_perplexity() {
        let lines = vec!["we farm in mango cultivate"; 1000];
        let lm = train_lm(&mono(&lines), 3).unwrap();
        let s = Sentence::new("we farm in mango cultivate");
        // Closed form: V = 5 words + </s> + <unk> = 7, N = 6000 events.
        // Each event: λ·1 + (1-λ)(λ·1 + (1-λ)·1001/6007).
        let uni = 1001.0 / 6007.0;
        let per = 0.8 + 0.2 * (0.8 + 0.2 * uni);
        let expected_ppl = 1.0 / per;
        assert!((lm.perplexity(&s) - expected_ppl).abs() < 1e-12);
        assert!(lm.perplexity(&s) < 1.2);
    }

    #[test]
    fn empty_sentence_scores_end_only() {
        let lm = train_lm(&mono(&["a", "a b"]), 2).unwrap();
        let lp = lm.logprob(&Sentence::new(""));
        assert_eq!(lp, lm.prob(&[BOS], EOS).ln());
    }

    #[test]
    fn hand_computed_bigram_case() {
        // Corpus: "a b", "a", "b a"; bigram model, λ = 0.8.
        // Unigram events: a×3, b×2, </s>×3 → N = 8, V = {a, b, </s>, <unk>} = 4.
        let lm = train_lm(&mono(&["a b", "a", "b a"]), 2).unwrap();
        let p1 = |c: f64| (c + 1.0) / 12.0;
        // P(a|<s>): c(<s> a)=2, c(<s>)=3.
        let pa = 0.8 * 2.0 / 3.0 + 0.2 * p1(3.0);
        // P(b|a): c(a b)=1, c(a)=3.
        let pb = 0.8 * 1.0 / 3.0 + 0.2 * p1(2.0);
        // P(</s>|b): c(b </s>)=1, c(b)=2.
        let pe = 0.8 * 1.0 / 2.0 + 0.2 * p1(3.0);
        let expected = pa.ln() + pb.ln() + pe.ln();
        assert!((lm.logprob(&Sentence::new("a b")) - expected).abs() < 1e-12);
    }

    #[test]
    fn logprob_never_positive_and_unknown_words_map_to_unk() {
        let lm = train_lm(&mono(&["x y z"]), 3).unwrap();
        for s in ["", "x", "q r s t", "x y z"] {
            assert!(lm.logprob(&Sentence::new(s)) <= 0.0);
        }
        assert_eq!(lm.id("never-seen"), UNK);
    }

    #[test]
    fn errors() {
        assert!(matches!(train_lm(&mono(&[]), 3), Err(Error::Data(_))));
        assert!(matches!(train_lm(&mono(&["a"]), 0), Err(Error::Config(_))));
    }

    #[test]
    fn file_round_trip() {
        let lm = train_lm(&mono(&["a b c", "b c d", "a a"]), 3).unwrap();
        let text = lm.to_file_string();
        assert!(text.starts_with("#pivotmt-lm order=3 weights=0.8,0.8\n"));
        let back = NGramLm::parse(&text).unwrap();
        for s in ["a b c", "d d", "", "z a"] {
            let s = Sentence::new(s);
            assert!((back.logprob(&s) - lm.logprob(&s)).abs() < 1e-12);
        }
        assert!(NGramLm::parse("nonsense").is_err());
    }
}
