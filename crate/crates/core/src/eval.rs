//! Corpus-level BLEU.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use regex::Regex;

use crate::corpus::Sentence;
use crate::error::{Error, Result};

pub const MAX_ORDER: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BleuMode {
    /// Tokens are the whitespace-separated tokens of the given sentences.
    Tokenized,
    /// Raw text is re-tokenized: whitespace splits, and every punctuation
    /// character becomes a token of its own.
    Detokenized,
}

impl BleuMode {
    pub fn as_str(self) -> &'static str {
        match self {
            BleuMode::Tokenized => "tokenized",
            BleuMode::Detokenized => "detokenized",
        }
    }
}

impl fmt::Display for BleuMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BleuMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tokenized" => Ok(BleuMode::Tokenized),
            "detokenized" => Ok(BleuMode::Detokenized),
            other => Err(Error::Config(format!(
                "unknown BLEU mode `{other}` (expected tokenized or detokenized)"
            ))),
        }
    }
}

/// Clipped matches over total hypothesis n-grams for one order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Precision {
    pub matches: u64,
    pub total: u64,
}

impl Precision {
    pub fn value(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.matches as f64 / self.total as f64
        }
    }
}

impl fmt::Display for Precision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.matches, self.total)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BleuReport {
    pub precisions: [Precision; MAX_ORDER],
    pub brevity_penalty: f64,
    pub score: f64,
    pub mode: BleuMode,
    pub hyp_len: u64,
    pub ref_len: u64,
}

impl BleuReport {
    /// `score p1 p2 p3 p4 BP c r mode`, precisions as `matches/total`.
    pub fn machine_line(&self) -> String {
        let p: Vec<String> = self.precisions.iter().map(ToString::to_string).collect();
        format!(
            "{:.4} {} {:.6} {} {} {}",
            self.score,
            p.join(" "),
            self.brevity_penalty,
            self.hyp_len,
            self.ref_len,
            self.mode
        )
    }
}

impl fmt::Display for BleuReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BLEU = {:.1} ({})", self.score, self.mode)
    }
}

fn punct_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\p{P}|[^\s\p{P}]+").expect("valid regex"))
}

/// The detokenized-mode tokenizer. Case is preserved.
pub fn tokenize(text: &str) -> Vec<String> {
    punct_regex()
        .find_iter(text)
        .map(|m| m.as_str().to_owned())
        .collect()
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], u64> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for gram in tokens.windows(n) {
            *counts.entry(gram).or_insert(0) += 1;
        }
    }
    counts
}

/// Unsmoothed corpus BLEU.
pub fn bleu(hyps: &[Sentence], refs: &[Sentence], mode: BleuMode) -> Result<BleuReport> {
    bleu_with(hyps, refs, mode, false)
}

/// Corpus BLEU with optional add-one smoothing of the order ≥ 2 precisions,
/// which keeps short single-sentence scores from collapsing to zero.
pub fn bleu_with(
    hyps: &[Sentence],
    refs: &[Sentence],
    mode: BleuMode,
    smooth: bool,
) -> Result<BleuReport> {
    if hyps.len() != refs.len() {
        return Err(Error::Data(format!(
            "{} hypotheses but {} references",
            hyps.len(),
            refs.len()
        )));
    }
    if hyps.is_empty() {
        return Err(Error::Data("no hypotheses to score".into()));
    }
    let toks = |s: &Sentence| match mode {
        BleuMode::Tokenized => s.tokens().to_vec(),
        BleuMode::Detokenized => tokenize(s.text()),
    };

    let mut precisions = [Precision::default(); MAX_ORDER];
    let (mut c, mut r) = (0u64, 0u64);
    for (hyp, reference) in hyps.iter().zip(refs) {
        let (h, rf) = (toks(hyp), toks(reference));
        c += h.len() as u64;
        r += rf.len() as u64;
        for (k, p) in precisions.iter_mut().enumerate() {
            let ref_counts = ngram_counts(&rf, k + 1);
            for (gram, count) in ngram_counts(&h, k + 1) {
                p.matches += count.min(ref_counts.get(gram).copied().unwrap_or(0));
                p.total += count;
            }
        }
    }

    let brevity_penalty = if c >= r {
        1.0
    } else if c == 0 {
        0.0
    } else {
        (1.0 - r as f64 / c as f64).exp()
    };
    let values: Vec<f64> = precisions
        .iter()
        .enumerate()
        .map(|(k, p)| {
            if smooth && k > 0 {
                (p.matches + 1) as f64 / (p.total + 1) as f64
            } else {
                p.value()
            }
        })
        .collect();
    let score = if values.iter().all(|&v| v > 0.0) {
        let log_mean: f64 = values.iter().map(|v| 0.25 * v.ln()).sum();
        100.0 * brevity_penalty * log_mean.exp()
    } else {
        0.0
    };
    Ok(BleuReport {
        precisions,
        brevity_penalty,
        score,
        mode,
        hyp_len: c,
        ref_len: r,
    })
}

/// Aligned comparison table, one row per system in name order, scores with
/// one decimal.
pub fn score_table(results: &BTreeMap<String, BleuReport>) -> Result<String> {
    if results.is_empty() {
        return Err(Error::Data("no systems to tabulate".into()));
    }
    let width = results.keys().map(|k| k.len()).max().unwrap_or(0).max("system".len());
    let mut out = format!(
        "{:<width$}  {:>6}  {:>6}  {:>6}  {:>6}  {:>6}  {:>6}  {:>7}  {:>7}\n",
        "system", "BLEU", "1-gram", "2-gram", "3-gram", "4-gram", "BP", "hyp_len", "ref_len"
    );
    for (name, rep) in results {
        let p = rep.precisions.map(|p| 100.0 * p.value());
        out.push_str(&format!(
            "{:<width$}  {:>6.1}  {:>6.1}  {:>6.1}  {:>6.1}  {:>6.1}  {:>6.3}  {:>7}  {:>7}\n",
            name, rep.score, p[0], p[1], p[2], p[3], rep.brevity_penalty, rep.hyp_len, rep.ref_len
        ));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sents(lines: &[&str]) -> Vec<Sentence> {
        lines.iter().map(|l| Sentence::new(*l)).collect()
    }

    #[test]
    fn identity_is_100() {
        let s = sents(&["the cat sat on the mat", "a b c d e"]);
        let rep = bleu(&s, &s, BleuMode::Tokenized).unwrap();
        assert_eq!(rep.score, 100.0);
        assert_eq!(rep.brevity_penalty, 1.0);
        assert!(rep.precisions.iter().all(|p| p.matches == p.total));
    }

    #[test]
    fn hand_counted_precisions() {
        let rep = bleu(&sents(&["a b c d"]), &sents(&["a b c e"]), BleuMode::Tokenized).unwrap();
        let got: Vec<(u64, u64)> = rep.precisions.iter().map(|p| (p.matches, p.total)).collect();
        assert_eq!(got, vec![(3, 4), (2, 3), (1, 2), (0, 1)]);
        assert_eq!(rep.score, 0.0);
        assert_eq!(rep.machine_line(), "0.0000 3/4 2/3 1/2 0/1 1.000000 4 4 tokenized");
    }

    #[test]
    fn brevity_penalty_for_half_length() {
        let rep = bleu(&sents(&["a b c d"]), &sents(&["a b c d e f g h"]), BleuMode::Tokenized).unwrap();
        assert_eq!(rep.brevity_penalty, (-1.0f64).exp());
        assert!((rep.score - 100.0 * (-1.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn smoothing_rescues_zero_higher_orders() {
        let rep = bleu_with(&sents(&["a b c d"]), &sents(&["a b c e"]), BleuMode::Tokenized, true).unwrap();
        let want = 100.0 * (0.25 * ((0.75f64).ln() + 0.75f64.ln() + (2.0f64 / 3.0).ln() + 0.5f64.ln())).exp();
        assert!((rep.score - want).abs() < 1e-12);
    }

    #[test]
    fn tokenizer_splits_punctuation() {
        assert_eq!(tokenize("Hello, world!  (it's)"), ["Hello", ",", "world", "!", "(", "it", "'", "s", ")"]);
        assert_eq!(tokenize("नमस्ते।"), ["नमस्ते", "।"]);
        assert!(tokenize("   ").is_empty());
    }

    #[test]
    fn detokenized_mode_sees_punctuation() {
        let hyp = sents(&["the cat sat."]);
        let refs = sents(&["the cat sat ."]);
        assert_eq!(bleu(&hyp, &refs, BleuMode::Detokenized).unwrap().score, 100.0);
        assert!(bleu(&hyp, &refs, BleuMode::Tokenized).unwrap().score < 100.0);
    }

    #[test]
    fn errors() {
        assert!(matches!(bleu(&[], &[], BleuMode::Tokenized), Err(Error::Data(_))));
        assert!(matches!(
            bleu(&sents(&["a"]), &sents(&["a", "b"]), BleuMode::Tokenized),
            Err(Error::Data(_))
        ));
        assert!(score_table(&BTreeMap::new()).is_err());
        assert!("sacre".parse::<BleuMode>().is_err());
    }

    #[test]
    fn table_rows_are_sorted_with_one_decimal() {
        let mut rep = bleu(&sents(&["a b c d"]), &sents(&["a b c d"]), BleuMode::Tokenized).unwrap();
        rep.score = 14.2;
        let mut results = BTreeMap::new();
        results.insert("zeta".to_owned(), rep.clone());
        results.insert("alpha".to_owned(), rep);
        let table = score_table(&results).unwrap();
        let rows: Vec<&str> = table.lines().skip(1).collect();
        assert!(rows[0].starts_with("alpha"));
        assert!(rows[1].starts_with("zeta"));
        assert!(rows[0].contains(" 14.2 "));
    }
}
