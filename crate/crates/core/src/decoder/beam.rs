//! Monotone phrase-based stack decoding.
//!
//! The source is covered left to right by phrase-table segments. Stack `j`
//! holds hypotheses covering the first `j` source tokens. Hypotheses with the
//! same coverage and the same target string are recombined, which keeps the
//! search exact for distinct-string n-best lists when the beam is unbounded.

use std::cmp::Ordering;
use std::collections::HashMap;

use super::lm::EOS;
use super::{DecoderWeights, NGramLm};
use crate::tm::PhraseTable;

pub const UNBOUNDED_BEAM: usize = usize::MAX;

/// One phrase application. `log_phi` is `None` for an OOV copy-through.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub src_start: usize,
    pub src_end: usize,
    pub target: Vec<String>,
    pub log_phi: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Hypothesis {
    pub tokens: Vec<String>,
    pub score: f64,
    pub segments: Vec<Segment>,
}

impl Hypothesis {
    pub fn text(&self) -> String {
        self.tokens.join(" ")
    }

    /// Recomputes the score from the back-trace:
    /// λ_tm Σ log φ + Σ OOV penalties + λ_lm log P_lm + word_penalty · |target|.
    pub fn recompute_score(&self, lm: &NGramLm, weights: &DecoderWeights) -> f64 {
        let tm: f64 = self
            .segments
            .iter()
            .map(|s| match s.log_phi {
                Some(lp) => weights.tm * lp,
                None => weights.oov_penalty,
            })
            .sum();
        tm + weights.lm * lm.logprob_tokens(&self.tokens)
            + weights.word_penalty * self.tokens.len() as f64
    }
}

/// Hypotheses sorted by score, best first, with distinct target strings.
pub type NBestList = Vec<Hypothesis>;

struct Partial {
    tokens: Vec<String>,
    history: Vec<u32>,
    score: f64,
    segments: Vec<Segment>,
}

struct TransOption {
    len: usize,
    target: Vec<String>,
    ids: Vec<u32>,
    log_phi: Option<f64>,
}

fn rank(a: &Partial, b: &Partial) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then_with(|| a.tokens.cmp(&b.tokens))
}

/// Translation options starting at each source position.
fn collect_options(table: &PhraseTable, lm: &NGramLm, source: &[String]) -> Vec<Vec<TransOption>> {
    let n = source.len();
    let mut options: Vec<Vec<TransOption>> = (0..n).map(|_| Vec::new()).collect();
    for (start, opts) in options.iter_mut().enumerate() {
        for len in 1..=table.max_phrase_len().min(n - start) {
            let phrase = source[start..start + len].join(" ");
            if let Some(row) = table.get(&phrase) {
                for (tgt, &p) in row {
                    if p <= 0.0 {
                        continue;
                    }
                    let target: Vec<String> = tgt.split_whitespace().map(str::to_owned).collect();
                    let ids = target.iter().map(|t| lm.id(t)).collect();
                    opts.push(TransOption {
                        len,
                        target,
                        ids,
                        log_phi: Some(p.ln()),
                    });
                }
            } else if len == 1 {
                let token = source[start].clone();
                opts.push(TransOption {
                    len: 1,
                    ids: vec![lm.id(&token)],
                    target: vec![token],
                    log_phi: None,
                });
            }
        }
    }
    options
}

/// Decodes `source` tokens into a distinct-string n-best list of at most `k`
/// entries, keeping at most `beam` hypotheses per stack.
pub fn decode(
    table: &PhraseTable,
    lm: &NGramLm,
    weights: &DecoderWeights,
    source: &[String],
    k: usize,
    beam: usize,
) -> NBestList {
    let k = k.max(1);
    let beam = beam.max(k);
    let n = source.len();
    let options = collect_options(table, lm, source);

    let mut stacks: Vec<Vec<Partial>> = (0..=n).map(|_| Vec::new()).collect();
    let mut index: Vec<HashMap<Vec<String>, usize>> = (0..=n).map(|_| HashMap::new()).collect();
    let mut start = Partial {
        tokens: Vec::new(),
        history: lm.start_history(),
        score: 0.0,
        segments: Vec::new(),
    };
    if n == 0 {
        start.score = weights.lm * lm.prob(&start.history, EOS).ln();
    }
    stacks[0].push(start);

    for j in 0..n {
        let mut current = std::mem::take(&mut stacks[j]);
        current.sort_by(rank);
        current.truncate(beam);
        for hyp in &current {
            for opt in &options[j] {
                let end = j + opt.len;
                let mut history = hyp.history.clone();
                let mut score = hyp.score
                    + match opt.log_phi {
                        Some(lp) => weights.tm * lp,
                        None => weights.oov_penalty,
                    }
                    + weights.word_penalty * opt.target.len() as f64;
                for &id in &opt.ids {
                    score += weights.lm * lm.prob(&history, id).ln();
                    lm.advance(&mut history, id);
                }
                if end == n {
                    score += weights.lm * lm.prob(&history, EOS).ln();
                }
                let mut tokens = hyp.tokens.clone();
                tokens.extend(opt.target.iter().cloned());

                match index[end].get(&tokens) {
                    Some(&slot) if stacks[end][slot].score >= score => {}
                    found => {
                        let mut segments = hyp.segments.clone();
                        segments.push(Segment {
                            src_start: j,
                            src_end: end,
                            target: opt.target.clone(),
                            log_phi: opt.log_phi,
                        });
                        let partial = Partial {
                            tokens: tokens.clone(),
                            history,
                            score,
                            segments,
                        };
                        match found {
                            Some(&slot) => stacks[end][slot] = partial,
                            None => {
                                index[end].insert(tokens, stacks[end].len());
                                stacks[end].push(partial);
                            }
                        }
                    }
                }
            }
        }
    }

    let mut finals = std::mem::take(&mut stacks[n]);
    finals.sort_by(rank);
    finals.truncate(k);
    finals
        .into_iter()
        .map(|p| Hypothesis {
            tokens: p.tokens,
            score: p.score,
            segments: p.segments,
        })
        .collect()
}
