use std::collections::BTreeMap;
use std::path::Path;

use super::AlignmentMatrix;
use crate::corpus::ParallelCorpus;
use crate::error::{Error, Result};
use crate::io::{self, format_sig12};

pub const DEFAULT_MAX_PHRASE_LEN: usize = 4;

/// φ(target phrase | source phrase). Phrases are space-joined tokens.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PhraseTable {
    entries: BTreeMap<String, BTreeMap<String, f64>>,
    max_phrase_len: usize,
}

impl PhraseTable {
    pub fn new(max_phrase_len: usize) -> Self {
        PhraseTable {
            entries: BTreeMap::new(),
            max_phrase_len,
        }
    }

    /// Inserts or overwrites one entry. The source length bound grows to fit.
    pub fn insert(&mut self, source: &str, target: &str, prob: f64) {
        let len = source.split_whitespace().count();
        self.max_phrase_len = self.max_phrase_len.max(len);
        self.entries
            .entry(source.to_owned())
            .or_default()
            .insert(target.to_owned(), prob);
    }

    pub fn from_rows<'a, I, R>(max_phrase_len: usize, rows: I) -> Self
    where
        I: IntoIterator<Item = (&'a str, R)>,
        R: IntoIterator<Item = (&'a str, f64)>,
    {
        let mut table = PhraseTable::new(max_phrase_len);
        for (src, row) in rows {
            for (tgt, p) in row {
                table.insert(src, tgt, p);
            }
        }
        table
    }

    /// Longest source phrase, in tokens.
    pub fn max_phrase_len(&self) -> usize {
        self.max_phrase_len
    }

    pub fn get(&self, source: &str) -> Option<&BTreeMap<String, f64>> {
        self.entries.get(source)
    }

    pub fn prob(&self, source: &str, target: &str) -> f64 {
        self.get(source)
            .and_then(|r| r.get(target))
            .copied()
            .unwrap_or(0.0)
    }

    pub fn contains_source(&self, source: &str) -> bool {
        self.entries.contains_key(source)
    }

    /// Rows in lexicographic source order.
    pub fn rows(&self) -> impl Iterator<Item = (&str, &BTreeMap<String, f64>)> {
        self.entries.iter().map(|(s, r)| (s.as_str(), r))
    }

    pub fn num_sources(&self) -> usize {
        self.entries.len()
    }

    pub fn len(&self) -> usize {
        self.entries.values().map(BTreeMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Rewrites phrase keys, summing probabilities of entries that collide.
    pub fn map_phrases(
        &self,
        mut map_source: impl FnMut(&str) -> String,
        mut map_target: impl FnMut(&str) -> String,
    ) -> PhraseTable {
        let mut out = PhraseTable::new(0);
        for (src, row) in &self.entries {
            let new_src = map_source(src);
            for (tgt, p) in row {
                let new_tgt = map_target(tgt);
                let prev = out.prob(&new_src, &new_tgt);
                out.insert(&new_src, &new_tgt, prev + p);
            }
        }
        out
    }

    /// Checks probabilities lie in (0,1] and rows sum to at most 1.
    pub fn validate(&self) -> Result<()> {
        for (src, row) in &self.entries {
            if let Some((tgt, p)) = row.iter().find(|(_, p)| !(**p > 0.0 && **p <= 1.0)) {
                return Err(Error::Data(format!(
                    "probability {p} out of (0,1] for `{src}` -> `{tgt}`"
                )));
            }
            let sum: f64 = row.values().sum();
            if sum > 1.0 + 1e-9 {
                return Err(Error::Data(format!("row `{src}` sums to {sum}")));
            }
        }
        Ok(())
    }

    /// `source ||| target ||| probability`, sorted by source then target.
    pub fn to_file_string(&self) -> String {
        let mut out = String::new();
        for (src, row) in &self.entries {
            for (tgt, p) in row {
                out.push_str(&format!("{src} ||| {tgt} ||| {}\n", format_sig12(*p)));
            }
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut table = PhraseTable::new(0);
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(" ||| ").collect();
            if fields.len() != 3 {
                return Err(Error::parse("phrase table", i + 1, "expected 3 fields"));
            }
            let p: f64 = fields[2]
                .trim()
                .parse()
                .map_err(|_| Error::parse("phrase table", i + 1, "bad probability"))?;
            if table.get(fields[0]).is_some_and(|r| r.contains_key(fields[1])) {
                return Err(Error::parse("phrase table", i + 1, "duplicate entry"));
            }
            table.insert(fields[0], fields[1], p);
        }
        table.validate()?;
        Ok(table)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        io::write_string(path, &self.to_file_string())
    }

    pub fn load(path: &Path) -> Result<Self> {
        PhraseTable::parse(&io::read_string(path)?)
    }
}

/// Collects every alignment-consistent phrase pair with both sides at most
/// `max_phrase_len` tokens long. Unaligned target words at the span edges
/// yield additional, wider target phrases.
fn consistent_pairs(
    src_len: usize,
    tgt_len: usize,
    alignment: &AlignmentMatrix,
    max_len: usize,
    mut emit: impl FnMut(std::ops::Range<usize>, std::ops::Range<usize>),
) {
    let mut tgt_aligned = vec![false; tgt_len];
    for &(_, j) in &alignment.links {
        tgt_aligned[j] = true;
    }
    for s_start in 0..src_len {
        for s_end in s_start..(s_start + max_len).min(src_len) {
            let span: Vec<usize> = alignment
                .links
                .iter()
                .filter(|(i, _)| (s_start..=s_end).contains(i))
                .map(|&(_, j)| j)
                .collect();
            let (Some(&t_min), Some(&t_max)) = (span.iter().min(), span.iter().max()) else {
                continue;
            };
            if t_max - t_min + 1 > max_len {
                continue;
            }
            let consistent = alignment
                .links
                .iter()
                .filter(|(_, j)| (t_min..=t_max).contains(j))
                .all(|(i, _)| (s_start..=s_end).contains(i));
            if !consistent {
                continue;
            }
            let mut t_start = t_min;
            loop {
                let mut t_end = t_max;
                while t_end - t_start < max_len {
                    emit(s_start..s_end + 1, t_start..t_end + 1);
                    t_end += 1;
                    if t_end >= tgt_len || tgt_aligned[t_end] {
                        break;
                    }
                }
                if t_start == 0 || tgt_aligned[t_start - 1] {
                    break;
                }
                t_start -= 1;
                if t_max - t_start >= max_len {
                    break;
                }
            }
        }
    }
}

/// Extracts consistent phrase pairs and estimates φ by relative frequency,
/// count(src, tgt) / count(src).
pub fn extract_phrases(
    corpus: &ParallelCorpus,
    alignments: &[AlignmentMatrix],
    max_phrase_len: usize,
) -> Result<PhraseTable> {
    if corpus.len() != alignments.len() {
        return Err(Error::Data(format!(
            "{} sentence pairs but {} alignments",
            corpus.len(),
            alignments.len()
        )));
    }
    if max_phrase_len == 0 {
        return Err(Error::Config("max_phrase_len must be at least 1".into()));
    }
    let mut counts: BTreeMap<String, BTreeMap<String, u64>> = BTreeMap::new();
    for (n, (pair, alignment)) in corpus.pairs.iter().zip(alignments).enumerate() {
        let (src, tgt) = (pair.src.tokens(), pair.tgt.tokens());
        if !alignment.within_bounds(src.len(), tgt.len()) {
            return Err(Error::Data(format!(
                "alignment {n} has links outside a {}x{} sentence pair",
                src.len(),
                tgt.len()
            )));
        }
        consistent_pairs(src.len(), tgt.len(), alignment, max_phrase_len, |s, t| {
            *counts
                .entry(src[s].join(" "))
                .or_default()
                .entry(tgt[t].join(" "))
                .or_default() += 1;
        });
    }

    let mut table = PhraseTable::new(max_phrase_len);
    for (src, row) in counts {
        let total: u64 = row.values().sum();
        let row: BTreeMap<String, f64> = row
            .into_iter()
            .map(|(tgt, c)| (tgt, c as f64 / total as f64))
            .collect();
        table.entries.insert(src, row);
    }
    Ok(table)
}
