use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use crate::corpus::{ParallelCorpus, SentencePair};
use crate::error::{Error, Result};

/// Word translation probabilities t(target | source), with a NULL source row.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LexicalTable {
    rows: BTreeMap<String, BTreeMap<String, f64>>,
    null_row: BTreeMap<String, f64>,
}

impl LexicalTable {
    /// `source = None` addresses the NULL word.
    pub fn prob(&self, source: Option<&str>, target: &str) -> f64 {
        let row = match source {
            Some(s) => self.rows.get(s),
            None => Some(&self.null_row),
        };
        row.and_then(|r| r.get(target)).copied().unwrap_or(0.0)
    }

    pub fn set(&mut self, source: Option<&str>, target: &str, p: f64) {
        let row = match source {
            Some(s) => self.rows.entry(s.to_owned()).or_default(),
            None => &mut self.null_row,
        };
        row.insert(target.to_owned(), p);
    }

    pub fn row(&self, source: Option<&str>) -> Option<&BTreeMap<String, f64>> {
        match source {
            Some(s) => self.rows.get(s),
            None => Some(&self.null_row),
        }
    }

    pub fn source_words(&self) -> impl Iterator<Item = &str> {
        self.rows.keys().map(String::as_str)
    }

    /// Σ_t t(t|s) for every source word including NULL (keyed `None`).
    pub fn row_sums(&self) -> Vec<(Option<&str>, f64)> {
        let mut out = vec![(None, self.null_row.values().sum())];
        out.extend(
            self.rows
                .iter()
                .map(|(s, r)| (Some(s.as_str()), r.values().sum())),
        );
        out
    }
}

/// Source-to-target word links of one sentence pair.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AlignmentMatrix {
    pub links: BTreeSet<(usize, usize)>,
}

impl AlignmentMatrix {
    pub fn new(links: impl IntoIterator<Item = (usize, usize)>) -> Self {
        AlignmentMatrix {
            links: links.into_iter().collect(),
        }
    }

    pub fn within_bounds(&self, src_len: usize, tgt_len: usize) -> bool {
        self.links.iter().all(|&(i, j)| i < src_len && j < tgt_len)
    }
}

/// Pharaoh format: `i-j` pairs separated by spaces.
impl fmt::Display for AlignmentMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.links.iter().map(|(i, j)| format!("{i}-{j}")).collect();
        f.write_str(&parts.join(" "))
    }
}

impl FromStr for AlignmentMatrix {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut links = BTreeSet::new();
        for item in s.split_whitespace() {
            let (i, j) = item
                .split_once('-')
                .ok_or_else(|| Error::Data(format!("bad alignment link `{item}`")))?;
            let parse = |v: &str| {
                v.parse::<usize>()
                    .map_err(|_| Error::Data(format!("bad alignment link `{item}`")))
            };
            links.insert((parse(i)?, parse(j)?));
        }
        Ok(AlignmentMatrix { links })
    }
}

pub struct Model1Output {
    pub table: LexicalTable,
    /// Corpus log-likelihood before each EM iteration and after the last one.
    pub log_likelihood: Vec<f64>,
}

/// Flat EM state. Source id 0 is NULL; each (source, target) co-occurrence
/// owns one slot.
struct Em {
    src_names: Vec<String>,
    tgt_names: Vec<String>,
    slot_row: Vec<u32>,
    slot_tgt: Vec<u32>,
    probs: Vec<f64>,
    /// Per pair: source length (without NULL), target length, and the slot of
    /// every (target j, source i) cell with i = 0 meaning NULL.
    pairs: Vec<(usize, usize, Vec<u32>)>,
}

impl Em {
    fn build(corpus: &ParallelCorpus) -> Em {
        let mut src_ids: HashMap<&str, u32> = HashMap::new();
        let mut tgt_ids: HashMap<&str, u32> = HashMap::new();
        let mut src_names = vec!["NULL".to_owned()];
        let mut tgt_names = Vec::new();
        let mut slots: HashMap<(u32, u32), u32> = HashMap::new();
        let mut slot_row = Vec::new();
        let mut slot_tgt = Vec::new();
        let mut pairs = Vec::with_capacity(corpus.len());

        for SentencePair { src, tgt, .. } in &corpus.pairs {
            let s: Vec<u32> = std::iter::once(0)
                .chain(src.tokens().iter().map(|w| {
                    *src_ids.entry(w.as_str()).or_insert_with(|| {
                        src_names.push(w.clone());
                        (src_names.len() - 1) as u32
                    })
                }))
                .collect();
            let t: Vec<u32> = tgt
                .tokens()
                .iter()
                .map(|w| {
                    *tgt_ids.entry(w.as_str()).or_insert_with(|| {
                        tgt_names.push(w.clone());
                        (tgt_names.len() - 1) as u32
                    })
                })
                .collect();
            let mut cells = Vec::with_capacity(s.len() * t.len());
            for &f in &t {
                for &e in &s {
                    let slot = *slots.entry((e, f)).or_insert_with(|| {
                        slot_row.push(e);
                        slot_tgt.push(f);
                        (slot_row.len() - 1) as u32
                    });
                    cells.push(slot);
                }
            }
            pairs.push((s.len() - 1, t.len(), cells));
        }

        // Uniform over co-occurring targets.
        let mut fanout = vec![0u32; src_names.len()];
        for &e in &slot_row {
            fanout[e as usize] += 1;
        }
        let probs = slot_row
            .iter()
            .map(|&e| 1.0 / f64::from(fanout[e as usize]))
            .collect();

        Em {
            src_names,
            tgt_names,
            slot_row,
            slot_tgt,
            probs,
            pairs,
        }
    }

    /// One pass over the corpus: returns the log-likelihood under the current
    /// table and, if requested, accumulates expected counts.
    fn expectation(&self, mut counts: Option<&mut [f64]>) -> f64 {
        let mut ll = 0.0;
        for (l, m, cells) in &self.pairs {
            let width = l + 1;
            for j in 0..*m {
                let row = &cells[j * width..(j + 1) * width];
                let denom: f64 = row.iter().map(|&s| self.probs[s as usize]).sum();
                ll += (denom / width as f64).ln();
                if let Some(c) = counts.as_deref_mut() {
                    for &s in row {
                        c[s as usize] += self.probs[s as usize] / denom;
                    }
                }
            }
        }
        ll
    }

    fn maximization(&mut self, counts: &[f64]) {
        let mut totals = vec![0.0; self.src_names.len()];
        for (slot, &c) in counts.iter().enumerate() {
            totals[self.slot_row[slot] as usize] += c;
        }
        for (slot, p) in self.probs.iter_mut().enumerate() {
            let total = totals[self.slot_row[slot] as usize];
            *p = if total > 0.0 { counts[slot] / total } else { 0.0 };
        }
    }

    fn table(&self) -> LexicalTable {
        let mut table = LexicalTable::default();
        for slot in 0..self.probs.len() {
            let e = self.slot_row[slot] as usize;
            let f = &self.tgt_names[self.slot_tgt[slot] as usize];
            let src = (e != 0).then(|| self.src_names[e].as_str());
            table.set(src, f, self.probs[slot]);
        }
        table
    }
}

/// IBM Model 1 EM with a NULL source word, starting from a table that is
/// uniform over co-occurring words.
pub fn train_model1(corpus: &ParallelCorpus, iterations: usize) -> Result<Model1Output> {
    if corpus.is_empty() {
        return Err(Error::Data("cannot train Model 1 on an empty corpus".into()));
    }
    if iterations == 0 {
        return Err(Error::Config("Model 1 needs at least one iteration".into()));
    }
    let mut em = Em::build(corpus);
    let mut trace = Vec::with_capacity(iterations + 1);
    let mut counts = vec![0.0; em.probs.len()];
    for _ in 0..iterations {
        counts.iter_mut().for_each(|c| *c = 0.0);
        trace.push(em.expectation(Some(&mut counts)));
        em.maximization(&counts);
    }
    trace.push(em.expectation(None));
    Ok(Model1Output {
        table: em.table(),
        log_likelihood: trace,
    })
}

/// Links every target word to its most probable source word. The NULL word
/// wins only when strictly more probable than every real word; ties among
/// real words go to the leftmost position.
pub fn viterbi_align(table: &LexicalTable, pair: &SentencePair) -> AlignmentMatrix {
    let mut links = BTreeSet::new();
    for (j, f) in pair.tgt.tokens().iter().enumerate() {
        let mut best: Option<(usize, f64)> = None;
        for (i, e) in pair.src.tokens().iter().enumerate() {
            let p = table.prob(Some(e), f);
            if best.is_none_or(|(_, bp)| p > bp) {
                best = Some((i, p));
            }
        }
        if let Some((i, p)) = best {
            if p > 0.0 && p >= table.prob(None, f) {
                links.insert((i, j));
            }
        }
    }
    AlignmentMatrix { links }
}
