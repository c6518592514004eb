//! Slow, obviously-correct reimplementations the fast code is checked
//! against, plus the random instance generators they are checked on.
//!
//! Shared by the integration tests of this crate and the acceptance suite of
//! the command-line crate, so not every test binary uses every item.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap};

use pivotmt_core::corpus::{MonolingualCorpus, ParallelCorpus, Sentence};
use pivotmt_core::decoder::{decode, train_lm, DecoderWeights, NGramLm, UNBOUNDED_BEAM};
use pivotmt_core::eval::BleuReport;
use pivotmt_core::tm::PhraseTable;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn words<'a>(rng: &mut ChaCha8Rng, vocab: &[&'a str], len: usize) -> Vec<&'a str> {
    (0..len).map(|_| vocab[rng.gen_range(0..vocab.len())]).collect()
}

pub fn phrase(rng: &mut ChaCha8Rng, vocab: &[&str], max_len: usize) -> String {
    let len = rng.gen_range(1..=max_len);
    words(rng, vocab, len).join(" ")
}

// ---------------------------------------------------------------- decoder

pub const DEC_SRC: [&str; 5] = ["a", "b", "c", "d", "e"];
pub const DEC_TGT: [&str; 4] = ["w", "x", "y", "z"];

pub struct DecoderInstance {
    pub table: PhraseTable,
    pub lm: NGramLm,
    pub weights: DecoderWeights,
    pub source: Vec<String>,
    pub k: usize,
}

/// At most 50 table entries, source of at most 5 tokens including the
/// out-of-table word `q`.
pub fn decoder_instance(seed: u64) -> DecoderInstance {
    let mut rng = rng(seed);
    let mut table = PhraseTable::new(3);
    for _ in 0..rng.gen_range(1..=50) {
        let s = phrase(&mut rng, &DEC_SRC, 3);
        let t = phrase(&mut rng, &DEC_TGT, 3);
        table.insert(&s, &t, rng.gen_range(0.01..1.0));
    }
    let lines: Vec<String> = (0..rng.gen_range(1..8)).map(|_| phrase(&mut rng, &DEC_TGT, 5)).collect();
    let lm = train_lm(&MonolingualCorpus::from_strs("t", &lines), rng.gen_range(1..=3)).unwrap();
    let mut src_vocab = DEC_SRC.to_vec();
    src_vocab.push("q");
    let source = phrase(&mut rng, &src_vocab, 5).split(' ').map(str::to_owned).collect();
    let weights = DecoderWeights {
        tm: rng.gen_range(0.2..2.0),
        lm: rng.gen_range(0.2..2.0),
        word_penalty: rng.gen_range(-1.0..1.0),
        oov_penalty: -10.0,
    };
    DecoderInstance {
        table,
        lm,
        weights,
        source,
        k: rng.gen_range(1..=6),
    }
}

/// Every monotone segmentation and every translation choice, keeping the
/// best score per distinct target string. A single token with no entry is
/// copied at the OOV penalty.
pub fn enumerate_translations(inst: &DecoderInstance) -> BTreeMap<Vec<String>, f64> {
    fn go(
        inst: &DecoderInstance,
        pos: usize,
        tokens: &mut Vec<String>,
        tm: f64,
        best: &mut BTreeMap<Vec<String>, f64>,
    ) {
        let n = inst.source.len();
        if pos == n {
            let score = tm
                + inst.weights.lm * inst.lm.logprob_tokens(tokens)
                + inst.weights.word_penalty * tokens.len() as f64;
            let slot = best.entry(tokens.clone()).or_insert(f64::NEG_INFINITY);
            if score > *slot {
                *slot = score;
            }
            return;
        }
        for len in 1..=(n - pos) {
            let src = inst.source[pos..pos + len].join(" ");
            match inst.table.get(&src) {
                Some(row) => {
                    for (tgt, p) in row {
                        let before = tokens.len();
                        tokens.extend(tgt.split(' ').map(str::to_owned));
                        go(inst, pos + len, tokens, tm + inst.weights.tm * p.ln(), best);
                        tokens.truncate(before);
                    }
                }
                None if len == 1 => {
                    tokens.push(src);
                    go(inst, pos + 1, tokens, tm + inst.weights.oov_penalty, best);
                    tokens.pop();
                }
                None => {}
            }
        }
    }
    let mut best = BTreeMap::new();
    go(inst, 0, &mut Vec::new(), 0.0, &mut best);
    best
}

/// Decodes with an unbounded beam and compares against the top k of the
/// enumeration. Candidates that tie in exact arithmetic may differ in the
/// last ulp depending on summation order, so ranks are compared on score and
/// each returned string is checked against its own enumerated score.
pub fn check_decoder_instance(seed: u64) -> Result<(), String> {
    let inst = decoder_instance(seed);
    let got = decode(&inst.table, &inst.lm, &inst.weights, &inst.source, inst.k, UNBOUNDED_BEAM);
    let all = enumerate_translations(&inst);
    let mut want: Vec<_> = all.iter().collect();
    want.sort_by(|a, b| b.1.total_cmp(a.1).then_with(|| a.0.cmp(b.0)));
    want.truncate(inst.k);
    if got.len() != want.len() {
        return Err(format!("seed {seed}: {} hypotheses, expected {}", got.len(), want.len()));
    }
    for (h, (_, score)) in got.iter().zip(&want) {
        if (h.score - **score).abs() >= 1e-9 {
            return Err(format!("seed {seed}: score {} at a rank where {score} is best", h.score));
        }
        let own = all.get(&h.tokens).copied().unwrap_or(f64::NAN);
        if (h.score - own).abs() >= 1e-9 {
            return Err(format!("seed {seed}: {:?} scored {} but enumerates to {own}", h.tokens, h.score));
        }
    }
    if got.windows(2).any(|w| w[0].tokens == w[1].tokens) {
        return Err(format!("seed {seed}: duplicate hypothesis strings"));
    }
    Ok(())
}

// ------------------------------------------------------------------- BLEU

pub fn random_bleu_corpus(rng: &mut ChaCha8Rng) -> (Vec<Sentence>, Vec<Sentence>) {
    let vocab = ["a", "b", "c", "d", "e"];
    let sent = |rng: &mut ChaCha8Rng| {
        let len = rng.gen_range(0..9);
        Sentence::from_tokens(&words(rng, &vocab, len))
    };
    let n = rng.gen_range(1..6);
    let hyps = (0..n).map(|_| sent(rng)).collect();
    let refs = (0..n).map(|_| sent(rng)).collect();
    (hyps, refs)
}

/// Same random corpora, but half of them are near-copies so that non-zero
/// scores get exercised.
pub fn overlapping_bleu_corpus(rng: &mut ChaCha8Rng) -> (Vec<Sentence>, Vec<Sentence>) {
    let (mut hyps, refs) = random_bleu_corpus(rng);
    if rng.gen_bool(0.5) {
        hyps = refs.clone();
        if let Some(first) = hyps.first_mut() {
            *first = Sentence::new(format!("{} a", first.text()));
        }
    }
    (hyps, refs)
}

pub struct BleuCounts {
    pub counts: [(u64, u64); 4],
    pub hyp_len: u64,
    pub ref_len: u64,
    pub score: f64,
}

/// Counts every n-gram by linear scans instead of hashing.
pub fn bleu_oracle(hyps: &[Sentence], refs: &[Sentence]) -> BleuCounts {
    let mut counts = [(0u64, 0u64); 4];
    let (mut c, mut r) = (0, 0);
    for (h, rf) in hyps.iter().zip(refs) {
        let (h, rf) = (h.tokens(), rf.tokens());
        c += h.len() as u64;
        r += rf.len() as u64;
        for n in 1..=4 {
            if h.len() < n {
                continue;
            }
            let hg: Vec<&[String]> = (0..=h.len() - n).map(|i| &h[i..i + n]).collect();
            let rg: Vec<&[String]> = if rf.len() >= n {
                (0..=rf.len() - n).map(|i| &rf[i..i + n]).collect()
            } else {
                Vec::new()
            };
            let mut seen: Vec<&[String]> = Vec::new();
            for g in &hg {
                if seen.contains(g) {
                    continue;
                }
                seen.push(g);
                let in_h = hg.iter().filter(|x| *x == g).count() as u64;
                let in_r = rg.iter().filter(|x| *x == g).count() as u64;
                counts[n - 1].0 += in_h.min(in_r);
            }
            counts[n - 1].1 += hg.len() as u64;
        }
    }
    let bp = if c >= r {
        1.0
    } else if c == 0 {
        0.0
    } else {
        (1.0 - r as f64 / c as f64).exp()
    };
    let score = if counts.iter().all(|&(m, t)| m > 0 && t > 0) {
        let mut log_sum = 0.0;
        for &(m, t) in &counts {
            log_sum += 0.25 * (m as f64 / t as f64).ln();
        }
        100.0 * bp * log_sum.exp()
    } else {
        0.0
    };
    BleuCounts {
        counts,
        hyp_len: c,
        ref_len: r,
        score,
    }
}

/// Exact agreement of counts, lengths and score.
pub fn bleu_agrees(report: &BleuReport, oracle: &BleuCounts) -> bool {
    let got: Vec<(u64, u64)> = report.precisions.iter().map(|p| (p.matches, p.total)).collect();
    got == oracle.counts.to_vec()
        && (report.hyp_len, report.ref_len) == (oracle.hyp_len, oracle.ref_len)
        && report.score == oracle.score
}

// ---------------------------------------------------------- triangulation

/// A random source-pivot and pivot-target table pair, at most 50 phrases per
/// side. With `normalized`, every row sums to one and every pivot phrase
/// the first table produces keys the second.
pub fn random_table_pair(seed: u64, normalized: bool) -> (PhraseTable, PhraseTable) {
    let mut rng = rng(seed);
    let src_vocab = ["n1", "n2", "n3", "n4"];
    let piv_vocab = ["h1", "h2", "h3", "h4", "h5"];
    let tgt_vocab = ["e1", "e2", "e3", "e4"];
    let random_table = |rng: &mut ChaCha8Rng, from: &[&str], to: &[&str], keys: Option<&BTreeSet<String>>| {
        let mut rows: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
        let n_sources = keys.map_or_else(|| rng.gen_range(1..=50), |k| k.len());
        let mut sources: Vec<String> = match keys {
            Some(k) => k.iter().cloned().collect(),
            None => (0..n_sources).map(|_| phrase(rng, from, 2)).collect(),
        };
        sources.dedup();
        for s in sources {
            let row = rows.entry(s).or_default();
            for _ in 0..rng.gen_range(1..=4) {
                row.insert(phrase(rng, to, 2), rng.gen_range(0.001..1.0));
            }
        }
        if normalized {
            for row in rows.values_mut() {
                let total: f64 = row.values().sum();
                row.values_mut().for_each(|p| *p /= total);
            }
        }
        let mut table = PhraseTable::new(2);
        for (s, row) in rows {
            for (t, p) in row {
                table.insert(&s, &t, p);
            }
        }
        table
    };
    let src_pivot = random_table(&mut rng, &src_vocab, &piv_vocab, None);
    let pivot_keys: Option<BTreeSet<String>> = normalized.then(|| {
        src_pivot
            .rows()
            .flat_map(|(_, row)| row.keys().cloned())
            .collect()
    });
    let pivot_tgt = random_table(&mut rng, &piv_vocab, &tgt_vocab, pivot_keys.as_ref());
    (src_pivot, pivot_tgt)
}

/// Target-outer nested loops over every (source, target, pivot) triple.
pub fn triangulate_oracle(
    src_pivot: &PhraseTable,
    pivot_tgt: &PhraseTable,
    floor: f64,
) -> BTreeMap<(String, String), f64> {
    let targets: BTreeSet<&str> = pivot_tgt
        .rows()
        .flat_map(|(_, row)| row.keys().map(String::as_str))
        .collect();
    let mut out = BTreeMap::new();
    for (s, _) in src_pivot.rows() {
        for &t in &targets {
            let mut mass = 0.0;
            let mut linked = false;
            for (p, _) in pivot_tgt.rows() {
                let a = src_pivot.prob(s, p);
                let b = pivot_tgt.prob(p, t);
                if a > 0.0 && b > 0.0 {
                    mass += a * b;
                    linked = true;
                }
            }
            if linked && mass >= floor {
                out.insert((s.to_owned(), t.to_owned()), mass);
            }
        }
    }
    out
}

pub fn table_entries(table: &PhraseTable) -> BTreeMap<(String, String), f64> {
    table
        .rows()
        .flat_map(|(s, row)| row.iter().map(move |(t, p)| ((s.to_owned(), t.clone()), *p)))
        .collect()
}

/// Same keys, and values within `tol`.
pub fn tables_agree(got: &BTreeMap<(String, String), f64>, want: &BTreeMap<(String, String), f64>, tol: f64) -> bool {
    got.len() == want.len()
        && got
            .iter()
            .zip(want)
            .all(|((k1, v1), (k2, v2))| k1 == k2 && (v1 - v2).abs() <= tol)
}

// ---------------------------------------------------------------- Model 1

pub const NULL: &str = "<null>";

pub fn random_toy_corpus(seed: u64) -> ParallelCorpus {
    let mut rng = rng(seed);
    let src = ["a", "b", "c", "d", "e", "f"];
    let tgt = ["u", "v", "w", "x", "y", "z"];
    let n = rng.gen_range(1..=8);
    let pairs: Vec<(String, String)> = (0..n)
        .map(|_| (phrase(&mut rng, &src, 5), phrase(&mut rng, &tgt, 5)))
        .collect();
    ParallelCorpus::from_strs("s", "t", &pairs)
}

/// Textbook Model 1 EM over string-keyed maps. Returns t(f|e), with `NULL`
/// as the empty source word, and the log-likelihood before each iteration
/// and after the last.
pub fn model1_oracle(corpus: &ParallelCorpus, iterations: usize) -> (HashMap<(String, String), f64>, Vec<f64>) {
    let sentences: Vec<(Vec<String>, Vec<String>)> = corpus
        .pairs
        .iter()
        .map(|p| {
            let mut e = vec![NULL.to_owned()];
            e.extend(p.src.tokens().iter().cloned());
            (e, p.tgt.tokens().to_vec())
        })
        .collect();
    let mut cooc: HashMap<String, BTreeSet<String>> = HashMap::new();
    for (e, f) in &sentences {
        for ei in e {
            cooc.entry(ei.clone()).or_default().extend(f.iter().cloned());
        }
    }
    let mut t: HashMap<(String, String), f64> = HashMap::new();
    for (e, fs) in &cooc {
        for f in fs {
            t.insert((e.clone(), f.clone()), 1.0 / fs.len() as f64);
        }
    }
    let likelihood = |t: &HashMap<(String, String), f64>| {
        let mut ll = 0.0;
        for (e, f) in &sentences {
            for fj in f {
                let s: f64 = e.iter().map(|ei| t[&(ei.clone(), fj.clone())]).sum();
                ll += (s / e.len() as f64).ln();
            }
        }
        ll
    };
    let mut trace = Vec::new();
    for _ in 0..iterations {
        trace.push(likelihood(&t));
        let mut count: HashMap<(String, String), f64> = HashMap::new();
        let mut total: HashMap<String, f64> = HashMap::new();
        for (e, f) in &sentences {
            for fj in f {
                let z: f64 = e.iter().map(|ei| t[&(ei.clone(), fj.clone())]).sum();
                for ei in e {
                    let c = t[&(ei.clone(), fj.clone())] / z;
                    *count.entry((ei.clone(), fj.clone())).or_default() += c;
                    *total.entry(ei.clone()).or_default() += c;
                }
            }
        }
        for (key, p) in t.iter_mut() {
            *p = count.get(key).copied().unwrap_or(0.0) / total[&key.0];
        }
    }
    trace.push(likelihood(&t));
    (t, trace)
}

// -------------------------------------------------------------------- BPE

/// Words over a three-letter alphabet, so pair counts tie often and runs
/// like `aaa` exercise overlapping pairs.
pub fn random_bpe_corpus(seed: u64) -> MonolingualCorpus {
    let mut rng = rng(seed);
    let letters = ['a', 'b', 'c'];
    let lines: Vec<String> = (0..rng.gen_range(1..=6))
        .map(|_| {
            let n_words = rng.gen_range(1..=6);
            (0..n_words)
                .map(|_| {
                    let len = rng.gen_range(1..=5);
                    (0..len).map(|_| letters[rng.gen_range(0..3)]).collect::<String>()
                })
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect();
    MonolingualCorpus::from_strs("x", &lines)
}

/// Recounts every adjacent pair from scratch before each merge. The most
/// frequent pair wins, ties going to the smallest `(left, right)`.
pub fn bpe_oracle(corpora: &[&MonolingualCorpus], num_merges: usize, marker: &str) -> Vec<(String, String)> {
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    for c in corpora {
        for s in &c.sentences {
            for w in s.tokens() {
                *counts.entry(w.clone()).or_default() += 1;
            }
        }
    }
    let mut vocab: Vec<(Vec<String>, u64)> = counts
        .into_iter()
        .map(|(w, n)| {
            let chars: Vec<char> = w.chars().collect();
            let mut symbols: Vec<String> = chars.iter().map(|c| c.to_string()).collect();
            let last = symbols.len() - 1;
            symbols[last].push_str(marker);
            (symbols, n)
        })
        .collect();
    let mut merges = Vec::new();
    for _ in 0..num_merges {
        let mut pairs: BTreeMap<(String, String), u64> = BTreeMap::new();
        for (symbols, n) in &vocab {
            for w in symbols.windows(2) {
                *pairs.entry((w[0].clone(), w[1].clone())).or_default() += n;
            }
        }
        // BTreeMap iterates keys ascending, so the first maximum is the
        // lexicographically smallest.
        let Some(max) = pairs.values().max().copied() else { break };
        let best = pairs.into_iter().find(|(_, n)| *n == max).unwrap().0;
        for (symbols, _) in &mut vocab {
            let mut out = Vec::with_capacity(symbols.len());
            let mut i = 0;
            while i < symbols.len() {
                if i + 1 < symbols.len() && symbols[i] == best.0 && symbols[i + 1] == best.1 {
                    out.push(format!("{}{}", best.0, best.1));
                    i += 2;
                } else {
                    out.push(symbols[i].clone());
                    i += 1;
                }
            }
            *symbols = out;
        }
        merges.push(best);
    }
    merges
}

// ---------------------------------------------------------------- cascade

use pivotmt_core::corpus::{generate_trilingual, Lang, TrilingualConfig};
use pivotmt_core::decoder::{TrainingConfig, TranslationModel};

/// Models with every weight but the translation model's switched off, so a
/// hypothesis scores exactly Σ ln φ.
pub fn word_model(rows: &[(&str, &[(&str, f64)])], from: &str, to: &str) -> TranslationModel {
    let table = PhraseTable::from_rows(1, rows.iter().map(|(s, r)| (*s, r.iter().copied())));
    let text: Vec<&str> = rows.iter().flat_map(|(_, r)| r.iter().map(|(t, _)| *t)).collect();
    TranslationModel::from_word_table(
        Lang::new(from),
        Lang::new(to),
        &table,
        &MonolingualCorpus::from_strs(to, &text),
        DecoderWeights {
            tm: 1.0,
            lm: 0.0,
            word_penalty: 0.0,
            oov_penalty: -10.0,
        },
    )
    .unwrap()
}

/// Source `a`: leg 1 prefers pivot `p1`, but `p2` has a near-certain
/// continuation, so the best of the four candidates is not on the greedy
/// path. The hand-enumerated candidates are returned with their combined
/// scores, best first.
pub fn crafted_cascade(
    leg2_scale: f64,
) -> (TranslationModel, TranslationModel, Vec<(&'static str, &'static str, f64)>) {
    let s2p = word_model(&[("a", &[("p1", 0.6), ("p2", 0.4)])], "s", "p");
    let p1 = [("t1", 0.3 * leg2_scale), ("t2", 0.2 * leg2_scale), ("t3", 0.5 * leg2_scale)];
    let p2 = [("t4", 0.9 * leg2_scale), ("t5", 0.1 * leg2_scale)];
    let p2t = word_model(&[("p1", &p1), ("p2", &p2)], "p", "t");
    let ln = f64::ln;
    let mut want = vec![
        ("p1", "t3", ln(0.6) + ln(0.5 * leg2_scale)),
        ("p1", "t1", ln(0.6) + ln(0.3 * leg2_scale)),
        ("p2", "t4", ln(0.4) + ln(0.9 * leg2_scale)),
        ("p2", "t5", ln(0.4) + ln(0.1 * leg2_scale)),
    ];
    want.sort_by(|a, b| b.2.total_cmp(&a.2));
    (s2p, p2t, want)
}

/// Source-pivot and pivot-target models trained on small generated corpora,
/// plus 200 test sentences: 100 held-out generated sources and 100 random
/// word strings over the same vocabulary, some with unseen words.
pub fn trained_legs(seed: u64) -> (TranslationModel, TranslationModel, Vec<Sentence>) {
    let data = generate_trilingual(&TrilingualConfig {
        seed,
        n_sentences: 900,
        vocab_size: 120,
        ..TrilingualConfig::default()
    })
    .unwrap();
    let cfg = TrainingConfig {
        num_merges: 300,
        em_iterations: 5,
        beam: 10,
        ..TrainingConfig::default()
    };
    let s2p = TranslationModel::train(&data.src_pivot.slice(0..400), &cfg).unwrap();
    let p2t = TranslationModel::train(&data.pivot_tgt.slice(400..800), &cfg).unwrap();
    let mut sentences: Vec<Sentence> = data.src_pivot.slice(800..900).sources().cloned().collect();
    let vocab: Vec<String> = data
        .src_pivot
        .sources()
        .flat_map(|s| s.tokens().to_vec())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .chain(["zzyzx".to_owned(), "qwop".to_owned()])
        .collect();
    let mut rng = rng(seed ^ 0x5eed);
    for _ in 0..100 {
        let len = rng.gen_range(1..=7);
        let words: Vec<&str> = (0..len).map(|_| vocab[rng.gen_range(0..vocab.len())].as_str()).collect();
        sentences.push(Sentence::from_tokens(&words));
    }
    (s2p, p2t, sentences)
}
