//! The direct-versus-pivot experiment on generated trilingual data.
//!
//! One pool of sentences is generated and sliced into disjoint pieces: a
//! small direct source-target corpus, larger source-pivot and pivot-target
//! corpora, monolingual pivot text for backtranslation and a held-out
//! source-target test set. Every configured system is built from the same
//! pieces and scored on the same test set.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use crate::config::PipelineConfig;
use crate::corpus::generate::{generate_trilingual, TrilingualConfig};
use crate::corpus::{stats, write_stem, CorpusStats, MonolingualCorpus, ParallelCorpus, Sentence};
use crate::error::{Error, Result};
use crate::eval::{bleu_with, score_table, BleuReport};
use crate::io;
use crate::pivot::{BuildContext, Registry, SystemData, Translator};

/// Splits of the generated pool.
pub struct ExperimentData {
    pub systems: SystemData,
    pub test: ParallelCorpus,
    /// Pivot side of the test sentences, for scoring the first leg alone.
    pub test_pivot: Vec<Sentence>,
}

pub fn generator_config(cfg: &PipelineConfig) -> TrilingualConfig {
    TrilingualConfig {
        seed: cfg.seed,
        n_sentences: cfg.direct_size
            + cfg.src_pivot_size
            + cfg.pivot_tgt_size
            + cfg.mono_size()
            + cfg.test_size,
        vocab_size: cfg.vocab_size,
        lexical_overlap: cfg.lexical_overlap,
        src_lang: cfg.src_lang.clone(),
        pivot_lang: cfg.pivot_lang.clone(),
        tgt_lang: cfg.tgt_lang.clone(),
        ..TrilingualConfig::default()
    }
}

pub fn prepare_data(cfg: &PipelineConfig) -> Result<ExperimentData> {
    let data = generate_trilingual(&generator_config(cfg))?;
    let mut at = 0;
    let mut next = |len: usize| {
        let range = at..at + len;
        at += len;
        range
    };
    let direct = data.src_tgt.slice(next(cfg.direct_size));
    let src_pivot = data.src_pivot.slice(next(cfg.src_pivot_size));
    let pivot_tgt = data.pivot_tgt.slice(next(cfg.pivot_tgt_size));
    let mono_range = next(cfg.mono_size());
    let pivot_mono = MonolingualCorpus::new(
        data.pivot_mono.lang.clone(),
        data.pivot_mono.sentences[mono_range].to_vec(),
    );
    let test_range = next(cfg.test_size);
    let test = data.src_tgt.slice(test_range.clone());
    let test_pivot = data.src_pivot.slice(test_range).targets().cloned().collect();
    Ok(ExperimentData {
        systems: SystemData {
            direct,
            src_pivot,
            pivot_tgt,
            pivot_mono,
        },
        test,
        test_pivot,
    })
}

/// Translates with one thread per available core. Output order follows input
/// order, so results do not depend on the thread count.
pub fn translate_parallel(translator: &dyn Translator, sentences: &[Sentence]) -> Vec<Sentence> {
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get());
    let chunk = sentences.len().div_ceil(threads).max(1);
    std::thread::scope(|scope| {
        let handles: Vec<_> = sentences
            .chunks(chunk)
            .map(|part| scope.spawn(move || translator.translate_all(part)))
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("translation thread panicked"))
            .collect()
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub config: PipelineConfig,
    /// Sizes of the generated pieces.
    pub corpora: BTreeMap<String, CorpusStats>,
    /// Training-set statistics of every model, with provenance breakdown.
    pub training: BTreeMap<String, CorpusStats>,
    pub results: BTreeMap<String, BleuReport>,
    /// Source-to-pivot models scored against the pivot side of the test set,
    /// which shows what augmenting the first leg did to it.
    pub pivot_leg: BTreeMap<String, BleuReport>,
    /// Wall-clock per stage. Kept out of [`ExperimentReport::to_text`] so the
    /// report is byte-identical across runs.
    pub timings: Vec<(String, Duration)>,
}

impl ExperimentReport {
    pub fn score(&self, system: &str) -> Option<f64> {
        self.results.get(system).map(|r| r.score)
    }

    /// Score of `system` minus score of `baseline`.
    pub fn gap(&self, system: &str, baseline: &str) -> Option<f64> {
        Some(self.score(system)? - self.score(baseline)?)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("[config]\n");
        out.push_str(&self.config.to_config_string());
        for (title, section) in [("corpora", &self.corpora), ("training", &self.training)] {
            out.push_str(&format!("\n[{title}]\n"));
            for (name, st) in section {
                for line in st.to_report().lines() {
                    out.push_str(&format!("{name}.{line}\n"));
                }
            }
        }
        out.push_str("\n[bleu]\n");
        out.push_str(&score_table(&self.results).unwrap_or_default());
        out.push_str("\n[bleu.machine]\n");
        for (name, rep) in &self.results {
            out.push_str(&format!("{name} {}\n", rep.machine_line()));
        }
        if !self.pivot_leg.is_empty() {
            out.push_str("\n[pivot_leg]\n");
            out.push_str(&score_table(&self.pivot_leg).unwrap_or_default());
        }
        if self.results.contains_key("direct") {
            out.push_str("\n[gap_vs_direct]\n");
            for name in self.results.keys().filter(|n| *n != "direct") {
                let gap = self.gap(name, "direct").unwrap_or_default();
                out.push_str(&format!("{name}: {gap:+.1}\n"));
            }
        }
        out
    }

    pub fn timings_text(&self) -> String {
        self.timings
            .iter()
            .map(|(stage, d)| format!("{stage}\t{:.3}s\n", d.as_secs_f64()))
            .collect()
    }
}

/// Writes the generated pieces under `dir` as corpus stems: `direct`,
/// `src-pivot`, `pivot-tgt`, `test` and the monolingual `pivot-mono.<lang>`.
pub fn write_data(data: &ExperimentData, dir: &Path, manifest: &mut Manifest) -> Result<()> {
    let sys = &data.systems;
    for (name, corpus) in [
        ("direct", &sys.direct),
        ("src-pivot", &sys.src_pivot),
        ("pivot-tgt", &sys.pivot_tgt),
        ("test", &data.test),
    ] {
        for path in write_stem(corpus, &dir.join(name))? {
            manifest.add(path, "gen-data");
        }
    }
    let mono = dir.join(format!("pivot-mono.{}", sys.pivot_mono.lang));
    sys.pivot_mono.write(&mono)?;
    manifest.add(mono, "gen-data");
    Ok(())
}

pub const MANIFEST_FILE: &str = "manifest.txt";

/// Files written into a run directory, each with the stage that produced it.
#[derive(Debug, Default)]
pub struct Manifest {
    entries: Vec<(PathBuf, String)>,
}

impl Manifest {
    /// Reads `root/manifest.txt`, or starts empty when there is none.
    pub fn load(root: &Path) -> Result<Self> {
        let path = root.join(MANIFEST_FILE);
        let mut manifest = Manifest::default();
        if !path.exists() {
            return Ok(manifest);
        }
        for (i, line) in io::read_lines(&path)?.iter().enumerate() {
            let (file, stage) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(path.display().to_string(), i + 1, "expected `path<TAB>stage`"))?;
            manifest.add(root.join(file), stage);
        }
        Ok(manifest)
    }

    /// Records `path`. A path already listed takes the new stage in place.
    pub fn add(&mut self, path: PathBuf, stage: &str) {
        match self.entries.iter_mut().find(|(p, _)| *p == path) {
            Some(entry) => entry.1 = stage.to_owned(),
            None => self.entries.push((path, stage.to_owned())),
        }
    }

    pub fn entries(&self) -> &[(PathBuf, String)] {
        &self.entries
    }

    /// `relative/path<TAB>stage` per artifact. Paths outside `root` stay as
    /// given.
    pub fn to_text(&self, root: &Path) -> String {
        self.entries
            .iter()
            .map(|(p, stage)| {
                let rel = p.strip_prefix(root).unwrap_or(p);
                format!("{}\t{stage}\n", rel.display())
            })
            .collect()
    }

    pub fn save(&self, root: &Path) -> Result<()> {
        io::write_string(&root.join(MANIFEST_FILE), &self.to_text(root))
    }
}

struct Stopwatch {
    timings: Vec<(String, Duration)>,
    started: Instant,
}

impl Stopwatch {
    fn lap(&mut self, stage: &str) {
        let elapsed = self.started.elapsed();
        log::info!("stage {stage} done in {:.2}s", elapsed.as_secs_f64());
        self.timings.push((stage.to_owned(), elapsed));
        self.started = Instant::now();
    }
}

/// Runs every configured system. With `out_dir` set, corpora, hypotheses,
/// the report, timings and a manifest are written there.
pub fn run_experiment(
    cfg: &PipelineConfig,
    registry: &Registry,
    out_dir: Option<&Path>,
) -> Result<ExperimentReport> {
    cfg.validate()?;
    let systems: Vec<_> = cfg
        .systems
        .iter()
        .map(|name| registry.get(name))
        .collect::<Result<_>>()?;
    let mut clock = Stopwatch {
        timings: Vec::new(),
        started: Instant::now(),
    };
    let mut manifest = Manifest::default();

    let data = prepare_data(cfg)?;
    let corpora: BTreeMap<String, CorpusStats> = [
        ("direct", &data.systems.direct),
        ("src-pivot", &data.systems.src_pivot),
        ("pivot-tgt", &data.systems.pivot_tgt),
        ("test", &data.test),
    ]
    .into_iter()
    .map(|(k, c)| (k.to_owned(), stats(c)))
    .chain(std::iter::once((
        "pivot-mono".to_owned(),
        CorpusStats {
            n_pairs: data.systems.pivot_mono.len(),
            ..CorpusStats::default()
        },
    )))
    .collect();
    if let Some(dir) = out_dir {
        write_data(&data, &dir.join("data"), &mut manifest)?;
    }
    clock.lap("gen-data");

    let sources: Vec<Sentence> = data.test.sources().cloned().collect();
    let refs: Vec<Sentence> = data.test.targets().cloned().collect();
    let mut ctx = BuildContext::new(cfg.training.clone(), cfg.cascade(), cfg.triangulation_floor);
    let mut results = BTreeMap::new();
    for system in systems {
        let name = system.name();
        let translator = system.build(&data.systems, &mut ctx)?;
        clock.lap(&format!("train:{name}"));
        let hyps = translate_parallel(translator.as_ref(), &sources);
        if let Some(dir) = out_dir {
            let path = dir.join("hyp").join(format!("{name}.{}", cfg.tgt_lang));
            io::write_lines(&path, hyps.iter().map(Sentence::text))?;
            manifest.add(path, "decode");
        }
        let report = bleu_with(&hyps, &refs, cfg.bleu_mode, cfg.bleu_smooth)?;
        log::info!("{name}: {report}");
        results.insert(name.to_owned(), report);
        clock.lap(&format!("decode:{name}"));
    }

    let mut pivot_leg = BTreeMap::new();
    let first_legs: Vec<_> = ctx
        .models()
        .filter(|(_, m)| m.src_lang == cfg.src_lang && m.tgt_lang == cfg.pivot_lang)
        .collect();
    for (key, model) in first_legs {
        let hyps = translate_parallel(model, &sources);
        let report = bleu_with(&hyps, &data.test_pivot, cfg.bleu_mode, cfg.bleu_smooth)?;
        log::info!("pivot leg {key}: {report}");
        pivot_leg.insert(key.to_owned(), report);
    }
    if !pivot_leg.is_empty() {
        clock.lap("score:pivot-leg");
    }

    let report = ExperimentReport {
        config: cfg.clone(),
        corpora,
        training: ctx.training_stats().clone(),
        results,
        pivot_leg,
        timings: clock.timings,
    };
    if let Some(dir) = out_dir {
        let files = [
            ("config.txt", cfg.to_config_string()),
            ("report.txt", report.to_text()),
            ("timings.txt", report.timings_text()),
        ];
        for (name, text) in files {
            let path = dir.join(name);
            io::write_string(&path, &text)?;
            manifest.add(path, "experiment");
        }
        manifest.save(dir)?;
    }
    Ok(report)
}

/// Equal corpus sizes and identical source and pivot lexicons: nothing for
/// the pivot to exploit, so pivot and direct systems should score alike.
pub fn control_config(base: &PipelineConfig) -> PipelineConfig {
    let size = base.src_pivot_size;
    PipelineConfig {
        direct_size: size,
        pivot_tgt_size: size,
        lexical_overlap: 1.0,
        ..base.clone()
    }
}
