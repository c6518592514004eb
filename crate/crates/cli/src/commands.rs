use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use pivotmt_core::config::PipelineConfig;
use pivotmt_core::corpus::{
    clean, concat, load_stem, split, stats, write_stem, Lang, MonolingualCorpus, ParallelCorpus,
    Sentence,
};
use pivotmt_core::decoder::{format_nbest, train_lm_weighted, NGramLm, TranslationModel};
use pivotmt_core::eval::{bleu_with, BleuMode};
use pivotmt_core::experiment::{
    control_config, prepare_data, run_experiment, translate_parallel, write_data, Manifest,
};
use pivotmt_core::io;
use pivotmt_core::pivot::{
    backtranslate, format_trace, synthesize_source, synthesize_target, transfer_translate,
    CascadeConfig, Registry,
};
use pivotmt_core::seed::sub_seed;
use pivotmt_core::subword::{learn_joint_bpe, BpeModel, TokenSequence};
use pivotmt_core::tm::{
    extract_phrases, prune, train_model1, triangulate, viterbi_align, AlignmentMatrix, PhraseTable,
};

use crate::{Command, LangPair};

/// Defaults, then the config file, then `--set` overrides, then the
/// dedicated global flags.
pub fn load_config(
    file: Option<&Path>,
    overrides: &[String],
    seed: Option<u64>,
    run_dir: Option<&Path>,
) -> Result<PipelineConfig> {
    let mut cfg = PipelineConfig::default();
    if let Some(path) = file {
        cfg.apply_text(&io::read_string(path)?, &path.display().to_string())?;
    }
    for kv in overrides {
        let (key, value) = kv
            .split_once('=')
            .with_context(|| format!("--set expects KEY=VALUE, got `{kv}`"))?;
        cfg.set(key.trim(), value.trim())?;
    }
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    if let Some(dir) = run_dir {
        cfg.run_dir = dir.to_path_buf();
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Default output locations and the manifest of one invocation.
struct Run {
    cfg: PipelineConfig,
    stage: &'static str,
    written: Vec<PathBuf>,
}

impl Run {
    fn output(&self, given: Option<PathBuf>, default: &str) -> PathBuf {
        given.unwrap_or_else(|| self.cfg.run_dir.join(default))
    }

    fn wrote(&mut self, path: PathBuf) {
        log::info!("{}: wrote {}", self.stage, path.display());
        self.written.push(path);
    }

    fn langs(&self, given: &LangPair, default: (&Lang, &Lang)) -> (Lang, Lang) {
        let pick = |g: &Option<String>, d: &Lang| g.as_deref().map_or_else(|| d.clone(), Lang::new);
        (pick(&given.src_lang, default.0), pick(&given.tgt_lang, default.1))
    }

    fn src_tgt(&self, given: &LangPair) -> (Lang, Lang) {
        self.langs(given, (&self.cfg.src_lang, &self.cfg.tgt_lang))
    }

    /// Adds this invocation's outputs to `<run_dir>/manifest.txt`.
    fn finish(self) -> Result<()> {
        if self.written.is_empty() {
            return Ok(());
        }
        let root = &self.cfg.run_dir;
        let mut manifest = Manifest::load(root)?;
        for path in self.written {
            manifest.add(path, self.stage);
        }
        manifest.save(root)?;
        Ok(())
    }
}

fn load_corpus(stem: &Path, langs: (Lang, Lang)) -> Result<ParallelCorpus> {
    let corpus = load_stem(stem, langs.0, langs.1)?;
    log::info!(
        "loaded {} pairs ({}-{}) from {}",
        corpus.len(),
        corpus.src_lang,
        corpus.tgt_lang,
        stem.display()
    );
    Ok(corpus)
}

fn load_text(path: &Path, lang: Lang) -> Result<Vec<Sentence>> {
    Ok(MonolingualCorpus::load(path, lang)?.sentences)
}

fn load_model(dir: &Path) -> Result<TranslationModel> {
    let model = TranslationModel::load(dir)?;
    log::info!(
        "loaded {}-{} model from {} ({} phrase pairs)",
        model.src_lang,
        model.tgt_lang,
        dir.display(),
        model.phrase_table.len()
    );
    Ok(model)
}

fn file_lang(path: &Path) -> Lang {
    Lang::new(path.extension().and_then(|e| e.to_str()).unwrap_or("txt"))
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .map_or_else(|| "output".into(), |n| n.to_string_lossy().into_owned())
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut os = path.as_os_str().to_owned();
    os.push(suffix);
    PathBuf::from(os)
}

/// Runs `f` over `items` on every core, keeping input order.
fn par_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get());
    let chunk = items.len().div_ceil(threads).max(1);
    let f = &f;
    std::thread::scope(|scope| {
        let handles: Vec<_> = items
            .chunks(chunk)
            .map(|part| scope.spawn(move || part.iter().map(f).collect::<Vec<_>>()))
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("worker thread panicked"))
            .collect()
    })
}

pub fn run(command: Command, cfg: PipelineConfig) -> Result<()> {
    let stage = stage_name(&command);
    log::info!("{stage}: start (seed {})", cfg.seed);
    let mut run = Run {
        cfg,
        stage,
        written: Vec::new(),
    };
    execute(command, &mut run)?;
    log::info!("{stage}: done");
    run.finish()
}

fn stage_name(command: &Command) -> &'static str {
    match command {
        Command::Clean { .. } => "clean",
        Command::Split { .. } => "split",
        Command::Stats { .. } => "stats",
        Command::GenData { .. } => "gen-data",
        Command::BpeLearn { .. } => "bpe-learn",
        Command::BpeApply { .. } => "bpe-apply",
        Command::Align { .. } => "align",
        Command::Extract { .. } => "extract",
        Command::Triangulate { .. } => "triangulate",
        Command::Prune { .. } => "prune",
        Command::LmTrain { .. } => "lm-train",
        Command::Train { .. } => "train",
        Command::Decode { .. } => "decode",
        Command::Transfer { .. } => "transfer",
        Command::SynthSrc { .. } => "synth-src",
        Command::SynthTgt { .. } => "synth-tgt",
        Command::Backtranslate { .. } => "backtranslate",
        Command::Bleu { .. } => "bleu",
        Command::Experiment { .. } => "experiment",
    }
}

fn execute(command: Command, run: &mut Run) -> Result<()> {
    match command {
        Command::Clean {
            input,
            output,
            langs,
        } => {
            let corpus = load_corpus(&input, run.src_tgt(&langs))?;
            let (cleaned, report) = clean(&corpus, &run.cfg.cleaning);
            log::info!(
                "clean: kept {} of {} pairs",
                report.kept,
                report.kept + report.total_dropped()
            );
            println!("kept: {}", report.kept);
            for (reason, n) in &report.dropped {
                println!("dropped.{reason}: {n}");
            }
            let out = run.output(output, &format!("clean/{}", file_name(&input)));
            for path in write_stem(&cleaned, &out)? {
                run.wrote(path);
            }
        }

        Command::Split {
            input,
            output_dir,
            langs,
        } => {
            let corpus = load_corpus(&input, run.src_tgt(&langs))?;
            let parts = split(&corpus, run.cfg.split, sub_seed(run.cfg.seed, "split"))?;
            let dir = run.output(output_dir, "split");
            for (name, part) in [
                ("train", &parts.train),
                ("valid", &parts.valid),
                ("test", &parts.test),
            ] {
                log::info!("split: {name} has {} pairs", part.len());
                for path in write_stem(part, &dir.join(name))? {
                    run.wrote(path);
                }
            }
        }

        Command::Stats { input, langs, json } => {
            let st = stats(&load_corpus(&input, run.src_tgt(&langs))?);
            if json {
                println!("{}", st.to_json_line());
            } else {
                print!("{}", st.to_report());
            }
        }

        Command::GenData { output_dir } => {
            let data = prepare_data(&run.cfg)?;
            let dir = run.output(output_dir, "data");
            let mut manifest = Manifest::default();
            write_data(&data, &dir, &mut manifest)?;
            for (path, _) in manifest.entries() {
                run.wrote(path.clone());
            }
        }

        Command::BpeLearn {
            input,
            output,
            merges,
        } => {
            let corpora = input
                .iter()
                .map(|p| MonolingualCorpus::load(p, file_lang(p)))
                .collect::<pivotmt_core::Result<Vec<_>>>()?;
            let refs: Vec<&MonolingualCorpus> = corpora.iter().collect();
            let merges = merges.unwrap_or(run.cfg.training.num_merges);
            let model = learn_joint_bpe(&refs, merges)?;
            log::info!("bpe-learn: {} merges learned (asked for {merges})", model.merges().len());
            let out = run.output(output, "bpe.model");
            model.save(&out)?;
            run.wrote(out);
        }

        Command::BpeApply {
            model,
            input,
            output,
            decode,
        } => {
            let bpe = BpeModel::load(&model)?;
            let lines = io::read_lines(&input)?;
            let converted: Vec<String> = lines
                .iter()
                .map(|line| {
                    if decode {
                        let symbols = line.split_whitespace().map(str::to_owned).collect();
                        bpe.decode(&TokenSequence::new(symbols)).text().to_owned()
                    } else {
                        bpe.encode(&Sentence::new(line.as_str())).to_sentence().text().to_owned()
                    }
                })
                .collect();
            let suffix = if decode { "detok" } else { "bpe" };
            let out = run.output(output, &format!("{}.{suffix}", file_name(&input)));
            io::write_lines(&out, &converted)?;
            run.wrote(out);
        }

        Command::Align {
            input,
            output,
            langs,
            iterations,
        } => {
            let corpus = load_corpus(&input, run.src_tgt(&langs))?;
            let iterations = iterations.unwrap_or(run.cfg.training.em_iterations);
            let model1 = train_model1(&corpus, iterations)?;
            let trace = &model1.log_likelihood;
            log::info!(
                "align: {iterations} EM iterations, log-likelihood {:.4} -> {:.4}",
                trace[0],
                trace[trace.len() - 1]
            );
            let links: Vec<String> = corpus
                .pairs
                .iter()
                .map(|pair| viterbi_align(&model1.table, pair).to_string())
                .collect();
            let out = run.output(output, "align.txt");
            io::write_lines(&out, &links)?;
            run.wrote(out);
        }

        Command::Extract {
            input,
            alignments,
            output,
            langs,
            max_phrase_len,
        } => {
            let corpus = load_corpus(&input, run.src_tgt(&langs))?;
            let links = io::read_lines(&alignments)?
                .iter()
                .enumerate()
                .map(|(i, l)| {
                    l.parse::<AlignmentMatrix>()
                        .with_context(|| format!("{} line {}", alignments.display(), i + 1))
                })
                .collect::<Result<Vec<_>>>()?;
            let max_len = max_phrase_len.unwrap_or(run.cfg.training.max_phrase_len);
            let table = extract_phrases(&corpus, &links, max_len)?;
            log::info!(
                "extract: {} phrase pairs over {} source phrases",
                table.len(),
                table.num_sources()
            );
            let out = run.output(output, "phrases.txt");
            table.save(&out)?;
            run.wrote(out);
        }

        Command::Triangulate {
            src_pivot,
            pivot_tgt,
            output,
            floor,
        } => {
            let sp = PhraseTable::load(&src_pivot)?;
            let pt = PhraseTable::load(&pivot_tgt)?;
            let table = triangulate(&sp, &pt, floor.unwrap_or(run.cfg.triangulation_floor));
            log::info!(
                "triangulate: {} x {} entries -> {}",
                sp.len(),
                pt.len(),
                table.len()
            );
            let out = run.output(output, "triangulated.txt");
            table.save(&out)?;
            run.wrote(out);
        }

        Command::Prune {
            input,
            output,
            top_k,
            floor,
        } => {
            if top_k == Some(0) {
                bail!("--top-k must be at least 1");
            }
            let table = PhraseTable::load(&input)?;
            let t = &run.cfg.training;
            let pruned = prune(&table, top_k.unwrap_or(t.top_k), floor.unwrap_or(t.prune_floor));
            log::info!("prune: {} -> {} entries", table.len(), pruned.len());
            let out = run.output(output, "pruned.txt");
            pruned.save(&out)?;
            run.wrote(out);
        }

        Command::LmTrain {
            input,
            output,
            order,
        } => {
            let mono = MonolingualCorpus::load(&input, file_lang(&input))?;
            let order = order.unwrap_or(run.cfg.training.lm_order);
            if order == 0 {
                bail!("--order must be at least 1");
            }
            let lm = train_lm_weighted(&mono, order, vec![run.cfg.training.lm_weight; order - 1])?;
            log::info!("lm-train: order {order}, {} word types", lm.vocab_size());
            let out = run.output(output, "lm.txt");
            lm.save(&out)?;
            run.wrote(out);
        }

        Command::Train {
            input,
            output,
            langs,
        } => {
            let corpus = load_corpus(&input, run.src_tgt(&langs))?;
            let model = TranslationModel::train(&corpus, &run.cfg.training)?;
            log::info!("train: {} phrase pairs", model.phrase_table.len());
            let default = format!("model-{}-{}", corpus.src_lang, corpus.tgt_lang);
            let out = run.output(output, &default);
            model.save(&out)?;
            run.wrote(out);
        }

        Command::Decode {
            model,
            input,
            output,
            nbest,
            beam,
        } => {
            let mut model = load_model(&model)?;
            if let Some(beam) = beam {
                model.beam = beam.max(1);
            }
            let sources = load_text(&input, model.src_lang.clone())?;
            let out = run.output(output, &format!("{}.{}", file_name(&input), model.tgt_lang));
            match nbest {
                Some(k) => {
                    let lists = par_map(&sources, |s| model.translate_nbest(s, k.max(1)));
                    let best: Vec<String> = lists
                        .iter()
                        .map(|l| l.first().map(|t| t.text.text().to_owned()).unwrap_or_default())
                        .collect();
                    let listing: String = lists
                        .iter()
                        .enumerate()
                        .map(|(i, l)| format_nbest(i, l))
                        .collect();
                    io::write_lines(&out, &best)?;
                    let nbest_path = with_suffix(&out, ".nbest");
                    io::write_string(&nbest_path, &listing)?;
                    run.wrote(nbest_path);
                }
                None => {
                    let hyps = translate_parallel(&model, &sources);
                    io::write_lines(&out, hyps.iter().map(Sentence::text))?;
                }
            }
            log::info!("decode: translated {} sentences", sources.len());
            run.wrote(out);
        }

        Command::Transfer {
            src_pivot,
            pivot_tgt,
            input,
            output,
            n,
            m,
            rescore_lm,
            trace,
        } => {
            let s2p = load_model(&src_pivot)?;
            let p2t = load_model(&pivot_tgt)?;
            if s2p.tgt_lang != p2t.src_lang {
                bail!(
                    "models do not meet at a pivot: {}-{} then {}-{}",
                    s2p.src_lang,
                    s2p.tgt_lang,
                    p2t.src_lang,
                    p2t.tgt_lang
                );
            }
            let cascade = CascadeConfig {
                rescore_lm: rescore_lm.as_deref().map(NGramLm::load).transpose()?,
                ..run.cfg.cascade()
            };
            let cascade = CascadeConfig {
                n: n.unwrap_or(cascade.n),
                m: m.unwrap_or(cascade.m),
                ..cascade
            };
            cascade.validate()?;
            let sources = load_text(&input, s2p.src_lang.clone())?;
            let results = par_map(&sources, |s| transfer_translate(&s2p, &p2t, s, &cascade));
            log::info!(
                "transfer: {} sentences, n={} m={}",
                sources.len(),
                cascade.n,
                cascade.m
            );
            let out = run.output(output, &format!("{}.{}", file_name(&input), p2t.tgt_lang));
            io::write_lines(&out, results.iter().map(|r| r.best.text()))?;
            if trace {
                let text: String = results
                    .iter()
                    .enumerate()
                    .map(|(i, r)| format_trace(i, r))
                    .collect();
                let trace_path = with_suffix(&out, ".trace");
                io::write_string(&trace_path, &text)?;
                run.wrote(trace_path);
            }
            run.wrote(out);
        }

        Command::SynthSrc {
            model,
            input,
            output,
            langs,
        } => {
            let model = load_model(&model)?;
            let langs = run.langs(&langs, (&run.cfg.pivot_lang, &run.cfg.tgt_lang));
            let corpus = load_corpus(&input, langs)?;
            let synthetic = synthesize_source(&model, &corpus)?;
            log::info!("synth-src: {} synthetic pairs", synthetic.len());
            let out = run.output(output, "synth-src");
            for path in write_stem(&synthetic, &out)? {
                run.wrote(path);
            }
        }

        Command::SynthTgt {
            model,
            input,
            output,
            langs,
        } => {
            let model = load_model(&model)?;
            let langs = run.langs(&langs, (&run.cfg.src_lang, &run.cfg.pivot_lang));
            let corpus = load_corpus(&input, langs)?;
            let synthetic = synthesize_target(&model, &corpus)?;
            log::info!("synth-tgt: {} synthetic pairs", synthetic.len());
            let out = run.output(output, "synth-tgt");
            for path in write_stem(&synthetic, &out)? {
                run.wrote(path);
            }
        }

        Command::Backtranslate {
            model,
            input,
            output,
            real,
        } => {
            let model = load_model(&model)?;
            let mono = MonolingualCorpus::load(&input, model.src_lang.clone())?;
            let synthetic = backtranslate(&model, &mono)?;
            log::info!("backtranslate: {} synthetic pairs", synthetic.len());
            let out = run.output(output, "backtranslated");
            for path in write_stem(&synthetic, &out)? {
                run.wrote(path);
            }
            if let Some(real) = real {
                let langs = (synthetic.src_lang.clone(), synthetic.tgt_lang.clone());
                let real = load_corpus(&real, langs)?;
                let combined = concat(&[&real, &synthetic])?;
                print!("{}", stats(&combined).to_report());
                for path in write_stem(&combined, &with_suffix(&out, "-augmented"))? {
                    run.wrote(path);
                }
            }
        }

        Command::Bleu {
            hyp,
            reference,
            mode,
            smooth,
        } => {
            let mode: BleuMode = match mode {
                Some(m) => m.parse()?,
                None => run.cfg.bleu_mode,
            };
            let lang = Lang::new("txt");
            let hyps = load_text(&hyp, lang.clone())?;
            let refs = load_text(&reference, lang)?;
            let report = bleu_with(&hyps, &refs, mode, smooth || run.cfg.bleu_smooth)?;
            log::info!("bleu: {report}");
            println!("{:.1}", report.score);
            println!("{}", report.machine_line());
        }

        Command::Experiment {
            control,
            systems,
            list_systems,
        } => {
            let registry = Registry::builtin();
            if list_systems {
                for name in registry.names() {
                    println!("{name}\t{}", registry.get(name)?.description());
                }
                return Ok(());
            }
            let mut cfg = if control {
                control_config(&run.cfg)
            } else {
                run.cfg.clone()
            };
            if let Some(systems) = systems {
                cfg.systems = systems;
            }
            let dir = cfg.run_dir.clone();
            let report = run_experiment(&cfg, &registry, Some(&dir))?;
            print!("{}", report.to_text());
            // run_experiment wrote the full manifest itself.
            log::info!("experiment: report in {}", dir.join("report.txt").display());
        }
    }
    Ok(())
}
