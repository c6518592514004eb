//! Pipeline configuration: a plain-text file of `key = value` lines.
//!
//! Every key has a default. Blank lines and lines starting with `#` are
//! ignored, unknown keys are rejected, and a later assignment overrides an
//! earlier one, which is how command-line flags are layered over a file.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::corpus::{CleaningConfig, Lang, SplitRatios};
use crate::decoder::{DecoderWeights, TrainingConfig};
use crate::error::{Error, Result};
use crate::eval::BleuMode;
use crate::io;
use crate::pivot::CascadeConfig;
use crate::tm::DEFAULT_TRIANGULATION_FLOOR;

/// Systems the experiment runs when the config does not name any.
pub const DEFAULT_SYSTEMS: [&str; 4] = ["direct", "transfer", "transfer-nbest", "transfer-bt"];

/// Size of the monolingual pivot corpus when `mono_size = auto`: the
/// source-pivot size scaled by 300/284, the ratio of backtranslated to real
/// pairs in the reference setup.
pub fn auto_mono_size(src_pivot_size: usize) -> usize {
    (src_pivot_size as f64 * 300.0 / 284.0).round() as usize
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub seed: u64,
    pub run_dir: PathBuf,

    pub src_lang: Lang,
    pub pivot_lang: Lang,
    pub tgt_lang: Lang,
    pub vocab_size: usize,
    pub lexical_overlap: f64,
    pub direct_size: usize,
    pub src_pivot_size: usize,
    pub pivot_tgt_size: usize,
    /// `None` means [`auto_mono_size`].
    pub mono_size: Option<usize>,
    pub test_size: usize,

    pub cleaning: CleaningConfig,
    pub split: SplitRatios,

    pub training: TrainingConfig,
    pub triangulation_floor: f64,

    pub cascade_n: usize,
    pub cascade_m: usize,
    pub rescore_weight: f64,
    pub nbest: usize,

    pub bleu_mode: BleuMode,
    pub bleu_smooth: bool,
    pub systems: Vec<String>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 7,
            run_dir: PathBuf::from("run"),
            src_lang: Lang::new("ne"),
            pivot_lang: Lang::new("hi"),
            tgt_lang: Lang::new("en"),
            vocab_size: 300,
            lexical_overlap: 0.7,
            direct_size: 500,
            src_pivot_size: 5000,
            pivot_tgt_size: 20000,
            mono_size: None,
            test_size: 1000,
            cleaning: CleaningConfig::default(),
            split: SplitRatios::new(0.8, 0.1, 0.1),
            training: TrainingConfig::default(),
            triangulation_floor: DEFAULT_TRIANGULATION_FLOOR,
            cascade_n: 4,
            cascade_m: 4,
            rescore_weight: 0.0,
            nbest: 10,
            bleu_mode: BleuMode::Tokenized,
            bleu_smooth: false,
            systems: DEFAULT_SYSTEMS.iter().map(|s| s.to_string()).collect(),
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("invalid value `{value}` for `{key}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Config(format!("invalid boolean `{value}` for `{key}`"))),
    }
}

impl PipelineConfig {
    /// Every key in file order, with its current value.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let t = &self.training;
        let w = &t.weights;
        vec![
            ("seed", self.seed.to_string()),
            ("run_dir", self.run_dir.display().to_string()),
            ("src_lang", self.src_lang.to_string()),
            ("pivot_lang", self.pivot_lang.to_string()),
            ("tgt_lang", self.tgt_lang.to_string()),
            ("vocab_size", self.vocab_size.to_string()),
            ("lexical_overlap", self.lexical_overlap.to_string()),
            ("direct_size", self.direct_size.to_string()),
            ("src_pivot_size", self.src_pivot_size.to_string()),
            ("pivot_tgt_size", self.pivot_tgt_size.to_string()),
            ("mono_size", self.mono_size.map_or("auto".into(), |n| n.to_string())),
            ("test_size", self.test_size.to_string()),
            ("clean_min_tokens", self.cleaning.min_tokens.to_string()),
            ("clean_max_tokens", self.cleaning.max_tokens.to_string()),
            ("clean_max_len_ratio", self.cleaning.max_len_ratio.to_string()),
            ("clean_drop_copies", self.cleaning.drop_copies.to_string()),
            ("split_train", self.split.train.to_string()),
            ("split_valid", self.split.valid.to_string()),
            ("split_test", self.split.test.to_string()),
            ("num_merges", t.num_merges.to_string()),
            ("em_iterations", t.em_iterations.to_string()),
            ("max_phrase_len", t.max_phrase_len.to_string()),
            ("top_k", t.top_k.to_string()),
            ("prune_floor", t.prune_floor.to_string()),
            ("triangulation_floor", self.triangulation_floor.to_string()),
            ("lm_order", t.lm_order.to_string()),
            ("lm_weight", t.lm_weight.to_string()),
            ("weight_tm", w.tm.to_string()),
            ("weight_lm", w.lm.to_string()),
            ("word_penalty", w.word_penalty.to_string()),
            ("oov_penalty", w.oov_penalty.to_string()),
            ("beam", t.beam.to_string()),
            ("nbest", self.nbest.to_string()),
            ("cascade_n", self.cascade_n.to_string()),
            ("cascade_m", self.cascade_m.to_string()),
            ("rescore_weight", self.rescore_weight.to_string()),
            ("bleu_mode", self.bleu_mode.to_string()),
            ("bleu_smooth", self.bleu_smooth.to_string()),
            ("systems", self.systems.join(",")),
        ]
    }

    pub fn keys() -> Vec<&'static str> {
        PipelineConfig::default().entries().into_iter().map(|(k, _)| k).collect()
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        let t = &mut self.training;
        match key {
            "seed" => self.seed = parse(key, value)?,
            "run_dir" => self.run_dir = PathBuf::from(value),
            "src_lang" => self.src_lang = Lang::new(value),
            "pivot_lang" => self.pivot_lang = Lang::new(value),
            "tgt_lang" => self.tgt_lang = Lang::new(value),
            "vocab_size" => self.vocab_size = parse(key, value)?,
            "lexical_overlap" => self.lexical_overlap = parse(key, value)?,
            "direct_size" => self.direct_size = parse(key, value)?,
            "src_pivot_size" => self.src_pivot_size = parse(key, value)?,
            "pivot_tgt_size" => self.pivot_tgt_size = parse(key, value)?,
            "mono_size" => {
                self.mono_size = match value {
                    "auto" => None,
                    v => Some(parse(key, v)?),
                }
            }
            "test_size" => self.test_size = parse(key, value)?,
            "clean_min_tokens" => self.cleaning.min_tokens = parse(key, value)?,
            "clean_max_tokens" => self.cleaning.max_tokens = parse(key, value)?,
            "clean_max_len_ratio" => self.cleaning.max_len_ratio = parse(key, value)?,
            "clean_drop_copies" => self.cleaning.drop_copies = parse_bool(key, value)?,
            "split_train" => self.split.train = parse(key, value)?,
            "split_valid" => self.split.valid = parse(key, value)?,
            "split_test" => self.split.test = parse(key, value)?,
            "num_merges" => t.num_merges = parse(key, value)?,
            "em_iterations" => t.em_iterations = parse(key, value)?,
            "max_phrase_len" => t.max_phrase_len = parse(key, value)?,
            "top_k" => t.top_k = parse(key, value)?,
            "prune_floor" => t.prune_floor = parse(key, value)?,
            "triangulation_floor" => self.triangulation_floor = parse(key, value)?,
            "lm_order" => t.lm_order = parse(key, value)?,
            "lm_weight" => t.lm_weight = parse(key, value)?,
            "weight_tm" => t.weights.tm = parse(key, value)?,
            "weight_lm" => t.weights.lm = parse(key, value)?,
            "word_penalty" => t.weights.word_penalty = parse(key, value)?,
            "oov_penalty" => t.weights.oov_penalty = parse(key, value)?,
            "beam" => t.beam = parse(key, value)?,
            "nbest" => self.nbest = parse(key, value)?,
            "cascade_n" => self.cascade_n = parse(key, value)?,
            "cascade_m" => self.cascade_m = parse(key, value)?,
            "rescore_weight" => self.rescore_weight = parse(key, value)?,
            "bleu_mode" => self.bleu_mode = value.parse()?,
            "bleu_smooth" => self.bleu_smooth = parse_bool(key, value)?,
            "systems" => {
                self.systems = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(str::to_owned)
                    .collect()
            }
            _ => return Err(Error::Config(format!("unknown config key `{key}`"))),
        }
        Ok(())
    }

    /// Applies the assignments of a config text on top of `self`.
    pub fn apply_text(&mut self, text: &str, origin: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(origin, i + 1, "expected `key = value`"))?;
            self.set(key.trim(), value)
                .map_err(|e| Error::parse(origin, i + 1, e.to_string()))?;
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = PipelineConfig::default();
        cfg.apply_text(text, "config")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut cfg = PipelineConfig::default();
        cfg.apply_text(&io::read_string(path)?, &path.display().to_string())?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// The full configuration as a config file. Parsing it gives back `self`.
    pub fn to_config_string(&self) -> String {
        self.entries()
            .into_iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }

    pub fn mono_size(&self) -> usize {
        self.mono_size.unwrap_or_else(|| auto_mono_size(self.src_pivot_size))
    }

    pub fn cascade(&self) -> CascadeConfig {
        CascadeConfig {
            rescore_weight: self.rescore_weight,
            ..CascadeConfig::new(self.cascade_n, self.cascade_m)
        }
    }

    pub fn weights(&self) -> DecoderWeights {
        self.training.weights
    }

    pub fn validate(&self) -> Result<()> {
        self.cleaning.validate()?;
        self.split.validate()?;
        self.training.weights.validate()?;
        self.cascade().validate()?;
        let t = &self.training;
        let positive = [
            ("em_iterations", t.em_iterations),
            ("max_phrase_len", t.max_phrase_len),
            ("top_k", t.top_k),
            ("lm_order", t.lm_order),
            ("beam", t.beam),
            ("nbest", self.nbest),
            ("test_size", self.test_size),
        ];
        if let Some((k, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Config(format!("`{k}` must be at least 1")));
        }
        if !(0.0..=1.0).contains(&self.lexical_overlap) {
            return Err(Error::Config(format!(
                "lexical_overlap must lie in [0, 1], got {}",
                self.lexical_overlap
            )));
        }
        if !(0.0..1.0).contains(&t.lm_weight) {
            return Err(Error::Config(format!("lm_weight must lie in [0, 1), got {}", t.lm_weight)));
        }
        if self.systems.is_empty() {
            return Err(Error::Config("`systems` names no system".into()));
        }
        Ok(())
    }
}
