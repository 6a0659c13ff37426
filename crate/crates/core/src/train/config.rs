//! Training configuration and its line-oriented `key = value` file format.
//!
//! Blank lines and lines starting with `#` are ignored. Unknown keys are
//! errors. Optional paths accept `none`.

use std::fmt::Write as _;
use std::path::PathBuf;

use super::TrainError;
use crate::align::{AlignerConfig, CoveredCells, FilterMode};
use crate::corpus::{Reordering, SyntheticSpec};
use crate::neural::{Precision, QueryPolicy};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    // Encoder shape; the vocabulary size comes from the corpus.
    pub layers: usize,
    pub hidden: usize,
    pub heads: usize,
    pub ffn: usize,
    pub max_len: usize,
    pub dropout: f64,
    pub init_std: f64,
    pub precision: Precision,

    // Optimization.
    pub steps: u64,
    pub batch_size: usize,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    pub warmup_steps: u64,
    pub clip_norm: f64,
    pub weight_decay: f64,
    pub seed: u64,

    // Cold start: load `init_checkpoint` if set, otherwise run
    // `cold_start_steps` MLM+TLM steps from random init.
    pub init_checkpoint: Option<PathBuf>,
    pub cold_start_steps: u64,
    /// Continue an interrupted run from its checkpoint.
    pub resume: Option<PathBuf>,

    // Self-labeling.
    pub aligner: AlignerConfig,
    /// Layer read by the pointer network; `None` is the top layer.
    pub dwa_layer: Option<usize>,

    // Objective.
    pub mask_rate: f64,
    pub mlm_weight: f64,
    pub tlm_weight: f64,
    pub dwa_weight: f64,
    pub disable_dwa: bool,
    pub disable_tlm: bool,
    pub query_policy: QueryPolicy,

    // Data: a bitext file (with optional 1-based gold) or a synthetic corpus.
    pub bitext: Option<PathBuf>,
    pub gold: Option<PathBuf>,
    pub synthetic: SyntheticSpec,
    pub heldout_pairs: usize,

    // Outputs.
    pub checkpoint: Option<PathBuf>,
    pub log: Option<PathBuf>,
    pub checkpoint_every: u64,
    pub eval_every: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            layers: 2,
            hidden: 64,
            heads: 4,
            ffn: 256,
            max_len: 128,
            dropout: 0.0,
            init_std: 0.1,
            precision: Precision::F32,
            steps: 1000,
            batch_size: 48,
            lr: 6e-3,
            beta1: 0.9,
            beta2: 0.98,
            adam_eps: 1e-6,
            warmup_steps: 100,
            clip_norm: 1.0,
            weight_decay: 0.01,
            seed: 1,
            init_checkpoint: None,
            cold_start_steps: 500,
            resume: None,
            aligner: AlignerConfig::default(),
            dwa_layer: None,
            mask_rate: 0.15,
            mlm_weight: 1.0,
            tlm_weight: 1.0,
            dwa_weight: 1.0,
            disable_dwa: false,
            disable_tlm: false,
            query_policy: QueryPolicy::Masked,
            bitext: None,
            gold: None,
            synthetic: SyntheticSpec::default(),
            heldout_pairs: 200,
            checkpoint: None,
            log: None,
            checkpoint_every: 0,
            eval_every: 100,
        }
    }
}

fn policy_name(p: QueryPolicy) -> &'static str {
    match p {
        QueryPolicy::Masked => "masked",
        QueryPolicy::Unmasked => "unmasked",
        QueryPolicy::AllAligned => "all-aligned",
        QueryPolicy::None => "none",
    }
}

fn covered_name(c: CoveredCells) -> &'static str {
    match c {
        CoveredCells::Exclude => "exclude",
        CoveredCells::Discount => "discount",
    }
}

fn opt_path(p: &Option<PathBuf>) -> String {
    p.as_ref().map_or_else(|| "none".to_owned(), |p| p.display().to_string())
}

fn opt_layer(l: Option<usize>) -> String {
    l.map_or_else(|| "top".to_owned(), |l| l.to_string())
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |msg: String| Err(TrainError::Config { line: 0, message: msg });
        if !(self.lr > 0.0) {
            return bad(format!("lr must be positive, got {}", self.lr));
        }
        if self.steps > 0 && self.warmup_steps > self.steps {
            return bad(format!("warmup_steps {} exceeds steps {}", self.warmup_steps, self.steps));
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1".into());
        }
        if !(self.mask_rate > 0.0 && self.mask_rate < 1.0) {
            return bad(format!("mask_rate must be in (0, 1), got {}", self.mask_rate));
        }
        self.aligner
            .validate()
            .map_err(|e| TrainError::Config { line: 0, message: e.to_string() })?;
        Ok(())
    }

    /// Renders every key, in the order [`TrainConfig::parse`] accepts them.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("layers", self.layers.to_string());
        kv("hidden", self.hidden.to_string());
        kv("heads", self.heads.to_string());
        kv("ffn", self.ffn.to_string());
        kv("max_len", self.max_len.to_string());
        kv("dropout", self.dropout.to_string());
        kv("init_std", self.init_std.to_string());
        kv("precision", match self.precision {
            Precision::F32 => "f32".into(),
            Precision::F64 => "f64".into(),
        });
        kv("steps", self.steps.to_string());
        kv("batch_size", self.batch_size.to_string());
        kv("lr", self.lr.to_string());
        kv("beta1", self.beta1.to_string());
        kv("beta2", self.beta2.to_string());
        kv("adam_eps", self.adam_eps.to_string());
        kv("warmup_steps", self.warmup_steps.to_string());
        kv("clip_norm", self.clip_norm.to_string());
        kv("weight_decay", self.weight_decay.to_string());
        kv("seed", self.seed.to_string());
        kv("init_checkpoint", opt_path(&self.init_checkpoint));
        kv("cold_start_steps", self.cold_start_steps.to_string());
        kv("resume", opt_path(&self.resume));
        kv("mu", self.aligner.mu.to_string());
        kv("epsilon", self.aligner.epsilon.to_string());
        kv("sinkhorn_iters", self.aligner.sinkhorn_iters.to_string());
        kv("filter_iters", self.aligner.filter_iters.to_string());
        kv("alpha", self.aligner.alpha.to_string());
        kv("self_label_layer", opt_layer(self.aligner.layer));
        kv("disable_filtering", (self.aligner.filter == FilterMode::Union).to_string());
        kv("covered_cells", covered_name(self.aligner.covered).into());
        kv("dwa_layer", opt_layer(self.dwa_layer));
        kv("mask_rate", self.mask_rate.to_string());
        kv("mlm_weight", self.mlm_weight.to_string());
        kv("tlm_weight", self.tlm_weight.to_string());
        kv("dwa_weight", self.dwa_weight.to_string());
        kv("disable_dwa", self.disable_dwa.to_string());
        kv("disable_tlm", self.disable_tlm.to_string());
        kv("query_policy", policy_name(self.query_policy).into());
        kv("bitext", opt_path(&self.bitext));
        kv("gold", opt_path(&self.gold));
        kv("synth_vocab", self.synthetic.vocab_size.to_string());
        kv("synth_min_len", self.synthetic.min_len.to_string());
        kv("synth_max_len", self.synthetic.max_len.to_string());
        kv("synth_swap_prob", match self.synthetic.reordering {
            Reordering::Identity => "0".into(),
            Reordering::AdjacentSwap { p } => p.to_string(),
        });
        kv("synth_pairs", self.synthetic.pairs.to_string());
        kv("synth_seed", self.synthetic.seed.to_string());
        kv("synth_bijection_seed", self.synthetic.bijection_seed.to_string());
        kv("heldout_pairs", self.heldout_pairs.to_string());
        kv("checkpoint", opt_path(&self.checkpoint));
        kv("log", opt_path(&self.log));
        kv("checkpoint_every", self.checkpoint_every.to_string());
        kv("eval_every", self.eval_every.to_string());
        s
    }

    /// Parses a config file body. Keys not present keep their defaults.
    pub fn parse(text: &str) -> Result<Self, TrainError> {
        let mut cfg = TrainConfig::default();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| TrainError::Config { line: line_no, message };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected `key = value`, got {line:?}")))?;
            let (key, value) = (key.trim(), value.trim());
            cfg.set(key, value).map_err(err)?;
        }
        cfg.validate().map_err(|e| match e {
            TrainError::Config { message, .. } => TrainError::Config { line: 0, message },
            other => other,
        })?;
        Ok(cfg)
    }

    fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, String> {
            v.parse().map_err(|_| format!("bad value {v:?} for {key}"))
        }
        fn path(v: &str) -> Option<PathBuf> {
            (v != "none" && !v.is_empty()).then(|| PathBuf::from(v))
        }
        fn layer(key: &str, v: &str) -> Result<Option<usize>, String> {
            if v == "top" {
                Ok(None)
            } else {
                num(key, v).map(Some)
            }
        }
        fn flag(key: &str, v: &str) -> Result<bool, String> {
            match v {
                "true" | "1" | "yes" => Ok(true),
                "false" | "0" | "no" => Ok(false),
                _ => Err(format!("bad boolean {v:?} for {key}")),
            }
        }
        match key {
            "layers" => self.layers = num(key, value)?,
            "hidden" => self.hidden = num(key, value)?,
            "heads" => self.heads = num(key, value)?,
            "ffn" => self.ffn = num(key, value)?,
            "max_len" => self.max_len = num(key, value)?,
            "dropout" => self.dropout = num(key, value)?,
            "init_std" => self.init_std = num(key, value)?,
            "precision" => {
                self.precision = match value {
                    "f32" => Precision::F32,
                    "f64" => Precision::F64,
                    _ => return Err(format!("precision must be f32 or f64, got {value:?}")),
                }
            }
            "steps" => self.steps = num(key, value)?,
            "batch_size" => self.batch_size = num(key, value)?,
            "lr" => self.lr = num(key, value)?,
            "beta1" => self.beta1 = num(key, value)?,
            "beta2" => self.beta2 = num(key, value)?,
            "adam_eps" => self.adam_eps = num(key, value)?,
            "warmup_steps" => self.warmup_steps = num(key, value)?,
            "clip_norm" => self.clip_norm = num(key, value)?,
            "weight_decay" => self.weight_decay = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "init_checkpoint" => self.init_checkpoint = path(value),
            "cold_start_steps" => self.cold_start_steps = num(key, value)?,
            "resume" => self.resume = path(value),
            "mu" => self.aligner.mu = num(key, value)?,
            "epsilon" => self.aligner.epsilon = num(key, value)?,
            "sinkhorn_iters" => self.aligner.sinkhorn_iters = num(key, value)?,
            "filter_iters" => self.aligner.filter_iters = num(key, value)?,
            "alpha" => self.aligner.alpha = num(key, value)?,
            "self_label_layer" => self.aligner.layer = layer(key, value)?,
            "disable_filtering" => {
                self.aligner.filter = if flag(key, value)? {
                    FilterMode::Union
                } else {
                    FilterMode::Itermax
                }
            }
            "covered_cells" => {
                self.aligner.covered = match value {
                    "exclude" => CoveredCells::Exclude,
                    "discount" => CoveredCells::Discount,
                    _ => return Err(format!("covered_cells must be exclude or discount, got {value:?}")),
                }
            }
            "dwa_layer" => self.dwa_layer = layer(key, value)?,
            "mask_rate" => self.mask_rate = num(key, value)?,
            "mlm_weight" => self.mlm_weight = num(key, value)?,
            "tlm_weight" => self.tlm_weight = num(key, value)?,
            "dwa_weight" => self.dwa_weight = num(key, value)?,
            "disable_dwa" => self.disable_dwa = flag(key, value)?,
            "disable_tlm" => self.disable_tlm = flag(key, value)?,
            "query_policy" => {
                self.query_policy = match value {
                    "masked" => QueryPolicy::Masked,
                    "unmasked" => QueryPolicy::Unmasked,
                    "all-aligned" => QueryPolicy::AllAligned,
                    "none" => QueryPolicy::None,
                    _ => return Err(format!("unknown query_policy {value:?}")),
                }
            }
            "bitext" => self.bitext = path(value),
            "gold" => self.gold = path(value),
            "synth_vocab" => self.synthetic.vocab_size = num(key, value)?,
            "synth_min_len" => self.synthetic.min_len = num(key, value)?,
            "synth_max_len" => self.synthetic.max_len = num(key, value)?,
            "synth_swap_prob" => {
                let p: f64 = num(key, value)?;
                self.synthetic.reordering = if p == 0.0 {
                    Reordering::Identity
                } else {
                    Reordering::AdjacentSwap { p }
                };
            }
            "synth_pairs" => self.synthetic.pairs = num(key, value)?,
            "synth_seed" => self.synthetic.seed = num(key, value)?,
            "synth_bijection_seed" => self.synthetic.bijection_seed = num(key, value)?,
            "heldout_pairs" => self.heldout_pairs = num(key, value)?,
            "checkpoint" => self.checkpoint = path(value),
            "log" => self.log = path(value),
            "checkpoint_every" => self.checkpoint_every = num(key, value)?,
            "eval_every" => self.eval_every = num(key, value)?,
            _ => return Err(format!("unknown key {key:?}")),
        }
        Ok(())
    }
}
