//! Cold start and the alternating label/update loop.

use std::fmt;
use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{clip_global_norm, Adam, AdamConfig, Corpora, LinearSchedule, StepRecord, TrainConfig, TrainError, TrainLog, LOG_HEADER};
use crate::align::{self_label, AlignSet, AlignerConfig};
use crate::corpus::{mask_pair, mask_sequence, MaskingPolicy, SentencePair};
use crate::eval::{AerCounts, EvalReport, GoldAlignment};
use crate::neural::{
    backward, dwa_loss, dwa_queries, encode_train, hidden_states, mlm_loss, multi_link_queries,
    Checkpoint, EncoderConfig, Gradients, HiddenGrads, Input, RngState, Weights,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    /// MLM and TLM only, before any self-labeling.
    ColdStart,
    /// Self-labeling plus MLM, TLM and the pointer loss.
    Em,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::ColdStart => "cold",
            Phase::Em => "em",
        })
    }
}

impl Phase {
    fn stream(self) -> u64 {
        match self {
            Phase::ColdStart => 1,
            Phase::Em => 2,
        }
    }
}

fn encoder_config(cfg: &TrainConfig, vocab_size: usize) -> EncoderConfig {
    EncoderConfig {
        layers: cfg.layers,
        hidden: cfg.hidden,
        heads: cfg.heads,
        ffn: cfg.ffn,
        max_len: cfg.max_len,
        vocab_size,
        precision: cfg.precision,
        dropout: cfg.dropout,
        init_std: cfg.init_std,
    }
}

/// Self-labels one clean pair with the encoder's hidden states at
/// `aligner.layer` (top layer when unset).
pub fn label_pair(
    weights: &Weights,
    pair: &SentencePair,
    aligner: &AlignerConfig,
) -> Result<AlignSet, TrainError> {
    let tokens = pair.concatenated();
    let trace = hidden_states(weights, Input::pair(&tokens, pair.src_len()))?;
    let layer = aligner.layer.unwrap_or(weights.config.layers);
    let hidden = trace.layer(layer)?;
    Ok(self_label(&hidden.row_slices(), pair.src_len(), aligner)?)
}

/// Corpus AER of the current self-labels on held-out pairs, or `None` when
/// there are none.
pub fn heldout_report(
    weights: &Weights,
    heldout: &[(SentencePair, GoldAlignment)],
    aligner: &AlignerConfig,
) -> Result<Option<EvalReport>, TrainError> {
    if heldout.is_empty() {
        return Ok(None);
    }
    let counts = heldout
        .par_iter()
        .map(|(pair, gold)| label_pair(weights, pair, aligner).map(|a| AerCounts::of(&a, gold)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Some(EvalReport::from_counts(counts.into_iter().sum())))
}

struct ExampleOut {
    grads: Gradients,
    mlm: f64,
    tlm: f64,
    dwa: f64,
    labels: usize,
    queries: usize,
    multi_link: usize,
    counts: Option<AerCounts>,
}

/// Owns the parameters, optimizer and RNG of one training phase.
pub struct Trainer<'a> {
    cfg: &'a TrainConfig,
    data: &'a Corpora,
    pub phase: Phase,
    pub weights: Weights,
    pub adam: Adam,
    pub schedule: LinearSchedule,
    rng: ChaCha8Rng,
    pub log: TrainLog,
}

impl<'a> Trainer<'a> {
    /// Fresh optimizer state for `phase`, starting from `weights`.
    pub fn new(
        cfg: &'a TrainConfig,
        data: &'a Corpora,
        weights: Weights,
        phase: Phase,
    ) -> Result<Self, TrainError> {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(phase.stream());
        Self::assemble(cfg, data, weights, phase, None, rng)
    }

    /// Resumes the EM phase from a checkpoint holding optimizer and RNG state.
    pub fn from_checkpoint(
        cfg: &'a TrainConfig,
        data: &'a Corpora,
        checkpoint: Checkpoint,
    ) -> Result<Self, TrainError> {
        let (Some(state), Some(rng)) = (checkpoint.optimizer, checkpoint.rng) else {
            return Err(TrainError::Mismatch(
                "checkpoint carries no optimizer or RNG state to resume from".into(),
            ));
        };
        Self::assemble(cfg, data, checkpoint.weights, Phase::Em, Some(state), rng.restore())
    }

    fn assemble(
        cfg: &'a TrainConfig,
        data: &'a Corpora,
        weights: Weights,
        phase: Phase,
        state: Option<crate::neural::OptimizerState>,
        rng: ChaCha8Rng,
    ) -> Result<Self, TrainError> {
        cfg.validate()?;
        let expected = encoder_config(cfg, data.vocab.len());
        if weights.config != expected {
            return Err(TrainError::Mismatch(format!(
                "encoder {:?} differs from configured {:?}",
                weights.config, expected
            )));
        }
        if data.train.is_empty() {
            return Err(TrainError::Corpus(crate::corpus::CorpusError::EmptyInput));
        }
        let longest = data.longest_pair();
        if longest > cfg.max_len {
            return Err(TrainError::Mismatch(format!(
                "longest pair has {longest} tokens, max_len is {}",
                cfg.max_len
            )));
        }
        for layer in [cfg.aligner.layer, cfg.dwa_layer].into_iter().flatten() {
            if layer > cfg.layers {
                return Err(TrainError::Config {
                    line: 0,
                    message: format!("layer {layer} exceeds the {} encoder layers", cfg.layers),
                });
            }
        }
        let adam_cfg = AdamConfig {
            beta1: cfg.beta1,
            beta2: cfg.beta2,
            eps: cfg.adam_eps,
            weight_decay: cfg.weight_decay,
        };
        let adam = match state {
            Some(state) => {
                if state.m.len() != weights.len() {
                    return Err(TrainError::Mismatch("optimizer state size".into()));
                }
                Adam::from_state(adam_cfg, &weights, state)
            }
            None => Adam::new(adam_cfg, &weights),
        };
        let total = match phase {
            Phase::ColdStart => cfg.cold_start_steps,
            Phase::Em => cfg.steps,
        };
        let schedule = LinearSchedule {
            peak: cfg.lr,
            warmup: cfg.warmup_steps.min(total),
            total,
        };
        Ok(Trainer {
            cfg,
            data,
            phase,
            weights,
            adam,
            schedule,
            rng,
            log: TrainLog::default(),
        })
    }

    /// Steps completed in this phase.
    pub fn completed(&self) -> u64 {
        self.adam.state.step
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            weights: self.weights.clone(),
            rng: Some(RngState::capture(&self.rng)),
            optimizer: Some(self.adam.state.clone()),
            vocab: Some(self.data.vocab.clone()),
        }
    }

    fn masking(&self) -> MaskingPolicy {
        MaskingPolicy::standard(self.cfg.mask_rate, self.data.vocab.len() as u32)
    }

    fn top(&self) -> usize {
        self.cfg.layers
    }

    fn parallel_example(&self, idx: usize, seed: u64, scale: f64) -> Result<ExampleOut, TrainError> {
        let cfg = self.cfg;
        let weights = &self.weights;
        let pair = &self.data.train[idx];
        let (n, m) = (pair.src_len(), pair.tgt_len());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);

        // Labels come from the clean pair before any masking.
        let labels = match self.phase {
            Phase::Em => Some(label_pair(weights, pair, &cfg.aligner)?),
            Phase::ColdStart => None,
        };
        let masked = mask_pair(pair, &self.masking(), &mut rng)?;
        let trace = encode_train(weights, Input::pair(&masked.perturbed, n), &mut rng)?;
        let mut grads = Gradients::zeros_like(weights);
        let mut upstream = HiddenGrads::for_trace(&trace);

        let (mut tlm, mut dwa) = (0.0, 0.0);
        if !cfg.disable_tlm {
            tlm = mlm_loss(weights, &trace, &masked.targets(), cfg.tlm_weight * scale, &mut grads, &mut upstream)?;
        }
        let (mut queries, mut multi_link) = (0, 0);
        if let (Some(labels), false) = (&labels, cfg.disable_dwa) {
            let q = dwa_queries(labels, |p| masked.is_masked(p), n, m, cfg.query_policy, &mut rng)?;
            let layer = cfg.dwa_layer.unwrap_or(self.top());
            dwa = dwa_loss(weights, &trace, layer, &q, cfg.dwa_weight * scale, &mut grads, &mut upstream)?;
            queries = q.len();
            multi_link = multi_link_queries(&q);
        }
        backward(weights, &trace, &upstream, &mut grads)?;

        let gold = self.data.train_gold.get(idx).and_then(Option::as_ref);
        Ok(ExampleOut {
            grads,
            mlm: 0.0,
            tlm,
            dwa,
            labels: labels.as_ref().map_or(0, AlignSet::len),
            queries,
            multi_link,
            counts: labels.as_ref().zip(gold).map(|(a, g)| AerCounts::of(a, g)),
        })
    }

    fn mono_example(&self, idx: usize, seed: u64, scale: f64) -> Result<ExampleOut, TrainError> {
        let weights = &self.weights;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let masked = mask_sequence(&self.data.mono[idx], &self.masking(), &mut rng)?;
        let trace = encode_train(weights, &masked.perturbed, &mut rng)?;
        let mut grads = Gradients::zeros_like(weights);
        let mut upstream = HiddenGrads::for_trace(&trace);
        let mlm = mlm_loss(weights, &trace, &masked.targets(), self.cfg.mlm_weight * scale, &mut grads, &mut upstream)?;
        backward(weights, &trace, &upstream, &mut grads)?;
        Ok(ExampleOut {
            grads,
            mlm,
            tlm: 0.0,
            dwa: 0.0,
            labels: 0,
            queries: 0,
            multi_link: 0,
            counts: None,
        })
    }

    /// One optimizer step: sample the monolingual and parallel batches,
    /// label, compute the summed loss and its gradient, clip, update.
    pub fn step(&mut self) -> Result<StepRecord, TrainError> {
        let start = Instant::now();
        let b = self.cfg.batch_size;
        let scale = 1.0 / b as f64;
        let draw = |len: usize, rng: &mut ChaCha8Rng| -> Vec<(usize, u64)> {
            (0..b).map(|_| (rng.gen_range(0..len), rng.gen::<u64>())).collect()
        };
        let parallel = draw(self.data.train.len(), &mut self.rng);
        let mono = if self.data.mono.is_empty() {
            Vec::new()
        } else {
            draw(self.data.mono.len(), &mut self.rng)
        };

        let this = &*self;
        let par_out = parallel
            .par_iter()
            .map(|&(idx, seed)| this.parallel_example(idx, seed, scale))
            .collect::<Result<Vec<_>, _>>()?;
        let mono_out = mono
            .par_iter()
            .map(|&(idx, seed)| this.mono_example(idx, seed, scale))
            .collect::<Result<Vec<_>, _>>()?;

        let mut grads = Gradients::zeros_like(&self.weights);
        for out in par_out.iter().chain(&mono_out) {
            grads.add_assign(&out.grads);
        }
        let mean = |xs: &[f64]| if xs.is_empty() { 0.0 } else { xs.iter().sum::<f64>() / xs.len() as f64 };
        let tlm: Vec<f64> = par_out.iter().map(|o| o.tlm).collect();
        let dwa: Vec<f64> = par_out.iter().map(|o| o.dwa).collect();
        let mlm: Vec<f64> = mono_out.iter().map(|o| o.mlm).collect();
        let (loss_mlm, loss_tlm, loss_dwa) = (mean(&mlm), mean(&tlm), mean(&dwa));

        let step = self.completed() + 1;
        if !(loss_mlm + loss_tlm + loss_dwa).is_finite() || !grads.norm().is_finite() {
            return Err(TrainError::NonFinite {
                phase: self.phase,
                step,
                dump: self.dump(&parallel, &mono, &tlm, &dwa, &mlm),
            });
        }

        let grad_norm = clip_global_norm(&mut grads, self.cfg.clip_norm);
        let lr = self.schedule.rate(self.completed());
        self.adam.step(&mut self.weights, &grads, lr);

        let counts: Vec<AerCounts> = par_out.iter().filter_map(|o| o.counts).collect();
        let self_label_aer = (!counts.is_empty())
            .then(|| EvalReport::from_counts(counts.into_iter().sum()).aer);
        let heldout_aer = if self.phase == Phase::Em
            && self.cfg.eval_every > 0
            && (step % self.cfg.eval_every == 0 || step == self.schedule.total)
        {
            heldout_report(&self.weights, &self.data.heldout, &self.cfg.aligner)?.map(|r| r.aer)
        } else {
            None
        };
        let multi_link: usize = par_out.iter().map(|o| o.multi_link).sum();
        if multi_link > 0 {
            log::debug!("step {step}: {multi_link} query positions carry several links");
        }
        let record = StepRecord {
            step,
            phase: self.phase,
            lr,
            loss_mlm,
            loss_tlm,
            loss_dwa,
            labels: par_out.iter().map(|o| o.labels).sum(),
            queries: par_out.iter().map(|o| o.queries).sum(),
            multi_link,
            self_label_aer,
            heldout_aer,
            grad_norm,
            wall_ms: start.elapsed().as_millis() as u64,
        };
        self.log.push(record.clone());
        Ok(record)
    }

    fn dump(
        &self,
        parallel: &[(usize, u64)],
        mono: &[(usize, u64)],
        tlm: &[f64],
        dwa: &[f64],
        mlm: &[f64],
    ) -> String {
        let mut s = String::new();
        for (k, &(idx, seed)) in parallel.iter().enumerate() {
            let p = &self.data.train[idx];
            s += &format!(
                "parallel #{idx} seed={seed} tlm={} dwa={} src={:?} tgt={:?}\n",
                tlm[k], dwa[k], p.src, p.tgt
            );
        }
        for (k, &(idx, seed)) in mono.iter().enumerate() {
            s += &format!("mono #{idx} seed={seed} mlm={} tokens={:?}\n", mlm[k], self.data.mono[idx]);
        }
        s
    }
}

/// Initial parameters: loaded from `init_checkpoint`, or random init followed
/// by `cold_start_steps` MLM+TLM steps.
pub fn cold_start(cfg: &TrainConfig, data: &Corpora) -> Result<(Weights, TrainLog), TrainError> {
    if let Some(path) = &cfg.init_checkpoint {
        let ck = Checkpoint::load(path)?;
        let expected = encoder_config(cfg, data.vocab.len());
        if ck.weights.config != expected {
            return Err(TrainError::Mismatch(format!(
                "{}: encoder {:?} differs from configured {:?}",
                path.display(),
                ck.weights.config,
                expected
            )));
        }
        return Ok((ck.weights, TrainLog::default()));
    }
    let mut init_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let weights = Weights::init(encoder_config(cfg, data.vocab.len()), &mut init_rng)?;
    if cfg.cold_start_steps == 0 {
        log::warn!("no cold-start checkpoint or warmup steps; self-labeling starts from random weights");
        return Ok((weights, TrainLog::default()));
    }
    let mut trainer = Trainer::new(cfg, data, weights, Phase::ColdStart)?;
    while trainer.completed() < cfg.cold_start_steps {
        let r = trainer.step()?;
        if r.step % 100 == 0 {
            log::info!("cold step {} mlm={:.4} tlm={:.4}", r.step, r.loss_mlm, r.loss_tlm);
        }
    }
    Ok((trainer.weights, trainer.log))
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub checkpoint: Checkpoint,
    pub log: TrainLog,
    pub heldout: Option<EvalReport>,
}

fn file_err(path: &Path) -> impl FnOnce(std::io::Error) -> TrainError + '_ {
    move |source| TrainError::File {
        path: path.to_owned(),
        source,
    }
}

/// Runs a full training job: cold start (or resume), then `cfg.steps` EM
/// steps in total, writing the log and checkpoints the config names.
pub fn train(cfg: &TrainConfig, data: &Corpora) -> Result<TrainOutcome, TrainError> {
    cfg.validate()?;
    let mut sink = match &cfg.log {
        Some(path) => {
            let file = if cfg.resume.is_some() && path.exists() {
                OpenOptions::new().append(true).open(path)
            } else {
                File::create(path).and_then(|mut f| writeln!(f, "{LOG_HEADER}").map(|_| f))
            }
            .map_err(file_err(path))?;
            Some((path.as_path(), BufWriter::new(file)))
        }
        None => None,
    };
    let mut emit = |r: &StepRecord| -> Result<(), TrainError> {
        if let Some((path, out)) = sink.as_mut() {
            writeln!(out, "{}", r.to_tsv_row())
                .and_then(|_| out.flush())
                .map_err(file_err(path))?;
        }
        Ok(())
    };

    let mut log = TrainLog::default();
    let mut trainer = match &cfg.resume {
        Some(path) => Trainer::from_checkpoint(cfg, data, Checkpoint::load(path)?)?,
        None => {
            let (weights, cold_log) = cold_start(cfg, data)?;
            for r in &cold_log.records {
                emit(r)?;
            }
            log = cold_log;
            Trainer::new(cfg, data, weights, Phase::Em)?
        }
    };

    while trainer.completed() < cfg.steps {
        let r = trainer.step()?;
        emit(&r)?;
        if let Some(aer) = r.heldout_aer {
            log::info!("em step {} held-out aer={aer:.4} dwa={:.4}", r.step, r.loss_dwa);
        }
        if let (Some(path), true) = (&cfg.checkpoint, cfg.checkpoint_every > 0) {
            if r.step % cfg.checkpoint_every == 0 && r.step < cfg.steps {
                trainer.checkpoint().save(path)?;
            }
        }
    }
    log.records.append(&mut trainer.log.records);

    let checkpoint = trainer.checkpoint();
    if let Some(path) = &cfg.checkpoint {
        checkpoint.save(path)?;
    }
    let heldout = heldout_report(&checkpoint.weights, &data.heldout, &cfg.aligner)?;
    Ok(TrainOutcome {
        checkpoint,
        log,
        heldout,
    })
}
