//! Training and held-out corpora.

use std::path::Path;

use super::{TrainConfig, TrainError};
use crate::align::Indexing;
use crate::corpus::{gen_synthetic_corpus, read_bitext, SentencePair, SyntheticSpec, Vocab, VocabMode};
use crate::eval::{read_gold, sure_only, GoldAlignment};

#[derive(Debug, Clone)]
pub struct Corpora {
    pub vocab: Vocab,
    pub train: Vec<SentencePair>,
    /// Known alignments of the training pairs, when available; used only for
    /// logging self-label quality.
    pub train_gold: Vec<Option<GoldAlignment>>,
    pub heldout: Vec<(SentencePair, GoldAlignment)>,
    /// Plain-text sentences for the MLM stream.
    pub mono: Vec<Vec<u32>>,
}

impl Corpora {
    /// Synthetic corpus whose last `heldout` pairs are kept for evaluation.
    /// Source sides of the training pairs form the monolingual stream.
    pub fn synthetic(spec: &SyntheticSpec, heldout: usize) -> Result<Self, TrainError> {
        let corpus = gen_synthetic_corpus(spec)?;
        let split = corpus.pairs.len().saturating_sub(heldout);
        let mut pairs = corpus.pairs;
        let held = pairs.split_off(split);
        let mono = pairs.iter().map(|(p, _)| p.src.clone()).collect();
        let (train, gold): (Vec<_>, Vec<_>) =
            pairs.into_iter().map(|(p, a)| (p, Some(sure_only(&a)))).unzip();
        Ok(Corpora {
            vocab: corpus.vocab,
            train,
            train_gold: gold,
            heldout: held.into_iter().map(|(p, a)| (p, sure_only(&a))).collect(),
            mono,
        })
    }

    /// Bitext with optional 1-based gold keyed by line number. With gold, the
    /// last `heldout` pairs are held out; without it nothing is.
    pub fn from_bitext(
        bitext: &Path,
        gold: Option<&Path>,
        heldout: usize,
    ) -> Result<Self, TrainError> {
        let mut vocab = Vocab::new();
        let pairs = read_bitext(bitext, &mut vocab, VocabMode::Extend)?;
        let mut gold_map = match gold {
            Some(path) => Some(read_gold(path, Indexing::OneBased)?),
            None => None,
        };
        let mut golds: Vec<Option<GoldAlignment>> = (1..=pairs.len())
            .map(|id| gold_map.as_mut().map(|g| g.remove(&id).unwrap_or_default()))
            .collect();
        let split = if gold_map.is_some() {
            pairs.len().saturating_sub(heldout)
        } else {
            pairs.len()
        };
        let mut train = pairs;
        let held_pairs = train.split_off(split);
        let held_gold = golds.split_off(split);
        let heldout = held_pairs
            .into_iter()
            .zip(held_gold)
            .map(|(p, g)| (p, g.unwrap_or_default()))
            .collect();
        let mono = train.iter().map(|p| p.src.clone()).collect();
        Ok(Corpora {
            vocab,
            train,
            train_gold: golds,
            heldout,
            mono,
        })
    }

    /// The corpora a config names: its bitext if set, else its synthetic spec.
    pub fn from_config(cfg: &TrainConfig) -> Result<Self, TrainError> {
        match &cfg.bitext {
            Some(path) => Corpora::from_bitext(path, cfg.gold.as_deref(), cfg.heldout_pairs),
            None => Corpora::synthetic(&cfg.synthetic, cfg.heldout_pairs),
        }
    }

    pub fn longest_pair(&self) -> usize {
        self.train
            .iter()
            .chain(self.heldout.iter().map(|(p, _)| p))
            .map(|p| p.src_len() + p.tgt_len())
            .max()
            .unwrap_or(0)
    }
}
