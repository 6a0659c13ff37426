//! Synthetic bitext with planted alignments.
//!
//! Source sentences draw tokens `s0..s{V-1}` uniformly. Each source token is
//! translated through a fixed random bijection onto `t0..t{V-1}`, and the
//! translated sentence is reordered by a per-sentence permutation. The
//! permutation is the ground-truth alignment.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{CorpusError, SentencePair, Vocab};
use crate::align::{AlignSet, Direction};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Reordering {
    Identity,
    /// Walk left to right; swap positions `i, i+1` with probability `p` and
    /// skip past the swapped pair, so swaps never overlap.
    AdjacentSwap { p: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    /// Tokens per side.
    pub vocab_size: usize,
    pub min_len: usize,
    pub max_len: usize,
    pub bijection_seed: u64,
    pub reordering: Reordering,
    pub pairs: usize,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            vocab_size: 200,
            min_len: 5,
            max_len: 12,
            bijection_seed: 0,
            reordering: Reordering::AdjacentSwap { p: 0.3 },
            pairs: 2000,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpus {
    pub vocab: Vocab,
    pub pairs: Vec<(SentencePair, AlignSet)>,
    /// `bijection[k]` is the target-side index of source token `k`.
    pub bijection: Vec<usize>,
}

pub fn source_token(k: usize) -> String {
    format!("s{k}")
}

pub fn target_token(k: usize) -> String {
    format!("t{k}")
}

/// Vocabulary holding the specials, then all source, then all target tokens.
pub fn synthetic_vocab(vocab_size: usize) -> Vocab {
    Vocab::from_tokens(
        (0..vocab_size)
            .map(source_token)
            .chain((0..vocab_size).map(target_token)),
    )
}

impl SyntheticSpec {
    fn validate(&self) -> Result<(), CorpusError> {
        if self.vocab_size < 2 {
            return Err(CorpusError::InvalidSpec(format!(
                "vocabulary of {} tokens, need at least 2",
                self.vocab_size
            )));
        }
        if self.min_len == 0 || self.min_len > self.max_len {
            return Err(CorpusError::InvalidSpec(format!(
                "sentence length range {}..={}",
                self.min_len, self.max_len
            )));
        }
        if let Reordering::AdjacentSwap { p } = self.reordering {
            if !(0.0..=1.0).contains(&p) {
                return Err(CorpusError::InvalidSpec(format!("swap probability {p}")));
            }
        }
        Ok(())
    }
}

/// Draws the reordering permutation; `perm[i]` is the target slot of source
/// position `i`.
fn draw_permutation<R: Rng>(n: usize, reordering: Reordering, rng: &mut R) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    if let Reordering::AdjacentSwap { p } = reordering {
        let mut i = 0;
        while i + 1 < n {
            if rng.gen::<f64>() < p {
                perm.swap(i, i + 1);
                i += 2;
            } else {
                i += 1;
            }
        }
    }
    perm
}

pub fn gen_synthetic_corpus(spec: &SyntheticSpec) -> Result<SyntheticCorpus, CorpusError> {
    spec.validate()?;
    let vocab = synthetic_vocab(spec.vocab_size);
    let src_base = Vocab::NUM_SPECIAL;
    let tgt_base = src_base + spec.vocab_size as u32;

    let mut bijection: Vec<usize> = (0..spec.vocab_size).collect();
    bijection.shuffle(&mut ChaCha8Rng::seed_from_u64(spec.bijection_seed));

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut pairs = Vec::with_capacity(spec.pairs);
    for _ in 0..spec.pairs {
        let n = rng.gen_range(spec.min_len..=spec.max_len);
        let words: Vec<usize> = (0..n).map(|_| rng.gen_range(0..spec.vocab_size)).collect();
        let perm = draw_permutation(n, spec.reordering, &mut rng);

        let mut tgt = vec![0u32; n];
        for (i, &w) in words.iter().enumerate() {
            tgt[perm[i]] = tgt_base + bijection[w] as u32;
        }
        let src = words.iter().map(|&w| src_base + w as u32).collect();
        let links = AlignSet::from_links(
            Direction::Bidirectional,
            perm.iter().enumerate().map(|(i, &j)| (i, j)),
        );
        pairs.push((SentencePair::new(src, tgt)?, links));
    }
    Ok(SyntheticCorpus {
        vocab,
        pairs,
        bijection,
    })
}
