use std::collections::BTreeMap;

use rand::Rng;

use super::{CorpusError, Vocab};

/// A tokenized translation pair.
///
/// Word maps, when present, give the whitespace-word index each token came
/// from and are used to project subword links back to words.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SentencePair {
    pub src: Vec<u32>,
    pub tgt: Vec<u32>,
    pub src_word_map: Option<Vec<usize>>,
    pub tgt_word_map: Option<Vec<usize>>,
}

impl SentencePair {
    pub fn new(src: Vec<u32>, tgt: Vec<u32>) -> Result<Self, CorpusError> {
        if src.is_empty() || tgt.is_empty() {
            return Err(CorpusError::EmptyInput);
        }
        Ok(SentencePair {
            src,
            tgt,
            src_word_map: None,
            tgt_word_map: None,
        })
    }

    pub fn with_word_maps(
        mut self,
        src_map: Vec<usize>,
        tgt_map: Vec<usize>,
    ) -> Result<Self, CorpusError> {
        check_word_map(&src_map, self.src.len())?;
        check_word_map(&tgt_map, self.tgt.len())?;
        self.src_word_map = Some(src_map);
        self.tgt_word_map = Some(tgt_map);
        Ok(self)
    }

    pub fn src_len(&self) -> usize {
        self.src.len()
    }

    pub fn tgt_len(&self) -> usize {
        self.tgt.len()
    }

    /// The `[src, tgt]` concatenation the encoder consumes.
    pub fn concatenated(&self) -> Vec<u32> {
        let mut seq = Vec::with_capacity(self.src.len() + self.tgt.len());
        seq.extend_from_slice(&self.src);
        seq.extend_from_slice(&self.tgt);
        seq
    }
}

fn check_word_map(map: &[usize], len: usize) -> Result<(), CorpusError> {
    if map.len() != len {
        return Err(CorpusError::WordMap(format!(
            "word map has {} entries for {} tokens",
            map.len(),
            len
        )));
    }
    if map.windows(2).any(|w| w[1] < w[0]) {
        return Err(CorpusError::WordMap("word map is not nondecreasing".into()));
    }
    Ok(())
}

/// A perturbed token sequence with the record of what was replaced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskedPair {
    pub perturbed: Vec<u32>,
    /// Sorted, duplicate-free positions into `perturbed`.
    pub masked_positions: Vec<usize>,
    pub original_tokens: BTreeMap<usize, u32>,
}

impl MaskedPair {
    pub fn is_masked(&self, pos: usize) -> bool {
        self.masked_positions.binary_search(&pos).is_ok()
    }

    /// `(position, original id)` targets for the MLM head.
    pub fn targets(&self) -> Vec<(usize, u32)> {
        self.original_tokens.iter().map(|(&p, &t)| (p, t)).collect()
    }
}

/// How selected positions are corrupted: with probability `mask_prob` the
/// mask id, with `random_prob` a uniformly drawn regular token, otherwise the
/// token is kept.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaskingPolicy {
    pub rate: f64,
    pub mask_prob: f64,
    pub random_prob: f64,
    /// Number of ids (including specials) random replacements are drawn from.
    pub vocab_size: u32,
}

impl MaskingPolicy {
    pub const DEFAULT_RATE: f64 = 0.15;

    /// The 80/10/10 policy at the given rate.
    pub fn standard(rate: f64, vocab_size: u32) -> Self {
        MaskingPolicy {
            rate,
            mask_prob: 0.8,
            random_prob: 0.1,
            vocab_size,
        }
    }

    /// Every selected position becomes the mask id.
    pub fn mask_only(rate: f64, vocab_size: u32) -> Self {
        MaskingPolicy {
            rate,
            mask_prob: 1.0,
            random_prob: 0.0,
            vocab_size,
        }
    }
}

/// Masks a single token sequence. Each position is selected independently
/// with probability `policy.rate`; if none is selected one position is drawn
/// uniformly so the result is never unmasked.
pub fn mask_sequence<R: Rng + ?Sized>(
    tokens: &[u32],
    policy: &MaskingPolicy,
    rng: &mut R,
) -> Result<MaskedPair, CorpusError> {
    if tokens.is_empty() {
        return Err(CorpusError::EmptyInput);
    }
    if !(policy.rate > 0.0 && policy.rate < 1.0) {
        return Err(CorpusError::InvalidRate(policy.rate));
    }
    let mut selected: Vec<usize> = (0..tokens.len())
        .filter(|_| rng.gen::<f64>() < policy.rate)
        .collect();
    if selected.is_empty() {
        selected.push(rng.gen_range(0..tokens.len()));
    }

    let regular = Vocab::NUM_SPECIAL..policy.vocab_size.max(Vocab::NUM_SPECIAL + 1);
    let mut perturbed = tokens.to_vec();
    let mut original_tokens = BTreeMap::new();
    for &pos in &selected {
        original_tokens.insert(pos, tokens[pos]);
        let roll: f64 = rng.gen();
        if roll < policy.mask_prob {
            perturbed[pos] = Vocab::MASK_ID;
        } else if roll < policy.mask_prob + policy.random_prob {
            perturbed[pos] = rng.gen_range(regular.clone());
        }
    }
    Ok(MaskedPair {
        perturbed,
        masked_positions: selected,
        original_tokens,
    })
}

/// Masks the `[src, tgt]` concatenation of a pair.
pub fn mask_pair<R: Rng + ?Sized>(
    pair: &SentencePair,
    policy: &MaskingPolicy,
    rng: &mut R,
) -> Result<MaskedPair, CorpusError> {
    mask_sequence(&pair.concatenated(), policy, rng)
}
