//! Flat parameter storage.
//!
//! Every tensor lives in one `Vec<f64>` at a fixed offset. The order of
//! [`Layout::tensors`] is the serialization order:
//!
//! 1. `tok_emb` `[vocab, hidden]` (also the tied MLM output matrix)
//! 2. `pos_emb` `[max_len, hidden]`
//! 3. `seg_emb` `[2, hidden]`, one row per segment of a sentence pair
//! 4. per layer: `ln1.gain`, `ln1.bias`, `attn.wq`, `attn.bq`, `attn.wk`,
//!    `attn.bk`, `attn.wv`, `attn.bv`, `attn.wo`, `attn.bo`, `ln2.gain`,
//!    `ln2.bias`, `ffn.w1` `[hidden, ffn]`, `ffn.b1`, `ffn.w2` `[ffn, hidden]`,
//!    `ffn.b2`
//! 5. `final_ln.gain`, `final_ln.bias`, `mlm.out_bias` `[vocab]`
//! 6. `pointer.wq`, `pointer.wk` `[hidden, hidden]`
//!
//! Weight matrices are stored `[in, out]` and applied as `x · W`.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::{EncoderConfig, NeuralError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Slot {
    pub offset: usize,
    pub rows: usize,
    pub cols: usize,
}

impl Slot {
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TensorKind {
    Embedding,
    Weight,
    Bias,
    Gain,
}

impl TensorKind {
    /// Whether decoupled weight decay applies.
    pub fn decays(self) -> bool {
        matches!(self, TensorKind::Embedding | TensorKind::Weight)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TensorInfo {
    pub name: String,
    pub slot: Slot,
    pub kind: TensorKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerSlots {
    pub ln1_gain: Slot,
    pub ln1_bias: Slot,
    pub wq: Slot,
    pub bq: Slot,
    pub wk: Slot,
    pub bk: Slot,
    pub wv: Slot,
    pub bv: Slot,
    pub wo: Slot,
    pub bo: Slot,
    pub ln2_gain: Slot,
    pub ln2_bias: Slot,
    pub w1: Slot,
    pub b1: Slot,
    pub w2: Slot,
    pub b2: Slot,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub tok_emb: Slot,
    pub pos_emb: Slot,
    pub seg_emb: Slot,
    pub layers: Vec<LayerSlots>,
    pub final_ln_gain: Slot,
    pub final_ln_bias: Slot,
    pub out_bias: Slot,
    pub ptr_wq: Slot,
    pub ptr_wk: Slot,
    pub tensors: Vec<TensorInfo>,
    pub total: usize,
}

struct Builder {
    offset: usize,
    tensors: Vec<TensorInfo>,
}

impl Builder {
    fn add(&mut self, name: String, rows: usize, cols: usize, kind: TensorKind) -> Slot {
        let slot = Slot {
            offset: self.offset,
            rows,
            cols,
        };
        self.offset += slot.len();
        self.tensors.push(TensorInfo { name, slot, kind });
        slot
    }
}

impl Layout {
    pub fn new(cfg: &EncoderConfig) -> Self {
        use TensorKind::*;
        let d = cfg.hidden;
        let mut b = Builder {
            offset: 0,
            tensors: Vec::new(),
        };
        let tok_emb = b.add("tok_emb".into(), cfg.vocab_size, d, Embedding);
        let pos_emb = b.add("pos_emb".into(), cfg.max_len, d, Embedding);
        let seg_emb = b.add("seg_emb".into(), 2, d, Embedding);
        let layers = (0..cfg.layers)
            .map(|l| {
                let mut add = |name: &str, rows, cols, kind| b.add(format!("layer{l}.{name}"), rows, cols, kind);
                LayerSlots {
                    ln1_gain: add("ln1.gain", 1, d, Gain),
                    ln1_bias: add("ln1.bias", 1, d, Bias),
                    wq: add("attn.wq", d, d, Weight),
                    bq: add("attn.bq", 1, d, Bias),
                    wk: add("attn.wk", d, d, Weight),
                    bk: add("attn.bk", 1, d, Bias),
                    wv: add("attn.wv", d, d, Weight),
                    bv: add("attn.bv", 1, d, Bias),
                    wo: add("attn.wo", d, d, Weight),
                    bo: add("attn.bo", 1, d, Bias),
                    ln2_gain: add("ln2.gain", 1, d, Gain),
                    ln2_bias: add("ln2.bias", 1, d, Bias),
                    w1: add("ffn.w1", d, cfg.ffn, Weight),
                    b1: add("ffn.b1", 1, cfg.ffn, Bias),
                    w2: add("ffn.w2", cfg.ffn, d, Weight),
                    b2: add("ffn.b2", 1, d, Bias),
                }
            })
            .collect();
        let final_ln_gain = b.add("final_ln.gain".into(), 1, d, Gain);
        let final_ln_bias = b.add("final_ln.bias".into(), 1, d, Bias);
        let out_bias = b.add("mlm.out_bias".into(), 1, cfg.vocab_size, Bias);
        let ptr_wq = b.add("pointer.wq".into(), d, d, Weight);
        let ptr_wk = b.add("pointer.wk".into(), d, d, Weight);
        Layout {
            tok_emb,
            pos_emb,
            seg_emb,
            layers,
            final_ln_gain,
            final_ln_bias,
            out_bias,
            ptr_wq,
            ptr_wk,
            total: b.offset,
            tensors: b.tensors,
        }
    }
}

/// Parameter values plus the configuration that shapes them.
#[derive(Debug, Clone, PartialEq)]
pub struct Weights {
    pub config: EncoderConfig,
    pub layout: Layout,
    pub values: Vec<f64>,
}

impl Weights {
    pub fn zeros(config: EncoderConfig) -> Result<Self, NeuralError> {
        config.validate()?;
        let layout = Layout::new(&config);
        let mut weights = Weights {
            values: vec![0.0; layout.total],
            layout,
            config,
        };
        for info in weights.layout.tensors.clone() {
            if info.kind == TensorKind::Gain {
                weights.values[info.slot.range()].fill(1.0);
            }
        }
        Ok(weights)
    }

    /// Normal(0, init_std) matrices and embeddings, unit gains, zero biases.
    pub fn init<R: Rng + ?Sized>(config: EncoderConfig, rng: &mut R) -> Result<Self, NeuralError> {
        let mut weights = Weights::zeros(config)?;
        let normal = Normal::new(0.0, weights.config.init_std)
            .map_err(|e| NeuralError::InvalidConfig(e.to_string()))?;
        let precision = weights.config.precision;
        for info in weights.layout.tensors.clone() {
            if info.kind.decays() {
                for x in &mut weights.values[info.slot.range()] {
                    *x = precision.round(normal.sample(rng));
                }
            }
        }
        Ok(weights)
    }

    pub fn get(&self, slot: Slot) -> &[f64] {
        &self.values[slot.range()]
    }

    pub fn get_mut(&mut self, slot: Slot) -> &mut [f64] {
        &mut self.values[slot.range()]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn tensor(&self, name: &str) -> Option<&TensorInfo> {
        self.layout.tensors.iter().find(|t| t.name == name)
    }
}

/// Gradient buffer with the same layout as [`Weights`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub values: Vec<f64>,
}

impl Gradients {
    pub fn zeros_like(weights: &Weights) -> Self {
        Gradients {
            values: vec![0.0; weights.len()],
        }
    }

    pub fn get_mut(&mut self, slot: Slot) -> &mut [f64] {
        &mut self.values[slot.range()]
    }

    pub fn get(&self, slot: Slot) -> &[f64] {
        &self.values[slot.range()]
    }

    pub fn zero(&mut self) {
        self.values.fill(0.0);
    }

    pub fn add_assign(&mut self, other: &Gradients) {
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += b;
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for g in &mut self.values {
            *g *= factor;
        }
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|g| g * g).sum::<f64>().sqrt()
    }
}

/// Parameters with their paired gradient buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderParams {
    pub weights: Weights,
    pub grads: Gradients,
}

impl EncoderParams {
    pub fn new(weights: Weights) -> Self {
        let grads = Gradients::zeros_like(&weights);
        EncoderParams { weights, grads }
    }

    pub fn init<R: Rng + ?Sized>(config: EncoderConfig, rng: &mut R) -> Result<Self, NeuralError> {
        Ok(EncoderParams::new(Weights::init(config, rng)?))
    }

    pub fn config(&self) -> &EncoderConfig {
        &self.weights.config
    }
}

/// Parameter count as a function of the configuration alone.
pub fn parameter_count(cfg: &EncoderConfig) -> usize {
    let d = cfg.hidden;
    let per_layer = 4 * d + 4 * (d * d + d) + (d * cfg.ffn + cfg.ffn) + (cfg.ffn * d + d);
    cfg.vocab_size * d + cfg.max_len * d + 2 * d + cfg.layers * per_layer + 2 * d + cfg.vocab_size + 2 * d * d
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_is_contiguous_and_counted() {
        let cfg = EncoderConfig::desk(50);
        let layout = Layout::new(&cfg);
        let mut next = 0;
        for t in &layout.tensors {
            assert_eq!(t.slot.offset, next, "{}", t.name);
            next += t.slot.len();
        }
        assert_eq!(next, layout.total);
        assert_eq!(layout.total, parameter_count(&cfg));
    }

    #[test]
    fn gradient_buffer_matches_shape() {
        let cfg = EncoderConfig {
            layers: 1,
            hidden: 8,
            heads: 2,
            ffn: 16,
            max_len: 10,
            ..EncoderConfig::desk(12)
        };
        let p = EncoderParams::init(cfg, &mut <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(0)).unwrap();
        assert_eq!(p.grads.values.len(), p.weights.values.len());
    }

    #[test]
    fn bad_head_count_rejected() {
        let cfg = EncoderConfig {
            heads: 3,
            ..EncoderConfig::desk(10)
        };
        assert!(Weights::zeros(cfg).is_err());
    }
}
