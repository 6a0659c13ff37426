//! Desk-scale transformer encoder with MLM/TLM and pointer-network heads
//! and exact reverse-mode gradients.

pub mod checkpoint;
mod config;
mod encoder;
mod heads;
pub mod mat;
mod params;

pub use checkpoint::{Checkpoint, OptimizerState, RngState};
pub use config::{EncoderConfig, Precision};
pub use encoder::{backward, encode, encode_train, hidden_states, ForwardTrace, HiddenGrads, Input};
pub use heads::{
    dwa_loss, dwa_queries, mlm_logits, mlm_loss, multi_link_queries, pointer_distribution,
    PointerQuery, QueryPolicy, UNMASKED_QUERY_RATE,
};
pub use params::{
    parameter_count, EncoderParams, Gradients, LayerSlots, Layout, Slot, TensorInfo, TensorKind,
    Weights,
};

#[derive(Debug, thiserror::Error)]
pub enum NeuralError {
    #[error("invalid encoder configuration: {0}")]
    InvalidConfig(String),
    #[error("sequence of {len} tokens exceeds the maximum of {max}")]
    Overlength { len: usize, max: usize },
    #[error("empty token sequence")]
    EmptySequence,
    #[error("token id {id} outside a vocabulary of {vocab}")]
    TokenOutOfRange { id: u32, vocab: usize },
    #[error("position {pos} outside a sequence of {len}")]
    PositionOutOfRange { pos: usize, len: usize },
    #[error("layer {layer} requested but the encoder has {layers} layers")]
    LayerOutOfRange { layer: usize, layers: usize },
    #[error("pointer key range is empty")]
    EmptyKeyRange,
    #[error("pointer query {query} lies inside its own key range")]
    QueryInKeyRange { query: usize },
    #[error("invalid alignment labels: {0}")]
    InvalidLabels(String),
    #[error("backward called on a trace recorded without a cache; use `encode`")]
    MissingTrace,
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
