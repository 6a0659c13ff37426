//! Word alignment by entropic optimal transport, alignment error rate
//! evaluation, and a small transformer trained with masked language
//! modeling plus denoising word alignment in an expectation-maximization
//! loop.
//!
//! The crate is organized around the pipeline:
//!
//! - [`corpus`]: vocabularies, sentence pairs, masking, synthetic bitext
//! - [`align`]: similarity, Sinkhorn, argmax links, iterative filtering
//! - [`eval`]: gold alignments and AER
//! - [`neural`]: the encoder, its heads, gradients, and checkpoints
//! - [`train`]: the self-labeling / update loop
//! - [`emb`]: the `EMB1` container for externally computed embeddings
//!
//! The `book/` directory walks through each stage; its code blocks run as
//! doctests of this crate.
//!
//! ```
//! use xalign::align::{self_label, AlignerConfig};
//!
//! // Two source and two target vectors; s0 matches t1, s1 matches t0.
//! let hidden = [[1.0, 0.0], [0.0, 1.0], [0.0, 1.0], [1.0, 0.0]];
//! let links = self_label(&hidden, 2, &AlignerConfig::default()).unwrap();
//! assert_eq!(links.to_string(), "0-1 1-0");
//! ```

pub mod align;
pub mod corpus;
pub mod emb;
pub mod eval;
pub mod neural;
pub mod train;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub struct Introduction;
    #[doc = include_str!("../../../book/src/transport.md")]
    pub struct Transport;
    #[doc = include_str!("../../../book/src/filtering.md")]
    pub struct Filtering;
    #[doc = include_str!("../../../book/src/aer.md")]
    pub struct Aer;
    #[doc = include_str!("../../../book/src/encoder.md")]
    pub struct Encoder;
    #[doc = include_str!("../../../book/src/training.md")]
    pub struct Training;
    #[doc = include_str!("../../../book/src/formats.md")]
    pub struct Formats;
    #[doc = include_str!("../../../book/src/results.md")]
    pub struct Results;
}
