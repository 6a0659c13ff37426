//! Tokens, sentence pairs, masking, and synthetic parallel data.

mod bitext;
mod pair;
mod synth;
mod vocab;

use std::path::{Path, PathBuf};

pub use bitext::{
    attach_word_maps, parse_bitext, parse_word_maps, read_bitext, read_word_maps, write_bitext,
    VocabMode, WordMaps, SEPARATOR,
};
pub use pair::{mask_pair, mask_sequence, MaskedPair, MaskingPolicy, SentencePair};
pub use synth::{
    gen_synthetic_corpus, source_token, synthetic_vocab, target_token, Reordering,
    SyntheticCorpus, SyntheticSpec,
};
pub use vocab::Vocab;

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("empty input: sentences and sequences need at least one token")]
    EmptyInput,
    #[error("masking rate {0} is outside (0, 1)")]
    InvalidRate(f64),
    #[error("invalid synthetic corpus spec: {0}")]
    InvalidSpec(String),
    #[error("invalid word map: {0}")]
    WordMap(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CorpusError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        CorpusError::File {
            path: path.to_owned(),
            source,
        }
    }
}
