//! `XAW1` checkpoint files. All integers and floats are little-endian.
//!
//! ```text
//! b"XAW1"
//! u32  format version (1)
//! u32  layers, hidden, heads, ffn, max_len, vocab_size
//! u32  precision (0 = f32, 1 = f64)
//! u64  dropout as f64 bits
//! u64  init_std as f64 bits
//! u64  parameter count N
//! f32  × N parameters, in `Layout::tensors` order
//! u8   RNG present; if 1: [u8; 32] ChaCha8 seed, u64 stream, u128 word position
//! u8   optimizer present; if 1: u64 step, f32 × N first moments, f32 × N second moments
//! u32  vocabulary size (0 = none); per token: u32 byte length, UTF-8 bytes
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand_chacha::ChaCha8Rng;

use super::{EncoderConfig, NeuralError, Precision, Weights};
use crate::corpus::Vocab;

pub const MAGIC: &[u8; 4] = b"XAW1";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RngState {
    pub seed: [u8; 32],
    pub stream: u64,
    pub word_pos: u128,
}

impl RngState {
    pub fn capture(rng: &ChaCha8Rng) -> Self {
        RngState {
            seed: rng.get_seed(),
            stream: rng.get_stream(),
            word_pos: rng.get_word_pos(),
        }
    }

    pub fn restore(&self) -> ChaCha8Rng {
        use rand::SeedableRng;
        let mut rng = ChaCha8Rng::from_seed(self.seed);
        rng.set_stream(self.stream);
        rng.set_word_pos(self.word_pos);
        rng
    }
}

/// Adam moments and the number of completed steps.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub step: u64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub weights: Weights,
    pub rng: Option<RngState>,
    pub optimizer: Option<OptimizerState>,
    pub vocab: Option<Vocab>,
}

impl Checkpoint {
    pub fn new(weights: Weights) -> Self {
        Checkpoint {
            weights,
            rng: None,
            optimizer: None,
            vocab: None,
        }
    }

    pub fn write_to<W: Write>(&self, out: &mut W) -> Result<(), NeuralError> {
        let cfg = &self.weights.config;
        out.write_all(MAGIC)?;
        put_u32(out, VERSION)?;
        for value in [cfg.layers, cfg.hidden, cfg.heads, cfg.ffn, cfg.max_len, cfg.vocab_size] {
            put_u32(out, to_u32(value)?)?;
        }
        put_u32(out, cfg.precision.code())?;
        put_u64(out, cfg.dropout.to_bits())?;
        put_u64(out, cfg.init_std.to_bits())?;
        let count = self.weights.values.len();
        out.write_all(&(count as u64).to_le_bytes())?;
        put_f32s(out, &self.weights.values)?;

        match &self.rng {
            Some(state) => {
                out.write_all(&[1])?;
                out.write_all(&state.seed)?;
                out.write_all(&state.stream.to_le_bytes())?;
                out.write_all(&state.word_pos.to_le_bytes())?;
            }
            None => out.write_all(&[0])?,
        }
        match &self.optimizer {
            Some(opt) => {
                if opt.m.len() != count || opt.v.len() != count {
                    return Err(NeuralError::Checkpoint("optimizer state size differs from parameters".into()));
                }
                out.write_all(&[1])?;
                out.write_all(&opt.step.to_le_bytes())?;
                put_f32s(out, &opt.m)?;
                put_f32s(out, &opt.v)?;
            }
            None => out.write_all(&[0])?,
        }
        match &self.vocab {
            Some(vocab) => {
                put_u32(out, to_u32(vocab.len())?)?;
                for token in vocab.tokens() {
                    put_u32(out, to_u32(token.len())?)?;
                    out.write_all(token.as_bytes())?;
                }
            }
            None => put_u32(out, 0)?,
        }
        Ok(())
    }

    pub fn read_from<R: Read>(input: &mut R) -> Result<Self, NeuralError> {
        let mut magic = [0u8; 4];
        input.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(NeuralError::Checkpoint(format!("bad magic {magic:?}")));
        }
        let version = get_u32(input)?;
        if version != VERSION {
            return Err(NeuralError::Checkpoint(format!("unsupported version {version}")));
        }
        let mut sizes = [0usize; 6];
        for s in &mut sizes {
            *s = get_u32(input)? as usize;
        }
        let code = get_u32(input)?;
        let precision = Precision::from_code(code)
            .ok_or_else(|| NeuralError::Checkpoint(format!("unknown precision code {code}")))?;
        let dropout = f64::from_bits(get_u64(input)?);
        let init_std = f64::from_bits(get_u64(input)?);
        let config = EncoderConfig {
            layers: sizes[0],
            hidden: sizes[1],
            heads: sizes[2],
            ffn: sizes[3],
            max_len: sizes[4],
            vocab_size: sizes[5],
            precision,
            dropout,
            init_std,
        };
        let mut weights = Weights::zeros(config)?;
        let count = get_u64(input)? as usize;
        if count != weights.values.len() {
            return Err(NeuralError::Checkpoint(format!(
                "{count} parameters stored but the configuration needs {}",
                weights.values.len()
            )));
        }
        weights.values = get_f32s(input, count)?;

        let rng = if get_u8(input)? == 1 {
            let mut seed = [0u8; 32];
            input.read_exact(&mut seed)?;
            let stream = get_u64(input)?;
            let mut pos = [0u8; 16];
            input.read_exact(&mut pos)?;
            Some(RngState {
                seed,
                stream,
                word_pos: u128::from_le_bytes(pos),
            })
        } else {
            None
        };
        let optimizer = if get_u8(input)? == 1 {
            let step = get_u64(input)?;
            let m = get_f32s(input, count)?;
            let v = get_f32s(input, count)?;
            Some(OptimizerState { step, m, v })
        } else {
            None
        };
        let tokens = get_u32(input)? as usize;
        let vocab = if tokens == 0 {
            None
        } else {
            let mut list = Vec::with_capacity(tokens);
            for _ in 0..tokens {
                let len = get_u32(input)? as usize;
                let mut buf = vec![0u8; len];
                input.read_exact(&mut buf)?;
                list.push(String::from_utf8(buf).map_err(|e| NeuralError::Checkpoint(e.to_string()))?);
            }
            let vocab = Vocab::from_tokens(&list);
            if vocab.tokens() != list.as_slice() {
                return Err(NeuralError::Checkpoint("vocabulary is not in canonical order".into()));
            }
            Some(vocab)
        };
        Ok(Checkpoint {
            weights,
            rng,
            optimizer,
            vocab,
        })
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>, NeuralError> {
        let mut out = Vec::new();
        self.write_to(&mut out)?;
        Ok(out)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), NeuralError> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| with_path(path, e))?;
        let mut out = BufWriter::new(file);
        self.write_to(&mut out)?;
        out.flush().map_err(|e| with_path(path, e))?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, NeuralError> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| with_path(path, e))?;
        Checkpoint::read_from(&mut BufReader::new(file))
    }
}

fn with_path(path: &Path, e: std::io::Error) -> NeuralError {
    NeuralError::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

fn to_u32(value: usize) -> Result<u32, NeuralError> {
    u32::try_from(value).map_err(|_| NeuralError::Checkpoint(format!("{value} does not fit in u32")))
}

fn put_u32<W: Write>(out: &mut W, v: u32) -> std::io::Result<()> {
    out.write_all(&v.to_le_bytes())
}

fn put_u64<W: Write>(out: &mut W, v: u64) -> std::io::Result<()> {
    out.write_all(&v.to_le_bytes())
}

fn put_f32s<W: Write>(out: &mut W, values: &[f64]) -> std::io::Result<()> {
    let mut buf = Vec::with_capacity(values.len() * 4);
    for &v in values {
        buf.extend_from_slice(&(v as f32).to_le_bytes());
    }
    out.write_all(&buf)
}

fn get_u8<R: Read>(input: &mut R) -> std::io::Result<u8> {
    let mut b = [0u8; 1];
    input.read_exact(&mut b)?;
    Ok(b[0])
}

fn get_u32<R: Read>(input: &mut R) -> std::io::Result<u32> {
    let mut b = [0u8; 4];
    input.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn get_u64<R: Read>(input: &mut R) -> std::io::Result<u64> {
    let mut b = [0u8; 8];
    input.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn get_f32s<R: Read>(input: &mut R, count: usize) -> std::io::Result<Vec<f64>> {
    let mut buf = vec![0u8; count * 4];
    input.read_exact(&mut buf)?;
    Ok(buf
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect())
}
