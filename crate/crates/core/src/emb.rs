//! `EMB1` container for precomputed per-token embeddings.
//!
//! Layout, all little-endian: magic `EMB1`, `u32` dimension `d`, then per
//! pair `u32 n`, `u32 m`, `n·d` then `m·d` `f32` values. Pairs follow bitext
//! order. The stream ends cleanly after a whole record.

use std::fs::File;
use std::io::{BufReader, BufWriter, ErrorKind, Read, Write};
use std::path::{Path, PathBuf};

pub const MAGIC: &[u8; 4] = b"EMB1";

#[derive(Debug, thiserror::Error)]
pub enum EmbError {
    #[error("not an EMB1 file (magic {0:?})")]
    BadMagic([u8; 4]),
    #[error("record {record} is truncated")]
    Truncated { record: usize },
    #[error("record {record}: {message}")]
    Invalid { record: usize, message: String },
    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Source and target vectors of one pair, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PairEmbeddings {
    pub dim: usize,
    pub src: Vec<f64>,
    pub tgt: Vec<f64>,
}

impl PairEmbeddings {
    pub fn new(dim: usize, src: Vec<f64>, tgt: Vec<f64>) -> Self {
        assert!(dim > 0 && src.len() % dim == 0 && tgt.len() % dim == 0);
        PairEmbeddings { dim, src, tgt }
    }

    pub fn src_len(&self) -> usize {
        self.src.len() / self.dim
    }

    pub fn tgt_len(&self) -> usize {
        self.tgt.len() / self.dim
    }

    pub fn src_rows(&self) -> Vec<&[f64]> {
        self.src.chunks_exact(self.dim).collect()
    }

    pub fn tgt_rows(&self) -> Vec<&[f64]> {
        self.tgt.chunks_exact(self.dim).collect()
    }
}

pub struct EmbWriter<W: Write> {
    out: W,
    dim: usize,
}

impl<W: Write> EmbWriter<W> {
    pub fn new(mut out: W, dim: usize) -> Result<Self, EmbError> {
        out.write_all(MAGIC)?;
        out.write_all(&u32_of(dim, 0)?.to_le_bytes())?;
        Ok(EmbWriter { out, dim })
    }

    pub fn write_pair(&mut self, pair: &PairEmbeddings) -> Result<(), EmbError> {
        if pair.dim != self.dim {
            return Err(EmbError::Invalid {
                record: 0,
                message: format!("dimension {} in a file of dimension {}", pair.dim, self.dim),
            });
        }
        let mut buf = Vec::with_capacity(8 + 4 * (pair.src.len() + pair.tgt.len()));
        buf.extend_from_slice(&u32_of(pair.src_len(), 0)?.to_le_bytes());
        buf.extend_from_slice(&u32_of(pair.tgt_len(), 0)?.to_le_bytes());
        for &v in pair.src.iter().chain(&pair.tgt) {
            buf.extend_from_slice(&(v as f32).to_le_bytes());
        }
        self.out.write_all(&buf)?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<W, EmbError> {
        self.out.flush()?;
        Ok(self.out)
    }
}

fn u32_of(v: usize, record: usize) -> Result<u32, EmbError> {
    u32::try_from(v).map_err(|_| EmbError::Invalid {
        record,
        message: format!("{v} does not fit in u32"),
    })
}

/// Streams records one pair at a time.
pub struct EmbReader<R: Read> {
    input: R,
    dim: usize,
    record: usize,
}

impl<R: Read> EmbReader<R> {
    pub fn new(mut input: R) -> Result<Self, EmbError> {
        let mut magic = [0u8; 4];
        input.read_exact(&mut magic).map_err(|_| EmbError::BadMagic(magic))?;
        if &magic != MAGIC {
            return Err(EmbError::BadMagic(magic));
        }
        let mut d = [0u8; 4];
        input.read_exact(&mut d).map_err(|_| EmbError::Truncated { record: 0 })?;
        let dim = u32::from_le_bytes(d) as usize;
        if dim == 0 {
            return Err(EmbError::Invalid {
                record: 0,
                message: "dimension 0".into(),
            });
        }
        Ok(EmbReader { input, dim, record: 0 })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn read_record(&mut self) -> Result<Option<PairEmbeddings>, EmbError> {
        let record = self.record + 1;
        let mut header = [0u8; 8];
        // A clean end of file falls exactly on a record boundary.
        let mut got = 0;
        while got < header.len() {
            match self.input.read(&mut header[got..]) {
                Ok(0) if got == 0 => return Ok(None),
                Ok(0) => return Err(EmbError::Truncated { record }),
                Ok(k) => got += k,
                Err(e) if e.kind() == ErrorKind::Interrupted => {}
                Err(e) => return Err(e.into()),
            }
        }
        let n = u32::from_le_bytes([header[0], header[1], header[2], header[3]]) as usize;
        let m = u32::from_le_bytes([header[4], header[5], header[6], header[7]]) as usize;
        if n == 0 || m == 0 {
            return Err(EmbError::Invalid {
                record,
                message: format!("empty side (n={n}, m={m})"),
            });
        }
        let mut read_block = |count: usize| -> Result<Vec<f64>, EmbError> {
            let mut buf = vec![0u8; count * 4];
            self.input.read_exact(&mut buf).map_err(|e| match e.kind() {
                ErrorKind::UnexpectedEof => EmbError::Truncated { record },
                _ => e.into(),
            })?;
            Ok(buf
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
                .collect())
        };
        let src = read_block(n * self.dim)?;
        let tgt = read_block(m * self.dim)?;
        self.record = record;
        Ok(Some(PairEmbeddings { dim: self.dim, src, tgt }))
    }
}

impl<R: Read> Iterator for EmbReader<R> {
    type Item = Result<PairEmbeddings, EmbError>;

    fn next(&mut self) -> Option<Self::Item> {
        self.read_record().transpose()
    }
}

pub fn write_emb<W: Write>(out: W, dim: usize, pairs: &[PairEmbeddings]) -> Result<(), EmbError> {
    let mut writer = EmbWriter::new(out, dim)?;
    for p in pairs {
        writer.write_pair(p)?;
    }
    writer.finish()?;
    Ok(())
}

pub fn read_emb<R: Read>(input: R) -> Result<(usize, Vec<PairEmbeddings>), EmbError> {
    let reader = EmbReader::new(input)?;
    let dim = reader.dim();
    Ok((dim, reader.collect::<Result<_, _>>()?))
}

pub fn save_emb(path: impl AsRef<Path>, dim: usize, pairs: &[PairEmbeddings]) -> Result<(), EmbError> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|source| EmbError::File {
        path: path.to_owned(),
        source,
    })?;
    write_emb(BufWriter::new(file), dim, pairs)
}

pub fn load_emb(path: impl AsRef<Path>) -> Result<(usize, Vec<PairEmbeddings>), EmbError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| EmbError::File {
        path: path.to_owned(),
        source,
    })?;
    read_emb(BufReader::new(file))
}
