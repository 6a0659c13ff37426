//! Line-oriented text formats for parallel data.
//!
//! Bitext: `src tokens ||| tgt tokens`, one pair per line.
//! Word-map sidecar: `0 0 1 ||| 0 1 1`, one line per pair, giving the word
//! index of each token.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use super::{CorpusError, SentencePair, Vocab};

pub const SEPARATOR: &str = "|||";

/// Whether unseen tokens grow the vocabulary or map to `<unk>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VocabMode {
    Extend,
    Frozen,
}

fn split_line(line: &str, line_no: usize) -> Result<(&str, &str), CorpusError> {
    line.split_once(SEPARATOR).ok_or_else(|| CorpusError::Parse {
        line: line_no,
        message: format!("missing ' {SEPARATOR} ' separator"),
    })
}

/// Parses bitext lines from any reader. Blank lines are rejected because
/// every line is a pair.
pub fn parse_bitext<R: BufRead>(
    reader: R,
    vocab: &mut Vocab,
    mode: VocabMode,
) -> Result<Vec<SentencePair>, CorpusError> {
    let mut pairs = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let (src, tgt) = split_line(&line, line_no)?;
        let mut ids = |side: &str| -> Vec<u32> {
            side.split_whitespace()
                .map(|tok| match mode {
                    VocabMode::Extend => vocab.insert(tok),
                    VocabMode::Frozen => vocab.lookup_or_unk(tok),
                })
                .collect()
        };
        let src = ids(src);
        let tgt = ids(tgt);
        let pair = SentencePair::new(src, tgt).map_err(|_| CorpusError::Parse {
            line: line_no,
            message: "empty source or target side".into(),
        })?;
        pairs.push(pair);
    }
    Ok(pairs)
}

pub fn read_bitext(
    path: impl AsRef<Path>,
    vocab: &mut Vocab,
    mode: VocabMode,
) -> Result<Vec<SentencePair>, CorpusError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| CorpusError::io(path, e))?;
    parse_bitext(BufReader::new(file), vocab, mode)
}

pub fn write_bitext<W: Write>(
    mut out: W,
    pairs: &[SentencePair],
    vocab: &Vocab,
) -> std::io::Result<()> {
    let render = |ids: &[u32]| {
        ids.iter()
            .map(|&id| vocab.token_of(id).unwrap_or(super::vocab::UNK))
            .collect::<Vec<_>>()
            .join(" ")
    };
    for pair in pairs {
        writeln!(out, "{} {SEPARATOR} {}", render(&pair.src), render(&pair.tgt))?;
    }
    Ok(())
}

pub type WordMaps = (Vec<usize>, Vec<usize>);

pub fn parse_word_maps<R: BufRead>(reader: R) -> Result<Vec<WordMaps>, CorpusError> {
    let mut maps = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let (src, tgt) = split_line(&line, line_no)?;
        let parse = |side: &str| -> Result<Vec<usize>, CorpusError> {
            side.split_whitespace()
                .map(|tok| {
                    tok.parse::<usize>().map_err(|_| CorpusError::Parse {
                        line: line_no,
                        message: format!("bad word index {tok:?}"),
                    })
                })
                .collect()
        };
        maps.push((parse(src)?, parse(tgt)?));
    }
    Ok(maps)
}

pub fn read_word_maps(path: impl AsRef<Path>) -> Result<Vec<WordMaps>, CorpusError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| CorpusError::io(path, e))?;
    parse_word_maps(BufReader::new(file))
}

/// Attaches sidecar word maps to pairs, checking counts and lengths.
pub fn attach_word_maps(
    pairs: Vec<SentencePair>,
    maps: Vec<WordMaps>,
) -> Result<Vec<SentencePair>, CorpusError> {
    if pairs.len() != maps.len() {
        return Err(CorpusError::WordMap(format!(
            "pairs: bitext={} word-maps={}",
            pairs.len(),
            maps.len()
        )));
    }
    pairs
        .into_iter()
        .zip(maps)
        .map(|(pair, (s, t))| pair.with_word_maps(s, t))
        .collect()
}
