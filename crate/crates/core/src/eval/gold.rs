use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use super::EvalError;
use crate::align::{AlignSet, Direction, Indexing};

/// Reference links for one pair. Sure links are always also possible.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GoldAlignment {
    pub sure: AlignSet,
    pub possible: AlignSet,
}

impl GoldAlignment {
    pub fn new(sure: AlignSet, possible: AlignSet) -> Self {
        let possible = possible.union(&sure);
        GoldAlignment { sure, possible }
    }

    pub fn add_sure(&mut self, i: usize, j: usize) {
        self.sure.insert(i, j);
        self.possible.insert(i, j);
    }

    pub fn add_possible(&mut self, i: usize, j: usize) {
        self.possible.insert(i, j);
    }
}

/// Parses `sent_id i j [S|P]` lines. A missing tag means sure. Link indices
/// are converted from `indexing` to 0-based; sentence ids are kept as written.
pub fn parse_gold<R: BufRead>(
    reader: R,
    indexing: Indexing,
) -> Result<BTreeMap<usize, GoldAlignment>, EvalError> {
    let mut gold: BTreeMap<usize, GoldAlignment> = BTreeMap::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |message: String| EvalError::Parse {
            line: line_no,
            message,
        };
        let fields: Vec<&str> = line.split_whitespace().collect();
        if !(3..=4).contains(&fields.len()) {
            return Err(bad(format!("expected `sent_id i j [S|P]`, got {line:?}")));
        }
        let num = |s: &str| s.parse::<usize>().map_err(|_| bad(format!("bad number {s:?}")));
        let sent = num(fields[0])?;
        let index = |s: &str| {
            indexing
                .to_internal(num(s)?)
                .ok_or_else(|| bad(format!("index {s} below the file's index base")))
        };
        let (i, j) = (index(fields[1])?, index(fields[2])?);
        let entry = gold.entry(sent).or_default();
        match fields.get(3).copied() {
            None | Some("S") => entry.add_sure(i, j),
            Some("P") => entry.add_possible(i, j),
            Some(tag) => return Err(bad(format!("unknown tag {tag:?}, expected S or P"))),
        }
    }
    Ok(gold)
}

pub fn read_gold(
    path: impl AsRef<Path>,
    indexing: Indexing,
) -> Result<BTreeMap<usize, GoldAlignment>, EvalError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| EvalError::File {
        path: path.to_owned(),
        source,
    })?;
    parse_gold(BufReader::new(file), indexing)
}

/// Writes gold in `sent_id i j S|P` form. Possible-only links get `P`.
pub fn write_gold<W: Write>(
    mut out: W,
    gold: &BTreeMap<usize, GoldAlignment>,
    indexing: Indexing,
) -> std::io::Result<()> {
    for (sent, g) in gold {
        for &(i, j) in g.possible.iter() {
            let tag = if g.sure.contains(i, j) { "S" } else { "P" };
            writeln!(
                out,
                "{sent} {} {} {tag}",
                indexing.to_external(i),
                indexing.to_external(j)
            )?;
        }
    }
    Ok(())
}

impl From<AlignSet> for GoldAlignment {
    fn from(sure: AlignSet) -> Self {
        GoldAlignment::new(sure, AlignSet::new(Direction::Bidirectional))
    }
}
