use std::collections::BTreeSet;
use std::fmt;
use std::io::{BufRead, Write};

use super::AlignError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Forward,
    Backward,
    Bidirectional,
}

/// Index base used by a text alignment file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Indexing {
    ZeroBased,
    OneBased,
}

impl Indexing {
    fn offset(self) -> usize {
        match self {
            Indexing::ZeroBased => 0,
            Indexing::OneBased => 1,
        }
    }

    /// Converts a file index into a 0-based index.
    pub fn to_internal(self, value: usize) -> Option<usize> {
        value.checked_sub(self.offset())
    }

    pub fn to_external(self, value: usize) -> usize {
        value + self.offset()
    }
}

/// A set of `(source index, target index)` links, ordered by `(i, j)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AlignSet {
    links: BTreeSet<(usize, usize)>,
    pub direction: Direction,
}

impl Default for AlignSet {
    fn default() -> Self {
        AlignSet::new(Direction::Bidirectional)
    }
}

impl AlignSet {
    pub fn new(direction: Direction) -> Self {
        AlignSet {
            links: BTreeSet::new(),
            direction,
        }
    }

    pub fn from_links<I>(direction: Direction, links: I) -> Self
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        AlignSet {
            links: links.into_iter().collect(),
            direction,
        }
    }

    /// Returns `true` if the link was new.
    pub fn insert(&mut self, i: usize, j: usize) -> bool {
        self.links.insert((i, j))
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.links.contains(&(i, j))
    }

    pub fn len(&self) -> usize {
        self.links.len()
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &(usize, usize)> + '_ {
        self.links.iter()
    }

    pub fn links(&self) -> &BTreeSet<(usize, usize)> {
        &self.links
    }

    pub fn to_vec(&self) -> Vec<(usize, usize)> {
        self.links.iter().copied().collect()
    }

    pub fn intersection(&self, other: &AlignSet) -> AlignSet {
        AlignSet::from_links(
            Direction::Bidirectional,
            self.links.intersection(&other.links).copied(),
        )
    }

    pub fn union(&self, other: &AlignSet) -> AlignSet {
        AlignSet::from_links(
            Direction::Bidirectional,
            self.links.union(&other.links).copied(),
        )
    }

    pub fn extend(&mut self, other: &AlignSet) {
        self.links.extend(other.links.iter().copied());
    }

    /// Checks every link against an `n × m` index space.
    pub fn check_bounds(&self, n: usize, m: usize) -> Result<(), AlignError> {
        match self.links.iter().find(|&&(i, j)| i >= n || j >= m) {
            Some(&(i, j)) => Err(AlignError::LinkOutOfRange { i, j, n, m }),
            None => Ok(()),
        }
    }

    /// Renders one Pharaoh line: space-separated `i-j` links sorted by `(i, j)`.
    pub fn to_pharaoh(&self, indexing: Indexing) -> String {
        self.links
            .iter()
            .map(|&(i, j)| format!("{}-{}", indexing.to_external(i), indexing.to_external(j)))
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// Parses one Pharaoh line. `line_no` is only used in error messages.
    pub fn from_pharaoh(line: &str, indexing: Indexing, line_no: usize) -> Result<Self, AlignError> {
        let mut set = AlignSet::new(Direction::Bidirectional);
        for item in line.split_whitespace() {
            let bad = || AlignError::Parse {
                line: line_no,
                message: format!("bad link {item:?}"),
            };
            // Some tools mark possible links as `i?j`; both are read as links.
            let (i, j) = item
                .split_once('-')
                .or_else(|| item.split_once('?'))
                .ok_or_else(bad)?;
            let i = i.parse::<usize>().map_err(|_| bad())?;
            let j = j.parse::<usize>().map_err(|_| bad())?;
            let i = indexing.to_internal(i).ok_or_else(bad)?;
            let j = indexing.to_internal(j).ok_or_else(bad)?;
            set.insert(i, j);
        }
        Ok(set)
    }
}

impl fmt::Display for AlignSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_pharaoh(Indexing::ZeroBased))
    }
}

impl<'a> IntoIterator for &'a AlignSet {
    type Item = &'a (usize, usize);
    type IntoIter = std::collections::btree_set::Iter<'a, (usize, usize)>;

    fn into_iter(self) -> Self::IntoIter {
        self.links.iter()
    }
}

pub fn read_pharaoh<R: BufRead>(reader: R, indexing: Indexing) -> Result<Vec<AlignSet>, AlignError> {
    reader
        .lines()
        .enumerate()
        .map(|(idx, line)| AlignSet::from_pharaoh(&line?, indexing, idx + 1))
        .collect()
}

pub fn write_pharaoh<W: Write>(
    mut out: W,
    sets: &[AlignSet],
    indexing: Indexing,
) -> std::io::Result<()> {
    for set in sets {
        writeln!(out, "{}", set.to_pharaoh(indexing))?;
    }
    Ok(())
}
