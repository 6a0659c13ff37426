//! Alignment error rate against sure/possible gold links.

mod gold;

use std::collections::BTreeMap;

pub use gold::{parse_gold, read_gold, write_gold, GoldAlignment};

use crate::align::{AlignSet, Direction};

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("subword index {index} outside a word map of length {len} ({side})")]
    SubwordOutOfRange {
        side: &'static str,
        index: usize,
        len: usize,
    },
    #[error("{path}: {source}")]
    File {
        path: std::path::PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Raw link counts; these add across pairs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AerCounts {
    pub hyp: usize,
    pub sure: usize,
    pub hyp_and_sure: usize,
    pub hyp_and_possible: usize,
}

impl std::ops::Add for AerCounts {
    type Output = AerCounts;

    fn add(self, o: AerCounts) -> AerCounts {
        AerCounts {
            hyp: self.hyp + o.hyp,
            sure: self.sure + o.sure,
            hyp_and_sure: self.hyp_and_sure + o.hyp_and_sure,
            hyp_and_possible: self.hyp_and_possible + o.hyp_and_possible,
        }
    }
}

impl std::iter::Sum for AerCounts {
    fn sum<I: Iterator<Item = AerCounts>>(iter: I) -> Self {
        iter.fold(AerCounts::default(), |a, b| a + b)
    }
}

impl AerCounts {
    pub fn of(hyp: &AlignSet, gold: &GoldAlignment) -> Self {
        AerCounts {
            hyp: hyp.len(),
            sure: gold.sure.len(),
            hyp_and_sure: hyp.iter().filter(|&&(i, j)| gold.sure.contains(i, j)).count(),
            hyp_and_possible: hyp.iter().filter(|&&(i, j)| gold.possible.contains(i, j)).count(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalReport {
    pub aer: f64,
    pub precision: f64,
    pub recall: f64,
    pub counts: AerCounts,
}

impl EvalReport {
    /// Scores from integer counts; each ratio is a single division.
    ///
    /// With no hypothesis links precision is 1; with no sure links recall
    /// is 1; with neither the AER is 0.
    pub fn from_counts(counts: AerCounts) -> Self {
        let ratio = |num: usize, den: usize| {
            if den == 0 {
                1.0
            } else {
                num as f64 / den as f64
            }
        };
        let denom = counts.hyp + counts.sure;
        let aer = if denom == 0 {
            0.0
        } else {
            (denom - counts.hyp_and_sure - counts.hyp_and_possible) as f64 / denom as f64
        };
        EvalReport {
            aer,
            precision: ratio(counts.hyp_and_possible, counts.hyp),
            recall: ratio(counts.hyp_and_sure, counts.sure),
            counts,
        }
    }

    pub fn f1(&self) -> f64 {
        if self.precision + self.recall == 0.0 {
            0.0
        } else {
            2.0 * self.precision * self.recall / (self.precision + self.recall)
        }
    }

    /// The fixed-key summary line printed by the command-line tool.
    pub fn summary(&self, pairs: usize) -> String {
        format!(
            "aer={:.4} precision={:.4} recall={:.4} pairs={}",
            self.aer, self.precision, self.recall, pairs
        )
    }
}

/// `AER = 1 − (|A∩S| + |A∩P|) / (|A| + |S|)`, precision against `P`,
/// recall against `S`.
pub fn compute_aer(hyp: &AlignSet, gold: &GoldAlignment) -> EvalReport {
    EvalReport::from_counts(AerCounts::of(hyp, gold))
}

/// Corpus-level scores from summed counts (not averaged per pair).
pub fn corpus_aer<'a, I>(pairs: I) -> EvalReport
where
    I: IntoIterator<Item = (&'a AlignSet, &'a GoldAlignment)>,
{
    EvalReport::from_counts(pairs.into_iter().map(|(h, g)| AerCounts::of(h, g)).sum())
}

/// Evaluates hypotheses keyed by pair id against gold keyed the same way.
/// Ids present on only one side count as an empty set on the other.
pub fn evaluate_corpus(
    hyps: &BTreeMap<usize, AlignSet>,
    gold: &BTreeMap<usize, GoldAlignment>,
) -> (EvalReport, Vec<(usize, EvalReport)>) {
    let empty_hyp = AlignSet::default();
    let empty_gold = GoldAlignment::default();
    let mut ids: Vec<usize> = hyps.keys().chain(gold.keys()).copied().collect();
    ids.sort_unstable();
    ids.dedup();
    let per_pair: Vec<(usize, EvalReport)> = ids
        .into_iter()
        .map(|id| {
            let h = hyps.get(&id).unwrap_or(&empty_hyp);
            let g = gold.get(&id).unwrap_or(&empty_gold);
            (id, compute_aer(h, g))
        })
        .collect();
    let total = EvalReport::from_counts(per_pair.iter().map(|(_, r)| r.counts).sum());
    (total, per_pair)
}

/// Maps subword links to word links: two words are aligned if any of their
/// subwords are.
pub fn project_subword_to_word(
    hyp: &AlignSet,
    src_word_map: &[usize],
    tgt_word_map: &[usize],
) -> Result<AlignSet, EvalError> {
    let mut out = AlignSet::new(hyp.direction);
    for &(i, j) in hyp.iter() {
        let wi = *src_word_map.get(i).ok_or(EvalError::SubwordOutOfRange {
            side: "source",
            index: i,
            len: src_word_map.len(),
        })?;
        let wj = *tgt_word_map.get(j).ok_or(EvalError::SubwordOutOfRange {
            side: "target",
            index: j,
            len: tgt_word_map.len(),
        })?;
        out.insert(wi, wj);
    }
    Ok(out)
}

/// Gold where every planted link is sure.
pub fn sure_only(links: &AlignSet) -> GoldAlignment {
    GoldAlignment::new(links.clone(), AlignSet::new(Direction::Bidirectional))
}
