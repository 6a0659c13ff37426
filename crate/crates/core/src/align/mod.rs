//! Word-alignment self-labeling with entropic optimal transport.
//!
//! Pipeline: cosine-style similarity → Sinkhorn plan → argmax links →
//! iterative filtering. All arithmetic is `f64`.

mod itermax;
mod links;
mod matrix;
mod sinkhorn;

pub use itermax::{
    extract_alignments, itermax_filter, itermax_filter_with, itermax_trace, itermax_trace_with,
    union_alignments, FilterRound,
};
pub use links::{read_pharaoh, write_pharaoh, AlignSet, Direction, Indexing};
pub use matrix::{AlignMatrix, MatrixRole};
pub use sinkhorn::{entropic_objective, gibbs_kernel, sinkhorn, SinkhornState};

#[derive(Debug, thiserror::Error)]
pub enum AlignError {
    #[error("hidden vectors have mismatched dimensions ({expected} vs {found})")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("cannot align an empty sentence")]
    Empty,
    #[error("invalid aligner configuration: {0}")]
    InvalidConfig(String),
    #[error("non-finite or non-positive values in sinkhorn at iteration {iteration}")]
    Numerical { iteration: usize },
    #[error("link ({i}, {j}) outside a {n}x{m} pair")]
    LinkOutOfRange {
        i: usize,
        j: usize,
        n: usize,
        m: usize,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// How argmax links are turned into labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterMode {
    /// Iterative intersect-and-discount filtering.
    Itermax,
    /// Union of forward and backward links, no filtering.
    Union,
}

/// Treatment of a cell whose row and column both hold accepted links.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CoveredCells {
    /// Zeroed and never accepted; only cells with exactly one covered side
    /// are discounted.
    #[default]
    Exclude,
    /// Discounted like any other cell sharing a row or column with a link.
    Discount,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlignerConfig {
    /// Entropic regularization weight.
    pub mu: f64,
    /// Floor applied to similarities before the log.
    pub epsilon: f64,
    pub sinkhorn_iters: usize,
    pub filter_iters: usize,
    /// Discount applied to cells sharing a row or column with a label.
    pub alpha: f64,
    /// Encoder layer whose hidden states feed the similarity.
    /// `None` means the top layer.
    pub layer: Option<usize>,
    pub filter: FilterMode,
    pub covered: CoveredCells,
}

impl Default for AlignerConfig {
    fn default() -> Self {
        AlignerConfig {
            mu: 1.0,
            epsilon: 1e-4,
            sinkhorn_iters: 2,
            filter_iters: 2,
            alpha: 0.9,
            layer: None,
            filter: FilterMode::Itermax,
            covered: CoveredCells::Exclude,
        }
    }
}

impl AlignerConfig {
    pub fn validate(&self) -> Result<(), AlignError> {
        let bad = |msg: String| Err(AlignError::InvalidConfig(msg));
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return bad(format!("mu must be positive, got {}", self.mu));
        }
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return bad(format!("epsilon must be in (0, 1], got {}", self.epsilon));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return bad(format!("alpha must be in (0, 1], got {}", self.alpha));
        }
        if self.sinkhorn_iters == 0 || self.filter_iters == 0 {
            return bad("iteration counts must be at least 1".into());
        }
        Ok(())
    }
}

fn normalized(v: &[f64]) -> Vec<f64> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter().map(|x| x / norm).collect()
    } else {
        v.to_vec()
    }
}

/// `log max(epsilon, ĥᵢ·ĥⱼ)` over L2-normalized source and target vectors.
/// Zero vectors stay zero and fall to the floor.
pub fn similarity_matrix<S, T>(src: &[S], tgt: &[T], epsilon: f64) -> Result<AlignMatrix, AlignError>
where
    S: AsRef<[f64]>,
    T: AsRef<[f64]>,
{
    if src.is_empty() || tgt.is_empty() {
        return Err(AlignError::Empty);
    }
    if !(epsilon > 0.0) {
        return Err(AlignError::InvalidConfig(format!("epsilon must be positive, got {epsilon}")));
    }
    let dim = src[0].as_ref().len();
    for v in src.iter().map(AsRef::as_ref).chain(tgt.iter().map(AsRef::as_ref)) {
        if v.len() != dim {
            return Err(AlignError::DimensionMismatch {
                expected: dim,
                found: v.len(),
            });
        }
    }
    let src: Vec<Vec<f64>> = src.iter().map(|v| normalized(v.as_ref())).collect();
    let tgt: Vec<Vec<f64>> = tgt.iter().map(|v| normalized(v.as_ref())).collect();
    let mut sim = AlignMatrix::zeros(src.len(), tgt.len(), MatrixRole::Similarity);
    for (i, s) in src.iter().enumerate() {
        for (j, t) in tgt.iter().enumerate() {
            let dot: f64 = s.iter().zip(t).map(|(a, b)| a * b).sum();
            sim.set(i, j, dot.max(epsilon).ln());
        }
    }
    Ok(sim)
}

/// Labels links for one pair from the hidden states of its unperturbed
/// `[src, tgt]` encoding: rows `0..n` are source tokens, the rest target.
pub fn self_label<H: AsRef<[f64]>>(
    hidden: &[H],
    n: usize,
    cfg: &AlignerConfig,
) -> Result<AlignSet, AlignError> {
    cfg.validate()?;
    if n == 0 || n >= hidden.len() {
        return Err(AlignError::Empty);
    }
    let (src, tgt) = hidden.split_at(n);
    let sim = similarity_matrix(src, tgt, cfg.epsilon)?;
    let (plan, _) = sinkhorn(&sim, cfg.mu, cfg.sinkhorn_iters)?;
    Ok(label_plan(&plan, cfg))
}

/// Applies the configured filter to a transport plan.
pub fn label_plan(plan: &AlignMatrix, cfg: &AlignerConfig) -> AlignSet {
    match cfg.filter {
        FilterMode::Itermax => itermax_filter_with(plan, cfg.alpha, cfg.filter_iters, cfg.covered),
        FilterMode::Union => union_alignments(plan),
    }
}
