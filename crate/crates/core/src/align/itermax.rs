use super::{AlignMatrix, AlignSet, CoveredCells, Direction};

/// Argmax links over rows (`Forward`) or columns (`Backward`). Ties go to the
/// lowest index.
///
/// # Panics
/// If `direction` is `Bidirectional`; use [`union_alignments`] or
/// [`itermax_filter`] for symmetric sets.
pub fn extract_alignments(plan: &AlignMatrix, direction: Direction) -> AlignSet {
    let (n, m) = (plan.rows(), plan.cols());
    let mut set = AlignSet::new(direction);
    match direction {
        Direction::Forward => {
            for i in 0..n {
                if let Some(j) = argmax((0..m).map(|j| plan.get(i, j))) {
                    set.insert(i, j);
                }
            }
        }
        Direction::Backward => {
            for j in 0..m {
                if let Some(i) = argmax((0..n).map(|i| plan.get(i, j))) {
                    set.insert(i, j);
                }
            }
        }
        Direction::Bidirectional => panic!("extract_alignments needs a single direction"),
    }
    set
}

fn argmax(values: impl Iterator<Item = f64>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (idx, v) in values.enumerate() {
        match best {
            Some((_, b)) if v <= b => {}
            _ => best = Some((idx, v)),
        }
    }
    best.map(|(idx, _)| idx)
}

/// Union of forward and backward argmax links; the unfiltered labeling.
pub fn union_alignments(plan: &AlignMatrix) -> AlignSet {
    let fwd = extract_alignments(plan, Direction::Forward);
    let bwd = extract_alignments(plan, Direction::Backward);
    fwd.union(&bwd)
}

/// Iterative intersect-and-discount filtering with [`CoveredCells::Exclude`].
pub fn itermax_filter(plan: &AlignMatrix, alpha: f64, filter_iters: usize) -> AlignSet {
    itermax_filter_with(plan, alpha, filter_iters, CoveredCells::Exclude)
}

/// Iterative intersect-and-discount filtering.
///
/// Each round adds the links on which the forward and backward argmax agree,
/// then rewrites a private copy of the plan: accepted cells become zero,
/// cells sharing a row or column with an accepted link are handled per
/// `covered`, and the rest are left alone. Discounts compound across rounds.
pub fn itermax_filter_with(plan: &AlignMatrix, alpha: f64, filter_iters: usize, covered: CoveredCells) -> AlignSet {
    itermax_trace_with(plan, alpha, filter_iters, covered)
        .pop()
        .map(|round| round.accepted)
        .unwrap_or_default()
}

/// State after one filtering round, for inspection and tests.
#[derive(Debug, Clone)]
pub struct FilterRound {
    pub forward: AlignSet,
    pub backward: AlignSet,
    /// Cumulative accepted links after this round.
    pub accepted: AlignSet,
    /// Plan after this round's discount.
    pub plan: AlignMatrix,
}

pub fn itermax_trace(plan: &AlignMatrix, alpha: f64, filter_iters: usize) -> Vec<FilterRound> {
    itermax_trace_with(plan, alpha, filter_iters, CoveredCells::Exclude)
}

pub fn itermax_trace_with(
    plan: &AlignMatrix,
    alpha: f64,
    filter_iters: usize,
    covered: CoveredCells,
) -> Vec<FilterRound> {
    let (n, m) = (plan.rows(), plan.cols());
    let mut current = plan.clone();
    let mut accepted = AlignSet::new(Direction::Bidirectional);
    let mut excluded = vec![false; n * m];
    let mut rounds = Vec::with_capacity(filter_iters);
    for _ in 0..filter_iters {
        let forward = extract_alignments(&current, Direction::Forward);
        let backward = extract_alignments(&current, Direction::Backward);
        for &(i, j) in forward.intersection(&backward).iter() {
            if !excluded[i * m + j] {
                accepted.insert(i, j);
            }
        }

        let mut row_used = vec![false; n];
        let mut col_used = vec![false; m];
        for &(i, j) in accepted.iter() {
            row_used[i] = true;
            col_used[j] = true;
        }
        for i in 0..n {
            for j in 0..m {
                let both = row_used[i] && col_used[j];
                if accepted.contains(i, j) || (both && covered == CoveredCells::Exclude) {
                    excluded[i * m + j] = true;
                    current.set(i, j, 0.0);
                } else if row_used[i] || col_used[j] {
                    current.set(i, j, alpha * current.get(i, j));
                }
            }
        }
        rounds.push(FilterRound {
            forward,
            backward,
            accepted: accepted.clone(),
            plan: current.clone(),
        });
    }
    rounds
}
