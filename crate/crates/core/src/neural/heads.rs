//! Loss heads: the tied-embedding MLM head (used for both MLM and TLM) and
//! the pointer network for denoising word alignment.

use std::collections::BTreeMap;
use std::ops::Range;

use rand::Rng;

use super::encoder::{layer_norm, layer_norm_backward, split_pair, ForwardTrace, HiddenGrads};
use super::mat::{gemm, softmax_in_place, Mat, View, ViewMut};
use super::params::{Gradients, Weights};
use super::NeuralError;
use crate::align::AlignSet;

/// Logits of the MLM head for the given positions, `positions.len() × vocab`.
pub fn mlm_logits(weights: &Weights, trace: &ForwardTrace, positions: &[usize]) -> Mat {
    let layout = &weights.layout;
    let d = weights.config.hidden;
    let top = trace.top();
    let mut rows = Mat::zeros(positions.len(), d);
    for (k, &p) in positions.iter().enumerate() {
        rows.row_mut(k).copy_from_slice(top.row(p));
    }
    let (normed, _) = layer_norm(&rows, weights.get(layout.final_ln_gain), weights.get(layout.final_ln_bias));
    head_logits(weights, &normed)
}

fn head_logits(weights: &Weights, normed: &Mat) -> Mat {
    let layout = &weights.layout;
    let v = weights.config.vocab_size;
    let emb = View::new(weights.get(layout.tok_emb), v, weights.config.hidden);
    let mut logits = Mat::zeros(normed.rows, v);
    gemm(1.0, normed.view(), emb.t(), 0.0, logits.view_mut());
    logits.add_row_vector(weights.get(layout.out_bias));
    logits
}

/// Mean cross-entropy of the MLM head over `targets` (`(position, original
/// id)` pairs), read from the top layer.
///
/// Gradients of `weight × loss` are added to `grads` (head parameters) and to
/// `upstream` (top hidden state). No targets means zero loss and no gradient.
pub fn mlm_loss(
    weights: &Weights,
    trace: &ForwardTrace,
    targets: &[(usize, u32)],
    weight: f64,
    grads: &mut Gradients,
    upstream: &mut HiddenGrads,
) -> Result<f64, NeuralError> {
    if targets.is_empty() {
        return Ok(0.0);
    }
    let layout = &weights.layout;
    let cfg = &weights.config;
    let (d, v) = (cfg.hidden, cfg.vocab_size);
    for &(p, id) in targets {
        if p >= trace.len() {
            return Err(NeuralError::PositionOutOfRange { pos: p, len: trace.len() });
        }
        if id as usize >= v {
            return Err(NeuralError::TokenOutOfRange { id, vocab: v });
        }
    }

    let top = trace.top();
    let mut rows = Mat::zeros(targets.len(), d);
    for (k, &(p, _)) in targets.iter().enumerate() {
        rows.row_mut(k).copy_from_slice(top.row(p));
    }
    let gain = weights.get(layout.final_ln_gain);
    let (normed, ln_cache) = layer_norm(&rows, gain, weights.get(layout.final_ln_bias));
    let mut probs = head_logits(weights, &normed);

    let count = targets.len() as f64;
    let mut loss = 0.0;
    for (k, &(_, id)) in targets.iter().enumerate() {
        let row = probs.row_mut(k);
        softmax_in_place(row);
        loss -= row[id as usize].ln();
        row[id as usize] -= 1.0;
    }
    loss /= count;
    // `probs` now holds d(loss)/d(logits) up to the scale below.
    let dlogits = {
        let mut g = probs;
        let s = weight / count;
        g.data.iter_mut().for_each(|x| *x *= s);
        g
    };

    dlogits.add_col_sums_to(grads.get_mut(layout.out_bias));
    gemm(
        1.0,
        dlogits.view().t(),
        normed.view(),
        1.0,
        ViewMut::new(grads.get_mut(layout.tok_emb), v, d),
    );
    let mut dnormed = Mat::zeros(targets.len(), d);
    gemm(
        1.0,
        dlogits.view(),
        View::new(weights.get(layout.tok_emb), v, d),
        0.0,
        dnormed.view_mut(),
    );
    let (dgain, dbias) = split_pair(grads, layout.final_ln_gain, layout.final_ln_bias);
    let drows = layer_norm_backward(&dnormed, &ln_cache, gain, dgain, dbias);

    let top_idx = trace.hidden.len() - 1;
    let dtop = upstream.layer_mut(top_idx);
    for (k, &(p, _)) in targets.iter().enumerate() {
        for (a, b) in dtop.row_mut(p).iter_mut().zip(drows.row(k)) {
            *a += b;
        }
    }
    Ok(loss)
}

/// One pointer-network prediction: from `query`, point into `keys` and
/// score the absolute position `target`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PointerQuery {
    pub query: usize,
    pub keys: Range<usize>,
    pub target: usize,
}

/// Which positions act as pointer queries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QueryPolicy {
    /// Aligned positions that were masked.
    Masked,
    /// A random [`UNMASKED_QUERY_RATE`] share of the aligned positions that
    /// were not masked.
    Unmasked,
    /// One randomly chosen side of every link.
    AllAligned,
    /// No queries; disables the pointer loss.
    None,
}

/// Selection probability for each unmasked aligned position under
/// [`QueryPolicy::Unmasked`].
pub const UNMASKED_QUERY_RATE: f64 = 0.15;

/// Query list for a pair of lengths `n`, `m`.
///
/// Labels are source-indexed links `(i, j)`. A source query at `i` points
/// into target keys `n..n+m` aiming at `n + j`; a target query at `n + j`
/// points into source keys `0..n` aiming at `i`. A selected position with
/// several links gets one query per link. `rng` is only drawn from by the
/// `Unmasked` and `AllAligned` policies.
pub fn dwa_queries<R: Rng + ?Sized>(
    labels: &AlignSet,
    is_masked: impl Fn(usize) -> bool,
    n: usize,
    m: usize,
    policy: QueryPolicy,
    rng: &mut R,
) -> Result<Vec<PointerQuery>, NeuralError> {
    labels
        .check_bounds(n, m)
        .map_err(|e| NeuralError::InvalidLabels(e.to_string()))?;
    let forward = |i: usize, j: usize| PointerQuery { query: i, keys: n..n + m, target: n + j };
    let backward = |i: usize, j: usize| PointerQuery { query: n + j, keys: 0..n, target: i };
    let by_position = |selected: &dyn Fn(usize) -> bool| {
        let mut queries: Vec<PointerQuery> =
            labels.iter().filter(|&&(i, _)| selected(i)).map(|&(i, j)| forward(i, j)).collect();
        queries.extend(labels.iter().filter(|&&(_, j)| selected(n + j)).map(|&(i, j)| backward(i, j)));
        queries
    };
    Ok(match policy {
        QueryPolicy::Masked => by_position(&is_masked),
        QueryPolicy::Unmasked => {
            let mut aligned = vec![false; n + m];
            for &(i, j) in labels.iter() {
                aligned[i] = true;
                aligned[n + j] = true;
            }
            let chosen: Vec<bool> = (0..n + m)
                .map(|p| aligned[p] && !is_masked(p) && rng.gen_bool(UNMASKED_QUERY_RATE))
                .collect();
            by_position(&|p| chosen[p])
        }
        QueryPolicy::AllAligned => labels
            .iter()
            .map(|&(i, j)| if rng.gen_bool(0.5) { forward(i, j) } else { backward(i, j) })
            .collect(),
        QueryPolicy::None => Vec::new(),
    })
}

/// Positions that appear as the query of more than one term.
pub fn multi_link_queries(queries: &[PointerQuery]) -> usize {
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for q in queries {
        *counts.entry(q.query).or_default() += 1;
    }
    counts.values().filter(|&&c| c > 1).count()
}

fn check_query(trace: &ForwardTrace, query: usize, keys: &Range<usize>) -> Result<(), NeuralError> {
    if keys.is_empty() {
        return Err(NeuralError::EmptyKeyRange);
    }
    if keys.end > trace.len() || query >= trace.len() {
        return Err(NeuralError::PositionOutOfRange {
            pos: query.max(keys.end.saturating_sub(1)),
            len: trace.len(),
        });
    }
    if keys.contains(&query) {
        return Err(NeuralError::QueryInKeyRange { query });
    }
    Ok(())
}

struct Projections {
    q: Mat,
    k: Mat,
    scale: f64,
}

fn project(weights: &Weights, hidden: &Mat) -> Projections {
    let layout = &weights.layout;
    let d = weights.config.hidden;
    let mut q = Mat::zeros(hidden.rows, d);
    let mut k = Mat::zeros(hidden.rows, d);
    gemm(1.0, hidden.view(), View::new(weights.get(layout.ptr_wq), d, d), 0.0, q.view_mut());
    gemm(1.0, hidden.view(), View::new(weights.get(layout.ptr_wk), d, d), 0.0, k.view_mut());
    Projections { q, k, scale: 1.0 / (d as f64).sqrt() }
}

fn pointer_probs(proj: &Projections, query: usize, keys: &Range<usize>) -> Vec<f64> {
    let qrow = proj.q.row(query);
    let mut logits: Vec<f64> = keys
        .clone()
        .map(|j| proj.scale * qrow.iter().zip(proj.k.row(j)).map(|(a, b)| a * b).sum::<f64>())
        .collect();
    softmax_in_place(&mut logits);
    logits
}

/// Softmax over `keys` of the scaled dot products between the projected
/// query and the projected keys, read from hidden layer `layer`.
pub fn pointer_distribution(
    weights: &Weights,
    trace: &ForwardTrace,
    layer: usize,
    query: usize,
    keys: Range<usize>,
) -> Result<Vec<f64>, NeuralError> {
    check_query(trace, query, &keys)?;
    let proj = project(weights, trace.layer(layer)?);
    Ok(pointer_probs(&proj, query, &keys))
}

/// Summed cross-entropy of the pointer distributions against their targets,
/// read from hidden layer `layer`. Gradients of `weight × loss` go to the
/// pointer projections and to `upstream`.
pub fn dwa_loss(
    weights: &Weights,
    trace: &ForwardTrace,
    layer: usize,
    queries: &[PointerQuery],
    weight: f64,
    grads: &mut Gradients,
    upstream: &mut HiddenGrads,
) -> Result<f64, NeuralError> {
    if queries.is_empty() {
        return Ok(0.0);
    }
    for q in queries {
        check_query(trace, q.query, &q.keys)?;
        if !q.keys.contains(&q.target) {
            return Err(NeuralError::InvalidLabels(format!(
                "target {} outside keys {:?}",
                q.target, q.keys
            )));
        }
    }
    let hidden = trace.layer(layer)?;
    let proj = project(weights, hidden);
    let d = weights.config.hidden;
    let mut dq = Mat::zeros(hidden.rows, d);
    let mut dk = Mat::zeros(hidden.rows, d);
    let mut loss = 0.0;
    for q in queries {
        let mut probs = pointer_probs(&proj, q.query, &q.keys);
        let t = q.target - q.keys.start;
        loss -= probs[t].ln();
        probs[t] -= 1.0;
        let qrow = proj.q.row(q.query);
        for (slot, j) in q.keys.clone().enumerate() {
            let g = weight * proj.scale * probs[slot];
            if g == 0.0 {
                continue;
            }
            let krow = proj.k.row(j);
            let dqrow = dq.row_mut(q.query);
            for (a, b) in dqrow.iter_mut().zip(krow) {
                *a += g * b;
            }
            for (a, b) in dk.row_mut(j).iter_mut().zip(qrow) {
                *a += g * b;
            }
        }
    }

    let layout = &weights.layout;
    gemm(1.0, hidden.view().t(), dq.view(), 1.0, ViewMut::new(grads.get_mut(layout.ptr_wq), d, d));
    gemm(1.0, hidden.view().t(), dk.view(), 1.0, ViewMut::new(grads.get_mut(layout.ptr_wk), d, d));
    let dh = upstream.layer_mut(layer);
    gemm(1.0, dq.view(), View::new(weights.get(layout.ptr_wq), d, d).t(), 1.0, dh.view_mut());
    gemm(1.0, dk.view(), View::new(weights.get(layout.ptr_wk), d, d).t(), 1.0, dh.view_mut());
    Ok(loss)
}
