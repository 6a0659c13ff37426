//! Pre-LN transformer encoder with a hand-written reverse pass.
//!
//! ```text
//! x0 = tok_emb[ids] + pos_emb[pos] + seg_emb[seg]
//! per layer:  x' = x + Drop(Attn(LN1(x)))
//!             y  = x' + Drop(FFN(LN2(x')))
//! ```
//!
//! A sentence pair is encoded as one sequence split into two segments:
//! positions restart at 0 where the second segment begins and each segment
//! adds its own embedding row.
//!
//! `ForwardTrace::hidden[0]` is `x0` and `hidden[l]` is the output of layer
//! `l`, so a trace holds `layers + 1` states.

use rand::Rng;

use super::mat::{gemm, softmax_in_place, Mat, View};
use super::params::{Gradients, LayerSlots, Slot, Weights};
use super::NeuralError;

pub(crate) const LN_EPS: f64 = 1e-5;

/// Per-row statistics of a layer norm, kept for the reverse pass.
#[derive(Debug, Clone)]
pub(crate) struct LnCache {
    pub xhat: Mat,
    pub rstd: Vec<f64>,
}

pub(crate) fn layer_norm(x: &Mat, gain: &[f64], bias: &[f64]) -> (Mat, LnCache) {
    let d = x.cols;
    let mut xhat = Mat::zeros(x.rows, d);
    let mut out = Mat::zeros(x.rows, d);
    let mut rstd = Vec::with_capacity(x.rows);
    for r in 0..x.rows {
        let row = x.row(r);
        let mean = row.iter().sum::<f64>() / d as f64;
        let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / d as f64;
        let rs = 1.0 / (var + LN_EPS).sqrt();
        rstd.push(rs);
        for c in 0..d {
            let h = (row[c] - mean) * rs;
            xhat.data[r * d + c] = h;
            out.data[r * d + c] = gain[c] * h + bias[c];
        }
    }
    (out, LnCache { xhat, rstd })
}

/// Returns `dx` and accumulates gain/bias gradients.
pub(crate) fn layer_norm_backward(
    dy: &Mat,
    cache: &LnCache,
    gain: &[f64],
    dgain: &mut [f64],
    dbias: &mut [f64],
) -> Mat {
    let d = dy.cols;
    let mut dx = Mat::zeros(dy.rows, d);
    let mut dxhat = vec![0.0; d];
    for r in 0..dy.rows {
        let g = dy.row(r);
        let xh = cache.xhat.row(r);
        let mut sum = 0.0;
        let mut dot = 0.0;
        for c in 0..d {
            dgain[c] += g[c] * xh[c];
            dbias[c] += g[c];
            dxhat[c] = g[c] * gain[c];
            sum += dxhat[c];
            dot += dxhat[c] * xh[c];
        }
        let scale = cache.rstd[r] / d as f64;
        for (c, out) in dx.row_mut(r).iter_mut().enumerate() {
            *out = scale * (d as f64 * dxhat[c] - sum - xh[c] * dot);
        }
    }
    dx
}

const GELU_C: f64 = 0.797_884_560_802_865_4; // sqrt(2 / pi)
const GELU_K: f64 = 0.044_715;

fn gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + (GELU_C * (x + GELU_K * x * x * x)).tanh())
}

fn gelu_grad(x: f64) -> f64 {
    let t = (GELU_C * (x + GELU_K * x * x * x)).tanh();
    0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * GELU_C * (1.0 + 3.0 * GELU_K * x * x)
}

#[derive(Debug, Clone)]
pub(crate) struct LayerCache {
    ln1_out: Mat,
    ln1: LnCache,
    q: Mat,
    k: Mat,
    v: Mat,
    /// Attention probabilities, one `T × T` matrix per head.
    probs: Vec<Mat>,
    ctx: Mat,
    attn_mask: Option<Vec<f64>>,
    ln2_out: Mat,
    ln2: LnCache,
    pre: Mat,
    act: Mat,
    ffn_mask: Option<Vec<f64>>,
}

/// Token ids plus the length of the first segment. `split == tokens.len()`
/// is a single-segment (monolingual) input.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Input<'a> {
    pub tokens: &'a [u32],
    pub split: usize,
}

impl<'a> Input<'a> {
    pub fn single(tokens: &'a [u32]) -> Self {
        Input { tokens, split: tokens.len() }
    }

    /// A concatenated pair whose source side has `n` tokens.
    pub fn pair(tokens: &'a [u32], n: usize) -> Self {
        assert!(n <= tokens.len(), "split {n} beyond {} tokens", tokens.len());
        Input { tokens, split: n }
    }

    /// Position and segment of every token.
    pub fn coordinates(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let split = self.split;
        (0..self.tokens.len()).map(move |t| if t < split { (t, 0) } else { (t - split, 1) })
    }
}

impl<'a> From<&'a [u32]> for Input<'a> {
    fn from(tokens: &'a [u32]) -> Self {
        Input::single(tokens)
    }
}

impl<'a> From<&'a Vec<u32>> for Input<'a> {
    fn from(tokens: &'a Vec<u32>) -> Self {
        Input::single(tokens)
    }
}

impl<'a, const N: usize> From<&'a [u32; N]> for Input<'a> {
    fn from(tokens: &'a [u32; N]) -> Self {
        Input::single(tokens)
    }
}

/// Hidden states of every layer for one sequence, plus what the reverse pass
/// needs when the trace was recorded for training.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    pub tokens: Vec<u32>,
    pub split: usize,
    pub hidden: Vec<Mat>,
    pub(crate) caches: Option<Vec<LayerCache>>,
}

impl ForwardTrace {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn top(&self) -> &Mat {
        self.hidden.last().expect("trace holds at least the embeddings")
    }

    pub fn layer(&self, layer: usize) -> Result<&Mat, NeuralError> {
        self.hidden.get(layer).ok_or(NeuralError::LayerOutOfRange {
            layer,
            layers: self.hidden.len() - 1,
        })
    }

    pub fn has_cache(&self) -> bool {
        self.caches.is_some()
    }
}

/// Gradients of a loss with respect to the hidden states of a trace.
#[derive(Debug, Clone)]
pub struct HiddenGrads {
    rows: usize,
    cols: usize,
    layers: Vec<Option<Mat>>,
}

impl HiddenGrads {
    pub fn for_trace(trace: &ForwardTrace) -> Self {
        HiddenGrads {
            rows: trace.len(),
            cols: trace.hidden[0].cols,
            layers: vec![None; trace.hidden.len()],
        }
    }

    pub fn layer_mut(&mut self, layer: usize) -> &mut Mat {
        let (rows, cols) = (self.rows, self.cols);
        self.layers[layer].get_or_insert_with(|| Mat::zeros(rows, cols))
    }

    pub fn layer(&self, layer: usize) -> Option<&Mat> {
        self.layers.get(layer).and_then(Option::as_ref)
    }

    pub fn is_zero(&self) -> bool {
        self.layers.iter().flatten().all(|m| m.data.iter().all(|&x| x == 0.0))
    }
}

fn check_tokens(weights: &Weights, tokens: &[u32]) -> Result<(), NeuralError> {
    let cfg = &weights.config;
    if tokens.is_empty() {
        return Err(NeuralError::EmptySequence);
    }
    if tokens.len() > cfg.max_len {
        return Err(NeuralError::Overlength {
            len: tokens.len(),
            max: cfg.max_len,
        });
    }
    if let Some(&id) = tokens.iter().find(|&&id| id as usize >= cfg.vocab_size) {
        return Err(NeuralError::TokenOutOfRange {
            id,
            vocab: cfg.vocab_size,
        });
    }
    Ok(())
}

fn linear(x: &Mat, weights: &Weights, w: Slot, b: Slot) -> Mat {
    let mut out = Mat::zeros(x.rows, w.cols);
    gemm(1.0, x.view(), View::new(weights.get(w), w.rows, w.cols), 0.0, out.view_mut());
    out.add_row_vector(weights.get(b));
    out
}

fn dropout_mask<R: Rng + ?Sized>(len: usize, p: f64, rng: &mut R) -> Vec<f64> {
    let keep = 1.0 / (1.0 - p);
    (0..len)
        .map(|_| if rng.gen::<f64>() < p { 0.0 } else { keep })
        .collect()
}

fn apply_mask(x: &mut Mat, mask: &Option<Vec<f64>>) {
    if let Some(mask) = mask {
        for (v, m) in x.data.iter_mut().zip(mask) {
            *v *= m;
        }
    }
}

fn layer_forward(
    weights: &Weights,
    slots: &LayerSlots,
    x: &Mat,
    dropout: Option<(f64, &mut dyn rand::RngCore)>,
) -> (Mat, LayerCache) {
    let cfg = &weights.config;
    let (t, d) = (x.rows, x.cols);
    let heads = cfg.heads;
    let dk = cfg.head_dim();
    let scale = 1.0 / (dk as f64).sqrt();

    let (ln1_out, ln1) = layer_norm(x, weights.get(slots.ln1_gain), weights.get(slots.ln1_bias));
    let q = linear(&ln1_out, weights, slots.wq, slots.bq);
    let k = linear(&ln1_out, weights, slots.wk, slots.bk);
    let v = linear(&ln1_out, weights, slots.wv, slots.bv);

    let mut ctx = Mat::zeros(t, d);
    let mut probs = Vec::with_capacity(heads);
    for h in 0..heads {
        let mut p = Mat::zeros(t, t);
        gemm(
            scale,
            q.view().col_block(h * dk, dk),
            k.view().col_block(h * dk, dk).t(),
            0.0,
            p.view_mut(),
        );
        for r in 0..t {
            softmax_in_place(p.row_mut(r));
        }
        gemm(
            1.0,
            p.view(),
            v.view().col_block(h * dk, dk),
            0.0,
            ctx.view_mut().col_block(h * dk, dk),
        );
        probs.push(p);
    }

    let (mut rng, p_drop) = match dropout {
        Some((p, rng)) if p > 0.0 => (Some(rng), p),
        _ => (None, 0.0),
    };

    let mut attn_out = linear(&ctx, weights, slots.wo, slots.bo);
    let attn_mask = rng.as_mut().map(|r| dropout_mask(t * d, p_drop, *r));
    apply_mask(&mut attn_out, &attn_mask);
    let mut mid = x.clone();
    mid.add_assign(&attn_out);

    let (ln2_out, ln2) = layer_norm(&mid, weights.get(slots.ln2_gain), weights.get(slots.ln2_bias));
    let pre = linear(&ln2_out, weights, slots.w1, slots.b1);
    let act = Mat::from_vec(pre.rows, pre.cols, pre.data.iter().map(|&z| gelu(z)).collect());
    let mut ffn_out = linear(&act, weights, slots.w2, slots.b2);
    let ffn_mask = rng.as_mut().map(|r| dropout_mask(t * d, p_drop, *r));
    apply_mask(&mut ffn_out, &ffn_mask);
    let mut out = mid;
    out.add_assign(&ffn_out);

    let cache = LayerCache {
        ln1_out,
        ln1,
        q,
        k,
        v,
        probs,
        ctx,
        attn_mask,
        ln2_out,
        ln2,
        pre,
        act,
        ffn_mask,
    };
    (out, cache)
}

fn embed(weights: &Weights, input: Input<'_>) -> Mat {
    let d = weights.config.hidden;
    let tok = weights.get(weights.layout.tok_emb);
    let pos = weights.get(weights.layout.pos_emb);
    let seg = weights.get(weights.layout.seg_emb);
    let mut x = Mat::zeros(input.tokens.len(), d);
    for (t, (&id, (p, s))) in input.tokens.iter().zip(input.coordinates()).enumerate() {
        let id = id as usize;
        for (c, out) in x.row_mut(t).iter_mut().enumerate() {
            *out = tok[id * d + c] + pos[p * d + c] + seg[s * d + c];
        }
    }
    x
}

fn run(
    weights: &Weights,
    input: Input<'_>,
    mut rng: Option<&mut dyn rand::RngCore>,
    keep_cache: bool,
) -> Result<ForwardTrace, NeuralError> {
    check_tokens(weights, input.tokens)?;
    if input.split > input.tokens.len() {
        return Err(NeuralError::PositionOutOfRange {
            pos: input.split,
            len: input.tokens.len(),
        });
    }
    let p = weights.config.dropout;
    let mut hidden = Vec::with_capacity(weights.config.layers + 1);
    let mut caches = Vec::with_capacity(weights.config.layers);
    hidden.push(embed(weights, input));
    for slots in &weights.layout.layers {
        let dropout = rng.as_mut().map(|r| (p, &mut **r as &mut dyn rand::RngCore));
        let (out, cache) = layer_forward(weights, slots, hidden.last().unwrap(), dropout);
        hidden.push(out);
        if keep_cache {
            caches.push(cache);
        }
    }
    Ok(ForwardTrace {
        tokens: input.tokens.to_vec(),
        split: input.split,
        hidden,
        caches: keep_cache.then_some(caches),
    })
}

/// Deterministic forward pass without dropout, recorded for backprop.
pub fn encode<'a>(weights: &Weights, input: impl Into<Input<'a>>) -> Result<ForwardTrace, NeuralError> {
    run(weights, input.into(), None, true)
}

/// Forward pass with the configured dropout drawn from `rng`.
pub fn encode_train<'a, R: rand::RngCore>(
    weights: &Weights,
    input: impl Into<Input<'a>>,
    rng: &mut R,
) -> Result<ForwardTrace, NeuralError> {
    run(weights, input.into(), Some(rng), true)
}

/// Forward pass keeping only the hidden states. The result cannot be
/// backpropagated.
pub fn hidden_states<'a>(weights: &Weights, input: impl Into<Input<'a>>) -> Result<ForwardTrace, NeuralError> {
    run(weights, input.into(), None, false)
}

fn accumulate_linear_grads(
    input: &Mat,
    dout: &Mat,
    weights: &Weights,
    w: Slot,
    b: Slot,
    grads: &mut Gradients,
) -> Mat {
    gemm(
        1.0,
        input.view().t(),
        dout.view(),
        1.0,
        super::mat::ViewMut::new(grads.get_mut(w), w.rows, w.cols),
    );
    dout.add_col_sums_to(grads.get_mut(b));
    let mut din = Mat::zeros(dout.rows, w.rows);
    gemm(1.0, dout.view(), View::new(weights.get(w), w.rows, w.cols).t(), 0.0, din.view_mut());
    din
}

fn layer_backward(
    weights: &Weights,
    slots: &LayerSlots,
    cache: &LayerCache,
    dy: &Mat,
    grads: &mut Gradients,
) -> Mat {
    let cfg = &weights.config;
    let (t, d) = (dy.rows, dy.cols);
    let dk = cfg.head_dim();
    let scale = 1.0 / (dk as f64).sqrt();

    // Feed-forward branch.
    let mut dffn = dy.clone();
    apply_mask(&mut dffn, &cache.ffn_mask);
    let mut dpre = accumulate_linear_grads(&cache.act, &dffn, weights, slots.w2, slots.b2, grads);
    for (g, &z) in dpre.data.iter_mut().zip(&cache.pre.data) {
        *g *= gelu_grad(z);
    }
    let dln2 = accumulate_linear_grads(&cache.ln2_out, &dpre, weights, slots.w1, slots.b1, grads);
    let (dgain, dbias) = split_pair(grads, slots.ln2_gain, slots.ln2_bias);
    let mut dmid = layer_norm_backward(&dln2, &cache.ln2, weights.get(slots.ln2_gain), dgain, dbias);
    dmid.add_assign(dy);

    // Attention branch.
    let mut dattn = dmid.clone();
    apply_mask(&mut dattn, &cache.attn_mask);
    let dctx = accumulate_linear_grads(&cache.ctx, &dattn, weights, slots.wo, slots.bo, grads);
    let mut dq = Mat::zeros(t, d);
    let mut dk_mat = Mat::zeros(t, d);
    let mut dv = Mat::zeros(t, d);
    for (h, p) in cache.probs.iter().enumerate() {
        let cols = h * dk;
        let mut dp = Mat::zeros(t, t);
        gemm(1.0, dctx.view().col_block(cols, dk), cache.v.view().col_block(cols, dk).t(), 0.0, dp.view_mut());
        gemm(1.0, p.view().t(), dctx.view().col_block(cols, dk), 0.0, dv.view_mut().col_block(cols, dk));
        // Softmax Jacobian, row by row.
        for r in 0..t {
            let prow = p.row(r);
            let dprow = dp.row_mut(r);
            let dot: f64 = prow.iter().zip(dprow.iter()).map(|(a, b)| a * b).sum();
            for (g, &pv) in dprow.iter_mut().zip(prow) {
                *g = pv * (*g - dot);
            }
        }
        let ds = dp;
        gemm(scale, ds.view(), cache.k.view().col_block(cols, dk), 0.0, dq.view_mut().col_block(cols, dk));
        gemm(scale, ds.view().t(), cache.q.view().col_block(cols, dk), 0.0, dk_mat.view_mut().col_block(cols, dk));
    }
    let mut dln1 = accumulate_linear_grads(&cache.ln1_out, &dq, weights, slots.wq, slots.bq, grads);
    dln1.add_assign(&accumulate_linear_grads(&cache.ln1_out, &dk_mat, weights, slots.wk, slots.bk, grads));
    dln1.add_assign(&accumulate_linear_grads(&cache.ln1_out, &dv, weights, slots.wv, slots.bv, grads));
    let (dgain, dbias) = split_pair(grads, slots.ln1_gain, slots.ln1_bias);
    let mut dx = layer_norm_backward(&dln1, &cache.ln1, weights.get(slots.ln1_gain), dgain, dbias);
    dx.add_assign(&dmid);
    dx
}

/// Mutable access to two adjacent, non-overlapping slots.
pub(crate) fn split_pair(grads: &mut Gradients, first: Slot, second: Slot) -> (&mut [f64], &mut [f64]) {
    assert!(first.offset + first.len() <= second.offset);
    let (head, tail) = grads.values.split_at_mut(second.offset);
    (&mut head[first.range()], &mut tail[..second.len()])
}

/// Backpropagates `upstream` (gradients on any hidden states of `trace`)
/// through the encoder, accumulating parameter gradients into `grads`.
pub fn backward(
    weights: &Weights,
    trace: &ForwardTrace,
    upstream: &HiddenGrads,
    grads: &mut Gradients,
) -> Result<(), NeuralError> {
    let caches = trace.caches.as_ref().ok_or(NeuralError::MissingTrace)?;
    let layers = weights.layout.layers.len();
    let (t, d) = (trace.len(), weights.config.hidden);
    if upstream.layers.iter().all(Option::is_none) {
        return Ok(());
    }

    let mut dx = upstream.layer(layers).cloned().unwrap_or_else(|| Mat::zeros(t, d));
    for l in (0..layers).rev() {
        dx = layer_backward(weights, &weights.layout.layers[l], &caches[l], &dx, grads);
        if let Some(extra) = upstream.layer(l) {
            dx.add_assign(extra);
        }
    }

    let layout = &weights.layout;
    let input = Input::pair(&trace.tokens, trace.split);
    for (row, (&id, (p, s))) in trace.tokens.iter().zip(input.coordinates()).enumerate() {
        let g = dx.row(row);
        for base in [
            layout.tok_emb.offset + id as usize * d,
            layout.pos_emb.offset + p * d,
            layout.seg_emb.offset + s * d,
        ] {
            for (c, v) in g.iter().enumerate() {
                grads.values[base + c] += v;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::{EncoderConfig, Precision};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn small() -> EncoderConfig {
        EncoderConfig {
            layers: 2,
            hidden: 8,
            heads: 2,
            ffn: 16,
            max_len: 12,
            vocab_size: 20,
            precision: Precision::F64,
            dropout: 0.0,
            init_std: 0.3,
        }
    }

    #[test]
    fn trace_shapes() {
        let w = Weights::init(small(), &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let trace = encode(&w, &[5, 6, 7]).unwrap();
        assert_eq!(trace.hidden.len(), 3);
        for h in &trace.hidden {
            assert_eq!((h.rows, h.cols), (3, 8));
        }
    }

    #[test]
    fn rejects_bad_input() {
        let w = Weights::init(small(), &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert!(matches!(encode(&w, &[1; 13]), Err(NeuralError::Overlength { len: 13, max: 12 })));
        assert!(matches!(encode(&w, &[20]), Err(NeuralError::TokenOutOfRange { id: 20, .. })));
        assert!(matches!(encode(&w, &[]), Err(NeuralError::EmptySequence)));
    }

    #[test]
    fn deterministic() {
        let w = Weights::init(small(), &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let a = encode(&w, &[5, 9, 2, 7]).unwrap();
        let b = encode(&w, &[5, 9, 2, 7]).unwrap();
        assert_eq!(a.hidden, b.hidden);
    }

    #[test]
    fn identical_inputs_give_identical_rows() {
        let mut w = Weights::init(small(), &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        w.get_mut(w.layout.pos_emb).fill(0.0);
        let trace = encode(&w, &[4, 4, 4, 4]).unwrap();
        let top = trace.top();
        for r in 1..4 {
            assert_eq!(top.row(r), top.row(0));
        }
    }

    #[test]
    fn zero_positions_make_encoder_permutation_equivariant() {
        let mut w = Weights::init(small(), &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        w.get_mut(w.layout.pos_emb).fill(0.0);
        let a = encode(&w, &[5, 6, 7, 8]).unwrap();
        let b = encode(&w, &[7, 5, 8, 6]).unwrap();
        let perm = [1, 3, 0, 2]; // row r of `a` sits at row perm[r] of `b`
        for (r, &pr) in perm.iter().enumerate() {
            for (x, y) in a.top().row(r).iter().zip(b.top().row(pr)) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn swapping_identical_tokens_with_equal_positions() {
        let mut w = Weights::init(small(), &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let d = w.config.hidden;
        // Give positions 1 and 2 the same embedding.
        let pos = w.layout.pos_emb;
        let row1: Vec<f64> = w.get(pos)[d..2 * d].to_vec();
        w.get_mut(pos)[2 * d..3 * d].copy_from_slice(&row1);
        let a = encode(&w, &[5, 9, 9, 6]).unwrap();
        let b = encode(&w, &[5, 9, 9, 6]).unwrap();
        for r in [0, 3] {
            assert_eq!(a.top().row(r), b.top().row(r));
        }
        assert_eq!(a.top().row(1), a.top().row(2));
    }

    #[test]
    fn backward_requires_cache() {
        let w = Weights::init(small(), &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let trace = hidden_states(&w, &[5, 6]).unwrap();
        let mut up = HiddenGrads::for_trace(&trace);
        up.layer_mut(2).data[0] = 1.0;
        let mut g = Gradients::zeros_like(&w);
        assert!(matches!(backward(&w, &trace, &up, &mut g), Err(NeuralError::MissingTrace)));
    }

    #[test]
    fn zero_upstream_zero_grads() {
        let w = Weights::init(small(), &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let trace = encode(&w, &[5, 6, 7]).unwrap();
        let mut up = HiddenGrads::for_trace(&trace);
        up.layer_mut(2);
        up.layer_mut(1);
        let mut g = Gradients::zeros_like(&w);
        backward(&w, &trace, &up, &mut g).unwrap();
        assert!(g.values.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn dropout_changes_output_only_when_enabled() {
        let mut cfg = small();
        cfg.dropout = 0.5;
        let w = Weights::init(cfg, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let clean = encode(&w, &[5, 6, 7]).unwrap();
        let noisy = encode_train(&w, &[5, 6, 7], &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        assert_ne!(clean.top(), noisy.top());
        let again = encode_train(&w, &[5, 6, 7], &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        assert_eq!(noisy.top(), again.top());
    }
}
