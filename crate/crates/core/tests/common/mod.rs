//! Independent oracles shared by the integration tests and the acceptance
//! runner. Nothing here calls the code paths it checks.
#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use xalign::align::{AlignSet, Direction};
use xalign::corpus::{SentencePair, Vocab};
use xalign::neural::{
    backward, dwa_loss, dwa_queries, encode, mlm_loss, EncoderConfig, Gradients, HiddenGrads, Input,
    Precision, QueryPolicy, Weights,
};

// ---------------------------------------------------------------- AER

pub type Links = BTreeSet<(usize, usize)>;

/// AER, precision and recall straight from set comprehensions.
pub fn naive_aer(a: &Links, s: &Links, p: &Links) -> (f64, f64, f64) {
    let a_s = a.iter().filter(|l| s.contains(l)).count() as f64;
    let a_p = a.iter().filter(|l| p.contains(l)).count() as f64;
    let aer = if a.is_empty() && s.is_empty() {
        0.0
    } else {
        1.0 - (a_s + a_p) / (a.len() + s.len()) as f64
    };
    let precision = if a.is_empty() { 1.0 } else { a_p / a.len() as f64 };
    let recall = if s.is_empty() { 1.0 } else { a_s / s.len() as f64 };
    (aer, precision, recall)
}

pub fn random_links<R: Rng>(rng: &mut R, n: usize, m: usize, density: f64) -> Links {
    let mut out = Links::new();
    for i in 0..n {
        for j in 0..m {
            if rng.gen::<f64>() < density {
                out.insert((i, j));
            }
        }
    }
    out
}

pub fn to_set(links: &Links) -> AlignSet {
    AlignSet::from_links(Direction::Bidirectional, links.iter().copied())
}

// ---------------------------------------------------------------- OT

/// `Σ A·sim − μ Σ A (ln A − 1)`, with `0 ln 0 = 0`, the entropic objective
/// being maximized over doubly stochastic plans.
pub fn ot_objective(plan: &[Vec<f64>], sim: &[Vec<f64>], mu: f64) -> f64 {
    let mut total = 0.0;
    for (prow, srow) in plan.iter().zip(sim) {
        for (&a, &s) in prow.iter().zip(srow) {
            total += a * s;
            if a > 0.0 {
                total -= mu * a * (a.ln() - 1.0);
            }
        }
    }
    total
}

/// Maximizes the entropic objective over doubly stochastic square matrices.
///
/// 2×2 plans are `[[t, 1-t], [1-t, t]]`, so a dense grid followed by golden
/// section search is exhaustive. Larger plans use projected gradient ascent
/// with an alternating-projection step onto the Birkhoff polytope.
pub fn brute_force_ot(sim: &[Vec<f64>], mu: f64) -> (Vec<Vec<f64>>, f64) {
    let n = sim.len();
    assert!(sim.iter().all(|r| r.len() == n), "square matrices only");
    if n == 2 {
        let f = |t: f64| ot_objective(&[vec![t, 1.0 - t], vec![1.0 - t, t]], sim, mu);
        let grid = 2000;
        let best = (0..=grid)
            .map(|k| k as f64 / grid as f64)
            .max_by(|a, b| f(*a).total_cmp(&f(*b)))
            .unwrap();
        let (mut lo, mut hi) = ((best - 1.0 / grid as f64).max(0.0), (best + 1.0 / grid as f64).min(1.0));
        let g = (5f64.sqrt() - 1.0) / 2.0;
        for _ in 0..200 {
            let x1 = hi - g * (hi - lo);
            let x2 = lo + g * (hi - lo);
            if f(x1) < f(x2) {
                lo = x1;
            } else {
                hi = x2;
            }
        }
        let t = (lo + hi) / 2.0;
        let plan = vec![vec![t, 1.0 - t], vec![1.0 - t, t]];
        let v = ot_objective(&plan, sim, mu);
        return (plan, v);
    }
    let mut plan = vec![vec![1.0 / n as f64; n]; n];
    let mut step = 0.05;
    let mut value = ot_objective(&plan, sim, mu);
    for _ in 0..20_000 {
        let grad: Vec<Vec<f64>> = plan
            .iter()
            .zip(sim)
            .map(|(pr, sr)| pr.iter().zip(sr).map(|(&a, &s)| s - mu * a.max(1e-300).ln()).collect())
            .collect();
        let candidate: Vec<Vec<f64>> = plan
            .iter()
            .zip(&grad)
            .map(|(pr, gr)| pr.iter().zip(gr).map(|(a, g)| a + step * g).collect())
            .collect();
        let candidate = project_birkhoff(candidate);
        let cv = ot_objective(&candidate, sim, mu);
        if cv > value {
            plan = candidate;
            value = cv;
            step *= 1.2;
        } else {
            step *= 0.5;
            if step < 1e-14 {
                break;
            }
        }
    }
    (plan, value)
}

/// Euclidean projection onto doubly stochastic matrices via Dykstra's
/// alternating projections between the affine marginal set and the
/// nonnegative orthant.
pub fn project_birkhoff(mut x: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let n = x.len();
    let mut q = vec![vec![0.0; n]; n];
    for _ in 0..2000 {
        // Affine projection onto row and column sums equal to one.
        let rows: Vec<f64> = x.iter().map(|r| r.iter().sum()).collect();
        let cols: Vec<f64> = (0..n).map(|j| x.iter().map(|r| r[j]).sum()).collect();
        let total: f64 = rows.iter().sum();
        let nf = n as f64;
        let mut y = x.clone();
        for i in 0..n {
            for j in 0..n {
                y[i][j] += (1.0 - rows[i]) / nf + (1.0 - cols[j]) / nf + (total - nf) / (nf * nf);
            }
        }
        // Nonnegativity with Dykstra correction.
        let mut change = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let z = y[i][j] + q[i][j];
                let c = z.max(0.0);
                q[i][j] = z - c;
                change = change.max((c - x[i][j]).abs());
                x[i][j] = c;
            }
        }
        if change < 1e-15 {
            break;
        }
    }
    x
}

// ---------------------------------------------------------------- softmax

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let z: f64 = exps.iter().sum();
    exps.iter().map(|e| e / z).collect()
}

pub fn naive_matmul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let k = b.len();
    a.iter()
        .map(|row| {
            (0..b[0].len())
                .map(|j| (0..k).map(|t| row[t] * b[t][j]).sum())
                .collect()
        })
        .collect()
}

// ---------------------------------------------------------------- Adam

/// Textbook AdamW on one scalar parameter.
pub struct ScalarAdam {
    pub lr: f64,
    pub b1: f64,
    pub b2: f64,
    pub eps: f64,
    pub wd: f64,
    m: f64,
    v: f64,
    t: i32,
}

impl ScalarAdam {
    pub fn new(lr: f64, b1: f64, b2: f64, eps: f64, wd: f64) -> Self {
        ScalarAdam { lr, b1, b2, eps, wd, m: 0.0, v: 0.0, t: 0 }
    }

    pub fn step(&mut self, w: f64, g: f64, lr: f64) -> f64 {
        self.t += 1;
        self.m = self.b1 * self.m + (1.0 - self.b1) * g;
        self.v = self.b2 * self.v + (1.0 - self.b2) * g * g;
        let m_hat = self.m / (1.0 - self.b1.powi(self.t));
        let v_hat = self.v / (1.0 - self.b2.powi(self.t));
        w - lr * (m_hat / (v_hat.sqrt() + self.eps) + self.wd * w)
    }
}

// ---------------------------------------------------------------- gradients

/// Relative error with a floor on the denominator so parameters whose true
/// gradient is ~0 are judged on absolute error.
pub const REL_FLOOR: f64 = 1e-6;

pub fn rel_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_FLOOR)
}

/// Which loss terms a gradient-check fixture evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Terms {
    pub mlm: bool,
    pub tlm: bool,
    pub dwa: bool,
}

impl Terms {
    pub const ALL: Terms = Terms { mlm: true, tlm: true, dwa: true };
    pub const MLM: Terms = Terms { mlm: true, tlm: false, dwa: false };
    pub const TLM: Terms = Terms { mlm: false, tlm: true, dwa: false };
    pub const DWA: Terms = Terms { mlm: false, tlm: false, dwa: true };
}

/// A fixed monolingual sentence and a perturbed pair with labels, on the
/// desk-scale encoder in 64-bit precision.
pub struct GradFixture {
    pub weights: Weights,
    pub mono: Vec<u32>,
    pub mono_targets: Vec<(usize, u32)>,
    pub pair: Vec<u32>,
    pub pair_targets: Vec<(usize, u32)>,
    pub masked: BTreeSet<usize>,
    pub labels: AlignSet,
    pub n: usize,
    pub m: usize,
    pub dwa_layer: usize,
}

impl GradFixture {
    pub fn new<R: Rng>(rng: &mut R, dwa_layer: Option<usize>) -> Self {
        let vocab = 40;
        let mut cfg = EncoderConfig::desk(vocab);
        cfg.precision = Precision::F64;
        let layers = cfg.layers;
        let mut weights = Weights::init(cfg, rng).unwrap();
        // Move gains and biases off their initial values so every tensor
        // has a generic gradient.
        for v in weights.values.iter_mut() {
            *v += rng.gen_range(-0.1..0.1);
        }
        let regular = Vocab::NUM_SPECIAL..vocab as u32;
        let mut sample = |len: usize| -> Vec<u32> { (0..len).map(|_| rng.gen_range(regular.clone())).collect() };
        let mono = sample(9);
        let pair = SentencePair::new(sample(6), sample(5)).unwrap();
        let (n, m) = (6, 5);
        let clean = pair.concatenated();
        let masked: BTreeSet<usize> = [0, 2, 5, 6, 9].into_iter().collect();
        let mut perturbed = clean.clone();
        for &p in &masked {
            perturbed[p] = Vocab::MASK_ID;
        }
        let mut mono_perturbed = mono.clone();
        mono_perturbed[1] = Vocab::MASK_ID;
        mono_perturbed[4] = Vocab::MASK_ID;
        // (0, 1) and (0, 3) give source position 0 two links.
        let labels = AlignSet::from_links(
            Direction::Bidirectional,
            [(0, 1), (0, 3), (2, 0), (3, 4), (5, 2)],
        );
        GradFixture {
            weights,
            mono_targets: vec![(1, mono[1]), (4, mono[4])],
            mono: mono_perturbed,
            pair_targets: masked.iter().map(|&p| (p, clean[p])).collect(),
            pair: perturbed,
            masked,
            labels,
            n,
            m,
            dwa_layer: dwa_layer.unwrap_or(layers),
        }
    }

    /// Loss and, when `grads` is given, its analytic gradient.
    pub fn loss(&self, weights: &Weights, terms: Terms, grads: Option<&mut Gradients>) -> f64 {
        let mut scratch = Gradients::zeros_like(weights);
        let want = grads.is_some();
        let g = match grads {
            Some(g) => g,
            None => &mut scratch,
        };
        let mut total = 0.0;
        if terms.mlm {
            let trace = encode(weights, &self.mono).unwrap();
            let mut up = HiddenGrads::for_trace(&trace);
            total += mlm_loss(weights, &trace, &self.mono_targets, 1.0, g, &mut up).unwrap();
            if want {
                backward(weights, &trace, &up, g).unwrap();
            }
        }
        if terms.tlm || terms.dwa {
            let trace = encode(weights, Input::pair(&self.pair, self.n)).unwrap();
            let mut up = HiddenGrads::for_trace(&trace);
            if terms.tlm {
                total += mlm_loss(weights, &trace, &self.pair_targets, 1.0, g, &mut up).unwrap();
            }
            if terms.dwa {
                let queries = dwa_queries(
                    &self.labels,
                    |p| self.masked.contains(&p),
                    self.n,
                    self.m,
                    QueryPolicy::Masked,
                    &mut rand_chacha::ChaCha8Rng::seed_from_u64(0),
                )
                .unwrap();
                assert!(!queries.is_empty());
                total += dwa_loss(weights, &trace, self.dwa_layer, &queries, 1.0, g, &mut up).unwrap();
            }
            if want {
                backward(weights, &trace, &up, g).unwrap();
            }
        }
        total
    }

    /// Central difference of the loss in parameter `idx`.
    pub fn numeric(&self, terms: Terms, idx: usize, h: f64) -> f64 {
        let mut w = self.weights.clone();
        let orig = w.values[idx];
        w.values[idx] = orig + h;
        let plus = self.loss(&w, terms, None);
        w.values[idx] = orig - h;
        let minus = self.loss(&w, terms, None);
        (plus - minus) / (2.0 * h)
    }

    /// Parameter indices: `per_tensor` from every tensor, drawn uniformly,
    /// with embedding rows restricted to tokens and positions in use.
    pub fn sample_indices<R: Rng>(&self, rng: &mut R, per_tensor: usize) -> Vec<usize> {
        let layout = &self.weights.layout;
        let d = self.weights.config.hidden;
        let mut used_tokens: Vec<u32> = self.mono.iter().chain(&self.pair).copied().collect();
        used_tokens.sort_unstable();
        used_tokens.dedup();
        let max_pos = self.mono.len().max(self.pair.len());
        let mut out = Vec::new();
        for info in &layout.tensors {
            let slot = info.slot;
            for _ in 0..per_tensor {
                let idx = match info.name.as_str() {
                    "tok_emb" => {
                        let t = used_tokens[rng.gen_range(0..used_tokens.len())] as usize;
                        slot.offset + t * d + rng.gen_range(0..d)
                    }
                    "pos_emb" => slot.offset + rng.gen_range(0..max_pos) * d + rng.gen_range(0..d),
                    "seg_emb" => slot.offset + rng.gen_range(0..slot.len()),
                    _ => slot.offset + rng.gen_range(0..slot.len()),
                };
                out.push(idx);
            }
        }
        out
    }
}

pub fn tensor_of(weights: &Weights, idx: usize) -> String {
    weights
        .layout
        .tensors
        .iter()
        .find(|t| t.slot.range().contains(&idx))
        .map_or_else(|| "?".to_owned(), |t| t.name.clone())
}

// ---------------------------------------------------------------- forward

fn naive_ln(x: &[f64], gain: &[f64], bias: &[f64]) -> Vec<f64> {
    let d = x.len() as f64;
    let mean = x.iter().sum::<f64>() / d;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / d;
    x.iter()
        .zip(gain.iter().zip(bias))
        .map(|(v, (g, b))| g * (v - mean) / (var + 1e-5).sqrt() + b)
        .collect()
}

fn naive_linear(x: &[f64], w: &[f64], b: &[f64]) -> Vec<f64> {
    let out = b.len();
    (0..out)
        .map(|j| b[j] + x.iter().enumerate().map(|(i, xi)| xi * w[i * out + j]).sum::<f64>())
        .collect()
}

/// Hidden states of every layer, computed row by row from the tensor
/// definitions with no shared code.
pub fn naive_forward(weights: &Weights, tokens: &[u32], split: usize) -> Vec<Vec<Vec<f64>>> {
    let cfg = &weights.config;
    let l = &weights.layout;
    let d = cfg.hidden;
    let heads = cfg.heads;
    let dk = d / heads;
    let t_len = tokens.len();
    let tok = weights.get(l.tok_emb);
    let pos = weights.get(l.pos_emb);
    let seg = weights.get(l.seg_emb);
    let mut x: Vec<Vec<f64>> = tokens
        .iter()
        .enumerate()
        .map(|(t, &id)| {
            let (p, s) = if t < split { (t, 0) } else { (t - split, 1) };
            (0..d)
                .map(|c| tok[id as usize * d + c] + pos[p * d + c] + seg[s * d + c])
                .collect()
        })
        .collect();
    let mut states = vec![x.clone()];
    let gelu = |z: f64| 0.5 * z * (1.0 + ((2.0 / std::f64::consts::PI).sqrt() * (z + 0.044715 * z.powi(3))).tanh());
    for ls in &l.layers {
        let g = |s| weights.get(s);
        let h: Vec<Vec<f64>> = x.iter().map(|r| naive_ln(r, g(ls.ln1_gain), g(ls.ln1_bias))).collect();
        let q: Vec<Vec<f64>> = h.iter().map(|r| naive_linear(r, g(ls.wq), g(ls.bq))).collect();
        let k: Vec<Vec<f64>> = h.iter().map(|r| naive_linear(r, g(ls.wk), g(ls.bk))).collect();
        let v: Vec<Vec<f64>> = h.iter().map(|r| naive_linear(r, g(ls.wv), g(ls.bv))).collect();
        let mut ctx = vec![vec![0.0; d]; t_len];
        for head in 0..heads {
            let cols = head * dk..(head + 1) * dk;
            for i in 0..t_len {
                let logits: Vec<f64> = (0..t_len)
                    .map(|j| cols.clone().map(|c| q[i][c] * k[j][c]).sum::<f64>() / (dk as f64).sqrt())
                    .collect();
                let p = softmax(&logits);
                for c in cols.clone() {
                    ctx[i][c] = (0..t_len).map(|j| p[j] * v[j][c]).sum();
                }
            }
        }
        for i in 0..t_len {
            let attn = naive_linear(&ctx[i], g(ls.wo), g(ls.bo));
            let mid: Vec<f64> = x[i].iter().zip(&attn).map(|(a, b)| a + b).collect();
            let h2 = naive_ln(&mid, g(ls.ln2_gain), g(ls.ln2_bias));
            let act: Vec<f64> = naive_linear(&h2, g(ls.w1), g(ls.b1)).into_iter().map(gelu).collect();
            let ffn = naive_linear(&act, g(ls.w2), g(ls.b2));
            x[i] = mid.iter().zip(&ffn).map(|(a, b)| a + b).collect();
        }
        states.push(x.clone());
    }
    states
}
