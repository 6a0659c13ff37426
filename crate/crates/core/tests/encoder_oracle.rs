//! The encoder forward pass against a row-by-row reference.

mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use xalign::neural::{encode, mlm_logits, EncoderConfig, Input, Precision, Weights};

fn random_weights(seed: u64) -> Weights {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cfg = EncoderConfig::desk(30);
    cfg.precision = Precision::F64;
    cfg.init_std = 0.3;
    let mut w = Weights::init(cfg, &mut rng).unwrap();
    for v in w.values.iter_mut() {
        *v += rng.gen_range(-0.2..0.2);
    }
    w
}

#[test]
fn forward_matches_reference() {
    let w = random_weights(1);
    let tokens = [5u32, 9, 13, 5, 22, 7, 8, 29];
    for split in [tokens.len(), 3, 5] {
        let trace = encode(&w, Input::pair(&tokens, split)).unwrap();
        let reference = common::naive_forward(&w, &tokens, split);
        for (layer, (got, want)) in trace.hidden.iter().zip(&reference).enumerate() {
            for (r, row) in want.iter().enumerate() {
                for (c, &v) in row.iter().enumerate() {
                    let g = got.row(r)[c];
                    assert!((g - v).abs() < 1e-10, "layer {layer} row {r} col {c}: {g} vs {v}");
                }
            }
        }
    }
}

#[test]
fn second_segment_positions_restart() {
    let w = random_weights(2);
    // Identical halves in different segments differ only by segment rows.
    let mut zero_seg = w.clone();
    zero_seg.get_mut(zero_seg.layout.seg_emb).fill(0.0);
    let trace = encode(&zero_seg, Input::pair(&[5, 6, 5, 6], 2)).unwrap();
    let h = &trace.hidden[0];
    assert_eq!(h.row(0), h.row(2));
    assert_eq!(h.row(1), h.row(3));
}

#[test]
fn mlm_logits_match_reference() {
    let w = random_weights(3);
    let tokens = [5u32, 9, 13, 1, 22];
    let trace = encode(&w, &tokens).unwrap();
    let logits = mlm_logits(&w, &trace, &[3]);
    let top = &common::naive_forward(&w, &tokens, tokens.len())[w.config.layers][3];
    let l = &w.layout;
    let d = w.config.hidden;
    let gain = w.get(l.final_ln_gain);
    let bias = w.get(l.final_ln_bias);
    let mean = top.iter().sum::<f64>() / d as f64;
    let var = top.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / d as f64;
    let h: Vec<f64> = (0..d).map(|c| gain[c] * (top[c] - mean) / (var + 1e-5).sqrt() + bias[c]).collect();
    let emb = w.get(l.tok_emb);
    let out_bias = w.get(l.out_bias);
    for v in 0..w.config.vocab_size {
        let want: f64 = out_bias[v] + (0..d).map(|c| h[c] * emb[v * d + c]).sum::<f64>();
        assert!((logits.row(0)[v] - want).abs() < 1e-10);
    }
}
