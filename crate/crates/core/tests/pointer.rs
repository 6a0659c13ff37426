//! Pointer distribution against a matrix-multiply and softmax oracle.

mod common;

use common::{naive_matmul, softmax};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use xalign::corpus::Vocab;
use xalign::neural::{hidden_states, pointer_distribution, EncoderConfig, Input, Precision, Weights};

fn slot_matrix(weights: &Weights, slot: xalign::neural::Slot) -> Vec<Vec<f64>> {
    weights.get(slot).chunks(slot.cols).map(|r| r.to_vec()).collect()
}

#[test]
fn unit_width_example() {
    let cfg = EncoderConfig {
        layers: 1,
        hidden: 1,
        heads: 1,
        ffn: 1,
        max_len: 8,
        vocab_size: Vocab::NUM_SPECIAL as usize + 3,
        precision: Precision::F64,
        dropout: 0.0,
        init_std: 0.0,
    };
    let mut w = Weights::zeros(cfg).unwrap();
    let base = Vocab::NUM_SPECIAL;
    let layout = w.layout.clone();
    w.values[layout.tok_emb.offset + base as usize] = 1.0;
    w.values[layout.tok_emb.offset + base as usize + 1] = 1.0;
    w.values[layout.ptr_wq.offset] = 1.0;
    w.values[layout.ptr_wk.offset] = 1.0;
    // Query token embedding 1; keys with embeddings 1 and 0.
    let tokens = [base, base + 1, base + 2];
    let trace = hidden_states(&w, Input::pair(&tokens, 1)).unwrap();
    let q = trace.layer(0).unwrap().row(0)[0];
    let logits: Vec<f64> = (1..3).map(|j| q * trace.layer(0).unwrap().row(j)[0]).collect();
    assert_eq!(logits, vec![1.0, 0.0]);
    let probs = pointer_distribution(&w, &trace, 0, 0, 1..3).unwrap();
    let expected = softmax(&logits);
    assert!((expected[0] - 0.7311).abs() < 1e-4 && (expected[1] - 0.2689).abs() < 1e-4);
    for (p, e) in probs.iter().zip(&expected) {
        assert!((p - e).abs() < 1e-15);
    }
}

#[test]
fn matches_oracle_on_random_desk_weights() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut cfg = EncoderConfig::desk(30);
    cfg.precision = Precision::F64;
    let w = Weights::init(cfg.clone(), &mut rng).unwrap();
    let tokens: Vec<u32> = (0..11).map(|k| Vocab::NUM_SPECIAL + (k * 7 % 20) as u32).collect();
    let n = 6;
    let trace = hidden_states(&w, Input::pair(&tokens, n)).unwrap();
    let d = cfg.hidden as f64;
    for layer in 0..=cfg.layers {
        let hidden = trace.layer(layer).unwrap();
        let h: Vec<Vec<f64>> = (0..tokens.len()).map(|r| hidden.row(r).to_vec()).collect();
        let q = naive_matmul(&h, &slot_matrix(&w, w.layout.ptr_wq));
        let k = naive_matmul(&h, &slot_matrix(&w, w.layout.ptr_wk));
        for query in 0..n {
            let logits: Vec<f64> = (n..tokens.len())
                .map(|j| q[query].iter().zip(&k[j]).map(|(a, b)| a * b).sum::<f64>() / d.sqrt())
                .collect();
            let expected = softmax(&logits);
            let got = pointer_distribution(&w, &trace, layer, query, n..tokens.len()).unwrap();
            for (g, e) in got.iter().zip(&expected) {
                assert!((g - e).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn rejects_query_inside_keys() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let w = Weights::init(EncoderConfig::desk(30), &mut rng).unwrap();
    let tokens = [5u32, 6, 7, 8];
    let trace = hidden_states(&w, Input::pair(&tokens, 2)).unwrap();
    assert!(pointer_distribution(&w, &trace, 2, 2, 2..4).is_err());
    assert!(pointer_distribution(&w, &trace, 2, 0, 2..2).is_err());
}
