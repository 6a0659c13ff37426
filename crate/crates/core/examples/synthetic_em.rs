//! Trains on the default synthetic corpus and reports held-out AER.
//!
//! Usage: `cargo run --release --example synthetic_em -- [key=value ...]`
//! with any training config keys, e.g. `steps=200 lr=5e-4`.

use xalign::train::{train, Corpora, Phase, TrainConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let overrides: Vec<String> = std::env::args().skip(1).collect();
    let cfg = TrainConfig::parse(&overrides.join("\n"))?;
    let data = Corpora::from_config(&cfg)?;
    let start = std::time::Instant::now();
    let out = train(&cfg, &data)?;
    for r in out.log.records.iter().filter(|r| r.step % 50 == 0 || r.heldout_aer.is_some()) {
        println!("{}", r.to_tsv_row());
    }
    let n = out.log.phase(Phase::Em).count();
    let first = out.log.mean_over(Phase::Em, 0..50, |r| r.self_label_aer);
    let last = out.log.mean_over(Phase::Em, n.saturating_sub(50)..n, |r| r.self_label_aer);
    println!("first50={first:?} last50={last:?}");
    if let Some(report) = out.heldout {
        println!("heldout {}", report.summary(data.heldout.len()));
    }
    println!("elapsed {:.1}s", start.elapsed().as_secs_f64());
    Ok(())
}
