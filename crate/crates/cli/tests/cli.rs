use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use xalign::emb::{save_emb, PairEmbeddings};

fn xalign(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_xalign")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// One-hot rows so that token k of the source matches token `perm[k]` of the
/// target.
fn one_hot_pair(n: usize, perm: &[usize], dim: usize) -> PairEmbeddings {
    let mut src = vec![0.0; n * dim];
    let mut tgt = vec![0.0; perm.len() * dim];
    for i in 0..n {
        src[i * dim + i] = 1.0;
        tgt[perm[i] * dim + i] = 1.0;
    }
    PairEmbeddings::new(dim, src, tgt)
}

#[test]
fn align_from_embeddings_preserves_order() {
    let dir = tempfile::tempdir().unwrap();
    let bitext = dir.path().join("b.txt");
    fs::write(&bitext, "a b ||| x y\na b c ||| x y z\nd e ||| u v\n").unwrap();
    let emb = dir.path().join("e.emb");
    let pairs = vec![one_hot_pair(2, &[0, 1], 4), one_hot_pair(3, &[2, 0, 1], 4), one_hot_pair(2, &[1, 0], 4)];
    save_emb(&emb, 4, &pairs).unwrap();
    let one = xalign(&["align", "--bitext", p(&bitext), "--embeddings", p(&emb), "--filter-iters", "1"]);
    assert!(one.status.success(), "{}", stderr(&one));
    assert_eq!(stdout(&one), "0-0 1-1\n0-2 1-0 2-1\n0-1 1-0\n");
    let one_based = xalign(&[
        "align", "--bitext", p(&bitext), "--embeddings", p(&emb), "--filter-iters", "1", "--indexing", "one",
    ]);
    assert_eq!(stdout(&one_based), "1-1 2-2\n1-3 2-1 3-2\n1-2 2-1\n");

    let defaults = xalign(&["align", "--bitext", p(&bitext), "--embeddings", p(&emb)]);
    assert_eq!(stdout(&defaults), stdout(&one));
    let explicit = xalign(&[
        "align", "--bitext", p(&bitext), "--embeddings", p(&emb), "--mu", "1.0", "--sinkhorn-iters", "2",
        "--filter-iters", "2", "--alpha", "0.9",
    ]);
    assert_eq!(stdout(&explicit), stdout(&defaults));

    let discount = xalign(&["align", "--bitext", p(&bitext), "--embeddings", p(&emb), "--covered-cells", "discount"]);
    assert!(discount.status.success(), "{}", stderr(&discount));
    assert_eq!(stdout(&discount).lines().next(), Some("0-0 0-1 1-0 1-1"));
}

#[test]
fn align_rejects_count_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let bitext = dir.path().join("b.txt");
    fs::write(&bitext, "a ||| x\nb ||| y\nc ||| z\n").unwrap();
    let emb = dir.path().join("e.emb");
    save_emb(&emb, 2, &[one_hot_pair(1, &[0], 2), one_hot_pair(1, &[0], 2)]).unwrap();
    let out = xalign(&["align", "--bitext", p(&bitext), "--embeddings", p(&emb)]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("pairs: bitext=3 embeddings=2"), "{}", stderr(&out));
}

#[test]
fn align_projects_subwords_to_words() {
    let dir = tempfile::tempdir().unwrap();
    let bitext = dir.path().join("b.txt");
    fs::write(&bitext, "a ##b c ||| x y\n").unwrap();
    let maps = dir.path().join("m.txt");
    fs::write(&maps, "0 0 1 ||| 0 1\n").unwrap();
    let emb = dir.path().join("e.emb");
    // Subwords 0 and 1 both resemble target 0; token 2 resembles target 1.
    let src = vec![1.0, 0.0, 0.9, 0.1, 0.0, 1.0];
    let tgt = vec![1.0, 0.0, 0.0, 1.0];
    save_emb(&emb, 2, &[PairEmbeddings::new(2, src, tgt)]).unwrap();
    let out = xalign(&["align", "--bitext", p(&bitext), "--embeddings", p(&emb), "--word-maps", p(&maps)]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(stdout(&out), "0-0 1-1\n");
}

#[test]
fn usage_errors_exit_two() {
    let out = xalign(&["align", "--bitext", "x"]);
    assert_eq!(out.status.code(), Some(2));
    let out = xalign(&["align", "--bitext", "x", "--embeddings", "e", "--checkpoint", "c"]);
    assert_eq!(out.status.code(), Some(2));
    let out = xalign(&["eval-aer", "--nope"]);
    assert_eq!(out.status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let bitext = dir.path().join("b.txt");
    fs::write(&bitext, "a ||| x\n").unwrap();
    let emb = dir.path().join("e.emb");
    save_emb(&emb, 2, &[one_hot_pair(1, &[0], 2)]).unwrap();
    let out = xalign(&["align", "--bitext", p(&bitext), "--embeddings", p(&emb), "--mu", "0"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn help_lists_every_flag() {
    let out = xalign(&["align", "--help"]);
    let text = stdout(&out);
    for flag in ["--bitext", "--embeddings", "--checkpoint", "--word-maps", "--mu", "--sinkhorn-iters", "--filter-iters", "--alpha", "--union", "--covered-cells", "--layer"] {
        assert!(text.contains(flag), "missing {flag}");
    }
}

#[test]
fn eval_aer_summaries() {
    let dir = tempfile::tempdir().unwrap();
    let gold = dir.path().join("g.txt");
    let hyp = dir.path().join("h.txt");

    fs::write(&gold, "1 1 1 S\n1 2 2 S\n2 1 2 S\n").unwrap();
    fs::write(&hyp, "0-0 1-1\n0-1\n").unwrap();
    let out = xalign(&["eval-aer", "--hyp", p(&hyp), "--gold", p(&gold)]);
    assert!(out.status.success());
    assert_eq!(stdout(&out).trim(), "aer=0.0000 precision=1.0000 recall=1.0000 pairs=2");

    fs::write(&gold, "1 1 1 S\n1 2 3 P\n").unwrap();
    fs::write(&hyp, "0-0 1-1\n").unwrap();
    let out = xalign(&["eval-aer", "--hyp", p(&hyp), "--gold", p(&gold)]);
    assert!(stdout(&out).starts_with("aer=0.3333"), "{}", stdout(&out));

    fs::write(&hyp, "").unwrap();
    let out = xalign(&["eval-aer", "--hyp", p(&hyp), "--gold", p(&gold)]);
    let text = stdout(&out);
    assert!(text.starts_with("aer=1.0000") && text.contains("recall=0.0000"), "{text}");
}

#[test]
fn eval_aer_parse_error_names_line() {
    let dir = tempfile::tempdir().unwrap();
    let gold = dir.path().join("g.txt");
    let hyp = dir.path().join("h.txt");
    fs::write(&gold, "1 1 1 S\n1 x 2\n").unwrap();
    fs::write(&hyp, "0-0\n").unwrap();
    let out = xalign(&["eval-aer", "--hyp", p(&hyp), "--gold", p(&gold)]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("line 2"), "{}", stderr(&out));

    fs::write(&gold, "1 1 1 S\n").unwrap();
    fs::write(&hyp, "0-0\n0-0 1=1\n").unwrap();
    let out = xalign(&["eval-aer", "--hyp", p(&hyp), "--gold", p(&gold)]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("line 2"), "{}", stderr(&out));
}

#[test]
fn gen_synth_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let run = |tag: &str| {
        let b = dir.path().join(format!("{tag}.txt"));
        let g = dir.path().join(format!("{tag}.gold"));
        let out = xalign(&["gen-synth", "--bitext", p(&b), "--gold", p(&g), "--pairs", "20", "--seed", "7"]);
        assert!(out.status.success(), "{}", stderr(&out));
        assert!(stdout(&out).contains("seed=7"));
        (fs::read(b).unwrap(), fs::read(g).unwrap())
    };
    let first = run("a");
    assert_eq!(first, run("b"));
    assert_eq!(String::from_utf8(first.0).unwrap().lines().count(), 20);
}

#[test]
fn export_config_round_trips_through_train() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.txt");
    let out = xalign(&["export-config", "-o", p(&cfg)]);
    assert!(out.status.success());
    let text = fs::read_to_string(&cfg).unwrap();
    assert!(text.contains("mu = 1"));
    assert!(text.contains("sinkhorn_iters = 2"));
    assert_eq!(xalign::train::TrainConfig::parse(&text).unwrap(), xalign::train::TrainConfig::default());
}

#[test]
fn train_align_eval_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let bitext = dir.path().join("b.txt");
    let gold = dir.path().join("g.txt");
    let out = xalign(&[
        "gen-synth", "--bitext", p(&bitext), "--gold", p(&gold), "--pairs", "30", "--vocab", "12", "--min-len", "3",
        "--max-len", "6",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let ckpt = dir.path().join("m.ckpt");
    let cold = dir.path().join("cold.ckpt");
    let cfg = dir.path().join("cfg.txt");
    let config = |steps: usize, path: &Path| {
        format!(
            "bitext = {}\ngold = {}\nheldout_pairs = 5\nlayers = 1\nhidden = 16\nheads = 2\nffn = 32\n\
             batch_size = 4\nwarmup_steps = 0\ncold_start_steps = 5\nsteps = {steps}\neval_every = 0\n\
             checkpoint = {}\n",
            p(&bitext),
            p(&gold),
            p(path)
        )
    };
    fs::write(&cfg, config(0, &cold)).unwrap();
    let out = xalign(&["train", p(&cfg)]);
    assert!(out.status.success(), "{}", stderr(&out));
    fs::write(&cfg, config(4, &ckpt)).unwrap();
    let out = xalign(&["train", p(&cfg)]);
    assert!(out.status.success(), "{}", stderr(&out));
    let trained = stdout(&out);
    let heldout_line = trained.lines().find(|l| l.starts_with("heldout")).unwrap().to_string();

    // Same run with the step count raised through an override.
    fs::write(&cfg, config(0, &ckpt)).unwrap();
    let out = xalign(&["train", p(&cfg), "--set", "steps = 4"]);
    assert!(stdout(&out).contains(&heldout_line));

    let hyp = dir.path().join("h.txt");
    let out = xalign(&["align", "--bitext", p(&bitext), "--checkpoint", p(&ckpt), "-o", p(&hyp)]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(fs::read_to_string(&hyp).unwrap().lines().count(), 30);
    let out = xalign(&["eval-aer", "--hyp", p(&hyp), "--gold", p(&gold)]);
    assert!(out.status.success());
    assert!(stdout(&out).starts_with("aer="));

    // Only the last five pairs are held out; aligning just those reproduces
    // the trainer's held-out report.
    let lines: Vec<&str> = fs::read_to_string(&bitext).unwrap().leak().lines().collect();
    let tail = dir.path().join("tail.txt");
    fs::write(&tail, lines[25..].join("\n") + "\n").unwrap();
    let gold_text = fs::read_to_string(&gold).unwrap();
    let tail_gold: String = gold_text
        .lines()
        .filter_map(|l| {
            let mut f = l.split_whitespace();
            let id: usize = f.next()?.parse().ok()?;
            (id > 25).then(|| format!("{} {}\n", id - 25, f.collect::<Vec<_>>().join(" ")))
        })
        .collect();
    let tail_gold_path = dir.path().join("tail.gold");
    fs::write(&tail_gold_path, tail_gold).unwrap();
    let tail_hyp = dir.path().join("tail.hyp");
    xalign(&["align", "--bitext", p(&tail), "--checkpoint", p(&ckpt), "-o", p(&tail_hyp)]);
    let out = xalign(&["eval-aer", "--hyp", p(&tail_hyp), "--gold", p(&tail_gold_path)]);
    assert_eq!(format!("heldout {}", stdout(&out).trim()), heldout_line);
}

#[test]
fn train_zero_steps_saves_cold_start() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.ckpt");
    let b = dir.path().join("b.ckpt");
    let cfg = dir.path().join("cfg.txt");
    let base = "layers = 1\nhidden = 16\nheads = 2\nffn = 32\nbatch_size = 4\nwarmup_steps = 0\n\
                cold_start_steps = 3\nsynth_vocab = 10\nsynth_pairs = 20\nheldout_pairs = 2\n";
    fs::write(&cfg, format!("{base}steps = 0\ncheckpoint = {}\n", p(&a))).unwrap();
    assert!(xalign(&["train", p(&cfg)]).status.success());
    fs::write(&cfg, format!("{base}steps = 0\ncheckpoint = {}\n", p(&b))).unwrap();
    assert!(xalign(&["train", p(&cfg)]).status.success());
    let wa = xalign::neural::Checkpoint::load(&a).unwrap().weights;
    let wb = xalign::neural::Checkpoint::load(&b).unwrap().weights;
    assert_eq!(wa.values, wb.values);

    fs::write(&cfg, "bogus_key = 1\n").unwrap();
    let out = xalign(&["train", p(&cfg)]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("line 1"));
}
