//! Per-step training records and their TSV rendering.

use std::fmt::Write as _;
use std::io::Write;

use super::Phase;

pub const LOG_HEADER: &str = "step\tphase\tlr\tloss_mlm\tloss_tlm\tloss_dwa\tlabels\tqueries\tmulti_link\tself_label_aer\theldout_aer\tgrad_norm\twall_ms";

/// One optimizer step. `step` is 1-based within its phase.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub step: u64,
    pub phase: Phase,
    pub lr: f64,
    pub loss_mlm: f64,
    pub loss_tlm: f64,
    pub loss_dwa: f64,
    /// Self-labeled links summed over the parallel batch.
    pub labels: usize,
    /// Pointer-loss terms summed over the parallel batch.
    pub queries: usize,
    /// Query positions carrying more than one link.
    pub multi_link: usize,
    /// AER of this batch's self-labels against the known alignments.
    pub self_label_aer: Option<f64>,
    pub heldout_aer: Option<f64>,
    /// Global gradient norm before clipping.
    pub grad_norm: f64,
    pub wall_ms: u64,
}

impl StepRecord {
    pub fn total_loss(&self) -> f64 {
        self.loss_mlm + self.loss_tlm + self.loss_dwa
    }

    pub fn to_tsv_row(&self) -> String {
        let opt = |v: Option<f64>| v.map_or_else(|| "-".to_owned(), |v| format!("{v:.6}"));
        let mut s = String::new();
        let _ = write!(
            s,
            "{}\t{}\t{:.6e}\t{:.6}\t{:.6}\t{:.6}\t{}\t{}\t{}\t{}\t{}\t{:.6}\t{}",
            self.step,
            self.phase,
            self.lr,
            self.loss_mlm,
            self.loss_tlm,
            self.loss_dwa,
            self.labels,
            self.queries,
            self.multi_link,
            opt(self.self_label_aer),
            opt(self.heldout_aer),
            self.grad_norm,
            self.wall_ms
        );
        s
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainLog {
    pub records: Vec<StepRecord>,
}

impl TrainLog {
    pub fn push(&mut self, record: StepRecord) {
        self.records.push(record);
    }

    pub fn phase(&self, phase: Phase) -> impl Iterator<Item = &StepRecord> + '_ {
        self.records.iter().filter(move |r| r.phase == phase)
    }

    pub fn write_tsv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{LOG_HEADER}")?;
        for r in &self.records {
            writeln!(out, "{}", r.to_tsv_row())?;
        }
        Ok(())
    }

    /// Mean of `f` over the records of `phase` in `range` (indices within the
    /// phase), skipping `None`.
    pub fn mean_over<F>(&self, phase: Phase, range: std::ops::Range<usize>, f: F) -> Option<f64>
    where
        F: Fn(&StepRecord) -> Option<f64>,
    {
        let values: Vec<f64> = self
            .phase(phase)
            .skip(range.start)
            .take(range.len())
            .filter_map(f)
            .collect();
        (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
    }
}
