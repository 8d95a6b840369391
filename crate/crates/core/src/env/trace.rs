//! Per-step rollout traces as CSV.

use std::io::Write;
use std::path::Path;

use super::{DoneReason, HexapodEnv, StepResult};
use crate::reward::{csv_err, Term, NUM_TERMS};
use crate::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub step: usize,
    pub position: [f64; 3],
    /// `(roll, pitch, yaw)`.
    pub euler: [f64; 3],
    pub base_height: f64,
    pub weighted: [f64; NUM_TERMS],
    pub total: f64,
    pub done: Option<DoneReason>,
}

#[derive(Debug, Clone, Default)]
pub struct TraceRecorder {
    rows: Vec<TraceRow>,
}

impl TraceRecorder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records the state `env` is in right after producing `result`.
    pub fn record(&mut self, env: &HexapodEnv, result: &StepResult) {
        let b = env.base();
        let (r, p, y) = b.euler();
        self.rows.push(TraceRow {
            step: result.info.step,
            position: b.position.into(),
            euler: [r, p, y],
            base_height: result.info.base_height,
            weighted: result.reward.weighted,
            total: result.reward.total,
            done: result.reason,
        });
    }

    pub fn rows(&self) -> &[TraceRow] {
        &self.rows
    }

    /// The base-height column.
    pub fn base_heights(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.base_height).collect()
    }

    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["step", "x", "y", "z", "roll", "pitch", "yaw", "b"];
        header.extend(Term::ALL.iter().map(|t| t.id()));
        header.extend(["total", "done"]);
        w.write_record(&header).map_err(csv_err)?;
        for row in &self.rows {
            let mut rec = vec![row.step.to_string()];
            rec.extend(row.position.iter().chain(&row.euler).map(|v| v.to_string()));
            rec.push(row.base_height.to_string());
            rec.extend(row.weighted.iter().map(|v| v.to_string()));
            rec.push(row.total.to_string());
            rec.push(row.done.map_or("", |d| d.name()).to_string());
            w.write_record(&rec).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::EpisodeConfig;

    #[test]
    fn columns_line_up() {
        let (mut env, first) = HexapodEnv::reset(EpisodeConfig { max_steps: 2, ..EpisodeConfig::default() }).unwrap();
        let mut rec = TraceRecorder::new();
        rec.record(&env, &first);
        let hold = *env.last_action();
        for _ in 0..2 {
            let r = env.step(&hold).unwrap();
            rec.record(&env, &r);
        }
        let mut buf = Vec::new();
        rec.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let widths: Vec<usize> = text.lines().map(|l| l.split(',').count()).collect();
        assert_eq!(widths, [8 + NUM_TERMS + 2; 4]);
        assert!(text.lines().last().unwrap().ends_with(",timeout"));
    }
}
