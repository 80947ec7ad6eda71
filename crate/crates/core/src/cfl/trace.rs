use std::io::Write;

use serde::{Deserialize, Serialize};

use super::Decision;
use crate::error::Result;

/// One server-side round of one cluster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundTrace {
    pub cluster: usize,
    pub depth: usize,
    pub tau: usize,
    pub global_round: usize,
    pub members: usize,
    pub mean_norm: f64,
    pub max_norm: f64,
    pub ratio: f64,
    pub eps1: f64,
    #[serde(flatten)]
    pub decision: Decision,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TraceLog {
    pub rounds: Vec<RoundTrace>,
}

impl TraceLog {
    /// One JSON object per line.
    pub fn write_jsonl(&self, mut w: impl Write) -> Result<()> {
        for r in &self.rounds {
            serde_json::to_writer(&mut w, r)?;
            w.write_all(b"\n").map_err(|e| crate::Error::io("trace", e))?;
        }
        Ok(())
    }

    pub fn read_jsonl(text: &str) -> Result<Self> {
        let rounds = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(serde_json::from_str)
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Ok(Self { rounds })
    }

    pub fn total_rounds(&self) -> usize {
        self.rounds.len()
    }
}
