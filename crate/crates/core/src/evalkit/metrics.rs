use serde::{Deserialize, Serialize};

use crate::revision::{EpisodeStatus, Transcript};

/// A proportion with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricPoint {
    pub value: f64,
    pub n: usize,
    pub stderr: f64,
}

impl MetricPoint {
    pub fn from_counts(hits: usize, n: usize) -> Result<Self, MetricError> {
        if n == 0 {
            return Err(MetricError::EmptyInput);
        }
        let value = hits as f64 / n as f64;
        Ok(MetricPoint { value, n, stderr: binomial_stderr(value, n) })
    }
}

pub fn binomial_stderr(p: f64, n: usize) -> f64 {
    libm::sqrt(p * (1.0 - p) / n as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum MetricError {
    #[error("no samples")]
    EmptyInput,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnvKind {
    Gp,
    Nav,
}

/// GeneralPoints: at least one verified-correct turn. Navigation: the episode
/// reached the destination, taking the correct action at every movable point.
pub fn success_rate(transcripts: &[Transcript], kind: EnvKind) -> Result<MetricPoint, MetricError> {
    let hits = transcripts
        .iter()
        .filter(|t| match kind {
            EnvKind::Gp => t.any_correct(),
            EnvKind::Nav => t.status == Some(EpisodeStatus::Success),
        })
        .count();
    MetricPoint::from_counts(hits, transcripts.len())
}

/// Correct decisions over all decisions; every retry is its own sample.
pub fn per_step_accuracy(transcripts: &[Transcript]) -> Result<MetricPoint, MetricError> {
    let (hits, n) = transcripts
        .iter()
        .flat_map(|t| &t.turns)
        .fold((0, 0), |(h, n), turn| (h + turn.correct as usize, n + 1));
    MetricPoint::from_counts(hits, n)
}
