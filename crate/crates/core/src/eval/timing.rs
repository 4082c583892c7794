use super::EvalError;
use crate::imaging::GrayImage;
use crate::Error;
use crate::pipeline::Pipeline;
use crate::template::ProjectionBank;
use std::time::Instant;

#[derive(Debug, Clone, PartialEq)]
pub struct TimingStats {
    pub samples: usize,
    pub mean_ms: f64,
    /// Nearest-rank 95th percentile.
    pub p95_ms: f64,
}

impl TimingStats {
    pub fn from_durations(mut ms: Vec<f64>) -> Self {
        ms.sort_by(f64::total_cmp);
        let n = ms.len();
        let rank = ((0.95 * n as f64).ceil() as usize).clamp(1, n.max(1));
        Self {
            samples: n,
            mean_ms: super::mean(&ms),
            p95_ms: ms.get(rank - 1).copied().unwrap_or(f64::NAN),
        }
    }
}

/// Wall-clock extract, fuse and hash per image on the calling thread. Images
/// are already decoded and `bank` is already generated, so neither I/O nor
/// key material generation is timed.
pub fn timing_report(
    images: &[&GrayImage],
    pipeline: &Pipeline,
    bank: &ProjectionBank,
) -> Result<TimingStats, Error> {
    if images.is_empty() {
        return Err(EvalError::InsufficientData("timing needs at least one image".into()).into());
    }
    let mut ms = Vec::with_capacity(images.len());
    for img in images {
        let start = Instant::now();
        let template = pipeline.enroll_with_bank(img, bank);
        ms.push(start.elapsed().as_secs_f64() * 1e3);
        template?;
    }
    Ok(TimingStats::from_durations(ms))
}
