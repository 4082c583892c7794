//! Similarity scores before and after hashing.
//!
//! Plain features are compared position by position: circular distance for
//! orientation codes, bit agreement for LBP codes. Templates are compared by
//! the fraction of hash positions whose indices collide.

use crate::keypoints::PointFeature;
use crate::orientation::{OrientationFeature, CODES};
use crate::template::RevocableTemplate;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MatchError {
    #[error("orientation code {0} outside 0..12")]
    CodeOutOfRange(u8),
    #[error("{segment} lengths differ: {left} vs {right}")]
    LengthMismatch {
        segment: &'static str,
        left: usize,
        right: usize,
    },
    #[error("orientation grids differ: {0:?} vs {1:?}")]
    GridMismatch((usize, usize), (usize, usize)),
    #[error("templates were issued under different seeds ({0:#x} vs {1:#x})")]
    SeedMismatch(u64, u64),
    #[error("template parameters differ: {0}")]
    ParamMismatch(String),
    #[error("orientation weight must lie in [0, 1], got {0}")]
    InvalidWeight(f64),
}

/// Similarity in `[0, 1]`; 1 for identical inputs.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Score(f64);

impl Score {
    pub fn new(value: f64) -> Self {
        debug_assert!((0.0..=1.0).contains(&value), "score {value}");
        Self(value)
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl std::fmt::Display for Score {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:.4}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchConfig {
    /// Weight of the orientation similarity; the point similarity gets the rest.
    pub w_o: f64,
    /// Cell-grid translation searched in each direction; 0 disables the search.
    pub shift_radius: usize,
}

impl Default for MatchConfig {
    fn default() -> Self {
        Self {
            w_o: 0.5,
            shift_radius: 0,
        }
    }
}

impl MatchConfig {
    pub fn validate(&self) -> Result<(), MatchError> {
        if !(0.0..=1.0).contains(&self.w_o) {
            return Err(MatchError::InvalidWeight(self.w_o));
        }
        Ok(())
    }
}

/// Plain (unhashed) feature pair of one image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlainFeatures {
    pub orientation: OrientationFeature,
    pub points: PointFeature,
}

/// `min(|a - b|, 12 - |a - b|)`, in `0..=6`.
pub fn angular_dist(a: u8, b: u8) -> Result<u8, MatchError> {
    for c in [a, b] {
        if usize::from(c) >= CODES {
            return Err(MatchError::CodeOutOfRange(c));
        }
    }
    let d = a.abs_diff(b);
    Ok(d.min(CODES as u8 - d))
}

fn check_codes(o: &OrientationFeature) -> Result<(), MatchError> {
    match o.codes().iter().find(|&&c| usize::from(c) >= CODES) {
        Some(&c) => Err(MatchError::CodeOutOfRange(c)),
        None => Ok(()),
    }
}

fn circular(a: u8, b: u8) -> u32 {
    let d = a.abs_diff(b);
    u32::from(d.min(CODES as u8 - d))
}

/// Orientation similarity with `o2` translated by `(dx, dy)` cells, over the overlap.
fn orientation_similarity_at(o1: &OrientationFeature, o2: &OrientationFeature, dx: isize, dy: isize) -> Option<f64> {
    let (rows, cols) = (o1.rows() as isize, o1.cols() as isize);
    let (mut total, mut count) = (0u64, 0u64);
    for r in 0.max(-dy)..rows.min(rows - dy) {
        for c in 0.max(-dx)..cols.min(cols - dx) {
            let a = o1.codes()[(r * cols + c) as usize];
            let b = o2.codes()[((r + dy) * cols + c + dx) as usize];
            total += u64::from(circular(a, b));
            count += 1;
        }
    }
    (count > 0).then(|| 1.0 - total as f64 / (6.0 * count as f64))
}

fn orientation_similarity(o1: &OrientationFeature, o2: &OrientationFeature, radius: usize) -> f64 {
    let r = radius as isize;
    let mut best = orientation_similarity_at(o1, o2, 0, 0).unwrap_or(0.0);
    for dy in -r..=r {
        for dx in -r..=r {
            if let Some(s) = orientation_similarity_at(o1, o2, dx, dy) {
                best = best.max(s);
            }
        }
    }
    best
}

fn point_similarity(p1: &PointFeature, p2: &PointFeature) -> f64 {
    let bits: u32 = p1
        .codes()
        .iter()
        .zip(p2.codes())
        .map(|(a, b)| (a ^ b).count_ones())
        .sum();
    1.0 - f64::from(bits) / (8.0 * p1.len() as f64)
}

/// `w_o * s_O + (1 - w_o) * s_P` for the mean circular orientation distance
/// `s_O` and the mean LBP bit agreement `s_P`.
pub fn pre_transform_score(f1: &PlainFeatures, f2: &PlainFeatures, cfg: &MatchConfig) -> Result<Score, MatchError> {
    cfg.validate()?;
    let (o1, o2) = (&f1.orientation, &f2.orientation);
    if o1.len() != o2.len() {
        return Err(MatchError::LengthMismatch {
            segment: "orientation",
            left: o1.len(),
            right: o2.len(),
        });
    }
    if (o1.rows(), o1.cols()) != (o2.rows(), o2.cols()) {
        return Err(MatchError::GridMismatch((o1.rows(), o1.cols()), (o2.rows(), o2.cols())));
    }
    if f1.points.len() != f2.points.len() {
        return Err(MatchError::LengthMismatch {
            segment: "point",
            left: f1.points.len(),
            right: f2.points.len(),
        });
    }
    check_codes(o1)?;
    check_codes(o2)?;
    let s_o = if o1.is_empty() {
        1.0
    } else {
        orientation_similarity(o1, o2, cfg.shift_radius)
    };
    let s_p = if f1.points.is_empty() {
        1.0
    } else {
        point_similarity(&f1.points, &f2.points)
    };
    Ok(Score::new((cfg.w_o * s_o + (1.0 - cfg.w_o) * s_p).clamp(0.0, 1.0)))
}

/// Fraction of hash positions with equal indices, without any compatibility check.
/// Only meaningful for revocability and unlinkability statistics.
pub fn collision_rate(t1: &RevocableTemplate, t2: &RevocableTemplate) -> Result<Score, MatchError> {
    if t1.l() != t2.l() {
        return Err(MatchError::LengthMismatch {
            segment: "template",
            left: t1.l(),
            right: t2.l(),
        });
    }
    let hits = t1
        .indices()
        .iter()
        .zip(t2.indices())
        .filter(|(a, b)| a == b)
        .count();
    Ok(Score::new(hits as f64 / t1.l() as f64))
}

/// Collision rate of two templates issued under the same seed and parameters.
pub fn post_transform_score(t1: &RevocableTemplate, t2: &RevocableTemplate) -> Result<Score, MatchError> {
    if t1.seed() != t2.seed() {
        return Err(MatchError::SeedMismatch(t1.seed(), t2.seed()));
    }
    let shape = |t: &RevocableTemplate| (t.l(), t.k(), t.dimension(), t.mode());
    if shape(t1) != shape(t2) {
        return Err(MatchError::ParamMismatch(format!(
            "(l, k, d, mode) {:?} vs {:?}",
            shape(t1),
            shape(t2)
        )));
    }
    collision_rate(t1, t2)
}
