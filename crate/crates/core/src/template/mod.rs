//! Feature fusion and Index-of-Max hashing into revocable templates.
//!
//! For each of `l` hash functions the fused feature is projected onto `k`
//! seeded Gaussian vectors and only the index of the largest projection is
//! kept. The template is therefore a list of `l` small integers; issuing a new
//! seed issues an unrelated template from the same biometric.

mod codec;
mod fuse;
mod projection;

pub use codec::{deserialize, serialize, serialized_len, CodecError, MAGIC, VERSION};
pub use fuse::{
    fuse, FeatureLayout, FusedFeature, FusionMode, ORIENTATION_CENTER, ORIENTATION_SCALE,
    POINT_CENTER, POINT_SCALE,
};
pub use projection::{
    column_key, dot, fill_column, fill_column_portable, fill_column_with, gaussian_bank,
    ln_unit, sin_cos_turns, ColumnScratch, ProjectionBank, UniformStream,
};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TemplateError {
    #[error("{segment} segment has length {actual}, configuration expects {expected}")]
    LengthMismatch {
        segment: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("fused feature must be non-empty and finite")]
    NonFinite,
    #[error("feature dimension {actual} does not match projection dimension {expected}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("invalid hashing parameters: {0}")]
    InvalidParams(String),
    #[error("scale factor must be positive and finite, got {0}")]
    InvalidScale(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct IomParams {
    /// Number of hash functions (template length).
    pub l: usize,
    /// Projections per hash function.
    pub k: usize,
    pub seed: u64,
    pub mode: FusionMode,
}

impl IomParams {
    pub fn new(l: usize, k: usize, seed: u64, mode: FusionMode) -> Self {
        Self { l, k, seed, mode }
    }

    pub fn validate(&self) -> Result<(), TemplateError> {
        if self.l == 0 || self.l > u32::MAX as usize {
            return Err(TemplateError::InvalidParams(format!("l = {} out of range", self.l)));
        }
        if self.k == 0 || self.k > usize::from(u16::MAX) + 1 {
            return Err(TemplateError::InvalidParams(format!(
                "k = {} out of range [1, 65536]",
                self.k
            )));
        }
        if self.k == 1 {
            log::warn!("k = 1 makes every hash index 0; the template carries no information");
        }
        Ok(())
    }
}

/// Stored, matchable template: one argmax index per hash function.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RevocableTemplate {
    mode: FusionMode,
    seed: u64,
    k: usize,
    dimension: usize,
    indices: Vec<u16>,
}

impl RevocableTemplate {
    /// Checks that every index is below `k`.
    pub fn new(
        mode: FusionMode,
        seed: u64,
        k: usize,
        dimension: usize,
        indices: Vec<u16>,
    ) -> Result<Self, TemplateError> {
        IomParams::new(indices.len(), k, seed, mode).validate()?;
        if let Some(bad) = indices.iter().find(|&&x| usize::from(x) >= k) {
            return Err(TemplateError::InvalidParams(format!("index {bad} >= k = {k}")));
        }
        Ok(Self {
            mode,
            seed,
            k,
            dimension,
            indices,
        })
    }

    pub fn mode(&self) -> FusionMode {
        self.mode
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn l(&self) -> usize {
        self.indices.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn indices(&self) -> &[u16] {
        &self.indices
    }
}

fn argmax_first(values: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (j, v) in values.enumerate() {
        if v > best.1 {
            best = (j, v);
        }
    }
    best.0
}

/// `X_i = argmax_j <w_j^i, C>` over a materialized bank; ties go to the smallest `j`.
pub fn iom_hash(c: &FusedFeature, bank: &ProjectionBank) -> Result<RevocableTemplate, TemplateError> {
    if c.dimension() != bank.dimension() {
        return Err(TemplateError::DimensionMismatch {
            expected: bank.dimension(),
            actual: c.dimension(),
        });
    }
    let p = bank.params();
    let indices = (0..p.l)
        .map(|i| argmax_first((0..p.k).map(|j| dot(bank.column(i, j), c.values()))) as u16)
        .collect();
    RevocableTemplate::new(p.mode, p.seed, p.k, c.dimension(), indices)
}

/// Same result as [`iom_hash`] on `gaussian_bank(params, C.dimension())`, but
/// generates each projection column on the fly instead of storing the bank.
pub fn iom_hash_streaming(c: &FusedFeature, params: &IomParams) -> Result<RevocableTemplate, TemplateError> {
    params.validate()?;
    let d = c.dimension();
    let mut column = vec![0.0; d];
    let mut scratch = ColumnScratch::default();
    let indices = (0..params.l)
        .map(|i| {
            argmax_first((0..params.k).map(|j| {
                fill_column_with(column_key(params.seed, i, j), &mut column, &mut scratch);
                dot(&column, c.values())
            })) as u16
        })
        .collect();
    RevocableTemplate::new(params.mode, params.seed, params.k, d, indices)
}

/// Whether hashing `lambda * C` gives the same template as hashing `C`.
pub fn scale_invariance_check(
    c: &FusedFeature,
    bank: &ProjectionBank,
    lambda: f64,
) -> Result<bool, TemplateError> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(TemplateError::InvalidScale(lambda));
    }
    Ok(iom_hash(&c.scaled(lambda)?, bank)? == iom_hash(c, bank)?)
}
