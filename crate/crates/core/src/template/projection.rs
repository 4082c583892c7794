//! Reproducible standard-normal projection vectors.
//!
//! Column `j` of hash `i` under template seed `s` is generated as follows
//! (all arithmetic wrapping on u64, IEEE-754 binary64 without fused
//! multiply-add):
//!
//! 1. `key = mix64(mix64(s) ^ (i << 32 | j))`, where `mix64` is the
//!    SplitMix64 finalizer (`0xbf58476d1ce4e5b9`, `0x94d049bb133111eb`,
//!    shifts 30/27/31).
//! 2. A SplitMix64 stream: `state += 0x9e3779b97f4a7c15; out = mix64(state)`.
//! 3. Each output becomes a uniform `u = ((out >> 12) + 0.5) * 2^-52`, which
//!    lies strictly inside (0, 1) and is exact in binary64.
//! 4. Consecutive uniforms `(u1, u2)` pass through Box-Muller:
//!    `r = sqrt(-2 ln u1)`, `z0 = r cos(2 pi u2)`, `z1 = r sin(2 pi u2)`, and
//!    the column takes `z0, z1, z0, z1, ...`; an odd final `z1` is dropped.
//!
//! `ln` and `sin/cos` are evaluated with the fixed polynomials in this module
//! rather than the platform math library, so the stream is bit-identical on
//! every conforming IEEE-754 target.

use super::{IomParams, TemplateError};
use crate::seed::{mix64, GOLDEN_GAMMA};

const TWO_POW_M52: f64 = 1.0 / 4_503_599_627_370_496.0;

#[inline]
pub fn column_key(seed: u64, i: usize, j: usize) -> u64 {
    mix64(mix64(seed) ^ (((i as u64) << 32) | j as u64))
}

/// SplitMix64 uniform stream used for one projection column.
#[derive(Debug, Clone)]
pub struct UniformStream {
    state: u64,
}

impl UniformStream {
    pub fn new(key: u64) -> Self {
        Self { state: key }
    }

    #[inline(always)]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        mix64(self.state)
    }

    /// Uniform in the open interval (0, 1).
    #[inline(always)]
    pub fn next_open01(&mut self) -> f64 {
        open01(self.next_u64())
    }
}

/// `((x >> 12) + 0.5) * 2^-52`. The 52-bit integer is converted through the
/// exponent field, which is exact and needs no integer-to-float instruction.
#[inline(always)]
fn open01(x: u64) -> f64 {
    let int = f64::from_bits(0x4330_0000_0000_0000 | (x >> 12)) - 4_503_599_627_370_496.0;
    (int + 0.5) * TWO_POW_M52
}

/// Natural logarithm for `u` in (0, 1]; relative error below 1e-15.
#[inline(always)]
pub fn ln_unit(u: f64) -> f64 {
    let bits = u.to_bits();
    // Biased exponent as a double without an integer conversion: 2^52 + k - 2^52.
    let biased = f64::from_bits(0x4330_0000_0000_0000 | ((bits >> 52) & 0x7ff)) - 4_503_599_627_370_496.0;
    let e0 = biased - 1023.0;
    let m0 = f64::from_bits((bits & 0x000f_ffff_ffff_ffff) | 0x3ff0_0000_0000_0000);
    let big = m0 > std::f64::consts::SQRT_2;
    let m = if big { m0 * 0.5 } else { m0 };
    let e = if big { e0 + 1.0 } else { e0 };
    // ln m = 2 atanh(s), |s| <= 0.1716
    let s = (m - 1.0) / (m + 1.0);
    let z = s * s;
    let p = 1.0
        + z * (1.0 / 3.0
            + z * (1.0 / 5.0
                + z * (1.0 / 7.0
                    + z * (1.0 / 9.0
                        + z * (1.0 / 11.0
                            + z * (1.0 / 13.0
                                + z * (1.0 / 15.0
                                    + z * (1.0 / 17.0 + z * (1.0 / 19.0 + z * (1.0 / 21.0))))))))));
    e * std::f64::consts::LN_2 + 2.0 * s * p
}

/// `(sin, cos)` of `2 pi u` for `u` in [0, 1]; absolute error below 1e-15.
#[inline(always)]
pub fn sin_cos_turns(u: f64) -> (f64, f64) {
    let quarter = (u * 4.0).round();
    let a = (u - quarter * 0.25) * std::f64::consts::TAU;
    let z = a * a;
    let s = a
        * (1.0
            + z * (-1.0 / 6.0
                + z * (1.0 / 120.0
                    + z * (-1.0 / 5040.0
                        + z * (1.0 / 362_880.0
                            + z * (-1.0 / 39_916_800.0
                                + z * (1.0 / 6_227_020_800.0
                                    + z * (-1.0 / 1_307_674_368_000.0
                                        + z * (1.0 / 355_687_428_096_000.0)))))))));
    let c = 1.0
        + z * (-0.5
            + z * (1.0 / 24.0
                + z * (-1.0 / 720.0
                    + z * (1.0 / 40_320.0
                        + z * (-1.0 / 3_628_800.0
                            + z * (1.0 / 479_001_600.0
                                + z * (-1.0 / 87_178_291_200.0
                                    + z * (1.0 / 20_922_789_888_000.0
                                        + z * (-1.0 / 6_402_373_705_728_000.0)))))))));
    // Rotate by the removed quarter turns (0..=4). Float selects only, so the
    // loop stays vectorizable.
    let odd = quarter == 1.0 || quarter == 3.0;
    let (sin, cos) = if odd { (c, s) } else { (s, c) };
    let sin = if quarter == 2.0 || quarter == 3.0 { -sin } else { sin };
    let cos = if quarter == 1.0 || quarter == 2.0 { -cos } else { cos };
    (sin, cos)
}

/// Reusable buffers for column generation.
#[derive(Debug, Default, Clone)]
pub struct ColumnScratch {
    u1: Vec<f64>,
    u2: Vec<f64>,
}

#[inline(always)]
fn fill_column_kernel(key: u64, out: &mut [f64], scratch: &mut ColumnScratch) {
    let pairs = out.len().div_ceil(2);
    scratch.u1.resize(pairs, 0.0);
    scratch.u2.resize(pairs, 0.0);
    // Output n of the stream is mix64(key + (n + 1) * gamma), so every uniform
    // can be computed independently of the others.
    for (n, (a, b)) in scratch.u1.iter_mut().zip(scratch.u2.iter_mut()).enumerate() {
        let base = key.wrapping_add((2 * n as u64).wrapping_mul(GOLDEN_GAMMA));
        *a = open01(mix64(base.wrapping_add(GOLDEN_GAMMA)));
        *b = open01(mix64(base.wrapping_add(GOLDEN_GAMMA.wrapping_mul(2))));
    }
    let full = out.len() / 2;
    for (pair, (a, b)) in out
        .chunks_exact_mut(2)
        .zip(scratch.u1.iter().zip(&scratch.u2))
    {
        let r = (-2.0 * ln_unit(*a)).sqrt();
        let (s, c) = sin_cos_turns(*b);
        pair[0] = r * c;
        pair[1] = r * s;
    }
    if out.len() % 2 == 1 {
        let r = (-2.0 * ln_unit(scratch.u1[full])).sqrt();
        let (_, c) = sin_cos_turns(scratch.u2[full]);
        out[2 * full] = r * c;
    }
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2")]
unsafe fn fill_column_avx2(key: u64, out: &mut [f64], scratch: &mut ColumnScratch) {
    // Same kernel, wider vectors. No FMA is enabled, so results are unchanged.
    fill_column_kernel(key, out, scratch)
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx512f,avx512dq")]
unsafe fn fill_column_avx512(key: u64, out: &mut [f64], scratch: &mut ColumnScratch) {
    fill_column_kernel(key, out, scratch)
}

/// Writes the column with stream key `key` into `out` (length = dimension).
pub fn fill_column_with(key: u64, out: &mut [f64], scratch: &mut ColumnScratch) {
    #[cfg(target_arch = "x86_64")]
    if std::arch::is_x86_feature_detected!("avx512f") && std::arch::is_x86_feature_detected!("avx512dq") {
        // SAFETY: both features were detected just above.
        unsafe { fill_column_avx512(key, out, scratch) };
        return;
    }
    #[cfg(target_arch = "x86_64")]
    if std::arch::is_x86_feature_detected!("avx2") {
        // SAFETY: the CPU supports AVX2, checked just above.
        unsafe { fill_column_avx2(key, out, scratch) };
        return;
    }
    fill_column_kernel(key, out, scratch)
}

/// Portable path, exposed so tests can compare it with the dispatched one.
pub fn fill_column_portable(key: u64, out: &mut [f64]) {
    fill_column_kernel(key, out, &mut ColumnScratch::default())
}

pub fn fill_column(key: u64, out: &mut [f64]) {
    fill_column_with(key, out, &mut ColumnScratch::default())
}

/// Inner product with a fixed four-lane summation order.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let mut ca = a.chunks_exact(4);
    let mut cb = b.chunks_exact(4);
    for (x, y) in (&mut ca).zip(&mut cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut tail = 0.0;
    for (x, y) in ca.remainder().iter().zip(cb.remainder()) {
        tail += x * y;
    }
    ((acc[0] + acc[1]) + (acc[2] + acc[3])) + tail
}

/// All `l x k` projection columns of dimension `d`, materialized.
///
/// Storage is `l * k * d` doubles (about 224 MB for 420 x 50 x 1332); use
/// [`super::iom_hash_streaming`] to hash a single feature without it.
#[derive(Clone, PartialEq)]
pub struct ProjectionBank {
    params: IomParams,
    dimension: usize,
    data: Vec<f64>,
}

impl std::fmt::Debug for ProjectionBank {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProjectionBank")
            .field("params", &self.params)
            .field("dimension", &self.dimension)
            .finish_non_exhaustive()
    }
}

impl ProjectionBank {
    pub fn generate(params: &IomParams, dimension: usize) -> Result<Self, TemplateError> {
        params.validate()?;
        if dimension == 0 {
            return Err(TemplateError::InvalidParams("dimension must be at least 1".into()));
        }
        let mut data = vec![0.0; params.l * params.k * dimension];
        let mut scratch = ColumnScratch::default();
        for (c, column) in data.chunks_exact_mut(dimension).enumerate() {
            let (i, j) = (c / params.k, c % params.k);
            fill_column_with(column_key(params.seed, i, j), column, &mut scratch);
        }
        Ok(Self {
            params: *params,
            dimension,
            data,
        })
    }

    pub fn params(&self) -> &IomParams {
        &self.params
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Column `j` of hash `i`.
    pub fn column(&self, i: usize, j: usize) -> &[f64] {
        let start = (i * self.params.k + j) * self.dimension;
        &self.data[start..start + self.dimension]
    }

    pub fn entries(&self) -> &[f64] {
        &self.data
    }
}

/// Convenience form of [`ProjectionBank::generate`].
pub fn gaussian_bank(params: &IomParams, dimension: usize) -> Result<ProjectionBank, TemplateError> {
    ProjectionBank::generate(params, dimension)
}
