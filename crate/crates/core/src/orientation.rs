//! Line-orientation coding with a six-direction MFRAT filter bank.
//!
//! Each pixel gets the direction whose line sum is smallest (palm lines are
//! dark). When the two smallest responses come from neighbouring directions
//! and are within `r` of each other, the pixel is assigned the half-step
//! direction between them, doubling the code alphabet from 6 to 12 levels.
//! Code `o` denotes the angle `o * pi / 12`, measured from the +x axis
//! toward +y (image rows grow downward).

use crate::imaging::GrayImage;
use thiserror::Error;

/// Number of line directions in the bank.
pub const DIRECTIONS: usize = 6;
/// Number of fused orientation codes.
pub const CODES: usize = 2 * DIRECTIONS;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OrientationError {
    #[error("MFRAT window must be odd and at least 5, got {0}")]
    InvalidWindow(usize),
    #[error("cell size {cell} does not divide the {width}x{height} map")]
    CellSize {
        cell: usize,
        width: usize,
        height: usize,
    },
}

/// Six centrally symmetric line masks through the window center.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MfratBank {
    window: usize,
    masks: [Vec<(isize, isize)>; DIRECTIONS],
}

impl MfratBank {
    /// Builds the masks for a `p x p` window. Direction `q` is the angle
    /// `q * pi / 6`; shallow lines are parameterized by x, steep ones by y,
    /// so each mask holds exactly `p` offsets.
    pub fn new(p: usize) -> Result<Self, OrientationError> {
        if p < 5 || p.is_multiple_of(2) {
            return Err(OrientationError::InvalidWindow(p));
        }
        let half = (p / 2) as isize;
        let masks = std::array::from_fn(|q| {
            let theta = q as f64 * std::f64::consts::PI / DIRECTIONS as f64;
            let (s, c) = theta.sin_cos();
            (-half..=half)
                .map(|t| {
                    if s.abs() <= c.abs() {
                        // f64::round is half-away-from-zero, keeping the mask symmetric.
                        (t, (t as f64 * s / c).round() as isize)
                    } else {
                        ((t as f64 * c / s).round() as isize, t)
                    }
                })
                .collect()
        });
        Ok(Self { window: p, masks })
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn mask(&self, q: usize) -> &[(isize, isize)] {
        &self.masks[q]
    }
}

/// Line sums `f_0 .. f_5` at one pixel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Responses(pub [u64; DIRECTIONS]);

impl Responses {
    /// `(q_min, q_sec)`: argmin and second argmin, ties toward the smaller index.
    pub fn two_smallest(&self) -> (usize, usize) {
        let f = &self.0;
        let mut q_min = 0;
        for q in 1..DIRECTIONS {
            if f[q] < f[q_min] {
                q_min = q;
            }
        }
        let mut q_sec = usize::from(q_min == 0);
        for q in 0..DIRECTIONS {
            if q != q_min && f[q] < f[q_sec] {
                q_sec = q;
            }
        }
        (q_min, q_sec)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FusionParams {
    /// Maximum `f_sec - f_min` (exclusive) for the in-between code.
    pub r: u64,
    /// Treat directions 0 and 5 as neighbours, fusing them to code 11.
    pub cyclic_wrap: bool,
}

impl Default for FusionParams {
    fn default() -> Self {
        Self {
            r: 8,
            cyclic_wrap: false,
        }
    }
}

/// Per-pixel orientation codes in `[0, 11]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrientationMap {
    width: usize,
    height: usize,
    codes: Vec<u8>,
}

impl OrientationMap {
    pub fn new(width: usize, height: usize, codes: Vec<u8>) -> Self {
        assert_eq!(codes.len(), width * height, "code buffer size");
        assert!(codes.iter().all(|&c| (c as usize) < CODES), "code range");
        Self {
            width,
            height,
            codes,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn codes(&self) -> &[u8] {
        &self.codes
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.codes[y * self.width + x]
    }

    /// Debug rendering with intensity `21 * code`.
    pub fn to_image(&self) -> GrayImage {
        GrayImage::new(
            self.width,
            self.height,
            self.codes.iter().map(|&c| c * 21).collect(),
        )
        .expect("map is non-empty")
    }
}

/// Fixed-length orientation feature: one code per cell, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrientationFeature {
    rows: usize,
    cols: usize,
    codes: Vec<u8>,
}

impl OrientationFeature {
    pub fn new(rows: usize, cols: usize, codes: Vec<u8>) -> Self {
        assert_eq!(codes.len(), rows * cols, "feature length");
        Self { rows, cols, codes }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn codes(&self) -> &[u8] {
        &self.codes
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }
}

/// Line sums at `(x, y)`; pixels outside the image are edge-replicated.
pub fn responses_at(img: &GrayImage, bank: &MfratBank, x: usize, y: usize) -> Responses {
    let (x, y) = (x as isize, y as isize);
    Responses(std::array::from_fn(|q| {
        bank.mask(q)
            .iter()
            .map(|&(dx, dy)| u64::from(img.get_clamped(x + dx, y + dy)))
            .sum()
    }))
}

/// Two-direction fusion of the six responses into a 12-level code.
pub fn fuse_directions(resp: &Responses, params: &FusionParams) -> u8 {
    let (q_min, q_sec) = resp.two_smallest();
    let close = resp.0[q_sec] - resp.0[q_min] < params.r;
    let (lo, hi) = (q_min.min(q_sec), q_min.max(q_sec));
    if close && hi - lo == 1 {
        (q_min + q_sec) as u8
    } else if close && params.cyclic_wrap && lo == 0 && hi == DIRECTIONS - 1 {
        (CODES - 1) as u8
    } else {
        (2 * q_min) as u8
    }
}

/// Applies [`fuse_directions`] at every pixel.
pub fn orientation_map(img: &GrayImage, bank: &MfratBank, params: &FusionParams) -> OrientationMap {
    let (w, h) = (img.width(), img.height());
    let half = bank.window() / 2;
    let mut codes = vec![0u8; w * h];
    if w > 2 * half && h > 2 * half {
        let offsets: [Vec<isize>; DIRECTIONS] = std::array::from_fn(|q| {
            bank.mask(q)
                .iter()
                .map(|&(dx, dy)| dy * w as isize + dx)
                .collect()
        });
        let px = img.pixels();
        for y in half..h - half {
            for x in half..w - half {
                let center = (y * w + x) as isize;
                let resp = Responses(std::array::from_fn(|q| {
                    offsets[q]
                        .iter()
                        .map(|&o| u64::from(px[(center + o) as usize]))
                        .sum()
                }));
                codes[y * w + x] = fuse_directions(&resp, params);
            }
        }
    }
    for y in 0..h {
        for x in 0..w {
            let interior = x >= half && x + half < w && y >= half && y + half < h;
            if !interior {
                codes[y * w + x] = fuse_directions(&responses_at(img, bank, x, y), params);
            }
        }
    }
    OrientationMap::new(w, h, codes)
}

/// Majority code per `c x c` cell, ties toward the smaller code.
pub fn downsample_codes(map: &OrientationMap, c: usize) -> Result<OrientationFeature, OrientationError> {
    if c == 0 || !map.width().is_multiple_of(c) || !map.height().is_multiple_of(c) {
        return Err(OrientationError::CellSize {
            cell: c,
            width: map.width(),
            height: map.height(),
        });
    }
    let (rows, cols) = (map.height() / c, map.width() / c);
    let mut codes = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for k in 0..cols {
            let mut hist = [0u32; CODES];
            for y in r * c..(r + 1) * c {
                for x in k * c..(k + 1) * c {
                    hist[map.get(x, y) as usize] += 1;
                }
            }
            let mut best = 0;
            for code in 1..CODES {
                if hist[code] > hist[best] {
                    best = code;
                }
            }
            codes.push(best as u8);
        }
    }
    Ok(OrientationFeature::new(rows, cols, codes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params() -> FusionParams {
        FusionParams::default()
    }

    #[test]
    fn rejects_bad_windows() {
        for p in [0, 3, 4, 12] {
            assert_eq!(MfratBank::new(p), Err(OrientationError::InvalidWindow(p)));
        }
    }

    #[test]
    fn axis_masks() {
        let bank = MfratBank::new(13).unwrap();
        let horizontal: Vec<_> = (-6..=6).map(|x| (x, 0)).collect();
        let vertical: Vec<_> = (-6..=6).map(|y| (0, y)).collect();
        assert_eq!(bank.mask(0), horizontal.as_slice());
        assert_eq!(bank.mask(3), vertical.as_slice());
    }

    #[test]
    fn thirty_degree_mask_by_enumeration() {
        let bank = MfratBank::new(13).unwrap();
        let mask = bank.mask(1);
        let expected: Vec<(isize, isize)> = (-6isize..=6)
            .map(|x| {
                let y = x as f64 * (30f64).to_radians().tan();
                (x, y.round() as isize)
            })
            .collect();
        assert_eq!(mask, expected.as_slice());
        assert_eq!(mask.iter().map(|o| o.1.abs()).max(), Some(3));
    }

    #[test]
    fn masks_have_p_offsets_and_central_symmetry() {
        for p in [5, 7, 13, 17] {
            let bank = MfratBank::new(p).unwrap();
            for q in 0..DIRECTIONS {
                let mask = bank.mask(q);
                assert_eq!(mask.len(), p);
                for &(dx, dy) in mask {
                    assert!(mask.contains(&(-dx, -dy)), "p={p} q={q}");
                }
                assert!(mask.contains(&(0, 0)));
            }
        }
    }

    #[test]
    fn constant_image_responses() {
        let bank = MfratBank::new(13).unwrap();
        let img = GrayImage::filled(20, 20, 77);
        assert_eq!(responses_at(&img, &bank, 0, 19).0, [13 * 77; 6]);
    }

    #[test]
    fn horizontal_black_line_has_zero_row_response() {
        let bank = MfratBank::new(13).unwrap();
        let img = GrayImage::from_fn(32, 32, |_, y| if y == 16 { 0 } else { 255 });
        let resp = responses_at(&img, &bank, 16, 16);
        assert_eq!(resp.0[0], 0);
        assert!(resp.0[1..].iter().all(|&f| f > 0));
    }

    #[test]
    fn responses_match_direct_mask_sum() {
        let bank = MfratBank::new(13).unwrap();
        let mut s = 0x1234_5678u64;
        let img = GrayImage::from_fn(16, 16, |_, _| {
            s = crate::seed::mix64(s);
            s as u8
        });
        for (x, y) in [(0, 0), (7, 9), (15, 3), (12, 15)] {
            let resp = responses_at(&img, &bank, x, y);
            for q in 0..DIRECTIONS {
                let mut sum = 0u64;
                for &(dx, dy) in bank.mask(q) {
                    let xx = (x as isize + dx).clamp(0, 15) as usize;
                    let yy = (y as isize + dy).clamp(0, 15) as usize;
                    sum += img.pixels()[yy * 16 + xx] as u64;
                }
                assert_eq!(resp.0[q], sum);
            }
        }
    }

    #[test]
    fn fusion_examples() {
        let fuse = |f: [u64; 6], p: &FusionParams| fuse_directions(&Responses(f), p);
        assert_eq!(fuse([10, 12, 100, 90, 80, 70], &params()), 1);
        assert_eq!(fuse([10, 100, 90, 12, 80, 70], &params()), 0);
        assert_eq!(fuse([10, 30, 100, 90, 80, 70], &params()), 0);
        let wrap = FusionParams {
            cyclic_wrap: true,
            ..params()
        };
        assert_eq!(fuse([12, 100, 90, 80, 70, 10], &wrap), 11);
        // Paper-literal adjacency leaves the wrap pair unfused.
        assert_eq!(fuse([12, 100, 90, 80, 70, 10], &params()), 10);
        assert_eq!(fuse([50, 60, 20, 25, 90, 90], &params()), 5);
    }

    #[test]
    fn ties_prefer_smaller_direction() {
        assert_eq!(Responses([5; 6]).two_smallest(), (0, 1));
        assert_eq!(Responses([9, 3, 3, 3, 9, 9]).two_smallest(), (1, 2));
        assert_eq!(Responses([1, 9, 9, 9, 9, 1]).two_smallest(), (0, 5));
    }

    #[test]
    fn constant_image_maps_to_code_one() {
        let bank = MfratBank::new(13).unwrap();
        let map = orientation_map(&GrayImage::filled(20, 17, 128), &bank, &params());
        assert!(map.codes().iter().all(|&c| c == 1));
    }

    #[test]
    fn downsample_examples() {
        let map = OrientationMap::new(8, 8, vec![7; 64]);
        let f = downsample_codes(&map, 4).unwrap();
        assert_eq!((f.rows(), f.cols()), (2, 2));
        assert_eq!(f.codes(), &[7, 7, 7, 7]);

        let codes = (0..16).map(|i| if i % 2 == 0 { 9 } else { 3 }).collect();
        let map = OrientationMap::new(4, 4, codes);
        assert_eq!(downsample_codes(&map, 4).unwrap().codes(), &[3]);

        assert!(matches!(
            downsample_codes(&map, 3),
            Err(OrientationError::CellSize { cell: 3, .. })
        ));
    }

    /// Dark 5-pixel line through the center at `degrees`; returns the image and
    /// the pixels on its centerline at least 10 px from the border.
    fn line(size: usize, degrees: f64) -> (GrayImage, Vec<(usize, usize)>) {
        let (s, c) = degrees.to_radians().sin_cos();
        let mid = (size as f64 - 1.0) / 2.0;
        let off = |x: usize, y: usize| ((y as f64 - mid) * c - (x as f64 - mid) * s).abs();
        let img = GrayImage::from_fn(size, size, |x, y| if off(x, y) <= 2.5 { 0 } else { 255 });
        let inner = (10..size - 10)
            .flat_map(|y| (10..size - 10).map(move |x| (x, y)))
            .filter(|&(x, y)| off(x, y) <= 0.5)
            .collect();
        (img, inner)
    }

    #[test]
    fn default_mode_recovers_line_angles_up_to_150_degrees() {
        let bank = MfratBank::new(13).unwrap();
        for t in 0u8..11 {
            let (img, inner) = line(64, 15.0 * f64::from(t));
            let map = orientation_map(&img, &bank, &params());
            let hits = inner.iter().filter(|&&(x, y)| map.get(x, y) == t).count();
            assert!(hits * 5 >= inner.len() * 4, "code {t}: {hits}/{}", inner.len());
        }
        // Without the wrap rule a 165 degree line never fuses to 11.
        let (img, inner) = line(64, 165.0);
        let map = orientation_map(&img, &bank, &params());
        assert!(inner.iter().all(|&(x, y)| map.get(x, y) != 11));
    }

    proptest! {
        #[test]
        fn fused_codes_in_range_and_odd_only_when_adjacent(
            f in prop::array::uniform6(0u64..200), r in 0u64..40, wrap: bool,
        ) {
            let resp = Responses(f);
            let code = fuse_directions(&resp, &FusionParams { r, cyclic_wrap: wrap });
            prop_assert!((code as usize) < CODES);
            let (a, b) = resp.two_smallest();
            if !wrap && code % 2 == 1 {
                prop_assert_eq!(a.abs_diff(b), 1);
            }
        }

        #[test]
        fn fusion_is_monotone_in_threshold(
            f in prop::array::uniform6(0u64..200), r in 0u64..40, extra in 0u64..40, wrap: bool,
        ) {
            let resp = Responses(f);
            let lo = fuse_directions(&resp, &FusionParams { r, cyclic_wrap: wrap });
            let hi = fuse_directions(&resp, &FusionParams { r: r + extra, cyclic_wrap: wrap });
            let (q_min, _) = resp.two_smallest();
            if lo as usize != 2 * q_min {
                prop_assert_eq!(lo, hi);
            }
        }

        #[test]
        fn map_equals_pixelwise_fusion(px in prop::collection::vec(any::<u8>(), 256), r in 0u64..600) {
            let img = GrayImage::new(16, 16, px).unwrap();
            let bank = MfratBank::new(13).unwrap();
            let p = FusionParams { r, cyclic_wrap: false };
            let map = orientation_map(&img, &bank, &p);
            for y in 0..16 {
                for x in 0..16 {
                    prop_assert_eq!(map.get(x, y), fuse_directions(&responses_at(&img, &bank, x, y), &p));
                }
            }
        }

        #[test]
        fn downsample_matches_histogram_oracle(codes in prop::collection::vec(0u8..12, 64)) {
            let map = OrientationMap::new(8, 8, codes.clone());
            let f = downsample_codes(&map, 4).unwrap();
            for cell in 0..4 {
                let (cr, cc) = (cell / 2, cell % 2);
                let mut counts = std::collections::BTreeMap::new();
                for y in cr * 4..cr * 4 + 4 {
                    for x in cc * 4..cc * 4 + 4 {
                        *counts.entry(codes[y * 8 + x]).or_insert(0) += 1;
                    }
                }
                let top = *counts.values().max().unwrap();
                let expected = counts.iter().find(|(_, &n)| n == top).map(|(&c, _)| c).unwrap();
                prop_assert_eq!(f.codes()[cell], expected);
            }
        }
    }
}
