//! Fixed-length ordered point features.
//!
//! Interest points come from a SURF-style fast-Hessian detector built on box
//! filters over an integral image. Detection runs once over the padded image;
//! points are then binned into the block grid, each block keeps the point with
//! the smallest summed distance to its block-mates, and the point is encoded
//! with an 8-neighbour LBP code. The result always has one code per block in
//! row-major block order.

use crate::imaging::{BlockGrid, GrayImage, IntegralImage, Rect};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KeypointError {
    #[error("filter sizes must be odd multiples of 3 in strictly increasing order, got {0:?}")]
    FilterSizes(Vec<usize>),
    #[error("detection threshold must be finite, got {0}")]
    Threshold(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct HessianParams {
    pub filter_sizes: Vec<usize>,
    pub threshold: f64,
    pub dxy_weight: f64,
}

impl Default for HessianParams {
    fn default() -> Self {
        Self {
            filter_sizes: vec![9, 15, 21],
            threshold: 1e3,
            dxy_weight: 0.9,
        }
    }
}

impl HessianParams {
    pub fn validate(&self) -> Result<(), KeypointError> {
        let sizes = &self.filter_sizes;
        let shape_ok = !sizes.is_empty()
            && sizes.iter().all(|&s| s % 3 == 0 && (s / 3) % 2 == 1)
            && sizes.windows(2).all(|w| w[0] < w[1]);
        if !shape_ok {
            return Err(KeypointError::FilterSizes(sizes.clone()));
        }
        if !self.threshold.is_finite() {
            return Err(KeypointError::Threshold(self.threshold));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Keypoint {
    pub x: usize,
    pub y: usize,
    /// Box filter size the point was detected at.
    pub scale: usize,
    /// Determinant of the approximated Hessian.
    pub response: f64,
}

/// Integer box-filter second derivatives at `(x, y)` for filter size `size`,
/// not yet normalized by the filter area.
pub fn box_derivatives(ii: &IntegralImage, x: usize, y: usize, size: usize) -> (i64, i64, i64) {
    let (x, y) = (x as isize, y as isize);
    let lobe = size / 3;
    let l = lobe as isize;
    let border = ((size - 1) / 2) as isize;
    let tall = 2 * lobe - 1;
    let sum = |r: Rect| ii.box_sum(r) as i64;

    let dxx = sum(Rect::new(x - border, y - l + 1, size, tall))
        - 3 * sum(Rect::new(x - l / 2, y - l + 1, lobe, tall));
    let dyy = sum(Rect::new(x - l + 1, y - border, tall, size))
        - 3 * sum(Rect::new(x - l + 1, y - l / 2, tall, lobe));
    let dxy = sum(Rect::new(x + 1, y - l, lobe, lobe)) + sum(Rect::new(x - l, y + 1, lobe, lobe))
        - sum(Rect::new(x - l, y - l, lobe, lobe))
        - sum(Rect::new(x + 1, y + 1, lobe, lobe));
    (dxx, dyy, dxy)
}

/// Area-normalized determinant `Dxx * Dyy - (w * Dxy)^2`.
pub fn hessian_det(ii: &IntegralImage, x: usize, y: usize, size: usize, dxy_weight: f64) -> f64 {
    let (dxx, dyy, dxy) = box_derivatives(ii, x, y, size);
    determinant(dxx, dyy, dxy, size, dxy_weight)
}

#[inline]
pub(crate) fn determinant(dxx: i64, dyy: i64, dxy: i64, size: usize, dxy_weight: f64) -> f64 {
    let area = (size * size) as f64;
    let (dxx, dyy, dxy) = (dxx as f64 / area, dyy as f64 / area, dxy as f64 / area);
    dxx * dyy - (dxy_weight * dxy) * (dxy_weight * dxy)
}

/// Determinant map for one scale. Entries where the filter does not fit
/// inside the image are `None`.
struct ScaleLayer {
    size: usize,
    border: usize,
    width: usize,
    height: usize,
    det: Vec<f64>,
}

impl ScaleLayer {
    fn build(ii: &IntegralImage, size: usize, dxy_weight: f64) -> Option<Self> {
        let (width, height) = (ii.width(), ii.height());
        if width < size || height < size {
            return None;
        }
        let border = (size - 1) / 2;
        let mut det = vec![f64::NEG_INFINITY; width * height];
        for y in border..height - border {
            for x in border..width - border {
                det[y * width + x] = hessian_det(ii, x, y, size, dxy_weight);
            }
        }
        Some(Self {
            size,
            border,
            width,
            height,
            det,
        })
    }

    fn fits(&self, x: usize, y: usize) -> bool {
        x >= self.border
            && y >= self.border
            && x + self.border < self.width
            && y + self.border < self.height
    }

    fn at(&self, x: usize, y: usize) -> f64 {
        self.det[y * self.width + x]
    }

    /// Whether `value` is at least every in-range 3x3 neighbour of `(x, y)`.
    fn dominated_by(&self, value: f64, x: usize, y: usize, skip_center: bool) -> bool {
        for ny in y.saturating_sub(1)..=(y + 1).min(self.height - 1) {
            for nx in x.saturating_sub(1)..=(x + 1).min(self.width - 1) {
                if skip_center && nx == x && ny == y {
                    continue;
                }
                if self.fits(nx, ny) && self.at(nx, ny) > value {
                    return false;
                }
            }
        }
        true
    }
}

/// Fast-Hessian interest points, sorted by `(y, x, scale)`.
///
/// A candidate must reach the threshold and be a maximum over its 3x3
/// neighbourhood at its own scale and at the adjacent scales that exist and
/// fit. Scales larger than the image are skipped.
pub fn detect_surf(img: &GrayImage, params: &HessianParams) -> Vec<Keypoint> {
    detect_with_integral(&IntegralImage::new(img), params)
}

pub fn detect_with_integral(ii: &IntegralImage, params: &HessianParams) -> Vec<Keypoint> {
    let layers: Vec<ScaleLayer> = params
        .filter_sizes
        .iter()
        .filter_map(|&s| ScaleLayer::build(ii, s, params.dxy_weight))
        .collect();
    let mut points = Vec::new();
    for (i, layer) in layers.iter().enumerate() {
        for y in layer.border..layer.height - layer.border {
            for x in layer.border..layer.width - layer.border {
                let v = layer.at(x, y);
                if v < params.threshold || !layer.dominated_by(v, x, y, true) {
                    continue;
                }
                let below = i.checked_sub(1).map(|j| &layers[j]);
                let above = layers.get(i + 1);
                if below.into_iter().chain(above).all(|adj| adj.dominated_by(v, x, y, false)) {
                    points.push(Keypoint {
                        x,
                        y,
                        scale: layer.size,
                        response: v,
                    });
                }
            }
        }
    }
    points.sort_by_key(|k| (k.y, k.x, k.scale));
    points
}

/// Index of the point with the smallest summed Euclidean distance to the
/// others. Sums closer than one part in 10^9 count as tied; ties go to the
/// earliest point.
pub fn representative_index(points: &[(usize, usize)]) -> Option<usize> {
    let sums: Vec<f64> = points
        .iter()
        .map(|&(ax, ay)| {
            points
                .iter()
                .map(|&(bx, by)| {
                    let dx = ax as f64 - bx as f64;
                    let dy = ay as f64 - by as f64;
                    (dx * dx + dy * dy).sqrt()
                })
                .sum()
        })
        .collect();
    let mut best: Option<usize> = None;
    for (j, &d) in sums.iter().enumerate() {
        match best {
            Some(b) if !(d < sums[b] && !nearly_equal(d, sums[b])) => {}
            _ => best = Some(j),
        }
    }
    best
}

/// Relative tolerance used when comparing distance sums.
pub const TIE_TOLERANCE: f64 = 1e-9;

#[inline]
pub(crate) fn nearly_equal(a: f64, b: f64) -> bool {
    (a - b).abs() <= TIE_TOLERANCE * a.abs().max(b.abs()).max(1.0)
}

/// Representative point of one block.
///
/// With no detected points the block falls back to its strongest Hessian
/// pixel at the smallest scale, or to its center when no pixel responds.
pub fn representative_point(
    points: &[(usize, usize)],
    block: Rect,
    ii: &IntegralImage,
    params: &HessianParams,
) -> (usize, usize) {
    if let Some(i) = representative_index(points) {
        return points[i];
    }
    let size = params.filter_sizes[0];
    let border = (size - 1) / 2;
    let mut best: Option<((usize, usize), f64)> = None;
    let x0 = block.x.max(0) as usize;
    let y0 = block.y.max(0) as usize;
    let x1 = (x0 + block.width).min(ii.width());
    let y1 = (y0 + block.height).min(ii.height());
    for y in y0..y1 {
        for x in x0..x1 {
            let fits = x >= border && y >= border && x + border < ii.width() && y + border < ii.height();
            if !fits {
                continue;
            }
            let v = hessian_det(ii, x, y, size, params.dxy_weight);
            if v > 0.0 && best.is_none_or(|(_, b)| v > b) {
                best = Some(((x, y), v));
            }
        }
    }
    best.map(|(p, _)| p).unwrap_or_else(|| {
        let (cx, cy) = block.center();
        (cx as usize, cy as usize)
    })
}

/// Neighbour offsets in bit order: clockwise from the top-left.
pub const LBP_NEIGHBOURS: [(isize, isize); 8] = [
    (-1, -1),
    (0, -1),
    (1, -1),
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
    (-1, 0),
];

/// 8-bit LBP code at `(x, y)`: bit `L` is set when neighbour `L` is at least
/// as bright as the center. Out-of-bounds neighbours are edge-replicated.
pub fn lbp_code(img: &GrayImage, x: usize, y: usize) -> u8 {
    let (x, y) = (x as isize, y as isize);
    let center = img.get_clamped(x, y);
    LBP_NEIGHBOURS
        .iter()
        .enumerate()
        .fold(0u8, |code, (bit, &(dx, dy))| {
            if img.get_clamped(x + dx, y + dy) >= center {
                code | (1 << bit)
            } else {
                code
            }
        })
}

/// One LBP code per block, plus the points they were taken at.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PointFeature {
    codes: Vec<u8>,
    points: Vec<(usize, usize)>,
}

impl PointFeature {
    pub fn new(codes: Vec<u8>, points: Vec<(usize, usize)>) -> Self {
        assert_eq!(codes.len(), points.len(), "one point per code");
        Self { codes, points }
    }

    pub fn from_codes(codes: Vec<u8>) -> Self {
        let points = vec![(0, 0); codes.len()];
        Self { codes, points }
    }

    pub fn codes(&self) -> &[u8] {
        &self.codes
    }

    /// Representative point of each block, padded-image coordinates.
    pub fn points(&self) -> &[(usize, usize)] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }
}

/// Detected keypoints grouped per block, in detection order.
pub fn bin_keypoints(grid: &BlockGrid, keypoints: &[Keypoint]) -> Vec<Vec<(usize, usize)>> {
    let mut bins = vec![Vec::new(); grid.len()];
    for k in keypoints {
        if let Some(b) = grid.block_of(k.x, k.y) {
            bins[b].push((k.x, k.y));
        }
    }
    bins
}

pub fn point_feature(grid: &BlockGrid, params: &HessianParams) -> PointFeature {
    let img = grid.image();
    let ii = IntegralImage::new(img);
    let keypoints = detect_with_integral(&ii, params);
    let bins = bin_keypoints(grid, &keypoints);
    let points: Vec<(usize, usize)> = bins
        .iter()
        .enumerate()
        .map(|(b, pts)| representative_point(pts, grid.block(b), &ii, params))
        .collect();
    let codes = points.iter().map(|&(x, y)| lbp_code(img, x, y)).collect();
    PointFeature::new(codes, points)
}
