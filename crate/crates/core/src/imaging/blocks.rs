use super::{GrayImage, ImagingError, Rect};

/// Edge-padded image tiled into non-overlapping `block x block` squares.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockGrid {
    image: GrayImage,
    block: usize,
    rows: usize,
    cols: usize,
}

impl BlockGrid {
    /// The padded raster all blocks refer to.
    pub fn image(&self) -> &GrayImage {
        &self.image
    }

    pub fn block_size(&self) -> usize {
        self.block
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Number of blocks (`m`).
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Block `index` in row-major order.
    pub fn block(&self, index: usize) -> Rect {
        let (r, c) = (index / self.cols, index % self.cols);
        Rect::new(
            (c * self.block) as isize,
            (r * self.block) as isize,
            self.block,
            self.block,
        )
    }

    pub fn blocks(&self) -> impl Iterator<Item = Rect> + '_ {
        (0..self.len()).map(|i| self.block(i))
    }

    /// Row-major index of the block containing pixel `(x, y)` of the padded image.
    pub fn block_of(&self, x: usize, y: usize) -> Option<usize> {
        let (c, r) = (x / self.block, y / self.block);
        (c < self.cols && r < self.rows).then_some(r * self.cols + c)
    }
}

/// Pads by repeating the last row and column until both dimensions are
/// multiples of `n`.
pub fn pad_to_multiple(img: &GrayImage, n: usize) -> GrayImage {
    let w = img.width().div_ceil(n) * n;
    let h = img.height().div_ceil(n) * n;
    if w == img.width() && h == img.height() {
        return img.clone();
    }
    GrayImage::from_fn(w, h, |x, y| img.get_clamped(x as isize, y as isize))
}

/// Pads `img` to a multiple of `n` and tiles it, checking the block count
/// against `target_m`.
pub fn pad_and_block(img: &GrayImage, n: usize, target_m: usize) -> Result<BlockGrid, ImagingError> {
    let grid = BlockGrid::tile(img, n)?;
    if grid.len() != target_m {
        return Err(ImagingError::BlockCountMismatch {
            block: n,
            expected: target_m,
            actual: grid.len(),
        });
    }
    Ok(grid)
}

impl BlockGrid {
    /// Pads and tiles without checking the resulting block count.
    pub fn tile(img: &GrayImage, n: usize) -> Result<Self, ImagingError> {
        if n < 3 {
            return Err(ImagingError::BlockSize(n));
        }
        let image = pad_to_multiple(img, n);
        Ok(Self {
            rows: image.height() / n,
            cols: image.width() / n,
            block: n,
            image,
        })
    }
}
