use super::GrayImage;

/// Half-open pixel rectangle `[x, x + width) x [y, y + height)`. The origin may
/// lie outside the image; lookups clip it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Rect {
    pub x: isize,
    pub y: isize,
    pub width: usize,
    pub height: usize,
}

impl Rect {
    pub const fn new(x: isize, y: isize, width: usize, height: usize) -> Self {
        Self {
            x,
            y,
            width,
            height,
        }
    }

    pub fn contains(&self, x: isize, y: isize) -> bool {
        x >= self.x
            && y >= self.y
            && x < self.x + self.width as isize
            && y < self.y + self.height as isize
    }

    pub fn center(&self) -> (isize, isize) {
        (
            self.x + (self.width / 2) as isize,
            self.y + (self.height / 2) as isize,
        )
    }
}

/// Summed-area table with a zero guard row and column.
///
/// `at(u, v)` is the sum of all pixels with `x < u` and `y < v`.
#[derive(Clone, PartialEq, Eq)]
pub struct IntegralImage {
    width: usize,
    height: usize,
    table: Vec<u64>,
}

impl std::fmt::Debug for IntegralImage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("IntegralImage")
            .field("width", &self.width)
            .field("height", &self.height)
            .finish_non_exhaustive()
    }
}

impl IntegralImage {
    pub fn new(img: &GrayImage) -> Self {
        let (w, h) = (img.width(), img.height());
        let stride = w + 1;
        let mut table = vec![0u64; stride * (h + 1)];
        for y in 0..h {
            let mut row_sum = 0u64;
            let row = img.row(y);
            for x in 0..w {
                row_sum += u64::from(row[x]);
                table[(y + 1) * stride + x + 1] = table[y * stride + x + 1] + row_sum;
            }
        }
        Self {
            width: w,
            height: h,
            table,
        }
    }

    /// Image width in pixels (the table is one wider).
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn at(&self, u: usize, v: usize) -> u64 {
        self.table[v * (self.width + 1) + u]
    }

    /// Sum over `rect` clipped to the image; zero outside.
    #[inline]
    pub fn box_sum(&self, rect: Rect) -> u64 {
        let x0 = rect.x.clamp(0, self.width as isize) as usize;
        let y0 = rect.y.clamp(0, self.height as isize) as usize;
        let x1 = (rect.x + rect.width as isize).clamp(0, self.width as isize) as usize;
        let y1 = (rect.y + rect.height as isize).clamp(0, self.height as isize) as usize;
        if x1 <= x0 || y1 <= y0 {
            return 0;
        }
        self.at(x1, y1) + self.at(x0, y0) - self.at(x1, y0) - self.at(x0, y1)
    }

    /// Total intensity of the image.
    pub fn total(&self) -> u64 {
        self.at(self.width, self.height)
    }
}

/// Convenience wrapper matching the free-function form used elsewhere.
pub fn integral(img: &GrayImage) -> IntegralImage {
    IntegralImage::new(img)
}
