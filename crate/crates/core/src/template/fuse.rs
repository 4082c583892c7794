use super::TemplateError;
use crate::keypoints::PointFeature;
use crate::orientation::OrientationFeature;

/// Affine maps taking each code alphabet to roughly zero mean, unit variance
/// under a uniform distribution. Fixed constants; nothing is fitted to data.
pub const ORIENTATION_CENTER: f64 = 5.5;
pub const ORIENTATION_SCALE: f64 = 3.452;
pub const POINT_CENTER: f64 = 127.5;
pub const POINT_SCALE: f64 = 73.9;

/// How orientation codes enter the fused vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum FusionMode {
    /// One scalar per code.
    #[default]
    Raw,
    /// Each code `v` becomes `(cos(pi v / 6), sin(pi v / 6))`, so codes 0 and 11
    /// end up neighbours on the unit circle.
    Angular,
}

impl FusionMode {
    pub fn as_byte(self) -> u8 {
        match self {
            Self::Raw => 0,
            Self::Angular => 1,
        }
    }

    pub fn from_byte(b: u8) -> Option<Self> {
        match b {
            0 => Some(Self::Raw),
            1 => Some(Self::Angular),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Raw => "raw",
            Self::Angular => "angular",
        }
    }
}

impl std::str::FromStr for FusionMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "raw" => Ok(Self::Raw),
            "angular" => Ok(Self::Angular),
            other => Err(format!("unknown fusion mode {other:?} (expected raw or angular)")),
        }
    }
}

/// Expected shape of the fused vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeatureLayout {
    pub orientation_len: usize,
    pub point_len: usize,
    pub mode: FusionMode,
    /// Apply the fixed affine maps; off gives plain concatenation of codes.
    pub scaled: bool,
}

impl FeatureLayout {
    pub fn dimension(&self) -> usize {
        match self.mode {
            FusionMode::Raw => self.orientation_len + self.point_len,
            FusionMode::Angular => 2 * self.orientation_len + self.point_len,
        }
    }
}

/// Real-valued fused feature: orientation segment first, then point segment.
#[derive(Debug, Clone, PartialEq)]
pub struct FusedFeature {
    values: Vec<f64>,
    mode: FusionMode,
}

impl FusedFeature {
    pub fn new(values: Vec<f64>, mode: FusionMode) -> Result<Self, TemplateError> {
        if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
            return Err(TemplateError::NonFinite);
        }
        Ok(Self { values, mode })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mode(&self) -> FusionMode {
        self.mode
    }

    pub fn dimension(&self) -> usize {
        self.values.len()
    }

    /// Copy multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self, TemplateError> {
        Self::new(self.values.iter().map(|v| v * factor).collect(), self.mode)
    }
}

pub fn fuse(
    orientation: &OrientationFeature,
    points: &PointFeature,
    layout: &FeatureLayout,
) -> Result<FusedFeature, TemplateError> {
    if orientation.len() != layout.orientation_len {
        return Err(TemplateError::LengthMismatch {
            segment: "orientation",
            expected: layout.orientation_len,
            actual: orientation.len(),
        });
    }
    if points.len() != layout.point_len {
        return Err(TemplateError::LengthMismatch {
            segment: "point",
            expected: layout.point_len,
            actual: points.len(),
        });
    }
    let mut values = Vec::with_capacity(layout.dimension());
    match layout.mode {
        FusionMode::Raw => values.extend(orientation.codes().iter().map(|&v| {
            if layout.scaled {
                (f64::from(v) - ORIENTATION_CENTER) / ORIENTATION_SCALE
            } else {
                f64::from(v)
            }
        })),
        FusionMode::Angular => {
            for &v in orientation.codes() {
                let (s, c) = (f64::from(v) * std::f64::consts::PI / 6.0).sin_cos();
                values.push(c);
                values.push(s);
            }
        }
    }
    values.extend(points.codes().iter().map(|&v| {
        if layout.scaled {
            (f64::from(v) - POINT_CENTER) / POINT_SCALE
        } else {
            f64::from(v)
        }
    }));
    FusedFeature::new(values, layout.mode)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn layout(o: usize, p: usize, mode: FusionMode) -> FeatureLayout {
        FeatureLayout {
            orientation_len: o,
            point_len: p,
            mode,
            scaled: true,
        }
    }

    #[test]
    fn zeros_map_to_fixed_offsets() {
        let o = OrientationFeature::new(2, 2, vec![0; 4]);
        let p = PointFeature::from_codes(vec![0; 3]);
        let c = fuse(&o, &p, &layout(4, 3, FusionMode::Raw)).unwrap();
        assert_eq!(c.dimension(), 7);
        for v in &c.values()[..4] {
            assert!((v - -1.593).abs() < 5e-4, "{v}");
        }
        for v in &c.values()[4..] {
            assert!((v - -1.725).abs() < 5e-4, "{v}");
        }
    }

    #[test]
    fn canonical_dimension() {
        assert_eq!(layout(1296, 36, FusionMode::Raw).dimension(), 1332);
        assert_eq!(layout(1296, 36, FusionMode::Angular).dimension(), 2628);
    }

    #[test]
    fn angular_embedding() {
        let o = OrientationFeature::new(1, 3, vec![0, 6, 11]);
        let p = PointFeature::from_codes(vec![255]);
        let c = fuse(&o, &p, &layout(3, 1, FusionMode::Angular)).unwrap();
        let v = c.values();
        assert!((v[0] - 1.0).abs() < 1e-12 && v[1].abs() < 1e-12);
        assert!((v[2] + 1.0).abs() < 1e-12 && v[3].abs() < 1e-12);
        // Codes 11 and 0 are neighbours on the circle.
        let gap = ((v[4] - v[0]).powi(2) + (v[5] - v[1]).powi(2)).sqrt();
        assert!(gap < 0.52, "{gap}");
        assert!((v[6] - (255.0 - 127.5) / 73.9).abs() < 1e-12);
    }

    #[test]
    fn unscaled_is_plain_concatenation() {
        let o = OrientationFeature::new(1, 2, vec![3, 11]);
        let p = PointFeature::from_codes(vec![200]);
        let l = FeatureLayout {
            scaled: false,
            ..layout(2, 1, FusionMode::Raw)
        };
        assert_eq!(fuse(&o, &p, &l).unwrap().values(), &[3.0, 11.0, 200.0]);
    }

    #[test]
    fn length_mismatch_is_rejected() {
        let o = OrientationFeature::new(1, 2, vec![3, 11]);
        let p = PointFeature::from_codes(vec![200]);
        assert!(matches!(
            fuse(&o, &p, &layout(3, 1, FusionMode::Raw)),
            Err(TemplateError::LengthMismatch { segment: "orientation", .. })
        ));
        assert!(matches!(
            fuse(&o, &p, &layout(2, 2, FusionMode::Raw)),
            Err(TemplateError::LengthMismatch { segment: "point", .. })
        ));
    }
}
