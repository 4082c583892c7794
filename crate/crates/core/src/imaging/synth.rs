//! Deterministic synthetic palmprints for desk-scale testing.
//!
//! An identity is a set of quadratic arcs plus a faint skin texture (a sum of
//! cosine gratings), both depending only on `(seed, identity)`. Each sample
//! re-renders them after a small rigid jitter and adds Gaussian pixel noise
//! keyed by `(seed, identity, sample)`.

use super::GrayImage;
use crate::seed::derive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

const BACKGROUND: f32 = 200.0;
const LINE: f32 = 40.0;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub identities: usize,
    pub samples: usize,
    pub seed: u64,
    /// Output width and height in pixels.
    pub size: usize,
    /// Principal dark arcs per palm.
    pub lines: usize,
    /// Fainter, thinner identity-specific creases.
    pub wrinkles: usize,
    /// Maximum absolute translation per axis, in pixels.
    pub translate_px: f64,
    /// Maximum absolute rotation about the image center, in radians.
    pub rotate_rad: f64,
    /// Standard deviation of the additive pixel noise.
    pub noise_sigma: f64,
    /// Standard deviation of the identity-specific skin texture, in gray levels.
    pub texture_amplitude: f64,
    /// Cosine gratings summed to form the skin texture.
    pub texture_waves: usize,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            identities: 20,
            samples: 8,
            seed: 0x5eed,
            size: 144,
            lines: 6,
            wrinkles: 24,
            translate_px: 0.5,
            rotate_rad: 0.01,
            noise_sigma: 4.0,
            texture_amplitude: 12.0,
            texture_waves: 16,
        }
    }
}

/// Quadratic Bezier stroke in pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arc {
    pub control: [(f64, f64); 3],
    pub width: f64,
    pub intensity: f32,
}

impl Arc {
    fn point(&self, t: f64) -> (f64, f64) {
        let [p0, p1, p2] = self.control;
        let u = 1.0 - t;
        (
            u * u * p0.0 + 2.0 * u * t * p1.0 + t * t * p2.0,
            u * u * p0.1 + 2.0 * u * t * p1.1 + t * t * p2.1,
        )
    }
}

fn random_arc(rng: &mut ChaCha8Rng, size: f64, long: bool) -> Arc {
    let margin = 0.1 * size;
    let start = (
        rng.random_range(margin..size - margin),
        rng.random_range(margin..size - margin),
    );
    let (len_lo, len_hi) = if long { (0.4, 0.8) } else { (0.1, 0.3) };
    let len = rng.random_range(len_lo..len_hi) * size;
    let phi = rng.random_range(0.0..std::f64::consts::PI);
    let (s, c) = phi.sin_cos();
    let end = (start.0 + len * c, start.1 + len * s);
    let bend = rng.random_range(-0.25..0.25) * len;
    let mid = (
        0.5 * (start.0 + end.0) - bend * s,
        0.5 * (start.1 + end.1) + bend * c,
    );
    let (width, intensity) = if long {
        (rng.random_range(2.0..4.0), LINE)
    } else {
        (rng.random_range(1.5..2.5), rng.random_range(90.0..140.0))
    };
    Arc {
        control: [start, mid, end],
        width,
        intensity,
    }
}

/// Plane-wave component of the skin texture.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Wave {
    /// Spatial frequency vector, radians per pixel.
    k: (f64, f64),
    phase: f64,
}

fn identity_texture(spec: &SynthSpec, identity: usize) -> Vec<Wave> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive(spec.seed, &[identity as u64, 0, 2]));
    (0..spec.texture_waves)
        .map(|_| {
            let phi = rng.random_range(0.0..std::f64::consts::PI);
            let wavelength = rng.random_range(6.0..16.0);
            let w = std::f64::consts::TAU / wavelength;
            Wave {
                k: (w * phi.cos(), w * phi.sin()),
                phase: rng.random_range(0.0..std::f64::consts::TAU),
            }
        })
        .collect()
}

/// Arcs of `identity` before any per-sample jitter.
pub fn identity_arcs(spec: &SynthSpec, identity: usize) -> Vec<Arc> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive(spec.seed, &[identity as u64]));
    let size = spec.size as f64;
    let mut arcs: Vec<Arc> = (0..spec.lines)
        .map(|_| random_arc(&mut rng, size, true))
        .collect();
    arcs.extend((0..spec.wrinkles).map(|_| random_arc(&mut rng, size, false)));
    arcs
}

/// Rotation about the image center followed by a translation.
#[derive(Debug, Clone, Copy)]
struct Rigid {
    center: f64,
    sin: f64,
    cos: f64,
    tx: f64,
    ty: f64,
}

impl Rigid {
    fn draw(spec: &SynthSpec, rng: &mut ChaCha8Rng) -> Self {
        let tx = spread(rng, spec.translate_px);
        let ty = spread(rng, spec.translate_px);
        let (sin, cos) = spread(rng, spec.rotate_rad).sin_cos();
        Self {
            center: 0.5 * (spec.size as f64 - 1.0),
            sin,
            cos,
            tx,
            ty,
        }
    }

    fn apply(&self, p: (f64, f64)) -> (f64, f64) {
        let (dx, dy) = (p.0 - self.center, p.1 - self.center);
        (
            self.center + self.cos * dx - self.sin * dy + self.tx,
            self.center + self.sin * dx + self.cos * dy + self.ty,
        )
    }

    fn invert(&self, p: (f64, f64)) -> (f64, f64) {
        let (dx, dy) = (p.0 - self.center - self.tx, p.1 - self.center - self.ty);
        (
            self.center + self.cos * dx + self.sin * dy,
            self.center - self.sin * dx + self.cos * dy,
        )
    }
}

fn spread(rng: &mut ChaCha8Rng, max: f64) -> f64 {
    if max > 0.0 {
        rng.random_range(-max..=max)
    } else {
        0.0
    }
}

fn distance_to_segment(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (vx, vy) = (b.0 - a.0, b.1 - a.1);
    let len2 = vx * vx + vy * vy;
    let t = if len2 > 0.0 {
        (((p.0 - a.0) * vx + (p.1 - a.1) * vy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let (qx, qy) = (a.0 + t * vx - p.0, a.1 + t * vy - p.1);
    (qx * qx + qy * qy).sqrt()
}

/// Darkens `canvas` along `arc` with one pixel of anti-aliasing at the rim.
fn stroke(canvas: &mut [f32], size: usize, arc: &Arc) {
    const SEGMENTS: usize = 48;
    let half = 0.5 * arc.width;
    let reach = half + 1.0;
    let mut prev = arc.point(0.0);
    for s in 1..=SEGMENTS {
        let next = arc.point(s as f64 / SEGMENTS as f64);
        let x0 = (prev.0.min(next.0) - reach).floor().max(0.0) as usize;
        let y0 = (prev.1.min(next.1) - reach).floor().max(0.0) as usize;
        let x1 = ((prev.0.max(next.0) + reach).ceil().max(0.0) as usize).min(size - 1);
        let y1 = ((prev.1.max(next.1) + reach).ceil().max(0.0) as usize).min(size - 1);
        for y in y0..=y1 {
            for x in x0..=x1 {
                let d = distance_to_segment((x as f64, y as f64), prev, next);
                let coverage = (half + 0.5 - d).clamp(0.0, 1.0) as f32;
                if coverage > 0.0 {
                    // Blend toward the stroke intensity; never brightens.
                    let px = &mut canvas[y * size + x];
                    *px = px.min(*px - (*px - arc.intensity) * coverage);
                }
            }
        }
        prev = next;
    }
}

/// Renders sample `sample` of `identity`. Pure function of its arguments.
pub fn synth_palm(spec: &SynthSpec, identity: usize, sample: usize) -> GrayImage {
    let size = spec.size;
    let mut arcs = identity_arcs(spec, identity);
    let mut rng =
        ChaCha8Rng::seed_from_u64(derive(spec.seed, &[identity as u64, sample as u64, 1]));
    let motion = Rigid::draw(spec, &mut rng);
    for arc in &mut arcs {
        for p in &mut arc.control {
            *p = motion.apply(*p);
        }
    }
    let waves = identity_texture(spec, identity);
    let gain = if waves.is_empty() {
        0.0
    } else {
        spec.texture_amplitude / (0.5 * waves.len() as f64).sqrt()
    };
    let mut canvas: Vec<f32> = (0..size * size)
        .map(|i| {
            // The texture is attached to the palm, so sample it in palm coordinates.
            let (u, v) = motion.invert(((i % size) as f64, (i / size) as f64));
            let field: f64 = waves
                .iter()
                .map(|w| (w.k.0 * u + w.k.1 * v + w.phase).cos())
                .sum();
            BACKGROUND + (gain * field) as f32
        })
        .collect();
    for arc in &arcs {
        stroke(&mut canvas, size, arc);
    }
    let noise = Normal::new(0.0f32, spec.noise_sigma.max(0.0) as f32).expect("finite sigma");
    let pixels = canvas
        .into_iter()
        .map(|v| {
            let n = if spec.noise_sigma > 0.0 {
                noise.sample(&mut rng)
            } else {
                0.0
            };
            (v + n).round().clamp(0.0, 255.0) as u8
        })
        .collect();
    GrayImage::new(size, size, pixels).expect("non-empty synthetic canvas")
}
