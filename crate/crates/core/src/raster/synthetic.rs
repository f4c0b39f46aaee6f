//! Synthetic before/after pairs with a known reference change map.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{BinaryMap, Label, Raster};
use crate::{Error, Result};

pub const MIN_SYNTHETIC_SIZE: usize = 64;
pub const TONE_DARK: f64 = 50.0;
pub const TONE_BRIGHT: f64 = 200.0;

const MIN_REGION_FRACTION: f64 = 0.03;
const MAX_REGION_FRACTION: f64 = 0.055;
// Clear pixels kept between change regions and from the image border, wider
// than the footprint of the 3x3 smoothing followed by the 3x3 window sum.
const GAP: usize = 6;
const MARGIN: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticPair {
    pub before: Raster,
    pub after: Raster,
    pub reference: BinaryMap,
}

#[derive(Debug, Clone, Copy)]
enum Shape {
    Rect {
        x0: usize,
        y0: usize,
        w: usize,
        h: usize,
    },
    Disk {
        cx: usize,
        cy: usize,
        r: usize,
    },
}

impl Shape {
    fn contains(&self, x: usize, y: usize) -> bool {
        match *self {
            Shape::Rect { x0, y0, w, h } => x >= x0 && x < x0 + w && y >= y0 && y < y0 + h,
            Shape::Disk { cx, cy, r } => {
                let dx = x as f64 - cx as f64;
                let dy = y as f64 - cy as f64;
                let rr = r as f64 + 0.5;
                dx * dx + dy * dy <= rr * rr
            }
        }
    }

    /// Inclusive bounding box `(x0, y0, x1, y1)`.
    fn bbox(&self) -> (usize, usize, usize, usize) {
        match *self {
            Shape::Rect { x0, y0, w, h } => (x0, y0, x0 + w - 1, y0 + h - 1),
            Shape::Disk { cx, cy, r } => (cx - r, cy - r, cx + r, cy + r),
        }
    }

    fn area(&self) -> usize {
        let (x0, y0, x1, y1) = self.bbox();
        (y0..=y1)
            .flat_map(|y| (x0..=x1).map(move |x| (x, y)))
            .filter(|&(x, y)| self.contains(x, y))
            .count()
    }
}

fn boxes_clear(a: (usize, usize, usize, usize), b: (usize, usize, usize, usize)) -> bool {
    a.2 + GAP < b.0 || b.2 + GAP < a.0 || a.3 + GAP < b.1 || b.3 + GAP < a.1
}

/// Two-tone scene plus 2-4 change regions (rectangles or disks, each at least
/// 3% of the image) whose tone is flipped in the `after` image.
///
/// `before` is split into a dark (50) and a bright (200) part by a slightly
/// slanted boundary. The reference map marks exactly the flipped pixels.
pub fn make_synthetic_pair(width: usize, height: usize, seed: u64) -> Result<SyntheticPair> {
    if width < MIN_SYNTHETIC_SIZE || height < MIN_SYNTHETIC_SIZE {
        return Err(Error::ImageTooSmall {
            width,
            height,
            min: MIN_SYNTHETIC_SIZE,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let split = rng.random_range(width as f64 / 3.0..2.0 * width as f64 / 3.0);
    let slope = rng.random_range(-0.2..0.2);
    let before = Raster::from_fn(width, height, |x, y| {
        if (x as f64) < split + slope * (y as f64 - height as f64 / 2.0) {
            TONE_DARK
        } else {
            TONE_BRIGHT
        }
    });

    let shapes = place_shapes(width, height, &mut rng);
    let reference = BinaryMap::from_fn(width, height, |x, y| {
        if shapes.iter().any(|s| s.contains(x, y)) {
            Label::Changed
        } else {
            Label::Unchanged
        }
    });
    let after = Raster::from_fn(width, height, |x, y| {
        let v = before.get(x, y);
        if reference.get(x, y).is_changed() {
            if v == TONE_DARK {
                TONE_BRIGHT
            } else {
                TONE_DARK
            }
        } else {
            v
        }
    });

    Ok(SyntheticPair {
        before,
        after,
        reference,
    })
}

fn place_shapes(width: usize, height: usize, rng: &mut ChaCha8Rng) -> Vec<Shape> {
    let total = (width * height) as f64;
    let min_pixels = (MIN_REGION_FRACTION * total).ceil() as usize;
    'attempt: loop {
        let count = rng.random_range(2..=4usize);
        let mut shapes: Vec<Shape> = Vec::with_capacity(count);
        while shapes.len() < count {
            let target = rng.random_range(MIN_REGION_FRACTION..MAX_REGION_FRACTION) * total;
            let mut placed = None;
            for _ in 0..200 {
                let candidate = random_shape(width, height, target, min_pixels, rng);
                let Some(shape) = candidate else { continue };
                if shapes.iter().all(|s| boxes_clear(s.bbox(), shape.bbox())) {
                    placed = Some(shape);
                    break;
                }
            }
            match placed {
                Some(shape) => shapes.push(shape),
                // Crowded layout; draw a fresh one.
                None => continue 'attempt,
            }
        }
        return shapes;
    }
}

fn random_shape(
    width: usize,
    height: usize,
    target: f64,
    min_pixels: usize,
    rng: &mut ChaCha8Rng,
) -> Option<Shape> {
    if rng.random::<bool>() {
        let aspect = rng.random_range(0.6..1.6);
        let w = (target * aspect).sqrt().ceil() as usize;
        let mut h = (target / w as f64).ceil() as usize;
        while w * h < min_pixels {
            h += 1;
        }
        if w + 2 * MARGIN > width || h + 2 * MARGIN > height {
            return None;
        }
        let x0 = rng.random_range(MARGIN..=width - MARGIN - w);
        let y0 = rng.random_range(MARGIN..=height - MARGIN - h);
        Some(Shape::Rect { x0, y0, w, h })
    } else {
        let mut r = ((target / std::f64::consts::PI).sqrt() - 0.5)
            .ceil()
            .max(1.0) as usize;
        while (Shape::Disk { cx: r, cy: r, r }).area() < min_pixels {
            r += 1;
        }
        if 2 * (r + MARGIN) + 1 > width.min(height) {
            return None;
        }
        let cx = rng.random_range(r + MARGIN..width - r - MARGIN);
        let cy = rng.random_range(r + MARGIN..height - r - MARGIN);
        Some(Shape::Disk { cx, cy, r })
    }
}
