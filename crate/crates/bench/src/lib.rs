//! Input generators shared by the benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use packpair_core::Point2;

/// Noisy closed contour of a rectangle, `n` points.
pub fn rect_contour(length: f64, width: f64, n: usize, seed: u64) -> Vec<Point2> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let perimeter = 2.0 * (length + width);
    (0..n)
        .map(|i| {
            let mut s = perimeter * i as f64 / n as f64;
            let jitter = rng.random_range(-0.5..0.5);
            if s < length {
                return Point2::new(s, jitter);
            }
            s -= length;
            if s < width {
                return Point2::new(length + jitter, s);
            }
            s -= width;
            if s < length {
                return Point2::new(length - s, width + jitter);
            }
            s -= length;
            Point2::new(jitter, width - s)
        })
        .collect()
}
