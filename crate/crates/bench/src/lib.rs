//! Shared fixtures for the benchmark suite.

use mrpi_core::GrayImage;

/// Dark disk on a light background, the standard synthetic fixture.
pub fn disk_image(size: usize, radius: f64) -> GrayImage {
    let c = (size as f64 - 1.0) / 2.0;
    GrayImage::from_fn(size, size, |x, y| {
        let d = ((x as f64 - c).powi(2) + (y as f64 - c).powi(2)).sqrt();
        // Soft one-pixel transition so the edge indicator sees a smooth
        // gradient.
        let t = (d - radius).clamp(-1.0, 1.0) * 0.5 + 0.5;
        40.0 + t * 180.0
    })
}
