//! Canny edge detector used as the comparison baseline.

use crate::error::{Error, Result};
use crate::imaging::{gaussian_smooth, GrayImage};
use crate::postproc::BinaryEdgeMap;

/// Canny thresholds as fractions of the maximum gradient magnitude, plus
/// the pre-smoothing width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CannyParams {
    pub t_low: f64,
    pub t_high: f64,
    pub sigma_c: f64,
}

impl CannyParams {
    pub fn new(t_low: f64, t_high: f64, sigma_c: f64) -> Result<Self> {
        if !(0.0 < t_low && t_low < t_high && t_high < 1.0) {
            return Err(Error::parameter(format!(
                "thresholds must satisfy 0 < t_low < t_high < 1, got ({t_low}, {t_high})"
            )));
        }
        if !(sigma_c > 0.0) {
            return Err(Error::parameter(format!(
                "sigma_c must be > 0, got {sigma_c}"
            )));
        }
        Ok(Self {
            t_low,
            t_high,
            sigma_c,
        })
    }
}

impl Default for CannyParams {
    fn default() -> Self {
        Self {
            t_low: 0.1,
            t_high: 0.2,
            sigma_c: std::f64::consts::SQRT_2,
        }
    }
}

/// 3x3 Sobel gradients with replicate borders.
fn sobel(img: &GrayImage) -> (Vec<f64>, Vec<f64>) {
    let (w, h) = (img.width(), img.height());
    let mut gx = vec![0.0; w * h];
    let mut gy = vec![0.0; w * h];
    for y in 0..h as isize {
        for x in 0..w as isize {
            let p = |dx: isize, dy: isize| img.get_clamped(x + dx, y + dy);
            let idx = y as usize * w + x as usize;
            gx[idx] = (p(1, -1) + 2.0 * p(1, 0) + p(1, 1)) - (p(-1, -1) + 2.0 * p(-1, 0) + p(-1, 1));
            gy[idx] = (p(-1, 1) + 2.0 * p(0, 1) + p(1, 1)) - (p(-1, -1) + 2.0 * p(0, -1) + p(1, -1));
        }
    }
    (gx, gy)
}

/// Gradient direction quantized to 4 bins; returns the two neighbor
/// offsets along the gradient.
#[inline]
fn direction_neighbors(gx: f64, gy: f64) -> ((isize, isize), (isize, isize)) {
    let mut angle = gy.atan2(gx).to_degrees();
    if angle < 0.0 {
        angle += 180.0;
    }
    if !(22.5..157.5).contains(&angle) {
        ((-1, 0), (1, 0))
    } else if angle < 67.5 {
        ((-1, -1), (1, 1))
    } else if angle < 112.5 {
        ((0, -1), (0, 1))
    } else {
        ((1, -1), (-1, 1))
    }
}

/// Full Canny pipeline: Gaussian smoothing, Sobel gradients, non-maximum
/// suppression, double thresholding at `t_low * M` / `t_high * M` where
/// `M` is the maximum magnitude, and 8-connected hysteresis.
pub fn canny_edges(img: &GrayImage, p: &CannyParams) -> Result<BinaryEdgeMap> {
    let (w, h) = (img.width(), img.height());
    let smoothed = gaussian_smooth(img, p.sigma_c)?;
    let (gx, gy) = sobel(&smoothed);
    let mag: Vec<f64> = gx.iter().zip(&gy).map(|(a, b)| a.hypot(*b)).collect();
    let max_mag = mag.iter().cloned().fold(0.0_f64, f64::max);
    if max_mag == 0.0 {
        return BinaryEdgeMap::new(w, h, vec![0; w * h]);
    }

    // Non-maximum suppression. Ties along the gradient are broken
    // asymmetrically (strict on one side) so an ideal two-pixel plateau
    // keeps exactly one pixel.
    let mut nms = vec![0.0; w * h];
    for y in 0..h as isize {
        for x in 0..w as isize {
            let idx = y as usize * w + x as usize;
            let m = mag[idx];
            if m == 0.0 {
                continue;
            }
            let ((ax, ay), (bx, by)) = direction_neighbors(gx[idx], gy[idx]);
            let fetch = |nx: isize, ny: isize| -> f64 {
                if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                    0.0
                } else {
                    mag[ny as usize * w + nx as usize]
                }
            };
            let before = fetch(x + ax, y + ay);
            let after = fetch(x + bx, y + by);
            if m > before && m >= after {
                nms[idx] = m;
            }
        }
    }

    let low = p.t_low * max_mag;
    let high = p.t_high * max_mag;
    let mut bits = vec![0u8; w * h];
    let mut stack: Vec<usize> = Vec::new();
    for idx in 0..w * h {
        if nms[idx] >= high {
            bits[idx] = 1;
            stack.push(idx);
        }
    }
    // Hysteresis: grow from strong pixels through weak ones.
    while let Some(idx) = stack.pop() {
        let (x, y) = ((idx % w) as isize, (idx / w) as isize);
        for dy in -1..=1_isize {
            for dx in -1..=1_isize {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                    continue;
                }
                let nidx = ny as usize * w + nx as usize;
                if bits[nidx] == 0 && nms[nidx] >= low {
                    bits[nidx] = 1;
                    stack.push(nidx);
                }
            }
        }
    }
    BinaryEdgeMap::new(w, h, bits)
}
