//! Image loading, smoothing, differentiation and resizing primitives.
//!
//! All operations are pure functions over [`GrayImage`]; pixel data is
//! stored row-major as `f64`.

use std::path::Path;

use image::{DynamicImage, ImageFormat, ImageReader};

use crate::error::{Error, Result};

/// ITU-R BT.601 luminance weights used for RGB to gray conversion.
const LUMA_WEIGHTS: [f64; 3] = [0.299, 0.587, 0.114];

/// A real-valued intensity grid. Values are in `[0, 255]` after loading
/// from disk; synthetic images may use any finite range.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::dims(format!(
                "pixel buffer of length {} does not match {}x{}",
                data.len(),
                width,
                height
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::parameter("image contains non-finite values"));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    pub fn constant(width: usize, height: usize, value: f64) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    /// Sample with indices clamped to the image bounds (replicate border).
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> f64 {
        let x = x.clamp(0, self.width as isize - 1) as usize;
        let y = y.clamp(0, self.height as isize - 1) as usize;
        self.data[y * self.width + x]
    }
}

/// Per-pixel partial derivatives of a grid, same dimensions as the source.
#[derive(Debug, Clone)]
pub struct VectorField {
    pub width: usize,
    pub height: usize,
    pub dx: Vec<f64>,
    pub dy: Vec<f64>,
}

impl VectorField {
    /// Gradient magnitude at a pixel index.
    #[inline]
    pub fn magnitude(&self, idx: usize) -> f64 {
        self.dx[idx].hypot(self.dy[idx])
    }
}

/// Load a PNG (8-bit gray or RGB) or binary PGM image. RGB inputs are
/// converted to luminance with BT.601 weights; output values lie in
/// `[0, 255]`.
pub fn load_image(path: impl AsRef<Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    let reader = ImageReader::open(path)
        .map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?
        .with_guessed_format()
        .map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;

    match reader.format() {
        Some(ImageFormat::Png) | Some(ImageFormat::Pnm) => {}
        other => {
            return Err(Error::Format {
                path: path.to_path_buf(),
                message: format!("unsupported format {:?}; expected PNG or PGM", other),
            })
        }
    }

    let decoded = reader.decode().map_err(|e| Error::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;

    let (width, height) = (decoded.width() as usize, decoded.height() as usize);
    let data = match decoded {
        DynamicImage::ImageLuma8(img) => img.into_raw().into_iter().map(f64::from).collect(),
        DynamicImage::ImageRgb8(img) => img
            .into_raw()
            .chunks_exact(3)
            .map(|px| {
                LUMA_WEIGHTS[0] * f64::from(px[0])
                    + LUMA_WEIGHTS[1] * f64::from(px[1])
                    + LUMA_WEIGHTS[2] * f64::from(px[2])
            })
            .collect(),
        other => {
            return Err(Error::Format {
                path: path.to_path_buf(),
                message: format!(
                    "unsupported pixel layout {:?}; expected 8-bit gray or RGB",
                    other.color()
                ),
            })
        }
    };

    GrayImage::new(width, height, data)
}

/// Separable Gaussian convolution with kernel radius `ceil(3 sigma)`,
/// unit-sum kernel and replicate border padding.
pub fn gaussian_smooth(img: &GrayImage, sigma_g: f64) -> Result<GrayImage> {
    if !(sigma_g > 0.0) {
        return Err(Error::parameter(format!(
            "gaussian sigma must be > 0, got {sigma_g}"
        )));
    }
    let radius = (3.0 * sigma_g).ceil() as isize;
    let mut kernel = Vec::with_capacity(2 * radius as usize + 1);
    for i in -radius..=radius {
        let t = i as f64 / sigma_g;
        kernel.push((-0.5 * t * t).exp());
    }
    let sum: f64 = kernel.iter().sum();
    for k in &mut kernel {
        *k /= sum;
    }

    let (w, h) = (img.width, img.height);
    // Horizontal pass.
    let mut tmp = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (ki, k) in kernel.iter().enumerate() {
                let sx = x as isize + ki as isize - radius;
                acc += k * img.get_clamped(sx, y as isize);
            }
            tmp[y * w + x] = acc;
        }
    }
    // Vertical pass.
    let tmp_img = GrayImage {
        width: w,
        height: h,
        data: tmp,
    };
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (ki, k) in kernel.iter().enumerate() {
                let sy = y as isize + ki as isize - radius;
                acc += k * tmp_img.get_clamped(x as isize, sy);
            }
            out[y * w + x] = acc;
        }
    }
    GrayImage::new(w, h, out)
}

/// Central differences in the interior, one-sided differences at the
/// borders. A constant image yields zero gradient everywhere and an
/// affine image recovers its slopes exactly.
pub fn gradient(img: &GrayImage) -> Result<VectorField> {
    let (w, h) = (img.width, img.height);
    if w < 2 || h < 2 {
        return Err(Error::parameter(format!(
            "gradient requires dimensions of at least 2x2, got {w}x{h}"
        )));
    }
    let mut dx = vec![0.0; w * h];
    let mut dy = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let idx = y * w + x;
            dx[idx] = if x == 0 {
                img.get(1, y) - img.get(0, y)
            } else if x == w - 1 {
                img.get(w - 1, y) - img.get(w - 2, y)
            } else {
                0.5 * (img.get(x + 1, y) - img.get(x - 1, y))
            };
            dy[idx] = if y == 0 {
                img.get(x, 1) - img.get(x, 0)
            } else if y == h - 1 {
                img.get(x, h - 1) - img.get(x, h - 2)
            } else {
                0.5 * (img.get(x, y + 1) - img.get(x, y - 1))
            };
        }
    }
    Ok(VectorField {
        width: w,
        height: h,
        dx,
        dy,
    })
}

/// Catmull-Rom weight (bicubic with a = -0.5).
#[inline]
fn catmull_rom(t: f64) -> f64 {
    const A: f64 = -0.5;
    let t = t.abs();
    if t <= 1.0 {
        (A + 2.0) * t * t * t - (A + 3.0) * t * t + 1.0
    } else if t < 2.0 {
        A * t * t * t - 5.0 * A * t * t + 8.0 * A * t - 4.0 * A
    } else {
        0.0
    }
}

/// Bicubic resampling with Catmull-Rom weights and replicate borders.
/// Output dimensions are `round(scale * input dims)`.
pub fn bicubic_resize(img: &GrayImage, scale: f64) -> Result<GrayImage> {
    if !(scale > 0.0) {
        return Err(Error::parameter(format!(
            "resize scale must be > 0, got {scale}"
        )));
    }
    let out_w = (scale * img.width as f64).round() as usize;
    let out_h = (scale * img.height as f64).round() as usize;
    if out_w < 2 || out_h < 2 {
        return Err(Error::parameter(format!(
            "resize scale {scale} yields {out_w}x{out_h}; output must be at least 2x2"
        )));
    }

    let mut data = Vec::with_capacity(out_w * out_h);
    let sx = img.width as f64 / out_w as f64;
    let sy = img.height as f64 / out_h as f64;
    for oy in 0..out_h {
        let src_y = (oy as f64 + 0.5) * sy - 0.5;
        let y0 = src_y.floor() as isize;
        let fy = src_y - y0 as f64;
        for ox in 0..out_w {
            let src_x = (ox as f64 + 0.5) * sx - 0.5;
            let x0 = src_x.floor() as isize;
            let fx = src_x - x0 as f64;
            let mut acc = 0.0;
            let mut wsum = 0.0;
            for j in -1..=2 {
                let wy = catmull_rom(j as f64 - fy);
                for i in -1..=2 {
                    let wx = catmull_rom(i as f64 - fx);
                    let w = wx * wy;
                    acc += w * img.get_clamped(x0 + i, y0 + j);
                    wsum += w;
                }
            }
            data.push(acc / wsum);
        }
    }
    GrayImage::new(out_w, out_h, data)
}
