//! Grayscale rasters and the structural similarity index.

use std::path::Path;

use image::imageops::{self, FilterType};
use image::{ImageBuffer, Luma};
use serde::{Deserialize, Serialize};

use super::MetricsError;

pub const DEFAULT_WIDTH: u32 = 640;
pub const DEFAULT_HEIGHT: u32 = 360;

/// Row-major grayscale intensities in `[0, 255]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RasterImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

impl RasterImage {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self, MetricsError> {
        if data.len() != width * height {
            return Err(MetricsError::BadRaster {
                expected: width * height,
                found: data.len(),
            });
        }
        Ok(RasterImage {
            width,
            height,
            data,
        })
    }

    pub fn constant(width: usize, height: usize, value: f64) -> Self {
        RasterImage {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        RasterImage {
            width,
            height,
            data,
        }
    }

    pub fn at(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    /// Reads PNG or PGM/PPM; color is reduced with luma weights 0.299/0.587/0.114
    /// after compositing any alpha over white.
    pub fn load(path: &Path, resize: Option<(u32, u32)>) -> Result<Self, MetricsError> {
        let img = image::open(path)
            .map_err(|e| MetricsError::Image(format!("{}: {e}", path.display())))?
            .to_rgba8();
        let (w, h) = img.dimensions();
        let mut gray: ImageBuffer<Luma<f32>, Vec<f32>> = ImageBuffer::new(w, h);
        for (x, y, p) in img.enumerate_pixels() {
            let [r, g, b, a] = p.0.map(f64::from);
            let a = a / 255.0;
            let over = |c: f64| c * a + 255.0 * (1.0 - a);
            let luma = 0.299 * over(r) + 0.587 * over(g) + 0.114 * over(b);
            gray.put_pixel(x, y, Luma([luma as f32]));
        }
        if let Some((rw, rh)) = resize {
            if (rw, rh) != (w, h) {
                gray = imageops::resize(&gray, rw, rh, FilterType::Triangle);
            }
        }
        let (w, h) = gray.dimensions();
        Ok(RasterImage {
            width: w as usize,
            height: h as usize,
            data: gray
                .into_raw()
                .into_iter()
                .map(|v| f64::from(v).clamp(0.0, 255.0))
                .collect(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SsimParams {
    pub window: usize,
    pub sigma: f64,
    pub k1: f64,
    pub k2: f64,
    pub dynamic_range: f64,
}

impl Default for SsimParams {
    fn default() -> Self {
        SsimParams {
            window: 11,
            sigma: 1.5,
            k1: 0.01,
            k2: 0.03,
            dynamic_range: 255.0,
        }
    }
}

impl SsimParams {
    pub fn kernel(&self) -> Vec<f64> {
        let half = (self.window as f64 - 1.0) / 2.0;
        let raw: Vec<f64> = (0..self.window)
            .map(|i| {
                let d = i as f64 - half;
                (-d * d / (2.0 * self.sigma * self.sigma)).exp()
            })
            .collect();
        let sum: f64 = raw.iter().sum();
        raw.into_iter().map(|v| v / sum).collect()
    }

    pub fn c1(&self) -> f64 {
        (self.k1 * self.dynamic_range).powi(2)
    }

    pub fn c2(&self) -> f64 {
        (self.k2 * self.dynamic_range).powi(2)
    }
}

/// Separable Gaussian filter over valid window positions only.
fn filter_valid(data: &[f64], w: usize, h: usize, k: &[f64]) -> (Vec<f64>, usize, usize) {
    let n = k.len();
    let ow = w - n + 1;
    let oh = h - n + 1;
    let mut rows = vec![0.0; ow * h];
    for y in 0..h {
        let row = &data[y * w..(y + 1) * w];
        for x in 0..ow {
            rows[y * ow + x] = k.iter().zip(&row[x..x + n]).map(|(a, b)| a * b).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            let mut s = 0.0;
            for (i, kv) in k.iter().enumerate() {
                s += kv * rows[(y + i) * ow + x];
            }
            out[y * ow + x] = s;
        }
    }
    (out, ow, oh)
}

/// Mean local SSIM map.
pub fn ssim_with(a: &RasterImage, b: &RasterImage, p: &SsimParams) -> Result<f64, MetricsError> {
    if a.width != b.width || a.height != b.height {
        return Err(MetricsError::DimensionMismatch {
            left: (a.width, a.height),
            right: (b.width, b.height),
        });
    }
    if a.width < p.window || a.height < p.window {
        return Err(MetricsError::ImageTooSmall {
            width: a.width,
            height: a.height,
            window: p.window,
        });
    }
    let k = p.kernel();
    let (w, h) = (a.width, a.height);
    let sq = |v: &[f64]| v.iter().map(|x| x * x).collect::<Vec<_>>();
    let prod: Vec<f64> = a.data.iter().zip(&b.data).map(|(x, y)| x * y).collect();
    let (mu_a, ow, oh) = filter_valid(&a.data, w, h, &k);
    let (mu_b, _, _) = filter_valid(&b.data, w, h, &k);
    let (aa, _, _) = filter_valid(&sq(&a.data), w, h, &k);
    let (bb, _, _) = filter_valid(&sq(&b.data), w, h, &k);
    let (ab, _, _) = filter_valid(&prod, w, h, &k);
    let (c1, c2) = (p.c1(), p.c2());
    let mut total = 0.0;
    for i in 0..ow * oh {
        let (ma, mb) = (mu_a[i], mu_b[i]);
        let va = aa[i] - ma * ma;
        let vb = bb[i] - mb * mb;
        let cov = ab[i] - ma * mb;
        total +=
            ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
    }
    Ok(total / (ow * oh) as f64)
}

pub fn ssim(a: &RasterImage, b: &RasterImage) -> Result<f64, MetricsError> {
    ssim_with(a, b, &SsimParams::default())
}

/// SSIM above which a rendering counts as structurally consistent.
pub const STRUCTURAL_THRESHOLD: f64 = 0.9;

/// Fraction of pairs with SSIM strictly above 0.9.
pub fn structural_accuracy(pairs: &[(RasterImage, RasterImage)]) -> Result<f64, MetricsError> {
    if pairs.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let mut hits = 0usize;
    for (a, b) in pairs {
        if ssim(a, b)? > STRUCTURAL_THRESHOLD {
            hits += 1;
        }
    }
    Ok(hits as f64 / pairs.len() as f64)
}
