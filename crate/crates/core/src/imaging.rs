//! Rasters and the pixel/histogram primitives shared by every stage.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geometry::Band;

pub type Rgb = [u8; 3];

/// Row-major 2D buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster<T> {
    width: usize,
    height: usize,
    data: Vec<T>,
}

/// Colour frame, the input to every pipeline stage.
pub type FrameImage = Raster<Rgb>;
/// 8-bit intensity image.
pub type GrayImage = Raster<u8>;
/// Packed 15-bit colour codes produced by [`to_monochrome32`].
pub type MonoImage = Raster<u16>;
/// Real-valued image, normalized to `[0, 1]` where noted.
pub type FloatImage = Raster<f64>;

impl<T> Raster<T> {
    pub fn from_vec(width: usize, height: usize, data: Vec<T>) -> Result<Self> {
        let expected = width * height;
        if data.len() != expected {
            return Err(Error::RasterSize {
                width,
                height,
                expected,
                actual: data.len(),
            });
        }
        Ok(Raster {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Raster {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn row(&self, y: usize) -> &[T] {
        &self.data[y * self.width..(y + 1) * self.width]
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Raster<U> {
        Raster {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(f).collect(),
        }
    }

    pub fn same_size<U>(&self, other: &Raster<U>) -> bool {
        self.width == other.width && self.height == other.height
    }
}

impl<T: Copy> Raster<T> {
    pub fn filled(width: usize, height: usize, value: T) -> Self {
        Raster {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> T {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: T) {
        self.data[y * self.width + x] = value;
    }

    /// Copy of the region covered by `band`. Panics if the band leaves the raster.
    pub fn crop(&self, band: &Band) -> Raster<T> {
        let (x0, y0) = (band.x as usize, band.y as usize);
        let (w, h) = (band.w as usize, band.h as usize);
        assert!(x0 + w <= self.width && y0 + h <= self.height, "crop outside raster");
        let mut data = Vec::with_capacity(w * h);
        for y in y0..y0 + h {
            data.extend_from_slice(&self.row(y)[x0..x0 + w]);
        }
        Raster {
            width: w,
            height: h,
            data,
        }
    }

    /// Fill the region covered by `band`, clipped to the raster.
    pub fn fill_rect(&mut self, band: &Band, value: T) {
        let x1 = (band.right() as usize).min(self.width);
        let y1 = (band.bottom() as usize).min(self.height);
        for y in (band.y as usize)..y1 {
            for x in (band.x as usize)..x1 {
                self.set(x, y, value);
            }
        }
    }
}

/// Mean of the three channels, rounded half up.
#[inline]
pub fn brightness(p: Rgb) -> u8 {
    let sum = p[0] as u32 + p[1] as u32 + p[2] as u32;
    ((sum * 2 + 3) / 6) as u8
}

/// Unweighted channel mean, `round((r + g + b) / 3)`.
pub fn to_gray(frame: &FrameImage) -> GrayImage {
    frame.map(|&p| brightness(p))
}

/// 5-bit quantized colour code of one pixel, `1024 r' + 32 g' + b'` with `c' = c >> 3`.
#[inline]
pub fn mono32_code(p: Rgb) -> u16 {
    ((p[0] as u16 >> 3) << 10) | ((p[1] as u16 >> 3) << 5) | (p[2] as u16 >> 3)
}

/// Number of distinct [`mono32_code`] values.
pub const MONO32_LEVELS: usize = 32 * 32 * 32;

pub fn to_monochrome32(frame: &FrameImage) -> MonoImage {
    frame.map(|&p| mono32_code(p))
}

/// Pixel types with a known value range `[0, LEVELS)`, used for binning.
pub trait Level: Copy {
    const LEVELS: usize;
    fn level(self) -> usize;
}

impl Level for u8 {
    const LEVELS: usize = 256;
    fn level(self) -> usize {
        self as usize
    }
}

impl Level for u16 {
    const LEVELS: usize = MONO32_LEVELS;
    fn level(self) -> usize {
        self as usize
    }
}

/// Histogram over equal-width bins.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Histogram {
    bins: Vec<f64>,
}

impl Histogram {
    pub fn zeros(bin_count: usize) -> Self {
        Histogram {
            bins: vec![0.0; bin_count],
        }
    }

    pub fn from_bins(bins: Vec<f64>) -> Self {
        Histogram { bins }
    }

    pub fn bins(&self) -> &[f64] {
        &self.bins
    }

    pub fn bins_mut(&mut self) -> &mut [f64] {
        &mut self.bins
    }

    pub fn into_bins(self) -> Vec<f64> {
        self.bins
    }

    pub fn bin_count(&self) -> usize {
        self.bins.len()
    }

    pub fn total(&self) -> f64 {
        self.bins.iter().sum()
    }

    /// Scale so the bins sum to one. Fails on an all-zero histogram.
    pub fn normalize(&mut self) -> Result<()> {
        let total = self.total();
        if total <= 0.0 {
            return Err(Error::DegenerateHistogram);
        }
        self.bins.iter_mut().for_each(|b| *b /= total);
        Ok(())
    }

    /// Correlation `sum_i a_i * b_i`.
    pub fn correlation(&self, other: &Histogram) -> Result<f64> {
        if self.bin_count() != other.bin_count() {
            return Err(Error::BinCountMismatch(self.bin_count(), other.bin_count()));
        }
        Ok(self.bins.iter().zip(&other.bins).map(|(a, b)| a * b).sum())
    }
}

/// Normalized histogram of a raster whose pixel type spans `[0, T::LEVELS)`.
///
/// Bin `i` covers levels `[i * LEVELS / bins, (i + 1) * LEVELS / bins)`.
pub fn normalized_histogram<T: Level>(img: &Raster<T>, bin_count: usize) -> Result<Histogram> {
    histogram_of(img.as_slice().iter().copied(), bin_count)
}

pub(crate) fn histogram_of<T: Level>(
    values: impl Iterator<Item = T>,
    bin_count: usize,
) -> Result<Histogram> {
    if bin_count == 0 {
        return Err(Error::ZeroBins);
    }
    let mut counts = vec![0u64; bin_count];
    let mut total = 0u64;
    for v in values {
        counts[v.level() * bin_count / T::LEVELS] += 1;
        total += 1;
    }
    if total == 0 {
        return Err(Error::EmptyImage);
    }
    let total = total as f64;
    Ok(Histogram {
        bins: counts.into_iter().map(|c| c as f64 / total).collect(),
    })
}

/// Bhattacharyya distance in the normalized-mean form
/// `sqrt(1 - sum sqrt(h1 h2) / sqrt(mean1 mean2 N^2))`, clamped to `[0, 1]`.
pub fn bhattacharyya_distance(h1: &Histogram, h2: &Histogram) -> Result<f64> {
    let n = h1.bin_count();
    if n != h2.bin_count() {
        return Err(Error::BinCountMismatch(n, h2.bin_count()));
    }
    if n == 0 {
        return Err(Error::ZeroBins);
    }
    let (s1, s2) = (h1.total(), h2.total());
    if s1 <= 0.0 || s2 <= 0.0 {
        return Err(Error::DegenerateHistogram);
    }
    let overlap: f64 = h1
        .bins
        .iter()
        .zip(&h2.bins)
        .map(|(&a, &b)| libm::sqrt(a * b))
        .sum();
    // sqrt(mean1 mean2 N^2) == sqrt(s1 s2), exact when the histograms match
    let coeff = overlap / libm::sqrt(s1 * s2);
    Ok(libm::sqrt((1.0 - coeff).max(0.0)).min(1.0))
}

/// Cumulative-distribution remap onto `[0, 255]`, with the lowest occupied
/// level sent to 0. An image with a single level maps it to 255.
pub fn histogram_equalize(img: &GrayImage) -> GrayImage {
    if img.is_empty() {
        return img.clone();
    }
    let mut counts = [0u64; 256];
    for &v in img.as_slice() {
        counts[v as usize] += 1;
    }
    let total = img.len() as u64;
    let cdf_min = counts.iter().copied().find(|&c| c > 0).unwrap_or(0);
    let mut lut = [0u8; 256];
    if total == cdf_min {
        lut = [255; 256];
    } else {
        let denom = (total - cdf_min) as f64;
        let mut cdf = 0u64;
        for (level, &c) in counts.iter().enumerate() {
            cdf += c;
            if c > 0 {
                let v = (cdf - cdf_min) as f64 / denom * 255.0;
                lut[level] = libm::round(v) as u8;
            }
        }
    }
    img.map(|&v| lut[v as usize])
}

/// Largest Scharr gradient magnitude reachable on 8-bit data,
/// `255 * sqrt(16^2 + 10^2)`.
pub const SCHARR_MAX_MAGNITUDE: f64 = 4811.330377348868;

/// Horizontal and vertical Scharr responses at an interior pixel.
#[inline]
fn scharr_at(img: &GrayImage, x: usize, y: usize) -> (i32, i32) {
    let p = |dx: usize, dy: usize| img.get(x + dx - 1, y + dy - 1) as i32;
    let gx = 3 * (p(2, 0) - p(0, 0)) + 10 * (p(2, 1) - p(0, 1)) + 3 * (p(2, 2) - p(0, 2));
    let gy = 3 * (p(0, 2) - p(0, 0)) + 10 * (p(1, 2) - p(1, 0)) + 3 * (p(2, 2) - p(2, 0));
    (gx, gy)
}

/// Scharr gradient magnitude divided by [`SCHARR_MAX_MAGNITUDE`]; border pixels are 0.
pub fn scharr_magnitude(img: &GrayImage) -> Result<FloatImage> {
    let (w, h) = (img.width(), img.height());
    if w < 3 || h < 3 {
        return Err(Error::ImageTooSmall {
            width: w,
            height: h,
            min: 3,
        });
    }
    let mut out = FloatImage::filled(w, h, 0.0);
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let (gx, gy) = scharr_at(img, x, y);
            let mag = libm::sqrt((gx * gx + gy * gy) as f64);
            out.set(x, y, mag / SCHARR_MAX_MAGNITUDE);
        }
    }
    Ok(out)
}
