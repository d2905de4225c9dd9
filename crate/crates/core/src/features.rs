//! Colour and spatial features separating camera content from graphics.
//!
//! The descriptor has a fixed layout: eight scalar scores, the ranked colour
//! histogram, the 768-bin HSV histogram and the 32-bin edge magnitude
//! histogram. With 512 ranked bins it has 1320 entries.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::imaging::{histogram_of, mono32_code, scharr_magnitude, to_gray, FrameImage, Histogram, Raster, Rgb, MONO32_LEVELS};

pub const SCALAR_FEATURES: usize = 8;
pub const DEFAULT_RANKED_BINS: usize = 512;
pub const HSV_BINS: usize = 768;
pub const EDGE_BINS: usize = 32;
/// Length of a descriptor built with [`DEFAULT_RANKED_BINS`].
pub const FEATURE_DIM: usize = SCALAR_FEATURES + DEFAULT_RANKED_BINS + HSV_BINS + EDGE_BINS;
/// Bins of the farthest-neighbour histogram: L1 distances 0..=765.
pub const FNH_BINS: usize = 766;

/// Class statistics and thresholds the scoring features depend on.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FeatureContext {
    pub avg_color_hist_graphics: Histogram,
    pub avg_color_hist_natural: Histogram,
    pub avg_fnh_graphics: Histogram,
    pub avg_fnh_natural: Histogram,
    pub saturation_threshold: u32,
    pub farthest_neighbor_threshold: u32,
    pub ranked_bins: usize,
}

/// Thresholds used when building a [`FeatureContext`].
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct FeatureParams {
    pub saturation_threshold: u32,
    pub farthest_neighbor_threshold: u32,
    pub ranked_bins: usize,
}

impl Default for FeatureParams {
    fn default() -> Self {
        FeatureParams {
            saturation_threshold: 64,
            farthest_neighbor_threshold: 100,
            ranked_bins: DEFAULT_RANKED_BINS,
        }
    }
}

impl FeatureParams {
    pub fn validate(&self) -> Result<()> {
        if self.saturation_threshold > 765 || self.farthest_neighbor_threshold > 765 {
            return Err(Error::InvalidParameter("feature thresholds must lie in [0, 765]"));
        }
        if self.ranked_bins == 0 || self.ranked_bins > MONO32_LEVELS {
            return Err(Error::InvalidParameter("features.ranked_bins must lie in [1, 32768]"));
        }
        Ok(())
    }
}

impl FeatureContext {
    /// Context whose class averages are identical, so both correlation
    /// metrics evaluate to 0.5.
    pub fn neutral(params: FeatureParams) -> Self {
        let flat = |n: usize| Histogram::from_bins(vec![1.0 / n as f64; n]);
        FeatureContext {
            avg_color_hist_graphics: flat(MONO32_LEVELS),
            avg_color_hist_natural: flat(MONO32_LEVELS),
            avg_fnh_graphics: flat(FNH_BINS),
            avg_fnh_natural: flat(FNH_BINS),
            saturation_threshold: params.saturation_threshold,
            farthest_neighbor_threshold: params.farthest_neighbor_threshold,
            ranked_bins: params.ranked_bins,
        }
    }

    /// Class averages of the normalized colour and farthest-neighbour
    /// histograms over the given sample images.
    pub fn from_samples(graphics: &[FrameImage], natural: &[FrameImage], params: FeatureParams) -> Result<Self> {
        params.validate()?;
        if graphics.is_empty() || natural.is_empty() {
            return Err(Error::InsufficientData);
        }
        let (cg, fg) = class_averages(graphics)?;
        let (cn, fn_) = class_averages(natural)?;
        Ok(FeatureContext {
            avg_color_hist_graphics: cg,
            avg_color_hist_natural: cn,
            avg_fnh_graphics: fg,
            avg_fnh_natural: fn_,
            saturation_threshold: params.saturation_threshold,
            farthest_neighbor_threshold: params.farthest_neighbor_threshold,
            ranked_bins: params.ranked_bins,
        })
    }

    pub fn params(&self) -> FeatureParams {
        FeatureParams {
            saturation_threshold: self.saturation_threshold,
            farthest_neighbor_threshold: self.farthest_neighbor_threshold,
            ranked_bins: self.ranked_bins,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params().validate()?;
        let check = |h: &Histogram, n: usize| {
            if h.bin_count() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    actual: h.bin_count(),
                });
            }
            if h.bins().iter().any(|&b| !b.is_finite() || b < 0.0) || h.total() <= 0.0 {
                return Err(Error::DegenerateHistogram);
            }
            Ok(())
        };
        check(&self.avg_color_hist_graphics, MONO32_LEVELS)?;
        check(&self.avg_color_hist_natural, MONO32_LEVELS)?;
        check(&self.avg_fnh_graphics, FNH_BINS)?;
        check(&self.avg_fnh_natural, FNH_BINS)
    }

    /// Length of the descriptors this context produces.
    pub fn feature_dim(&self) -> usize {
        SCALAR_FEATURES + self.ranked_bins + HSV_BINS + EDGE_BINS
    }
}

fn class_averages(images: &[FrameImage]) -> Result<(Histogram, Histogram)> {
    let mut color = vec![0.0; MONO32_LEVELS];
    let mut fnh = vec![0.0; FNH_BINS];
    for img in images {
        for (acc, v) in color.iter_mut().zip(color_histogram(img)?.bins()) {
            *acc += v;
        }
        for (acc, v) in fnh.iter_mut().zip(farthest_neighbor_histogram(img)?.bins()) {
            *acc += v;
        }
    }
    let n = images.len() as f64;
    color.iter_mut().for_each(|v| *v /= n);
    fnh.iter_mut().for_each(|v| *v /= n);
    Ok((Histogram::from_bins(color), Histogram::from_bins(fnh)))
}

/// Descriptor of one band crop.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector(Vec<f64>);

impl FeatureVector {
    pub fn new(values: Vec<f64>) -> Self {
        FeatureVector(values)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

fn non_empty(img: &FrameImage) -> Result<()> {
    if img.is_empty() {
        Err(Error::EmptyImage)
    } else {
        Ok(())
    }
}

fn at_least(img: &FrameImage, min: usize) -> Result<()> {
    non_empty(img)?;
    if img.width() < min || img.height() < min {
        return Err(Error::ImageTooSmall {
            width: img.width(),
            height: img.height(),
            min,
        });
    }
    Ok(())
}

/// Sorted 24-bit colour codes.
fn sorted_colors(img: &FrameImage) -> Vec<u32> {
    let mut codes: Vec<u32> = img
        .as_slice()
        .iter()
        .map(|p| (p[0] as u32) << 16 | (p[1] as u32) << 8 | p[2] as u32)
        .collect();
    codes.sort_unstable();
    codes
}

/// Number of distinct colours and the multiplicity of the most common one.
fn color_stats(img: &FrameImage) -> (usize, usize) {
    let codes = sorted_colors(img);
    let mut distinct = 0;
    let mut longest = 0;
    let mut i = 0;
    while i < codes.len() {
        let mut j = i + 1;
        while j < codes.len() && codes[j] == codes[i] {
            j += 1;
        }
        distinct += 1;
        longest = longest.max(j - i);
        i = j;
    }
    (distinct, longest)
}

/// Distinct colours per pixel.
pub fn distinct_color_score(img: &FrameImage) -> Result<f64> {
    non_empty(img)?;
    Ok(color_stats(img).0 as f64 / img.len() as f64)
}

/// Share of pixels carrying the most frequent colour.
pub fn prevalent_color_score(img: &FrameImage) -> Result<f64> {
    non_empty(img)?;
    Ok(color_stats(img).1 as f64 / img.len() as f64)
}

/// Largest absolute difference between two channels.
#[inline]
pub fn saturation_level(p: Rgb) -> u32 {
    let [r, g, b] = p.map(|c| c as i32);
    (r - g).abs().max((g - b).abs()).max((b - r).abs()) as u32
}

pub fn saturation_average(img: &FrameImage) -> Result<f64> {
    non_empty(img)?;
    let sum: u64 = img.as_slice().iter().map(|&p| saturation_level(p) as u64).sum();
    Ok(sum as f64 / img.len() as f64)
}

/// Share of pixels whose saturation level reaches the context threshold.
pub fn saturation_score(img: &FrameImage, ctx: &FeatureContext) -> Result<f64> {
    non_empty(img)?;
    let hits = img
        .as_slice()
        .iter()
        .filter(|&&p| saturation_level(p) >= ctx.saturation_threshold)
        .count();
    Ok(hits as f64 / img.len() as f64)
}

/// Normalized 32768-bin histogram of 5-bit quantized colours.
pub fn color_histogram(img: &FrameImage) -> Result<Histogram> {
    histogram_of(img.as_slice().iter().map(|&p| mono32_code(p)), MONO32_LEVELS)
}

/// `a / (a + b)`, or 0.5 when both are zero.
fn share(a: f64, b: f64) -> f64 {
    if a + b > 0.0 {
        a / (a + b)
    } else {
        0.5
    }
}

/// Correlation with the graphics average over the sum of both class correlations.
pub fn color_hist_metric(img: &FrameImage, ctx: &FeatureContext) -> Result<f64> {
    let h = color_histogram(img)?;
    color_hist_metric_of(&h, ctx)
}

fn color_hist_metric_of(h: &Histogram, ctx: &FeatureContext) -> Result<f64> {
    let graphics = h.correlation(&ctx.avg_color_hist_graphics)?;
    let natural = h.correlation(&ctx.avg_color_hist_natural)?;
    Ok(share(graphics, natural))
}

/// The `bins` largest entries of the quantized colour histogram, descending.
pub fn ranked_histogram(img: &FrameImage, bins: usize) -> Result<Vec<f64>> {
    Ok(ranked_of(color_histogram(img)?, bins))
}

fn ranked_of(h: Histogram, bins: usize) -> Vec<f64> {
    let mut values = h.into_bins();
    values.sort_unstable_by(|a, b| b.total_cmp(a));
    values.truncate(bins);
    values.resize(bins, 0.0);
    values
}

/// Hexcone HSV with every channel scaled to a byte.
pub fn rgb_to_hsv(p: Rgb) -> [u8; 3] {
    let [r, g, b] = p.map(|c| c as i32);
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    let s = if max == 0 { 0 } else { (delta * 255 * 2 + max) / (2 * max) };
    let h = if delta == 0 {
        0
    } else {
        let d = delta as f64;
        let deg = if max == r {
            let mut t = 60.0 * ((g - b) as f64 / d);
            if t < 0.0 {
                t += 360.0;
            }
            t
        } else if max == g {
            60.0 * ((b - r) as f64 / d + 2.0)
        } else {
            60.0 * ((r - g) as f64 / d + 4.0)
        };
        (libm::floor(deg * 256.0 / 360.0) as i32).clamp(0, 255)
    };
    [h as u8, s as u8, max as u8]
}

/// H, S and V histograms of 256 bins each, each normalized, concatenated.
pub fn hsv_histogram(img: &FrameImage) -> Result<Vec<f64>> {
    non_empty(img)?;
    let mut counts = vec![0u64; HSV_BINS];
    for &p in img.as_slice() {
        let [h, s, v] = rgb_to_hsv(p);
        counts[h as usize] += 1;
        counts[256 + s as usize] += 1;
        counts[512 + v as usize] += 1;
    }
    let n = img.len() as f64;
    Ok(counts.into_iter().map(|c| c as f64 / n).collect())
}

#[inline]
fn l1(a: Rgb, b: Rgb) -> u16 {
    (a[0].abs_diff(b[0]) as u16) + (a[1].abs_diff(b[1]) as u16) + (a[2].abs_diff(b[2]) as u16)
}

/// Per pixel, the largest L1 colour distance to any of its 8 neighbours.
pub fn farthest_neighbor_distances(img: &FrameImage) -> Result<Raster<u16>> {
    at_least(img, 2)?;
    let (w, h) = (img.width(), img.height());
    Ok(Raster::from_fn(w, h, |x, y| {
        let p = img.get(x, y);
        let mut best = 0;
        for ny in y.saturating_sub(1)..=(y + 1).min(h - 1) {
            for nx in x.saturating_sub(1)..=(x + 1).min(w - 1) {
                if nx != x || ny != y {
                    best = best.max(l1(p, img.get(nx, ny)));
                }
            }
        }
        best
    }))
}

/// Share of pixels whose farthest-neighbour distance reaches the threshold.
pub fn farthest_neighbor_score(img: &FrameImage, ctx: &FeatureContext) -> Result<f64> {
    let d = farthest_neighbor_distances(img)?;
    Ok(fn_score_of(&d, ctx.farthest_neighbor_threshold))
}

fn fn_score_of(d: &Raster<u16>, threshold: u32) -> f64 {
    let hits = d.as_slice().iter().filter(|&&v| v as u32 >= threshold).count();
    hits as f64 / d.len() as f64
}

/// Bin `i` holds the share of pixels with farthest-neighbour distance `i`.
pub fn farthest_neighbor_histogram(img: &FrameImage) -> Result<Histogram> {
    let d = farthest_neighbor_distances(img)?;
    fnh_of(&d)
}

fn fnh_of(d: &Raster<u16>) -> Result<Histogram> {
    let mut bins = vec![0.0; FNH_BINS];
    for &v in d.as_slice() {
        bins[v as usize] += 1.0;
    }
    let mut h = Histogram::from_bins(bins);
    h.normalize()?;
    Ok(h)
}

/// Correlation with the natural average over the sum of both class correlations.
pub fn farthest_neighbor_hist_metric(img: &FrameImage, ctx: &FeatureContext) -> Result<f64> {
    let h = farthest_neighbor_histogram(img)?;
    fnh_metric_of(&h, ctx)
}

fn fnh_metric_of(h: &Histogram, ctx: &FeatureContext) -> Result<f64> {
    let natural = h.correlation(&ctx.avg_fnh_natural)?;
    let graphics = h.correlation(&ctx.avg_fnh_graphics)?;
    Ok(share(natural, graphics))
}

/// Sum of absolute differences between neighbouring bins of the normalized
/// 256-bin gray histogram.
pub fn gray_smoothness(img: &FrameImage) -> Result<f64> {
    non_empty(img)?;
    let gray = to_gray(img);
    let h = histogram_of(gray.as_slice().iter().copied(), 256)?;
    Ok(h.bins().windows(2).map(|w| (w[1] - w[0]).abs()).sum())
}

/// 32 equal-width bins over the normalized Scharr magnitude, L1-normalized.
pub fn edge_magnitude_histogram(img: &FrameImage) -> Result<Vec<f64>> {
    at_least(img, 3)?;
    let mag = scharr_magnitude(&to_gray(img))?;
    let mut counts = [0u64; EDGE_BINS];
    for &m in mag.as_slice() {
        let bin = (libm::floor(m * EDGE_BINS as f64) as usize).min(EDGE_BINS - 1);
        counts[bin] += 1;
    }
    let n = mag.len() as f64;
    Ok(counts.iter().map(|&c| c as f64 / n).collect())
}

/// Full descriptor: `[8 scalars | ranked | HSV | edge]`.
///
/// Scalar order: distinct colours, prevalent colour, saturation average,
/// saturation score, colour histogram metric, farthest-neighbour score,
/// farthest-neighbour histogram metric, gray smoothness.
pub fn assemble_feature_vector(img: &FrameImage, ctx: &FeatureContext) -> Result<FeatureVector> {
    at_least(img, 3)?;
    let n = img.len() as f64;
    let (distinct, prevalent) = color_stats(img);
    let color_hist = color_histogram(img)?;
    let fn_dist = farthest_neighbor_distances(img)?;
    let fnh = fnh_of(&fn_dist)?;

    let mut values = Vec::with_capacity(ctx.feature_dim());
    values.push(distinct as f64 / n);
    values.push(prevalent as f64 / n);
    values.push(saturation_average(img)?);
    values.push(saturation_score(img, ctx)?);
    values.push(color_hist_metric_of(&color_hist, ctx)?);
    values.push(fn_score_of(&fn_dist, ctx.farthest_neighbor_threshold));
    values.push(fnh_metric_of(&fnh, ctx)?);
    values.push(gray_smoothness(img)?);
    values.extend(ranked_of(color_hist, ctx.ranked_bins));
    values.extend(hsv_histogram(img)?);
    values.extend(edge_magnitude_histogram(img)?);
    debug_assert_eq!(values.len(), ctx.feature_dim());
    Ok(FeatureVector(values))
}

#[cfg(test)]
mod tests {
    use super::*;

    const A: Rgb = [10, 20, 30];
    const B: Rgb = [200, 0, 0];
    const C: Rgb = [0, 0, 255];
    const D: Rgb = [90, 90, 90];

    fn ctx() -> FeatureContext {
        FeatureContext::neutral(FeatureParams::default())
    }

    fn strip(colors: &[Rgb]) -> FrameImage {
        FrameImage::from_vec(colors.len(), 1, colors.to_vec()).unwrap()
    }

    fn half_split(w: usize, h: usize, left: Rgb, right: Rgb) -> FrameImage {
        FrameImage::from_fn(w, h, |x, _| if x < w / 2 { left } else { right })
    }

    #[test]
    fn distinct_and_prevalent() {
        let one = FrameImage::filled(2, 2, A);
        assert_eq!(distinct_color_score(&one).unwrap(), 0.25);
        assert_eq!(prevalent_color_score(&one).unwrap(), 1.0);
        let all = FrameImage::from_vec(2, 2, vec![A, B, C, D]).unwrap();
        assert_eq!(distinct_color_score(&all).unwrap(), 1.0);
        assert_eq!(prevalent_color_score(&all).unwrap(), 0.25);
        let aabc = strip(&[A, A, B, C]);
        assert_eq!(distinct_color_score(&aabc).unwrap(), 0.75);
        assert_eq!(prevalent_color_score(&aabc).unwrap(), 0.5);
    }

    #[test]
    fn empty_images_are_rejected() {
        let empty = FrameImage::from_vec(0, 0, vec![]).unwrap();
        assert_eq!(distinct_color_score(&empty), Err(Error::EmptyImage));
        assert_eq!(prevalent_color_score(&empty), Err(Error::EmptyImage));
        assert_eq!(saturation_average(&empty), Err(Error::EmptyImage));
        assert_eq!(saturation_score(&empty, &ctx()), Err(Error::EmptyImage));
        assert_eq!(ranked_histogram(&empty, 4), Err(Error::EmptyImage));
        assert_eq!(hsv_histogram(&empty), Err(Error::EmptyImage));
        assert_eq!(gray_smoothness(&empty), Err(Error::EmptyImage));
    }

    #[test]
    fn saturation() {
        let gray = FrameImage::filled(3, 3, D);
        assert_eq!(saturation_average(&gray).unwrap(), 0.0);
        assert_eq!(saturation_score(&gray, &ctx()).unwrap(), 0.0);
        let red = FrameImage::filled(3, 3, [255, 0, 0]);
        assert_eq!(saturation_average(&red).unwrap(), 255.0);
        assert_eq!(saturation_score(&red, &ctx()).unwrap(), 1.0);
        let half = half_split(4, 2, D, [255, 0, 0]);
        assert_eq!(saturation_average(&half).unwrap(), 127.5);
        assert_eq!(saturation_score(&half, &ctx()).unwrap(), 0.5);
    }

    #[test]
    fn color_hist_metric_cases() {
        let img = FrameImage::filled(4, 4, B);
        let own = color_histogram(&img).unwrap();
        let mut c = ctx();
        c.avg_color_hist_graphics = own.clone();
        let mut other = vec![0.0; MONO32_LEVELS];
        other[0] = 1.0;
        c.avg_color_hist_natural = Histogram::from_bins(other);
        assert_eq!(color_hist_metric(&img, &c).unwrap(), 1.0);
        assert_eq!(color_hist_metric(&img, &ctx()).unwrap(), 0.5);

        // hand-set averages: image is 3/4 code k1, 1/4 code k2
        let img = strip(&[B, B, B, C]);
        let (k1, k2) = (mono32_code(B) as usize, mono32_code(C) as usize);
        let mut g = vec![0.0; MONO32_LEVELS];
        g[k1] = 0.2;
        g[k2] = 0.8;
        let mut n = vec![0.0; MONO32_LEVELS];
        n[k1] = 0.6;
        n[k2] = 0.1;
        c.avg_color_hist_graphics = Histogram::from_bins(g);
        c.avg_color_hist_natural = Histogram::from_bins(n);
        // graphics 0.75*0.2 + 0.25*0.8 = 0.35, natural 0.75*0.6 + 0.25*0.1 = 0.475
        let expected = 0.35 / (0.35 + 0.475);
        assert!((color_hist_metric(&img, &c).unwrap() - expected).abs() < 1e-12);

        // both correlations zero
        let mut z = vec![0.0; MONO32_LEVELS];
        z[5] = 1.0;
        c.avg_color_hist_graphics = Histogram::from_bins(z.clone());
        c.avg_color_hist_natural = Histogram::from_bins(z);
        assert_eq!(color_hist_metric(&img, &c).unwrap(), 0.5);
    }

    #[test]
    fn ranked_histogram_cases() {
        let one = FrameImage::filled(3, 3, A);
        let r = ranked_histogram(&one, 5).unwrap();
        assert_eq!(r, vec![1.0, 0.0, 0.0, 0.0, 0.0]);
        let two = half_split(4, 2, A, B);
        assert_eq!(ranked_histogram(&two, 3).unwrap(), vec![0.5, 0.5, 0.0]);
        let mut px = vec![A; 4];
        px.extend([B; 3]);
        px.extend([C; 2]);
        px.push(D);
        let four = FrameImage::from_vec(10, 1, px).unwrap();
        let r = ranked_histogram(&four, 6).unwrap();
        let want = [0.4, 0.3, 0.2, 0.1, 0.0, 0.0];
        for (a, b) in r.iter().zip(want) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn hsv_conversion() {
        assert_eq!(rgb_to_hsv([0, 0, 0]), [0, 0, 0]);
        assert_eq!(rgb_to_hsv([255, 255, 255]), [0, 0, 255]);
        assert_eq!(rgb_to_hsv([255, 0, 0]), [0, 255, 255]);
        // green at 120 degrees -> 120 * 256 / 360 = 85.3
        assert_eq!(rgb_to_hsv([0, 255, 0]), [85, 255, 255]);
        assert_eq!(rgb_to_hsv([0, 0, 255]), [170, 255, 255]);
        // magenta at 300 degrees -> 213.3
        assert_eq!(rgb_to_hsv([255, 0, 255]), [213, 255, 255]);
        // s = 100 / 200 * 255 = 127.5 rounds to 128
        assert_eq!(rgb_to_hsv([200, 100, 100])[1], 128);
    }

    #[test]
    fn hsv_histogram_cases() {
        let black = hsv_histogram(&FrameImage::filled(2, 2, [0, 0, 0])).unwrap();
        assert_eq!((black[0], black[256], black[512]), (1.0, 1.0, 1.0));
        assert_eq!(black.iter().sum::<f64>(), 3.0);
        let white = hsv_histogram(&FrameImage::filled(2, 2, [255; 3])).unwrap();
        assert_eq!((white[256], white[767]), (1.0, 1.0));
        let half = hsv_histogram(&half_split(4, 2, [0; 3], [255; 3])).unwrap();
        assert_eq!((half[512], half[767]), (0.5, 0.5));
    }

    #[test]
    fn farthest_neighbor_cases() {
        let c = ctx();
        let uniform = FrameImage::filled(5, 4, A);
        assert_eq!(farthest_neighbor_score(&uniform, &c).unwrap(), 0.0);
        assert_eq!(farthest_neighbor_histogram(&uniform).unwrap().bins()[0], 1.0);

        let checker = FrameImage::from_fn(6, 6, |x, y| if (x + y) % 2 == 0 { [0; 3] } else { [255; 3] });
        assert_eq!(farthest_neighbor_score(&checker, &c).unwrap(), 1.0);
        assert_eq!(farthest_neighbor_histogram(&checker).unwrap().bins()[765], 1.0);

        let w = 10;
        let split = half_split(w, 4, [0; 3], [255; 3]);
        assert!((farthest_neighbor_score(&split, &c).unwrap() - 2.0 / w as f64).abs() < 1e-12);
        let h = farthest_neighbor_histogram(&split).unwrap();
        assert!((h.bins()[0] - (w - 2) as f64 / w as f64).abs() < 1e-12);
        assert!((h.bins()[765] - 2.0 / w as f64).abs() < 1e-12);
    }

    #[test]
    fn farthest_neighbor_needs_neighbours() {
        let one = FrameImage::filled(1, 1, A);
        assert!(matches!(farthest_neighbor_score(&one, &ctx()), Err(Error::ImageTooSmall { .. })));
        assert!(matches!(farthest_neighbor_histogram(&one), Err(Error::ImageTooSmall { .. })));
    }

    #[test]
    fn fnh_metric_cases() {
        let img = FrameImage::filled(3, 3, A);
        let mut c = ctx();
        let mut nat = vec![0.0; FNH_BINS];
        nat[0] = 1.0;
        let mut gra = vec![0.0; FNH_BINS];
        gra[700] = 1.0;
        c.avg_fnh_natural = Histogram::from_bins(nat.clone());
        c.avg_fnh_graphics = Histogram::from_bins(gra);
        assert_eq!(farthest_neighbor_hist_metric(&img, &c).unwrap(), 1.0);
        c.avg_fnh_graphics = Histogram::from_bins(nat);
        assert_eq!(farthest_neighbor_hist_metric(&img, &c).unwrap(), 0.5);

        // half split of width 10: 0.8 at bin 0, 0.2 at bin 765
        let split = half_split(10, 3, [0; 3], [255; 3]);
        let mut nat = vec![0.0; FNH_BINS];
        nat[0] = 0.5;
        nat[765] = 0.5;
        let mut gra = vec![0.0; FNH_BINS];
        gra[765] = 0.9;
        c.avg_fnh_natural = Histogram::from_bins(nat);
        c.avg_fnh_graphics = Histogram::from_bins(gra);
        // nat = 0.8*0.5 + 0.2*0.5 = 0.5, graph = 0.2*0.9 = 0.18
        let expected = 0.5 / 0.68;
        assert!((farthest_neighbor_hist_metric(&split, &c).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn smoothness_cases() {
        let constant = FrameImage::filled(4, 4, [128; 3]);
        assert_eq!(gray_smoothness(&constant).unwrap(), 2.0);
        let flat = FrameImage::from_fn(256, 1, |x, _| [x as u8; 3]);
        assert!(gray_smoothness(&flat).unwrap().abs() < 1e-12);
        let adjacent = half_split(4, 1, [100; 3], [101; 3]);
        assert!((gray_smoothness(&adjacent).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn edge_histogram_cases() {
        let constant = edge_magnitude_histogram(&FrameImage::filled(6, 6, A)).unwrap();
        assert_eq!(constant[0], 1.0);
        let step = edge_magnitude_histogram(&half_split(8, 6, [0; 3], [255; 3])).unwrap();
        let nonzero: Vec<usize> = (0..EDGE_BINS).filter(|&i| step[i] > 0.0).collect();
        // 16 * 255 / 4811.33 = 0.848 -> bin 27
        assert_eq!(nonzero, vec![0, 27]);
        // 2 columns x 4 interior rows out of 48 pixels
        assert!((step[27] - 8.0 / 48.0).abs() < 1e-12);
        assert!(matches!(
            edge_magnitude_histogram(&FrameImage::filled(2, 6, A)),
            Err(Error::ImageTooSmall { .. })
        ));
    }

    #[test]
    fn assembled_layout() {
        let img = FrameImage::filled(8, 8, D);
        let v = assemble_feature_vector(&img, &ctx()).unwrap();
        assert_eq!(v.len(), FEATURE_DIM);
        assert_eq!(FEATURE_DIM, 1320);
        let s = v.as_slice();
        assert_eq!(&s[..4], &[1.0 / 64.0, 1.0, 0.0, 0.0]);
        assert_eq!(s[5], 0.0);
        assert_eq!(s[7], 2.0);
        assert_eq!(s[8], 1.0);
        assert!(s[9..520].iter().all(|&x| x == 0.0));
        // HSV of gray 90: H bin 0, S bin 0, V bin 90
        assert_eq!((s[520], s[520 + 256], s[520 + 512 + 90]), (1.0, 1.0, 1.0));
        assert_eq!(s[1288], 1.0);
    }
}
