//! Text localization from contrast-enhanced gradient projection profiles.
//!
//! The gradient magnitude is contrast-stretched so weak gradients vanish,
//! histogram-equalized into an edge map, and summed along rows. Rows whose
//! sum reaches a fraction of the strongest row form horizontal bands; inside
//! each band the column sums locate the horizontal extent of the text.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geometry::{Band, Label};
use crate::imaging::{histogram_equalize, scharr_magnitude, to_gray, FloatImage, FrameImage, GrayImage};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct TextDetectorConfig {
    /// Contrast stretch factor around the 0.5 midpoint.
    pub alpha: f64,
    pub hp_threshold_fraction: f64,
    pub vp_threshold_fraction: f64,
    /// Shortest row run kept as a text band.
    pub min_band_height: u32,
    /// Column runs separated by at most this many columns are joined.
    pub max_column_gap: u32,
}

impl Default for TextDetectorConfig {
    fn default() -> Self {
        TextDetectorConfig {
            alpha: 2.0,
            hp_threshold_fraction: 0.25,
            vp_threshold_fraction: 0.25,
            min_band_height: 8,
            max_column_gap: 20,
        }
    }
}

impl TextDetectorConfig {
    pub fn validate(&self) -> Result<()> {
        let frac = |f: f64| f > 0.0 && f <= 1.0;
        if self.alpha.is_nan() || self.alpha <= 0.0 {
            return Err(Error::InvalidParameter("text.alpha must be positive"));
        }
        if !frac(self.hp_threshold_fraction) || !frac(self.vp_threshold_fraction) {
            return Err(Error::InvalidParameter("text threshold fractions must lie in (0, 1]"));
        }
        if self.min_band_height == 0 {
            return Err(Error::InvalidParameter("text.min_band_height must be positive"));
        }
        Ok(())
    }
}

/// Detected text rectangle, always labelled [`Label::Text`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TextRegion {
    pub rect: Band,
}

/// `beta = alpha (v - 0.5) + 0.5`, non-positive beta dropped, the rest
/// divided by the largest beta so the output peaks at 1.
pub fn contrast_enhance(magnitude: &FloatImage, cfg: &TextDetectorConfig) -> FloatImage {
    let beta = magnitude.map(|&v| {
        let b = cfg.alpha * (v - 0.5) + 0.5;
        if b > 0.0 {
            b
        } else {
            0.0
        }
    });
    let lambda = beta.as_slice().iter().copied().fold(0.0, f64::max);
    if lambda > 0.0 {
        beta.map(|&b| b / lambda)
    } else {
        beta
    }
}

fn row_profile(omega: &GrayImage) -> Vec<u64> {
    (0..omega.height())
        .map(|y| omega.row(y).iter().map(|&v| v as u64).sum())
        .collect()
}

/// Maximal runs of indices whose profile value reaches `fraction` of the
/// profile maximum. Runs separated by at most `max_gap` indices are joined
/// first; joined runs shorter than `min_len` are dropped. Inclusive bounds.
fn threshold_runs(profile: &[u64], fraction: f64, min_len: usize, max_gap: usize) -> Vec<(usize, usize)> {
    let max = profile.iter().copied().max().unwrap_or(0);
    if max == 0 {
        return Vec::new();
    }
    let threshold = fraction * max as f64;
    let mut runs: Vec<(usize, usize)> = Vec::new();
    let mut start = None;
    for (i, &v) in profile.iter().enumerate() {
        let on = v as f64 >= threshold;
        match (on, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                runs.push((s, i - 1));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        runs.push((s, profile.len() - 1));
    }
    let mut joined: Vec<(usize, usize)> = Vec::with_capacity(runs.len());
    for run in runs {
        match joined.last_mut() {
            Some(last) if run.0 - last.1 - 1 <= max_gap => last.1 = run.1,
            _ => joined.push(run),
        }
    }
    joined.retain(|&(a, b)| b - a + 1 >= min_len);
    joined
}

/// Row intervals `(y1, y2)` (inclusive) whose horizontal projection passes
/// the threshold, ascending.
pub fn horizontal_bands(omega: &GrayImage, cfg: &TextDetectorConfig) -> Vec<(usize, usize)> {
    threshold_runs(&row_profile(omega), cfg.hp_threshold_fraction, cfg.min_band_height as usize, 0)
}

/// Column intervals `(x1, x2)` (inclusive) inside the row band `y1..=y2`.
pub fn vertical_bands(omega: &GrayImage, band: (usize, usize), cfg: &TextDetectorConfig) -> Result<Vec<(usize, usize)>> {
    let (y1, y2) = band;
    if y1 >= y2 || y2 >= omega.height() {
        return Err(Error::InvalidInterval(y1, y2, omega.height()));
    }
    let mut profile = alloc::vec![0u64; omega.width()];
    for y in y1..=y2 {
        for (p, &v) in profile.iter_mut().zip(omega.row(y)) {
            *p += v as u64;
        }
    }
    Ok(threshold_runs(&profile, cfg.vp_threshold_fraction, 1, cfg.max_column_gap as usize))
}

/// Contrast-enhanced, equalized edge map of a frame. A frame without any
/// surviving gradient gives an all-zero map.
pub fn enhanced_edge_map(frame: &FrameImage, cfg: &TextDetectorConfig) -> Result<GrayImage> {
    let magnitude = scharr_magnitude(&to_gray(frame))?;
    let enhanced = contrast_enhance(&magnitude, cfg);
    let quantized = enhanced.map(|&v| libm::round(v * 255.0) as u8);
    if quantized.as_slice().iter().all(|&v| v == 0) {
        return Ok(quantized);
    }
    Ok(histogram_equalize(&quantized))
}

pub fn detect_text(frame: &FrameImage, cfg: &TextDetectorConfig) -> Result<Vec<TextRegion>> {
    let omega = enhanced_edge_map(frame, cfg)?;
    let mut regions = Vec::new();
    for hband in horizontal_bands(&omega, cfg) {
        for (x1, x2) in vertical_bands(&omega, hband, cfg)? {
            let rect = Band::new(x1 as u32, hband.0 as u32, (x2 - x1 + 1) as u32, (hband.1 - hband.0 + 1) as u32)
                .with_label(Label::Text);
            regions.push(TextRegion { rect });
        }
    }
    Ok(regions)
}

/// Row and column projection profiles, for debugging dumps.
pub struct Profiles {
    pub horizontal: Vec<u64>,
    /// One column profile per detected horizontal band.
    pub vertical: Vec<((usize, usize), Vec<u64>)>,
}

pub fn projection_profiles(frame: &FrameImage, cfg: &TextDetectorConfig) -> Result<Profiles> {
    let omega = enhanced_edge_map(frame, cfg)?;
    let horizontal = row_profile(&omega);
    let vertical = horizontal_bands(&omega, cfg)
        .into_iter()
        .map(|(y1, y2)| {
            let mut profile = alloc::vec![0u64; omega.width()];
            for y in y1..=y2 {
                for (p, &v) in profile.iter_mut().zip(omega.row(y)) {
                    *p += v as u64;
                }
            }
            ((y1, y2), profile)
        })
        .collect();
    Ok(Profiles { horizontal, vertical })
}
