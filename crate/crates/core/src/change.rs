//! Static/dynamic labelling of grid cells between consecutive frames.
//!
//! Broadcast graphics barely change from one frame to the next while camera
//! content does, so per-cell frame differences vote for a band's class.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geometry::{Band, Label};
use crate::imaging::{bhattacharyya_distance, histogram_of, mono32_code, to_gray, FrameImage, MONO32_LEVELS};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum ChangeMethod {
    Pixel,
    Histogram,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct ChangeConfig {
    pub method: ChangeMethod,
    /// Cell side length in pixels.
    pub cell_size: usize,
    /// Gray-level difference above which a pixel counts as changed.
    pub diff_threshold: u32,
    /// Histogram distance above which a cell counts as dynamic.
    pub dist_threshold: f64,
    /// Bins of the per-cell histogram over the 15-bit colour codes.
    pub histogram_bins: usize,
    /// Consecutive all-static frame pairs that turn a natural band synthetic.
    pub min_static_pairs: usize,
}

impl Default for ChangeConfig {
    fn default() -> Self {
        ChangeConfig {
            method: ChangeMethod::Pixel,
            cell_size: 50,
            diff_threshold: 20,
            dist_threshold: 0.3,
            histogram_bins: MONO32_LEVELS,
            min_static_pairs: 5,
        }
    }
}

impl ChangeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.cell_size == 0 {
            return Err(Error::InvalidParameter("change.cell_size must be positive"));
        }
        if !(0.0..=1.0).contains(&self.dist_threshold) {
            return Err(Error::InvalidParameter("change.dist_threshold must lie in [0, 1]"));
        }
        if self.histogram_bins == 0 || self.histogram_bins > MONO32_LEVELS {
            return Err(Error::InvalidParameter("change.histogram_bins must lie in [1, 32768]"));
        }
        if self.min_static_pairs == 0 {
            return Err(Error::InvalidParameter("change.min_static_pairs must be positive"));
        }
        Ok(())
    }
}

/// Per-cell change labels, row-major. Edge cells may be smaller.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChangeGrid {
    cell_size: usize,
    width: usize,
    height: usize,
    columns: usize,
    rows: usize,
    dynamic: Vec<bool>,
}

impl ChangeGrid {
    fn build(width: usize, height: usize, cell_size: usize, mut is_dynamic: impl FnMut(Band) -> Result<bool>) -> Result<Self> {
        let columns = width.div_ceil(cell_size);
        let rows = height.div_ceil(cell_size);
        let mut dynamic = Vec::with_capacity(columns * rows);
        for r in 0..rows {
            for c in 0..columns {
                dynamic.push(is_dynamic(cell_rect(width, height, cell_size, c, r))?);
            }
        }
        Ok(ChangeGrid {
            cell_size,
            width,
            height,
            columns,
            rows,
            dynamic,
        })
    }

    pub fn cell_size(&self) -> usize {
        self.cell_size
    }

    /// Frame width in pixels.
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn columns(&self) -> usize {
        self.columns
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn len(&self) -> usize {
        self.dynamic.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dynamic.is_empty()
    }

    pub fn is_dynamic(&self, column: usize, row: usize) -> bool {
        self.dynamic[row * self.columns + column]
    }

    pub fn dynamic_count(&self) -> usize {
        self.dynamic.iter().filter(|&&d| d).count()
    }

    pub fn cell(&self, column: usize, row: usize) -> Band {
        cell_rect(self.width, self.height, self.cell_size, column, row)
    }

    /// `(cells fully inside band, of which static)`.
    pub fn static_votes(&self, band: &Band) -> (usize, usize) {
        let mut inside = 0;
        let mut still = 0;
        for r in 0..self.rows {
            for c in 0..self.columns {
                let cell = self.cell(c, r);
                if cell.x >= band.x && cell.y >= band.y && cell.right() <= band.right() && cell.bottom() <= band.bottom() {
                    inside += 1;
                    if !self.is_dynamic(c, r) {
                        still += 1;
                    }
                }
            }
        }
        (inside, still)
    }
}

fn cell_rect(width: usize, height: usize, size: usize, column: usize, row: usize) -> Band {
    let x = column * size;
    let y = row * size;
    Band::new(x as u32, y as u32, size.min(width - x) as u32, size.min(height - y) as u32)
}

fn check_pair(curr: &FrameImage, prev: &FrameImage, cell_size: usize) -> Result<()> {
    if !curr.same_size(prev) {
        return Err(Error::FrameSizeMismatch(curr.width(), curr.height(), prev.width(), prev.height()));
    }
    if curr.is_empty() {
        return Err(Error::EmptyImage);
    }
    if cell_size == 0 {
        return Err(Error::InvalidParameter("change.cell_size must be positive"));
    }
    Ok(())
}

/// A cell is dynamic when a strict majority of its pixels changed gray level
/// by more than `diff_threshold`.
pub fn pixel_change_detect(curr: &FrameImage, prev: &FrameImage, diff_threshold: u32, cell_size: usize) -> Result<ChangeGrid> {
    check_pair(curr, prev, cell_size)?;
    let (a, b) = (to_gray(curr), to_gray(prev));
    ChangeGrid::build(curr.width(), curr.height(), cell_size, |cell| {
        let mut changed = 0u64;
        for y in cell.y as usize..cell.bottom() as usize {
            let (ra, rb) = (a.row(y), b.row(y));
            for x in cell.x as usize..cell.right() as usize {
                if ra[x].abs_diff(rb[x]) as u32 > diff_threshold {
                    changed += 1;
                }
            }
        }
        Ok(2 * changed > cell.area())
    })
}

/// A cell is dynamic when the Bhattacharyya distance between its colour-code
/// histograms in the two frames exceeds `dist_threshold`.
pub fn histogram_change_detect(
    curr: &FrameImage,
    prev: &FrameImage,
    dist_threshold: f64,
    cell_size: usize,
    bins: usize,
) -> Result<ChangeGrid> {
    check_pair(curr, prev, cell_size)?;
    let cell_hist = |img: &FrameImage, cell: &Band| {
        let pixels = (cell.y as usize..cell.bottom() as usize)
            .flat_map(move |y| img.row(y)[cell.x as usize..cell.right() as usize].iter().map(|&p| mono32_code(p)));
        histogram_of(pixels, bins)
    };
    ChangeGrid::build(curr.width(), curr.height(), cell_size, |cell| {
        let d = bhattacharyya_distance(&cell_hist(curr, &cell)?, &cell_hist(prev, &cell)?)?;
        Ok(d > dist_threshold)
    })
}

pub fn change_detect(curr: &FrameImage, prev: &FrameImage, cfg: &ChangeConfig) -> Result<ChangeGrid> {
    cfg.validate()?;
    match cfg.method {
        ChangeMethod::Pixel => pixel_change_detect(curr, prev, cfg.diff_threshold, cfg.cell_size),
        ChangeMethod::Histogram => histogram_change_detect(curr, prev, cfg.dist_threshold, cfg.cell_size, cfg.histogram_bins),
    }
}

/// Relabels natural bands synthetic when, over at least `min_pairs`
/// consecutive grids, every cell lying fully inside the band stayed static.
/// Bands containing no whole cell never change. Returns the relabelled
/// indices.
pub fn apply_static_override(bands: &mut [Band], grids: &[ChangeGrid], min_pairs: usize) -> Vec<usize> {
    let mut changed = Vec::new();
    for (i, band) in bands.iter_mut().enumerate() {
        if band.label != Label::Natural {
            continue;
        }
        let mut run = 0;
        let mut longest = 0;
        for grid in grids {
            let (inside, still) = grid.static_votes(band);
            if inside > 0 && inside == still {
                run += 1;
                longest = longest.max(run);
            } else {
                run = 0;
            }
        }
        if longest >= min_pairs.max(1) {
            band.label = Label::Synthetic;
            changed.push(i);
        }
    }
    changed
}
